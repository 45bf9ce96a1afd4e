"""Co-authorship networks and author betweenness from OAI-PMH metadata."""

__version__ = "0.1.0"
