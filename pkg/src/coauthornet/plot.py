"""PNG network plots of co-author graphs.

Nodes are placed with a seeded Fruchterman-Reingold layout and drawn as
circles whose radius grows with normalized betweenness; the top-ranked
authors get text labels.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Dict, Optional, Tuple

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .centrality import BetweennessResult, CentralityRanking, ranking_key
from .index import CoauthorGraph

MIN_RADIUS = 3.0
MAX_RADIUS = 24.0
MARGIN = 32.0
MAX_PLOT_NODES = 500

BACKGROUND = (255, 255, 255)
EDGE_RGB = (70, 70, 70)
NODE_RGB = (31, 119, 180)
LABEL_RGB = (20, 20, 20)
FONT_SIZE = 13


class EmptyGraph(ValueError):
    pass


@dataclass(frozen=True)
class LayoutConfig:
    width: int = 1200
    height: int = 1200
    iterations: int = 300
    seed: int = 42
    label_top_k: int = 10

    def __post_init__(self):
        if self.width < 64 or self.height < 64:
            raise ValueError("width and height must be at least 64 pixels")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.label_top_k < 0:
            raise ValueError("label_top_k must be non-negative")


@dataclass(frozen=True)
class NodeLayout:
    positions: Dict[str, Tuple[float, float]]
    radii: Dict[str, float]


def node_radius(normalized: float) -> float:
    radius = MIN_RADIUS + (MAX_RADIUS - MIN_RADIUS) * normalized
    return min(MAX_RADIUS, max(MIN_RADIUS, radius))


def fruchterman_reingold(
    n: int,
    edges: np.ndarray,
    width: float,
    height: float,
    iterations: int,
    seed: int,
    margin: float = MARGIN,
) -> np.ndarray:
    """Positions (n x 2) of a force-directed layout on a ``width x height`` canvas.

    ``edges`` is an (m x 2) integer array of node indices.
    """
    lo = np.array([margin, margin])
    hi = np.array([width - margin, height - margin])
    if n == 1:
        return np.array([[width / 2.0, height / 2.0]])

    rng = np.random.default_rng(seed)
    pos = rng.uniform(lo, hi, size=(n, 2))
    k = np.sqrt(width * height / n)
    t0 = min(width, height) / 10.0
    src, dst = (edges[:, 0], edges[:, 1]) if len(edges) else (np.empty(0, int), np.empty(0, int))

    for step in range(iterations):
        dx = pos[:, 0, None] - pos[None, :, 0]
        dy = pos[:, 1, None] - pos[None, :, 1]
        dist2 = dx * dx + dy * dy
        np.fill_diagonal(dist2, np.inf)
        # repulsion k^2/d along the unit vector delta/d
        force = k * k / np.maximum(dist2, 1e-4)
        disp = np.stack([(dx * force).sum(axis=1), (dy * force).sum(axis=1)], axis=1)

        if len(src):
            d = pos[src] - pos[dst]
            length = np.maximum(np.linalg.norm(d, axis=1), 1e-2)
            # attraction d^2/k along the unit vector d/|d|
            pull = d * (length / k)[:, None]
            np.add.at(disp, src, -pull)
            np.add.at(disp, dst, pull)

        temperature = t0 * (1.0 - step / iterations)
        norm = np.maximum(np.linalg.norm(disp, axis=1), 1e-9)
        pos = pos + disp / norm[:, None] * np.minimum(norm, temperature)[:, None]
        pos = np.clip(pos, lo, hi)
    return pos


def layout(graph: CoauthorGraph, scores: BetweennessResult, cfg: Optional[LayoutConfig] = None) -> NodeLayout:
    cfg = cfg or LayoutConfig()
    nodes = graph.nodes
    if not nodes:
        raise EmptyGraph("nothing to lay out")
    index = {name: i for i, name in enumerate(nodes)}
    edges = np.array([(index[a], index[b]) for a, b, _ in graph.edges()], dtype=np.int64).reshape(-1, 2)
    pos = fruchterman_reingold(len(nodes), edges, cfg.width, cfg.height, cfg.iterations, cfg.seed)
    return NodeLayout(
        positions={name: (float(pos[i, 0]), float(pos[i, 1])) for i, name in enumerate(nodes)},
        radii={name: node_radius(scores.normalized.get(name, 0.0)) for name in nodes},
    )


@lru_cache(maxsize=4)
def _font(size: int = FONT_SIZE) -> ImageFont.FreeTypeFont:
    data = resources.files("coauthornet").joinpath("fonts/DejaVuSans.ttf").read_bytes()
    return ImageFont.truetype(io.BytesIO(data), size)


def edge_alpha(weight: int) -> int:
    return min(230, 60 + 40 * (weight - 1))


def render_png(
    graph: CoauthorGraph,
    node_layout: NodeLayout,
    ranking: Optional[CentralityRanking],
    cfg: Optional[LayoutConfig] = None,
) -> bytes:
    """Draw edges, nodes and top-k labels; returns RGBA PNG bytes."""
    cfg = cfg or LayoutConfig()
    image = Image.new("RGB", (cfg.width, cfg.height), BACKGROUND)
    draw = ImageDraw.Draw(image, "RGBA")
    pos = node_layout.positions

    for a, b, w in graph.edges():
        draw.line([pos[a], pos[b]], fill=EDGE_RGB + (edge_alpha(w),), width=1)

    # smaller circles last so hubs never hide their neighbours
    for name in sorted(graph.nodes, key=lambda n: (-node_layout.radii[n], n)):
        x, y = pos[name]
        r = node_layout.radii[name]
        draw.ellipse([x - r, y - r, x + r, y + r], fill=NODE_RGB + (255,))

    if ranking is not None and cfg.label_top_k:
        font = _font()
        for entry in ranking.entries[: cfg.label_top_k]:
            if entry.author not in pos:
                continue
            x, y = pos[entry.author]
            r = node_layout.radii[entry.author]
            draw.text((x + r + 3, y), entry.display, fill=LABEL_RGB + (255,), font=font, anchor="lm")

    buf = io.BytesIO()
    image.convert("RGBA").save(buf, format="PNG", compress_level=6)
    return buf.getvalue()


def truncate_for_plot(graph: CoauthorGraph, scores: BetweennessResult, max_nodes: int = MAX_PLOT_NODES):
    """Keep the ``max_nodes`` most central nodes and their induced edges.

    Returns ``(graph, truncated)``.
    """
    if len(graph) <= max_nodes:
        return graph, False
    keep = sorted(graph.nodes, key=lambda a: ranking_key(a, scores.scores.get(a, 0.0)))[:max_nodes]
    return graph.induced(keep), True
