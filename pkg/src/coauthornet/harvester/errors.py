"""Exceptions raised while talking to OAI-PMH repositories."""


class HarvestError(Exception):
    """Base class for harvesting failures."""


class ConfigError(HarvestError, ValueError):
    """A repository configuration violates its invariants."""


class NetworkError(HarvestError):
    """Transport-level failure (connection refused, timeout, ...)."""


class ProtocolError(HarvestError):
    """The response is not a usable OAI-PMH document."""


class UnsupportedVersion(ProtocolError):
    def __init__(self, version):
        super().__init__(f"unsupported OAI-PMH protocol version {version!r}")
        self.version = version


class RetriesExhausted(HarvestError):
    def __init__(self, url, attempts, last_error):
        super().__init__(f"giving up on {url} after {attempts} attempts: {last_error}")
        self.url = url
        self.attempts = attempts
        self.last_error = last_error


class OaiError(ProtocolError):
    """The repository answered with an OAI-PMH ``<error>`` element."""

    def __init__(self, code, message=""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message


class NoRecordsMatch(OaiError):
    pass


class BadResumptionToken(OaiError):
    pass


def oai_error(code, message=""):
    cls = {"noRecordsMatch": NoRecordsMatch, "badResumptionToken": BadResumptionToken}.get(code, OaiError)
    return cls(code, message)
