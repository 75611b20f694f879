"""Error types shared across the crawler.

Every error carries a machine-readable ``category`` so the CLI can print a
stable ``ERROR <CATEGORY>: <message>`` line and map it to an exit code.
"""

from __future__ import annotations


class CrawlerError(Exception):
    """Base class for all errors raised by this package."""

    category = "INTERNAL"


# --- configuration and input files ---------------------------------------

class ConfigError(CrawlerError):
    category = "CONFIG"


class MissingFile(ConfigError):
    def __init__(self, path: str) -> None:
        super().__init__(f"file not found: {path}")
        self.path = path


class MalformedLine(ConfigError):
    def __init__(self, path: str, line_no: int, reason: str) -> None:
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no


class DuplicateSeed(ConfigError):
    def __init__(self, profile_id: str, line_no: int) -> None:
        super().__init__(f"duplicate seed profile {profile_id!r} at line {line_no}")
        self.profile_id = profile_id
        self.line_no = line_no


class UnknownKey(ConfigError):
    def __init__(self, key: str, line_no: int) -> None:
        super().__init__(f"unknown config key {key!r} at line {line_no}")
        self.key = key
        self.line_no = line_no


class MissingKey(ConfigError):
    def __init__(self, key: str) -> None:
        super().__init__(f"required config key {key!r} is missing")
        self.key = key


class BadValue(ConfigError):
    def __init__(self, key: str, value: str, reason: str = "") -> None:
        msg = f"bad value for {key!r}: {value!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)
        self.key = key
        self.value = value


class InconsistentPair(ConfigError):
    def __init__(self, msg: str) -> None:
        super().__init__(msg)


class BadUrl(ConfigError):
    def __init__(self, path: str, line_no: int, url: str) -> None:
        super().__init__(f"{path}:{line_no}: not a profile URL: {url!r}")
        self.path = path
        self.line_no = line_no
        self.url = url


class ConfigInvalid(ConfigError):
    def __init__(self, msg: str) -> None:
        super().__init__(msg)


# --- fixture --------------------------------------------------------------

class FixtureError(CrawlerError):
    category = "FIXTURE"


class BadParameter(FixtureError):
    def __init__(self, msg: str) -> None:
        super().__init__(msg)


class UnknownProfile(FixtureError):
    def __init__(self, profile_id: str) -> None:
        super().__init__(f"no such profile: {profile_id!r}")
        self.profile_id = profile_id


class BindFailure(FixtureError):
    def __init__(self, address: str, reason: str) -> None:
        super().__init__(f"cannot bind {address}: {reason}")
        self.address = address


# --- extraction -----------------------------------------------------------

class ExtractError(CrawlerError):
    category = "EXTRACT"


class RuleSyntaxError(ExtractError):
    def __init__(self, path: str, line_no: int, reason: str) -> None:
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no


class MultiplicityViolation(ExtractError):
    def __init__(self, rule_name: str, count: int) -> None:
        super().__init__(
            f"rule {rule_name!r} expects at most one match, got {count}"
        )
        self.rule_name = rule_name
        self.count = count


# --- network / crawling ---------------------------------------------------

class NetworkError(CrawlerError):
    category = "NETWORK"


class FetchError(NetworkError):
    def __init__(self, url: str, reason: str, status: int | None = None) -> None:
        super().__init__(f"fetch failed for {url}: {reason}")
        self.url = url
        self.status = status
        self.reason = reason


class AuthExpired(NetworkError):
    def __init__(self, url: str, pages_fetched: int = 0) -> None:
        super().__init__(
            f"session rejected at {url} after {pages_fetched} page(s)"
        )
        self.url = url
        self.pages_fetched = pages_fetched


class BadCredentials(NetworkError):
    def __init__(self, login_name: str) -> None:
        super().__init__(f"login rejected for {login_name!r}")
        self.login_name = login_name


class EndpointUnreachable(NetworkError):
    def __init__(self, endpoint: str, reason: str) -> None:
        super().__init__(f"endpoint {endpoint} unreachable: {reason}")
        self.endpoint = endpoint


class AllSeedsFailedLogin(NetworkError):
    def __init__(self, count: int) -> None:
        super().__init__(f"all {count} seed logins failed")
        self.count = count


# --- coordination ----------------------------------------------------------

class AgentFailure(CrawlerError):
    category = "AGENT"

    def __init__(self, agent_id: int, reason: str) -> None:
        super().__init__(f"agent {agent_id} failed: {reason}")
        self.agent_id = agent_id
        self.reason = reason


# --- pipeline / store -------------------------------------------------------

class PipelineError(CrawlerError):
    category = "PIPELINE"


class MalformedRawRow(PipelineError):
    def __init__(self, path: str, line_no: int, reason: str) -> None:
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
        self.reason = reason


class StoreError(CrawlerError):
    category = "STORE"


class WriteFailure(StoreError):
    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"cannot write {path}: {reason}")
        self.path = path


class StoreFailure(StoreError):
    def __init__(self, msg: str) -> None:
        super().__init__(msg)


class EmptyPopulation(PipelineError):
    def __init__(self) -> None:
        super().__init__("population is empty; no rates can be computed")
