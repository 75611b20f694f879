"""Input parsing: seed CSV files, key=value crawl configs, link lists.

All three formats allow full-line ``#`` comments and blank lines and are
read as UTF-8. Relative paths inside a config file are resolved against
the directory containing that config file.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from urllib.parse import urlparse

from .errors import (
    BadUrl,
    BadValue,
    DuplicateSeed,
    InconsistentPair,
    MalformedLine,
    MissingFile,
    MissingKey,
    UnknownKey,
)

LinkList = list[str]

DEFAULT_MIN_DELAY_MS = 200
DEFAULT_MAX_DELAY_MS = 800


@dataclass(frozen=True)
class SeedProfile:
    """One login-capable account used to anchor a crawl."""

    profile_id: str
    login_name: str
    secret: str
    friend_links_path: str | None = None


@dataclass
class CrawlConfig:
    """Resolved crawl parameters.

    ``seed_profile_index`` is 1-based into the seed file; when set the run
    re-extracts the URLs in ``reextract_links_path`` instead of harvesting
    friend links from each seed.
    """

    friend_links_path: str
    output_path: str
    total_post: int
    reextract_links_path: str | None = None
    seed_profile_index: int | None = None
    depth: int = 1
    agents: int = 1
    sessions_per_agent: int = 1
    min_delay_ms: int = DEFAULT_MIN_DELAY_MS
    max_delay_ms: int = DEFAULT_MAX_DELAY_MS

    def is_reextraction(self) -> bool:
        return self.seed_profile_index is not None

    def to_dict(self) -> dict:
        return {
            "friendLinks": self.friend_links_path,
            "outputFile": self.output_path,
            "totalPost": self.total_post,
            "reextractLinksFile": self.reextract_links_path,
            "seedProfile": self.seed_profile_index,
            "depth": self.depth,
            "agents": self.agents,
            "sessionsPerAgent": self.sessions_per_agent,
            "minDelayMs": self.min_delay_ms,
            "maxDelayMs": self.max_delay_ms,
        }

    @classmethod
    def from_dict(cls, blob: dict) -> "CrawlConfig":
        return cls(
            friend_links_path=blob["friendLinks"],
            output_path=blob["outputFile"],
            total_post=blob["totalPost"],
            reextract_links_path=blob.get("reextractLinksFile"),
            seed_profile_index=blob.get("seedProfile"),
            depth=blob.get("depth", 1),
            agents=blob.get("agents", 1),
            sessions_per_agent=blob.get("sessionsPerAgent", 1),
            min_delay_ms=blob.get("minDelayMs", DEFAULT_MIN_DELAY_MS),
            max_delay_ms=blob.get("maxDelayMs", DEFAULT_MAX_DELAY_MS),
        )


def _content_lines(path: str) -> list[tuple[int, str]]:
    if not os.path.isfile(path):
        raise MissingFile(path)
    out = []
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            out.append((no, line))
    return out


# --- seed files -------------------------------------------------------------

def parse_seed_file(path: str) -> list[SeedProfile]:
    """Read a seed CSV: ``profile_id,login,secret[,friend_links_path]``."""
    seeds: list[SeedProfile] = []
    seen: set[str] = set()
    for no, line in _content_lines(path):
        row = next(csv.reader(io.StringIO(line)))
        fields = [c.strip() for c in row]
        if len(fields) not in (3, 4) or any(not c for c in fields[:3]):
            raise MalformedLine(path, no, f"expected profile_id,login,secret got {line!r}")
        pid = fields[0]
        if pid in seen:
            raise DuplicateSeed(pid, no)
        seen.add(pid)
        extra = fields[3] if len(fields) == 4 else None
        if extra is not None:
            extra = _resolve(extra, os.path.dirname(os.path.abspath(path)))
        seeds.append(SeedProfile(pid, fields[1], fields[2], extra))
    return seeds


# --- crawl configs ----------------------------------------------------------

# canonical key -> (attribute, kind); aliases normalized before lookup
_KEYS = {
    "friendLinks": ("friend_links_path", "path"),
    "outputFile": ("output_path", "path"),
    "totalPost": ("total_post", "int"),
    "reextractLinksFile": ("reextract_links_path", "path"),
    "seedProfile": ("seed_profile_index", "int"),
    "depth": ("depth", "int"),
    "agents": ("agents", "int"),
    "sessionsPerAgent": ("sessions_per_agent", "int"),
    "minDelayMs": ("min_delay_ms", "int"),
    "maxDelayMs": ("max_delay_ms", "int"),
}
_ALIASES = {"friendLinksFile": "friendLinks"}
_REQUIRED = ("friendLinks", "outputFile", "totalPost")

# lower bound per integer key; None means any int
_INT_MIN = {
    "totalPost": 1,
    "seedProfile": 1,
    "depth": 1,
    "agents": 1,
    "sessionsPerAgent": 1,
    "minDelayMs": 0,
    "maxDelayMs": 0,
}


def _resolve(path_value: str, base_dir: str) -> str:
    if os.path.isabs(path_value):
        return os.path.normpath(path_value)
    return os.path.normpath(os.path.join(base_dir, path_value))


def parse_config(path: str) -> CrawlConfig:
    """Parse a ``key = value`` crawl config file into a CrawlConfig."""
    base_dir = os.path.dirname(os.path.abspath(path))
    values: dict[str, object] = {}
    for no, line in _content_lines(path):
        if "=" not in line:
            raise MalformedLine(path, no, f"expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        key = _ALIASES.get(key, key)
        if key not in _KEYS:
            raise UnknownKey(key, no)
        if key in values:
            raise MalformedLine(path, no, f"duplicate key {key!r}")
        if not value:
            raise BadValue(key, value, "empty value")
        attr, kind = _KEYS[key]
        if kind == "int":
            try:
                parsed: object = int(value)
            except ValueError:
                raise BadValue(key, value, "not an integer") from None
            low = _INT_MIN[key]
            if low is not None and parsed < low:  # type: ignore[operator]
                raise BadValue(key, value, f"must be >= {low}")
        else:
            parsed = _resolve(value, base_dir)
        values[key] = parsed

    for key in _REQUIRED:
        if key not in values:
            raise MissingKey(key)

    kwargs = {_KEYS[k][0]: v for k, v in values.items()}
    cfg = CrawlConfig(**kwargs)  # type: ignore[arg-type]

    if cfg.seed_profile_index is not None and cfg.reextract_links_path is None:
        raise InconsistentPair(
            "seedProfile is set but reextractLinksFile is not; a re-extraction "
            "run needs the list of URLs to re-visit"
        )
    if cfg.max_delay_ms < cfg.min_delay_ms:
        raise BadValue("maxDelayMs", str(cfg.max_delay_ms), "smaller than minDelayMs")
    return cfg


def dump_config(cfg: CrawlConfig) -> str:
    """Render a CrawlConfig as a fully-explicit config file body.

    Re-parsing the dump (from any directory, since paths are absolute by
    then) reproduces the config exactly.
    """
    lines = []
    for key, value in cfg.to_dict().items():
        if value is None:
            continue
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


# --- link lists ---------------------------------------------------------------

def _is_profile_url(url: str) -> bool:
    parts = urlparse(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        return False
    segments = [s for s in parts.path.split("/") if s]
    return bool(segments)


def read_links_file(path: str) -> LinkList:
    """Read one profile URL per line, deduplicated on first occurrence."""
    links: LinkList = []
    seen: set[str] = set()
    for no, line in _content_lines(path):
        if not _is_profile_url(line):
            raise BadUrl(path, no, line)
        if line not in seen:
            seen.add(line)
            links.append(line)
    return links


def write_links_file(links: LinkList, path: str, append: bool = False) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    mode = "a" if append else "w"
    # one write call per batch so concurrent appenders cannot interleave lines
    blob = "".join(url + "\n" for url in links)
    with open(path, mode, encoding="utf-8") as fh:
        fh.write(blob)
