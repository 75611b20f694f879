"""Profile URL normalization shared by the crawler and the pipeline."""

from __future__ import annotations

from urllib.parse import urlparse, urlunparse


def normalize_profile_url(url: str) -> str:
    """Canonical form used as the dedup/visited key.

    Lowercases scheme and host, drops query/fragment, strips a trailing
    slash. The path itself is preserved (profile ids are case-sensitive).
    """
    parts = urlparse(url.strip())
    path = parts.path.rstrip("/")
    return urlunparse((parts.scheme.lower(), parts.netloc.lower(), path, "", "", ""))


def profile_id_from_url(url: str) -> str:
    """The profile id a URL points at: the segment after ``profile``,
    or the last path segment when no ``profile`` segment exists."""
    segments = [s for s in urlparse(url).path.split("/") if s]
    if "profile" in segments:
        i = segments.index("profile")
        if i + 1 < len(segments):
            return segments[i + 1]
    return segments[-1] if segments else ""


def profile_url(endpoint: str, profile_id: str) -> str:
    return f"{endpoint.rstrip('/')}/profile/{profile_id}"
