"""Rule-driven extraction of profile and post attributes.

Captures are intentionally raw: whatever text the rules pull out of the
page, before any cleaning or parsing. Turning those strings into typed
records is the pipeline's job. Absent profile sections are recorded as
NOT_DISCLOSED; post fields whose element is not on the page (a text
post's view counter, an empty tag list) are recorded as NOT_PRESENT.
"""

from __future__ import annotations

import csv
import math
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from urllib.parse import urljoin

from .dom import DomNode, DomTree, parse_dom
from .errors import AuthExpired
from .rules import RuleSet, apply_rule, default_rules, select_nodes
from .session import Session

NOT_DISCLOSED = "NOT_DISCLOSED"
NOT_PRESENT = "NOT_PRESENT"

SECTION_NAMES = (
    "basic_information",
    "places_lived",
    "family_and_relationship",
    "friend_count",
    "pages_liked",
    "groups_joined",
)

POST_FIELDS = (
    "post_type", "title", "content", "date", "time", "comments",
    "emotions", "shares", "views", "reactions", "tags",
)


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class RawProfileCapture:
    profile_url: str
    sections: dict[str, str]  # section name -> raw string or NOT_DISCLOSED
    captured_at: str
    seed_index: int


@dataclass
class RawPostCapture:
    profile_url: str
    post_index: int  # 1 is the newest post on the profile
    fields: dict[str, str]  # POST_FIELDS -> raw string or NOT_PRESENT
    captured_at: str
    seed_index: int


# --- pure DOM-level extraction (no HTTP) -------------------------------------

def profile_capture_from_dom(tree: DomTree, profile_url: str, *,
                             rules: RuleSet, seed_index: int = 0,
                             captured_at: str | None = None) -> RawProfileCapture:
    """Capture every known About section from a parsed page."""
    sections: dict[str, str] = {}
    for name in SECTION_NAMES:
        captures = apply_rule(tree, rules[f"section.{name}"])
        value = captures[0] if captures else ""
        sections[name] = value if value else NOT_DISCLOSED
    return RawProfileCapture(
        profile_url=profile_url,
        sections=sections,
        captured_at=captured_at or utc_now_iso(),
        seed_index=seed_index,
    )


def _capture_post_fields(article: DomNode, rules: RuleSet) -> dict[str, str]:
    fields: dict[str, str] = {}
    for name in POST_FIELDS:
        captures = apply_rule(article, rules[f"post.{name}"])
        value = captures[0] if captures else ""
        fields[name] = value if value else NOT_PRESENT
    return fields


def posts_from_timeline_dom(tree: DomTree, rules: RuleSet) -> list[dict[str, str]]:
    """Field captures for each post on one timeline page, in page order."""
    return [
        _capture_post_fields(article, rules)
        for article in select_nodes(tree, rules["post.item"])
    ]


def _next_page_url(tree: DomTree, page_url: str, rules: RuleSet) -> str | None:
    captures = apply_rule(tree, rules["page.next"])
    if not captures:
        return None
    return urljoin(page_url, captures[0])


# --- session-driven extraction ------------------------------------------------

def extract_friend_links(session: Session, profile_url: str,
                         rules: RuleSet | None = None) -> list[str]:
    """Walk every friend-list page of a profile and collect profile URLs.

    Pagination runs to exhaustion. Links are absolutized against the page
    URL and deduplicated on first occurrence. If the session dies mid-walk
    the AuthExpired carries how many pages were already fetched.
    """
    rules = rules or default_rules()
    links: list[str] = []
    seen: set[str] = set()
    url: str | None = f"{profile_url.rstrip('/')}/friends"
    pages_fetched = 0
    while url:
        try:
            page = session.fetch(url)
        except AuthExpired:
            raise AuthExpired(url, pages_fetched) from None
        pages_fetched += 1
        tree = parse_dom(page)
        for href in apply_rule(tree, rules["friend.link"]):
            absolute = urljoin(url, href)
            if absolute not in seen:
                seen.add(absolute)
                links.append(absolute)
        url = _next_page_url(tree, url, rules)
    return links


def extract_personal_attributes(session: Session, profile_url: str, *,
                                rules: RuleSet | None = None,
                                seed_index: int = 0) -> RawProfileCapture:
    """Fetch the About page and capture all attribute sections."""
    rules = rules or default_rules()
    page = session.fetch(f"{profile_url.rstrip('/')}/about")
    return profile_capture_from_dom(
        parse_dom(page), profile_url, rules=rules, seed_index=seed_index,
    )


def extract_post_attributes(session: Session, profile_url: str,
                            total_post: int, *,
                            rules: RuleSet | None = None,
                            seed_index: int = 0) -> list[RawPostCapture]:
    """Capture the newest min(total_post, available) posts of a profile.

    Fetches timeline pages lazily: exactly
    max(1, ceil(min(total_post, posts_on_profile) / page_size)) pages,
    never a page past the point where total_post is satisfied.
    """
    rules = rules or default_rules()
    captured_at = utc_now_iso()
    captures: list[RawPostCapture] = []
    url: str | None = f"{profile_url.rstrip('/')}/timeline"
    while url and len(captures) < total_post:
        page = session.fetch(url)
        tree = parse_dom(page)
        for fields in posts_from_timeline_dom(tree, rules):
            if len(captures) >= total_post:
                break
            captures.append(RawPostCapture(
                profile_url=profile_url,
                post_index=len(captures) + 1,
                fields=fields,
                captured_at=captured_at,
                seed_index=seed_index,
            ))
        if len(captures) >= total_post:
            break
        url = _next_page_url(tree, url, rules)
    return captures


def expected_page_fetches(total_post: int, posts_on_profile: int,
                          page_size: int) -> int:
    """Oracle-facing helper: pages a lazy walk needs for the newest posts."""
    wanted = min(total_post, posts_on_profile)
    return max(1, math.ceil(wanted / page_size))


# --- raw capture CSV ------------------------------------------------------------

RAW_COLUMNS = ("capture_kind", "profile_url", "seed_index", "field", "value",
               "captured_at")


class RawSink:
    """Append-only raw capture CSV, safe for concurrent session threads.

    One capture becomes one row per field; rows of a single capture are
    written under the lock, so captures never interleave.
    """

    def __init__(self, path: str) -> None:
        self.path = path
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        self._lock = threading.Lock()
        needs_header = not os.path.exists(path) or os.path.getsize(path) == 0
        self._fh = open(path, "a", encoding="utf-8", newline="")
        self._writer = csv.writer(self._fh)
        if needs_header:
            self._writer.writerow(RAW_COLUMNS)
            self._fh.flush()

    def write_profile(self, cap: RawProfileCapture) -> None:
        rows = [
            ("profile", cap.profile_url, cap.seed_index, name,
             cap.sections[name], cap.captured_at)
            for name in SECTION_NAMES
        ]
        self._write_rows(rows)

    def write_posts(self, caps: list[RawPostCapture]) -> None:
        rows = []
        for cap in caps:
            for name in POST_FIELDS:
                rows.append((
                    "post", cap.profile_url, cap.seed_index,
                    f"{cap.post_index}:{name}", cap.fields[name],
                    cap.captured_at,
                ))
        self._write_rows(rows)

    def _write_rows(self, rows) -> None:
        with self._lock:
            self._writer.writerows(rows)
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            self._fh.close()

    def __enter__(self) -> "RawSink":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
