"""Deduplicating record store with a canonical on-disk form.

Inserts are first-write-wins: a record whose key is already present is
dropped as a duplicate, and if its content (provenance aside) differs from
what the store holds, the conflict is counted and logged. The same page
captured by several sessions therefore lands exactly once.

The file format is a version line followed by one JSON object per record,
profiles sorted by id and posts by (id, index), serialized with sorted keys
and fixed separators. Saving the same contents always produces the same
bytes, so save -> load -> save round-trips byte-identically.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import threading
from dataclasses import asdict, dataclass

from ..errors import StoreFailure, WriteFailure
from .records import (
    POST_COLUMNS,
    PROFILE_COLUMNS,
    PostRecord,
    ProfileRecord,
    content_dict,
)

log = logging.getLogger(__name__)

STORE_HEADER = "#imcrawler-store v1"


@dataclass
class StoreStats:
    inserted: int = 0
    duplicates: int = 0
    conflicts: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class RecordStore:
    def __init__(self) -> None:
        self.profiles: dict[str, ProfileRecord] = {}
        self.posts: dict[tuple[str, int], PostRecord] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.profiles) + len(self.posts)

    def dedup_insert(self, record: ProfileRecord | PostRecord) -> str:
        """Insert unless the key exists.

        Returns "inserted", "duplicate" (same content already held) or
        "conflict" (key held with different content; first capture wins).
        """
        table = self.profiles if isinstance(record, ProfileRecord) else self.posts
        with self._lock:
            held = table.get(record.key)
            if held is None:
                table[record.key] = record
                return "inserted"
        if content_dict(held) != content_dict(record):
            log.warning("conflicting duplicate for %s kept first capture", record.key)
            return "conflict"
        return "duplicate"

    def add_all(self, profiles: list[ProfileRecord],
                posts: list[PostRecord]) -> StoreStats:
        stats = StoreStats()
        for record in [*profiles, *posts]:
            outcome = self.dedup_insert(record)
            if outcome == "inserted":
                stats.inserted += 1
            else:
                stats.duplicates += 1
                if outcome == "conflict":
                    stats.conflicts += 1
        return stats

    def sorted_profiles(self) -> list[ProfileRecord]:
        return [self.profiles[k] for k in sorted(self.profiles)]

    def sorted_posts(self) -> list[PostRecord]:
        return [self.posts[k] for k in sorted(self.posts)]

    def save(self, path: str) -> None:
        lines = [STORE_HEADER]
        for prof in self.sorted_profiles():
            lines.append(_record_line("profile", prof))
        for post in self.sorted_posts():
            lines.append(_record_line("post", post))
        blob = "\n".join(lines) + "\n"
        parent = os.path.dirname(os.path.abspath(path))
        try:
            os.makedirs(parent, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(blob)
        except OSError as exc:
            raise WriteFailure(path, str(exc)) from exc

    @classmethod
    def load(cls, path: str) -> "RecordStore":
        store = cls()
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise StoreFailure(f"cannot open store {path}: {exc}") from exc
        with fh:
            header = fh.readline().rstrip("\n")
            if header != STORE_HEADER:
                raise StoreFailure(f"{path}: not a record store (header {header!r})")
            for line_no, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                store.dedup_insert(_parse_record_line(path, line_no, line))
        return store

    def export_csv(self, out_dir: str) -> tuple[str, str]:
        """Write profiles.csv and posts.csv; returns their paths."""
        os.makedirs(out_dir, exist_ok=True)
        profiles_path = os.path.join(out_dir, "profiles.csv")
        posts_path = os.path.join(out_dir, "posts.csv")
        try:
            with open(profiles_path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(PROFILE_COLUMNS)
                writer.writerows(p.to_row() for p in self.sorted_profiles())
            with open(posts_path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(POST_COLUMNS)
                writer.writerows(p.to_row() for p in self.sorted_posts())
        except OSError as exc:
            raise WriteFailure(out_dir, str(exc)) from exc
        return profiles_path, posts_path


def _record_line(kind: str, record: ProfileRecord | PostRecord) -> str:
    blob = {"kind": kind, **asdict(record)}
    return json.dumps(blob, sort_keys=True, separators=(",", ":"))


def _parse_record_line(path: str, line_no: int, line: str) -> ProfileRecord | PostRecord:
    try:
        blob = json.loads(line)
        kind = blob.pop("kind")
        if kind == "profile":
            return ProfileRecord(**blob)
        if kind == "post":
            return PostRecord(**blob)
        raise ValueError(f"unknown record kind {kind!r}")
    except (ValueError, KeyError, TypeError) as exc:
        raise StoreFailure(f"{path}:{line_no}: bad record line: {exc}") from exc
