"""Normalized record types and their CSV row layout.

A ProfileRecord carries the personal attributes of one profile capture, a
PostRecord one timeline post. Capture provenance (seed_index, captured_at)
rides along but is not part of a record's content identity; see
``content_dict``.

Cell conventions in CSV form:

* scalar personal attributes the owner withheld are written as
  ``NOT_DISCLOSED``; a view count on a post that has none (any non-video
  post) is written as ``NOT_PRESENT``
* list cells join their items with ``;`` (items are free of semicolons)
* ``emotion_counts`` joins ``kind=count`` pairs with ``;``, kinds sorted
* ``problems`` joins ``field=FLAG`` pairs with ``;``, fields sorted
"""

from __future__ import annotations

import csv
import os
from dataclasses import asdict, dataclass, field

from ..errors import MalformedRawRow, MissingFile
from ..extract import NOT_DISCLOSED, NOT_PRESENT

# personal attributes a profile owner can withhold
PROFILE_SCALAR_FIELDS = (
    "gender",
    "birthday",
    "email",
    "phone",
    "relationship_status",
    "hometown",
    "current_city",
)
PROFILE_LIST_FIELDS = ("family_members", "pages_liked", "groups_joined")

PROFILE_COLUMNS = (
    "profile_id",
    "profile_url",
    "friend_count",
    *PROFILE_SCALAR_FIELDS,
    *PROFILE_LIST_FIELDS,
    "seed_index",
    "captured_at",
    "problems",
)

POST_COLUMNS = (
    "profile_id",
    "profile_url",
    "post_index",
    "post_type",
    "title",
    "content",
    "date",
    "time",
    "comment_count",
    "emotion_counts",
    "share_count",
    "view_count",
    "reaction_total",
    "tags",
    "seed_index",
    "captured_at",
    "problems",
)


@dataclass
class ProfileRecord:
    profile_id: str
    profile_url: str
    friend_count: int | None = None
    gender: str | None = None
    birthday: str | None = None
    email: str | None = None
    phone: str | None = None
    relationship_status: str | None = None
    hometown: str | None = None
    current_city: str | None = None
    family_members: list[str] = field(default_factory=list)
    pages_liked: list[str] = field(default_factory=list)
    groups_joined: list[str] = field(default_factory=list)
    seed_index: int = 0
    captured_at: str = ""
    problems: dict[str, str] = field(default_factory=dict)

    @property
    def key(self) -> str:
        return self.profile_id

    def to_row(self) -> list[str]:
        cells = [self.profile_id, self.profile_url, _int_cell(self.friend_count)]
        for name in PROFILE_SCALAR_FIELDS:
            value = getattr(self, name)
            cells.append(NOT_DISCLOSED if value is None else value)
        for name in PROFILE_LIST_FIELDS:
            cells.append(";".join(getattr(self, name)))
        cells += [str(self.seed_index), self.captured_at, _problems_cell(self.problems)]
        return cells

    @classmethod
    def from_row(cls, row: list[str]) -> "ProfileRecord":
        got = dict(zip(PROFILE_COLUMNS, row, strict=True))
        kwargs: dict = {
            "profile_id": got["profile_id"],
            "profile_url": got["profile_url"],
            "friend_count": _parse_int_cell(got["friend_count"]),
            "seed_index": int(got["seed_index"]),
            "captured_at": got["captured_at"],
            "problems": _parse_problems_cell(got["problems"]),
        }
        for name in PROFILE_SCALAR_FIELDS:
            cell = got[name]
            kwargs[name] = None if cell == NOT_DISCLOSED else cell
        for name in PROFILE_LIST_FIELDS:
            kwargs[name] = _parse_list_cell(got[name])
        return cls(**kwargs)


@dataclass
class PostRecord:
    profile_id: str
    profile_url: str
    post_index: int
    post_type: str | None = None
    title: str | None = None
    content: str | None = None
    date: str | None = None
    time: str | None = None
    comment_count: int | None = None
    emotion_counts: dict[str, int] = field(default_factory=dict)
    share_count: int | None = None
    view_count: int | None = None
    reaction_total: int | None = None
    tags: list[str] = field(default_factory=list)
    seed_index: int = 0
    captured_at: str = ""
    problems: dict[str, str] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, int]:
        return (self.profile_id, self.post_index)

    def to_row(self) -> list[str]:
        return [
            self.profile_id,
            self.profile_url,
            str(self.post_index),
            self.post_type or "",
            self.title if self.title is not None else "",
            self.content if self.content is not None else "",
            self.date or "",
            self.time or "",
            _int_cell(self.comment_count),
            ";".join(f"{k}={v}" for k, v in sorted(self.emotion_counts.items())),
            _int_cell(self.share_count),
            NOT_PRESENT if self.view_count is None else str(self.view_count),
            _int_cell(self.reaction_total),
            ";".join(self.tags),
            str(self.seed_index),
            self.captured_at,
            _problems_cell(self.problems),
        ]

    @classmethod
    def from_row(cls, row: list[str]) -> "PostRecord":
        got = dict(zip(POST_COLUMNS, row, strict=True))
        emotions = {}
        for pair in _parse_list_cell(got["emotion_counts"]):
            kind, _, count = pair.partition("=")
            emotions[kind] = int(count)
        return cls(
            profile_id=got["profile_id"],
            profile_url=got["profile_url"],
            post_index=int(got["post_index"]),
            post_type=got["post_type"] or None,
            title=got["title"] or None,
            content=got["content"] or None,
            date=got["date"] or None,
            time=got["time"] or None,
            comment_count=_parse_int_cell(got["comment_count"]),
            emotion_counts=emotions,
            share_count=_parse_int_cell(got["share_count"]),
            view_count=(None if got["view_count"] == NOT_PRESENT
                        else _parse_int_cell(got["view_count"])),
            reaction_total=_parse_int_cell(got["reaction_total"]),
            tags=_parse_list_cell(got["tags"]),
            seed_index=int(got["seed_index"]),
            captured_at=got["captured_at"],
            problems=_parse_problems_cell(got["problems"]),
        )


def content_dict(record: ProfileRecord | PostRecord) -> dict:
    """Record content with capture provenance stripped.

    Two captures of the same page made by different sessions agree on this
    view even though seed_index and captured_at differ.
    """
    blob = asdict(record)
    blob.pop("seed_index")
    blob.pop("captured_at")
    return blob


def write_profiles_csv(path: str, profiles: list[ProfileRecord]) -> None:
    _write_csv(path, PROFILE_COLUMNS, (p.to_row() for p in profiles))


def write_posts_csv(path: str, posts: list[PostRecord]) -> None:
    _write_csv(path, POST_COLUMNS, (p.to_row() for p in posts))


def read_profiles_csv(path: str) -> list[ProfileRecord]:
    return [ProfileRecord.from_row(r) for r in _read_csv(path, PROFILE_COLUMNS)]


def read_posts_csv(path: str) -> list[PostRecord]:
    return [PostRecord.from_row(r) for r in _read_csv(path, POST_COLUMNS)]


def _write_csv(path: str, columns: tuple[str, ...], rows) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _read_csv(path: str, columns: tuple[str, ...]) -> list[list[str]]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(path) from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(columns):
            raise MalformedRawRow(path, 1, "unexpected header")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(columns):
                raise MalformedRawRow(path, line_no,
                                      f"expected {len(columns)} cells, got {len(row)}")
            rows.append(row)
    return rows


def _int_cell(value: int | None) -> str:
    return "" if value is None else str(value)


def _parse_int_cell(cell: str) -> int | None:
    return None if cell == "" else int(cell)


def _parse_list_cell(cell: str) -> list[str]:
    return cell.split(";") if cell else []


def _problems_cell(problems: dict[str, str]) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(problems.items()))


def _parse_problems_cell(cell: str) -> dict[str, str]:
    out = {}
    for pair in _parse_list_cell(cell):
        name, _, flag = pair.partition("=")
        out[name] = flag
    return out
