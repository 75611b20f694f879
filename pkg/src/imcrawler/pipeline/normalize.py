"""Turn raw capture rows into typed profile and post records.

The raw CSV is a flat stream of (capture_kind, profile_url, seed_index,
field, value, captured_at) rows. Rows belonging to one capture share the
same (kind, url, seed, captured_at) key; grouping is by key, so the stream
does not have to be contiguous.

Section values arrive as newline-joined text tokens exactly as the page
showed them: attribute sections alternate label and value tokens, list
sections carry one token per item, emotion blocks alternate kind and count.
Every token is cleaned (residual markup stripped, entities decoded,
whitespace collapsed) before interpretation, so a value captured as
``<span>Delhi</span>`` still normalizes to ``Delhi``.

Values that fail to parse are kept on the record as None and flagged in
``problems`` (UNPARSEABLE, or MISSING for fields the page should have had);
structurally broken rows are skipped and reported. Every input row is
accounted for: rows_total == rows_consumed + rows_skipped.
"""

from __future__ import annotations

import csv
import html
import logging
import re
from dataclasses import dataclass, field
from datetime import date as _date
from datetime import time as _time
from decimal import Decimal, InvalidOperation, ROUND_HALF_UP

from ..errors import MalformedRawRow, MissingFile
from ..extract import NOT_DISCLOSED, NOT_PRESENT, POST_FIELDS, RAW_COLUMNS, SECTION_NAMES
from ..urls import normalize_profile_url, profile_id_from_url
from .records import PostRecord, ProfileRecord

log = logging.getLogger(__name__)

_TAG_RE = re.compile(r"<[^>]*>")
_COUNT_RE = re.compile(r"^(\d+(?:\.\d+)?)([KM]?)$", re.IGNORECASE)
_COUNT_SCALE = {"": 1, "K": 1_000, "M": 1_000_000}

_BASIC_LABELS = ("gender", "birthday", "email", "phone")
_PLACE_LABELS = ("hometown", "current_city")

UNPARSEABLE = "UNPARSEABLE"
MISSING = "MISSING"


def clean_text(value: str) -> str:
    """Strip markup, decode entities and collapse whitespace."""
    text = _TAG_RE.sub("", value)
    text = html.unescape(text)
    return " ".join(text.split())


def parse_count(text: str) -> int:
    """Parse a possibly K/M-abbreviated count ("1.2K" -> 1200).

    Raises ValueError for anything that is not a count.
    """
    match = _COUNT_RE.match(text.strip())
    if not match:
        raise ValueError(f"not a count: {text!r}")
    try:
        number = Decimal(match.group(1))
    except InvalidOperation as exc:  # pragma: no cover - regex precludes this
        raise ValueError(f"not a count: {text!r}") from exc
    scaled = number * _COUNT_SCALE[match.group(2).upper()]
    return int(scaled.to_integral_value(rounding=ROUND_HALF_UP))


@dataclass
class NormalizeResult:
    profiles: list[ProfileRecord] = field(default_factory=list)
    posts: list[PostRecord] = field(default_factory=list)
    rows_total: int = 0
    rows_consumed: int = 0
    rows_skipped: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def conserved(self) -> bool:
        return self.rows_total == self.rows_consumed + self.rows_skipped


def normalize_raw(raw_path: str) -> NormalizeResult:
    """Read a raw capture CSV and build normalized records.

    Records come out in order of each capture's first appearance in the
    file, so a fixed input always yields the same output.
    """
    result = NormalizeResult()
    profile_groups: dict[tuple, dict[str, str]] = {}
    post_groups: dict[tuple, dict[int, dict[str, str]]] = {}

    for line_no, row in _raw_rows(raw_path):
        result.rows_total += 1
        kind = row["capture_kind"]
        key = (row["profile_url"], row["seed_index"], row["captured_at"])
        if kind == "profile":
            if row["field"] not in SECTION_NAMES:
                _skip(result, line_no, f"unknown section {row['field']!r}")
                continue
            profile_groups.setdefault(key, {})[row["field"]] = row["value"]
        elif kind == "post":
            idx_text, sep, name = row["field"].partition(":")
            if not sep or name not in POST_FIELDS:
                _skip(result, line_no, f"bad post field key {row['field']!r}")
                continue
            try:
                idx = int(idx_text)
            except ValueError:
                _skip(result, line_no, f"bad post index in {row['field']!r}")
                continue
            post_groups.setdefault(key, {}).setdefault(idx, {})[name] = row["value"]
        else:
            _skip(result, line_no, f"unknown capture kind {kind!r}")
            continue
        result.rows_consumed += 1

    for (url, seed, stamp), sections in profile_groups.items():
        result.profiles.append(_build_profile(url, seed, stamp, sections))
    for (url, seed, stamp), by_index in post_groups.items():
        for idx in sorted(by_index):
            result.posts.append(_build_post(url, seed, stamp, idx, by_index[idx]))
    return result


def _raw_rows(raw_path: str):
    try:
        fh = open(raw_path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(raw_path) from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(RAW_COLUMNS):
            raise MalformedRawRow(raw_path, 1, "unexpected header")
        for line_no, cells in enumerate(reader, start=2):
            if len(cells) != len(RAW_COLUMNS):
                raise MalformedRawRow(raw_path, line_no,
                                      f"expected {len(RAW_COLUMNS)} cells, got {len(cells)}")
            yield line_no, dict(zip(RAW_COLUMNS, cells))


def _skip(result: NormalizeResult, line_no: int, reason: str) -> None:
    result.rows_skipped += 1
    result.skipped.append((line_no, reason))
    log.warning("raw row %d skipped: %s", line_no, reason)


def _tokens(value: str) -> list[str]:
    return [tok for tok in (clean_text(t) for t in value.split("\n")) if tok]


def _build_profile(url: str, seed: str, stamp: str,
                   sections: dict[str, str]) -> ProfileRecord:
    canonical = normalize_profile_url(url)
    record = ProfileRecord(
        profile_id=profile_id_from_url(canonical),
        profile_url=canonical,
        seed_index=_seed_int(seed),
        captured_at=stamp,
    )
    problems = record.problems

    value = sections.get("basic_information", NOT_DISCLOSED)
    if value != NOT_DISCLOSED:
        scalars, _, ok = _parse_labelled(_tokens(value), _BASIC_LABELS)
        for name, text in scalars.items():
            setattr(record, name, text)
        if not ok:
            problems["basic_information"] = UNPARSEABLE

    value = sections.get("places_lived", NOT_DISCLOSED)
    if value != NOT_DISCLOSED:
        scalars, _, ok = _parse_labelled(_tokens(value), _PLACE_LABELS)
        for name, text in scalars.items():
            setattr(record, name, text)
        if not ok:
            problems["places_lived"] = UNPARSEABLE

    value = sections.get("family_and_relationship", NOT_DISCLOSED)
    if value != NOT_DISCLOSED:
        scalars, lists, ok = _parse_labelled(
            _tokens(value), ("relationship_status",), ("family_members",))
        if "relationship_status" in scalars:
            record.relationship_status = scalars["relationship_status"]
        record.family_members = lists.get("family_members", [])
        if not ok:
            problems["family_and_relationship"] = UNPARSEABLE

    value = sections.get("pages_liked", NOT_DISCLOSED)
    if value != NOT_DISCLOSED:
        record.pages_liked = _tokens(value)
    value = sections.get("groups_joined", NOT_DISCLOSED)
    if value != NOT_DISCLOSED:
        record.groups_joined = _tokens(value)

    value = sections.get("friend_count", NOT_DISCLOSED)
    if value == NOT_DISCLOSED:
        problems["friend_count"] = MISSING
    else:
        try:
            record.friend_count = parse_count(clean_text(value))
        except ValueError:
            problems["friend_count"] = UNPARSEABLE
    return record


def _parse_labelled(tokens: list[str], labels: tuple[str, ...],
                    list_labels: tuple[str, ...] = ()) -> tuple[dict, dict, bool]:
    """Walk a label/value token stream.

    Scalar labels consume the next token; list labels consume tokens until
    the next label. Returns (scalars, lists, stream_well_formed).
    """
    scalars: dict[str, str] = {}
    lists: dict[str, list[str]] = {}
    i, ok = 0, True
    while i < len(tokens):
        tok = tokens[i]
        if tok in list_labels:
            i += 1
            items = []
            while i < len(tokens) and tokens[i] not in labels and tokens[i] not in list_labels:
                items.append(tokens[i])
                i += 1
            lists[tok] = items
        elif tok in labels:
            if i + 1 < len(tokens):
                scalars[tok] = tokens[i + 1]
                i += 2
            else:
                ok = False
                break
        else:
            ok = False
            break
    return scalars, lists, ok


def _build_post(url: str, seed: str, stamp: str, idx: int,
                fields: dict[str, str]) -> PostRecord:
    canonical = normalize_profile_url(url)
    record = PostRecord(
        profile_id=profile_id_from_url(canonical),
        profile_url=canonical,
        post_index=idx,
        seed_index=_seed_int(seed),
        captured_at=stamp,
    )
    problems = record.problems

    record.post_type = _text_field(fields, "post_type", problems)
    record.title = _text_field(fields, "title", problems)
    record.content = _text_field(fields, "content", problems)

    text = _text_field(fields, "date", problems)
    if text is not None:
        try:
            _date.fromisoformat(text)
            record.date = text
        except ValueError:
            problems["date"] = UNPARSEABLE
    text = _text_field(fields, "time", problems)
    if text is not None:
        try:
            _time.fromisoformat(text)
            record.time = text
        except ValueError:
            problems["time"] = UNPARSEABLE

    record.comment_count = _count_field(fields, "comments", problems)
    record.share_count = _count_field(fields, "shares", problems)
    record.reaction_total = _count_field(fields, "reactions", problems)

    views = fields.get("views", NOT_PRESENT)
    if views == NOT_PRESENT:
        # normal for anything that is not a video
        if record.post_type == "video":
            problems["views"] = MISSING
    else:
        try:
            record.view_count = parse_count(clean_text(views))
        except ValueError:
            problems["views"] = UNPARSEABLE

    emotions = fields.get("emotions", NOT_PRESENT)
    if emotions == NOT_PRESENT:
        problems["emotions"] = MISSING
    else:
        record.emotion_counts, ok = _parse_emotions(_tokens(emotions))
        if not ok:
            problems["emotions"] = UNPARSEABLE

    tags = fields.get("tags", NOT_PRESENT)
    if tags != NOT_PRESENT:
        record.tags = _tokens(tags)
    return record


def _text_field(fields: dict[str, str], name: str,
                problems: dict[str, str]) -> str | None:
    value = fields.get(name, NOT_PRESENT)
    if value == NOT_PRESENT:
        problems[name] = MISSING
        return None
    return clean_text(value)


def _count_field(fields: dict[str, str], name: str,
                 problems: dict[str, str]) -> int | None:
    value = fields.get(name, NOT_PRESENT)
    if value == NOT_PRESENT:
        problems[name] = MISSING
        return None
    try:
        return parse_count(clean_text(value))
    except ValueError:
        problems[name] = UNPARSEABLE
        return None


def _parse_emotions(tokens: list[str]) -> tuple[dict[str, int], bool]:
    counts: dict[str, int] = {}
    ok = len(tokens) % 2 == 0
    for i in range(0, len(tokens) - 1, 2):
        try:
            counts[tokens[i]] = parse_count(tokens[i + 1])
        except ValueError:
            ok = False
    return counts, ok


def _seed_int(seed: str) -> int:
    try:
        return int(seed)
    except ValueError:
        return -1
