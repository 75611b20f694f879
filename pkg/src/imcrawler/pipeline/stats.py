"""Population filters and behavior summaries over a record store."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import BadValue, EmptyPopulation
from .records import PROFILE_SCALAR_FIELDS, PostRecord, ProfileRecord
from .store import RecordStore


def filter_by_city(store: RecordStore, city: str) -> list[ProfileRecord]:
    """Profiles whose disclosed current city matches, sorted by id.

    Matching ignores case and surrounding whitespace. A profile that did
    not disclose its city never matches, whatever the query.
    """
    wanted = city.strip().lower()
    if not wanted:
        raise BadValue("city", city, "blank")
    return [
        prof for prof in store.sorted_profiles()
        if prof.current_city is not None
        and prof.current_city.strip().lower() == wanted
    ]


@dataclass
class BehaviorSummary:
    population: int
    # per attribute: how many profiles disclosed it, and that count / population
    disclosure: dict[str, dict] = field(default_factory=dict)
    post_count: int = 0
    post_types: dict[str, int] = field(default_factory=dict)
    emotion_totals: dict[str, int] = field(default_factory=dict)
    reaction_total: int = 0
    tag_counts: dict[str, int] = field(default_factory=dict)
    posts_per_profile: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "disclosure": {k: dict(v) for k, v in sorted(self.disclosure.items())},
            "post_count": self.post_count,
            "post_types": dict(sorted(self.post_types.items())),
            "emotion_totals": dict(sorted(self.emotion_totals.items())),
            "reaction_total": self.reaction_total,
            "tag_counts": dict(sorted(self.tag_counts.items())),
            "posts_per_profile": dict(self.posts_per_profile),
        }


def behavior_summary(store: RecordStore) -> BehaviorSummary:
    """Disclosure rates and posting behavior for everything in the store."""
    profiles = store.sorted_profiles()
    if not profiles:
        raise EmptyPopulation()
    posts = store.sorted_posts()

    summary = BehaviorSummary(population=len(profiles))
    for name in PROFILE_SCALAR_FIELDS:
        disclosed = sum(1 for p in profiles if getattr(p, name) is not None)
        summary.disclosure[name] = {
            "disclosed": disclosed,
            "rate": disclosed / len(profiles),
        }

    per_profile: dict[str, int] = {}
    for post in posts:
        _tally(summary, post)
        per_profile[post.profile_id] = per_profile.get(post.profile_id, 0) + 1
    summary.post_count = len(posts)
    counts = [per_profile.get(p.profile_id, 0) for p in profiles]
    summary.posts_per_profile = {
        "min": float(min(counts)),
        "mean": sum(counts) / len(counts),
        "max": float(max(counts)),
    }
    return summary


def _tally(summary: BehaviorSummary, post: PostRecord) -> None:
    kind = post.post_type or "unknown"
    summary.post_types[kind] = summary.post_types.get(kind, 0) + 1
    for emotion, count in post.emotion_counts.items():
        summary.emotion_totals[emotion] = summary.emotion_totals.get(emotion, 0) + count
    if post.reaction_total is not None:
        summary.reaction_total += post.reaction_total
    for tag in post.tags:
        summary.tag_counts[tag] = summary.tag_counts.get(tag, 0) + 1
