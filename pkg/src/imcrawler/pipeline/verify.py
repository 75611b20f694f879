"""Per-profile verification of normalized captures.

Each profile capture is scored against a fixed set of named checks; a
capture failing any check is junk and belongs on the re-extraction list.
Posts are matched to the profile capture they came from (same profile and
seed), so duplicate captures of one profile by different seeds are judged
independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..config_io import write_links_file
from .normalize import MISSING, UNPARSEABLE
from .records import PostRecord, ProfileRecord

_SECTION_KEYS = (
    "basic_information",
    "places_lived",
    "family_and_relationship",
    "pages_liked",
    "groups_joined",
)

CHECK_NAMES = (
    "profile_id_present",
    "friend_count_parseable",
    "sections_parsed",
    "posts_within_limit",
    "no_unparseable",
    "reaction_consistency",
)


@dataclass(frozen=True)
class VerificationPolicy:
    # cap on posts per profile; None leaves posts_within_limit vacuous
    total_post: int | None = None


@dataclass
class VerificationReport:
    profile_id: str
    profile_url: str
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "ok" if all(self.checks.values()) else "junk"

    def failed(self) -> list[str]:
        return [name for name, passed in self.checks.items() if not passed]

    def to_dict(self) -> dict:
        return {
            "profile_id": self.profile_id,
            "profile_url": self.profile_url,
            "checks": dict(self.checks),
            "verdict": self.verdict,
        }


def verify_records(profiles: list[ProfileRecord], posts: list[PostRecord],
                   policy: VerificationPolicy = VerificationPolicy()) -> list[VerificationReport]:
    """One report per profile capture, in input order."""
    by_owner: dict[tuple[str, int], list[PostRecord]] = {}
    for post in posts:
        by_owner.setdefault((post.profile_id, post.seed_index), []).append(post)

    reports = []
    for prof in profiles:
        own_posts = by_owner.get((prof.profile_id, prof.seed_index), [])
        checks = {
            "profile_id_present": bool(prof.profile_id),
            "friend_count_parseable": prof.friend_count is not None,
            "sections_parsed": not any(k in prof.problems for k in _SECTION_KEYS),
            "posts_within_limit": (policy.total_post is None
                                   or len(own_posts) <= policy.total_post),
            "no_unparseable": _no_flags(prof, own_posts),
            "reaction_consistency": all(_reactions_consistent(p) for p in own_posts),
        }
        reports.append(VerificationReport(prof.profile_id, prof.profile_url, checks))
    return reports


def _no_flags(prof: ProfileRecord, posts: list[PostRecord]) -> bool:
    flagged = set(prof.problems.values())
    for post in posts:
        flagged.update(post.problems.values())
    return UNPARSEABLE not in flagged and MISSING not in flagged


def _reactions_consistent(post: PostRecord) -> bool:
    if post.reaction_total is None or not post.emotion_counts:
        return False
    return post.reaction_total == sum(post.emotion_counts.values())


def emit_reextract_list(reports: list[VerificationReport], out_path: str) -> list[str]:
    """Write the profile URLs of junk captures, one per line.

    The file is a plain link list, directly usable as a crawl input. URLs
    are deduplicated, keeping first-occurrence order. Returns the URLs
    written (possibly none; the file is still created so downstream steps
    can rely on it existing).
    """
    urls: list[str] = []
    seen = set()
    for report in reports:
        if report.verdict == "junk" and report.profile_url not in seen:
            seen.add(report.profile_url)
            urls.append(report.profile_url)
    write_links_file(urls, out_path, append=False)
    return urls
