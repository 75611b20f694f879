"""Deterministic synthetic social network.

``generate_network(n, mean_degree, ..., rng_seed)`` is byte-reproducible:
the same arguments always produce the same serialized network, on any
platform and in any process. Per-profile randomness is seeded through
sha256, never through ``hash()``, which is process-randomized for strings.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import random
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

from ..errors import BadParameter, UnknownProfile

EMOTION_KINDS = ("like", "love", "haha", "wow", "sad", "angry")
POST_TYPES = ("text", "photo", "video", "link")
METRO_CITIES = ("Bangalore", "Delhi", "Mumbai", "Pune")
OTHER_CITIES = (
    "Ahmedabad", "Chennai", "Hyderabad", "Jaipur",
    "Kochi", "Kolkata", "Lucknow", "Nagpur",
)
ALL_CITIES = METRO_CITIES + OTHER_CITIES

# profile fields whose public visibility is governed by the disclosure mask
MASKABLE_FIELDS = (
    "gender", "birthday", "email", "phone",
    "relationship_status", "hometown", "current_city",
)

DEFAULT_CITY_WEIGHTS = {
    "Bangalore": 0.08,
    "Delhi": 0.08,
    "Mumbai": 0.07,
    "Pune": 0.05,
    "other": 0.72,
}

GENDERS = ("male", "female", "unspecified")
RELATIONSHIP_STATUSES = (
    "single", "married", "engaged", "in_a_relationship", "complicated",
)
PAGE_NAMES = (
    "Tech News Daily", "Cricket Fans United", "Street Food Lovers",
    "Daily Fitness Tips", "Bollywood Buzz", "Startup Stories",
    "Monsoon Photography", "Classic Rock India", "Home Cooking Club",
    "Weekend Trekkers",
)
GROUP_NAMES = (
    "College Alumni Network", "Apartment Residents Forum",
    "Book Exchange Circle", "Local Football League",
    "Gardening Enthusiasts", "Quiz Night Crew",
    "Carpool Connect", "Amateur Astronomers",
)
TITLE_WORDS = (
    "sunset", "monsoon", "chai", "cricket", "weekend", "office", "beach",
    "traffic", "festival", "garden", "trek", "recipe", "concert", "metro",
)
CONTENT_WORDS = TITLE_WORDS + (
    "amazing", "crowded", "quiet", "rainy", "golden", "first", "long",
    "evening", "morning", "with", "friends", "family", "today", "finally",
    "again", "at", "the", "near", "after", "before",
)


def expected_secret(profile_id: str) -> str:
    """Login secret the fixture server accepts for a profile."""
    return f"pw-{profile_id}"


def _child_rng(rng_seed: int, label: str) -> random.Random:
    digest = hashlib.sha256(f"{rng_seed}:{label}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _id_key(profile_id: str) -> int:
    return int(profile_id[1:])


@dataclass
class FixturePost:
    post_index: int  # 1 is the newest post
    post_type: str
    title: str
    content: str
    date: str  # ISO yyyy-mm-dd
    time: str  # HH:MM
    comment_count: int
    emotion_counts: dict[str, int]
    share_count: int
    view_count: int | None  # present exactly when post_type == "video"
    reaction_total: int
    tags: list[str]

    def to_dict(self) -> dict:
        return {
            "post_index": self.post_index,
            "post_type": self.post_type,
            "title": self.title,
            "content": self.content,
            "date": self.date,
            "time": self.time,
            "comment_count": self.comment_count,
            "emotion_counts": dict(self.emotion_counts),
            "share_count": self.share_count,
            "view_count": self.view_count,
            "reaction_total": self.reaction_total,
            "tags": list(self.tags),
        }


@dataclass
class FixtureProfile:
    profile_id: str
    gender: str
    birthday: str
    email: str
    phone: str
    relationship_status: str
    hometown: str
    current_city: str
    family_members: list[str]
    pages_liked: list[str]
    groups_joined: list[str]
    posts: list[FixturePost]
    disclosure_mask: dict[str, bool]

    def discloses(self, fld: str) -> bool:
        return self.disclosure_mask.get(fld, True)

    def to_dict(self) -> dict:
        return {
            "profile_id": self.profile_id,
            "gender": self.gender,
            "birthday": self.birthday,
            "email": self.email,
            "phone": self.phone,
            "relationship_status": self.relationship_status,
            "hometown": self.hometown,
            "current_city": self.current_city,
            "family_members": list(self.family_members),
            "pages_liked": list(self.pages_liked),
            "groups_joined": list(self.groups_joined),
            "posts": [p.to_dict() for p in self.posts],
            "disclosure_mask": dict(self.disclosure_mask),
        }


@dataclass
class FixtureNetwork:
    rng_seed: int
    mean_degree: float
    profiles: dict[str, FixtureProfile]
    adjacency: dict[str, list[str]] = field(repr=False)

    def all_ids(self) -> list[str]:
        return list(self.profiles)

    def profile(self, profile_id: str) -> FixtureProfile:
        try:
            return self.profiles[profile_id]
        except KeyError:
            raise UnknownProfile(profile_id) from None

    def friends(self, profile_id: str) -> list[str]:
        if profile_id not in self.profiles:
            raise UnknownProfile(profile_id)
        return self.adjacency[profile_id]

    def add_edge(self, a: str, b: str) -> None:
        """Insert an undirected edge, keeping neighbor lists sorted."""
        if a == b:
            raise BadParameter("self-loops are not allowed")
        for x in (a, b):
            if x not in self.profiles:
                raise UnknownProfile(x)
        for x, y in ((a, b), (b, a)):
            if y not in self.adjacency[x]:
                self.adjacency[x].append(y)
                self.adjacency[x].sort(key=_id_key)

    def edge_count(self) -> int:
        return sum(len(v) for v in self.adjacency.values()) // 2

    def realized_mean_degree(self) -> float:
        return 2.0 * self.edge_count() / max(1, len(self.profiles))

    # -- serialization: canonical JSON, byte-stable across runs/platforms --

    def to_bytes(self) -> bytes:
        edges = []
        for a, neighbors in self.adjacency.items():
            for b in neighbors:
                if _id_key(a) < _id_key(b):
                    edges.append([a, b])
        edges.sort(key=lambda e: (_id_key(e[0]), _id_key(e[1])))
        doc = {
            "format": "imcrawler-fixture-v1",
            "rng_seed": self.rng_seed,
            "mean_degree": self.mean_degree,
            "profiles": [self.profiles[pid].to_dict() for pid in self.profiles],
            "edges": edges,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=True).encode("utf-8")

    @classmethod
    def from_bytes(cls, data: bytes) -> "FixtureNetwork":
        doc = json.loads(data.decode("utf-8"))
        if doc.get("format") != "imcrawler-fixture-v1":
            raise BadParameter("not a fixture network file")
        profiles: dict[str, FixtureProfile] = {}
        for pd in doc["profiles"]:
            posts = [FixturePost(**p) for p in pd.pop("posts")]
            profiles[pd["profile_id"]] = FixtureProfile(posts=posts, **pd)
        # re-key profiles in id order so iteration order is canonical
        ordered = {pid: profiles[pid] for pid in sorted(profiles, key=_id_key)}
        adjacency: dict[str, list[str]] = {pid: [] for pid in ordered}
        for a, b in doc["edges"]:
            adjacency[a].append(b)
            adjacency[b].append(a)
        for neighbors in adjacency.values():
            neighbors.sort(key=_id_key)
        return cls(doc["rng_seed"], doc["mean_degree"], ordered, adjacency)

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path: str) -> "FixtureNetwork":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _sample_edges(n: int, p: float, rng: random.Random) -> list[tuple[int, int]]:
    """G(n, p) edge sampling with geometric skips, O(edges) expected."""
    edges: list[tuple[int, int]] = []
    if p <= 0.0 or n < 2:
        return edges
    if p >= 1.0:
        return [(v, w) for v in range(1, n) for w in range(v)]
    log_q = math.log(1.0 - p)
    v, w = 1, -1
    while v < n:
        r = rng.random()
        w = w + 1 + int(math.log(1.0 - r) / log_q)
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            edges.append((v, w))
    return edges


def _format_minutes(total_minutes: int) -> tuple[str, str]:
    stamp = datetime(2024, 6, 1) - timedelta(minutes=total_minutes)
    return stamp.date().isoformat(), stamp.strftime("%H:%M")


def make_posts(profile_id: str, count: int, rng_seed: int,
               tag_candidates: list[str]) -> list[FixturePost]:
    """Deterministic posts for one profile, newest first."""
    r = _child_rng(rng_seed, f"posts:{profile_id}")
    posts: list[FixturePost] = []
    offset = r.randrange(0, 60 * 24)
    for i in range(1, count + 1):
        post_type = r.choices(POST_TYPES, weights=(45, 25, 15, 15))[0]
        title = " ".join(r.choice(TITLE_WORDS) for _ in range(r.randint(2, 4))).capitalize()
        content = " ".join(r.choice(CONTENT_WORDS) for _ in range(r.randint(5, 12))).capitalize() + "."
        emotions = {
            "like": r.randrange(0, 120),
            "love": r.randrange(0, 40),
            "haha": r.randrange(0, 30),
            "wow": r.randrange(0, 20),
            "sad": r.randrange(0, 10),
            "angry": r.randrange(0, 10),
        }
        # a slice of share/view counts lands on multiples of 100 so the
        # abbreviated-count rendering path ("1.2K") is exercised
        if r.random() < 0.15:
            shares = r.randrange(10, 50) * 100
        else:
            shares = r.randrange(0, 900)
        views = None
        if post_type == "video":
            views = r.randrange(10, 999) * 100 if r.random() < 0.5 else r.randrange(100, 99999)
        n_tags = r.choices((0, 1, 2), weights=(70, 20, 10))[0]
        tags = sorted(r.sample(tag_candidates, min(n_tags, len(tag_candidates))), key=_id_key)
        day, clock = _format_minutes(offset)
        offset += r.randrange(30, 60 * 48)  # strictly older as the index grows
        posts.append(FixturePost(
            post_index=i,
            post_type=post_type,
            title=title,
            content=content,
            date=day,
            time=clock,
            comment_count=r.randrange(0, 80),
            emotion_counts=emotions,
            share_count=shares,
            view_count=views,
            reaction_total=sum(emotions.values()),
            tags=tags,
        ))
    return posts


def generate_network(
    n: int,
    mean_degree: float,
    *,
    city_weights: dict[str, float] | None = None,
    disclosure_rate: float = 0.7,
    posts_per_profile_range: tuple[int, int] = (0, 8),
    rng_seed: int = 0,
) -> FixtureNetwork:
    """Build a symmetric friendship network with per-profile attributes.

    Edges follow an Erdos-Renyi draw with edge probability
    mean_degree/(n-1); for n >= 200 the realized mean degree lands within
    15% of the target. Every profile gets a value for each maskable field;
    the disclosure mask (Bernoulli per field at ``disclosure_rate``)
    decides what the rendered pages show.
    """
    if n < 1:
        raise BadParameter(f"n must be >= 1, got {n}")
    if mean_degree < 0 or (n > 1 and mean_degree > n - 1):
        raise BadParameter(f"mean_degree must be in [0, n-1], got {mean_degree}")
    if not 0.0 <= disclosure_rate <= 1.0:
        raise BadParameter(f"disclosure_rate must be in [0, 1], got {disclosure_rate}")
    lo, hi = posts_per_profile_range
    if lo < 0 or hi < lo:
        raise BadParameter(f"bad posts_per_profile_range {posts_per_profile_range!r}")
    weights = dict(city_weights) if city_weights is not None else dict(DEFAULT_CITY_WEIGHTS)
    allowed_buckets = set(METRO_CITIES) | {"other"}
    if not weights or any(k not in allowed_buckets for k in weights):
        raise BadParameter(f"city_weights keys must be from {sorted(allowed_buckets)}")
    if any(w < 0 for w in weights.values()) or sum(weights.values()) <= 0:
        raise BadParameter("city_weights must be non-negative and sum to > 0")

    ids = [f"u{i}" for i in range(1, n + 1)]
    p = mean_degree / (n - 1) if n > 1 else 0.0
    edge_rng = _child_rng(rng_seed, "edges")
    adjacency: dict[str, list[str]] = {pid: [] for pid in ids}
    for v, w in _sample_edges(n, p, edge_rng):
        adjacency[ids[v]].append(ids[w])
        adjacency[ids[w]].append(ids[v])
    for neighbors in adjacency.values():
        neighbors.sort(key=_id_key)

    buckets = sorted(weights)
    bucket_weights = [weights[b] for b in buckets]
    epoch = date(1960, 1, 1)
    day_span = (date(2005, 12, 31) - epoch).days

    profiles: dict[str, FixtureProfile] = {}
    for pid in ids:
        r = _child_rng(rng_seed, f"attrs:{pid}")
        bucket = r.choices(buckets, weights=bucket_weights)[0]
        current_city = r.choice(OTHER_CITIES) if bucket == "other" else bucket
        others = ids  # family can point anywhere, including non-friends
        n_family = r.randint(0, 3)
        family = sorted(
            (x for x in r.sample(others, min(n_family + 1, len(others))) if x != pid),
            key=_id_key,
        )[:n_family]
        profiles[pid] = FixtureProfile(
            profile_id=pid,
            gender=r.choices(GENDERS, weights=(46, 46, 8))[0],
            birthday=(epoch + timedelta(days=r.randrange(day_span))).isoformat(),
            email=f"{pid}@mail.example",
            phone=f"+91-9{r.randrange(10**8, 10**9)}",
            relationship_status=r.choice(RELATIONSHIP_STATUSES),
            hometown=r.choice(ALL_CITIES),
            current_city=current_city,
            family_members=family,
            pages_liked=sorted(r.sample(PAGE_NAMES, r.randint(0, 5))),
            groups_joined=sorted(r.sample(GROUP_NAMES, r.randint(0, 4))),
            posts=make_posts(pid, r.randint(lo, hi), rng_seed, adjacency[pid]),
            disclosure_mask={f: r.random() < disclosure_rate for f in MASKABLE_FIELDS},
        )
    return FixtureNetwork(rng_seed, mean_degree, profiles, adjacency)


def choose_fault_profiles(network: FixtureNetwork, fraction: float,
                          rng_seed: int) -> set[str]:
    """Deterministic sample of profiles whose About pages should truncate."""
    if not 0.0 <= fraction <= 1.0:
        raise BadParameter(f"fraction must be in [0, 1], got {fraction}")
    ids = network.all_ids()
    count = round(len(ids) * fraction)
    return set(_child_rng(rng_seed, "faults").sample(ids, count))


# --- ground truth -------------------------------------------------------------

def _join(values: list[str]) -> str:
    return ";".join(values)


def ground_truth(network: FixtureNetwork) -> dict[str, list[dict]]:
    """Three flat tables (profiles, posts, adjacency) for oracle use."""
    profiles_table = []
    posts_table = []
    adjacency_table = []
    for pid, prof in network.profiles.items():
        disclosed = [f for f in MASKABLE_FIELDS if prof.discloses(f)]
        profiles_table.append({
            "profile_id": pid,
            "gender": prof.gender,
            "birthday": prof.birthday,
            "email": prof.email,
            "phone": prof.phone,
            "relationship_status": prof.relationship_status,
            "hometown": prof.hometown,
            "current_city": prof.current_city,
            "family_members": _join(prof.family_members),
            "pages_liked": _join(prof.pages_liked),
            "groups_joined": _join(prof.groups_joined),
            "friend_count": len(network.adjacency[pid]),
            "post_count": len(prof.posts),
            "disclosed_fields": _join(disclosed),
        })
        for post in prof.posts:
            posts_table.append({
                "profile_id": pid,
                "post_index": post.post_index,
                "post_type": post.post_type,
                "title": post.title,
                "content": post.content,
                "date": post.date,
                "time": post.time,
                "comment_count": post.comment_count,
                "emotion_counts": _join(f"{k}={post.emotion_counts[k]}" for k in EMOTION_KINDS),
                "share_count": post.share_count,
                "view_count": "" if post.view_count is None else post.view_count,
                "reaction_total": post.reaction_total,
                "tags": _join(post.tags),
            })
        for friend in network.adjacency[pid]:
            if _id_key(pid) < _id_key(friend):
                adjacency_table.append({"profile_id": pid, "friend_id": friend})
    return {
        "profiles": profiles_table,
        "posts": posts_table,
        "adjacency": adjacency_table,
    }


def write_ground_truth(network: FixtureNetwork, out_dir: str) -> dict[str, str]:
    """Write the three tables as RFC-4180 CSV files; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    tables = ground_truth(network)
    paths = {}
    for name, rows in tables.items():
        path = os.path.join(out_dir, f"{name}.csv")
        header = list(rows[0]) if rows else {
            "profiles": ["profile_id"], "posts": ["profile_id"],
            "adjacency": ["profile_id", "friend_id"],
        }[name]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=header)
            writer.writeheader()
            writer.writerows(rows)
        paths[name] = path
    return paths
