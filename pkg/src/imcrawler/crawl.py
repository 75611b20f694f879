"""The crawl engine: seed-anchored BFS capture runs.

A fresh run logs in as each seed, harvests the seed's friend links, walks
the BFS frontier to the configured depth and captures personal and post
attributes for every frontier profile. A re-extraction run (seedProfile
set) logs in as that one seed and processes exactly the URLs in the
re-extract file, skipping friend harvesting entirely.

Failures are contained: a fetch that still fails after 3 attempts (1 s
then 4 s backoff) becomes a fetch_errors entry, a seed that cannot log in
becomes a login_failures entry, and the run carries on. Only a run where
every seed fails to log in raises.
"""

from __future__ import annotations

import logging
import random
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .config_io import CrawlConfig, SeedProfile, read_links_file, write_links_file
from .errors import (
    AllSeedsFailedLogin,
    AuthExpired,
    BadCredentials,
    ConfigInvalid,
    EndpointUnreachable,
    FetchError,
    MultiplicityViolation,
)
from .extract import (
    RawSink,
    extract_friend_links,
    extract_personal_attributes,
    extract_post_attributes,
)
from .rules import RuleSet, default_rules
from .session import Session, login
from .urls import normalize_profile_url, profile_url

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 3
BACKOFF_S = (1.0, 4.0)


@dataclass
class CrawlTask:
    url: str
    depth: int
    seed_index: int
    attempt: int = 1


@dataclass
class CrawlSummary:
    profiles_attempted: int = 0
    profiles_captured: int = 0
    posts_captured: int = 0
    fetch_errors: list[dict] = field(default_factory=list)
    login_failures: list[dict] = field(default_factory=list)
    per_seed: dict[int, dict] = field(default_factory=dict)
    unprocessed_seeds: list[int] = field(default_factory=list)
    agent_failures: list[dict] = field(default_factory=list)
    duration_s: float = 0.0

    def merge(self, other: "CrawlSummary") -> None:
        self.profiles_attempted += other.profiles_attempted
        self.profiles_captured += other.profiles_captured
        self.posts_captured += other.posts_captured
        self.fetch_errors.extend(other.fetch_errors)
        self.login_failures.extend(other.login_failures)
        self.per_seed.update(other.per_seed)
        self.unprocessed_seeds.extend(other.unprocessed_seeds)
        self.agent_failures.extend(other.agent_failures)
        self.duration_s = max(self.duration_s, other.duration_s)

    def to_dict(self) -> dict:
        return {
            "profiles_attempted": self.profiles_attempted,
            "profiles_captured": self.profiles_captured,
            "posts_captured": self.posts_captured,
            "fetch_errors": self.fetch_errors,
            "login_failures": self.login_failures,
            "per_seed": {str(k): v for k, v in self.per_seed.items()},
            "unprocessed_seeds": self.unprocessed_seeds,
            "agent_failures": self.agent_failures,
            "duration_s": self.duration_s,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CrawlSummary":
        return cls(
            profiles_attempted=doc.get("profiles_attempted", 0),
            profiles_captured=doc.get("profiles_captured", 0),
            posts_captured=doc.get("posts_captured", 0),
            fetch_errors=list(doc.get("fetch_errors", [])),
            login_failures=list(doc.get("login_failures", [])),
            per_seed={int(k): v for k, v in doc.get("per_seed", {}).items()},
            unprocessed_seeds=list(doc.get("unprocessed_seeds", [])),
            agent_failures=list(doc.get("agent_failures", [])),
            duration_s=doc.get("duration_s", 0.0),
        )


def bfs_frontier(
    starts: Iterable[str],
    neighbor_fn: Callable[[str], list[str]],
    depth: int,
) -> list[tuple[str, int]]:
    """Breadth-first frontier of the starts, excluding the starts.

    Returns (url, depth) pairs in discovery order: nondecreasing depth,
    FIFO within a level (parent order, then neighbor order). Every node
    appears at most once; neighbor_fn runs only on nodes whose depth is
    below the limit, never on the final level.
    """
    visited: set[str] = set()
    queue: deque[tuple[str, int]] = deque()
    result: list[tuple[str, int]] = []
    for url in starts:
        key = normalize_profile_url(url)
        if key not in visited:
            visited.add(key)
            queue.append((url, 0))
    while queue:
        url, level = queue.popleft()
        if level >= depth:
            continue
        for neighbor in neighbor_fn(url):
            key = normalize_profile_url(neighbor)
            if key in visited:
                continue
            visited.add(key)
            queue.append((neighbor, level + 1))
            result.append((neighbor, level + 1))
    return result


def _with_retries(fn, task: CrawlTask, summary: "CrawlSummary",
                  lock: threading.Lock, sleep) -> tuple[bool, object]:
    """Run fn until it succeeds or the task runs out of attempts."""
    while True:
        try:
            return True, fn()
        except MultiplicityViolation as exc:
            # template drift; retrying the same page cannot help
            with lock:
                summary.fetch_errors.append(
                    {"seed_index": task.seed_index, "url": task.url,
                     "error": str(exc)})
            return False, None
        except FetchError as exc:
            if task.attempt >= MAX_ATTEMPTS:
                with lock:
                    summary.fetch_errors.append(
                        {"seed_index": task.seed_index, "url": task.url,
                         "error": str(exc)})
                return False, None
            sleep(BACKOFF_S[task.attempt - 1])
            task.attempt += 1


class _SeedWorkerState:
    """Shared mutable state for the session workers of one crawl call."""

    def __init__(self, config: CrawlConfig, endpoint: str, rules: RuleSet,
                 sink: RawSink, sleep, clock) -> None:
        self.config = config
        self.endpoint = endpoint
        self.rules = rules
        self.sink = sink
        self.sleep = sleep
        self.clock = clock
        self.lock = threading.Lock()
        self.links_lock = threading.Lock()
        self.summary = CrawlSummary()


def _login_seed(state: _SeedWorkerState, index: int, seed: SeedProfile) -> Session | None:
    try:
        return login(
            seed.login_name, seed.secret, state.endpoint,
            min_delay_ms=state.config.min_delay_ms,
            max_delay_ms=state.config.max_delay_ms,
            sleep=state.sleep, clock=state.clock,
            rng=random.Random(),
        )
    except (BadCredentials, EndpointUnreachable, FetchError) as exc:
        log.warning("seed %s login failed: %s", seed.profile_id, exc)
        with state.lock:
            state.summary.login_failures.append(
                {"seed_index": index, "profile_id": seed.profile_id,
                 "error": str(exc)})
            state.summary.per_seed[index] = {
                "profile_id": seed.profile_id, "login_ok": False,
                "attempted": 0, "captured": 0, "posts": 0, "errors": 0,
            }
        return None


def _capture_frontier(state: _SeedWorkerState, session: Session, index: int,
                      frontier: list[tuple[str, int]], counters: dict) -> None:
    for url, level in frontier:
        counters["attempted"] += 1
        with state.lock:
            state.summary.profiles_attempted += 1
        task = CrawlTask(url=url, depth=level, seed_index=index)
        ok, capture = _with_retries(
            lambda: extract_personal_attributes(
                session, url, rules=state.rules, seed_index=index),
            task, state.summary, state.lock, state.sleep)
        if not ok:
            counters["errors"] += 1
            continue
        state.sink.write_profile(capture)
        post_task = CrawlTask(url=url, depth=level, seed_index=index)
        ok, posts = _with_retries(
            lambda: extract_post_attributes(
                session, url, state.config.total_post,
                rules=state.rules, seed_index=index),
            post_task, state.summary, state.lock, state.sleep)
        if not ok:
            counters["errors"] += 1
            continue
        state.sink.write_posts(posts)
        counters["captured"] += 1
        counters["posts"] += len(posts)
        with state.lock:
            state.summary.profiles_captured += 1
            state.summary.posts_captured += len(posts)


def _process_fresh_seed(state: _SeedWorkerState, index: int, seed: SeedProfile) -> None:
    session = _login_seed(state, index, seed)
    if session is None:
        return
    counters = {"attempted": 0, "captured": 0, "posts": 0, "errors": 0}
    try:
        memo: dict[str, list[str]] = {}

        def neighbors(url: str) -> list[str]:
            key = normalize_profile_url(url)
            if key not in memo:
                memo[key] = extract_friend_links(session, url, state.rules)
            return memo[key]

        seed_url = profile_url(state.endpoint, seed.profile_id)
        frontier = bfs_frontier([seed_url], neighbors, state.config.depth)
        links_path = seed.friend_links_path or state.config.friend_links_path
        with state.links_lock:
            write_links_file(memo.get(normalize_profile_url(seed_url), []),
                             links_path, append=True)
        _capture_frontier(state, session, index, frontier, counters)
    except AuthExpired as exc:
        log.warning("seed %s session expired: %s", seed.profile_id, exc)
        counters["errors"] += 1
        with state.lock:
            state.summary.fetch_errors.append(
                {"seed_index": index, "url": exc.url, "error": str(exc)})
    finally:
        session.close()
        with state.lock:
            state.summary.per_seed[index] = {
                "profile_id": seed.profile_id, "login_ok": True, **counters}


def _run_reextraction(state: _SeedWorkerState, index: int, seed: SeedProfile) -> None:
    links = read_links_file(state.config.reextract_links_path or "")
    session = _login_seed(state, index, seed)
    if session is None:
        raise AllSeedsFailedLogin(1)
    counters = {"attempted": 0, "captured": 0, "posts": 0, "errors": 0}
    try:
        visited: set[str] = set()
        frontier = []
        for url in links:
            key = normalize_profile_url(url)
            if key not in visited:
                visited.add(key)
                frontier.append((url, 1))
        _capture_frontier(state, session, index, frontier, counters)
    except AuthExpired as exc:
        counters["errors"] += 1
        with state.lock:
            state.summary.fetch_errors.append(
                {"seed_index": index, "url": exc.url, "error": str(exc)})
    finally:
        session.close()
        with state.lock:
            state.summary.per_seed[index] = {
                "profile_id": seed.profile_id, "login_ok": True, **counters}


def crawl(
    seeds: list[SeedProfile],
    config: CrawlConfig,
    endpoint: str,
    *,
    rules: RuleSet | None = None,
    seed_indices: list[int] | None = None,
    sleep=time.sleep,
    clock=time.monotonic,
) -> CrawlSummary:
    """Run one crawl (fresh or re-extraction) and append raw captures to
    ``config.output_path``.

    ``seed_indices`` preserves the 1-based positions from the original
    seed file when a caller hands in a subset (the coordinator does).
    ``config.sessions_per_agent`` concurrent sessions split the seeds
    round-robin; each session processes its own seeds sequentially.
    """
    if not seeds:
        raise ConfigInvalid("no seeds to crawl")
    indices = seed_indices if seed_indices is not None else list(range(1, len(seeds) + 1))
    if len(indices) != len(seeds):
        raise ConfigInvalid("seed_indices and seeds length mismatch")
    if config.is_reextraction():
        target = config.seed_profile_index
        if target not in indices:
            raise ConfigInvalid(
                f"seedProfile={target} does not match any seed row (rows: {indices})")

    rules = rules or default_rules()
    started = clock()
    sink = RawSink(config.output_path)
    state = _SeedWorkerState(config, endpoint, rules, sink, sleep, clock)
    try:
        if config.is_reextraction():
            pos = indices.index(config.seed_profile_index)  # type: ignore[arg-type]
            _run_reextraction(state, indices[pos], seeds[pos])
        else:
            pairs = list(zip(indices, seeds))
            n_workers = max(1, config.sessions_per_agent)
            shards = [pairs[k::n_workers] for k in range(n_workers)]
            crashes: list[BaseException] = []
            threads = []
            for shard in shards:
                if not shard:
                    continue

                def run(shard=shard):
                    try:
                        for index, seed in shard:
                            _process_fresh_seed(state, index, seed)
                    except BaseException as exc:  # surface, never die silently
                        crashes.append(exc)

                threads.append(threading.Thread(target=run, daemon=True))
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            if crashes:
                raise crashes[0]
            if seeds and len(state.summary.login_failures) == len(seeds):
                raise AllSeedsFailedLogin(len(seeds))
    finally:
        sink.close()
        state.summary.duration_s = clock() - started
    log.info(
        "crawl done: %d/%d profiles captured, %d posts, %d fetch errors",
        state.summary.profiles_captured, state.summary.profiles_attempted,
        state.summary.posts_captured, len(state.summary.fetch_errors))
    return state.summary
