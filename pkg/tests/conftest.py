"""Shared fixtures: generated networks, live services, sessions, captures."""

from __future__ import annotations

import pytest

from imcrawler.dom import parse_dom
from imcrawler.extract import (
    RawPostCapture,
    RawSink,
    posts_from_timeline_dom,
    profile_capture_from_dom,
)
from imcrawler.fixture import FixtureService, expected_secret, generate_network
from imcrawler.fixture.pages import page_count, render_about, render_timeline_page
from imcrawler.rules import default_rules
from imcrawler.session import login

# fixed capture stamp for offline captures; keeps derived files reproducible
OFFLINE_STAMP = "2026-01-01T00:00:00.000+00:00"
OFFLINE_BASE = "http://fixture.test"


@pytest.fixture(scope="session")
def rules():
    return default_rules()


@pytest.fixture(scope="session")
def small_network():
    # paginates at page_size 5 yet renders in milliseconds
    return generate_network(40, 6.0, rng_seed=7)


@pytest.fixture(scope="session")
def medium_network():
    return generate_network(300, 10.0, rng_seed=11)


@pytest.fixture
def make_service():
    """Start fixture servers on ephemeral ports; stop them all on teardown."""
    started = []

    def start(network, **kwargs):
        service = FixtureService(network, **kwargs).start()
        started.append(service)
        return service

    yield start
    for service in started:
        service.stop()


@pytest.fixture
def login_to():
    """Open zero-delay sessions with the right secret; close them all after."""
    opened = []

    def open_session(service, profile_id, **kwargs):
        session = login(profile_id, expected_secret(profile_id),
                        service.base_url, **kwargs)
        opened.append(session)
        return session

    yield open_session
    for session in opened:
        session.close()


@pytest.fixture
def seed_file(tmp_path):
    """Write a seed CSV for the given profiles; ids in ``bad`` get a wrong
    secret so their login is guaranteed to fail."""

    def write(profile_ids, *, bad=(), name="seeds.csv"):
        lines = []
        for pid in profile_ids:
            secret = "nope" if pid in bad else expected_secret(pid)
            lines.append(f"{pid},{pid},{secret}")
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return str(path)

    return write


def capture_offline(network, raw_path, *, ids=None, total_post=100,
                    page_size=20, with_posts=True, base_url=OFFLINE_BASE,
                    rules=None, seed_index=0):
    """Raw-capture rendered pages straight from the generator, no HTTP.

    Exercises the real render -> parse -> rules path and writes the same
    capture CSV a live crawl would, so pipeline stages can be fed at any
    scale without a server.
    """
    rules = rules or default_rules()
    ids = network.all_ids() if ids is None else list(ids)
    with RawSink(str(raw_path)) as sink:
        for pid in ids:
            url = f"{base_url}/profile/{pid}"
            tree = parse_dom(render_about(network, pid))
            sink.write_profile(profile_capture_from_dom(
                tree, url, rules=rules, seed_index=seed_index,
                captured_at=OFFLINE_STAMP))
            if not with_posts:
                continue
            captures = []
            posts = network.profile(pid).posts
            for page_no in range(1, page_count(len(posts), page_size) + 1):
                if len(captures) >= total_post:
                    break
                page = render_timeline_page(network, pid, page_no, page_size)
                for fields in posts_from_timeline_dom(parse_dom(page), rules):
                    if len(captures) >= total_post:
                        break
                    captures.append(RawPostCapture(
                        profile_url=url,
                        post_index=len(captures) + 1,
                        fields=fields,
                        captured_at=OFFLINE_STAMP,
                        seed_index=seed_index,
                    ))
            sink.write_posts(captures)
    return str(raw_path)


@pytest.fixture(scope="session")
def offline_capture():
    return capture_offline
