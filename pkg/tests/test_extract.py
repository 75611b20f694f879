"""Session-driven extraction against a live fixture service."""

import csv
import threading

import pytest

import oracles
from imcrawler.dom import parse_dom
from imcrawler.errors import AuthExpired, FetchError
from imcrawler.extract import (
    NOT_DISCLOSED,
    NOT_PRESENT,
    POST_FIELDS,
    RAW_COLUMNS,
    RawSink,
    SECTION_NAMES,
    expected_page_fetches,
    extract_friend_links,
    extract_personal_attributes,
    extract_post_attributes,
    profile_capture_from_dom,
)
from imcrawler.fixture.pages import render_about


def fetched(session, path_part):
    return [url for url in session.requested_urls() if path_part in url]


def test_friend_links_walk_every_page(small_network, make_service, login_to):
    service = make_service(small_network, page_size=5)
    pid = max(small_network.all_ids(), key=lambda p: len(small_network.friends(p)))
    session = login_to(service, pid)
    links = extract_friend_links(session, f"{service.base_url}/profile/{pid}")
    want = [f"{service.base_url}/profile/{f}" for f in small_network.friends(pid)]
    assert links == want
    pages = len(fetched(session, "/friends"))
    assert pages == oracles.pages_needed(10**9, len(want), 5)


def test_friend_links_deduplicate(small_network, make_service, login_to):
    service = make_service(small_network, page_size=1000)
    pid = small_network.all_ids()[0]
    session = login_to(service, pid)
    links = extract_friend_links(session, f"{service.base_url}/profile/{pid}")
    assert len(links) == len(set(links))


def test_auth_expiry_mid_walk_reports_pages_fetched(small_network, make_service,
                                                    login_to):
    service = make_service(small_network, page_size=2)
    pid = max(small_network.all_ids(), key=lambda p: len(small_network.friends(p)))
    assert len(small_network.friends(pid)) > 2  # needs a second page

    def kill_sessions(_seconds):
        service.invalidate_all_sessions()

    # pacing sleeps once before every fetch after the first; the injected
    # sleep kills the session right there, so page 2 comes back 401
    session = login_to(service, pid, min_delay_ms=1, max_delay_ms=1,
                       sleep=kill_sessions)
    with pytest.raises(AuthExpired) as err:
        extract_friend_links(session, f"{service.base_url}/profile/{pid}")
    assert err.value.pages_fetched == 1


def test_personal_attributes_capture_sections(small_network, make_service,
                                              login_to):
    service = make_service(small_network)
    viewer = small_network.all_ids()[0]
    session = login_to(service, viewer)
    # a profile hiding at least one basic field, to pin NOT_DISCLOSED handling
    pid = next(p for p in small_network.all_ids()
               if not small_network.profile(p).discloses("gender")
               and not small_network.profile(p).family_members)
    cap = extract_personal_attributes(
        session, f"{service.base_url}/profile/{pid}", seed_index=4)
    assert set(cap.sections) == set(SECTION_NAMES)
    assert cap.seed_index == 4
    assert "gender" not in cap.sections["basic_information"]
    assert cap.sections["friend_count"] != NOT_DISCLOSED
    prof = small_network.profile(pid)
    if not prof.discloses("relationship_status"):
        assert cap.sections["family_and_relationship"] == NOT_DISCLOSED


def test_capture_marks_missing_sections_offline(small_network, rules):
    pid = next(p for p in small_network.all_ids()
               if not small_network.profile(p).pages_liked)
    tree = parse_dom(render_about(small_network, pid))
    cap = profile_capture_from_dom(tree, "http://x/profile/" + pid, rules=rules)
    assert cap.sections["pages_liked"] == NOT_DISCLOSED


@pytest.mark.parametrize("total_post", [1, 3, 7, 100])
def test_post_extraction_is_lazy(small_network, make_service, login_to,
                                 total_post):
    service = make_service(small_network, page_size=3)
    pid = max(small_network.all_ids(),
              key=lambda p: len(small_network.profile(p).posts))
    available = len(small_network.profile(pid).posts)
    assert available >= 4
    session = login_to(service, pid)
    posts = extract_post_attributes(
        session, f"{service.base_url}/profile/{pid}", total_post)
    assert len(posts) == min(total_post, available)
    assert [p.post_index for p in posts] == list(range(1, len(posts) + 1))
    want_pages = oracles.pages_needed(total_post, available, 3)
    assert len(fetched(session, "/timeline")) == want_pages
    assert want_pages == expected_page_fetches(total_post, available, 3)


def test_post_extraction_fetches_one_page_when_empty(make_service, login_to):
    from imcrawler.fixture import generate_network

    net = generate_network(6, 2.0, rng_seed=1, posts_per_profile_range=(0, 0))
    service = make_service(net)
    pid = net.all_ids()[0]
    session = login_to(service, pid)
    posts = extract_post_attributes(session, f"{service.base_url}/profile/{pid}", 10)
    assert posts == []
    assert len(fetched(session, "/timeline")) == 1


def test_post_fields_round_trip_against_truth(small_network, make_service,
                                              login_to):
    service = make_service(small_network)
    pid = max(small_network.all_ids(),
              key=lambda p: len(small_network.profile(p).posts))
    session = login_to(service, pid)
    caps = extract_post_attributes(session, f"{service.base_url}/profile/{pid}", 50)
    truth = small_network.profile(pid).posts
    for cap, want in zip(caps, truth, strict=True):
        assert set(cap.fields) == set(POST_FIELDS)
        assert cap.fields["title"] == want.title
        assert cap.fields["date"] == want.date
        if want.post_type == "video":
            assert cap.fields["views"] != NOT_PRESENT
        else:
            assert cap.fields["views"] == NOT_PRESENT
        if not want.tags:
            assert cap.fields["tags"] == NOT_PRESENT


def test_fetch_errors_carry_status(small_network, make_service, login_to):
    service = make_service(small_network)
    session = login_to(service, small_network.all_ids()[0])
    with pytest.raises(FetchError) as err:
        session.fetch(f"{service.base_url}/profile/ghost/about")
    assert err.value.status == 404


# --- the raw capture sink ----------------------------------------------------

def test_raw_sink_header_once_and_append(tmp_path, small_network, rules):
    path = str(tmp_path / "raw.csv")
    pid = small_network.all_ids()[0]
    cap = profile_capture_from_dom(
        parse_dom(render_about(small_network, pid)),
        "http://x/profile/" + pid, rules=rules)
    with RawSink(path) as sink:
        sink.write_profile(cap)
    with RawSink(path) as sink:  # reopening appends, no second header
        sink.write_profile(cap)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(RAW_COLUMNS)
    assert sum(1 for r in rows if r == list(RAW_COLUMNS)) == 1
    assert len(rows) == 1 + 2 * len(SECTION_NAMES)


def test_raw_sink_keeps_concurrent_captures_contiguous(tmp_path, small_network,
                                                       rules):
    path = str(tmp_path / "raw.csv")
    ids = small_network.all_ids()
    captures = [
        profile_capture_from_dom(
            parse_dom(render_about(small_network, pid)),
            f"http://x/profile/{pid}", rules=rules, seed_index=k)
        for k, pid in enumerate(ids)
    ]
    with RawSink(path) as sink:
        threads = [threading.Thread(target=sink.write_profile, args=(cap,))
                   for cap in captures]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))[1:]
    assert len(rows) == len(ids) * len(SECTION_NAMES)
    # one capture's rows never interleave with another's
    for i in range(0, len(rows), len(SECTION_NAMES)):
        block = rows[i:i + len(SECTION_NAMES)]
        assert len({r[1] for r in block}) == 1
        assert [r[3] for r in block] == list(SECTION_NAMES)
