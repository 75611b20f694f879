"""Deterministic network generation and the HTTP fixture service."""

import json
import random
import subprocess
import sys

import pytest
import requests

import oracles
from imcrawler.errors import BadParameter, BindFailure, UnknownProfile
from imcrawler.fixture import (
    FixtureNetwork,
    FixtureService,
    choose_fault_profiles,
    expected_secret,
    generate_network,
)
from imcrawler.fixture.pages import format_count, page_count, render_about
from imcrawler.fixture.server import TRUNCATE_AT


# --- generation -----------------------------------------------------------------

def test_generation_is_deterministic_and_seed_sensitive():
    a = generate_network(60, 5.0, rng_seed=9).to_bytes()
    b = generate_network(60, 5.0, rng_seed=9).to_bytes()
    c = generate_network(60, 5.0, rng_seed=10).to_bytes()
    assert a == b
    assert a != c
    assert FixtureNetwork.from_bytes(a).to_bytes() == a


def test_generation_survives_hash_randomization():
    # byte-for-byte identical output under different PYTHONHASHSEED values
    prog = ("import hashlib; from imcrawler.fixture import generate_network; "
            "print(hashlib.sha256(generate_network(50, 6.0, rng_seed=4)"
            ".to_bytes()).hexdigest())")
    digests = set()
    for hashseed in ("0", "1", "12345"):
        out = subprocess.run(
            [sys.executable, "-c", prog], capture_output=True, text=True,
            env={"PYTHONHASHSEED": hashseed, "PATH": "/usr/bin:/bin"},
            check=True)
        digests.add(out.stdout.strip())
    assert len(digests) == 1


def test_realized_degree_tracks_request():
    for seed in (1, 2, 3):
        net = generate_network(400, 10.0, rng_seed=seed)
        assert abs(net.realized_mean_degree() - 10.0) <= 1.5
        # adjacency is symmetric and irreflexive
        for pid in net.all_ids()[:50]:
            assert pid not in net.friends(pid)
            for friend in net.friends(pid):
                assert pid in net.friends(friend)


def test_generation_parameter_validation():
    with pytest.raises(BadParameter):
        generate_network(0, 5.0, rng_seed=1)
    with pytest.raises(BadParameter):
        generate_network(10, -1.0, rng_seed=1)
    with pytest.raises(BadParameter):
        generate_network(10, 2.0, rng_seed=1, disclosure_rate=1.5)
    net = generate_network(5, 2.0, rng_seed=1)
    with pytest.raises(UnknownProfile):
        net.profile("nobody")


def test_post_tags_point_at_friends():
    net = generate_network(80, 8.0, rng_seed=21)
    tagged = 0
    for pid in net.all_ids():
        friends = set(net.friends(pid))
        for post in net.profile(pid).posts:
            tagged += len(post.tags)
            assert set(post.tags) <= friends
            assert post.reaction_total == sum(post.emotion_counts.values())
            assert (post.view_count is not None) == (post.post_type == "video")
    assert tagged > 0


def test_choose_fault_profiles():
    net = generate_network(100, 4.0, rng_seed=2)
    faults = choose_fault_profiles(net, 0.05, rng_seed=6)
    assert faults == choose_fault_profiles(net, 0.05, rng_seed=6)
    assert len(faults) == 5
    assert faults <= set(net.all_ids())
    assert choose_fault_profiles(net, 0.0, rng_seed=6) == set()
    with pytest.raises(BadParameter):
        choose_fault_profiles(net, 1.2, rng_seed=6)


# --- count rendering ---------------------------------------------------------

def test_format_count_abbreviates_only_exact_values():
    cases = {0: "0", 7: "7", 999: "999", 1000: "1K", 1200: "1.2K",
             1250: "1250", 57000: "57K", 999900: "999.9K", 1000000: "1M",
             3400000: "3.4M", 3450000: "3450000", 1000001: "1000001"}
    for n, text in cases.items():
        assert format_count(n) == text, n


def test_format_count_matches_oracle_everywhere():
    rng = random.Random(515)
    samples = list(range(0, 2000))
    samples += [rng.randrange(0, 10_000_000) for _ in range(3000)]
    samples += [k * 100 for k in range(1, 2000)]
    samples += [k * 100_000 for k in range(1, 80)]
    for n in samples:
        assert format_count(n) == oracles.format_count_oracle(n), n


def test_page_count():
    assert page_count(0, 20) == 1  # an empty listing still has one page
    assert page_count(1, 20) == 1
    assert page_count(20, 20) == 1
    assert page_count(21, 20) == 2
    assert page_count(501, 100) == 6


# --- the HTTP service ----------------------------------------------------------

def login_token(base_url, pid):
    resp = requests.post(f"{base_url}/login",
                         json={"login": pid, "secret": expected_secret(pid)},
                         timeout=5)
    assert resp.status_code == 200
    return resp.json()["token"]


def test_auth_wall_hides_everything(small_network, make_service):
    service = make_service(small_network)
    pid = small_network.all_ids()[0]
    for path in (f"/profile/{pid}/about", f"/profile/{pid}/friends",
                 f"/profile/{pid}/timeline", "/profile/nosuch/about"):
        resp = requests.get(service.base_url + path, timeout=5)
        # unauthenticated: 401 even for nonexistent targets, no data leaks
        assert resp.status_code == 401
        assert "attr-value" not in resp.text
        assert pid not in resp.text
    resp = requests.get(service.base_url + f"/profile/{pid}/about",
                        headers={"Authorization": "Bearer bogus"}, timeout=5)
    assert resp.status_code == 401


def test_authenticated_pages_and_logout(small_network, make_service):
    service = make_service(small_network)
    pid = small_network.all_ids()[0]
    token = login_token(service.base_url, pid)
    headers = {"Authorization": f"Bearer {token}"}
    resp = requests.get(service.base_url + f"/profile/{pid}/about",
                        headers=headers, timeout=5)
    assert resp.status_code == 200
    assert 'id="friend-summary"' in resp.text
    resp = requests.get(service.base_url + "/profile/ghost/about",
                        headers=headers, timeout=5)
    assert resp.status_code == 404

    resp = requests.post(service.base_url + "/logout", headers=headers, timeout=5)
    assert resp.status_code == 200
    resp = requests.get(service.base_url + f"/profile/{pid}/about",
                        headers=headers, timeout=5)
    assert resp.status_code == 401  # token is dead after logout


def test_login_rejects_wrong_secret(small_network, make_service):
    service = make_service(small_network)
    pid = small_network.all_ids()[0]
    resp = requests.post(f"{service.base_url}/login",
                         json={"login": pid, "secret": "nope"}, timeout=5)
    assert resp.status_code == 401
    resp = requests.post(f"{service.base_url}/login",
                         json={"login": "ghost", "secret": "x"}, timeout=5)
    assert resp.status_code == 401


def test_truth_endpoint_mirrors_generator(small_network, make_service):
    service = make_service(small_network)
    pid = small_network.all_ids()[3]
    token = login_token(service.base_url, pid)
    resp = requests.get(f"{service.base_url}/truth/{pid}",
                        headers={"Authorization": f"Bearer {token}"}, timeout=5)
    assert resp.status_code == 200
    body = json.loads(resp.text)
    assert body.pop("friends") == small_network.friends(pid)
    assert body == small_network.profile(pid).to_dict()


def test_truth_endpoint_can_be_disabled(small_network, make_service):
    service = make_service(small_network, truth_enabled=False)
    pid = small_network.all_ids()[0]
    token = login_token(service.base_url, pid)
    resp = requests.get(f"{service.base_url}/truth/{pid}",
                        headers={"Authorization": f"Bearer {token}"}, timeout=5)
    assert resp.status_code == 404


def test_bind_failure_is_reported(small_network, make_service):
    service = make_service(small_network)
    _, port = service.address
    with pytest.raises(BindFailure):
        FixtureService(small_network, port=port).start()


def test_fault_truncation_kills_friend_summary(small_network, make_service):
    service = make_service(small_network)
    pid = small_network.all_ids()[2]
    service.set_fault_profiles({pid})
    token = login_token(service.base_url, pid)
    headers = {"Authorization": f"Bearer {token}"}
    resp = requests.get(service.base_url + f"/profile/{pid}/about",
                        headers=headers, timeout=5)
    full = render_about(small_network, pid)
    cut = int(len(full) * TRUNCATE_AT)
    assert resp.text == full[:cut]
    assert "friend-summary" not in resp.text

    # other profiles and the faulty profile's other pages stay whole
    other = small_network.all_ids()[3]
    resp = requests.get(service.base_url + f"/profile/{other}/about",
                        headers=headers, timeout=5)
    assert "friend-summary" in resp.text
    service.set_fault_profiles(set())
    resp = requests.get(service.base_url + f"/profile/{pid}/about",
                        headers=headers, timeout=5)
    assert resp.text == full


def test_disclosure_masks_hide_rendered_fields():
    net = generate_network(120, 4.0, rng_seed=13, disclosure_rate=0.5)
    masked_seen = 0
    for pid in net.all_ids():
        prof = net.profile(pid)
        page = render_about(net, pid)
        for name in oracles.PROFILE_SCALARS:
            shown = f'data-attr="{name}"' in page
            assert shown == prof.discloses(name), (pid, name)
            masked_seen += 0 if prof.discloses(name) else 1
    assert masked_seen > 100  # the mask actually bites at rate 0.5
