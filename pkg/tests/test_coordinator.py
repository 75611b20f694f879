"""Work partitioning, the agent control channel, and shard merging."""

import csv
import os
import random
import socket
import threading

import pytest

from imcrawler.config_io import CrawlConfig
from imcrawler.coordinator import (
    AgentAssignment,
    _merge_shards,
    partition_seeds,
    recv_message,
    run_agents,
    send_message,
)
from imcrawler.errors import AgentFailure
from imcrawler.extract import RAW_COLUMNS


def test_partition_deals_round_robin():
    got = partition_seeds(7, 3)
    assert [a.seed_indices for a in got] == [[1, 4, 7], [2, 5], [3, 6]]
    assert [a.agent_id for a in got] == [0, 1, 2]


def test_partition_properties_hold_for_any_shape():
    rng = random.Random(7001)
    for _ in range(200):
        seeds = rng.randrange(0, 60)
        agents = rng.randrange(1, 12)
        got = partition_seeds(seeds, agents)
        indices = [i for a in got for i in a.seed_indices]
        assert sorted(indices) == list(range(1, seeds + 1))
        sizes = [len(a.seed_indices) for a in got]
        assert max(sizes) - min(sizes) <= 1
        assert got == partition_seeds(seeds, agents)
    with pytest.raises(AgentFailure):
        partition_seeds(5, 0)


def test_control_channel_roundtrip():
    host, client = socket.socketpair()
    try:
        message = {"cmd": "start", "agent_id": 3, "seed_indices": [1, 2],
                   "nested": {"x": [None, True, "text"]}}
        send_message(client, message)
        send_message(client, {"status": "done"})
        assert recv_message(host) == message
        assert recv_message(host) == {"status": "done"}
        client.close()
        assert recv_message(host) is None  # clean EOF, not an exception
    finally:
        host.close()


def test_control_channel_rejects_oversized_frames():
    import struct

    host, client = socket.socketpair()
    try:
        absurd = struct.pack(">I", 2**31)
        sender = threading.Thread(target=client.sendall, args=(absurd + b"x",))
        sender.start()
        with pytest.raises(AgentFailure):
            recv_message(host)
        sender.join()
    finally:
        client.close()
        host.close()


def test_merge_keeps_one_header_and_all_rows(tmp_path):
    shard_paths = []
    want_rows = []
    for k in range(3):
        path = str(tmp_path / f"s{k}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(RAW_COLUMNS)
            for i in range(k + 1):
                row = ["profile", f"http://x/profile/u{k}{i}", str(k),
                       "friend_count", str(i), "t"]
                writer.writerow(row)
                want_rows.append(row)
        shard_paths.append(path)
    shard_paths.insert(1, str(tmp_path / "never-written.csv"))

    merged = str(tmp_path / "merged.csv")
    _merge_shards(shard_paths, merged)
    with open(merged, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(RAW_COLUMNS)
    assert rows[1:] == want_rows


def test_merge_without_shards_still_writes_a_valid_file(tmp_path):
    merged = str(tmp_path / "merged.csv")
    _merge_shards([str(tmp_path / "ghost.csv")], merged)
    with open(merged, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows == [list(RAW_COLUMNS)]


# --- whole runs ---------------------------------------------------------------

def coordinator_config(tmp_path, **kwargs):
    defaults = dict(
        friend_links_path=str(tmp_path / "links.txt"),
        output_path=str(tmp_path / "unused.csv"),
        total_post=5,
        depth=1,
        min_delay_ms=0,
        max_delay_ms=0,
    )
    defaults.update(kwargs)
    return CrawlConfig(**defaults)


def read_raw_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_in_process_agents_merge_their_shards(tmp_path, small_network,
                                              make_service, seed_file):
    service = make_service(small_network)
    ids = small_network.all_ids()[:4]
    seeds_path = seed_file(ids)
    merged = str(tmp_path / "merged.csv")
    config = coordinator_config(tmp_path)

    summary, assignments = run_agents(
        seeds_path, config, service.base_url, merged,
        agents=2, sessions=2, in_process=True)
    assert [a.seed_indices for a in assignments] == [[1, 3], [2, 4]]
    assert summary.agent_failures == []
    assert summary.unprocessed_seeds == []
    assert sorted(summary.per_seed) == [1, 2, 3, 4]

    merged_rows = read_raw_rows(merged)
    shard_rows = []
    for a in assignments:
        shard_rows.extend(read_raw_rows(a.shard_path)[1:])
    assert merged_rows[0] == list(RAW_COLUMNS)
    assert sorted(map(tuple, merged_rows[1:])) == sorted(map(tuple, shard_rows))
    assert summary.profiles_captured == sum(
        v["captured"] for v in summary.per_seed.values())


def test_process_agents_do_real_work(tmp_path, small_network, make_service,
                                     seed_file):
    # one spawn-mode run: separate interpreters dial home over TCP
    service = make_service(small_network)
    ids = small_network.all_ids()[:2]
    seeds_path = seed_file(ids)
    merged = str(tmp_path / "merged.csv")
    config = coordinator_config(tmp_path)

    summary, assignments = run_agents(
        seeds_path, config, service.base_url, merged,
        agents=2, sessions=1, timeout_s=120.0)
    assert summary.agent_failures == []
    assert summary.profiles_captured > 0
    rows = read_raw_rows(merged)
    assert rows[0] == list(RAW_COLUMNS)
    assert len(rows) > 1
    assert all(os.path.exists(a.shard_path) for a in assignments)


def test_doomed_agent_reports_unprocessed_seeds(tmp_path, small_network,
                                                make_service, seed_file):
    service = make_service(small_network)
    ids = small_network.all_ids()[:4]
    # agent 0 gets seeds 1 and 3; seed rows 1 and 3 carry broken secrets
    seeds_path = seed_file(ids, bad={ids[0], ids[2]})
    merged = str(tmp_path / "merged.csv")
    config = coordinator_config(tmp_path)

    summary, _ = run_agents(seeds_path, config, service.base_url, merged,
                            agents=2, sessions=1, in_process=True)
    assert [f["agent_id"] for f in summary.agent_failures] == [0]
    assert summary.unprocessed_seeds == [1, 3]
    rows = read_raw_rows(merged)
    assert len(rows) > 1  # the surviving agent's captures still landed


def test_all_agents_failing_is_an_error(tmp_path, small_network, make_service,
                                        seed_file):
    service = make_service(small_network)
    ids = small_network.all_ids()[:2]
    seeds_path = seed_file(ids, bad=set(ids))
    config = coordinator_config(tmp_path)
    with pytest.raises(AgentFailure):
        run_agents(seeds_path, config, service.base_url,
                   str(tmp_path / "merged.csv"), agents=2, sessions=1,
                   in_process=True)


def test_stale_shards_do_not_leak_into_new_runs(tmp_path, small_network,
                                                make_service, seed_file):
    service = make_service(small_network)
    ids = small_network.all_ids()[:2]
    seeds_path = seed_file(ids)
    merged = str(tmp_path / "merged.csv")
    config = coordinator_config(tmp_path)

    stale = f"{os.path.abspath(merged)}.shard0.csv"
    with open(stale, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RAW_COLUMNS)
        writer.writerow(["profile", "http://x/profile/stale", "1",
                         "friend_count", "1", "t"])
    run_agents(seeds_path, config, service.base_url, merged,
               agents=2, sessions=1, in_process=True)
    merged_text = open(merged, encoding="utf-8").read()
    assert "stale" not in merged_text


def test_assignment_defaults_come_from_config(tmp_path, small_network,
                                              make_service, seed_file):
    service = make_service(small_network)
    ids = small_network.all_ids()[:3]
    seeds_path = seed_file(ids)
    config = coordinator_config(tmp_path, agents=3, sessions_per_agent=2)
    summary, assignments = run_agents(
        seeds_path, config, service.base_url, str(tmp_path / "merged.csv"),
        in_process=True)
    assert len(assignments) == 3
    assert all(a.sessions == 2 for a in assignments)
    assert isinstance(assignments[0], AgentAssignment)
    assert summary.agent_failures == []
