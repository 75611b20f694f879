"""Host/agent coordination for parallel crawls.

The host process partitions seed rows round-robin over N agents, spawns
each agent as an isolated worker process, and talks to it over a local
TCP control channel using length-prefixed JSON messages (schema in
docs/agent_protocol.md). Each agent crawls its seed shard into its own
shard file with ``sessions`` concurrent sessions; the host merges the
shards in (agent_id, shard row order) and aggregates the summaries.

A failed agent never poisons the run: its seeds are reported as
unprocessed, survivors' shards still merge. ``in_process=True`` runs the
agents as threads instead of processes; the crawl semantics are the same
and tests use it to keep the suite fast.
"""

from __future__ import annotations

import csv
import json
import logging
import multiprocessing
import os
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

from .config_io import CrawlConfig, parse_seed_file
from .crawl import CrawlSummary, crawl
from .errors import AgentFailure, CrawlerError
from .extract import RAW_COLUMNS

log = logging.getLogger(__name__)

_LEN = struct.Struct(">I")
MAX_MESSAGE_BYTES = 64 * 1024 * 1024


@dataclass
class AgentAssignment:
    agent_id: int
    seed_indices: list[int] = field(default_factory=list)  # 1-based seed rows
    sessions: int = 1
    shard_path: str = ""


def partition_seeds(seed_count: int, agents: int) -> list[AgentAssignment]:
    """Deal seed rows 1..seed_count round-robin over ``agents`` agents.

    Deterministic; shard sizes differ by at most one.
    """
    if agents < 1:
        raise AgentFailure(0, f"agent count must be >= 1, got {agents}")
    assignments = [AgentAssignment(agent_id=k) for k in range(agents)]
    for row in range(1, seed_count + 1):
        assignments[(row - 1) % agents].seed_indices.append(row)
    return assignments


# --- control channel framing ---------------------------------------------------

def send_message(sock: socket.socket, message: dict) -> None:
    payload = json.dumps(message).encode("utf-8")
    sock.sendall(_LEN.pack(len(payload)) + payload)


def recv_message(sock: socket.socket) -> dict | None:
    """One framed message, or None on a clean EOF."""
    header = _recv_exact(sock, _LEN.size)
    if header is None:
        return None
    (length,) = _LEN.unpack(header)
    if length > MAX_MESSAGE_BYTES:
        raise AgentFailure(-1, f"oversized control message ({length} bytes)")
    payload = _recv_exact(sock, length)
    if payload is None:
        return None
    return json.loads(payload.decode("utf-8"))


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


# --- agent side ------------------------------------------------------------------

def _execute_start(message: dict) -> dict:
    """Run one agent's crawl per a start message; returns the reply."""
    agent_id = message["agent_id"]
    try:
        config = CrawlConfig.from_dict(message["config_blob"])
        seeds = parse_seed_file(message["seeds_path"])
        indices = list(message["seed_indices"])
        subset = [seeds[i - 1] for i in indices]
        summary = crawl(subset, config, message["endpoint"],
                        seed_indices=indices)
        return {"status": "done", "agent_id": agent_id,
                "summary": summary.to_dict()}
    except CrawlerError as exc:
        return {"status": "failed", "agent_id": agent_id, "error": str(exc),
                "summary": CrawlSummary().to_dict()}


def agent_process_main(host: str, port: int, agent_id: int) -> None:
    """Entry point of a worker process: dial home, work, report."""
    with socket.create_connection((host, port), timeout=30) as sock:
        send_message(sock, {"status": "ready", "agent_id": agent_id})
        message = recv_message(sock)
        if message is None or message.get("cmd") != "start":
            return
        send_message(sock, _execute_start(message))


# --- host side ---------------------------------------------------------------------

def _merge_shards(shard_paths: list[str], merged_out: str) -> None:
    """Concatenate shard CSVs in agent order, keeping a single header."""
    os.makedirs(os.path.dirname(os.path.abspath(merged_out)), exist_ok=True)
    wrote_header = False
    with open(merged_out, "w", encoding="utf-8", newline="") as out:
        for path in shard_paths:
            if not os.path.exists(path):
                continue
            with open(path, encoding="utf-8", newline="") as fh:
                header = fh.readline()
                if not header:
                    continue
                if not wrote_header:
                    out.write(header)
                    wrote_header = True
                for line in fh:
                    out.write(line)
        if not wrote_header:
            # no shard contributed; leave a valid, empty capture file
            csv.writer(out).writerow(RAW_COLUMNS)


def _start_message(assignment: AgentAssignment, config: CrawlConfig,
                   seeds_path: str, endpoint: str) -> dict:
    blob = config.to_dict()
    blob["outputFile"] = assignment.shard_path
    blob["sessionsPerAgent"] = assignment.sessions
    return {
        "cmd": "start",
        "agent_id": assignment.agent_id,
        "seed_indices": assignment.seed_indices,
        "config_blob": blob,
        "seeds_path": seeds_path,
        "endpoint": endpoint,
    }


def _collect_in_process(work: list[dict]) -> dict[int, dict]:
    replies: dict[int, dict] = {}
    lock = threading.Lock()

    def run(message: dict) -> None:
        reply = _execute_start(message)
        with lock:
            replies[message["agent_id"]] = reply

    threads = [threading.Thread(target=run, args=(m,), daemon=True) for m in work]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return replies


def _collect_processes(work: list[dict], timeout_s: float) -> dict[int, dict]:
    """Spawn one process per start message and gather replies over TCP."""
    replies: dict[int, dict] = {}
    listener = socket.create_server(("127.0.0.1", 0))
    listener.settimeout(0.5)
    host, port = listener.getsockname()
    ctx = multiprocessing.get_context("spawn")
    procs: dict[int, multiprocessing.process.BaseProcess] = {}
    for message in work:
        proc = ctx.Process(
            target=agent_process_main,
            args=(host, port, message["agent_id"]),
            daemon=True,
        )
        proc.start()
        procs[message["agent_id"]] = proc
    by_id = {m["agent_id"]: m for m in work}
    deadline = time.monotonic() + timeout_s
    pending = set(by_id)
    reply_threads: list[threading.Thread] = []
    conns: list[socket.socket] = []
    try:
        while pending and time.monotonic() < deadline:
            if all(not procs[a].is_alive() for a in pending):
                break  # the agents that never dialed in are already dead
            try:
                conn, _addr = listener.accept()
            except socket.timeout:
                continue
            conns.append(conn)
            conn.settimeout(max(1.0, deadline - time.monotonic()))
            try:
                hello = recv_message(conn)
            except OSError:
                continue
            if not hello or hello.get("status") != "ready":
                continue
            agent_id = hello.get("agent_id")
            if agent_id not in by_id:
                continue
            send_message(conn, by_id[agent_id])

            # replies arrive on the same connection; read in a thread so
            # slow agents do not serialize each other
            def wait_reply(conn=conn, agent_id=agent_id):
                try:
                    reply = recv_message(conn)
                except (OSError, AgentFailure):
                    reply = None
                if reply is not None:
                    replies[agent_id] = reply

            t = threading.Thread(target=wait_reply, daemon=True)
            t.start()
            reply_threads.append(t)
            pending.discard(agent_id)
        for t in reply_threads:
            t.join(timeout=max(0.1, deadline - time.monotonic()))
        for proc in procs.values():
            proc.join(timeout=max(0.1, deadline - time.monotonic()))
            if proc.is_alive():
                proc.terminate()
                proc.join(timeout=5)
    finally:
        listener.close()
        for conn in conns:
            try:
                conn.close()
            except OSError:
                pass
    return replies


def run_agents(
    seeds_path: str,
    config: CrawlConfig,
    endpoint: str,
    merged_out: str,
    *,
    agents: int | None = None,
    sessions: int | None = None,
    in_process: bool = False,
    timeout_s: float = 600.0,
) -> tuple[CrawlSummary, list[AgentAssignment]]:
    """Partition seeds, run the agents, merge shards into ``merged_out``.

    Returns the aggregated summary and the assignments used. Raises
    AgentFailure only when every agent fails; partial failures are
    reported via summary.agent_failures / summary.unprocessed_seeds.
    """
    seeds = parse_seed_file(seeds_path)
    n_agents = agents if agents is not None else config.agents
    n_sessions = sessions if sessions is not None else config.sessions_per_agent
    assignments = partition_seeds(len(seeds), n_agents)
    base = os.path.abspath(merged_out)
    for a in assignments:
        a.sessions = n_sessions
        a.shard_path = f"{base}.shard{a.agent_id}.csv"
        if os.path.exists(a.shard_path):
            os.remove(a.shard_path)  # shards append; stale rows must not leak

    work = [
        _start_message(a, config, os.path.abspath(seeds_path), endpoint)
        for a in assignments
        if a.seed_indices
    ]
    if in_process:
        replies = _collect_in_process(work)
    else:
        replies = _collect_processes(work, timeout_s)

    total = CrawlSummary()
    survivors: list[AgentAssignment] = []
    for a in assignments:
        if not a.seed_indices:
            continue
        reply = replies.get(a.agent_id)
        if reply is None or reply.get("status") != "done":
            reason = (reply or {}).get("error", "no reply from agent")
            log.warning("agent %d failed: %s", a.agent_id, reason)
            total.agent_failures.append({"agent_id": a.agent_id, "error": reason})
            total.unprocessed_seeds.extend(a.seed_indices)
            continue
        total.merge(CrawlSummary.from_dict(reply["summary"]))
        survivors.append(a)

    if work and not survivors:
        raise AgentFailure(-1, "every agent failed; nothing to merge")
    _merge_shards([a.shard_path for a in survivors], merged_out)
    return total, assignments
