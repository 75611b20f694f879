"""Command-line interface.

One subcommand per stage (generate, serve, crawl, coordinate, normalize,
verify, load, filter, stats) plus ``demo``, which runs the whole chain
against an in-process fixture server. Every run that produces a primary
output also writes ``<output>.manifest.json`` describing what ran, with
which options, reading and writing which files.

Exit codes: 0 on success, 1 on any reported failure (one
``ERROR <CATEGORY>: <message>`` line on stderr), 2 for command-line usage
errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field, replace

from .config_io import (
    CrawlConfig,
    dump_config,
    parse_config,
    parse_seed_file,
)
from .coordinator import run_agents
from .crawl import crawl
from .errors import CrawlerError, MissingFile
from .fixture.network import (
    METRO_CITIES,
    FixtureNetwork,
    choose_fault_profiles,
    expected_secret,
    generate_network,
    write_ground_truth,
)
from .fixture.server import FixtureService, serve
from .pipeline import (
    RecordStore,
    VerificationPolicy,
    behavior_summary,
    emit_reextract_list,
    filter_by_city,
    normalize_raw,
    read_posts_csv,
    read_profiles_csv,
    verify_records,
    write_posts_csv,
    write_profiles_csv,
)


@dataclass
class RunManifest:
    subcommand: str
    options: dict = field(default_factory=dict)
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    primary_output: str | None = None
    exit_code: int = 0
    error: str | None = None
    duration_s: float = 0.0

    def add_input(self, path: str) -> str:
        path = os.path.abspath(path)
        if path not in self.inputs:
            self.inputs.append(path)
        return path

    def add_output(self, path: str, primary: bool = False) -> str:
        path = os.path.abspath(path)
        if path not in self.outputs:
            self.outputs.append(path)
        if primary:
            self.primary_output = path
        return path

    def write(self) -> None:
        if self.primary_output is None:
            return
        blob = {
            "subcommand": self.subcommand,
            "options": self.options,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "primary_output": self.primary_output,
            "exit_code": self.exit_code,
            "error": self.error,
            "duration_s": round(self.duration_s, 3),
        }
        _write_json(self.primary_output + ".manifest.json", blob)


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


def run_cli(argv: list[str]) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    manifest = RunManifest(
        subcommand=args.subcommand,
        options={k: v for k, v in sorted(vars(args).items())
                 if k not in ("subcommand", "handler")},
    )
    started = time.monotonic()
    try:
        args.handler(args, manifest)
    except CrawlerError as exc:
        print(f"ERROR {exc.category}: {exc}", file=sys.stderr)
        manifest.exit_code = 1
        manifest.error = f"{exc.category}: {exc}"
    finally:
        manifest.duration_s = time.monotonic() - started
        try:
            manifest.write()
        except OSError as exc:  # manifest trouble must not mask the outcome
            print(f"manifest not written: {exc}", file=sys.stderr)
    return manifest.exit_code


# --- subcommand handlers -------------------------------------------------------

def _cmd_generate(args: argparse.Namespace, manifest: RunManifest) -> None:
    network = generate_network(
        args.n,
        args.mean_degree,
        disclosure_rate=args.disclosure_rate,
        posts_per_profile_range=(args.posts_min, args.posts_max),
        rng_seed=args.seed,
    )
    out = manifest.add_output(args.out, primary=True)
    network.save(out)
    print(f"network: {args.n} profiles, {network.edge_count()} edges -> {out}")
    if args.truth_dir:
        for path in write_ground_truth(network, args.truth_dir).values():
            manifest.add_output(path)
        print(f"ground truth -> {os.path.abspath(args.truth_dir)}")
    if args.seeds_out:
        ids = _top_degree_ids(network, args.n_seeds)
        path = manifest.add_output(args.seeds_out)
        _write_seed_csv(path, ids)
        print(f"seeds: {','.join(ids)} -> {path}")


def _cmd_serve(args: argparse.Namespace, manifest: RunManifest) -> None:
    network = _load_network(args.network, manifest)
    service = serve(network, args.bind, page_size=args.page_size,
                    truth_enabled=not args.no_truth)
    if args.fault_rate > 0:
        faults = choose_fault_profiles(network, args.fault_rate, args.fault_seed)
        service.set_fault_profiles(faults)
        print(f"truncating About pages for {len(faults)} profiles", flush=True)
    print(f"serving {len(network.profiles)} profiles at {service.base_url}", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()


def _cmd_crawl(args: argparse.Namespace, manifest: RunManifest) -> None:
    seeds_path = manifest.add_input(args.seeds)
    config = parse_config(manifest.add_input(args.config))
    manifest.add_output(config.output_path, primary=True)
    seeds = parse_seed_file(seeds_path)
    summary = crawl(seeds, config, args.endpoint)
    _write_json(manifest.add_output(config.output_path + ".summary.json"),
                summary.to_dict())
    print(f"captured {summary.profiles_captured} profiles, "
          f"{summary.posts_captured} posts -> {config.output_path}")


def _cmd_coordinate(args: argparse.Namespace, manifest: RunManifest) -> None:
    seeds_path = manifest.add_input(args.seeds)
    config = parse_config(manifest.add_input(args.config))
    merged = manifest.add_output(args.merged, primary=True)
    summary, _assignments = run_agents(
        seeds_path, config, args.endpoint, merged,
        agents=args.agents, sessions=args.sessions,
        in_process=args.in_process, timeout_s=args.timeout,
    )
    _write_json(manifest.add_output(merged + ".summary.json"), summary.to_dict())
    for failure in summary.agent_failures:
        print(f"agent {failure.get('agent_id')} failed: {failure.get('error')}",
              file=sys.stderr)
    if summary.unprocessed_seeds:
        print(f"unprocessed seeds: {summary.unprocessed_seeds}", file=sys.stderr)
    print(f"captured {summary.profiles_captured} profiles, "
          f"{summary.posts_captured} posts -> {merged}")


def _cmd_normalize(args: argparse.Namespace, manifest: RunManifest) -> None:
    raw_path = manifest.add_input(args.raw)
    profiles_path = manifest.add_output(
        os.path.join(args.out_dir, "profiles.csv"), primary=True)
    posts_path = manifest.add_output(os.path.join(args.out_dir, "posts.csv"))
    result = normalize_raw(raw_path)
    write_profiles_csv(profiles_path, result.profiles)
    write_posts_csv(posts_path, result.posts)
    report = {
        "rows_total": result.rows_total,
        "rows_consumed": result.rows_consumed,
        "rows_skipped": result.rows_skipped,
        "skipped": [{"line": no, "reason": why} for no, why in result.skipped],
        "profiles": len(result.profiles),
        "posts": len(result.posts),
    }
    _write_json(manifest.add_output(os.path.join(args.out_dir, "normalize_report.json")),
                report)
    print(f"normalized {result.rows_total} raw rows into "
          f"{len(result.profiles)} profile and {len(result.posts)} post records "
          f"({result.rows_skipped} rows skipped)")


def _cmd_verify(args: argparse.Namespace, manifest: RunManifest) -> None:
    profiles = read_profiles_csv(manifest.add_input(args.profiles))
    posts = read_posts_csv(manifest.add_input(args.posts))
    reports = verify_records(profiles, posts, VerificationPolicy(args.total_post))
    junk = emit_reextract_list(reports, manifest.add_output(args.reextract_out))
    ok = sum(1 for r in reports if r.verdict == "ok")
    _write_json(manifest.add_output(args.report, primary=True), {
        "captures": len(reports),
        "ok": ok,
        "junk": len(reports) - ok,
        "reports": [r.to_dict() for r in reports],
    })
    print(f"verified {len(reports)} captures: {ok} ok, {len(reports) - ok} junk; "
          f"{len(junk)} profiles listed for re-extraction")


def _cmd_load(args: argparse.Namespace, manifest: RunManifest) -> None:
    profiles = read_profiles_csv(manifest.add_input(args.profiles))
    posts = read_posts_csv(manifest.add_input(args.posts))
    db_path = manifest.add_output(args.db, primary=True)
    store = RecordStore.load(db_path) if os.path.exists(db_path) else RecordStore()
    stats = store.add_all(profiles, posts)
    store.save(db_path)
    print(f"store {db_path}: {stats.inserted} inserted, "
          f"{stats.duplicates} duplicates ({stats.conflicts} conflicting), "
          f"now {len(store.profiles)} profiles / {len(store.posts)} posts")


def _cmd_filter(args: argparse.Namespace, manifest: RunManifest) -> None:
    store = RecordStore.load(manifest.add_input(args.db))
    matched: dict[str, object] = {}
    for city in args.city:
        for prof in filter_by_city(store, city):
            matched[prof.profile_id] = prof
    records = [matched[k] for k in sorted(matched)]
    out = manifest.add_output(args.out, primary=True)
    write_profiles_csv(out, records)
    print(f"{len(records)} of {len(store.profiles)} profiles in "
          f"{'/'.join(args.city)} -> {out}")


def _cmd_stats(args: argparse.Namespace, manifest: RunManifest) -> None:
    store = RecordStore.load(manifest.add_input(args.db))
    summary = behavior_summary(store)
    out = manifest.add_output(args.out, primary=True)
    _write_json(out, summary.to_dict())
    print(f"summary over {summary.population} profiles, "
          f"{summary.post_count} posts -> {out}")


def _cmd_demo(args: argparse.Namespace, manifest: RunManifest) -> None:
    out_dir = os.path.abspath(args.out_dir)
    os.makedirs(out_dir, exist_ok=True)

    network = generate_network(args.n, args.mean_degree, rng_seed=args.seed)
    network.save(manifest.add_output(os.path.join(out_dir, "network.bin")))
    for path in write_ground_truth(network, os.path.join(out_dir, "truth")).values():
        manifest.add_output(path)
    seed_ids = _top_degree_ids(network, 3)
    seeds_path = manifest.add_output(os.path.join(out_dir, "seeds.csv"))
    _write_seed_csv(seeds_path, seed_ids)
    print(f"demo network: {args.n} profiles, {network.edge_count()} edges; "
          f"seeds {','.join(seed_ids)}")

    service = FixtureService(network, port=0, page_size=args.page_size).start()
    try:
        if args.fault_rate > 0:
            faults = choose_fault_profiles(network, args.fault_rate, args.seed)
            service.set_fault_profiles(faults)
            print(f"injected truncation faults on {len(faults)} profiles")

        config = CrawlConfig(
            friend_links_path=os.path.join(out_dir, "friend_links.txt"),
            output_path=os.path.join(out_dir, "raw.csv"),
            total_post=args.total_post,
            depth=args.depth,
            agents=args.agents,
            sessions_per_agent=args.sessions,
            min_delay_ms=0,
            max_delay_ms=0,
        )
        with open(os.path.join(out_dir, "crawl.cfg"), "w", encoding="utf-8") as fh:
            fh.write(dump_config(config))
        manifest.add_output(os.path.join(out_dir, "crawl.cfg"))

        summary, _ = run_agents(
            seeds_path, config, service.base_url, config.output_path,
            agents=args.agents, sessions=args.sessions, in_process=True,
        )
        manifest.add_output(config.output_path)
        print(f"crawl: {summary.profiles_captured} profile captures, "
              f"{summary.posts_captured} posts")

        result = normalize_raw(config.output_path)
        norm_dir = os.path.join(out_dir, "normalized")
        write_profiles_csv(os.path.join(norm_dir, "profiles.csv"), result.profiles)
        write_posts_csv(os.path.join(norm_dir, "posts.csv"), result.posts)
        policy = VerificationPolicy(total_post=args.total_post)
        reports = verify_records(result.profiles, result.posts, policy)
        junk_urls = emit_reextract_list(
            reports, manifest.add_output(os.path.join(out_dir, "reextract.txt")))
        _write_json(manifest.add_output(os.path.join(out_dir, "verify_report.json")), {
            "captures": len(reports),
            "ok": sum(1 for r in reports if r.verdict == "ok"),
            "junk": len(junk_urls),
            "reports": [r.to_dict() for r in reports],
        })
        print(f"verify: {len(reports)} captures, {len(junk_urls)} junk profiles")

        store = RecordStore()
        _store_ok_records(store, result, reports)

        if junk_urls:
            service.set_fault_profiles(set())
            retry_config = replace(
                config,
                output_path=os.path.join(out_dir, "raw_reextract.csv"),
                reextract_links_path=os.path.join(out_dir, "reextract.txt"),
                seed_profile_index=1,
                agents=1,
                sessions_per_agent=1,
            )
            crawl(parse_seed_file(seeds_path), retry_config, service.base_url)
            manifest.add_output(retry_config.output_path)
            retry_result = normalize_raw(retry_config.output_path)
            retry_reports = verify_records(
                retry_result.profiles, retry_result.posts, policy)
            still_junk = [r for r in retry_reports if r.verdict == "junk"]
            _store_ok_records(store, retry_result, retry_reports)
            print(f"re-extraction: {len(retry_result.profiles)} captures, "
                  f"{len(still_junk)} still junk")

        db_path = manifest.add_output(os.path.join(out_dir, "store.txt"))
        store.save(db_path)
        print(f"store: {len(store.profiles)} profiles, {len(store.posts)} posts")

        matched: dict[str, object] = {}
        for city in METRO_CITIES:
            for prof in filter_by_city(store, city):
                matched[prof.profile_id] = prof
        filtered = [matched[k] for k in sorted(matched)]
        write_profiles_csv(
            manifest.add_output(os.path.join(out_dir, "filtered.csv")), filtered)
        print(f"filter: {len(filtered)} metro-city residents")

        summary_stats = behavior_summary(store)
        stats_path = manifest.add_output(os.path.join(out_dir, "stats.json"),
                                         primary=True)
        _write_json(stats_path, summary_stats.to_dict())
        print(f"stats -> {stats_path}")
    finally:
        service.stop()


def _store_ok_records(store: RecordStore, result, reports) -> None:
    """Insert only the records of captures every check passed."""
    ok_captures = {(r.profile_id, prof.seed_index)
                   for r, prof in zip(reports, result.profiles)
                   if r.verdict == "ok"}
    store.add_all(
        [p for p in result.profiles if (p.profile_id, p.seed_index) in ok_captures],
        [p for p in result.posts if (p.profile_id, p.seed_index) in ok_captures],
    )


# --- argument parsing ----------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imcrawler",
        description="Offline-verifiable crawler for the synthetic social fixture.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="generate a fixture network")
    p.add_argument("--n", type=int, required=True, help="number of profiles")
    p.add_argument("--mean-degree", type=float, default=12.0)
    p.add_argument("--seed", type=int, default=0, help="generation seed")
    p.add_argument("--out", required=True, help="network file to write")
    p.add_argument("--disclosure-rate", type=float, default=0.7)
    p.add_argument("--posts-min", type=int, default=0)
    p.add_argument("--posts-max", type=int, default=8)
    p.add_argument("--truth-dir", help="also write ground-truth CSVs here")
    p.add_argument("--seeds-out", help="also write a seed CSV of top-degree profiles")
    p.add_argument("--n-seeds", type=int, default=3)
    p.set_defaults(handler=_cmd_generate)

    p = sub.add_parser("serve", help="serve a generated network over HTTP")
    p.add_argument("--network", required=True)
    p.add_argument("--bind", default="127.0.0.1:8480")
    p.add_argument("--page-size", type=int, default=20)
    p.add_argument("--no-truth", action="store_true",
                   help="disable the /truth endpoints")
    p.add_argument("--fault-rate", type=float, default=0.0,
                   help="fraction of profiles with truncated About pages")
    p.add_argument("--fault-seed", type=int, default=0)
    p.set_defaults(handler=_cmd_serve)

    p = sub.add_parser("crawl", help="run one agent over a seed file")
    p.add_argument("--seeds", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--endpoint", required=True)
    p.set_defaults(handler=_cmd_crawl)

    p = sub.add_parser("coordinate", help="run multiple agents and merge shards")
    p.add_argument("--seeds", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--endpoint", required=True)
    p.add_argument("--merged", required=True, help="merged raw capture CSV")
    p.add_argument("--agents", type=int, default=None)
    p.add_argument("--sessions", type=int, default=None)
    p.add_argument("--in-process", action="store_true",
                   help="run agents as threads instead of processes")
    p.add_argument("--timeout", type=float, default=600.0)
    p.set_defaults(handler=_cmd_coordinate)

    p = sub.add_parser("normalize", help="turn raw captures into records")
    p.add_argument("--raw", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(handler=_cmd_normalize)

    p = sub.add_parser("verify", help="check records and list junk for re-extraction")
    p.add_argument("--profiles", required=True)
    p.add_argument("--posts", required=True)
    p.add_argument("--report", required=True, help="verification report JSON")
    p.add_argument("--reextract-out", required=True)
    p.add_argument("--total-post", type=int, default=None)
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("load", help="insert records into a deduplicating store")
    p.add_argument("--profiles", required=True)
    p.add_argument("--posts", required=True)
    p.add_argument("--db", required=True)
    p.set_defaults(handler=_cmd_load)

    p = sub.add_parser("filter", help="select profiles by disclosed current city")
    p.add_argument("--db", required=True)
    p.add_argument("--city", action="append", required=True,
                   help="city name; repeat for several")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_filter)

    p = sub.add_parser("stats", help="summarize disclosure and posting behavior")
    p.add_argument("--db", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_stats)

    p = sub.add_parser("demo", help="run the full chain against a local fixture")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--mean-degree", type=float, default=12.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--fault-rate", type=float, default=0.0)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--total-post", type=int, default=25)
    p.add_argument("--agents", type=int, default=2)
    p.add_argument("--sessions", type=int, default=2)
    p.add_argument("--page-size", type=int, default=20)
    p.set_defaults(handler=_cmd_demo)

    return parser


# --- helpers -------------------------------------------------------------------

def _write_json(path: str, blob: dict) -> str:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _load_network(path: str, manifest: RunManifest) -> FixtureNetwork:
    manifest.add_input(path)
    try:
        return FixtureNetwork.load(path)
    except FileNotFoundError:
        raise MissingFile(path) from None


def _top_degree_ids(network: FixtureNetwork, k: int) -> list[str]:
    """The k best-connected profile ids, ties broken toward lower ids."""
    def rank(pid: str) -> tuple[int, int]:
        return (-len(network.friends(pid)), int(pid[1:]))
    return sorted(network.all_ids(), key=rank)[:k]


def _write_seed_csv(path: str, profile_ids: list[str]) -> None:
    lines = [f"{pid},{pid},{expected_secret(pid)}" for pid in profile_ids]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
