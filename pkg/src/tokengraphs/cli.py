"""Command-line pipeline runner.

Every subcommand resolves its full configuration, writes it to a JSON
manifest next to its primary output, and is deterministic given that
manifest: ``tokengraphs replay MANIFEST`` reproduces the run byte for byte.

Exit codes: 0 success, 2 input/configuration errors, 3 operational failures
(unreachable endpoints and the like).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import requests

from . import __version__
from .dataset import (DEFAULT_MIN_NODES, LabelConflictError, LabelParseError,
                      join, load_labels)
from .evaluation import (UndefinedAUCError, VariantMismatchError,
                         evaluate_model, kfold_cv, unlabeled_scan,
                         write_report, write_roc, write_scan_report,
                         write_window_reports)
from .features import (VARIANTS, extract_features, histogram_bins,
                       read_feature_table, write_feature_table,
                       write_histograms)
from .graphs import build_graphs, export_graphs
from .ingest import (DEFAULT_WINDOW_WIDTH, ENDPOINT_ENV_VAR, BlockWindow,
                     FetchError, FixtureParseError, decode_logs, fetch_logs,
                     format_fixture_line, iter_window_groups,
                     partition_windows, read_fixture)
from .model import (FeatureMismatchError, ModelFormatError, TrainConfig,
                    TrainingError, load_model, save_model, train)
from .synth import CorpusProfile, ScanProfile, gen_corpus, gen_scan_corpus

MANIFEST_FORMAT = 1

_INPUT_ERRORS = (
    FixtureParseError, LabelParseError, LabelConflictError, ModelFormatError,
    FeatureMismatchError, VariantMismatchError, TrainingError,
    UndefinedAUCError, ValueError, FileNotFoundError, IsADirectoryError,
)
_RUNTIME_ERRORS = (FetchError, requests.RequestException)


def _write_manifest(path: str, command: str, config: dict) -> None:
    payload = {"format": MANIFEST_FORMAT, "command": command, "config": config}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _manifest_path(args: argparse.Namespace, primary_output: str) -> str:
    if getattr(args, "manifest", None):
        return args.manifest
    return primary_output + ".manifest.json"


def _config_from_args(args: argparse.Namespace) -> dict:
    skip = {"func", "command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(lam=args.lam, learning_rate=args.learning_rate,
                       max_iters=args.max_iters, tolerance=args.tolerance,
                       seed=args.seed, log_amount=args.log_amount)


def _resolve_endpoint(args: argparse.Namespace) -> str:
    endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV_VAR)
    if not endpoint:
        raise ValueError(
            f"no JSON-RPC endpoint: pass --endpoint or set {ENDPOINT_ENV_VAR}")
    return endpoint


# ---------------------------------------------------------------------------
# subcommands

def cmd_fetch(args: argparse.Namespace) -> int:
    endpoint = _resolve_endpoint(args)
    if args.start > args.end:
        raise ValueError("fetch range start must be <= end")
    window = BlockWindow(args.start, args.end)
    manifest_path = _manifest_path(args, args.out)

    completed_through = window.start
    if args.resume and os.path.exists(manifest_path):
        with open(manifest_path, "r", encoding="utf-8") as handle:
            previous = json.load(handle)
        state = previous.get("state", {})
        completed_through = int(state.get("completed_through", window.start))
        print(f"resuming at block {completed_through}", file=sys.stderr)

    config = _config_from_args(args)
    mode = "a" if args.resume and completed_through > window.start else "w"
    count = 0
    state = {"completed_through": completed_through, "finished": False}

    def write_state() -> None:
        payload = {"format": MANIFEST_FORMAT, "command": "fetch",
                   "config": config, "state": state}
        with open(manifest_path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")

    write_state()
    buffered: list[str] = []

    with open(args.out, mode, encoding="utf-8") as out:
        def flush_chunk(chunk_start: int, chunk_end: int) -> None:
            nonlocal count
            if buffered:
                out.write("\n".join(buffered) + "\n")
                out.flush()
                count += len(buffered)
                buffered.clear()
            state["completed_through"] = chunk_end
            write_state()

        remaining = BlockWindow(completed_through, window.end)
        if remaining.width > 0:
            stream = fetch_logs(endpoint, remaining, chunk=args.chunk,
                                timeout=args.rpc_timeout, retries=args.rpc_retries,
                                backoff_base=args.rpc_backoff,
                                on_chunk_done=flush_chunk)
            for event in decode_logs(stream):
                buffered.append(format_fixture_line(event))

    state["finished"] = True
    write_state()
    print(f"wrote {count} transfers to {args.out}")
    return 0


def _feature_rows(fixture: str, width: int, export_dir: str | None = None):
    """One feature row per (token, window); graphs are released as windows close."""
    rows = []
    exported = 0

    def consume(window, events) -> None:
        nonlocal exported
        graphs = build_graphs(events, window)
        rows.extend(extract_features(g) for g in graphs.values())
        if export_dir:
            exported += export_graphs(graphs.values(), export_dir)

    try:
        for window, events in iter_window_groups(read_fixture(fixture), width):
            consume(window, events)
    except ValueError:
        # interleaved windows: fall back to the two-pass grouping
        rows, exported = [], 0
        for window, events in partition_windows(read_fixture(fixture), width).items():
            consume(window, events)
    rows.sort(key=lambda fv: (fv.window.start, fv.token))
    return rows, exported


def cmd_features(args: argparse.Namespace) -> int:
    rows, exported = _feature_rows(args.fixture, args.window_width,
                                   args.export_graphs)
    count = write_feature_table(rows, args.out)
    if args.export_graphs:
        print(f"exported {exported} edge lists to {args.export_graphs}")
    if args.histogram_out:
        write_histograms(histogram_bins(rows), args.histogram_out)
    _write_manifest(_manifest_path(args, args.out), "features",
                    _config_from_args(args))
    print(f"wrote {count} feature rows to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    vectors = read_feature_table(args.features)
    labels = load_labels(args.labels)
    dataset = join(vectors, labels, args.min_nodes)
    model = train(dataset, _train_config(args), args.variant)
    save_model(model, args.model_out)
    _write_manifest(_manifest_path(args, args.model_out), "train",
                    _config_from_args(args))
    print(f"trained {args.variant} model on {len(dataset)} rows "
          f"({model.iterations} iterations, final loss {model.final_loss:.6f})")
    if dataset.unlabeled:
        print(f"warning: {len(dataset.unlabeled)} over-threshold tokens had no "
              f"label and were excluded", file=sys.stderr)
    return 0


def cmd_cv(args: argparse.Namespace) -> int:
    vectors = read_feature_table(args.features)
    labels = load_labels(args.labels)
    dataset = join(vectors, labels, args.min_nodes)
    report = kfold_cv(dataset, k=args.k, seed=args.seed,
                      config=_train_config(args), variant=args.variant)
    write_report(report, args.out)
    if args.roc_out:
        for fold in report.breakdown:
            write_roc(fold.roc, f"{args.roc_out}_{fold.label}.csv")
    _write_manifest(_manifest_path(args, args.out), "cv", _config_from_args(args))
    print(f"{args.k}-fold cv on {len(dataset)} rows: "
          f"accuracy={report.accuracy:.4f} precision={report.precision:.4f} "
          f"recall={report.recall:.4f} f1={report.f1:.4f} auc={report.auc:.4f}")
    return 0


def cmd_crosseval(args: argparse.Namespace) -> int:
    train_vectors = read_feature_table(args.train_features)
    train_labels = load_labels(args.train_labels)
    train_set = join(train_vectors, train_labels, args.min_nodes)

    model = train(train_set, _train_config(args), args.variant)
    reports = []
    for features_path, labels_path in args.eval:
        name = os.path.basename(features_path)
        eval_set = join(read_feature_table(features_path),
                        load_labels(labels_path), args.min_nodes)
        if not eval_set.rows:
            print(f"warning: {name} has no labeled rows, skipped", file=sys.stderr)
            continue
        try:
            reports.append(evaluate_model(model, eval_set, label=name))
        except UndefinedAUCError:
            print(f"warning: {name} has a single class, skipped", file=sys.stderr)
    write_window_reports(reports, args.out)
    if args.roc_out:
        for report in reports:
            write_roc(report.roc, f"{args.roc_out}_{report.label}.csv")
    _write_manifest(_manifest_path(args, args.out), "crosseval",
                    _config_from_args(args))
    for report in reports:
        print(f"{report.label}: accuracy={report.accuracy:.4f} "
              f"precision={report.precision:.4f} recall={report.recall:.4f} "
              f"f1={report.f1:.4f} auc={report.auc:.4f}")
    return 0


def cmd_scan(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    vectors = read_feature_table(args.features)
    report = unlabeled_scan(model, vectors, max_nodes=args.max_nodes)
    write_scan_report(report, args.out)
    _write_manifest(_manifest_path(args, args.out), "scan", _config_from_args(args))
    print(f"scanned {report.total} small graphs: "
          f"{report.predicted_scam} predicted scams ({report.scam_share:.1%}); "
          f">100 nodes {report.share_over_100_nodes:.1%}; "
          f"lifetime<1000 {report.share_lifetime_under_1000:.1%}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    windows = [
        BlockWindow(args.window_start + i * args.window_width,
                    args.window_start + (i + 1) * args.window_width)
        for i in range(args.n_windows)
    ]
    fixture = os.path.join(args.out_dir, "fixture.tsv")
    manifest_path = os.path.join(args.out_dir, "manifest.json")
    if args.kind == "training":
        labels = os.path.join(args.out_dir, "labels.csv")
        corpus = gen_corpus(args.n_tokens, args.scam_fraction, windows,
                            fixture, labels, profile=CorpusProfile(),
                            seed=args.seed)
    else:
        corpus = gen_scan_corpus(args.n_tokens, windows[0], fixture,
                                 profile=ScanProfile(), seed=args.seed)
    payload = {"format": MANIFEST_FORMAT, "command": "synth",
               "config": _config_from_args(args), "corpus": corpus}
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(f"generated {corpus['total_events']} events for {args.n_tokens} tokens "
          f"x {len(windows)} window(s) in {args.out_dir}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    with open(args.manifest, "r", encoding="utf-8") as handle:
        manifest = json.load(handle)
    command = manifest.get("command")
    if command not in _DISPATCH or command == "replay":
        raise ValueError(f"manifest does not name a replayable command: {command!r}")
    config = dict(manifest["config"])
    for override in args.set or []:
        key, _, value = override.partition("=")
        if key not in config:
            raise ValueError(f"unknown config key in --set: {key!r}")
        current = config[key]
        if isinstance(current, bool):
            config[key] = value.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            config[key] = int(value)
        elif isinstance(current, float):
            config[key] = float(value)
        else:
            config[key] = value
    replay_args = argparse.Namespace(command=command, **config)
    return _DISPATCH[command](replay_args)


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tokengraphs",
        description="ERC-20 transfer graph analytics and scam-token classification",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")

    hyper = argparse.ArgumentParser(add_help=False)
    hyper.add_argument("--lambda", dest="lam", type=float, default=1.0,
                       help="L2 strength (default 1.0)")
    hyper.add_argument("--learning-rate", type=float, default=0.1)
    hyper.add_argument("--max-iters", type=int, default=10_000)
    hyper.add_argument("--tolerance", type=float, default=1e-7)
    hyper.add_argument("--min-nodes", type=int, default=DEFAULT_MIN_NODES,
                       help="strict node threshold for labeled rows (default 500)")
    hyper.add_argument("--variant", choices=sorted(VARIANTS), default="full")
    hyper.add_argument("--log-amount", action="store_true",
                       help="model amount as log10(1+x) instead of raw")

    p = sub.add_parser("fetch", parents=[common],
                       help="fetch Transfer logs into a fixture file")
    p.add_argument("--start", type=int, required=True, help="first block (inclusive)")
    p.add_argument("--end", type=int, required=True, help="last block (exclusive)")
    p.add_argument("--chunk", type=int, default=2_000)
    p.add_argument("--out", required=True)
    p.add_argument("--endpoint", help=f"JSON-RPC URL (default ${ENDPOINT_ENV_VAR})")
    p.add_argument("--resume", action="store_true",
                   help="continue from the manifest's last completed chunk")
    p.add_argument("--rpc-timeout", type=float, default=30.0)
    p.add_argument("--rpc-retries", type=int, default=3)
    p.add_argument("--rpc-backoff", type=float, default=0.5)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("features", parents=[common],
                       help="fixture -> per-(token, window) feature table")
    p.add_argument("--fixture", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window-width", type=int, default=DEFAULT_WINDOW_WIDTH)
    p.add_argument("--export-graphs", metavar="DIR",
                   help="also write one edge-list file per graph")
    p.add_argument("--histogram-out", metavar="CSV",
                   help="also write per-feature histogram bins")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", parents=[common, hyper],
                       help="join features with labels and fit the classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--model-out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", parents=[common, hyper],
                       help="stratified k-fold cross-validation report")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--roc-out", metavar="PREFIX",
                   help="write per-fold ROC point files <PREFIX>_<fold>.csv")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("crosseval", parents=[common, hyper],
                       help="train on one window, evaluate on others")
    p.add_argument("--train-features", required=True)
    p.add_argument("--train-labels", required=True)
    p.add_argument("--eval", nargs=2, action="append", required=True,
                   metavar=("FEATURES", "LABELS"))
    p.add_argument("--out", required=True)
    p.add_argument("--roc-out", metavar="PREFIX")
    p.set_defaults(func=cmd_crosseval)

    p = sub.add_parser("scan", parents=[common],
                       help="score sub-threshold graphs with a reduced model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-nodes", type=int, default=DEFAULT_MIN_NODES)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a seeded synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--kind", choices=("training", "scan"), default="training")
    p.add_argument("--n-tokens", type=int, default=926)
    p.add_argument("--scam-fraction", type=float, default=0.353)
    p.add_argument("--n-windows", type=int, default=1)
    p.add_argument("--window-start", type=int, default=18_000_000)
    p.add_argument("--window-width", type=int, default=DEFAULT_WINDOW_WIDTH)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a recorded config value")
    p.set_defaults(func=cmd_replay)

    return parser


_DISPATCH = {
    "fetch": cmd_fetch,
    "features": cmd_features,
    "train": cmd_train,
    "cv": cmd_cv,
    "crosseval": cmd_crosseval,
    "scan": cmd_scan,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
