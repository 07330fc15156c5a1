"""Command-line interface tying the retrieval pipeline together.

Subcommands: validate a dataset, train a codebook ensemble, generate
ranking tasks, run a full evaluation, and rank a single query against a
chosen corpus. Every command funnels randomness through an explicit
``--seed`` flag, and all JSON outputs use fixed key ordering so identical
invocations produce byte-identical files.

Exit codes: 0 on success, 1 for validation problems (bad flags, malformed
manifests or artifacts, missing files), 2 for runtime failures.
Set DUPVID_LOG=INFO (or DEBUG) for progress logging on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .evaluation import (
    MODES,
    CombinationWeights,
    PairScorer,
    TaskResult,
    build_report,
    evaluate_app,
    generate_tasks,
    needed_components,
    rank_candidates,
)
from .ingest import (
    ArtifactFormatError,
    ManifestError,
    load_dataset,
    load_manifest,
    read_embedding_file,
    validate_dataset,
)
from .sequential import SeqConfig
from .textual import build_document, build_index
from .visual import load_ensemble, save_ensemble, train_ensemble

log = logging.getLogger("dupvid")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


@dataclass(frozen=True)
class RunConfig:
    """Everything an evaluation or ranking run needs, resolved from flags."""

    manifest: Path
    modes: tuple[str, ...]
    w: float
    seed: int
    codebooks: Path | None
    seq_cfg: SeqConfig
    out: Path | None
    jobs: int

    def weights(self) -> dict[str, CombinationWeights]:
        return {mode: CombinationWeights(mode, w=self.w) for mode in self.modes}

    def needs_visual(self) -> bool:
        return any("vis" in needed_components(mode) for mode in self.modes)


def _dump_json(obj: dict, out: Path | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _run_config(args: argparse.Namespace) -> RunConfig:
    modes = tuple(dict.fromkeys(args.mode or ["vis+txt+seq"]))
    return RunConfig(
        manifest=args.manifest,
        modes=modes,
        w=args.w,
        seed=args.seed,
        codebooks=args.codebooks,
        seq_cfg=SeqConfig(
            denominator_variant=args.denominator.replace("-", "_"),
            match_threshold=args.tau,
        ),
        out=args.out,
        jobs=args.jobs,
    )


def _load_ensemble_for(cfg: RunConfig):
    if not cfg.needs_visual():
        return None
    if cfg.codebooks is None:
        raise ValueError(
            f"modes {', '.join(cfg.modes)} need a codebook ensemble; pass --codebooks"
        )
    return load_ensemble(cfg.codebooks)


def cmd_validate(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    for warning in validate_dataset(manifest):
        print(f"warning: {warning}")
    video_count = len(manifest.video_ids())
    print(f"ok: {len(manifest.apps)} apps, {video_count} videos")
    return EXIT_OK


def cmd_train_codebooks(args: argparse.Namespace) -> int:
    paths = sorted(Path(args.corpus).glob("*.dvbe"))
    if not paths:
        raise ValueError(f"no .dvbe files in {args.corpus}")
    log.info("loading %d corpus files from %s", len(paths), args.corpus)
    files = [(p.name, read_embedding_file(p)[0]) for p in paths]
    ensemble = train_ensemble(files, k=args.k, ensemble_size=args.members, seed=args.seed)
    save_ensemble(ensemble, args.out)
    print(
        f"trained {ensemble.size} codebooks (k={args.k}, dim={ensemble.dim}) "
        f"from {len(files)} files -> {args.out}"
    )
    return EXIT_OK


def cmd_gen_tasks(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    app_ids = [args.app] if args.app else [app.app_id for app in manifest.apps]
    tasks = []
    for app_id in app_ids:
        tasks.extend(generate_tasks(manifest, app_id, seed=args.seed))
    obj = {
        "schema": "dupvid-tasks-v1",
        "seed": args.seed,
        "apps": app_ids,
        "tasks": [
            {
                "task_id": t.task_id,
                "app_id": t.app_id,
                "query": t.query,
                "corpus": list(t.corpus),
                "ground_truth": sorted(t.ground_truth),
            }
            for t in tasks
        ],
    }
    _dump_json(obj, args.out)
    if args.out is not None:
        print(f"wrote {len(tasks)} tasks -> {args.out}")
    return EXIT_OK


def _summary_table(report: dict) -> str:
    lines = [
        f"{'mode':<12} {'app':<10} {'mRR':>7} {'mAP':>7} {'tasks':>6}",
        f"{'-' * 12} {'-' * 10} {'-' * 7} {'-' * 7} {'-' * 6}",
    ]
    for block in report["modes"]:
        for app_id in sorted(block["per_app"]):
            m = block["per_app"][app_id]
            lines.append(
                f"{block['mode']:<12} {app_id:<10} {m['mrr']:>7.4f} "
                f"{m['map']:>7.4f} {m['task_count']:>6}"
            )
        overall = block["overall"]
        lines.append(
            f"{block['mode']:<12} {'overall':<10} {overall['mrr']:>7.4f} "
            f"{overall['map']:>7.4f} {overall['task_count']:>6}"
        )
    return "\n".join(lines)


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    manifest = load_manifest(cfg.manifest)
    ensemble = _load_ensemble_for(cfg)
    weights_by_mode = cfg.weights()
    weight_list = list(weights_by_mode.values())

    results_by_mode: dict[str, dict[str, list[TaskResult]]] = {m: {} for m in cfg.modes}
    for app in manifest.apps:
        log.info("evaluating app %s", app.app_id)
        artifacts = load_dataset(manifest, app.app_id)
        tasks = generate_tasks(manifest, app.app_id, seed=cfg.seed)
        by_mode = evaluate_app(
            artifacts, tasks, weight_list, ensemble, cfg.seq_cfg, jobs=cfg.jobs
        )
        for mode, results in by_mode.items():
            results_by_mode[mode][app.app_id] = results

    report = build_report(results_by_mode, weights_by_mode, cfg.seed, cfg.seq_cfg)
    _dump_json(report, cfg.out)
    print(_summary_table(report))
    if cfg.out is not None:
        print(f"report -> {cfg.out}")
    return EXIT_OK


def cmd_rank(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    if len(cfg.modes) != 1:
        raise ValueError("rank takes exactly one --mode")
    mode = cfg.modes[0]
    manifest = load_manifest(cfg.manifest)
    corpus = list(dict.fromkeys(args.corpus))
    if args.query in corpus:
        raise ValueError(f"query {args.query!r} must not appear in the corpus")

    query_app = manifest.find_video(args.query)[0].app_id
    for vid in corpus:
        app_id = manifest.find_video(vid)[0].app_id
        if app_id != query_app:
            raise ValueError(
                f"corpus video {vid!r} belongs to app {app_id!r}, "
                f"but the query is from {query_app!r}"
            )

    ensemble = _load_ensemble_for(cfg)
    artifacts = load_dataset(manifest, query_app)
    components = needed_components(mode)
    text_index = None
    if "txt" in components or "seq_txt" in components:
        text_index = build_index(
            [build_document(artifacts[vid]) for vid in sorted(artifacts)]
        )
    scorer = PairScorer(
        artifacts, components, ensemble=ensemble, text_index=text_index, seq_cfg=cfg.seq_cfg
    )
    ranking = rank_candidates(
        f"rank:{args.query}", args.query, corpus, scorer, CombinationWeights(mode, w=cfg.w)
    )

    for position, (vid, score) in enumerate(ranking.entries, start=1):
        print(f"{position:3d}. {vid:<30} {score:.6f}")
    if cfg.out is not None:
        _dump_json(
            {
                "schema": "dupvid-ranking-v1",
                "query": args.query,
                "mode": mode,
                "entries": [
                    {"video_id": vid, "score": score} for vid, score in ranking.entries
                ],
            },
            cfg.out,
        )
        print(f"ranking -> {cfg.out}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; we reserve 2 for runtime."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--manifest", type=Path, required=True)
    sub.add_argument(
        "--mode",
        action="append",
        choices=MODES,
        help="similarity mode; repeat for several (default: vis+txt+seq)",
    )
    sub.add_argument("--w", type=float, default=0.1, help="textual weight for vis+txt")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--codebooks", type=Path, help="directory of a saved ensemble")
    sub.add_argument(
        "--denominator", choices=["literal", "end-aligned"], default="literal"
    )
    sub.add_argument("--tau", type=float, default=0.0, help="sequence match threshold")
    sub.add_argument("--out", type=Path)
    sub.add_argument(
        "--jobs", type=int, default=os.cpu_count() or 1, help="worker threads"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dupvid", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    p_validate = commands.add_parser("validate", help="check a dataset end to end")
    p_validate.add_argument("--manifest", type=Path, required=True)
    p_validate.set_defaults(func=cmd_validate)

    p_train = commands.add_parser("train-codebooks", help="train a codebook ensemble")
    p_train.add_argument("--corpus", type=Path, required=True, help="directory of .dvbe files")
    p_train.add_argument("--k", type=int, default=1000)
    p_train.add_argument("--members", type=int, default=4)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", type=Path, required=True)
    p_train.set_defaults(func=cmd_train_codebooks)

    p_tasks = commands.add_parser("gen-tasks", help="generate ranking tasks as JSON")
    p_tasks.add_argument("--manifest", type=Path, required=True)
    p_tasks.add_argument("--app", help="app id (default: every app)")
    p_tasks.add_argument("--seed", type=int, default=0)
    p_tasks.add_argument("--out", type=Path)
    p_tasks.set_defaults(func=cmd_gen_tasks)

    p_eval = commands.add_parser("evaluate", help="run the full benchmark")
    _add_run_flags(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_rank = commands.add_parser("rank", help="rank one query against chosen videos")
    _add_run_flags(p_rank)
    p_rank.add_argument("--query", required=True)
    p_rank.add_argument(
        "--corpus", action="append", required=True, help="candidate video id; repeatable"
    )
    p_rank.set_defaults(func=cmd_rank)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse help/usage exits; keep main() returning int
        return int(exc.code or 0)
    level_name = os.environ.get("DUPVID_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ManifestError, ArtifactFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
