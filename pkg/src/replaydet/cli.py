"""Command-line entry point: ``replaydet <subcommand> [options]``.

Global options (``--config``, ``--manifest``, ``--out``, ``--seed``,
``--force``, ``--jobs``) are accepted before or after the subcommand.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

from .errors import ReplayDetError
from .pipeline import stages
from .pipeline.config import DESK_PROFILE, FULL_PROFILE, RunConfig, dump_config, load_config
from .pipeline.manifest import Manifest, from_asvspoof2017, load_manifest, save_manifest
from .pipeline.synth import DEFAULT_SEVERITY, synth_corpus

log = logging.getLogger("replaydet")

PROFILES = {"full": FULL_PROFILE, "desk": DESK_PROFILE}

# (tag, --systems value) for the three experiments
EXPERIMENTS = (("exp1_arm1", "arm1"), ("exp2_arm2", "arm2"), ("exp3_all", "all"))


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # subparser copies use SUPPRESS so they only override when actually given
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", default=d("full"), help="config file, or a profile name: full, desk")
    parser.add_argument("--manifest", default=d(None), help="manifest TSV (default: <out>/manifest.tsv)")
    parser.add_argument("--out", default=d("."), help="run directory for all artifacts")
    parser.add_argument("--seed", type=int, default=d(None), help="override the config seed")
    parser.add_argument("--force", action="store_true", default=d(False), help="recompute existing outputs")
    parser.add_argument("--jobs", type=int, default=d(1), help="worker processes for extract/score")
    parser.add_argument("-v", "--verbose", action="count", default=d(0))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="replaydet", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-corpus", parents=[common], help="write a synthetic genuine/replay corpus")
    p.add_argument("--size", type=int, default=200)
    p.add_argument("--severity", type=float, default=DEFAULT_SEVERITY, help="replay channel severity")

    p = sub.add_parser("import-protocol", parents=[common], help="convert an ASVspoof 2017 protocol file")
    p.add_argument("protocol")
    p.add_argument("wav_dir")
    p.add_argument("--subset", required=True, choices=("train", "dev", "eval"))
    p.add_argument("--append", action="store_true", help="merge into an existing manifest")

    sub.add_parser("extract", parents=[common], help="extract features for every manifest entry")

    p = sub.add_parser("train", parents=[common], help="train UBMs, class models and autoencoders")
    p.add_argument("--arm", choices=("arm1", "arm2", "both"), default=None)

    p = sub.add_parser("score", parents=[common], help="score a subset with every trained system")
    p.add_argument("--arm", choices=("arm1", "arm2", "both"), default=None)
    p.add_argument("--subset", choices=("dev", "eval", "both"), default="both")

    p = sub.add_parser("fuse-eval", parents=[common], help="fuse on dev, evaluate on eval, write report")
    p.add_argument("--systems", default="all", help="all, arm1, arm2 or a comma list such as arm1_MFCC,arm2_CQCC")
    p.add_argument("--tag", default=None, help="report subdirectory (default derived from --systems)")

    p = sub.add_parser("run", parents=[common], help="extract, train, score and all three experiments")

    p = sub.add_parser("show-config", parents=[common], help="print the effective configuration")
    return parser


def resolve_config(args) -> RunConfig:
    if args.config in PROFILES:
        cfg = PROFILES[args.config]
    else:
        cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _manifest(args) -> Manifest:
    return load_manifest(args.manifest or Path(args.out) / "manifest.tsv")


def _tag(systems: str) -> str:
    return systems.replace(",", "+")


def _print_report(report: stages.FusionReport) -> None:
    print(stages.format_report(report.rows()), end="")
    print(f"# report: {report.path}")


def _run_extract(args, cfg, manifest) -> int:
    summary = stages.cmd_extract(manifest, cfg, args.out, force=args.force, jobs=args.jobs)
    print(f"extract: {summary.written} written, {summary.skipped} skipped, {len(summary.failures)} failed")
    for utt_id, err in sorted(summary.failures.items()):
        print(f"FAILED\t{utt_id}\t{err}", file=sys.stderr)
    return 1 if summary.failures else 0


def _run_score(args, cfg, manifest, arm=None, subset="both") -> None:
    for s in ("dev", "eval") if subset == "both" else (subset,):
        written = stages.cmd_score(manifest, cfg, args.out, s, arm=arm, jobs=args.jobs)
        print(f"score {s}: {len(written)} files")


def dispatch(args) -> int:
    if args.command == "synth-corpus":
        m = synth_corpus(args.out, size=args.size, seed=7 if args.seed is None else args.seed, severity=args.severity)
        print(f"synth-corpus: {len(m)} utterances -> {Path(args.out) / 'manifest.tsv'}")
        return 0
    if args.command == "import-protocol":
        out = Path(args.manifest or Path(args.out) / "manifest.tsv")
        m = from_asvspoof2017(args.protocol, args.wav_dir, args.subset, root=out.parent)
        if args.append and out.exists():
            m = Manifest(load_manifest(out).entries + m.entries, out.parent)
        save_manifest(out, m)
        print(f"import-protocol: {len(m)} entries -> {out}")
        return 0

    cfg = resolve_config(args)
    if args.command == "show-config":
        print(dump_config(cfg), end="")
        return 0
    manifest = _manifest(args)
    if args.command == "extract":
        return _run_extract(args, cfg, manifest)
    if args.command == "train":
        written = stages.cmd_train(manifest, cfg, args.out, arm=args.arm)
        print(f"train: {len(written)} model files")
        return 0
    if args.command == "score":
        _run_score(args, cfg, manifest, args.arm, args.subset)
        return 0
    if args.command == "fuse-eval":
        _print_report(stages.cmd_fuse_eval(manifest, cfg, args.out, args.systems, args.tag or _tag(args.systems)))
        return 0
    if args.command == "run":
        start = time.perf_counter()
        status = _run_extract(args, cfg, manifest)
        if status:
            return status
        written = stages.cmd_train(manifest, cfg, args.out)
        print(f"train: {len(written)} model files")
        _run_score(args, cfg, manifest)
        for tag, systems in EXPERIMENTS:
            if systems != "all" and systems not in cfg.arms:
                continue
            print(f"== {tag}")
            _print_report(stages.cmd_fuse_eval(manifest, cfg, args.out, systems, tag))
        print(f"# elapsed {time.perf_counter() - start:.1f} s")
        return 0
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return dispatch(args)
    except (ReplayDetError, ValueError, OSError) as exc:
        print(f"replaydet: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
