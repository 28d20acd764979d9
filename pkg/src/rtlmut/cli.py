"""Command-line interface.

Subcommands: ingest, targets, mutate, merge, simulate, evaluate, report.
Exit codes: 0 success, 1 usage error, 2 rejection/validation failure,
3 internal error. All state flows through flags and config files; no
environment variables.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import CampaignConfig
from .connectivity import resolve_targets, targets_table
from .elaborate import elaborate, load_design_dir
from .errors import RtlmutError, SourceError
from .evaluate import evaluate
from .manifest import read_manifest
from .pipeline import compose_multibug, generate_corpus, write_corpus
from .sim import Stimulus, compile_design, run, write_vcd
from .workspace import IngestionRejection, check_design, ingest, read_index, summarize

log = logging.getLogger("rtlmut")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REJECTED = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--vectors", type=int, default=None)
    p.add_argument("--sim-cycles", dest="sim_cycles", type=int, default=None)
    p.add_argument("--reset-cycles", dest="reset_cycles", type=int, default=None)
    p.add_argument("--exhaustive-bits", dest="exhaustive_bits", type=int, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--operators", default=None,
                   help="comma-separated operator subset (default: all 17)")
    p.add_argument("--strict", action="store_true", default=None)
    p.add_argument("--lenient", action="store_true", default=None)
    p.add_argument("--retain-unknown", dest="retain_unknown",
                   action="store_true", default=None)


def _config_from(args) -> CampaignConfig:
    cfg = CampaignConfig.from_file(args.config) if args.config else CampaignConfig()
    overrides = {}
    for key in ("seed", "budget", "workers", "vectors", "sim_cycles", "reset_cycles",
                "exhaustive_bits", "runs", "strict", "lenient", "retain_unknown"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "operators", None):
        overrides["operators"] = tuple(
            op.strip() for op in args.operators.split(",") if op.strip())
    return cfg.with_overrides(**overrides)


def _read_signal_list(path) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.strip().startswith("#")]


def build_parser() -> _Parser:
    parser = _Parser(prog="rtlmut",
                     description="mutation-based buggy RTL generation and "
                                 "assertion evaluation")
    parser.add_argument("--version", action="version", version=f"rtlmut {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="gate a design and register it in a workspace")
    p.add_argument("--design", required=True)
    p.add_argument("--top", default=None)
    p.add_argument("--workspace", required=True)
    p.add_argument("--id", dest="design_id", default=None)
    p.add_argument("--category", default="uncategorized")
    p.add_argument("--group", default="default")
    p.add_argument("--spec", default=None)
    p.add_argument("--spec-signals", dest="spec_signals", default=None)
    p.add_argument("--min-loc", dest="min_loc", type=int, default=200)

    p = sub.add_parser("targets", help="resolve mutation targets from spec signals")
    p.add_argument("--design", required=True)
    p.add_argument("--top", default=None)
    p.add_argument("--spec-signals", dest="spec_signals", required=True)

    p = sub.add_parser("mutate", help="generate the retained buggy RTL corpus")
    p.add_argument("--design", required=True)
    p.add_argument("--top", default=None)
    p.add_argument("--spec-signals", dest="spec_signals", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--id", dest="design_id", default=None)
    _add_config_args(p)

    p = sub.add_parser("merge", help="compose the five-bug variant from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--design", default=None,
                   help="golden dir (default: <manifest dir>/golden)")
    _add_config_args(p)

    p = sub.add_parser("simulate", help="run the cycle simulator on a design")
    p.add_argument("--design", required=True)
    p.add_argument("--top", default=None)
    p.add_argument("--cycles", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reset-cycles", dest="reset_cycles", type=int, default=4)
    p.add_argument("--vcd", default=None)
    p.add_argument("--trace", default=None)

    p = sub.add_parser("evaluate", help="score assertion runs against a corpus")
    p.add_argument("--design", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--assertions", required=True,
                   help="directory holding run1/ run2/ run3/")
    p.add_argument("--mode", choices=("average", "union"), default="average")
    p.add_argument("--setting", choices=("prevention", "hunting"), default="prevention")
    p.add_argument("--report", required=True)
    p.add_argument("--mutants", default=None,
                   help="mutants root (default: <manifest dir>/mutants)")
    _add_config_args(p)

    p = sub.add_parser("report", help="summarize a workspace")
    p.add_argument("--workspace", required=True)
    p.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
    )
    try:
        return _dispatch(args)
    except IngestionRejection as exc:
        print(f"rejected: {exc.reason}: {exc.detail}", file=sys.stderr)
        return EXIT_REJECTED
    except SourceError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_REJECTED
    except RtlmutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def _dispatch(args) -> int:
    if args.command == "ingest":
        entry = ingest(args.design, args.top, args.workspace,
                       design_id=args.design_id, category=args.category,
                       group=args.group, spec=args.spec,
                       spec_signals=args.spec_signals, min_loc=args.min_loc)
        print(f"accepted: {entry.design_id} (top={entry.top}, loc={entry.loc})")
        return EXIT_OK

    if args.command == "targets":
        design = elaborate(load_design_dir(args.design), args.top)
        targets = resolve_targets(design, _read_signal_list(args.spec_signals))
        sys.stdout.write(targets_table(targets))
        return EXIT_OK

    if args.command == "mutate":
        cfg = _config_from(args)
        design = elaborate(load_design_dir(args.design), args.top)
        design_id = args.design_id or Path(args.design).resolve().name
        if design_id == "golden":
            design_id = Path(args.design).resolve().parent.name
        result = generate_corpus(design, _read_signal_list(args.spec_signals),
                                 cfg, design_id)
        manifest_path = write_corpus(result, args.out)
        print(f"retained {len(result.retained)}/{cfg.budget} mutants"
              f"{' + merged five-bug variant' if result.merged_files else ''};"
              f" manifest: {manifest_path}")
        if result.under_filled and cfg.strict:
            return EXIT_REJECTED
        return EXIT_OK

    if args.command == "merge":
        return _cmd_merge(args)

    if args.command == "simulate":
        design = elaborate(load_design_dir(args.design), args.top)
        model = compile_design(design)
        for w in model.warnings:
            print(f"warning: {w}", file=sys.stderr)
        stim = Stimulus(kind="random", seed=args.seed, cycles=args.cycles,
                        reset_cycles=args.reset_cycles)
        trace = run(model, stim)
        if args.trace:
            Path(args.trace).write_text(trace.to_text(), encoding="utf-8")
        if args.vcd:
            write_vcd(trace, args.vcd)
        print(f"simulated {trace.cycles} cycles, {len(trace.signals)} observed signals")
        if not args.trace and not args.vcd:
            sys.stdout.write(trace.to_text())
        return EXIT_OK

    if args.command == "evaluate":
        cfg = _config_from(args)
        manifest = read_manifest(args.manifest)
        mutants_root = args.mutants or str(Path(args.manifest).parent / "mutants")
        report = evaluate(args.design, manifest, mutants_root, args.assertions,
                          cfg, setting=args.setting, mode=args.mode)
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(report.to_text(), encoding="utf-8")
        print(report.table())
        return EXIT_OK

    if args.command == "report":
        text = summarize(args.workspace)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        sys.stdout.write(text)
        return EXIT_OK

    raise RtlmutError(f"unknown command {args.command}")


def _cmd_merge(args) -> int:
    from .manifest import write_manifest
    cfg = _config_from(args)
    manifest = read_manifest(args.manifest)
    golden_dir = args.design or str(Path(args.manifest).parent / "golden")
    if not Path(golden_dir).is_dir():
        print(f"error: golden directory not found: {golden_dir}; pass --design",
              file=sys.stderr)
        return EXIT_USAGE
    if manifest.merged is None:
        print("error: manifest has no merged entry to re-compose", file=sys.stderr)
        return EXIT_REJECTED
    design = elaborate(load_design_dir(golden_dir), manifest.top or None)
    from .operators import Candidate
    picks = []
    for mid in manifest.merged.constituents:
        rec = manifest.record(mid)
        cand = Candidate(target=rec.target, operator=rec.edit.operator,
                         path=rec.edit.path, variant=rec.edit.variant,
                         file=rec.edit.file, line=rec.edit.line, col=0)
        picks.append((rec, cand))
    files, _ = compose_multibug(design, picks, cfg)
    out = Path(args.out)
    for f in files:
        dest = out / f.path
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(f.text, encoding="utf-8")
    print(f"merged variant with {len(picks)} bugs written to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
