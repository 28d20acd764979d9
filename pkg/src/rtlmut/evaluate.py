"""Assertion-set evaluation: golden validation, COI coverage, kill ratios,
and average/union aggregation over multiple generation runs.

Validation is simulation-based (no formal engine at this scale): a property is
  validated (sim)  non-vacuous on at least one stimulus, never violated
  cex              violated on the golden design
  undetermined     vacuous on every stimulus, or not evaluable
Only validated properties contribute to COI coverage and kill credit. Proof
coverage and formal coverage require an external formal engine and are
reported as placeholders.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import CampaignConfig
from .connectivity import ConnectivityGraph, build_connectivity
from .elaborate import DesignUnit, elaborate, load_design_dir
from .errors import (
    ElaborationError,
    EvalError,
    MissingAssertionRunsError,
    MissingMergedVariantError,
    RtlmutError,
    RunCountMismatchError,
    SimError,
    TraceTooShortError,
    UnknownSignalError,
)
from .manifest import CorpusManifest, MutantRecord, Witness
from .pipeline import witness_stimulus
from .sim import CompiledModel, Stimulus, Trace, compile_design, run
from .sva import AssertionSet, Pass, Property, Vacuous, Violation, check_on_trace, parse_sva_text

log = logging.getLogger("rtlmut.evaluate")

PLACEHOLDER_FORMAL = "requires external formal engine"


@dataclass
class PropertyVerdict:
    run_label: str
    prop: Property
    status: str            # 'validated' | 'cex' | 'undetermined'
    detail: str = ""


@dataclass
class RunEvaluation:
    label: str
    sets: list[AssertionSet]
    verdicts: list[PropertyVerdict] = field(default_factory=list)
    syntax_rate: float = 0.0
    validated: int = 0
    total: int = 0
    coi_signals: set[str] = field(default_factory=set)
    coi_coverage: float = 0.0
    kill_table: dict[str, bool] = field(default_factory=dict)
    kill_ratio: float = 0.0
    variant_errors: dict[str, str] = field(default_factory=dict)

    def validated_props(self) -> list[Property]:
        return [v.prop for v in self.verdicts if v.status == "validated"]


@dataclass
class EvaluationReport:
    design_id: str
    setting: str                    # 'prevention' | 'hunting'
    mode: str                       # 'average' | 'union'
    syntax_rate: float
    validated: float
    total: float
    coi_coverage: float
    kill_ratio: float
    per_variant: dict[str, float]
    runs: list[RunEvaluation]
    config_snapshot: str
    unattributed: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        lines = ["# rtlmut evaluation report v1", "[report]"]
        lines.append(f"design_id = {self.design_id}")
        lines.append(f"setting = {self.setting}")
        lines.append(f"mode = {self.mode}")
        lines.append(f"syntax_rate = {self.syntax_rate:.6f}")
        lines.append(f"validated = {self.validated:.4f}")
        lines.append(f"total = {self.total:.4f}")
        lines.append(f"coi_coverage = {self.coi_coverage:.6f}")
        lines.append(f"kill_ratio = {self.kill_ratio:.6f}")
        lines.append(f"proof_coverage = {PLACEHOLDER_FORMAL}")
        lines.append(f"formal_coverage = {PLACEHOLDER_FORMAL}")
        lines.append("validated_label = validated (sim); simulation-based substitute, not a formal proof")
        lines.append("coi_denominator = named signals in the elaborated hierarchy")
        for note in self.notes:
            lines.append(f"note = {note}")
        lines.append("[config]")
        lines.extend(self.config_snapshot.splitlines())
        lines.append("[runs]")
        for r in self.runs:
            lines.append(
                f"run = {r.label} syntax={r.syntax_rate:.6f} "
                f"validated={r.validated}/{r.total} coi={r.coi_coverage:.6f} "
                f"kill={r.kill_ratio:.6f}"
            )
        lines.append("[kill_table]")
        for vid in sorted(self.per_variant):
            lines.append(f"variant = {vid} {self.per_variant[vid]:.6f}")
        if self.unattributed:
            lines.append("[unattributed]")
            for name in self.unattributed:
                lines.append(f"property = {name}")
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        head = f"{'Design':<12} {'Syntax %':>9} {'Validated/Total':>17} {'COI':>7} {'Kill Ratio':>11}"
        row = (f"{self.design_id:<12} {self.syntax_rate * 100:>9.2f} "
               f"{self.validated:>8.1f}/{self.total:<8.1f} "
               f"{self.coi_coverage:>7.3f} {self.kill_ratio:>11.4f}")
        return head + "\n" + row


# -- assertion-run loading -------------------------------------------------------

def load_assertion_runs(assertions_dir, runs: int) -> list[tuple[str, list[AssertionSet]]]:
    """run1/, run2/, ... each holding .sva files; empty runs are allowed."""
    base = Path(assertions_dir)
    if not base.is_dir():
        raise MissingAssertionRunsError(base)
    run_dirs = sorted(d for d in base.iterdir() if d.is_dir() and d.name.startswith("run"))
    if not run_dirs:
        return [(f"run{i + 1}", []) for i in range(runs)]
    out = []
    for d in run_dirs:
        sets = []
        for f in sorted(d.glob("*.sva")):
            sets.append(parse_sva_text(f.read_text(encoding="utf-8"),
                                       path=f.name, run_label=d.name))
        out.append((d.name, sets))
    return out


def syntax_rate_of(sets: list[AssertionSet]) -> float:
    """Mean per-file fraction of parseable properties; 0.0 with no files."""
    if not sets:
        return 0.0
    return sum(s.syntax_fraction for s in sets) / len(sets)


# -- golden validation -----------------------------------------------------------

def validation_stimuli(cfg: CampaignConfig) -> list[Stimulus]:
    return [
        Stimulus(kind="random", seed=cfg.seed + i, cycles=cfg.sim_cycles,
                 reset_cycles=cfg.reset_cycles)
        for i in range(cfg.validation_stimuli)
    ]


def evaluation_stimuli(cfg: CampaignConfig, records: list[MutantRecord]) -> list[Stimulus]:
    """Validation suite plus every retained mutant's stored witness stimulus."""
    stims = list(validation_stimuli(cfg))
    seen = {(s.kind, s.seed, s.cycles, s.reset_cycles) for s in stims}
    for rec in records:
        if rec.witness is None:
            continue
        stim = witness_stimulus(rec.witness)
        key = (stim.kind, stim.seed, stim.cycles, stim.reset_cycles)
        if key not in seen:
            seen.add(key)
            stims.append(stim)
    return stims


def validate_on_golden(sets: list[AssertionSet], golden_traces: list[Trace],
                       run_label: str) -> list[PropertyVerdict]:
    """Classify each parsed property against golden simulation traces."""
    verdicts: list[PropertyVerdict] = []
    for aset in sets:
        for prop in aset.properties:
            status = "undetermined"
            detail = "vacuous on all stimuli"
            non_vacuous = False
            violated = None
            for trace in golden_traces:
                try:
                    result = check_on_trace(prop, trace)
                except (UnknownSignalError, TraceTooShortError, EvalError) as exc:
                    status, detail = "undetermined", str(exc)
                    violated = None
                    non_vacuous = False
                    break
                if isinstance(result, Violation):
                    violated = result.cycle
                    break
                if isinstance(result, Pass):
                    non_vacuous = True
            if violated is not None:
                status, detail = "cex", f"violated on golden at cycle {violated}"
            elif non_vacuous:
                status, detail = "validated", ""
            verdicts.append(PropertyVerdict(run_label=run_label, prop=prop,
                                            status=status, detail=detail))
    return verdicts


# -- COI coverage ----------------------------------------------------------------

def coi_signals(props: list[Property], graph: ConnectivityGraph) -> set[str]:
    roots: set[str] = set()
    for prop in props:
        for name in prop.referenced_signals():
            if name in graph.kinds:
                roots.add(name)
    return graph.backward_reachable(roots)


def coi_coverage(props: list[Property], graph: ConnectivityGraph) -> float:
    if not graph.kinds:
        return 0.0
    return len(coi_signals(props, graph)) / len(graph.kinds)


# -- kill measurement -------------------------------------------------------------

@dataclass
class VariantSim:
    """Cached traces of one buggy variant under the evaluation stimuli."""
    variant_id: str
    traces: list[Trace] = field(default_factory=list)
    error: str = ""


def load_variant_design(mutants_root: Path, variant_id: str, top: str) -> DesignUnit:
    vdir = mutants_root / variant_id
    if not vdir.is_dir():
        raise ElaborationError(f"variant directory missing: {vdir}")
    return elaborate(load_design_dir(vdir), top)


def simulate_variants(variant_ids: list[str], mutants_root: Path, top: str,
                      stimuli: list[Stimulus], cfg: CampaignConfig) -> dict[str, VariantSim]:
    out: dict[str, VariantSim] = {}
    for vid in variant_ids:
        sim = VariantSim(variant_id=vid)
        try:
            design = load_variant_design(mutants_root, vid, top)
            model = compile_design(design, cfg.reset_patterns)
            for stim in stimuli:
                sim.traces.append(run(model, stim))
        except (RtlmutError, OSError) as exc:
            sim.error = str(exc)
            sim.traces = []
        out[vid] = sim
    return out


def property_kills(prop: Property, sim: VariantSim) -> bool:
    for trace in sim.traces:
        try:
            result = check_on_trace(prop, trace)
        except (UnknownSignalError, TraceTooShortError, EvalError):
            return False
        if isinstance(result, Violation):
            return True
    return False


def kill_table(validated: list[Property], sims: dict[str, VariantSim]) -> dict[str, bool]:
    """variant id -> killed (some validated property violated on it)."""
    table: dict[str, bool] = {}
    for vid in sorted(sims):
        sim = sims[vid]
        table[vid] = any(property_kills(p, sim) for p in validated) if not sim.error else False
    return table


def kill_ratio_of(table: dict[str, bool], errors: dict[str, str], lenient: bool) -> float:
    ids = list(table)
    if lenient:
        ids = [v for v in ids if v not in errors]
    if not ids:
        return 0.0
    return sum(1 for v in ids if table[v]) / len(ids)


# -- aggregation -------------------------------------------------------------------

def aggregate(runs: list[RunEvaluation], expected_runs: int,
              graph: ConnectivityGraph, mode: str) -> dict:
    """Combine per-run metrics; union metrics are unions of per-run evidence.

    Union kill/COI computed by OR-ing per-variant verdicts and merging cones
    is exactly the merged-assertion-set evaluation: validation verdicts are
    per-property against the same golden traces, so the merged set's validated
    subset is the union of the runs' validated subsets.
    """
    if len(runs) != expected_runs:
        raise RunCountMismatchError(expected_runs, len(runs))
    n = len(runs)
    syntax = sum(r.syntax_rate for r in runs) / n if n else 0.0
    mean_validated = sum(r.validated for r in runs) / n if n else 0.0
    mean_total = sum(r.total for r in runs) / n if n else 0.0
    if mode == "average":
        coi = sum(r.coi_coverage for r in runs) / n if n else 0.0
        kill = sum(r.kill_ratio for r in runs) / n if n else 0.0
        per_variant: dict[str, float] = {}
        for r in runs:
            for vid, killed in r.kill_table.items():
                per_variant[vid] = per_variant.get(vid, 0.0) + (1.0 if killed else 0.0)
        per_variant = {vid: v / n for vid, v in per_variant.items()}
        return {"syntax": syntax, "validated": mean_validated, "total": mean_total,
                "coi": coi, "kill": kill, "per_variant": per_variant}
    if mode != "union":
        raise EvalError(f"unknown aggregation mode '{mode}'")
    union_cone: set[str] = set()
    for r in runs:
        union_cone |= r.coi_signals
    coi = len(union_cone) / len(graph.kinds) if graph.kinds else 0.0
    union_table: dict[str, bool] = {}
    for r in runs:
        for vid, killed in r.kill_table.items():
            union_table[vid] = union_table.get(vid, False) or killed
    kill = (sum(1 for v in union_table.values() if v) / len(union_table)) if union_table else 0.0
    per_variant = {vid: (1.0 if killed else 0.0) for vid, killed in union_table.items()}
    return {"syntax": syntax, "validated": float(sum(r.validated for r in runs)),
            "total": float(sum(r.total for r in runs)),
            "coi": coi, "kill": kill, "per_variant": per_variant}


# -- end-to-end evaluation -----------------------------------------------------------

def evaluate(golden_dir, manifest: CorpusManifest, mutants_root, assertions_dir,
             cfg: CampaignConfig, setting: str = "prevention",
             mode: str = "average") -> EvaluationReport:
    """Evaluate assertion runs against a generated corpus.

    prevention: kill ratio over the retained single-bug variants.
    hunting: kill ratio over the five injected bugs of the merged variant,
    a bug counting only when the merged variant violates some validated
    property AND that bug's single-bug variant does too.
    """
    design = elaborate(load_design_dir(golden_dir), manifest.top or None)
    graph = build_connectivity(design)
    model = compile_design(design, cfg.reset_patterns)

    retained = manifest.retained()
    if setting == "hunting" and manifest.merged is None:
        raise MissingMergedVariantError()

    stimuli = evaluation_stimuli(cfg, retained)
    golden_traces = [run(model, s) for s in stimuli]

    run_sets = load_assertion_runs(assertions_dir, cfg.runs)

    if setting == "prevention":
        variant_ids = [r.mutant_id for r in retained]
    else:
        variant_ids = list(manifest.merged.constituents)
    sims = simulate_variants(variant_ids, Path(mutants_root), design.top, stimuli, cfg)
    merged_sim: Optional[VariantSim] = None
    if setting == "hunting":
        merged_sim = simulate_variants([manifest.merged.merged_id], Path(mutants_root),
                                       design.top, stimuli, cfg)[manifest.merged.merged_id]

    runs: list[RunEvaluation] = []
    unattributed: list[str] = []
    for label, sets in run_sets:
        rev = RunEvaluation(label=label, sets=sets)
        rev.syntax_rate = syntax_rate_of(sets)
        rev.total = sum(len(s.properties) for s in sets)
        rev.verdicts = validate_on_golden(sets, golden_traces, label)
        validated = rev.validated_props()
        rev.validated = len(validated)
        rev.coi_signals = coi_signals(validated, graph)
        rev.coi_coverage = len(rev.coi_signals) / len(graph.kinds) if graph.kinds else 0.0
        rev.variant_errors = {vid: s.error for vid, s in sims.items() if s.error}
        if setting == "prevention":
            rev.kill_table = kill_table(validated, sims)
            rev.kill_ratio = kill_ratio_of(rev.kill_table, rev.variant_errors, cfg.lenient)
        else:
            merged_killers = [p for p in validated if property_kills(p, merged_sim)]
            merged_killed = bool(merged_killers)
            table: dict[str, bool] = {}
            for vid in variant_ids:
                single = any(property_kills(p, sims[vid]) for p in validated)
                table[vid] = merged_killed and single
            rev.kill_table = table
            rev.kill_ratio = kill_ratio_of(table, rev.variant_errors, cfg.lenient)
            for p in merged_killers:
                if not any(property_kills(p, sims[vid]) for vid in variant_ids):
                    tag = f"{label}:{p.name}"
                    if tag not in unattributed:
                        unattributed.append(tag)
        runs.append(rev)

    agg = aggregate(runs, cfg.runs, graph, mode)
    notes = []
    if any(r.variant_errors for r in runs):
        missing = sorted({vid for r in runs for vid in r.variant_errors})
        notes.append(f"variant errors: {','.join(missing)}"
                     + (" (excluded from denominator)" if cfg.lenient else " (counted as not killed)"))
    return EvaluationReport(
        design_id=manifest.design_id,
        setting=setting,
        mode=mode,
        syntax_rate=agg["syntax"],
        validated=agg["validated"],
        total=agg["total"],
        coi_coverage=agg["coi"],
        kill_ratio=agg["kill"],
        per_variant=agg["per_variant"],
        runs=runs,
        config_snapshot=cfg.snapshot(),
        unattributed=unattributed,
        notes=notes,
    )
