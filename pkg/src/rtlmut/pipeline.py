"""Mutant filtering pipeline: dedup, differential equivalence, revalidation,
budgeted selection, and five-bug composition.

Stage order (statuses are monotone: candidate -> duplicate/equivalent/invalid/
retained):

  1. probe      feasibility on fresh module clones (operators.probe_apply)
  2. dedup      same (operator, file, line, after-fragment) already seen
  3. equivalence  golden-vs-mutant differential simulation: seeded random
                vectors after reset, plus exhaustive input enumeration for
                combinational designs within the exhaustive-bits budget
  4. revalidate reparse + elaborate the emitted mutant, re-check the diff
  5. selection  greedy budget fill, distinct target signals first
  6. merge      one five-bug variant from five statement-disjoint retained
                mutants

Candidates are screened in fixed-size chunks with the pool check at chunk
boundaries, so early stopping is independent of the worker count.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import CampaignConfig
from .connectivity import resolve_targets
from .diff import structural_diff
from .elaborate import DesignUnit, elaborate
from .emitter import emit, sanitize
from .errors import (
    ElaborationError,
    OverlappingEditsError,
    ParseError,
    RtlmutError,
    SimError,
    UnsupportedConstructError,
)
from .manifest import (
    CorpusManifest,
    MergedEntry,
    MutantRecord,
    Witness,
    file_digest,
    mutant_id_for,
    write_manifest,
)
from .nodes import Node, clone, node_at, structural_eq
from .operators import Candidate, EditRecord, Infeasible, apply_operator, match_candidates, probe_apply
from .parser import parse
from .sim import CompiledModel, Stimulus, Trace, compile_design, diff_traces, run
from .source import SourceFile

log = logging.getLogger("rtlmut.pipeline")

_CHUNK = 32


# -- stage 2: dedup ------------------------------------------------------------

def dedup(records: list[MutantRecord]) -> list[MutantRecord]:
    """Mark later records with an identical edit signature as duplicates.

    The signature is (operator, file, line, after-fragment): the same
    operation applied to the same source line with the same outcome.
    First occurrence (in candidate order) survives.
    """
    seen: set[tuple] = set()
    for rec in records:
        key = (rec.edit.operator, rec.edit.file, rec.edit.line, rec.edit.after)
        if key in seen:
            if rec.status == "candidate":
                rec.status = "duplicate"
        else:
            seen.add(key)
    return records


# -- stage 3: differential equivalence ------------------------------------------

@dataclass
class Equivalent:
    pass


@dataclass
class Distinguished:
    witness: Witness


@dataclass
class Unknown:
    pass


@dataclass
class GoldenContext:
    """Golden model plus cached traces, shared across mutants (read-only)."""
    design: DesignUnit
    model: CompiledModel
    cfg: CampaignConfig
    random_stim: Optional[Stimulus] = None
    random_trace: Optional[Trace] = None
    exhaustive_trace: Optional[Trace] = None

    @classmethod
    def build(cls, design: DesignUnit, cfg: CampaignConfig) -> "GoldenContext":
        model = compile_design(design, cfg.reset_patterns)
        stim = Stimulus(kind="random", seed=cfg.seed, cycles=cfg.vectors,
                        reset_cycles=cfg.reset_cycles)
        ctx = cls(design=design, model=model, cfg=cfg, random_stim=stim,
                  random_trace=run(model, stim))
        if model.is_combinational() and model.input_bits() <= cfg.exhaustive_bits:
            ctx.exhaustive_trace = run(model, Stimulus(kind="exhaustive"))
        return ctx


def materialize_mutant(design: DesignUnit, cand: Candidate, cfg: CampaignConfig,
                       expected: Optional[EditRecord] = None) -> tuple[list[SourceFile], Node]:
    """Mutant source files: original layout with only the mutated file re-emitted."""
    file_root, _ = apply_operator(design, cand, cfg, expected=expected)
    text = emit(sanitize(file_root))
    files = [
        SourceFile(path=f.path, text=text) if f.path == cand.file else f
        for f in design.files
    ]
    return files, file_root


def equivalence_filter(ctx: GoldenContext, record: MutantRecord,
                       cand: Candidate):
    """Equivalent | Distinguished(witness) | Unknown for one mutant.

    Distinguished iff any observed output or register differs at any cycle;
    Equivalent only when exhaustive enumeration completed clean (combinational
    designs within the input-bit budget); Unknown when only random testing ran
    clean. Simulation failures surface as SimError and mark the record invalid
    upstream.
    """
    cfg = ctx.cfg
    files, _ = materialize_mutant(ctx.design, cand, cfg, expected=record.edit)
    mutant_design = elaborate(files, ctx.design.top)
    mutant_model = compile_design(mutant_design, cfg.reset_patterns)
    if mutant_model.observed != ctx.model.observed:
        raise SimError("mutant changed the observed-signal set")

    mutant_trace = run(mutant_model, ctx.random_stim)
    hit = diff_traces(ctx.random_trace, mutant_trace)
    if hit is not None:
        cycle, signal = hit
        return Distinguished(Witness(
            kind="random", seed=cfg.seed, cycles=cfg.vectors,
            reset_cycles=cfg.reset_cycles, cycle=cycle, signal=signal,
        ))
    if ctx.exhaustive_trace is not None and mutant_model.is_combinational() \
            and mutant_model.input_bits() == ctx.model.input_bits():
        mutant_ex = run(mutant_model, Stimulus(kind="exhaustive"))
        hit = diff_traces(ctx.exhaustive_trace, mutant_ex)
        if hit is not None:
            cycle, signal = hit
            return Distinguished(Witness(
                kind="exhaustive", seed=0, cycles=ctx.exhaustive_trace.cycles,
                reset_cycles=0, cycle=cycle, signal=signal,
            ))
        return Equivalent()
    return Unknown()


def replay_witness(golden_design: DesignUnit, mutant_files: list[SourceFile],
                   witness: Witness, cfg: CampaignConfig) -> Optional[tuple[int, str]]:
    """Re-simulate the stored witness stimulus; returns the divergence found."""
    stim = witness_stimulus(witness)
    golden_model = compile_design(golden_design, cfg.reset_patterns)
    mutant_design = elaborate(mutant_files, golden_design.top)
    mutant_model = compile_design(mutant_design, cfg.reset_patterns)
    return diff_traces(run(golden_model, stim), run(mutant_model, stim))


def witness_stimulus(witness: Witness) -> Stimulus:
    if witness.kind == "exhaustive":
        return Stimulus(kind="exhaustive")
    return Stimulus(kind="random", seed=witness.seed, cycles=witness.cycles,
                    reset_cycles=witness.reset_cycles)


# -- stage 4: revalidation -------------------------------------------------------

def revalidate(design: DesignUnit, record: MutantRecord, cand: Candidate,
               cfg: CampaignConfig) -> str:
    """'ok' iff the emitted mutant reparses, elaborates, and diffs as intended."""
    try:
        files, _ = materialize_mutant(design, cand, cfg, expected=record.edit)
        asts = {f.path: parse(f) for f in files}
        elaborate(files, design.top, asts=asts)
        sites = structural_diff(design.asts[cand.file], asts[cand.file])
    except (ParseError, UnsupportedConstructError, ElaborationError, RtlmutError):
        return "invalid"
    if len(sites) != 1:
        return "invalid"
    if sites[0].path[:2] != record.edit.path[:2]:
        return "invalid"
    return "ok"


# -- stage 5: budgeted selection --------------------------------------------------

def select_budget(records: list[MutantRecord], budget: int) -> list[MutantRecord]:
    """Greedy fill: one mutant per distinct target signal first, then round-robin.

    `records` must be the Distinguished pool in deterministic candidate order.
    Returns exactly min(budget, len(records)) records, marked retained.
    """
    by_signal: dict[tuple, list[MutantRecord]] = {}
    signal_order: list[tuple] = []
    for rec in records:
        key = (rec.target.module, rec.target.signal, rec.target.file)
        if key not in by_signal:
            by_signal[key] = []
            signal_order.append(key)
        by_signal[key].append(rec)

    chosen: list[MutantRecord] = []
    cursor = {key: 0 for key in signal_order}
    # first pass: at most one per distinct signal
    for key in signal_order:
        if len(chosen) >= budget:
            break
        chosen.append(by_signal[key][0])
        cursor[key] = 1
    # subsequent passes: cycle over signals in first-seen order
    while len(chosen) < budget:
        progressed = False
        for key in signal_order:
            if len(chosen) >= budget:
                break
            i = cursor[key]
            if i < len(by_signal[key]):
                chosen.append(by_signal[key][i])
                cursor[key] = i + 1
                progressed = True
        if not progressed:
            break
    for rec in chosen:
        rec.status = "retained"
    return chosen


# -- stage 6: five-bug composition ------------------------------------------------

def _paths_overlap(a: EditRecord, b: EditRecord) -> bool:
    if a.file != b.file:
        return False
    shorter, longer = sorted((a.path, b.path), key=len)
    return longer[:len(shorter)] == shorter


def _statement_disjoint(a: EditRecord, b: EditRecord) -> bool:
    return a.file != b.file or a.path[:2] != b.path[:2]


def compose_multibug(design: DesignUnit, picks: list[tuple[MutantRecord, Candidate]],
                     cfg: CampaignConfig) -> tuple[list[SourceFile], dict[str, Node]]:
    """Merge the given single-bug edits into one variant.

    Edits must live in pairwise-distinct module items (which implies
    non-overlapping node paths); within one file they are applied deepest
    path first so earlier insertions/removals cannot shift later anchors.
    """
    for (ra, _), (rb, _) in itertools.combinations(picks, 2):
        if _paths_overlap(ra.edit, rb.edit) or not _statement_disjoint(ra.edit, rb.edit):
            raise OverlappingEditsError(ra.mutant_id, rb.mutant_id)
    by_file: dict[str, list[tuple[MutantRecord, Candidate]]] = {}
    for rec, cand in picks:
        by_file.setdefault(cand.file, []).append((rec, cand))
    from .operators import apply_edit, module_scopes, _Reject
    scopes = module_scopes(design)
    roots: dict[str, Node] = {}
    for path_name, edits in by_file.items():
        root = clone(design.asts[path_name])
        for rec, cand in sorted(edits, key=lambda rc: rc[1].path, reverse=True):
            scope = scopes.get(cand.target.module, {})
            try:
                apply_edit(root, cand.path, cand.operator, cand.variant, cfg, scope)
            except _Reject as rej:
                raise OverlappingEditsError(rec.mutant_id, rej.reason)
        roots[path_name] = root
    files = [
        SourceFile(path=f.path, text=emit(sanitize(roots[f.path])))
        if f.path in roots else f
        for f in design.files
    ]
    return files, roots


# -- corpus generation -------------------------------------------------------------

@dataclass
class GenerationResult:
    manifest: CorpusManifest
    retained: list[MutantRecord]
    merged_files: Optional[list[SourceFile]]
    under_filled: bool
    candidates_total: int
    mutant_files: dict[str, list[SourceFile]] = field(default_factory=dict)


def _screening_order(candidates: list[Candidate]) -> list[tuple[int, Candidate]]:
    """Round-robin across targets so the Distinguished pool stays signal-diverse
    even when screening stops early at the over-generation mark."""
    groups: dict[tuple, list[tuple[int, Candidate]]] = {}
    order: list[tuple] = []
    for index, cand in enumerate(candidates):
        key = (cand.target.module, cand.target.signal, cand.target.file)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append((index, cand))
    out: list[tuple[int, Candidate]] = []
    cursors = {key: 0 for key in order}
    remaining = len(candidates)
    while remaining:
        for key in order:
            i = cursors[key]
            if i < len(groups[key]):
                out.append(groups[key][i])
                cursors[key] = i + 1
                remaining -= 1
    return out


def generate_corpus(design: DesignUnit, spec_signals: list[str],
                    cfg: CampaignConfig, design_id: str) -> GenerationResult:
    """Run the full mutation workflow on an elaborated golden design."""
    targets = resolve_targets(design, spec_signals, reset_patterns=cfg.reset_patterns)
    candidates = match_candidates(design, targets, cfg)
    pool_target = cfg.pool_target()
    log.info("distinguished pool target: %d (budget %d x overgen %.2f)",
             pool_target, cfg.budget, cfg.overgen_factor)
    log.info("enumerated %d candidates over %d targets", len(candidates), len(targets))

    ctx = GoldenContext.build(design, cfg)
    records: list[MutantRecord] = []
    by_id: dict[str, tuple[MutantRecord, Candidate]] = {}
    seen_edit_keys: set[tuple] = set()
    seen_ids: set[str] = set()
    pool: list[tuple[MutantRecord, Candidate]] = []

    def screen(rec_cand):
        rec, cand = rec_cand
        try:
            verdict = equivalence_filter(ctx, rec, cand)
        except (SimError, ElaborationError, RtlmutError) as exc:
            return rec, cand, "invalid", str(exc)
        return rec, cand, verdict, ""

    ordered = _screening_order(candidates)
    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        for start in range(0, len(ordered), _CHUNK):
            chunk = ordered[start:start + _CHUNK]
            probed = list(executor.map(
                lambda ic: (ic[0], ic[1], probe_apply(design, ic[1], cfg)),
                chunk))
            stage: list[tuple[MutantRecord, Candidate]] = []
            for index, cand, result in probed:
                if isinstance(result, Infeasible):
                    continue
                mutant_id = mutant_id_for(design_id, result)
                if mutant_id in seen_ids:
                    continue
                seen_ids.add(mutant_id)
                rec = MutantRecord(mutant_id=mutant_id, index=index,
                                   edit=result, target=cand.target)
                records.append(rec)
                by_id[mutant_id] = (rec, cand)
                key = (rec.edit.operator, rec.edit.file, rec.edit.line, rec.edit.after)
                if key in seen_edit_keys:
                    rec.status = "duplicate"
                    continue
                seen_edit_keys.add(key)
                stage.append((rec, cand))

            for rec, cand, verdict, note in executor.map(screen, stage):
                if verdict == "invalid":
                    rec.status = "invalid"
                    rec.verdict = "invalid"
                    rec.note = note
                    continue
                if isinstance(verdict, Equivalent):
                    rec.status = "equivalent"
                    rec.verdict = "equivalent"
                    continue
                if isinstance(verdict, Unknown):
                    rec.verdict = "unknown"
                    if not cfg.retain_unknown:
                        continue
                else:
                    rec.verdict = "distinguished"
                    rec.witness = verdict.witness
                if revalidate(design, rec, cand, cfg) != "ok":
                    rec.status = "invalid"
                    rec.verdict = "invalid"
                    rec.note = "revalidation failed"
                    continue
                pool.append((rec, cand))
            log.info("screened %d/%d candidates, distinguished pool %d/%d",
                     min(start + _CHUNK, len(ordered)), len(ordered),
                     len(pool), pool_target)
            if len(pool) >= pool_target:
                break

    distinguished = len(pool)
    retained = select_budget([rec for rec, _ in pool], cfg.budget)
    under_filled = len(retained) < cfg.budget
    if under_filled:
        log.warning("budget under-filled: retained %d of %d", len(retained), cfg.budget)

    mutant_files: dict[str, list[SourceFile]] = {}
    for rec in retained:
        _, cand = by_id[rec.mutant_id]
        files, _ = materialize_mutant(design, cand, cfg, expected=rec.edit)
        mutant_files[rec.mutant_id] = files

    merged_entry = None
    merged_files = None
    if len(retained) >= cfg.multibug_size:
        merged_entry, merged_files = _build_merged(design, retained, by_id, cfg, design_id)
        if merged_entry is None:
            log.warning("no feasible five-bug combination found")

    manifest = CorpusManifest(
        design_id=design_id,
        top=design.top,
        seed=cfg.seed,
        budget=cfg.budget,
        pool_target=pool_target,
        distinguished=distinguished,
        config_snapshot=cfg.snapshot(),
        file_digests={f.path: file_digest(f.text) for f in design.files},
        records=records,
        merged=merged_entry,
        notes=_notes(cfg),
    )
    return GenerationResult(
        manifest=manifest, retained=retained, merged_files=merged_files,
        under_filled=under_filled, candidates_total=len(candidates),
        mutant_files=mutant_files,
    )


def _notes(cfg: CampaignConfig) -> list[str]:
    notes = []
    if "DELAY_CONST" in cfg.operators:
        notes.append(
            "DELAY_CONST mutants cannot be distinguished by the cycle-based "
            "filter (delay controls are ignored); expect reduced yield for "
            "this operator"
        )
    return notes


def _build_merged(design: DesignUnit, retained: list[MutantRecord],
                  by_id, cfg: CampaignConfig, design_id: str):
    """First feasible quintuple in deterministic order.

    Prefers pairwise-distinct target signals; when fewer distinct signals were
    retained, falls back to any statement-disjoint quintuple.
    """
    entry, files = _try_merged(design, retained, by_id, cfg, design_id,
                               distinct_signals=True)
    if entry is None:
        entry, files = _try_merged(design, retained, by_id, cfg, design_id,
                                   distinct_signals=False)
    return entry, files


def _try_merged(design: DesignUnit, retained: list[MutantRecord],
                by_id, cfg: CampaignConfig, design_id: str, distinct_signals: bool):
    for combo in itertools.combinations(retained, cfg.multibug_size):
        if distinct_signals:
            signals = {(r.target.module, r.target.signal, r.target.file) for r in combo}
            if len(signals) != len(combo):
                continue
        picks = [(rec, by_id[rec.mutant_id][1]) for rec in combo]
        try:
            files, _ = compose_multibug(design, picks, cfg)
            merged_design = elaborate(files, design.top)
            sites = _design_diff_count(design, files)
        except (OverlappingEditsError, ParseError, UnsupportedConstructError,
                ElaborationError):
            continue
        if sites != cfg.multibug_size:
            continue
        diverging, masked = [], []
        for rec in combo:
            hit = None
            if rec.witness is not None:
                try:
                    hit = replay_witness(design, files, rec.witness, cfg)
                except (SimError, ElaborationError):
                    hit = None
            (diverging if hit is not None else masked).append(rec.mutant_id)
        if not diverging:
            continue
        merged_id = mutant_id_for(design_id, EditRecord(
            operator="MERGED", variant="", file="", line=0, path=(),
            before="", after=",".join(r.mutant_id for r in combo)))
        entry = MergedEntry(
            merged_id=merged_id,
            constituents=[r.mutant_id for r in combo],
            diverging=diverging, masked=masked,
        )
        return entry, files
    return None, None


def _design_diff_count(design: DesignUnit, mutant_files: list[SourceFile]) -> int:
    total = 0
    for f in mutant_files:
        golden_ast = design.asts[f.path]
        mutant_ast = parse(f)
        total += len(structural_diff(golden_ast, mutant_ast))
    return total


def write_corpus(result: GenerationResult, out_dir) -> Path:
    """Write manifest plus mutants/<id>/ trees; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mutants_dir = out / "mutants"
    for mutant_id in sorted(result.mutant_files):
        for f in result.mutant_files[mutant_id]:
            dest = mutants_dir / mutant_id / f.path
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(f.text, encoding="utf-8")
    if result.merged_files is not None and result.manifest.merged is not None:
        for f in result.merged_files:
            dest = mutants_dir / result.manifest.merged.merged_id / f.path
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(f.text, encoding="utf-8")
    manifest_path = out / "manifest.txt"
    write_manifest(result.manifest, manifest_path)
    return manifest_path
