"""Corpus manifest: line-oriented structured text, stable across versions.

Layout:

    # rtlmut manifest v1
    [design]
    design_id = <id>
    top = <module>
    ...
    [config]
    <verbatim CampaignConfig snapshot>
    [files]
    file = <relpath> sha256=<digest>
    [mutant <id>]          (sorted by id)
    index = <candidate index>
    operator = <OPERATOR>
    ...
    [merged <id>]          (at most one)
    constituents = id1,id2,id3,id4,id5

String values that may contain newlines or '=' (edit fragments, notes) are
JSON-encoded on one line; everything else is bare. Every manifest embeds the
exact config snapshot and seed that produced it, and no timestamps, so equal
campaigns produce byte-identical manifests.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .connectivity import MutationTarget
from .errors import MissingManifestError
from .operators import Candidate, EditRecord

MANIFEST_NAME = "manifest.txt"
_HEADER = "# rtlmut manifest v1"

_JSON_KEYS = {"before", "after", "note"}


@dataclass
class Witness:
    kind: str            # 'random' | 'exhaustive'
    seed: int
    cycles: int
    reset_cycles: int
    cycle: int           # first divergence cycle
    signal: str          # first diverging signal


@dataclass
class MutantRecord:
    mutant_id: str
    index: int                      # candidate enumeration index
    edit: EditRecord
    target: MutationTarget
    status: str = "candidate"       # candidate|duplicate|equivalent|invalid|retained
    verdict: str = ""               # ''|distinguished|equivalent|unknown|invalid
    witness: Optional[Witness] = None
    note: str = ""


@dataclass
class MergedEntry:
    merged_id: str
    constituents: list[str]
    diverging: list[str]            # constituent ids whose witness still diverges
    masked: list[str]


@dataclass
class CorpusManifest:
    design_id: str
    top: str
    seed: int
    budget: int
    pool_target: int
    distinguished: int
    config_snapshot: str
    file_digests: dict[str, str]
    records: list[MutantRecord] = field(default_factory=list)
    merged: Optional[MergedEntry] = None
    notes: list[str] = field(default_factory=list)

    def retained(self) -> list[MutantRecord]:
        return [r for r in self.records if r.status == "retained"]

    def record(self, mutant_id: str) -> MutantRecord:
        for r in self.records:
            if r.mutant_id == mutant_id:
                return r
        raise KeyError(mutant_id)


def file_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def mutant_id_for(design_id: str, edit: EditRecord) -> str:
    blob = "|".join([design_id, edit.operator, edit.variant, edit.file,
                     str(edit.line), "/".join(map(str, edit.path)), edit.after])
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def _path_str(path) -> str:
    return "/".join(map(str, path))


def _parse_path(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split("/")) if text else ()


def write_manifest(manifest: CorpusManifest, path) -> None:
    lines = [_HEADER, "[design]"]
    lines.append(f"design_id = {manifest.design_id}")
    lines.append(f"top = {manifest.top}")
    lines.append(f"seed = {manifest.seed}")
    lines.append(f"budget = {manifest.budget}")
    lines.append(f"pool_target = {manifest.pool_target}")
    lines.append(f"distinguished = {manifest.distinguished}")
    lines.append(f"retained = {len(manifest.retained())}")
    for note in manifest.notes:
        lines.append(f"note = {json.dumps(note)}")
    lines.append("[config]")
    lines.extend(manifest.config_snapshot.splitlines())
    lines.append("[files]")
    for rel in sorted(manifest.file_digests):
        lines.append(f"file = {rel} sha256={manifest.file_digests[rel]}")
    for rec in sorted(manifest.records, key=lambda r: r.mutant_id):
        lines.append(f"[mutant {rec.mutant_id}]")
        lines.append(f"index = {rec.index}")
        lines.append(f"operator = {rec.edit.operator}")
        lines.append(f"variant = {rec.edit.variant}")
        lines.append(f"file = {rec.edit.file}")
        lines.append(f"line = {rec.edit.line}")
        lines.append(f"path = {_path_str(rec.edit.path)}")
        lines.append(f"target_module = {rec.target.module}")
        lines.append(f"target_signal = {rec.target.signal}")
        lines.append(f"target_file = {rec.target.file}")
        lines.append(f"status = {rec.status}")
        lines.append(f"verdict = {rec.verdict}")
        lines.append(f"before = {json.dumps(rec.edit.before)}")
        lines.append(f"after = {json.dumps(rec.edit.after)}")
        if rec.note:
            lines.append(f"note = {json.dumps(rec.note)}")
        if rec.witness is not None:
            w = rec.witness
            lines.append(f"witness_kind = {w.kind}")
            lines.append(f"witness_seed = {w.seed}")
            lines.append(f"witness_cycles = {w.cycles}")
            lines.append(f"witness_reset_cycles = {w.reset_cycles}")
            lines.append(f"witness_cycle = {w.cycle}")
            lines.append(f"witness_signal = {w.signal}")
    if manifest.merged is not None:
        m = manifest.merged
        lines.append(f"[merged {m.merged_id}]")
        lines.append(f"constituents = {','.join(m.constituents)}")
        lines.append(f"diverging = {','.join(m.diverging)}")
        lines.append(f"masked = {','.join(m.masked)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> CorpusManifest:
    p = Path(path)
    if not p.is_file():
        raise MissingManifestError(p)
    text = p.read_text(encoding="utf-8")
    sections: list[tuple[str, list[str]]] = []
    current: Optional[tuple[str, list[str]]] = None
    for line in text.splitlines():
        if line.startswith("#") and current is None:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = (line[1:-1], [])
            sections.append(current)
            continue
        if current is not None:
            current[1].append(line)

    def kv(lines: list[str]) -> dict[str, str]:
        out: dict[str, str] = {}
        for ln in lines:
            if "=" not in ln:
                continue
            key, value = ln.split("=", 1)
            key = key.strip()
            value = value.strip()
            if key in _JSON_KEYS:
                value = json.loads(value)
            if key == "note" and key in out:
                continue
            out[key] = value
        return out

    design_kv: dict[str, str] = {}
    config_lines: list[str] = []
    digests: dict[str, str] = {}
    records: list[MutantRecord] = []
    merged: Optional[MergedEntry] = None
    notes: list[str] = []
    for name, lines in sections:
        if name == "design":
            for ln in lines:
                if ln.startswith("note ="):
                    notes.append(json.loads(ln.split("=", 1)[1].strip()))
            design_kv = kv(lines)
        elif name == "config":
            config_lines = lines
        elif name == "files":
            for ln in lines:
                if not ln.startswith("file ="):
                    continue
                body = ln.split("=", 1)[1].strip()
                rel, digest = body.rsplit(" sha256=", 1)
                digests[rel] = digest
        elif name.startswith("mutant "):
            mutant_id = name.split(" ", 1)[1]
            d = kv(lines)
            edit = EditRecord(
                operator=d["operator"], variant=d.get("variant", ""),
                file=d["file"], line=int(d["line"]),
                path=_parse_path(d.get("path", "")),
                before=d.get("before", ""), after=d.get("after", ""),
            )
            target = MutationTarget(module=d["target_module"],
                                    signal=d["target_signal"],
                                    file=d["target_file"])
            witness = None
            if "witness_kind" in d:
                witness = Witness(
                    kind=d["witness_kind"], seed=int(d["witness_seed"]),
                    cycles=int(d["witness_cycles"]),
                    reset_cycles=int(d["witness_reset_cycles"]),
                    cycle=int(d["witness_cycle"]), signal=d["witness_signal"],
                )
            records.append(MutantRecord(
                mutant_id=mutant_id, index=int(d.get("index", 0)), edit=edit,
                target=target, status=d.get("status", "candidate"),
                verdict=d.get("verdict", ""), witness=witness,
                note=d.get("note", ""),
            ))
        elif name.startswith("merged "):
            d = kv(lines)
            merged = MergedEntry(
                merged_id=name.split(" ", 1)[1],
                constituents=[c for c in d.get("constituents", "").split(",") if c],
                diverging=[c for c in d.get("diverging", "").split(",") if c],
                masked=[c for c in d.get("masked", "").split(",") if c],
            )
    return CorpusManifest(
        design_id=design_kv.get("design_id", ""),
        top=design_kv.get("top", ""),
        seed=int(design_kv.get("seed", 0)),
        budget=int(design_kv.get("budget", 0)),
        pool_target=int(design_kv.get("pool_target", 0)),
        distinguished=int(design_kv.get("distinguished", 0)),
        config_snapshot="\n".join(config_lines),
        file_digests=digests,
        records=records,
        merged=merged,
        notes=notes,
    )
