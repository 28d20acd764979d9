"""Workspace management: ingestion gates, the entry index, summary reports.

Workspace layout:

    <workspace>/index.txt
    <workspace>/<design_id>/golden/...      (copied sources)
    <workspace>/<design_id>/spec.txt        (optional structured spec text)
    <workspace>/<design_id>/spec_signals.txt
    <workspace>/<design_id>/manifest.txt    (written by `mutate`)
    <workspace>/<design_id>/mutants/...
    <workspace>/<design_id>/reports/...
"""

from __future__ import annotations

import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import CampaignConfig
from .elaborate import elaborate, load_design_dir
from .errors import ElaborationError, ParseError, RtlmutError, UnsupportedConstructError
from .parser import parse


class IngestionRejection(RtlmutError):
    def __init__(self, reason: str, detail: str):
        self.reason = reason
        self.detail = detail
        super().__init__(f"rejected ({reason}): {detail}")


@dataclass
class BenchmarkEntry:
    design_id: str
    category: str
    group: str
    top: str
    loc: int
    golden_path: str
    spec_path: str = ""
    spec_signals_path: str = ""
    manifest_path: str = ""


def check_design(design_dir, top: Optional[str], min_loc: int = 200):
    """Apply the ingestion gates; returns (files, design) or raises."""
    try:
        files = load_design_dir(design_dir)
        asts = {f.path: parse(f) for f in files}
    except (ParseError, UnsupportedConstructError) as exc:
        raise IngestionRejection("parse failure", str(exc))
    except (OSError, ElaborationError) as exc:
        raise IngestionRejection("parse failure", str(exc))
    try:
        design = elaborate(files, top, asts=asts)
    except ElaborationError as exc:
        raise IngestionRejection("elaboration failure", str(exc))
    except UnsupportedConstructError as exc:
        raise IngestionRejection("elaboration failure", str(exc))
    if design.loc < min_loc:
        raise IngestionRejection(f"loc<{min_loc}", f"design has {design.loc} non-blank lines")
    return files, design


def ingest(design_dir, top: Optional[str], workspace, design_id: Optional[str] = None,
           category: str = "uncategorized", group: str = "default",
           spec: Optional[str] = None, spec_signals: Optional[str] = None,
           min_loc: int = 200) -> BenchmarkEntry:
    """Gate the design, copy it into the workspace, persist the index entry."""
    _, design = check_design(design_dir, top, min_loc)
    design_id = design_id or Path(design_dir).resolve().name
    if design_id == "golden":
        design_id = Path(design_dir).resolve().parent.name
    ws = Path(workspace)
    entry_dir = ws / design_id
    golden_dst = entry_dir / "golden"
    if golden_dst.resolve() != Path(design_dir).resolve():
        if golden_dst.exists():
            shutil.rmtree(golden_dst)
        shutil.copytree(design_dir, golden_dst)
    else:
        entry_dir.mkdir(parents=True, exist_ok=True)
    entry = BenchmarkEntry(
        design_id=design_id, category=category, group=group, top=design.top,
        loc=design.loc, golden_path=str(golden_dst),
    )
    if spec:
        shutil.copyfile(spec, entry_dir / "spec.txt")
        entry.spec_path = str(entry_dir / "spec.txt")
    if spec_signals:
        shutil.copyfile(spec_signals, entry_dir / "spec_signals.txt")
        entry.spec_signals_path = str(entry_dir / "spec_signals.txt")
    manifest = entry_dir / "manifest.txt"
    if manifest.exists():
        entry.manifest_path = str(manifest)
    _index_upsert(ws, entry)
    return entry


def _index_path(workspace) -> Path:
    return Path(workspace) / "index.txt"


def _index_upsert(workspace, entry: BenchmarkEntry):
    entries = {e.design_id: e for e in read_index(workspace)}
    entries[entry.design_id] = entry
    lines = ["# rtlmut workspace index v1"]
    for design_id in sorted(entries):
        e = entries[design_id]
        lines.append(f"[entry {e.design_id}]")
        lines.append(f"category = {e.category}")
        lines.append(f"group = {e.group}")
        lines.append(f"top = {e.top}")
        lines.append(f"loc = {e.loc}")
        lines.append(f"golden = {e.golden_path}")
        if e.spec_path:
            lines.append(f"spec = {e.spec_path}")
        if e.spec_signals_path:
            lines.append(f"spec_signals = {e.spec_signals_path}")
        if e.manifest_path:
            lines.append(f"manifest = {e.manifest_path}")
    path = _index_path(workspace)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_index(workspace) -> list[BenchmarkEntry]:
    path = _index_path(workspace)
    if not path.is_file():
        return []
    entries: list[BenchmarkEntry] = []
    current: Optional[dict] = None
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("[entry "):
            if current:
                entries.append(_entry_from(current))
            current = {"design_id": line[len("[entry "):-1]}
            continue
        if current is not None and "=" in line:
            key, value = line.split("=", 1)
            current[key.strip()] = value.strip()
    if current:
        entries.append(_entry_from(current))
    return entries


def _entry_from(d: dict) -> BenchmarkEntry:
    return BenchmarkEntry(
        design_id=d["design_id"], category=d.get("category", "uncategorized"),
        group=d.get("group", "default"), top=d.get("top", ""),
        loc=int(d.get("loc", 0)), golden_path=d.get("golden", ""),
        spec_path=d.get("spec", ""), spec_signals_path=d.get("spec_signals", ""),
        manifest_path=d.get("manifest", ""),
    )


# -- workspace summary ------------------------------------------------------------

def read_report_metrics(path) -> dict[str, float]:
    """Pull the headline metrics out of an evaluation report file."""
    metrics: dict[str, float] = {}
    in_report = False
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("["):
            in_report = line == "[report]"
            continue
        if not in_report or "=" not in line:
            continue
        key, value = (p.strip() for p in line.split("=", 1))
        if key in ("syntax_rate", "validated", "total", "coi_coverage", "kill_ratio"):
            metrics[key] = float(value)
    return metrics


def summarize(workspace) -> str:
    """Per-design rows plus per-group aggregates over evaluated entries."""
    entries = read_index(workspace)
    rows = []
    for entry in sorted(entries, key=lambda e: (e.group, e.design_id)):
        reports_dir = Path(workspace) / entry.design_id / "reports"
        report_files = sorted(reports_dir.glob("*.txt")) if reports_dir.is_dir() else []
        metrics = read_report_metrics(report_files[0]) if report_files else {}
        rows.append((entry, metrics))
    lines = [f"{'Design':<12} {'Group':<12} {'LOC':>6} {'Syntax %':>9} "
             f"{'Validated':>10} {'COI':>7} {'Kill':>7}"]
    for entry, m in rows:
        if m:
            lines.append(
                f"{entry.design_id:<12} {entry.group:<12} {entry.loc:>6} "
                f"{m.get('syntax_rate', 0.0) * 100:>9.2f} "
                f"{m.get('validated', 0.0):>10.1f} {m.get('coi_coverage', 0.0):>7.3f} "
                f"{m.get('kill_ratio', 0.0):>7.4f}"
            )
        else:
            lines.append(f"{entry.design_id:<12} {entry.group:<12} {entry.loc:>6} "
                         f"{'-':>9} {'-':>10} {'-':>7} {'-':>7}")
    lines.append("")
    lines.append(f"{'Group':<12} {'# Designs':>9} {'Avg. LOC':>9} {'Mean Kill':>10}")
    groups: dict[str, list[tuple[BenchmarkEntry, dict]]] = {}
    for entry, m in rows:
        groups.setdefault(entry.group, []).append((entry, m))
    for group in sorted(groups):
        members = groups[group]
        avg_loc = sum(e.loc for e, _ in members) / len(members)
        kills = [m.get("kill_ratio") for _, m in members if m]
        mean_kill = (sum(kills) / len(kills)) if kills else 0.0
        lines.append(f"{group:<12} {len(members):>9} {avg_loc:>9.1f} {mean_kill:>10.4f}")
    return "\n".join(lines) + "\n"
