"""Signal connectivity graph, clock/reset classification, target resolution.

Node kinds:
  primary-input    top-level input port
  port-through     single driver that is a pure rename (bare identifier or
                   full-range part select of an equal signal, as a continuous
                   assign or port connection)
  driven-by-logic  anything else with a driver: operators, literals,
                   conditionals, procedural writes, partial-lvalue writes,
                   multiple drivers
  constant         no driver at all (reads as 0 in two-state simulation)

Literal-only right-hand sides count as driven-by-logic: a hardwired value is
a design decision, not a structural pass-through, and it is mutable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ElaborationError, NoLogicDriverError, UnknownSpecSignalError
from .nodes import Node, walk
from .elaborate import DesignUnit, Instance, Signal, Statement

DEFAULT_RESET_PATTERNS = (r"(rst|reset|clr|clear)(_?n)?",)


@dataclass
class ConnEdge:
    src: str
    dst: str
    label: str   # "file:child/indices/of/driving/statement"


@dataclass
class ConnectivityGraph:
    kinds: dict[str, str] = field(default_factory=dict)
    fanin: dict[str, list[ConnEdge]] = field(default_factory=dict)
    passthrough_src: dict[str, str] = field(default_factory=dict)

    def add_node(self, qual: str):
        self.kinds.setdefault(qual, "constant")
        self.fanin.setdefault(qual, [])

    def add_edge(self, src: str, dst: str, label: str):
        if src not in self.kinds or dst not in self.kinds:
            raise ElaborationError(f"edge endpoint missing: {src} -> {dst}")
        self.fanin[dst].append(ConnEdge(src, dst, label))

    def edge_set(self) -> set[tuple[str, str]]:
        return {(e.src, e.dst) for edges in self.fanin.values() for e in edges}

    def backward_reachable(self, roots) -> set[str]:
        """roots plus every signal with a structural path into them."""
        seen = set()
        stack = [r for r in roots if r in self.kinds]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            for edge in self.fanin[cur]:
                if edge.src not in seen:
                    stack.append(edge.src)
        return seen


@dataclass(frozen=True, order=True)
class MutationTarget:
    module: str
    signal: str
    file: str


def expr_signals(node: Node, inst: Instance) -> list[str]:
    """Qualified names of instance signals read by an expression, in order."""
    out = []
    for n in walk(node):
        if n.kind == "ident":
            if n.value in inst.signals:
                out.append(inst.signals[n.value].qual)
            elif n.value in inst.params:
                continue
            else:
                raise ElaborationError(
                    f"{inst.module}: undeclared identifier '{n.value}'"
                )
    return out


def lvalue_parts(node: Node, inst: Instance) -> list[tuple[Signal, list[Node], bool]]:
    """Decompose an assignment target into (signal, index exprs, whole) parts."""
    if node.kind == "ident":
        if node.value not in inst.signals:
            raise ElaborationError(f"{inst.module}: undeclared assignment target '{node.value}'")
        return [(inst.signals[node.value], [], True)]
    if node.kind == "bitsel":
        base = lvalue_parts(node.children[0], inst)
        sig, idx, _ = base[0]
        return [(sig, idx + [node.children[1]], False)]
    if node.kind == "partsel":
        base = lvalue_parts(node.children[0], inst)
        sig, idx, _ = base[0]
        return [(sig, idx + [node.children[1], node.children[2]], False)]
    if node.kind == "concat":
        parts = []
        for child in node.children:
            parts.extend(p[:2] + (False,) for p in lvalue_parts(child, inst))
        return parts
    raise ElaborationError(f"{inst.module}: unsupported assignment target {node.kind}")


def _is_rename(rhs: Node, inst: Instance) -> str | None:
    """Qualified source if rhs is a bare identifier or bit-identical rename."""
    if rhs.kind == "ident" and rhs.value in inst.signals:
        return inst.signals[rhs.value].qual
    if rhs.kind == "partsel" and rhs.value is None and rhs.children[0].kind == "ident":
        base = rhs.children[0].value
        if base not in inst.signals:
            return None
        sig = inst.signals[base]
        try:
            msb = int(rhs.children[1].value) if rhs.children[1].kind == "number" else None
            lsb = int(rhs.children[2].value) if rhs.children[2].kind == "number" else None
        except ValueError:
            return None
        if msb == sig.msb and lsb == sig.lsb:
            return sig.qual
    return None


def build_connectivity(design: DesignUnit) -> ConnectivityGraph:
    graph = ConnectivityGraph()
    for inst in design.instances():
        for sig in inst.signals.values():
            graph.add_node(sig.qual)

    drive_count: dict[str, int] = {}

    def drive(qual: str, kind: str, src: str | None = None):
        drive_count[qual] = drive_count.get(qual, 0) + 1
        if drive_count[qual] > 1 or kind == "driven-by-logic":
            graph.kinds[qual] = "driven-by-logic"
            graph.passthrough_src.pop(qual, None)
            return
        graph.kinds[qual] = kind
        if kind == "port-through" and src is not None:
            graph.passthrough_src[qual] = src

    def connect_assign(lhs: Node, rhs: Node, inst: Instance, label: str):
        base_reads = expr_signals(rhs, inst)
        parts = lvalue_parts(lhs, inst)
        for sig, index_exprs, whole in parts:
            reads = list(base_reads)
            for idx in index_exprs:
                reads.extend(expr_signals(idx, inst))
            for src in dict.fromkeys(reads):
                graph.add_edge(src, sig.qual, label)
            rename = _is_rename(rhs, inst) if (whole and len(parts) == 1) else None
            if rename is not None:
                drive(sig.qual, "port-through", rename)
            else:
                drive(sig.qual, "driven-by-logic")

    for inst in design.instances():
        for stmt in inst.statements:
            label = f"{stmt.file}:" + "/".join(map(str, stmt.path))
            if stmt.kind == "assign":
                children = [c for c in stmt.node.children if c.kind != "delay"]
                connect_assign(children[0], children[1], inst, label)
            else:
                _connect_always(stmt, inst, graph, drive, label)
        for binding in inst.bindings:
            _connect_binding(binding, inst, design, graph, drive)

    for inst in design.instances():
        for sig in inst.signals.values():
            if drive_count.get(sig.qual, 0) == 0 and sig.port == "input" and inst.path == "":
                graph.kinds[sig.qual] = "primary-input"
    return graph


def _connect_always(stmt: Statement, inst: Instance, graph: ConnectivityGraph,
                    drive, label: str):
    event, body = stmt.node.children
    event_reads: list[str] = []
    if event.value != "*":
        for ev in event.children:
            if ev.value in ("posedge", "negedge"):
                event_reads.extend(expr_signals(ev.children[0], inst))

    def visit(node: Node, guards: list[str]):
        if node.kind in ("blocking", "nonblocking"):
            lhs, rhs = node.children
            reads = expr_signals(rhs, inst) + guards + event_reads
            for sig, index_exprs, _ in lvalue_parts(lhs, inst):
                r = list(reads)
                for idx in index_exprs:
                    r.extend(expr_signals(idx, inst))
                for src in dict.fromkeys(r):
                    graph.add_edge(src, sig.qual, label)
                drive(sig.qual, "driven-by-logic")
            return
        if node.kind == "if":
            cond_reads = expr_signals(node.children[0], inst)
            visit(node.children[1], guards + cond_reads)
            if len(node.children) > 2:
                visit(node.children[2], guards + cond_reads)
            return
        if node.kind == "case":
            subj_reads = expr_signals(node.children[0], inst)
            for item in node.children[1:]:
                label_reads: list[str] = []
                for le in item.children[:-1]:
                    label_reads.extend(expr_signals(le, inst))
                visit(item.children[-1], guards + subj_reads + label_reads)
            return
        if node.kind == "block":
            for child in node.children:
                visit(child, guards)
            return
        if node.kind == "delay_stmt":
            if len(node.children) > 1:
                visit(node.children[1], guards)
            return
        if node.kind == "null_stmt":
            return
        raise ElaborationError(f"{inst.module}: unexpected {node.kind} in always block")

    visit(body, [])


def _connect_binding(binding, parent: Instance, design: DesignUnit,
                     graph: ConnectivityGraph, drive):
    formal = binding.formal
    if binding.actual is None:
        return
    if binding.direction == "input":
        reads = expr_signals(binding.actual, parent)
        for src in dict.fromkeys(reads):
            graph.add_edge(src, formal.qual, binding.label)
        rename = _is_rename(binding.actual, parent)
        if rename is not None:
            drive(formal.qual, "port-through", rename)
        else:
            drive(formal.qual, "driven-by-logic")
    else:
        for sig, index_exprs, whole in lvalue_parts(binding.actual, parent):
            reads = [formal.qual]
            for idx in index_exprs:
                reads.extend(expr_signals(idx, parent))
            for src in dict.fromkeys(reads):
                graph.add_edge(src, sig.qual, binding.label)
            if whole and binding.actual.kind == "ident":
                drive(sig.qual, "port-through", formal.qual)
            else:
                drive(sig.qual, "driven-by-logic")


def classify_clock_reset(design: DesignUnit,
                         reset_patterns=DEFAULT_RESET_PATTERNS,
                         graph: ConnectivityGraph | None = None) -> set[str]:
    """Signals in edge-sensitive event lists, plus name-matched sync resets.

    The set is closed backward over pass-through renames so the top-level
    clock/reset names are classified even when the sequential logic lives in
    child instances.
    """
    regexes = [re.compile(p, re.IGNORECASE) for p in reset_patterns]
    result: set[str] = set()
    for inst in design.instances():
        for stmt in inst.statements:
            if stmt.kind != "always":
                continue
            event, body = stmt.node.children
            edges = [ev for ev in (event.children if event.value != "*" else [])
                     if ev.value in ("posedge", "negedge")]
            if not edges:
                continue
            for ev in edges:
                result.update(expr_signals(ev.children[0], inst))
            first = body
            if first.kind == "block" and first.children:
                first = first.children[0]
            if first.kind == "if":
                for qual in expr_signals(first.children[0], inst):
                    local = qual.rsplit(".", 1)[-1]
                    if any(r.fullmatch(local) for r in regexes):
                        result.add(qual)
    if graph is None:
        graph = build_connectivity(design)
    frontier = list(result)
    while frontier:
        cur = frontier.pop()
        src = graph.passthrough_src.get(cur)
        if src is not None and src not in result:
            result.add(src)
            frontier.append(src)
    return result


def resolve_targets(design: DesignUnit, spec_signals: list[str],
                    graph: ConnectivityGraph | None = None,
                    clocks_resets: set[str] | None = None,
                    reset_patterns=DEFAULT_RESET_PATTERNS) -> list[MutationTarget]:
    """Trace each spec signal to its first non-pass-through driver."""
    if graph is None:
        graph = build_connectivity(design)
    if clocks_resets is None:
        clocks_resets = classify_clock_reset(design, reset_patterns, graph)
    table = design.all_signals()
    targets: list[MutationTarget] = []
    for name in spec_signals:
        if name not in table or table[name].instance != "":
            raise UnknownSpecSignalError(name)
        if name in clocks_resets:
            continue
        cur = name
        seen = {cur}
        while graph.kinds.get(cur) == "port-through":
            cur = graph.passthrough_src[cur]
            if cur in seen:
                raise ElaborationError(f"pass-through cycle at '{cur}'")
            seen.add(cur)
        kind = graph.kinds.get(cur)
        if kind in ("primary-input", "constant"):
            raise NoLogicDriverError(name)
        if cur in clocks_resets:
            continue
        sig = table[cur]
        targets.append(MutationTarget(module=sig.module, signal=sig.name, file=sig.file))
    return sorted(set(targets))


def targets_table(targets: list[MutationTarget]) -> str:
    lines = [f"{t.module}\t{t.signal}\t{t.file}" for t in targets]
    return "\n".join(lines) + ("\n" if lines else "")
