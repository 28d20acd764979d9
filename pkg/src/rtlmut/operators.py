"""The 17 mutation operators: candidate matching, probe application, edits.

Four operator groups:
  indexing-bit-selection   IDX_OFFSET SHIFT_AMT PARTSEL_BOUND SLICE_MIRROR
  expression-control       TERNARY_BRANCH RELOP_SWAP GUARD_FORCE
                           CASE_SEMANTICS IF_REMOVE CASE_REMOVE
  constants-parameters     STMT_CONST ASSIGN_CONST INST_PARAM DELAY_CONST
  connectivity-dataflow    PORT_SWAP CONCAT_SWAP ASSIGN_DUP

Matching anchors candidates to statements inside the target signal's
in-module fan-in; application always works on fresh clones and never touches
the golden tree (clone isolation is property-tested).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .config import ALL_OPERATORS, CampaignConfig
from .connectivity import MutationTarget
from .elaborate import DesignUnit, Signal
from .emitter import emit, emit_expr, sanitize
from .errors import InfeasibleAtApplyError, ParseError, UnsupportedConstructError
from .nodes import Node, Path, clone, node_at, number_tree, structural_eq, walk_paths
from .parser import parse_text
from .source import parse_literal, perturb_literal, render_literal

OPERATOR_GROUPS = {
    "IDX_OFFSET": "indexing-bit-selection",
    "SHIFT_AMT": "indexing-bit-selection",
    "PARTSEL_BOUND": "indexing-bit-selection",
    "SLICE_MIRROR": "indexing-bit-selection",
    "TERNARY_BRANCH": "expression-control",
    "RELOP_SWAP": "expression-control",
    "GUARD_FORCE": "expression-control",
    "CASE_SEMANTICS": "expression-control",
    "IF_REMOVE": "expression-control",
    "CASE_REMOVE": "expression-control",
    "STMT_CONST": "constants-parameters",
    "ASSIGN_CONST": "constants-parameters",
    "INST_PARAM": "constants-parameters",
    "DELAY_CONST": "constants-parameters",
    "PORT_SWAP": "connectivity-dataflow",
    "CONCAT_SWAP": "connectivity-dataflow",
    "ASSIGN_DUP": "connectivity-dataflow",
}
assert tuple(OPERATOR_GROUPS) == ALL_OPERATORS

# Involutive by construction: applying the swap twice restores the operator.
RELOP_SWAP_TABLE = {
    "<": "<=", "<=": "<",
    ">": ">=", ">=": ">",
    "==": "!=", "!=": "==",
    "===": "!==", "!==": "===",
    "&&": "||", "||": "&&",
    "&": "|", "|": "&",
    "^": "~^", "~^": "^",
}


@dataclass(frozen=True)
class Candidate:
    target: MutationTarget
    operator: str
    path: Path              # anchor node path within the file's source tree
    variant: str
    file: str
    line: int
    col: int

    def order_key(self):
        return (self.file, self.line, self.col, self.operator, self.variant)


@dataclass(frozen=True)
class EditRecord:
    operator: str
    variant: str
    file: str
    line: int
    path: Path
    before: str
    after: str


@dataclass(frozen=True)
class Infeasible:
    reason: str


class _Reject(Exception):
    def __init__(self, reason: str):
        self.reason = reason


# -- module scopes for feasibility checks -------------------------------------

def module_scopes(design: DesignUnit) -> dict[str, dict[str, Signal]]:
    """Local signal tables per module, under its first-elaborated parameters."""
    scopes: dict[str, dict[str, Signal]] = {}
    for inst in design.instances():
        scopes.setdefault(inst.module, inst.signals)
    return scopes


def _port_widths(design: DesignUnit, module: str) -> dict[str, int]:
    scope = module_scopes(design).get(module, {})
    return {name: sig.width for name, sig in scope.items() if sig.port is not None}


# -- candidate matching --------------------------------------------------------

def _item_io(item: Node, design: DesignUnit) -> tuple[set[str], set[str]]:
    """(written local names, read local names) of one module item."""
    reads: set[str] = set()
    writes: set[str] = set()

    def lvalue_names(node: Node):
        if node.kind == "ident":
            writes.add(node.value)
            return
        if node.kind in ("bitsel", "partsel"):
            lvalue_names(node.children[0])
            for idx in node.children[1:]:
                reads.update(n.value for n in _idents(idx))
            return
        if node.kind == "concat":
            for child in node.children:
                lvalue_names(child)

    def _idents(node: Node):
        return [n for _, n in walk_paths(node) if n.kind == "ident"]

    if item.kind == "assign":
        children = [c for c in item.children if c.kind != "delay"]
        lvalue_names(children[0])
        reads.update(n.value for n in _idents(children[1]))
    elif item.kind == "always":
        event, body = item.children
        if event.value != "*":
            for ev in event.children:
                reads.update(n.value for n in _idents(ev.children[0]))
        stack = [body]
        while stack:
            cur = stack.pop()
            if cur.kind in ("blocking", "nonblocking"):
                lvalue_names(cur.children[0])
                reads.update(n.value for n in _idents(cur.children[1]))
                continue
            if cur.kind == "if":
                reads.update(n.value for n in _idents(cur.children[0]))
                stack.extend(cur.children[1:])
                continue
            if cur.kind == "case":
                reads.update(n.value for n in _idents(cur.children[0]))
                for it in cur.children[1:]:
                    for le in it.children[:-1]:
                        reads.update(n.value for n in _idents(le))
                    stack.append(it.children[-1])
                continue
            stack.extend(cur.children)
    elif item.kind == "instance":
        directions = _port_directions(design, item.value)
        inst_node = item.children[-1]
        port_order = list(directions)
        for pos, conn in enumerate(inst_node.children):
            pname = conn.value if conn.kind == "conn_named" else (
                port_order[pos] if pos < len(port_order) else None
            )
            if not conn.children or pname is None:
                continue
            direction = directions.get(pname, "input")
            if direction == "output":
                lvalue_names(conn.children[0])
            else:
                reads.update(n.value for n in _idents(conn.children[0]))
    return writes, reads


def _port_directions(design: DesignUnit, module: str) -> dict[str, str]:
    info = design.modules.get(module)
    if info is None:
        return {}
    directions: dict[str, str] = {}
    mod = info.node
    for port in mod.children[1].children:
        if port.kind == "port_decl":
            for d in port.children:
                if d.kind == "declarator":
                    directions[d.value] = port.value
        else:
            directions[port.value] = "input"  # refined by body decls below
    for item in mod.children[2:]:
        if item.kind == "port_decl":
            for d in item.children:
                if d.kind == "declarator":
                    directions[d.value] = item.value
    return directions


def fanin_items(design: DesignUnit, target: MutationTarget) -> list[tuple[Path, Node]]:
    """Module items in the in-module fan-in closure of the target signal."""
    info = design.modules[target.module]
    items: list[tuple[Path, Node, set[str], set[str]]] = []
    for idx, item in enumerate(info.node.children[2:], start=2):
        if item.kind in ("assign", "always", "instance"):
            writes, reads = _item_io(item, design)
            items.append(((info.file_child_index, idx), item, writes, reads))
    wanted = {target.signal}
    chosen: dict[int, tuple[Path, Node]] = {}
    changed = True
    while changed:
        changed = False
        for i, (path, item, writes, reads) in enumerate(items):
            if i in chosen or not (writes & wanted):
                continue
            chosen[i] = (path, item)
            wanted |= reads
            changed = True
    return [chosen[i] for i in sorted(chosen)]


def match_candidates(design: DesignUnit, targets: list[MutationTarget],
                     cfg: CampaignConfig) -> list[Candidate]:
    """Enumerate (target, operator, anchor, variant) tuples, deterministically."""
    ops = set(cfg.operators)
    validity = [re.compile(p, re.IGNORECASE) for p in cfg.validity_patterns]
    scopes = module_scopes(design)
    out: list[Candidate] = []
    seen: set[tuple] = set()

    for target in sorted(targets):
        scope = scopes.get(target.module, {})
        for item_path, item in fanin_items(design, target):
            for rel, node in walk_paths(item, item_path):
                for op, variant in _anchors(node, rel, item, design, scope, ops, validity):
                    key = (op, target.file, rel, variant)
                    if key in seen:
                        continue
                    seen.add(key)
                    span = node.span
                    out.append(Candidate(
                        target=target, operator=op, path=rel, variant=variant,
                        file=target.file,
                        line=span.line if span else 0,
                        col=span.col if span else 0,
                    ))
    out.sort(key=Candidate.order_key)
    return out


def _in_index_position(item: Node, path: Path, rel: Path) -> bool:
    """True if the node at rel sits inside a bit-select index or an indexed
    part-select offset, relative to the enclosing item at `path`."""
    cur = item
    for depth in range(len(path), len(rel) - 1):
        idx = rel[depth]
        child = cur.children[idx]
        if cur.kind == "bitsel" and idx == 1:
            return True
        if cur.kind == "partsel" and cur.value is not None and idx == 1:
            return True
        cur = child
    return False


def _under_delay(item: Node, path: Path, rel: Path) -> bool:
    cur = item
    for depth in range(len(path), len(rel)):
        if cur.kind == "delay" or (cur.kind == "delay_stmt" and rel[depth] == 0):
            return True
        cur = cur.children[rel[depth]]
    return cur.kind == "delay"


def _assignment_count(node: Node) -> int:
    count = 0
    stack = [node]
    while stack:
        cur = stack.pop()
        if cur.kind in ("blocking", "nonblocking"):
            count += 1
        stack.extend(cur.children)
    return count


def _rhs_paths(item: Node, path: Path) -> list[Path]:
    """Paths of RHS subtrees of all assignments under an item."""
    out = []
    for rel, node in walk_paths(item, path):
        if node.kind in ("blocking", "nonblocking"):
            out.append(rel + (1,))
        elif node.kind == "assign":
            offset = 1 if node.children[0].kind == "delay" else 0
            out.append(rel + (offset + 1,))
    return out


def _under_any(prefixes: list[Path], rel: Path) -> bool:
    return any(rel[:len(p)] == p for p in prefixes)


def _anchors(node: Node, rel: Path, item: Node, design: DesignUnit,
             scope: dict[str, Signal], ops: set[str], validity) -> list[tuple[str, str]]:
    found: list[tuple[str, str]] = []
    kind = node.kind

    if kind == "number":
        item_root_path = rel[:_ITEM_PATH_LEN]
        under_delay = _under_delay(item, item_root_path, rel)
        if "DELAY_CONST" in ops and under_delay:
            found.append(("DELAY_CONST", ""))
        if not under_delay:
            if "IDX_OFFSET" in ops and _in_index_position(item, item_root_path, rel):
                found.append(("IDX_OFFSET", ""))
            if "STMT_CONST" in ops and item.kind == "always" and _assignment_count(item) >= 2:
                found.append(("STMT_CONST", ""))
            if "ASSIGN_CONST" in ops and _under_any(_rhs_paths(item, item_root_path), rel):
                found.append(("ASSIGN_CONST", ""))
    elif kind == "binop":
        if "SHIFT_AMT" in ops and node.value in ("<<", ">>", "<<<", ">>>") \
                and node.children[1].kind == "number":
            found.append(("SHIFT_AMT", ""))
        if "RELOP_SWAP" in ops and node.value in RELOP_SWAP_TABLE:
            found.append(("RELOP_SWAP", ""))
    elif kind == "partsel" and node.value is None \
            and node.children[1].kind == "number" and node.children[2].kind == "number":
        if "PARTSEL_BOUND" in ops:
            for variant in ("msb+1", "msb-1", "lsb+1", "lsb-1"):
                found.append(("PARTSEL_BOUND", variant))
        if "SLICE_MIRROR" in ops:
            found.append(("SLICE_MIRROR", ""))
    elif kind == "ternary" and "TERNARY_BRANCH" in ops:
        for variant in ("force-true", "force-false", "swap"):
            found.append(("TERNARY_BRANCH", variant))
    elif kind == "if" and "GUARD_FORCE" in ops:
        cond_idents = [n.value for _, n in walk_paths(node.children[0]) if n.kind == "ident"]
        if any(r.search(name) for r in validity for name in cond_idents):
            for variant in ("1'b1", "1'b0"):
                found.append(("GUARD_FORCE", variant))
    elif kind == "case":
        n_items = len(node.children) - 1
        if "CASE_SEMANTICS" in ops:
            if node.value == "case":
                found.append(("CASE_SEMANTICS", "to-casez"))
                found.append(("CASE_SEMANTICS", "to-casex"))
            else:
                found.append(("CASE_SEMANTICS", "to-case"))
            for i in range(n_items - 1):
                found.append(("CASE_SEMANTICS", f"swap{i}"))
        if "CASE_REMOVE" in ops and n_items >= 2:
            for i, it in enumerate(node.children[1:]):
                if it.value != "default":
                    found.append(("CASE_REMOVE", f"arm{i}"))
    elif kind == "concat" and "CONCAT_SWAP" in ops:
        for i in range(len(node.children) - 1):
            found.append(("CONCAT_SWAP", f"{i}"))
    elif kind == "instance" and "PORT_SWAP" in ops:
        widths = _port_widths(design, node.value)
        conns = node.children[-1].children
        named = [(i, c) for i, c in enumerate(conns)
                 if c.kind == "conn_named" and c.children]
        for a in range(len(named)):
            for b in range(a + 1, len(named)):
                pa, pb = named[a][1].value, named[b][1].value
                if pa in widths and pb in widths and widths[pa] == widths[pb]:
                    found.append(("PORT_SWAP", f"{pa}-{pb}"))

    if kind == "instance" and "INST_PARAM" in ops and node.children[0].kind == "param_args":
        for i, conn in enumerate(node.children[0].children):
            if conn.children and conn.children[0].kind == "number":
                found.append(("INST_PARAM", conn.value or f"pos{i}"))

    if kind == "if" and "IF_REMOVE" in ops:
        if node.children[1].kind != "null_stmt":
            found.append(("IF_REMOVE", "then"))
        if len(node.children) > 2:
            found.append(("IF_REMOVE", "else"))

    if kind in ("blocking", "nonblocking") and "ASSIGN_DUP" in ops:
        has_number = any(n.kind == "number" for _, n in walk_paths(node.children[1]))
        if has_number:
            found.append(("ASSIGN_DUP", ""))
    return found


# module items sit at (file_child_index, item_index) under the file root
_ITEM_PATH_LEN = 2


# -- application ----------------------------------------------------------------

def _number_node(text: str) -> Node:
    return Node("number", text)


def _render_bound(orig_text: str, value: int) -> str:
    """Render a select bound, falling back to unsized decimal when the new
    value does not fit the original literal's width."""
    if value < 0:
        raise _Reject("range")
    size, base, _ = parse_literal(orig_text)
    if size is not None and value >= (1 << size):
        return str(value)
    return render_literal(size, base, value)


def _check_index_range(node_path: Path, root: Node, new_value: int,
                       scope: dict[str, Signal]):
    """Static range check when the literal is a whole bit-select index."""
    if len(node_path) == 0:
        return
    parent = node_at(root, node_path[:-1])
    if parent.kind != "bitsel" or node_path[-1] != 1:
        return
    base = parent.children[0]
    if base.kind != "ident" or base.value not in scope:
        return
    sig = scope[base.value]
    if sig.array is not None:
        lo, hi = sorted(sig.array)
        if not (lo <= new_value <= hi):
            raise _Reject("range")
    else:
        if not (sig.lsb <= new_value <= sig.msb):
            raise _Reject("range")


def apply_edit(root: Node, path: Path, operator: str, variant: str,
               cfg: CampaignConfig, scope: dict[str, Signal]) -> tuple[str, str]:
    """Apply one operator at `path` in `root` (a private clone), in place.

    Returns (before_fragment, after_fragment) as emitted text. Raises _Reject
    when the edit is infeasible at this site.
    """
    node = node_at(root, path)
    before = _fragment(node)

    def replace(new: Node) -> tuple[str, str]:
        parent = node_at(root, path[:-1])
        parent.children[path[-1]] = new
        return before, _fragment(new)

    if operator in ("IDX_OFFSET", "STMT_CONST", "ASSIGN_CONST", "DELAY_CONST", "SHIFT_AMT"):
        target = node.children[1] if operator == "SHIFT_AMT" else node
        if target.kind != "number":
            raise _Reject("anchor is not a literal")
        new_text = perturb_literal(target.value, cfg.delta)
        if new_text == target.value:
            raise _Reject("no-op")
        if operator == "IDX_OFFSET":
            _check_index_range(path, root, parse_literal(new_text)[2], scope)
        if operator == "SHIFT_AMT":
            node.children[1] = _number_node(new_text)
            return before, _fragment(node)
        return replace(_number_node(new_text))

    if operator == "INST_PARAM":
        if node.kind != "instance" or node.children[0].kind != "param_args":
            raise _Reject("anchor is not a parameterized instance")
        for i, conn in enumerate(node.children[0].children):
            name = conn.value or f"pos{i}"
            if name == variant and conn.children and conn.children[0].kind == "number":
                new_text = perturb_literal(conn.children[0].value, cfg.delta)
                if new_text == conn.children[0].value:
                    raise _Reject("no-op")
                conn.children[0] = _number_node(new_text)
                return before, _fragment(node)
        raise _Reject("parameter binding not found")

    if operator in ("PARTSEL_BOUND", "SLICE_MIRROR"):
        if node.kind != "partsel" or node.value is not None:
            raise _Reject("anchor is not a constant part select")
        base = node.children[0]
        if base.kind != "ident" or base.value not in scope:
            raise _Reject("unknown base range")
        sig = scope[base.value]
        msb = parse_literal(node.children[1].value)[2]
        lsb = parse_literal(node.children[2].value)[2]
        if operator == "PARTSEL_BOUND":
            delta = 1 if "+" in variant else -1
            endpoint = variant[:3]
            new_msb = msb + delta if endpoint == "msb" else msb
            new_lsb = lsb + delta if endpoint == "lsb" else lsb
            if not (sig.lsb <= new_lsb <= new_msb <= sig.msb):
                raise _Reject("range")
        else:
            if not (sig.lsb <= lsb <= msb <= sig.msb):
                raise _Reject("slice out of declared range")
            new_msb = sig.msb + sig.lsb - lsb
            new_lsb = sig.msb + sig.lsb - msb
            if (new_msb, new_lsb) == (msb, lsb):
                raise _Reject("no-op")
        node.children[1] = _number_node(_render_bound(node.children[1].value, new_msb))
        node.children[2] = _number_node(_render_bound(node.children[2].value, new_lsb))
        return before, _fragment(node)

    if operator == "TERNARY_BRANCH":
        if node.kind != "ternary":
            raise _Reject("anchor is not a ternary")
        cond, t, f = node.children
        if variant == "force-true":
            return replace(clone(t))
        if variant == "force-false":
            return replace(clone(f))
        if structural_eq(t, f):
            raise _Reject("no-op")
        node.children = [cond, f, t]
        return before, _fragment(node)

    if operator == "RELOP_SWAP":
        if node.kind != "binop" or node.value not in RELOP_SWAP_TABLE:
            raise _Reject("operator not swappable")
        node.value = RELOP_SWAP_TABLE[node.value]
        return before, _fragment(node)

    if operator == "GUARD_FORCE":
        if node.kind != "if":
            raise _Reject("anchor is not an if")
        before_cond = _fragment(node.children[0])
        node.children[0] = _number_node(variant)
        return before_cond, _fragment(node.children[0])

    if operator == "CASE_SEMANTICS":
        if node.kind != "case":
            raise _Reject("anchor is not a case")
        if variant in ("to-casez", "to-casex", "to-case"):
            new_kind = variant[3:]
            if node.value == new_kind:
                raise _Reject("no-op")
            node.value = new_kind
            return before, _fragment(node)
        i = int(variant[4:])
        items = node.children[1:]
        if i + 1 >= len(items):
            raise _Reject("no adjacent arm")
        a, b = items[i], items[i + 1]
        if structural_eq(a.children[-1], b.children[-1]):
            raise _Reject("no-op")
        a.children[-1], b.children[-1] = b.children[-1], a.children[-1]
        return before, _fragment(node)

    if operator == "IF_REMOVE":
        if node.kind != "if":
            raise _Reject("anchor is not an if")
        if variant == "then":
            if node.children[1].kind == "null_stmt":
                raise _Reject("no-op")
            node.children[1] = Node("null_stmt")
            return before, _fragment(node)
        if len(node.children) < 3:
            raise _Reject("no else branch")
        node.children = node.children[:2]
        return before, _fragment(node)

    if operator == "CASE_REMOVE":
        if node.kind != "case":
            raise _Reject("anchor is not a case")
        i = int(variant[3:]) + 1
        if i >= len(node.children) or len(node.children) <= 2:
            raise _Reject("cannot remove")
        if node.children[i].value == "default":
            raise _Reject("default arm")
        del node.children[i]
        return before, _fragment(node)

    if operator == "PORT_SWAP":
        if node.kind != "instance":
            raise _Reject("anchor is not an instance")
        pa, pb = variant.split("-")
        conns = node.children[-1].children
        ca = next((c for c in conns if c.kind == "conn_named" and c.value == pa), None)
        cb = next((c for c in conns if c.kind == "conn_named" and c.value == pb), None)
        if ca is None or cb is None or not ca.children or not cb.children:
            raise _Reject("connection not found")
        if structural_eq(ca.children[0], cb.children[0]):
            raise _Reject("no-op")
        ca.children[0], cb.children[0] = cb.children[0], ca.children[0]
        return before, _fragment(node)

    if operator == "CONCAT_SWAP":
        if node.kind != "concat":
            raise _Reject("anchor is not a concat")
        i = int(variant)
        if i + 1 >= len(node.children):
            raise _Reject("no adjacent operand")
        if structural_eq(node.children[i], node.children[i + 1]):
            raise _Reject("no-op")
        node.children[i], node.children[i + 1] = node.children[i + 1], node.children[i]
        return before, _fragment(node)

    if operator == "ASSIGN_DUP":
        if node.kind not in ("blocking", "nonblocking"):
            raise _Reject("anchor is not a procedural assignment")
        parent = node_at(root, path[:-1])
        if parent.kind != "block":
            raise _Reject("assignment not inside a begin/end block")
        dup = clone(node)
        for _, n in walk_paths(dup.children[1]):
            if n.kind == "number":
                new_text = perturb_literal(n.value, cfg.delta)
                if new_text == n.value:
                    raise _Reject("no-op")
                n.value = new_text
                break
        else:
            raise _Reject("no literal on the right-hand side")
        parent.children.insert(path[-1] + 1, dup)
        return before, _fragment(node) + "\n" + _fragment(dup)

    raise _Reject(f"unknown operator {operator}")


def probe_apply(design: DesignUnit, cand: Candidate,
                cfg: CampaignConfig) -> EditRecord | Infeasible:
    """Try the edit on a fresh clone of the target module; never raises.

    Returns a concrete EditRecord iff the edit changes the tree, stays within
    declared ranges, and the mutated module re-emits to parseable text.
    """
    info = design.modules[cand.target.module]
    scope = module_scopes(design).get(cand.target.module, {})
    module_clone = clone(info.node)
    rel = cand.path[1:]  # drop the module's own index under the file root
    wrapper = Node("source", None, [module_clone])
    full_rel = (0,) + rel
    try:
        before, after = apply_edit(wrapper, full_rel, cand.operator,
                                   cand.variant, cfg, scope)
    except _Reject as rej:
        return Infeasible(rej.reason)
    if structural_eq(info.node, module_clone):
        return Infeasible("no-op")
    try:
        text = emit(sanitize(module_clone))
        reparsed = parse_text(text, f"<probe:{cand.file}>")
    except (ParseError, UnsupportedConstructError, ValueError) as exc:
        return Infeasible(f"reparse: {exc}")
    if not structural_eq(reparsed.children[0], module_clone):
        return Infeasible("reparse mismatch")
    return EditRecord(
        operator=cand.operator, variant=cand.variant, file=cand.file,
        line=cand.line, path=cand.path, before=before, after=after,
    )


def _fragment(node: Node) -> str:
    return emit(node).rstrip("\n")


def apply_operator(design: DesignUnit, cand: Candidate, cfg: CampaignConfig,
                   expected: Optional[EditRecord] = None) -> tuple[Node, EditRecord]:
    """Materialize the mutant file tree; exactly one subtree replaced."""
    scope = module_scopes(design).get(cand.target.module, {})
    file_root = clone(design.asts[cand.file])
    try:
        before, after = apply_edit(file_root, cand.path, cand.operator,
                                   cand.variant, cfg, scope)
    except _Reject as rej:
        raise InfeasibleAtApplyError(f"{cand.operator}@{cand.path}: {rej.reason}")
    record = EditRecord(
        operator=cand.operator, variant=cand.variant, file=cand.file,
        line=cand.line, path=cand.path, before=before, after=after,
    )
    if expected is not None and (record.before != expected.before
                                 or record.after != expected.after):
        raise InfeasibleAtApplyError("tree changed between probe and apply")
    number_tree(file_root)
    return file_root, record
