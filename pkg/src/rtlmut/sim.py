"""Deterministic two-state cycle simulator for elaborated designs.

Semantics (documented substitutions for event-driven, four-state simulation):
  * All storage is zero-initialized (or to its declaration initializer).
  * Every global cycle fires every edge-sensitive block once, regardless of
    edge polarity; all clocks advance together. Sequential blocks evaluate in
    document order with blocking writes visible immediately; nonblocking
    writes commit at the cycle boundary.
  * Combinational logic (continuous assigns, level/star-sensitive blocks,
    port bindings) is evaluated once per settle pass in topological order;
    cyclic dependencies are rejected at compile.
  * Delay controls are parsed but ignored, with a per-model warning.
  * Out-of-range bit/part selects read 0 and drop writes (Verilog would
    return X; this simulator is two-state).
  * Division or modulo by zero yields 0.

The per-cycle sample point is after input drive and combinational settle,
before the clock edge: a register written with `q <= d` shows d(t) at t+1.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .errors import (
    CombinationalLoopError,
    ShapeMismatchError,
    SimulationFailureError,
    UnsupportedForSimError,
    WidthMismatchError,
)
from .nodes import Node
from .elaborate import DesignUnit, Instance, Signal
from .connectivity import DEFAULT_RESET_PATTERNS, classify_clock_reset, expr_signals, lvalue_parts
from .source import literal_width, parse_literal

_M64 = (1 << 64) - 1


def _mask(width: int) -> int:
    return (1 << width) - 1


def _extract(value: int, width: int, lsb: int, sel_low: int, sel_w: int) -> int:
    """Bits sel_low..sel_low+sel_w-1 (declared numbering) of a stored field.

    The field holds `width` bits whose lowest declared index is `lsb`;
    out-of-range positions read as 0.
    """
    pos = sel_low - lsb
    if pos >= 0:
        return (value >> pos) & _mask(sel_w)
    return (value << -pos) & _mask(sel_w)


@dataclass
class Unit:
    """One schedulable item: a continuous assign, a port binding, or a block."""
    label: str
    reads: frozenset[int]
    writes: frozenset[int]
    exec_comb: Optional[Callable] = None   # fn(state) for combinational units
    exec_seq: Optional[Callable] = None    # fn(state, nba) for sequential units


@dataclass
class CompiledModel:
    design: DesignUnit
    slots: dict[str, int]               # qualified signal name -> state index
    names: list[str]                    # slot -> qualified name
    widths: list[int]
    inits: list[object]                 # int, or list for memories
    comb_units: list[Unit]              # topologically ordered
    seq_units: list[Unit]               # document order
    primary_inputs: list[str]           # all top-level inputs, sorted
    clock_inputs: list[str]
    reset_inputs: list[str]
    data_inputs: list[str]              # primary inputs minus clocks/resets
    observed: list[str]                 # sorted observation set
    warnings: list[str] = field(default_factory=list)

    def input_bits(self) -> int:
        return sum(self.widths[self.slots[q]] for q in self.data_inputs)

    def fresh_state(self) -> list:
        return [v.copy() if isinstance(v, list) else v for v in self.inits]

    def is_combinational(self) -> bool:
        return not self.seq_units


@dataclass
class Stimulus:
    """Reproducible input schedule: seeded random, exhaustive, or explicit."""
    kind: str = "random"                 # 'random' | 'exhaustive' | 'explicit'
    seed: int = 0
    cycles: int = 64
    reset_cycles: int = 4
    explicit: Optional[dict[str, list[int]]] = None

    def describe(self) -> str:
        if self.kind == "random":
            return f"random seed={self.seed} cycles={self.cycles} reset={self.reset_cycles}"
        if self.kind == "exhaustive":
            return "exhaustive"
        return f"explicit cycles={self.cycles}"


@dataclass
class Trace:
    design_id: str
    stimulus: str
    signals: list[str]
    widths: list[int]
    values: list[list]                   # per cycle, aligned with signals

    @property
    def cycles(self) -> int:
        return len(self.values)

    def value(self, cycle: int, signal: str):
        return self.values[cycle][self.signals.index(signal)]

    def column(self, signal: str) -> list:
        idx = self.signals.index(signal)
        return [row[idx] for row in self.values]

    def to_text(self) -> str:
        lines = [f"# trace {self.design_id}", f"# stimulus {self.stimulus}",
                 "# signals " + " ".join(f"{s}:{w}" for s, w in zip(self.signals, self.widths))]
        for t, row in enumerate(self.values):
            cells = []
            for v in row:
                if isinstance(v, tuple):
                    cells.append("[" + ",".join(format(x, "x") for x in v) + "]")
                else:
                    cells.append(format(v, "x"))
            lines.append(f"{t} " + " ".join(cells))
        return "\n".join(lines) + "\n"


# -- expression compilation ---------------------------------------------------

class _Compiler:
    def __init__(self, model_slots, widths, depths, inst: Instance, warnings: list[str]):
        self.slots = model_slots
        self.widths = widths
        self.depths = depths
        self.inst = inst
        self.warnings = warnings

    def slot_of(self, name: str) -> int:
        return self.slots[self.inst.signals[name].qual]

    def sig(self, name: str) -> Signal:
        return self.inst.signals[name]

    def self_width(self, node: Node) -> int:
        kind = node.kind
        if kind == "number":
            return literal_width(node.value)
        if kind == "ident":
            if node.value in self.inst.signals:
                return self.inst.signals[node.value].width
            return 32  # folded parameter
        if kind == "binop":
            op = node.value
            if op in ("&&", "||", "==", "!=", "===", "!==", "<", "<=", ">", ">="):
                return 1
            if op in ("<<", ">>", "<<<", ">>>", "**"):
                return self.self_width(node.children[0])
            return max(self.self_width(node.children[0]), self.self_width(node.children[1]))
        if kind == "unop":
            if node.value in ("!", "&", "|", "^", "~&", "~|", "~^"):
                return 1
            return self.self_width(node.children[0])
        if kind == "ternary":
            return max(self.self_width(node.children[1]), self.self_width(node.children[2]))
        if kind == "concat":
            return sum(self.self_width(c) for c in node.children)
        if kind == "repl":
            from .elaborate import eval_const
            count = eval_const(node.children[0], self.inst.params, "repl count")
            return count * sum(self.self_width(c) for c in node.children[1:])
        if kind == "bitsel":
            base = node.children[0]
            if base.kind == "ident" and base.value in self.inst.signals:
                sig = self.inst.signals[base.value]
                if sig.array is not None:
                    return sig.width  # memory element
            return 1
        if kind == "partsel":
            if node.value is None:
                msb = self._const_or_none(node.children[1])
                lsb = self._const_or_none(node.children[2])
                if msb is None or lsb is None:
                    raise UnsupportedForSimError("non-constant part-select bounds without +:/-:")
                return msb - lsb + 1
            w = self._const_or_none(node.children[2])
            if w is None:
                raise UnsupportedForSimError("non-constant indexed part-select width")
            return w
        raise UnsupportedForSimError(f"expression kind {kind}")

    def _const_or_none(self, node: Node) -> Optional[int]:
        from .elaborate import ParameterNotConstantError, eval_const
        try:
            return eval_const(node, self.inst.params, "select bound")
        except ParameterNotConstantError:
            return None

    def compile(self, node: Node, ctx: int) -> Callable:
        """Compile to fn(state) -> int, evaluated at width max(ctx, self)."""
        kind = node.kind
        if kind == "number":
            _, _, value = parse_literal(node.value)
            return lambda state, v=value: v
        if kind == "ident":
            name = node.value
            if name in self.inst.signals:
                if self.inst.signals[name].array is not None:
                    raise UnsupportedForSimError(f"whole-memory read of '{name}'")
                slot = self.slot_of(name)
                return lambda state, s=slot: state[s]
            if name in self.inst.params:
                value = self.inst.params[name] & _M64 if self.inst.params[name] >= 0 \
                    else self.inst.params[name] & ((1 << 32) - 1)
                return lambda state, v=value: v
            raise UnsupportedForSimError(f"undeclared identifier '{name}'")
        if kind == "binop":
            return self._compile_binop(node, ctx)
        if kind == "unop":
            return self._compile_unop(node, ctx)
        if kind == "ternary":
            cond = self.compile(node.children[0], 0)
            w = max(ctx, self.self_width(node))
            t = self.compile(node.children[1], w)
            f = self.compile(node.children[2], w)
            m = _mask(w)
            return lambda state: (t(state) if cond(state) else f(state)) & m
        if kind == "concat":
            parts = [(self.compile(c, 0), self.self_width(c)) for c in node.children]

            def do_concat(state, parts=parts):
                value = 0
                for fn, w in parts:
                    value = (value << w) | (fn(state) & _mask(w))
                return value
            return do_concat
        if kind == "repl":
            from .elaborate import eval_const
            count = eval_const(node.children[0], self.inst.params, "repl count")
            inner = Node("concat", None, node.children[1:])
            fn = self.compile(inner, 0)
            w = sum(self.self_width(c) for c in node.children[1:])

            def do_repl(state, fn=fn, w=w, count=count):
                v = fn(state)
                out = 0
                for _ in range(count):
                    out = (out << w) | v
                return out
            return do_repl
        if kind == "bitsel":
            return self._compile_bitsel(node)
        if kind == "partsel":
            return self._compile_partsel(node)
        raise UnsupportedForSimError(f"expression kind {kind}")

    def _compile_binop(self, node: Node, ctx: int) -> Callable:
        op = node.value
        l, r = node.children
        if op in ("+", "-", "*", "/", "%", "&", "|", "^", "~^"):
            w = max(ctx, self.self_width(node))
            lf = self.compile(l, w)
            rf = self.compile(r, w)
            m = _mask(w)
            if op == "+":
                return lambda state: (lf(state) + rf(state)) & m
            if op == "-":
                return lambda state: (lf(state) - rf(state)) & m
            if op == "*":
                return lambda state: (lf(state) * rf(state)) & m
            if op == "/":
                def div(state):
                    b = rf(state)
                    return (lf(state) // b) & m if b else 0
                return div
            if op == "%":
                def mod(state):
                    b = rf(state)
                    return (lf(state) % b) & m if b else 0
                return mod
            if op == "&":
                return lambda state: lf(state) & rf(state)
            if op == "|":
                return lambda state: lf(state) | rf(state)
            if op == "^":
                return lambda state: lf(state) ^ rf(state)
            return lambda state: (~(lf(state) ^ rf(state))) & m
        if op == "**":
            w = max(ctx, self.self_width(l))
            lf = self.compile(l, w)
            rf = self.compile(r, 0)
            mod_base = 1 << w
            return lambda state: pow(lf(state), rf(state), mod_base)
        if op in ("<<", "<<<", ">>", ">>>"):
            w = max(ctx, self.self_width(l))
            lf = self.compile(l, w)
            rf = self.compile(r, 0)
            m = _mask(w)
            if op in ("<<", "<<<"):
                return lambda state: (lf(state) << rf(state)) & m
            return lambda state: lf(state) >> rf(state)
        if op in ("==", "!=", "===", "!=="):
            w = max(self.self_width(l), self.self_width(r))
            lf = self.compile(l, w)
            rf = self.compile(r, w)
            if op in ("==", "==="):
                return lambda state: int(lf(state) == rf(state))
            return lambda state: int(lf(state) != rf(state))
        if op in ("<", "<=", ">", ">="):
            w = max(self.self_width(l), self.self_width(r))
            lf = self.compile(l, w)
            rf = self.compile(r, w)
            if op == "<":
                return lambda state: int(lf(state) < rf(state))
            if op == "<=":
                return lambda state: int(lf(state) <= rf(state))
            if op == ">":
                return lambda state: int(lf(state) > rf(state))
            return lambda state: int(lf(state) >= rf(state))
        if op == "&&":
            lf = self.compile(l, 0)
            rf = self.compile(r, 0)
            return lambda state: int(bool(lf(state)) and bool(rf(state)))
        if op == "||":
            lf = self.compile(l, 0)
            rf = self.compile(r, 0)
            return lambda state: int(bool(lf(state)) or bool(rf(state)))
        raise UnsupportedForSimError(f"operator {op}")

    def _compile_unop(self, node: Node, ctx: int) -> Callable:
        op = node.value
        operand = node.children[0]
        if op == "!":
            fn = self.compile(operand, 0)
            return lambda state: int(not fn(state))
        if op in ("~", "-", "+"):
            w = max(ctx, self.self_width(operand))
            fn = self.compile(operand, w)
            m = _mask(w)
            if op == "~":
                return lambda state: (~fn(state)) & m
            if op == "-":
                return lambda state: (-fn(state)) & m
            return fn
        # reductions
        w = self.self_width(operand)
        fn = self.compile(operand, 0)
        m = _mask(w)
        if op == "&":
            return lambda state: int((fn(state) & m) == m)
        if op == "|":
            return lambda state: int(bool(fn(state) & m))
        if op == "^":
            return lambda state: bin(fn(state) & m).count("1") & 1
        if op == "~&":
            return lambda state: int((fn(state) & m) != m)
        if op == "~|":
            return lambda state: int(not (fn(state) & m))
        if op == "~^":
            return lambda state: (bin(fn(state) & m).count("1") & 1) ^ 1
        raise UnsupportedForSimError(f"unary operator {op}")

    def _base_info(self, base: Node):
        """(fetch fn, width, lsb) of a select base."""
        if base.kind == "ident" and base.value in self.inst.signals:
            sig = self.sig(base.value)
            slot = self.slot_of(base.value)
            if sig.array is not None:
                return None, sig, slot  # memory: handled by caller
            return (lambda state, s=slot: state[s]), sig.width, sig.lsb
        if base.kind == "bitsel":
            inner_base = base.children[0]
            if inner_base.kind == "ident" and inner_base.value in self.inst.signals:
                sig = self.sig(inner_base.value)
                if sig.array is not None:
                    fn = self._compile_bitsel(base)
                    return fn, sig.width, sig.lsb
        fn = self.compile(base, 0)
        return fn, self.self_width(base), 0

    def _compile_bitsel(self, node: Node) -> Callable:
        base, index = node.children
        idx_fn = self.compile(index, 0)
        if base.kind == "ident" and base.value in self.inst.signals:
            sig = self.sig(base.value)
            if sig.array is not None:
                slot = self.slot_of(base.value)
                lo, hi = sorted(sig.array)

                def read_elem(state, s=slot, lo=lo, hi=hi):
                    i = idx_fn(state)
                    if lo <= i <= hi:
                        return state[s][i - lo]
                    return 0
                return read_elem
        fetch, width, lsb = self._base_info(base)
        if fetch is None:
            raise UnsupportedForSimError("unsupported select base")

        def read_bit(state):
            i = idx_fn(state) - lsb
            if 0 <= i < width:
                return (fetch(state) >> i) & 1
            return 0
        return read_bit

    def _compile_partsel(self, node: Node) -> Callable:
        base = node.children[0]
        fetch, width, lsb = self._base_info(base)
        if fetch is None:
            raise UnsupportedForSimError("part select on a whole memory")
        if node.value is None:
            from .elaborate import eval_const
            msb_v = eval_const(node.children[1], self.inst.params, "partsel")
            lsb_v = eval_const(node.children[2], self.inst.params, "partsel")
            sel_w = msb_v - lsb_v + 1

            def read_slice(state):
                return _extract(fetch(state), width, lsb, lsb_v, sel_w)
            return read_slice
        from .elaborate import eval_const
        sel_w = eval_const(node.children[2], self.inst.params, "partsel width")
        off_fn = self.compile(node.children[1], 0)
        descending = node.value == "-:"

        def read_indexed(state):
            off = off_fn(state)
            low = off - sel_w + 1 if descending else off
            return _extract(fetch(state), width, lsb, low, sel_w)
        return read_indexed

    # -- lvalues -------------------------------------------------------------

    def compile_lvalue(self, node: Node) -> tuple[Callable, int]:
        """Compile to writer(state, value, nba) plus the target width.

        nba is None for blocking semantics (write state directly) or the
        pending-update dict for nonblocking.
        """
        if node.kind == "ident":
            sig = self.sig(node.value)
            if sig.array is not None:
                raise UnsupportedForSimError(f"whole-memory assignment to '{node.value}'")
            slot = self.slot_of(node.value)
            m = _mask(sig.width)

            def write_whole(state, value, nba, s=slot, m=m):
                if nba is None:
                    state[s] = value & m
                else:
                    nba[s] = value & m
            return write_whole, sig.width
        if node.kind == "bitsel":
            base, index = node.children
            idx_fn = self.compile(index, 0)
            if base.kind == "ident":
                sig = self.sig(base.value)
                slot = self.slot_of(base.value)
                if sig.array is not None:
                    lo, hi = sorted(sig.array)
                    m = _mask(sig.width)

                    def write_elem(state, value, nba, s=slot, lo=lo, hi=hi, m=m):
                        i = idx_fn(state)
                        if not (lo <= i <= hi):
                            return
                        if nba is None:
                            state[s][i - lo] = value & m
                        else:
                            staged = nba.get(s)
                            if staged is None:
                                staged = state[s].copy()
                                nba[s] = staged
                            staged[i - lo] = value & m
                    return write_elem, sig.width

                def write_bit(state, value, nba, s=slot, lsb=sig.lsb, w=sig.width):
                    i = idx_fn(state) - lsb
                    if not (0 <= i < w):
                        return
                    bit = value & 1
                    if nba is None:
                        state[s] = (state[s] & ~(1 << i)) | (bit << i)
                    else:
                        cur = nba.get(s, state[s])
                        nba[s] = (cur & ~(1 << i)) | (bit << i)
                return write_bit, 1
            raise UnsupportedForSimError("chained select assignment target")
        if node.kind == "partsel":
            base = node.children[0]
            if base.kind != "ident":
                raise UnsupportedForSimError("part-select assignment to non-identifier")
            sig = self.sig(base.value)
            slot = self.slot_of(base.value)
            from .elaborate import eval_const
            if node.value is None:
                msb_v = eval_const(node.children[1], self.inst.params, "partsel")
                lsb_v = eval_const(node.children[2], self.inst.params, "partsel")
                sel_w = msb_v - lsb_v + 1
                off_fn = None
            else:
                sel_w = eval_const(node.children[2], self.inst.params, "partsel width")
                off_fn = self.compile(node.children[1], 0)
            descending = node.value == "-:"

            def write_slice(state, value, nba, s=slot, lsb=sig.lsb, w=sig.width,
                            sel_w=sel_w):
                if off_fn is None:
                    low = lsb_v
                else:
                    off = off_fn(state)
                    low = off - sel_w + 1 if descending else off
                pos = low - lsb
                value &= _mask(sel_w)
                if pos >= 0:
                    shifted = value << pos
                    region = _mask(sel_w) << pos
                else:
                    shifted = value >> -pos
                    region = _mask(sel_w) >> -pos
                region &= _mask(w)
                shifted &= region
                if nba is None:
                    state[s] = (state[s] & ~region) | shifted
                else:
                    cur = nba.get(s, state[s])
                    nba[s] = (cur & ~region) | shifted
            return write_slice, sel_w
        if node.kind == "concat":
            parts = [self.compile_lvalue(c) for c in node.children]
            total = sum(w for _, w in parts)

            def write_concat(state, value, nba):
                shift = total
                for writer, w in parts:
                    shift -= w
                    writer(state, (value >> shift) & _mask(w), nba)
            return write_concat, total
        raise UnsupportedForSimError(f"assignment target kind {node.kind}")

    # -- statements ----------------------------------------------------------

    def compile_stmt(self, node: Node) -> Callable:
        """Compile a procedural statement to fn(state, nba)."""
        kind = node.kind
        if kind == "block":
            fns = [self.compile_stmt(c) for c in node.children]

            def run_block(state, nba, fns=fns):
                for fn in fns:
                    fn(state, nba)
            return run_block
        if kind in ("blocking", "nonblocking"):
            lhs, rhs = node.children
            writer, width = self.compile_lvalue(lhs)
            rhs_fn = self.compile(rhs, width)
            if kind == "blocking":
                return lambda state, nba: writer(state, rhs_fn(state), None)
            return lambda state, nba: writer(state, rhs_fn(state), nba)
        if kind == "if":
            cond = self.compile(node.children[0], 0)
            then = self.compile_stmt(node.children[1])
            if len(node.children) > 2:
                els = self.compile_stmt(node.children[2])

                def run_ifelse(state, nba):
                    if cond(state):
                        then(state, nba)
                    else:
                        els(state, nba)
                return run_ifelse

            def run_if(state, nba):
                if cond(state):
                    then(state, nba)
            return run_if
        if kind == "case":
            return self._compile_case(node)
        if kind == "delay_stmt":
            if "delay controls are ignored" not in self.warnings:
                self.warnings.append("delay controls are ignored")
            if len(node.children) > 1:
                return self.compile_stmt(node.children[1])
            return lambda state, nba: None
        if kind == "null_stmt":
            return lambda state, nba: None
        raise UnsupportedForSimError(f"statement kind {kind}")

    def _compile_case(self, node: Node) -> Callable:
        subject = node.children[0]
        subj_w = self.self_width(subject)
        arms = []
        default_fn = None
        wildcard = node.value in ("casez", "casex")
        for item in node.children[1:]:
            body = self.compile_stmt(item.children[-1])
            if item.value == "default":
                default_fn = body
                continue
            labels = []
            for le in item.children[:-1]:
                w = max(subj_w, self.self_width(le))
                if wildcard and le.kind == "number" and "'" in le.value:
                    labels.append(self._wildcard_label(le.value, w))
                else:
                    labels.append((self.compile(le, w), _mask(w)))
            arms.append((labels, body))
        subj_fn = self.compile(subject, subj_w)
        full = _mask(subj_w)

        def run_case(state, nba):
            v = subj_fn(state) & full
            for labels, body in arms:
                for label_fn, care in labels:
                    if (v & care) == (label_fn(state) & care):
                        body(state, nba)
                        return
            if default_fn is not None:
                default_fn(state, nba)
        return run_case

    def _wildcard_label(self, literal: str, width: int):
        # casez treats ? as wildcard; x/z digits are excluded from the subset,
        # so only explicit ? can appear (and the lexer already rejects it in
        # numbers) -- matching reduces to exact compare at shared width.
        _, _, value = parse_literal(literal)
        return (lambda state, v=value: v), _mask(width)


# -- model construction -------------------------------------------------------

def compile_design(design: DesignUnit,
                   reset_patterns=DEFAULT_RESET_PATTERNS) -> CompiledModel:
    """Build the evaluation schedule; rejects combinational loops."""
    slots: dict[str, int] = {}
    names: list[str] = []
    widths: list[int] = []
    inits: list[object] = []
    signals = design.all_signals()
    for qual in sorted(signals):
        sig = signals[qual]
        slots[qual] = len(names)
        names.append(qual)
        widths.append(sig.width)
        if sig.array is not None:
            inits.append([0] * sig.depth)
        else:
            inits.append((sig.init or 0) & _mask(sig.width))

    warnings: list[str] = []
    comb_units: list[Unit] = []
    seq_units: list[Unit] = []

    for inst in design.instances():
        compiler = _Compiler(slots, widths, None, inst, warnings)
        for stmt in inst.statements:
            label = f"{stmt.file}:" + "/".join(map(str, stmt.path))
            if stmt.kind == "assign":
                children = [c for c in stmt.node.children if c.kind != "delay"]
                if len(children) != len(stmt.node.children):
                    if "delay controls are ignored" not in warnings:
                        warnings.append("delay controls are ignored")
                lhs, rhs = children
                writer, width = compiler.compile_lvalue(lhs)
                rhs_fn = compiler.compile(rhs, width)
                reads = _read_slots(rhs, inst, slots) | _index_read_slots(lhs, inst, slots)
                wr = _write_slots(lhs, inst, slots)

                def run_assign(state, writer=writer, rhs_fn=rhs_fn):
                    writer(state, rhs_fn(state), None)
                comb_units.append(Unit(label, frozenset(reads), frozenset(wr), exec_comb=run_assign))
            else:
                event, body = stmt.node.children
                edges = [ev for ev in (event.children if event.value != "*" else [])
                         if ev.value in ("posedge", "negedge")]
                body_fn = compiler.compile_stmt(body)
                reads = _read_slots(body, inst, slots, stmt=True)
                wr = _stmt_write_slots(body, inst, slots)
                if edges:
                    seq_units.append(Unit(label, frozenset(reads), frozenset(wr), exec_seq=body_fn))
                else:
                    def run_comb_block(state, body_fn=body_fn):
                        body_fn(state, None)
                    comb_units.append(Unit(label, frozenset(reads), frozenset(wr),
                                           exec_comb=run_comb_block))
        for binding in inst.bindings:
            unit = _binding_unit(binding, inst, design, slots, widths, warnings)
            if unit is not None:
                comb_units.append(unit)

    comb_units = _schedule(comb_units, names)
    cr = classify_clock_reset(design, reset_patterns)
    regexes = [re.compile(p, re.IGNORECASE) for p in reset_patterns]
    primary = sorted(q for q, s in signals.items() if s.instance == "" and s.port == "input")
    resets, clocks = [], []
    for q in primary:
        if q in cr:
            if any(r.fullmatch(q) for r in regexes):
                resets.append(q)
            else:
                clocks.append(q)
    data = [q for q in primary if q not in resets and q not in clocks]
    # top-level signals (ports and internal nets, so assertions can reference
    # them) plus every register in the hierarchy (architecturally visible
    # state for equivalence verdicts)
    observed = sorted(
        {q for q, s in signals.items() if s.instance == ""}
        | {q for q, s in signals.items() if s.is_reg}
    )
    return CompiledModel(
        design=design, slots=slots, names=names, widths=widths, inits=inits,
        comb_units=comb_units, seq_units=seq_units, primary_inputs=primary,
        clock_inputs=clocks, reset_inputs=resets, data_inputs=data,
        observed=observed, warnings=warnings,
    )


def _read_slots(node: Node, inst: Instance, slots, stmt: bool = False) -> set[int]:
    out = set()
    for qual in expr_signals(node, inst):
        out.add(slots[qual])
    if stmt:
        # written-only identifiers inside statements are not reads; subtract
        out -= _stmt_pure_write_slots(node, inst, slots)
    return out


def _index_read_slots(lhs: Node, inst: Instance, slots) -> set[int]:
    out = set()
    for _, index_exprs, _ in lvalue_parts(lhs, inst):
        for idx in index_exprs:
            for qual in expr_signals(idx, inst):
                out.add(slots[qual])
    return out


def _write_slots(lhs: Node, inst: Instance, slots) -> set[int]:
    return {slots[sig.qual] for sig, _, _ in lvalue_parts(lhs, inst)}


def _stmt_write_slots(node: Node, inst: Instance, slots) -> set[int]:
    out: set[int] = set()
    stack = [node]
    while stack:
        cur = stack.pop()
        if cur.kind in ("blocking", "nonblocking"):
            out |= _write_slots(cur.children[0], inst, slots)
            continue
        stack.extend(cur.children)
    return out


def _stmt_pure_write_slots(node: Node, inst: Instance, slots) -> set[int]:
    """Slots that appear only as whole-signal assignment targets."""
    writes: set[int] = set()
    reads: set[int] = set()
    stack = [(node, False)]
    while stack:
        cur, in_rhs = stack.pop()
        if cur.kind in ("blocking", "nonblocking"):
            lhs, rhs = cur.children
            for sig, index_exprs, _ in lvalue_parts(lhs, inst):
                writes.add(slots[sig.qual])
                for idx in index_exprs:
                    for qual in expr_signals(idx, inst):
                        reads.add(slots[qual])
            stack.append((rhs, True))
            continue
        if cur.kind in ("if", "case"):
            stack.append((cur.children[0], True))
            rest = cur.children[1:]
            for child in rest:
                stack.append((child, False))
            continue
        if cur.kind == "case_item":
            for le in cur.children[:-1]:
                stack.append((le, True))
            stack.append((cur.children[-1], False))
            continue
        if in_rhs:
            for qual in expr_signals(cur, inst):
                reads.add(slots[qual])
            continue
        for child in cur.children:
            stack.append((child, False))
    return writes - reads


def _binding_unit(binding, parent: Instance, design: DesignUnit, slots, widths,
                  warnings) -> Optional[Unit]:
    formal = binding.formal
    if binding.actual is None:
        return None
    fslot = slots[formal.qual]
    compiler = _Compiler(slots, widths, None, parent, warnings)
    if binding.direction == "input":
        fn = compiler.compile(binding.actual, formal.width)
        reads = {slots[f] for f in expr_signals(binding.actual, parent)}
        m = _mask(formal.width)

        def run_input(state, fn=fn, fslot=fslot, m=m):
            state[fslot] = fn(state) & m
        return Unit(binding.label, frozenset(reads), frozenset({fslot}), exec_comb=run_input)
    writer, width = compiler.compile_lvalue(binding.actual)
    reads = {fslot} | _index_read_slots(binding.actual, parent, slots)
    wr = _write_slots(binding.actual, parent, slots)

    def run_output(state, writer=writer, fslot=fslot):
        writer(state, state[fslot], None)
    return Unit(binding.label, frozenset(reads), frozenset(wr), exec_comb=run_output)


def _schedule(units: list[Unit], names: list[str]) -> list[Unit]:
    """Topological order by write->read dependency; deterministic (Kahn)."""
    writers: dict[int, int] = {}
    for i, unit in enumerate(units):
        for slot in unit.writes:
            if slot in writers:
                raise UnsupportedForSimError(
                    f"signal '{names[slot]}' has multiple combinational drivers"
                )
            writers[slot] = i
    deps: list[set[int]] = [set() for _ in units]
    rdeps: list[set[int]] = [set() for _ in units]
    for i, unit in enumerate(units):
        for slot in unit.reads:
            j = writers.get(slot)
            if j is not None and j != i:
                deps[i].add(j)
                rdeps[j].add(i)
    indeg = [len(d) for d in deps]
    ready = sorted(i for i, d in enumerate(indeg) if d == 0)
    order: list[int] = []
    heapq.heapify(ready)
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in sorted(rdeps[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, j)
    if len(order) != len(units):
        remaining = [i for i in range(len(units)) if i not in set(order)]
        cycle_path = _find_cycle(remaining, deps, units, names)
        raise CombinationalLoopError(cycle_path)
    return [units[i] for i in order]


def _find_cycle(remaining, deps, units, names) -> list[str]:
    rem = set(remaining)
    start = remaining[0]
    path = [start]
    seen = {start}
    cur = start
    while True:
        nxt = next(iter(sorted(d for d in deps[cur] if d in rem)), None)
        if nxt is None:
            break
        if nxt in seen:
            idx = path.index(nxt)
            cyc = path[idx:] + [nxt]
            return [sorted(names[s] for s in units[i].writes)[0] if units[i].writes else "?"
                    for i in cyc]
        path.append(nxt)
        seen.add(nxt)
        cur = nxt
    return [sorted(names[s] for s in units[i].writes)[0] if units[i].writes else "?"
            for i in path]


# -- stimulus and execution ---------------------------------------------------

def _mix(seed: int, cycle: int, idx: int) -> int:
    x = (seed * 0x9E3779B97F4A7C15 + cycle * 0xBF58476D1CE4E5B9
         + idx * 0x94D049BB133111EB + 0x2545F4914F6CDD1D) & _M64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _M64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _M64
    x ^= x >> 31
    return x


def _rand_value(seed: int, cycle: int, idx: int, width: int) -> int:
    words = (width + 63) // 64
    value = 0
    for w in range(words):
        value = (value << 64) | _mix(seed, cycle, idx * 97 + w)
    return value & _mask(width)


def _reset_active_value(name: str) -> int:
    local = name.rsplit(".", 1)[-1].lower()
    return 0 if (local.endswith("_n") or local.endswith("n") and not local.endswith("in")) else 1


def exhaustive_cycles(model: CompiledModel) -> int:
    return 1 << model.input_bits()


def run(model: CompiledModel, stim: Stimulus) -> Trace:
    """Execute the model; pure function of (model, stimulus)."""
    state = model.fresh_state()
    slots = model.slots
    widths = model.widths
    observed_slots = [slots[q] for q in model.observed]
    data_inputs = [(q, slots[q], widths[slots[q]]) for q in model.data_inputs]
    resets = [(q, slots[q]) for q in model.reset_inputs]
    clocks = [slots[q] for q in model.clock_inputs]

    cycles = stim.cycles
    if stim.kind == "exhaustive":
        cycles = exhaustive_cycles(model)
    if stim.kind == "explicit" and stim.explicit:
        for name, values in stim.explicit.items():
            if name not in slots:
                raise WidthMismatchError(name, "unknown input")
            w = widths[slots[name]]
            for v in values:
                if v < 0 or v > _mask(w):
                    raise WidthMismatchError(name, f"value {v} exceeds {w} bits")

    values: list[list] = []
    for t in range(cycles):
        if stim.kind == "exhaustive":
            state = model.fresh_state()
            vec = t
            for q, slot, w in reversed(data_inputs):
                state[slot] = vec & _mask(w)
                vec >>= w
            for q, slot in resets:
                state[slot] = 1 - _reset_active_value(q)
        else:
            for slot in clocks:
                state[slot] = 0
            in_reset = t < stim.reset_cycles
            for q, slot in resets:
                active = _reset_active_value(q)
                state[slot] = active if in_reset else 1 - active
            for i, (q, slot, w) in enumerate(data_inputs):
                if stim.kind == "explicit":
                    seq = (stim.explicit or {}).get(q)
                    state[slot] = seq[t] if seq and t < len(seq) else 0
                else:
                    state[slot] = _rand_value(stim.seed, t, i, w)

        try:
            for unit in model.comb_units:
                unit.exec_comb(state)
        except RecursionError as exc:  # pragma: no cover - defensive
            raise SimulationFailureError("comb settle", str(exc))

        values.append([
            tuple(state[s]) if isinstance(state[s], list) else state[s]
            for s in observed_slots
        ])

        if stim.kind != "exhaustive":
            nba: dict[int, object] = {}
            for unit in model.seq_units:
                unit.exec_seq(state, nba)
            for slot, value in nba.items():
                state[slot] = value

    return Trace(
        design_id=model.design.top,
        stimulus=stim.describe(),
        signals=list(model.observed),
        widths=[widths[s] for s in observed_slots],
        values=values,
    )


def diff_traces(a: Trace, b: Trace) -> Optional[tuple[int, str]]:
    """Earliest (cycle, signal) difference, or None if identical."""
    if a.signals != b.signals:
        raise ShapeMismatchError("observed-signal lists differ")
    if a.cycles != b.cycles:
        raise ShapeMismatchError(f"cycle counts differ: {a.cycles} vs {b.cycles}")
    for t in range(a.cycles):
        row_a, row_b = a.values[t], b.values[t]
        if row_a == row_b:
            continue
        for idx in sorted(range(len(a.signals)), key=lambda i: a.signals[i]):
            if row_a[idx] != row_b[idx]:
                return t, a.signals[idx]
    return None


def write_vcd(trace: Trace, path) -> None:
    """Minimal value-change-dump export (vectors as binary, memories skipped)."""
    def code(i: int) -> str:
        chars = "!#$%&'()*+,-./:;<=>?@ABCDEFGHIJKLMNOPQRSTUVWXYZ"
        out = ""
        i += 1
        while i:
            out = chars[i % len(chars)] + out
            i //= len(chars)
        return out

    scalar = [(i, s) for i, s in enumerate(trace.signals)
              if not isinstance(trace.values[0][i] if trace.values else 0, tuple)]
    lines = ["$version rtlmut $end", "$timescale 1ns $end", "$scope module top $end"]
    for i, s in scalar:
        lines.append(f"$var wire {trace.widths[i]} {code(i)} {s.replace('.', '_')} $end")
    lines.append("$upscope $end")
    lines.append("$enddefinitions $end")
    prev: dict[int, int] = {}
    for t, row in enumerate(trace.values):
        lines.append(f"#{t}")
        if t == 0:
            lines.append("$dumpvars")
        for i, s in scalar:
            v = row[i]
            if t == 0 or prev.get(i) != v:
                if trace.widths[i] == 1:
                    lines.append(f"{v}{code(i)}")
                else:
                    lines.append(f"b{format(v, 'b')} {code(i)}")
                prev[i] = v
        if t == 0:
            lines.append("$end")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
