"""Assertion subset: parsing and trace-monitor semantics.

Supported property statements (one or more per file, free-form whitespace,
`//` and `/* */` comments):

    [label :] assert property (@(posedge clk) [disable iff (expr)] body);

with body either a sequence or an implication between two sequences:

    seq            ::= boolexpr ( ## N boolexpr )*
    body           ::= seq | seq |-> seq | seq |=> seq

Boolean expressions use the design expression grammar plus the builtins
$past(e, N), $stable(e), $rose(e), $fell(e), $onehot(e), $onehot0(e).

Monitor semantics over cycle traces (every trace cycle is a clock tick; the
clock name is recorded but all clocks advance together in this simulator):
antecedent matches spawn obligations, an obligation fails at the first
consequent element that evaluates false, obligations still pending at the end
of the trace are not failures, and `disable iff` cancels in-flight obligations
and suppresses matching while asserted. $past/$stable/$rose/$fell look at a
zero-filled pre-trace history at cycle 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    ParseError,
    TraceTooShortError,
    UnknownSignalError,
    UnsupportedConstructError,
)
from .nodes import Node, walk
from .parser import Parser
from .sim import Trace
from .source import Token, literal_width, parse_literal, tokenize

_BUILTINS = {"$past", "$stable", "$rose", "$fell", "$onehot", "$onehot0"}


@dataclass
class SequenceElem:
    delay: int          # cycles after the previous element (0 for the first)
    expr: Node


@dataclass
class Property:
    name: str
    clock: str
    clock_edge: str
    disable: Optional[Node]
    antecedent: Optional[list[SequenceElem]]   # None for plain invariants
    consequent: list[SequenceElem]
    overlap: bool       # |-> vs |=>
    source: str         # original statement text

    def depth(self) -> int:
        """Cycles of trace needed to evaluate one obligation."""
        span = 0
        if self.antecedent:
            span += sum(e.delay for e in self.antecedent)
        span += sum(e.delay for e in self.consequent)
        if not self.overlap:
            span += 1
        return span + 1

    def referenced_signals(self) -> list[str]:
        names = []
        seqs = (self.antecedent or []) + self.consequent
        exprs = [e.expr for e in seqs]
        if self.disable is not None:
            exprs.append(self.disable)
        for expr in exprs:
            for node in walk(expr):
                if node.kind == "ident" and node.value not in names:
                    names.append(node.value)
        return names


@dataclass
class Diagnostic:
    file: str
    line: int
    message: str


@dataclass
class AssertionSet:
    properties: list[Property]
    source_file: str
    run_label: str
    attempts: int = 0
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def syntax_fraction(self) -> float:
        if self.attempts == 0:
            return 0.0
        return len(self.properties) / self.attempts


class _SvaParser(Parser):
    """Extends the expression parser with the property layer."""

    def parse_property_statement(self, default_name: str) -> Property:
        start = self.pos
        label = default_name
        if self.peek().kind == "ident" and self.peek(1).kind == "op" \
                and self.peek(1).text == ":":
            label = self.take().text
            self.take()
        self.expect("ident", "assert", expected="assert")
        prop_kw = self.expect("ident")
        if prop_kw.text != "property":
            self.error("expected 'property'")
        self.expect("op", "(")
        self.expect("op", "@")
        self.expect("op", "(")
        edge_tok = self.expect("kw")
        if edge_tok.text not in ("posedge", "negedge"):
            self.error("expected clock edge")
        clock = self.expect("ident").text
        self.expect("op", ")")
        disable = None
        if self.peek().kind == "ident" and self.peek().text == "disable":
            self.take()
            iff = self.expect("ident")
            if iff.text != "iff":
                self.error("expected 'iff'")
            self.expect("op", "(")
            disable = self.parse_expr()
            self.expect("op", ")")
        first = self._parse_sequence()
        antecedent = None
        overlap = True
        if self.at_op("|->") or self.at_op("|=>"):
            overlap = self.take().text == "|->"
            antecedent = first
            consequent = self._parse_sequence()
        else:
            consequent = first
        self.expect("op", ")")
        self.expect("op", ";")
        toks = self.toks[start:self.pos]
        source = " ".join(t.text for t in toks)
        return Property(
            name=label, clock=clock, clock_edge=edge_tok.text, disable=disable,
            antecedent=antecedent, consequent=consequent, overlap=overlap,
            source=source,
        )

    def _parse_sequence(self) -> list[SequenceElem]:
        # a leading ##N offsets the first element from the sequence start
        delay = 0
        if self.at_op("##"):
            self.take()
            delay = parse_literal(self.expect("number").text)[2]
        elems = [SequenceElem(delay=delay, expr=self.parse_expr())]
        while self.at_op("##"):
            self.take()
            num = self.expect("number")
            delay = parse_literal(num.text)[2]
            elems.append(SequenceElem(delay=delay, expr=self.parse_expr()))
        return elems


def parse_sva_text(text: str, path: str = "<sva>", run_label: str = "") -> AssertionSet:
    """Parse a file of assertions; malformed properties become diagnostics.

    Each `assert` keyword at statement position counts as one attempt; the
    set's syntax fraction is parsed/attempts.
    """
    try:
        tokens = tokenize(text, path, sva=True)
    except (ParseError, UnsupportedConstructError) as exc:
        aset = AssertionSet(properties=[], source_file=path, run_label=run_label)
        aset.attempts = max(text.count("assert"), 1)
        aset.diagnostics.append(Diagnostic(path, exc.line, exc.message))
        return aset

    starts = []
    for i, tok in enumerate(tokens):
        if tok.kind == "ident" and tok.text == "assert":
            if i >= 1 and tokens[i - 1].kind == "op" and tokens[i - 1].text == ":" \
                    and i >= 2 and tokens[i - 2].kind == "ident":
                starts.append(i - 2)
            else:
                starts.append(i)
    aset = AssertionSet(properties=[], source_file=path, run_label=run_label)
    aset.attempts = len(starts)
    names_seen: set[str] = set()
    for n, start in enumerate(starts, 1):
        end = len(tokens) - 1
        for j in range(start, len(tokens)):
            if tokens[j].kind == "op" and tokens[j].text == ";":
                end = j + 1
                break
        chunk = tokens[start:end] + [Token("eof", "", 0, 0)]
        parser = _SvaParser(chunk, path, allow_syscalls=True)
        default = f"p{n}"
        try:
            prop = parser.parse_property_statement(default)
            _check_builtins(prop, path)
        except (ParseError, UnsupportedConstructError) as exc:
            aset.diagnostics.append(Diagnostic(path, exc.line, exc.message))
            continue
        if prop.name in names_seen:
            prop.name = f"{prop.name}_{n}"
        names_seen.add(prop.name)
        aset.properties.append(prop)
    return aset


def _check_builtins(prop: Property, path: str):
    seqs = (prop.antecedent or []) + prop.consequent
    exprs = [e.expr for e in seqs] + ([prop.disable] if prop.disable is not None else [])
    for expr in exprs:
        for node in walk(expr):
            if node.kind == "syscall" and node.value not in _BUILTINS:
                raise ParseError(f"unsupported builtin {node.value}", path)
            if node.kind == "syscall" and node.value == "$past":
                if len(node.children) not in (1, 2):
                    raise ParseError("$past takes 1 or 2 arguments", path)
            elif node.kind == "syscall" and not node.children:
                raise ParseError(f"{node.value} needs an argument", path)


# -- evaluation over traces ----------------------------------------------------

@dataclass
class Pass:
    pass


@dataclass
class Violation:
    cycle: int


@dataclass
class Vacuous:
    pass


class _ExprEval:
    def __init__(self, trace: Trace):
        self.trace = trace
        self.index = {s: i for i, s in enumerate(trace.signals)}
        self.widths = dict(zip(trace.signals, trace.widths))

    def width(self, node: Node) -> int:
        if node.kind == "number":
            return literal_width(node.value)
        if node.kind == "ident":
            return self.widths.get(node.value, 1)
        if node.kind == "binop":
            if node.value in ("&&", "||", "==", "!=", "===", "!==", "<", "<=", ">", ">="):
                return 1
            if node.value in ("<<", ">>", "<<<", ">>>"):
                return self.width(node.children[0])
            return max(self.width(node.children[0]), self.width(node.children[1]))
        if node.kind == "unop":
            if node.value in ("!", "&", "|", "^", "~&", "~|", "~^"):
                return 1
            return self.width(node.children[0])
        if node.kind == "ternary":
            return max(self.width(node.children[1]), self.width(node.children[2]))
        if node.kind == "concat":
            return sum(self.width(c) for c in node.children)
        if node.kind == "syscall":
            if node.value in ("$stable", "$rose", "$fell", "$onehot", "$onehot0"):
                return 1
            return self.width(node.children[0])
        if node.kind == "bitsel":
            return 1
        if node.kind == "partsel":
            left = parse_literal(node.children[1].value)[2]
            right = parse_literal(node.children[2].value)[2]
            return abs(left - right) + 1
        return 1

    def signal(self, name: str, cycle: int) -> int:
        if name not in self.index:
            raise UnknownSignalError(name)
        if cycle < 0:
            return 0
        value = self.trace.values[cycle][self.index[name]]
        if isinstance(value, tuple):
            raise UnknownSignalError(f"{name} (memory signals are not samplable)")
        return value

    def eval(self, node: Node, t: int, ctx: int = 0) -> int:
        """Evaluate at cycle t; ctx propagates context width like the simulator
        (comparison operands widen each other, arithmetic wraps at the
        context-determined width)."""
        kind = node.kind
        if kind == "number":
            return parse_literal(node.value)[2]
        if kind == "ident":
            return self.signal(node.value, t)
        if kind == "syscall":
            return self._builtin(node, t)
        if kind == "unop":
            op = node.value
            if op == "!":
                return int(not self.eval(node.children[0], t))
            if op in ("~", "-", "+"):
                w = max(ctx, self.width(node.children[0]))
                v = self.eval(node.children[0], t, w)
                mask = (1 << w) - 1
                if op == "~":
                    return (~v) & mask
                if op == "-":
                    return (-v) & mask
                return v
            w = self.width(node.children[0])
            mask = (1 << w) - 1
            v = self.eval(node.children[0], t) & mask
            bits = bin(v).count("1")
            if op == "&":
                return int(v == mask)
            if op == "|":
                return int(bool(v))
            if op == "^":
                return bits & 1
            if op == "~&":
                return int(v != mask)
            if op == "~|":
                return int(not v)
            return (bits & 1) ^ 1
        if kind == "binop":
            op = node.value
            if op == "&&":
                return int(bool(self.eval(node.children[0], t))
                           and bool(self.eval(node.children[1], t)))
            if op == "||":
                return int(bool(self.eval(node.children[0], t))
                           or bool(self.eval(node.children[1], t)))
            if op in ("==", "!=", "===", "!==", "<", "<=", ">", ">="):
                w = max(self.width(node.children[0]), self.width(node.children[1]))
                a = self.eval(node.children[0], t, w)
                b = self.eval(node.children[1], t, w)
                if op in ("==", "==="):
                    return int(a == b)
                if op in ("!=", "!=="):
                    return int(a != b)
                if op == "<":
                    return int(a < b)
                if op == "<=":
                    return int(a <= b)
                if op == ">":
                    return int(a > b)
                return int(a >= b)
            if op in ("<<", "<<<", ">>", ">>>"):
                w = max(ctx, self.width(node.children[0]))
                a = self.eval(node.children[0], t, w)
                b = self.eval(node.children[1], t)
                mask = (1 << w) - 1
                if op in ("<<", "<<<"):
                    return (a << b) & mask
                return a >> b
            w = max(ctx, self.width(node))
            a = self.eval(node.children[0], t, w)
            b = self.eval(node.children[1], t, w)
            mask = (1 << w) - 1
            if op == "&":
                return a & b
            if op == "|":
                return a | b
            if op == "^":
                return a ^ b
            if op == "~^":
                return (~(a ^ b)) & mask
            if op == "+":
                return (a + b) & mask
            if op == "-":
                return (a - b) & mask
            if op == "*":
                return (a * b) & mask
            if op == "/":
                return (a // b) & mask if b else 0
            if op == "%":
                return (a % b) & mask if b else 0
            raise UnknownSignalError(f"operator {op}")
        if kind == "ternary":
            w = max(ctx, self.width(node))
            if self.eval(node.children[0], t):
                return self.eval(node.children[1], t, w)
            return self.eval(node.children[2], t, w)
        if kind == "concat":
            value = 0
            for child in node.children:
                w = self.width(child)
                value = (value << w) | (self.eval(child, t) & ((1 << w) - 1))
            return value
        if kind == "bitsel":
            base = node.children[0]
            idx = self.eval(node.children[1], t)
            return (self.eval(base, t) >> idx) & 1
        if kind == "partsel":
            base = self.eval(node.children[0], t)
            left = parse_literal(node.children[1].value)[2]
            right = parse_literal(node.children[2].value)[2]
            lo, hi = min(left, right), max(left, right)
            return (base >> lo) & ((1 << (hi - lo + 1)) - 1)
        raise UnknownSignalError(f"expression kind {kind}")

    def _builtin(self, node: Node, t: int) -> int:
        name = node.value
        arg = node.children[0]
        if name == "$past":
            depth = 1
            if len(node.children) > 1:
                depth = parse_literal(node.children[1].value)[2]
            past_t = t - depth
            if past_t < 0:
                return 0
            return self.eval(arg, past_t)
        if name == "$stable":
            prev = self.eval(arg, t - 1) if t >= 1 else 0
            return int(self.eval(arg, t) == prev)
        if name == "$rose":
            prev = (self.eval(arg, t - 1) & 1) if t >= 1 else 0
            return int((self.eval(arg, t) & 1) == 1 and prev == 0)
        if name == "$fell":
            prev = (self.eval(arg, t - 1) & 1) if t >= 1 else 0
            return int((self.eval(arg, t) & 1) == 0 and prev == 1)
        if name == "$onehot":
            return int(bin(self.eval(arg, t)).count("1") == 1)
        if name == "$onehot0":
            return int(bin(self.eval(arg, t)).count("1") <= 1)
        raise UnknownSignalError(f"builtin {name}")


def check_on_trace(prop: Property, trace: Trace):
    """Pass | Violation(cycle) | Vacuous under clocked monitor semantics."""
    if trace.cycles < prop.depth():
        raise TraceTooShortError(prop.depth(), trace.cycles)
    ev = _ExprEval(trace)
    for name in prop.referenced_signals():
        if name not in ev.index:
            raise UnknownSignalError(name)

    matched = False
    n = trace.cycles

    def disabled(t: int) -> bool:
        return prop.disable is not None and bool(ev.eval(prop.disable, t))

    def seq_matches(seq: list[SequenceElem], t0: int) -> Optional[bool]:
        """True/False when decidable within the trace, None when it runs off."""
        t = t0
        for elem in seq:
            t += elem.delay
            if t >= n:
                return None
            if disabled(t):
                return None
            if not ev.eval(elem.expr, t):
                return False
        return True

    def seq_first_failure(seq: list[SequenceElem], t0: int) -> Optional[int]:
        t = t0
        for elem in seq:
            t += elem.delay
            if t >= n:
                return None
            if disabled(t):
                return None
            if not ev.eval(elem.expr, t):
                return t
        return None

    for t in range(n):
        if disabled(t):
            continue
        if prop.antecedent is None:
            matched = True
            fail = seq_first_failure(prop.consequent, t)
            if fail is not None:
                return Violation(fail)
            continue
        ant = seq_matches(prop.antecedent, t)
        if ant is not True:
            continue
        matched = True
        span = sum(e.delay for e in prop.antecedent)
        start = t + span + (0 if prop.overlap else 1)
        fail = seq_first_failure(prop.consequent, start)
        if fail is not None:
            return Violation(fail)
    if not matched:
        return Vacuous()
    return Pass()
