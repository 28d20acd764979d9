"""Recursive-descent parser for the supported Verilog-2005 subset.

Node layouts produced here (children in order; ? marks optional):

    source      value=None        children=[module*]
    module      value=name        children=[paramlist, portlist, item*]
    paramlist   value=None        children=[param_decl*]
    portlist    value=None        children=[port_decl* | port_ref*]
    port_ref    value=name        children=[]
    port_decl   value=direction   children=[nettype?, range?, declarator+]
    nettype     value='wire'|'reg'
    decl        value='wire'|'reg' children=[range?, declarator+]
    range       value=None        children=[msb_expr, lsb_expr]
    declarator  value=name        children=[array_range?, init?]
    array_range value=None        children=[msb_expr, lsb_expr]
    init        value=None        children=[expr]
    param_decl  value='parameter'|'localparam' children=[range?, param_assign+]
    param_assign value=name       children=[expr]
    assign      value=None        children=[delay?, lvalue, expr]
    delay       value=None        children=[number]
    always      value=None        children=[event_control, stmt]
    event_control value='*'|None  children=[event*]
    event       value='posedge'|'negedge'|'level' children=[expr]
    block       value=None        children=[stmt*]
    if          value=None        children=[cond, then_stmt, else_stmt?]
    case        value='case'|'casez'|'casex' children=[subject, case_item+]
    case_item   value=None|'default' children=[label_expr*, stmt]  (stmt last)
    blocking    value=None        children=[lvalue, expr]
    nonblocking value=None        children=[lvalue, expr]
    delay_stmt  value=None        children=[number, stmt?]
    null_stmt   value=None        children=[]
    instance    value=module_name children=[param_args?, inst]
    param_args  value=None        children=[conn*]
    inst        value=instance_name children=[conn*]
    conn_named  value=port_name   children=[expr?]
    conn_pos    value=None        children=[expr]
    binop       value=op          children=[lhs, rhs]
    unop        value=op          children=[operand]
    ternary     value=None        children=[cond, true_expr, false_expr]
    concat      value=None        children=[expr+]
    repl        value=None        children=[count_expr, expr+]
    bitsel      value=None        children=[base, index_expr]
    partsel     value=None|'+:'|'-:' children=[base, left_expr, right_expr]
    ident       value=name
    number      value=literal_text
    syscall     value=$name       children=[arg*]   (assertion language only)
"""

from __future__ import annotations

from .errors import ParseError, UnsupportedConstructError
from .nodes import Node, Span, number_tree
from .source import SourceFile, Token, tokenize

BINARY_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "|": 3,
    "^": 4, "~^": 4, "^~": 4,
    "&": 5,
    "==": 6, "!=": 6, "===": 6, "!==": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, "<<<": 8, ">>>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
    "**": 11,
}

UNARY_OPS = {"!", "~", "+", "-", "&", "|", "^", "~&", "~|", "~^", "^~"}

# Normalized spellings so one operator has one tree form.
_OP_NORMALIZE = {"^~": "~^"}


class Parser:
    def __init__(self, tokens: list[Token], path: str, allow_syscalls: bool = False):
        self.toks = tokens
        self.pos = 0
        self.path = path
        self.allow_syscalls = allow_syscalls

    # -- token helpers ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.toks[min(self.pos + offset, len(self.toks) - 1)]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def at_op(self, text: str) -> bool:
        return self.at("op", text)

    def at_kw(self, text: str) -> bool:
        return self.at("kw", text)

    def take(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind: str, text: str | None = None, expected: str = "") -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = expected or text or kind
            raise ParseError(
                f"unexpected {t.kind} {t.text!r}", self.path, t.line, t.col, expected=(want,)
            )
        return self.take()

    def error(self, message: str, expected=()):
        t = self.peek()
        raise ParseError(message, self.path, t.line, t.col, expected=expected)

    def span_from(self, start_tok: Token) -> Span:
        last = self.toks[max(self.pos - 1, 0)]
        return Span(start_tok.line, start_tok.col, last.line, last.col + max(len(last.text) - 1, 0))

    # -- top level ----------------------------------------------------------

    def parse_source(self) -> Node:
        start = self.peek()
        modules = []
        while not self.at("eof"):
            if self.at_kw("module"):
                modules.append(self.parse_module())
            else:
                self.error(f"unexpected {self.peek().text!r} at top level", expected=("module",))
        root = Node("source", None, modules, self.span_from(start))
        number_tree(root)
        return root

    def parse_module(self) -> Node:
        start = self.expect("kw", "module")
        name = self.expect("ident").text
        paramlist = Node("paramlist", None, [])
        if self.at_op("#"):
            self.take()
            self.expect("op", "(")
            while not self.at_op(")"):
                paramlist.children.append(self.parse_param_decl(header=True))
                if self.at_op(","):
                    self.take()
            self.expect("op", ")")
        portlist = self.parse_portlist()
        self.expect("op", ";")
        items = []
        while not self.at_kw("endmodule"):
            if self.at("eof"):
                self.error("missing endmodule", expected=("endmodule",))
            items.append(self.parse_item())
        self.expect("kw", "endmodule")
        return Node("module", name, [paramlist, portlist] + items, self.span_from(start))

    def parse_portlist(self) -> Node:
        start = self.peek()
        ports: list[Node] = []
        if not self.at_op("("):
            return Node("portlist", None, [], self.span_from(start))
        self.take()
        if self.at_op(")"):
            self.take()
            return Node("portlist", None, [], self.span_from(start))
        if self.peek().kind == "kw" and self.peek().text in ("input", "output", "inout"):
            # ANSI header
            while True:
                ports.append(self.parse_port_decl(ansi=True))
                if self.at_op(","):
                    # comma either continues the current decl's names (handled
                    # inside parse_port_decl) or starts a new direction
                    self.take()
                    continue
                break
            self.expect("op", ")")
        else:
            while True:
                t = self.expect("ident")
                ports.append(Node("port_ref", t.text, [], Span(t.line, t.col, t.line, t.col)))
                if self.at_op(","):
                    self.take()
                    continue
                break
            self.expect("op", ")")
        return Node("portlist", None, ports, self.span_from(start))

    def parse_port_decl(self, ansi: bool) -> Node:
        start = self.peek()
        direction = self.expect("kw").text
        if direction not in ("input", "output", "inout"):
            self.error("expected port direction", expected=("input", "output", "inout"))
        children: list[Node] = []
        if self.at_kw("reg") or self.at_kw("wire"):
            children.append(Node("nettype", self.take().text))
        if self.at_op("["):
            children.append(self.parse_range())
        children.append(self.parse_declarator(allow_init=not ansi or direction == "output"))
        # further names for the same direction
        while self.at_op(","):
            nxt = self.peek(1)
            if nxt.kind == "kw" and nxt.text in ("input", "output", "inout"):
                break  # next ANSI port decl
            if not ansi or (nxt.kind == "ident"):
                self.take()
                children.append(self.parse_declarator(allow_init=False))
                continue
            break
        node = Node("port_decl", direction, children, self.span_from(start))
        if not ansi:
            self.expect("op", ";")
            node.span = self.span_from(start)
        return node

    def parse_param_decl(self, header: bool) -> Node:
        start = self.peek()
        kw = self.expect("kw").text
        if kw not in ("parameter", "localparam"):
            self.error("expected parameter/localparam")
        children: list[Node] = []
        if self.at_op("["):
            children.append(self.parse_range())
        while True:
            name = self.expect("ident").text
            self.expect("op", "=")
            expr = self.parse_expr()
            children.append(Node("param_assign", name, [expr]))
            if not header and self.at_op(","):
                self.take()
                continue
            if header and self.at_op(",") and self.peek(1).kind == "ident":
                self.take()
                continue
            break
        node = Node("param_decl", kw, children, self.span_from(start))
        if not header:
            self.expect("op", ";")
            node.span = self.span_from(start)
        return node

    # -- module items -------------------------------------------------------

    def parse_item(self) -> Node:
        t = self.peek()
        if t.kind == "kw":
            if t.text in ("input", "output", "inout"):
                return self.parse_port_decl(ansi=False)
            if t.text in ("wire", "reg"):
                return self.parse_decl()
            if t.text in ("parameter", "localparam"):
                return self.parse_param_decl(header=False)
            if t.text == "assign":
                return self.parse_assign()
            if t.text == "always":
                return self.parse_always()
            self.error(f"unexpected keyword '{t.text}' in module body")
        if t.kind == "ident":
            return self.parse_instance()
        if t.kind == "sysname":
            raise UnsupportedConstructError("system task/function", self.path, t.line, t.col)
        self.error(f"unexpected {t.text!r} in module body")

    def parse_decl(self) -> Node:
        start = self.take()  # wire | reg
        children: list[Node] = []
        if self.at_op("["):
            children.append(self.parse_range())
        while True:
            children.append(self.parse_declarator(allow_init=True))
            if self.at_op(","):
                self.take()
                continue
            break
        self.expect("op", ";")
        return Node("decl", start.text, children, self.span_from(start))

    def parse_declarator(self, allow_init: bool) -> Node:
        t = self.expect("ident")
        children: list[Node] = []
        if self.at_op("["):
            rng = self.parse_range()
            rng.kind = "array_range"
            children.append(rng)
        if self.at_op("="):
            if not allow_init:
                self.error("initializer not allowed here")
            self.take()
            children.append(Node("init", None, [self.parse_expr()]))
        return Node("declarator", t.text, children, Span(t.line, t.col, t.line, t.col))

    def parse_range(self) -> Node:
        start = self.expect("op", "[")
        msb = self.parse_expr()
        self.expect("op", ":")
        lsb = self.parse_expr()
        self.expect("op", "]")
        return Node("range", None, [msb, lsb], self.span_from(start))

    def parse_assign(self) -> Node:
        start = self.expect("kw", "assign")
        delay = None
        if self.at_op("#"):
            delay = self.parse_delay()
        # comma-separated assignments split into one node each; only the first
        # is returned directly, the rest are queued
        lhs = self.parse_lvalue()
        self.expect("op", "=")
        rhs = self.parse_expr()
        children = ([delay] if delay else []) + [lhs, rhs]
        node = Node("assign", None, children, self.span_from(start))
        if self.at_op(","):
            self.error("one continuous assignment per statement in this subset")
        self.expect("op", ";")
        node.span = self.span_from(start)
        return node

    def parse_delay(self) -> Node:
        start = self.expect("op", "#")
        num = self.expect("number")
        n = Node("number", num.text, [], Span(num.line, num.col, num.line, num.col))
        return Node("delay", None, [n], self.span_from(start))

    def parse_always(self) -> Node:
        start = self.expect("kw", "always")
        self.expect("op", "@")
        ev = self.parse_event_control()
        stmt = self.parse_stmt()
        return Node("always", None, [ev, stmt], self.span_from(start))

    def parse_event_control(self) -> Node:
        start = self.peek()
        if self.at_op("*"):
            self.take()
            return Node("event_control", "*", [], self.span_from(start))
        self.expect("op", "(")
        if self.at_op("*"):
            self.take()
            self.expect("op", ")")
            return Node("event_control", "*", [], self.span_from(start))
        events = []
        while True:
            ev_start = self.peek()
            edge = "level"
            if self.at_kw("posedge") or self.at_kw("negedge"):
                edge = self.take().text
            expr = self.parse_expr()
            events.append(Node("event", edge, [expr], self.span_from(ev_start)))
            if self.at_kw("or") or self.at_op(","):
                self.take()
                continue
            break
        self.expect("op", ")")
        return Node("event_control", None, events, self.span_from(start))

    def parse_instance(self) -> Node:
        start = self.expect("ident")
        module_name = start.text
        children: list[Node] = []
        if self.at_op("#"):
            self.take()
            self.expect("op", "(")
            children.append(Node("param_args", None, self.parse_connections()))
            self.expect("op", ")")
        inst_name = self.expect("ident").text
        self.expect("op", "(")
        conns = self.parse_connections()
        self.expect("op", ")")
        children.append(Node("inst", inst_name, conns))
        if self.at_op(","):
            self.error("one instance per statement in this subset")
        self.expect("op", ";")
        return Node("instance", module_name, children, self.span_from(start))

    def parse_connections(self) -> list[Node]:
        conns: list[Node] = []
        if self.at_op(")"):
            return conns
        named = self.at_op(".")
        while True:
            c_start = self.peek()
            if named:
                self.expect("op", ".")
                pname = self.expect("ident").text
                self.expect("op", "(")
                args = [] if self.at_op(")") else [self.parse_expr()]
                self.expect("op", ")")
                conns.append(Node("conn_named", pname, args, self.span_from(c_start)))
            else:
                conns.append(Node("conn_pos", None, [self.parse_expr()], self.span_from(c_start)))
            if self.at_op(","):
                self.take()
                continue
            break
        return conns

    # -- statements ---------------------------------------------------------

    def parse_stmt(self) -> Node:
        t = self.peek()
        if t.kind == "kw":
            if t.text == "begin":
                return self.parse_block()
            if t.text == "if":
                return self.parse_if()
            if t.text in ("case", "casez", "casex"):
                return self.parse_case()
            self.error(f"unexpected keyword '{t.text}' in statement position")
        if t.kind == "op" and t.text == "#":
            start = self.take()
            num = self.expect("number")
            n = Node("number", num.text, [], Span(num.line, num.col, num.line, num.col))
            if self.at_op(";"):
                self.take()
                return Node("delay_stmt", None, [n], self.span_from(start))
            stmt = self.parse_stmt()
            return Node("delay_stmt", None, [n, stmt], self.span_from(start))
        if t.kind == "op" and t.text == ";":
            self.take()
            return Node("null_stmt", None, [], Span(t.line, t.col, t.line, t.col))
        if t.kind == "sysname":
            raise UnsupportedConstructError("system task call", self.path, t.line, t.col)
        # assignment
        start = t
        lhs = self.parse_lvalue()
        if self.at_op("="):
            self.take()
            rhs = self.parse_expr()
            self.expect("op", ";")
            return Node("blocking", None, [lhs, rhs], self.span_from(start))
        if self.at_op("<="):
            self.take()
            rhs = self.parse_expr()
            self.expect("op", ";")
            return Node("nonblocking", None, [lhs, rhs], self.span_from(start))
        self.error("expected assignment", expected=("=", "<="))

    def parse_block(self) -> Node:
        start = self.expect("kw", "begin")
        if self.at_op(":"):
            raise UnsupportedConstructError("named block", self.path, start.line, start.col)
        stmts = []
        while not self.at_kw("end"):
            if self.at("eof"):
                self.error("missing end", expected=("end",))
            stmts.append(self.parse_stmt())
        self.expect("kw", "end")
        return Node("block", None, stmts, self.span_from(start))

    def parse_if(self) -> Node:
        start = self.expect("kw", "if")
        self.expect("op", "(")
        cond = self.parse_expr()
        self.expect("op", ")")
        then = self.parse_stmt()
        children = [cond, then]
        if self.at_kw("else"):
            self.take()
            children.append(self.parse_stmt())
        return Node("if", None, children, self.span_from(start))

    def parse_case(self) -> Node:
        start = self.take()  # case | casez | casex
        self.expect("op", "(")
        subject = self.parse_expr()
        self.expect("op", ")")
        items = []
        while not self.at_kw("endcase"):
            if self.at("eof"):
                self.error("missing endcase", expected=("endcase",))
            items.append(self.parse_case_item())
        self.expect("kw", "endcase")
        return Node("case", start.text, [subject] + items, self.span_from(start))

    def parse_case_item(self) -> Node:
        start = self.peek()
        if self.at_kw("default"):
            self.take()
            if self.at_op(":"):
                self.take()
            stmt = self.parse_stmt()
            return Node("case_item", "default", [stmt], self.span_from(start))
        labels = [self.parse_expr()]
        while self.at_op(","):
            self.take()
            labels.append(self.parse_expr())
        self.expect("op", ":")
        stmt = self.parse_stmt()
        return Node("case_item", None, labels + [stmt], self.span_from(start))

    def parse_lvalue(self) -> Node:
        t = self.peek()
        if self.at_op("{"):
            start = self.take()
            parts = [self.parse_lvalue()]
            while self.at_op(","):
                self.take()
                parts.append(self.parse_lvalue())
            self.expect("op", "}")
            return Node("concat", None, parts, self.span_from(start))
        if t.kind != "ident":
            self.error("expected assignable target")
        base = Node("ident", self.take().text, [], Span(t.line, t.col, t.line, t.col))
        return self.parse_selects(base, t)

    # -- expressions --------------------------------------------------------

    def parse_expr(self) -> Node:
        return self.parse_ternary()

    def parse_ternary(self) -> Node:
        start = self.peek()
        cond = self.parse_binary(1)
        if self.at_op("?"):
            self.take()
            t = self.parse_expr()
            self.expect("op", ":")
            f = self.parse_expr()
            return Node("ternary", None, [cond, t, f], self.span_from(start))
        return cond

    def parse_binary(self, min_prec: int) -> Node:
        start = self.peek()
        left = self.parse_unary()
        while True:
            t = self.peek()
            if t.kind != "op" or t.text not in BINARY_PRECEDENCE:
                return left
            prec = BINARY_PRECEDENCE[t.text]
            if prec < min_prec:
                return left
            op = _OP_NORMALIZE.get(t.text, t.text)
            self.take()
            # ** is right-associative, everything else is left-associative
            right = self.parse_binary(prec if op == "**" else prec + 1)
            left = Node("binop", op, [left, right], self.span_from(start))

    def parse_unary(self) -> Node:
        t = self.peek()
        if t.kind == "op" and t.text in UNARY_OPS:
            self.take()
            op = _OP_NORMALIZE.get(t.text, t.text)
            operand = self.parse_unary()
            return Node("unop", op, [operand], self.span_from(t))
        return self.parse_primary()

    def parse_primary(self) -> Node:
        t = self.peek()
        if t.kind == "number":
            self.take()
            return Node("number", t.text, [], Span(t.line, t.col, t.line, t.col))
        if t.kind == "ident":
            self.take()
            base = Node("ident", t.text, [], Span(t.line, t.col, t.line, t.col))
            return self.parse_selects(base, t)
        if t.kind == "sysname":
            if not self.allow_syscalls:
                raise UnsupportedConstructError("system function", self.path, t.line, t.col)
            self.take()
            args = []
            if self.at_op("("):
                self.take()
                if not self.at_op(")"):
                    args.append(self.parse_expr())
                    while self.at_op(","):
                        self.take()
                        args.append(self.parse_expr())
                self.expect("op", ")")
            return Node("syscall", t.text, args, self.span_from(t))
        if self.at_op("("):
            self.take()
            expr = self.parse_expr()
            self.expect("op", ")")
            return expr
        if self.at_op("{"):
            start = self.take()
            first = self.parse_expr()
            if self.at_op("{"):
                self.take()
                items = [self.parse_expr()]
                while self.at_op(","):
                    self.take()
                    items.append(self.parse_expr())
                self.expect("op", "}")
                self.expect("op", "}")
                return Node("repl", None, [first] + items, self.span_from(start))
            items = [first]
            while self.at_op(","):
                self.take()
                items.append(self.parse_expr())
            self.expect("op", "}")
            return Node("concat", None, items, self.span_from(start))
        self.error(f"unexpected {t.text!r} in expression")

    def parse_selects(self, base: Node, start_tok: Token) -> Node:
        while self.at_op("["):
            self.take()
            first = self.parse_expr()
            if self.at_op(":"):
                self.take()
                second = self.parse_expr()
                self.expect("op", "]")
                base = Node("partsel", None, [base, first, second], self.span_from(start_tok))
            elif self.at_op("+:") or self.at_op("-:"):
                op = self.take().text
                width = self.parse_expr()
                self.expect("op", "]")
                base = Node("partsel", op, [base, first, width], self.span_from(start_tok))
            else:
                self.expect("op", "]")
                base = Node("bitsel", None, [base, first], self.span_from(start_tok))
        return base


def parse(src: SourceFile) -> Node:
    """Parse one source file into a 'source' tree (module list)."""
    return Parser(tokenize(src.text, src.path), src.path).parse_source()


def parse_text(text: str, path: str = "<input>") -> Node:
    return parse(SourceFile(path=path, text=text))


def parse_expr_text(text: str, path: str = "<expr>", allow_syscalls: bool = False) -> Node:
    """Parse a standalone expression (used by tests and the assertion parser)."""
    p = Parser(tokenize(text, path, sva=allow_syscalls), path, allow_syscalls=allow_syscalls)
    expr = p.parse_expr()
    if not p.at("eof"):
        p.error("trailing input after expression")
    return expr
