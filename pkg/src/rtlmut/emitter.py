"""Canonical source re-emission: one statement per line, fixed indentation.

emit() is a pure function of the tree; identical trees produce byte-identical
text, and the emitted text reparses to a structurally equal tree (round-trip
property, exercised corpus-wide in tests).
"""

from __future__ import annotations

from .nodes import Node, walk
from .parser import BINARY_PRECEDENCE

_INDENT = "  "

_TERNARY_PREC = 1
_UNARY_PREC = 13
_ATOM_PREC = 14


def _prec(node: Node) -> int:
    if node.kind == "binop":
        return BINARY_PRECEDENCE[node.value] + 1
    if node.kind == "unop":
        return _UNARY_PREC
    if node.kind == "ternary":
        return _TERNARY_PREC
    return _ATOM_PREC


def emit_expr(node: Node) -> str:
    kind = node.kind
    if kind == "ident":
        return node.value
    if kind == "number":
        return node.value
    if kind == "binop":
        p = _prec(node)
        left, right = node.children
        if node.value == "**":
            lt = _wrap(left, _prec(left) <= p)
            rt = _wrap(right, _prec(right) < p)
        else:
            lt = _wrap(left, _prec(left) < p)
            rt = _wrap(right, _prec(right) <= p)
        return f"{lt} {node.value} {rt}"
    if kind == "unop":
        operand = node.children[0]
        inner = _wrap(operand, _prec(operand) < _ATOM_PREC)
        return f"{node.value}{inner}"
    if kind == "ternary":
        cond, t, f = node.children
        ct = _wrap(cond, _prec(cond) <= _TERNARY_PREC)
        tt = _wrap(t, _prec(t) <= _TERNARY_PREC)
        ft = emit_expr(f)  # right-associative
        return f"{ct} ? {tt} : {ft}"
    if kind == "concat":
        return "{" + ", ".join(emit_expr(c) for c in node.children) + "}"
    if kind == "repl":
        count = emit_expr(node.children[0])
        items = ", ".join(emit_expr(c) for c in node.children[1:])
        return "{" + count + "{" + items + "}}"
    if kind == "bitsel":
        base, index = node.children
        return f"{emit_expr(base)}[{emit_expr(index)}]"
    if kind == "partsel":
        base, left, right = node.children
        sep = node.value if node.value else ":"
        if node.value:
            return f"{emit_expr(base)}[{emit_expr(left)} {sep} {emit_expr(right)}]"
        return f"{emit_expr(base)}[{emit_expr(left)}:{emit_expr(right)}]"
    if kind == "syscall":
        if node.children:
            return f"{node.value}(" + ", ".join(emit_expr(c) for c in node.children) + ")"
        return node.value
    raise ValueError(f"not an expression node: {node.kind}")


def _wrap(node: Node, parens: bool) -> str:
    text = emit_expr(node)
    return f"({text})" if parens else text


def _emit_range(node: Node) -> str:
    return f"[{emit_expr(node.children[0])}:{emit_expr(node.children[1])}]"


def _emit_declarator(node: Node) -> str:
    text = node.value
    for child in node.children:
        if child.kind == "array_range":
            text += f" [{emit_expr(child.children[0])}:{emit_expr(child.children[1])}]"
        elif child.kind == "init":
            text += f" = {emit_expr(child.children[0])}"
    return text


def _emit_event_control(node: Node) -> str:
    if node.value == "*":
        return "@(*)"
    parts = []
    for ev in node.children:
        edge = "" if ev.value == "level" else ev.value + " "
        parts.append(edge + emit_expr(ev.children[0]))
    return "@(" + " or ".join(parts) + ")"


def _emit_connections(conns: list[Node]) -> str:
    parts = []
    for c in conns:
        if c.kind == "conn_named":
            inner = emit_expr(c.children[0]) if c.children else ""
            parts.append(f".{c.value}({inner})")
        else:
            parts.append(emit_expr(c.children[0]))
    return ", ".join(parts)


class _Writer:
    def __init__(self):
        self.lines: list[str] = []

    def line(self, depth: int, text: str):
        self.lines.append(_INDENT * depth + text)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def emit(node: Node) -> str:
    """Emit a source, module, statement, or expression node as canonical text."""
    if node.kind == "source":
        w = _Writer()
        for i, mod in enumerate(node.children):
            if i:
                w.lines.append("")
            _emit_module(w, mod)
        return w.text()
    if node.kind == "module":
        w = _Writer()
        _emit_module(w, mod=node)
        return w.text()
    if node.kind in _STMT_KINDS or node.kind in _ITEM_KINDS:
        w = _Writer()
        _emit_item(w, node, 0)
        return w.text()
    return emit_expr(node)


def _emit_module(w: _Writer, mod: Node):
    paramlist, portlist = mod.children[0], mod.children[1]
    header = f"module {mod.value}"
    if paramlist.children:
        w.line(0, header + " #(")
        for i, pd in enumerate(paramlist.children):
            comma = "," if i + 1 < len(paramlist.children) else ""
            w.line(1, _param_decl_text(pd) + comma)
        header = ")"
    if portlist.children:
        if portlist.children[0].kind == "port_ref":
            names = ", ".join(p.value for p in portlist.children)
            w.line(0, f"{header} ({names});")
        else:
            w.line(0, header + " (")
            for i, pd in enumerate(portlist.children):
                comma = "," if i + 1 < len(portlist.children) else ""
                w.line(1, _port_decl_text(pd) + comma)
            w.line(0, ");")
    else:
        w.line(0, header + ";")
    for item in mod.children[2:]:
        _emit_item(w, item, 1)
    w.line(0, "endmodule")


def _param_decl_text(node: Node) -> str:
    parts = [node.value]
    assigns = []
    for child in node.children:
        if child.kind == "range":
            parts.append(_emit_range(child))
        else:
            assigns.append(f"{child.value} = {emit_expr(child.children[0])}")
    return " ".join(parts) + " " + ", ".join(assigns)


def _port_decl_text(node: Node) -> str:
    parts = [node.value]
    names = []
    for child in node.children:
        if child.kind == "nettype":
            parts.append(child.value)
        elif child.kind == "range":
            parts.append(_emit_range(child))
        else:
            names.append(_emit_declarator(child))
    return " ".join(parts) + " " + ", ".join(names)


_ITEM_KINDS = {"decl", "param_decl", "port_decl", "assign", "always", "instance"}
_STMT_KINDS = {"block", "if", "case", "blocking", "nonblocking", "delay_stmt", "null_stmt"}


def _emit_item(w: _Writer, node: Node, depth: int):
    kind = node.kind
    if kind == "port_decl":
        w.line(depth, _port_decl_text(node) + ";")
        return
    if kind == "param_decl":
        w.line(depth, _param_decl_text(node) + ";")
        return
    if kind == "decl":
        parts = [node.value]
        names = []
        for child in node.children:
            if child.kind == "range":
                parts.append(_emit_range(child))
            else:
                names.append(_emit_declarator(child))
        w.line(depth, " ".join(parts) + " " + ", ".join(names) + ";")
        return
    if kind == "assign":
        idx = 0
        prefix = "assign "
        if node.children[0].kind == "delay":
            prefix += f"#{node.children[0].children[0].value} "
            idx = 1
        lhs, rhs = node.children[idx], node.children[idx + 1]
        w.line(depth, f"{prefix}{emit_expr(lhs)} = {emit_expr(rhs)};")
        return
    if kind == "always":
        ev, stmt = node.children
        head = f"always {_emit_event_control(ev)}"
        _emit_headed_stmt(w, head, stmt, depth)
        return
    if kind == "instance":
        idx = 0
        text = node.value
        if node.children[0].kind == "param_args":
            text += " #(" + _emit_connections(node.children[0].children) + ")"
            idx = 1
        inst = node.children[idx]
        text += f" {inst.value} (" + _emit_connections(inst.children) + ");"
        w.line(depth, text)
        return
    _emit_stmt(w, node, depth)


def _emit_headed_stmt(w: _Writer, head: str, stmt: Node, depth: int):
    """Emit `head stmt`, inlining `begin` on the head line."""
    if stmt.kind == "block":
        w.line(depth, head + " begin")
        for s in stmt.children:
            _emit_stmt(w, s, depth + 1)
        w.line(depth, "end")
    else:
        w.line(depth, head)
        _emit_stmt(w, stmt, depth + 1)


def _emit_stmt(w: _Writer, node: Node, depth: int):
    kind = node.kind
    if kind == "block":
        w.line(depth, "begin")
        for s in node.children:
            _emit_stmt(w, s, depth + 1)
        w.line(depth, "end")
        return
    if kind == "if":
        _emit_if(w, node, depth, prefix="")
        return
    if kind == "case":
        subject = node.children[0]
        w.line(depth, f"{node.value} ({emit_expr(subject)})")
        for item in node.children[1:]:
            stmt = item.children[-1]
            if item.value == "default":
                label = "default"
            else:
                label = ", ".join(emit_expr(e) for e in item.children[:-1])
            _emit_headed_stmt(w, label + ":", stmt, depth + 1)
        w.line(depth, "endcase")
        return
    if kind == "blocking":
        lhs, rhs = node.children
        w.line(depth, f"{emit_expr(lhs)} = {emit_expr(rhs)};")
        return
    if kind == "nonblocking":
        lhs, rhs = node.children
        w.line(depth, f"{emit_expr(lhs)} <= {emit_expr(rhs)};")
        return
    if kind == "delay_stmt":
        if len(node.children) == 1:
            w.line(depth, f"#{node.children[0].value};")
        else:
            _emit_headed_stmt(w, f"#{node.children[0].value}", node.children[1], depth)
        return
    if kind == "null_stmt":
        w.line(depth, ";")
        return
    raise ValueError(f"not a statement node: {node.kind}")


def _emit_if(w: _Writer, node: Node, depth: int, prefix: str):
    cond = node.children[0]
    then = node.children[1]
    els = node.children[2] if len(node.children) > 2 else None
    head = f"{prefix}if ({emit_expr(cond)})"
    if then.kind == "block":
        w.line(depth, head + " begin")
        for s in then.children:
            _emit_stmt(w, s, depth + 1)
        if els is None:
            w.line(depth, "end")
            return
        closer = "end else"
    else:
        w.line(depth, head)
        _emit_stmt(w, then, depth + 1)
        if els is None:
            return
        closer = "else"
    if els.kind == "if":
        _emit_if(w, els, depth, prefix=closer + " " if closer == "end else" else "else ")
        return
    if els.kind == "block":
        w.line(depth, closer + " begin")
        for s in els.children:
            _emit_stmt(w, s, depth + 1)
        w.line(depth, "end")
    else:
        w.line(depth, closer)
        _emit_stmt(w, els, depth + 1)


def sanitize(root: Node) -> Node:
    """Enforce that declaration initializers stay attached to declarators.

    The canonical emitter never lowers `reg r = 0;` into a declaration plus a
    separate continuous assign, so this pass is a guard: it verifies the
    invariant on the given tree and returns it unchanged. A violation would
    mean a transformation produced a detached initializer, which is a bug.
    """
    for node in walk(root):
        if node.kind == "init":
            continue
        for child in node.children:
            if child.kind == "init" and node.kind != "declarator":
                raise ValueError("declaration initializer detached from its declarator")
    return root
