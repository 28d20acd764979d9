"""Hierarchy elaboration: module resolution, parameter folding, signal tables.

Elaboration specializes every instance with its own constant parameter
environment (widths may differ between instances of one module), flattens the
hierarchy into qualified signal names ("u1.q"; top-level signals keep their
bare name), and records per-instance statements for connectivity and
simulation. DesignUnit and everything it references are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import (
    CyclicHierarchyError,
    ElaborationError,
    MultipleTopCandidatesError,
    ParameterNotConstantError,
    UnresolvedModuleError,
    UnsupportedConstructError,
)
from .nodes import Node, walk
from .parser import parse
from .source import SourceFile, parse_literal


@dataclass
class Signal:
    name: str                 # local name within its module
    qual: str                 # qualified name within the elaborated design
    instance: str             # instance path, "" for top
    module: str               # declaring module name
    file: str                 # defining file
    msb: int
    lsb: int
    is_reg: bool
    port: Optional[str] = None        # 'input' | 'output' | None
    array: Optional[tuple[int, int]] = None  # unpacked range (left, right)
    init: Optional[int] = None        # folded declaration initializer

    @property
    def width(self) -> int:
        return self.msb - self.lsb + 1

    @property
    def depth(self) -> Optional[int]:
        if self.array is None:
            return None
        lo, hi = sorted(self.array)
        return hi - lo + 1


@dataclass
class Statement:
    """One behavioral item of an instance: continuous assign or always block."""
    kind: str                 # 'assign' | 'always'
    node: Node
    path: tuple[int, ...]     # node path within the file's source tree
    file: str


@dataclass
class PortBinding:
    formal: Signal            # the child-side port signal
    direction: str            # 'input' | 'output'
    actual: Optional[Node]    # parent-scope expression; None for unconnected
    label: str                # "file:path" of the instantiation statement


@dataclass
class Instance:
    path: str                 # "" for top
    module: str
    params: dict[str, int]
    signals: dict[str, Signal] = field(default_factory=dict)
    statements: list[Statement] = field(default_factory=list)
    bindings: list[PortBinding] = field(default_factory=list)  # bindings of child ports
    children: list["Instance"] = field(default_factory=list)

    def qual(self, local: str) -> str:
        return f"{self.path}.{local}" if self.path else local


@dataclass
class ModuleInfo:
    name: str
    file: str
    node: Node
    file_child_index: int     # position of the module under its source root


@dataclass
class DesignUnit:
    files: list[SourceFile]
    asts: dict[str, Node]             # file path -> source root
    top: str
    root: Instance
    modules: dict[str, ModuleInfo]
    loc: int

    def instances(self) -> list[Instance]:
        out: list[Instance] = []
        stack = [self.root]
        while stack:
            inst = stack.pop()
            out.append(inst)
            stack.extend(reversed(inst.children))
        return out

    def all_signals(self) -> dict[str, Signal]:
        table: dict[str, Signal] = {}
        for inst in self.instances():
            for sig in inst.signals.values():
                table[sig.qual] = sig
        return table

    def instance_count(self) -> int:
        return len(self.instances())

    def first_env(self, module: str) -> dict[str, int]:
        """Parameter environment of the first elaborated instance of a module."""
        for inst in self.instances():
            if inst.module == module:
                return inst.params
        raise ElaborationError(f"module '{module}' is not instantiated")


# -- constant evaluation -----------------------------------------------------

_MASK32 = (1 << 32) - 1


def eval_const(node: Node, env: dict[str, int], site: str = "<const>") -> int:
    value, _ = _const(node, env, site)
    return value


def _const(node: Node, env: dict[str, int], site: str) -> tuple[int, Optional[int]]:
    kind = node.kind
    if kind == "number":
        size, _, value = parse_literal(node.value)
        return value, size
    if kind == "ident":
        if node.value not in env:
            raise ParameterNotConstantError(f"{site}: '{node.value}'")
        return env[node.value], None
    if kind == "unop":
        v, w = _const(node.children[0], env, site)
        op = node.value
        if op == "-":
            return -v, w
        if op == "+":
            return v, w
        if op == "!":
            return (0 if v else 1), 1
        if op == "~":
            width = w if w is not None else 32
            return (~v) & ((1 << width) - 1), width
        if op in ("&", "|", "^", "~&", "~|", "~^"):
            width = w if w is not None else 32
            bits = [(v >> i) & 1 for i in range(width)]
            if op == "&":
                r = int(all(bits))
            elif op == "|":
                r = int(any(bits))
            elif op == "^":
                r = sum(bits) & 1
            elif op == "~&":
                r = int(not all(bits))
            elif op == "~|":
                r = int(not any(bits))
            else:
                r = (sum(bits) & 1) ^ 1
            return r, 1
        raise ParameterNotConstantError(f"{site}: operator {op}")
    if kind == "binop":
        a, wa = _const(node.children[0], env, site)
        b, wb = _const(node.children[1], env, site)
        op = node.value
        w = max(w for w in (wa, wb) if w is not None) if (wa or wb) else None
        try:
            if op == "+":
                return a + b, w
            if op == "-":
                return a - b, w
            if op == "*":
                return a * b, w
            if op == "/":
                return a // b, w
            if op == "%":
                return a % b, w
            if op == "**":
                return a ** b, w
            if op == "<<" or op == "<<<":
                return a << b, w
            if op == ">>" or op == ">>>":
                return a >> b, w
            if op == "&":
                return a & b, w
            if op == "|":
                return a | b, w
            if op == "^":
                return a ^ b, w
            if op == "~^":
                width = w if w is not None else 32
                return (~(a ^ b)) & ((1 << width) - 1), width
            if op == "&&":
                return int(bool(a) and bool(b)), 1
            if op == "||":
                return int(bool(a) or bool(b)), 1
            if op == "==":
                return int(a == b), 1
            if op == "!=":
                return int(a != b), 1
            if op == "===":
                return int(a == b), 1
            if op == "!==":
                return int(a != b), 1
            if op == "<":
                return int(a < b), 1
            if op == "<=":
                return int(a <= b), 1
            if op == ">":
                return int(a > b), 1
            if op == ">=":
                return int(a >= b), 1
        except ZeroDivisionError:
            raise ParameterNotConstantError(f"{site}: division by zero")
        raise ParameterNotConstantError(f"{site}: operator {op}")
    if kind == "ternary":
        c, _ = _const(node.children[0], env, site)
        return _const(node.children[1 if c else 2], env, site)
    if kind == "concat":
        value = 0
        total = 0
        for child in node.children:
            v, w = _const(child, env, site)
            if w is None:
                raise ParameterNotConstantError(f"{site}: unsized value in concat")
            value = (value << w) | (v & ((1 << w) - 1))
            total += w
        return value, total
    if kind == "repl":
        count, _ = _const(node.children[0], env, site)
        inner = Node("concat", None, node.children[1:])
        v, w = _const(inner, env, site)
        if w is None or count < 0:
            raise ParameterNotConstantError(f"{site}: bad replication")
        value = 0
        for _ in range(count):
            value = (value << w) | v
        return value, w * count
    raise ParameterNotConstantError(f"{site}: {kind} not constant")


def _eval_range(rng: Optional[Node], env: dict[str, int], site: str) -> tuple[int, int]:
    if rng is None:
        return 0, 0
    msb = eval_const(rng.children[0], env, site)
    lsb = eval_const(rng.children[1], env, site)
    if msb < lsb:
        raise ElaborationError(f"{site}: ascending range [{msb}:{lsb}] is outside the subset")
    return msb, lsb


# -- module collection -------------------------------------------------------

def load_design_files(paths) -> list[SourceFile]:
    return [SourceFile.read(p) for p in sorted(str(p) for p in paths)]


def load_design_dir(design_dir) -> list[SourceFile]:
    """Load all .v files under a design directory, with dir-relative paths."""
    base = Path(design_dir)
    paths = sorted(base.rglob("*.v"))
    if not paths:
        raise ElaborationError(f"no .v files under {design_dir}")
    return [
        SourceFile(path=p.relative_to(base).as_posix(),
                   text=p.read_text(encoding="utf-8"))
        for p in paths
    ]


def collect_modules(asts: dict[str, Node]) -> dict[str, ModuleInfo]:
    modules: dict[str, ModuleInfo] = {}
    for path in sorted(asts):
        root = asts[path]
        for idx, mod in enumerate(root.children):
            if mod.kind != "module":
                continue
            if mod.value in modules:
                raise ElaborationError(
                    f"module '{mod.value}' declared in both {modules[mod.value].file} and {path}"
                )
            modules[mod.value] = ModuleInfo(mod.value, path, mod, idx)
    return modules


def infer_top(modules: dict[str, ModuleInfo]) -> str:
    instantiated = set()
    for info in modules.values():
        for node in walk(info.node):
            if node.kind == "instance":
                instantiated.add(node.value)
    candidates = sorted(set(modules) - instantiated)
    if len(candidates) == 1:
        return candidates[0]
    if not candidates:
        raise CyclicHierarchyError("<all modules instantiated>")
    raise MultipleTopCandidatesError(candidates)


# -- elaboration -------------------------------------------------------------

def elaborate(files: list[SourceFile], top: Optional[str] = None,
              asts: Optional[dict[str, Node]] = None) -> DesignUnit:
    """Resolve the hierarchy under `top`, folding parameters to constants."""
    if asts is None:
        asts = {f.path: parse(f) for f in files}
    modules = collect_modules(asts)
    if top is None:
        top = infer_top(modules)
    if top not in modules:
        raise UnresolvedModuleError(top, site="top selection")
    root = _elaborate_instance(top, "", {}, modules, [])
    loc = sum(f.loc() for f in files)
    return DesignUnit(files=files, asts=asts, top=top, root=root, modules=modules, loc=loc)


def elaborate_dir(design_dir, top: Optional[str] = None) -> DesignUnit:
    return elaborate(load_design_dir(design_dir), top)


def _module_paths(modules: dict[str, ModuleInfo], name: str) -> dict[Node, tuple[int, ...]]:
    info = modules[name]
    paths: dict[Node, tuple[int, ...]] = {}

    def rec(node: Node, path: tuple[int, ...]):
        paths[node] = path
        for i, child in enumerate(node.children):
            rec(child, path + (i,))

    rec(info.node, (info.file_child_index,))
    return paths


def _elaborate_instance(module_name: str, inst_path: str, overrides: dict[str, int],
                        modules: dict[str, ModuleInfo], visiting: list[str]) -> Instance:
    if module_name in visiting:
        raise CyclicHierarchyError(" -> ".join(visiting + [module_name]))
    info = modules[module_name]
    node_paths = _module_paths(modules, module_name)
    site = f"{info.file}:{module_name}"

    env: dict[str, int] = {}
    mod = info.node
    paramlist, portlist = mod.children[0], mod.children[1]

    def fold_params(decl: Node):
        rng = None
        for child in decl.children:
            if child.kind == "range":
                rng = child
            elif child.kind == "param_assign":
                name = child.value
                if decl.value == "parameter" and name in overrides:
                    value = overrides[name]
                else:
                    value = eval_const(child.children[0], env, f"{site}.{name}")
                if rng is not None:
                    msb, lsb = _eval_range(rng, env, f"{site}.{name}")
                    value &= (1 << (msb - lsb + 1)) - 1
                env[name] = value

    for decl in paramlist.children:
        fold_params(decl)

    inst = Instance(path=inst_path, module=module_name, params=env)

    def add_signal(name: str, msb: int, lsb: int, is_reg: bool, port, array, init):
        if name in inst.signals:
            existing = inst.signals[name]
            # non-ANSI style: port direction and net declaration arrive separately
            merged = Signal(
                name=name, qual=inst.qual(name), instance=inst_path, module=module_name,
                file=info.file, msb=max(existing.msb, msb), lsb=min(existing.lsb, lsb),
                is_reg=existing.is_reg or is_reg, port=existing.port or port,
                array=existing.array or array,
                init=existing.init if existing.init is not None else init,
            )
            inst.signals[name] = merged
            return
        inst.signals[name] = Signal(
            name=name, qual=inst.qual(name), instance=inst_path, module=module_name,
            file=info.file, msb=msb, lsb=lsb, is_reg=is_reg, port=port, array=array, init=init,
        )

    def add_decl(node: Node, direction: Optional[str]):
        is_reg = node.kind == "decl" and node.value == "reg"
        rng = None
        for child in node.children:
            if child.kind == "nettype":
                is_reg = child.value == "reg"
            elif child.kind == "range":
                rng = child
        msb, lsb = _eval_range(rng, env, site)
        if direction == "inout":
            raise UnsupportedConstructError("inout port", info.file)
        for child in node.children:
            if child.kind != "declarator":
                continue
            array = None
            init = None
            for sub in child.children:
                if sub.kind == "array_range":
                    a = eval_const(sub.children[0], env, site)
                    b = eval_const(sub.children[1], env, site)
                    array = (a, b)
                elif sub.kind == "init":
                    init = eval_const(sub.children[0], env, f"{site}.{child.value}")
            add_signal(child.value, msb, lsb, is_reg, direction, array, init)

    for port in portlist.children:
        if port.kind == "port_decl":
            add_decl(port, port.value)

    for item in mod.children[2:]:
        if item.kind == "port_decl":
            add_decl(item, item.value)
        elif item.kind == "decl":
            add_decl(item, None)
        elif item.kind == "param_decl":
            fold_params(item)

    if portlist.children and portlist.children[0].kind == "port_ref":
        for ref in portlist.children:
            if ref.value not in inst.signals or inst.signals[ref.value].port is None:
                raise ElaborationError(f"{site}: port '{ref.value}' has no direction declaration")

    for item in mod.children[2:]:
        if item.kind in ("assign", "always"):
            inst.statements.append(
                Statement(kind=item.kind, node=item, path=node_paths[item], file=info.file)
            )
        elif item.kind == "instance":
            child_inst = _elaborate_child(item, inst, modules, visiting + [module_name],
                                          env, info, node_paths[item])
            inst.children.append(child_inst)
    return inst


def _ordered_ports(info: ModuleInfo) -> list[str]:
    portlist = info.node.children[1]
    names = []
    for port in portlist.children:
        if port.kind == "port_ref":
            names.append(port.value)
        else:
            names.extend(d.value for d in port.children if d.kind == "declarator")
    return names


def _elaborate_child(item: Node, parent: Instance, modules: dict[str, ModuleInfo],
                     visiting: list[str], env: dict[str, int], parent_info: ModuleInfo,
                     item_path: tuple[int, ...]) -> Instance:
    child_module = item.value
    site = f"{parent_info.file}:{parent.module}"
    if child_module not in modules:
        raise UnresolvedModuleError(child_module, site=site)
    child_info = modules[child_module]

    overrides: dict[str, int] = {}
    inst_node = item.children[-1]
    if item.children[0].kind == "param_args":
        param_names = []
        for decl in child_info.node.children[0].children:
            param_names.extend(pa.value for pa in decl.children if pa.kind == "param_assign")
        for pos, conn in enumerate(item.children[0].children):
            value = eval_const(conn.children[0], env, f"{site}:#({child_module})")
            if conn.kind == "conn_named":
                overrides[conn.value] = value
            else:
                if pos >= len(param_names):
                    raise ElaborationError(f"{site}: too many positional parameters for {child_module}")
                overrides[param_names[pos]] = value

    child_path = f"{parent.path}.{inst_node.value}" if parent.path else inst_node.value
    child = _elaborate_instance(child_module, child_path, overrides, modules, visiting)

    port_order = _ordered_ports(child_info)
    label = f"{parent_info.file}:" + "/".join(map(str, item_path))
    bound: dict[str, Optional[Node]] = {}
    for pos, conn in enumerate(inst_node.children):
        if conn.kind == "conn_named":
            pname = conn.value
            if pname in bound:
                raise ElaborationError(f"{site}: port '{pname}' connected twice on {inst_node.value}")
        else:
            if pos >= len(port_order):
                raise ElaborationError(f"{site}: too many positional connections on {inst_node.value}")
            pname = port_order[pos]
        if pname not in child.signals or child.signals[pname].port is None:
            raise ElaborationError(f"{site}: '{child_module}' has no port '{pname}'")
        bound[pname] = conn.children[0] if conn.children else None

    for pname in port_order:
        formal = child.signals[pname]
        actual = bound.get(pname)
        parent.bindings.append(
            PortBinding(formal=formal, direction=formal.port, actual=actual, label=label)
        )
    return child
