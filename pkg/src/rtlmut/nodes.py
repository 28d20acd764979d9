"""Generic AST node type plus tree utilities (paths, clone, structural equality).

One node class covers the whole subset; `kind` selects the shape and `value`
holds the single scalar payload (identifier name, operator symbol, literal
text, direction, ...). Child layouts per kind are documented next to the
parser productions. Node identity for edits is the child-index path from the
file root; node_id is the preorder index, recomputed after any mutation.

Trees are treated as immutable after construction; mutation always operates on
a clone (see operators.py).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional


@dataclass
class Span:
    line: int
    col: int
    end_line: int
    end_col: int


@dataclass(eq=False)  # identity semantics; use structural_eq for tree equality
class Node:
    kind: str
    value: Optional[str] = None
    children: list["Node"] = field(default_factory=list)
    span: Optional[Span] = None
    node_id: int = -1

    def __repr__(self):  # compact, spans elided
        v = f" {self.value!r}" if self.value is not None else ""
        return f"Node({self.kind}{v}, {len(self.children)} children)"


Path = tuple[int, ...]


def walk(node: Node) -> Iterator[Node]:
    """Preorder traversal."""
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(cur.children))


def walk_paths(node: Node, prefix: Path = ()) -> Iterator[tuple[Path, Node]]:
    yield prefix, node
    for i, child in enumerate(node.children):
        yield from walk_paths(child, prefix + (i,))


def number_tree(root: Node) -> None:
    """Assign preorder indices as node_id; deterministic for identical trees."""
    for i, node in enumerate(walk(root)):
        node.node_id = i


def clone(node: Node) -> Node:
    return Node(
        kind=node.kind,
        value=node.value,
        children=[clone(c) for c in node.children],
        span=node.span,
        node_id=node.node_id,
    )


def node_at(root: Node, path: Path) -> Node:
    cur = root
    for idx in path:
        cur = cur.children[idx]
    return cur


def replace_at(root: Node, path: Path, new: Node) -> None:
    """Replace the subtree at path in place. path must be non-empty."""
    parent = node_at(root, path[:-1])
    parent.children[path[-1]] = new


def structural_eq(a: Node, b: Node) -> bool:
    """Equality on (kind, value, children), ignoring spans and node ids."""
    if a.kind != b.kind or a.value != b.value or len(a.children) != len(b.children):
        return False
    return all(structural_eq(x, y) for x, y in zip(a.children, b.children))


def find_all(root: Node, kind: str) -> list[Node]:
    return [n for n in walk(root) if n.kind == kind]


def module_names(source_root: Node) -> list[str]:
    return [m.value for m in source_root.children if m.kind == "module"]


def find_module(source_root: Node, name: str) -> Optional[Node]:
    for m in source_root.children:
        if m.kind == "module" and m.value == name:
            return m
    return None
