"""Structural tree diff, formatting-insensitive.

Reports the minimal list of subtree positions at which two trees differ.
Single insertions/deletions in a child list (ASSIGN_DUP, branch removals)
are recognized and reported as one site instead of flagging the whole parent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import HierarchyMismatchError
from .nodes import Node, Path, structural_eq


@dataclass
class EditSite:
    path: Path           # in golden-tree coordinates
    change: str          # 'replace' | 'insert' | 'delete'
    before: Optional[Node]
    after: Optional[Node]

    def __repr__(self):
        return f"EditSite({self.change} at {'/'.join(map(str, self.path)) or '<root>'})"


def structural_diff(golden: Node, mutant: Node) -> list[EditSite]:
    """Minimal differing subtree positions between two trees of one design."""
    if golden.kind == "source" and mutant.kind == "source":
        g_names = [m.value for m in golden.children if m.kind == "module"]
        m_names = [m.value for m in mutant.children if m.kind == "module"]
        if g_names != m_names:
            raise HierarchyMismatchError(f"{g_names} vs {m_names}")
    return _diff(golden, mutant, ())


# Nodes whose children are independent units (modules, declarations,
# statements): multiple differing children stay separate edit sites. Anywhere
# else, >1 differing child is one local edit (swaps touch two siblings).
_CONTAINER_KINDS = {"source", "module", "paramlist", "portlist"}


def _diff(a: Node, b: Node, path: Path) -> list[EditSite]:
    if a.kind != b.kind or a.value != b.value:
        return [EditSite(path, "replace", a, b)]
    if len(a.children) != len(b.children):
        aligned = _align_single_change(a.children, b.children, path)
        if aligned is not None:
            return aligned
        return [EditSite(path, "replace", a, b)]
    changed = [i for i, (ca, cb) in enumerate(zip(a.children, b.children))
               if not structural_eq(ca, cb)]
    if len(changed) > 1 and a.kind not in _CONTAINER_KINDS:
        return [EditSite(path, "replace", a, b)]
    sites: list[EditSite] = []
    for i in changed:
        sites.extend(_diff(a.children[i], b.children[i], path + (i,)))
    return sites


def _align_single_change(a: list[Node], b: list[Node], path: Path) -> Optional[list[EditSite]]:
    """Detect pure insertions (or deletions) in a child list.

    Returns edit sites iff the shorter list matches a prefix+suffix of the
    longer one exactly, i.e. the change is insert-only or delete-only.
    """
    if len(b) > len(a):
        short, long, change = a, b, "insert"
    else:
        short, long, change = b, a, "delete"
    extra = len(long) - len(short)
    pre = 0
    while pre < len(short) and structural_eq(short[pre], long[pre]):
        pre += 1
    suf = 0
    while suf < len(short) - pre and structural_eq(short[-1 - suf], long[-1 - suf]):
        suf += 1
    if pre + suf < len(short):
        return None
    sites = []
    for k in range(extra):
        idx = pre + k
        node = long[idx]
        if change == "insert":
            sites.append(EditSite(path + (idx,), "insert", None, node))
        else:
            sites.append(EditSite(path + (idx,), "delete", node, None))
    return sites
