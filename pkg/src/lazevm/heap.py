"""Heap representation: named bindings with blackholing and reachability.

A binding is either `Bound(expr)` or a `Blackhole` marking an expression
currently under evaluation (the machine's realization of removing the
binding while its right-hand side is being reduced).  Each `Bound` caches
the free names of its expression so reachability traversals never have to
walk terms.
"""

from __future__ import annotations

from .core import LazevmError, Name


class HeapError(LazevmError):
    pass


class DanglingRootError(HeapError):
    pass


class Bound:
    __slots__ = ("expr", "deps")

    def __init__(self, expr):
        self.expr = expr
        self.deps = tuple(expr.fvs)

    def __repr__(self):
        return f"Bound({self.expr!r})"


class Blackhole:
    __slots__ = ("owner",)
    deps = ()

    def __init__(self, owner: int = 0):
        self.owner = owner

    def __repr__(self):
        return f"Blackhole(owner={self.owner})"


class Heap:
    """Mapping from names to bindings, plus the step index at which each
    cell was created (diagnostics and the deepDup no-new-garbage checks)."""

    __slots__ = ("bindings", "created_at")

    def __init__(self):
        self.bindings: dict = {}
        self.created_at: dict = {}

    def bind(self, name: Name, expr, step: int = 0) -> None:
        if name in self.bindings:
            raise HeapError(f"{name} already bound")
        self.bindings[name] = Bound(expr)
        self.created_at[name] = step

    def lookup(self, name: Name):
        return self.bindings.get(name)

    def expr_of(self, name: Name):
        b = self.bindings.get(name)
        return b.expr if type(b) is Bound else None

    def blackhole(self, name: Name, owner: int) -> None:
        self.bindings[name] = Blackhole(owner)

    def update(self, name: Name, expr) -> None:
        self.bindings[name] = Bound(expr)

    def retain(self, live: set) -> None:
        """Drop every binding outside ``live`` (in-place collection)."""
        dead = [n for n in self.bindings if n not in live]
        for n in dead:
            del self.bindings[n]
            self.created_at.pop(n, None)

    def copy(self) -> "Heap":
        h = Heap()
        h.bindings = dict(self.bindings)
        h.created_at = dict(self.created_at)
        return h

    def domain(self):
        return self.bindings.keys()

    def __contains__(self, name):
        return name in self.bindings

    def __len__(self):
        return len(self.bindings)

    def __iter__(self):
        return iter(self.bindings)

    def items(self):
        return self.bindings.items()

    @staticmethod
    def of(bindings) -> "Heap":
        """Heap from an iterable of (name, expr) pairs; all created at step 0."""
        h = Heap()
        for n, e in dict(bindings).items():
            h.bind(n, e, 0)
        return h


def reachable(heap: Heap, roots) -> set:
    """Transitive closure of ``roots`` under the free names of bindings.

    Blackholes are kept but contribute no edges (the expression under
    evaluation is rooted through the control/stack).  A root absent from
    the heap is an error: the machine invariants guarantee every
    dereferenceable name is bound."""
    bindings = heap.bindings
    seen = set()
    stack = []
    for r in roots:
        if r not in bindings:
            raise DanglingRootError(f"root {r} not bound in heap")
        if r not in seen:
            seen.add(r)
            stack.append(r)
    while stack:
        b = bindings[stack.pop()]
        for m in b.deps:
            if m not in seen:
                if m not in bindings:
                    raise DanglingRootError(f"{m} referenced but not bound")
                seen.add(m)
                stack.append(m)
    return seen
