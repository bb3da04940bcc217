"""Metrics, collection policy, reachability collection and the
unguarded-reachable analysis.

Desk-scale cost model: one heap binding = one cell, one machine transition =
one unit of time.  All memory comparisons in the benchmark harness are done
on these counters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import CoreExpr, Name, Var, unguarded_free_vars
from .heap import Bound, DanglingRootError, Heap, reachable

CSV_COLUMNS = (
    "strategy", "scenario", "b", "d", "n",
    "steps", "allocations", "thunkUpdates", "dupCopies", "deepDupThunks",
    "peakLiveCells", "finalLiveCells",
)

_METRIC_KEYS = (
    ("steps", "steps"),
    ("allocations", "allocations"),
    ("thunkUpdates", "thunk_updates"),
    ("dupCopies", "dup_copies"),
    ("deepDupThunks", "deep_dup_thunks"),
    ("peakLiveCells", "peak_live_cells"),
    ("finalLiveCells", "final_live_cells"),
)


@dataclass(slots=True)
class Metrics:
    steps: int = 0
    allocations: int = 0
    thunk_updates: int = 0
    dup_copies: int = 0
    deep_dup_thunks: int = 0
    peak_live_cells: int = 0
    final_live_cells: int = 0

    def as_dict(self) -> dict:
        return {key: getattr(self, attr) for key, attr in _METRIC_KEYS}

    def as_text(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in self.as_dict().items())

    def copy(self) -> "Metrics":
        m = Metrics()
        for _, attr in _METRIC_KEYS:
            setattr(m, attr, getattr(self, attr))
        return m


@dataclass(frozen=True)
class GcPolicy:
    """When to collect: never (interval None), or every ``interval`` steps.

    ``every(1)`` is the every-step policy."""

    interval: int | None = None

    def __post_init__(self):
        if self.interval is not None and self.interval < 1:
            raise ValueError("collection interval must be >= 1")

    @staticmethod
    def off() -> "GcPolicy":
        return GcPolicy(None)

    @staticmethod
    def every_step() -> "GcPolicy":
        return GcPolicy(1)

    @staticmethod
    def every(n: int) -> "GcPolicy":
        return GcPolicy(n)

    @staticmethod
    def parse(text: str) -> "GcPolicy":
        if text == "off":
            return GcPolicy(None)
        if text == "step":
            return GcPolicy(1)
        return GcPolicy(int(text))

    @property
    def enabled(self) -> bool:
        return self.interval is not None


GC_OFF = GcPolicy.off()


def collect(heap: Heap, roots) -> Heap:
    """New heap keeping exactly the cells reachable from ``roots``.

    Bindings are unchanged; collection is pure.  Raises DanglingRootError
    when a root is not bound."""
    live = reachable(heap, roots)
    out = Heap()
    out.bindings = {n: b for n, b in heap.bindings.items() if n in live}
    out.created_at = {n: s for n, s in heap.created_at.items() if n in live}
    return out


def unguarded_reachable(heap: Heap, e: CoreExpr) -> frozenset:
    """Least set closed under: the unguarded free names of ``e``, plus, for
    each name in the set bound in the heap, the unguarded free names of its
    binding.  deepDup bindings stop the closure because they guard their
    argument; names missing from the heap (or blackholed) are leaves."""
    bindings = heap.bindings
    seen = set()
    stack = list(unguarded_free_vars(e))
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        b = bindings.get(x)
        if type(b) is Bound:
            for y in unguarded_free_vars(b.expr):
                if y not in seen:
                    stack.append(y)
    return frozenset(seen)


# ---------------------------------------------------------------------------
# Lemma instance checking
#
# For an initial heap fragment G0 with domain U, a run whose initial control e
# satisfies U . ur(e) = {} must (a) leave every G0 binding untouched in the
# final heap, (b) end in a value whose unguarded reachable set avoids U, and
# (c) preserve U-disjointness of every heap name's unguarded reachable set
# along the run.  States are sampled at thunk-update boundaries, which align
# with completed sub-evaluations.


@dataclass
class LemmaReport:
    skipped: bool = False
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_lemma_instance(gamma0: dict, states: list, final_value: CoreExpr) -> LemmaReport:
    """Check the unguarded-reachability preservation statements on one run.

    ``gamma0``: name -> expr of the protected initial fragment.
    ``states``: ordered list of (Heap, control expr) snapshots; the first is
    the initial state, the last the terminal state.
    ``final_value``: the value the run produced.
    """
    report = LemmaReport()
    if not states:
        report.failures.append("empty trace")
        return report
    u = set(gamma0)
    first_heap, first_control = states[0]
    if u & unguarded_reachable(first_heap, first_control):
        report.skipped = True
        return report

    final_heap, _ = states[-1]
    for n, e in gamma0.items():
        b = final_heap.lookup(n)
        if type(b) is not Bound:
            report.failures.append(f"(a) {n} missing or blackholed in final heap")
        elif b.expr is not e and b.expr != e:
            report.failures.append(f"(a) {n} changed in final heap")

    if u & unguarded_reachable(final_heap, final_value):
        report.failures.append("(b) final value unguarded-reaches the protected fragment")

    for i in range(len(states) - 1):
        heap_a, _ = states[i]
        heap_b, _ = states[i + 1]
        for y in heap_a.domain():
            if y not in heap_b.bindings:
                continue
            if u & unguarded_reachable(heap_a, Var(y)):
                continue
            if u & unguarded_reachable(heap_b, Var(y)):
                report.failures.append(
                    f"(c) step {i}: {y} newly unguarded-reaches the protected fragment")
    return report
