"""Benchmark harness: the un-sharing strategy / sharing scenario matrix.

The workload is a best-path search over a lazily built infinite tree: each
node holds an integer state, ``succs`` derives ``b`` successor states
arithmetically, and the solver repeatedly descends into the child whose
depth-``d`` rating is maximal, emitting the visited states.  ``main`` takes
element ``n`` of that list.

Six strategies consume the tree: the plain solver; the solver over a ``dup``
of its argument; a solver whose rating function dups each candidate; the
solver over a ``deepDup``; a unit-lifted tree (nodes behind a dummy-argument
function, so nothing is memoized); and a Church-encoded tree (the tree as
its own fold).  Six scenarios vary how the tree is shared: unreferenced,
retained until after solving, wrapped in one extra thunk, partly or fully
pre-evaluated, or solved twice.  The refactoring-based strategies cannot
express the pre-evaluated scenarios, so those four cells are omitted.

Every run also builds and retains a fixed-size ballast list, the desk-scale
stand-in for a runtime's constant footprint; without it the live-cell ratios
between leaky and tight cells would be distorted by tiny absolute baselines.

Costs are reported in machine steps and live heap cells, never seconds or
bytes; comparisons between cells are ratio-based.
"""

from __future__ import annotations

import csv
import enum
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .core import Program
from .gc import GcPolicy, Metrics
from .machine import evaluate
from .surface import load_program

BALLAST_LENGTH = 128
DEFAULT_STEP_BUDGET = 20_000_000
BENCH_GC = GcPolicy.every(10)


class Strategy(enum.Enum):
    ORIGINAL = "original"
    SOLVE_DUP = "solveDup"
    RATE_DUP = "rateDup"
    SOLVE_DEEP_DUP = "solveDeepDup"
    UNIT_LIFTING = "unitLifting"
    CHURCH_ENCODING = "churchEncoding"

    def __str__(self):
        return self.value


class Scenario(enum.Enum):
    NO_SHARING = "noSharing"
    SHARED_TREE = "sharedTree"
    ADD_THUNK = "addThunk"
    PARTLY_EVALED = "partlyEvaled"
    FULLY_EVALED = "fullyEvaled"
    RUN_TWICE = "runTwice"

    def __str__(self):
        return self.value


_REFACTORED = (Strategy.UNIT_LIFTING, Strategy.CHURCH_ENCODING)
_EVALED = (Scenario.PARTLY_EVALED, Scenario.FULLY_EVALED)


def allowed(strategy: Strategy, scenario: Scenario) -> bool:
    """The refactored tree types cannot be partially or fully pre-evaluated."""
    return not (strategy in _REFACTORED and scenario in _EVALED)


def all_cells():
    return [(st, sc) for st in Strategy for sc in Scenario if allowed(st, sc)]


@dataclass(frozen=True)
class BenchParams:
    b: int = 2            # branching factor
    d: int = 2            # rating depth
    n: int = 64           # solution element taken (the `!! n` analogue)
    succs_cost: int = 0   # extra reduction steps per successor state

    def __post_init__(self):
        if self.b < 1 or self.d < 0 or self.n < 1 or self.succs_cost < 0:
            raise ValueError(f"bad benchmark parameters: {self}")


@dataclass
class BenchResult:
    strategy: Strategy
    scenario: Scenario
    params: BenchParams
    metrics: Metrics
    status: str = "ok"          # ok | budget-exceeded | error(...)
    observable: object = None

    def csv_row(self):
        m = self.metrics
        return [str(self.strategy), str(self.scenario),
                self.params.b, self.params.d, self.params.n,
                m.steps, m.allocations, m.thunk_updates, m.dup_copies,
                m.deep_dup_thunks, m.peak_live_cells, m.final_live_cells]


# ---------------------------------------------------------------------------
# Program generation

_PRELUDE = """\
data Node/2;
data UNode/2;
data Pair/2;

head xs = case xs of { Cons y ys -> y };
map f xs = case xs of { Nil -> Nil; Cons y ys -> Cons (f y) (map f ys) };
index xs i = case xs of { Cons y ys ->
  case i == 0 of { True -> y; False -> index ys (i - 1) } };
fst p = case p of { Pair a b -> a };
snd p = case p of { Pair a b -> b };
maxInt a b = case a <= b of { True -> b; False -> a };
maximumInt xs = case xs of { Cons y ys ->
  case ys of { Nil -> y; Cons z zs -> maxInt y (maximumInt ys) } };
bestPair best ps = case ps of {
  Nil -> best;
  Cons q qs -> case snd q <= snd best of { True -> bestPair best qs;
                                           False -> bestPair q qs } };
pickBest rater ts = case map (\\c -> Pair c (rater c)) ts of {
  Cons p ps -> fst (bestPair p ps) };
buildList i = case i == 0 of { True -> Nil; False -> Cons i (buildList (i - 1)) };
lengthList xs = case xs of { Nil -> 0; Cons y ys -> 1 + lengthList ys };
ballast = buildList {ballast};
"""

_WORKLOAD = """\
value s = s;
childState s i = {child_state};
children i s = case i == 0 of {{ True -> Nil;
  False -> Cons (childState s i) (children (i - 1) s) }};
succs s = children {b} s;
"""

_PAD = """\
pad k x = case k == 0 of { True -> x; False -> pad (k - 1) x };
"""

_TREE_FAMILY = """\
tree s = Node s (map tree (succs s));
fstChild t = case t of { Node s ts -> head ts };
rate d t = case d == 0 of {
  True -> case t of { Node s ts -> value s };
  False -> case t of { Node s ts -> maximumInt (map (rate (d - 1)) ts) } };
ratePlain c = rate {depth} c;
rateDupped c = let { c2 = dup c } in rate {depth} c2;
solve rater t = case t of { Node s ts -> Cons s (solve rater (pickBest rater ts)) };
solvePlain t = index (solve ratePlain t) {n};
t = tree 1;
"""

_UNIT_FAMILY = """\
utree s = \\u -> UNode s (map utree (succs s));
uchildren t = case t Unit of { UNode s ts -> ts };
ufstChild t = \\u -> head (uchildren t) u;
urate d t = case t Unit of { UNode s ts -> case d == 0 of {
  True -> value s;
  False -> maximumInt (map (urate (d - 1)) ts) } };
uratePlain c = urate {depth} c;
usolve t = case t Unit of { UNode s ts -> Cons s (usolve (pickBest uratePlain ts)) };
t = utree 1;
"""

_CHURCH_FAMILY = """\
ctree s = \\f -> f s (map (\\s2 -> ctree s2 f) (succs s));
csolveStep n rc = Pair
  (Cons n (fst (cbest rc)))
  (\\d -> case d == 0 of { True -> value n;
                          False -> maximumInt (map (\\p -> snd p (d - 1)) rc) });
crating p = snd p {depth};
cb best ps = case ps of { Nil -> best;
  Cons q qs -> case crating q <= crating best of { True -> cb best qs;
                                                   False -> cb q qs } };
cbest rc = case rc of { Cons p ps -> cb p ps };
csolve t = fst (t csolveStep);
reNode s rc = let { kids = map fst rc }
  in Pair (\\f -> f s (map (\\k -> k f) kids)) kids;
cfstChild t = head (snd (t reNode));
t = ctree 1;
"""

_RUNNERS = {
    Strategy.ORIGINAL: "run x = index (solve ratePlain x) {n};",
    Strategy.SOLVE_DUP:
        "run x = let { x2 = dup x } in index (solve ratePlain x2) {n};",
    Strategy.RATE_DUP: "run x = index (solve rateDupped x) {n};",
    Strategy.SOLVE_DEEP_DUP:
        "run x = let { x2 = deepDup x } in index (solve ratePlain x2) {n};",
    Strategy.UNIT_LIFTING: "run x = index (usolve x) {n};",
    Strategy.CHURCH_ENCODING: "run x = index (csolve x) {n};",
}

_FST_CHILD = {
    Strategy.UNIT_LIFTING: "ufstChild",
    Strategy.CHURCH_ENCODING: "cfstChild",
}

# Evaluation order of `+` (left operand first) sequences the phases: the
# ballast is built and counted, the measured run happens while the remaining
# operands keep the tree (and the ballast) rooted, and the final touches
# force the tree's root and re-walk the ballast.
_MAINS = {
    Scenario.NO_SHARING:
        "main = lengthList ballast + (run t + lengthList ballast);",
    Scenario.SHARED_TREE:
        "main = lengthList ballast + (run t + (seq t 0 + lengthList ballast));",
    Scenario.ADD_THUNK:
        "w = {fst_child} t;\n"
        "main = lengthList ballast + (run w + (seq t 0 + lengthList ballast));",
    Scenario.PARTLY_EVALED:
        "w = {fst_child} t;\n"
        "main = lengthList ballast + "
        "seq w (run t + (seq t 0 + lengthList ballast));",
    Scenario.FULLY_EVALED:
        "pre = solvePlain t;\n"
        "main = lengthList ballast + "
        "seq pre (run t + (seq t 0 + lengthList ballast));",
    Scenario.RUN_TWICE:
        "main = lengthList ballast + "
        "(run t + (run t + (seq t 0 + lengthList ballast)));",
}


def build_bench_source(strategy: Strategy, scenario: Scenario,
                       params: BenchParams) -> str:
    """The scenario cell as surface text (dumpable for inspection)."""
    if not allowed(strategy, scenario):
        raise ValueError(f"{strategy}/{scenario} is not an allowed cell: the "
                         "refactored tree types cannot be pre-evaluated")
    # Child i of b counts down from b, so state s*b + (b+1-i) makes the last
    # child the highest-valued one: the solver's path and the first child
    # (what fstChild pre-evaluates or wraps) stay distinct.
    if params.succs_cost > 0:
        child = f"pad {params.succs_cost} (s * {params.b} + ({params.b + 1} - i))"
    else:
        child = f"s * {params.b} + ({params.b + 1} - i)"
    parts = [_PRELUDE.replace("{ballast}", str(BALLAST_LENGTH))]
    if params.succs_cost > 0:
        parts.append(_PAD)
    parts.append(_WORKLOAD.format(child_state=child, b=params.b))
    if strategy is Strategy.UNIT_LIFTING:
        family = _UNIT_FAMILY
    elif strategy is Strategy.CHURCH_ENCODING:
        family = _CHURCH_FAMILY
    else:
        family = _TREE_FAMILY
    parts.append(family.replace("{depth}", str(params.d))
                       .replace("{n}", str(params.n)))
    parts.append(_RUNNERS[strategy].replace("{n}", str(params.n)))
    main = _MAINS[scenario]
    if "{fst_child}" in main:
        main = main.replace("{fst_child}", _FST_CHILD.get(strategy, "fstChild"))
    parts.append(main)
    return "\n".join(parts) + "\n"


def build_bench_program(strategy: Strategy, scenario: Scenario,
                        params: BenchParams) -> Program:
    return load_program(build_bench_source(strategy, scenario, params))


def run_cell(strategy: Strategy, scenario: Scenario, params: BenchParams, *,
             gc: GcPolicy = BENCH_GC,
             max_steps: int = DEFAULT_STEP_BUDGET) -> BenchResult:
    from .machine import BudgetExceededError, MachineError
    program = build_bench_program(strategy, scenario, params)
    try:
        res = evaluate(program, gc=gc, max_steps=max_steps)
        return BenchResult(strategy, scenario, params, res.metrics,
                           "ok", res.observe(depth=4))
    except BudgetExceededError:
        return BenchResult(strategy, scenario, params, Metrics(), "budget-exceeded")
    except MachineError as exc:
        return BenchResult(strategy, scenario, params, Metrics(), f"error({exc})")


def _run_cell_worker(args):
    strategy, scenario, params, interval, max_steps = args
    return run_cell(strategy, scenario, params,
                    gc=GcPolicy(interval), max_steps=max_steps)


def run_matrix(params: BenchParams, *, gc: GcPolicy = BENCH_GC,
               max_steps: int = DEFAULT_STEP_BUDGET, jobs: int = 1) -> list:
    """One BenchResult per allowed cell, ordered by (strategy, scenario)."""
    cells = all_cells()
    if jobs > 1:
        work = [(st, sc, params, gc.interval, max_steps) for st, sc in cells]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_worker, work))
    else:
        results = [run_cell(st, sc, params, gc=gc, max_steps=max_steps)
                   for st, sc in cells]
    return results


# ---------------------------------------------------------------------------
# Pattern checking

HIGH_THRESHOLD = 5.0

# Cells whose peak live heap is expected to blow up (>= 5x the
# unshared-original baseline); all other allowed cells must stay low.
HIGH_CELLS = frozenset([
    (Strategy.ORIGINAL, Scenario.SHARED_TREE),
    (Strategy.ORIGINAL, Scenario.ADD_THUNK),
    (Strategy.ORIGINAL, Scenario.PARTLY_EVALED),
    (Strategy.ORIGINAL, Scenario.FULLY_EVALED),
    (Strategy.ORIGINAL, Scenario.RUN_TWICE),
    (Strategy.SOLVE_DUP, Scenario.ADD_THUNK),
    (Strategy.SOLVE_DUP, Scenario.PARTLY_EVALED),
    (Strategy.SOLVE_DUP, Scenario.FULLY_EVALED),
    (Strategy.RATE_DUP, Scenario.FULLY_EVALED),
    (Strategy.RATE_DUP, Scenario.RUN_TWICE),
    (Strategy.SOLVE_DEEP_DUP, Scenario.FULLY_EVALED),
])


@dataclass
class OrderingReport:
    baseline: int
    ratios: dict
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        lines = [f"baseline peak (original/noSharing): {self.baseline} cells"]
        for (st, sc), ratio in sorted(self.ratios.items(),
                                      key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
            expect = "high" if (st, sc) in HIGH_CELLS else "low"
            lines.append(f"  {st}/{sc}: {ratio:.2f}x ({expect})")
        if self.violations:
            lines.append("violations:")
            lines.extend(f"  {v}" for v in self.violations)
        else:
            lines.append("pattern ok")
        return "\n".join(lines)


def check_ordering(results: list) -> OrderingReport:
    """Verify the qualitative memory pattern of the matrix.

    A cell counts as high when its peak live cells reach HIGH_THRESHOLD
    times the original/noSharing baseline, low otherwise; the expected
    classification is HIGH_CELLS."""
    by_cell = {(r.strategy, r.scenario): r for r in results}
    base = by_cell.get((Strategy.ORIGINAL, Scenario.NO_SHARING))
    violations = []
    if base is None or base.status != "ok":
        return OrderingReport(0, {}, ["missing or failed original/noSharing baseline"])
    baseline = base.metrics.peak_live_cells
    ratios = {}
    for (st, sc) in all_cells():
        r = by_cell.get((st, sc))
        if r is None:
            violations.append(f"{st}/{sc}: missing")
            continue
        if r.status != "ok":
            violations.append(f"{st}/{sc}: {r.status}")
            continue
        ratio = r.metrics.peak_live_cells / baseline
        ratios[(st, sc)] = ratio
        high = ratio >= HIGH_THRESHOLD
        expect_high = (st, sc) in HIGH_CELLS
        if high and not expect_high:
            violations.append(f"{st}/{sc}: expected low, got {ratio:.2f}x baseline")
        elif not high and expect_high:
            violations.append(f"{st}/{sc}: expected high, got {ratio:.2f}x baseline")
    return OrderingReport(baseline, ratios, violations)


# ---------------------------------------------------------------------------
# Output


def emit_csv(results: list, destination) -> None:
    """Write the fixed-column CSV (one row per cell, sorted)."""
    from .gc import CSV_COLUMNS
    rows = sorted(results, key=lambda r: (str(r.strategy), str(r.scenario)))
    own = isinstance(destination, (str, os.PathLike))
    fh = open(destination, "w", newline="", encoding="utf-8") if own else destination
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(r.csv_row())
    finally:
        if own:
            fh.close()


def csv_text(results: list) -> str:
    buf = io.StringIO()
    emit_csv(results, buf)
    return buf.getvalue()


def write_programs(directory, params: BenchParams) -> list:
    """Dump every allowed cell as a .lz file; returns the paths written."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for st, sc in all_cells():
        path = os.path.join(directory, f"{st}_{sc}.lz")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(build_bench_source(st, sc, params))
        paths.append(path)
    return paths
