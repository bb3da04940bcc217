"""The machine: a small-step evaluator over an explicit heap whose complete
runs correspond to big-step lazy-evaluation derivations.

Rule correspondence of the transitions (the tag `step` returns):

  App        push an apply frame, descend into the function expression
  Lam        a lambda meets an apply frame: substitute the argument name
  Var-enter  a variable bound to a thunk: blackhole it, push an update frame
  Var-leave  a value meets an update frame (write the value back, continue
             with a freshly renamed copy), or a variable bound to a value
             (no re-update; the copy is still renamed)
  Let        allocate the binding group, continue with the body
  Dup        copy one binding, renamed fresh, and evaluate the copy
  Deep       copy one binding with every unguarded free name replaced by a
             fresh deepDup wrapper thunk, and evaluate the copy
  Con/Case/Prim/Seq  structural steps of the data extension

Renaming the result of Var ("varhat") is what preserves the global
distinct-naming of heap/term pairs; it can be switched off for cost
comparisons, in which case let allocation falls back to freshening binding
groups whose names are already taken.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    App, Case, Con, CoreExpr, DeepDup, Dup, Lam, LazevmError, Let, Lit, Name,
    NameSupply, PrimApp, Program, Seq, Var, check_normalized, fresh_rename,
    is_value, iter_binders, max_uniq, substitute, unguarded_free_vars,
)
from .gc import GC_OFF, GcPolicy, Metrics
from .heap import Blackhole, Bound, Heap, reachable

_VALUE = (Lam, Con, Lit)


class MachineError(LazevmError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class UnboundNameError(MachineError):
    pass


class BlackholeEnteredError(MachineError):
    pass


class DupOfBlackholeError(MachineError):
    pass


class NoMatchingAlternativeError(MachineError):
    pass


class PrimTypeMismatchError(MachineError):
    pass


class BudgetExceededError(MachineError):
    pass


# ---------------------------------------------------------------------------
# Frames


class ApplyTo:
    __slots__ = ("arg",)

    def __init__(self, arg: Name):
        self.arg = arg

    def root_names(self):
        return (self.arg,)

    def __repr__(self):
        return f"ApplyTo({self.arg})"


class UpdateInto:
    __slots__ = ("target",)

    def __init__(self, target: Name):
        self.target = target

    def root_names(self):
        return (self.target,)

    def __repr__(self):
        return f"UpdateInto({self.target})"


class CaseCont:
    __slots__ = ("alts", "default", "_roots")

    def __init__(self, alts, default):
        self.alts = alts
        self.default = default
        self._roots = None

    def root_names(self):
        if self._roots is None:
            acc = set()
            for alt in self.alts:
                acc |= alt.rhs.fvs - frozenset(alt.binders)
            if self.default is not None:
                acc |= self.default.fvs
            self._roots = tuple(acc)
        return self._roots

    def __repr__(self):
        return f"CaseCont({len(self.alts)} alts)"


class PrimLeft:
    __slots__ = ("op", "rhs")

    def __init__(self, op, rhs: Name):
        self.op = op
        self.rhs = rhs

    def root_names(self):
        return (self.rhs,)

    def __repr__(self):
        return f"PrimLeft({self.op}, {self.rhs})"


class PrimRight:
    __slots__ = ("op", "lhs_value")

    def __init__(self, op, lhs_value: int):
        self.op = op
        self.lhs_value = lhs_value

    def root_names(self):
        return ()

    def __repr__(self):
        return f"PrimRight({self.op}, {self.lhs_value})"


class SeqCont:
    __slots__ = ("then",)

    def __init__(self, then: CoreExpr):
        self.then = then

    def root_names(self):
        return tuple(self.then.fvs)

    def __repr__(self):
        return "SeqCont(..)"


# ---------------------------------------------------------------------------
# Machine state


_NEXT_EVAL_ID = [1]


class MachineConfig:
    """One evaluation in flight: heap, control expression, frame stack,
    name supply and counters.  Self-contained; never shared."""

    __slots__ = ("heap", "control", "stack", "supply", "metrics", "varhat",
                 "max_steps", "max_cells", "events", "dup_origin", "eval_id")

    def __init__(self, heap: Heap, control: CoreExpr, supply: NameSupply, *,
                 varhat: bool = True, max_steps: int | None = None,
                 max_cells: int | None = None, events: bool = False):
        self.heap = heap
        self.control = control
        self.stack: list = []
        self.supply = supply
        self.metrics = Metrics()
        self.varhat = varhat
        self.max_steps = max_steps
        self.max_cells = max_cells
        self.events = ({"blackholed": set(), "updated": set()} if events else None)
        self.dup_origin: dict = {}
        self.eval_id = _NEXT_EVAL_ID[0]
        _NEXT_EVAL_ID[0] += 1

    @property
    def halted(self) -> bool:
        return not self.stack and type(self.control) in _VALUE


def make_config(bindings, control: CoreExpr, *, supply: NameSupply | None = None,
                varhat: bool = True, max_steps: int | None = None,
                max_cells: int | None = None, events: bool = False) -> MachineConfig:
    """Configuration over an explicit initial heap and control expression.

    The test harnesses use this to set up runs whose initial heap is not a
    whole program."""
    heap = Heap.of(bindings)
    if supply is None:
        supply = NameSupply()
    top = max_uniq(control)
    for n, b in heap.bindings.items():
        top = max(top, n.uniq, max_uniq(b.expr))
    supply.ensure_above(top)
    return MachineConfig(heap, control, supply, varhat=varhat,
                         max_steps=max_steps, max_cells=max_cells, events=events)


def init_config(program: Program, *, varhat: bool = True,
                max_steps: int | None = None, max_cells: int | None = None,
                events: bool = False, validate: bool = True) -> MachineConfig:
    """Load the top level as the initial heap and `main` as the control."""
    names = [n for n, _ in program.top_level]
    if len(set(names)) != len(names):
        raise MachineError("duplicate top-level name")
    if program.main not in set(names):
        raise MachineError(f"main {program.main} not bound at top level")
    if validate:
        problems = check_normalized(program)
        if problems:
            raise MachineError("program not normalized: " + "; ".join(problems))
    return make_config(program.top_level, Var(program.main), varhat=varhat,
                       max_steps=max_steps, max_cells=max_cells, events=events)


# ---------------------------------------------------------------------------
# Transitions


def _prim_result(op, a, b, steps):
    if op == "add":
        return Lit(a + b)
    if op == "sub":
        return Lit(a - b)
    if op == "mul":
        return Lit(a * b)
    if op == "leq":
        return Con("True", ()) if a <= b else Con("False", ())
    if op == "eq":
        return Con("True", ()) if a == b else Con("False", ())
    raise MachineError(f"unknown primitive {op}", steps)


def step(cfg: MachineConfig) -> str:
    """Perform exactly one transition and return its rule tag.

    Raises a MachineError subclass when the machine is stuck or a budget is
    exhausted; calling it on a halted configuration is a driver bug."""
    m = cfg.metrics
    if cfg.max_steps is not None and m.steps >= cfg.max_steps:
        raise BudgetExceededError(f"step budget {cfg.max_steps} exhausted", m.steps)
    m.steps += 1
    ctrl = cfg.control
    t = type(ctrl)
    heap = cfg.heap
    stack = cfg.stack

    if t is Var:
        name = ctrl.name
        b = heap.bindings.get(name)
        if b is None:
            raise UnboundNameError(f"unbound name {name}", m.steps)
        if type(b) is Blackhole:
            raise BlackholeEnteredError(
                f"{name} depends on itself (entered its own blackhole)", m.steps)
        e = b.expr
        if type(e) in _VALUE:
            cfg.control = fresh_rename(e, cfg.supply) if cfg.varhat else e
            return "Var-leave"
        heap.bindings[name] = Blackhole(cfg.eval_id)
        if cfg.events is not None:
            cfg.events["blackholed"].add(name)
        stack.append(UpdateInto(name))
        cfg.control = e
        return "Var-enter"

    if t in _VALUE:
        if not stack:
            raise MachineError("step on a halted machine", m.steps)
        fr = stack[-1]
        ft = type(fr)
        if ft is UpdateInto:
            stack.pop()
            target = fr.target
            heap.bindings[target] = Bound(ctrl)
            m.thunk_updates += 1
            if cfg.events is not None:
                cfg.events["updated"].add(target)
            cfg.control = fresh_rename(ctrl, cfg.supply) if cfg.varhat else ctrl
            return "Var-leave"
        if ft is ApplyTo:
            if t is not Lam:
                raise PrimTypeMismatchError("application of a non-function value",
                                            m.steps)
            stack.pop()
            cfg.control = substitute(ctrl.body, {ctrl.binder: fr.arg})
            return "Lam"
        if ft is CaseCont:
            stack.pop()
            if t is Con:
                for alt in fr.alts:
                    if alt.tag == ctrl.tag:
                        if len(alt.binders) != len(ctrl.args):
                            raise MachineError(
                                f"alternative {alt.tag} arity mismatch", m.steps)
                        cfg.control = substitute(
                            alt.rhs, dict(zip(alt.binders, ctrl.args)))
                        return "Con"
            if fr.default is not None:
                cfg.control = fr.default
                return "Con"
            what = ctrl.tag if t is Con else ("integer" if t is Lit else "function")
            raise NoMatchingAlternativeError(
                f"no alternative matches {what}", m.steps)
        if ft is PrimLeft:
            if t is not Lit:
                raise PrimTypeMismatchError(
                    f"left operand of {fr.op} is not an integer", m.steps)
            stack.pop()
            stack.append(PrimRight(fr.op, ctrl.value))
            cfg.control = Var(fr.rhs)
            return "Prim"
        if ft is PrimRight:
            if t is not Lit:
                raise PrimTypeMismatchError(
                    f"right operand of {fr.op} is not an integer", m.steps)
            stack.pop()
            cfg.control = _prim_result(fr.op, fr.lhs_value, ctrl.value, m.steps)
            return "Prim"
        if ft is SeqCont:
            stack.pop()
            cfg.control = fr.then
            return "Seq"
        raise MachineError(f"unknown frame {fr!r}", m.steps)

    if t is App:
        arg = ctrl.arg
        if type(arg) is not Name:
            raise MachineError("unnormalized application argument", m.steps)
        stack.append(ApplyTo(arg))
        cfg.control = ctrl.fun
        return "App"

    if t is Let:
        binds = ctrl.bindings
        body = ctrl.body
        if any(n in heap.bindings for n, _ in binds):
            # Only reachable with varhat off: freshen the whole group.
            ren = {n: cfg.supply.fresh(n.base) for n, _ in binds}
            binds = tuple((ren[n], substitute(rhs, ren)) for n, rhs in binds)
            body = substitute(body, ren)
        si = m.steps
        for n, rhs in binds:
            heap.bindings[n] = Bound(rhs)
            heap.created_at[n] = si
        m.allocations += len(binds)
        _check_cells(cfg)
        cfg.control = body
        return "Let"

    if t is Case:
        stack.append(CaseCont(ctrl.alts, ctrl.default))
        cfg.control = ctrl.scrutinee
        return "Case"

    if t is PrimApp:
        if type(ctrl.lhs) is not Name or type(ctrl.rhs) is not Name:
            raise MachineError("unnormalized primitive operand", m.steps)
        stack.append(PrimLeft(ctrl.op, ctrl.rhs))
        cfg.control = Var(ctrl.lhs)
        return "Prim"

    if t is Seq:
        if type(ctrl.forced) is not Name:
            raise MachineError("unnormalized seq argument", m.steps)
        stack.append(SeqCont(ctrl.then))
        cfg.control = Var(ctrl.forced)
        return "Seq"

    if t is Dup:
        return apply_dup(cfg)

    if t is DeepDup:
        return apply_deep_dup(cfg)

    raise MachineError(f"stuck on {ctrl!r}", m.steps)


def _check_cells(cfg):
    if cfg.max_cells is not None and len(cfg.heap.bindings) > cfg.max_cells:
        raise BudgetExceededError(f"cell budget {cfg.max_cells} exhausted",
                                  cfg.metrics.steps)


def _dup_source(cfg, prim):
    name = cfg.control.name
    if type(name) is not Name:
        raise MachineError(f"unnormalized {prim} argument", cfg.metrics.steps)
    b = cfg.heap.bindings.get(name)
    if b is None:
        raise UnboundNameError(f"{prim} of unbound name {name}", cfg.metrics.steps)
    if type(b) is Blackhole:
        raise DupOfBlackholeError(
            f"{prim} of {name} while it is under evaluation", cfg.metrics.steps)
    return name, b.expr


def apply_dup(cfg: MachineConfig) -> str:
    """Shallow copy: allocate a renamed copy of the binding and evaluate it.

    The source binding is untouched, so evaluating the copy does not update
    the original."""
    m = cfg.metrics
    name, e = _dup_source(cfg, "dup")
    fresh = cfg.supply.fresh(name.base)
    cfg.heap.bindings[fresh] = Bound(fresh_rename(e, cfg.supply))
    cfg.heap.created_at[fresh] = m.steps
    m.dup_copies += 1
    m.allocations += 1
    _check_cells(cfg)
    cfg.dup_origin[fresh] = name
    cfg.control = Var(fresh)
    return "Dup"


def apply_deep_dup(cfg: MachineConfig) -> str:
    """Lazy deep copy: copy the binding, with every unguarded free name of
    it replaced by a fresh wrapper thunk that deep-dups the referenced cell
    when (and if) it is forced.

    Because a deepDup application guards its argument, deep-dupping a
    binding that is itself ``deepDup y`` copies it without another layer of
    wrapping, which is what rules out a wrapping livelock."""
    m = cfg.metrics
    name, e = _dup_source(cfg, "deepDup")
    heap = cfg.heap
    supply = cfg.supply
    ys = sorted(unguarded_free_vars(e))
    si = m.steps
    ren = {}
    for y in ys:
        w = supply.fresh(y.base)
        ren[y] = w
        heap.bindings[w] = Bound(DeepDup(y))
        heap.created_at[w] = si
    fresh = supply.fresh(name.base)
    heap.bindings[fresh] = Bound(substitute(fresh_rename(e, supply), ren))
    heap.created_at[fresh] = si
    m.deep_dup_thunks += len(ys)
    m.allocations += len(ys) + 1
    _check_cells(cfg)
    cfg.dup_origin[fresh] = name
    cfg.control = Var(fresh)
    return "Deep"


# ---------------------------------------------------------------------------
# Roots, driving loop, observation


def root_set(cfg: MachineConfig) -> set:
    """Every name the continuation can still dereference: the free names of
    the control expression plus the names referenced by each stack frame
    (update targets included; a pending update must keep its cell alive).

    Full free names are used, never the unguarded ones: a deepDup wrapper
    keeps its guarded argument alive for collection purposes."""
    roots = set(cfg.control.fvs)
    for fr in cfg.stack:
        roots.update(fr.root_names())
    return roots


@dataclass
class EvalResult:
    value: CoreExpr
    heap: Heap
    metrics: Metrics
    config: MachineConfig

    def observe(self, depth: int = 8):
        return observe(self.value, self.heap, depth, supply=self.config.supply)


def run_config(cfg: MachineConfig, *, gc: GcPolicy = GC_OFF, trace=None,
               check_invariants: bool = False) -> EvalResult:
    """Drive ``step`` to termination, interleaving collections per policy.

    Peak liveness is sampled at collection points *before* collecting (the
    analogue of a runtime's total-memory-in-use figure) and once more at
    termination; a final collection rooted at the result's free names gives
    the final live count."""
    m = cfg.metrics
    heap = cfg.heap
    interval = gc.interval
    trace_on = trace is not None
    while not (not cfg.stack and type(cfg.control) in _VALUE):
        tag = step(cfg)
        rec = None
        if trace_on:
            rec = {"step": m.steps, "rule": tag, "heap": len(heap.bindings)}
        if interval is not None and m.steps % interval == 0:
            size = len(heap.bindings)
            if size > m.peak_live_cells:
                m.peak_live_cells = size
            live = reachable(heap, root_set(cfg))
            heap.retain(live)
            if rec is not None:
                rec["live"] = len(live)
        if trace_on:
            trace(cfg, rec)
        if check_invariants:
            assert_distinctly_named(cfg)
    size = len(heap.bindings)
    if size > m.peak_live_cells:
        m.peak_live_cells = size
    if interval is not None:
        live = reachable(heap, set(cfg.control.fvs))
        heap.retain(live)
    m.final_live_cells = len(heap.bindings)
    return EvalResult(cfg.control, heap, m, cfg)


def evaluate(program: Program, *, gc: GcPolicy = GC_OFF,
             max_steps: int | None = None, max_cells: int | None = None,
             varhat: bool = True, events: bool = False, trace=None,
             check_invariants: bool = False, validate: bool = True) -> EvalResult:
    """Evaluate a whole program to weak head normal form."""
    cfg = init_config(program, varhat=varhat, max_steps=max_steps,
                      max_cells=max_cells, events=events, validate=validate)
    return run_config(cfg, gc=gc, trace=trace, check_invariants=check_invariants)


def _force(heap: Heap, name: Name, supply: NameSupply, max_steps) -> CoreExpr:
    cfg = MachineConfig(heap, Var(name), supply, max_steps=max_steps)
    while not (not cfg.stack and type(cfg.control) in _VALUE):
        step(cfg)
    return cfg.control


def observe(value: CoreExpr, heap: Heap, depth: int, *,
            supply: NameSupply | None = None, max_steps: int | None = None):
    """Finite observable tree of a result: integers and constructor tags,
    with lambdas opaque.  Forces constructor arguments in place (sharing is
    kept), expanding constructors down to ``depth`` levels; deeper structure
    renders as "...".

    The observable is plain data: ints, the strings "<fun>" and "...", and
    ``(tag, children)`` tuples, so observables compare with ``==``."""
    if supply is None:
        supply = NameSupply()
        top = max_uniq(value)
        for n, b in heap.bindings.items():
            top = max(top, n.uniq, 0 if type(b) is Blackhole else max_uniq(b.expr))
        supply.ensure_above(top)
    return _observe(value, heap, depth, supply, max_steps)


def _observe(v, heap, depth, supply, max_steps):
    t = type(v)
    if t is Lit:
        return v.value
    if t is Lam:
        return "<fun>"
    if t is Con:
        if depth <= 0:
            return "..."
        kids = []
        for a in v.args:
            av = _force(heap, a, supply, max_steps)
            kids.append(_observe(av, heap, depth - 1, supply, max_steps))
        return (v.tag, tuple(kids))
    raise MachineError(f"observe of a non-value: {v!r}")


def render_observable(obs) -> str:
    if isinstance(obs, int):
        return str(obs)
    if isinstance(obs, str):
        return obs
    tag, kids = obs
    if not kids:
        return tag
    return f"{tag}({', '.join(render_observable(k) for k in kids)})"


def assert_distinctly_named(cfg: MachineConfig) -> None:
    """Debug invariant: across the heap domain and every binder occurring in
    the heap, the control and the stack, no name is bound twice."""
    seen = set(cfg.heap.bindings)
    duplicates = []

    def visit(e):
        for b in iter_binders(e):
            if b in seen:
                duplicates.append(b)
            seen.add(b)

    for bnd in cfg.heap.bindings.values():
        if type(bnd) is Bound:
            visit(bnd.expr)
    visit(cfg.control)
    for fr in cfg.stack:
        ft = type(fr)
        if ft is CaseCont:
            for alt in fr.alts:
                for b in alt.binders:
                    if b in seen:
                        duplicates.append(b)
                    seen.add(b)
                visit(alt.rhs)
            if fr.default is not None:
                visit(fr.default)
        elif ft is SeqCont:
            visit(fr.then)
    if duplicates:
        raise AssertionError(
            "distinct-naming violated: " + ", ".join(str(d) for d in sorted(set(duplicates))))
