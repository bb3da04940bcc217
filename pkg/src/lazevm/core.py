"""Core term language: normalized lazy lambda terms with explicit un-sharing.

The calculus is a lambda calculus with recursive ``let``, the un-sharing
primitives ``dup`` and ``deepDup``, and a small data extension (constructors,
``case``, integer literals, primitive arithmetic, ``seq``) so that realistic
benchmark programs are expressible.

A term is *normalized* when every application argument, constructor argument
and primitive operand is a plain `Name` (general expressions get let-bound by
`normalize`) and every binder is globally distinct.  The evaluator only runs
normalized programs; the relaxed form of the same AST (expressions in argument
positions) exists as input to `normalize`.

Every node carries two derived attributes kept out of structural equality:
``fvs``, its free-name set, and ``has_binders``, whether any binding construct
occurs inside (value renaming skips binder-free terms).  Nodes are immutable
by convention; nothing in the package mutates them after construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class LazevmError(Exception):
    """Base class for every error raised deliberately by this package."""


_NAME_RE = re.compile(r"^(.+)#(\d+)$")


class Name(str):
    """Identifier plus integer disambiguator, rendered as ``base#uniq``.

    Subclasses str (the rendered form), so hashing and equality run at
    native speed; two names are equal exactly when base and uniq agree."""

    __slots__ = ("base", "uniq")

    def __new__(cls, base: str, uniq: int):
        self = str.__new__(cls, f"{base}#{uniq}")
        self.base = base
        self.uniq = uniq
        return self

    def __repr__(self):
        return f"Name({self.base!r}, {self.uniq})"

    def __reduce__(self):
        return (Name, (self.base, self.uniq))

    @staticmethod
    def parse(text: str) -> "Name":
        m = _NAME_RE.match(text)
        if not m:
            raise ValueError(f"not a rendered name: {text!r}")
        return Name(m.group(1), int(m.group(2)))


class NameSupply:
    """Monotone source of fresh names, confined to one evaluation context."""

    __slots__ = ("next_uniq",)

    def __init__(self, start: int = 1):
        self.next_uniq = start

    def fresh(self, base: str = "t") -> Name:
        n = Name(base, self.next_uniq)
        self.next_uniq += 1
        return n

    def ensure_above(self, uniq: int) -> None:
        if uniq >= self.next_uniq:
            self.next_uniq = uniq + 1


_EMPTY: frozenset = frozenset()

PRIM_OPS = ("add", "sub", "mul", "leq", "eq")
PRIM_SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "leq": "<=", "eq": "=="}


class CoreExpr:
    __slots__ = ()
    __hash__ = None  # structural equality only; terms are not dict keys


def _arg_fvs(a):
    return frozenset((a,)) if type(a) is Name else a.fvs


def _arg_hb(a):
    return False if type(a) is Name else a.has_binders


class Var(CoreExpr):
    __slots__ = ("name", "fvs", "has_binders")

    def __init__(self, name: Name):
        self.name = name
        self.fvs = frozenset((name,))
        self.has_binders = False

    def __eq__(self, other):
        return type(other) is Var and other.name == self.name

    def __repr__(self):
        return f"Var({self.name!r})"


class Lam(CoreExpr):
    __slots__ = ("binder", "body", "fvs", "has_binders")

    def __init__(self, binder: Name, body: CoreExpr):
        self.binder = binder
        self.body = body
        self.fvs = body.fvs - {binder}
        self.has_binders = True

    def __eq__(self, other):
        return (type(other) is Lam and other.binder == self.binder
                and other.body == self.body)

    def __repr__(self):
        return f"Lam({self.binder!r}, {self.body!r})"


class App(CoreExpr):
    # arg is a Name in normalized terms; normalize() lifts anything else.
    __slots__ = ("fun", "arg", "fvs", "has_binders")

    def __init__(self, fun: CoreExpr, arg):
        self.fun = fun
        self.arg = arg
        self.fvs = fun.fvs | _arg_fvs(arg)
        self.has_binders = fun.has_binders or _arg_hb(arg)

    def __eq__(self, other):
        return (type(other) is App and other.fun == self.fun
                and other.arg == self.arg)

    def __repr__(self):
        return f"App({self.fun!r}, {self.arg!r})"


class Let(CoreExpr):
    __slots__ = ("bindings", "body", "fvs", "has_binders")

    def __init__(self, bindings, body: CoreExpr):
        bindings = tuple(bindings)
        self.bindings = bindings
        self.body = body
        free = body.fvs
        for _, rhs in bindings:
            free = free | rhs.fvs
        self.fvs = free - frozenset(n for n, _ in bindings)
        self.has_binders = True

    def __eq__(self, other):
        return (type(other) is Let and other.bindings == self.bindings
                and other.body == self.body)

    def __repr__(self):
        return f"Let({self.bindings!r}, {self.body!r})"


class Dup(CoreExpr):
    __slots__ = ("name", "fvs", "has_binders")

    def __init__(self, name):
        self.name = name
        self.fvs = _arg_fvs(name)
        self.has_binders = _arg_hb(name)

    def __eq__(self, other):
        return type(other) is Dup and other.name == self.name

    def __repr__(self):
        return f"Dup({self.name!r})"


class DeepDup(CoreExpr):
    __slots__ = ("name", "fvs", "has_binders")

    def __init__(self, name):
        self.name = name
        self.fvs = _arg_fvs(name)
        self.has_binders = _arg_hb(name)

    def __eq__(self, other):
        return type(other) is DeepDup and other.name == self.name

    def __repr__(self):
        return f"DeepDup({self.name!r})"


class Con(CoreExpr):
    __slots__ = ("tag", "args", "fvs", "has_binders")

    def __init__(self, tag: str, args=()):
        args = tuple(args)
        self.tag = tag
        self.args = args
        free = _EMPTY
        hb = False
        for a in args:
            free = free | _arg_fvs(a)
            hb = hb or _arg_hb(a)
        self.fvs = free
        self.has_binders = hb

    def __eq__(self, other):
        return (type(other) is Con and other.tag == self.tag
                and other.args == self.args)

    def __repr__(self):
        return f"Con({self.tag!r}, {self.args!r})"


class Alt:
    __slots__ = ("tag", "binders", "rhs")

    def __init__(self, tag: str, binders, rhs: CoreExpr):
        self.tag = tag
        self.binders = tuple(binders)
        self.rhs = rhs

    def __eq__(self, other):
        return (type(other) is Alt and other.tag == self.tag
                and other.binders == self.binders and other.rhs == self.rhs)

    __hash__ = None

    def __repr__(self):
        return f"Alt({self.tag!r}, {self.binders!r}, {self.rhs!r})"


class Case(CoreExpr):
    __slots__ = ("scrutinee", "alts", "default", "fvs", "has_binders")

    def __init__(self, scrutinee: CoreExpr, alts, default=None):
        alts = tuple(alts)
        self.scrutinee = scrutinee
        self.alts = alts
        self.default = default
        free = scrutinee.fvs
        hb = scrutinee.has_binders
        for alt in alts:
            free = free | (alt.rhs.fvs - frozenset(alt.binders))
            hb = hb or bool(alt.binders) or alt.rhs.has_binders
        if default is not None:
            free = free | default.fvs
            hb = hb or default.has_binders
        self.fvs = free
        self.has_binders = hb

    def __eq__(self, other):
        return (type(other) is Case and other.scrutinee == self.scrutinee
                and other.alts == self.alts and other.default == self.default)

    def __repr__(self):
        return f"Case({self.scrutinee!r}, {self.alts!r}, {self.default!r})"


class Lit(CoreExpr):
    __slots__ = ("value", "fvs", "has_binders")

    def __init__(self, value: int):
        self.value = value
        self.fvs = _EMPTY
        self.has_binders = False

    def __eq__(self, other):
        return type(other) is Lit and other.value == self.value

    def __repr__(self):
        return f"Lit({self.value})"


class PrimApp(CoreExpr):
    __slots__ = ("op", "lhs", "rhs", "fvs", "has_binders")

    def __init__(self, op: str, lhs, rhs):
        self.op = op
        self.lhs = lhs
        self.rhs = rhs
        self.fvs = _arg_fvs(lhs) | _arg_fvs(rhs)
        self.has_binders = _arg_hb(lhs) or _arg_hb(rhs)

    def __eq__(self, other):
        return (type(other) is PrimApp and other.op == self.op
                and other.lhs == self.lhs and other.rhs == self.rhs)

    def __repr__(self):
        return f"PrimApp({self.op!r}, {self.lhs!r}, {self.rhs!r})"


class Seq(CoreExpr):
    __slots__ = ("forced", "then", "fvs", "has_binders")

    def __init__(self, forced, then: CoreExpr):
        self.forced = forced
        self.then = then
        self.fvs = _arg_fvs(forced) | then.fvs
        self.has_binders = _arg_hb(forced) or then.has_binders

    def __eq__(self, other):
        return (type(other) is Seq and other.forced == self.forced
                and other.then == self.then)

    def __repr__(self):
        return f"Seq({self.forced!r}, {self.then!r})"


VALUE_TYPES = (Lam, Con, Lit)


def is_value(e) -> bool:
    return type(e) in (Lam, Con, Lit)


def free_vars(e: CoreExpr) -> frozenset:
    return e.fvs


def _arg_ufv(a):
    return frozenset((a,)) if type(a) is Name else unguarded_free_vars(a)


def unguarded_free_vars(e: CoreExpr) -> frozenset:
    """Free names of ``e``, except that a deepDup application guards its
    argument: ``ufv(deepDup x) = {}``.  Everything else follows free_vars
    structurally (plain ``dup`` does not guard)."""
    t = type(e)
    if t is DeepDup:
        return _EMPTY
    if t is Var:
        return e.fvs
    if t is Lit:
        return _EMPTY
    if t is Dup:
        return _arg_ufv(e.name)
    if t is Lam:
        return unguarded_free_vars(e.body) - {e.binder}
    if t is App:
        return unguarded_free_vars(e.fun) | _arg_ufv(e.arg)
    if t is Let:
        acc = unguarded_free_vars(e.body)
        for _, rhs in e.bindings:
            acc = acc | unguarded_free_vars(rhs)
        return acc - frozenset(n for n, _ in e.bindings)
    if t is Con:
        acc = _EMPTY
        for a in e.args:
            acc = acc | _arg_ufv(a)
        return acc
    if t is Case:
        acc = unguarded_free_vars(e.scrutinee)
        for alt in e.alts:
            acc = acc | (unguarded_free_vars(alt.rhs) - frozenset(alt.binders))
        if e.default is not None:
            acc = acc | unguarded_free_vars(e.default)
        return acc
    if t is PrimApp:
        return _arg_ufv(e.lhs) | _arg_ufv(e.rhs)
    if t is Seq:
        return _arg_ufv(e.forced) | unguarded_free_vars(e.then)
    raise TypeError(f"not a core expression: {e!r}")


def fresh_rename(e: CoreExpr, supply: NameSupply) -> CoreExpr:
    """Rename every bound name in ``e`` to a completely fresh one.

    Free names are untouched.  Applied to values fetched from the heap and
    to expressions copied by dup/deepDup, which keeps heap/term pairs
    distinctly named.  Assumes the binders of ``e`` are pairwise distinct
    (true for every expression the machine handles)."""
    if not e.has_binders:
        return e
    return _rename(e, {}, supply)


def _rename(e, env, supply):
    t = type(e)
    if t is Var:
        n = env.get(e.name, e.name)
        return e if n is e.name else Var(n)
    if t is Lit:
        return e
    if not e.has_binders and (not env or e.fvs.isdisjoint(env)):
        return e
    if t is Lam:
        nb = supply.fresh(e.binder.base)
        env[e.binder] = nb
        return Lam(nb, _rename(e.body, env, supply))
    if t is App:
        return App(_rename(e.fun, env, supply), _rename_arg(e.arg, env, supply))
    if t is Let:
        for n, _ in e.bindings:
            env[n] = supply.fresh(n.base)
        binds = tuple((env[n], _rename(rhs, env, supply)) for n, rhs in e.bindings)
        return Let(binds, _rename(e.body, env, supply))
    if t is Dup:
        return Dup(_rename_arg(e.name, env, supply))
    if t is DeepDup:
        return DeepDup(_rename_arg(e.name, env, supply))
    if t is Con:
        return Con(e.tag, tuple(_rename_arg(a, env, supply) for a in e.args))
    if t is Case:
        scrut = _rename(e.scrutinee, env, supply)
        alts = []
        for alt in e.alts:
            nbs = tuple(supply.fresh(b.base) for b in alt.binders)
            for b, nb in zip(alt.binders, nbs):
                env[b] = nb
            alts.append(Alt(alt.tag, nbs, _rename(alt.rhs, env, supply)))
        dflt = _rename(e.default, env, supply) if e.default is not None else None
        return Case(scrut, tuple(alts), dflt)
    if t is PrimApp:
        return PrimApp(e.op, _rename_arg(e.lhs, env, supply),
                       _rename_arg(e.rhs, env, supply))
    if t is Seq:
        return Seq(_rename_arg(e.forced, env, supply), _rename(e.then, env, supply))
    raise TypeError(f"not a core expression: {e!r}")


def _rename_arg(a, env, supply):
    if type(a) is Name:
        return env.get(a, a)
    return _rename(a, env, supply)


def substitute(e: CoreExpr, mapping: dict) -> CoreExpr:
    """Replace free occurrences of each key Name by its value Name.

    Binders are left untouched; occurrences under a shadowing binder are not
    replaced.  Callers guarantee the replacement names cannot be captured
    (all runtime terms are distinctly named)."""
    if not mapping or e.fvs.isdisjoint(mapping):
        return e
    return _subst(e, mapping)


def _sub_arg(a, m):
    if type(a) is Name:
        return m.get(a, a)
    return _subst(a, m) if not a.fvs.isdisjoint(m) else a


def _subst(e, m):
    t = type(e)
    if t is Var:
        n = m.get(e.name, e.name)
        return e if n is e.name else Var(n)
    if e.fvs.isdisjoint(m):
        return e
    if t is Lam:
        if e.binder in m:
            m = {k: v for k, v in m.items() if k != e.binder}
            if not m:
                return e
        return Lam(e.binder, _subst(e.body, m))
    if t is App:
        return App(_subst(e.fun, m) if not e.fun.fvs.isdisjoint(m) else e.fun,
                   _sub_arg(e.arg, m))
    if t is Let:
        bound = [n for n, _ in e.bindings if n in m]
        if bound:
            m = {k: v for k, v in m.items() if k not in bound}
            if not m:
                return e
        binds = tuple((n, _subst(rhs, m) if not rhs.fvs.isdisjoint(m) else rhs)
                      for n, rhs in e.bindings)
        body = _subst(e.body, m) if not e.body.fvs.isdisjoint(m) else e.body
        return Let(binds, body)
    if t is Dup:
        return Dup(_sub_arg(e.name, m))
    if t is DeepDup:
        return DeepDup(_sub_arg(e.name, m))
    if t is Con:
        return Con(e.tag, tuple(_sub_arg(a, m) for a in e.args))
    if t is Case:
        scrut = (_subst(e.scrutinee, m)
                 if not e.scrutinee.fvs.isdisjoint(m) else e.scrutinee)
        alts = []
        for alt in e.alts:
            m2 = m
            shadowed = [b for b in alt.binders if b in m]
            if shadowed:
                m2 = {k: v for k, v in m.items() if k not in shadowed}
            rhs = (_subst(alt.rhs, m2)
                   if m2 and not alt.rhs.fvs.isdisjoint(m2) else alt.rhs)
            alts.append(Alt(alt.tag, alt.binders, rhs))
        dflt = None
        if e.default is not None:
            dflt = (_subst(e.default, m)
                    if not e.default.fvs.isdisjoint(m) else e.default)
        return Case(scrut, tuple(alts), dflt)
    if t is PrimApp:
        return PrimApp(e.op, _sub_arg(e.lhs, m), _sub_arg(e.rhs, m))
    if t is Seq:
        then = _subst(e.then, m) if not e.then.fvs.isdisjoint(m) else e.then
        return Seq(_sub_arg(e.forced, m), then)
    if t is Lit:
        return e
    raise TypeError(f"not a core expression: {e!r}")


def max_uniq(e) -> int:
    """Largest disambiguator occurring anywhere in ``e`` (free or bound)."""
    best = -1
    stack = [e]
    while stack:
        x = stack.pop()
        t = type(x)
        if t is Name:
            if x.uniq > best:
                best = x.uniq
            continue
        if t is Var:
            stack.append(x.name)
        elif t is Lam:
            stack.append(x.binder)
            stack.append(x.body)
        elif t is App:
            stack.append(x.fun)
            stack.append(x.arg)
        elif t is Let:
            for n, rhs in x.bindings:
                stack.append(n)
                stack.append(rhs)
            stack.append(x.body)
        elif t in (Dup, DeepDup):
            stack.append(x.name)
        elif t is Con:
            stack.extend(x.args)
        elif t is Case:
            stack.append(x.scrutinee)
            for alt in x.alts:
                stack.extend(alt.binders)
                stack.append(alt.rhs)
            if x.default is not None:
                stack.append(x.default)
        elif t is PrimApp:
            stack.append(x.lhs)
            stack.append(x.rhs)
        elif t is Seq:
            stack.append(x.forced)
            stack.append(x.then)
        elif t is Lit:
            pass
        else:
            raise TypeError(f"not a core expression: {x!r}")
    return best


def iter_binders(e):
    """Yield every binder Name occurring in ``e`` (lambda, let, case alts)."""
    stack = [e]
    while stack:
        x = stack.pop()
        t = type(x)
        if t is Name or t is Lit or t is Var:
            continue
        if t is Lam:
            yield x.binder
            stack.append(x.body)
        elif t is App:
            stack.append(x.fun)
            stack.append(x.arg)
        elif t is Let:
            for n, rhs in x.bindings:
                yield n
                stack.append(rhs)
            stack.append(x.body)
        elif t in (Dup, DeepDup):
            stack.append(x.name)
        elif t is Con:
            stack.extend(x.args)
        elif t is Case:
            stack.append(x.scrutinee)
            for alt in x.alts:
                yield from alt.binders
                stack.append(alt.rhs)
            if x.default is not None:
                stack.append(x.default)
        elif t is PrimApp:
            stack.append(x.lhs)
            stack.append(x.rhs)
        elif t is Seq:
            stack.append(x.forced)
            stack.append(x.then)


def normalize(e: CoreExpr, supply: NameSupply | None = None) -> CoreExpr:
    """Bring ``e`` into normalized shape.

    Non-variable arguments of applications, constructors, primitive ops,
    seq and dup/deepDup are let-bound to fresh names, and any binder that
    collides with an already-seen name is renamed.  Binders that are already
    globally distinct are kept, so normalizing a normal term is the
    identity."""
    if supply is None:
        supply = NameSupply()
    supply.ensure_above(max_uniq(e))
    seen = set(e.fvs)
    return _norm(e, {}, seen, supply)


def _norm_atom(a, env, seen, supply, binds):
    # Normalize an argument position down to a plain Name.
    if type(a) is Name:
        return env.get(a, a)
    if type(a) is Var:
        return env.get(a.name, a.name)
    fresh = supply.fresh("a")
    seen.add(fresh)
    binds.append((fresh, _norm(a, env, seen, supply)))
    return fresh


def _norm_bind(b, env, seen, supply):
    nb = supply.fresh(b.base) if b in seen else b
    seen.add(nb)
    env[b] = nb
    return nb


def _wrap(binds, e):
    return Let(tuple(binds), e) if binds else e


def _norm(e, env, seen, supply):
    t = type(e)
    if t is Var:
        n = env.get(e.name, e.name)
        return e if n is e.name else Var(n)
    if t is Lit:
        return e
    if t is Lam:
        env = dict(env)
        nb = _norm_bind(e.binder, env, seen, supply)
        return Lam(nb, _norm(e.body, env, seen, supply))
    if t is App:
        fun = _norm(e.fun, env, seen, supply)
        binds = []
        arg = _norm_atom(e.arg, env, seen, supply, binds)
        return _wrap(binds, App(fun, arg))
    if t is Let:
        env = dict(env)
        nbs = [_norm_bind(n, env, seen, supply) for n, _ in e.bindings]
        binds = tuple((nb, _norm(rhs, env, seen, supply))
                      for nb, (_, rhs) in zip(nbs, e.bindings))
        return Let(binds, _norm(e.body, env, seen, supply))
    if t is Dup:
        binds = []
        n = _norm_atom(e.name, env, seen, supply, binds)
        return _wrap(binds, Dup(n))
    if t is DeepDup:
        binds = []
        n = _norm_atom(e.name, env, seen, supply, binds)
        return _wrap(binds, DeepDup(n))
    if t is Con:
        binds = []
        args = tuple(_norm_atom(a, env, seen, supply, binds) for a in e.args)
        return _wrap(binds, Con(e.tag, args))
    if t is Case:
        scrut = _norm(e.scrutinee, env, seen, supply)
        alts = []
        for alt in e.alts:
            env2 = dict(env)
            nbs = tuple(_norm_bind(b, env2, seen, supply) for b in alt.binders)
            alts.append(Alt(alt.tag, nbs, _norm(alt.rhs, env2, seen, supply)))
        dflt = _norm(e.default, env, seen, supply) if e.default is not None else None
        return Case(scrut, tuple(alts), dflt)
    if t is PrimApp:
        binds = []
        lhs = _norm_atom(e.lhs, env, seen, supply, binds)
        rhs = _norm_atom(e.rhs, env, seen, supply, binds)
        return _wrap(binds, PrimApp(e.op, lhs, rhs))
    if t is Seq:
        binds = []
        forced = _norm_atom(e.forced, env, seen, supply, binds)
        return _wrap(binds, Seq(forced, _norm(e.then, env, seen, supply)))
    raise TypeError(f"not a core expression: {e!r}")


def erase_unsharing(e: CoreExpr) -> CoreExpr:
    """Replace every ``dup x`` / ``deepDup x`` by ``x``.

    The primitives are invisible to the meaning of a program, so erasing
    them must never change observables; only cost and sharing change."""
    t = type(e)
    if t in (Var, Lit):
        return e
    if t is Dup or t is DeepDup:
        a = e.name
        return Var(a) if type(a) is Name else erase_unsharing(a)
    if t is Lam:
        return Lam(e.binder, erase_unsharing(e.body))
    if t is App:
        return App(erase_unsharing(e.fun), _erase_arg(e.arg))
    if t is Let:
        return Let(tuple((n, erase_unsharing(r)) for n, r in e.bindings),
                   erase_unsharing(e.body))
    if t is Con:
        return Con(e.tag, tuple(_erase_arg(a) for a in e.args))
    if t is Case:
        alts = tuple(Alt(a.tag, a.binders, erase_unsharing(a.rhs)) for a in e.alts)
        dflt = erase_unsharing(e.default) if e.default is not None else None
        return Case(erase_unsharing(e.scrutinee), alts, dflt)
    if t is PrimApp:
        return PrimApp(e.op, _erase_arg(e.lhs), _erase_arg(e.rhs))
    if t is Seq:
        return Seq(_erase_arg(e.forced), erase_unsharing(e.then))
    raise TypeError(f"not a core expression: {e!r}")


def _erase_arg(a):
    return a if type(a) is Name else erase_unsharing(a)


def alpha_equivalent(a: CoreExpr, b: CoreExpr) -> bool:
    """Structural equality modulo consistent renaming of bound names.

    Free names must match exactly."""
    return _alpha(a, b, {}, {})


def _alpha_name(n1, n2, env1, env2):
    i1 = env1.get(n1)
    i2 = env2.get(n2)
    if i1 is None and i2 is None:
        return n1 == n2
    return i1 == i2


def _alpha_arg(a1, a2, env1, env2):
    if type(a1) is Name and type(a2) is Name:
        return _alpha_name(a1, a2, env1, env2)
    if type(a1) is Name or type(a2) is Name:
        return False
    return _alpha(a1, a2, env1, env2)


def _alpha(a, b, env1, env2):
    t = type(a)
    if t is not type(b):
        return False
    if t is Var:
        return _alpha_name(a.name, b.name, env1, env2)
    if t is Lit:
        return a.value == b.value
    if t is Lam:
        i = len(env1)
        return _alpha(a.body, b.body, {**env1, a.binder: i}, {**env2, b.binder: i})
    if t is App:
        return _alpha(a.fun, b.fun, env1, env2) and _alpha_arg(a.arg, b.arg, env1, env2)
    if t is Let:
        if len(a.bindings) != len(b.bindings):
            return False
        e1, e2 = dict(env1), dict(env2)
        for (n1, _), (n2, _) in zip(a.bindings, b.bindings):
            i = len(e1)
            e1[n1] = i
            e2[n2] = i
        for (_, r1), (_, r2) in zip(a.bindings, b.bindings):
            if not _alpha(r1, r2, e1, e2):
                return False
        return _alpha(a.body, b.body, e1, e2)
    if t is Dup or t is DeepDup:
        return _alpha_arg(a.name, b.name, env1, env2)
    if t is Con:
        return (a.tag == b.tag and len(a.args) == len(b.args)
                and all(_alpha_arg(x, y, env1, env2) for x, y in zip(a.args, b.args)))
    if t is Case:
        if len(a.alts) != len(b.alts) or (a.default is None) != (b.default is None):
            return False
        if not _alpha(a.scrutinee, b.scrutinee, env1, env2):
            return False
        for alt1, alt2 in zip(a.alts, b.alts):
            if alt1.tag != alt2.tag or len(alt1.binders) != len(alt2.binders):
                return False
            e1, e2 = dict(env1), dict(env2)
            for b1, b2 in zip(alt1.binders, alt2.binders):
                i = len(e1)
                e1[b1] = i
                e2[b2] = i
            if not _alpha(alt1.rhs, alt2.rhs, e1, e2):
                return False
        if a.default is not None and not _alpha(a.default, b.default, env1, env2):
            return False
        return True
    if t is PrimApp:
        return (a.op == b.op and _alpha_arg(a.lhs, b.lhs, env1, env2)
                and _alpha_arg(a.rhs, b.rhs, env1, env2))
    if t is Seq:
        return (_alpha_arg(a.forced, b.forced, env1, env2)
                and _alpha(a.then, b.then, env1, env2))
    raise TypeError(f"not a core expression: {a!r}")


# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class Program:
    """A normalized program: ordered top-level bindings, an entry name and
    the constructor arity table.  The top level is loaded as the initial
    heap and `main` becomes the initial control expression."""

    top_level: tuple  # of (Name, CoreExpr)
    main: Name
    constructors: dict  # tag -> arity

    def as_let_expr(self) -> CoreExpr:
        """The whole program as one recursive let, for alpha comparison."""
        return Let(self.top_level, Var(self.main))

    def max_uniq(self) -> int:
        best = self.main.uniq
        for n, rhs in self.top_level:
            best = max(best, n.uniq, max_uniq(rhs))
        return best


def erase_program(p: Program) -> Program:
    return Program(tuple((n, erase_unsharing(r)) for n, r in p.top_level),
                   p.main, dict(p.constructors))


def check_normalized(program: Program) -> list:
    """Return a list of human-readable violations of the normalized-program
    invariants (empty when the program is well-formed)."""
    problems = []
    tops = [n for n, _ in program.top_level]
    if len(set(tops)) != len(tops):
        problems.append("duplicate top-level names")
    if program.main not in set(tops):
        problems.append(f"main {program.main} not bound at top level")
    binders = list(tops)
    for _, rhs in program.top_level:
        binders.extend(iter_binders(rhs))
    if len(set(binders)) != len(binders):
        seen = set()
        dup = set()
        for b in binders:
            if b in seen:
                dup.add(str(b))
            seen.add(b)
        problems.append(f"binders not globally distinct: {', '.join(sorted(dup))}")
    top_set = set(tops)
    for n, rhs in program.top_level:
        if not rhs.fvs <= top_set:
            extra = ", ".join(str(x) for x in sorted(rhs.fvs - top_set))
            problems.append(f"{n}: unbound free names {extra}")
        problems.extend(_check_expr(rhs, program.constructors, str(n)))
    return problems


def _check_expr(e, table, where):
    problems = []
    stack = [e]
    while stack:
        x = stack.pop()
        t = type(x)
        if t is Var or t is Lit:
            continue
        if t is Lam:
            stack.append(x.body)
        elif t is App:
            if type(x.arg) is not Name:
                problems.append(f"{where}: non-variable application argument")
            stack.append(x.fun)
        elif t is Let:
            for _, rhs in x.bindings:
                stack.append(rhs)
            stack.append(x.body)
        elif t in (Dup, DeepDup):
            if type(x.name) is not Name:
                problems.append(f"{where}: non-variable dup argument")
        elif t is Con:
            if x.tag not in table:
                problems.append(f"{where}: undeclared constructor {x.tag}")
            elif table[x.tag] != len(x.args):
                problems.append(
                    f"{where}: constructor {x.tag} arity {table[x.tag]} "
                    f"applied to {len(x.args)} arguments")
            if any(type(a) is not Name for a in x.args):
                problems.append(f"{where}: non-variable constructor argument")
        elif t is Case:
            stack.append(x.scrutinee)
            for alt in x.alts:
                if alt.tag not in table:
                    problems.append(f"{where}: undeclared constructor {alt.tag}")
                elif table[alt.tag] != len(alt.binders):
                    problems.append(
                        f"{where}: alternative {alt.tag} binds {len(alt.binders)} "
                        f"names, arity is {table[alt.tag]}")
                stack.append(alt.rhs)
            if x.default is not None:
                stack.append(x.default)
        elif t is PrimApp:
            if x.op not in PRIM_OPS:
                problems.append(f"{where}: unknown primitive {x.op}")
            if type(x.lhs) is not Name or type(x.rhs) is not Name:
                problems.append(f"{where}: non-variable primitive operand")
        elif t is Seq:
            if type(x.forced) is not Name:
                problems.append(f"{where}: non-variable seq argument")
            stack.append(x.then)
    return problems


# ---------------------------------------------------------------------------
# Pretty printing (stable and deterministic; output re-parses through the
# surface reader)

_PREC_LOW = 0    # lambda, let, case bodies
_PREC_CMP = 1
_PREC_ADD = 2
_PREC_MUL = 3
_PREC_APP = 4
_PREC_ATOM = 5

_OP_PREC = {"leq": _PREC_CMP, "eq": _PREC_CMP,
            "add": _PREC_ADD, "sub": _PREC_ADD, "mul": _PREC_MUL}


def pretty(e: CoreExpr) -> str:
    return _pp(e, _PREC_LOW)


def _paren(s, needed, prec):
    return f"({s})" if prec > needed else s


def _pp_arg(a):
    return str(a) if type(a) is Name else _pp(a, _PREC_ATOM)


def _pp(e, prec):
    t = type(e)
    if t is Var:
        return str(e.name)
    if t is Lit:
        return str(e.value)
    if t is Lam:
        params = []
        body = e
        while type(body) is Lam:
            params.append(str(body.binder))
            body = body.body
        s = f"\\{' '.join(params)} -> {_pp(body, _PREC_LOW)}"
        return _paren(s, _PREC_LOW, prec)
    if t is App:
        s = f"{_pp(e.fun, _PREC_APP)} {_pp_arg(e.arg)}"
        return _paren(s, _PREC_APP, prec)
    if t is Let:
        binds = "; ".join(f"{n} = {_pp(r, _PREC_LOW)}" for n, r in e.bindings)
        s = f"let {{ {binds} }} in {_pp(e.body, _PREC_LOW)}"
        return _paren(s, _PREC_LOW, prec)
    if t is Dup:
        return _paren(f"dup {_pp_arg(e.name)}", _PREC_APP, prec)
    if t is DeepDup:
        return _paren(f"deepDup {_pp_arg(e.name)}", _PREC_APP, prec)
    if t is Con:
        if not e.args:
            return e.tag
        s = f"{e.tag} {' '.join(_pp_arg(a) for a in e.args)}"
        return _paren(s, _PREC_APP, prec)
    if t is Case:
        alts = [f"{alt.tag}{''.join(' ' + str(b) for b in alt.binders)} -> "
                f"{_pp(alt.rhs, _PREC_LOW)}" for alt in e.alts]
        if e.default is not None:
            alts.append(f"_ -> {_pp(e.default, _PREC_LOW)}")
        s = f"case {_pp(e.scrutinee, _PREC_LOW)} of {{ {'; '.join(alts)} }}"
        return _paren(s, _PREC_LOW, prec)
    if t is PrimApp:
        p = _OP_PREC[e.op]
        s = f"{_pp_arg(e.lhs)} {PRIM_SYMBOLS[e.op]} {_pp_arg(e.rhs)}"
        return _paren(s, p, prec)
    if t is Seq:
        s = f"seq {_pp_arg(e.forced)} {_pp(e.then, _PREC_ATOM)}"
        return _paren(s, _PREC_APP, prec)
    raise TypeError(f"not a core expression: {e!r}")


def pretty_program(p: Program) -> str:
    lines = []
    for tag in sorted(p.constructors):
        lines.append(f"data {tag}/{p.constructors[tag]};")
    if lines:
        lines.append("")
    for n, rhs in p.top_level:
        lines.append(f"{n} = {pretty(rhs)};")
    return "\n".join(lines) + "\n"
