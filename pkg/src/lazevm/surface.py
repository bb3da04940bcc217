"""Surface language: a small Haskell-like notation for writing programs.

Layout-insensitive, brace/semicolon delimited.  A program is a sequence of
``data Tag/arity;`` declarations and value declarations
``name p1 .. pk = expr;`` with a required ``main``.  Expressions: integer
literals, variables, saturated constructor applications, ``\\x y -> e``,
left-associative application, recursive ``let { .. } in e``,
``case e of { Tag x y -> e1; _ -> e2 }``, the infix operators
``+ - * <= ==``, the builtins ``dup e``, ``deepDup e`` and ``seq e1 e2``,
and ``[a, b, c]`` list sugar.  Comments run from ``--`` to end of line.

Desugaring resolves scopes to unique `Name`s, turns multi-parameter
declarations into nested lambdas and normalizes every right-hand side, so
the output `Program` satisfies the core invariants by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    Alt, App, Case, Con, DeepDup, Dup, Lam, LazevmError, Let, Lit, Name,
    NameSupply, PrimApp, Program, Seq, Var, check_normalized, normalize,
)

BUILTIN_CONSTRUCTORS = {"True": 0, "False": 0, "Unit": 0, "Cons": 2, "Nil": 0}


class SourceError(LazevmError):
    def __init__(self, message, line=None, col=None):
        loc = f" at {line}:{col}" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Lexer

_KEYWORDS = {"let", "in", "case", "of", "data", "dup", "deepDup", "seq"}
_TWO_CHAR = ("->", "<=", "==", )
_ONE_CHAR = "=;{}()[],\\+-*/_"


@dataclass
class Token:
    kind: str
    value: str
    line: int
    col: int


def _lex(text: str) -> list:
    toks = []
    i = 0
    line = 1
    col = 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("INT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            if j < n and text[j] == "#":
                k = j + 1
                while k < n and text[k].isdigit():
                    k += 1
                if k > j + 1:
                    j = k
            word = text[i:j]
            if word == "_":
                toks.append(Token("WILD", word, line, start_col))
            elif word in _KEYWORDS:
                toks.append(Token(word, word, line, start_col))
            elif word[0].isupper():
                toks.append(Token("UID", word, line, start_col))
            else:
                toks.append(Token("LID", word, line, start_col))
            col += j - i
            i = j
            continue
        two = text[i:i + 2]
        if two in _TWO_CHAR:
            toks.append(Token(two, two, line, start_col))
            i += 2
            col += 2
            continue
        if c in _ONE_CHAR:
            toks.append(Token(c, c, line, start_col))
            i += 1
            col += 1
            continue
        raise SourceError(f"unexpected character {c!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Surface AST (names still plain text; positions kept for error reports)


@dataclass
class SVar:
    name: str
    line: int
    col: int


@dataclass
class SLit:
    value: int


@dataclass
class SLam:
    params: list
    body: object


@dataclass
class SApp:
    fun: object
    arg: object


@dataclass
class SCon:
    tag: str
    args: list
    line: int
    col: int


@dataclass
class SLet:
    bindings: list  # of (name, params, expr)
    body: object


@dataclass
class SCase:
    scrutinee: object
    alts: list  # of (tag, binders, expr, line, col)
    default: object


@dataclass
class SPrim:
    op: str
    lhs: object
    rhs: object


@dataclass
class SSeq:
    forced: object
    then: object


@dataclass
class SDup:
    arg: object
    deep: bool


@dataclass
class SDecl:
    name: str
    params: list
    body: object
    line: int
    col: int


@dataclass
class SourceProgram:
    data_decls: list  # of (tag, arity, line, col)
    declarations: list  # of SDecl


_ATOM_START = {"INT", "LID", "UID", "(", "["}


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise SourceError(f"expected {kind!r}, found {t.value!r}", t.line, t.col)
        return self.next()

    def program(self) -> SourceProgram:
        data = []
        decls = []
        while self.peek().kind != "EOF":
            if self.peek().kind == "data":
                self.next()
                tag = self.expect("UID")
                self.expect("/")
                arity = int(self.expect("INT").value)
                self.expect(";")
                data.append((tag.value, arity, tag.line, tag.col))
            else:
                decls.append(self.decl())
        return SourceProgram(data, decls)

    def decl(self) -> SDecl:
        name = self.expect("LID")
        params = []
        while self.peek().kind == "LID":
            params.append(self.next().value)
        self.expect("=")
        body = self.expr()
        self.expect(";")
        return SDecl(name.value, params, body, name.line, name.col)

    def expr(self):
        k = self.peek().kind
        if k == "\\":
            self.next()
            params = [self.expect("LID").value]
            while self.peek().kind == "LID":
                params.append(self.next().value)
            self.expect("->")
            return SLam(params, self.expr())
        if k == "let":
            self.next()
            self.expect("{")
            binds = []
            while self.peek().kind != "}":
                name = self.expect("LID")
                params = []
                while self.peek().kind == "LID":
                    params.append(self.next().value)
                self.expect("=")
                binds.append((name.value, params, self.expr()))
                if self.peek().kind == ";":
                    self.next()
                else:
                    break
            self.expect("}")
            self.expect("in")
            return SLet(binds, self.expr())
        if k == "case":
            self.next()
            scrut = self.expr()
            self.expect("of")
            self.expect("{")
            alts = []
            default = None
            while self.peek().kind != "}":
                t = self.peek()
                if t.kind == "WILD":
                    self.next()
                    self.expect("->")
                    if default is not None:
                        raise SourceError("duplicate default alternative", t.line, t.col)
                    default = self.expr()
                else:
                    tag = self.expect("UID")
                    binders = []
                    while self.peek().kind == "LID":
                        binders.append(self.next().value)
                    self.expect("->")
                    if default is not None:
                        raise SourceError("default alternative must come last",
                                          tag.line, tag.col)
                    alts.append((tag.value, binders, self.expr(), tag.line, tag.col))
                if self.peek().kind == ";":
                    self.next()
                else:
                    break
            self.expect("}")
            return SCase(scrut, alts, default)
        return self.cmp_expr()

    def cmp_expr(self):
        left = self.add_expr()
        k = self.peek().kind
        if k in ("<=", "=="):
            self.next()
            op = "leq" if k == "<=" else "eq"
            return SPrim(op, left, self.add_expr())
        return left

    def add_expr(self):
        left = self.mul_expr()
        while self.peek().kind in ("+", "-"):
            op = "add" if self.next().kind == "+" else "sub"
            left = SPrim(op, left, self.mul_expr())
        return left

    def mul_expr(self):
        left = self.app_expr()
        while self.peek().kind == "*":
            self.next()
            left = SPrim("mul", left, self.app_expr())
        return left

    def app_expr(self):
        k = self.peek().kind
        if k == "dup":
            self.next()
            head = SDup(self.atom(), deep=False)
        elif k == "deepDup":
            self.next()
            head = SDup(self.atom(), deep=True)
        elif k == "seq":
            self.next()
            head = SSeq(self.atom(), self.atom())
        else:
            head = self.atom()
        args = []
        while self.peek().kind in _ATOM_START:
            args.append(self.atom())
        if isinstance(head, SCon) and not head.args:
            head.args = args
            return head
        for a in args:
            head = SApp(head, a)
        return head

    def atom(self):
        t = self.peek()
        if t.kind == "INT":
            self.next()
            return SLit(int(t.value))
        if t.kind == "LID":
            self.next()
            return SVar(t.value, t.line, t.col)
        if t.kind == "UID":
            self.next()
            return SCon(t.value, [], t.line, t.col)
        if t.kind == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "[":
            self.next()
            items = []
            if self.peek().kind != "]":
                items.append(self.expr())
                while self.peek().kind == ",":
                    self.next()
                    items.append(self.expr())
            close = self.expect("]")
            out = SCon("Nil", [], close.line, close.col)
            for item in reversed(items):
                out = SCon("Cons", [item, out], close.line, close.col)
            return out
        raise SourceError(f"expected an expression, found {t.value!r}", t.line, t.col)


def parse_program(text: str) -> SourceProgram:
    sp = _Parser(_lex(text)).program()
    seen = set()
    for d in sp.declarations:
        if d.name in seen:
            raise SourceError(f"duplicate declaration of {d.name}", d.line, d.col)
        seen.add(d.name)
    return sp


def parse_expr(text: str):
    """Parse a single expression (test convenience)."""
    p = _Parser(_lex(text))
    e = p.expr()
    p.expect("EOF")
    return e


# ---------------------------------------------------------------------------
# Desugaring


def _base(text: str) -> str:
    # A rendered name like x#12 re-enters the supply under its base.
    if "#" in text:
        stem, _, suffix = text.rpartition("#")
        if stem and suffix.isdigit():
            return stem
    return text


class _Desugarer:
    def __init__(self, supply: NameSupply, table: dict):
        self.supply = supply
        self.table = table

    def fresh(self, text: str) -> Name:
        return self.supply.fresh(_base(text))

    def conv(self, e, env):
        if isinstance(e, SVar):
            n = env.get(e.name)
            if n is None:
                raise SourceError(f"unbound variable {e.name}", e.line, e.col)
            return Var(n)
        if isinstance(e, SLit):
            return Lit(e.value)
        if isinstance(e, SLam):
            env = dict(env)
            binders = []
            for p in e.params:
                b = self.fresh(p)
                env[p] = b
                binders.append(b)
            out = self.conv(e.body, env)
            for b in reversed(binders):
                out = Lam(b, out)
            return out
        if isinstance(e, SApp):
            return App(self.conv(e.fun, env), self.conv(e.arg, env))
        if isinstance(e, SCon):
            arity = self.table.get(e.tag)
            if arity is None:
                raise SourceError(f"undeclared constructor {e.tag}", e.line, e.col)
            if arity != len(e.args):
                raise SourceError(
                    f"constructor {e.tag} has arity {arity}, "
                    f"applied to {len(e.args)} arguments", e.line, e.col)
            return Con(e.tag, tuple(self.conv(a, env) for a in e.args))
        if isinstance(e, SLet):
            env = dict(env)
            names = []
            for text, _, _ in e.bindings:
                if text in names:
                    raise SourceError(f"duplicate let binding {text}")
                names.append(text)
                env[text] = self.fresh(text)
            binds = []
            for text, params, rhs in e.bindings:
                rhs_s = SLam(params, rhs) if params else rhs
                binds.append((env[text], self.conv(rhs_s, env)))
            return Let(tuple(binds), self.conv(e.body, env))
        if isinstance(e, SCase):
            scrut = self.conv(e.scrutinee, env)
            alts = []
            for tag, binders, rhs, line, col in e.alts:
                arity = self.table.get(tag)
                if arity is None:
                    raise SourceError(f"undeclared constructor {tag}", line, col)
                if arity != len(binders):
                    raise SourceError(
                        f"alternative {tag} binds {len(binders)} names, "
                        f"arity is {arity}", line, col)
                env2 = dict(env)
                bs = []
                for b in binders:
                    nb = self.fresh(b)
                    env2[b] = nb
                    bs.append(nb)
                alts.append(Alt(tag, tuple(bs), self.conv(rhs, env2)))
            dflt = self.conv(e.default, env) if e.default is not None else None
            return Case(scrut, tuple(alts), dflt)
        if isinstance(e, SPrim):
            return PrimApp(e.op, self.conv(e.lhs, env), self.conv(e.rhs, env))
        if isinstance(e, SSeq):
            return Seq(self.conv(e.forced, env), self.conv(e.then, env))
        if isinstance(e, SDup):
            inner = self.conv(e.arg, env)
            return DeepDup(inner) if e.deep else Dup(inner)
        raise TypeError(f"not a surface expression: {e!r}")


def desugar(sp: SourceProgram, supply: NameSupply | None = None) -> Program:
    """Scope-resolve, lambda-lift parameters and normalize a parsed program."""
    if supply is None:
        supply = NameSupply()
    table = dict(BUILTIN_CONSTRUCTORS)
    for tag, arity, line, col in sp.data_decls:
        if tag in table and table[tag] != arity:
            raise SourceError(
                f"constructor {tag} redeclared with arity {arity} "
                f"(was {table[tag]})", line, col)
        table[tag] = arity

    ds = _Desugarer(supply, table)
    env = {}
    tops = []
    main = None
    for d in sp.declarations:
        n = ds.fresh(d.name)
        env[d.name] = n
        tops.append(n)
        if _base(d.name) == "main":
            main = n
    if main is None:
        raise SourceError("no main declaration")

    top_level = []
    for d, n in zip(sp.declarations, tops):
        body = SLam(d.params, d.body) if d.params else d.body
        raw = ds.conv(body, env)
        top_level.append((n, normalize(raw, supply)))

    program = Program(tuple(top_level), main, table)
    problems = check_normalized(program)
    if problems:
        raise SourceError("desugaring produced an ill-formed program: "
                          + "; ".join(problems))
    return program


def load_program(text: str, supply: NameSupply | None = None) -> Program:
    return desugar(parse_program(text), supply)


def load_file(path, supply: NameSupply | None = None) -> Program:
    with open(path, "r", encoding="utf-8") as fh:
        return load_program(fh.read(), supply)
