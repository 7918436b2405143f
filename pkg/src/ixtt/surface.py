"""Concrete syntax: lexer, parser, name resolution, and the printer.

File extension: ``.itt``.  Pragmas: ``#mode unary|dependent``,
``#features f1,f2,...``, ``#expect-error CODE``, ``#fuel N``.
Comments run from ``--`` to end of line.

Declarations::

    def NAME (x : T)... | (y : S)... : TYPE := BODY
    postulate NAME (x : T)... | (y : S)... : TYPE
    type NAME (x : T)... |? (y : S)...  [:= TYPE]
    check (x : T)... | (y : S)... : E1 = E2 : TYPE

A ``|`` marks an indexed declaration (its absence means base level).
Application is juxtaposition and a parenthesized head starts a new spine;
``f @ j`` applies a product to a base index, ``f $ a`` applies a weak Pi
function, ``f ()`` applies a Hom over the empty telescope.  Telescope
binders are written ``((x : A) (y : B). BODY)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

from . import kernel as K
from . import syntax as S
from .kernel import Diagnostic, KernelError, fail
from .syntax import Sub, TEntry

KEYWORDS = {
    "def", "type", "postulate", "check",
    "Id", "refl", "J", "Sigma", "pair", "fst", "snd",
    "Hom", "Pi", "lam", "plam", "blam", "Fun",
    "Prod", "pabs", "Coprod", "inj", "coelim",
    "Pushout", "inl", "inr", "glue", "poelim", "poglue",
    "poh1", "poh2", "poh3",
    "Zero", "zelim", "U", "El", "Fib", "rf", "fp",
    "Mod", "eta", "melim", "melimh",
    "unit", "tt", "empty", "emptyelim", "nat", "zero", "suc", "natelim",
    "funext", "funexth", "funexthp", "idext", "hap", "haph", "haphp",
    "pibeta", "pieta", "prodbeta", "prodeta", "ua", "uah", "ucode",
}

UNICODE_SYNONYMS = {
    "Σ": "Sigma",
    "Π": "Pi",
    "∐": "Coprod",
    "⨿": "Pushout",
    "λ": "\\",
    "→": "->",
}

PUNCT = ["![", ":=", "()", "(", ")", "[", "]", "|", ":", ".", ",", "\\", "@", "$", "=", ";", "/", "!"]


@dataclass(frozen=True)
class Tok:
    kind: str  # "name", "kw", "punct", "int", "pragma", "eof"
    text: str
    pos: int
    end: int


def lex(src: str) -> list:
    toks = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c == "-" and src.startswith("--", i):
            j = src.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if c == "#" and (i == 0 or src[i - 1] == "\n"):
            j = src.find("\n", i)
            j = n if j < 0 else j
            toks.append(Tok("pragma", src[i:j], i, j))
            i = j
            continue
        if c.isspace():
            i += 1
            continue
        if c in UNICODE_SYNONYMS:
            t = UNICODE_SYNONYMS[c]
            if t == "\\":
                toks.append(Tok("punct", "\\", i, i + 1))
            else:
                kind = "kw" if t in KEYWORDS else "name"
                toks.append(Tok(kind, t, i, i + 1))
            i += 1
            continue
        matched = False
        for p in PUNCT:
            if src.startswith(p, i):
                if p == "()":
                    toks.append(Tok("punct", "()", i, i + 2))
                else:
                    toks.append(Tok("punct", p, i, i + len(p)))
                i += len(p)
                matched = True
                break
        if matched:
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Tok("int", src[i:j], i, j))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'"):
                j += 1
            text = src[i:j]
            toks.append(Tok("kw" if text in KEYWORDS else "name", text, i, j))
            i = j
            continue
        fail("PARSE_ERROR", f"unexpected character {c!r}", span=(i, i + 1))
    toks.append(Tok("eof", "", n, n))
    return toks


# ---------------------------------------------------------------------------
# Surface AST (terms are nested tuples; declarations are dataclasses)


@dataclass
class SDecl:
    kind: str  # def | postulate | type | check
    name: Optional[str]
    params: list  # [(name, term)]
    ictx: Optional[list]  # None = base declaration
    ty: Optional[tuple]
    body: Optional[tuple]
    rhs: Optional[tuple] = None  # for check declarations
    span: tuple = (0, 0)


@dataclass
class SModule:
    mode: Optional[str] = None
    features: list = dc_field(default_factory=list)
    expect_error: Optional[str] = None
    fuel: Optional[int] = None
    decls: list = dc_field(default_factory=list)


class Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = lex(src)
        self.i = 0

    def peek(self, k: int = 0) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        t = self.next()
        if t.text != text:
            fail(
                "PARSE_ERROR",
                f"expected {text!r}, found {t.text or 'end of file'!r}",
                span=(t.pos, t.end),
            )
        return t

    def at(self, text: str, k: int = 0) -> bool:
        return self.peek(k).text == text

    # -- modules ------------------------------------------------------------

    def module(self) -> SModule:
        m = SModule()
        while self.peek().kind == "pragma":
            self._pragma(m, self.next())
        while self.peek().kind != "eof":
            m.decls.append(self.decl())
        return m

    def _pragma(self, m: SModule, t: Tok):
        parts = t.text[1:].split()
        if not parts:
            fail("PARSE_ERROR", "empty pragma", span=(t.pos, t.end))
        head, rest = parts[0], parts[1:]
        if head == "mode" and len(rest) == 1 and rest[0] in ("unary", "dependent"):
            m.mode = rest[0]
        elif head == "features":
            blob = "".join(rest)
            m.features.extend(f for f in blob.split(",") if f)
        elif head == "expect-error" and len(rest) == 1:
            m.expect_error = rest[0]
        elif head == "fuel" and len(rest) == 1 and rest[0].isdigit():
            m.fuel = int(rest[0])
        else:
            fail("PARSE_ERROR", f"bad pragma {t.text!r}", span=(t.pos, t.end))

    # -- declarations ---------------------------------------------------------

    def decl(self) -> SDecl:
        t = self.next()
        start = t.pos
        if t.text not in ("def", "postulate", "type", "check"):
            fail(
                "PARSE_ERROR",
                f"expected a declaration, found {t.text!r}",
                span=(t.pos, t.end),
            )
        kind = t.text
        name = None
        if kind != "check":
            nt = self.next()
            if nt.kind not in ("name", "kw") or nt.kind == "kw":
                fail("PARSE_ERROR", "expected a name", span=(nt.pos, nt.end))
            name = nt.text
        params = self._binders()
        ictx = None
        if self.at("|"):
            self.next()
            ictx = self._binders()
        if kind == "type":
            ty = None
            body = None
            if self.at(":="):
                self.next()
                body = self.term()
            end = self.peek().pos
            return SDecl(kind, name, params, ictx, ty, body, span=(start, end))
        self.expect(":")
        ty = self.term()
        body = None
        rhs = None
        if kind == "def":
            self.expect(":=")
            body = self.term()
        elif kind == "check":
            # 'ty' parsed above is the left-hand side.
            self.expect("=")
            body = self.term()
            self.expect(":")
            rhs = self.term()
        end = self.peek().pos
        return SDecl(kind, name, params, ictx, ty, body, rhs, span=(start, end))

    def _binders(self) -> list:
        out = []
        while self.at("(") and not self.at("()"):
            save = self.i
            self.next()
            names = []
            while self.peek().kind == "name":
                names.append(self.next().text)
            if not names or not self.at(":"):
                self.i = save
                break
            self.next()
            ty = self.term()
            self.expect(")")
            for nm in names:
                out.append((nm, ty))
        return out

    # -- terms ----------------------------------------------------------------

    def term(self) -> tuple:
        t = self.peek()
        if t.text in ("\\",):
            self.next()
            return self._lambda("lam", t)
        if t.text in ("lam", "plam", "blam", "pabs"):
            self.next()
            return self._lambda(t.text, t)
        spine = [self.atom()]
        while True:
            nt = self.peek()
            if nt.text in ("@", "$"):
                self.next()
                arg = self.atom()
                head = ("spine", spine) if len(spine) > 1 else spine[0]
                spine = [("papp" if nt.text == "@" else "piapp", head, arg)]
                continue
            if nt.text == "![":
                self.next()
                spine = [self._suspension(("spine", spine) if len(spine) > 1 else spine[0])]
                continue
            if nt.text == "()":
                self.next()
                head = ("spine", spine) if len(spine) > 1 else spine[0]
                spine = [("emptyapp", head)]
                continue
            if self._starts_atom(nt):
                spine.append(self.atom())
                continue
            break
        return ("spine", spine) if len(spine) > 1 else spine[0]

    def _starts_atom(self, t: Tok) -> bool:
        if t.kind in ("name", "int"):
            return True
        if t.kind == "kw" and t.text not in ("def", "type", "postulate", "check"):
            return True
        return t.text in ("(",)

    def _lambda(self, kw: str, t: Tok) -> tuple:
        names = []
        while self.peek().kind == "name":
            names.append(self.next().text)
        if not names:
            fail("PARSE_ERROR", "lambda needs at least one binder", span=(t.pos, t.end))
        self.expect(".")
        body = self.term()
        return (kw, names, body)

    def _suspension(self, head) -> tuple:
        # head ![ b e0, e1 ; tail ] or ![ i ... ]
        sort = self.next()
        if sort.text not in ("b", "i"):
            fail("PARSE_ERROR", "suspension sort must be 'b' or 'i'", span=(sort.pos, sort.end))
        entries = []
        if not self.at(";"):
            entries.append(self.term())
            while self.at(","):
                self.next()
                entries.append(self.term())
        self.expect(";")
        tail = self.next()
        if tail.kind != "int":
            fail("PARSE_ERROR", "suspension tail must be an integer", span=(tail.pos, tail.end))
        self.expect("]")
        return ("susp", sort.text, head, entries, int(tail.text))

    def atom(self) -> tuple:
        t = self.peek()
        if t.text == "(":
            # Could be a binder group '( binders . body )' or a plain paren.
            save = self.i
            self.next()
            group = self._try_group()
            if group is not None:
                return group
            self.i = save
            self.next()
            e = self.term()
            if self.at(":"):
                self.next()
                ty = self.term()
                self.expect(")")
                return ("ann", e, ty)
            self.expect(")")
            return ("paren", e)
        if t.kind == "int":
            self.next()
            return ("int", int(t.text))
        if t.kind == "name":
            self.next()
            return ("name", t.text, (t.pos, t.end))
        if t.kind == "kw":
            self.next()
            return ("kw", t.text, (t.pos, t.end))
        fail("PARSE_ERROR", f"unexpected {t.text or 'end of file'!r}", span=(t.pos, t.end))

    def _try_group(self) -> Optional[tuple]:
        """Parse '(binder* . body)' where binder is NAME or (NAME+ : TY)."""
        binders = []
        while True:
            if self.at("."):
                self.next()
                body = self.term()
                if not self.at(")"):
                    return None
                self.next()
                return ("group", binders, body)
            if self.at("(") and not self.at("()"):
                save = self.i
                self.next()
                names = []
                while self.peek().kind == "name":
                    names.append(self.next().text)
                if not names or not self.at(":"):
                    self.i = save
                    return None
                self.next()
                ty = self.term()
                if not self.at(")"):
                    return None
                self.next()
                for nm in names:
                    binders.append((nm, ty))
                continue
            if self.peek().kind == "name" and not self.at("(", 1):
                # Untyped binder (only allowed before the dot).
                nxt = self.peek(1)
                if nxt.text in (".",) or nxt.kind == "name" or nxt.text == "(":
                    binders.append((self.next().text, None))
                    continue
                return None
            if self.peek().kind == "name":
                binders.append((self.next().text, None))
                continue
            return None


def parse_module(text: str) -> SModule:
    return Parser(text).module()


# ---------------------------------------------------------------------------
# Name resolution


@dataclass
class NameInfo:
    sort: str  # "base" | "indexed"
    kind: str  # "var" | "decl"
    is_type: bool = False
    nb: int = 0
    ni: int = 0


class Resolver:
    """Resolves surface terms to core syntax (untyped, sort-directed)."""

    def __init__(self, cfg: K.TheoryConfig, decls: dict):
        self.cfg = cfg
        self.decls = decls  # name -> Decl (already checked)
        self.scope = []  # list of (name, sort)

    # -- scope helpers ---------------------------------------------------------

    def _push(self, name: str, sort: str):
        self.scope.append((name, sort))

    def _pop(self, n: int = 1):
        del self.scope[len(self.scope) - n :]

    def _lookup(self, name: str):
        same_sort_after = {"base": 0, "indexed": 0}
        for nm, sort in reversed(self.scope):
            if nm == name:
                return sort, same_sort_after[sort]
            same_sort_after[sort] += 1
        return None

    # -- entry points -----------------------------------------------------------

    def resolve_base_type(self, t):
        return self._ty(t, "base")

    def resolve_indexed_type(self, t):
        return self._ty(t, "indexed")

    def _ty(self, t, sort):
        out = self.term(t, sort)
        return out

    # -- terms -------------------------------------------------------------------

    def term(self, t, sort: str):
        """Resolve a surface term to the given sort ('base'/'indexed'/'fib')."""
        tag = t[0]
        if tag == "paren":
            return self.term(t[1], sort)
        if tag == "ann":
            inner = self.term(t[1], sort)
            ty = self.term(t[2], sort)
            return (S.BAnn if sort == "base" else S.IAnn)(inner, ty)
        if tag == "spine":
            return self._spine(t[1], sort)
        if tag in ("lam", "plam", "blam", "pabs"):
            return self._resolve_lambda(t, sort)
        if tag == "papp":
            fn = self.term(t[1], "indexed")
            idx = self.term(t[2], "base")
            return S.IPApp(fn, idx)
        if tag == "piapp":
            fn = self.term(t[1], "indexed")
            arg = self.term(t[2], "indexed")
            return S.IPiApp(fn, arg)
        if tag == "emptyapp":
            fn = self.term(t[1], "base")
            return S.HomApp(fn, ())
        if tag == "susp":
            return self._resolve_susp(t, sort)
        if tag == "name":
            return self._name(t, sort, ())
        if tag == "kw":
            return self._kw(t, (), sort)
        if tag == "group":
            # A bare binder group at the base level is a Hom abstraction.
            if sort == "base":
                names, tele, body = self._group(t, 0, "indexed", "Hom abstraction")
                core_tele = self._tele(tele, "indexed")
                core = self.term(body, "indexed")
                self._pop(len(tele))
                return S.HomLam(core_tele, core)
            fail("PARSE_ERROR", "unexpected binder group")
        if tag == "int":
            fail("PARSE_ERROR", "bare integers are only for suspensions")
        raise AssertionError(tag)

    def _spine(self, parts, sort):
        head = parts[0]
        args = parts[1:]
        if head[0] == "kw":
            return self._kw(head, args, sort)
        if head[0] == "name":
            return self._name(head, sort, args)
        if head[0] == "group" and sort == "indexed":
            # An applied Hom abstraction.
            fn = self.term(head, "base")
            return S.HomApp(fn, tuple(self.term(a, "indexed") for a in args))
        # Applied parenthesized expression: application one at a time.
        fn = self.term(head, sort)
        if sort == "base":
            out = fn
            for a in args:
                out = S.BApp(out, self.term(a, "base"))
            return out
        out = fn
        for a in args:
            out = S.IApp(out, self.term(a, "indexed"))
        return out

    def _resolve_lambda(self, t, sort):
        kw, names, body = t
        if kw == "pabs":
            out = None
            for nm in names:
                self._push(nm, "base")
            core = self.term(body, "indexed")
            self._pop(len(names))
            for nm in reversed(names):
                core = S.IPabs(core, hint=nm)
            return core
        if kw == "blam":
            for nm in names:
                self._push(nm, "base")
            core = self.term(body, "base")
            self._pop(len(names))
            for nm in reversed(names):
                core = S.BLam(core, hint=nm)
            return core
        if kw == "plam":
            for nm in names:
                self._push(nm, "indexed")
            core = self.term(body, "indexed")
            self._pop(len(names))
            for nm in reversed(names):
                core = S.IPiLam(core, hint=nm)
            return core
        # 'lam' / backslash: Hom abstraction at base sort, function lambda at
        # indexed sort.  A Hom abstraction needs binder types, which come from
        # checking; the untyped resolver emits a lambda marker resolved by
        # the checking elaborator only for ILam, so Hom lambdas must bind a
        # telescope group instead: lam binders are indexed either way.
        if sort == "indexed":
            for nm in names:
                self._push(nm, "indexed")
            core = self.term(body, "indexed")
            self._pop(len(names))
            for nm in reversed(names):
                core = S.ILam(core, hint=nm)
            return core
        fail(
            "PARSE_ERROR",
            "a Hom abstraction needs binder types: use ((x : A). body)",
        )

    def _resolve_susp(self, t, sort):
        _, subsort, head, entries, tail = t
        core_head = self.term(head, sort)
        ents = tuple(
            self.term(e, "base" if subsort == "b" else "indexed") for e in entries
        )
        sub = Sub(ents, tail)
        fieldname = "ps" if subsort == "b" else "pt"
        if not hasattr(core_head, fieldname):
            fail("PARSE_ERROR", "this head cannot carry a suspension")
        from dataclasses import replace

        return replace(core_head, **{fieldname: sub})

    def _name(self, t, sort, args):
        _, name, span = t
        hit = self._lookup(name)
        if hit is not None:
            vsort, ix = hit
            if args:
                # A variable head applied to arguments.
                if vsort == "base" and sort == "indexed":
                    return S.HomApp(
                        S.BVar(ix), tuple(self.term(a, "indexed") for a in args)
                    )
                if vsort == "base" and sort == "base":
                    out = S.BVar(ix)
                    for a in args:
                        out = S.BApp(out, self.term(a, "base"))
                    return out
                if vsort == "indexed" and sort == "indexed":
                    out = S.IVar(ix)
                    for a in args:
                        out = S.IApp(out, self.term(a, "indexed"))
                    return out
                fail(
                    "SORT_MISMATCH",
                    f"indexed variable {name!r} used at the base level",
                    span=span,
                )
            if vsort != sort:
                if vsort == "base" and sort == "indexed":
                    fail(
                        "SORT_MISMATCH",
                        f"base variable {name!r} used as an indexed term",
                        span=span,
                    )
                fail(
                    "SORT_MISMATCH",
                    f"indexed variable {name!r} used as a base term",
                    span=span,
                )
            return S.BVar(ix) if sort == "base" else S.IVar(ix)
        d = self.decls.get(name)
        if d is None:
            fail("UNBOUND_NAME", f"unknown name {name!r}", span=span)
        nb = len(d.btele)
        ni = len(d.itele or ())
        need = nb + ni
        if len(args) < need:
            fail(
                "PARSE_ERROR",
                f"{name!r} expects {need} argument(s), got {len(args)}",
                span=span,
            )
        bargs = tuple(self.term(a, "base") for a in args[:nb])
        iargs = tuple(self.term(a, "indexed") for a in args[nb:need])
        extra = args[need:]
        if d.is_base:
            if iargs:
                pass
            core = (S.TConst if d.is_type else S.Const)(name, bargs)
            if d.is_type:
                if extra or sort != "base":
                    fail(
                        "SORT_MISMATCH",
                        f"base type {name!r} used as an indexed term",
                        span=span,
                    )
                return core
            if sort == "base":
                for a in extra:
                    core = S.BApp(core, self.term(a, "base"))
                return core
            # Base constant in indexed position: a Hom application.
            return S.HomApp(core, tuple(self.term(a, "indexed") for a in extra))
        if sort != "indexed":
            fail(
                "SORT_MISMATCH",
                f"indexed declaration {name!r} used as a base term",
                span=span,
            )
        if extra:
            fail(
                "PARSE_ERROR",
                f"too many arguments to {name!r}; parenthesize the head",
                span=span,
            )
        cls = S.ITConst if d.is_type else S.IConst
        return cls(name, bargs, iargs, unstable=d.unstable)

    # -- keyword formers ---------------------------------------------------------

    def _group(self, t, n_untyped: int, sort_untyped, what: str):
        """Deconstruct a binder group with n untyped binders then a typed
        telescope; returns (names, tele-pairs, body-term)."""
        if t[0] == "paren":
            return self._group(t[1], n_untyped, sort_untyped, what)
        if t[0] != "group":
            fail("PARSE_ERROR", f"{what} needs a binder group (x ... . body)")
        binders, body = t[1], t[2]
        if len(binders) < n_untyped:
            fail("PARSE_ERROR", f"{what} needs {n_untyped} binder(s)")
        untyped = binders[:n_untyped]
        for nm, ty in untyped:
            if ty is not None:
                fail("PARSE_ERROR", f"{what}: binder {nm!r} must be untyped")
        tele = binders[n_untyped:]
        for nm, ty in tele:
            if ty is None:
                fail("PARSE_ERROR", f"{what}: telescope binder {nm!r} needs a type")
        return [nm for nm, _ in untyped], tele, body

    def _tele(self, pairs, sort: str):
        """Resolve telescope binders, pushing them into scope."""
        out = []
        for nm, ty in pairs:
            out.append(TEntry(self.term(ty, sort), nm))
            self._push(nm, sort)
        return tuple(out)

    def _split_group_bar(self, t):
        """For JBI: split '(x p (d:T)* | (e:S)*. body)' on a '|' marker.

        The parser has no '|' inside groups, so dependent J uses two groups.
        """
        return t

    def _kw(self, t, args, sort):
        _, kw, span = t
        A = lambda k: args[k]
        base = sort == "base"

        def arg_terms(s, lo=0, hi=None):
            return tuple(self.term(a, s) for a in args[lo:hi])

        def want(n):
            if len(args) != n:
                fail(
                    "PARSE_ERROR",
                    f"{kw!r} expects {n} argument(s), got {len(args)}",
                    span=span,
                )

        if kw == "unit":
            want(0)
            return S.Unit() if base else S.IUnit()
        if kw == "tt":
            want(0)
            return S.TT() if base else S.ITT()
        if kw == "empty":
            want(0)
            if not base:
                fail("SORT_MISMATCH", "'empty' is a base type; use Zero", span=span)
            return S.Empty()
        if kw == "emptyelim":
            want(2)
            if not base:
                fail("SORT_MISMATCH", "'emptyelim' is base level", span=span)
            names, tele, body = self._group(A(0), 1, "base", "emptyelim")
            if tele:
                fail("PARSE_ERROR", "emptyelim takes a single binder")
            self._push(names[0], "base")
            motive = self.term(body, "base")
            self._pop()
            return S.EmptyElim(motive, self.term(A(1), "base"), hint=names[0])
        if kw == "nat":
            want(0)
            return S.Nat()
        if kw == "zero":
            want(0)
            return S.NatZero()
        if kw == "suc":
            want(1)
            return S.NatSuc(self.term(A(0), "base"))
        if kw == "natelim":
            want(4)
            names, tele, body = self._group(A(0), 1, "base", "natelim")
            self._push(names[0], "base")
            motive = self.term(body, "base")
            self._pop()
            names2, tele2, body2 = self._group(A(2), 2, "base", "natelim step")
            self._push(names2[0], "base")
            self._push(names2[1], "base")
            step = self.term(body2, "base")
            self._pop(2)
            return S.NatElim(
                motive, self.term(A(1), "base"), step, self.term(A(3), "base")
            )
        if kw == "Id":
            want(3)
            if base:
                return S.Id(*arg_terms("base"))
            return S.IId(*arg_terms("indexed"))
        if kw == "refl":
            want(1)
            return S.Refl(self.term(A(0), "base")) if base else S.IRefl(
                self.term(A(0), "indexed")
            )
        if kw == "J":
            return self._resolve_j(args, sort, span)
        if kw == "Sigma":
            if len(args) != 1:
                fail("PARSE_ERROR", "Sigma expects a binder group", span=span)
            names, tele, body = self._group(A(0), 0, sort, "Sigma")
            if len(tele) != 1:
                fail("PARSE_ERROR", "Sigma binds exactly one variable", span=span)
            nm, tyt = tele[0]
            ty = self.term(tyt, sort)
            self._push(nm, sort)
            snd = self.term(body, sort)
            self._pop()
            return (S.Sigma if base else S.ISigma)(ty, snd, hint=nm)
        if kw == "pair":
            want(2)
            s = "base" if base else "indexed"
            return (S.SPair if base else S.IPair)(*arg_terms(s))
        if kw == "fst":
            want(1)
            s = "base" if base else "indexed"
            return (S.Fst if base else S.IFst)(self.term(A(0), s))
        if kw == "snd":
            want(1)
            s = "base" if base else "indexed"
            return (S.Snd if base else S.ISnd)(self.term(A(0), s))
        if kw == "Hom":
            if not base:
                fail("SORT_MISMATCH", "Hom is a base type", span=span)
            if len(args) == 1:
                names, tele, body = self._group(A(0), 0, "indexed", "Hom")
                core_tele = self._tele(tele, "indexed")
                out = S.Hom(core_tele, self.term(body, "indexed"))
                self._pop(len(tele))
                return out
            want(2)
            a = self.term(A(0), "indexed")
            self._push("_", "indexed")
            b = S.shift_indexed(self.term(A(1), "indexed"), 1)
            self._pop()
            return S.Hom((TEntry(a, "x"),), b)
        if kw == "Fun":
            want(2)
            return S.IFun(*arg_terms("indexed"))
        if kw == "Pi":
            if len(args) != 1:
                fail("PARSE_ERROR", "Pi expects a binder group", span=span)
            if base:
                names, tele, body = self._group(A(0), 0, "base", "Pi")
                if len(tele) != 1:
                    fail("PARSE_ERROR", "base Pi binds exactly one variable")
                nm, tyt = tele[0]
                ty = self.term(tyt, "base")
                self._push(nm, "base")
                cod = self.term(body, "base")
                self._pop()
                return S.BPi(ty, cod, hint=nm)
            names, tele, body = self._group(A(0), 0, "indexed", "Pi")
            if len(tele) != 1:
                fail("PARSE_ERROR", "Pi binds exactly one variable")
            nm, tyt = tele[0]
            ty = self.term(tyt, "indexed")
            self._push(nm, "indexed")
            cod = self.term(body, "indexed")
            self._pop()
            return S.IPi(ty, cod, hint=nm)
        if kw == "Prod":
            if len(args) != 1:
                fail("PARSE_ERROR", "Prod expects a binder group", span=span)
            names, tele, body = self._group(A(0), 0, "base", "Prod")
            if len(tele) != 1:
                fail("PARSE_ERROR", "Prod binds exactly one base variable")
            nm, tyt = tele[0]
            ty = self.term(tyt, "base")
            self._push(nm, "base")
            fam = self.term(body, "indexed")
            self._pop()
            return S.IProd(ty, fam, hint=nm)
        if kw == "Coprod":
            if len(args) != 1:
                fail("PARSE_ERROR", "Coprod expects a binder group", span=span)
            names, tele, body = self._group(A(0), 0, "base", "Coprod")
            if len(tele) != 1:
                fail("PARSE_ERROR", "Coprod binds exactly one base variable")
            nm, tyt = tele[0]
            ty = self.term(tyt, "base")
            self._push(nm, "base")
            fam = self.term(body, "indexed")
            self._pop()
            return S.ICoprod(ty, fam, hint=nm)
        if kw == "inj":
            want(2)
            j = self.term(A(0), "base")
            arg = self.term(A(1), "indexed")
            if self.cfg.has("coprod-stable"):
                return S.ICoPair(j, arg)
            return S.IIn(j, arg)
        if kw == "coelim":
            return self._resolve_coelim(args, span)
        if kw == "Zero":
            want(0)
            return S.IZero()
        if kw == "zelim":
            return self._resolve_zelim(args, span)
        if kw == "Pushout":
            want(5)
            if base:
                kty = self.term(A(0), "base")
                ity = self.term(A(1), "base")
                jty = self.term(A(2), "base")
                nf, tf, bf = self._group(A(3), 1, "base", "Pushout map")
                self._push(nf[0], "base")
                f = self.term(bf, "base")
                self._pop()
                ng, tg, bg = self._group(A(4), 1, "base", "Pushout map")
                self._push(ng[0], "base")
                g = self.term(bg, "base")
                self._pop()
                return S.BPushout(kty, ity, jty, f, g)
            return S.IPushout(*arg_terms("indexed"))
        if kw == "inl":
            want(1)
            return (S.PoInl if base else S.IInl)(
                self.term(A(0), "base" if base else "indexed")
            )
        if kw == "inr":
            want(1)
            return (S.PoInr if base else S.IInr)(
                self.term(A(0), "base" if base else "indexed")
            )
        if kw == "glue":
            want(1)
            return (S.PoGlue if base else S.IGlue)(
                self.term(A(0), "base" if base else "indexed")
            )
        if kw == "poelim":
            want(5)
            s = "base" if base else "indexed"
            groups = [self._bind1(args[k], s, "poelim") for k in range(4)]
            scrut = self.term(A(4), s)
            return (S.PoElim if base else S.IPoElim)(*groups, scrut)
        if kw == "poglue":
            want(6)
            if not base:
                fail("SORT_MISMATCH", "'poglue' is base level", span=span)
            po = self.term(A(0), "base")
            groups = [self._bind1(args[k], "base", "poglue") for k in range(1, 5)]
            return S.PoElimGlue(po, *groups, self.term(A(5), "base"))
        if kw in ("poh1", "poh2", "poh3"):
            want(6)
            if base:
                fail("SORT_MISMATCH", f"{kw!r} is indexed level", span=span)
            po = self.term(A(0), "indexed")
            groups = [self._bind1(args[k], "indexed", kw) for k in range(1, 5)]
            cls = {"poh1": S.IPoH1, "poh2": S.IPoH2, "poh3": S.IPoH3}[kw]
            return cls(po, *groups, self.term(A(5), "indexed"))
        if kw == "U":
            want(1)
            names, tele, body = self._group(A(0), 0, "indexed", "U")
            if body[0] != "kw" or body[1] != "unit":
                # The group body is ignored; write (… . unit).
                pass
            core_tele = self._tele(tele, "indexed")
            self._pop(len(tele))
            return S.UExt(core_tele)
        if kw == "ucode":
            want(1)
            names, tele, body = self._group(A(0), 0, "indexed", "ucode")
            core_tele = self._tele(tele, "indexed")
            fam = self.term(body, "indexed")
            self._pop(len(tele))
            return S.UCode(core_tele, fam)
        if kw == "El":
            want(1)
            return self._resolve_el(A(0), span)
        if kw == "Fib":
            want(1)
            names, tele, body = self._group(A(0), 0, "indexed", "Fib")
            core_tele = self._tele(tele, "indexed")
            fam = self.term(body, "indexed")
            self._pop(len(tele))
            return S.FibT(core_tele, fam)
        if kw == "fp":
            want(1)
            names, tele, body = self._group(A(0), 0, "indexed", "fp")
            core_tele = self._tele(tele, "indexed")
            fam = self.term(body, "fib")
            self._pop(len(tele))
            return S.FibFp(core_tele, fam)
        if kw == "rf":
            if len(args) < 2:
                fail("PARSE_ERROR", "rf expects a group, a proof, and arguments")
            names, tele, body = self._group(A(0), 0, "indexed", "rf")
            core_tele = self._tele(tele, "indexed")
            fam = self.term(body, "indexed")
            self._pop(len(tele))
            fw = self.term(A(1), "base")
            rest = arg_terms("indexed", 2)
            return S.FibRf(core_tele, fam, fw, rest)
        if kw == "Mod":
            want(1)
            return S.Trunc(self.term(A(0), "indexed"))
        if kw == "eta":
            want(2)
            aty = self.term(A(0), "indexed")
            arg = self.term(A(1), "indexed")
            if self.cfg.has("modality-stable"):
                return S.IMBar(arg)
            return S.IMEta(aty, arg)
        if kw in ("melim", "melimh"):
            return self._resolve_melim(kw, args, span)
        if kw == "funext":
            want(1)
            names, tele, body = self._group(A(0), 1, "base", "funext")
            self._push(names[0], "base")
            core = self.term(body, "base")
            self._pop()
            return S.BFunext(core, hint=names[0])
        if kw == "funexth":
            want(1)
            return S.BFunextH(self.term(A(0), "base"))
        if kw == "funexthp":
            want(2)
            names, tele, body = self._group(A(0), 1, "base", "funexthp")
            self._push(names[0], "base")
            core = self.term(body, "base")
            self._pop()
            return S.BFunextHP(core, self.term(A(1), "base"), hint=names[0])
        if kw == "idext":
            want(1)
            names, tele, body = self._group(A(0), 0, "indexed", "idext")
            core_tele = self._tele(tele, "indexed")
            core = self.term(body, "indexed")
            self._pop(len(tele))
            return S.IdExt(core_tele, core)
        if kw == "hap":
            if len(args) < 1:
                fail("PARSE_ERROR", "hap expects a path and arguments", span=span)
            p = self.term(A(0), "base")
            return S.IHap(p, arg_terms("indexed", 1))
        if kw == "haph":
            if len(args) < 1:
                fail("PARSE_ERROR", "haph expects a group and arguments", span=span)
            names, tele, body = self._group(A(0), 0, "indexed", "haph")
            core_tele = self._tele(tele, "indexed")
            core = self.term(body, "indexed")
            self._pop(len(tele))
            return S.IHapH(core_tele, core, arg_terms("indexed", 1))
        if kw == "haphp":
            want(1)
            return S.HapHP(self.term(A(0), "base"))
        if kw == "pibeta":
            want(2)
            names, tele, body = self._group(A(0), 1, "indexed", "pibeta")
            self._push(names[0], "indexed")
            core = self.term(body, "indexed")
            self._pop()
            return S.IPiBeta(core, self.term(A(1), "indexed"), hint=names[0])
        if kw == "pieta":
            want(1)
            return S.IPiEta(self.term(A(0), "indexed"))
        if kw == "prodbeta":
            want(2)
            names, tele, body = self._group(A(0), 1, "base", "prodbeta")
            self._push(names[0], "base")
            core = self.term(body, "indexed")
            self._pop()
            return S.IProdBeta(core, self.term(A(1), "base"), hint=names[0])
        if kw == "prodeta":
            want(1)
            return S.IProdEta(self.term(A(0), "indexed"))
        if kw == "ua":
            want(3)
            return S.IUa(*arg_terms("indexed"))
        if kw == "uah":
            want(3)
            return S.IUaH(*arg_terms("indexed"))
        if kw in ("lam", "plam", "blam", "pabs"):
            fail("PARSE_ERROR", f"{kw!r} cannot be applied here", span=span)
        fail("PARSE_ERROR", f"keyword {kw!r} not usable here", span=span)

    def _bind1(self, t, sort, what):
        names, tele, body = self._group(t, 1, sort, what)
        if tele:
            fail("PARSE_ERROR", f"{what} groups bind exactly one variable")
        self._push(names[0], sort)
        out = self.term(body, sort)
        self._pop()
        return out

    def _resolve_el(self, t, span):
        # Fib-sort heads are syntactically recognizable.
        if t[0] in ("kw",) and t[1] in ("Mod", "rf"):
            return S.FibEl(self.term(t, "fib"))
        if t[0] == "spine" and t[1][0][0] == "kw" and t[1][0][1] in ("Mod", "rf"):
            return S.FibEl(self.term(t, "fib"))
        if t[0] == "paren":
            return self._resolve_el(t[1], span)
        # A name decides by its sort; otherwise default to the internal El.
        head = t
        if t[0] == "spine":
            head = t[1][0]
        if head[0] == "name":
            hit = self._lookup(head[1])
            if hit is not None:
                hsort = hit[0]
            else:
                d = self.decls.get(head[1])
                if d is None:
                    fail("UNBOUND_NAME", f"unknown name {head[1]!r}", span=span)
                hsort = "base" if d.is_base else "indexed"
            if hsort == "base":
                return S.ElExt(self.term(t, "base"))
            return S.IEl(self.term(t, "indexed"))
        if head[0] == "susp":
            return S.FibEl(self.term(t, "fib"))
        return S.IEl(self.term(t, "indexed"))

    def _resolve_j(self, args, sort, span):
        if len(args) < 4:
            fail("PARSE_ERROR", "J expects a point, motive, branch, endpoint, path")
        a_t, motive_t, branch_t = args[0], args[1], args[2]
        a2_t, path_t = args[3], args[4] if len(args) > 4 else None
        if path_t is None:
            fail("PARSE_ERROR", "J expects 5 arguments at least", span=span)
        extra = args[5:]
        if sort == "base":
            a = self.term(a_t, "base")
            names, tele, mbody = self._group(motive_t, 2, "base", "J motive")
            self._push(names[0], "base")
            self._push(names[1], "base")
            core_tele = self._tele(tele, "base")
            motive = self.term(mbody, "base")
            self._pop(2 + len(tele))
            bnames, btele, bbody = self._group(branch_t, 0, "base", "J branch")
            if len(btele) != len(tele):
                fail("PARSE_ERROR", "J branch telescope must match the motive")
            for nm, _ in btele:
                self._push(nm, "base")
            branch = self.term(bbody, "base")
            self._pop(len(btele))
            a2 = self.term(a2_t, "base")
            path = self.term(path_t, "base")
            eargs = tuple(self.term(x, "base") for x in extra)
            if len(eargs) != len(tele):
                fail("PARSE_ERROR", "J needs one argument per telescope binder")
            return S.J(a, core_tele, motive, branch, a2, path, eargs)
        # Indexed sort: IJ when the scrutinee is indexed, JBI when base.
        asort = self._guess_sort(a_t)
        if asort == "indexed":
            a = self.term(a_t, "indexed")
            names, tele, mbody = self._group(motive_t, 2, "indexed", "J motive")
            if tele:
                fail("PARSE_ERROR", "the indexed J takes no motive telescope")
            self._push(names[0], "indexed")
            self._push(names[1], "indexed")
            motive = self.term(mbody, "indexed")
            self._pop(2)
            branch = self.term(branch_t, "indexed")
            a2 = self.term(a2_t, "indexed")
            path = self.term(path_t, "indexed")
            if extra:
                fail("PARSE_ERROR", "the indexed J takes exactly 5 arguments")
            return S.IJ(a, motive, branch, a2, path)
        # JBI: motive group is (x p (d:T)* . inner-group-or-body).
        a = self.term(a_t, "base")
        names, dtele_pairs, mbody = self._group(motive_t, 2, "base", "J motive")
        self._push(names[0], "base")
        self._push(names[1], "base")
        dtele = self._tele(dtele_pairs, "base")
        # The indexed telescope is a nested group in the motive body.
        if mbody[0] in ("group", "paren") and (
            mbody[0] == "group" or mbody[1][0] == "group"
        ):
            enames, etele_pairs, ebody = self._group(mbody, 0, "indexed", "J motive")
            saved = list(self.scope)
            self.scope = [p for p in self.scope if p[1] == "base"]
            etele = self._tele(etele_pairs, "indexed")
            motive = self.term(ebody, "indexed")
            self.scope = saved
        else:
            etele = ()
            saved = list(self.scope)
            self.scope = [p for p in self.scope if p[1] == "base"]
            motive = self.term(mbody, "indexed")
            self.scope = saved
        self._pop(2 + len(dtele_pairs))
        bnames, btele_pairs, bbody = self._group(branch_t, 0, "base", "J branch")
        if len(btele_pairs) != len(dtele_pairs):
            fail("PARSE_ERROR", "J branch telescope must match the motive")
        for nm, _ in btele_pairs:
            self._push(nm, "base")
        if bbody[0] in ("group", "paren") and etele:
            ebn, ebt, ebb = self._group(bbody, 0, "indexed", "J branch")
            saved = list(self.scope)
            self.scope = [p for p in self.scope if p[1] == "base"]
            for nm, _ in ebt:
                self._push(nm, "indexed")
            branch = self.term(ebb, "indexed")
            self.scope = saved
        else:
            saved = list(self.scope)
            self.scope = [p for p in self.scope if p[1] == "base"]
            branch = self.term(bbody, "indexed")
            self.scope = saved
        self._pop(len(btele_pairs))
        a2 = self.term(a2_t, "base")
        path = self.term(path_t, "base")
        nd, ne = len(dtele), len(etele)
        if len(extra) != nd + ne:
            fail("PARSE_ERROR", "J needs one argument per telescope binder")
        dargs = tuple(self.term(x, "base") for x in extra[:nd])
        eargs = tuple(self.term(x, "indexed") for x in extra[nd:])
        return S.JBI(a, dtele, etele, motive, branch, a2, path, dargs, eargs)

    def _guess_sort(self, t) -> str:
        """Best-effort sort of a term; names decide, defaults to indexed."""
        if t[0] == "paren" or t[0] == "ann":
            return self._guess_sort(t[1])
        if t[0] == "spine":
            return self._guess_sort(t[1][0])
        if t[0] == "name":
            hit = self._lookup(t[1])
            if hit is not None:
                return hit[0]
            d = self.decls.get(t[1])
            if d is not None:
                return "base" if d.is_base else "indexed"
            return "indexed"
        if t[0] == "kw":
            if t[1] in ("fst", "snd", "refl", "pair"):
                return "indexed"
            if t[1] in ("funexth", "funexthp", "haphp", "idext", "funext"):
                return "base"
        if t[0] == "emptyapp":
            return "indexed"
        return "indexed"

    def _resolve_coelim(self, args, span):
        if len(args) < 3:
            fail("PARSE_ERROR", "coelim expects a motive, a branch, a scrutinee")
        mnames, mtele_pairs, mbody = self._group(args[0], 1, "indexed", "coelim motive")
        bnames, btele_pairs, bbody = self._group(args[1], 2, "indexed", "coelim branch")
        scrut = self.term(args[2], "indexed")
        if not mtele_pairs:
            self._push(mnames[0], "indexed")
            motive = self.term(mbody, "indexed")
            self._pop()
            self._push(bnames[0], "base")
            self._push(bnames[1], "indexed")
            branch = self.term(bbody, "indexed")
            self._pop(2)
            if len(args) != 3:
                fail("PARSE_ERROR", "coelim takes 3 arguments", span=span)
            return S.ICoElim(motive, branch, scrut)
        # Local form: motive (z (e:E)*. D), branch (i x (e:E')*. d), eargs.
        self._push(mnames[0], "indexed")
        etele = self._tele(mtele_pairs, "indexed")
        motive = self.term(mbody, "indexed")
        self._pop(1 + len(mtele_pairs))
        self._push(bnames[0], "base")
        self._push(bnames[1], "indexed")
        for nm, ty in btele_pairs:
            self._push(nm, "indexed")
        branch = self.term(bbody, "indexed")
        self._pop(2 + len(btele_pairs))
        eargs = tuple(self.term(x, "indexed") for x in args[3:])
        if len(eargs) != len(etele):
            fail("PARSE_ERROR", "coelim needs one argument per telescope binder")
        return S.ICoElimL(etele, motive, branch, scrut, eargs)

    def _resolve_zelim(self, args, span):
        if len(args) < 2:
            fail("PARSE_ERROR", "zelim expects a motive and a scrutinee", span=span)
        head = args[0]
        if head[0] == "paren":
            head = head[1]
        if head[0] == "group":
            names, tele_pairs, body = self._group(args[0], 1, "indexed", "zelim")
            if not tele_pairs:
                self._push(names[0], "indexed")
                motive = self.term(body, "indexed")
                self._pop()
                if len(args) != 2:
                    fail("PARSE_ERROR", "zelim takes 2 arguments", span=span)
                return S.IZeroElim(motive, self.term(args[1], "indexed"))
            self._push(names[0], "indexed")
            etele = self._tele(tele_pairs, "indexed")
            motive = self.term(body, "indexed")
            self._pop(1 + len(tele_pairs))
            scrut = self.term(args[1], "indexed")
            eargs = tuple(self.term(x, "indexed") for x in args[2:])
            if len(eargs) != len(etele):
                fail("PARSE_ERROR", "zelim needs one argument per telescope binder")
            return S.IZeroElimPP(etele, motive, scrut, eargs)
        # No binder: 0-elim'(D, a).
        if len(args) != 2:
            fail("PARSE_ERROR", "zelim takes 2 arguments", span=span)
        return S.IZeroElimP(
            self.term(args[0], "indexed"), self.term(args[1], "indexed")
        )

    def _resolve_melim(self, kw, args, span):
        if len(args) < 3:
            fail("PARSE_ERROR", f"{kw} expects a motive, a branch, a point", span=span)
        mnames, mtele_pairs, mbody = self._group(args[0], 1, "indexed", "melim motive")
        bnames, btele_pairs, bbody = self._group(args[1], 1, "indexed", "melim branch")
        point = self.term(args[2], "indexed")
        h = kw == "melimh"
        if not mtele_pairs:
            self._push(mnames[0], "indexed")
            motive = self.term(mbody, "fib")
            self._pop()
            self._push(bnames[0], "indexed")
            branch = self.term(bbody, "indexed")
            self._pop()
            if len(args) != 3:
                fail("PARSE_ERROR", f"{kw} takes 3 arguments", span=span)
            cls = S.ITruncElimH if h else S.ITruncElim
            return cls(motive, branch, point)
        self._push(mnames[0], "indexed")
        etele = self._tele(mtele_pairs, "indexed")
        motive = self.term(mbody, "fib")
        self._pop(1 + len(mtele_pairs))
        self._push(bnames[0], "indexed")
        for nm, ty in btele_pairs:
            self._push(nm, "indexed")
        branch = self.term(bbody, "indexed")
        self._pop(1 + len(btele_pairs))
        eargs = tuple(self.term(x, "indexed") for x in args[3:])
        if len(eargs) != len(etele):
            fail("PARSE_ERROR", f"{kw} needs one argument per telescope binder")
        cls = S.ITruncElimLH if h else S.ITruncElimL
        return cls(etele, motive, branch, point, eargs)
