"""Two-sorted core syntax and the substitution calculus.

The core language has two levels: base expressions (contexts written Gamma)
and indexed expressions (contexts written Delta), with fibrant-sort
expressions as a small third category used by the fibration features.
Binding is de Bruijn, with separate counters per sort.  Name hints are kept
on binders for printing only and never compared.

Substitutions are parallel: a ``Sub`` maps var k to ``entries[k]`` for
k < len(entries) and to ``var(k - len(entries) + tail)`` otherwise.  This
representation is closed under composition, which is what lets a suspended
reindexing absorb further substitutions without rewriting beneath itself.

Unstable constructions (the ones that do not satisfy the reindexing push-in
equation) carry two optional pending substitutions ``ps`` (base) and ``pt``
(indexed); a node with a pending substitution is a suspended-reindexing node.
Constructor-style nodes (in/inl/inr/glue) keep their point argument outside
the frozen head, so indexed substitution composes into the argument and the
interchange law stays a structural identity on them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Optional, Union


class ScopeError(Exception):
    """An expression references a variable outside its context."""


# ---------------------------------------------------------------------------
# Expression nodes


class Expr:
    """Common base for all three expression sorts."""

    __slots__ = ()

    # Field spec: tuples (field name, kind, base offset, indexed offset).
    # Kinds: "b" base child, "i" indexed child, "f" fib child,
    # "bs"/"is" tuples of base/indexed children, "tb"/"ti" telescopes,
    # "ti!" a telescope opening a fresh indexed scope, "i!"/"f!" children
    # living in that fresh scope, "x" opaque (never traversed).
    # Offsets are ints or ("len", field, extra) for telescope-dependent ones.
    SPEC: tuple = ()
    # None, or one of "always", "coprod", "pushout", "modality": when active,
    # base substitution suspends instead of pushing in.
    UNSTABLE: Optional[str] = None
    # Fields that stay outside the frozen head of a suspended node.
    FLOW: tuple = ()
    # Constructor-style unstable node: indexed substitution rewrites only the
    # flow fields (the head is indexed-closed), so no pending pt is needed.
    CTOR: bool = False


class BaseExpr(Expr):
    __slots__ = ()


class IndexedExpr(Expr):
    __slots__ = ()


class FibExpr(Expr):
    __slots__ = ()


@dataclass(frozen=True)
class TEntry:
    """One telescope binder: a type plus a printing hint."""

    ty: Expr
    hint: str = field(default="_", compare=False)


Telescope = tuple  # tuple[TEntry, ...] of BaseExpr types
ITelescope = tuple  # tuple[TEntry, ...] of IndexedExpr types


def _len_of(node, off):
    if isinstance(off, int):
        return off
    _, name, extra = off
    return len(getattr(node, name)) + extra


# -- base level --------------------------------------------------------------


@dataclass(frozen=True)
class BVar(BaseExpr):
    ix: int
    SPEC = (("ix", "x", 0, 0),)


@dataclass(frozen=True)
class Const(BaseExpr):
    """Reference to a previously checked base-level declaration."""

    name: str
    args: tuple = ()
    unstable: bool = False
    ps: Optional["Sub"] = None
    SPEC = (("name", "x", 0, 0), ("args", "bs", 0, 0), ("unstable", "x", 0, 0))


@dataclass(frozen=True)
class TConst(BaseExpr):
    name: str
    args: tuple = ()
    SPEC = (("name", "x", 0, 0), ("args", "bs", 0, 0))


@dataclass(frozen=True)
class Id(BaseExpr):
    ty: BaseExpr
    lhs: BaseExpr
    rhs: BaseExpr
    SPEC = (("ty", "b", 0, 0), ("lhs", "b", 0, 0), ("rhs", "b", 0, 0))


@dataclass(frozen=True)
class Refl(BaseExpr):
    arg: BaseExpr
    SPEC = (("arg", "b", 0, 0),)


@dataclass(frozen=True)
class J(BaseExpr):
    """Identity eliminator with a motive telescope.

    motive lives under (x : A, p : Id(a, x), tele); branch under
    tele[a/x, refl/p]; args instantiate tele[a2/x, path/p].
    """

    a: BaseExpr
    tele: Telescope
    motive: BaseExpr
    branch: BaseExpr
    a2: BaseExpr
    path: BaseExpr
    args: tuple = ()
    SPEC = (
        ("a", "b", 0, 0),
        ("tele", "tb", 2, 0),
        ("motive", "b", ("len", "tele", 2), 0),
        ("branch", "b", ("len", "tele", 0), 0),
        ("a2", "b", 0, 0),
        ("path", "b", 0, 0),
        ("args", "bs", 0, 0),
    )


@dataclass(frozen=True)
class Sigma(BaseExpr):
    fst: BaseExpr
    snd: BaseExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("fst", "b", 0, 0), ("snd", "b", 1, 0))


@dataclass(frozen=True)
class SPair(BaseExpr):
    fst: BaseExpr
    snd: BaseExpr
    SPEC = (("fst", "b", 0, 0), ("snd", "b", 0, 0))


@dataclass(frozen=True)
class Fst(BaseExpr):
    pair: BaseExpr
    SPEC = (("pair", "b", 0, 0),)


@dataclass(frozen=True)
class Snd(BaseExpr):
    pair: BaseExpr
    SPEC = (("pair", "b", 0, 0),)


@dataclass(frozen=True)
class Unit(BaseExpr):
    SPEC = ()


@dataclass(frozen=True)
class TT(BaseExpr):
    SPEC = ()


@dataclass(frozen=True)
class Empty(BaseExpr):
    SPEC = ()


@dataclass(frozen=True)
class EmptyElim(BaseExpr):
    motive: BaseExpr
    scrut: BaseExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("motive", "b", 1, 0), ("scrut", "b", 0, 0))


@dataclass(frozen=True)
class Nat(BaseExpr):
    SPEC = ()


@dataclass(frozen=True)
class NatZero(BaseExpr):
    SPEC = ()


@dataclass(frozen=True)
class NatSuc(BaseExpr):
    arg: BaseExpr
    SPEC = (("arg", "b", 0, 0),)


@dataclass(frozen=True)
class NatElim(BaseExpr):
    motive: BaseExpr  # under n : Nat
    base: BaseExpr
    step: BaseExpr  # under n : Nat, ih : motive
    scrut: BaseExpr
    SPEC = (
        ("motive", "b", 1, 0),
        ("base", "b", 0, 0),
        ("step", "b", 2, 0),
        ("scrut", "b", 0, 0),
    )


@dataclass(frozen=True)
class BPi(BaseExpr):
    dom: BaseExpr
    cod: BaseExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("dom", "b", 0, 0), ("cod", "b", 1, 0))


@dataclass(frozen=True)
class BLam(BaseExpr):
    body: BaseExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("body", "b", 1, 0),)


@dataclass(frozen=True)
class BApp(BaseExpr):
    fn: BaseExpr
    arg: BaseExpr
    SPEC = (("fn", "b", 0, 0), ("arg", "b", 0, 0))


@dataclass(frozen=True)
class BFunext(BaseExpr):
    """funext(x.p) for base Pi types; check-only."""

    body: BaseExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("body", "b", 1, 0),)


@dataclass(frozen=True)
class BFunextH(BaseExpr):
    path: BaseExpr
    SPEC = (("path", "b", 0, 0),)


@dataclass(frozen=True)
class BFunextHP(BaseExpr):
    body: BaseExpr
    arg: BaseExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("body", "b", 1, 0), ("arg", "b", 0, 0))


@dataclass(frozen=True)
class BPushout(BaseExpr):
    """Base pushout of spans given as open terms x:K |- f : I, x:K |- g : J."""

    kty: BaseExpr
    ity: BaseExpr
    jty: BaseExpr
    f: BaseExpr
    g: BaseExpr
    hint: str = field(default="_", compare=False)
    SPEC = (
        ("kty", "b", 0, 0),
        ("ity", "b", 0, 0),
        ("jty", "b", 0, 0),
        ("f", "b", 1, 0),
        ("g", "b", 1, 0),
    )


@dataclass(frozen=True)
class PoInl(BaseExpr):
    arg: BaseExpr
    SPEC = (("arg", "b", 0, 0),)


@dataclass(frozen=True)
class PoInr(BaseExpr):
    arg: BaseExpr
    SPEC = (("arg", "b", 0, 0),)


@dataclass(frozen=True)
class PoGlue(BaseExpr):
    arg: BaseExpr
    SPEC = (("arg", "b", 0, 0),)


@dataclass(frozen=True)
class PoElim(BaseExpr):
    motive: BaseExpr  # under w : pushout
    onl: BaseExpr  # under i : I
    onr: BaseExpr  # under j : J
    ong: BaseExpr  # under k : K
    scrut: BaseExpr
    SPEC = (
        ("motive", "b", 1, 0),
        ("onl", "b", 1, 0),
        ("onr", "b", 1, 0),
        ("ong", "b", 1, 0),
        ("scrut", "b", 0, 0),
    )


@dataclass(frozen=True)
class PoElimGlue(BaseExpr):
    """Propositional computation of PoElim over glue, at a point of K."""

    po: BaseExpr
    motive: BaseExpr
    onl: BaseExpr
    onr: BaseExpr
    ong: BaseExpr
    arg: BaseExpr
    SPEC = (
        ("po", "b", 0, 0),
        ("motive", "b", 1, 0),
        ("onl", "b", 1, 0),
        ("onr", "b", 1, 0),
        ("ong", "b", 1, 0),
        ("arg", "b", 0, 0),
    )


@dataclass(frozen=True)
class BAnn(BaseExpr):
    """Type ascription (e : T)."""

    term: BaseExpr
    ty: BaseExpr
    SPEC = (("term", "b", 0, 0), ("ty", "b", 0, 0))


@dataclass(frozen=True)
class Hom(BaseExpr):
    """Hom(tele. body): base type of indexed morphisms."""

    tele: ITelescope
    body: IndexedExpr
    SPEC = (("tele", "ti!", 0, 0), ("body", "i!", 0, ("len", "tele", 0)))


@dataclass(frozen=True)
class HomLam(BaseExpr):
    tele: ITelescope
    body: IndexedExpr
    SPEC = (("tele", "ti!", 0, 0), ("body", "i!", 0, ("len", "tele", 0)))


@dataclass(frozen=True)
class IdExt(BaseExpr):
    """Idext(tele. p): extensionality intro for indexed identity types."""

    tele: ITelescope
    body: IndexedExpr
    SPEC = (("tele", "ti!", 0, 0), ("body", "i!", 0, ("len", "tele", 0)))


@dataclass(frozen=True)
class HapHP(BaseExpr):
    """hap_h'(p) : Id(Idext(x. hap(p, x)), p)."""

    path: BaseExpr
    SPEC = (("path", "b", 0, 0),)


@dataclass(frozen=True)
class UExt(BaseExpr):
    """External universe of codes for indexed types over tele."""

    tele: ITelescope
    SPEC = (("tele", "ti!", 0, 0),)


@dataclass(frozen=True)
class UCode(BaseExpr):
    """Code of an indexed family in the external universe."""

    tele: ITelescope
    fam: IndexedExpr
    SPEC = (("tele", "ti!", 0, 0), ("fam", "i!", 0, ("len", "tele", 0)))


@dataclass(frozen=True)
class FibT(BaseExpr):
    """Fib(tele. fam): the fibrancy predicate as a single base type."""

    tele: ITelescope
    fam: IndexedExpr
    SPEC = (("tele", "ti!", 0, 0), ("fam", "i!", 0, ("len", "tele", 0)))


@dataclass(frozen=True)
class FibFp(BaseExpr):
    """fp(tele. A) : Fib(tele. El(A)) for a fibrant-sort A."""

    tele: ITelescope
    fam: FibExpr
    SPEC = (("tele", "ti!", 0, 0), ("fam", "f!", 0, ("len", "tele", 0)))


# -- indexed level -----------------------------------------------------------


@dataclass(frozen=True)
class IVar(IndexedExpr):
    ix: int
    SPEC = (("ix", "x", 0, 0),)


@dataclass(frozen=True)
class IConst(IndexedExpr):
    name: str
    bargs: tuple = ()
    iargs: tuple = ()
    unstable: bool = False
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    SPEC = (
        ("name", "x", 0, 0),
        ("bargs", "bs", 0, 0),
        ("iargs", "is", 0, 0),
        ("unstable", "x", 0, 0),
    )


@dataclass(frozen=True)
class ITConst(IndexedExpr):
    name: str
    bargs: tuple = ()
    iargs: tuple = ()
    unstable: bool = False
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    SPEC = (
        ("name", "x", 0, 0),
        ("bargs", "bs", 0, 0),
        ("iargs", "is", 0, 0),
        ("unstable", "x", 0, 0),
    )


@dataclass(frozen=True)
class IAnn(IndexedExpr):
    """Type ascription (e : T)."""

    term: IndexedExpr
    ty: IndexedExpr
    SPEC = (("term", "i", 0, 0), ("ty", "i", 0, 0))


@dataclass(frozen=True)
class HomApp(IndexedExpr):
    """Application f a1 ... ak of a base Hom-term to indexed arguments."""

    fn: BaseExpr
    args: tuple
    SPEC = (("fn", "b", 0, 0), ("args", "is", 0, 0))


@dataclass(frozen=True)
class IHap(IndexedExpr):
    """hap(p, a1 ... ak): pointwise application of a Hom-homotopy.

    Derived from the base identity eliminator; it computes on refl.
    """

    path: BaseExpr
    args: tuple
    SPEC = (("path", "b", 0, 0), ("args", "is", 0, 0))


@dataclass(frozen=True)
class IHapH(IndexedExpr):
    """hap_h(tele. p, args): the extensional-identity computation witness."""

    tele: ITelescope
    body: IndexedExpr
    args: tuple
    SPEC = (
        ("tele", "ti!", 0, 0),
        ("body", "i!", 0, ("len", "tele", 0)),
        ("args", "is", 0, 0),
    )


@dataclass(frozen=True)
class ISigma(IndexedExpr):
    fst: IndexedExpr
    snd: IndexedExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("fst", "i", 0, 0), ("snd", "i", 0, 1))


@dataclass(frozen=True)
class IPair(IndexedExpr):
    fst: IndexedExpr
    snd: IndexedExpr
    SPEC = (("fst", "i", 0, 0), ("snd", "i", 0, 0))


@dataclass(frozen=True)
class IFst(IndexedExpr):
    pair: IndexedExpr
    SPEC = (("pair", "i", 0, 0),)


@dataclass(frozen=True)
class ISnd(IndexedExpr):
    pair: IndexedExpr
    SPEC = (("pair", "i", 0, 0),)


@dataclass(frozen=True)
class IId(IndexedExpr):
    ty: IndexedExpr
    lhs: IndexedExpr
    rhs: IndexedExpr
    SPEC = (("ty", "i", 0, 0), ("lhs", "i", 0, 0), ("rhs", "i", 0, 0))


@dataclass(frozen=True)
class IRefl(IndexedExpr):
    arg: IndexedExpr
    SPEC = (("arg", "i", 0, 0),)


@dataclass(frozen=True)
class IJ(IndexedExpr):
    """Eliminator for indexed identity types (motive binds x and p)."""

    a: IndexedExpr
    motive: IndexedExpr
    branch: IndexedExpr
    a2: IndexedExpr
    path: IndexedExpr
    SPEC = (
        ("a", "i", 0, 0),
        ("motive", "i", 0, 2),
        ("branch", "i", 0, 0),
        ("a2", "i", 0, 0),
        ("path", "i", 0, 0),
    )


@dataclass(frozen=True)
class JBI(IndexedExpr):
    """Base identity eliminated into the indexed level.

    motive lives over (Gamma, x : A, p : Id(a, x), dtele | etele) where etele
    opens a fresh indexed scope; branch over (Gamma, dtele[a, refl] |
    etele[a, refl]); dargs/eargs instantiate the telescopes at (a2, path).
    """

    a: BaseExpr
    dtele: Telescope
    etele: ITelescope
    motive: IndexedExpr
    branch: IndexedExpr
    a2: BaseExpr
    path: BaseExpr
    dargs: tuple = ()
    eargs: tuple = ()
    SPEC = (
        ("a", "b", 0, 0),
        ("dtele", "tb", 2, 0),
        ("etele", "ti!", ("len", "dtele", 2), 0),
        ("motive", "i!", ("len", "dtele", 2), ("len", "etele", 0)),
        ("branch", "i!", ("len", "dtele", 0), ("len", "etele", 0)),
        ("a2", "b", 0, 0),
        ("path", "b", 0, 0),
        ("dargs", "bs", 0, 0),
        ("eargs", "is", 0, 0),
    )


@dataclass(frozen=True)
class IUnit(IndexedExpr):
    SPEC = ()


@dataclass(frozen=True)
class ITT(IndexedExpr):
    SPEC = ()


@dataclass(frozen=True)
class IFun(IndexedExpr):
    dom: IndexedExpr
    cod: IndexedExpr
    SPEC = (("dom", "i", 0, 0), ("cod", "i", 0, 0))


@dataclass(frozen=True)
class ILam(IndexedExpr):
    body: IndexedExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("body", "i", 0, 1),)


@dataclass(frozen=True)
class IApp(IndexedExpr):
    fn: IndexedExpr
    arg: IndexedExpr
    SPEC = (("fn", "i", 0, 0), ("arg", "i", 0, 0))


@dataclass(frozen=True)
class IPi(IndexedExpr):
    dom: IndexedExpr
    cod: IndexedExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("dom", "i", 0, 0), ("cod", "i", 0, 1))


@dataclass(frozen=True)
class IPiLam(IndexedExpr):
    body: IndexedExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("body", "i", 0, 1),)


@dataclass(frozen=True)
class IPiApp(IndexedExpr):
    fn: IndexedExpr
    arg: IndexedExpr
    SPEC = (("fn", "i", 0, 0), ("arg", "i", 0, 0))


@dataclass(frozen=True)
class IPiBeta(IndexedExpr):
    """beta(x.b, a) : Id((lam x.b) a, b[a/x]); primitive for weak Pi."""

    body: IndexedExpr
    arg: IndexedExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("body", "i", 0, 1), ("arg", "i", 0, 0))


@dataclass(frozen=True)
class IPiEta(IndexedExpr):
    fn: IndexedExpr
    SPEC = (("fn", "i", 0, 0),)


@dataclass(frozen=True)
class IProd(IndexedExpr):
    """Product over a base index type: prod_{i : ity} fam."""

    ity: BaseExpr
    fam: IndexedExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("ity", "b", 0, 0), ("fam", "i", 1, 0))


@dataclass(frozen=True)
class IPabs(IndexedExpr):
    body: IndexedExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("body", "i", 1, 0),)


@dataclass(frozen=True)
class IPApp(IndexedExpr):
    fn: IndexedExpr
    idx: BaseExpr
    SPEC = (("fn", "i", 0, 0), ("idx", "b", 0, 0))


@dataclass(frozen=True)
class IProdBeta(IndexedExpr):
    body: IndexedExpr
    idx: BaseExpr
    hint: str = field(default="_", compare=False)
    SPEC = (("body", "i", 1, 0), ("idx", "b", 0, 0))


@dataclass(frozen=True)
class IProdEta(IndexedExpr):
    fn: IndexedExpr
    SPEC = (("fn", "i", 0, 0),)


@dataclass(frozen=True)
class ICoprod(IndexedExpr):
    """Dependent coproduct former; unstable unless the stable flag is set."""

    ity: BaseExpr
    fam: IndexedExpr
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    hint: str = field(default="_", compare=False)
    SPEC = (("ity", "b", 0, 0), ("fam", "i", 1, 0))
    UNSTABLE = "coprod"


@dataclass(frozen=True)
class IIn(IndexedExpr):
    """in_j(x) applied to a point: the unstable coproduct constructor."""

    idx: BaseExpr
    arg: IndexedExpr
    ps: Optional["Sub"] = None
    SPEC = (("idx", "b", 0, 0), ("arg", "i", 0, 0))
    UNSTABLE = "always"
    FLOW = ("arg",)
    CTOR = True


@dataclass(frozen=True)
class ICoPair(IndexedExpr):
    """(j, b): the stable coproduct constructor."""

    idx: BaseExpr
    arg: IndexedExpr
    SPEC = (("idx", "b", 0, 0), ("arg", "i", 0, 0))


@dataclass(frozen=True)
class ICoElim(IndexedExpr):
    motive: IndexedExpr  # under z : coprod
    branch: IndexedExpr  # under base i : I, indexed x : fam
    scrut: IndexedExpr
    SPEC = (("motive", "i", 0, 1), ("branch", "i", 1, 1), ("scrut", "i", 0, 0))


@dataclass(frozen=True)
class ICoElimL(IndexedExpr):
    """Local coproduct eliminator (requires the stable flag); unstable."""

    etele: ITelescope  # over Delta, z : coprod
    motive: IndexedExpr  # under z, etele
    branch: IndexedExpr  # under base i, indexed x, etele[(i,x)/z]
    scrut: IndexedExpr
    eargs: tuple = ()
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    SPEC = (
        ("etele", "ti", 0, 1),
        ("motive", "i", 0, ("len", "etele", 1)),
        ("branch", "i", 1, ("len", "etele", 1)),
        ("scrut", "i", 0, 0),
        ("eargs", "is", 0, 0),
    )
    UNSTABLE = "always"
    FLOW = ("scrut", "eargs")


@dataclass(frozen=True)
class IZero(IndexedExpr):
    SPEC = ()


@dataclass(frozen=True)
class IZeroElim(IndexedExpr):
    motive: IndexedExpr  # under x : 0
    scrut: IndexedExpr
    SPEC = (("motive", "i", 0, 1), ("scrut", "i", 0, 0))


@dataclass(frozen=True)
class IZeroElimP(IndexedExpr):
    """0-elim'(D, a): unstable eliminator with no binding."""

    ty: IndexedExpr
    scrut: IndexedExpr
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    SPEC = (("ty", "i", 0, 0), ("scrut", "i", 0, 0))
    UNSTABLE = "always"


@dataclass(frozen=True)
class IZeroElimPP(IndexedExpr):
    """0-elim''(x E. D, a): unstable eliminator with a trailing telescope."""

    etele: ITelescope  # over Delta, x : 0
    motive: IndexedExpr  # under x : 0, etele
    scrut: IndexedExpr
    eargs: tuple = ()
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    SPEC = (
        ("etele", "ti", 0, 1),
        ("motive", "i", 0, ("len", "etele", 1)),
        ("scrut", "i", 0, 0),
        ("eargs", "is", 0, 0),
    )
    UNSTABLE = "always"
    FLOW = ("scrut", "eargs")


@dataclass(frozen=True)
class IPushout(IndexedExpr):
    """Dependent pushout former over indexed function terms f, g."""

    aty: IndexedExpr
    bty: IndexedExpr
    cty: IndexedExpr
    f: IndexedExpr
    g: IndexedExpr
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    SPEC = (
        ("aty", "i", 0, 0),
        ("bty", "i", 0, 0),
        ("cty", "i", 0, 0),
        ("f", "i", 0, 0),
        ("g", "i", 0, 0),
    )
    UNSTABLE = "pushout"


@dataclass(frozen=True)
class IInl(IndexedExpr):
    arg: IndexedExpr
    ps: Optional["Sub"] = None
    SPEC = (("arg", "i", 0, 0),)
    UNSTABLE = "pushout"
    FLOW = ("arg",)
    CTOR = True


@dataclass(frozen=True)
class IInr(IndexedExpr):
    arg: IndexedExpr
    ps: Optional["Sub"] = None
    SPEC = (("arg", "i", 0, 0),)
    UNSTABLE = "pushout"
    FLOW = ("arg",)
    CTOR = True


@dataclass(frozen=True)
class IGlue(IndexedExpr):
    arg: IndexedExpr
    ps: Optional["Sub"] = None
    SPEC = (("arg", "i", 0, 0),)
    UNSTABLE = "pushout"
    FLOW = ("arg",)
    CTOR = True


@dataclass(frozen=True)
class IPoElim(IndexedExpr):
    motive: IndexedExpr  # under w : pushout
    onl: IndexedExpr  # under y : B
    onr: IndexedExpr  # under z : C
    ong: IndexedExpr  # under x : A
    scrut: IndexedExpr
    SPEC = (
        ("motive", "i", 0, 1),
        ("onl", "i", 0, 1),
        ("onr", "i", 0, 1),
        ("ong", "i", 0, 1),
        ("scrut", "i", 0, 0),
    )


def _poh_spec():
    return (
        ("po", "i", 0, 0),
        ("motive", "i", 0, 1),
        ("onl", "i", 0, 1),
        ("onr", "i", 0, 1),
        ("ong", "i", 0, 1),
        ("arg", "i", 0, 0),
    )


@dataclass(frozen=True)
class IPoH1(IndexedExpr):
    """h1(b): propositional computation of the pushout eliminator at inl."""

    po: IndexedExpr
    motive: IndexedExpr
    onl: IndexedExpr
    onr: IndexedExpr
    ong: IndexedExpr
    arg: IndexedExpr
    SPEC = _poh_spec()


@dataclass(frozen=True)
class IPoH2(IndexedExpr):
    po: IndexedExpr
    motive: IndexedExpr
    onl: IndexedExpr
    onr: IndexedExpr
    ong: IndexedExpr
    arg: IndexedExpr
    SPEC = _poh_spec()


@dataclass(frozen=True)
class IPoH3(IndexedExpr):
    po: IndexedExpr
    motive: IndexedExpr
    onl: IndexedExpr
    onr: IndexedExpr
    ong: IndexedExpr
    arg: IndexedExpr
    SPEC = _poh_spec()


@dataclass(frozen=True)
class IUniv(IndexedExpr):
    SPEC = ()


@dataclass(frozen=True)
class IEl(IndexedExpr):
    code: IndexedExpr
    SPEC = (("code", "i", 0, 0),)


@dataclass(frozen=True)
class IUa(IndexedExpr):
    """ua(c, c', e) : Id(U, c, c') from equivalence data e."""

    c1: IndexedExpr
    c2: IndexedExpr
    ev: IndexedExpr
    SPEC = (("c1", "i", 0, 0), ("c2", "i", 0, 0), ("ev", "i", 0, 0))


@dataclass(frozen=True)
class IUaH(IndexedExpr):
    """ua_h(c, c', e) : Id(Equiv(El c, El c'), idtoequiv(ua(e)), e)."""

    c1: IndexedExpr
    c2: IndexedExpr
    ev: IndexedExpr
    SPEC = (("c1", "i", 0, 0), ("c2", "i", 0, 0), ("ev", "i", 0, 0))


@dataclass(frozen=True)
class ElExt(IndexedExpr):
    """El of an external-universe code (a base term)."""

    code: BaseExpr
    SPEC = (("code", "b", 0, 0),)


@dataclass(frozen=True)
class FibEl(IndexedExpr):
    """El coercion from the fibrant sort to indexed types."""

    fib: FibExpr
    SPEC = (("fib", "f", 0, 0),)


@dataclass(frozen=True)
class IMEta(IndexedExpr):
    """eta_A(x) applied to a point: the unstable modal unit."""

    aty: IndexedExpr
    arg: IndexedExpr
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    SPEC = (("aty", "i", 0, 0), ("arg", "i", 0, 0))
    UNSTABLE = "always"
    FLOW = ("arg",)


@dataclass(frozen=True)
class IMBar(IndexedExpr):
    """|a|: the stable modal unit."""

    arg: IndexedExpr
    SPEC = (("arg", "i", 0, 0),)


@dataclass(frozen=True)
class ITruncElim(IndexedExpr):
    motive: FibExpr  # under z : El(trunc A); must be fibrant-sort
    branch: IndexedExpr  # under x : A
    scrut: IndexedExpr
    SPEC = (("motive", "f", 0, 1), ("branch", "i", 0, 1), ("scrut", "i", 0, 0))


@dataclass(frozen=True)
class ITruncElimH(IndexedExpr):
    """elim_h: propositional computation of the modal eliminator."""

    motive: FibExpr
    branch: IndexedExpr
    arg: IndexedExpr
    SPEC = (("motive", "f", 0, 1), ("branch", "i", 0, 1), ("arg", "i", 0, 0))


@dataclass(frozen=True)
class ITruncElimL(IndexedExpr):
    """Local modal eliminator (stable modalities only); unstable."""

    etele: ITelescope
    motive: FibExpr
    branch: IndexedExpr
    scrut: IndexedExpr
    eargs: tuple = ()
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    SPEC = (
        ("etele", "ti", 0, 1),
        ("motive", "f", 0, ("len", "etele", 1)),
        ("branch", "i", 0, ("len", "etele", 1)),
        ("scrut", "i", 0, 0),
        ("eargs", "is", 0, 0),
    )
    UNSTABLE = "always"
    FLOW = ("scrut", "eargs")


@dataclass(frozen=True)
class ITruncElimLH(IndexedExpr):
    etele: ITelescope
    motive: FibExpr
    branch: IndexedExpr
    arg: IndexedExpr
    eargs: tuple = ()
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    SPEC = (
        ("etele", "ti", 0, 1),
        ("motive", "f", 0, ("len", "etele", 1)),
        ("branch", "i", 0, ("len", "etele", 1)),
        ("arg", "i", 0, 0),
        ("eargs", "is", 0, 0),
    )
    UNSTABLE = "always"
    FLOW = ("arg", "eargs")


# -- fibrant sort ------------------------------------------------------------


@dataclass(frozen=True)
class Trunc(FibExpr):
    """|| A ||: the modal reflection, a fibrant-sort type."""

    body: IndexedExpr
    ps: Optional["Sub"] = None
    pt: Optional["Sub"] = None
    SPEC = (("body", "i", 0, 0),)
    UNSTABLE = "modality"


@dataclass(frozen=True)
class FibRf(FibExpr):
    """rf(tele. A, p, args): reflect a proven-fibrant family into the sort."""

    tele: ITelescope
    fam: IndexedExpr
    fw: BaseExpr
    args: tuple = ()
    SPEC = (
        ("tele", "ti!", 0, 0),
        ("fam", "i!", 0, ("len", "tele", 0)),
        ("fw", "b", 0, 0),
        ("args", "is", 0, 0),
    )


# ---------------------------------------------------------------------------
# Parallel substitutions


@dataclass(frozen=True)
class Sub:
    """var k -> entries[k] if k < len(entries) else var(k - len(entries) + tail)."""

    entries: tuple
    tail: int

    def is_identity(self) -> bool:
        if self.tail != len(self.entries):
            return self.tail == 0 and not self.entries
        return all(_var_ix(e) == k for k, e in enumerate(self.entries))

    def is_renaming(self) -> bool:
        return all(_var_ix(e) is not None for e in self.entries)


def _var_ix(e):
    if isinstance(e, (BVar, IVar)):
        return e.ix
    return None


def sub_id() -> Sub:
    return Sub((), 0)


def sub_of(*entries) -> Sub:
    """Substitution replacing the innermost len(entries) variables.

    entries[0] replaces var 0 (the innermost binder).
    """
    return Sub(tuple(entries), 0)


def sub_weaken(n: int, cutoff: int = 0, base: bool = True) -> Sub:
    mk = BVar if base else IVar
    return Sub(tuple(mk(k) for k in range(cutoff)), cutoff + n)


def sub_lookup(s: Sub, k: int, base: bool):
    if k < len(s.entries):
        return s.entries[k]
    return (BVar if base else IVar)(k - len(s.entries) + s.tail)


class _SubstOps:
    """Bundles the per-sort operations a Sub needs over its entries."""

    def __init__(self, base: bool, stability: "Stability"):
        self.base = base
        self.stability = stability


@dataclass(frozen=True)
class Stability:
    """Which configurable constructions are unstable under reindexing."""

    coprod_unstable: bool = True
    pushout_unstable: bool = True
    modality_unstable: bool = True

    def head_unstable(self, node: Expr) -> bool:
        if isinstance(node, (IConst, ITConst)):
            return node.unstable
        tag = type(node).UNSTABLE
        if tag is None:
            return False
        if tag == "always":
            return True
        if tag == "coprod":
            return self.coprod_unstable
        if tag == "pushout":
            return self.pushout_unstable
        if tag == "modality":
            return self.modality_unstable
        raise AssertionError(tag)


FULLY_STABLE = Stability(False, False, False)
FULLY_UNSTABLE = Stability(True, True, True)


def _lift(s: Sub, n: int, base: bool, stability: Stability) -> Sub:
    """Push a substitution under n binders of its own sort."""
    if n == 0 or s.is_identity():
        return s
    mk = BVar if base else IVar
    shifted = tuple(
        _shift(e, base, n, 0, stability) for e in s.entries
    )
    return Sub(tuple(mk(k) for k in range(n)) + shifted, s.tail + n)


def _shift_entries_base(s: Sub, n: int, stability: Stability) -> Sub:
    """Apply a base shift to the entries of an indexed-sort substitution."""
    return Sub(tuple(_shift(e, True, n, 0, stability) for e in s.entries), s.tail)


def sub_compose(f: Sub, g: Sub, base: bool, stability: Stability = FULLY_UNSTABLE) -> Sub:
    """The substitution applying f, then g."""
    if f.is_identity():
        return g
    if g.is_identity():
        return f
    nf, tf = len(f.entries), f.tail
    ng = len(g.entries)
    k_hi = max(nf, nf + ng - tf)
    entries = []
    for k in range(k_hi):
        if k < nf:
            entries.append(_subst(f.entries[k], g, base, stability))
        else:
            entries.append(sub_lookup(g, k - nf + tf, base))
    tail = k_hi - nf + tf - ng + g.tail
    out = Sub(tuple(entries), tail)
    return sub_id() if out.is_identity() else out


def sub_apply_base_to_idx_entries(t: Sub, sigma: Sub, stability: Stability) -> Sub:
    """Apply a base substitution inside the entries of an indexed Sub."""
    return Sub(
        tuple(_subst(e, sigma, True, stability) for e in t.entries), t.tail
    )


# ---------------------------------------------------------------------------
# The generic traversal engine


def _walk_fields(node: Expr) -> Iterator[tuple]:
    for spec in type(node).SPEC:
        yield spec


def _rebuild(node: Expr, updates: dict) -> Expr:
    return replace(node, **updates) if updates else node


def _apply_to_field(val, kind, db, di, fn_b, fn_i, fn_f, node):
    """Apply per-sort callbacks (taking extra (db, di)) to one field."""
    db = _len_of(node, db)
    di = _len_of(node, di)
    if kind == "x":
        return val
    if kind == "b":
        return fn_b(val, db, di) if fn_b else val
    if kind in ("i", "i!"):
        return fn_i(val, db, di, kind == "i!") if fn_i else val
    if kind in ("f", "f!"):
        return fn_f(val, db, di, kind == "f!") if fn_f else val
    if kind == "bs":
        if not fn_b:
            return val
        return tuple(fn_b(v, db, di) for v in val)
    if kind == "is":
        if not fn_i:
            return val
        return tuple(fn_i(v, db, di, False) for v in val)
    if kind == "tb":
        if not fn_b:
            return val
        return tuple(
            TEntry(fn_b(ent.ty, db + k, di), ent.hint) for k, ent in enumerate(val)
        )
    if kind in ("ti", "ti!"):
        if not fn_i:
            return val
        fresh = kind == "ti!"
        return tuple(
            TEntry(fn_i(ent.ty, db, (0 if fresh else di) + k, fresh), ent.hint)
            for k, ent in enumerate(val)
        )
    raise AssertionError(kind)


def _map_children(node, fn_b, fn_i, fn_f, only=None, skip=()):
    updates = {}
    for name, kind, db, di in _walk_fields(node):
        if only is not None and name not in only:
            continue
        if name in skip:
            continue
        val = getattr(node, name)
        new = _apply_to_field(val, kind, db, di, fn_b, fn_i, fn_f, node)
        if new is not val and new != val:
            updates[name] = new
    return _rebuild(node, updates)


# -- base substitution -------------------------------------------------------


def _subst(e, s: Sub, base: bool, stability: Stability):
    """Dispatch: substitute a substitution of sort `base` into e."""
    if base:
        return _subst_base(e, s, stability)
    return _subst_idx(e, s, stability)


def _subst_base(e: Expr, s: Sub, stability: Stability) -> Expr:
    if s.is_identity():
        return e
    if isinstance(e, BVar):
        return sub_lookup(s, e.ix, True)
    pending = getattr(e, "ps", None) is not None or getattr(e, "pt", None) is not None
    renaming = s.is_renaming()
    if pending:
        ps = getattr(e, "ps", None) or sub_id()
        new_ps = sub_compose(ps, s, True, stability)
        updates = {"ps": None if new_ps.is_identity() else new_ps}
        pt = getattr(e, "pt", None)
        if pt is not None:
            new_pt = sub_apply_base_to_idx_entries(pt, s, stability)
            updates["pt"] = None if new_pt.is_identity() else new_pt
        node = replace(e, **updates)
        flow = type(e).FLOW
        if flow:
            node = _map_children(
                node,
                lambda v, db, di: _subst_base(v, _lift(s, db, True, stability), stability),
                lambda v, db, di, fresh: _subst_base(
                    v, _lift(s, db, True, stability), stability
                ),
                lambda v, db, di, fresh: _subst_base(
                    v, _lift(s, db, True, stability), stability
                ),
                only=set(flow),
            )
        return node
    if (
        not renaming
        and stability.head_unstable(e)
    ):
        node = replace(e, ps=s)
        flow = type(e).FLOW
        if flow:
            node = _map_children(
                node,
                lambda v, db, di: _subst_base(v, _lift(s, db, True, stability), stability),
                lambda v, db, di, fresh: _subst_base(
                    v, _lift(s, db, True, stability), stability
                ),
                lambda v, db, di, fresh: _subst_base(
                    v, _lift(s, db, True, stability), stability
                ),
                only=set(flow),
            )
        return node
    return _map_children(
        e,
        lambda v, db, di: _subst_base(v, _lift(s, db, True, stability), stability),
        lambda v, db, di, fresh: _subst_base(v, _lift(s, db, True, stability), stability),
        lambda v, db, di, fresh: _subst_base(v, _lift(s, db, True, stability), stability),
    )


def _subst_idx(e: Expr, t: Sub, stability: Stability) -> Expr:
    if t.is_identity():
        return e
    if isinstance(e, IVar):
        return sub_lookup(t, e.ix, False)
    if isinstance(e, BaseExpr):
        # Base subterms never reference the enclosing indexed context.
        return e
    has_ps = getattr(e, "ps", None) is not None
    has_pt = getattr(e, "pt", None) is not None
    ctor = type(e).CTOR
    if has_ps or has_pt:
        if ctor:
            # The head is indexed-closed; only the flow argument is rewritten.
            return _map_children(
                e,
                None,
                lambda v, db, di, fresh: _subst_idx(
                    v, _lift(t, di, False, stability), stability
                ),
                None,
                only=set(type(e).FLOW),
            )
        pt = getattr(e, "pt", None) or sub_id()
        new_pt = sub_compose(pt, t, False, stability)
        node = replace(e, pt=None if new_pt.is_identity() else new_pt)
        flow = type(e).FLOW
        if flow:
            node = _map_children(
                node,
                None,
                lambda v, db, di, fresh: _subst_idx(
                    v, _lift(t, di, False, stability), stability
                ),
                lambda v, db, di, fresh: _subst_idx(
                    v, _lift(t, di, False, stability), stability
                ),
                only=set(flow),
            )
        return node
    if stability.head_unstable(e) and not ctor and not t.is_renaming():
        node = replace(e, pt=t)
        flow = type(e).FLOW
        if flow:
            node = _map_children(
                node,
                None,
                lambda v, db, di, fresh: _subst_idx(
                    v, _lift(t, di, False, stability), stability
                ),
                lambda v, db, di, fresh: _subst_idx(
                    v, _lift(t, di, False, stability), stability
                ),
                only=set(flow),
            )
        return node
    return _map_children(
        e,
        None,
        lambda v, db, di, fresh: v
        if fresh
        else _subst_idx(v, _lift(t, di, False, stability), stability),
        lambda v, db, di, fresh: v
        if fresh
        else _subst_idx(v, _lift(t, di, False, stability), stability),
    )


def _shift(e, base: bool, n: int, cutoff: int, stability: Stability):
    """Shift de Bruijn indices of one sort; a pure renaming, so it pushes
    through unstable heads (weakening commutes with every construction)."""
    if n == 0:
        return e
    if base:
        return _shift_base(e, n, cutoff, stability)
    return _shift_idx(e, n, cutoff, stability)


def _shift_base(e: Expr, n: int, cutoff: int, stability: Stability) -> Expr:
    if isinstance(e, BVar):
        return BVar(e.ix + n) if e.ix >= cutoff else e
    updates = {}
    ps = getattr(e, "ps", None)
    if ps is not None:
        new_ps = sub_compose(ps, sub_weaken(n, cutoff, True), True, stability)
        updates["ps"] = None if new_ps.is_identity() else new_ps
    pt = getattr(e, "pt", None)
    if pt is not None:
        updates["pt"] = _shift_entries_base(pt, sub_weaken(n, cutoff, True), stability)
    node = _rebuild(e, updates)
    frozen = set()
    if ps is not None or pt is not None:
        frozen = {
            name
            for name, _, _, _ in _walk_fields(e)
            if name not in type(e).FLOW
        }
    return _map_children(
        node,
        lambda v, db, di: _shift_base(v, n, cutoff + db, stability),
        lambda v, db, di, fresh: _shift_base(v, n, cutoff + db, stability),
        lambda v, db, di, fresh: _shift_base(v, n, cutoff + db, stability),
        skip=frozen,
    )


def _shift_idx(e: Expr, n: int, cutoff: int, stability: Stability) -> Expr:
    if isinstance(e, IVar):
        return IVar(e.ix + n) if e.ix >= cutoff else e
    if isinstance(e, BaseExpr):
        return e
    updates = {}
    pt = getattr(e, "pt", None)
    if pt is not None:
        new_pt = sub_compose(pt, sub_weaken(n, cutoff, False), False, stability)
        updates["pt"] = None if new_pt.is_identity() else new_pt
    node = _rebuild(e, updates)
    ps = getattr(e, "ps", None)
    frozen = set()
    if ps is not None or pt is not None:
        frozen = {
            name for name, _, _, _ in _walk_fields(e) if name not in type(e).FLOW
        }
    return _map_children(
        node,
        None,
        lambda v, db, di, fresh: v if fresh else _shift_idx(v, n, cutoff + di, stability),
        lambda v, db, di, fresh: v if fresh else _shift_idx(v, n, cutoff + di, stability),
        skip=frozen,
    )


# ---------------------------------------------------------------------------
# Public operations


def lift_sub(s: Sub, n: int, base: bool, stability: Stability = FULLY_UNSTABLE) -> Sub:
    """Push a substitution under n binders of its own sort."""
    return _lift(s, n, base, stability)


def subst_base_in_base(e: BaseExpr, s: Sub, stability: Stability = FULLY_UNSTABLE) -> BaseExpr:
    return _subst_base(e, s, stability)


def subst_base_in_indexed(
    e: Union[IndexedExpr, FibExpr], s: Sub, stability: Stability = FULLY_UNSTABLE
):
    return _subst_base(e, s, stability)


def subst_indexed_in_indexed(
    e: Union[IndexedExpr, FibExpr], t: Sub, stability: Stability = FULLY_UNSTABLE
):
    return _subst_idx(e, t, stability)


def shift_base(e, n: int, cutoff: int = 0, stability: Stability = FULLY_UNSTABLE):
    return _shift(e, True, n, cutoff, stability)


def shift_indexed(e, n: int, cutoff: int = 0, stability: Stability = FULLY_UNSTABLE):
    return _shift(e, False, n, cutoff, stability)


def subst1_base(e, arg: BaseExpr, stability: Stability = FULLY_UNSTABLE):
    """Replace base var 0 by arg and pop the binder."""
    return _subst(e, sub_of(arg), True, stability)


def subst1_indexed(e, arg: IndexedExpr, stability: Stability = FULLY_UNSTABLE):
    return _subst(e, sub_of(arg), False, stability)


def spine_sub(args) -> Sub:
    """Substitution instantiating a telescope: args given outermost first."""
    return sub_of(*reversed(tuple(args)))


def force(e: Expr, stability: Stability = FULLY_STABLE) -> Expr:
    """Resolve pending substitutions by pushing them in, recursively.

    Used by the canonical-indexing translation, whose target has no unstable
    constructions; forcing is type-preserving there.
    """
    ps = getattr(e, "ps", None)
    pt = getattr(e, "pt", None)
    if ps is not None or pt is not None:
        bare = replace(e, ps=None) if ps is not None else e
        if pt is not None:
            bare = replace(bare, pt=None)
        # Flow fields already received every substitution; only the frozen
        # head fields still need the pendings pushed through.
        flow = set(type(e).FLOW)
        if ps is not None:
            bare = _subst_with_frozen(bare, ps, True, flow)
        if pt is not None:
            bare = _subst_with_frozen(bare, pt, False, flow)
        e = bare
    return _map_children(
        e,
        lambda v, db, di: force(v, stability),
        lambda v, db, di, fresh: force(v, stability),
        lambda v, db, di, fresh: force(v, stability),
    )


def _subst_with_frozen(node, s: Sub, base: bool, flow: set):
    """Push a pending substitution into the frozen head fields only."""
    if base:
        return _map_children(
            node,
            lambda v, db, di: _subst_base(v, _lift(s, db, True, FULLY_STABLE), FULLY_STABLE),
            lambda v, db, di, fresh: _subst_base(
                v, _lift(s, db, True, FULLY_STABLE), FULLY_STABLE
            ),
            lambda v, db, di, fresh: _subst_base(
                v, _lift(s, db, True, FULLY_STABLE), FULLY_STABLE
            ),
            skip=flow,
        )
    return _map_children(
        node,
        None,
        lambda v, db, di, fresh: v
        if fresh
        else _subst_idx(v, _lift(s, di, False, FULLY_STABLE), FULLY_STABLE),
        lambda v, db, di, fresh: v
        if fresh
        else _subst_idx(v, _lift(s, di, False, FULLY_STABLE), FULLY_STABLE),
        skip=flow,
    )


# ---------------------------------------------------------------------------
# Scope checking


def scope_check(e: Expr, nbase: int, nidx: int) -> None:
    """Raise ScopeError if any de Bruijn index escapes (nbase, nidx).

    Children frozen under a pending substitution are skipped: their indices
    refer to the suspended source context, which is not recorded.
    """
    if isinstance(e, BVar):
        if not (0 <= e.ix < nbase):
            raise ScopeError(f"base variable #{e.ix} out of scope (|ctx| = {nbase})")
        return
    if isinstance(e, IVar):
        if not (0 <= e.ix < nidx):
            raise ScopeError(f"indexed variable #{e.ix} out of scope (|ctx| = {nidx})")
        return
    ps = getattr(e, "ps", None)
    pt = getattr(e, "pt", None)
    skip: set = set()
    if ps is not None or pt is not None:
        skip = {name for name, _, _, _ in _walk_fields(e) if name not in type(e).FLOW}
        for sub in (ps, pt):
            if sub is not None:
                for ent in sub.entries:
                    scope_check(ent, nbase, nidx)
    for name, kind, db, di in _walk_fields(e):
        if name in skip or kind == "x":
            continue
        val = getattr(e, name)
        db = _len_of(e, db)
        di = _len_of(e, di)
        if kind == "b":
            scope_check(val, nbase + db, nidx)
        elif kind == "i":
            scope_check(val, nbase + db, nidx + di)
        elif kind == "f":
            scope_check(val, nbase + db, nidx + di)
        elif kind == "i!" or kind == "f!":
            scope_check(val, nbase + db, di)
        elif kind == "bs":
            for v in val:
                scope_check(v, nbase + db, nidx)
        elif kind == "is":
            for v in val:
                scope_check(v, nbase + db, nidx + di)
        elif kind == "tb":
            for k, ent in enumerate(val):
                scope_check(ent.ty, nbase + db + k, nidx)
        elif kind == "ti":
            for k, ent in enumerate(val):
                scope_check(ent.ty, nbase + db, nidx + di + k)
        elif kind == "ti!":
            for k, ent in enumerate(val):
                scope_check(ent.ty, nbase + db, k)
        else:
            raise AssertionError(kind)


def has_pending(e: Expr) -> bool:
    """True if e contains any suspended-reindexing node."""
    if getattr(e, "ps", None) is not None or getattr(e, "pt", None) is not None:
        return True
    found = False

    def _chk(v, *rest):
        nonlocal found
        if not found and has_pending(v):
            found = True
        return v

    _map_children(e, _chk, lambda v, a, b, c: _chk(v), lambda v, a, b, c: _chk(v))
    return found


def contains_unstable(e: Expr, stability: Stability) -> bool:
    """True if e contains a head that is unstable under this stability."""
    if stability.head_unstable(e):
        return True
    found = False

    def _chk(v, *rest):
        nonlocal found
        if not found and contains_unstable(v, stability):
            found = True
        return v

    _map_children(e, _chk, lambda v, a, b, c: _chk(v), lambda v, a, b, c: _chk(v))
    return found


def tele(*tys, hints=None) -> tuple:
    return tuple(
        TEntry(t, hints[k] if hints else "_") for k, t in enumerate(tys)
    )
