"""Bidirectional checker for the four judgment forms, gated by a feature set.

Judgments: base types, base terms, indexed types, indexed terms (plus the
fibrant sort used by the fibration features).  Introductions check,
eliminators and variables infer.  Definitional equality is type-directed
with eta at Hom, function, Pi, strict-product, Sigma and unit types.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from . import paths
from .syntax import (
    BAnn, BApp, BFunext, BFunextH, BFunextHP, BLam, BPi, BPushout, BVar,
    BaseExpr, Const, ElExt, Empty, EmptyElim, Expr, FibEl, FibExpr, FibFp,
    FibRf, FibT, Fst, Hom, HomApp, HomLam, IAnn, IApp, ICoElim, ICoElimL,
    ICoPair, ICoprod, IConst, IEl, IFst, IFun, IGlue, IHap, IHapH, IId, IIn,
    IInl, IInr, IJ, ILam, IMBar, IMEta, IPApp, IPabs, IPair, IPi, IPiApp,
    IPiBeta, IPiEta, IPiLam, IPoElim, IPoH1, IPoH2, IPoH3, IProd, IProdBeta,
    IProdEta, IPushout, IRefl, ISigma, ISnd, ITConst, ITT, ITruncElim,
    ITruncElimH, ITruncElimL, ITruncElimLH, IUa, IUaH, IUnit, IUniv, IVar,
    IZero, IZeroElim, IZeroElimP, IZeroElimPP, Id, IdExt, IndexedExpr, J, JBI,
    Nat, NatElim, NatSuc, NatZero, PoElim, PoElimGlue, PoGlue, PoInl, PoInr,
    Refl, Sigma, SPair, Snd, Stability, Sub, TConst, TEntry, TT, Trunc, UCode,
    UExt, Unit, lift_sub, scope_check, shift_base, shift_indexed, spine_sub,
    sub_of, subst1_base, subst1_indexed, subst_base_in_base,
    subst_base_in_indexed, subst_indexed_in_indexed, contains_unstable,
)

# ---------------------------------------------------------------------------
# Diagnostics

ERROR_CODES = frozenset(
    {
        "TYPE_MISMATCH",
        "FEATURE_DISABLED",
        "FEATURE_DEPENDENCY",
        "UNKNOWN_FEATURE",
        "UNARY_CONTEXT_TOO_LONG",
        "NOT_FIBRANT",
        "UNIV_CODE_EXPECTED",
        "UNBOUND",
        "CANNOT_INFER",
        "OUT_OF_SCOPE",
        "FUEL_EXHAUSTED",
        "PARSE_ERROR",
        "UNBOUND_NAME",
        "DUPLICATE_NAME",
        "SORT_MISMATCH",
        "UNTRANSLATABLE_FEATURE",
        "MANIFEST_ERROR",
        "CHECK_FAILED",
        "USAGE",
    }
)


@dataclass
class Diagnostic:
    code: str
    message: str
    span: Optional[tuple] = None  # (start offset, end offset) in the source
    expected: Optional[str] = None
    actual: Optional[str] = None
    context: Optional[str] = None

    def __post_init__(self):
        assert self.code in ERROR_CODES, self.code

    def render(self, filename: str = "<input>") -> str:
        loc = ""
        if self.span:
            loc = f":{self.span[0]}-{self.span[1]}"
        parts = [f"{filename}{loc}: error[{self.code}]: {self.message}"]
        if self.expected is not None:
            parts.append(f"  expected: {self.expected}")
        if self.actual is not None:
            parts.append(f"  actual:   {self.actual}")
        if self.context is not None:
            parts.append(f"  in:       {self.context}")
        return "\n".join(parts)


class KernelError(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(diag.message)
        self.diag = diag


def fail(code: str, message: str, **kw):
    raise KernelError(Diagnostic(code, message, **kw))


# ---------------------------------------------------------------------------
# Theory configuration

BASE_FEATURES = frozenset(
    {"base-unit", "base-empty", "base-nat", "base-pi", "base-funext", "base-pushout"}
)
INDEXED_FEATURES = frozenset(
    {
        "hom", "dep-hom", "sigma", "unit", "id", "ext-id", "fun",
        "pi", "pi-weak", "prod", "prod-weak", "dep-prod",
        "coprod", "coprod-stable", "coprod-ext",
        "pushout", "pushout-stable",
        "initial", "initial-stable",
        "universe", "univalence", "fib", "modality", "modality-stable",
    }
)
ALL_FEATURES = BASE_FEATURES | INDEXED_FEATURES

# Features whose rules make sense when indexed contexts have length <= 1.
UNARY_FEATURES = frozenset({"hom", "unit", "prod", "prod-weak"})

FEATURE_DEPS = {
    "base-funext": ("base-pi",),
    "dep-hom": ("hom",),
    "ext-id": ("id", "hom"),
    "pi-weak": ("pi",),
    "prod-weak": ("prod",),
    "dep-prod": ("prod",),
    "coprod-stable": ("coprod",),
    "coprod-ext": ("coprod", "ext-id"),
    "pushout": ("fun", "id"),
    "pushout-stable": ("pushout",),
    "initial-stable": ("initial",),
    "univalence": ("universe", "fun", "sigma", "id"),
    "modality": ("fib",),
    "modality-stable": ("modality",),
}

DEFAULT_FUEL = 10**6


@dataclass(frozen=True)
class TheoryConfig:
    mode: str = "dependent"
    features: frozenset = frozenset()
    fuel: int = DEFAULT_FUEL

    def has(self, f: str) -> bool:
        return f in self.features

    @property
    def unary(self) -> bool:
        return self.mode == "unary"

    def stability(self) -> Stability:
        return Stability(
            coprod_unstable=not self.has("coprod-stable"),
            pushout_unstable=not self.has("pushout-stable"),
            modality_unstable=not self.has("modality-stable"),
        )

    def with_features(self, *fs: str) -> "TheoryConfig":
        return replace(self, features=self.features | frozenset(fs))


MAXIMAL_CONFIG = TheoryConfig(mode="dependent", features=ALL_FEATURES)


def validate_config(cfg: TheoryConfig) -> Optional[Diagnostic]:
    """Return a Diagnostic if the feature set is not dependency-closed."""
    if cfg.mode not in ("unary", "dependent"):
        return Diagnostic("FEATURE_DEPENDENCY", f"unknown mode {cfg.mode!r}")
    for f in cfg.features:
        if f not in ALL_FEATURES:
            return Diagnostic("UNKNOWN_FEATURE", f"unknown feature {f!r}")
    for f in cfg.features:
        for dep in FEATURE_DEPS.get(f, ()):
            if dep not in cfg.features:
                return Diagnostic(
                    "FEATURE_DEPENDENCY", f"feature {f!r} requires {dep!r}"
                )
    if cfg.unary:
        bad = sorted((cfg.features & INDEXED_FEATURES) - UNARY_FEATURES)
        if bad:
            return Diagnostic(
                "FEATURE_DEPENDENCY",
                f"features {bad} need indexed contexts longer than one type "
                "and are only available in dependent mode",
            )
    if cfg.fuel <= 0:
        return Diagnostic("FEATURE_DEPENDENCY", "fuel must be positive")
    return None


# ---------------------------------------------------------------------------
# Signatures and contexts


@dataclass(frozen=True)
class Decl:
    """A checked global declaration."""

    name: str
    btele: tuple  # base telescope
    itele: Optional[tuple]  # None for base-sort declarations
    is_type: bool
    ty: Optional[Expr]  # the declared type (None for type declarations)
    body: Optional[Expr]  # None for postulates
    unstable: bool = False

    @property
    def is_base(self) -> bool:
        return self.itele is None


@dataclass(frozen=True)
class Ctx:
    cfg: TheoryConfig
    sig: Mapping[str, Decl] = field(default_factory=dict)
    gamma: tuple = ()
    delta: tuple = ()
    fuel: tuple = ()  # 1-element list inside a tuple, for a mutable cell

    def __post_init__(self):
        if not self.fuel:
            object.__setattr__(self, "fuel", ([self.cfg.fuel],))

    @property
    def stab(self) -> Stability:
        return self.cfg.stability()

    def spend(self, n: int = 1):
        cell = self.fuel[0]
        cell[0] -= n
        if cell[0] < 0:
            fail("FUEL_EXHAUSTED", "reduction fuel exhausted")

    def bind_base(self, ty: BaseExpr) -> "Ctx":
        return replace(
            self,
            gamma=self.gamma + (ty,),
            delta=tuple(shift_base(t, 1, 0, self.stab) for t in self.delta),
        )

    def bind_idx(self, ty: IndexedExpr) -> "Ctx":
        return replace(self, delta=self.delta + (ty,))

    def with_delta(self, delta: tuple) -> "Ctx":
        return replace(self, delta=tuple(delta))

    def base_ty(self, ix: int) -> BaseExpr:
        if not (0 <= ix < len(self.gamma)):
            fail("UNBOUND", f"base variable #{ix} not in scope")
        return shift_base(self.gamma[-1 - ix], ix + 1, 0, self.stab)

    def idx_ty(self, ix: int) -> IndexedExpr:
        if not (0 <= ix < len(self.delta)):
            fail("UNBOUND", f"indexed variable #{ix} not in scope")
        return shift_indexed(self.delta[-1 - ix], ix + 1, 0, self.stab)


def need(ctx: Ctx, feature: str, what: str):
    if not ctx.cfg.has(feature):
        fail("FEATURE_DISABLED", f"{what} requires feature {feature!r}")


def unary_type_guard(ctx: Ctx):
    if ctx.cfg.unary and len(ctx.delta) != 0:
        fail(
            "UNARY_CONTEXT_TOO_LONG",
            "indexed types are formed in the empty indexed context in unary mode",
        )


def unary_term_guard(ctx: Ctx):
    if ctx.cfg.unary and len(ctx.delta) > 1:
        fail(
            "UNARY_CONTEXT_TOO_LONG",
            "indexed contexts contain at most one type in unary mode",
        )


# ---------------------------------------------------------------------------
# Reduction


def _unfold_const(ctx: Ctx, e):
    d = ctx.sig.get(e.name)
    if d is None or d.body is None:
        return None
    body = d.body
    if isinstance(e, (Const, TConst)):
        out = subst_base_in_base(body, spine_sub(e.args), ctx.stab)
        if isinstance(e, Const) and e.ps is not None:
            out = subst_base_in_base(out, e.ps, ctx.stab)
        return out
    out = subst_base_in_indexed(body, spine_sub(e.bargs), ctx.stab)
    out = subst_indexed_in_indexed(out, spine_sub(e.iargs), ctx.stab)
    # Unfolding a suspended defined symbol pushes the pendings into the body,
    # where they suspend again at genuinely unstable heads.
    if e.ps is not None:
        out = subst_base_in_indexed(out, e.ps, ctx.stab)
    if e.pt is not None:
        out = subst_indexed_in_indexed(out, e.pt, ctx.stab)
    return out


def _no_pending(e) -> bool:
    return getattr(e, "ps", None) is None and getattr(e, "pt", None) is None


def whnf_base(ctx: Ctx, e: BaseExpr) -> BaseExpr:
    while True:
        ctx.spend()
        if isinstance(e, BAnn):
            e = e.term
            continue
        if isinstance(e, (Const, TConst)):
            nxt = _unfold_const(ctx, e)
            if nxt is None:
                return e
            e = nxt
            continue
        if isinstance(e, BApp):
            fn = whnf_base(ctx, e.fn)
            if isinstance(fn, BLam):
                e = subst1_base(fn.body, e.arg, ctx.stab)
                continue
            return BApp(fn, e.arg)
        if isinstance(e, Fst):
            p = whnf_base(ctx, e.pair)
            if isinstance(p, SPair):
                e = p.fst
                continue
            return Fst(p)
        if isinstance(e, Snd):
            p = whnf_base(ctx, e.pair)
            if isinstance(p, SPair):
                e = p.snd
                continue
            return Snd(p)
        if isinstance(e, J):
            path = whnf_base(ctx, e.path)
            if isinstance(path, Refl):
                e = subst_base_in_base(e.branch, spine_sub(e.args), ctx.stab)
                continue
            return replace(e, path=path)
        if isinstance(e, NatElim):
            s = whnf_base(ctx, e.scrut)
            if isinstance(s, NatZero):
                e = e.base
                continue
            if isinstance(s, NatSuc):
                rec = NatElim(e.motive, e.base, e.step, s.arg)
                e = subst_base_in_base(e.step, sub_of(rec, s.arg), ctx.stab)
                continue
            return replace(e, scrut=s)
        if isinstance(e, PoElim):
            s = whnf_base(ctx, e.scrut)
            if isinstance(s, PoInl):
                e = subst1_base(e.onl, s.arg, ctx.stab)
                continue
            if isinstance(s, PoInr):
                e = subst1_base(e.onr, s.arg, ctx.stab)
                continue
            return replace(e, scrut=s)
        return e


def whnf_indexed(ctx: Ctx, e: IndexedExpr) -> IndexedExpr:
    while True:
        ctx.spend()
        if isinstance(e, IAnn):
            e = e.term
            continue
        if isinstance(e, (IConst, ITConst)):
            nxt = _unfold_const(ctx, e)
            if nxt is None:
                return e
            e = nxt
            continue
        if isinstance(e, HomApp):
            fn = whnf_base(ctx, e.fn)
            if isinstance(fn, HomLam):
                e = subst_indexed_in_indexed(fn.body, spine_sub(e.args), ctx.stab)
                continue
            return HomApp(fn, e.args)
        if isinstance(e, IApp):
            fn = whnf_indexed(ctx, e.fn)
            if isinstance(fn, ILam):
                e = subst1_indexed(fn.body, e.arg, ctx.stab)
                continue
            return IApp(fn, e.arg)
        if isinstance(e, IPiApp):
            fn = whnf_indexed(ctx, e.fn)
            if isinstance(fn, IPiLam) and not ctx.cfg.has("pi-weak"):
                e = subst1_indexed(fn.body, e.arg, ctx.stab)
                continue
            return IPiApp(fn, e.arg)
        if isinstance(e, IPApp):
            fn = whnf_indexed(ctx, e.fn)
            if isinstance(fn, IPabs) and not ctx.cfg.has("prod-weak"):
                e = subst1_base(fn.body, e.idx, ctx.stab)
                continue
            return IPApp(fn, e.idx)
        if isinstance(e, IFst):
            p = whnf_indexed(ctx, e.pair)
            if isinstance(p, IPair):
                e = p.fst
                continue
            return IFst(p)
        if isinstance(e, ISnd):
            p = whnf_indexed(ctx, e.pair)
            if isinstance(p, IPair):
                e = p.snd
                continue
            return ISnd(p)
        if isinstance(e, IJ):
            path = whnf_indexed(ctx, e.path)
            if isinstance(path, IRefl):
                e = e.branch
                continue
            return replace(e, path=path)
        if isinstance(e, JBI):
            path = whnf_base(ctx, e.path)
            if isinstance(path, Refl):
                out = subst_base_in_indexed(e.branch, spine_sub(e.dargs), ctx.stab)
                e = subst_indexed_in_indexed(out, spine_sub(e.eargs), ctx.stab)
                continue
            return replace(e, path=path)
        if isinstance(e, IHap):
            path = whnf_base(ctx, e.path)
            if isinstance(path, Refl):
                e = IRefl(HomApp(path.arg, e.args))
                continue
            return replace(e, path=path)
        if isinstance(e, ICoElim):
            s = whnf_indexed(ctx, e.scrut)
            j, b = _coprod_point(s)
            if j is not None:
                out = subst_base_in_indexed(e.branch, sub_of(j), ctx.stab)
                e = subst_indexed_in_indexed(out, sub_of(b), ctx.stab)
                continue
            return replace(e, scrut=s)
        if isinstance(e, ICoElimL) and _no_pending(e):
            s = whnf_indexed(ctx, e.scrut)
            j, b = _coprod_point(s)
            if j is not None:
                out = subst_base_in_indexed(e.branch, sub_of(j), ctx.stab)
                e = subst_indexed_in_indexed(
                    out, spine_sub((b,) + tuple(e.eargs)), ctx.stab
                )
                continue
            return replace(e, scrut=s)
        if isinstance(e, ElExt):
            code = whnf_base(ctx, e.code)
            if isinstance(code, UCode):
                e = shift_indexed(
                    code.fam, len(ctx.delta) - len(code.tele), 0, ctx.stab
                )
                continue
            return ElExt(code)
        if isinstance(e, FibEl):
            f = whnf_fib(ctx, e.fib)
            if isinstance(f, FibRf):
                e = subst_indexed_in_indexed(f.fam, spine_sub(f.args), ctx.stab)
                continue
            return FibEl(f)
        return e


def _coprod_point(s):
    """Match a coproduct point (j, b) in either constructor discipline."""
    if isinstance(s, ICoPair):
        return s.idx, s.arg
    if isinstance(s, IIn) and s.ps is None:
        return s.idx, s.arg
    return None, None


def whnf_fib(ctx: Ctx, e: FibExpr) -> FibExpr:
    ctx.spend()
    return e


def whnf(ctx: Ctx, e: Expr) -> Expr:
    if isinstance(e, BaseExpr):
        return whnf_base(ctx, e)
    if isinstance(e, IndexedExpr):
        return whnf_indexed(ctx, e)
    return whnf_fib(ctx, e)


# ---------------------------------------------------------------------------
# Conversion (definitional equality)


def _sub_conv(ctx: Ctx, s1: Optional[Sub], s2: Optional[Sub], base: bool) -> bool:
    if (s1 is None) != (s2 is None):
        return False
    if s1 is None:
        return True
    if s1.tail != s2.tail or len(s1.entries) != len(s2.entries):
        return False
    conv = conv_base if base else conv_indexed
    return all(conv(ctx, a, b) for a, b in zip(s1.entries, s2.entries))


def _conv_children(ctx: Ctx, a: Expr, b: Expr) -> bool:
    """Congruence on weak-head-normal forms of the same class."""
    if not _sub_conv(ctx, getattr(a, "ps", None), getattr(b, "ps", None), True):
        return False
    if not _sub_conv(ctx, getattr(a, "pt", None), getattr(b, "pt", None), False):
        return False
    for name, kind, _, _ in type(a).SPEC:
        va, vb = getattr(a, name), getattr(b, name)
        if kind == "x":
            if va != vb:
                return False
        elif kind == "b":
            if not conv_base(ctx, va, vb):
                return False
        elif kind in ("i", "i!"):
            if not conv_indexed(ctx, va, vb):
                return False
        elif kind in ("f", "f!"):
            if not conv_fib(ctx, va, vb):
                return False
        elif kind == "bs":
            if len(va) != len(vb) or not all(
                conv_base(ctx, x, y) for x, y in zip(va, vb)
            ):
                return False
        elif kind == "is":
            if len(va) != len(vb) or not all(
                conv_indexed(ctx, x, y) for x, y in zip(va, vb)
            ):
                return False
        elif kind in ("tb", "ti", "ti!"):
            if len(va) != len(vb):
                return False
            cv = conv_base if kind == "tb" else conv_indexed
            if not all(cv(ctx, x.ty, y.ty) for x, y in zip(va, vb)):
                return False
        else:
            raise AssertionError(kind)
    return True


def conv_base(ctx: Ctx, a: BaseExpr, b: BaseExpr) -> bool:
    if a == b:
        return True
    a = whnf_base(ctx, a)
    b = whnf_base(ctx, b)
    if a == b:
        return True
    if isinstance(a, BLam) and not isinstance(b, BLam):
        return conv_base(
            ctx, a.body, BApp(shift_base(b, 1, 0, ctx.stab), BVar(0))
        )
    if isinstance(b, BLam) and not isinstance(a, BLam):
        return conv_base(
            ctx, BApp(shift_base(a, 1, 0, ctx.stab), BVar(0)), b.body
        )
    if isinstance(a, HomLam) and not isinstance(b, HomLam):
        ctx2 = ctx.with_delta(tuple(ent.ty for ent in a.tele))
        return conv_indexed(ctx2, a.body, HomApp(b, paths.ivars(len(a.tele))))
    if isinstance(b, HomLam) and not isinstance(a, HomLam):
        ctx2 = ctx.with_delta(tuple(ent.ty for ent in b.tele))
        return conv_indexed(ctx2, HomApp(a, paths.ivars(len(b.tele))), b.body)
    if isinstance(a, SPair) and not isinstance(b, SPair):
        return conv_base(ctx, a.fst, Fst(b)) and conv_base(ctx, a.snd, Snd(b))
    if isinstance(b, SPair) and not isinstance(a, SPair):
        return conv_base(ctx, Fst(a), b.fst) and conv_base(ctx, Snd(a), b.snd)
    if type(a) is not type(b):
        return False
    return _conv_children(ctx, a, b)


def conv_indexed(ctx: Ctx, a: IndexedExpr, b: IndexedExpr) -> bool:
    if a == b:
        return True
    a = whnf_indexed(ctx, a)
    b = whnf_indexed(ctx, b)
    if a == b:
        return True
    dummy = ctx.bind_idx(IUnit())
    if isinstance(a, ILam) and not isinstance(b, ILam):
        return conv_indexed(
            dummy, a.body, IApp(shift_indexed(b, 1, 0, ctx.stab), IVar(0))
        )
    if isinstance(b, ILam) and not isinstance(a, ILam):
        return conv_indexed(
            dummy, IApp(shift_indexed(a, 1, 0, ctx.stab), IVar(0)), b.body
        )
    if not ctx.cfg.has("pi-weak"):
        if isinstance(a, IPiLam) and not isinstance(b, IPiLam):
            return conv_indexed(
                dummy, a.body, IPiApp(shift_indexed(b, 1, 0, ctx.stab), IVar(0))
            )
        if isinstance(b, IPiLam) and not isinstance(a, IPiLam):
            return conv_indexed(
                dummy, IPiApp(shift_indexed(a, 1, 0, ctx.stab), IVar(0)), b.body
            )
    if not ctx.cfg.has("prod-weak"):
        if isinstance(a, IPabs) and not isinstance(b, IPabs):
            return conv_indexed(
                ctx.bind_base(Unit()), a.body,
                IPApp(shift_base(b, 1, 0, ctx.stab), BVar(0)),
            )
        if isinstance(b, IPabs) and not isinstance(a, IPabs):
            return conv_indexed(
                ctx.bind_base(Unit()),
                IPApp(shift_base(a, 1, 0, ctx.stab), BVar(0)), b.body,
            )
    if isinstance(a, IPair) and not isinstance(b, IPair):
        return conv_indexed(ctx, a.fst, IFst(b)) and conv_indexed(
            ctx, a.snd, ISnd(b)
        )
    if isinstance(b, IPair) and not isinstance(a, IPair):
        return conv_indexed(ctx, IFst(a), b.fst) and conv_indexed(
            ctx, ISnd(a), b.snd
        )
    if type(a) is not type(b):
        return False
    return _conv_children(ctx, a, b)


def conv_fib(ctx: Ctx, a: FibExpr, b: FibExpr) -> bool:
    if a == b:
        return True
    a = whnf_fib(ctx, a)
    b = whnf_fib(ctx, b)
    if type(a) is not type(b):
        return False
    return _conv_children(ctx, a, b)


def conv_type(ctx: Ctx, a: Expr, b: Expr) -> bool:
    if isinstance(a, BaseExpr) and isinstance(b, BaseExpr):
        return conv_base(ctx, a, b)
    if isinstance(a, IndexedExpr) and isinstance(b, IndexedExpr):
        return conv_indexed(ctx, a, b)
    if isinstance(a, FibExpr) and isinstance(b, FibExpr):
        return conv_fib(ctx, a, b)
    return False


def def_eq_base(ctx: Ctx, a: BaseExpr, b: BaseExpr, ty: BaseExpr) -> bool:
    """Type-directed equality for base terms checked against ty."""
    t = whnf_base(ctx, ty)
    if isinstance(t, Unit):
        return True
    if isinstance(t, BPi):
        ctx2 = ctx.bind_base(t.dom)
        return def_eq_base(
            ctx2,
            BApp(shift_base(a, 1, 0, ctx.stab), BVar(0)),
            BApp(shift_base(b, 1, 0, ctx.stab), BVar(0)),
            t.cod,
        )
    if isinstance(t, Hom):
        ctx2 = ctx.with_delta(tuple(ent.ty for ent in t.tele))
        n = len(t.tele)
        return def_eq_indexed(
            ctx2, HomApp(a, paths.ivars(n)), HomApp(b, paths.ivars(n)), t.body
        )
    if isinstance(t, Sigma):
        if not def_eq_base(ctx, Fst(a), Fst(b), t.fst):
            return False
        return def_eq_base(
            ctx, Snd(a), Snd(b), subst1_base(t.snd, Fst(a), ctx.stab)
        )
    return conv_base(ctx, a, b)


def def_eq_indexed(ctx: Ctx, a: IndexedExpr, b: IndexedExpr, ty: IndexedExpr) -> bool:
    t = whnf_indexed(ctx, ty)
    if isinstance(t, IUnit):
        return True
    if isinstance(t, IFun):
        ctx2 = ctx.bind_idx(t.dom)
        sh = lambda x: shift_indexed(x, 1, 0, ctx.stab)
        return def_eq_indexed(
            ctx2, IApp(sh(a), IVar(0)), IApp(sh(b), IVar(0)), sh(t.cod)
        )
    if isinstance(t, IPi) and not ctx.cfg.has("pi-weak"):
        ctx2 = ctx.bind_idx(t.dom)
        sh = lambda x: shift_indexed(x, 1, 0, ctx.stab)
        return def_eq_indexed(
            ctx2, IPiApp(sh(a), IVar(0)), IPiApp(sh(b), IVar(0)), t.cod
        )
    if isinstance(t, IProd) and not ctx.cfg.has("prod-weak"):
        ctx2 = ctx.bind_base(t.ity)
        shb = lambda x: shift_base(x, 1, 0, ctx.stab)
        return def_eq_indexed(
            ctx2, IPApp(shb(a), BVar(0)), IPApp(shb(b), BVar(0)), t.fam
        )
    if isinstance(t, ISigma):
        if not def_eq_indexed(ctx, IFst(a), IFst(b), t.fst):
            return False
        return def_eq_indexed(
            ctx, ISnd(a), ISnd(b), subst1_indexed(t.snd, IFst(a), ctx.stab)
        )
    return conv_indexed(ctx, a, b)


def def_eq(ctx: Ctx, a: Expr, b: Expr, ty: Expr) -> bool:
    if isinstance(ty, BaseExpr):
        return def_eq_base(ctx, a, b, ty)
    return def_eq_indexed(ctx, a, b, ty)


# ---------------------------------------------------------------------------
# Pretty-ish forms for diagnostics (the surface printer specializes this)

_PRINTER = [repr]


def set_printer(fn):
    _PRINTER[0] = fn


def show(e) -> str:
    return _PRINTER[0](e)


def mismatch(ctx: Ctx, what: str, expected, actual):
    fail(
        "TYPE_MISMATCH",
        f"type mismatch in {what}",
        expected=show(expected),
        actual=show(actual),
    )


# ---------------------------------------------------------------------------
# Telescope helpers


def check_base_tele(ctx: Ctx, tele) -> Ctx:
    for ent in tele:
        check_base_type(ctx, ent.ty)
        ctx = ctx.bind_base(ent.ty)
    return ctx


def check_idx_tele(ctx: Ctx, tele, fresh: bool) -> Ctx:
    """Validate an indexed telescope; fresh ones restart the indexed context."""
    if fresh:
        ctx = ctx.with_delta(())
    for ent in tele:
        check_indexed_type(ctx, ent.ty)
        ctx = ctx.bind_idx(ent.ty)
    return ctx


def check_idx_args(ctx: Ctx, tele, args, what: str):
    """Check args (outermost first) against a fresh-scope indexed telescope."""
    if len(tele) != len(args):
        fail(
            "TYPE_MISMATCH",
            f"{what} expects {len(tele)} argument(s), got {len(args)}",
        )
    for k, arg in enumerate(args):
        expected = subst_indexed_in_indexed(
            tele[k].ty, Sub(tuple(reversed(args[:k])), 0), ctx.stab
        )
        check_indexed(ctx, arg, expected)


def check_base_args(ctx: Ctx, tele, args, what: str, pre: tuple = ()):
    """Check base args against a telescope; pre extends the substitution
    below the telescope (innermost first)."""
    if len(tele) != len(args):
        fail(
            "TYPE_MISMATCH",
            f"{what} expects {len(tele)} argument(s), got {len(args)}",
        )
    for k, arg in enumerate(args):
        s = Sub(tuple(reversed(args[:k])) + pre, 0)
        check_base(ctx, arg, subst_base_in_base(tele[k].ty, s, ctx.stab))


# ---------------------------------------------------------------------------
# Base level: types


def check_base_type(ctx: Ctx, a: BaseExpr) -> None:
    a0 = a
    if isinstance(a, TConst):
        d = ctx.sig.get(a.name)
        if d is None:
            fail("UNBOUND", f"unknown name {a.name!r}")
        if not (d.is_type and d.is_base):
            fail("SORT_MISMATCH", f"{a.name!r} is not a base type")
        check_base_args(ctx, d.btele, a.args, a.name)
        return
    if isinstance(a, Id):
        check_base_type(ctx, a.ty)
        check_base(ctx, a.lhs, a.ty)
        check_base(ctx, a.rhs, a.ty)
        return
    if isinstance(a, Sigma):
        check_base_type(ctx, a.fst)
        check_base_type(ctx.bind_base(a.fst), a.snd)
        return
    if isinstance(a, Unit):
        need(ctx, "base-unit", "the base unit type")
        return
    if isinstance(a, Empty):
        need(ctx, "base-empty", "the base empty type")
        return
    if isinstance(a, Nat):
        need(ctx, "base-nat", "the base natural numbers")
        return
    if isinstance(a, BPi):
        need(ctx, "base-pi", "base Pi types")
        check_base_type(ctx, a.dom)
        check_base_type(ctx.bind_base(a.dom), a.cod)
        return
    if isinstance(a, BPushout):
        need(ctx, "base-pushout", "base pushouts")
        check_base_type(ctx, a.kty)
        check_base_type(ctx, a.ity)
        check_base_type(ctx, a.jty)
        ctx2 = ctx.bind_base(a.kty)
        check_base(ctx2, a.f, shift_base(a.ity, 1, 0, ctx.stab))
        check_base(ctx2, a.g, shift_base(a.jty, 1, 0, ctx.stab))
        return
    if isinstance(a, Hom):
        need(ctx, "hom", "Hom types")
        ctx2 = check_idx_tele(ctx, a.tele, fresh=True)
        if not ctx.cfg.has("dep-hom"):
            if len(a.tele) != 1:
                fail(
                    "FEATURE_DISABLED",
                    "Hom over a telescope requires feature 'dep-hom'",
                )
            _check_nondep_body(ctx, a.tele, a.body, check_indexed_type)
        else:
            check_indexed_type(ctx2, a.body)
        return
    if isinstance(a, UExt):
        need(ctx, "universe", "the external universe")
        check_idx_tele(ctx, a.tele, fresh=True)
        return
    if isinstance(a, FibT):
        need(ctx, "fib", "the fibrancy predicate")
        ctx2 = check_idx_tele(ctx, a.tele, fresh=True)
        check_indexed_type(ctx2, a.fam)
        return
    # Everything else must be a term-level expression of type... no base
    # universe exists, so only the listed formers are types.
    fail("TYPE_MISMATCH", "not a base type former", actual=show(a0))


def _check_nondep_body(ctx: Ctx, tele, body, checker):
    """Check a one-binder body that must not use the bound variable."""
    try:
        lowered = shift_indexed(body, -1, 0, ctx.stab)
        scope_probe(lowered)
    except Exception:
        fail(
            "FEATURE_DISABLED",
            "a dependent body here requires feature 'dep-hom'",
        )
    ctx2 = ctx.with_delta(())
    checker(ctx2, lowered)


def scope_probe(e):
    """Raise if the expression contains a negative de Bruijn index."""
    if isinstance(e, (BVar, IVar)):
        if e.ix < 0:
            raise ValueError("negative index")
        return
    scope_check(e, 10**9, 10**9)


# ---------------------------------------------------------------------------
# Base level: terms


def infer_base(ctx: Ctx, e: BaseExpr) -> BaseExpr:
    if isinstance(e, BVar):
        return ctx.base_ty(e.ix)
    if isinstance(e, BAnn):
        check_base_type(ctx, e.ty)
        check_base(ctx, e.term, e.ty)
        return e.ty
    if isinstance(e, Const):
        d = ctx.sig.get(e.name)
        if d is None:
            fail("UNBOUND", f"unknown name {e.name!r}")
        if d.is_type or not d.is_base:
            fail("SORT_MISMATCH", f"{e.name!r} is not a base term")
        check_base_args(ctx, d.btele, e.args, e.name)
        return subst_base_in_base(d.ty, spine_sub(e.args), ctx.stab)
    if isinstance(e, Refl):
        ty = infer_base(ctx, e.arg)
        return Id(ty, e.arg, e.arg)
    if isinstance(e, J):
        return _infer_j(ctx, e)
    if isinstance(e, Fst):
        t = whnf_base(ctx, infer_base(ctx, e.pair))
        if not isinstance(t, Sigma):
            mismatch(ctx, "first projection", "a Sigma type", t)
        return t.fst
    if isinstance(e, Snd):
        t = whnf_base(ctx, infer_base(ctx, e.pair))
        if not isinstance(t, Sigma):
            mismatch(ctx, "second projection", "a Sigma type", t)
        return subst1_base(t.snd, Fst(e.pair), ctx.stab)
    if isinstance(e, TT):
        need(ctx, "base-unit", "the base unit element")
        return Unit()
    if isinstance(e, EmptyElim):
        need(ctx, "base-empty", "the base empty eliminator")
        check_base_type(ctx.bind_base(Empty()), e.motive)
        check_base(ctx, e.scrut, Empty())
        return subst1_base(e.motive, e.scrut, ctx.stab)
    if isinstance(e, NatZero):
        need(ctx, "base-nat", "zero")
        return Nat()
    if isinstance(e, NatSuc):
        need(ctx, "base-nat", "suc")
        check_base(ctx, e.arg, Nat())
        return Nat()
    if isinstance(e, NatElim):
        need(ctx, "base-nat", "the Nat eliminator")
        ctxn = ctx.bind_base(Nat())
        check_base_type(ctxn, e.motive)
        check_base(ctx, e.base, subst1_base(e.motive, NatZero(), ctx.stab))
        ctxs = ctxn.bind_base(e.motive)
        step_ty = subst_base_in_base(
            shift_base(e.motive, 2, 1, ctx.stab),
            sub_of(NatSuc(BVar(1))),
            ctx.stab,
        )
        check_base(ctxs, e.step, step_ty)
        check_base(ctx, e.scrut, Nat())
        return subst1_base(e.motive, e.scrut, ctx.stab)
    if isinstance(e, BApp):
        t = whnf_base(ctx, infer_base(ctx, e.fn))
        if not isinstance(t, BPi):
            mismatch(ctx, "application", "a Pi type", t)
        check_base(ctx, e.arg, t.dom)
        return subst1_base(t.cod, e.arg, ctx.stab)
    if isinstance(e, BFunextH):
        need(ctx, "base-funext", "funext_h")
        t = whnf_base(ctx, infer_base(ctx, e.path))
        if not isinstance(t, Id):
            mismatch(ctx, "funext_h", "an identity type", t)
        pt = whnf_base(ctx, t.ty)
        if not isinstance(pt, BPi):
            mismatch(ctx, "funext_h", "an identity of Pi terms", pt)
        sh = lambda x: shift_base(x, 1, 0, ctx.stab)
        inner = paths.ap_b(
            BApp(BVar(0), BVar(1)),
            pt.cod,
            sh(t.lhs),
            sh(t.rhs),
            sh(e.path),
        )
        return Id(t, BFunext(inner), e.path)
    if isinstance(e, BFunextHP):
        need(ctx, "base-funext", "funext_h'")
        aty = infer_base(ctx, e.arg)
        ctx2 = ctx.bind_base(aty)
        pty = whnf_base(ctx2, infer_base(ctx2, e.body))
        if not isinstance(pty, Id):
            mismatch(ctx, "funext_h'", "an identity type", pty)
        fl = BLam(pty.lhs)
        gl = BLam(pty.rhs)
        pi_ty = BPi(aty, pty.ty)
        ap_term = paths.ap_b(
            BApp(BVar(0), shift_base(e.arg, 1, 0, ctx.stab)),
            subst1_base(pty.ty, e.arg, ctx.stab),
            fl,
            gl,
            BFunext(e.body),
        )
        return Id(
            subst1_base(pty.ty, e.arg, ctx.stab),
            ap_term,
            subst1_base(e.body, e.arg, ctx.stab),
        )
    if isinstance(e, PoElim):
        return _infer_poelim(ctx, e)
    if isinstance(e, PoElimGlue):
        return _infer_poelim_glue(ctx, e)
    if isinstance(e, HomLam):
        need(ctx, "hom", "Hom abstraction")
        ctx2 = check_idx_tele(ctx, e.tele, fresh=True)
        if ctx.cfg.unary and len(e.tele) != 1:
            fail("UNARY_CONTEXT_TOO_LONG", "Hom telescopes have length one in unary mode")
        if not ctx.cfg.has("dep-hom") and len(e.tele) != 1:
            fail("FEATURE_DISABLED", "Hom telescopes require feature 'dep-hom'")
        body_ty = infer_indexed(ctx2, e.body)
        out = Hom(e.tele, body_ty)
        check_base_type(ctx, out)
        return out
    if isinstance(e, HapHP):
        need(ctx, "ext-id", "hap_h'")
        t = whnf_base(ctx, infer_base(ctx, e.path))
        if not isinstance(t, Id):
            mismatch(ctx, "hap_h'", "an identity type", t)
        ht = whnf_base(ctx, t.ty)
        if not isinstance(ht, Hom):
            mismatch(ctx, "hap_h'", "an identity of Hom terms", ht)
        n = len(ht.tele)
        return Id(
            t, IdExt(ht.tele, IHap(e.path, paths.ivars(n))), e.path
        )
    if isinstance(e, UCode):
        need(ctx, "universe", "universe codes")
        ctx2 = check_idx_tele(ctx, e.tele, fresh=True)
        check_indexed_type(ctx2, e.fam)
        return UExt(e.tele)
    if isinstance(e, FibFp):
        need(ctx, "fib", "fp")
        ctx2 = check_idx_tele(ctx, e.tele, fresh=True)
        check_fib_type(ctx2, e.fam)
        return FibT(e.tele, FibEl(e.fam))
    fail("CANNOT_INFER", "cannot infer a type for this term; ascribe it", actual=show(e))


def _infer_j(ctx: Ctx, e: J) -> BaseExpr:
    aty = infer_base(ctx, e.a)
    check_base(ctx, e.a2, aty)
    check_base(ctx, e.path, Id(aty, e.a, e.a2))
    sh = lambda x, n: shift_base(x, n, 0, ctx.stab)
    ctx2 = ctx.bind_base(aty).bind_base(Id(sh(aty, 1), sh(e.a, 1), BVar(0)))
    ctx3 = check_base_tele(ctx2, e.tele)
    check_base_type(ctx3, e.motive)
    n = len(e.tele)
    refl_sub = sub_of(Refl(e.a), e.a)  # p := refl(a), x := a
    ctxb = ctx
    for k, ent in enumerate(e.tele):
        ty_k = subst_base_in_base(ent.ty, lift_sub(refl_sub, k, True), ctx.stab)
        ctxb = ctxb.bind_base(ty_k)
    branch_ty = subst_base_in_base(
        e.motive, lift_sub(refl_sub, n, True), ctx.stab
    )
    check_base(ctxb, e.branch, branch_ty)
    check_base_args(ctx, e.tele, e.args, "J", pre=(e.path, e.a2))
    out_sub = Sub(tuple(reversed(e.args)) + (e.path, e.a2), 0)
    return subst_base_in_base(e.motive, out_sub, ctx.stab)


def _check_base_poelim_parts(ctx: Ctx, po: BPushout, motive, onl, onr, ong):
    check_base_type(ctx.bind_base(po), motive)
    # onl under i : I at motive[inl(i)/w]; the binder replaces w positionally.
    check_base(
        ctx.bind_base(po.ity),
        onl,
        subst_base_in_base(motive, Sub((PoInl(BVar(0)),), 1), ctx.stab),
    )
    check_base(
        ctx.bind_base(po.jty),
        onr,
        subst_base_in_base(motive, Sub((PoInr(BVar(0)),), 1), ctx.stab),
    )
    # ong under k : K : Id(motive[inr(g k)], transport(glue k, onl[f k]), onr[g k])
    ctxk = ctx.bind_base(po.kty)
    tr = paths.transport_b(
        shift_base(motive, 1, 1, ctx.stab),
        PoInl(po.f),
        PoInr(po.g),
        PoGlue(BVar(0)),
        subst_base_in_base(onl, Sub((po.f,), 1), ctx.stab),
    )
    ong_ty = Id(
        subst_base_in_base(motive, Sub((PoInr(po.g),), 1), ctx.stab),
        tr,
        subst_base_in_base(onr, Sub((po.g,), 1), ctx.stab),
    )
    check_base(ctxk, ong, ong_ty)


def _infer_poelim(ctx: Ctx, e: PoElim) -> BaseExpr:
    need(ctx, "base-pushout", "the pushout eliminator")
    sty = whnf_base(ctx, infer_base(ctx, e.scrut))
    if not isinstance(sty, BPushout):
        mismatch(ctx, "pushout eliminator", "a pushout type", sty)
    _check_base_poelim_parts(ctx, sty, e.motive, e.onl, e.onr, e.ong)
    return subst_base_in_base(e.motive, Sub((e.scrut,), 0), ctx.stab)


def _infer_poelim_glue(ctx: Ctx, e: PoElimGlue) -> BaseExpr:
    need(ctx, "base-pushout", "the pushout glue witness")
    check_base_type(ctx, e.po)
    po = whnf_base(ctx, e.po)
    if not isinstance(po, BPushout):
        mismatch(ctx, "pushout glue witness", "a pushout type", po)
    _check_base_poelim_parts(ctx, po, e.motive, e.onl, e.onr, e.ong)
    check_base(ctx, e.arg, po.kty)
    mk = lambda s: PoElim(e.motive, e.onl, e.onr, e.ong, s)
    sub1 = lambda t, v: subst_base_in_base(t, Sub((v,), 0), ctx.stab)
    fa = subst1_base(po.f, e.arg, ctx.stab)
    ga = subst1_base(po.g, e.arg, ctx.stab)
    tr = paths.transport_b(
        e.motive, PoInl(fa), PoInr(ga), PoGlue(e.arg), mk(PoInl(fa))
    )
    return Id(sub1(e.motive, PoInr(ga)), tr, mk(PoInr(ga)))


def check_base(ctx: Ctx, e: BaseExpr, ty: BaseExpr) -> None:
    t = whnf_base(ctx, ty)
    if isinstance(e, BLam):
        if not isinstance(t, BPi):
            mismatch(ctx, "lambda", t, "a function")
        check_base(ctx.bind_base(t.dom), e.body, t.cod)
        return
    if isinstance(e, HomLam):
        if isinstance(t, Hom):
            if len(e.tele) != len(t.tele):
                mismatch(ctx, "Hom abstraction", t, e)
            ctx2 = ctx.with_delta(())
            for mine, theirs in zip(e.tele, t.tele):
                check_indexed_type(ctx2, mine.ty)
                if not conv_indexed(ctx2, mine.ty, theirs.ty):
                    mismatch(ctx, "Hom abstraction binder", theirs.ty, mine.ty)
                ctx2 = ctx2.bind_idx(mine.ty)
            check_indexed(ctx2, e.body, t.body)
            return
        mismatch(ctx, "Hom abstraction", t, e)
    if isinstance(e, SPair):
        if not isinstance(t, Sigma):
            mismatch(ctx, "pair", t, e)
        check_base(ctx, e.fst, t.fst)
        check_base(ctx, e.snd, subst1_base(t.snd, e.fst, ctx.stab))
        return
    if isinstance(e, PoInl):
        if not isinstance(t, BPushout):
            mismatch(ctx, "inl", t, e)
        check_base(ctx, e.arg, t.ity)
        return
    if isinstance(e, PoInr):
        if not isinstance(t, BPushout):
            mismatch(ctx, "inr", t, e)
        check_base(ctx, e.arg, t.jty)
        return
    if isinstance(e, PoGlue):
        if not isinstance(t, Id):
            mismatch(ctx, "glue", t, e)
        pt = whnf_base(ctx, t.ty)
        if not isinstance(pt, BPushout):
            mismatch(ctx, "glue", "an identity in a pushout", pt)
        check_base(ctx, e.arg, pt.kty)
        l = PoInl(subst1_base(pt.f, e.arg, ctx.stab))
        r = PoInr(subst1_base(pt.g, e.arg, ctx.stab))
        if not def_eq_base(ctx, t.lhs, l, pt) or not def_eq_base(ctx, t.rhs, r, pt):
            mismatch(ctx, "glue endpoints", Id(pt, l, r), t)
        return
    if isinstance(e, BFunext):
        need(ctx, "base-funext", "funext")
        if not isinstance(t, Id):
            mismatch(ctx, "funext", t, e)
        pt = whnf_base(ctx, t.ty)
        if not isinstance(pt, BPi):
            mismatch(ctx, "funext", "an identity of Pi terms", pt)
        sh = lambda x: shift_base(x, 1, 0, ctx.stab)
        check_base(
            ctx.bind_base(pt.dom),
            e.body,
            Id(pt.cod, BApp(sh(t.lhs), BVar(0)), BApp(sh(t.rhs), BVar(0))),
        )
        return
    if isinstance(e, IdExt):
        need(ctx, "ext-id", "Idext")
        if not isinstance(t, Id):
            mismatch(ctx, "Idext", t, e)
        ht = whnf_base(ctx, t.ty)
        if not isinstance(ht, Hom):
            mismatch(ctx, "Idext", "an identity of Hom terms", ht)
        if len(e.tele) != len(ht.tele):
            mismatch(ctx, "Idext telescope", ht, e)
        ctx2 = ctx.with_delta(())
        for mine, theirs in zip(e.tele, ht.tele):
            check_indexed_type(ctx2, mine.ty)
            if not conv_indexed(ctx2, mine.ty, theirs.ty):
                mismatch(ctx, "Idext binder", theirs.ty, mine.ty)
            ctx2 = ctx2.bind_idx(mine.ty)
        n = len(ht.tele)
        check_indexed(
            ctx2,
            e.body,
            IId(
                ht.body,
                HomApp(t.lhs, paths.ivars(n)),
                HomApp(t.rhs, paths.ivars(n)),
            ),
        )
        return
    if isinstance(e, BFunextHP):
        inferred = infer_base(ctx, e)
        if not conv_base(ctx, inferred, t):
            mismatch(ctx, "funext_h'", t, inferred)
        return
    inferred = infer_base(ctx, e)
    if not conv_base(ctx, inferred, t):
        mismatch(ctx, "term", t, inferred)


# ---------------------------------------------------------------------------
# Indexed level: types


def check_indexed_type(ctx: Ctx, a: IndexedExpr) -> None:
    unary_type_guard(ctx)
    if isinstance(a, ITConst):
        d = ctx.sig.get(a.name)
        if d is None:
            fail("UNBOUND", f"unknown name {a.name!r}")
        if not (d.is_type and not d.is_base):
            fail("SORT_MISMATCH", f"{a.name!r} is not an indexed type")
        _check_const_args(ctx, d, a.bargs, a.iargs, a.name)
        return
    if isinstance(a, ISigma):
        need(ctx, "sigma", "indexed Sigma types")
        check_indexed_type(ctx, a.fst)
        check_indexed_type(ctx.bind_idx(a.fst), a.snd)
        return
    if isinstance(a, IId):
        need(ctx, "id", "indexed identity types")
        check_indexed_type(ctx, a.ty)
        check_indexed(ctx, a.lhs, a.ty)
        check_indexed(ctx, a.rhs, a.ty)
        return
    if isinstance(a, IUnit):
        need(ctx, "unit", "the indexed unit type")
        return
    if isinstance(a, IFun):
        need(ctx, "fun", "indexed function types")
        check_indexed_type(ctx, a.dom)
        check_indexed_type(ctx, a.cod)
        return
    if isinstance(a, IPi):
        need(ctx, "pi", "indexed Pi types")
        check_indexed_type(ctx, a.dom)
        check_indexed_type(ctx.bind_idx(a.dom), a.cod)
        return
    if isinstance(a, IProd):
        need(ctx, "prod", "products over a base type")
        if len(ctx.delta) != 0 and not ctx.cfg.has("dep-prod"):
            fail(
                "FEATURE_DISABLED",
                "products in a non-empty indexed context require 'dep-prod'",
            )
        check_base_type(ctx, a.ity)
        check_indexed_type(ctx.bind_base(a.ity), a.fam)
        return
    if isinstance(a, ICoprod):
        need(ctx, "coprod", "dependent coproducts")
        if not _no_pending(a):
            _check_suspended_type(ctx, a)
            return
        check_base_type(ctx, a.ity)
        check_indexed_type(ctx.bind_base(a.ity), a.fam)
        return
    if isinstance(a, IZero):
        need(ctx, "initial", "the initial type")
        return
    if isinstance(a, IPushout):
        need(ctx, "pushout", "dependent pushouts")
        if not _no_pending(a):
            _check_suspended_type(ctx, a)
            return
        check_indexed_type(ctx, a.aty)
        check_indexed_type(ctx, a.bty)
        check_indexed_type(ctx, a.cty)
        check_indexed(ctx, a.f, IFun(a.aty, a.bty))
        check_indexed(ctx, a.g, IFun(a.aty, a.cty))
        return
    if isinstance(a, IUniv):
        need(ctx, "universe", "the internal universe")
        return
    if isinstance(a, IEl):
        need(ctx, "universe", "El")
        check_indexed(ctx, a.code, IUniv())
        return
    if isinstance(a, ElExt):
        need(ctx, "universe", "El")
        cty = whnf_base(ctx, infer_base(ctx, a.code))
        if not isinstance(cty, UExt):
            fail(
                "UNIV_CODE_EXPECTED",
                "El expects a code in an external universe",
                actual=show(cty),
            )
        n = len(cty.tele)
        if len(ctx.delta) < n:
            fail(
                "TYPE_MISMATCH",
                "El used in a context shorter than its universe telescope",
            )
        probe = ctx.with_delta(())
        for k, ent in enumerate(cty.tele):
            if not conv_indexed(probe, ent.ty, ctx.delta[k]):
                fail(
                    "TYPE_MISMATCH",
                    "El used outside the indexed context of its universe",
                    expected=show(ent.ty),
                    actual=show(ctx.delta[k]),
                )
            probe = probe.bind_idx(ctx.delta[k])
        return
    if isinstance(a, FibEl):
        need(ctx, "fib", "El on the fibrant sort")
        check_fib_type(ctx, a.fib)
        return
    if isinstance(a, (IConst, ITConst)):
        pass
    if isinstance(a, IndexedExpr):
        # A type-level redex (for instance El of a code) may reduce to a
        # former; try once through whnf before giving up.
        w = whnf_indexed(ctx, a)
        if w != a:
            check_indexed_type(ctx, w)
            return
    fail("TYPE_MISMATCH", "not an indexed type former", actual=show(a))


def _check_suspended_type(ctx: Ctx, a: IndexedExpr) -> None:
    """Suspended type formers: validate the pending entries only.

    The frozen head was checked in its source context when it was built;
    the source context is not recorded, so heads are treated as opaque.
    """
    for sub, base in ((getattr(a, "ps", None), True), (getattr(a, "pt", None), False)):
        if sub is None:
            continue
        for ent in sub.entries:
            if base:
                infer_base(ctx, ent)
            else:
                infer_indexed(ctx, ent)


def _check_const_args(ctx: Ctx, d: Decl, bargs, iargs, name: str):
    check_base_args(ctx, d.btele, bargs, name)
    if len(d.itele or ()) != len(iargs):
        fail(
            "TYPE_MISMATCH",
            f"{name} expects {len(d.itele or ())} indexed argument(s), "
            f"got {len(iargs)}",
        )
    inst = [
        subst_base_in_indexed(ent.ty, spine_sub(bargs), ctx.stab)
        for ent in (d.itele or ())
    ]
    for k, arg in enumerate(iargs):
        expected = subst_indexed_in_indexed(
            inst[k], Sub(tuple(reversed(iargs[:k])), 0), ctx.stab
        )
        check_indexed(ctx, arg, expected)


# ---------------------------------------------------------------------------
# Fibrant sort


def check_fib_type(ctx: Ctx, a: FibExpr) -> None:
    need(ctx, "fib", "the fibrant sort")
    if isinstance(a, Trunc):
        need(ctx, "modality", "the modal reflection")
        if not _no_pending(a):
            _check_suspended_type(ctx, a)
            return
        check_indexed_type(ctx, a.body)
        return
    if isinstance(a, FibRf):
        ctx2 = check_idx_tele(ctx, a.tele, fresh=True)
        check_indexed_type(ctx2, a.fam)
        check_base(ctx, a.fw, FibT(a.tele, a.fam))
        check_idx_args(ctx, a.tele, a.args, "rf")
        return
    fail("NOT_FIBRANT", "expected a fibrant-sort type", actual=show(a))


# ---------------------------------------------------------------------------
# Indexed level: terms


def _eta_node(ctx: Ctx, aty: IndexedExpr, arg: IndexedExpr) -> IndexedExpr:
    if ctx.cfg.has("modality-stable"):
        return IMBar(arg)
    return IMEta(aty, arg)


def _coprod_ctor(ctx: Ctx, j: BaseExpr, arg: IndexedExpr) -> IndexedExpr:
    if ctx.cfg.has("coprod-stable"):
        return ICoPair(j, arg)
    return IIn(j, arg)


def infer_indexed(ctx: Ctx, e: IndexedExpr) -> IndexedExpr:
    unary_term_guard(ctx)
    if isinstance(e, IVar):
        return ctx.idx_ty(e.ix)
    if isinstance(e, IAnn):
        check_indexed_type(ctx, e.ty)
        check_indexed(ctx, e.term, e.ty)
        return e.ty
    if isinstance(e, IConst):
        d = ctx.sig.get(e.name)
        if d is None:
            fail("UNBOUND", f"unknown name {e.name!r}")
        if d.is_type or d.is_base:
            fail("SORT_MISMATCH", f"{e.name!r} is not an indexed term")
        _check_const_args(ctx, d, e.bargs, e.iargs, e.name)
        out = subst_base_in_indexed(d.ty, spine_sub(e.bargs), ctx.stab)
        return subst_indexed_in_indexed(out, spine_sub(e.iargs), ctx.stab)
    if isinstance(e, HomApp):
        fty = whnf_base(ctx, infer_base(ctx, e.fn))
        if not isinstance(fty, Hom):
            mismatch(ctx, "Hom application", "a Hom type", fty)
        check_idx_args(ctx, fty.tele, e.args, "Hom application")
        return subst_indexed_in_indexed(fty.body, spine_sub(e.args), ctx.stab)
    if isinstance(e, IFst):
        t = whnf_indexed(ctx, infer_indexed(ctx, e.pair))
        if not isinstance(t, ISigma):
            mismatch(ctx, "first projection", "a Sigma type", t)
        return t.fst
    if isinstance(e, ISnd):
        t = whnf_indexed(ctx, infer_indexed(ctx, e.pair))
        if not isinstance(t, ISigma):
            mismatch(ctx, "second projection", "a Sigma type", t)
        return subst1_indexed(t.snd, IFst(e.pair), ctx.stab)
    if isinstance(e, IRefl):
        need(ctx, "id", "refl")
        ty = infer_indexed(ctx, e.arg)
        return IId(ty, e.arg, e.arg)
    if isinstance(e, IJ):
        need(ctx, "id", "the identity eliminator")
        aty = infer_indexed(ctx, e.a)
        check_indexed(ctx, e.a2, aty)
        check_indexed(ctx, e.path, IId(aty, e.a, e.a2))
        sh = lambda x, n: shift_indexed(x, n, 0, ctx.stab)
        ctx2 = ctx.bind_idx(aty).bind_idx(IId(sh(aty, 1), sh(e.a, 1), IVar(0)))
        check_indexed_type(ctx2, e.motive)
        refl_sub = sub_of(IRefl(e.a), e.a)
        check_indexed(
            ctx, e.branch, subst_indexed_in_indexed(e.motive, refl_sub, ctx.stab)
        )
        return subst_indexed_in_indexed(e.motive, sub_of(e.path, e.a2), ctx.stab)
    if isinstance(e, JBI):
        return _infer_jbi(ctx, e)
    if isinstance(e, ITT):
        need(ctx, "unit", "tt")
        return IUnit()
    if isinstance(e, IApp):
        t = whnf_indexed(ctx, infer_indexed(ctx, e.fn))
        if not isinstance(t, IFun):
            mismatch(ctx, "application", "a function type", t)
        check_indexed(ctx, e.arg, t.dom)
        return t.cod
    if isinstance(e, IPiApp):
        t = whnf_indexed(ctx, infer_indexed(ctx, e.fn))
        if not isinstance(t, IPi):
            mismatch(ctx, "application", "a Pi type", t)
        check_indexed(ctx, e.arg, t.dom)
        return subst1_indexed(t.cod, e.arg, ctx.stab)
    if isinstance(e, IPiEta):
        need(ctx, "pi-weak", "the weak Pi eta witness")
        t = whnf_indexed(ctx, infer_indexed(ctx, e.fn))
        if not isinstance(t, IPi):
            mismatch(ctx, "eta witness", "a Pi type", t)
        expanded = IPiLam(IPiApp(shift_indexed(e.fn, 1, 0, ctx.stab), IVar(0)))
        return IId(t, expanded, e.fn)
    if isinstance(e, IPApp):
        t = whnf_indexed(ctx, infer_indexed(ctx, e.fn))
        if not isinstance(t, IProd):
            mismatch(ctx, "product application", "a product type", t)
        check_base(ctx, e.idx, t.ity)
        return subst_base_in_indexed(t.fam, sub_of(e.idx), ctx.stab)
    if isinstance(e, IProdEta):
        need(ctx, "prod-weak", "the weak product eta witness")
        t = whnf_indexed(ctx, infer_indexed(ctx, e.fn))
        if not isinstance(t, IProd):
            mismatch(ctx, "eta witness", "a product type", t)
        expanded = IPabs(IPApp(shift_base(e.fn, 1, 0, ctx.stab), BVar(0)))
        return IId(t, expanded, e.fn)
    if isinstance(e, IHap):
        need(ctx, "id", "hap")
        need(ctx, "hom", "hap")
        t = whnf_base(ctx, infer_base(ctx, e.path))
        if not isinstance(t, Id):
            mismatch(ctx, "hap", "an identity type", t)
        ht = whnf_base(ctx, t.ty)
        if not isinstance(ht, Hom):
            mismatch(ctx, "hap", "an identity of Hom terms", ht)
        check_idx_args(ctx, ht.tele, e.args, "hap")
        sp = spine_sub(e.args)
        return IId(
            subst_indexed_in_indexed(ht.body, sp, ctx.stab),
            HomApp(t.lhs, e.args),
            HomApp(t.rhs, e.args),
        )
    if isinstance(e, IHapH):
        need(ctx, "ext-id", "hap_h")
        ctx2 = check_idx_tele(ctx, e.tele, fresh=True)
        pty = whnf_indexed(ctx2, infer_indexed(ctx2, e.body))
        if not isinstance(pty, IId):
            mismatch(ctx, "hap_h", "an identity type", pty)
        check_idx_args(ctx, e.tele, e.args, "hap_h")
        sp = spine_sub(e.args)
        hom_ty = Hom(e.tele, pty.ty)
        lam = lambda body: HomLam(e.tele, body)
        idext = IdExt(e.tele, e.body)
        return IId(
            subst_indexed_in_indexed(pty.ty, sp, ctx.stab),
            IHap(BAnn(idext, Id(hom_ty, lam(pty.lhs), lam(pty.rhs))), e.args),
            subst_indexed_in_indexed(e.body, sp, ctx.stab),
        )
    if isinstance(e, ICoElim):
        return _infer_coelim(ctx, e)
    if isinstance(e, ICoElimL):
        return _infer_coelim_local(ctx, e)
    if isinstance(e, IZeroElim):
        need(ctx, "initial", "the initial eliminator")
        check_indexed_type(ctx.bind_idx(IZero()), e.motive)
        check_indexed(ctx, e.scrut, IZero())
        return subst1_indexed(e.motive, e.scrut, ctx.stab)
    if isinstance(e, IZeroElimP):
        need(ctx, "initial-stable", "0-elim'")
        if not _no_pending(e):
            fail("CANNOT_INFER", "suspended eliminators cannot be re-checked")
        check_indexed_type(ctx, e.ty)
        check_indexed(ctx, e.scrut, IZero())
        return e.ty
    if isinstance(e, IZeroElimPP):
        need(ctx, "initial-stable", "0-elim''")
        if not _no_pending(e):
            fail("CANNOT_INFER", "suspended eliminators cannot be re-checked")
        ctx0 = ctx.bind_idx(IZero())
        ctx2 = check_idx_tele(ctx0, e.etele, fresh=False)
        check_indexed_type(ctx2, e.motive)
        check_indexed(ctx, e.scrut, IZero())
        sub0 = Sub((e.scrut,), 1)  # x := scrut, keep the rest
        inst = [
            subst_indexed_in_indexed(
                ent.ty, lift_sub(sub0, k, False), ctx.stab
            )
            for k, ent in enumerate(e.etele)
        ]
        for k, arg in enumerate(e.eargs):
            expected = subst_indexed_in_indexed(
                inst[k], Sub(tuple(reversed(e.eargs[:k])), 0), ctx.stab
            )
            check_indexed(ctx, arg, expected)
        out = Sub(tuple(reversed(e.eargs)) + (e.scrut,), 0)
        return subst_indexed_in_indexed(e.motive, out, ctx.stab)
    if isinstance(e, IPoElim):
        return _infer_poelim_i(ctx, e)
    if isinstance(e, (IPoH1, IPoH2, IPoH3)):
        return _infer_poh(ctx, e)
    if isinstance(e, IMEta):
        need(ctx, "modality", "the modal unit")
        check_indexed_type(ctx, e.aty)
        check_indexed(ctx, e.arg, e.aty)
        return FibEl(Trunc(e.aty))
    if isinstance(e, IMBar):
        need(ctx, "modality-stable", "the stable modal unit")
        aty = infer_indexed(ctx, e.arg)
        return FibEl(Trunc(aty))
    if isinstance(e, ITruncElim):
        return _infer_trunc_elim(ctx, e, arg=None, local=False)
    if isinstance(e, ITruncElimH):
        return _infer_trunc_elim(ctx, e, arg=e.arg, local=False)
    if isinstance(e, ITruncElimL):
        return _infer_trunc_elim(ctx, e, arg=None, local=True)
    if isinstance(e, ITruncElimLH):
        return _infer_trunc_elim(ctx, e, arg=e.arg, local=True)
    if isinstance(e, IUa):
        need(ctx, "univalence", "ua")
        check_indexed(ctx, e.c1, IUniv())
        check_indexed(ctx, e.c2, IUniv())
        check_indexed(ctx, e.ev, paths.equiv_ty(IEl(e.c1), IEl(e.c2)))
        return IId(IUniv(), e.c1, e.c2)
    if isinstance(e, IUaH):
        need(ctx, "univalence", "ua_h")
        check_indexed(ctx, e.c1, IUniv())
        check_indexed(ctx, e.c2, IUniv())
        ety = paths.equiv_ty(IEl(e.c1), IEl(e.c2))
        check_indexed(ctx, e.ev, ety)
        ide = paths.idtoequiv(
            IEl(e.c1), IEl(IVar(0)), e.c1, e.c2, IUa(e.c1, e.c2, e.ev)
        )
        return IId(ety, ide, e.ev)
    if isinstance(e, FibEl):
        fail("TYPE_MISMATCH", "a fibrant-sort type is not a term", actual=show(e))
    fail("CANNOT_INFER", "cannot infer a type for this term; ascribe it", actual=show(e))


def _infer_jbi(ctx: Ctx, e: JBI) -> IndexedExpr:
    aty = infer_base(ctx, e.a)
    check_base(ctx, e.a2, aty)
    check_base(ctx, e.path, Id(aty, e.a, e.a2))
    sh = lambda x, n: shift_base(x, n, 0, ctx.stab)
    ctx2 = ctx.bind_base(aty).bind_base(Id(sh(aty, 1), sh(e.a, 1), BVar(0)))
    ctx3 = check_base_tele(ctx2, e.dtele)
    ctx4 = check_idx_tele(ctx3, e.etele, fresh=True)
    check_indexed_type(ctx4, e.motive)
    nd, ne = len(e.dtele), len(e.etele)
    refl_sub = sub_of(Refl(e.a), e.a)
    ctxb = ctx
    for k, ent in enumerate(e.dtele):
        ctxb = ctxb.bind_base(
            subst_base_in_base(ent.ty, lift_sub(refl_sub, k, True), ctx.stab)
        )
    ctxb = ctxb.with_delta(())
    branch_esub = lift_sub(refl_sub, nd, True)
    for k, ent in enumerate(e.etele):
        ctxb = ctxb.bind_idx(
            subst_base_in_indexed(ent.ty, branch_esub, ctx.stab)
        )
    motive_b = subst_base_in_indexed(e.motive, branch_esub, ctx.stab)
    check_indexed(ctxb, e.branch, motive_b)
    check_base_args(ctx, e.dtele, e.dargs, "J", pre=(e.path, e.a2))
    dsub = Sub(tuple(reversed(e.dargs)) + (e.path, e.a2), 0)
    einst = tuple(
        TEntry(subst_base_in_indexed(ent.ty, dsub, ctx.stab), ent.hint)
        for ent in e.etele
    )
    check_idx_args(ctx, einst, e.eargs, "J")
    out = subst_base_in_indexed(e.motive, dsub, ctx.stab)
    return subst_indexed_in_indexed(out, spine_sub(e.eargs), ctx.stab)


def _infer_coelim(ctx: Ctx, e: ICoElim) -> IndexedExpr:
    need(ctx, "coprod", "the coproduct eliminator")
    sty = whnf_indexed(ctx, infer_indexed(ctx, e.scrut))
    if not (isinstance(sty, ICoprod) and _no_pending(sty)):
        mismatch(ctx, "coproduct eliminator", "a coproduct type", sty)
    check_indexed_type(ctx.bind_idx(sty), e.motive)
    ctxb = ctx.bind_base(sty.ity).bind_idx(sty.fam)
    ctor = _coprod_ctor(ctx, BVar(0), IVar(0))
    branch_ty = subst_indexed_in_indexed(
        shift_base(e.motive, 1, 0, ctx.stab), Sub((ctor,), 1), ctx.stab
    )
    check_indexed(ctxb, e.branch, branch_ty)
    return subst_indexed_in_indexed(e.motive, Sub((e.scrut,), 0), ctx.stab)


def _infer_coelim_local(ctx: Ctx, e: ICoElimL) -> IndexedExpr:
    need(ctx, "coprod-stable", "the local coproduct eliminator")
    if not _no_pending(e):
        fail("CANNOT_INFER", "suspended eliminators cannot be re-checked")
    sty = whnf_indexed(ctx, infer_indexed(ctx, e.scrut))
    if not (isinstance(sty, ICoprod) and _no_pending(sty)):
        mismatch(ctx, "coproduct eliminator", "a coproduct type", sty)
    ctxz = ctx.bind_idx(sty)
    ctx2 = check_idx_tele(ctxz, e.etele, fresh=False)
    check_indexed_type(ctx2, e.motive)
    ne = len(e.etele)
    # Branch context: i : I | Delta, x : fam, etele[(i, x)/z].
    ctxb = ctx.bind_base(sty.ity).bind_idx(sty.fam)
    ctor_sub = Sub((ICoPair(BVar(0), IVar(0)),), 1)
    sh1 = lambda t: shift_base(t, 1, 0, ctx.stab)
    for k, ent in enumerate(e.etele):
        ctxb = ctxb.bind_idx(
            subst_indexed_in_indexed(
                sh1(ent.ty), lift_sub(ctor_sub, k, False), ctx.stab
            )
        )
    branch_ty = subst_indexed_in_indexed(
        sh1(e.motive), lift_sub(ctor_sub, ne, False), ctx.stab
    )
    check_indexed(ctxb, e.branch, branch_ty)
    scrut_sub = Sub((e.scrut,), 1)
    inst = [
        subst_indexed_in_indexed(ent.ty, lift_sub(scrut_sub, k, False), ctx.stab)
        for k, ent in enumerate(e.etele)
    ]
    for k, arg in enumerate(e.eargs):
        expected = subst_indexed_in_indexed(
            inst[k], Sub(tuple(reversed(e.eargs[:k])), 0), ctx.stab
        )
        check_indexed(ctx, arg, expected)
    out = Sub(tuple(reversed(e.eargs)) + (e.scrut,), 0)
    return subst_indexed_in_indexed(e.motive, out, ctx.stab)


def _infer_poelim_i(ctx: Ctx, e: IPoElim) -> IndexedExpr:
    need(ctx, "pushout", "the pushout eliminator")
    sty = whnf_indexed(ctx, infer_indexed(ctx, e.scrut))
    if not (isinstance(sty, IPushout) and _no_pending(sty)):
        mismatch(ctx, "pushout eliminator", "a pushout type", sty)
    _check_poelim_parts(ctx, sty, e.motive, e.onl, e.onr, e.ong)
    return subst_indexed_in_indexed(e.motive, Sub((e.scrut,), 0), ctx.stab)


def _check_poelim_parts(ctx: Ctx, po: IPushout, motive, onl, onr, ong):
    check_indexed_type(ctx.bind_idx(po), motive)
    sh = lambda x: shift_indexed(x, 1, 0, ctx.stab)
    check_indexed(
        ctx.bind_idx(po.bty),
        onl,
        subst_indexed_in_indexed(motive, Sub((IInl(IVar(0)),), 1), ctx.stab),
    )
    check_indexed(
        ctx.bind_idx(po.cty),
        onr,
        subst_indexed_in_indexed(motive, Sub((IInr(IVar(0)),), 1), ctx.stab),
    )
    ctxa = ctx.bind_idx(po.aty)
    fx = IApp(sh(po.f), IVar(0))
    gx = IApp(sh(po.g), IVar(0))
    tr = paths.transport_i(
        shift_indexed(motive, 1, 1, ctx.stab),
        IInl(fx),
        IInr(gx),
        IGlue(IVar(0)),
        subst_indexed_in_indexed(onl, Sub((fx,), 1), ctx.stab),
    )
    ong_ty = IId(
        subst_indexed_in_indexed(motive, Sub((IInr(gx),), 1), ctx.stab),
        tr,
        subst_indexed_in_indexed(onr, Sub((gx,), 1), ctx.stab),
    )
    check_indexed(ctxa, ong, ong_ty)


def _infer_poh(ctx: Ctx, e) -> IndexedExpr:
    need(ctx, "pushout", "the pushout computation witnesses")
    check_indexed_type(ctx, e.po)
    po = whnf_indexed(ctx, e.po)
    if not (isinstance(po, IPushout) and _no_pending(po)):
        mismatch(ctx, "pushout witness", "a pushout type", po)
    _check_poelim_parts(ctx, po, e.motive, e.onl, e.onr, e.ong)
    mk = lambda s: IPoElim(e.motive, e.onl, e.onr, e.ong, s)
    sub1 = lambda t, v: subst_indexed_in_indexed(t, Sub((v,), 0), ctx.stab)
    if isinstance(e, IPoH1):
        check_indexed(ctx, e.arg, po.bty)
        point = IInl(e.arg)
        return IId(sub1(e.motive, point), mk(point), sub1(e.onl, e.arg))
    if isinstance(e, IPoH2):
        check_indexed(ctx, e.arg, po.cty)
        point = IInr(e.arg)
        return IId(sub1(e.motive, point), mk(point), sub1(e.onr, e.arg))
    check_indexed(ctx, e.arg, po.aty)
    fa = IApp(po.f, e.arg)
    ga = IApp(po.g, e.arg)
    tr = paths.transport_i(
        e.motive, IInl(fa), IInr(ga), IGlue(e.arg), mk(IInl(fa))
    )
    return IId(sub1(e.motive, IInr(ga)), tr, mk(IInr(ga)))


def _infer_trunc_elim(ctx: Ctx, e, arg, local: bool) -> IndexedExpr:
    need(ctx, "modality", "the modal eliminator")
    if local:
        need(ctx, "modality-stable", "the local modal eliminator")
        if not _no_pending(e):
            fail("CANNOT_INFER", "suspended eliminators cannot be re-checked")
    if arg is None:
        sty = whnf_indexed(ctx, infer_indexed(ctx, e.scrut))
        trunc = _trunc_of(ctx, sty)
        aty = trunc.body
    else:
        aty = infer_indexed(ctx, arg)
        trunc = Trunc(aty)
    if not isinstance(e.motive, FibExpr):
        fail("NOT_FIBRANT", "the modal eliminator needs a fibrant motive")
    el_tr = FibEl(trunc)
    etele = e.etele if local else ()
    ctxz = ctx.bind_idx(el_tr)
    ctx2 = check_idx_tele(ctxz, etele, fresh=False)
    check_fib_type(ctx2, e.motive)
    ne = len(etele)
    ctxb = ctx.bind_idx(aty)
    eta = _eta_node(ctx, shift_indexed(aty, 1, 0, ctx.stab), IVar(0))
    eta_sub = Sub((eta,), 1)
    for k, ent in enumerate(etele):
        ctxb = ctxb.bind_idx(
            subst_indexed_in_indexed(ent.ty, lift_sub(eta_sub, k, False), ctx.stab)
        )
    branch_ty = subst_indexed_in_indexed(
        FibEl(e.motive), lift_sub(eta_sub, ne, False), ctx.stab
    )
    check_indexed(ctxb, e.branch, branch_ty)
    if arg is None:
        point = e.scrut
    else:
        point = _eta_node(ctx, aty, arg)
    point_sub = Sub((point,), 1 if local else 0)
    if local:
        inst = [
            subst_indexed_in_indexed(
                ent.ty, lift_sub(point_sub, k, False), ctx.stab
            )
            for k, ent in enumerate(etele)
        ]
        for k, a in enumerate(e.eargs):
            expected = subst_indexed_in_indexed(
                inst[k], Sub(tuple(reversed(e.eargs[:k])), 0), ctx.stab
            )
            check_indexed(ctx, a, expected)
        out = Sub(tuple(reversed(e.eargs)) + (point,), 0)
    else:
        out = Sub((point,), 0)
    result = subst_indexed_in_indexed(FibEl(e.motive), out, ctx.stab)
    if arg is None:
        return result
    if local:
        elim = ITruncElimL(e.etele, e.motive, e.branch, point, e.eargs)
    else:
        elim = ITruncElim(e.motive, e.branch, point)
    branch_at = subst_indexed_in_indexed(
        e.branch,
        Sub(tuple(reversed(e.eargs)) + (arg,), 0)
        if local
        else Sub((arg,), 0),
        ctx.stab,
    )
    return IId(result, elim, branch_at)


def _trunc_of(ctx: Ctx, sty) -> Trunc:
    if isinstance(sty, FibEl):
        f = whnf_fib(ctx, sty.fib)
        if isinstance(f, Trunc) and _no_pending(f):
            return f
    fail(
        "TYPE_MISMATCH",
        "the modal eliminator needs a scrutinee in a modal reflection",
        actual=show(sty),
    )


def check_indexed(ctx: Ctx, e: IndexedExpr, ty: IndexedExpr) -> None:
    unary_term_guard(ctx)
    t = whnf_indexed(ctx, ty)
    if isinstance(e, ILam):
        if not isinstance(t, IFun):
            mismatch(ctx, "lambda", t, "a function")
        check_indexed(
            ctx.bind_idx(t.dom), e.body, shift_indexed(t.cod, 1, 0, ctx.stab)
        )
        return
    if isinstance(e, IPiLam):
        if not isinstance(t, IPi):
            mismatch(ctx, "lambda", t, "a Pi abstraction")
        check_indexed(ctx.bind_idx(t.dom), e.body, t.cod)
        return
    if isinstance(e, IPabs):
        if not isinstance(t, IProd):
            mismatch(ctx, "product abstraction", t, e)
        check_indexed(ctx.bind_base(t.ity), e.body, t.fam)
        return
    if isinstance(e, IPair):
        if not isinstance(t, ISigma):
            mismatch(ctx, "pair", t, e)
        check_indexed(ctx, e.fst, t.fst)
        check_indexed(ctx, e.snd, subst1_indexed(t.snd, e.fst, ctx.stab))
        return
    if isinstance(e, (IIn, ICoPair)) and _no_pending(e):
        if not (isinstance(t, ICoprod) and _no_pending(t)):
            mismatch(ctx, "coproduct constructor", t, e)
        if isinstance(e, ICoPair) and not ctx.cfg.has("coprod-stable"):
            fail(
                "FEATURE_DISABLED",
                "the pairing constructor requires feature 'coprod-stable'",
            )
        need(ctx, "coprod", "the coproduct constructor")
        check_base(ctx, e.idx, t.ity)
        check_indexed(
            ctx, e.arg, subst_base_in_indexed(t.fam, sub_of(e.idx), ctx.stab)
        )
        return
    if isinstance(e, IInl) and e.ps is None:
        if not (isinstance(t, IPushout) and _no_pending(t)):
            mismatch(ctx, "inl", t, e)
        check_indexed(ctx, e.arg, t.bty)
        return
    if isinstance(e, IInr) and e.ps is None:
        if not (isinstance(t, IPushout) and _no_pending(t)):
            mismatch(ctx, "inr", t, e)
        check_indexed(ctx, e.arg, t.cty)
        return
    if isinstance(e, IGlue) and e.ps is None:
        if not isinstance(t, IId):
            mismatch(ctx, "glue", t, e)
        pt = whnf_indexed(ctx, t.ty)
        if not (isinstance(pt, IPushout) and _no_pending(pt)):
            mismatch(ctx, "glue", "an identity in a pushout", pt)
        check_indexed(ctx, e.arg, pt.aty)
        l = IInl(IApp(pt.f, e.arg))
        r = IInr(IApp(pt.g, e.arg))
        if not def_eq_indexed(ctx, t.lhs, l, pt) or not def_eq_indexed(
            ctx, t.rhs, r, pt
        ):
            mismatch(ctx, "glue endpoints", IId(pt, l, r), t)
        return
    if isinstance(e, IPiBeta):
        need(ctx, "pi-weak", "the weak Pi beta witness")
        if not isinstance(t, IId):
            mismatch(ctx, "beta witness", t, e)
        # Expected shape: (lam x. body) arg = body[arg/x].
        expect_l = IPiApp(IPiLam(e.body), e.arg)
        expect_r = subst1_indexed(e.body, e.arg, ctx.stab)
        if not (
            conv_indexed(ctx, t.lhs, expect_l)
            and def_eq_indexed(ctx, t.rhs, expect_r, t.ty)
        ):
            mismatch(ctx, "beta witness", t, IId(t.ty, expect_l, expect_r))
        return
    if isinstance(e, IProdBeta):
        need(ctx, "prod-weak", "the weak product beta witness")
        if not isinstance(t, IId):
            mismatch(ctx, "beta witness", t, e)
        expect_l = IPApp(IPabs(e.body), e.idx)
        expect_r = subst_base_in_indexed(e.body, sub_of(e.idx), ctx.stab)
        if not (
            conv_indexed(ctx, t.lhs, expect_l)
            and def_eq_indexed(ctx, t.rhs, expect_r, t.ty)
        ):
            mismatch(ctx, "beta witness", t, IId(t.ty, expect_l, expect_r))
        return
    inferred = infer_indexed(ctx, e)
    if not conv_indexed(ctx, inferred, t):
        mismatch(ctx, "term", t, inferred)


# ---------------------------------------------------------------------------
# Declaration checking


def check_decl(ctx: Ctx, decl: Decl) -> Decl:
    """Check a declaration in the given signature context and return it."""
    c = ctx
    for ent in decl.btele:
        check_base_type(c, ent.ty)
        c = c.bind_base(ent.ty)
    if decl.itele is not None:
        c = c.with_delta(())
        for ent in decl.itele:
            check_indexed_type(c, ent.ty)
            c = c.bind_idx(ent.ty)
        if ctx.cfg.unary and len(decl.itele) > 1:
            fail("UNARY_CONTEXT_TOO_LONG", "indexed context too long for unary mode")
    if decl.is_type:
        if decl.body is not None:
            if decl.is_base:
                check_base_type(c, decl.body)
            else:
                check_indexed_type(c, decl.body)
        return decl
    if decl.is_base:
        check_base_type(c, decl.ty)
        if decl.body is not None:
            check_base(c, decl.body, decl.ty)
    else:
        check_indexed_type(c, decl.ty)
        if decl.body is not None:
            check_indexed(c, decl.body, decl.ty)
    return decl


def fresh_ctx(cfg: TheoryConfig, sig: Optional[Mapping[str, Decl]] = None) -> Ctx:
    return Ctx(cfg=cfg, sig=dict(sig or {}))
