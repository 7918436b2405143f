"""Builders for identity-type structure derived from the eliminators.

Everything here is pure term construction; no checking happens.  The kernel
uses these to spell out rule premises (transport in pushout eliminators, the
types of the extensionality witnesses), and the derived-structure library
builds on the same combinators.

Conventions: argument tuples that instantiate a telescope are ordered
outermost binder first.  A suffix ``_b`` means base level, ``_i`` indexed
level, ``_bi`` base paths acting on indexed things.
"""

from __future__ import annotations

from .syntax import (
    BApp,
    BVar,
    HomApp,
    HomLam,
    IApp,
    IFun,
    IId,
    IJ,
    ILam,
    IPair,
    IRefl,
    ISigma,
    IVar,
    Id,
    J,
    JBI,
    Refl,
    TEntry,
    shift_base,
    shift_indexed,
    subst1_base,
)


def ivars(n: int) -> tuple:
    """The n innermost indexed variables, outermost first."""
    return tuple(IVar(n - 1 - k) for k in range(n))


def bvars(n: int) -> tuple:
    return tuple(BVar(n - 1 - k) for k in range(n))


# -- base-level path algebra --------------------------------------------------


def transport_b(fam, a, a2, p, v):
    """transport along p : Id(A, a, a2) in the family fam (under x : A)."""
    return J(a, (), shift_base(fam, 1), v, a2, p)


def ap_b(body, cod, a, a2, p):
    """ap(x. body, p) : Id(cod, body[a/x], body[a2/x]); cod must not use x."""
    motive = Id(
        shift_base(cod, 2),
        shift_base(subst1_base(body, a), 2),
        shift_base(body, 1),
    )
    return J(a, (), motive, Refl(subst1_base(body, a)), a2, p)


def sym_b(ty, a, a2, p):
    motive = Id(shift_base(ty, 2), BVar(1), shift_base(a, 2))
    return J(a, (), motive, Refl(a), a2, p)


def concat_b(ty, a, b, c, p, q):
    """p : Id(a, b), q : Id(b, c) combined into Id(a, c), by eliminating q."""
    motive = Id(shift_base(ty, 2), shift_base(a, 2), BVar(1))
    return J(b, (), motive, p, c, q)


# -- indexed-level path algebra ----------------------------------------------


def transport_i(fam, a, a2, p, v):
    return IJ(a, shift_indexed(fam, 1), v, a2, p)


def ap_i(body, cod, a, a2, p):
    motive = IId(
        shift_indexed(cod, 2),
        shift_indexed(subst1_indexed_(body, a), 2),
        shift_indexed(body, 1),
    )
    return IJ(a, motive, IRefl(subst1_indexed_(body, a)), a2, p)


def sym_i(ty, a, a2, p):
    motive = IId(shift_indexed(ty, 2), IVar(1), shift_indexed(a, 2))
    return IJ(a, motive, IRefl(a), a2, p)


def concat_i(ty, a, b, c, p, q):
    motive = IId(shift_indexed(ty, 2), shift_indexed(a, 2), IVar(1))
    return IJ(b, motive, p, c, q)


def subst1_indexed_(e, arg):
    from .syntax import subst1_indexed

    return subst1_indexed(e, arg)


# -- base paths acting on the indexed level -----------------------------------


def transport_bi(fam, a, a2, p, v):
    """Transport an indexed term along a base path; fam is under base x."""
    return JBI(a, (), (), shift_base(fam, 1), v, a2, p)


# -- morphism structure -------------------------------------------------------


def hom_id(aty) -> HomLam:
    """The identity morphism on an indexed type."""
    return HomLam((TEntry(aty, "x"),), IVar(0))


def hom_compose(g, f, aty, hint: str = "x") -> HomLam:
    """g after f as a Hom-term: lam x. g (f x)."""
    return HomLam(
        (TEntry(aty, hint),),
        HomApp(g, (HomApp(f, (IVar(0),)),)),
    )


def ifun_id() -> ILam:
    return ILam(IVar(0))


def ifun_compose(g, f) -> ILam:
    return ILam(IApp(shift_indexed(g, 1), IApp(shift_indexed(f, 1), IVar(0))))


# -- equivalence data at the indexed level -------------------------------------


def linv_ty(x, y, f):
    """Sigma over g : y -> x of Id(x -> x, g . f, id)."""
    # Under the Sigma binder g, the composite is lam v. g (f v).
    comp = ILam(IApp(IVar(1), IApp(shift_indexed(f, 2), IVar(0))))
    return ISigma(
        IFun(y, x),
        IId(
            IFun(shift_indexed(x, 1), shift_indexed(x, 1)),
            comp,
            ILam(IVar(0)),
        ),
        hint="g",
    )


def rinv_ty(x, y, f):
    comp = ILam(IApp(shift_indexed(f, 2), IApp(IVar(1), IVar(0))))
    return ISigma(
        IFun(y, x),
        IId(
            IFun(shift_indexed(y, 1), shift_indexed(y, 1)),
            comp,
            ILam(IVar(0)),
        ),
        hint="g",
    )


def biinv_ty(x, y, f):
    """linv(f) x rinv(f), encoded as a Sigma with constant second component."""
    return ISigma(linv_ty(x, y, f), shift_indexed(rinv_ty(x, y, f), 1), hint="l")


def equiv_ty(x, y):
    """Sigma over f : x -> y of biinv(f)."""
    return ISigma(
        IFun(x, y),
        biinv_ty(shift_indexed(x, 1), shift_indexed(y, 1), IVar(0)),
        hint="f",
    )


def id_equiv(x):
    """The identity equivalence on x, with definitional witnesses."""
    idf = ILam(IVar(0))
    half = IPair(idf, IRefl(idf))
    return IPair(idf, IPair(half, half))


def idtoequiv(el_c, el_x_fam, c, c2, p):
    """Transport of the identity equivalence along p : Id(U, c, c2).

    el_c is El(c); el_x_fam is El(x) under the bound code variable x.
    """
    fam = equiv_ty(shift_indexed(el_c, 1), el_x_fam)
    # fam is under x; the eliminator motive also binds the path p above it.
    return IJ(c, shift_indexed(fam, 1), id_equiv(el_c), c2, p)
