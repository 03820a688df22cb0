"""Derivations, brackets, logarithmic checks, orders, and membership."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from folprin import (
    Derivation, Foliation, IdealGens, INFINITE, Jet, NotLogarithmic, Q,
    RingContext, check_involutive, f_infty, f_order_at, f_order_rees,
    is_f_invariant, lie_bracket, log_smooth_at, parse_derivation, parse_poly,
    rees_from_ideal, sm_rank_at,
)
from folprin.foliation import in_jet_span, jet_module_coeffs, membership_degree

CTX = RingContext(["x", "y"], truncation=8)
CTXD = RingContext(["x", "y"], divisor=["x"], truncation=8)


def J(text, ctx=CTX):
    return parse_poly(ctx, text)


def D(text, ctx=CTX):
    return parse_derivation(ctx, text)


# -- derivations -------------------------------------------------------------

def test_apply_is_a_derivation():
    d = D("x*d/dx - y*d/dy")
    f, g = J("x^2"), J("x*y")
    assert d.apply(f * g) == d.apply(f) * g + f * d.apply(g)
    assert d.apply(J("x")) == J("x")
    assert d.apply(Jet.const(CTX, 5)).is_zero()


def test_logarithmic_enforced_by_foliation():
    with pytest.raises(NotLogarithmic):
        Foliation(CTXD, [D("d/dx", CTXD)])
    F = Foliation(CTXD, [D("x*d/dx", CTXD), D("d/dy", CTXD)])
    assert len(F) == 2


def test_full_foliation_respects_flags():
    F = Foliation.full(CTXD)
    coeffs = {str(d): d for d in F}
    assert any(d.coefficient("x") == J("x", CTXD) for d in F)
    assert any(d.coefficient("y").is_unit() for d in F)


@st.composite
def small_derivations(draw):
    coeffs = {}
    for v in CTX.variables:
        deg = draw(st.integers(0, 2))
        c = draw(st.integers(-3, 3))
        if c:
            coeffs[v] = Jet.monomial(CTX, {"x": deg}, c)
    return Derivation(CTX, coeffs)


@settings(max_examples=40, deadline=None)
@given(small_derivations(), small_derivations(), small_derivations())
def test_bracket_antisymmetry_and_jacobi(a, b, c):
    zero = Derivation.zero(CTX)
    ab = lie_bracket(a, b)
    assert ab + lie_bracket(b, a) == zero
    jac = (lie_bracket(a, lie_bracket(b, c))
           + lie_bracket(b, lie_bracket(c, a))
           + lie_bracket(c, lie_bracket(a, b)))
    # Jacobi holds exactly below the precision boundary
    for v, coeff in jac.coefficients.items():
        for e in coeff.terms:
            assert sum(e) >= CTX.truncation - 2


def test_check_involutive():
    ok, _ = check_involutive(Foliation(CTX, [D("d/dx"), D("d/dy")]))
    assert ok
    ok, _ = check_involutive(Foliation(CTX, [D("x*d/dx"), D("y*d/dy")]))
    assert ok
    ok, witness = check_involutive(Foliation(CTX, [D("d/dx"), D("x^2*d/dy")]))
    assert not ok and witness == D("2*x*d/dy")


# -- membership --------------------------------------------------------------

def test_jet_membership():
    gens = [J("x^2"), J("y")]
    deg = membership_degree(CTX, gens)
    assert in_jet_span(J("x^2 + 3*y"), gens, deg)
    assert in_jet_span(J("x^3*y"), gens, deg)
    assert not in_jet_span(J("x"), gens, deg)


def test_derivation_membership_componentwise():
    gens = [D("d/dx"), D("y*d/dy")]
    deg = membership_degree(CTX, gens)
    assert jet_module_coeffs(D("x*d/dx + y^2*d/dy"), gens, deg) is not None
    assert jet_module_coeffs(D("d/dy"), gens, deg) is None


# -- orders ------------------------------------------------------------------

def test_f_order_examples():
    I = IdealGens(CTX, [J("x^5 + y")])
    assert f_order_at(Foliation(CTX, [D("d/dx")]), I) == 5
    assert f_order_at(Foliation(CTX, [D("d/dx"), D("d/dy")]), I) == 1
    assert f_order_at(Foliation(CTX, [D("d/dy")]),
                      IdealGens(CTX, [J("x")])) == INFINITE
    assert f_order_at(Foliation.full(CTX), IdealGens(CTX, [J("1 + x")])) == 0


def test_f_order_rees_minimizes_over_degrees():
    F = Foliation(CTX, [D("d/dx"), D("d/dy")])
    from folprin import ReesAlgebra
    R = ReesAlgebra(CTX, [(J("x^4"), Q(2)), (J("y^3"), Q(1))])
    # min(4/2, 3/1) = 2
    assert f_order_rees(F, R) == 2


def test_f_infty_saturates():
    F = Foliation(CTX, [D("x*d/dx - y*d/dy")])
    R = rees_from_ideal(IdealGens(CTX, [J("x*y")]))
    Rinf = f_infty(F, R)
    assert is_f_invariant(F, Rinf)


# -- rank and smoothness -----------------------------------------------------

def test_sm_rank_and_log_smooth():
    F = Foliation(CTX, [D("x*d/dx + y^2*d/dy")])
    assert sm_rank_at(F, (Q(0), Q(0))) == 0
    assert sm_rank_at(F, (Q(1), Q(0))) == 1
    assert not log_smooth_at(F)                      # E = {} : not log-smooth
    FD = Foliation(CTXD, [D("x*d/dx + y^2*d/dy", CTXD)])
    assert log_smooth_at(FD)                         # E = {x=0} : log-smooth
