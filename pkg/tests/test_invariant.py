"""The invariant recursion: golden values, tiers, and certificates."""

from fractions import Fraction

import pytest

from folprin import (
    Center, Derivation, Foliation, IdealGens, InvValue, InvVector, Jet,
    PointedInstance, Q, ReesAlgebra, RingContext, center_inv, check_transverse,
    compare_inv, fin, find_maximal_contact, inv_at, is_admissible,
    parse_derivation, parse_poly, rees_from_ideal,
)

INF = lambda c: InvValue(1, c)
INF2 = lambda c: InvValue(2, c)


def make(variables, divisor, ideal_texts, fol_texts, truncation=16,
         rees=None):
    ctx = RingContext(variables, divisor=divisor, truncation=truncation)
    if rees is not None:
        R = ReesAlgebra(ctx, [(parse_poly(ctx, t), Q(b)) for t, b in rees])
    else:
        R = rees_from_ideal(IdealGens(ctx, [parse_poly(ctx, t)
                                            for t in ideal_texts]))
    if fol_texts == "full":
        F = Foliation.full(ctx)
    else:
        F = Foliation(ctx, [parse_derivation(ctx, t) for t in fol_texts])
    return PointedInstance(ctx, R, F)


def test_vertical_line_golden():
    inst = make(["x", "y"], [], ["x^5 + y"], ["d/dx"])
    vec, center = inv_at(inst)
    assert vec == InvVector([fin(5), INF(1)])
    assert center.transverse == (("x", Q(5)),)
    assert center.invariant == (("y", Q(1)),)
    assert center.divisorial == ()


def test_plain_order():
    inst = make(["x", "y"], [], ["x^3"], "full")
    vec, center = inv_at(inst)
    assert vec == InvVector([fin(3)])
    assert center.transverse == (("x", Q(3)),)


def test_unit_ideal_off_support():
    inst = make(["x", "y"], [], ["1 + x"], "full")
    vec, center = inv_at(inst)
    assert vec == InvVector([fin(0)])
    assert center.is_empty()


def test_trivial_rees():
    ctx = RingContext(["x"], truncation=16)
    inst = PointedInstance(ctx, ReesAlgebra(ctx, []), Foliation.full(ctx))
    vec, center = inv_at(inst)
    assert len(vec) == 0 and center.is_empty()


def test_invariant_tier_single_lift():
    # x is F-infinite for span(y*d/dy): enlarging to the full tangent sheaf
    # costs one infinity marker
    inst = make(["x", "y"], [], ["x^2"], ["y*d/dy"])
    vec, center = inv_at(inst)
    assert vec == InvVector([INF(2)])
    assert center.invariant == (("x", Q(2)),)


def test_divisorial_tier_two_markers():
    # z is a divisor component and F = D^log: the variable lands in the
    # divisorial tier
    inst = make(["z", "t"], ["z"], ["z"], "full")
    vec, center = inv_at(inst)
    assert vec == InvVector([INF2(1)])
    assert center.divisorial == (("z", Q(1)),)


def test_divisor_monomial_symmetric():
    inst = make(["x", "y"], ["x", "y"], ["x*y"], "full")
    vec, center = inv_at(inst)
    assert vec == InvVector([INF2(2), INF2(2)])
    assert center.divisorial == (("x", Q(2)), ("y", Q(2)))
    assert is_admissible(inst.rees, center)


def test_mixed_free_and_divisor():
    # y free, z flagged; F = D^log; (y*z): y joins the invariant tier after
    # one enlargement, z needs the divisorial tier
    inst = make(["y", "z"], ["z"], ["y*z"], "full")
    vec, center = inv_at(inst)
    assert all(e.tier >= 1 for e in vec.entries)
    assert center_inv(center) == vec
    assert is_admissible(inst.rees, center)


def test_contact_through_shear():
    # y + x^2: maximal contact is the shifted coordinate, the center chart
    # is non-trivial
    inst = make(["x", "y"], [], ["y + x^2"], ["d/dy"])
    vec, center = inv_at(inst)
    # the coefficient data on the contact hypersurface is trivial, and the
    # length-one vector beats any (1, inf+w) under top-symbol padding
    assert vec == InvVector([fin(1)])
    assert center.transverse == (("y", Q(1)),)
    assert center.inverse_chart
    g = parse_poly(inst.context, "y + x^2")
    assert center.rewrite(g) == parse_poly(inst.context, "y")


def test_center_certificates_always_checked():
    for inst in [
        make(["x", "y"], [], ["x^2 + y^3"], "full"),
        make(["x", "y"], [], ["x^2 + y^3"], ["d/dx"]),
        make(["x", "y"], [], ["x*y"], ["x*d/dx - y*d/dy"]),
    ]:
        vec, center = inv_at(inst)
        assert center_inv(center) == vec
        assert is_admissible(inst.rees, center)


def test_cusp_with_its_symmetry():
    inst = make(["x", "y"], [], ["x*y"], ["x*d/dx - y*d/dy"])
    vec, center = inv_at(inst)
    # xy is invariant for the Euler-type field: no finite entry
    assert all(e.tier >= 1 for e in vec.entries)


def test_find_maximal_contact_normalizes():
    inst = make(["x", "y"], [], ["x^5 + y"], ["d/dx"])
    x1, word, d = find_maximal_contact(inst, 5)
    assert x1.coefficient({"x": 1}) == 1
    assert len(word) == 4


def test_check_transverse_cases():
    ctx = RingContext(["x", "y"], truncation=16)
    F1 = Foliation(ctx, [parse_derivation(ctx, "d/dx")])
    inst = PointedInstance(ctx, ReesAlgebra(ctx, []), F1)
    assert check_transverse(inst, IdealGens(ctx, [parse_poly(ctx, "x")]))
    assert check_transverse(inst, IdealGens(ctx, [parse_poly(ctx, "x + y^2")]))
    assert not check_transverse(inst, IdealGens(ctx, [parse_poly(ctx, "y")]))
    assert not check_transverse(
        inst, IdealGens(ctx, [parse_poly(ctx, "x"), parse_poly(ctx, "y")]))
    inst2 = PointedInstance(ctx, ReesAlgebra(ctx, []), Foliation.full(ctx))
    assert check_transverse(
        inst2, IdealGens(ctx, [parse_poly(ctx, "x"), parse_poly(ctx, "y")]))


def test_functoriality_fresh_variables():
    base = make(["x", "y"], [], ["x^5 + y"], ["d/dx"])
    vec0, _ = inv_at(base)
    # fresh free variable with its coordinate field
    inst1 = make(["x", "y", "u"], [], ["x^5 + y"], ["d/dx", "d/du"])
    vec1, _ = inv_at(inst1)
    assert compare_inv(vec0, vec1) == 0
    # fresh divisorial variable with the log extension z*d/dz
    inst2 = make(["x", "y", "z"], ["z"], ["x^5 + y"], ["d/dx", "z*d/dz"])
    vec2, _ = inv_at(inst2)
    assert compare_inv(vec0, vec2) == 0
