"""Cobordant blow-ups: golden transforms, ledgers, and chart reports."""

from fractions import Fraction

import pytest

from folprin import (
    Center, Derivation, Foliation, Jet, Q, ReesAlgebra, RingContext,
    build_cobordant, chart_transform_derivation, etale_chart, parse_derivation,
    parse_poly, transform_derivation, transform_element, transform_foliation,
    transform_rees,
)
from folprin.blowup import EXCEPTIONAL


def ctx2(truncation=12, divisor=()):
    return RingContext(["x", "y"], divisor=divisor, truncation=truncation)


def test_weights_and_target_layout():
    ctx = ctx2()
    C = Center(ctx, transverse=[("x", Q(2)), ("y", Q(3))])
    B = build_cobordant(C)
    assert B.w == 6
    assert B.weights == {"x": 3, "y": 2}
    assert B.target.variables == ("x'", "y'", "s")
    assert B.target.is_divisor("s")
    assert not B.target.is_divisor("x'")


def test_fractional_weights_scale_to_integers():
    ctx = ctx2()
    C = Center(ctx, transverse=[("x", Q(1, 2)), ("y", Q(1, 3))])
    B = build_cobordant(C)
    assert all(isinstance(w, int) for w in B.weights.values())
    assert B.weights["x"] * Q(1, 2) == B.weights["y"] * Q(1, 3) == B.w


def test_pullback_identity():
    ctx = ctx2()
    C = Center(ctx, transverse=[("x", Q(1)), ("y", Q(2))])
    B = build_cobordant(C)
    f = parse_poly(ctx, "x^2*y + y^3")
    g = B.pullback(f)
    # x -> s^2 x', y -> s y'
    assert g == parse_poly(B.target, "s^5*x'^2*y' + s^3*y'^3")


def test_example_weighted_surface():
    ctx = RingContext(["x", "y", "z"], truncation=30)
    C = Center(ctx, transverse=[("x", Q(4)), ("y", Q(7)), ("z", Q(20))])
    B = build_cobordant(C)
    assert B.w == 140
    assert (B.weights["x"], B.weights["y"], B.weights["z"]) == (35, 20, 7)
    f = parse_poly(ctx, "x^4 + y^7 + z^20 + z^21")
    want = parse_poly(B.target, "x'^4 + y'^7 + z'^20 + z'^21*s^7")
    for mode in ("controlled", "strict"):
        g, k = transform_element(B, f, mode=mode, a=Q(1))
        assert g == want


def test_controlled_vs_strict_elements():
    ctx = ctx2()
    C = Center(ctx, transverse=[("x", Q(1)), ("y", Q(1))])
    B = build_cobordant(C)
    f = parse_poly(ctx, "x^3")
    g_c, k_c = transform_element(B, f, "controlled", a=Q(2))
    g_s, k_s = transform_element(B, f, "strict", a=Q(2))
    assert g_c == parse_poly(B.target, "s*x'^3") and k_c == 2
    assert g_s == parse_poly(B.target, "x'^3") and k_s == 3


def test_cusp_pair_transforms():
    ctx = ctx2()
    C = Center(ctx, transverse=[("x", Q(1)), ("y", Q(1))])
    B = build_cobordant(C)
    R = ReesAlgebra(ctx, [(parse_poly(ctx, "x*y"), Q(2)),
                          (parse_poly(ctx, "x^3"), Q(2)),
                          (parse_poly(ctx, "y^3"), Q(2))])
    Rc = transform_rees(B, R, "controlled")
    Rs = transform_rees(B, R, "strict")
    t = B.target
    assert {str(f) for f, _ in Rc.generators} == {"x'*y'", "x'^3*s", "y'^3*s"}
    assert {str(f) for f, _ in Rs.generators} == {"x'*y'", "x'^3", "y'^3"}
    F = Foliation(ctx, [parse_derivation(ctx, "(x^2+y^2)*d/dx + x*y*d/dy")])
    Fc = transform_foliation(B, F, "controlled")
    Fs = transform_foliation(B, F, "strict")
    (dc,) = Fc.generators
    (ds,) = Fs.generators
    assert dc.coefficient("x'") == parse_poly(t, "s*(x'^2+y'^2)")
    assert dc.coefficient("y'") == parse_poly(t, "s*x'*y'")
    assert ds.coefficient("x'") == parse_poly(t, "x'^2+y'^2")
    assert ds.coefficient("y'") == parse_poly(t, "x'*y'")
    # negative witness: the strict generator moves x'y' out of the
    # controlled transform
    from folprin.foliation import in_jet_span, membership_degree
    moved = ds.apply(parse_poly(t, "x'*y'"))
    assert moved == parse_poly(t, "y'^3 + 2*x'^2*y'")
    gens = [f for f, _ in Rc.generators]
    deg = membership_degree(t, gens + [parse_poly(t, "y'^3")])
    assert not in_jet_span(parse_poly(t, "y'^3"), gens, deg)


def test_derivation_ledgers():
    ctx = ctx2()
    C = Center(ctx, transverse=[("x", Q(1)), ("y", Q(1))])
    B = build_cobordant(C)
    d = parse_derivation(ctx, "x^2*d/dx - y^2*d/dy")
    Ds, ks = transform_derivation(B, d, "strict")
    Dc, kc = transform_derivation(B, d, "controlled")
    t = B.target
    assert ks == -1
    assert Ds.coefficient("x'") == parse_poly(t, "x'^2")
    assert Ds.coefficient("y'") == parse_poly(t, "-y'^2")
    assert kc == 0
    assert Dc.coefficient("x'") == parse_poly(t, "s*x'^2")
    assert Dc.coefficient("y'") == parse_poly(t, "-s*y'^2")


def test_partial_transforms_cleanly():
    ctx = ctx2()
    C = Center(ctx, transverse=[("x", Q(1)), ("y", Q(1))])
    B = build_cobordant(C)
    d = parse_derivation(ctx, "d/dx")
    for mode in ("strict", "controlled"):
        D, k = transform_derivation(B, d, mode)
        assert D.coefficient("x'").is_unit()
        assert (k == 1) == (mode == "strict") or mode == "controlled"


def test_etale_chart_report():
    ctx = RingContext(["x", "y", "z"], truncation=28)
    C = Center(ctx, transverse=[("x", Q(4)), ("y", Q(7)), ("z", Q(20))])
    B = build_cobordant(C)
    ch = etale_chart(B, "x")
    rep = ch.report()
    assert "x -> s~^35" in rep
    assert "y -> s~^20*y~" in rep
    assert "z -> s~^7*z~" in rep
    assert "mu 35: s~ -> -1, y~ -> 20, z~ -> 7" in rep


def test_chart_derivation_table():
    ctx = ctx2()
    C = Center(ctx, transverse=[("x", Q(1)), ("y", Q(1))])
    B = build_cobordant(C)
    ch = etale_chart(B, "x")
    dx = chart_transform_derivation(ch, parse_derivation(ctx, "d/dx"))
    # tau(d/dx) = s~ d/ds~ - y~ d/dy~
    assert dx.coefficient("s~") == parse_poly(ch.context, "s~")
    assert dx.coefficient("y~") == parse_poly(ch.context, "-y~")
    dy = chart_transform_derivation(ch, parse_derivation(ctx, "d/dy"))
    assert dy.coefficient("y~").is_unit()


def test_admissibility_required_for_controlled_rees():
    ctx = ctx2()
    C = Center(ctx, transverse=[("x", Q(3)), ("y", Q(3))])
    B = build_cobordant(C)
    R = ReesAlgebra(ctx, [(parse_poly(ctx, "x"), Q(1))])
    with pytest.raises(Exception):
        transform_rees(B, R, "controlled")


def test_empty_center_rejected():
    ctx = ctx2()
    with pytest.raises(ValueError):
        build_cobordant(Center(ctx))
