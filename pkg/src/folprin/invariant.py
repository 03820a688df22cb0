"""The inv_F recursion: maximal contact, coefficient descent, F^infty
fallback, and the invariant-maximal aligned center.

Case I (finite order a): extract a maximal contact coordinate from a
derivative word of length a*b-1, change coordinates so it becomes a
variable, rectify and split the foliation along it, restrict the
coefficient Rees algebra to the contact hyperplane and recurse; the entry a
is prepended and the contact variable joins the transverse tier with weight
a.

Case II (infinite order): saturate R under F at fixed degrees, then enlarge
the foliation (F -> D^log -> D, clearing divisor flags on the last step) and
tier-lift the recursive answer by one infinity marker.

The returned center is certified on the way out: admissibility of the input
R and agreement between the recursion's invariant vector and the center's
own tier vector.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Optional

from .foliation import (
    BudgetExhausted, Derivation, Foliation, INFINITE, IdealGens,
    f_infty, f_order_at, f_order_rees, in_jet_span, membership_degree,
    restrict_to_hypersurface,
)
from .kernel import Jet, Q, RingContext
from .rectify import CertificateFailure, CoordinateChange, split_foliation
from .rees import (
    Center, InvValue, InvVector, ReesAlgebra, center_inv, coefficient_rees,
    fin, is_admissible, rees_from_ideal,
)


class PointedInstance:
    """An (R, F) pair at the origin of its context."""

    __slots__ = ("context", "rees", "foliation")

    def __init__(self, context: RingContext, rees: ReesAlgebra, foliation: Foliation):
        if rees.context != context or foliation.context != context:
            raise ValueError("instance pieces live in different contexts")
        object.__setattr__(self, "context", context)
        object.__setattr__(self, "rees", rees)
        object.__setattr__(self, "foliation", foliation)

    def __setattr__(self, *a):
        raise AttributeError("PointedInstance is immutable")


def find_maximal_contact(inst: PointedInstance, a):
    """First maximal contact element in deterministic order: generators of
    R by index, derivative words over F generators in shortlex.

    Returns (x1 jet normalized to unit linear coefficient, word, d).
    """
    R, F, ctx = inst.rees, inst.foliation, inst.context
    a = Q(a)
    for f, b in R.generators:
        o = f_order_at(F, IdealGens(ctx, [f]))
        if o == INFINITE or Q(o) != a * b:
            continue
        k = len(F.generators)
        for word in itertools.product(range(k), repeat=o - 1):
            g = f
            dead = False
            for i in word:
                g = F.generators[i].apply(g)
                if g.is_zero():
                    dead = True
                    break
            if dead:
                continue
            for d in F.generators:
                dg = d.apply(g)
                if dg.is_unit():
                    x1 = g * (Q(1) / dg.constant_term())
                    return x1, word, d
    raise BudgetExhausted(
        "no maximal contact found at order %s despite finite F-order "
        "(precision exhausted)" % a)


def _contact_variable(ctx: RingContext, x1: Jet) -> str:
    """The free variable carrying the contact coordinate: first in context
    order with a nonzero linear coefficient."""
    for v in ctx.variables:
        if ctx.is_divisor(v):
            continue
        if x1.coefficient({v: 1}) != 0:
            return v
    raise CertificateFailure(
        "maximal contact %s has no free linear variable" % x1)


def _identity_map(ctx: RingContext) -> dict:
    return {v: Jet.variable(ctx, v) for v in ctx.variables}


def _foliations_equal_span(F: Foliation, G: Foliation) -> bool:
    """G subset span(F) and F subset span(G), to membership precision."""
    from .foliation import jet_module_coeffs
    allgens = list(F.generators) + list(G.generators)
    deg = membership_degree(F.context, allgens)
    for d in G.generators:
        if jet_module_coeffs(d, list(F.generators), deg) is None:
            return False
    for d in F.generators:
        if jet_module_coeffs(d, list(G.generators), deg) is None:
            return False
    return True


def _worker(ctx: RingContext, R: ReesAlgebra, F: Foliation, depth: int):
    """Returns (entries, tiers, inverse map).

    entries: list of InvValue in recursion order.
    tiers:   list of (variable, weight, tier index).
    map:     dict ambient-variable -> jet in the aligned coordinates of the
             same context (names are reused through every change).
    """
    if depth > len(ctx.variables) * 3 + 6:
        raise BudgetExhausted("invariant recursion failed to terminate")
    if R.is_trivial():
        return [], [], _identity_map(ctx)
    if R.has_unit_generator():
        # the point is off the support: minimal invariant, empty center
        return [fin(0)], [], _identity_map(ctx)
    a = f_order_rees(F, R)
    if a != INFINITE:
        return _case_one(ctx, R, F, Q(a), depth)
    return _case_two(ctx, R, F, depth)


def _case_one(ctx, R, F, a, depth):
    x1, word, d = find_maximal_contact(PointedInstance(ctx, R, F), a)
    v = _contact_variable(ctx, x1)
    cc = CoordinateChange(ctx, {v: x1})
    R1 = ReesAlgebra(ctx, [(cc.push_jet(f), b) for f, b in R.generators])
    F1 = Foliation(ctx, [cc.push_derivation(g) for g in F.generators])
    d1 = cc.push_derivation(d)
    C = coefficient_rees(R1, F1, a)
    chart, splitgens = split_foliation(F1, v, d1)
    rect = chart.change
    subctx = ctx.drop(v)
    zero_v = {v: Jet.zero(ctx)}
    sub_gens = []
    for f, b in C.generators:
        g = rect.push_jet(f).substitute(zero_v, ctx).rename(subctx)
        if not g.is_zero():
            sub_gens.append((g, b))
    Csub = ReesAlgebra(subctx, sub_gens)
    FH = restrict_to_hypersurface(Foliation(ctx, splitgens), v)
    sub_entries, sub_tiers, sub_map = _worker(subctx, Csub, FH, depth + 1)
    entries = [fin(a)] + sub_entries
    tiers = [(v, a, 0)] + sub_tiers
    # compose: ambient -> contact coords -> rectified coords -> sub-aligned
    total = cc.then(rect)
    lifted_sub = {w: g.rename(ctx) for w, g in sub_map.items()}
    out_map = {}
    for u in ctx.variables:
        out_map[u] = total.inverse[u].substitute(lifted_sub, ctx)
    return entries, tiers, out_map


def _case_two(ctx, R, F, depth):
    Rinf = f_infty(F, R)
    dlog = Foliation.full(ctx)
    if not _foliations_equal_span(F, dlog):
        # enlarge F to the log tangent sheaf; one infinity marker
        sub_entries, sub_tiers, sub_map = _worker(ctx, Rinf, dlog, depth + 1)
        entries = [e.lifted() for e in sub_entries]
        tiers = [(v, w, min(t + 1, 2)) for v, w, t in sub_tiers]
        return entries, tiers, sub_map
    if not ctx.divisor:
        raise CertificateFailure(
            "F spans the full tangent sheaf yet the order is infinite")
    # F is the full log tangent sheaf: pass to all derivations by clearing
    # the divisor flags.  Variables detected below that are divisor
    # components land in the divisorial tier (two markers); free ones in
    # the invariant tier.
    ctx2 = ctx.clear_divisor()
    R2 = Rinf.rename(ctx2)
    sub_entries, sub_tiers, sub_map = _worker(ctx2, R2, Foliation.full(ctx2),
                                              depth + 1)
    sub_map = {u: g.rename(ctx) for u, g in sub_map.items()}
    if len(sub_entries) != len(sub_tiers):
        raise CertificateFailure("entry/tier bookkeeping out of step")
    entries = []
    tiers = []
    for e, (v, w, t) in zip(sub_entries, sub_tiers):
        new_t = 2 if ctx.is_divisor(v) else min(t + 1, 2)
        entries.append(InvValue(new_t, e.offset))
        tiers.append((v, w, new_t))
    return entries, tiers, sub_map


def inv_at(inst: PointedInstance):
    """Compute (InvVector, Center) for the instance at the origin.

    The center's admissibility for the input R is asserted before
    returning, as is agreement of the invariant vector with the center's
    tier vector.
    """
    ctx = inst.context
    entries, tiers, inv_map = _worker(ctx, inst.rees, inst.foliation, 0)
    vec = InvVector(entries)
    by_tier = {0: [], 1: [], 2: []}
    for v, w, t in tiers:
        if t > 2:
            raise CertificateFailure("tier overflow on variable %s" % v)
        by_tier[t].append((v, w))
    from .rectify import invert_jet_map
    identity = all(inv_map[u] == Jet.variable(ctx, u) for u in ctx.variables)
    forward = _identity_map(ctx) if identity else invert_jet_map(ctx, inv_map)
    aligned = tuple(Derivation.partial(ctx, v) for v, _ in by_tier[0])
    center = Center(
        ctx,
        transverse=by_tier[0],
        invariant=by_tier[1],
        divisorial=by_tier[2],
        chart=forward,
        inverse_chart=None if identity else inv_map,
        aligned_derivations=aligned,
    )
    if not center.is_empty() and entries and entries != [fin(0)]:
        if not is_admissible(inst.rees, center):
            raise CertificateFailure(
                "computed center %s is not admissible for %s" % (center, inst.rees))
        cvec = center_inv(center)
        if cvec != vec:
            raise CertificateFailure(
                "recursion vector %s disagrees with center vector %s" % (vec, cvec))
    return vec, center


def check_transverse(inst: PointedInstance, Y: IdealGens) -> bool:
    """Transverse-section criterion: inv of O[tI_Y] is all ones of length
    equal to the codimension (rank of the generators' linear parts)."""
    vec, _ = inv_at(PointedInstance(inst.context, rees_from_ideal(Y),
                                    inst.foliation))
    lin_rows = []
    for g in Y.generators:
        lin_rows.append([g.coefficient({v: 1}) for v in inst.context.variables])
    from .foliation import _rank_rational
    p = _rank_rational(lin_rows) if lin_rows else 0
    return (len(vec) == p
            and all(e == fin(1) for e in vec.entries))
