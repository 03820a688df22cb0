"""Derivations, foliations, F-derivative chains and order, rank tests.

A derivation is a vector field sum_v c_v d/dv with jet coefficients.  It is
logarithmic when the coefficient of every divisor-flagged variable z lies in
(z); foliations are finite generator lists inside the logarithmic tangent
sheaf, involutive up to truncation.

Module membership (involutivity, F-invariance, stabilization of derivative
chains) is decided by exact linear algebra over Q on monomial multiples up
to a degree bound, never by Groebner bases.  Every verdict is therefore a
"to precision D" verdict; the bound is chosen as the degree of the data plus
a slack, capped by the remaining truncation budget, and chain iterations
that exhaust the budget raise BudgetExhausted instead of guessing.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .kernel import (
    ContextMismatch, IdealGens, Jet, Q, RingContext, grlex_key, linsolve,
)

MEMBERSHIP_SLACK = 4

INFINITE = "INFINITE"


class BudgetExhausted(RuntimeError):
    """Truncation precision ran out before a verdict was reached."""


class NotLogarithmic(ValueError):
    pass


class Derivation:
    __slots__ = ("context", "coefficients")

    def __init__(self, context: RingContext, coefficients: Mapping[str, Jet]):
        coeffs = {}
        for v, c in coefficients.items():
            if v not in context.variables:
                raise ValueError("coefficient for unknown variable %r" % v)
            if c.context != context:
                raise ContextMismatch("coefficient jet in a foreign context")
            if not c.is_zero():
                coeffs[v] = c
        object.__setattr__(self, "context", context)
        object.__setattr__(self, "coefficients", coeffs)

    def __setattr__(self, *a):
        raise AttributeError("Derivation is immutable")

    @staticmethod
    def zero(ctx: RingContext) -> "Derivation":
        return Derivation(ctx, {})

    @staticmethod
    def partial(ctx: RingContext, name: str) -> "Derivation":
        return Derivation(ctx, {name: Jet.const(ctx, 1)})

    def coefficient(self, v: str) -> Jet:
        return self.coefficients.get(v, Jet.zero(self.context))

    def is_zero(self) -> bool:
        return not self.coefficients

    def is_logarithmic(self) -> bool:
        for z in self.context.divisor:
            c = self.coefficients.get(z)
            if c is not None and c.var_order(z) == 0:
                return False
        return True

    def apply(self, f: Jet) -> Jet:
        if f.context != self.context:
            raise ContextMismatch("derivation applied to a foreign jet")
        out = Jet.zero(self.context)
        for v, c in self.coefficients.items():
            out = out + c * f.partial(v)
        return out

    def __add__(self, other: "Derivation") -> "Derivation":
        if self.context != other.context:
            raise ContextMismatch("derivation contexts differ")
        coeffs = dict(self.coefficients)
        for v, c in other.coefficients.items():
            coeffs[v] = coeffs.get(v, Jet.zero(self.context)) + c
        return Derivation(self.context, coeffs)

    def __neg__(self):
        return Derivation(self.context, {v: -c for v, c in self.coefficients.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, g) -> "Derivation":
        """Multiply by a jet or rational."""
        if not isinstance(g, Jet):
            g = Jet.const(self.context, g)
        return Derivation(self.context,
                          {v: g * c for v, c in self.coefficients.items()})

    def translate(self, point: Mapping[str, Fraction]) -> "Derivation":
        return Derivation(self.context,
                          {v: c.translate(point) for v, c in self.coefficients.items()})

    def rename(self, target: RingContext, mapping=None) -> "Derivation":
        mapping = mapping or {}
        return Derivation(target, {mapping.get(v, v): c.rename(target, mapping)
                                   for v, c in self.coefficients.items()})

    def __eq__(self, other):
        return (isinstance(other, Derivation)
                and self.context == other.context
                and self.coefficients == other.coefficients)

    def __hash__(self):
        return hash((self.context,
                     frozenset((v, c) for v, c in self.coefficients.items())))

    def __str__(self):
        if not self.coefficients:
            return "0"
        parts = []
        for v in self.context.variables:
            c = self.coefficients.get(v)
            if c is None:
                continue
            if c == Jet.const(self.context, 1):
                parts.append("d/d%s" % v)
            elif len(c.terms) == 1:
                parts.append("%s*d/d%s" % (c, v))
            else:
                parts.append("(%s)*d/d%s" % (c, v))
        return " + ".join(parts)

    __repr__ = __str__


def apply_derivation(d: Derivation, f: Jet) -> Jet:
    return d.apply(f)


def lie_bracket(a: Derivation, b: Derivation) -> Derivation:
    if a.context != b.context:
        raise ContextMismatch("derivation contexts differ")
    ctx = a.context
    coeffs = {}
    for v in ctx.variables:
        c = a.apply(b.coefficient(v)) - b.apply(a.coefficient(v))
        if not c.is_zero():
            coeffs[v] = c
    return Derivation(ctx, coeffs)


class Foliation:
    __slots__ = ("context", "generators")

    def __init__(self, context: RingContext, generators: Iterable[Derivation]):
        gens = []
        for d in generators:
            if d.context != context:
                raise ContextMismatch("generator in a foreign context")
            if d.is_zero():
                continue
            if not d.is_logarithmic():
                raise NotLogarithmic("generator %s is not logarithmic" % d)
            gens.append(d)
        object.__setattr__(self, "context", context)
        object.__setattr__(self, "generators", tuple(gens))

    def __setattr__(self, *a):
        raise AttributeError("Foliation is immutable")

    @staticmethod
    def zero(ctx: RingContext) -> "Foliation":
        return Foliation(ctx, ())

    @staticmethod
    def full(ctx: RingContext) -> "Foliation":
        """D^log: coordinate fields on free variables, z d/dz on divisors."""
        gens = []
        for v in ctx.variables:
            if ctx.is_divisor(v):
                gens.append(Derivation(ctx, {v: Jet.variable(ctx, v)}))
            else:
                gens.append(Derivation.partial(ctx, v))
        return Foliation(ctx, gens)

    def is_zero(self) -> bool:
        return not self.generators

    def __iter__(self):
        return iter(self.generators)

    def __len__(self):
        return len(self.generators)

    def translate(self, point) -> "Foliation":
        return Foliation(self.context, [d.translate(point) for d in self.generators])

    def rename(self, target, mapping=None) -> "Foliation":
        return Foliation(target, [d.rename(target, mapping) for d in self.generators])

    def __str__(self):
        return "span(%s)" % "; ".join(str(d) for d in self.generators)

    __repr__ = __str__


# ---------------------------------------------------------------------------
# membership by linear algebra

def _monomials_upto(nvars: int, degree: int):
    out = []
    for d in range(degree + 1):
        for c in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for i in c:
                e[i] += 1
            out.append(tuple(e))
    return out


def jet_module_coeffs(target, gens, degree):
    """Express `target` as sum h_i * gens[i] with jet multipliers, modulo
    terms of total degree > `degree`.

    `target` and each generator may be a Jet (ideal membership) or a
    Derivation (submodule membership, componentwise).  Returns the list of
    multiplier jets, or None when no solution exists at this precision.
    """
    if not gens:
        is_deriv = isinstance(target, Derivation)
        zero = target.is_zero()
        return [] if zero else None
    ctx = gens[0].context
    nvars = len(ctx.variables)
    degree = min(degree, ctx.truncation)
    monos = _monomials_upto(nvars, degree)
    mono_index = {}

    def row_of(comp, exp):
        key = (comp, exp)
        if key not in mono_index:
            mono_index[key] = len(mono_index)
        return mono_index[key]

    def components(obj):
        if isinstance(obj, Derivation):
            return [(v, obj.coefficient(v)) for v in ctx.variables]
        return [(None, obj)]

    columns = []
    col_keys = []
    for i, g in enumerate(gens):
        comps = components(g)
        gord = min((c.order() for _, c in comps if not c.is_zero()), default=0)
        for m in monos:
            if sum(m) + (gord or 0) > degree:
                continue
            col = {}
            for comp, cjet in comps:
                for e, c in cjet.terms.items():
                    tot = tuple(a + b for a, b in zip(e, m))
                    if sum(tot) > degree:
                        continue
                    r = row_of(comp, tot)
                    col[r] = col.get(r, Q(0)) + c
            columns.append(col)
            col_keys.append((i, m))
    rhs = {}
    for comp, cjet in components(target):
        for e, c in cjet.terms.items():
            if sum(e) > degree:
                continue
            rhs[row_of(comp, e)] = c
    sol = linsolve(columns, rhs, len(mono_index))
    if sol is None:
        return None
    mults = [Jet.zero(ctx) for _ in gens]
    for (i, m), x in zip(col_keys, sol):
        if x != 0:
            mults[i] = mults[i] + Jet(ctx, {m: x})
    return mults


def in_jet_span(target, gens, degree) -> bool:
    return jet_module_coeffs(target, list(gens), degree) is not None


def membership_degree(ctx: RingContext, jets, budget: Optional[int] = None) -> int:
    """Degree bound for membership tests: data degree plus slack, capped by
    the remaining budget."""
    maxdeg = 0
    for f in jets:
        if isinstance(f, Derivation):
            for c in f.coefficients.values():
                maxdeg = max(maxdeg, c.degree())
        else:
            maxdeg = max(maxdeg, f.degree())
    cap = ctx.truncation if budget is None else budget
    return max(0, min(cap, maxdeg + MEMBERSHIP_SLACK))


def check_involutive(F: Foliation):
    """(True, None) when every pairwise bracket stays in the generator
    module; (False, offending bracket) otherwise."""
    gens = list(F.generators)
    ctx = F.context
    deg = membership_degree(ctx, gens, ctx.truncation - 1)
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            br = lie_bracket(gens[i], gens[j])
            if br.is_zero():
                continue
            if not in_jet_span(br, gens, deg):
                return False, br
    return True, None


# ---------------------------------------------------------------------------
# F-derivative chains and order

def f_apply_ideal(F: Foliation, I: IdealGens) -> IdealGens:
    gens = list(I.generators)
    for d in F.generators:
        for f in I.generators:
            gens.append(d.apply(f))
    return IdealGens(I.context, gens)


def f_order_at(F: Foliation, I: IdealGens, budget: Optional[int] = None):
    """ord_F of I at the origin: least n with F^n(I) the unit ideal.

    Returns INFINITE only when the chain stabilizes (every new derivative
    lies in the span of the current generators to the membership precision),
    which certifies F-invariance of the stabilized ideal; otherwise raises
    BudgetExhausted when precision runs out first.
    """
    ctx = I.context
    if budget is None:
        budget = ctx.truncation
    if I.is_zero():
        return INFINITE
    current = I
    frontier = list(I.generators)
    for n in range(budget + 1):
        if current.is_unit_ideal():
            return n
        new = []
        for d in F.generators:
            for f in frontier:
                g = d.apply(f)
                if not g.is_zero():
                    new.append(g)
        deg = membership_degree(ctx, list(current.generators) + new, budget - n)
        escaped = [g for g in new
                   if not in_jet_span(g, list(current.generators), deg)]
        if not escaped:
            return INFINITE
        frontier = escaped
        current = IdealGens(ctx, list(current.generators) + escaped)
    raise BudgetExhausted(
        "F-order chain did not settle within budget %d" % budget)


def f_order_rees(F: Foliation, R) -> object:
    """min over generators (f, b) of ord_F(f)/b; INFINITE if all are."""
    best = None
    for f, b in R.generators:
        o = f_order_at(F, IdealGens(R.context, [f]))
        if o == INFINITE:
            continue
        val = Q(o) / b
        if best is None or val < best:
            best = val
    return INFINITE if best is None else best


# graded pieces of a Rees algebra (shared with module rees)

def rees_piece_gens(R, b):
    """Jet generators of the degree-b graded piece R_b as an O-module:
    products of algebra generators whose degrees sum exactly to b."""
    gens = [(f, Q(d)) for f, d in R.generators]
    b = Q(b)
    if b == 0:
        return [Jet.const(R.context, 1)]
    out = []
    seen = set()

    def rec(start, acc_jet, acc_deg):
        if acc_deg == b:
            key = frozenset(acc_jet.terms.items())
            if key not in seen and not acc_jet.is_zero():
                seen.add(key)
                out.append(acc_jet)
            return
        if start >= len(gens):
            return
        for i in range(start, len(gens)):
            f, d = gens[i]
            if acc_deg + d > b:
                continue
            rec(i, acc_jet * f, acc_deg + d)

    rec(0, Jet.const(R.context, 1), Q(0))
    return out


def is_f_invariant(F: Foliation, R) -> bool:
    """F(R_b) subset R_b for every generator degree b, tested on algebra
    generators (sufficient by the Leibniz rule)."""
    ctx = R.context
    for f, b in R.generators:
        piece = rees_piece_gens(R, b)
        for d in F.generators:
            g = d.apply(f)
            if g.is_zero():
                continue
            deg = membership_degree(ctx, piece + [g])
            if not in_jet_span(g, piece, deg):
                return False
    return True


def f_infty(F: Foliation, R):
    """Closure of R under F-derivatives at unchanged degrees (R^infty)."""
    from .rees import ReesAlgebra
    ctx = R.context
    gens = list(R.generators)
    frontier = list(gens)
    for _ in range(ctx.truncation + 1):
        new = []
        for d in F.generators:
            for f, b in frontier:
                g = d.apply(f)
                if g.is_zero():
                    continue
                cur = ReesAlgebra(ctx, gens + new)
                piece = rees_piece_gens(cur, b)
                deg = membership_degree(ctx, piece + [g])
                if not in_jet_span(g, piece, deg):
                    new.append((g, b))
        if not new:
            return ReesAlgebra(ctx, gens)
        gens.extend(new)
        frontier = new
    raise BudgetExhausted("F^infty closure did not stabilize within budget")


# ---------------------------------------------------------------------------
# rank tests

def _log_basis_matrix(F: Foliation):
    """Rows = generators, columns = log-basis elements (d/dv for free v,
    z d/dz for divisorial z); entries are jets."""
    ctx = F.context
    rows = []
    for d in F.generators:
        row = []
        for v in ctx.variables:
            c = d.coefficient(v)
            if ctx.is_divisor(v):
                # c must be z * h; extract h
                if c.var_order(v) == 0:
                    raise NotLogarithmic("generator %s not logarithmic in %s" % (d, v))
                i = ctx.index(v)
                shifted = {}
                for e, a in c.terms.items():
                    ee = list(e)
                    ee[i] -= 1
                    shifted[tuple(ee)] = a
                row.append(Jet(ctx, shifted))
            else:
                row.append(c)
        rows.append(row)
    return rows


def _rank_rational(matrix) -> int:
    rows = [list(r) for r in matrix]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    col = 0
    r = 0
    while r < len(rows) and col < ncols:
        piv = None
        for i in range(r, len(rows)):
            if rows[i][col] != 0:
                piv = i
                break
        if piv is None:
            col += 1
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][col]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col] / pv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        col += 1
        rank += 1
    return rank


def _eval_jet(f: Jet, point) -> Fraction:
    acc = Q(0)
    vals = [Q(point.get(v, 0)) if isinstance(point, dict) else Q(point[i])
            for i, v in enumerate(f.context.variables)]
    for e, c in f.terms.items():
        term = c
        for k, p in zip(e, vals):
            if k:
                term *= p ** k
        acc += term
    return acc


def _symbolic_rank(jet_matrix) -> int:
    """Rank over the fraction field, estimated as the max evaluated rank
    over a deterministic rational sample (exact from below; the sample is
    large enough for the low-degree data we handle)."""
    if not jet_matrix:
        return 0
    ctx = jet_matrix[0][0].context if jet_matrix[0] else None
    if ctx is None:
        return 0
    nvars = len(ctx.variables)
    best = 0
    samples = []
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    for shift in range(6):
        samples.append([Q(primes[(i + shift) % len(primes)], shift + 1)
                        for i in range(nvars)])
    samples.append([Q(0)] * nvars)
    for pt in samples:
        mat = [[_eval_jet(f, pt) for f in row] for row in jet_matrix]
        best = max(best, _rank_rational(mat))
    return best


def log_smooth_at(F: Foliation) -> bool:
    """Lemma-7.2 style test at the origin: the constant-term matrix in the
    log basis has rank equal to the generic rank of the presentation."""
    if F.is_zero():
        return True
    rows = _log_basis_matrix(F)
    generic = _symbolic_rank(rows)
    const = [[f.constant_term() for f in row] for row in rows]
    return _rank_rational(const) == generic


def sm_rank_at(F: Foliation, point) -> int:
    """Rank of the evaluated coefficient matrix in the plain basis d/dv."""
    ctx = F.context
    mat = []
    for d in F.generators:
        mat.append([_eval_jet(d.coefficient(v), point) for v in ctx.variables])
    if not mat:
        return 0
    return _rank_rational(mat)


def restrict_to_hypersurface(F: Foliation, x1: str) -> Foliation:
    """Restrict a split presentation {d_x1, nabla_j} to H = V(x1): keep the
    nabla generators (those with no d/dx1 component), set x1 = 0."""
    ctx = F.context
    sub = ctx.drop(x1)
    gens = []
    for d in F.generators:
        cx = d.coefficient(x1)
        if cx.is_unit():
            continue  # the transverse generator itself dies on H
        if not cx.is_zero():
            raise ValueError("generator %s is not in split form along %s" % (d, x1))
        coeffs = {}
        for v, c in d.coefficients.items():
            restricted = c.substitute({x1: Jet.zero(ctx)}, ctx).rename(sub)
            if not restricted.is_zero():
                coeffs[v] = restricted
        gens.append(Derivation(sub, coeffs))
    return Foliation(sub, gens)


# ---------------------------------------------------------------------------
# parsing / printing of derivations

def parse_derivation(ctx: RingContext, text: str) -> Derivation:
    """Syntax: `<poly> * d/d<var>` terms joined by `+` (or `-`)."""
    from .kernel import parse_poly
    coeffs = {}
    text = text.strip()
    # split on top-level + and - while respecting parentheses
    parts = []
    depth = 0
    cur = ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and cur.strip():
            parts.append(cur)
            cur = ch
        else:
            cur += ch
    if cur.strip():
        parts.append(cur)
    for part in parts:
        part = part.strip()
        if "d/d" not in part:
            raise ValueError("derivation term %r lacks d/d<var>" % part)
        head, _, tail = part.rpartition("d/d")
        var = tail.strip()
        head = head.strip()
        if head.endswith("*"):
            head = head[:-1].strip()
        if head in ("", "+"):
            poly = Jet.const(ctx, 1)
        elif head == "-":
            poly = Jet.const(ctx, -1)
        else:
            poly = parse_poly(ctx, head)
        if var not in ctx.variables:
            raise ValueError("unknown variable %r in derivation" % var)
        coeffs[var] = coeffs.get(var, Jet.zero(ctx)) + poly
    return Derivation(ctx, coeffs)
