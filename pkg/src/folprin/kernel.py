"""Exact rational polynomial / truncated power series arithmetic.

Everything downstream works over jets: multivariate polynomials over Q
truncated at a fixed total degree N.  Coefficients are `fractions.Fraction`,
exponents are tuples keyed against an immutable `RingContext` that also
records which variables cut out the boundary divisor.

Values are immutable after construction; all operations are pure.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

Q = Fraction

DEFAULT_TRUNCATION = 16


class ContextMismatch(ValueError):
    pass


class TruncationOverflow(ValueError):
    """An input polynomial has degree beyond the truncation order."""


class RingContext:
    """Ordered variable list + divisor flags + truncation order.

    The divisor-flagged variables are the components of the SNC divisor E
    (each a coordinate hyperplane).  Contexts compare by value.
    """

    __slots__ = ("variables", "divisor", "truncation", "_index")

    def __init__(self, variables, divisor=(), truncation=DEFAULT_TRUNCATION):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise ValueError("duplicate variable names: %r" % (variables,))
        divisor = frozenset(divisor)
        unknown = divisor - set(variables)
        if unknown:
            raise ValueError("divisor flags on unknown variables: %r" % sorted(unknown))
        if truncation < 1:
            raise ValueError("truncation order must be >= 1")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "divisor", divisor)
        object.__setattr__(self, "truncation", int(truncation))
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(variables)})

    def __setattr__(self, *a):
        raise AttributeError("RingContext is immutable")

    def index(self, name: str) -> int:
        return self._index[name]

    def is_divisor(self, name: str) -> bool:
        return name in self.divisor

    def __eq__(self, other):
        return (
            isinstance(other, RingContext)
            and self.variables == other.variables
            and self.divisor == other.divisor
            and self.truncation == other.truncation
        )

    def __hash__(self):
        return hash((self.variables, self.divisor, self.truncation))

    def __repr__(self):
        return "RingContext(%r, divisor=%r, N=%d)" % (
            list(self.variables), sorted(self.divisor), self.truncation)

    # derived contexts --------------------------------------------------

    def drop(self, name: str) -> "RingContext":
        return RingContext(
            tuple(v for v in self.variables if v != name),
            self.divisor - {name},
            self.truncation,
        )

    def clear_divisor(self) -> "RingContext":
        return RingContext(self.variables, (), self.truncation)

    def with_truncation(self, n: int) -> "RingContext":
        return RingContext(self.variables, self.divisor, n)

    def extend(self, name, divisor=False, front=False) -> "RingContext":
        names = (name,) + self.variables if front else self.variables + (name,)
        flags = self.divisor | ({name} if divisor else frozenset())
        return RingContext(names, flags, self.truncation)


def grlex_key(exp):
    return (sum(exp), exp)


class Jet:
    """A truncated power series: sparse exponent->Fraction map of total
    degree <= the context truncation.  Terms with zero coefficient are
    never stored."""

    __slots__ = ("context", "terms")

    def __init__(self, context: RingContext, terms: Mapping[tuple, Fraction]):
        clean = {}
        n = context.truncation
        for e, c in terms.items():
            c = Q(c)
            if c == 0:
                continue
            if sum(e) > n:
                continue
            clean[tuple(e)] = c
        object.__setattr__(self, "context", context)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *a):
        raise AttributeError("Jet is immutable")

    # constructors ------------------------------------------------------

    @staticmethod
    def zero(ctx: RingContext) -> "Jet":
        return Jet(ctx, {})

    @staticmethod
    def const(ctx: RingContext, c) -> "Jet":
        return Jet(ctx, {(0,) * len(ctx.variables): Q(c)})

    @staticmethod
    def variable(ctx: RingContext, name: str) -> "Jet":
        e = [0] * len(ctx.variables)
        e[ctx.index(name)] = 1
        return Jet(ctx, {tuple(e): Q(1)})

    @staticmethod
    def monomial(ctx: RingContext, exps: Mapping[str, int], coeff=1) -> "Jet":
        e = [0] * len(ctx.variables)
        for v, k in exps.items():
            e[ctx.index(v)] = k
        return Jet(ctx, {tuple(e): Q(coeff)})

    # inspection --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * len(self.context.variables), Q(0))

    def is_unit(self) -> bool:
        return self.constant_term() != 0

    def degree(self) -> int:
        """Total degree (of the stored truncation); -1 for the zero jet."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def order(self):
        """Minimal total degree of a term; None for the zero jet."""
        if not self.terms:
            return None
        return min(sum(e) for e in self.terms)

    def coefficient(self, exps: Mapping[str, int]) -> Fraction:
        e = [0] * len(self.context.variables)
        for v, k in exps.items():
            e[self.context.index(v)] = k
        return self.terms.get(tuple(e), Q(0))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def leading_monomial(self):
        """Graded-lex smallest term, or None."""
        if not self.terms:
            return None
        return min(self.terms, key=grlex_key)

    def var_degree(self, name: str) -> int:
        i = self.context.index(name)
        return max((e[i] for e in self.terms), default=0)

    def var_order(self, name: str):
        """Minimal exponent of `name` across terms; None for the zero jet."""
        i = self.context.index(name)
        return min((e[i] for e in self.terms), default=None)

    # arithmetic --------------------------------------------------------

    def _check(self, other: "Jet"):
        if self.context != other.context:
            raise ContextMismatch(
                "jet contexts differ: %r vs %r" % (self.context, other.context))

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = Jet.const(self.context, other)
        self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            s = terms.get(e, Q(0)) + c
            if s == 0:
                terms.pop(e, None)
            else:
                terms[e] = s
        return Jet(self.context, terms)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.context, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Jet):
            other = Jet.const(self.context, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.context,
                       {e: c * Q(other) for e, c in self.terms.items()})
        self._check(other)
        n = self.context.truncation
        out = {}
        for e1, c1 in self.terms.items():
            d1 = sum(e1)
            for e2, c2 in other.terms.items():
                if d1 + sum(e2) > n:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, Q(0)) + c1 * c2
                if s == 0:
                    out.pop(e, None)
                else:
                    out[e] = s
        return Jet(self.context, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a jet")
        out = Jet.const(self.context, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, Jet):
            if self.terms and sum(next(iter(self.terms))) >= 0:
                return self.constant_term() == other and len(self.terms) <= 1
            return not self.terms and other == 0
        return self.context == other.context and self.terms == other.terms

    def __hash__(self):
        return hash((self.context, frozenset(self.terms.items())))

    # calculus / structure ---------------------------------------------

    def partial(self, name: str) -> "Jet":
        i = self.context.index(name)
        out = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            d = list(e)
            d[i] -= 1
            out[tuple(d)] = c * e[i]
        return Jet(self.context, out)

    def truncate(self, n: int) -> "Jet":
        return Jet(self.context,
                   {e: c for e, c in self.terms.items() if sum(e) <= n})

    def inverse(self) -> "Jet":
        """Multiplicative inverse of a unit jet (geometric series)."""
        c0 = self.constant_term()
        if c0 == 0:
            raise ValueError("jet is not a unit")
        ctx = self.context
        one = Jet.const(ctx, 1)
        u = self * (Q(1) / c0)          # 1 + h, h in the maximal ideal
        h = one - u
        acc = one
        powh = one
        for _ in range(ctx.truncation):
            powh = powh * h
            if powh.is_zero():
                break
            acc = acc + powh
        return acc * (Q(1) / c0)

    def substitute(self, images: Mapping[str, "Jet"], target: RingContext = None) -> "Jet":
        """Compose: replace each variable by its image jet.

        Unmapped variables are carried across by name (they must exist in
        the target context).  The result is truncated at the target order.
        """
        if target is None:
            target = next(iter(images.values())).context if images else self.context
        imgs = {}
        for v in self.context.variables:
            if v in images:
                g = images[v]
                if g.context != target:
                    raise ContextMismatch("image of %s lives in a foreign context" % v)
                imgs[v] = g
            else:
                imgs[v] = Jet.variable(target, v)
        out = Jet.zero(target)
        powers = {v: [Jet.const(target, 1)] for v in self.context.variables}
        for e, c in self.terms.items():
            term = Jet.const(target, c)
            for v, k in zip(self.context.variables, e):
                if k == 0:
                    continue
                cache = powers[v]
                while len(cache) <= k:
                    cache.append(cache[-1] * imgs[v])
                term = term * cache[k]
                if term.is_zero():
                    break
            out = out + term
        return out

    def translate(self, point: Mapping[str, Fraction]) -> "Jet":
        """Recenter at the given point: v -> v + point[v]."""
        imgs = {}
        for v, c in point.items():
            if c == 0:
                continue
            if self.context.is_divisor(v):
                raise ValueError(
                    "divisor variable %s may only be translated by 0" % v)
            imgs[v] = Jet.variable(self.context, v) + Q(c)
        if not imgs:
            return self
        return self.substitute(imgs, self.context)

    def rename(self, target: RingContext, mapping: Mapping[str, str] = None) -> "Jet":
        """Transport to a context that shares variable names (or renames them)."""
        mapping = mapping or {}
        out = {}
        n = len(target.variables)
        for e, c in self.terms.items():
            d = [0] * n
            for v, k in zip(self.context.variables, e):
                if k == 0:
                    continue
                d[target.index(mapping.get(v, v))] += k
            out[tuple(d)] = out.get(tuple(d), Q(0)) + c
        return Jet(target, out)

    # printing ----------------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            factors = []
            for v, k in zip(self.context.variables, e):
                if k == 1:
                    factors.append(v)
                elif k > 1:
                    factors.append("%s^%d" % (v, k))
            body = "*".join(factors)
            if not body:
                chunk = str(c)
            elif c == 1:
                chunk = body
            elif c == -1:
                chunk = "-" + body
            else:
                chunk = "%s*%s" % (c, body)
            parts.append(chunk)
        s = parts[0]
        for chunk in parts[1:]:
            s += " - " + chunk[1:] if chunk.startswith("-") else " + " + chunk
        return s

    __repr__ = __str__


class IdealGens:
    """A finite generator list for an ideal.  Zero generators are dropped;
    the zero ideal is the empty list."""

    __slots__ = ("context", "generators")

    def __init__(self, context: RingContext, generators: Iterable[Jet]):
        gens = []
        seen = set()
        for g in generators:
            if g.context != context:
                raise ContextMismatch("generator in a foreign context")
            if g.is_zero():
                continue
            key = frozenset(g.terms.items())
            if key in seen:
                continue
            seen.add(key)
            gens.append(g)
        gens.sort(key=lambda g: (grlex_key(g.leading_monomial()), str(g)))
        object.__setattr__(self, "context", context)
        object.__setattr__(self, "generators", tuple(gens))

    def __setattr__(self, *a):
        raise AttributeError("IdealGens is immutable")

    def is_zero(self) -> bool:
        return not self.generators

    def is_unit_ideal(self) -> bool:
        return any(g.is_unit() for g in self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __len__(self):
        return len(self.generators)

    def __eq__(self, other):
        return (isinstance(other, IdealGens)
                and self.context == other.context
                and self.generators == other.generators)

    def __hash__(self):
        return hash((self.context, self.generators))

    def __str__(self):
        return "(%s)" % ", ".join(str(g) for g in self.generators)

    __repr__ = __str__


def jet_mul(a: Jet, b: Jet) -> Jet:
    return a * b


# ---------------------------------------------------------------------------
# parsing

class ParseError(ValueError):
    pass


def _tokenize(text):
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(("num", text[i:j]))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'~"):
                j += 1
            toks.append(("name", text[i:j]))
            i = j
        elif ch in "+-*^()/":
            toks.append((ch, ch))
            i += 1
        else:
            raise ParseError("unexpected character %r in %r" % (ch, text))
    toks.append(("end", ""))
    return toks


class _Parser:
    def __init__(self, ctx, toks):
        self.ctx = ctx
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos][0]

    def take(self, kind=None):
        k, v = self.toks[self.pos]
        if kind is not None and k != kind:
            raise ParseError("expected %s, found %r" % (kind, v or k))
        self.pos += 1
        return v

    def expr(self):
        if self.peek() == "-":
            self.take()
            acc = -self.term()
        else:
            if self.peek() == "+":
                self.take()
            acc = self.term()
        while self.peek() in "+-":
            op = self.take()
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self):
        acc = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            f = self.factor()
            if op == "*":
                acc = acc * f
            else:
                if f.terms and list(f.terms) != [(0,) * len(self.ctx.variables)]:
                    raise ParseError("division only by rational constants")
                acc = acc * (Q(1) / f.constant_term())
        return acc

    def factor(self):
        base = self.atom()
        if self.peek() == "^":
            self.take()
            k = int(self.take("num"))
            base = base ** k
        return base

    def atom(self):
        k = self.peek()
        if k == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if k == "num":
            return Jet.const(self.ctx, int(self.take()))
        if k == "name":
            name = self.take()
            if name not in self.ctx.variables:
                raise ParseError("unknown variable %r" % name)
            return Jet.variable(self.ctx, name)
        if k == "-":
            self.take()
            return -self.atom()
        raise ParseError("unexpected token %r" % k)


def parse_poly(ctx: RingContext, text: str) -> Jet:
    """Parse infix `+ - * / ^` polynomial syntax into a jet.

    Raises TruncationOverflow when the exact input polynomial has a term of
    degree beyond the context truncation (silent truncation of user input
    would be a lie).
    """
    toks = _tokenize(text)
    # degree sentinel: parse in a context with doubled truncation and
    # compare, so inputs beyond N are rejected rather than clipped.
    wide = ctx.with_truncation(2 * ctx.truncation + 2)
    p = _Parser(wide, toks)
    f = p.expr()
    if p.peek() != "end":
        raise ParseError("trailing input after polynomial in %r" % text)
    if f.degree() > ctx.truncation:
        raise TruncationOverflow(
            "polynomial degree %d exceeds truncation %d" % (f.degree(), ctx.truncation))
    return f.rename(ctx)


# ---------------------------------------------------------------------------
# exact linear algebra over Q (dense Gaussian elimination on sparse input)

def linsolve(columns, rhs, nrows):
    """Solve  sum_j x_j * columns[j] = rhs  over Q.

    `columns` is a list of sparse columns (dict row->Fraction), `rhs` a
    sparse column.  Returns a list of Fractions or None when inconsistent.
    Underdetermined systems return one solution (free unknowns set to 0).
    """
    ncols = len(columns)
    # assemble augmented rows sparsely
    rows = [dict() for _ in range(nrows)]
    for j, col in enumerate(columns):
        for i, c in col.items():
            if c != 0:
                rows[i][j] = c
    b = [rhs.get(i, Q(0)) for i in range(nrows)]
    pivots = []  # (row index, col index)
    used = [False] * nrows
    for j in range(ncols):
        piv = None
        for i in range(nrows):
            if not used[i] and rows[i].get(j, Q(0)) != 0:
                piv = i
                break
        if piv is None:
            continue
        used[piv] = True
        pivots.append((piv, j))
        pv = rows[piv][j]
        for i in range(nrows):
            if i == piv:
                continue
            f = rows[i].get(j, Q(0))
            if f == 0:
                continue
            scale = f / pv
            for k, c in rows[piv].items():
                s = rows[i].get(k, Q(0)) - scale * c
                if s == 0:
                    rows[i].pop(k, None)
                else:
                    rows[i][k] = s
            b[i] -= scale * b[piv]
    for i in range(nrows):
        if not used[i] and not rows[i] and b[i] != 0:
            return None
        if not used[i] and b[i] != 0 and all(c == 0 for c in rows[i].values()):
            return None
    x = [Q(0)] * ncols
    for i, j in pivots:
        acc = b[i]
        for k, c in rows[i].items():
            if k != j:
                acc -= c * x[k]
        x[j] = acc / rows[i][j]
    # verify (cheap, and catches inconsistent rows without pivots)
    for i in range(nrows):
        acc = Q(0)
        for j, col in enumerate(columns):
            acc += col.get(i, Q(0)) * x[j]
        if acc != (rhs.get(i, Q(0))):
            return None
    return x
