"""Sparse multivariate polynomials over a finite field, with an optional
graded-symbol variable eps and rational grading degrees.

Monomials are exponent tuples; when the ring carries eps the tuple has one
extra trailing slot for the eps exponent.  The term order used by the
Groebner machinery is degree-reverse-lexicographic on the ordered variables
(eps-free rings only).
"""

from __future__ import annotations

from fractions import Fraction


class PolyRing:
    def __init__(self, field, names, degrees=None, eps_degree=None, eps_name="eps"):
        self.field = field
        self.names = tuple(names)
        self.n = len(self.names)
        if degrees is not None:
            degrees = tuple(Fraction(d) for d in degrees)
            if len(degrees) != self.n:
                raise ValueError("one grading degree per variable required")
        self.degrees = degrees
        self.eps_degree = Fraction(eps_degree) if eps_degree is not None else None
        self.eps_name = eps_name if eps_degree is not None else None
        self.width = self.n + (1 if self.eps_degree is not None else 0)
        self._name_index = {nm: i for i, nm in enumerate(self.names)}

    def __repr__(self):
        eps = f", eps (deg {self.eps_degree})" if self.eps_degree is not None else ""
        return f"PolyRing({self.field}, {len(self.names)} vars{eps})"

    def __eq__(self, other):
        return (
            isinstance(other, PolyRing)
            and self.field == other.field
            and self.names == other.names
            and self.degrees == other.degrees
            and self.eps_degree == other.eps_degree
        )

    def zero(self):
        return Poly(self, {})

    def one(self):
        return Poly(self, {(0,) * self.width: self.field.one})

    def const(self, c):
        if self.field.is_zero(c):
            return self.zero()
        return Poly(self, {(0,) * self.width: c})

    def var(self, i, power=1):
        mono = [0] * self.width
        mono[i] = power
        return Poly(self, {tuple(mono): self.field.one})

    def var_by_name(self, name, power=1):
        return self.var(self._name_index[name], power)

    def eps(self, power=1):
        if self.eps_degree is None:
            raise ValueError("ring has no eps variable")
        mono = [0] * self.width
        mono[-1] = power
        return Poly(self, {tuple(mono): self.field.one})

    def monomial(self, exps, eps_exp=0, coeff=None):
        mono = list(exps)
        if self.eps_degree is not None:
            mono.append(eps_exp)
        elif eps_exp:
            raise ValueError("eps exponent in an eps-free ring")
        c = coeff if coeff is not None else self.field.one
        if self.field.is_zero(c):
            return self.zero()
        return Poly(self, {tuple(mono): c})

    def weighted_degree(self, mono, radius_scale=1):
        """Graded degree: eps part plus the variable part divided by radius_scale."""
        if self.degrees is None:
            raise ValueError("ring has no grading data")
        d = Fraction(0)
        for e, w in zip(mono[: self.n], self.degrees):
            if e:
                d += e * w
        d = d / radius_scale
        if self.eps_degree is not None and mono[-1]:
            d += mono[-1] * self.eps_degree
        return d

    def drop_eps_ring(self):
        return PolyRing(self.field, self.names, self.degrees)


def _mono_mul(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _grevlex_key(mono):
    # max() under this key is the degrevlex leading monomial
    return (sum(mono), tuple(-e for e in reversed(mono)))


class Poly:
    __slots__ = ("ring", "terms")

    def __init__(self, ring, terms):
        self.ring = ring
        self.terms = terms

    # -- basics ---------------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def copy(self):
        return Poly(self.ring, dict(self.terms))

    def __eq__(self, other):
        return (
            isinstance(other, Poly)
            and self.ring == other.ring
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((id(self.ring), tuple(sorted(self.terms.items()))))

    def __add__(self, other):
        f = self.ring.field
        out = dict(self.terms)
        for m, c in other.terms.items():
            acc = f.add(out.get(m, f.zero), c)
            if f.is_zero(acc):
                out.pop(m, None)
            else:
                out[m] = acc
        return Poly(self.ring, out)

    def __neg__(self):
        f = self.ring.field
        return Poly(self.ring, {m: f.neg(c) for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        f = self.ring.field
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                c = f.mul(c1, c2)
                acc = f.add(out.get(m, f.zero), c)
                if f.is_zero(acc):
                    out.pop(m, None)
                else:
                    out[m] = acc
        return Poly(self.ring, out)

    def scale(self, c):
        f = self.ring.field
        if f.is_zero(c):
            return self.ring.zero()
        return Poly(self.ring, {m: f.mul(c, v) for m, v in self.terms.items()})

    def __pow__(self, n):
        out = self.ring.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- graded structure -------------------------------------------------------

    def homogeneous_degree(self, radius_scale=1):
        """The common weighted degree, or None if inhomogeneous/zero."""
        degs = {self.ring.weighted_degree(m, radius_scale) for m in self.terms}
        if len(degs) != 1:
            return None
        return degs.pop()

    def is_homogeneous(self, radius_scale=1):
        return self.is_zero() or self.homogeneous_degree(radius_scale) is not None

    def eps_coefficients(self, step=1):
        """Split sum_i c_i eps^(i*step); returns dict i -> eps-free Poly.

        Raises if any eps exponent is not a multiple of step.
        """
        ring = self.ring
        if ring.eps_degree is None:
            raise ValueError("no eps variable to expand")
        target = ring.drop_eps_ring()
        out = {}
        for m, c in self.terms.items():
            e = m[-1]
            if e % step:
                raise ValueError(f"eps exponent {e} not a multiple of {step}")
            i = e // step
            bucket = out.setdefault(i, {})
            bucket[m[:-1]] = c
        return {i: Poly(target, t) for i, t in sorted(out.items())}

    def substitute(self, images, target_ring=None):
        """Map variable i to images[i] (Poly in the target ring); eps maps to eps."""
        ring = target_ring or images[0].ring
        out = ring.zero()
        for m, c in self.terms.items():
            term = ring.const(c)
            for i, e in enumerate(m[: self.ring.n]):
                if e:
                    term = term * (images[i] ** e)
            if self.ring.eps_degree is not None and m[-1]:
                term = term * ring.eps(m[-1])
            out = out + term
        return out

    def frobenius_power(self, m_exp):
        """Raise every variable (and eps) to the p^m_exp power; coefficients too.

        In characteristic p this is the p^m-power Frobenius of the polynomial.
        """
        f = self.ring.field
        q = f.p**m_exp
        out = {}
        for mono, c in self.terms.items():
            out[tuple(e * q for e in mono)] = f.pow(c, q)
        return Poly(self.ring, out)

    def var_power_map(self, q):
        """Replace each variable x by x^q, leaving coefficients and eps alone."""
        out = {}
        for mono, c in self.terms.items():
            new = tuple(e * q for e in mono[: self.ring.n]) + tuple(mono[self.ring.n :])
            out[new] = c
        return Poly(self.ring, out)

    # -- display ---------------------------------------------------------------

    def to_string(self):
        if not self.terms:
            return "0"
        ring = self.ring
        f = ring.field
        parts = []
        for m in sorted(self.terms, key=_grevlex_key, reverse=True):
            c = self.terms[m]
            factors = []
            cs = f.fmt(c)
            if cs != "1" or not any(m):
                factors.append(cs if "+" not in cs else f"({cs})")
            for i, e in enumerate(m[: ring.n]):
                if e == 1:
                    factors.append(ring.names[i])
                elif e > 1:
                    factors.append(f"{ring.names[i]}^{e}")
            if ring.eps_degree is not None and m[-1]:
                factors.append(
                    ring.eps_name if m[-1] == 1 else f"{ring.eps_name}^{m[-1]}"
                )
            parts.append("*".join(factors) if factors else "1")
        return " + ".join(parts)

    def __repr__(self):
        return f"Poly({self.to_string()})"


# -- Groebner bases (eps-free rings) -------------------------------------------


class BudgetExceeded(RuntimeError):
    pass


def lead(poly):
    m = max(poly.terms, key=_grevlex_key)
    return m, poly.terms[m]


def _divides(m1, m2):
    return all(a <= b for a, b in zip(m1, m2))


def _mono_div(m2, m1):
    return tuple(b - a for a, b in zip(m1, m2))


def _mono_lcm(m1, m2):
    return tuple(max(a, b) for a, b in zip(m1, m2))


def normal_form(poly, basis):
    """Remainder of poly under division by the list basis (deterministic).

    Repeatedly reduces the current maximal monomial; every replacement
    monomial is strictly smaller, so the loop terminates, and monomials moved
    to the remainder are never touched again.
    """
    f = poly.ring.field
    rem = {}
    work = dict(poly.terms)
    lead_data = [(lead(g)[0], lead(g)[1], g) for g in basis]
    while work:
        m = max(work, key=_grevlex_key)
        c = work.pop(m)
        for lm, lc, g in lead_data:
            if _divides(lm, m):
                factor = f.mul(c, f.inv(lc))
                shift = _mono_div(m, lm)
                for gm, gc in g.terms.items():
                    mm = _mono_mul(gm, shift)
                    if mm == m:
                        continue
                    acc = f.sub(work.get(mm, f.zero), f.mul(factor, gc))
                    if f.is_zero(acc):
                        work.pop(mm, None)
                    else:
                        work[mm] = acc
                break
        else:
            rem[m] = c
    return Poly(poly.ring, rem)


def s_polynomial(g1, g2):
    f = g1.ring.field
    m1, c1 = lead(g1)
    m2, c2 = lead(g2)
    l = _mono_lcm(m1, m2)
    t1 = Poly(g1.ring, {_mono_div(l, m1): f.inv(c1)})
    t2 = Poly(g1.ring, {_mono_div(l, m2): f.inv(c2)})
    return t1 * g1 - t2 * g2


def groebner_basis(gens, budget=200000):
    """Reduced Groebner basis for the fixed degrevlex order; deterministic.

    Raises BudgetExceeded when more than `budget` S-pairs are processed.
    """
    gens = [g for g in gens if not g.is_zero()]
    if not gens:
        return []
    ring = gens[0].ring
    f = ring.field
    basis = []
    for g in sorted(gens, key=lambda h: _grevlex_key(lead(h)[0])):
        lm, lc = lead(g)
        basis.append(g.scale(f.inv(lc)))
    pairs = [(i, j) for i in range(len(basis)) for j in range(i)]
    processed = 0
    while pairs:
        # normal selection: smallest lcm degree first, then lexicographic pair
        pairs.sort(
            key=lambda ij: (
                sum(_mono_lcm(lead(basis[ij[0]])[0], lead(basis[ij[1]])[0])),
                ij,
            )
        )
        i, j = pairs.pop(0)
        processed += 1
        if processed > budget:
            raise BudgetExceeded(f"Groebner budget of {budget} pairs exceeded")
        mi, mj = lead(basis[i])[0], lead(basis[j])[0]
        if _mono_lcm(mi, mj) == _mono_mul(mi, mj):
            continue  # coprime leading terms
        s = s_polynomial(basis[i], basis[j])
        r = normal_form(s, basis)
        if r.is_zero():
            continue
        lm, lc = lead(r)
        r = r.scale(f.inv(lc))
        k = len(basis)
        basis.append(r)
        pairs.extend((k, t) for t in range(k))
    # minimalize: keep only generators whose lead no kept lead divides
    keep = []
    for g in sorted(basis, key=lambda h: _grevlex_key(lead(h)[0])):
        if not any(_divides(lead(h)[0], lead(g)[0]) for h in keep):
            keep.append(g)
    # inter-reduce tails to a fixpoint
    for _ in range(20):
        changed = False
        for i in range(len(keep)):
            others = keep[:i] + keep[i + 1 :]
            r = normal_form(keep[i], others) if others else keep[i]
            lm, lc = lead(r)
            r = r.scale(f.inv(lc))
            if r != keep[i]:
                keep[i] = r
                changed = True
        if not changed:
            break
    keep.sort(key=lambda h: _grevlex_key(lead(h)[0]))
    return keep


def leading_monomials(basis):
    return sorted({lead(g)[0] for g in basis})


def dimension_of_monomials(monos, n):
    """Krull dimension of k[x_1..x_n]/(monomial ideal).

    The dimension is the largest |S| over variable subsets S containing no
    generator support; equivalently n minus a minimum hitting set of the
    supports, computed by branch and bound.
    """
    supports = []
    for m in monos:
        s = frozenset(i for i in range(n) if m[i])
        if not s:
            return -1  # the ideal is (1)
        supports.append(s)
    supports = sorted(set(supports), key=lambda s: (len(s), sorted(s)))
    minimal = [
        s for s in supports if not any(t < s for t in supports if t != s)
    ]
    best = [n]

    def rec(hit):
        if len(hit) >= best[0]:
            return
        for s in minimal:
            if not (s & hit):
                for v in sorted(s):
                    rec(hit | {v})
                return
        best[0] = len(hit)

    rec(frozenset())
    return n - best[0]


def krull_dimension_from_basis(basis, n):
    if not basis:
        return n
    monos = leading_monomials(basis)
    if any(not any(m) for m in monos):
        return -1  # unit ideal; empty variety
    return dimension_of_monomials(monos, n)


def independent_set_dimension(gens, n):
    """Direct combinatorial dimension of a MONOMIAL ideal from raw generators.

    Exhaustive check over variable subsets; used as an independent oracle for
    the Groebner-based dimension on monomial input.
    """
    supports = [frozenset(i for i in range(n) if lead(g)[0][i]) for g in gens]
    if any(not s for s in supports):
        return -1
    best = -1
    for mask in range(1 << n):
        s = frozenset(i for i in range(n) if mask & (1 << i))
        if len(s) <= best:
            continue
        if all(not sup <= s for sup in supports):
            best = len(s)
    return best


def radical_membership(g, gens, budget=200000):
    """g in sqrt(ideal(gens)), by the adjoined-inverse criterion.

    Adds a fresh variable t and checks 1 in (gens, 1 - t*g).
    """
    if g.is_zero():
        return True
    ring = g.ring
    ext = PolyRing(ring.field, ring.names + ("_t",), None)

    def lift(p):
        return Poly(ext, {m + (0,): c for m, c in p.terms.items()})

    t = ext.var(ext.n - 1)
    sys_gens = [lift(h) for h in gens if not h.is_zero()]
    sys_gens.append(ext.one() - t * lift(g))
    gb = groebner_basis(sys_gens, budget)
    return len(gb) == 1 and gb[0] == ext.one()


def ideals_radical_equivalent(gens_a, gens_b, budget=200000):
    return all(radical_membership(g, gens_b, budget) for g in gens_a) and all(
        radical_membership(g, gens_a, budget) for g in gens_b
    )
