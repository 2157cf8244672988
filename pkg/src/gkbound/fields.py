"""Exact arithmetic in towers K = Q_p[alpha][pi] and their decomposition data.

A tower is the compositum of an unramified extension Q_p[alpha] of degree f
(alpha a root of a monic integer polynomial u, irreducible mod p) and a
totally ramified extension generated by a uniformizer pi, a root of an
Eisenstein polynomial e over the unramified ring of integers.

Elements are integral coordinate vectors over the basis
{alpha^i pi^j : 0 <= i < f, 0 <= j < e_K}, with

  * an explicit pi-denominator exponent `den` (the element is X * pi^(-den)
    with X integral), keeping all stored coordinates in Z_p, and
  * an absolute p-adic precision `prec` per element (None = exact integer
    data; finite values mean the coordinates are known modulo p^prec).

Valuations are exact Fractions normalized so that v_p(p) = 1.
"""

from __future__ import annotations

from fractions import Fraction
import math

from .gf import GF, is_irreducible_mod_p


class PrecisionError(ArithmeticError):
    """Stored digits cannot certify the requested quantity."""


class StructureError(ValueError):
    """The defining data does not satisfy a structural requirement."""


INF = math.inf


def _vp_int(n, p):
    """Exact p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("vp of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _normalize_e_poly(e_poly, f):
    """Coefficients of the Eisenstein polynomial as length-f int tuples."""
    out = []
    for c in e_poly:
        if isinstance(c, int):
            out.append((c,) + (0,) * (f - 1))
        else:
            c = tuple(int(x) for x in c)
            if len(c) > f:
                raise StructureError("eisenstein coefficient exceeds unramified degree")
            out.append(c + (0,) * (f - len(c)))
    return out


class FieldTower:
    """The field K = Q_p[alpha][pi_K] together with cached structure data."""

    def __init__(self, p, u_poly, e_poly, quat_a=None, precision=None, name=None):
        if not is_prime(p) or p == 2:
            raise StructureError(f"p = {p} must be an odd prime")
        self.p = p
        self.u_poly = tuple(int(c) for c in u_poly)
        if self.u_poly[-1] != 1:
            raise StructureError("u_poly must be monic")
        self.f = len(self.u_poly) - 1
        if self.f < 1:
            raise StructureError("u_poly must have degree >= 1")
        if not is_irreducible_mod_p(self.u_poly, p):
            raise StructureError("u_poly is reducible modulo p")

        self.e_coeffs = _normalize_e_poly(e_poly, self.f)
        if self.e_coeffs[-1] != (1,) + (0,) * (self.f - 1):
            raise StructureError("eisenstein polynomial must be monic")
        self.e_K = len(self.e_coeffs) - 1
        if self.e_K < 1:
            raise StructureError("eisenstein polynomial must have degree >= 1")
        for j, c in enumerate(self.e_coeffs[:-1]):
            if any(x % p for x in c):
                raise StructureError("non-leading eisenstein coefficient with v_p < 1")
        c0 = self.e_coeffs[0]
        if all(x % (p * p) == 0 for x in c0):
            raise StructureError("eisenstein constant term has v_p > 1")

        self.degree = self.f * self.e_K
        self.nc = self.degree
        self.rational_eisenstein = all(
            all(x == 0 for x in c[1:]) for c in self.e_coeffs
        )
        self.precision = precision if precision is not None else 40
        self.name = name or f"tower(p={p},f={self.f},e={self.e_K})"

        # reduction table for alpha powers f..2f-2 (length-f int vectors)
        self._alpha_red = []
        cur = [-c for c in self.u_poly[: self.f]]
        for _ in range(max(self.f - 1, 0)):
            self._alpha_red.append(tuple(cur))
            cur = [0] + cur[:-1]
            if len(cur) > self.f:
                top = cur.pop()
                for i in range(self.f):
                    cur[i] += top * self._alpha_red[0][i]

        self.residue_field = GF(p, self.u_poly)

        self.quat_a = None
        if quat_a is not None:
            self.quat_a = int(quat_a)
            if self.quat_a % p == 0:
                raise StructureError("quaternion parameter a must be a unit")
            abar = self.residue_field.from_int(self.quat_a)
            if self.residue_field.is_square(abar):
                raise StructureError(
                    "residue of a is a square; sqrt(a) would not generate the "
                    "unramified quadratic extension"
                )

        self._frob_pows = None  # cached matrices of Frob^k on the unramified part
        self._frob_prec = None
        self._basis_prod = {}  # (idx1, idx2) -> integer coordinate vector
        self._decomp = None

    # -- basic constructors -------------------------------------------------

    def zero(self):
        return FieldElement(self, (0,) * self.nc, 0, None)

    def one(self):
        return self.from_int(1)

    def from_int(self, n):
        c = [0] * self.nc
        c[0] = int(n)
        return FieldElement(self, tuple(c), 0, None)

    def alpha(self):
        # for f = 1 the convention u = X makes alpha = 0
        return self.basis_element(1, 0) if self.f > 1 else self.zero()

    def pi(self):
        if self.e_K == 1:
            # pi = -e_0, a rational multiple of p times a unit
            c = [-x for x in self.e_coeffs[0]]
            out = [0] * self.nc
            for i in range(self.f):
                out[i] = c[i]
            return FieldElement(self, tuple(out), 0, None)
        return self.basis_element(0, 1)

    def basis_element(self, i, j):
        c = [0] * self.nc
        c[self.idx(i, j)] = 1
        return FieldElement(self, tuple(c), 0, None)

    def from_coords(self, coords, den=0, prec=None):
        coords = tuple(int(x) for x in coords)
        if len(coords) != self.nc:
            raise ValueError("coordinate vector has wrong length")
        return FieldElement(self, coords, den, prec)

    def idx(self, i, j):
        return i + self.f * j

    # -- low-level unramified arithmetic (length-f int tuples) ---------------

    def umul(self, a, b):
        f = self.f
        if f == 1:
            return (a[0] * b[0],)
        conv = [0] * (2 * f - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        conv[i + j] += x * y
        out = conv[:f]
        for t in range(len(conv) - 1, f - 1, -1):
            top = conv[t]
            if top:
                red = self._alpha_red[t - f]
                for i in range(f):
                    out[i] += top * red[i]
        return tuple(out)

    def _full_mul_coords(self, ca, cb):
        """Multiply coordinate vectors; exact integer output vector."""
        f, eK = self.f, self.e_K
        # gather per-pi-degree unramified convolution
        slices_a = [ca[f * j : f * (j + 1)] for j in range(eK)]
        slices_b = [cb[f * j : f * (j + 1)] for j in range(eK)]
        prod = [[0] * f for _ in range(2 * eK - 1)]
        for ja, sa in enumerate(slices_a):
            if any(sa):
                for jb, sb in enumerate(slices_b):
                    if any(sb):
                        m = self.umul(sa, sb)
                        row = prod[ja + jb]
                        for i in range(f):
                            row[i] += m[i]
        # reduce pi powers >= eK:  pi^(eK+t) = -sum_j e_j pi^(j+t)
        for t in range(len(prod) - 1, eK - 1, -1):
            top = prod[t]
            if any(top):
                for j in range(eK):
                    coef = self.e_coeffs[j]
                    if any(coef):
                        m = self.umul(tuple(top), coef)
                        row = prod[t - eK + j]
                        for i in range(f):
                            row[i] -= m[i]
                prod[t] = [0] * f
        out = []
        for j in range(eK):
            out.extend(prod[j])
        return tuple(out)

    def basis_product(self, idx1, idx2):
        key = (idx1, idx2) if idx1 <= idx2 else (idx2, idx1)
        got = self._basis_prod.get(key)
        if got is None:
            ca = [0] * self.nc
            cb = [0] * self.nc
            ca[key[0]] = 1
            cb[key[1]] = 1
            got = self._full_mul_coords(tuple(ca), tuple(cb))
            self._basis_prod[key] = got
        return got

    # -- Frobenius ------------------------------------------------------------

    def _frobenius_matrices(self):
        """Matrices of Frob^k (k = 0..f-1) on the unramified part.

        Each matrix is a tuple of f coordinate vectors: image of alpha^i.
        Entries are integers modulo p^(precision + 8).
        """
        if self._frob_pows is not None:
            return self._frob_pows
        f, p = self.f, self.p
        work = self.precision + 8
        self._frob_prec = work
        mod = p**work
        if f == 1:
            self._frob_pows = [((1,),)]
            return self._frob_pows
        # Hensel lift: root of u congruent to alpha^p mod p
        x = self._upow_mod((0, 1) + (0,) * (f - 2), p, mod)
        for _ in range(work.bit_length() + 2):
            ux = self._ueval_mod(self.u_poly, x, mod)
            dux = self._ueval_mod(
                tuple((i + 1) * self.u_poly[i + 1] for i in range(f)), x, mod
            )
            inv = self._uinv_mod(dux, mod)
            x = tuple((xi - self._umod(self.umul(ux, inv), mod)[i]) % mod for i, xi in enumerate(x))
        frob1 = []
        powv = (1,) + (0,) * (f - 1)
        for _ in range(f):
            frob1.append(powv)
            powv = self._umod(self.umul(powv, x), mod)
        ident = []
        for i in range(f):
            row = [0] * f
            row[i] = 1
            ident.append(tuple(row))
        mats = [tuple(ident), tuple(frob1)]
        for _ in range(f - 2):
            prev = mats[-1]
            nxt = []
            for i in range(f):
                # apply frob1 to prev[i]
                acc = [0] * f
                for t, coef in enumerate(prev[i]):
                    if coef:
                        img = frob1[t]
                        for s in range(f):
                            acc[s] = (acc[s] + coef * img[s]) % mod
                nxt.append(tuple(acc))
            mats.append(tuple(nxt))
        self._frob_pows = mats[: f]
        self._frob_prec = work
        return self._frob_pows

    def _umod(self, a, mod):
        return tuple(x % mod for x in a)

    def _upow_mod(self, a, n, mod):
        out = (1,) + (0,) * (self.f - 1)
        base = self._umod(a, mod)
        while n:
            if n & 1:
                out = self._umod(self.umul(out, base), mod)
            base = self._umod(self.umul(base, base), mod)
            n >>= 1
        return out

    def _ueval_mod(self, poly, x, mod):
        acc = (0,) * self.f
        for c in reversed(poly):
            acc = self._umod(self.umul(acc, x), mod)
            acc = tuple((acc[0] + c) % mod if i == 0 else acc[i] for i in range(self.f))
        return acc

    def _uinv_mod(self, a, mod):
        """Inverse of an unramified unit modulo p^k, by Newton iteration."""
        p = self.p
        gf = self.residue_field
        r = gf.from_coeffs(a)
        if gf.is_zero(r):
            raise ZeroDivisionError("not a unit")
        y = tuple(int(c) for c in gf.inv(r))
        prec_done = 1
        while prec_done < _exp_of(mod, p):
            # y <- y * (2 - a y)
            ay = self._umod(self.umul(a, y), mod)
            two_m = tuple(((2 if i == 0 else 0) - ay[i]) % mod for i in range(self.f))
            y = self._umod(self.umul(y, two_m), mod)
            prec_done *= 2
        return y

    # -- decomposition data ---------------------------------------------------

    def decomposition(self):
        if self._decomp is None:
            self._decomp = _compute_decomposition(self)
        return self._decomp

    def __repr__(self):
        return f"FieldTower({self.name})"


def _exp_of(mod, p):
    e = 0
    while mod > 1:
        mod //= p
        e += 1
    return e


class FieldElement:
    """Element of a tower: integral coordinates, pi-denominator, precision."""

    __slots__ = ("tower", "coeffs", "den", "prec")

    def __init__(self, tower, coeffs, den=0, prec=None):
        self.tower = tower
        self.den = den
        self.prec = prec
        if prec is not None:
            mod = tower.p**prec
            coeffs = tuple(c % mod for c in coeffs)
        self.coeffs = coeffs

    # -- helpers --------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.tower is not self.tower:
                raise ValueError("elements of different towers")
            return other
        if isinstance(other, int):
            return self.tower.from_int(other)
        return NotImplemented

    def with_prec(self, prec):
        return FieldElement(self.tower, self.coeffs, self.den, prec)

    def is_zero_exact(self):
        return self.prec is None and all(c == 0 for c in self.coeffs)

    def is_zero_at_precision(self):
        if self.prec is None:
            return all(c == 0 for c in self.coeffs)
        mod = self.tower.p**self.prec
        return all(c % mod == 0 for c in self.coeffs)

    # -- ring operations ------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self, other
        if a.den != b.den:
            if a.den < b.den:
                a = a._raise_den(b.den)
            else:
                b = b._raise_den(a.den)
        prec = _min_prec(a.prec, b.prec)
        return FieldElement(
            a.tower, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)), a.den, prec
        )

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.tower, tuple(-x for x in self.coeffs), self.den, self.prec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        t = self.tower
        coeffs = t._full_mul_coords(self.coeffs, other.coeffs)
        prec = _min_prec(self.prec, other.prec)
        return FieldElement(t, coeffs, self.den + other.den, prec)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = self.tower.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def _raise_den(self, new_den):
        """Rewrite with a larger denominator exponent (multiply by pi powers)."""
        k = new_den - self.den
        out = self._mul_pi_power(k)
        return FieldElement(self.tower, out, new_den, self.prec)

    def _mul_pi_power(self, k):
        t = self.tower
        coeffs = self.coeffs
        pi_c = [0] * t.nc
        if t.e_K == 1:
            for i in range(t.f):
                pi_c[i] = -t.e_coeffs[0][i]
        else:
            pi_c[t.idx(0, 1)] = 1
        pi_c = tuple(pi_c)
        for _ in range(k):
            coeffs = t._full_mul_coords(coeffs, pi_c)
        return coeffs

    def shift_pi(self, k):
        """Multiply by pi^k (k may be negative; negative powers go to `den`)."""
        if k == 0:
            return self
        if k > 0:
            if self.den >= k:
                return FieldElement(self.tower, self.coeffs, self.den - k, self.prec)
            kk = k - self.den
            return FieldElement(self.tower, self._mul_pi_power(kk), 0, self.prec)
        return FieldElement(self.tower, self.coeffs, self.den - k, self.prec)

    def divide_exact_p(self, k=1):
        """Divide by p^k; requires every coordinate divisible by p^k."""
        p = self.tower.p
        q = p**k
        if any(c % q for c in self.coeffs):
            raise PrecisionError("element not divisible by p^k at stored digits")
        prec = None if self.prec is None else self.prec - k
        if prec is not None and prec <= 0:
            raise PrecisionError("precision exhausted by division")
        return FieldElement(self.tower, tuple(c // q for c in self.coeffs), self.den, prec)

    def divide_by_int(self, n):
        """Divide by a nonzero integer, p-part exactly and unit part by inversion."""
        if n == 0:
            raise ZeroDivisionError
        if self.is_zero_exact():
            return self
        sign = -1 if n < 0 else 1
        n = abs(n)
        p = self.tower.p
        k = 0
        while n % p == 0:
            n //= p
            k += 1
        out = self if sign == 1 else -self
        if k:
            out = out.divide_exact_p(k)
        if n != 1:
            prec = out.prec if out.prec is not None else self.tower.precision
            mod = p**prec
            inv = pow(n, -1, mod)
            out = FieldElement(out.tower, tuple(c * inv for c in out.coeffs), out.den, prec)
        return out

    # -- valuation, normalization, residue ------------------------------------

    def valuation(self):
        """Exact p-adic valuation (Fraction), +inf for exact zero.

        Raises PrecisionError if all stored digits vanish but the element is
        not known to be exactly zero.
        """
        t = self.tower
        p = t.p
        best = None
        for j in range(t.e_K):
            vj = None
            for i in range(t.f):
                c = self.coeffs[t.idx(i, j)]
                if c != 0 and (self.prec is None or c % (p**self.prec) != 0):
                    v = _vp_int(c, p)
                    if self.prec is not None and v >= self.prec:
                        continue
                    if vj is None or v < vj:
                        vj = v
            if vj is not None:
                cand = Fraction(vj) + Fraction(j, t.e_K)
                if best is None or cand < best:
                    best = cand
        if best is None:
            if self.prec is None:
                return INF
            raise PrecisionError(
                "valuation indeterminate: all digits vanish at precision "
                f"{self.prec}"
            )
        return best - Fraction(self.den, t.e_K)

    def valuation_bound(self):
        """(value, exact): the valuation, or a certified lower bound.

        For an element whose stored digits all vanish at finite precision the
        bound is (prec - den/e_K, False); exact zero gives (inf, True).
        """
        try:
            return self.valuation(), True
        except PrecisionError:
            return Fraction(self.prec) - Fraction(self.den, self.tower.e_K), False

    def reduce_den(self):
        """Cancel pi factors against the denominator where possible."""
        if self.den == 0:
            return self
        t = self.tower
        coeffs, den, prec = self.coeffs, self.den, self.prec
        while den > 0:
            divided = _div_pi_once(t, coeffs, prec)
            if divided is None:
                break
            coeffs, prec = divided
            den -= 1
        return FieldElement(t, coeffs, den, prec)

    def normalized_unit(self):
        """Write self = pi^m * u with u a unit; return (m, u)."""
        v = self.valuation()
        if v is INF:
            raise ZeroDivisionError("zero has no unit part")
        m = v * self.tower.e_K
        if m.denominator != 1:
            raise StructureError("valuation not in (1/e_K) Z")
        m = int(m)
        u = self.shift_pi(-m).reduce_den()
        if u.den != 0:
            raise PrecisionError("could not normalize unit part at stored digits")
        return m, u

    def inverse(self):
        """Multiplicative inverse; output precision defaults to the tower's."""
        m, u = self.normalized_unit()
        t = self.tower
        prec = u.prec if u.prec is not None else t.precision
        mod = t.p**prec
        gf = t.residue_field
        r = gf.from_coeffs(u.coeffs[: t.f])
        y = t.from_coords(
            tuple(int(c) for c in gf.inv(r)) + (0,) * (t.nc - t.f), 0, prec
        )
        uu = u.with_prec(prec)
        # Newton: y <- y (2 - u y), error squares in the pi-adic filtration
        steps = (t.e_K * prec).bit_length() + 2
        two = t.from_int(2).with_prec(prec)
        for _ in range(steps):
            y = y * (two - uu * y)
        return FieldElement(t, y.coeffs, y.den + m, prec) if m >= 0 else FieldElement(
            t, y._mul_pi_power(-m), y.den, prec
        )

    def residue(self):
        """Image in the residue field; requires v_p >= 0."""
        x = self.reduce_den()
        if x.den != 0:
            v = self.valuation()
            if v is INF:
                return self.tower.residue_field.zero
            if v < 0:
                raise StructureError("residue of a non-integral element")
            raise PrecisionError("could not clear denominator at stored digits")
        return self.tower.residue_field.from_coeffs(x.coeffs[: x.tower.f])

    def frobenius(self, k=1):
        """Apply Frob^k to the unramified coordinates, fixing pi.

        For f > 1 this requires rational Eisenstein data (or a purely
        unramified element) so that the coordinate-wise action is the honest
        field automorphism.
        """
        t = self.tower
        if t.f == 1:
            return self
        k %= t.f
        if k == 0:
            return self
        purely_unramified = all(
            self.coeffs[t.idx(i, j)] == 0 for j in range(1, t.e_K) for i in range(t.f)
        ) and self.den == 0
        if not t.rational_eisenstein and not purely_unramified:
            raise StructureError(
                "Frobenius undefined on mixed elements over a non-rational "
                "Eisenstein extension"
            )
        mats = t._frobenius_matrices()
        mat = mats[k]
        mod = t.p**t._frob_prec
        out = [0] * t.nc
        for j in range(t.e_K):
            for i in range(t.f):
                c = self.coeffs[t.idx(i, j)]
                if c:
                    img = mat[i]
                    for s in range(t.f):
                        out[t.idx(s, j)] = (out[t.idx(s, j)] + c * img[s]) % mod
        prec = _min_prec(self.prec, t._frob_prec)
        return FieldElement(t, tuple(out), self.den, prec)

    # -- comparisons, display ---------------------------------------------------

    def equals(self, other, digits=None):
        """Equality of stored expansions modulo p^digits (default: joint precision)."""
        other = self._coerce(other)
        d = self - other
        p = self.tower.p
        if digits is None:
            if d.prec is None:
                return all(c == 0 for c in d.coeffs)
            digits = d.prec
        if d.prec is not None and d.prec < digits:
            raise PrecisionError("cannot compare at requested precision")
        mod = p**digits
        return all(c % mod == 0 for c in d.coeffs)

    def digit_string(self, digits=12):
        t = self.tower
        mod = t.p**digits
        coords = ",".join(str(c % mod) for c in self.coeffs)
        s = f"[{coords}]"
        if self.den:
            s += f"/pi^{self.den}"
        return s

    def __repr__(self):
        return f"FieldElement({self.digit_string(8)}, prec={self.prec})"


def _min_prec(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _div_pi_once(tower, coeffs, prec):
    """Exact division of a coordinate vector by pi, or None if not divisible.

    Solving X = pi * Y:  X_0 = -Y_{e-1} e_0  and  X_j = Y_{j-1} - Y_{e-1} e_j.
    """
    t = tower
    p = t.p
    f, eK = t.f, t.e_K
    x0 = coeffs[:f]
    if any(c % p for c in x0):
        return None
    e0 = t.e_coeffs[0]
    k = 0  # v_p(e0) == 1 by Eisenstein
    e0_over_p = tuple(c // p for c in e0)
    work_prec = prec if prec is not None else t.precision + 8
    mod = p**work_prec
    inv_u = t._uinv_mod(tuple(c % mod for c in e0_over_p), mod)
    x0_over_p = tuple(c // p for c in x0)
    y_top = tuple(-v % mod for v in t.umul(x0_over_p, inv_u))
    out = [0] * t.nc
    for i in range(f):
        out[t.idx(i, eK - 1)] = y_top[i]
    for j in range(1, eK):
        ej = t.e_coeffs[j]
        corr = t.umul(y_top, ej)
        for i in range(f):
            out[t.idx(i, j - 1)] = (coeffs[t.idx(i, j)] + corr[i]) % mod
    new_prec = None if prec is None else prec
    # the unit inversion pins the result to work_prec digits
    new_prec = _min_prec(new_prec, work_prec)
    return tuple(out), new_prec


# -- the tensor algebra L (x) K over Q_p, with L realized as the tower itself --


class TensorK:
    """Element of L tensor_{Q_p} K, L-coordinates over the basis alpha^i pi^j.

    The coefficient field L is realized concretely as a FieldTower (the tower
    itself in the GL2 case, its unramified quadratic extension for
    quaternions).  Entries are FieldElements of that coefficient tower.
    """

    def __init__(self, ltower, ktower, entries):
        self.L = ltower
        self.K = ktower
        self.entries = list(entries)
        if len(self.entries) != ktower.nc:
            raise ValueError("wrong number of tensor coordinates")

    @classmethod
    def zero(cls, ltower, ktower):
        return cls(ltower, ktower, [ltower.zero() for _ in range(ktower.nc)])

    @classmethod
    def one(cls, ltower, ktower):
        z = cls.zero(ltower, ktower)
        z.entries[0] = ltower.one()
        return z

    def copy(self):
        return TensorK(self.L, self.K, list(self.entries))

    def add(self, other):
        return TensorK(
            self.L, self.K, [a + b for a, b in zip(self.entries, other.entries)]
        )

    def scale(self, lelt):
        return TensorK(self.L, self.K, [lelt * a for a in self.entries])

    def mul_right_basis(self, idx):
        """Multiply by 1 (x) B_idx where B_idx is a K-basis monomial."""
        out = [self.L.zero() for _ in range(self.K.nc)]
        for v, coeff in enumerate(self.entries):
            if coeff.is_zero_exact():
                continue
            structure = self.K.basis_product(v, idx)
            for u, s in enumerate(structure):
                if s:
                    out[u] = out[u] + coeff * s
        return TensorK(self.L, self.K, out)

    def mul_right(self, kelt):
        """Multiply by 1 (x) c for an integral K-element c (den must be 0)."""
        if kelt.den != 0:
            raise ValueError("right factor must be integral")
        out = TensorK.zero(self.L, self.K)
        for idx, c in enumerate(kelt.coeffs):
            if c:
                term = self.mul_right_basis(idx)
                out = out.add(TensorK(self.L, self.K, [c * e for e in term.entries]))
        return out

    def mul(self, other):
        out = TensorK.zero(self.L, self.K)
        for idx, c in enumerate(other.entries):
            if not c.is_zero_exact():
                term = self.mul_right_basis(idx).scale(c)
                out = out.add(term)
        return out

    def equals(self, other, digits):
        return all(
            a.equals(b, digits) for a, b in zip(self.entries, other.entries)
        )


# -- decomposition data of the tower ------------------------------------------


class DecompositionData:
    """Idempotent coefficients beta_i, gamma_j, R_K and the mu units."""

    def __init__(self, tower, beta, gamma, R_K, mu, mu_residues, e_prime):
        self.tower = tower
        self.beta = beta
        self.gamma = gamma
        self.R_K = R_K
        self.mu = mu
        self.mu_residues = mu_residues
        self.e_prime = e_prime

    def mu_residue_twisted(self, j, k):
        """Residue of mu_{j, rho_k} for the embedding restricting to Frob^k."""
        gf = self.tower.residue_field
        return gf.frobenius(self.mu_residues[j], k)


def unramified_idempotents(tower):
    """The beta_i with 1_id = sum_i beta_i (x) alpha^i, by synthetic division.

    1_id = u(X) / ((X - alpha) u'(alpha)); the quotient coefficients are
    computed by Horner division of u by (X - alpha) over the unramified ring.
    """
    t = tower
    f = t.f
    if f == 1:
        return [t.one()]
    alpha = t.basis_element(1, 0)
    # synthetic division u(X)/(X - alpha): q_{f-1} = 1, q_{j-1} = u_j + alpha q_j
    q = [None] * f
    q[f - 1] = t.one()
    for j in range(f - 1, 0, -1):
        q[j - 1] = t.from_int(t.u_poly[j]) + alpha * q[j]
    # u'(alpha)
    du = t.zero()
    apow = t.one()
    for i in range(1, f + 1):
        du = du + (i * t.u_poly[i]) * apow
        apow = apow * alpha
    du_inv = du.inverse()
    return [qc * du_inv for qc in q]


def _compute_decomposition(tower):
    t = tower
    f, eK = t.f, t.e_K
    beta = unramified_idempotents(t)

    pi = t.pi()
    # synthetic division e(X)/(X - pi) over K
    c = [None] * eK
    c[eK - 1] = t.one()
    for j in range(eK - 1, 0, -1):
        ej = t.from_coords(tuple(t.e_coeffs[j]) + (0,) * (t.nc - f))
        c[j - 1] = ej + pi * c[j]
    # e'(pi)
    de = t.zero()
    ppow = t.one()
    for j in range(1, eK + 1):
        coefv = t.e_coeffs[j] if j < eK else (1,) + (0,) * (f - 1)
        ej = t.from_coords(tuple(coefv) + (0,) * (t.nc - f))
        de = de + j * ej * ppow
        ppow = ppow * pi
    v_de = de.valuation()
    R_frac = (v_de + Fraction(1, eK) - 1) * eK
    if R_frac.denominator != 1:
        raise StructureError("R_K formula did not produce an integer")
    R_K = int(R_frac)
    if (R_K == 0) != (eK % t.p != 0):
        raise StructureError("R_K = 0 iff p does not divide e_K failed")

    de_inv = de.inverse()
    gamma = [cj * de_inv for cj in c]
    mu = []
    mu_res = []
    for j, gj in enumerate(gamma):
        vg = gj.valuation()
        if vg != -Fraction(j, eK) - Fraction(R_K, eK):
            raise StructureError(
                f"internal inconsistency: v_p(gamma_{j}) = {vg} differs from "
                f"-{j}/{eK} - {R_K}/{eK}"
            )
        m_j = gj.shift_pi(R_K + j).reduce_den()
        if m_j.valuation() != 0:
            raise StructureError("mu_j is not a unit")
        mu.append(m_j)
        r = m_j.residue()
        if t.residue_field.is_zero(r):
            raise StructureError("mu residue vanished")
        mu_res.append(r)
    return DecompositionData(t, beta, gamma, R_K, mu, mu_res, de)


def reconstructed_idempotent(tower, k, ltower=None):
    """1_{rho_k} = sum_{i,j} Frob^k(beta_i) gamma_j (x) alpha^i pi^j in L (x) K."""
    t = tower
    L = ltower or t
    dec = t.decomposition()
    out = TensorK.zero(L, t)
    for i in range(t.f):
        bi = _to_coefficient_tower(dec.beta[i], L).frobenius(k)
        for j in range(t.e_K):
            gj = _to_coefficient_tower(dec.gamma[j], L)
            gj = gj.frobenius(k) if t.f > 1 else gj
            out.entries[t.idx(i, j)] = bi * gj
    return out


def _to_coefficient_tower(x, L):
    """Move an element of the base tower into the coefficient tower L.

    L is either the tower itself or an unramified quadratic extension built
    by `quadratic_unramified_extension`; in the latter case base coordinates
    embed into the even alpha-slots.
    """
    if x.tower is L:
        return x
    emb = getattr(L, "_base_embedding", None)
    if emb is None or emb[0] is not x.tower:
        raise ValueError("no embedding of this element into the coefficient tower")
    index_map = emb[1]
    out = [0] * L.nc
    for src, dst in index_map.items():
        out[dst] = x.coeffs[src]
    return FieldElement(L, tuple(out), x.den, x.prec)


def quadratic_unramified_extension(tower):
    """The tower K[sqrt(a)] for the quaternion case (requires f = 1).

    The unramified part becomes Z_p[s]/(s^2 - a); the Eisenstein polynomial
    is unchanged.  Only f = 1 base towers are supported: the corpus quaternion
    case lives over towers with trivial unramified part.
    """
    t = tower
    if t.quat_a is None:
        raise StructureError("tower has no quaternion parameter")
    if t.f != 1:
        raise StructureError(
            "quaternion coefficient tower implemented for f = 1 base towers only"
        )
    e_poly = [tuple(c) + (0,) for c in t.e_coeffs]
    ext = FieldTower(
        t.p,
        (-t.quat_a, 0, 1),
        e_poly,
        precision=t.precision,
        name=t.name + "[sqrt(a)]",
    )
    index_map = {}
    for j in range(t.e_K):
        index_map[t.idx(0, j)] = ext.idx(0, j)
    ext._base_embedding = (t, index_map)
    return ext
