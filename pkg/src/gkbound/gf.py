"""Small finite fields F_{p^m}, elements represented as coefficient tuples.

A field is a ``GF`` instance holding the characteristic and a monic
irreducible modulus over F_p; elements are length-m tuples of ints in
[0, p).  This is deliberately a "domain object" design (methods take and
return tuples) so that polynomial code can store plain tuples.
"""

from __future__ import annotations


def poly_mod_p(coeffs, p):
    return tuple(c % p for c in coeffs)


def is_irreducible_mod_p(coeffs, p):
    """Irreducibility of a monic integer polynomial modulo p.

    Uses the standard criterion: x^(p^m) == x mod (f, p) and
    gcd(x^(p^(m/q)) - x, f) trivial for prime divisors q of m.
    """
    m = len(coeffs) - 1
    if m < 1:
        return False
    f = GF(p, coeffs, _skip_check=True)
    if m == 1:
        return True
    # x^(p^k) mod f, computed by repeated Frobenius of x
    x = f.gen()

    def frob_iter(a, k):
        for _ in range(k):
            a = f.pow(a, p)
        return a

    if frob_iter(x, m) != x:
        return False
    for q in _prime_divisors(m):
        a = frob_iter(x, m // q)
        # gcd(a - x, f) must be 1, i.e. a - x invertible or ... easiest:
        # a - x must generate: a != x and gcd check via linear algebra is
        # overkill; a - x nonzero and its minimal polynomial degree test.
        if a == x:
            return False
        # gcd((a-x), f) over F_p[x]: do a polynomial gcd on lifts.
        diff = f.sub(a, x)
        if _poly_gcd_deg(list(coeffs), _tuple_to_poly(diff), p) > 0:
            return False
    return True


def _tuple_to_poly(t):
    return [c for c in t]


def _poly_gcd_deg(a, b, p):
    """Degree of gcd of two polynomials over F_p (lists, low-to-high)."""

    def deg(u):
        d = len(u) - 1
        while d >= 0 and u[d] % p == 0:
            d -= 1
        return d

    a = [c % p for c in a]
    b = [c % p for c in b]
    while True:
        da, db = deg(a), deg(b)
        if db < 0:
            return max(da, 0) if da >= 0 else 0
        if da < db:
            a, b = b, a
            continue
        # a -= lead(a)/lead(b) * x^(da-db) * b
        lb_inv = pow(b[db], p - 2, p)
        factor = (a[da] * lb_inv) % p
        shift = da - db
        for i in range(db + 1):
            a[i + shift] = (a[i + shift] - factor * b[i]) % p
    # unreachable


def _prime_divisors(n):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


class GF:
    """The field F_{p^m} = F_p[x]/(modulus), elements as coefficient tuples."""

    def __init__(self, p, modulus, _skip_check=False):
        self.p = p
        self.modulus = poly_mod_p(modulus, p)
        if self.modulus[-1] != 1:
            raise ValueError("modulus must be monic")
        self.m = len(modulus) - 1
        self.q = p**self.m
        self.zero = (0,) * self.m
        self.one = tuple([1] + [0] * (self.m - 1)) if self.m else ()
        # x^(m+t) reduced, for t = 0..m-2 (needed during multiplication)
        self._red = []
        cur = [(-c) % p for c in self.modulus[:-1]]
        for _ in range(max(self.m - 1, 0)):
            self._red.append(tuple(cur))
            cur = [0] + cur[:-1]
            if len(cur) > self.m:
                top = cur.pop()
                for i in range(self.m):
                    cur[i] = (cur[i] + top * self._red[0][i]) % p
        if not _skip_check and self.m > 1 and not is_irreducible_mod_p(self.modulus, p):
            raise ValueError("modulus is reducible mod p")

    def __repr__(self):
        return f"GF({self.p}^{self.m})"

    def __eq__(self, other):
        return (
            isinstance(other, GF)
            and self.p == other.p
            and self.modulus == other.modulus
        )

    def __hash__(self):
        return hash((self.p, self.modulus))

    def gen(self):
        if self.m == 1:
            raise ValueError("prime field has no generator over F_p")
        e = [0] * self.m
        e[1] = 1
        return tuple(e)

    def from_int(self, n):
        return tuple([n % self.p] + [0] * (self.m - 1))

    def from_coeffs(self, coeffs):
        c = [x % self.p for x in coeffs][: self.m]
        c += [0] * (self.m - len(c))
        return tuple(c)

    def is_zero(self, a):
        return all(c == 0 for c in a)

    def add(self, a, b):
        p = self.p
        return tuple((x + y) % p for x, y in zip(a, b))

    def sub(self, a, b):
        p = self.p
        return tuple((x - y) % p for x, y in zip(a, b))

    def neg(self, a):
        p = self.p
        return tuple((-x) % p for x in a)

    def mul(self, a, b):
        p, m = self.p, self.m
        if m == 1:
            return ((a[0] * b[0]) % p,)
        conv = [0] * (2 * m - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        conv[i + j] += x * y
        out = [c % p for c in conv[:m]]
        for t in range(len(conv) - 1, m - 1, -1):
            top = conv[t] % p
            if top:
                red = self._red[t - m]
                for i in range(m):
                    out[i] = (out[i] + top * red[i]) % p
        return tuple(out)

    def pow(self, a, n):
        if n < 0:
            return self.pow(self.inv(a), -n)
        result = self.one
        base = a
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def inv(self, a):
        if self.is_zero(a):
            raise ZeroDivisionError("inverse of zero in GF")
        return self.pow(a, self.q - 2)

    def frobenius(self, a, k=1):
        """a^(p^k), the arithmetic Frobenius iterated k times."""
        k %= self.m
        out = a
        for _ in range(k):
            out = self.pow(out, self.p)
        return out

    def is_square(self, a):
        if self.is_zero(a):
            return True
        return self.pow(a, (self.q - 1) // 2) == self.one

    def elements(self):
        """Iterate over all field elements (small fields only)."""
        p, m = self.p, self.m
        for n in range(self.q):
            c = []
            for _ in range(m):
                c.append(n % p)
                n //= p
            yield tuple(c)

    def fmt(self, a, var="g"):
        if self.is_zero(a):
            return "0"
        parts = []
        for i, c in enumerate(a):
            if c == 0:
                continue
            if i == 0:
                parts.append(str(c))
            elif i == 1:
                parts.append(f"{c}*{var}" if c != 1 else var)
            else:
                parts.append(f"{c}*{var}^{i}" if c != 1 else f"{var}^{i}")
        return "+".join(parts)


def prime_field(p):
    return GF(p, (0, 1))


def find_irreducible(p, m, rng=None):
    """Deterministically find a monic irreducible of degree m over F_p.

    Scans x^m + c, then x^m + c1*x + c0, then generic low-coefficient
    polynomials, in a fixed order, so the result is reproducible.
    """
    if m == 1:
        return (0, 1)

    def candidates():
        for total in range(1, p**m):
            n = total
            coeffs = []
            for _ in range(m):
                coeffs.append(n % p)
                n //= p
            yield tuple(coeffs) + (1,)

    for cand in candidates():
        if is_irreducible_mod_p(cand, p):
            return cand
    raise RuntimeError("no irreducible polynomial found")
