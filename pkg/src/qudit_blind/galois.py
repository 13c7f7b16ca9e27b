"""Arithmetic in GF(p^m) and in the Galois rings GR(p^s, m).

Field elements are stored by index: the coefficient vector (a_0, ..., a_{m-1})
of a_0 + a_1 xi + ... maps to sum a_i p^i.  This little-endian order is also
the computational-basis order used by every gate matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

DEFAULT_MAX_DIMENSION = 1024

# (p, s) pairs for which ring characters are used by the gate constructors
SUPPORTED_LIFTS = {(2, 2), (2, 3), (3, 2)}


class FieldError(ValueError):
    """Invalid field parameters or a non-invertible element."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


# -- polynomials over Z_n, coefficient lists low degree first ---------------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a: list[int], b: list[int], n: int) -> list[int]:
    """Remainder of a by monic-up-to-unit b over Z_n (n prime)."""
    a = _trim([c % n for c in a])
    b = _trim([c % n for c in b])
    inv_lead = pow(b[-1], -1, n)
    while len(a) >= len(b):
        coef = a[-1] * inv_lead % n
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] = (a[shift + i] - coef * c) % n
        _trim(a)
    return a


def is_irreducible(poly: tuple[int, ...] | list[int], p: int) -> bool:
    """True if the polynomial (low degree first) has no factor of degree <= deg/2."""
    poly = _trim([c % p for c in poly])
    deg = len(poly) - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    for k in range(1, deg // 2 + 1):
        for low in itertools.product(range(p), repeat=k):
            if not _poly_mod(poly, list(low) + [1], p):
                return False
    return True


def canonical_modulus(p: int, m: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible of degree m (c0 compared first)."""
    for low in itertools.product(range(p), repeat=m):
        cand = tuple(low) + (1,)
        if is_irreducible(cand, p):
            return cand
    raise FieldError(f"no irreducible polynomial of degree {m} over Z_{p}")  # pragma: no cover


def _polymul_mod(a, b, modulus, n):
    """Product of two length-m coefficient vectors modulo a monic modulus, coefficients mod n."""
    m = len(modulus) - 1
    prod = [0] * (2 * m - 1) if m > 0 else [0]
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] += x * y
    for k in range(len(prod) - 1, m - 1, -1):
        c = prod[k] % n
        if c:
            for i in range(m):
                prod[k - m + i] -= c * modulus[i]
        prod[k] = 0
    return tuple(c % n for c in prod[:m])


def _factor_primes(n: int) -> list[int]:
    out, q = [], 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


@dataclass(frozen=True)
class Field:
    """The finite field GF(p^m) = Z_p[xi]/(modulus)."""

    p: int
    m: int
    modulus: tuple[int, ...]

    @property
    def d(self) -> int:
        return self.p**self.m

    def __repr__(self) -> str:
        return f"Field(p={self.p}, m={self.m}, modulus={list(self.modulus)})"

    # element <-> coefficient conversions
    def coeffs(self, index: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.m):
            index, r = divmod(index, self.p)
            out.append(r)
        return tuple(out)

    def index(self, coeffs) -> int:
        return sum((int(c) % self.p) * self.p**i for i, c in enumerate(coeffs))

    @cached_property
    def coeff_array(self) -> np.ndarray:
        return np.array([self.coeffs(i) for i in range(self.d)], dtype=np.int64).reshape(self.d, self.m)

    @cached_property
    def add_table(self) -> np.ndarray:
        c = self.coeff_array
        s = (c[:, None, :] + c[None, :, :]) % self.p
        weights = self.p ** np.arange(self.m)
        return (s * weights).sum(axis=-1)

    @cached_property
    def neg_table(self) -> np.ndarray:
        weights = self.p ** np.arange(self.m)
        return ((-self.coeff_array) % self.p * weights).sum(axis=-1)

    @cached_property
    def _exp_log(self) -> tuple[np.ndarray, np.ndarray]:
        d, order = self.d, self.d - 1
        primes = _factor_primes(order) if order > 1 else []
        for g in range(1, d):
            if d == 2:
                break
            gc = self.coeffs(g)
            powers = [self.coeffs(1)]
            for _ in range(order - 1):
                powers.append(_polymul_mod(powers[-1], gc, self.modulus, self.p))
            idx = [self.index(c) for c in powers]
            # g is primitive iff g^(order/q) != 1 for every prime q | order
            if all(idx[order // q] != 1 for q in primes):
                break
        else:  # pragma: no cover
            raise FieldError("no primitive element found")
        if d == 2:
            idx = [1]
        exp = np.array(idx, dtype=np.int64)
        log = np.zeros(d, dtype=np.int64)
        log[exp] = np.arange(order)
        return exp, log

    @cached_property
    def mul_table(self) -> np.ndarray:
        exp, log = self._exp_log
        order = self.d - 1
        table = exp[(log[:, None] + log[None, :]) % order]
        table[0, :] = 0
        table[:, 0] = 0
        return table

    @cached_property
    def inv_table(self) -> np.ndarray:
        exp, log = self._exp_log
        inv = exp[(-log) % (self.d - 1)]
        inv[0] = 0
        return inv

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            if e < 0:
                raise FieldError("zero has no inverse")
            return 1 if e == 0 else 0
        exp, log = self._exp_log
        return int(exp[(log[a] * e) % (self.d - 1)])

    @cached_property
    def trace_table(self) -> np.ndarray:
        """tr(a) = sum_j a^(p^j) for every element, as integers in [0, p)."""
        out = np.zeros(self.d, dtype=np.int64)
        for a in range(self.d):
            t = 0
            for j in range(self.m):
                t = self.add_table[t, self.pow(a, self.p**j)]
            if t >= self.p:  # pragma: no cover - would mean a broken modulus
                raise FieldError("trace left the prime subfield")
            out[a] = t
        return out

    @cached_property
    def chi_exponent_table(self) -> np.ndarray:
        """tr(u v) mod p for all pairs; CZ and Hadamard entries are omega_p to this power."""
        return self.trace_table[self.mul_table]

    def from_int(self, k: int) -> int:
        """Embed an integer into the prime subfield."""
        return k % self.p

    def element(self, value) -> "FieldElement":
        if isinstance(value, FieldElement):
            return value
        if isinstance(value, (tuple, list)):
            return FieldElement(self, self.index(value))
        return FieldElement(self, int(value))

    def elements(self) -> list["FieldElement"]:
        return [FieldElement(self, i) for i in range(self.d)]

    def sqrt(self, a: int) -> int:
        """Square root in characteristic 2 via the inverse Frobenius a^(2^(m-1))."""
        if self.p != 2:
            raise FieldError("sqrt is only defined here for characteristic 2")
        return self.pow(a, 2 ** (self.m - 1))

    def to_json(self) -> dict:
        return {"p": self.p, "m": self.m, "modulus": list(self.modulus)}


@dataclass(frozen=True)
class FieldElement:
    field: Field
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.field.d:
            raise FieldError(f"index {self.index} out of range for {self.field}")

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.field.coeffs(self.index)

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldError("elements of different fields")
            return other.index
        return self.field.from_int(int(other))

    def __add__(self, other):
        return FieldElement(self.field, int(self.field.add_table[self.index, self._other(other)]))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, int(self.field.neg_table[self.index]))

    def __sub__(self, other):
        return self + (-FieldElement(self.field, self._other(other)))

    def __rsub__(self, other):
        return FieldElement(self.field, self._other(other)) - self

    def __mul__(self, other):
        return FieldElement(self.field, int(self.field.mul_table[self.index, self._other(other)]))

    __rmul__ = __mul__

    def inverse(self):
        if self.index == 0:
            raise FieldError("zero is not invertible")
        return FieldElement(self.field, int(self.field.inv_table[self.index]))

    def __truediv__(self, other):
        return self * FieldElement(self.field, self._other(other)).inverse()

    def __pow__(self, e: int):
        return FieldElement(self.field, self.field.pow(self.index, e))

    def __int__(self):
        return self.index

    def __bool__(self):
        return self.index != 0

    def __repr__(self):
        return f"FieldElement({list(self.coeffs)})"


@lru_cache(maxsize=None)
def _make_field_cached(p: int, m: int, modulus: tuple[int, ...]) -> Field:
    return Field(p, m, modulus)


def make_field(p: int, m: int = 1, modulus=None, max_dimension: int = DEFAULT_MAX_DIMENSION) -> Field:
    """Build GF(p^m); without an explicit modulus the canonical one is used."""
    if not is_prime(p):
        raise FieldError(f"p={p} is not prime")
    if m < 1:
        raise FieldError(f"extension degree must be >= 1, got {m}")
    if p**m > max_dimension:
        raise FieldError(f"dimension {p**m} exceeds the cap {max_dimension}")
    if modulus is None:
        modulus = canonical_modulus(p, m)
    else:
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != m + 1 or modulus[-1] != 1:
            raise FieldError(f"modulus must be monic of degree {m}: {list(modulus)}")
        if not is_irreducible(modulus, p):
            raise FieldError(f"modulus {list(modulus)} is reducible over Z_{p}")
    return _make_field_cached(p, m, tuple(modulus))


def field_from_json(desc: dict, max_dimension: int = DEFAULT_MAX_DIMENSION) -> Field:
    return make_field(int(desc["p"]), int(desc["m"]), desc.get("modulus"), max_dimension)


# -- functional aliases ------------------------------------------------------

def ff_add(a: FieldElement, b: FieldElement, F: Field | None = None) -> FieldElement:
    return a + b


def ff_sub(a: FieldElement, b: FieldElement, F: Field | None = None) -> FieldElement:
    return a - b


def ff_neg(a: FieldElement, F: Field | None = None) -> FieldElement:
    return -a


def ff_mul(a: FieldElement, b: FieldElement, F: Field | None = None) -> FieldElement:
    return a * b


def ff_inv(a: FieldElement, F: Field | None = None) -> FieldElement:
    return a.inverse()


def ff_pow(a: FieldElement, e: int, F: Field | None = None) -> FieldElement:
    return a**e


def ff_trace(a: FieldElement, F: Field | None = None) -> int:
    F = F or a.field
    return int(F.trace_table[int(a)])


def chi(t: FieldElement, F: Field | None = None) -> complex:
    """Additive character omega_p^tr(t)."""
    F = F or t.field
    return complex(np.exp(2j * np.pi * ff_trace(t, F) / F.p))


# -- Galois rings --------------------------------------------------------------


class GaloisRing:
    """GR(p^s, m) = Z_{p^s}[x]/(F) with F the Teichmueller-rooted lift of the field modulus.

    F is the minimal polynomial of the Teichmueller lift of xi, so x itself is a
    Teichmueller element and Frobenius acts as x -> x^p.
    """

    def __init__(self, field: Field, s: int):
        if s < 1:
            raise FieldError("lift exponent must be >= 1")
        self.field = field
        self.s = s
        self.p = field.p
        self.m = field.m
        self.q = self.p**s
        self.modulus = self._lift_modulus()
        self.zero = (0,) * self.m
        self.one = (1,) + (0,) * (self.m - 1)

    def __repr__(self):
        return f"GaloisRing(q={self.q}, m={self.m}, modulus={list(self.modulus)})"

    def _lift_modulus(self) -> tuple[int, ...]:
        m, q, p = self.m, self.q, self.p
        naive = tuple(self.field.modulus)
        # Teichmueller lift of xi inside the naive-lift ring
        x = (0, 1) + (0,) * (m - 2) if m > 1 else (self.field.modulus[0] * (-1) % p,)
        t = x
        for _ in range(self.s - 1):
            t = _ring_pow(t, self.p**m, naive, q)
        # prod_j (y - t^(p^j)) computed with coefficients in the naive ring
        poly = [(1,) + (0,) * (m - 1)]  # polynomial in y, each coefficient a ring element
        conj = t
        for _ in range(m):
            neg = tuple((-c) % q for c in conj)
            new = [None] * (len(poly) + 1)
            for i in range(len(new)):
                acc = (0,) * m
                if i < len(poly):
                    acc = _ring_add(acc, _polymul_mod(poly[i], neg, naive, q), q)
                if i >= 1:
                    acc = _ring_add(acc, poly[i - 1], q)
                new[i] = acc
            poly = new
            conj = _ring_pow(conj, p, naive, q)
        coeffs = []
        for c in poly:
            if any(c[1:]):  # pragma: no cover - Galois theory guarantees constants
                raise FieldError("lifted modulus has non-constant coefficients")
            coeffs.append(c[0] % q)
        if tuple(c % p for c in coeffs) != naive:  # pragma: no cover
            raise FieldError("lifted modulus does not reduce to the field modulus")
        return tuple(coeffs)

    # ring element ops: tuples of m ints mod q
    def add(self, a, b):
        return _ring_add(a, b, self.q)

    def neg(self, a):
        return tuple((-c) % self.q for c in a)

    def scale(self, a, k: int):
        return tuple((c * k) % self.q for c in a)

    def mul(self, a, b):
        return _polymul_mod(a, b, self.modulus, self.q)

    def pow(self, a, e: int):
        return _ring_pow(a, e, self.modulus, self.q)

    def reduce(self, a) -> int:
        """Reduction mod p, returned as a field element index."""
        return self.field.index([c % self.p for c in a])

    def naive_lift(self, index: int):
        return tuple(self.field.coeffs(index))

    def elements(self):
        return [tuple(c) for c in itertools.product(range(self.q), repeat=self.m)]

    def frobenius(self, a):
        """Ring automorphism fixing Teichmueller elements and acting as x -> x^p."""
        out = self.zero
        xp = self.pow(self._x(), self.p)
        power = self.one
        for c in a:
            out = self.add(out, self.scale(power, c))
            power = self.mul(power, xp)
        return out

    def _x(self):
        if self.m == 1:
            return ((-self.modulus[0]) % self.q,)
        return (0, 1) + (0,) * (self.m - 2)

    @cached_property
    def teichmuller_table(self) -> list[tuple[int, ...]]:
        return [teichmuller_lift(FieldElement(self.field, a), self) for a in range(self.field.d)]


def _ring_add(a, b, q):
    return tuple((x + y) % q for x, y in zip(a, b))


def _ring_pow(a, e, modulus, q):
    m = len(modulus) - 1
    result = (1,) + (0,) * (m - 1)
    base = tuple(a)
    while e:
        if e & 1:
            result = _polymul_mod(result, base, modulus, q)
        base = _polymul_mod(base, base, modulus, q)
        e >>= 1
    return result


@lru_cache(maxsize=None)
def galois_ring(field: Field, s: int) -> GaloisRing:
    return GaloisRing(field, s)


def teichmuller_lift(a: FieldElement, R: GaloisRing) -> tuple[int, ...]:
    """The unique lift of a fixed by x -> x^(p^m)."""
    t = R.naive_lift(int(a))
    qm = R.p**R.m
    for _ in range(R.s):
        nxt = R.pow(t, qm)
        if nxt == t:
            return t
        t = nxt
    if R.pow(t, qm) != t:  # pragma: no cover
        raise FieldError("Teichmueller iteration did not converge")
    return t


def ring_trace(t, R: GaloisRing) -> int:
    """Trace of the multiplication-by-t map on the free Z_{p^s}-module R."""
    basis = [tuple(1 if i == j else 0 for i in range(R.m)) for j in range(R.m)]
    return sum(R.mul(t, b)[j] for j, b in enumerate(basis)) % R.q


def ring_char_exponent(a: FieldElement, F: Field, s: int, power: int = 1, scale: int = 1) -> int:
    """Exponent e in omega_{p^s}^e for chi_s(scale * lift(a)^power)."""
    if (F.p, s) not in SUPPORTED_LIFTS and s != 1:
        raise FieldError(f"unsupported ring character for p={F.p}, s={s}")
    R = galois_ring(F, s)
    t = R.teichmuller_table[int(a)]
    return ring_trace(R.scale(R.pow(t, power), scale), R)


def chi_s(a: FieldElement, F: Field, s: int, power: int = 1, scale: int = 1) -> complex:
    """Ring character omega_{p^s}^tr_s(scale * lift(a)^power)."""
    e = ring_char_exponent(a, F, s, power, scale)
    return complex(np.exp(2j * np.pi * e / F.p**s))
