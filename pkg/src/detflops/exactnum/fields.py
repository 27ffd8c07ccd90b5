"""Exact fields: the rationals, prime fields and small extension fields.

Elements are stored as plain Python values so that matrix and tensor code can
work on them without wrapper overhead:

* ``QQ`` uses :class:`fractions.Fraction`.
* ``GF(p)`` uses the least residue ``0 <= a < p``.
* ``GF(p, k)`` encodes the residue polynomial ``c_0 + c_1 t + ... + c_{k-1} t^{k-1}``
  by the integer ``c_0 + c_1 p + ... + c_{k-1} p^{k-1}``.  Constants of ``GF(p)``
  therefore keep their code when viewed in any extension of ``GF(p)``.

All binary operations accept scalars or numpy arrays (``int64`` for finite
fields, ``object`` for ``QQ``) so that tensor contractions can be vectorized.
:class:`FieldElem` is the small value type used at API boundaries.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np


class FieldError(ValueError):
    pass


def is_prime(p: int) -> bool:
    """Deterministic primality test, exact for every ``p < 2**32``."""
    if p < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if p % small == 0:
            return p == small
    d, s = p - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # bases 2, 7, 61 are a complete witness set below 4_759_123_141
    for a in (2, 7, 61):
        if a % p == 0:
            continue
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(s - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            return False
    return True


def _prime_factors(m: int) -> list[int]:
    out = []
    d = 2
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        out.append(m)
    return out


# -- polynomials over GF(p) as coefficient lists, lowest degree first ----------

def _trim(c: list[int]) -> list[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_divmod(a: list[int], b: list[int], p: int) -> tuple[list[int], list[int]]:
    a = _trim(list(a))
    b = _trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(b[-1], p - 2, p)
    q = [0] * max(len(a) - len(b) + 1, 1)
    while len(a) >= len(b) and a:
        shift = len(a) - len(b)
        f = a[-1] * inv_lead % p
        q[shift] = f
        for i, bc in enumerate(b):
            a[shift + i] = (a[shift + i] - f * bc) % p
        _trim(a)
    return _trim(q), a


def _monic_polys(degree: int, p: int) -> Iterator[list[int]]:
    """Monic polynomials of a given degree, ordered by their integer code."""
    for code in range(p**degree):
        coeffs = [(code // p**i) % p for i in range(degree)]
        yield coeffs + [1]


def is_irreducible(modulus: list[int], p: int) -> bool:
    """Irreducibility over GF(p) by trial division with all monic factors of
    degree <= deg/2.  Only meant for the small degrees used here."""
    deg = len(_trim(list(modulus))) - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    for d in range(1, deg // 2 + 1):
        for f in _monic_polys(d, p):
            _, r = _poly_divmod(modulus, f, p)
            if not r:
                return False
    return True


@functools.lru_cache(maxsize=None)
def conway_free_modulus(p: int, k: int) -> tuple[int, ...]:
    """The monic irreducible polynomial of degree ``k`` over GF(p) with the
    smallest code ``sum(c_i p^i)`` over its non-leading coefficients."""
    for f in _monic_polys(k, p):
        if is_irreducible(f, p):
            return tuple(f)
    raise FieldError(f"no irreducible polynomial of degree {k} over GF({p})")


# -- fields --------------------------------------------------------------------

class FieldSpec:
    """Common interface of the three field kinds.

    Subclasses are immutable and compare by their parameters, so they can be
    used as dictionary keys and shared freely.
    """

    kind: str
    p: int = 0
    k: int = 1
    modulus: tuple[int, ...] = ()

    zero: object
    one: object

    @property
    def order(self) -> int | None:
        return None

    @property
    def is_finite(self) -> bool:
        return self.order is not None

    def _key(self):
        return (self.kind, self.p, self.k, self.modulus)

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    # scalar/array arithmetic ------------------------------------------------
    def add(self, a, b):
        raise NotImplementedError

    def neg(self, a):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e: int):
        if e < 0:
            return self.pow(self.inv(a), -e)
        result = self.one
        base = a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def convert(self, x):
        """Map an integer or a Fraction into the field."""
        raise NotImplementedError

    def asarray(self, values) -> np.ndarray:
        raise NotImplementedError

    def from_ints(self, values) -> np.ndarray:
        """Array of integers mapped into the field (prime subfield for codes)."""
        arr = np.asarray(values)
        if self.is_finite:
            return arr.astype(np.int64) % self.p
        return np.vectorize(Fraction, otypes=[object])(arr) if arr.size else arr.astype(object)

    def is_zero(self, a) -> bool:
        return a == self.zero

    def elem(self, value) -> "FieldElem":
        """Wrap a canonical value (a code for finite fields)."""
        return FieldElem(self, value)

    def elements(self) -> Iterator:
        raise FieldError(f"{self} is infinite")

    def random(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


def _rational(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return int(x)
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else x


class Rationals(FieldSpec):
    kind = "rationals"
    zero = 0
    one = 1

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero in QQ")
        return 1 / Fraction(a)

    def div(self, a, b):
        return Fraction(a) / b

    def convert(self, x):
        return _rational(x)

    def asarray(self, values) -> np.ndarray:
        # integers stay Python ints; they mix exactly with Fractions and are much faster
        arr = np.array(values, dtype=object)
        return np.vectorize(_rational, otypes=[object])(arr) if arr.size else arr

    def from_ints(self, values) -> np.ndarray:
        return np.asarray(values).astype(object)

    def random(self, rng, size=None, bound: int = 20):
        if size is None:
            return Fraction(int(rng.integers(-bound, bound + 1)))
        return self.asarray(rng.integers(-bound, bound + 1, size=size))

    def to_json(self):
        return {"kind": "rationals"}

    def __repr__(self):
        return "QQ"


class PrimeField(FieldSpec):
    kind = "prime"
    zero = 0
    one = 1

    def __init__(self, p: int):
        if not is_prime(p):
            raise FieldError(f"{p} is not prime")
        self.p = p
        self.k = 1
        self.modulus = ()
        self._inv_table = None
        if p <= 1 << 16:
            self._inv_table = np.zeros(p, dtype=np.int64)
            for a in range(1, p):
                self._inv_table[a] = pow(a, p - 2, p)

    @property
    def order(self):
        return self.p

    def add(self, a, b):
        return (a + b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def inv(self, a):
        if isinstance(a, np.ndarray):
            if np.any(a == 0):
                raise ZeroDivisionError("inverse of zero")
            return self._inv_table[a]
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(int(a), self.p - 2, self.p)

    def convert(self, x):
        if isinstance(x, Fraction):
            return x.numerator * pow(x.denominator, self.p - 2, self.p) % self.p
        return int(x) % self.p

    def asarray(self, values):
        return np.asarray(values, dtype=np.int64) % self.p

    def elements(self):
        return iter(range(self.p))

    def random(self, rng, size=None):
        if size is None:
            return int(rng.integers(self.p))
        return rng.integers(self.p, size=size).astype(np.int64)

    def to_json(self):
        return {"kind": "prime", "p": self.p}

    def __repr__(self):
        return f"GF({self.p})"


class ExtensionField(FieldSpec):
    """GF(p^k) for small ``p^k`` with log/antilog multiplication tables."""

    kind = "extension"
    zero = 0
    one = 1
    MAX_ORDER = 1 << 16

    def __init__(self, p: int, k: int, modulus: tuple[int, ...] | None = None):
        if not is_prime(p):
            raise FieldError(f"{p} is not prime")
        if k < 1:
            raise FieldError("extension degree must be >= 1")
        if p**k > self.MAX_ORDER:
            raise FieldError(f"GF({p}^{k}) exceeds the table size limit")
        if modulus is None:
            modulus = conway_free_modulus(p, k)
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != k + 1 or modulus[-1] != 1:
            raise FieldError("modulus must be monic of degree k")
        if not is_irreducible(list(modulus), p):
            raise FieldError(f"modulus {modulus} is reducible over GF({p})")
        self.p, self.k, self.modulus = p, k, modulus
        self.q = p**k
        self._powers = np.array([p**i for i in range(k)], dtype=np.int64)
        self._build_tables()

    # polynomial helpers on codes, used only while building tables
    def _digits(self, a: int) -> list[int]:
        return [(a // self.p**i) % self.p for i in range(self.k)]

    def _code(self, digits) -> int:
        return sum(int(d) * self.p**i for i, d in enumerate(digits))

    def _slow_mul(self, a: int, b: int) -> int:
        da, db = self._digits(a), self._digits(b)
        prod = [0] * (2 * self.k - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] = (prod[i + j] + x * y) % self.p
        _, r = _poly_divmod(prod, list(self.modulus), self.p)
        return self._code(r + [0] * (self.k - len(r)))

    def _build_tables(self):
        q = self.q
        factors = _prime_factors(q - 1)
        gen = None
        for g in range(1, q):
            ok = True
            for r in factors:
                x, e, base = 1, (q - 1) // r, g
                while e:
                    if e & 1:
                        x = self._slow_mul(x, base)
                    base = self._slow_mul(base, base)
                    e >>= 1
                if x == 1:
                    ok = False
                    break
            if ok:
                gen = g
                break
        self.generator = gen
        exp = np.zeros(2 * (q - 1), dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        x = 1
        for e in range(q - 1):
            exp[e] = x
            log[x] = e
            x = self._slow_mul(x, gen)
        exp[q - 1:] = exp[: q - 1]
        self._exp, self._log = exp, log
        idx = np.arange(q, dtype=np.int64)
        digits = (idx[:, None] // self._powers[None, :]) % self.p
        self._digit_table = digits
        self._neg_table = ((-digits) % self.p) @ self._powers

    @property
    def order(self):
        return self.q

    def add(self, a, b):
        da = self._digit_table[a]
        db = self._digit_table[b]
        out = ((da + db) % self.p) @ self._powers
        return int(out) if np.ndim(out) == 0 else out

    def neg(self, a):
        out = self._neg_table[a]
        return int(out) if np.ndim(out) == 0 else out

    def mul(self, a, b):
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            a = np.asarray(a, dtype=np.int64)
            b = np.asarray(b, dtype=np.int64)
            out = self._exp[self._log[a] + self._log[b]]
            return np.where((a == 0) | (b == 0), 0, out)
        if a == 0 or b == 0:
            return 0
        return int(self._exp[self._log[a] + self._log[b]])

    def inv(self, a):
        if isinstance(a, np.ndarray):
            if np.any(a == 0):
                raise ZeroDivisionError("inverse of zero")
            return self._exp[(self.q - 1 - self._log[a]) % (self.q - 1)]
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return int(self._exp[(self.q - 1 - self._log[a]) % (self.q - 1)])

    def convert(self, x):
        if isinstance(x, Fraction):
            return self.div(x.numerator % self.p, x.denominator % self.p)
        return int(x) % self.p

    def asarray(self, values):
        arr = np.asarray(values, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= self.q):
            raise FieldError("value out of range for field codes")
        return arr

    def coeffs(self, a: int) -> tuple[int, ...]:
        return tuple(self._digits(int(a)))

    def elements(self):
        return iter(range(self.q))

    def random(self, rng, size=None):
        if size is None:
            return int(rng.integers(self.q))
        return rng.integers(self.q, size=size).astype(np.int64)

    def to_json(self):
        return {"kind": "extension", "p": self.p, "k": self.k, "modulus": list(self.modulus)}

    def __repr__(self):
        return f"GF({self.p}^{self.k})"


QQ = Rationals()


@functools.lru_cache(maxsize=None)
def GF(p: int, k: int = 1) -> FieldSpec:
    """Cached constructor: ``GF(p)`` is a prime field, ``GF(p, k)`` with
    ``k > 1`` an extension with the canonical modulus."""
    if k == 1:
        return PrimeField(p)
    return ExtensionField(p, k)


def field_from_json(data: dict) -> FieldSpec:
    kind = data["kind"]
    if kind == "rationals":
        return QQ
    if kind == "prime":
        return GF(int(data["p"]))
    if kind == "extension":
        p, k = int(data["p"]), int(data["k"])
        modulus = tuple(data.get("modulus") or conway_free_modulus(p, k))
        if modulus == conway_free_modulus(p, k):
            return GF(p, k)
        return ExtensionField(p, k, modulus)
    raise FieldError(f"unknown field kind {kind!r}")


def parse_field(text: str) -> FieldSpec:
    """Parse ``"QQ"``, ``"7"``, ``"GF7"``, ``"9"`` or ``"3^2"`` into a field."""
    t = text.strip().upper().removeprefix("GF").strip("()")
    if t in ("QQ", "Q"):
        return QQ
    if "^" in t:
        p, k = (int(x) for x in t.split("^"))
        return GF(p, k)
    q = int(t)
    if is_prime(q):
        return GF(q)
    for p in range(2, q + 1):
        if is_prime(p) and q % p == 0:
            k = 0
            m = q
            while m % p == 0:
                m //= p
                k += 1
            if m == 1:
                return GF(p, k)
            break
    raise FieldError(f"{text!r} is not a prime power")


@dataclass(frozen=True)
class FieldElem:
    """An element together with its field; equality is representation equality."""

    field: FieldSpec
    value: object

    def _coerce(self, other):
        if isinstance(other, FieldElem):
            if other.field != self.field:
                raise FieldError(f"mixing {self.field} and {other.field}")
            return other.value
        return self.field.convert(other)

    def __add__(self, other):
        return FieldElem(self.field, self.field.add(self.value, self._coerce(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElem(self.field, self.field.sub(self.value, self._coerce(other)))

    def __rsub__(self, other):
        return FieldElem(self.field, self.field.sub(self._coerce(other), self.value))

    def __mul__(self, other):
        return FieldElem(self.field, self.field.mul(self.value, self._coerce(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return FieldElem(self.field, self.field.div(self.value, self._coerce(other)))

    def __neg__(self):
        return FieldElem(self.field, self.field.neg(self.value))

    def __pow__(self, e: int):
        return FieldElem(self.field, self.field.pow(self.value, e))

    def inverse(self):
        return FieldElem(self.field, self.field.inv(self.value))

    def __eq__(self, other):
        if isinstance(other, FieldElem):
            return self.field == other.field and self.value == other.value
        if isinstance(other, (int, Fraction)):
            return self.value == self.field.convert(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.field, self.value))

    def is_zero(self) -> bool:
        return self.value == self.field.zero

    def __repr__(self):
        return f"{self.value!s} in {self.field!r}"


def all_field_specs(primes=(2, 3, 5, 7), max_degree: int = 2) -> list[FieldSpec]:
    """Convenience list used by the property tests."""
    out: list[FieldSpec] = [QQ]
    for p, k in itertools.product(primes, range(1, max_degree + 1)):
        out.append(GF(p, k))
    return out
