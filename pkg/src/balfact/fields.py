"""Exact arithmetic in finite fields GF(p^m) and in the rationals.

Elements of GF(p^m) are stored as a single integer, the index of the
element in the field's enumeration order: the coefficient vector
``(c0, ..., c_{m-1})`` of the representing polynomial read as base-p digits
with ``c0`` least significant.  So ``0`` is index 0, ``1`` is index 1 and,
for m > 1, the generator ``x`` of the extension is index ``p``.

Rational elements wrap :class:`fractions.Fraction`.

Field descriptions follow the grammar::

    Q | <p> | <p>^<m> | <p>^<m>:<c0>,<c1>,...,1
"""

from __future__ import annotations

import itertools
import re
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import ContextMismatch, FieldSpecError, UnsupportedField

# Arithmetic tables are materialised only up to this order (q^2 entries).
TABLE_MAX_ORDER = 1024
# is_square and friends scan the whole field.
SCAN_MAX_ORDER = 1 << 16
MAX_IRREDUCIBILITY_DEGREE = 6


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_power(q: int) -> tuple[int, int] | None:
    """Return ``(p, m)`` with ``q == p**m`` and p prime, or None."""
    if q < 2:
        return None
    p = 2
    while p * p <= q and q % p:
        p += 1
    if q % p:
        p = q
    m, r = 0, q
    while r % p == 0:
        r //= p
        m += 1
    return (p, m) if r == 1 else None


def prime_powers(limit: int) -> list[int]:
    return [q for q in range(2, limit + 1) if prime_power(q)]


# -- polynomials over GF(p): coefficient lists, constant term first ----------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_sub(a, b, p):
    n = max(len(a), len(b))
    return _trim([((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p
                  for i in range(n)])


def _poly_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _poly_divmod(a, b, p):
    a = _trim(list(a))
    b = _trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(b[-1], -1, p)
    quot = [0] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b):
        shift = len(a) - len(b)
        c = a[-1] * inv_lead % p
        quot[shift] = c
        for i, y in enumerate(b):
            a[i + shift] = (a[i + shift] - c * y) % p
        _trim(a)
    return _trim(quot), a


def _poly_inverse(a, modulus, p):
    """Inverse of ``a`` modulo ``modulus`` by the extended Euclidean algorithm."""
    r0, r1 = list(modulus), _trim(list(a))
    s0, s1 = [], [1]
    while r1:
        quot, rem = _poly_divmod(r0, r1, p)
        r0, r1 = r1, rem
        s0, s1 = s1, _poly_sub(s0, _poly_mul(quot, s1, p), p)
    if len(r0) != 1:
        raise ZeroDivisionError("polynomial not invertible modulo the modulus")
    c = pow(r0[0], -1, p)
    return [x * c % p for x in s0]


def _monic_polys(p: int, degree: int):
    for low in itertools.product(range(p), repeat=degree):
        yield list(reversed(low)) + [1]


def is_irreducible(coeffs: list[int], p: int) -> bool:
    """Irreducibility over GF(p) by trial division with every monic polynomial
    of degree at most half the degree."""
    f = _trim([c % p for c in coeffs])
    m = len(f) - 1
    if m < 1:
        return False
    if m > MAX_IRREDUCIBILITY_DEGREE:
        raise FieldSpecError(f"irreducibility test supports degree <= {MAX_IRREDUCIBILITY_DEGREE}")
    for d in range(1, m // 2 + 1):
        for g in _monic_polys(p, d):
            if not _poly_divmod(f, g, p)[1]:
                return False
    return True


def smallest_irreducible(p: int, m: int) -> tuple[int, ...]:
    """Smallest monic irreducible of degree m, ordered by the integer whose
    base-p digits are the coefficients (constant term least significant)."""
    for low in range(p ** m):
        coeffs = [(low // p ** i) % p for i in range(m)] + [1]
        if is_irreducible(coeffs, p):
            return tuple(coeffs)
    raise FieldSpecError(f"no irreducible polynomial of degree {m} over GF({p})")  # pragma: no cover


# -- field contexts -----------------------------------------------------------

class FieldCtx:
    """Common interface of the finite and rational field contexts."""

    kind: str

    def __call__(self, value) -> "Element":
        return self.coerce(value)

    @property
    def zero(self) -> "Element":
        return self.from_integer(0)

    @property
    def one(self) -> "Element":
        return self.from_integer(1)

    def _check(self, a: "Element") -> None:
        if not isinstance(a, Element):
            raise TypeError(f"expected an Element, got {type(a).__name__}")
        if a.ctx != self:
            raise ContextMismatch(f"element of {a.ctx} used in {self}")

    def coerce(self, value) -> "Element":
        if isinstance(value, Element):
            self._check(value)
            return value
        if isinstance(value, (int, np.integer)):
            return self.from_integer(int(value))
        raise TypeError(f"cannot interpret {value!r} as an element of {self}")


class GaloisField(FieldCtx):
    """The field GF(p^m) = GF(p)[x] / (modulus)."""

    kind = "galois"

    def __init__(self, p: int, m: int = 1, modulus=None):
        if not is_prime(p):
            raise FieldSpecError(f"{p} is not prime")
        if m < 1:
            raise FieldSpecError("extension degree must be at least 1")
        if modulus is None:
            modulus = (0, 1) if m == 1 else smallest_irreducible(p, m)
        modulus = tuple(int(c) for c in modulus)
        if len(modulus) != m + 1:
            raise FieldSpecError(f"modulus has degree {len(modulus) - 1}, expected {m}")
        if modulus[-1] != 1:
            raise FieldSpecError("modulus must be monic")
        if any(not 0 <= c < p for c in modulus):
            raise FieldSpecError(f"modulus coefficients must lie in [0, {p})")
        if m > 1 and not is_irreducible(list(modulus), p):
            raise FieldSpecError(f"modulus {modulus} is reducible over GF({p})")
        self.p = p
        self.m = m
        self.q = p ** m
        self.modulus = modulus

    # identity
    @property
    def characteristic(self) -> int:
        return self.p

    @property
    def order(self) -> int:
        return self.q

    @property
    def spec(self) -> str:
        if self.m == 1:
            return str(self.p)
        return f"{self.p}^{self.m}:" + ",".join(map(str, self.modulus))

    def __eq__(self, other):
        return (isinstance(other, GaloisField) and self.p == other.p
                and self.modulus == other.modulus)

    def __hash__(self):
        return hash(("galois", self.p, self.modulus))

    def __repr__(self):
        if self.m == 1:
            return f"GF({self.p})"
        return f"GF({self.p}^{self.m})"

    # index <-> polynomial
    def coeffs(self, index: int) -> tuple[int, ...]:
        p = self.p
        return tuple((index // p ** i) % p for i in range(self.m))

    def index_of(self, coeffs) -> int:
        coeffs = list(coeffs)
        if len(coeffs) > self.m:
            raise ValueError(f"too many coefficients for {self}")
        return sum((c % self.p) * self.p ** i for i, c in enumerate(coeffs))

    def _poly(self, index: int) -> list[int]:
        return _trim(list(self.coeffs(index)))

    # integer-level arithmetic on indices
    def iadd(self, i: int, j: int) -> int:
        if self.m == 1:
            return (i + j) % self.p
        if self.q <= TABLE_MAX_ORDER:
            return self._add_rows[i][j]
        p, out, w = self.p, 0, 1
        while i or j:
            out += ((i % p + j % p) % p) * w
            i //= p
            j //= p
            w *= p
        return out

    def ineg(self, i: int) -> int:
        if self.m == 1:
            return -i % self.p
        p, out, w = self.p, 0, 1
        while i:
            out += (-(i % p) % p) * w
            i //= p
            w *= p
        return out

    def imul(self, i: int, j: int) -> int:
        if self.m == 1:
            return i * j % self.p
        if i == 0 or j == 0:
            return 0
        log, exp = self._logs
        return exp[(log[i] + log[j]) % (self.q - 1)]

    def iinv(self, i: int) -> int:
        if i == 0:
            raise ZeroDivisionError(f"inverse of zero in {self}")
        if self.m == 1:
            return pow(i, -1, self.p)
        return self.index_of(_poly_inverse(self._poly(i), self.modulus, self.p))

    def ipow(self, i: int, e: int) -> int:
        if e < 0:
            i = self.iinv(i)
            e = -e
        result = 1
        while e:
            if e & 1:
                result = self.imul(result, i)
            i = self.imul(i, i)
            e >>= 1
        return result

    def _poly_mul_index(self, i: int, j: int) -> int:
        prod = _poly_mul(self._poly(i), self._poly(j), self.p)
        return self.index_of(_poly_divmod(prod, self.modulus, self.p)[1])

    @cached_property
    def _logs(self):
        """Discrete log / antilog tables relative to the first generator of the
        multiplicative group (only used for m > 1)."""
        q = self.q
        for g in range(2, q):
            exp = [1]
            x = g
            while x != 1:
                exp.append(x)
                x = self._poly_mul_index(x, g)
            if len(exp) == q - 1:
                log = [0] * q
                for e, v in enumerate(exp):
                    log[v] = e
                return log, exp
        raise AssertionError("multiplicative group has no generator")  # pragma: no cover

    @cached_property
    def _add_rows(self):
        return self.add_table.tolist()

    # numpy tables for vectorised engines
    def _require_tables(self):
        if self.q > TABLE_MAX_ORDER:
            raise UnsupportedField(f"arithmetic tables limited to q <= {TABLE_MAX_ORDER}")

    @cached_property
    def digits(self) -> np.ndarray:
        """Coefficient vectors of all elements, shape (q, m)."""
        idx = np.arange(self.q)
        return np.stack([(idx // self.p ** i) % self.p for i in range(self.m)], axis=1)

    @cached_property
    def add_table(self) -> np.ndarray:
        self._require_tables()
        d = self.digits
        s = (d[:, None, :] + d[None, :, :]) % self.p
        weights = self.p ** np.arange(self.m)
        return (s * weights).sum(axis=2).astype(np.int32)

    @cached_property
    def mul_table(self) -> np.ndarray:
        self._require_tables()
        q = self.q
        if self.m == 1:
            idx = np.arange(q)
            return (np.outer(idx, idx) % q).astype(np.int32)
        log, exp = self._logs
        log = np.array(log)
        exp = np.array(exp)
        table = exp[(log[:, None] + log[None, :]) % (q - 1)]
        table[0, :] = 0
        table[:, 0] = 0
        return table.astype(np.int32)

    @cached_property
    def neg_table(self) -> np.ndarray:
        return np.array([self.ineg(i) for i in range(self.q)], dtype=np.int32)

    @cached_property
    def inv_table(self) -> np.ndarray:
        """Inverses of all elements; entry 0 is -1."""
        return np.array([-1] + [self.iinv(i) for i in range(1, self.q)], dtype=np.int32)

    # element level
    def element(self, index: int) -> "Element":
        if not 0 <= index < self.q:
            raise ValueError(f"index {index} out of range for {self}")
        return Element(self, index)

    def from_integer(self, n: int) -> "Element":
        return Element(self, n % self.p)

    def from_coeffs(self, coeffs) -> "Element":
        return Element(self, self.index_of(coeffs))

    @property
    def generator(self) -> "Element":
        """The class of x in GF(p)[x]/(modulus) (for m == 1, the element 0)."""
        return Element(self, self.p % self.q if self.m > 1 else 0)

    def elements(self) -> tuple["Element", ...]:
        return self._elements

    @cached_property
    def _elements(self):
        return tuple(Element(self, i) for i in range(self.q))

    def render(self, index: int) -> str:
        if self.m == 1:
            return str(index)
        return "(" + " ".join(map(str, self.coeffs(index))) + ")"

    def parse(self, text: str) -> "Element":
        text = text.strip()
        if text.startswith("(") and text.endswith(")"):
            parts = text[1:-1].replace(",", " ").split()
            coeffs = [int(t) for t in parts]
            if len(coeffs) != self.m:
                raise ValueError(f"{self} elements need {self.m} coefficients, got {len(coeffs)}")
            if any(not 0 <= c < self.p for c in coeffs):
                raise ValueError(f"coefficients must lie in [0, {self.p})")
            return self.from_coeffs(coeffs)
        return self.from_integer(int(text))


class RationalField(FieldCtx):
    """The rational numbers, with exact fractions."""

    kind = "rational"
    characteristic = 0
    spec = "Q"

    def __eq__(self, other):
        return isinstance(other, RationalField)

    def __hash__(self):
        return hash("rational")

    def __repr__(self):
        return "QQ"

    def from_integer(self, n: int) -> "Element":
        return Element(self, Fraction(n))

    def coerce(self, value) -> "Element":
        if isinstance(value, Fraction):
            return Element(self, value)
        return super().coerce(value)

    def iadd(self, a, b):
        return a + b

    def ineg(self, a):
        return -a

    def imul(self, a, b):
        return a * b

    def iinv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero in QQ")
        return 1 / a

    def ipow(self, a, e):
        return a ** e

    def elements(self):
        raise UnsupportedField("the rationals cannot be enumerated")

    def render(self, value: Fraction) -> str:
        return f"{value.numerator}/{value.denominator}"

    def parse(self, text: str) -> "Element":
        return Element(self, Fraction(text.strip()))


QQ = RationalField()


class Element:
    """An immutable value in a field context.

    Arithmetic with another Element requires the same context; plain Python
    integers are mapped into the field through the canonical map from Z.
    """

    __slots__ = ("ctx", "value")

    def __init__(self, ctx: FieldCtx, value):
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, value):
        raise AttributeError("Element is immutable")

    def _other(self, other) -> "Element | None":
        if isinstance(other, Element):
            if other.ctx != self.ctx:
                raise ContextMismatch(f"cannot combine elements of {self.ctx} and {other.ctx}")
            return other
        if isinstance(other, (int, np.integer)) or (
                isinstance(other, Fraction) and self.ctx.kind == "rational"):
            return self.ctx.coerce(other)
        return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return Element(self.ctx, self.ctx.iadd(self.value, o.value))

    __radd__ = __add__

    def __neg__(self):
        return Element(self.ctx, self.ctx.ineg(self.value))

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return Element(self.ctx, self.ctx.imul(self.value, o.value))

    __rmul__ = __mul__

    def inverse(self) -> "Element":
        return Element(self.ctx, self.ctx.iinv(self.value))

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, e: int):
        if e < 0 and self.is_zero():
            raise ZeroDivisionError("zero raised to a negative power")
        return Element(self.ctx, self.ctx.ipow(self.value, e))

    def is_zero(self) -> bool:
        return self.value == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        if isinstance(other, Element):
            return self.ctx == other.ctx and self.value == other.value
        if isinstance(other, (int, np.integer)):
            return self == self.ctx.from_integer(int(other))
        if isinstance(other, Fraction) and self.ctx.kind == "rational":
            return self.value == other
        return NotImplemented

    def __hash__(self):
        return hash((self.ctx, self.value))

    def __lt__(self, other):
        # enumeration order; only meaningful in finite fields
        o = self._other(other)
        if o is None or self.ctx.kind != "galois":
            return NotImplemented
        return self.value < o.value

    @property
    def index(self) -> int:
        if self.ctx.kind != "galois":
            raise UnsupportedField("rational elements have no enumeration index")
        return self.value

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.ctx.coeffs(self.value)

    def __str__(self):
        return self.ctx.render(self.value)

    def __repr__(self):
        return f"Element({self.ctx!r}, {self})"


# -- the operation-level API --------------------------------------------------

_SPEC_RE = re.compile(r"^(\d+)(?:\^(\d+)(?::([\d,\s]+))?)?$")


def make_field(spec: str) -> FieldCtx:
    """Build a field context from ``Q``, ``p``, ``p^m`` or ``p^m:c0,...,1``."""
    text = spec.strip()
    if text.upper() == "Q":
        return QQ
    match = _SPEC_RE.match(text)
    if not match:
        raise FieldSpecError(f"malformed field spec {spec!r}")
    p = int(match.group(1))
    m = int(match.group(2) or 1)
    modulus = None
    if match.group(3) is not None:
        try:
            modulus = [int(t) for t in match.group(3).split(",")]
        except ValueError:
            raise FieldSpecError(f"malformed modulus in {spec!r}") from None
    return GaloisField(p, m, modulus)


def field_of_order(q: int) -> GaloisField:
    pm = prime_power(q)
    if pm is None:
        raise FieldSpecError(f"{q} is not a prime power")
    return GaloisField(*pm)


def add(a: Element, b: Element) -> Element:
    a.ctx._check(b)
    return a + b


def neg(a: Element) -> Element:
    return -a


def mul(a: Element, b: Element) -> Element:
    a.ctx._check(b)
    return a * b


def inv(a: Element) -> Element:
    return a.inverse()


def power(a: Element, e: int) -> Element:
    return a ** e


def from_integer(ctx: FieldCtx, n: int) -> Element:
    return ctx.from_integer(n)


def enumerate_field(ctx: FieldCtx) -> tuple[Element, ...]:
    """All elements of a finite field in index order (0 first, 1 second)."""
    return ctx.elements()


def is_square(a: Element) -> tuple[bool, Element | None]:
    """Whether ``a`` is a square, with its root of smallest index if so."""
    ctx = a.ctx
    if ctx.kind != "galois":
        raise UnsupportedField("is_square is only available in finite fields")
    if ctx.q > SCAN_MAX_ORDER:
        raise UnsupportedField(f"square scan limited to q <= {SCAN_MAX_ORDER}")
    root = _square_roots(ctx).get(a.value)
    if root is None:
        return False, None
    return True, Element(ctx, root)


_ROOTS: dict = {}


def _square_roots(ctx: GaloisField) -> dict[int, int]:
    table = _ROOTS.get(ctx)
    if table is None:
        table = {}
        for s in range(ctx.q):
            table.setdefault(ctx.imul(s, s), s)
        _ROOTS[ctx] = table
    return table


def frobenius_root(a: Element) -> Element:
    """The unique p-th root of ``a`` in GF(p^m), i.e. ``a ** (q / p)``."""
    ctx = a.ctx
    if ctx.kind != "galois":
        raise UnsupportedField("p-th roots only in finite fields")
    return a ** (ctx.q // ctx.p)
