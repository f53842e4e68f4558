"""Balanced factorisations of field elements.

A factorisation ``a = a_1 * ... * a_k`` is *balanced* when the factors sum
to zero, and a *power* factorisation when all factors are equal.  This
module provides the closed-form constructions, the two decision criteria
for finite fields and an exhaustive oracle that checks both.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BudgetExceeded,
    NotFound,
    UnsupportedField,
    VerificationError,
    check_budget,
)
from .fields import (
    Element,
    FieldCtx,
    GaloisField,
    QQ,
    frobenius_root,
    is_square,
    prime_power,
)

PROVENANCES = (
    "four-factor-identity",
    "four-factor-shifted",
    "odd-length-formula",
    "even-length-formula",
    "char3-quadratic",
    "char2-square-root",
    "parametrized-odd",
    "zero-rule",
    "exhaustive-search",
    "jordan-reduction",
)


@dataclass(frozen=True)
class ShiftWitness:
    y: Element
    shifted_target: Element


@dataclass(frozen=True)
class EvenLengthWitness:
    c: Element
    b: Element


@dataclass(frozen=True)
class Char3Witness:
    u: Element
    tau: Element
    pi: Element
    b: Element
    y: Element
    D: Element
    root: Element


@dataclass(frozen=True)
class ScalarCertificate:
    """``target == prod(factors)`` with ``sum(factors) == 0``.

    Nothing is checked here so that certificates read from disk can be
    represented even when wrong; use :func:`verify_scalar_certificate`.
    """

    ctx: FieldCtx
    target: Element
    k: int
    factors: tuple[Element, ...]
    nonpower: bool
    provenance: str
    witness: object = field(default=None, compare=False)


def _product(ctx, factors):
    acc = ctx.one
    for f in factors:
        acc = acc * f
    return acc


def _sum(ctx, factors):
    acc = ctx.zero
    for f in factors:
        acc = acc + f
    return acc


def is_power_tuple(factors) -> bool:
    return all(f == factors[0] for f in factors)


def certificate_problem(cert: ScalarCertificate) -> str | None:
    """Reason the certificate is invalid, or None when it checks out."""
    ctx = cert.ctx
    if len(cert.factors) != cert.k:
        return "length mismatch"
    if cert.k < 2:
        return "too few factors"
    if cert.target.ctx != ctx or any(f.ctx != ctx for f in cert.factors):
        return "context mismatch"
    if _product(ctx, cert.factors) != cert.target:
        return "product mismatch"
    if _sum(ctx, cert.factors) != ctx.zero:
        return "sum mismatch"
    if cert.nonpower and is_power_tuple(cert.factors):
        return "power factorisation flagged non-power"
    return None


def verify_scalar_certificate(cert: ScalarCertificate) -> bool:
    return certificate_problem(cert) is None


def _certify(ctx, target, factors, provenance, witness=None) -> ScalarCertificate:
    factors = tuple(factors)
    cert = ScalarCertificate(ctx, target, len(factors), factors,
                             not is_power_tuple(factors), provenance, witness)
    problem = certificate_problem(cert)
    if problem:
        raise VerificationError(f"{provenance} produced a bad certificate: {problem}")
    return cert


# -- decision criteria ----------------------------------------------------------

def _order(q: int) -> tuple[int, int]:
    pm = prime_power(q)
    if pm is None:
        raise ValueError(f"{q} is not a prime power")
    return pm


def decide_balanced(q: int, k: int) -> bool:
    """Does every element of GF(q) have a balanced factorisation of length k?"""
    p, m = _order(q)
    if k < 2:
        raise ValueError("k must be at least 2")
    if q == 2:
        return k % 2 == 0
    if q == 4:
        return k != 3
    if p == 2:
        return True
    if q in (3, 5):
        return k not in (2, 4)
    if q == 7:
        return k not in (2, 3)
    return k != 2


def decide_nonpower(q: int, k: int) -> bool:
    """Does every element of GF(q) have a non-power balanced factorisation of length k?"""
    _order(q)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k == 3:
        return q == 5 or q >= 8
    if k == 4:
        return q == 4 or q >= 7
    if k >= 5:
        return q >= 3
    return False


# -- constructions --------------------------------------------------------------

def _four_factor_terms(x: Element) -> tuple[Element, ...]:
    u = 1 - 4 * x
    v = 1 + 8 * x
    return (
        2 * u * u / (3 * v),
        -v / 6,
        -v / (2 * u),
        18 * x / (u * v),
    )


def _require_four_factor_field(ctx: FieldCtx) -> None:
    if ctx.kind == "rational":
        return
    if ctx.p in (2, 3):
        raise UnsupportedField(f"four-factor identity needs characteristic other than 2 and 3, got {ctx}")
    if ctx.q == 5:
        raise UnsupportedField("GF(5) has elements without a balanced four-factor decomposition")


def _is_four_factor_singular(x: Element) -> bool:
    return (1 - 4 * x).is_zero() or (1 + 8 * x).is_zero()


def _shifted_terms(x: Element, y: Element) -> tuple[Element, ...]:
    y_inv = y.inverse()
    return tuple(f * y_inv for f in _four_factor_terms(x * y ** 4))


def four_factor(ctx: FieldCtx, x: Element) -> ScalarCertificate:
    """Balanced four-factor decomposition of ``x``.

    The rational identity is evaluated directly unless one of its
    denominators vanishes (x = 1/4 or x = -1/8); then x is rescaled by the
    fourth power of the first admissible y and every factor divided by y.
    """
    _require_four_factor_field(ctx)
    x = ctx.coerce(x)
    if not _is_four_factor_singular(x):
        return _certify(ctx, x, _four_factor_terms(x), "four-factor-identity")
    candidates = ctx.elements() if ctx.kind == "galois" else (QQ(n) for n in itertools.count(2))
    for y in candidates:
        if y.is_zero():
            continue
        shifted = x * y ** 4
        if shifted.is_zero() or _is_four_factor_singular(shifted):
            continue
        return _certify(ctx, x, _shifted_terms(x, y), "four-factor-shifted",
                        ShiftWitness(y, shifted))
    raise AssertionError(f"no admissible rescaling for {x} in {ctx}")  # pragma: no cover


def rational_distinct_family(x, count: int) -> list[ScalarCertificate]:
    """``count`` rational four-factor decompositions of ``x`` with pairwise
    distinct factor tuples, from the rescaled identity at y = 1, 2, 3, ..."""
    x = QQ.coerce(x)
    if x.is_zero():
        raise ValueError("the rescaled family needs x != 0")
    certs: list[ScalarCertificate] = []
    seen = set()
    for n in itertools.count(1):
        if len(certs) == count:
            break
        y = QQ(n)
        if _is_four_factor_singular(x * y ** 4):
            continue
        factors = _shifted_terms(x, y)
        if factors in seen:
            continue
        seen.add(factors)
        certs.append(_certify(QQ, x, factors, "four-factor-shifted",
                              ShiftWitness(y, x * y ** 4)))
    return certs


def _require_odd_char(ctx: FieldCtx) -> None:
    if ctx.characteristic == 2:
        raise UnsupportedField(f"formula needs characteristic other than 2, got {ctx}")


def odd_k_factor(ctx: FieldCtx, a: Element, k: int) -> ScalarCertificate:
    """Non-power balanced decomposition of a nonzero ``a`` into k = 5 + 2n factors."""
    _require_odd_char(ctx)
    a = ctx.coerce(a)
    if a.is_zero():
        raise ValueError("target must be nonzero (use zero_rule)")
    if k < 5 or k % 2 == 0:
        raise ValueError(f"k must be odd and at least 5, got {k}")
    n = (k - 5) // 2
    a1 = a if n % 2 == 0 else -a
    one = ctx.one
    factors = [-a1, a1 / 2, a1 / 2, 2 / a1, -2 / a1] + [one] * n + [-one] * n
    return _certify(ctx, a, factors, "odd-length-formula")


def parametrized_odd_factor(ctx: FieldCtx, x: Element, y: Element, k: int) -> ScalarCertificate:
    """Balanced decomposition of ``x`` into k = 2m + 5 factors depending on a
    free nonzero parameter ``y``; at y = 1 it is the odd-length formula."""
    _require_odd_char(ctx)
    x = ctx.coerce(x)
    y = ctx.coerce(y)
    if x.is_zero() or y.is_zero():
        raise ValueError("x and y must be nonzero")
    if k < 5 or k % 2 == 0:
        raise ValueError(f"k must be odd and at least 5, got {k}")
    m = (k - 5) // 2
    x1 = x if m % 2 == 0 else -x
    big = x1 * y ** (2 * m + 4)
    small = 2 / (x1 * y ** (2 * m + 6))
    y_inv = y.inverse()
    factors = [big / 2, big / 2, -big, small, -small] + [y_inv] * m + [-y_inv] * m
    return _certify(ctx, x, factors, "parametrized-odd")


def even_k_factor(ctx: GaloisField, a: Element, k: int) -> ScalarCertificate:
    """Non-power balanced decomposition of a nonzero ``a`` into k = 6 + 2n factors.

    Uses the first nonzero c with c^2 != a' (a' = a up to the sign that makes
    the product come out as +a).  Such c is missing only in GF(3) with
    a' = 1; that case is handed to the exhaustive oracle.
    """
    _require_odd_char(ctx)
    a = ctx.coerce(a)
    if a.is_zero():
        raise ValueError("target must be nonzero (use zero_rule)")
    if k < 6 or k % 2:
        raise ValueError(f"k must be even and at least 6, got {k}")
    n = (k - 6) // 2
    a1 = a if n % 2 == 0 else -a
    candidates = ctx.elements() if ctx.kind == "galois" else (QQ(i) for i in itertools.count(1))
    for c in candidates:
        if c.is_zero() or c * c == a1:
            continue
        b = (c * c - a1) / c
        one = ctx.one
        factors = [-c, c - b, b / 2, b / 2, 2 / b, -2 / b] + [one] * n + [-one] * n
        return _certify(ctx, a, factors, "even-length-formula", EvenLengthWitness(c, b))
    found = oracle_search(ctx, a, k, require_nonpower=True)
    if found is None:
        raise NotFound(f"no non-power balanced {k}-factorisation of {a} in {ctx}", proven=True)
    return _certify(ctx, a, found, "exhaustive-search")


def char2_even_factor(ctx: GaloisField, a: Element, k: int) -> ScalarCertificate:
    """Non-power balanced decomposition in GF(2^m), m >= 2, for even k >= 4."""
    if ctx.kind != "galois" or ctx.p != 2:
        raise UnsupportedField(f"needs characteristic 2, got {ctx}")
    if ctx.q == 2:
        raise UnsupportedField("in GF(2) the element 1 only factors as a power")
    if k < 4 or k % 2:
        raise ValueError(f"k must be even and at least 4, got {k}")
    a = ctx.coerce(a)
    if a.is_zero():
        return zero_rule(ctx, k)
    one = ctx.one
    if a != one:
        b = frobenius_root(a)
        return _certify(ctx, a, [b, b] + [one] * (k - 2), "char2-square-root")
    c = next(e for e in ctx.elements() if e.value > 1)
    c_inv = c.inverse()
    return _certify(ctx, a, [c, c, c_inv, c_inv] + [one] * (k - 4), "char2-square-root")


def find_paired_square(ctx: GaloisField) -> tuple[Element, Element]:
    """First nonzero square u such that u + 1 is a nonzero square, in GF(3^n)
    with n >= 2; returns u and the canonical root of u + 1."""
    if ctx.kind != "galois" or ctx.p != 3:
        raise UnsupportedField(f"needs characteristic 3, got {ctx}")
    if ctx.q == 3:
        raise UnsupportedField("GF(3) has no nonzero square u with u + 1 a nonzero square")
    for u in ctx.elements():
        v = u + 1
        if u.is_zero() or v.is_zero():
            continue
        if is_square(u)[0]:
            ok, pi = is_square(v)
            if ok:
                return u, pi
    raise AssertionError(f"no paired square in {ctx}")  # pragma: no cover


def char3_three_factor(ctx: GaloisField, a: Element) -> ScalarCertificate:
    """Non-power balanced triple for nonzero ``a`` in GF(3^n), n >= 2.

    Fixing the middle factor y, the remaining two solve
    ``y x^2 + y^2 x + a = 0``; y is chosen so that the discriminant is a
    square by construction.
    """
    if ctx.kind != "galois" or ctx.p != 3:
        raise UnsupportedField(f"needs characteristic 3, got {ctx}")
    if ctx.q == 3:
        raise UnsupportedField("GF(3) has no non-power balanced triples for 1")
    a = ctx.coerce(a)
    if a.is_zero():
        raise ValueError("target must be nonzero (use zero_rule)")
    b = frobenius_root(a)
    u, pi = find_paired_square(ctx)
    tau = is_square(u)[1]
    y = (b + b * pi) / 2
    if y == b:
        raise VerificationError("middle factor coincides with the cube root")
    D = y ** 4 - 4 * a * y
    if D != y * (y - b) ** 3 or D != b * b * tau * tau * (b * pi - b) ** 2:
        raise VerificationError("discriminant identity failed")
    sqrt_d = b * tau * (b * pi - b)
    roots = sorted({(-y * y + sqrt_d) / (2 * y), (-y * y - sqrt_d) / (2 * y)})
    x = roots[0]
    if y * x * x + y * y * x + a != ctx.zero:
        raise VerificationError("root does not solve the quadratic")
    return _certify(ctx, a, [x, y, -x - y], "char3-quadratic",
                    Char3Witness(u, tau, pi, b, y, D, x))


def zero_rule(ctx: FieldCtx, k: int) -> ScalarCertificate:
    """``0 = (-1) * 1 * 0^(k-2)``; in characteristic 2 this reads (1, 1, 0, ...)."""
    if k < 3:
        raise ValueError("the zero rule needs k >= 3")
    one = ctx.one
    return _certify(ctx, ctx.zero, [-one, one] + [ctx.zero] * (k - 2), "zero-rule")


# -- exhaustive oracle ----------------------------------------------------------

_BLOCK = 1 << 18


def _suffix_arrays(ctx: GaloisField, r: int):
    """Sum, product and common value (-1 when mixed) of every r-tuple, in
    lexicographic order with the first factor most significant."""
    add, mul = ctx.add_table, ctx.mul_table
    sums = np.zeros(1, dtype=np.int32)
    prods = np.ones(1, dtype=np.int32)
    same = np.full(1, -2, dtype=np.int32)  # -2: empty tuple
    elems = np.arange(ctx.q, dtype=np.int32)
    for _ in range(r):
        sums = add[sums[:, None], elems[None, :]].ravel()
        prods = mul[prods[:, None], elems[None, :]].ravel()
        eq = (same[:, None] == -2) | (same[:, None] == elems[None, :])
        same = np.where(eq, elems[None, :], -1).ravel().astype(np.int32)
    return sums, prods, same


def _tuple_blocks(ctx: GaloisField, length: int):
    """Yield blocks covering all ``length``-tuples in lexicographic order.

    Each block is ``(prefix, sums, prods, same)`` where ``prefix`` is the
    fixed leading part and the arrays describe the whole tuples obtained by
    appending every suffix.
    """
    q = ctx.q
    r = 0
    while r < length and q ** (r + 1) <= _BLOCK:
        r += 1
    s_sum, s_prod, s_same = _suffix_arrays(ctx, r)
    add, mul = ctx.add_table, ctx.mul_table
    for prefix in itertools.product(range(q), repeat=length - r):
        ps, pp = 0, 1
        for v in prefix:
            ps = int(add[ps, v])
            pp = int(mul[pp, v])
        sums = add[ps, s_sum]
        prods = mul[pp, s_prod]
        if prefix:
            v = prefix[0]
            if all(w == v for w in prefix):
                same = np.where((s_same == v) | (s_same == -2), v, -1)
            else:
                same = np.full_like(s_same, -1)
        else:
            same = s_same
        yield prefix, r, sums, prods, same


def _balanced_blocks(ctx: GaloisField, k: int, budget: int | None):
    if ctx.kind != "galois":
        raise UnsupportedField("the oracle enumerates finite fields only")
    if k < 2:
        raise ValueError("k must be at least 2")
    check_budget(ctx.q ** (k - 1), budget, "oracle scan")
    neg, mul = ctx.neg_table, ctx.mul_table
    for prefix, r, sums, prods, same in _tuple_blocks(ctx, k - 1):
        last = neg[sums]
        total = mul[prods, last]
        power = same == last
        yield prefix, r, last, total, power


def oracle_search(ctx: GaloisField, a: Element, k: int, require_nonpower: bool = False,
                  budget: int | None = None) -> tuple[Element, ...] | None:
    """First balanced k-tuple with product ``a`` in enumeration order.

    Scans every (k-1)-tuple once; the last factor is forced to minus the
    partial sum.
    """
    a = ctx.coerce(a)
    q = ctx.q
    for prefix, r, last, total, power in _balanced_blocks(ctx, k, budget):
        hit = total == a.value
        if require_nonpower:
            hit &= ~power
        if hit.any():
            pos = int(np.argmax(hit))
            suffix = [(pos // q ** (r - 1 - i)) % q for i in range(r)]
            values = list(prefix) + suffix + [int(last[pos])]
            return tuple(ctx.element(v) for v in values)
    return None


def oracle_targets(ctx: GaloisField, k: int, budget: int | None = None):
    """Boolean masks over GF(q): which elements have a balanced k-factorisation,
    and which have a non-power one."""
    q = ctx.q
    balanced = np.zeros(q, dtype=bool)
    nonpower = np.zeros(q, dtype=bool)
    for _, _, _, total, power in _balanced_blocks(ctx, k, budget):
        balanced[total] = True
        nonpower[total[~power]] = True
        if nonpower.all():
            break
    return balanced, nonpower


# -- dispatcher -------------------------------------------------------------------

def balanced_factor(ctx: GaloisField, a: Element, k: int,
                    require_nonpower: bool = False,
                    budget: int | None = None) -> ScalarCertificate:
    """Balanced (optionally non-power) k-factorisation of ``a`` in a finite field.

    Tries the closed-form constructions first and falls back to the
    exhaustive oracle.  Raises :class:`NotFound` when nothing exists (then
    ``proven`` is set) or when the oracle budget is too small.
    """
    if ctx.kind != "galois":
        raise UnsupportedField("balanced_factor works over finite fields")
    if k < 2:
        raise ValueError("k must be at least 2")
    a = ctx.coerce(a)
    p, q = ctx.p, ctx.q
    attempts = []
    if a.is_zero() and k >= 3:
        attempts.append(lambda: zero_rule(ctx, k))
    if k == 4 and p not in (2, 3) and q != 5:
        attempts.append(lambda: four_factor(ctx, a))
    if p == 2 and q >= 4 and k >= 4 and k % 2 == 0:
        attempts.append(lambda: char2_even_factor(ctx, a, k))
    if p != 2 and not a.is_zero():
        if k >= 5 and k % 2:
            attempts.append(lambda: odd_k_factor(ctx, a, k))
        if k >= 6 and k % 2 == 0:
            attempts.append(lambda: even_k_factor(ctx, a, k))
    if k == 3 and p == 3 and q >= 9 and not a.is_zero():
        attempts.append(lambda: char3_three_factor(ctx, a))
    for attempt in attempts:
        try:
            cert = attempt()
        except NotFound:
            continue
        if require_nonpower and not cert.nonpower:
            continue
        return cert
    try:
        found = oracle_search(ctx, a, k, require_nonpower, budget)
    except BudgetExceeded as exc:
        raise NotFound(f"no formula applies and the oracle is out of budget ({exc})",
                       proven=False) from exc
    if found is None:
        kind = "non-power balanced" if require_nonpower else "balanced"
        raise NotFound(f"{a} has no {kind} {k}-factorisation in {ctx}", proven=True)
    return _certify(ctx, a, found, "exhaustive-search")
