"""Dense square matrices over finite fields.

A matrix is identified with its *rank*: the position of its row-major entry
sequence in lexicographic order, the (0, 0) entry most significant and each
entry ordered by its field index.  Over GF(2) the rank is therefore the
matrix packed into a machine word, and addition is XOR.

:class:`Matrix` is the value type used by certificates; :class:`MatrixSpace`
is the vectorised engine over rank arrays that the searches run on.
"""

from __future__ import annotations

import itertools
from functools import cached_property, lru_cache

import numpy as np

from .errors import (
    BudgetExceeded,
    ContextMismatch,
    ENUMERATION_CAP,
    UnsupportedField,
    check_budget,
)
from .fields import Element, GaloisField

# Full N x N rank tables are built only for spaces of at most this many matrices.
TABLE_MAX_MATRICES = 2500
_CHUNK = 1 << 18


class Matrix:
    """Immutable n x n matrix over a finite field; entries are field indices."""

    __slots__ = ("ctx", "n", "entries")

    def __init__(self, ctx: GaloisField, n: int, entries):
        if ctx.kind != "galois":
            raise UnsupportedField("matrices are only supported over finite fields")
        entries = tuple(int(e) for e in entries)
        if n < 1 or len(entries) != n * n:
            raise ValueError(f"expected {n * n} entries for a {n}x{n} matrix, got {len(entries)}")
        if any(not 0 <= e < ctx.q for e in entries):
            raise ValueError("entry out of range for the field")
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    # construction
    @classmethod
    def from_rows(cls, ctx: GaloisField, rows) -> "Matrix":
        rows = [list(r) for r in rows]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("matrix must be square")
        flat = []
        for r in rows:
            for e in r:
                flat.append(ctx.coerce(e).value)
        return cls(ctx, n, flat)

    @classmethod
    def identity(cls, ctx, n) -> "Matrix":
        return cls.scalar(ctx, n, ctx.one)

    @classmethod
    def zero(cls, ctx, n) -> "Matrix":
        return cls(ctx, n, [0] * (n * n))

    @classmethod
    def scalar(cls, ctx, n, a) -> "Matrix":
        a = ctx.coerce(a).value
        return cls(ctx, n, [a if i == j else 0 for i in range(n) for j in range(n)])

    @classmethod
    def from_rank(cls, ctx, n, rank: int) -> "Matrix":
        q = ctx.q
        if not 0 <= rank < q ** (n * n):
            raise ValueError("rank out of range")
        digits = []
        for _ in range(n * n):
            digits.append(rank % q)
            rank //= q
        return cls(ctx, n, reversed(digits))

    # access
    def __getitem__(self, ij) -> Element:
        i, j = ij
        return self.ctx.element(self.entries[i * self.n + j])

    def rows(self) -> list[list[Element]]:
        return [[self[i, j] for j in range(self.n)] for i in range(self.n)]

    @property
    def rank(self) -> int:
        r = 0
        for e in self.entries:
            r = r * self.ctx.q + e
        return r

    def _same(self, other: "Matrix") -> None:
        if not isinstance(other, Matrix):
            raise TypeError(f"expected a Matrix, got {type(other).__name__}")
        if other.ctx != self.ctx or other.n != self.n:
            raise ContextMismatch("matrices differ in field or size")

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        self._same(other)
        f = self.ctx.iadd
        return Matrix(self.ctx, self.n, [f(a, b) for a, b in zip(self.entries, other.entries)])

    def __neg__(self):
        f = self.ctx.ineg
        return Matrix(self.ctx, self.n, [f(a) for a in self.entries])

    def __sub__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        ctx, n = self.ctx, self.n
        if isinstance(other, Matrix):
            self._same(other)
            add, mul = ctx.iadd, ctx.imul
            a, b = self.entries, other.entries
            out = []
            for i in range(n):
                for j in range(n):
                    acc = 0
                    for k in range(n):
                        acc = add(acc, mul(a[i * n + k], b[k * n + j]))
                    out.append(acc)
            return Matrix(ctx, n, out)
        if isinstance(other, (Element, int)):
            c = ctx.coerce(other).value
            return Matrix(ctx, n, [ctx.imul(c, e) for e in self.entries])
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (Element, int)):
            return self * other
        return NotImplemented

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = Matrix.identity(self.ctx, self.n)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def transpose(self) -> "Matrix":
        n = self.n
        return Matrix(self.ctx, n, [self.entries[j * n + i] for i in range(n) for j in range(n)])

    def trace(self) -> Element:
        acc = 0
        for i in range(self.n):
            acc = self.ctx.iadd(acc, self.entries[i * self.n + i])
        return self.ctx.element(acc)

    def _echelon(self, augment=None):
        """Gaussian elimination; returns (det, reduced augment or None)."""
        ctx, n = self.ctx, self.n
        rows = [list(self.entries[i * n:(i + 1) * n]) for i in range(n)]
        aug = [list(r) for r in augment] if augment is not None else None
        det = 1
        for col in range(n):
            pivot = next((r for r in range(col, n) if rows[r][col]), None)
            if pivot is None:
                return 0, None
            if pivot != col:
                rows[col], rows[pivot] = rows[pivot], rows[col]
                if aug is not None:
                    aug[col], aug[pivot] = aug[pivot], aug[col]
                det = ctx.ineg(det)
            pv = rows[col][col]
            det = ctx.imul(det, pv)
            inv = ctx.iinv(pv)
            rows[col] = [ctx.imul(inv, x) for x in rows[col]]
            if aug is not None:
                aug[col] = [ctx.imul(inv, x) for x in aug[col]]
            for r in range(n):
                if r != col and rows[r][col]:
                    f = ctx.ineg(rows[r][col])
                    rows[r] = [ctx.iadd(x, ctx.imul(f, y)) for x, y in zip(rows[r], rows[col])]
                    if aug is not None:
                        aug[r] = [ctx.iadd(x, ctx.imul(f, y)) for x, y in zip(aug[r], aug[col])]
        return det, aug

    def det(self) -> Element:
        return self.ctx.element(self._echelon()[0])

    def is_invertible(self) -> bool:
        return self._echelon()[0] != 0

    def inverse(self) -> "Matrix":
        n = self.n
        eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        det, aug = self._echelon(eye)
        if det == 0:
            raise ZeroDivisionError("matrix is singular")
        return Matrix(self.ctx, n, [x for row in aug for x in row])

    def is_zero(self) -> bool:
        return not any(self.entries)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.ctx == other.ctx and self.n == other.n and self.entries == other.entries

    def __hash__(self):
        return hash((self.ctx, self.n, self.entries))

    def __str__(self):
        return format_matrix(self)

    def __repr__(self):
        return f"Matrix({self.ctx!r}, {format_matrix(self)!r})"


def format_matrix(A: Matrix) -> str:
    """Rows separated by ``;`` and entries by ``,``."""
    render = A.ctx.render
    n = A.n
    return ";".join(",".join(render(A.entries[i * n + j]) for j in range(n)) for i in range(n))


def parse_matrix(ctx: GaloisField, text: str, n: int | None = None) -> Matrix:
    rows = [r for r in text.strip().split(";")]
    parsed = [[ctx.parse(e) for e in _split_entries(r)] for r in rows]
    A = Matrix.from_rows(ctx, parsed)
    if n is not None and A.n != n:
        raise ValueError(f"expected a {n}x{n} matrix, got {A.n}x{A.n}")
    return A


def _split_entries(row: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in row:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    out.append(cur)
    if any(not e.strip() for e in out):
        raise ValueError(f"empty entry in row {row!r}")
    return out


# -- vectorised engine --------------------------------------------------------------

class MatrixSpace:
    """All n x n matrices over ``ctx`` addressed by rank, with batched arithmetic."""

    def __init__(self, ctx: GaloisField, n: int):
        self.ctx = ctx
        self.n = n
        self.q = ctx.q
        self.size = ctx.q ** (n * n)
        self.weights = np.array([ctx.q ** (n * n - 1 - i) for i in range(n * n)], dtype=np.int64)
        self.binary = ctx.q == 2

    # rank <-> entries
    def decode(self, ranks) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=np.int64)
        return ((ranks[..., None] // self.weights) % self.q).astype(np.int64)

    def encode(self, entries) -> np.ndarray:
        return (np.asarray(entries, dtype=np.int64) * self.weights).sum(axis=-1)

    def matrix(self, rank) -> Matrix:
        return Matrix.from_rank(self.ctx, self.n, int(rank))

    def matrices(self, ranks) -> list[Matrix]:
        return [self.matrix(r) for r in np.asarray(ranks).ravel()]

    # entrywise field arithmetic on arrays of field indices
    def _fadd(self, x, y):
        if self.ctx.m == 1:
            return (x + y) % self.q
        return self.ctx.add_table[x, y]

    def _fmul(self, x, y):
        if self.ctx.m == 1:
            return (x * y) % self.q
        return self.ctx.mul_table[x, y]

    def _fneg(self, x):
        if self.ctx.m == 1:
            return (-x) % self.q
        return self.ctx.neg_table[x]

    def entry_matmul(self, X, Y):
        """Batched product of entry arrays of shape (..., n*n)."""
        n = self.n
        X = np.asarray(X).reshape(X.shape[:-1] + (n, n))
        Y = np.asarray(Y).reshape(Y.shape[:-1] + (n, n))
        if self.ctx.m == 1:
            Z = np.matmul(X.astype(np.int64), Y.astype(np.int64)) % self.q
        else:
            X, Y = np.broadcast_arrays(X, Y)
            Z = np.zeros(X.shape, dtype=np.int64)
            for i in range(n):
                for j in range(n):
                    acc = np.zeros(X.shape[:-2], dtype=np.int64)
                    for k in range(n):
                        acc = self._fadd(acc, self._fmul(X[..., i, k], Y[..., k, j]))
                    Z[..., i, j] = acc
        return Z.reshape(Z.shape[:-2] + (n * n,))

    # rank-level arithmetic
    def _chunked(self, fn, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        flat_a, flat_b = a.ravel(), b.ravel()
        out = np.empty(flat_a.shape, dtype=np.int64)
        for s in range(0, flat_a.size, _CHUNK):
            out[s:s + _CHUNK] = fn(flat_a[s:s + _CHUNK], flat_b[s:s + _CHUNK])
        return out.reshape(a.shape)

    def mul_generic(self, a, b):
        return self._chunked(lambda x, y: self.encode(self.entry_matmul(self.decode(x), self.decode(y))), a, b)

    def add_generic(self, a, b):
        return self._chunked(lambda x, y: self.encode(self._fadd(self.decode(x), self.decode(y))), a, b)

    def mul(self, a, b):
        if self.size <= TABLE_MAX_MATRICES:
            return self.mul_table[a, b]
        return self.mul_generic(a, b)

    def add(self, a, b):
        if self.binary:
            return np.bitwise_xor(a, b)
        if self.size <= TABLE_MAX_MATRICES:
            return self.add_table[a, b]
        return self.add_generic(a, b)

    def neg(self, a):
        if self.binary:
            return np.asarray(a)
        return self.encode(self._fneg(self.decode(a)))

    def _table(self, fn):
        idx = np.arange(self.size, dtype=np.int64)
        dtype = np.int16 if self.size <= 32767 else np.int32
        return fn(idx[:, None], idx[None, :]).astype(dtype)

    @cached_property
    def mul_table(self) -> np.ndarray:
        return self._table(self.mul_generic)

    @cached_property
    def add_table(self) -> np.ndarray:
        return self._table(self.add_generic)

    @cached_property
    def neg_table(self) -> np.ndarray:
        return self.neg(np.arange(self.size, dtype=np.int64))

    def identity_rank(self) -> int:
        return Matrix.identity(self.ctx, self.n).rank

    # determinants and inverses of batches (entry arrays)
    def entry_det(self, X) -> np.ndarray:
        n = self.n
        X = np.asarray(X).reshape(X.shape[:-1] + (n, n))
        acc = np.zeros(X.shape[:-2], dtype=np.int64)
        for perm in itertools.permutations(range(n)):
            term = np.ones(X.shape[:-2], dtype=np.int64)
            for i, j in enumerate(perm):
                term = self._fmul(term, X[..., i, j])
            if _parity(perm):
                term = self._fneg(term)
            acc = self._fadd(acc, term)
        return acc

    def entry_inverse(self, X) -> np.ndarray:
        """Inverses of a batch of invertible matrices via the adjugate."""
        n = self.n
        X = np.asarray(X).reshape(X.shape[:-1] + (n, n))
        det_inv = self.ctx.inv_table[self.entry_det(X.reshape(X.shape[:-2] + (n * n,)))]
        if np.any(det_inv < 0):
            raise ZeroDivisionError("singular matrix in batch")
        out = np.zeros(X.shape, dtype=np.int64)
        for i in range(n):
            for j in range(n):
                if n == 1:
                    cof = np.ones(X.shape[:-2], dtype=np.int64)
                else:
                    minor = np.delete(np.delete(X, j, axis=-2), i, axis=-1)
                    cof = _minor_det(self, minor)
                    if (i + j) % 2:
                        cof = self._fneg(cof)
                out[..., i, j] = self._fmul(cof, det_inv)
        return out.reshape(X.shape[:-2] + (n * n,))


def _minor_det(space: MatrixSpace, M) -> np.ndarray:
    m = M.shape[-1]
    acc = np.zeros(M.shape[:-2], dtype=np.int64)
    for perm in itertools.permutations(range(m)):
        term = np.ones(M.shape[:-2], dtype=np.int64)
        for i, j in enumerate(perm):
            term = space._fmul(term, M[..., i, j])
        if _parity(perm):
            term = space._fneg(term)
        acc = space._fadd(acc, term)
    return acc


def _parity(perm) -> int:
    parity = 0
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                parity ^= 1
    return parity


@lru_cache(maxsize=None)
def matrix_space(ctx: GaloisField, n: int) -> MatrixSpace:
    return MatrixSpace(ctx, n)


# -- operation-level API --------------------------------------------------------------

def mat_add(A: Matrix, B: Matrix) -> Matrix:
    return A + B


def mat_neg(A: Matrix) -> Matrix:
    return -A


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    A._same(B)
    return A * B


def jordan_cell(ctx: GaloisField, n: int, a=0) -> Matrix:
    """``a`` on the diagonal, 1 on the superdiagonal."""
    a = ctx.coerce(a).value
    entries = [a if i == j else (1 if j == i + 1 else 0) for i in range(n) for j in range(n)]
    return Matrix(ctx, n, entries)


def commutes(A: Matrix, B: Matrix) -> bool:
    A._same(B)
    return A * B == B * A


def enumerate_matrices(ctx: GaloisField, n: int) -> list[Matrix]:
    size = ctx.q ** (n * n)
    if size > ENUMERATION_CAP:
        raise BudgetExceeded(size, ENUMERATION_CAP, "matrix enumeration")
    return [Matrix.from_rank(ctx, n, r) for r in range(size)]


def rank_of(A: Matrix) -> int:
    return A.rank


def unrank(ctx: GaloisField, n: int, rank: int) -> Matrix:
    return Matrix.from_rank(ctx, n, rank)


def centralizer_ranks(A: Matrix, budget: int | None = None) -> np.ndarray:
    """Ranks of all X with XA == AX, checking every matrix of the space.

    The commutator X -> XA - AX is additive, so X = H + L (H holding the
    leading entries, L the trailing ones) commutes with A exactly when the
    commutators of H and L cancel.  Every (H, L) pair is compared.
    """
    space = matrix_space(A.ctx, A.n)
    check_budget(space.size, budget, "centralizer scan")
    nn = A.n * A.n
    q = A.ctx.q
    a = np.array(A.entries, dtype=np.int64)[None, :]
    low_len = nn // 2
    low = np.arange(q ** low_len, dtype=np.int64)
    high = np.arange(q ** (nn - low_len), dtype=np.int64) * q ** low_len

    def commutator_code(ranks):
        X = space.decode(ranks)
        c = space._fadd(space.entry_matmul(X, a), space._fneg(space.entry_matmul(a, X)))
        return space.encode(c)

    low_code = commutator_code(low)
    high_need = space.encode(space._fneg(space.decode(commutator_code(high))))
    hits = []
    step = max(1, _CHUNK // low.size)
    for s in range(0, high.size, step):
        block = high_need[s:s + step]
        hi, lo = np.nonzero(block[:, None] == low_code[None, :])
        hits.append(high[s + hi] + low[lo])
    return np.sort(np.concatenate(hits))


def centralizer(A: Matrix, budget: int | None = None) -> list[Matrix]:
    """Every matrix commuting with ``A``, by exhaustive scan, in rank order."""
    space = matrix_space(A.ctx, A.n)
    return space.matrices(centralizer_ranks(A, budget))


def _powers_until_dependent(A: Matrix) -> list[Matrix]:
    """E, A, A^2, ... up to the first power linearly dependent on the previous."""
    ctx = A.ctx
    basis: list[tuple[int, list[int]]] = []  # (pivot, normalised row)
    powers: list[Matrix] = []
    P = Matrix.identity(ctx, A.n)
    while True:
        v = list(P.entries)
        for pivot, row in basis:
            if v[pivot]:
                f = ctx.ineg(v[pivot])
                v = [ctx.iadd(x, ctx.imul(f, y)) for x, y in zip(v, row)]
        pivot = next((i for i, x in enumerate(v) if x), None)
        if pivot is None:
            return powers
        inv = ctx.iinv(v[pivot])
        basis.append((pivot, [ctx.imul(inv, x) for x in v]))
        powers.append(P)
        P = P * A


def minimal_polynomial_degree(A: Matrix) -> int:
    return len(_powers_until_dependent(A))


def subalgebra_ranks(A: Matrix, budget: int | None = None) -> np.ndarray:
    """Sorted ranks of the algebra spanned by E, A, ..., A^(d-1)."""
    powers = _powers_until_dependent(A)
    d = len(powers)
    ctx = A.ctx
    check_budget(ctx.q ** d, budget, "subalgebra enumeration")
    space = matrix_space(ctx, A.n)
    coeffs = np.array(list(itertools.product(range(ctx.q), repeat=d)), dtype=np.int64)
    P = np.array([p.entries for p in powers], dtype=np.int64)
    acc = np.zeros((coeffs.shape[0], A.n * A.n), dtype=np.int64)
    for i in range(d):
        acc = space._fadd(acc, space._fmul(coeffs[:, i:i + 1], P[i][None, :]))
    return np.unique(space.encode(acc))


def subalgebra_of(A: Matrix, budget: int | None = None) -> list[Matrix]:
    """All polynomials in ``A`` (a commutative algebra with q^d elements, d the
    degree of the minimal polynomial), in rank order."""
    return matrix_space(A.ctx, A.n).matrices(subalgebra_ranks(A, budget))


@lru_cache(maxsize=None)
def general_linear_ranks(ctx: GaloisField, n: int) -> np.ndarray:
    space = matrix_space(ctx, n)
    if space.size > ENUMERATION_CAP:
        raise BudgetExceeded(space.size, ENUMERATION_CAP, "GL enumeration")
    ranks = np.arange(space.size, dtype=np.int64)
    det = space.entry_det(space.decode(ranks))
    return ranks[det != 0]


def conjugates(A: Matrix) -> np.ndarray:
    """Ranks of g A g^-1 for every g in GL(n, q), in the order of g."""
    space = matrix_space(A.ctx, A.n)
    G = space.decode(general_linear_ranks(A.ctx, A.n))
    a = np.array(A.entries, dtype=np.int64)
    return space.encode(space.entry_matmul(space.entry_matmul(G, a[None, :]), space.entry_inverse(G)))


def similarity_class_ranks(A: Matrix) -> np.ndarray:
    return np.unique(conjugates(A))


def similarity_class(A: Matrix) -> list[Matrix]:
    """The conjugacy orbit of ``A`` in rank order; the first member is canonical."""
    return matrix_space(A.ctx, A.n).matrices(similarity_class_ranks(A))
