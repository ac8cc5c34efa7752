"""Exact linear algebra over small finite fields GF(p^k).

Scalars are integer codes in [0, q).  The base-p digits of a code, least
significant first, are the coefficients of the polynomial residue, so code
arithmetic is table-driven and exact.  For k > 1 the modulus is the
lexicographically smallest monic irreducible of degree k, comparing
coefficient vectors as base-p integers with the constant term least
significant; this pins GF(4) to x^2 + x + 1 and makes every run
reproducible without external tables.

Matrices are immutable row-major code tuples.  Subspaces are always stored
as the reduced row echelon basis of their row span, so two equal subspaces
have identical representations and can be compared with ==.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as _dfield
from functools import lru_cache

from .errors import (
    AmbientMismatch,
    CapExceeded,
    DimMismatch,
    DivisionByZero,
    FieldMismatch,
    InternalError,
    InvariantViolation,
    NotInvertible,
    NotPrime,
    RankNotOne,
)

Q_CAP = 64
AMBIENT_CAP = 8
ENUM_CAP = 1 << 20


# ---------------------------------------------------------------------------
# prime-field polynomial helpers (coefficient lists, low degree first)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _poly_deg(c):
    d = len(c) - 1
    while d >= 0 and c[d] == 0:
        d -= 1
    return d


def _poly_divmod_p(num, den, p):
    # den must be nonzero; works over F_p with p prime
    num = list(num)
    dd = _poly_deg(den)
    if dd < 0:
        raise DivisionByZero("polynomial division by zero")
    inv_lead = pow(den[dd], p - 2, p) if den[dd] != 1 else 1
    nd = _poly_deg(num)
    quo = [0] * max(nd - dd + 1, 1)
    while nd >= dd:
        c = (num[nd] * inv_lead) % p
        quo[nd - dd] = c
        for i in range(dd + 1):
            num[nd - dd + i] = (num[nd - dd + i] - c * den[i]) % p
        nd = _poly_deg(num)
    return quo, num


def _poly_irreducible_p(coeffs, p):
    # coeffs: monic, degree k >= 1
    k = _poly_deg(coeffs)
    for d in range(1, k // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            den = list(low) + [1]
            _, rem = _poly_divmod_p(coeffs, den, p)
            if _poly_deg(rem) < 0:
                return False
    return True


def _smallest_irreducible(p: int, k: int):
    # candidates x^k + (low part), low part enumerated as base-p integers
    for m in range(p**k):
        low = []
        t = m
        for _ in range(k):
            low.append(t % p)
            t //= p
        cand = low + [1]
        if _poly_irreducible_p(cand, p):
            return tuple(cand)
    raise InternalError(f"no irreducible of degree {k} over F_{p}")  # pragma: no cover


# ---------------------------------------------------------------------------
# field construction


@dataclass(frozen=True)
class FieldSpec:
    """A concrete GF(p^k) with precomputed arithmetic tables."""

    p: int
    k: int
    q: int
    modulus: tuple[int, ...]  # () when k == 1
    add: tuple = _dfield(compare=False, repr=False, default=())
    mul: tuple = _dfield(compare=False, repr=False, default=())
    neg: tuple = _dfield(compare=False, repr=False, default=())
    inv: tuple = _dfield(compare=False, repr=False, default=())

    def scalar(self, code: int) -> "Scalar":
        if not 0 <= code < self.q:
            raise InvariantViolation(f"scalar code {code} outside [0,{self.q})")
        return Scalar(self, code)

    @property
    def zero(self) -> "Scalar":
        return Scalar(self, 0)

    @property
    def one(self) -> "Scalar":
        return Scalar(self, 1)


def _digits(code, p, k):
    out = []
    for _ in range(k):
        out.append(code % p)
        code //= p
    return out


def _code_of(digits, p):
    c = 0
    for d in reversed(digits):
        c = c * p + d
    return c


@lru_cache(maxsize=None)
def field_make(p: int, k: int = 1, q_cap: int = Q_CAP) -> FieldSpec:
    """Build GF(p^k).  Raises NotPrime / CapExceeded on bad input."""
    if not isinstance(p, int) or not isinstance(k, int) or k < 1:
        raise NotPrime(f"bad field parameters p={p!r}, k={k!r}")
    if not _is_prime(p):
        raise NotPrime(f"{p} is not prime")
    q = p**k
    if q > q_cap:
        raise CapExceeded(f"field size {q} exceeds cap {q_cap}")

    if k == 1:
        modulus = ()
        add = tuple(tuple((a + b) % p for b in range(p)) for a in range(p))
        mul = tuple(tuple((a * b) % p for b in range(p)) for a in range(p))
        neg = tuple((-a) % p for a in range(p))
        inv = tuple(0 if a == 0 else pow(a, p - 2, p) for a in range(p))
    else:
        modulus = _smallest_irreducible(p, k)
        digs = [_digits(c, p, k) for c in range(q)]
        add = tuple(
            tuple(_code_of([(x + y) % p for x, y in zip(digs[a], digs[b])], p) for b in range(q))
            for a in range(q)
        )
        neg = tuple(_code_of([(-x) % p for x in digs[a]], p) for a in range(q))

        def mul_codes(a, b):
            prod = [0] * (2 * k - 1)
            for i, x in enumerate(digs[a]):
                if x:
                    for j, y in enumerate(digs[b]):
                        prod[i + j] = (prod[i + j] + x * y) % p
            for deg in range(2 * k - 2, k - 1, -1):
                c = prod[deg]
                if c:
                    for i in range(k + 1):
                        prod[deg - k + i] = (prod[deg - k + i] - c * modulus[i]) % p
            return _code_of(prod[:k], p)

        mul = tuple(tuple(mul_codes(a, b) for b in range(q)) for a in range(q))
        inv_list = [0] * q
        for a in range(1, q):
            for b in range(1, q):
                if mul[a][b] == 1:
                    inv_list[a] = b
                    break
        inv = tuple(inv_list)

    return FieldSpec(p=p, k=k, q=q, modulus=modulus, add=add, mul=mul, neg=neg, inv=inv)


def format_field(f: FieldSpec) -> str:
    return str(f.p) if f.k == 1 else f"{f.p}^{f.k}"


def parse_field(text: str, q_cap: int = Q_CAP) -> FieldSpec:
    text = text.strip()
    if "^" in text:
        p_s, k_s = text.split("^", 1)
    else:
        p_s, k_s = text, "1"
    try:
        p, k = int(p_s), int(k_s)
    except ValueError:
        raise NotPrime(f"cannot parse field spec {text!r}") from None
    return field_make(p, k, q_cap)


# ---------------------------------------------------------------------------
# scalars


@dataclass(frozen=True)
class Scalar:
    field: FieldSpec
    code: int

    def _chk(self, other: "Scalar"):
        if self.field != other.field:
            raise FieldMismatch("scalars from different fields")

    def __add__(self, other):
        self._chk(other)
        return Scalar(self.field, self.field.add[self.code][other.code])

    def __sub__(self, other):
        self._chk(other)
        return Scalar(self.field, self.field.add[self.code][self.field.neg[other.code]])

    def __mul__(self, other):
        self._chk(other)
        return Scalar(self.field, self.field.mul[self.code][other.code])

    def __neg__(self):
        return Scalar(self.field, self.field.neg[self.code])

    def inverse(self):
        if self.code == 0:
            raise DivisionByZero("inverse of zero")
        return Scalar(self.field, self.field.inv[self.code])

    def __bool__(self):
        return self.code != 0


def format_scalar(s: Scalar) -> str:
    return str(s.code)


# ---------------------------------------------------------------------------
# matrices


@dataclass(frozen=True)
class Matrix:
    field: FieldSpec
    rows: int
    cols: int
    codes: tuple[int, ...]  # row-major

    # -- construction helpers -------------------------------------------

    def _chk_field(self, other: "Matrix"):
        if self.field != other.field:
            raise FieldMismatch("matrices over different fields")

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other: "Matrix") -> "Matrix":
        self._chk_field(other)
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimMismatch("matrix addition shape mismatch")
        add = self.field.add
        return Matrix(
            self.field,
            self.rows,
            self.cols,
            tuple(add[a][b] for a, b in zip(self.codes, other.codes)),
        )

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + (-other)

    def __neg__(self) -> "Matrix":
        neg = self.field.neg
        return Matrix(self.field, self.rows, self.cols, tuple(neg[a] for a in self.codes))

    def __mul__(self, other: "Matrix") -> "Matrix":
        self._chk_field(other)
        if self.cols != other.rows:
            raise DimMismatch(
                f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}"
            )
        f = self.field
        mul, add = f.mul, f.add
        n, m, kk = self.rows, self.cols, other.cols
        a, b = self.codes, other.codes
        out = []
        for i in range(n):
            arow = a[i * m : (i + 1) * m]
            for j in range(kk):
                acc = 0
                for l in range(m):
                    x = arow[l]
                    if x:
                        acc = add[acc][mul[x][b[l * kk + j]]]
                out.append(acc)
        return Matrix(f, n, kk, tuple(out))

    def scale(self, s: Scalar) -> "Matrix":
        if s.field != self.field:
            raise FieldMismatch("scalar from a different field")
        mul = self.field.mul
        return Matrix(self.field, self.rows, self.cols, tuple(mul[s.code][c] for c in self.codes))

    def transpose(self) -> "Matrix":
        c = self.codes
        return Matrix(
            self.field,
            self.cols,
            self.rows,
            tuple(c[i * self.cols + j] for j in range(self.cols) for i in range(self.rows)),
        )

    # -- accessors ---------------------------------------------------------

    def entry(self, i: int, j: int) -> Scalar:
        return Scalar(self.field, self.codes[i * self.cols + j])

    def row_codes(self, i: int) -> tuple[int, ...]:
        return self.codes[i * self.cols : (i + 1) * self.cols]

    def col_codes(self, j: int) -> tuple[int, ...]:
        return tuple(self.codes[i * self.cols + j] for i in range(self.rows))

    @property
    def entries(self) -> tuple[Scalar, ...]:
        return tuple(Scalar(self.field, c) for c in self.codes)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.codes)

    def is_square(self) -> bool:
        return self.rows == self.cols

    # -- derived linear algebra (cached module-level) -----------------------

    def rank(self) -> int:
        return mat_rank(self)

    def rref(self) -> "Matrix":
        rows, _ = _rref(self.field, [list(self.row_codes(i)) for i in range(self.rows)])
        rows = rows + [[0] * self.cols] * (self.rows - len(rows))
        return Matrix(self.field, self.rows, self.cols, tuple(c for r in rows for c in r))

    def kernel(self) -> "Subspace":
        return mat_kernel(self)

    def image(self) -> "Subspace":
        return mat_image(self)

    def is_invertible(self) -> bool:
        return self.is_square() and self.rank() == self.rows

    def inverse(self) -> "Matrix":
        return mat_inverse(self)


def matrix(field: FieldSpec, rows: list[list[int]]) -> Matrix:
    """Validate entry codes and build an immutable matrix."""
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise DimMismatch("ragged or empty matrix literal")
    q = field.q
    flat = []
    for r in rows:
        for c in r:
            if not isinstance(c, int) or not 0 <= c < q:
                raise InvariantViolation(f"entry code {c!r} outside [0,{q})")
            flat.append(c)
    return Matrix(field, len(rows), len(rows[0]), tuple(flat))


def zero_matrix(field: FieldSpec, rows: int, cols: int | None = None) -> Matrix:
    cols = rows if cols is None else cols
    return Matrix(field, rows, cols, (0,) * (rows * cols))


def identity_matrix(field: FieldSpec, n: int) -> Matrix:
    return Matrix(field, n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)))


def unit_matrix(field: FieldSpec, n: int, i: int, j: int, code: int = 1) -> Matrix:
    """n x n matrix with a single nonzero entry at (i, j), zero-based."""
    codes = [0] * (n * n)
    codes[i * n + j] = code
    return Matrix(field, n, n, tuple(codes))


def mat_pow(a: Matrix, e: int) -> Matrix:
    if not a.is_square():
        raise DimMismatch("powers need a square matrix")
    if e < 0:
        raise InvariantViolation("negative power")
    out = identity_matrix(a.field, a.rows)
    for _ in range(e):
        out = out * a
    return out


def _rref(f: FieldSpec, rows: list[list[int]]):
    """In-place Gaussian elimination to RREF.  Returns (nonzero rows, pivots)."""
    mul, add, neg, inv = f.mul, f.add, f.neg, f.inv
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        piv = rows[r][c]
        if piv != 1:
            ivc = inv[piv]
            rows[r] = [mul[ivc][x] for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                factor = neg[rows[i][c]]
                row_r = rows[r]
                rows[i] = [add[x][mul[factor][y]] for x, y in zip(rows[i], row_r)]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


@lru_cache(maxsize=None)
def mat_rank(a: Matrix) -> int:
    rows, _ = _rref(a.field, [list(a.row_codes(i)) for i in range(a.rows)])
    return len(rows)


@lru_cache(maxsize=None)
def mat_kernel(a: Matrix) -> "Subspace":
    """Right null space {v : a v = 0} as a canonical subspace of F^cols."""
    f = a.field
    rows, pivots = _rref(f, [list(a.row_codes(i)) for i in range(a.rows)])
    free = [c for c in range(a.cols) if c not in pivots]
    basis = []
    neg = f.neg
    for fc in free:
        v = [0] * a.cols
        v[fc] = 1
        for r, pc in enumerate(pivots):
            v[pc] = neg[rows[r][fc]]
        basis.append(v)
    return subspace(f, a.cols, basis)


@lru_cache(maxsize=None)
def mat_image(a: Matrix) -> "Subspace":
    """Column space of a, as a canonical subspace of F^rows."""
    cols = [list(a.col_codes(j)) for j in range(a.cols)]
    return subspace(a.field, a.rows, cols)


def mat_inverse(a: Matrix) -> Matrix:
    if not a.is_square():
        raise DimMismatch("inverse needs a square matrix")
    f, n = a.field, a.rows
    aug = [list(a.row_codes(i)) + [1 if j == i else 0 for j in range(n)] for i in range(n)]
    rows, pivots = _rref(f, aug)
    if pivots != list(range(n)):
        raise NotInvertible("matrix is singular")
    return Matrix(f, n, n, tuple(rows[i][n + j] for i in range(n) for j in range(n)))


def mat_sort_key(a: Matrix):
    """Canonical ordering key: rank first, then entry codes lexicographically."""
    return (mat_rank(a), a.codes)


def format_matrix(a: Matrix) -> str:
    return ";".join(",".join(str(c) for c in a.row_codes(i)) for i in range(a.rows))


def parse_matrix(field: FieldSpec, text: str) -> Matrix:
    try:
        rows = [[int(x) for x in part.split(",")] for part in text.strip().split(";")]
    except ValueError:
        raise InvariantViolation(f"cannot parse matrix {text!r}") from None
    return matrix(field, rows)


def enumerate_matrices(field: FieldSpec, rows: int, cols: int, cap: int = ENUM_CAP):
    """All rows x cols matrices in entry-code lexicographic order."""
    total = field.q ** (rows * cols)
    if total > cap:
        raise CapExceeded(f"{total} matrices exceed cap {cap}")
    for codes in itertools.product(range(field.q), repeat=rows * cols):
        yield Matrix(field, rows, cols, codes)


# ---------------------------------------------------------------------------
# subspaces


@dataclass(frozen=True)
class Subspace:
    """Row span of a canonical RREF basis inside F^ambient. dim 0 <=> basis ()."""

    field: FieldSpec
    ambient: int
    basis: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def _chk(self, other: "Subspace"):
        if self.field != other.field:
            raise FieldMismatch("subspaces over different fields")
        if self.ambient != other.ambient:
            raise AmbientMismatch("subspaces of different ambient spaces")

    def reduce_vector(self, v) -> tuple[int, ...]:
        """Reduce v against the RREF basis; zero vector iff v is a member."""
        f = self.field
        mul, add, neg = f.mul, f.add, f.neg
        v = list(v)
        for row in self.basis:
            pc = next(i for i, x in enumerate(row) if x != 0)
            if v[pc] != 0:
                factor = neg[v[pc]]
                v = [add[x][mul[factor][y]] for x, y in zip(v, row)]
        return tuple(v)

    def contains_vector(self, v) -> bool:
        if len(v) != self.ambient:
            raise AmbientMismatch("vector length != ambient dimension")
        return all(x == 0 for x in self.reduce_vector(v))

    def contains(self, other: "Subspace") -> bool:
        self._chk(other)
        return all(self.contains_vector(r) for r in other.basis)

    def sum_(self, other: "Subspace") -> "Subspace":
        self._chk(other)
        return subspace(self.field, self.ambient, list(self.basis) + list(other.basis))

    def intersect(self, other: "Subspace") -> "Subspace":
        # Zassenhaus: rref of [[U, U], [W, 0]]; rows with zero left half carry
        # the intersection in their right half.
        self._chk(other)
        n = self.ambient
        rows = [list(r) + list(r) for r in self.basis]
        rows += [list(r) + [0] * n for r in other.basis]
        red, _ = _rref(self.field, rows)
        out = [r[n:] for r in red if all(x == 0 for x in r[:n])]
        return subspace(self.field, n, out)

    def vectors(self):
        """All member vectors (q^dim of them), deterministic order."""
        f = self.field
        mul, add = f.mul, f.add
        for coeffs in itertools.product(range(f.q), repeat=self.dim):
            v = [0] * self.ambient
            for c, row in zip(coeffs, self.basis):
                if c:
                    v = [add[x][mul[c][y]] for x, y in zip(v, row)]
            yield tuple(v)

    def basis_matrix(self) -> Matrix:
        """Basis rows as a dim x ambient matrix (zero-row-free)."""
        return Matrix(self.field, self.dim, self.ambient, tuple(c for r in self.basis for c in r))


def subspace(field: FieldSpec, ambient: int, rows) -> Subspace:
    """Canonicalize any spanning set of row vectors into a Subspace."""
    rr, _ = _rref(field, [list(r) for r in rows])
    return Subspace(field, ambient, tuple(tuple(r) for r in rr))


def zero_subspace(field: FieldSpec, ambient: int) -> Subspace:
    return Subspace(field, ambient, ())


def full_space(field: FieldSpec, ambient: int) -> Subspace:
    return subspace(field, ambient, [[1 if i == j else 0 for j in range(ambient)] for i in range(ambient)])


def subspace_sort_key(s: Subspace):
    return (s.dim, tuple(c for r in s.basis for c in r))


def format_subspace(s: Subspace) -> str:
    if s.dim == 0:
        return "-"
    return ";".join(",".join(str(c) for c in r) for r in s.basis)


def parse_subspace(field: FieldSpec, ambient: int, text: str) -> Subspace:
    text = text.strip()
    if text == "-":
        return zero_subspace(field, ambient)
    m = parse_matrix(field, text)
    if m.cols != ambient:
        raise AmbientMismatch(f"basis rows have length {m.cols}, ambient is {ambient}")
    return subspace(field, ambient, [list(m.row_codes(i)) for i in range(m.rows)])


def standard_complement(s: Subspace) -> Subspace:
    """Deterministic complement: extend the basis by standard vectors e_i in
    increasing index order, keeping those that grow the span."""
    f, n = s.field, s.ambient
    rows = [list(r) for r in s.basis]
    picked = []
    cur, _ = _rref(f, [r[:] for r in rows])
    rank = len(cur)
    for i in range(n):
        if rank == n:
            break
        e = [0] * n
        e[i] = 1
        trial, _ = _rref(f, [r[:] for r in cur] + [e])
        if len(trial) > rank:
            picked.append(tuple(e))
            cur = trial
            rank += 1
    return subspace(f, n, picked)


def projection_idempotent(onto: Subspace, along: Subspace) -> Matrix:
    """The idempotent with image `onto` and kernel `along`.

    Requires F^n = onto (+) along; raises InvariantViolation otherwise.
    """
    if onto.field != along.field or onto.ambient != along.ambient:
        raise AmbientMismatch("projection pieces live in different spaces")
    f, n = onto.field, onto.ambient
    if onto.dim + along.dim != n or onto.intersect(along).dim != 0:
        raise InvariantViolation("subspaces are not complementary")
    cols = list(onto.basis) + list(along.basis)
    p = Matrix(f, n, n, tuple(cols[j][i] for i in range(n) for j in range(n)))
    d = Matrix(f, n, n, tuple(1 if (i == j and i < onto.dim) else 0 for i in range(n) for j in range(n)))
    return p * d * p.inverse()


def gaussian_binomial(n: int, d: int, q: int) -> int:
    """Number of d-dimensional subspaces of F_q^n (exact integer)."""
    if d < 0 or d > n:
        return 0
    num = den = 1
    for i in range(d):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    assert num % den == 0
    return num // den


def enumerate_subspaces(field: FieldSpec, ambient: int, d: int, cap: int = ENUM_CAP):
    """All d-dimensional subspaces of F^ambient, sorted by basis encoding.

    Enumeration walks RREF shapes: choose pivot columns, then fill the free
    cells (entries right of each pivot, outside other pivot columns).
    """
    if ambient > AMBIENT_CAP:
        raise CapExceeded(f"ambient dimension {ambient} exceeds cap {AMBIENT_CAP}")
    if d == 0:
        return [zero_subspace(field, ambient)]
    q = field.q
    total = gaussian_binomial(ambient, d, q)
    if total > cap:
        raise CapExceeded(f"{total} subspaces exceed cap {cap}")
    out = []
    for pivots in itertools.combinations(range(ambient), d):
        pivset = set(pivots)
        free_cells = [
            (r, c)
            for r, pc in enumerate(pivots)
            for c in range(pc + 1, ambient)
            if c not in pivset
        ]
        for vals in itertools.product(range(q), repeat=len(free_cells)):
            rows = [[0] * ambient for _ in range(d)]
            for r, pc in enumerate(pivots):
                rows[r][pc] = 1
            for (r, c), v in zip(free_cells, vals):
                rows[r][c] = v
            out.append(Subspace(field, ambient, tuple(tuple(r) for r in rows)))
    out.sort(key=subspace_sort_key)
    if len(out) != total:  # pragma: no cover
        raise InternalError("subspace enumeration count mismatch")
    return out


# ---------------------------------------------------------------------------
# similarity via invariant factors of xI - A

# Polynomials over GF(q) below are tuples of scalar codes, low degree first,
# with no trailing zeros; () is the zero polynomial.


def _pnorm(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _padd(f, a, b):
    add = f.add
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _pnorm([add[x][y] for x, y in zip(a, b)])


def _pneg(f, a):
    neg = f.neg
    return tuple(neg[x] for x in a)


def _pmul(f, a, b):
    if not a or not b:
        return ()
    mul, add = f.mul, f.add
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = add[out[i + j]][mul[x][y]]
    return _pnorm(out)


def _pdivmod(f, num, den):
    if not den:
        raise DivisionByZero("polynomial division by zero")
    mul, add, neg, inv = f.mul, f.add, f.neg, f.inv
    num = list(num)
    dd = len(den) - 1
    ilead = inv[den[-1]]
    quo = [0] * max(len(num) - dd, 1)
    while len(num) - 1 >= dd and any(num):
        while num and num[-1] == 0:
            num.pop()
        if len(num) - 1 < dd:
            break
        c = mul[num[-1]][ilead]
        pos = len(num) - 1 - dd
        quo[pos] = c
        nc = neg[c]
        for i, dcoef in enumerate(den):
            num[pos + i] = add[num[pos + i]][mul[nc][dcoef]]
    return _pnorm(quo), _pnorm(num)


def _pmonic(f, a):
    if not a:
        return a
    if a[-1] == 1:
        return a
    il = f.inv[a[-1]]
    mul = f.mul
    return tuple(mul[il][x] for x in a)


@lru_cache(maxsize=None)
def invariant_factors(a: Matrix) -> tuple[tuple[int, ...], ...]:
    """Nontrivial invariant factors of xI - a, monic, in divisibility order.

    This is a complete similarity invariant over any field, so it doubles as
    the canonical class key for unit conjugacy.
    """
    if not a.is_square():
        raise DimMismatch("similarity needs square matrices")
    f, n = a.field, a.rows
    neg = f.neg
    m = [
        [
            _pnorm([neg[a.codes[i * n + j]], 1] if i == j else [neg[a.codes[i * n + j]]])
            for j in range(n)
        ]
        for i in range(n)
    ]

    def deg(p):
        return len(p) - 1 if p else -1

    for t in range(n):
        while True:
            best = None
            for i in range(t, n):
                for j in range(t, n):
                    if m[i][j] and (best is None or deg(m[i][j]) < deg(m[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break  # submatrix is zero
            bi, bj = best
            if bi != t:
                m[bi], m[t] = m[t], m[bi]
            if bj != t:
                for row in m:
                    row[bj], row[t] = row[t], row[bj]
            dirty = False
            for i in range(t + 1, n):
                if m[i][t]:
                    q, r = _pdivmod(f, m[i][t], m[t][t])
                    if q:
                        nq = _pneg(f, q)
                        m[i] = [_padd(f, m[i][j], _pmul(f, nq, m[t][j])) for j in range(n)]
                    if r:
                        dirty = True
            for j in range(t + 1, n):
                if m[t][j]:
                    q, r = _pdivmod(f, m[t][j], m[t][t])
                    if q:
                        nq = _pneg(f, q)
                        for i in range(n):
                            m[i][j] = _padd(f, m[i][j], _pmul(f, nq, m[i][t]))
                    if r:
                        dirty = True
            if dirty:
                continue
            if any(m[i][t] for i in range(t + 1, n)) or any(m[t][j] for j in range(t + 1, n)):
                continue
            offender = None
            for i in range(t + 1, n):
                for j in range(t + 1, n):
                    if m[i][j]:
                        _, r = _pdivmod(f, m[i][j], m[t][t])
                        if r:
                            offender = i
                            break
                if offender is not None:
                    break
            if offender is None:
                break
            m[t] = [_padd(f, m[t][j], m[offender][j]) for j in range(n)]

    factors = [_pmonic(f, m[i][i]) for i in range(n)]
    return tuple(p for p in factors if len(p) >= 2)  # drop degree-0 units


def similar(a: Matrix, b: Matrix) -> bool:
    """True iff a and b are conjugate under the general linear group."""
    if a.field != b.field:
        raise FieldMismatch("matrices over different fields")
    if a.rows != b.rows or a.cols != b.cols or not a.is_square():
        raise DimMismatch("similarity needs equal square shapes")
    return invariant_factors(a) == invariant_factors(b)


# ---------------------------------------------------------------------------
# rank-one factorization


@dataclass(frozen=True)
class Rank1Factorization:
    """m = lam * v * w with v a hat-normalized column, w a hat-normalized row.

    Hat-normalized: first nonzero coordinate equals 1.  The triple is unique,
    and lam is the matrix entry at (first nonzero row, first nonzero column).
    """

    lam: Scalar
    v: Matrix  # rows x 1
    w: Matrix  # 1 x cols

    def reassemble(self) -> Matrix:
        return (self.v * self.w).scale(self.lam)


def rank1_factor(m: Matrix) -> Rank1Factorization:
    if mat_rank(m) != 1:
        raise RankNotOne(f"matrix has rank {mat_rank(m)}, not 1")
    f = m.field
    j0 = next(j for j in range(m.cols) if any(m.col_codes(j)))
    col = m.col_codes(j0)
    i0 = next(i for i in range(m.rows) if col[i])
    row = m.row_codes(i0)
    inv, mul = f.inv, f.mul
    vc = inv[col[i0]]
    v = Matrix(f, m.rows, 1, tuple(mul[vc][x] for x in col))
    wc = inv[row[j0]]
    w = Matrix(f, 1, m.cols, tuple(mul[wc][x] for x in row))
    lam = Scalar(f, m.codes[i0 * m.cols + j0])
    out = Rank1Factorization(lam, v, w)
    if out.reassemble() != m:  # pragma: no cover
        raise InternalError("rank-one reassembly mismatch")
    return out


def format_poly(coeffs: tuple[int, ...]) -> str:
    """Render a coefficient tuple (low degree first, scalar codes) as text.

    Examples: (0, 0, 1) -> "x^2"; (1, 1) -> "x+1"; () -> "0".
    """
    if not coeffs:
        return "0"
    parts = []
    for d in range(len(coeffs) - 1, -1, -1):
        c = coeffs[d]
        if not c:
            continue
        if d == 0:
            parts.append(str(c))
        else:
            xs = "x" if d == 1 else f"x^{d}"
            parts.append(xs if c == 1 else f"{c}{xs}")
    return "+".join(parts) if parts else "0"
