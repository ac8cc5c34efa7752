"""Semigroup conjugacy of matrices via core decomposition.

Two square matrices are conjugate in the multiplicative semigroup exactly
when their cores are similar, where the core of A is the restriction of A
to the stable image Im(A^t) (t the rank stability index), padded back to an
n x n matrix by the projection onto Im(A^t) along ker(A^t).  core_chain
produces an explicit sequence of primary conjugations A -> ... -> core(A),
each step carrying a verified witness pair (u, v) with u v = current and
v u = next.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .errors import CapExceeded, DimMismatch, FieldMismatch, InternalError, InvariantViolation
from .gf import (
    FieldSpec,
    Matrix,
    full_space,
    identity_matrix,
    invariant_factors,
    mat_image,
    mat_kernel,
    mat_pow,
    mat_rank,
    projection_idempotent,
    similar,
    standard_complement,
    zero_subspace,
)

WITNESS_SCAN_CAP = 512


def stability_index(a: Matrix) -> int:
    """Least t >= 0 with rank(a^t) = rank(a^{t+1}); 0 iff a is invertible."""
    if not a.is_square():
        raise DimMismatch("stability index needs a square matrix")
    prev = a.rows  # rank of a^0 = I
    power = a
    for t in range(1, a.rows + 2):
        r = mat_rank(power)
        if r == prev:
            return t - 1
        prev = r
        power = power * a
    raise InternalError("rank sequence failed to stabilize")  # pragma: no cover


@dataclass(frozen=True)
class CoreDecomposition:
    """Stable-image data of a matrix: V = image ⊕ kernel, core = e a e."""

    t: int
    image: object  # Subspace Im(a^t)
    kernel: object  # Subspace ker(a^t)
    projector: Matrix  # idempotent onto image along kernel
    core: Matrix


@lru_cache(maxsize=None)
def core_decomposition(a: Matrix) -> CoreDecomposition:
    t = stability_index(a)
    at = mat_pow(a, t)
    image = mat_image(at)
    kernel = mat_kernel(at)
    e = projection_idempotent(image, kernel)
    c = e * a * e
    # the stable part is carried bijectively, so ranks must agree
    if mat_rank(c) != image.dim:  # pragma: no cover
        raise InternalError("core lost rank")
    return CoreDecomposition(t=t, image=image, kernel=kernel, projector=e, core=c)


def core(a: Matrix) -> Matrix:
    return core_decomposition(a).core


@dataclass(frozen=True)
class ConjugacyChain:
    """Primary-conjugation path from a matrix to its core.

    steps[0] is the matrix itself, steps[-1] its core; witnesses[i] = (u, v)
    satisfies u v = steps[i] and v u = steps[i+1].
    """

    source: Matrix
    steps: tuple[Matrix, ...]
    witnesses: tuple[tuple[Matrix, Matrix], ...]

    def __post_init__(self):
        if len(self.witnesses) != len(self.steps) - 1:
            raise InvariantViolation("witness count must be steps - 1")
        for i, (u, v) in enumerate(self.witnesses):
            if u * v != self.steps[i] or v * u != self.steps[i + 1]:
                raise InvariantViolation(f"witness {i} fails the primary relation")


def _image_projectors(a: Matrix, t: int) -> list[Matrix]:
    """Projections e_0..e_{t+1}, e_i onto Im(a^i); kernel complement once
    stable, deterministic pivot completion before that."""
    f, n = a.field, a.rows
    out = []
    for i in range(t + 2):
        ai = mat_pow(a, i)
        img = mat_image(ai)
        if img.dim == n:
            out.append(identity_matrix(f, n))
            continue
        if i >= t:
            comp = mat_kernel(ai)
        else:
            comp = standard_complement(img)
        out.append(projection_idempotent(img, comp))
    return out


def core_chain(a: Matrix) -> ConjugacyChain:
    """Explicit conjugation path a -> core(a) with verified witnesses.

    Step i is e_i a e_{i-1} (e_i projecting onto Im(a^i)).  Because e_1
    fixes Im(a) pointwise, the first step is a itself; from the stability
    index on, every step equals the core.  The witness pair for step ->
    next is (projector, step): e_i (e_i a e_{i-1}) = e_i a e_{i-1} and
    (e_i a e_{i-1}) e_i = e_{i+1} a e_i, the latter holding for any choice
    of complements since both sides fix the nested images pointwise.
    """
    if not a.is_square():
        raise DimMismatch("chain needs a square matrix")
    dec = core_decomposition(a)
    t = dec.t
    projs = _image_projectors(a, t)
    steps = [projs[i] * a * projs[i - 1] for i in range(1, t + 2)]
    if not steps:  # t = -1 impossible; invertible a gives t = 0, one step
        steps = [a]
    witnesses = [(projs[i + 1], steps[i]) for i in range(len(steps) - 1)]
    if steps[0] != a:  # pragma: no cover
        raise InternalError("chain does not start at the matrix")
    if steps[-1] != dec.core:  # pragma: no cover
        raise InternalError("chain does not end at the core")
    while len(steps) >= 2 and steps[-1] == steps[-2]:
        steps.pop()
        witnesses.pop()
    return ConjugacyChain(source=a, steps=tuple(steps), witnesses=tuple(witnesses))


def semigroup_conjugate(a: Matrix, b: Matrix) -> bool:
    """Conjugacy in the multiplicative semigroup: cores are similar."""
    if a.field != b.field:
        raise FieldMismatch("conjugacy needs a common field")
    if not a.is_square() or not b.is_square() or a.rows != b.rows:
        raise DimMismatch("conjugacy needs square matrices of equal size")
    return similar(core(a), core(b))


def primary_conjugation_witness(a: Matrix, b: Matrix, cap: int = WITNESS_SCAN_CAP):
    """Lexicographically first (u, v) with u v = a and v u = b, or None.

    Scans u in entry-code order; for each u scans v likewise.  Intended for
    small ambients (q^{n^2} <= cap).
    """
    from .gf import enumerate_matrices

    if a.field != b.field or a.rows != b.rows or not a.is_square() or not b.is_square():
        raise DimMismatch("witness scan needs square matrices over one field")
    f, n = a.field, a.rows
    total = f.q ** (n * n)
    if total > cap:
        raise CapExceeded(f"witness scan over {total} matrices exceeds cap {cap}")
    mats = list(enumerate_matrices(f, n, n))
    for u in mats:
        for v in mats:
            if u * v == a and v * u == b:
                return u, v
    return None


# ---------------------------------------------------------------------------
# conjugacy classes of the full semigroup


def _brute_pairs(grid, rows):
    pairs = set()
    for x in rows:
        rx = grid[x]
        for y in range(len(rx)):
            pairs.add((int(rx[y]), int(grid[y][x])))
    return pairs


def sg_classes(field: FieldSpec, n: int, method: str = "theorem", threads: int = 1):
    """Partition of the full n x n semigroup into conjugacy classes.

    method "theorem" groups elements by the similarity key of their cores;
    method "brute" takes the transitive closure of the primary relation
    {(x y, y x)} over the multiplication grid.  Both return the same
    Partition over ambient element ids.
    """
    from .engine import Partition, ambient, equiv_closure

    amb = ambient(field, n)
    m = amb.m
    if method == "theorem":
        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            chunk = (m + threads - 1) // threads

            def keys_of(lo):
                return [invariant_factors(core(amb.mats[x])) for x in range(lo, min(lo + chunk, m))]

            with ThreadPoolExecutor(max_workers=threads) as ex:
                parts = list(ex.map(keys_of, range(0, m, chunk)))
            keys = [k for part in parts for k in part]
        else:
            keys = [invariant_factors(core(a)) for a in amb.mats]
        first: dict = {}
        part = Partition(m)
        for x, k in enumerate(keys):
            if k in first:
                part.union(first[k], x)
            else:
                first[k] = x
        return part
    if method == "brute":
        grid = amb.grid
        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            chunk = (m + threads - 1) // threads
            spans = [range(lo, min(lo + chunk, m)) for lo in range(0, m, chunk)]
            with ThreadPoolExecutor(max_workers=threads) as ex:
                sets = list(ex.map(lambda rows: _brute_pairs(grid, rows), spans))
            pairs = set().union(*sets)
        else:
            pairs = _brute_pairs(grid, range(m))
        return equiv_closure(m, sorted(pairs))
    raise InvariantViolation(f"unknown method {method!r}")


def class_key(a: Matrix):
    """Canonical conjugacy-class key: invariant factors of the core."""
    return invariant_factors(core(a))
