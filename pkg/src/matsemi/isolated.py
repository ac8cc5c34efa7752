"""Isolated and completely isolated subsemigroups of M(n, F_q).

A subsemigroup S is isolated when every element some power of which lands
in S already lies in S, and completely isolated when x*y in S forces
x in S or y in S.  At desk scale the full classification — the whole
semigroup, its group of units, the ideal of singular matrices, and the
image/kernel-constrained families S(A-family, B-family) — can be checked
both by construction and by brute subset scans.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .engine import (
    Ambient,
    MatSet,
    ambient,
    build_table,
    closure,
    enumerate_subsemigroups,
    mat_set,
    product_grid,
)
from .errors import (
    AmbientMismatch,
    BadK,
    ContainmentViolation,
    DimMismatch,
    EmptyFamily,
    FieldMismatch,
    InternalError,
    InvariantViolation,
    VerificationFailed,
)
from .gf import (
    FieldSpec,
    Matrix,
    Subspace,
    enumerate_subspaces,
    gaussian_binomial,
    mat_image,
    mat_kernel,
    mat_rank,
    projection_idempotent,
    subspace_sort_key,
)

EXHAUSTIVE_SCAN_CAP = 16  # q^(n*n) bound for the full subset scan


# ---------------------------------------------------------------------------
# rank strata and ideals


def rank_stratum(field: FieldSpec, n: int, i: int) -> MatSet:
    """All matrices in M(n, F_q) of rank exactly i."""
    amb = ambient(field, n)
    mats = [m for m, r in zip(amb.mats, amb.ranks) if r == i]
    return mat_set(field, n, mats)


def ideal(field: FieldSpec, n: int, i: int) -> MatSet:
    """The two-sided ideal of all matrices of rank at most i."""
    amb = ambient(field, n)
    mats = [m for m, r in zip(amb.mats, amb.ranks) if r <= i]
    return mat_set(field, n, mats)


def ideal_generated_by_stratum(field: FieldSpec, n: int, k: int) -> MatSet:
    """Semigroup closure of the rank-k stratum; must equal the ideal I_k."""
    if not 1 <= k <= n - 1:
        raise BadK(f"stratum index must satisfy 1 <= k <= {n - 1}, got {k}")
    closed = closure(rank_stratum(field, n, k))
    expect = ideal(field, n, k)
    if closed.as_set() != expect.as_set():
        raise VerificationFailed(
            f"closure(D_{k}) has {len(closed)} elements, ideal I_{k} has {len(expect)}",
            evidence={"closure_size": len(closed), "ideal_size": len(expect)},
        )
    return closed


# ---------------------------------------------------------------------------
# idempotents


@dataclass(frozen=True)
class IdempotentPair:
    """An idempotent e together with its image/kernel decomposition."""

    v1: Subspace
    v2: Subspace
    e: Matrix

    def __post_init__(self):
        if self.e * self.e != self.e:
            raise InvariantViolation("matrix is not idempotent")
        if self.v1.intersect(self.v2).dim != 0 or self.v1.dim + self.v2.dim != self.v1.ambient:
            raise InvariantViolation("subspaces are not complementary")
        if mat_image(self.e) != self.v1 or mat_kernel(self.e) != self.v2:
            raise InvariantViolation("idempotent does not project onto v1 along v2")


def idempotent_for(onto: Subspace, along: Subspace) -> IdempotentPair:
    """The projection onto `onto` along `along`, as an annotated pair."""
    return IdempotentPair(v1=onto, v2=along, e=projection_idempotent(onto, along))


def idempotents(field: FieldSpec, n: int) -> tuple[IdempotentPair, ...]:
    """Every idempotent of M(n, F_q), annotated, in canonical matrix order."""
    amb = ambient(field, n)
    out = []
    for x, m in enumerate(amb.mats):
        if int(amb.grid[x, x]) == x:
            out.append(IdempotentPair(v1=mat_image(m), v2=mat_kernel(m), e=m))
    return tuple(out)


def idempotent_count_formula(field: FieldSpec, n: int) -> int:
    """Sum over d of (number of d-subspaces) * (number of their complements)."""
    q = field.q
    return sum(gaussian_binomial(n, d, q) * q ** (d * (n - d)) for d in range(n + 1))


# ---------------------------------------------------------------------------
# image/kernel families


@dataclass(frozen=True)
class SubspacePairFamily:
    """Candidate image hyperplanes and kernel lines, no line inside a hyperplane."""

    a_family: tuple[Subspace, ...]
    b_family: tuple[Subspace, ...]


def pair_family(a_family, b_family) -> SubspacePairFamily:
    a_family = tuple(sorted(set(a_family), key=subspace_sort_key))
    b_family = tuple(sorted(set(b_family), key=subspace_sort_key))
    if not a_family or not b_family:
        raise EmptyFamily("both families must be nonempty")
    spaces = a_family + b_family
    field, n = spaces[0].field, spaces[0].ambient
    for s in spaces:
        if s.field != field:
            raise FieldMismatch("family members over different fields")
        if s.ambient != n:
            raise AmbientMismatch("family members in different ambient spaces")
    if any(a.dim != n - 1 for a in a_family):
        raise DimMismatch("image family members must have dimension n-1")
    if any(b.dim != 1 for b in b_family):
        raise DimMismatch("kernel family members must have dimension 1")
    for b in b_family:
        for a in a_family:
            if a.contains(b):
                raise ContainmentViolation(
                    "kernel line lies inside an image hyperplane"
                )
    return SubspacePairFamily(a_family=a_family, b_family=b_family)


def s_ab_make(fam: SubspacePairFamily) -> MatSet:
    """All matrices with image in the A-family and kernel in the B-family.

    Multiplicative closedness is asserted by building the product grid, not
    assumed.
    """
    field = fam.a_family[0].field
    n = fam.a_family[0].ambient
    amb = ambient(field, n)
    a_set, b_set = set(fam.a_family), set(fam.b_family)
    members = [
        m for m in amb.mats if mat_image(m) in a_set and mat_kernel(m) in b_set
    ]
    if not members:  # pragma: no cover - valid families always admit members
        raise InternalError("family semigroup came out empty")
    s = mat_set(field, n, members)
    product_grid(s.elements)  # raises NotClosed with a witness if it escapes
    return s


def product_kernel_image_law(s: MatSet) -> bool:
    """ker(A*B) = ker(B) and Im(A*B) = Im(A) over all pairs of s."""
    for a in s.elements:
        for b in s.elements:
            ab = a * b
            if mat_kernel(ab) != mat_kernel(b) or mat_image(ab) != mat_image(a):
                return False
    return True


# ---------------------------------------------------------------------------
# isolation predicates


def _member_ids(s: MatSet, amb: Ambient) -> frozenset[int]:
    product_grid(s.elements)  # closedness is part of the predicate contract
    return frozenset(amb.index[m.codes] for m in s.elements)


def is_isolated(s: MatSet) -> bool:
    """No element outside s has any power inside s."""
    amb = ambient(s.field, s.dim)
    ids = _member_ids(s, amb)
    for x in range(amb.m):
        if x in ids:
            continue
        if not amb.power_closure(x).isdisjoint(ids):
            return False
    return True


def is_completely_isolated(s: MatSet) -> bool:
    """Every factorization of a member has a member factor (full pair scan)."""
    amb = ambient(s.field, s.dim)
    ids = _member_ids(s, amb)
    mask = np.zeros(amb.m, dtype=bool)
    mask[list(ids)] = True
    viol = mask[amb.grid] & ~mask[:, None] & ~mask[None, :]
    return not bool(viol.any())


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class IsolatedRecord:
    kind: str  # M | GL | I | SAB | other
    s: MatSet
    a_family: tuple[Subspace, ...] | None
    b_family: tuple[Subspace, ...] | None
    isolated: bool
    completely_isolated: bool


def _all_pair_families(field: FieldSpec, n: int):
    """Every valid (A-family, B-family) pair, canonically ordered."""
    hyper = list(enumerate_subspaces(field, n, n - 1))
    lines = list(enumerate_subspaces(field, n, 1))
    out = []
    for abits in range(1, 1 << len(hyper)):
        a_fam = [hyper[i] for i in range(len(hyper)) if abits >> i & 1]
        ok_lines = [ln for ln in lines if not any(a.contains(ln) for a in a_fam)]
        for bbits in range(1, 1 << len(ok_lines)):
            b_fam = [ok_lines[i] for i in range(len(ok_lines)) if bbits >> i & 1]
            out.append(pair_family(a_fam, b_fam))
    out.sort(
        key=lambda fam: (
            tuple(subspace_sort_key(a) for a in fam.a_family),
            tuple(subspace_sort_key(b) for b in fam.b_family),
        )
    )
    return out


def _record(kind, s, a_fam=None, b_fam=None) -> IsolatedRecord:
    if not is_isolated(s):
        raise VerificationFailed(
            f"predicted isolated subsemigroup of kind {kind} fails the power scan",
            evidence={"kind": kind, "size": len(s)},
        )
    return IsolatedRecord(
        kind=kind,
        s=s,
        a_family=a_fam,
        b_family=b_fam,
        isolated=True,
        completely_isolated=is_completely_isolated(s),
    )


def _theorem_records(field: FieldSpec, n: int) -> list[IsolatedRecord]:
    amb = ambient(field, n)
    whole = mat_set(field, n, amb.mats)
    units = mat_set(field, n, [m for m, r in zip(amb.mats, amb.ranks) if r == n])
    records = [
        _record("M", whole),
        _record("GL", units),
        _record("I", ideal(field, n, n - 1)),
    ]
    for fam in _all_pair_families(field, n):
        records.append(_record("SAB", s_ab_make(fam), fam.a_family, fam.b_family))
    return records


def _sort_records(records: list[IsolatedRecord]) -> tuple[IsolatedRecord, ...]:
    return tuple(
        sorted(records, key=lambda r: (len(r.s), tuple(m.codes for m in r.s.elements)))
    )


def enumerate_isolated(field: FieldSpec, n: int, mode: str = "exhaustive"):
    """Classify the isolated subsemigroups of M(n, F_q).

    exhaustive mode (q^(n*n) <= 16) scans every subsemigroup with the power
    predicate and cross-checks the classified list against the constructed
    one; theorem_list mode only verifies soundness of the constructed list
    (every emitted subsemigroup is isolated), not completeness.
    """
    if mode not in ("exhaustive", "theorem_list"):
        raise ValueError(f"unknown mode {mode!r}")
    predicted = _theorem_records(field, n)
    if mode == "theorem_list":
        return _sort_records(predicted)
    amb = ambient(field, n)
    table = build_table(mat_set(field, n, amb.mats))
    by_set = {r.s.as_set(): r for r in predicted}
    found: list[IsolatedRecord] = []
    for ids in enumerate_subsemigroups(table):
        mats = [amb.mats[i] for i in sorted(ids)]
        if any(not amb.power_closure(x).isdisjoint(ids) for x in range(amb.m) if x not in ids):
            continue
        s = mat_set(field, n, mats)
        hit = by_set.get(s.as_set())
        if hit is not None:
            found.append(hit)
        else:
            found.append(
                IsolatedRecord(
                    kind="other",
                    s=s,
                    a_family=None,
                    b_family=None,
                    isolated=True,
                    completely_isolated=is_completely_isolated(s),
                )
            )
    found_sets = {r.s.as_set() for r in found}
    predicted_sets = set(by_set)
    if found_sets != predicted_sets:
        raise VerificationFailed(
            "exhaustive isolated scan disagrees with the constructed list",
            evidence={
                "only_found": len(found_sets - predicted_sets),
                "only_predicted": len(predicted_sets - found_sets),
            },
        )
    return _sort_records(found)


def ideal_absorption_check(field: FieldSpec, n: int):
    """For each isolated S: absorption hypotheses force I_{n-1} inside S.

    Hypotheses: S contains 0, or S contains two rank-(n-1) idempotents
    e(V1,V2), e(V1',V2') with V2 inside V1', or S contains an idempotent of
    rank at most n-2.  Returns (all_ok, per-subsemigroup rows).
    """
    records = enumerate_isolated(field, n, mode="exhaustive")
    singular = ideal(field, n, n - 1).as_set()
    rows = []
    all_ok = True
    for rec in records:
        members = rec.s.as_set()
        idems = [m for m in rec.s.elements if m * m == m]
        high = [m for m in idems if mat_rank(m) == n - 1]
        contains_zero = any(m.is_zero() for m in rec.s.elements)
        low_idem = any(mat_rank(m) <= n - 2 for m in idems)
        chained = any(
            mat_image(e2).contains(mat_kernel(e1)) for e1 in high for e2 in high
        )
        hypothesis = contains_zero or chained or low_idem
        contained = singular <= members
        ok = (not hypothesis) or contained
        all_ok = all_ok and ok
        rows.append(
            (
                ("kind", rec.kind),
                ("size", len(rec.s)),
                ("contains_zero", contains_zero),
                ("chained_idempotents", chained),
                ("low_rank_idempotent", low_idem),
                ("hypothesis", hypothesis),
                ("ideal_contained", contained),
                ("ok", ok),
            )
        )
    return all_ok, tuple(rows)
