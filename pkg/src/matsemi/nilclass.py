"""Isomorphism invariants of maximal nilpotent matrix semigroups.

A context bundles a flag F with T = flag_semigroup(F) and its product
table.  On top of it sit two annihilator preorders with their depth
grading, the partition of elements into K cells, the super rank, and the
fingerprint used to separate non-isomorphic contexts.  Each subspace
criterion has a product-level ground truth on the table; the two routes
are kept separate so tests can compare them instead of trusting either.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache

import numpy as np

from .engine import (
    MatSet,
    SemigroupTable,
    build_table,
    mat_set,
    power_sets,
    preorder_depths,
    table_nd,
)
from .errors import (
    BadSignature,
    DimMismatch,
    FieldMismatch,
    InternalError,
    InvariantViolation,
    NotInContext,
    PreconditionViolated,
    SignatureMismatch,
    ZeroElement,
)
from .flags import PHI_CAP, Flag, flag_basis, flag_semigroup, flag_transporter, is_k_maximal
from .gf import Matrix, mat_inverse, mat_kernel, mat_image, mat_rank

# K cells are indexed by (prec depth, ll depth); only these pairs are defined.
K_PAIRS = ((1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2), (2, 2))

ORDER_DEPTH_CHECK_CAP = 64


class NilContext:
    """Flag semigroup with its interned table and memoized invariants."""

    def __init__(self, flag: Flag, t: MatSet, table: SemigroupTable):
        self.flag = flag
        self.t = t
        self.table = table
        self.r = flag.length
        self.sig = flag.signature
        self.m = len(t)
        self.index = {mat: i for i, mat in enumerate(t.elements)}
        self._order_depths_checked = False

    # -- per-element caches ------------------------------------------------

    @cached_property
    def right_zero_masks(self) -> list[int]:
        """mask[x] has bit c set iff x*c = 0."""
        g = self.table.grid_np
        return [_bits(g[x] == 0) for x in range(self.m)]

    @cached_property
    def left_zero_masks(self) -> list[int]:
        """mask[x] has bit c set iff c*x = 0."""
        g = self.table.grid_np
        return [_bits(g[:, x] == 0) for x in range(self.m)]

    @cached_property
    def kernel_band(self) -> list[frozenset[tuple[int, ...]]]:
        """All vectors of ker(x) intersected with V_{r-1}, per element."""
        band = self.flag.chain[-2]
        return [frozenset(mat_kernel(mat).intersect(band).vectors()) for mat in self.t]

    @cached_property
    def image_band(self) -> list[frozenset[tuple[int, ...]]]:
        """All vectors of Im(x) + V_1, per element."""
        v1 = self.flag.chain[1]
        return [frozenset(mat_image(mat).sum_(v1).vectors()) for mat in self.t]

    @cached_property
    def depth_prec(self) -> list[int]:
        band = self.flag.chain[-2]
        return [band.dim - mat_kernel(mat).intersect(band).dim for mat in self.t]

    @cached_property
    def depth_ll(self) -> list[int]:
        v1 = self.flag.chain[1]
        return [mat_image(mat).dim - mat_image(mat).intersect(v1).dim for mat in self.t]

    @cached_property
    def power_ids(self) -> list[frozenset[int]]:
        """power_ids[i] = ids of T^(i+1), for i = 0..r-1."""
        return power_sets(self.table, self.r)

    @cached_property
    def decomposable_ids(self) -> frozenset[int]:
        return self.power_ids[1]

    @cached_property
    def tat_sets(self) -> list[frozenset[int]]:
        """tat_sets[x] = {c*x*d : c, d in T} as ids."""
        g = self.table.grid_np
        out = []
        for x in range(self.m):
            left = g[:, x]
            out.append(frozenset(int(v) for v in np.unique(g[left])))
        return out

    def one_hull(self, x: int) -> frozenset[int]:
        """ids of T^1 x T^1 = {x} | Tx | xT | TxT."""
        g = self.table.grid_np
        return (
            frozenset({x})
            | frozenset(int(v) for v in g[:, x])
            | frozenset(int(v) for v in g[x])
            | self.tat_sets[x]
        )

    @cached_property
    def k_ids(self) -> dict[tuple[int, int], frozenset[int]]:
        zero = self.table.zero_id
        cells: dict[tuple[int, int], frozenset[int]] = {}
        for u, v in K_PAIRS:
            members = [
                x
                for x in range(self.m)
                if self.depth_prec[x] == u and self.depth_ll[x] == v
            ]
            if (u, v) in ((1, 1), (2, 1), (1, 2), (2, 2)):
                members = [x for x in members if any(y != zero for y in self.tat_sets[x])]
            cells[(u, v)] = frozenset(members)
        # The (2,2) exclusion clause ranges over indecomposables of super
        # rank 1, which only involves the (1,0)/(0,1)/(1,1) cells above.
        if cells[(2, 2)]:
            supr1 = (cells[(1, 0)] | cells[(0, 1)] | cells[(1, 1)]) - self.decomposable_ids
            excluded = {self.tat_sets[b] for b in supr1}
            cells[(2, 2)] = frozenset(
                x for x in cells[(2, 2)] if self.tat_sets[x] not in excluded
            )
        return cells

    @cached_property
    def indec_super_rank(self) -> dict[int, int | None]:
        k = self.k_ids
        one = k[(1, 1)] | k[(1, 0)] | k[(0, 1)]
        two = k[(2, 0)] | k[(0, 2)] | k[(2, 1)] | k[(1, 2)] | k[(2, 2)]
        out: dict[int, int | None] = {}
        for x in range(self.m):
            if x in self.decomposable_ids:
                continue
            out[x] = 1 if x in one else 2 if x in two else None
        return out

    @cached_property
    def dec_super_rank(self) -> dict[int, int | None]:
        """Super rank for decomposable nonzero ids.

        reach[x] collects, over all factorizations of x into words of
        indecomposables (length capped at nd(T) = r, beyond which every
        product is 0), the achievable pairs (word has a super-rank-1
        factor, word has a super-rank-2 factor).
        """
        g = self.table.grid
        indec = [x for x in range(self.m) if x not in self.decomposable_ids]
        base = {
            y: (self.indec_super_rank[y] == 1, self.indec_super_rank[y] == 2)
            for y in indec
        }
        reach: dict[int, set[tuple[bool, bool]]] = {y: {base[y]} for y in indec}
        for _ in range(self.r):
            changed = False
            for y in indec:
                fy = base[y]
                for z, flags in list(reach.items()):
                    x = g[y][z]
                    merged = {(fy[0] or h1, fy[1] or h2) for h1, h2 in flags}
                    cur = reach.setdefault(x, set())
                    if not merged <= cur:
                        cur |= merged
                        changed = True
            if not changed:
                break
        zero = self.table.zero_id
        out: dict[int, int | None] = {}
        for x in self.decomposable_ids:
            if x == zero:
                continue
            flags = reach.get(x, set())
            if any(h1 for h1, _ in flags):
                out[x] = 1
            elif any(h2 for _, h2 in flags):
                out[x] = 2
            else:
                out[x] = None
        return out


def _bits(bools) -> int:
    out = 0
    for i in np.nonzero(bools)[0]:
        out |= 1 << int(i)
    return out


@lru_cache(maxsize=None)
def nil_context(flag: Flag, cap: int = PHI_CAP) -> NilContext:
    """Build and validate the context for a flag of length >= 2."""
    if flag.length < 2:
        raise PreconditionViolated("context needs a flag of length >= 2")
    t = flag_semigroup(flag, cap=cap)
    table = build_table(t)
    if table.zero_id != 0:  # pragma: no cover - zero sorts first by rank
        raise InternalError("zero element is not id 0")
    nd = table_nd(table)
    if nd != flag.length:  # pragma: no cover
        raise InvariantViolation(f"nilpotency degree {nd} != flag length {flag.length}")
    if not is_k_maximal(t):  # pragma: no cover
        raise InvariantViolation("flag semigroup is not maximal for its degree")
    return NilContext(flag, t, table)


def _id_of(ctx: NilContext, a: Matrix) -> int:
    i = ctx.index.get(a)
    if i is None:
        raise NotInContext("matrix is not an element of this context's semigroup")
    return i


# ---------------------------------------------------------------------------
# preorders and depth sets


def prec(ctx: NilContext, a: Matrix, b: Matrix, method: str = "products") -> bool:
    """a precedes b: a*c = 0 implies b*c = 0 for all c in T.

    The kernels method tests ker(a) ∩ V_{r-1} ⊆ ker(b) ∩ V_{r-1} instead;
    both routes must agree and tests compare them pairwise.
    """
    ia, ib = _id_of(ctx, a), _id_of(ctx, b)
    if method == "products":
        za, zb = ctx.right_zero_masks[ia], ctx.right_zero_masks[ib]
        return za & ~zb == 0
    if method == "kernels":
        return ctx.kernel_band[ia] <= ctx.kernel_band[ib]
    raise ValueError(f"unknown prec method {method!r}")


def ll(ctx: NilContext, a: Matrix, b: Matrix, method: str = "products") -> bool:
    """a left-precedes b: c*a = 0 implies c*b = 0 for all c in T.

    The images method tests Im(b) + V_1 ⊆ Im(a) + V_1 (note the flip:
    smaller image modulo V_1 means more left annihilators).
    """
    ia, ib = _id_of(ctx, a), _id_of(ctx, b)
    if method == "products":
        wa, wb = ctx.left_zero_masks[ia], ctx.left_zero_masks[ib]
        return wa & ~wb == 0
    if method == "images":
        return ctx.image_band[ib] <= ctx.image_band[ia]
    raise ValueError(f"unknown ll method {method!r}")


def _check_order_depths(ctx: NilContext) -> None:
    # dimension depths must match the order-theoretic depth of the preorder
    # quotient; cheap enough to re-derive once for small contexts.
    if ctx._order_depths_checked or ctx.m > ORDER_DEPTH_CHECK_CAP:
        return
    rz, lz = ctx.right_zero_masks, ctx.left_zero_masks
    got_prec = preorder_depths(ctx.m, lambda x, y: rz[x] & ~rz[y] == 0)
    got_ll = preorder_depths(ctx.m, lambda x, y: lz[x] & ~lz[y] == 0)
    if got_prec != ctx.depth_prec or got_ll != ctx.depth_ll:  # pragma: no cover
        raise InternalError("dimension depths disagree with order-theoretic depths")
    ctx._order_depths_checked = True


def depth_sets(ctx: NilContext, which: str, i: int) -> MatSet:
    """Elements at depth i of the chosen preorder (depth 0 = maximal)."""
    if which == "prec":
        depths = ctx.depth_prec
    elif which == "ll":
        depths = ctx.depth_ll
    else:
        raise ValueError(f"unknown preorder {which!r}")
    if i < 0:
        raise PreconditionViolated("depth index must be >= 0")
    _check_order_depths(ctx)
    members = [mat for x, mat in enumerate(ctx.t.elements) if depths[x] == i]
    return mat_set(ctx.t.field, ctx.t.dim, members)


# ---------------------------------------------------------------------------
# indecomposables, K cells, super rank


def is_indecomposable(ctx: NilContext, a: Matrix) -> bool:
    """True iff a is not a product of two elements of T (brute table scan)."""
    return _id_of(ctx, a) not in ctx.decomposable_ids


def k_set(ctx: NilContext, u: int, v: int) -> MatSet:
    """The K cell at prec depth u and ll depth v."""
    if (u, v) not in K_PAIRS:
        raise PreconditionViolated(f"no K cell at {(u, v)}")
    ids = sorted(ctx.k_ids[(u, v)])
    return mat_set(ctx.t.field, ctx.t.dim, [ctx.t.elements[x] for x in ids])


def super_rank(ctx: NilContext, a: Matrix) -> int | None:
    """1, 2, or None (undefined); raises ZeroElement at 0."""
    x = _id_of(ctx, a)
    if x == ctx.table.zero_id:
        raise ZeroElement("super rank is undefined at 0")
    if x in ctx.decomposable_ids:
        return ctx.dec_super_rank[x]
    return ctx.indec_super_rank[x]


def sandwich_witness(ctx: NilContext, a: Matrix, target_rank: int) -> Matrix | None:
    """B in T of the target rank with c*a*d = c*b*d for all (c,d) != (1,1).

    Any such B differs from a only in the corner block (row stratum 1 x
    column stratum r) of adapted coordinates: the condition is equivalent
    to Im(a-B) ⊆ V_1 together with (a-B)(V_{r-1}) = 0, because the common
    kernel of T is exactly V_1 and the images of T span exactly V_{r-1}.
    Candidates are tried with the corner zeroed first, then by ascending
    corner codes; each one is replayed against the full table.
    """
    x = _id_of(ctx, a)
    if target_rank not in (1, 2):
        raise PreconditionViolated("target rank must be 1 or 2")
    if x in ctx.decomposable_ids:
        raise PreconditionViolated("witness search expects an indecomposable element")
    if ctx.one_hull(x) <= {x, ctx.table.zero_id}:
        raise PreconditionViolated("sandwiching a is degenerate: T^1 a T^1 = {a, 0}")
    field = ctx.t.field
    n = ctx.flag.ambient
    p = flag_basis(ctx.flag)
    pinv = mat_inverse(p)
    a_ad = pinv * a * p
    d1, dr = ctx.sig[0], ctx.sig[-1]
    corner = [(i, j) for i in range(d1) for j in range(n - dr, n)]
    for vals in itertools.product(range(field.q), repeat=len(corner)):
        codes = list(a_ad.codes)
        for (i, j), val in zip(corner, vals):
            codes[i * n + j] = val
        b = p * Matrix(field, n, n, tuple(codes)) * pinv
        if mat_rank(b) != target_rank:
            continue
        y = ctx.index.get(b)
        if y is None:  # pragma: no cover
            raise InternalError("corner modification left the semigroup")
        if _sandwich_equal(ctx, x, y):
            return b
    return None


def _sandwich_equal(ctx: NilContext, xa: int, xb: int) -> bool:
    g = ctx.table.grid_np
    if not np.array_equal(g[xa], g[xb]):  # c = 1 cases: a*d vs b*d
        return False
    ca, cb = g[:, xa], g[:, xb]
    if not np.array_equal(ca, cb):  # d = 1 cases: c*a vs c*b
        return False
    return bool(np.array_equal(g[ca], g[cb]))  # full c*a*d vs c*b*d replay


# ---------------------------------------------------------------------------
# fingerprints


@dataclass(frozen=True)
class Fingerprint:
    size: int
    power_sizes: tuple[int, ...]
    right_ann: int
    left_ann: int
    two_sided_ann: int
    decomposable_count: int
    k_sizes: tuple[int, ...]
    u_stats: tuple[int | None, ...]

    def items(self) -> tuple[tuple[str, int | None], ...]:
        """Flat key/value view in the fixed serialization order."""
        out: list[tuple[str, int | None]] = [("size", self.size)]
        out += [(f"power_{i + 1}", v) for i, v in enumerate(self.power_sizes)]
        out += [
            ("right_ann", self.right_ann),
            ("left_ann", self.left_ann),
            ("two_sided_ann", self.two_sided_ann),
            ("decomposable_count", self.decomposable_count),
        ]
        out += [(f"k_{u}_{v}", kv) for (u, v), kv in zip(K_PAIRS, self.k_sizes)]
        out += [(f"u_{s}", uv) for s, uv in enumerate(self.u_stats, start=2)]
        return tuple(out)


def _sandwich_set(ctx: NilContext, left_exp: int, x: int, right_exp: int) -> frozenset[int]:
    """ids of T^left_exp * x * T^right_exp, exponent 0 meaning the identity."""
    g = ctx.table.grid_np
    cur = np.array([x], dtype=np.int64)
    if left_exp:
        left = np.fromiter(sorted(ctx.power_ids[left_exp - 1]), dtype=np.int64)
        cur = np.unique(g[np.ix_(left, cur)])
    if right_exp:
        right = np.fromiter(sorted(ctx.power_ids[right_exp - 1]), dtype=np.int64)
        cur = np.unique(g[np.ix_(cur, right)])
    return frozenset(int(v) for v in cur)


def u_stat(ctx: NilContext, s: int) -> tuple[int | None, tuple[int, ...]]:
    """(u(s), certificate ids) for a middle position 1 < s < r.

    u(s) is the least size of a subset of the stage-s generators (the
    indecomposables A of super rank 1 with T^{s-2} A T^{r-s} != 0) such
    that every B in T^{r-s} with T^{s-1} B != 0 has some C in the subset
    with C*B != 0.  Subset search ascends by size, cut off at max(sig)+1.
    """
    if not 1 < s < ctx.r:
        raise PreconditionViolated("middle position s must satisfy 1 < s < r")
    zero = ctx.table.zero_id
    gens = [
        x
        for x in range(ctx.m)
        if x not in ctx.decomposable_ids
        and ctx.indec_super_rank[x] == 1
        and any(y != zero for y in _sandwich_set(ctx, s - 2, x, ctx.r - s))
    ]
    targets = [
        b
        for b in sorted(ctx.power_ids[ctx.r - s - 1])
        if any(y != zero for y in _sandwich_set(ctx, s - 1, b, 0))
    ]
    g = ctx.table.grid
    full = (1 << len(targets)) - 1
    masks = []
    for c in gens:
        mm = 0
        for bit, b in enumerate(targets):
            if g[c][b] != zero:
                mm |= 1 << bit
        masks.append(mm)
    for size in range(0, max(ctx.sig) + 2):
        for combo in itertools.combinations(range(len(gens)), size):
            acc = 0
            for ci in combo:
                acc |= masks[ci]
            if acc == full:
                return size, tuple(gens[ci] for ci in combo)
    return None, ()


def fingerprint(ctx: NilContext) -> Fingerprint:
    power_sizes = tuple(len(p) for p in ctx.power_ids)
    if any(a <= b for a, b in zip(power_sizes, power_sizes[1:])) or power_sizes[-1] != 1:
        raise InvariantViolation(f"power sizes {power_sizes} do not shrink to 1")
    full = (1 << ctx.m) - 1
    right_ann = sum(1 for x in range(ctx.m) if ctx.left_zero_masks[x] == full)
    left_ann = sum(1 for x in range(ctx.m) if ctx.right_zero_masks[x] == full)
    two_sided = sum(
        1
        for x in range(ctx.m)
        if ctx.left_zero_masks[x] == full and ctx.right_zero_masks[x] == full
    )
    return Fingerprint(
        size=ctx.m,
        power_sizes=power_sizes,
        right_ann=right_ann,
        left_ann=left_ann,
        two_sided_ann=two_sided,
        decomposable_count=len(ctx.decomposable_ids),
        k_sizes=tuple(len(ctx.k_ids[pair]) for pair in K_PAIRS),
        u_stats=tuple(u_stat(ctx, s)[0] for s in range(2, ctx.r)),
    )


def annihilator_census(ctx: NilContext) -> tuple[tuple[str, object], ...]:
    """Annihilator counts of a length-3 context, with the rank-count caveat.

    The number of i1 x i3 matrices of rank <= 1 over GF(q) is
    1 + (q^i1 - 1)(q^i3 - 1)/(q - 1); the geometric shortcut q^(i1+i3-1)
    agrees only when min(i1, i3) = 1.  The census reports both numbers and
    an expected_mismatch flag instead of silently adopting either.
    """
    if ctx.r != 3:
        raise PreconditionViolated("annihilator census applies to length-3 contexts")
    i1, i2, i3 = ctx.sig
    q = ctx.t.field.q
    full = (1 << ctx.m) - 1
    two_sided = [
        x
        for x in range(ctx.m)
        if ctx.left_zero_masks[x] == full and ctx.right_zero_masks[x] == full
    ]
    dec_in_ann = sum(1 for x in two_sided if x in ctx.decomposable_ids)
    rank_le_one = 1 + (q**i1 - 1) * (q**i3 - 1) // (q - 1)
    shortcut = q ** (i1 + i3 - 1)
    right_brute = sum(1 for x in range(ctx.m) if ctx.left_zero_masks[x] == full)
    right_form = q ** (i1 * (i2 + i3))
    return (
        ("sig", ctx.sig),
        ("q", q),
        ("two_sided_ann", len(two_sided)),
        ("decomposable_in_ann", dec_in_ann),
        ("rank_le_one_corner", rank_le_one),
        ("geometric_shortcut", shortcut),
        ("expected_mismatch", dec_in_ann != shortcut),
        ("right_ann", right_brute),
        ("right_ann_closed_form", right_form),
        ("right_ann_matches", right_brute == right_form),
    )


# ---------------------------------------------------------------------------
# isomorphism decision and construction


class IsoDecision(Enum):
    ISOMORPHIC = "isomorphic"
    NOT_ISOMORPHIC = "not-isomorphic"
    UNSUPPORTED = "unsupported"


def _valid_sig(n: int, sig) -> tuple[int, ...]:
    sig = tuple(int(d) for d in sig)
    if not sig or any(d < 1 for d in sig):
        raise BadSignature(f"signature entries must be positive, got {sig}")
    if sum(sig) != n:
        raise BadSignature(f"signature {sig} does not sum to ambient {n}")
    return sig


def iso_decide(q: int | None, n1: int, sig1, n2: int, sig2) -> IsoDecision:
    """Decide isomorphism of two flag semigroups from signatures alone.

    q is the field size, or None for an infinite field.  Length is an
    isomorphism invariant (it is the nilpotency degree), so unequal
    lengths always answer not-isomorphic.
    """
    sig1, sig2 = _valid_sig(n1, sig1), _valid_sig(n2, sig2)
    if q is not None and q < 2:
        raise BadSignature(f"field size must be at least 2, got {q}")
    yes, no = IsoDecision.ISOMORPHIC, IsoDecision.NOT_ISOMORPHIC
    if len(sig1) != len(sig2):
        return no
    r = len(sig1)
    if r == 1:
        return yes
    if r == 2:
        # multiplication is zero on both sides, so size decides
        if q is None:
            return yes
        return yes if sig1[0] * sig1[1] == sig2[0] * sig2[1] else no
    if r == 3:
        mid1 = sig1[1] == 1 and sig1[0] > 1 and sig1[2] > 1
        mid2 = sig2[1] == 1 and sig2[0] > 1 and sig2[2] > 1
        if q is None:
            if mid1 or mid2:
                # the (k,1,l) family with k,l > 1 is one class, any ambient
                return yes if (mid1 and mid2) else no
            if n1 == n2:
                return yes if sig1 == sig2 else no
            return IsoDecision.UNSUPPORTED
        if n1 == n2:
            return yes if sig1 == sig2 else no
        return IsoDecision.UNSUPPORTED
    return yes if sig1 == sig2 else no


@dataclass(frozen=True)
class IsoMap:
    """Conjugation isomorphism between two contexts, fully replayed."""

    g: Matrix
    pairs: tuple[tuple[Matrix, Matrix], ...]

    def as_dict(self) -> dict[Matrix, Matrix]:
        return dict(self.pairs)


def iso_construct(ctx1: NilContext, ctx2: NilContext) -> IsoMap:
    """Conjugation by a flag transporter, verified as a table isomorphism."""
    f1, f2 = ctx1.flag, ctx2.flag
    if f1.field != f2.field:
        raise FieldMismatch("contexts over different fields")
    if f1.ambient != f2.ambient:
        raise DimMismatch("contexts in different ambient dimensions")
    if f1.signature != f2.signature:
        raise SignatureMismatch(f"signatures {f1.signature} vs {f2.signature}")
    g = flag_transporter(f1, f2)
    gi = mat_inverse(g)
    perm: list[int] = []
    pairs: list[tuple[Matrix, Matrix]] = []
    for a in ctx1.t:
        b = g * a * gi
        y = ctx2.index.get(b)
        if y is None:  # pragma: no cover
            raise InternalError("transport left the target semigroup")
        perm.append(y)
        pairs.append((a, b))
    if ctx1.m != ctx2.m or len(set(perm)) != ctx2.m:  # pragma: no cover
        raise InternalError("transport is not a bijection")
    pm = np.array(perm, dtype=np.int64)
    g1, g2 = ctx1.table.grid_np, ctx2.table.grid_np
    if not np.array_equal(pm[g1], g2[np.ix_(pm, pm)]):  # pragma: no cover
        raise InternalError("transport does not preserve products")
    return IsoMap(g=g, pairs=tuple(pairs))
