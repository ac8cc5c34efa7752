"""Generic machinery for finite matrix semigroups.

Everything here works on interned element ids: a MatSet fixes the canonical
element order (rank, then entry codes), build_table turns a closed MatSet
into a multiplication grid, and the remaining utilities (closures,
union-find partitions, subsemigroup scans, table isomorphism, preorder
depths) operate on grids only.  Prime fields get a numpy fast path for the
product grids; extension fields fall back to pure Python.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded, DimMismatch, FieldMismatch, InternalError, NotClosed
from .gf import FieldSpec, Matrix, mat_rank, mat_sort_key

CLOSURE_CAP = 1 << 20
SUBSEMIGROUP_CAP = 16
TABLE_ISO_CAP = 64
AMBIENT_ELEMS_CAP = 4096


# ---------------------------------------------------------------------------
# canonical matrix sets


@dataclass(frozen=True)
class MatSet:
    """Duplicate-free set of square matrices in canonical order."""

    field: FieldSpec
    dim: int
    elements: tuple[Matrix, ...]

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, m: Matrix):
        return m in set(self.elements)

    def as_set(self) -> frozenset[Matrix]:
        return frozenset(self.elements)


def mat_set(field: FieldSpec, dim: int, mats) -> MatSet:
    seen = {}
    for m in mats:
        if m.field != field:
            raise FieldMismatch("element over a different field")
        if m.rows != dim or m.cols != dim:
            raise DimMismatch(f"element is {m.rows}x{m.cols}, expected {dim}x{dim}")
        seen[m.codes] = m
    ordered = sorted(seen.values(), key=mat_sort_key)
    return MatSet(field, dim, tuple(ordered))


# ---------------------------------------------------------------------------
# product grids


def _codes_array(elements) -> np.ndarray:
    return np.array([m.codes for m in elements], dtype=np.int64)


def _grid_prime(elements, p: int, dim: int):
    """All pairwise products by id for a prime field, or the first escaping
    pair.  Returns (grid, None) or (None, (a_id, b_id, product_matrix))."""
    m = len(elements)
    arr = _codes_array(elements).reshape(m, dim, dim)
    keys = np.array(
        [sum(c * (p ** i) for i, c in enumerate(mm.codes)) for mm in elements], dtype=np.int64
    )
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    qpow = np.array([p ** i for i in range(dim * dim)], dtype=np.int64)
    grid = np.empty((m, m), dtype=np.int32)
    f = elements[0].field
    for a in range(m):
        prod = (arr[a] @ arr) % p  # (m, dim, dim)
        pkeys = prod.reshape(m, dim * dim) @ qpow
        pos = np.searchsorted(sorted_keys, pkeys)
        pos_clip = np.minimum(pos, m - 1)
        ok = sorted_keys[pos_clip] == pkeys
        if not ok.all():
            b = int(np.nonzero(~ok)[0][0])
            bad = Matrix(f, dim, dim, tuple(int(x) for x in prod[b].reshape(-1)))
            return None, (a, b, bad)
        grid[a] = order[pos_clip]
    return grid, None


def _grid_generic(elements):
    index = {m.codes: i for i, m in enumerate(elements)}
    m = len(elements)
    grid = [[0] * m for _ in range(m)]
    for a, ma in enumerate(elements):
        row = grid[a]
        for b, mb in enumerate(elements):
            prod = ma * mb
            pid = index.get(prod.codes)
            if pid is None:
                return None, (a, b, prod)
            row[b] = pid
    return np.array(grid, dtype=np.int32), None


def product_grid(elements) -> np.ndarray:
    """id x id -> id multiplication grid; NotClosed with witness otherwise."""
    if not elements:
        return np.zeros((0, 0), dtype=np.int32)
    f = elements[0].field
    dim = elements[0].rows
    if f.k == 1:
        grid, escape = _grid_prime(elements, f.p, dim)
    else:
        grid, escape = _grid_generic(elements)
    if escape is not None:
        a, b, prod = escape
        raise NotClosed(
            "set not closed under multiplication",
            witness=(elements[a], elements[b], prod),
        )
    return grid


# ---------------------------------------------------------------------------
# multiplication tables


@dataclass
class SemigroupTable:
    """Finite multiplication table over interned ids 0..m-1.

    elements[i] is the matrix behind id i; when an identity was adjoined the
    last id has elements entry None.  grid rows are plain lists for fast
    scalar lookups; grid_np is the same data as numpy.
    """

    m: int
    grid: list[list[int]]
    elements: tuple
    zero_id: int | None
    identity_id: int | None
    adjoined_identity: bool

    _np: np.ndarray | None = None

    @property
    def grid_np(self) -> np.ndarray:
        if self._np is None:
            self._np = np.array(self.grid, dtype=np.int32)
        return self._np

    def mul(self, a: int, b: int) -> int:
        return self.grid[a][b]


def _detect_zero_identity(grid, m):
    zero_id = identity_id = None
    for e in range(m):
        row = grid[e]
        if all(row[x] == e for x in range(m)) and all(grid[x][e] == e for x in range(m)):
            zero_id = e
        if all(row[x] == x for x in range(m)) and all(grid[x][e] == x for x in range(m)):
            identity_id = e
    return zero_id, identity_id


def _verify_associativity(grid_np: np.ndarray, m: int, exhaustive_cap: int = 512):
    if m == 0:
        return
    if m <= exhaustive_cap:
        # chunk over the first axis to bound memory at ~m^2 ints per slab
        for a0 in range(0, m, 64):
            a1 = min(a0 + 64, m)
            left = grid_np[grid_np[a0:a1]]  # (a, b, c) -> (ab)c
            right = grid_np[a0:a1][:, grid_np]  # (a, b, c) -> a(bc)
            if not np.array_equal(left, right):
                bad = np.argwhere(left != right)[0]
                raise InternalError(f"associativity failed at triple {tuple(bad)}")
    else:
        rng = random.Random(0xA550C)
        for _ in range(100_000):
            a, b, c = rng.randrange(m), rng.randrange(m), rng.randrange(m)
            if grid_np[grid_np[a, b], c] != grid_np[a, grid_np[b, c]]:
                raise InternalError(f"associativity failed at triple {(a, b, c)}")


def build_table(s: MatSet, adjoin_identity: bool = False) -> SemigroupTable:
    """Intern a closed MatSet into a SemigroupTable.

    Ids follow the MatSet order.  With adjoin_identity=True and no existing
    identity element, a fresh id m is appended acting as two-sided identity.
    """
    grid_np = product_grid(s.elements)
    m = len(s.elements)
    grid = [list(map(int, grid_np[a])) for a in range(m)]
    zero_id, identity_id = _detect_zero_identity(grid, m)
    elements = tuple(s.elements)
    adjoined = False
    if adjoin_identity and identity_id is None:
        for row, x in zip(grid, range(m)):
            row.append(x)
        grid.append(list(range(m)) + [m])
        elements = elements + (None,)
        identity_id = m
        m += 1
        adjoined = True
    table = SemigroupTable(
        m=m,
        grid=grid,
        elements=elements,
        zero_id=zero_id,
        identity_id=identity_id,
        adjoined_identity=adjoined,
    )
    _verify_associativity(table.grid_np, m)
    return table


def table_nd(table: SemigroupTable) -> int | None:
    """Nilpotency degree of the table's semigroup, or None when not nilpotent.

    Power sets S^i = S^{i-1} * S, stopping at {0} or at stabilization.
    """
    ids = frozenset(range(table.m))
    if table.adjoined_identity:
        ids = ids - {table.identity_id}
    if table.zero_id is None:
        return None
    zero = frozenset({table.zero_id})
    grid = table.grid
    cur = ids
    seen = {cur}
    for step in range(1, len(ids) + 2):
        if cur == zero:
            return step
        nxt = frozenset(grid[a][b] for a in cur for b in ids)
        if nxt in seen:
            return None
        seen.add(nxt)
        cur = nxt
    return None  # pragma: no cover


def power_sets(table: SemigroupTable, upto: int) -> list[frozenset[int]]:
    """[S^1, S^2, ..., S^upto] as id sets (identity excluded if adjoined)."""
    ids = frozenset(range(table.m))
    if table.adjoined_identity:
        ids = ids - {table.identity_id}
    grid = table.grid
    out = [ids]
    for _ in range(upto - 1):
        prev = out[-1]
        out.append(frozenset(grid[a][b] for a in prev for b in ids))
    return out


# ---------------------------------------------------------------------------
# closures


def closure(seed: MatSet, cap: int = CLOSURE_CAP) -> MatSet:
    """Multiplicative closure of seed, canonical order, capped."""
    if len(seed) == 0:
        return seed
    f, dim = seed.field, seed.dim
    if f.k == 1:
        return _closure_prime(seed, cap)
    known = {m.codes: m for m in seed.elements}
    frontier = list(seed.elements)
    while frontier:
        new = {}
        all_mats = list(known.values())
        for a in frontier:
            for b in all_mats:
                for prod in (a * b, b * a):
                    if prod.codes not in known and prod.codes not in new:
                        new[prod.codes] = prod
        if len(known) + len(new) > cap:
            raise CapExceeded(f"closure exceeds cap {cap}")
        known.update(new)
        frontier = list(new.values())
    return mat_set(f, dim, known.values())


def _closure_prime(seed: MatSet, cap: int) -> MatSet:
    f, dim, p = seed.field, seed.dim, seed.field.p
    qpow = np.array([p ** i for i in range(dim * dim)], dtype=np.int64)

    def keys_of(arr):
        return arr.reshape(len(arr), dim * dim) @ qpow

    all_arr = _codes_array(seed.elements).reshape(-1, dim, dim)
    known = {int(k) for k in keys_of(all_arr)}
    frontier = all_arr
    while len(frontier):
        prods = np.einsum("aij,bjk->abik", frontier, all_arr) % p
        prods2 = np.einsum("aij,bjk->abik", all_arr, frontier) % p
        stack = np.concatenate(
            [prods.reshape(-1, dim, dim), prods2.reshape(-1, dim, dim)]
        )
        pkeys = keys_of(stack)
        fresh_keys, first_idx = np.unique(pkeys, return_index=True)
        mask = np.array([int(k) not in known for k in fresh_keys])
        fresh = stack[first_idx[mask]]
        if len(known) + len(fresh) > cap:
            raise CapExceeded(f"closure exceeds cap {cap}")
        if not len(fresh):
            break
        for k in fresh_keys[mask]:
            known.add(int(k))
        all_arr = np.concatenate([all_arr, fresh])
        frontier = fresh
    mats = [Matrix(f, dim, dim, tuple(int(x) for x in row.reshape(-1))) for row in all_arr]
    return mat_set(f, dim, mats)


def closure_ids(grid, seed, abort_ids=None):
    """Closure inside an ambient grid, by id.

    Returns (ids, aborted): aborted=True means an element of abort_ids was
    reached and the closure stopped early (the returned set is then partial).
    """
    s = set(seed)
    if abort_ids and s & abort_ids:
        return frozenset(s), True
    frontier = list(s)
    while frontier:
        new = set()
        members = list(s)
        for a in frontier:
            row = grid[a]
            for b in members:
                x = row[b]
                if x not in s and x not in new:
                    new.add(x)
                y = grid[b][a]
                if y not in s and y not in new:
                    new.add(y)
        if abort_ids and new & abort_ids:
            return frozenset(s | new), True
        s |= new
        frontier = list(new)
    return frozenset(s), False


# ---------------------------------------------------------------------------
# partitions (union-find)


class Partition:
    """Union-find over ids 0..m-1 with canonical least-id representatives."""

    def __init__(self, m: int):
        self.m = m
        self._parent = list(range(m))

    def find(self, x: int) -> int:
        p = self._parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the least id as root so representatives are canonical
            if ra < rb:
                self._parent[rb] = ra
            else:
                self._parent[ra] = rb

    def classes(self) -> tuple[tuple[int, ...], ...]:
        groups: dict[int, list[int]] = {}
        for x in range(self.m):
            groups.setdefault(self.find(x), []).append(x)
        return tuple(tuple(sorted(g)) for _, g in sorted(groups.items()))

    @property
    def num_classes(self) -> int:
        return len({self.find(x) for x in range(self.m)})

    def __eq__(self, other):
        return isinstance(other, Partition) and self.classes() == other.classes()

    def __hash__(self):  # pragma: no cover
        return hash(self.classes())


def equiv_closure(m: int, pairs) -> Partition:
    """Smallest equivalence relation containing the given id pairs."""
    part = Partition(m)
    for a, b in pairs:
        part.union(a, b)
    return part


# ---------------------------------------------------------------------------
# subsemigroup enumeration (small tables)


def enumerate_subsemigroups(table: SemigroupTable, include_empty: bool = False):
    """All multiplicatively closed id subsets, canonical order. m <= 16."""
    m = table.m
    if m > SUBSEMIGROUP_CAP:
        raise CapExceeded(f"table size {m} exceeds subsemigroup scan cap {SUBSEMIGROUP_CAP}")
    grid = table.grid
    out = [frozenset()] if include_empty else []
    for mask in range(1, 1 << m):
        bits = [i for i in range(m) if mask >> i & 1]
        ok = True
        for i in bits:
            row = grid[i]
            for j in bits:
                if not mask >> row[j] & 1:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(frozenset(bits))
    out.sort(key=lambda s: (len(s), tuple(sorted(s))))
    return out


# ---------------------------------------------------------------------------
# table isomorphism


def _color_refine(table: SemigroupTable):
    m = table.m
    grid = table.grid
    products = {grid[a][b] for a in range(m) for b in range(m)}

    def power_chain(x):
        seen = {}
        cur = x
        while cur not in seen:
            seen[cur] = len(seen)
            cur = grid[cur][x]
        return (len(seen), seen[cur])

    colors = []
    for x in range(m):
        row = grid[x]
        col = [grid[y][x] for y in range(m)]
        colors.append(
            (
                x == table.zero_id,
                x == table.identity_id,
                row[x] == x,
                x in products,
                len(set(row)),
                len(set(col)),
                power_chain(x),
            )
        )
    # iterate: append multiset of (color[y], color[x*y], color[y*x])
    canon = {c: i for i, c in enumerate(sorted(set(colors)))}
    cur = [canon[c] for c in colors]
    while True:
        sigs = []
        for x in range(m):
            row = grid[x]
            neigh = sorted((cur[y], cur[row[y]], cur[grid[y][x]]) for y in range(m))
            sigs.append((cur[x], tuple(neigh)))
        canon = {c: i for i, c in enumerate(sorted(set(sigs)))}
        nxt = [canon[c] for c in sigs]
        if nxt == cur:
            return cur
        cur = nxt


def table_iso(u: SemigroupTable, w: SemigroupTable):
    """An isomorphism id map u -> w as a dict, or None.

    Pruned backtracking: iterated color refinement must match as a histogram,
    then assignments respect colors and product constraints eagerly.
    """
    if u.m != w.m:
        return None
    m = u.m
    if m > TABLE_ISO_CAP:
        raise CapExceeded(f"table size {m} exceeds isomorphism cap {TABLE_ISO_CAP}")
    if m == 0:
        return {}
    cu, cw = _color_refine(u), _color_refine(w)
    if sorted(cu) != sorted(cw):
        return None
    by_color_w: dict[int, list[int]] = {}
    for y, c in enumerate(cw):
        by_color_w.setdefault(c, []).append(y)
    # rarest colors first: fewer candidates near the root of the search
    order = sorted(range(m), key=lambda x: (len(by_color_w.get(cu[x], ())), cu[x], x))
    gu, gw = u.grid, w.grid

    fwd: dict[int, int] = {}
    rev: dict[int, int] = {}

    def assign(x, y, trail):
        """Map x->y and propagate product constraints; undo via trail."""
        stack = [(x, y)]
        while stack:
            a, b = stack.pop()
            if a in fwd:
                if fwd[a] != b:
                    return False
                continue
            if b in rev:
                return False
            if cu[a] != cw[b]:
                return False
            fwd[a] = b
            rev[b] = a
            trail.append((a, b))
            for c in list(fwd):
                d = fwd[c]
                stack.append((gu[a][c], gw[b][d]))
                stack.append((gu[c][a], gw[d][b]))
        return True

    def search(k):
        if k == m:
            return True
        x = order[k]
        if x in fwd:
            return search(k + 1)
        for y in by_color_w[cu[x]]:
            if y in rev:
                continue
            trail: list = []
            if assign(x, y, trail) and search(k + 1):
                return True
            for a, b in trail:
                del fwd[a]
                del rev[b]
        return False

    if not search(0):
        return None
    # full verification before handing the map out
    for a in range(m):
        for b in range(m):
            if fwd[gu[a][b]] != gw[fwd[a]][fwd[b]]:  # pragma: no cover
                raise InternalError("isomorphism verification failed")
    return dict(fwd)


# ---------------------------------------------------------------------------
# preorder utilities


def preorder_depths(m: int, leq) -> list[int]:
    """Order-theoretic depth of each element under preorder leq(a, b).

    Elements with mutually comparable pairs collapse into classes; depth 0
    are the maximal classes, depth i+1 lies strictly below some depth-i
    class.  leq is a callable or an m x m truth table.
    """
    if not callable(leq):
        mat = leq
        leq = lambda a, b: mat[a][b]  # noqa: E731
    rep = list(range(m))
    for a in range(m):
        for b in range(a):
            if rep[b] == b and leq(a, b) and leq(b, a):
                rep[a] = b
                break
    reps = sorted({rep[a] for a in range(m)})
    above: dict[int, set[int]] = {r: set() for r in reps}
    for a in reps:
        for b in reps:
            if a != b and leq(a, b) and not leq(b, a):
                above[a].add(b)
    memo: dict[int, int] = {}

    def depth(r):
        if r not in memo:
            memo[r] = 0 if not above[r] else 1 + max(depth(s) for s in above[r])
        return memo[r]

    return [depth(rep[a]) for a in range(m)]


# ---------------------------------------------------------------------------
# full ambient semigroup M(n, F_q)


@dataclass
class Ambient:
    """The full multiplicative semigroup of n x n matrices, interned."""

    field: FieldSpec
    n: int
    mats: tuple[Matrix, ...]
    index: dict
    grid: np.ndarray
    zero_id: int
    identity_id: int

    _ranks: tuple | None = None
    _nilpotent: tuple | None = None
    _power_sets: list | None = None

    @property
    def m(self) -> int:
        return len(self.mats)

    @property
    def ranks(self) -> tuple[int, ...]:
        if self._ranks is None:
            self._ranks = tuple(mat_rank(a) for a in self.mats)
        return self._ranks

    @property
    def nilpotent(self) -> tuple[bool, ...]:
        """Per-id flag: does some power hit zero (equivalently the n-th)."""
        if self._nilpotent is None:
            out = []
            for x in range(self.m):
                cur = x
                for _ in range(self.n - 1):
                    cur = int(self.grid[cur, x])
                out.append(cur == self.zero_id)
            self._nilpotent = tuple(out)
        return self._nilpotent

    def power_closure(self, x: int) -> frozenset[int]:
        """{x, x^2, x^3, ...} until the power sequence cycles."""
        if self._power_sets is None:
            self._power_sets = [None] * self.m
        cached = self._power_sets[x]
        if cached is None:
            seen = set()
            cur = x
            while cur not in seen:
                seen.add(cur)
                cur = int(self.grid[cur, x])
            cached = frozenset(seen)
            self._power_sets[x] = cached
        return cached


_AMBIENT_CACHE: dict = {}


def ambient(field: FieldSpec, n: int, cap: int = AMBIENT_ELEMS_CAP) -> Ambient:
    """Build (and cache) the interned full semigroup with its product grid."""
    total = field.q ** (n * n)
    if total > cap:
        raise CapExceeded(f"|M({n}, F_{field.q})| = {total} exceeds cap {cap}")
    key = (field, n)
    if key in _AMBIENT_CACHE:
        return _AMBIENT_CACHE[key]
    from .gf import enumerate_matrices

    s = mat_set(field, n, enumerate_matrices(field, n, n, cap=cap))
    grid = product_grid(s.elements)
    index = {m.codes: i for i, m in enumerate(s.elements)}
    zero_id = index[(0,) * (n * n)]
    from .gf import identity_matrix

    identity_id = index[identity_matrix(field, n).codes]
    amb = Ambient(
        field=field,
        n=n,
        mats=s.elements,
        index=index,
        grid=grid,
        zero_id=zero_id,
        identity_id=identity_id,
    )
    _AMBIENT_CACHE[key] = amb
    return amb
