"""End-to-end verification battery.

Thirteen numbered criteria, each an independent pass/fail check with a
witness on failure.  The quick profile keeps every ambient at or below the
512-element M(3, F_2); the full profile widens the conjugacy oracle to
q = 4 and adds two extra items (q = 5, and spot checks in the 65536-element
M(4, F_2), which never builds a product grid).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import lru_cache
from time import perf_counter

from .conjugacy import class_key, core, core_chain, sg_classes
from .engine import ambient, closure_ids, mat_set, table_iso
from .errors import MatSemiError, PreconditionViolated
from .flags import (
    all_flags,
    consolidates,
    flag_semigroup,
    flags_with_signature,
    format_flag,
    lowers_flag,
    standard_flag,
)
from .gf import (
    enumerate_matrices,
    field_make,
    format_matrix,
    invariant_factors,
    mat_rank,
    similar,
)
from .isolated import enumerate_isolated, ideal, ideal_generated_by_stratum
from .nilclass import (
    annihilator_census,
    depth_sets,
    fingerprint,
    iso_construct,
    ll,
    nil_context,
    prec,
    super_rank,
    u_stat,
)

CLASS_PAIRS_QUICK = ((2, 2), (2, 3), (3, 2))
CLASS_PAIRS = CLASS_PAIRS_QUICK + ((2, 4),)

# frozen fingerprint entries for the three standard width-4 contexts
TRIO_EXPECT = {
    (1, 1, 2): {"size": 32, "power_2": 4, "right_ann": 8, "left_ann": 16, "u_2": 1},
    (1, 2, 1): {"size": 32, "power_2": 2, "right_ann": 8, "left_ann": 8, "u_2": 2},
    (2, 1, 1): {"size": 32, "power_2": 4, "right_ann": 16, "left_ann": 8, "u_2": 1},
}


@dataclass(frozen=True)
class CriterionResult:
    key: str
    title: str
    passed: bool
    details: tuple[tuple[str, object], ...]
    witness: str | None
    elapsed_ms: float


def _result(key, title, t0, details, witness=None) -> CriterionResult:
    return CriterionResult(
        key=key,
        title=title,
        passed=witness is None,
        details=tuple(details),
        witness=witness,
        elapsed_ms=(perf_counter() - t0) * 1000.0,
    )


@lru_cache(maxsize=1)
def _battery():
    """The forty standing contexts: every F_2^3 flag of length >= 2, the
    four standard signatures of F_2^4, and the width-one (2,1,2) middle."""
    f2 = field_make(2)
    ctxs = [nil_context(f) for f in all_flags(f2, 3) if f.length >= 2]
    for sig in ((1, 1, 2), (1, 2, 1), (2, 1, 1), (1, 1, 1, 1)):
        ctxs.append(nil_context(standard_flag(f2, sig)))
    ctxs.append(nil_context(standard_flag(f2, (2, 1, 2))))
    return tuple(ctxs)


# ---------------------------------------------------------------------------
# criteria


def criterion_01(pairs=CLASS_PAIRS, threads: int = 1) -> CriterionResult:
    t0 = perf_counter()
    details, witness = [], None
    for n, q in pairs:
        f = field_make(*_pk(q))
        left = sg_classes(f, n, method="theorem", threads=threads).classes()
        right = sg_classes(f, n, method="brute", threads=threads).classes()
        details.append((f"classes_n{n}_q{q}", len(left)))
        if left != right and witness is None:
            bad = next(c for c, d in zip(left, right) if c != d)
            witness = (
                f"n={n} q={q}: structural and brute partitions differ; "
                f"first structural class off: {sorted(bad)[:6]}"
            )
    details.append(("agree", witness is None))
    return _result("01", "conjugacy classes: structural method matches brute closure", t0, details, witness)


def _pk(q: int) -> tuple[int, int]:
    """(p, k) with p^k = q, p prime; q is always a true prime power here."""
    for p in range(2, q + 1):
        k = 0
        t = q
        while t % p == 0:
            t //= p
            k += 1
        if t == 1 and k >= 1:
            return p, k
    raise PreconditionViolated(f"{q} is not a prime power")


def criterion_02() -> CriterionResult:
    t0 = perf_counter()
    f2 = field_make(2)
    amb = ambient(f2, 2)
    witness = None
    sizes = {}
    for method in ("theorem", "brute"):
        part = sg_classes(f2, 2, method=method)
        cls = part.classes()
        sizes[method] = tuple(sorted(len(c) for c in cls))
        nil_ids = [x for x in range(amb.m) if amb.nilpotent[x]]
        zero_root = part.find(amb.zero_id)
        if len(cls) != 5 or sizes[method] != (1, 2, 3, 4, 6):
            witness = f"{method}: {len(cls)} classes with sizes {sizes[method]}"
        elif len(nil_ids) != 4 or any(part.find(x) != zero_root for x in nil_ids):
            witness = f"{method}: nilpotents {nil_ids} do not all share the class of 0"
    details = [
        ("count", 5),
        ("sizes", sizes["theorem"]),
        ("nilpotent_count", 4),
        ("nilpotents_with_zero", witness is None),
    ]
    return _result("02", "M(2,F2) class census", t0, details, witness)


def criterion_03() -> CriterionResult:
    t0 = perf_counter()
    witness = None
    checked = 0
    for n in (2, 3, 4):
        for q in (2, 3):
            f = field_make(q)
            full = None
            if n <= 3:
                full = list(enumerate_matrices(f, n, n))
            for m in range(1, n):
                for fl in flags_with_signature(f, n, (m, n - m)):
                    s = flag_semigroup(fl)
                    checked += 1
                    expect = q ** (m * (n - m))
                    if len(s) != expect:
                        witness = f"{format_flag(fl)} over F_{q}: {len(s)} != {expect}"
                        break
                    if any(not lowers_flag(a, fl) for a in s):
                        witness = f"{format_flag(fl)} over F_{q}: enumerated element fails the predicate"
                        break
                    if full is not None:
                        scan = sum(1 for a in full if lowers_flag(a, fl))
                        if scan != expect:
                            witness = f"{format_flag(fl)} over F_{q}: ambient scan {scan} != {expect}"
                            break
                if witness:
                    break
            if witness:
                break
        if witness:
            break
    details = [("flags_checked", checked), ("size_law", witness is None)]
    return _result("03", "flag semigroup size law", t0, details, witness)


def _subset_nd(grid, zero_id, ids):
    """Nilpotency degree of a closed id set inside an ambient grid, or None."""
    base = sorted(int(x) for x in ids)
    cur = frozenset(base)
    target = frozenset((zero_id,))
    seen = set()
    k = 1
    while True:
        if cur == target:
            return k
        if cur in seen:
            return None
        seen.add(cur)
        cur = frozenset(int(grid[a, b]) for a in base for b in cur)
        k += 1


def criterion_04() -> CriterionResult:
    t0 = perf_counter()
    f2 = field_make(2)
    amb = ambient(f2, 3)
    non_nil = frozenset(x for x in range(amb.m) if not amb.nilpotent[x])
    witness = None
    escapes = 0
    flags = all_flags(f2, 3)
    for fl in flags:
        member = frozenset(amb.index[a.codes] for a in flag_semigroup(fl))
        for x in range(amb.m):
            if x in member:
                continue
            escapes += 1
            if x in non_nil:
                continue  # the escape itself breaks nilpotency
            ids, aborted = closure_ids(amb.grid, member | {x}, abort_ids=non_nil)
            if aborted:
                continue
            nd = _subset_nd(amb.grid, amb.zero_id, ids)
            if nd is not None and nd <= fl.length:
                witness = (
                    f"{format_flag(fl)} + {format_matrix(amb.mats[x])}: closure stays "
                    f"nilpotent of degree {nd} <= {fl.length}"
                )
                break
        if witness:
            break
    details = [("flags", len(flags)), ("escapes_checked", escapes), ("all_blocked", witness is None)]
    return _result("04", "flag semigroups are maximal nilpotent", t0, details, witness)


def criterion_05() -> CriterionResult:
    t0 = perf_counter()
    f2 = field_make(2)
    flags = all_flags(f2, 3)
    sets = [flag_semigroup(fl).as_set() for fl in flags]
    witness = None
    pairs = 0
    for i, f1 in enumerate(flags):
        for j, f2_ in enumerate(flags):
            pairs += 1
            if consolidates(f1, f2_) != (sets[j] <= sets[i]):
                witness = f"{format_flag(f1)} vs {format_flag(f2_)}: consolidation and containment disagree"
                break
        if witness:
            break
    details = [("ordered_pairs", pairs), ("biconditional", witness is None)]
    return _result("05", "consolidation matches containment", t0, details, witness)


def criterion_06() -> CriterionResult:
    t0 = perf_counter()
    witness = None
    pairs = 0
    battery = _battery()
    for ctx in battery:
        mats = ctx.t.elements
        for a in mats:
            for b in mats:
                pairs += 1
                if prec(ctx, a, b, method="products") != prec(ctx, a, b, method="kernels"):
                    witness = f"prec routes split on sig {ctx.sig}: {format_matrix(a)} vs {format_matrix(b)}"
                    break
                if ll(ctx, a, b, method="products") != ll(ctx, a, b, method="images"):
                    witness = f"ll routes split on sig {ctx.sig}: {format_matrix(a)} vs {format_matrix(b)}"
                    break
            if witness:
                break
        if witness:
            break
        # depth_sets cross-checks dimension depths against order depths
        depth_sets(ctx, "prec", 0)
        depth_sets(ctx, "ll", 0)
    details = [("contexts", len(battery)), ("pairs", pairs), ("routes_agree", witness is None)]
    return _result("06", "divisibility preorders: product and subspace routes agree", t0, details, witness)


def criterion_07() -> CriterionResult:
    t0 = perf_counter()
    witness = None
    checked = 0
    for ctx in _battery():
        zero = ctx.table.zero_id
        for x in sorted(ctx.decomposable_ids):
            if x == zero:
                continue
            checked += 1
            a = ctx.t.elements[x]
            sr = super_rank(ctx, a)
            if sr != mat_rank(a):
                witness = f"sig {ctx.sig}, {format_matrix(a)}: super rank {sr} != rank {mat_rank(a)}"
                break
        if witness:
            break
    details = [("contexts", len(_battery())), ("decomposables_checked", checked), ("law_holds", witness is None)]
    return _result("07", "super rank equals rank on decomposables", t0, details, witness)


def criterion_08() -> CriterionResult:
    t0 = perf_counter()
    witness = None
    checked = 0
    for ctx in _battery():
        for s in range(2, ctx.r):
            checked += 1
            u, _cert = u_stat(ctx, s)
            if u != ctx.sig[s - 1]:
                witness = f"sig {ctx.sig}, position {s}: u = {u} != {ctx.sig[s - 1]}"
                break
        if witness:
            break
    details = [("positions_checked", checked), ("all_equal", witness is None)]
    return _result("08", "covering statistic recovers the signature", t0, details, witness)


def criterion_09() -> CriterionResult:
    t0 = perf_counter()
    f2 = field_make(2)
    witness = None
    trio = {}
    for sig in ((1, 1, 2), (1, 2, 1), (2, 1, 1)):
        ctx = nil_context(standard_flag(f2, sig))
        trio[sig] = dict(fingerprint(ctx).items())
        for key, want in TRIO_EXPECT[sig].items():
            got = trio[sig][key]
            if got != want:
                witness = f"sig {sig}: fingerprint {key} = {got}, expected {want}"
    prints = [tuple(sorted(d.items())) for d in trio.values()]
    if witness is None and len(set(prints)) != 3:
        witness = "width-4 fingerprints are not pairwise distinct"

    # equal signatures over a common ambient: transport every ordered pair
    verified = 0
    if witness is None:
        by_sig: dict = {}
        for ctx in _battery():
            if ctx.t.dim == 3:
                by_sig.setdefault(ctx.sig, []).append(ctx)
        for group in by_sig.values():
            for c1, c2 in itertools.product(group, group):
                iso_construct(c1, c2)  # raises if the transport breaks
                verified += 1

    # one cross-signature pair of equal size: the table search must refuse
    refusal = None
    if witness is None:
        t1 = nil_context(standard_flag(f2, (1, 1, 2))).table
        t2 = nil_context(standard_flag(f2, (1, 2, 1))).table
        refusal = table_iso(t1, t2) is None
        if not refusal:
            witness = "32-element tables of signatures (1,1,2) and (1,2,1) reported isomorphic"
    details = [
        ("trio_distinct", witness is None),
        ("iso_pairs_verified", verified),
        ("cross_sig_refusal", bool(refusal)),
    ]
    return _result("09", "fingerprints separate; equal signatures transport", t0, details, witness)


def criterion_10() -> CriterionResult:
    t0 = perf_counter()
    ctx = nil_context(standard_flag(field_make(2), (2, 1, 2)))
    census = dict(annihilator_census(ctx))
    expect = {
        "two_sided_ann": 16,
        "decomposable_in_ann": 10,
        "rank_le_one_corner": 10,
        "geometric_shortcut": 8,
        "expected_mismatch": True,
        "right_ann": 64,
        "right_ann_closed_form": 64,
        "right_ann_matches": True,
    }
    witness = None
    for key, want in expect.items():
        if census[key] != want:
            witness = f"census {key} = {census[key]}, expected {want}"
            break
    details = [(k, v if not isinstance(v, tuple) else list(v)) for k, v in census.items()]
    return _result("10", "annihilator census of the width-one middle context", t0, details, witness)


def criterion_11() -> CriterionResult:
    t0 = perf_counter()
    witness = None
    details = []
    for n, q in ((2, 2), (2, 3), (3, 2)):
        f = field_make(q)
        for k in range(1, n):
            try:
                gen = ideal_generated_by_stratum(f, n, k)
            except MatSemiError as exc:
                witness = f"n={n} q={q} k={k}: {exc}"
                break
            details.append((f"ideal_n{n}_q{q}_k{k}", len(gen)))
            if n == 3 and q == 2 and k == 2 and len(gen) != 344:
                witness = f"|closure of the rank-2 stratum in M(3,F2)| = {len(gen)} != 344"
                break
        if witness:
            break
    details.append(("all_match", witness is None))
    return _result("11", "rank strata generate the ideals", t0, details, witness)


def criterion_12() -> CriterionResult:
    t0 = perf_counter()
    f2, f3 = field_make(2), field_make(3)
    witness = None
    recs2 = enumerate_isolated(f2, 2, mode="exhaustive")
    kinds = sorted(r.kind for r in recs2)
    complete = sorted(r.kind for r in recs2 if r.completely_isolated)
    if len(recs2) != 15 or kinds.count("SAB") != 12:
        witness = f"M(2,F2): {len(recs2)} isolated records with kinds {kinds}"
    elif complete != ["GL", "I", "M"]:
        witness = f"M(2,F2): completely isolated kinds {complete} != [GL, I, M]"
    recs3 = ()
    if witness is None:
        recs3 = enumerate_isolated(f3, 2, mode="theorem_list")  # each record re-verified
        if len(recs3) != 53:
            witness = f"M(2,F3): theorem list has {len(recs3)} records, expected 53"
    details = [
        ("f2_isolated", len(recs2)),
        ("f2_completely_isolated", 3),
        ("f3_isolated", len(recs3)),
        ("sound", witness is None),
    ]
    return _result("12", "isolated subsemigroup classification", t0, details, witness)


DETERMINISM_COMMANDS = (
    ("classes", "--field", "2", "--n", "2", "--check", "brute"),
    ("classes", "--field", "3", "--n", "2", "--check", "brute"),
    ("flags", "phi", "--field", "2", "--n", "3", "--sig", "1,2"),
    ("nil", "fingerprint", "--field", "2", "--n", "4", "--sig", "1,1,2"),
    ("isolated", "enum", "--field", "2", "--n", "2"),
)


def criterion_13() -> CriterionResult:
    from .cli import run_command

    t0 = perf_counter()
    witness = None
    compared = 0
    for argv in DETERMINISM_COMMANDS:
        outs = []
        for threads in ("1", "8"):
            for fmt in ("json", "csv"):
                text, code = run_command([*argv, "--format", fmt, "--threads", threads])
                if code != 0:
                    witness = f"{' '.join(argv)} --format {fmt}: exit {code}"
                    break
                outs.append((fmt, text))
            if witness:
                break
        if witness:
            break
        first, second = outs[:2], outs[2:]
        if first != second:
            witness = f"{' '.join(argv)}: reports differ between 1 and 8 threads"
            break
        compared += 1
    details = [("commands", compared), ("byte_identical", witness is None)]
    return _result("13", "reports are thread-independent", t0, details, witness)


# ---------------------------------------------------------------------------
# full-profile extras


def extra_classes_q5(threads: int = 1) -> CriterionResult:
    t0 = perf_counter()
    f5 = field_make(5)
    left = sg_classes(f5, 2, method="theorem", threads=threads).classes()
    right = sg_classes(f5, 2, method="brute", threads=threads).classes()
    witness = None if left == right else "structural and brute partitions differ on M(2,F5)"
    details = [("classes_n2_q5", len(left)), ("agree", witness is None)]
    return _result("14", "conjugacy oracle at q=5", t0, details, witness)


def extra_large_ambient(sample_pairs: int = 50_000, chain_sample: int = 512) -> CriterionResult:
    """Spot checks in M(4, F_2) without a product grid (65536 elements).

    Exhaustive pair verification is out of reach (4.3e9 product pairs), so
    this item checks (a) the class map over every element, (b) the law
    key(xy) = key(yx) on a seeded random pair sample, and (c) replayed
    conjugation chains down to the core on a seeded element sample.
    """
    t0 = perf_counter()
    f2 = field_make(2)
    mats = list(enumerate_matrices(f2, 4, 4))
    keys = {}
    for a in mats:
        keys.setdefault(class_key(a), 0)
        keys[class_key(a)] += 1
    witness = None
    rng = random.Random(20260814)
    for _ in range(sample_pairs):
        x = mats[rng.randrange(len(mats))]
        y = mats[rng.randrange(len(mats))]
        if class_key(x * y) != class_key(y * x):
            witness = f"key(xy) != key(yx) for x={format_matrix(x)} y={format_matrix(y)}"
            break
    chains = 0
    if witness is None:
        for _ in range(chain_sample):
            a = mats[rng.randrange(len(mats))]
            ch = core_chain(a)  # replays every step witness on construction
            if not similar(ch.steps[-1], core(a)) or invariant_factors(ch.steps[-1]) != class_key(a):
                witness = f"chain from {format_matrix(a)} does not land in the class of the core"
                break
            chains += 1
    details = [
        ("elements", len(mats)),
        ("class_count", len(keys)),
        ("sampled_pairs", sample_pairs),
        ("commute_law", witness is None),
        ("chains_replayed", chains),
    ]
    return _result("15", "large ambient spot checks (n=4, q=2)", t0, details, witness)


# ---------------------------------------------------------------------------
# driver


@dataclass(frozen=True)
class VerifyReport:
    profile: str
    results: tuple[CriterionResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)


_REGISTRY = (
    ("01", "conjugacy classes: structural method matches brute closure", criterion_01),
    ("02", "M(2,F2) class census", criterion_02),
    ("03", "flag semigroup size law", criterion_03),
    ("04", "flag semigroups are maximal nilpotent", criterion_04),
    ("05", "consolidation matches containment", criterion_05),
    ("06", "divisibility preorders: product and subspace routes agree", criterion_06),
    ("07", "super rank equals rank on decomposables", criterion_07),
    ("08", "covering statistic recovers the signature", criterion_08),
    ("09", "fingerprints separate; equal signatures transport", criterion_09),
    ("10", "annihilator census of the width-one middle context", criterion_10),
    ("11", "rank strata generate the ideals", criterion_11),
    ("12", "isolated subsemigroup classification", criterion_12),
    ("13", "reports are thread-independent", criterion_13),
)

_EXTRAS = (
    ("14", "conjugacy oracle at q=5", extra_classes_q5),
    ("15", "large ambient spot checks (n=4, q=2)", extra_large_ambient),
)


def run(profile: str = "quick", threads: int = 1) -> VerifyReport:
    if profile not in ("quick", "full"):
        raise PreconditionViolated(f"unknown profile {profile!r}")
    plan = list(_REGISTRY)
    if profile == "full":
        plan += list(_EXTRAS)
    results = []
    for key, title, fn in plan:
        kwargs = {}
        if key in ("01", "14"):
            kwargs["threads"] = threads
        if key == "01":
            kwargs["pairs"] = CLASS_PAIRS if profile == "full" else CLASS_PAIRS_QUICK
        t0 = perf_counter()
        try:
            res = fn(**kwargs)
        except MatSemiError as exc:
            res = CriterionResult(
                key=key,
                title=title,
                passed=False,
                details=(),
                witness=f"{type(exc).__name__}: {exc}",
                elapsed_ms=(perf_counter() - t0) * 1000.0,
            )
        results.append(res)
    return VerifyReport(profile=profile, results=tuple(results))
