import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matsemi import (
    IsoDecision,
    PreconditionViolated,
    SignatureMismatch,
    ZeroElement,
    all_flags,
    annihilator_census,
    depth_sets,
    field_make,
    fingerprint,
    is_indecomposable,
    iso_construct,
    iso_decide,
    k_set,
    ll,
    matrix,
    mat_rank,
    nil_context,
    prec,
    sandwich_witness,
    standard_flag,
    super_rank,
    u_stat,
    unit_matrix,
)
from matsemi.errors import BadSignature
from matsemi.nilclass import K_PAIRS

F2 = field_make(2)


def E(i, j, n=3):
    return unit_matrix(F2, n, i - 1, j - 1)


@pytest.fixture(scope="module")
def ctx3():
    return nil_context(standard_flag(F2, (1, 1, 1)))


class TestOrders:
    def test_prec_examples(self, ctx3):
        e12, e13 = E(1, 2), E(1, 3)
        assert prec(ctx3, e12, e12)
        assert prec(ctx3, e12, e13)
        assert not prec(ctx3, e13, e12)

    def test_ll_examples(self, ctx3):
        e13, e23 = E(1, 3), E(2, 3)
        assert ll(ctx3, e23, e13)
        assert not ll(ctx3, e13, e23)

    def test_routes_agree_everywhere(self, ctx3):
        for a in ctx3.t:
            for b in ctx3.t:
                assert prec(ctx3, a, b, "products") == prec(ctx3, a, b, "kernels")
                assert ll(ctx3, a, b, "products") == ll(ctx3, a, b, "images")

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_routes_agree_on_112(self, ctx112, data):
        a = data.draw(st.sampled_from(ctx112.t.elements))
        b = data.draw(st.sampled_from(ctx112.t.elements))
        assert prec(ctx112, a, b, "products") == prec(ctx112, a, b, "kernels")
        assert ll(ctx112, a, b, "products") == ll(ctx112, a, b, "images")

    def test_preorder_laws(self, ctx3):
        els = ctx3.t.elements
        for a in els:
            assert prec(ctx3, a, a)
        for a in els:
            for b in els:
                for c in els:
                    if prec(ctx3, a, b) and prec(ctx3, b, c):
                        assert prec(ctx3, a, c)

    def test_depth_sets(self, ctx3):
        zero3 = matrix(F2, [[0] * 3] * 3)
        d0 = depth_sets(ctx3, "prec", 0)
        assert d0.as_set() == {zero3, E(1, 3), E(2, 3), E(1, 3) + E(2, 3)}
        d1 = depth_sets(ctx3, "prec", 1)
        assert len(d1) == 4
        assert len(depth_sets(ctx3, "prec", 2)) == 0
        # the depth sets partition the semigroup
        assert d0.as_set() | d1.as_set() == ctx3.t.as_set()

    def test_depth_sets_ll(self, ctx3):
        d0 = depth_sets(ctx3, "ll", 0)
        assert len(d0) + len(depth_sets(ctx3, "ll", 1)) == ctx3.m


class TestKCells:
    def test_indecomposable(self, ctx3):
        zero3 = matrix(F2, [[0] * 3] * 3)
        assert not is_indecomposable(ctx3, zero3)
        assert not is_indecomposable(ctx3, E(1, 3))  # e12 * e23
        assert is_indecomposable(ctx3, E(1, 2))

    def test_cells_at_length_three(self, ctx3):
        assert E(1, 2) in k_set(ctx3, 1, 0)
        assert E(2, 3) in k_set(ctx3, 0, 1)
        # cube of the semigroup vanishes, so the sandwich cells are empty
        for u, v in ((1, 1), (2, 1), (1, 2), (2, 2)):
            assert len(k_set(ctx3, u, v)) == 0

    def test_cells_are_disjoint_depth_level_sets(self, ctx_complete4):
        ctx = ctx_complete4
        cells = {(u, v): k_set(ctx, u, v).as_set() for u, v in K_PAIRS}
        seen = set()
        for c in cells.values():
            assert not (seen & c)
            seen |= c
        for (u, v), c in cells.items():
            for a in c:
                x = ctx.index[a]
                assert (ctx.depth_prec[x], ctx.depth_ll[x]) == (u, v)

    def test_complete4_cell_sizes(self, ctx_complete4):
        sizes = tuple(len(k_set(ctx_complete4, u, v)) for u, v in K_PAIRS)
        assert sizes == (6, 6, 8, 0, 0, 8, 8, 0)

    def test_bad_pair(self, ctx3):
        with pytest.raises(PreconditionViolated):
            k_set(ctx3, 3, 0)


class TestSuperRank:
    def test_rank_one_cases(self, ctx3):
        assert super_rank(ctx3, E(1, 2)) == 1
        assert super_rank(ctx3, E(2, 3)) == 1
        assert super_rank(ctx3, E(1, 3)) == 1

    def test_zero_rejected(self, ctx3):
        with pytest.raises(ZeroElement):
            super_rank(ctx3, matrix(F2, [[0] * 3] * 3))

    def test_undefined_case(self, ctx3):
        a = E(1, 2) + E(2, 3)
        assert is_indecomposable(ctx3, a)
        assert super_rank(ctx3, a) is None

    def test_rank_law_on_decomposables(self, ctx_complete4, ctx212):
        for ctx in (ctx_complete4, ctx212):
            for x in sorted(ctx.decomposable_ids):
                if x == 0:
                    continue
                a = ctx.t.elements[x]
                assert super_rank(ctx, a) == mat_rank(a)

    def test_212_has_no_rank2_decomposables(self, ctx212):
        # middle stratum is a line, so every product factors through it
        assert all(mat_rank(ctx212.t.elements[x]) <= 1 for x in ctx212.decomposable_ids)

    def test_rank2_decomposable_in_complete4(self, ctx_complete4):
        a = unit_matrix(F2, 4, 0, 2) + unit_matrix(F2, 4, 1, 3)  # (e12+e23)(e23+e34)
        assert ctx_complete4.index[a] in ctx_complete4.decomposable_ids
        assert super_rank(ctx_complete4, a) == 2


class TestSandwichWitness:
    def test_corner_fix_case(self, ctx_complete4):
        E4 = lambda i, j: unit_matrix(F2, 4, i - 1, j - 1)
        a = E4(1, 3) + E4(2, 3) + E4(2, 4)
        assert a in k_set(ctx_complete4, 1, 1)
        assert mat_rank(a) == 2 and super_rank(ctx_complete4, a) == 1
        w = sandwich_witness(ctx_complete4, a, 1)
        assert w == a + E4(1, 4)
        # replay: every sandwich through w matches the one through a
        g = ctx_complete4.table.grid
        xa, xb = ctx_complete4.index[a], ctx_complete4.index[w]
        for c in range(ctx_complete4.m):
            assert g[c][xa] == g[c][xb] or (
                ctx_complete4.t.elements[g[c][xa]],
                ctx_complete4.t.elements[g[c][xb]],
            ) == (a, w)
            assert g[xa][c] == g[xb][c] or c == ctx_complete4.table.identity_id

    def test_rank_mismatch_returns_none(self, ctx_complete4):
        E4 = lambda i, j: unit_matrix(F2, 4, i - 1, j - 1)
        b = E4(1, 2) + E4(2, 3)
        assert super_rank(ctx_complete4, b) == 2
        assert sandwich_witness(ctx_complete4, b, 1) is None
        assert sandwich_witness(ctx_complete4, b, 2) is not None

    def test_degenerate_hull_rejected(self, ctx_complete4):
        with pytest.raises(PreconditionViolated):
            sandwich_witness(ctx_complete4, unit_matrix(F2, 4, 0, 3), 1)

    def test_decomposable_rejected(self, ctx_complete4):
        with pytest.raises(PreconditionViolated):
            sandwich_witness(ctx_complete4, unit_matrix(F2, 4, 0, 2), 1)


class TestFingerprint:
    def test_frozen_trio(self, ctx112, ctx121, ctx211):
        fp112, fp121, fp211 = fingerprint(ctx112), fingerprint(ctx121), fingerprint(ctx211)
        assert fp112.size == fp121.size == fp211.size == 32
        assert (fp112.power_sizes[1], fp121.power_sizes[1], fp211.power_sizes[1]) == (4, 2, 4)
        assert (fp112.left_ann, fp121.left_ann, fp211.left_ann) == (16, 8, 8)
        assert (fp112.right_ann, fp121.right_ann, fp211.right_ann) == (8, 8, 16)
        assert (fp112.u_stats, fp121.u_stats, fp211.u_stats) == ((1,), (2,), (1,))
        assert len({fp112.items(), fp121.items(), fp211.items()}) == 3

    def test_complete4(self, ctx_complete4):
        fp = fingerprint(ctx_complete4)
        assert fp.size == 64
        assert fp.power_sizes == (64, 8, 2, 1)
        assert (fp.right_ann, fp.left_ann, fp.two_sided_ann) == (8, 8, 2)
        assert fp.decomposable_count == 8
        assert fp.k_sizes == (6, 6, 8, 0, 0, 8, 8, 0)
        assert fp.u_stats == (1, 1)

    def test_212(self, ctx212):
        fp = fingerprint(ctx212)
        assert fp.size == 256
        assert fp.power_sizes == (256, 10, 1)
        assert (fp.right_ann, fp.left_ann, fp.two_sided_ann) == (64, 64, 16)
        assert fp.decomposable_count == 10
        assert fp.u_stats == (1,)

    def test_items_order_is_fixed(self, ctx112):
        keys = [k for k, _ in fingerprint(ctx112).items()]
        assert keys[:4] == ["size", "power_1", "power_2", "power_3"]
        assert keys[-1] == "u_2"


class TestUStat:
    def test_u_recovers_signature(self, ctx112, ctx121, ctx211, ctx_complete4, ctx212):
        for ctx in (ctx112, ctx121, ctx211, ctx_complete4, ctx212):
            for s in range(2, ctx.r):
                u, cert = u_stat(ctx, s)
                assert u == ctx.sig[s - 1]
                assert len(cert) == u

    def test_certificate_covers(self, ctx121):
        u, cert = u_stat(ctx121, 2)
        zero = ctx121.table.zero_id
        g = ctx121.table.grid
        targets = [
            b
            for b in range(ctx121.m)
            if any(g[a][b] != zero for a in range(ctx121.m))  # T b != 0 and b in T^{r-2}
            and b in ctx121.power_ids[ctx121.r - 3]
        ]
        for b in targets:
            assert any(g[c][b] != zero for c in cert)

    def test_position_bounds(self, ctx112):
        with pytest.raises(PreconditionViolated):
            u_stat(ctx112, 1)
        with pytest.raises(PreconditionViolated):
            u_stat(ctx112, 3)


class TestCensus:
    def test_212_census(self, ctx212):
        census = dict(annihilator_census(ctx212))
        assert census["two_sided_ann"] == 16
        assert census["decomposable_in_ann"] == 10
        assert census["rank_le_one_corner"] == 10
        assert census["geometric_shortcut"] == 8
        assert census["expected_mismatch"] is True
        assert census["right_ann"] == 64 and census["right_ann_matches"] is True

    def test_needs_length_three(self, ctx_complete4):
        with pytest.raises(PreconditionViolated):
            annihilator_census(ctx_complete4)


DECIDE_CASES = [
    (2, 4, (1, 2, 1), 4, (1, 2, 1), IsoDecision.ISOMORPHIC),
    (None, 6, (2, 1, 3), 7, (4, 1, 2), IsoDecision.ISOMORPHIC),
    (2, 4, (1, 3), 4, (3, 1), IsoDecision.ISOMORPHIC),
    (2, 4, (1, 3), 5, (1, 4), IsoDecision.NOT_ISOMORPHIC),
    (2, 5, (1, 4), 5, (2, 3), IsoDecision.NOT_ISOMORPHIC),
    (2, 4, (2, 2), 5, (1, 4), IsoDecision.ISOMORPHIC),
    (None, 4, (1, 3), 7, (2, 5), IsoDecision.ISOMORPHIC),
    (2, 4, (1, 1, 2), 4, (1, 2, 1), IsoDecision.NOT_ISOMORPHIC),
    (2, 4, (1, 1, 2), 5, (1, 1, 3), IsoDecision.UNSUPPORTED),
    (None, 4, (1, 1, 2), 5, (1, 1, 3), IsoDecision.UNSUPPORTED),
    (None, 5, (2, 1, 2), 5, (2, 1, 2), IsoDecision.ISOMORPHIC),
    (None, 5, (2, 1, 2), 6, (1, 1, 4), IsoDecision.NOT_ISOMORPHIC),
    (2, 5, (1, 1, 1, 2), 5, (1, 1, 1, 2), IsoDecision.ISOMORPHIC),
    (2, 5, (1, 1, 1, 2), 6, (1, 1, 1, 3), IsoDecision.NOT_ISOMORPHIC),
    (2, 3, (1, 1, 1), 4, (1, 1, 1, 1), IsoDecision.NOT_ISOMORPHIC),
]


class TestIso:
    @pytest.mark.parametrize("q,n1,s1,n2,s2,want", DECIDE_CASES)
    def test_decide(self, q, n1, s1, n2, s2, want):
        assert iso_decide(q, n1, s1, n2, s2) is want

    def test_decide_rejects_bad_signature(self):
        with pytest.raises(BadSignature):
            iso_decide(2, 4, (0, 4), 4, (1, 3))

    def test_construct_pair(self):
        flags = [f for f in all_flags(F2, 3) if f.length == 3]
        c1, c2 = nil_context(flags[0]), nil_context(flags[5])
        iso = iso_construct(c1, c2)
        assert len(iso.pairs) == 8
        mapping = iso.as_dict()
        for a in c1.t:
            for b in c1.t:
                assert mapping[a * b] == mapping[a] * mapping[b]

    def test_construct_identity(self):
        c = nil_context(standard_flag(F2, (1, 2)))
        iso = iso_construct(c, c)
        assert all(a == b for a, b in iso.pairs)

    def test_construct_rejects_mismatch(self):
        with pytest.raises(SignatureMismatch):
            iso_construct(
                nil_context(standard_flag(F2, (1, 2))),
                nil_context(standard_flag(F2, (2, 1))),
            )


def test_context_requires_length_two():
    with pytest.raises(PreconditionViolated):
        nil_context(standard_flag(F2, (3,)))
