import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matsemi import (
    BadSignature,
    CapExceeded,
    NotAChain,
    NotNilpotent,
    SignatureMismatch,
    all_flags,
    consolidates,
    field_make,
    flag_basis,
    flag_make,
    flag_semigroup,
    flag_transporter,
    flags_with_signature,
    format_flag,
    is_k_maximal,
    lowers_flag,
    mat_inverse,
    mat_set,
    matrix,
    nilpotency_degree,
    parse_flag,
    parse_subspace,
    power_image_flag,
    standard_flag,
    subspace,
    unit_matrix,
)

F2 = field_make(2)
F3 = field_make(3)

FLAGS3 = all_flags(F2, 3)


def flags3():
    return st.sampled_from(FLAGS3)


class TestFlagBasics:
    def test_all_flags_census(self):
        by_len = {}
        for f in FLAGS3:
            by_len[f.length] = by_len.get(f.length, 0) + 1
        # 1 trivial, 7 + 7 of length two, 21 complete
        assert by_len == {1: 1, 2: 14, 3: 21}

    def test_standard_flag(self):
        f = standard_flag(F2, (1, 2, 1))
        assert f.signature == (1, 2, 1)
        assert f.chain[1] == subspace(F2, 4, [[1, 0, 0, 0]])
        with pytest.raises(BadSignature):
            standard_flag(F2, (1, 0, 2))

    @given(flags3())
    def test_text_roundtrip(self, f):
        assert parse_flag(F2, 3, format_flag(f)) == f

    def test_parse_rejects_non_chain(self):
        with pytest.raises(NotAChain):
            parse_flag(F2, 3, "1,0,0|0,1,0")

    @given(flags3())
    def test_signature_sums_to_ambient(self, f):
        assert sum(f.signature) == 3
        dims = [s.dim for s in f.chain]
        assert dims == sorted(dims) and dims[0] == 0 and dims[-1] == 3

    @given(flags3())
    def test_stratum_of_partitions(self, f):
        for v in ((1, 0, 0), (0, 1, 1), (1, 1, 1)):
            i = f.stratum_of(v)
            assert f.chain[i].contains_vector(v)
            assert i == 0 or not f.chain[i - 1].contains_vector(v)


class TestFlagSemigroup:
    @given(flags3())
    def test_members_lower_the_flag(self, f):
        s = flag_semigroup(f)
        for a in s:
            assert lowers_flag(a, f)

    @given(flags3())
    @settings(max_examples=40, deadline=None)
    def test_closed_under_products(self, f):
        s = flag_semigroup(f)
        members = s.as_set()
        for a in s:
            for b in s:
                assert a * b in members

    @given(flags3())
    def test_size_law(self, f):
        sig = f.signature
        exp = sum(sig[i] * sig[j] for i in range(len(sig)) for j in range(i + 1, len(sig)))
        assert len(flag_semigroup(f)) == 2**exp

    def test_cap(self):
        with pytest.raises(CapExceeded):
            flag_semigroup(standard_flag(F2, (1, 1, 1)), cap=4)

    @given(flags3())
    def test_nilpotency_degree_is_flag_length(self, f):
        s = flag_semigroup(f)
        if f.length == 1:
            assert s.elements[0].is_zero() and len(s) == 1
        else:
            assert nilpotency_degree(s) == f.length

    def test_adapted_basis(self):
        for f in FLAGS3[:10]:
            p = flag_basis(f)
            assert mat_inverse(p) is not None
            # leading columns of p span the chain prefix by prefix
            for s in f.interior:
                cols = [list(p.col_codes(j)) for j in range(s.dim)]
                assert subspace(F2, 3, cols) == s


class TestPowerImageFlag:
    @given(flags3())
    def test_recovers_the_flag(self, f):
        if f.length < 2:
            return
        assert power_image_flag(flag_semigroup(f)) == f

    def test_rejects_non_nilpotent(self):
        s = mat_set(F2, 2, [matrix(F2, [[1, 0], [0, 1]])])
        with pytest.raises(NotNilpotent):
            power_image_flag(s)

    def test_proper_subset_is_detected(self):
        z = matrix(F2, [[0] * 3] * 3)
        e13 = unit_matrix(F2, 3, 0, 2)
        small = mat_set(F2, 3, [z, e13])
        assert nilpotency_degree(small) == 2
        assert not is_k_maximal(small)

    @given(flags3())
    def test_flag_semigroups_are_maximal(self, f):
        if f.length >= 2:
            assert is_k_maximal(flag_semigroup(f))


class TestConsolidation:
    @given(flags3(), flags3())
    @settings(max_examples=150, deadline=None)
    def test_matches_containment(self, f1, f2):
        assert consolidates(f1, f2) == (flag_semigroup(f2).as_set() <= flag_semigroup(f1).as_set())

    def test_refinement_example(self):
        full = standard_flag(F2, (1, 1, 1))
        part = standard_flag(F2, (1, 2))
        assert consolidates(full, part)
        assert not consolidates(part, full)


class TestTransporter:
    def test_same_signature_pairs(self):
        for sig in ((1, 2), (2, 1), (1, 1, 1)):
            group = flags_with_signature(F2, 3, sig)
            f1, f2 = group[0], group[-1]
            g = flag_transporter(f1, f2)
            gi = mat_inverse(g)
            assert gi is not None
            for v, w in zip(f1.chain, f2.chain):
                image_rows = [list((g * matrix(F2, [[c] for c in vec])).col_codes(0)) for vec in v.basis]
                assert subspace(F2, 3, image_rows) == w

    def test_signature_mismatch(self):
        with pytest.raises(SignatureMismatch):
            flag_transporter(standard_flag(F2, (1, 2)), standard_flag(F2, (2, 1)))


def test_flag_make_rejects_bad_chain():
    a = subspace(F2, 3, [[1, 0, 0]])
    b = subspace(F2, 3, [[0, 1, 0]])
    with pytest.raises(NotAChain):
        flag_make(F2, 3, [a, b])


def test_flags_with_signature_counts():
    assert len(flags_with_signature(F2, 3, (1, 2))) == 7
    assert len(flags_with_signature(F2, 3, (2, 1))) == 7
    assert len(flags_with_signature(F2, 3, (1, 1, 1))) == 21
    assert len(flags_with_signature(F3, 2, (1, 1))) == 4
