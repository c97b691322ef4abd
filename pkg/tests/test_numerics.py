import numpy as np
import numpy.testing as npt
import pytest

from sptn import (
    Prng,
    hadamard,
    matvec,
    matvec_transposed,
    outer_accumulate_rows,
    sparse_matvec_transposed,
    top_k_indices,
)


def _rand(rng, *shape):
    return rng.gaussians(int(np.prod(shape))).reshape(*shape)


# ---------------------------------------------------------------------------
# matvec / matvec_transposed


def test_matvec_identity():
    W = np.eye(2)
    npt.assert_array_equal(matvec(W, np.array([3.0, 4.0])), [3.0, 4.0])


def test_matvec_row_sums():
    W = np.array([[1.0, 2.0], [3.0, 4.0]])
    npt.assert_array_equal(matvec(W, np.array([1.0, 1.0])), [3.0, 7.0])


def test_matvec_matches_double_loop():
    rng = Prng(11)
    W = _rand(rng, 5, 7)
    x = _rand(rng, 7)
    expected = np.zeros(5)
    for i in range(5):
        for j in range(7):
            expected[i] += W[i, j] * x[j]
    npt.assert_allclose(matvec(W, x), expected, rtol=1e-12)


def test_matvec_shape_error_names_both_shapes():
    with pytest.raises(ValueError, match=r"\(2, 3\).*\(2,\)"):
        matvec(np.zeros((2, 3)), np.zeros(2))


def test_matvec_transposed_identity_and_row_select():
    W = np.eye(2)
    npt.assert_array_equal(matvec_transposed(W, np.array([3.0, 4.0])), [3.0, 4.0])
    W = np.array([[1.0, 2.0], [3.0, 4.0]])
    npt.assert_array_equal(matvec_transposed(W, np.array([1.0, 0.0])), [1.0, 2.0])


def test_matvec_transposed_matches_explicit_transpose():
    # Same math through a different kernel; agreement is to rounding only.
    rng = Prng(12)
    W = _rand(rng, 6, 4)
    d = _rand(rng, 6)
    npt.assert_allclose(
        matvec_transposed(W, d), matvec(np.ascontiguousarray(W.T), d), rtol=1e-12
    )


def test_matvec_transposed_shape_error():
    with pytest.raises(ValueError):
        matvec_transposed(np.zeros((2, 3)), np.zeros(3))


# ---------------------------------------------------------------------------
# sparse_matvec_transposed


def test_sparse_matvec_full_set_is_exactly_dense():
    rng = Prng(13)
    for rows, cols in [(3, 5), (8, 2), (16, 16)]:
        W = _rand(rng, rows, cols)
        d = _rand(rng, rows)
        out, macs = sparse_matvec_transposed(W, d, np.arange(rows))
        npt.assert_array_equal(out, matvec_transposed(W, d))
        assert macs == rows * cols


def test_sparse_matvec_empty_set():
    out, macs = sparse_matvec_transposed(np.ones((4, 3)), np.ones(4), np.zeros(0, dtype=np.int64))
    npt.assert_array_equal(out, np.zeros(3))
    assert macs == 0


def test_sparse_matvec_matches_zero_masked_oracle():
    rng = Prng(14)
    W = _rand(rng, 7, 5)
    d = _rand(rng, 7)
    active = np.array([2, 5])
    masked = d.copy()
    masked[[0, 1, 3, 4, 6]] = 0.0
    out, macs = sparse_matvec_transposed(W, d, active)
    npt.assert_array_equal(out, matvec_transposed(W, masked))
    assert macs == 2 * 5


def test_sparse_matvec_out_of_range_index():
    with pytest.raises(IndexError):
        sparse_matvec_transposed(np.ones((2, 2)), np.ones(2), np.array([2]))


# ---------------------------------------------------------------------------
# hadamard


def test_hadamard_trivials():
    npt.assert_array_equal(
        hadamard(np.array([1.0, 2.0, 3.0]), np.ones(3)), [1.0, 2.0, 3.0]
    )
    npt.assert_array_equal(hadamard(np.array([1.0, 2.0]), np.zeros(2)), [0.0, 0.0])


def test_hadamard_matches_element_loop():
    rng = Prng(15)
    a = _rand(rng, 9)
    b = _rand(rng, 9)
    expected = np.array([a[i] * b[i] for i in range(9)])
    npt.assert_array_equal(hadamard(a, b), expected)


def test_hadamard_length_mismatch():
    with pytest.raises(ValueError):
        hadamard(np.ones(2), np.ones(3))


# ---------------------------------------------------------------------------
# outer_accumulate_rows


def test_outer_accumulate_empty_set_is_noop():
    G = np.full((2, 3), 7.0)
    macs = outer_accumulate_rows(G, np.ones(2), np.ones(3), np.zeros(0, dtype=np.int64))
    npt.assert_array_equal(G, np.full((2, 3), 7.0))
    assert macs == 0


def test_outer_accumulate_full_rank_one():
    G = np.zeros((2, 2))
    macs = outer_accumulate_rows(
        G, np.array([1.0, 1.0]), np.array([2.0, 3.0]), np.arange(2)
    )
    npt.assert_array_equal(G, [[2.0, 3.0], [2.0, 3.0]])
    assert macs == 4


def test_outer_accumulate_matches_masked_dense_oracle():
    rng = Prng(16)
    d = _rand(rng, 6)
    a = _rand(rng, 4)
    active = np.array([1, 4])
    G = _rand(rng, 6, 4)
    expected = G.copy()
    d_masked = np.zeros_like(d)
    d_masked[active] = d[active]
    expected += np.outer(d_masked, a)
    macs = outer_accumulate_rows(G, d, a, active)
    npt.assert_array_equal(G, expected)
    assert macs == 2 * 4


def test_outer_accumulate_leaves_inactive_rows_bit_identical():
    rng = Prng(17)
    G = _rand(rng, 5, 3)
    before = G.copy()
    outer_accumulate_rows(G, _rand(rng, 5), _rand(rng, 3), np.array([0, 2]))
    npt.assert_array_equal(G[[1, 3, 4]], before[[1, 3, 4]])


def test_outer_accumulate_shape_error():
    with pytest.raises(ValueError):
        outer_accumulate_rows(np.zeros((2, 2)), np.ones(3), np.ones(2), np.arange(2))


# ---------------------------------------------------------------------------
# top_k_indices


def _topk_sort_oracle(v, k):
    order = sorted(range(len(v)), key=lambda i: (-abs(v[i]), i))
    return sorted(order[:k])


def test_top_k_magnitude_example():
    # top-2 of [1, 2, 3, -4] keeps the 3 and the -4.
    v = np.array([1.0, 2.0, 3.0, -4.0])
    npt.assert_array_equal(top_k_indices(v, 2), [2, 3])


def test_top_k_full_length_returns_all():
    npt.assert_array_equal(top_k_indices(np.array([5.0, -1.0, 0.0]), 3), [0, 1, 2])


def test_top_k_tie_prefers_lower_index():
    npt.assert_array_equal(top_k_indices(np.array([1.0, 1.0, 1.0]), 2), [0, 1])
    npt.assert_array_equal(top_k_indices(np.array([2.0, -2.0, 2.0]), 2), [0, 1])
    npt.assert_array_equal(top_k_indices(np.zeros(4), 3), [0, 1, 2])


def test_top_k_against_sort_oracle_random_and_ties():
    rng = Prng(18)
    for trial in range(1000):
        n = 1 + rng.next_u64() % 256
        if trial % 3 == 0:
            # Engineered ties: few distinct magnitudes, mixed signs.
            levels = np.array([0.0, 1.0, -1.0, 2.0, -2.0])
            v = levels[(rng.uniforms(n) * len(levels)).astype(int)]
        else:
            v = rng.gaussians(n)
        k = 1 + rng.next_u64() % n
        got = top_k_indices(v, int(k))
        assert got.tolist() == _topk_sort_oracle(v.tolist(), int(k))


def test_top_k_selection_boundary_property():
    rng = Prng(19)
    for _ in range(50):
        n = 2 + rng.next_u64() % 64
        v = rng.gaussians(n)
        k = 1 + rng.next_u64() % (n - 1)
        sel = top_k_indices(v, int(k))
        assert len(set(sel.tolist())) == k
        rest = np.setdiff1d(np.arange(n), sel)
        assert np.abs(v[sel]).min() >= np.abs(v[rest]).max() - 1e-15


def test_top_k_rejects_bad_k():
    v = np.ones(3)
    with pytest.raises(ValueError):
        top_k_indices(v, 0)
    with pytest.raises(ValueError):
        top_k_indices(v, 4)


# ---------------------------------------------------------------------------
# Prng


def test_prng_same_seed_same_stream():
    a = Prng(987654321)
    b = Prng(987654321)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_prng_bulk_matches_sequential():
    a = Prng(42)
    b = Prng(42)
    npt.assert_array_equal(a.uniforms(257), np.array([b.next_uniform() for _ in range(257)]))
    assert a.state == b.state
    npt.assert_array_equal(a.gaussians(64), np.array([b.next_gaussian() for _ in range(64)]))
    assert a.state == b.state


def test_prng_uniform_range_and_mean():
    u = Prng(7).uniforms(100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert 0.49 <= u.mean() <= 0.51


def test_prng_gaussian_variance():
    g = Prng(8).gaussians(100_000)
    assert 0.97 <= g.var() <= 1.03
    assert abs(g.mean()) < 0.02


def test_prng_permutation_is_permutation_and_deterministic():
    p1 = Prng(5).permutation(100)
    p2 = Prng(5).permutation(100)
    npt.assert_array_equal(p1, p2)
    npt.assert_array_equal(np.sort(p1), np.arange(100))
    assert not np.array_equal(Prng(6).permutation(100), p1)
