import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qpolar.btpm import Btpm, SymmetryTag, classify
from qpolar.coherent import uniform_coherent_information
from qpolar.errors import ClassificationError, ContractError, ResourceLimitError
from qpolar.polarize import (ClassicalBinaryChannel, bit_reversal, classical_combined_tpm, combined_channel_btpm,
                             combined_symmetry_violation, coordinate_btpm_from_classical, coordinate_channel,
                             coordinate_channels, coordinate_mslci, encode, generator_matrix, polar_step_minus,
                             polar_step_plus, polarization_report, resolve_mode, shannon_capacity_uniform)

# frozen from mpmath at 30 digits: 1 - H2(0.1), 1 - H2(0.18), and 2(1 - H2(0.1)) - (1 - H2(0.18))
C_BSC01 = 0.53100440641071878
I_MINUS = 0.31992295427172016
I_PLUS = 0.74208585854971740

BSC = ClassicalBinaryChannel.bsc(0.1)
BF9 = Btpm([[0.9, 0.1], [0.1, 0.9]])
PERFECT = ClassicalBinaryChannel([[1.0, 0.0], [0.0, 1.0]])
USELESS = ClassicalBinaryChannel([[0.3, 0.3], [0.7, 0.7]])


def gf2_rank(M):
    M = M.copy() % 2
    r = 0
    for c in range(M.shape[1]):
        piv = np.flatnonzero(M[r:, c])
        if not len(piv):
            continue
        p = r + piv[0]
        M[[r, p]] = M[[p, r]]
        for j in range(M.shape[0]):
            if j != r and M[j, c]:
                M[j] ^= M[r]
        r += 1
        if r == M.shape[0]:
            break
    return r


def kernel_power(N):
    F = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    G = np.ones((1, 1), dtype=np.uint8)
    while G.shape[0] < N:
        G = np.kron(G, F)
    return G


# generator matrix and encode

def test_generator_examples():
    np.testing.assert_array_equal(generator_matrix(1).dense(), [[1]])
    np.testing.assert_array_equal(generator_matrix(2).dense(), [[1, 0], [1, 1]])
    np.testing.assert_array_equal(generator_matrix(4).dense(),
                                  [[1, 0, 0, 0], [1, 0, 1, 0], [1, 1, 0, 0], [1, 1, 1, 1]])
    for bad in (0, 3, 6, 12):
        with pytest.raises(ContractError):
            generator_matrix(bad)


@pytest.mark.parametrize("N", [1, 2, 4, 8, 16, 64, 128])
def test_generator_is_bit_reversed_kernel_power(N):
    G = generator_matrix(N).dense()
    np.testing.assert_array_equal(G, kernel_power(N)[bit_reversal(N)])
    assert G.shape == (N, N)
    assert gf2_rank(G.astype(np.uint8)) == N
    np.testing.assert_array_equal((G.astype(int) @ G) % 2, np.eye(N, dtype=int))


def test_encode_examples():
    np.testing.assert_array_equal(encode([0, 0, 0, 0]), [0, 0, 0, 0])
    np.testing.assert_array_equal(encode([1, 0]), [1, 0])
    np.testing.assert_array_equal(encode([0, 1]), [1, 1])
    with pytest.raises(ContractError):
        encode([1, 0, 1])


@given(st.integers(0, 9), st.data())
def test_encode_matches_dense_product(n, data):
    N = 2 ** n
    u = np.array(data.draw(st.lists(st.integers(0, 1), min_size=N, max_size=N)), dtype=np.uint8)
    G = generator_matrix(N)
    np.testing.assert_array_equal(G.encode(u), (u.astype(int) @ G.dense()) % 2)
    if N <= 16:
        idx = int("".join(map(str, u)), 2)
        out = int("".join(map(str, G.encode(u))), 2)
        assert G.encode_index(idx) == out


# classical recursion

def test_bsc_capacity():
    assert shannon_capacity_uniform(BSC) == pytest.approx(C_BSC01, abs=1e-14)
    assert shannon_capacity_uniform(PERFECT) == 1.0
    assert shannon_capacity_uniform(USELESS) == 0.0


def test_polar_steps_bsc():
    m, p = polar_step_minus(BSC), polar_step_plus(BSC)
    assert shannon_capacity_uniform(m) == pytest.approx(I_MINUS, abs=1e-12)
    assert shannon_capacity_uniform(p) == pytest.approx(I_PLUS, abs=1e-12)
    assert shannon_capacity_uniform(m) + shannon_capacity_uniform(p) == pytest.approx(2 * C_BSC01, abs=1e-10)
    # before merging: M^2 and 2M^2 symbols
    assert polar_step_minus(BSC, "merged").size <= 4
    assert polar_step_plus(BSC, "merged").size <= 8


def test_polar_steps_extremes():
    for w, c in ((PERFECT, 1.0), (USELESS, 0.0)):
        assert shannon_capacity_uniform(polar_step_minus(w)) == pytest.approx(c, abs=1e-14)
        assert shannon_capacity_uniform(polar_step_plus(w)) == pytest.approx(c, abs=1e-14)


def binary_channels():
    @st.composite
    def build(draw):
        m = draw(st.integers(2, 6))
        cols = [draw(st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m)) for _ in range(2)]
        P = np.array(cols).T
        return ClassicalBinaryChannel(P / P.sum(axis=0))
    return build()


@given(binary_channels())
def test_extremality_and_conservation_per_step(w):
    c = shannon_capacity_uniform(w)
    cm = shannon_capacity_uniform(polar_step_minus(w))
    cp = shannon_capacity_uniform(polar_step_plus(w))
    assert cm <= c + 1e-10 and c <= cp + 1e-10
    assert abs(cm + cp - 2 * c) < 1e-10


def direct_coordinate_capacity(w, N, i):
    # W_N^(i)(y, u_1^(i-1) | u_i) = 2^-(N-1) sum over u_(i+1)^N of W_N(y | u), by brute force
    G = generator_matrix(N)
    joint = {}
    for u in itertools.product((0, 1), repeat=N):
        x = G.encode(u)
        for y in itertools.product(range(w.size), repeat=N):
            pr = np.prod([w.probs[y[j], x[j]] for j in range(N)]) / 2 ** (N - 1)
            key = (y, u[: i - 1])
            joint.setdefault(key, [0.0, 0.0])[u[i - 1]] += pr
    return shannon_capacity_uniform(ClassicalBinaryChannel(np.array(list(joint.values()))))


@pytest.mark.parametrize("N", [2, 4])
def test_index_bit_order_matches_direct_enumeration(N):
    w = ClassicalBinaryChannel([[0.7, 0.1], [0.2, 0.3], [0.1, 0.6]])
    for i in range(1, N + 1):
        assert shannon_capacity_uniform(coordinate_channel(w, N, i, "exact")) == \
            pytest.approx(direct_coordinate_capacity(w, N, i), abs=1e-12)


def test_coordinate_channel_examples():
    np.testing.assert_array_equal(coordinate_channel(BSC, 1, 1).probs, BSC.probs)
    np.testing.assert_allclose(coordinate_channel(BSC, 2, 1).probs, polar_step_minus(BSC).probs)
    np.testing.assert_allclose(coordinate_channel(BSC, 2, 2).probs, polar_step_plus(BSC).probs)
    total = sum(shannon_capacity_uniform(coordinate_channel(BSC, 4, i)) for i in range(1, 5))
    assert total == pytest.approx(4 * C_BSC01, abs=1e-8)
    with pytest.raises(ContractError):
        coordinate_channel(BSC, 4, 5)
    with pytest.raises(ContractError):
        coordinate_channel(BSC, 4, 1, mode="fancy")


def test_resolve_mode():
    assert resolve_mode(16) == "exact"
    assert resolve_mode(32) == "quantized"
    assert resolve_mode(32, "merged") == "merged"


def test_coordinate_channels_matches_single_and_threads():
    single = [shannon_capacity_uniform(coordinate_channel(BSC, 8, i, "exact")) for i in range(1, 9)]
    tree = [shannon_capacity_uniform(c) for c in coordinate_channels(BSC, 8, "exact")]
    threaded = [shannon_capacity_uniform(c) for c in coordinate_channels(BSC, 8, "exact", threads=3)]
    np.testing.assert_allclose(tree, single, atol=1e-14)
    assert threaded == tree


def test_merged_mode_is_lossless():
    exact = [shannon_capacity_uniform(c) for c in coordinate_channels(BSC, 8, "exact")]
    merged = coordinate_channels(BSC, 8, "merged")
    np.testing.assert_allclose([shannon_capacity_uniform(c) for c in merged], exact, atol=1e-12)
    assert max(c.size for c in merged) <= max(c.size for c in coordinate_channels(BSC, 8, "exact"))


def test_quantized_mode_is_a_lower_bound():
    exact = np.array([shannon_capacity_uniform(c) for c in coordinate_channels(BSC, 16, "exact")])
    chans = coordinate_channels(BSC, 16, "quantized", mu=8)
    quant = np.array([shannon_capacity_uniform(c) for c in chans])
    assert max(c.size for c in chans) <= 8
    assert np.all(quant <= exact + 1e-12)
    assert np.max(exact - quant) < 0.02


# combined and coordinate BTPMs

def test_combined_btpm_examples():
    assert combined_channel_btpm(BF9, 1).probs.tolist() == BF9.probs.tolist()
    P = combined_channel_btpm(BF9, 2)
    assert P.probs[0, 0] == pytest.approx(0.81, abs=1e-15)
    assert P.probs[0, 3] == pytest.approx(0.01, abs=1e-15)
    assert classify(P).tag is SymmetryTag.FULLY_SYMMETRIC


@pytest.mark.parametrize("N", [2, 4])
def test_combined_btpm_symmetry_and_classical_agreement(N):
    P = combined_channel_btpm(BF9, N).probs
    assert combined_symmetry_violation(P, N) < 1e-12
    W = classical_combined_tpm(ClassicalBinaryChannel.from_btpm(BF9), N)
    assert np.max(np.abs(P - W)) < 1e-12


def test_combined_btpm_errors():
    with pytest.raises(ResourceLimitError):
        combined_channel_btpm(BF9, 16)
    with pytest.raises(ClassificationError):
        combined_channel_btpm(Btpm([[0.9, 0.1], [0.05, 0.95]]), 2)
    with pytest.raises(ClassificationError):
        combined_channel_btpm(Btpm([[0.5, 0.3, 0.2], [0.3, 0.2, 0.5]]), 2)


def test_symmetry_violation_detects_perturbation():
    T = np.kron(np.array([[0.9, 0.1], [0.05, 0.95]]), np.array([[0.9, 0.1], [0.05, 0.95]]))
    G = generator_matrix(2)
    P = T[[G.encode_index(q) for q in range(4)]]
    assert combined_symmetry_violation(P, 2) >= 0.01


def test_coordinate_btpm_examples():
    w1 = coordinate_btpm_from_classical(BF9, 1, 1)
    np.testing.assert_allclose(w1.probs, BF9.probs.T)
    w = coordinate_btpm_from_classical(BF9, 2, 1)
    np.testing.assert_allclose(w.probs.sum(axis=0), [1, 1], atol=1e-12)
    assert shannon_capacity_uniform(w) == pytest.approx(shannon_capacity_uniform(polar_step_minus(BSC)), abs=1e-12)
    np.testing.assert_allclose(sorted(map(tuple, w.merged().probs)), sorted(map(tuple, polar_step_minus(BSC).merged().probs)), atol=1e-12)
    w2 = coordinate_btpm_from_classical(BF9, 2, 2)
    ci = uniform_coherent_information(w2.to_btpm())
    assert ci == pytest.approx(shannon_capacity_uniform(polar_step_plus(BSC)), abs=1e-12)


@pytest.mark.parametrize("N", [2, 4, 8])
def test_coordinate_btpm_rows_are_permutations(N):
    for i in range(1, N + 1):
        P = coordinate_btpm_from_classical(BF9, N, i).probs
        np.testing.assert_allclose(P.sum(axis=0), [1, 1], atol=1e-10)
        np.testing.assert_allclose(np.sort(P[:, 0]), np.sort(P[:, 1]), atol=1e-10)


@pytest.mark.parametrize("N", [2, 4, 8])
def test_coordinate_btpm_capacity_matches_recursion(N):
    for i in range(1, N + 1):
        assert shannon_capacity_uniform(coordinate_btpm_from_classical(BF9, N, i)) == \
            pytest.approx(coordinate_mslci(BF9, N, i, mode="exact"), abs=1e-12)


def test_coordinate_mslci_examples():
    assert coordinate_mslci(BF9, 1, 1) == pytest.approx(uniform_coherent_information(BF9), abs=1e-12)
    assert coordinate_mslci(BF9, 2, 1) + coordinate_mslci(BF9, 2, 2) == pytest.approx(2 * C_BSC01, abs=1e-10)
    vals = [coordinate_mslci(BF9, 4, i) for i in range(1, 5)]
    assert min(vals) < C_BSC01 < max(vals)
    with pytest.raises(ClassificationError):
        coordinate_mslci(Btpm([[1.0, 0.0], [0.3, 0.7]]), 2, 1)


# report

def test_report_n2():
    r = polarization_report(BF9, 2)
    a, b = r.values
    assert a < C_BSC01 < b
    assert r.construction_mode == "exact"
    assert r.invariant_failures() == []
    d = r.to_dict()
    assert d["per_index"] == [[1, a], [2, b]]
    assert set(d["tolerances"]) >= {"merge_decimals", "conservation", "backend"}


def test_report_identity_all_one():
    r = polarization_report(Btpm(np.eye(2)), 8)
    assert all(v == 1.0 for v in r.values)


@pytest.mark.parametrize("p", [0.6, 0.75, 0.9, 0.97])
def test_conservation_exact(p):
    b = Btpm([[p, 1 - p], [1 - p, p]])
    for N in (2, 4, 8, 16):
        r = polarization_report(b, N, mode="exact")
        assert abs(r.sum_deviation) < 1e-8
        assert r.values.min() >= -1e-9 and r.values.max() <= 1 + 1e-9


def test_variance_nondecreasing():
    var = [np.var(polarization_report(BF9, N, mode="exact").values) for N in (2, 4, 8, 16)]
    assert all(b >= a for a, b in zip(var, var[1:]))


def test_report_quantized_label_and_failures():
    r = polarization_report(BF9, 32, mu=16)
    assert r.construction_mode == "quantized(16)"
    assert r.tolerances["prebin_bins"] == 128
    assert r.invariant_failures() == []
    r.per_index[0] = (1, 1.5)
    assert r.invariant_failures()


def test_report_refuses_non_qsc():
    with pytest.raises(ClassificationError):
        polarization_report(Btpm([[0.9, 0.1], [0.05, 0.95]]), 4)
