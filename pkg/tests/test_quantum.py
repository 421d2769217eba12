import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from qpolar.channels import bitflip, identity, phaseflip
from qpolar.errors import ContractError, InvalidStateError, NumericalError, UnsupportedInputError
from qpolar.quantum import (KrausSet, apply_kraus, apply_kraus_on, binary_entropy, check_density, ket,
                            partial_trace, projector, purify, random_kraus, random_unitary, spectrum,
                            tensor_product, von_neumann_entropy, X, Z)

H2_01 = 0.46899559358928122  # -0.1 log2 0.1 - 0.9 log2 0.9, evaluated with mpmath at 30 digits

probs = st.floats(0.0, 1.0)


def random_density(d, rng, rank=None):
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def test_entropy_examples():
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-15)
    assert von_neumann_entropy(np.diag([0.1, 0.9])) == pytest.approx(H2_01, abs=1e-14)
    assert binary_entropy(0.1) == pytest.approx(H2_01, abs=1e-14)


def test_entropy_rejects_non_hermitian():
    with pytest.raises(InvalidStateError):
        von_neumann_entropy(np.array([[0.5, 0.3], [0.0, 0.5]]))


def test_spectrum_clamps_small_negatives_and_rejects_large():
    assert spectrum(np.diag([1 + 1e-11, -1e-11])).min() == 0.0
    with pytest.raises(NumericalError):
        spectrum(np.diag([1.1, -0.1]))


def test_check_density():
    check_density(np.eye(3) / 3)
    with pytest.raises(InvalidStateError):
        check_density(np.diag([0.5, 0.6]))
    with pytest.raises(InvalidStateError):
        check_density(np.diag([1.5, -0.5]))


def test_tensor_product_examples():
    np.testing.assert_array_equal(tensor_product(np.diag([1, 0]), np.diag([1, 0])), np.diag([1, 0, 0, 0]))
    np.testing.assert_allclose(tensor_product(np.eye(2) / 2, np.eye(2) / 2), np.eye(4) / 4)
    q = 0.3
    np.testing.assert_allclose(tensor_product(np.diag([q, 1 - q]), np.diag([q, 1 - q])),
                               np.diag([q * q, q * (1 - q), (1 - q) * q, (1 - q) ** 2]), atol=1e-15)
    with pytest.raises(ContractError):
        tensor_product()


def test_partial_trace_examples():
    bell = (ket([0, 0]) + ket([1, 1])) / np.sqrt(2)
    np.testing.assert_allclose(partial_trace(projector(bell), [2, 2], [0]), np.eye(2) / 2, atol=1e-15)
    psi = purify(np.diag([0.3, 0.7]))
    np.testing.assert_allclose(partial_trace(projector(psi), [2, 2], [1]), np.diag([0.3, 0.7]), atol=1e-15)
    with pytest.raises(ContractError):
        partial_trace(np.eye(4) / 4, [2, 3], [0])
    with pytest.raises(ContractError):
        partial_trace(np.eye(4) / 4, [2, 2], [])


def test_partial_trace_keeps_original_order(rng):
    a, b, c = (random_density(d, rng) for d in (2, 3, 2))
    abc = tensor_product(a, b, c)
    np.testing.assert_allclose(partial_trace(abc, [2, 3, 2], [2, 0]), tensor_product(a, c), atol=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_partial_trace_of_product_returns_factor(seed, da, db):
    rng = np.random.default_rng(seed)
    a, b = random_density(da, rng), random_density(db, rng)
    np.testing.assert_allclose(partial_trace(tensor_product(a, b), [da, db], [0]), a, atol=1e-12)


def test_apply_kraus_examples():
    np.testing.assert_allclose(apply_kraus(bitflip(0.7), np.diag([1, 0])), np.diag([0.7, 0.3]), atol=1e-15)
    rho = random_density(2, np.random.default_rng(1))
    np.testing.assert_allclose(apply_kraus(identity(), rho), rho, atol=1e-15)
    a = 0.37
    np.testing.assert_allclose(apply_kraus(phaseflip(0.7, "z"), np.diag([a, 1 - a])), np.diag([a, 1 - a]),
                               atol=1e-15)
    with pytest.raises(ContractError):
        apply_kraus(bitflip(0.7), np.eye(3) / 3)


def test_kraus_completeness_enforced():
    with pytest.raises(ContractError):
        KrausSet(np.stack([np.eye(2), X]))
    with pytest.raises(ContractError):
        KrausSet(np.eye(2), input_basis=np.array([[1, 1], [0, 1]]))


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3), st.integers(1, 3), st.integers(1, 4))
def test_apply_kraus_preserves_trace_and_hermiticity(seed, d_in, d_out, n_ops):
    assume(d_out * n_ops >= d_in)
    rng = np.random.default_rng(seed)
    k = random_kraus(d_in, d_out, n_ops, rng)
    out = apply_kraus(k, random_density(d_in, rng))
    assert abs(np.trace(out) - 1) < 1e-10
    assert np.max(np.abs(out - out.conj().T)) < 1e-10


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_entropy_unitary_invariance(seed, d):
    rng = np.random.default_rng(seed)
    rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    U = random_unitary(d, rng)
    assert abs(von_neumann_entropy(U @ rho @ U.conj().T) - von_neumann_entropy(rho)) < 1e-9


def test_apply_kraus_on_matches_lifted_operators(rng):
    k = random_kraus(2, 2, 3, rng)
    rho = random_density(8, rng)
    lifted = [np.kron(np.kron(np.eye(2), E), np.eye(2)) for E in k.operators]
    expect = sum(F @ rho @ F.conj().T for F in lifted)
    np.testing.assert_allclose(apply_kraus_on(k, rho, [2, 2, 2], 1), expect, atol=1e-13)


def test_purify_examples():
    np.testing.assert_allclose(purify(np.diag([1, 0])), ket([0, 0]))
    np.testing.assert_allclose(purify(np.eye(2) / 2), (ket([0, 0]) + ket([1, 1])) / np.sqrt(2), atol=1e-15)
    q = 0.2
    np.testing.assert_allclose(purify(np.diag([q, 1 - q])),
                               np.sqrt(q) * ket([0, 0]) + np.sqrt(1 - q) * ket([1, 1]), atol=1e-15)
    with pytest.raises(UnsupportedInputError):
        purify(np.full((2, 2), 0.5))


@given(probs)
def test_purify_in_rotated_basis_recovers_state(q):
    basis = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    rho = basis @ np.diag([q, 1 - q]) @ basis.T
    psi = purify(rho, basis)
    for keep in (0, 1):
        np.testing.assert_allclose(partial_trace(projector(psi), [2, 2], [keep]), rho, atol=1e-12)


def test_phaseflip_x_basis_diagonal_state():
    k = phaseflip(0.9)
    np.testing.assert_allclose(k.diagonal_state([1, 0]), np.full((2, 2), 0.5), atol=1e-15)
    np.testing.assert_allclose(apply_kraus(k, k.diagonal_state([1, 0])),
                               [[0.5, 0.4], [0.4, 0.5]], atol=1e-15)
    np.testing.assert_allclose(Z @ Z, np.eye(2))
