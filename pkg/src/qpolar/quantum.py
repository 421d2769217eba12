"""Density-operator primitives: entropy, tensor products, partial trace, Kraus maps.

Density operators are plain complex ``ndarray`` objects of shape ``(d, d)``.
Multi-qubit systems use big-endian ordering: subsystem 0 is the most
significant tensor factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError, InvalidStateError, NumericalError, UnsupportedInputError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_CLAMP_TOL = 1e-10
EIG_RANGE_TOL = 1e-8
COMPLETENESS_TOL = 1e-10
PURIFY_OFFDIAG_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class KrausSet:
    """A CPTP map given by its operator-sum elements.

    Parameters
    ----------
    operators : ndarray, shape (K, d_out, d_in)
        Kraus operators ``E_k``. Completeness ``sum_k E_k^dag E_k = I`` is
        checked on construction.
    input_basis : ndarray, shape (d_in, d_in), optional
        Orthonormal basis (as columns) that diagonal input ensembles are
        drawn from. Defaults to the computational basis.
    """

    operators: np.ndarray
    input_basis: Optional[np.ndarray] = None

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] == 0:
            raise ContractError(f"Kraus operators must have shape (K, d_out, d_in), got {ops.shape}")
        ops = ops.copy()
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        d_in = ops.shape[2]
        gram = np.einsum("kji,kjl->il", ops.conj(), ops)
        err = np.max(np.abs(gram - np.eye(d_in)))
        if err >= COMPLETENESS_TOL:
            raise ContractError(f"Kraus operators are not complete: max|sum E^dag E - I| = {err:.3e}")
        if self.input_basis is not None:
            basis = np.asarray(self.input_basis, dtype=complex)
            if basis.shape != (d_in, d_in):
                raise ContractError(f"input basis must be {d_in}x{d_in}, got {basis.shape}")
            if np.max(np.abs(basis.conj().T @ basis - np.eye(d_in))) >= 1e-10:
                raise ContractError("input basis is not orthonormal")
            basis = basis.copy()
            basis.setflags(write=False)
            object.__setattr__(self, "input_basis", basis)

    @property
    def input_dim(self) -> int:
        return self.operators.shape[2]

    @property
    def output_dim(self) -> int:
        return self.operators.shape[1]

    def __len__(self):
        return self.operators.shape[0]

    def basis(self) -> np.ndarray:
        """Designated input basis as columns (identity when unset)."""
        if self.input_basis is None:
            return np.eye(self.input_dim, dtype=complex)
        return np.array(self.input_basis)

    def diagonal_state(self, weights) -> np.ndarray:
        """``sum_i w_i |b_i><b_i|`` over the designated input basis."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.input_dim,):
            raise ContractError(f"need {self.input_dim} weights, got {w.shape}")
        b = self.basis()
        return (b * w) @ b.conj().T


def check_density(rho, tol: float = TRACE_TOL) -> np.ndarray:
    """Validate ``rho`` against the density-operator invariants and return it as an array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
        raise InvalidStateError(f"density operator must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm >= max(tol, HERMITIAN_TOL):
        raise InvalidStateError(f"not Hermitian: max|rho - rho^dag| = {herm:.3e}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) >= tol:
        raise InvalidStateError(f"trace is {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -max(tol, EIG_CLAMP_TOL):
        raise InvalidStateError(f"negative eigenvalue {lo:.3e}")
    return rho


def shannon_entropy(p) -> float:
    """Shannon entropy in bits with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def binary_entropy(x: float) -> float:
    return shannon_entropy([x, 1.0 - x])


def spectrum(rho) -> np.ndarray:
    """Eigenvalues of a density operator, clamped into [0, 1].

    Raises
    ------
    InvalidStateError
        If ``rho`` is not Hermitian within tolerance.
    NumericalError
        If an eigenvalue lies outside ``[-1e-8, 1 + 1e-8]``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density operator must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm >= HERMITIAN_TOL:
        raise InvalidStateError(f"not Hermitian: max|rho - rho^dag| = {herm:.3e}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam.min() < -EIG_RANGE_TOL or lam.max() > 1.0 + EIG_RANGE_TOL:
        raise NumericalError(f"eigenvalues outside [0, 1]: [{lam.min():.3e}, {lam.max():.3e}]")
    return np.clip(lam, 0.0, 1.0)


def von_neumann_entropy(rho) -> float:
    """Von Neumann entropy ``-tr(rho log2 rho)`` in bits."""
    return shannon_entropy(spectrum(rho))


def tensor_product(*factors) -> np.ndarray:
    """Kronecker product of the given operators (or state vectors), left to right."""
    if not factors:
        raise ContractError("tensor_product needs at least one factor")
    return reduce(np.kron, (np.asarray(f, dtype=complex) for f in factors))


def _check_dims(dim: int, dims: Sequence[int]) -> tuple:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims) or int(np.prod(dims)) != dim:
        raise ContractError(f"subsystem dims {dims} do not multiply to {dim}")
    return dims


def partial_trace(rho, dims: Sequence[int], keep) -> np.ndarray:
    """Reduce ``rho`` onto the subsystems in ``keep``, preserving their original order."""
    rho = np.asarray(rho, dtype=complex)
    dims = _check_dims(rho.shape[0], dims)
    keep = sorted({int(k) for k in keep})
    if not keep:
        raise ContractError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ContractError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    drop = [k for k in range(n) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep]))
    dd = int(np.prod([dims[k] for k in drop])) if drop else 1
    t = rho.reshape(dims + dims)
    t = t.transpose(keep + drop + [n + k for k in keep] + [n + k for k in drop])
    t = t.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def apply_kraus(k: KrausSet, rho) -> np.ndarray:
    """``sum_k E_k rho E_k^dag``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (k.input_dim, k.input_dim):
        raise ContractError(f"state has shape {rho.shape}, channel expects dim {k.input_dim}")
    E = k.operators
    return np.einsum("kij,jl,kml->im", E, rho, E.conj())


def apply_kraus_on(k: KrausSet, rho, dims: Sequence[int], target: int) -> np.ndarray:
    """Apply a local channel to subsystem ``target`` of a multipartite state.

    Only the single-subsystem operators are used; the identity on the other
    factors is implicit, so no ``K**n`` product operators are formed.
    """
    rho = np.asarray(rho, dtype=complex)
    dims = _check_dims(rho.shape[0], dims)
    if not 0 <= target < len(dims):
        raise ContractError(f"target {target} out of range")
    if dims[target] != k.input_dim:
        raise ContractError(f"subsystem {target} has dim {dims[target]}, channel expects {k.input_dim}")
    n = len(dims)
    out_dims = list(dims)
    out_dims[target] = k.output_dim
    t = rho.reshape(dims + dims)
    E = k.operators
    # contract E on the ket axis and conj(E) on the bra axis of the target
    t = np.tensordot(E, t, axes=([2], [target]))  # (K, out, rest...)
    t = np.moveaxis(t, 1, target + 1)  # (K, ...ket with out at target..., bra...)
    t = np.tensordot(t, E.conj(), axes=([n + 1 + target], [2]))  # (K, ..., K', out')
    t = np.einsum("k...kj->...j", t)  # sum over matching Kraus index
    t = np.moveaxis(t, -1, n + target)
    d = int(np.prod(out_dims))
    return t.reshape(d, d)


def purify(rho, basis=None) -> np.ndarray:
    """Purify a diagonal ensemble as ``sum_i sqrt(p_i) |i>|i>``.

    Parameters
    ----------
    rho : array_like
        State that is diagonal in ``basis``.
    basis : array_like, optional
        Orthonormal basis as columns; computational basis by default. The
        reference copy uses the same basis.

    Returns
    -------
    ndarray, shape (d*d,)
        State vector on system (x) reference.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    b = np.eye(d, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    r = b.conj().T @ rho @ b
    off = np.max(np.abs(r - np.diag(np.diag(r)))) if d > 1 else 0.0
    if off >= PURIFY_OFFDIAG_TOL:
        raise UnsupportedInputError(f"state is not diagonal in the given basis (off-diagonal {off:.3e})")
    p = np.clip(np.diag(r).real, 0.0, None)
    psi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        if p[i] > 0:
            psi += np.sqrt(p[i]) * np.kron(b[:, i], b[:, i])
    return psi


def ket(bits, dim: int = 2) -> np.ndarray:
    """Computational basis vector for a sequence of digits (big-endian)."""
    idx = 0
    for b in bits:
        idx = idx * dim + int(b)
    v = np.zeros(dim ** len(bits), dtype=complex)
    v[idx] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus(d_in: int, d_out: int, n_ops: int, rng: np.random.Generator) -> KrausSet:
    """Random channel from a random isometry ``d_in -> d_out * n_ops``."""
    if d_out * n_ops < d_in:
        raise ContractError("need d_out * n_ops >= d_in for an isometry")
    u = random_unitary(d_out * n_ops, rng)[:, :d_in]
    return KrausSet(u.reshape(n_ops, d_out, d_in))
