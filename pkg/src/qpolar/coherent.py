"""Coherent information, entropy exchange, and the diagonal-input MSLCI sweep."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .btpm import Btpm, QqscCanonicalForm, channel_kraus, classify, extract_btpm, qqsc_canonical_form
from .errors import ContractError, NumericalError
from .quantum import (KrausSet, apply_kraus, apply_kraus_on, projector, purify, shannon_entropy,
                      von_neumann_entropy)

W_TOL = 1e-8
CROSS_CHECK_TOL = 1e-9
DEFAULT_GRID = 1001

Channel = Union[KrausSet, Btpm]


@dataclass(frozen=True)
class CoherentInfoResult:
    value: float
    output_entropy: float
    entropy_exchange: float


@dataclass(frozen=True)
class SweepResult:
    q_star: float
    i_star: float
    q: np.ndarray
    values: np.ndarray
    quasi_symmetric: bool

    @property
    def peak_at_half(self) -> bool:
        return self.q_star == 0.5

    @property
    def curve(self):
        return list(zip(self.q.tolist(), self.values.tolist()))


def as_kraus(channel: Channel) -> KrausSet:
    if isinstance(channel, KrausSet):
        return channel
    if isinstance(channel, Btpm):
        return channel_kraus(channel)
    raise ContractError(f"expected KrausSet or Btpm, got {type(channel).__name__}")


def exchange_matrix(k: KrausSet, rho) -> np.ndarray:
    """``W_ij = tr(E_i rho E_j^dag)``."""
    E = k.operators
    return np.einsum("iab,bc,jac->ij", E, np.asarray(rho, dtype=complex), E.conj())


def entropy_exchange(k: KrausSet, rho) -> float:
    """Entropy exchange ``S(W)`` in bits."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (k.input_dim, k.input_dim):
        raise ContractError(f"state has shape {rho.shape}, channel expects dim {k.input_dim}")
    W = exchange_matrix(k, rho)
    herm = np.max(np.abs(W - W.conj().T))
    tr = np.trace(W).real
    if herm >= W_TOL or abs(tr - 1.0) >= W_TOL:
        raise NumericalError(f"exchange matrix invalid: hermiticity {herm:.2e}, trace {tr!r}")
    return von_neumann_entropy(0.5 * (W + W.conj().T))


def entropy_exchange_purified(k: KrausSet, rho) -> float:
    """``S(RQ')`` from explicitly evolving a purification of ``rho``.

    ``rho`` must be diagonal in the channel's designated input basis.
    """
    d = k.input_dim
    psi = purify(rho, k.basis())
    joint = apply_kraus_on(k, projector(psi), (d, d), 0)
    return von_neumann_entropy(joint)


def coherent_information(channel: Channel, rho, cross_check: bool = False) -> CoherentInfoResult:
    """``I(rho, E) = S(E(rho)) - S_e``; may be negative.

    With ``cross_check=True`` the entropy exchange is also computed from the
    purified evolution and the two must agree within 1e-9.
    """
    k = as_kraus(channel)
    out = von_neumann_entropy(apply_kraus(k, rho))
    se = entropy_exchange(k, rho)
    if cross_check:
        se2 = entropy_exchange_purified(k, rho)
        if abs(se - se2) >= CROSS_CHECK_TOL:
            raise NumericalError(f"entropy exchange paths disagree: S(W)={se!r}, S(RQ')={se2!r}")
    return CoherentInfoResult(out - se, out, se)


def uniform_coherent_information(channel: Channel) -> float:
    """Coherent information at the maximally mixed input over the designated basis."""
    k = as_kraus(channel)
    d = k.input_dim
    if d & (d - 1):
        raise ContractError(f"input dimension {d} is not a power of two")
    return coherent_information(k, k.diagonal_state(np.full(d, 1.0 / d))).value


def qqsc_closed_form(form: QqscCanonicalForm, q: float) -> float:
    """``H(q p_k + (1-q) p_{perm^-1(k)}) - H(p_k)`` for input ``q|0><0| + (1-q)|1><1|``.

    The inverse permutation places the ``|1>`` weight on the right output
    level; for an involutive ``perm`` it is ``perm`` itself.
    """
    p = np.asarray(form.probs)
    inv = np.asarray(form.inverse_perm())
    return shannon_entropy(q * p + (1.0 - q) * p[inv]) - shannon_entropy(p)


def _qqsc_status(channel: Channel) -> bool:
    b = channel
    if isinstance(channel, KrausSet):
        b = extract_btpm(channel)
        if not b:
            return False
    return b.input_dim == 2 and classify(b).is_quasi_symmetric


def mslci_sweep(channel: Channel, grid_size: int = DEFAULT_GRID) -> SweepResult:
    """Coherent information over ``q|0><0| + (1-q)|1><1|`` on a uniform grid of [0, 1].

    Ties for the maximum (within 1e-12) resolve to the grid point nearest
    ``q = 1/2``. For a quasi-symmetric channel the maximum should sit at
    ``q = 1/2``; the result flags this (``quasi_symmetric`` and
    ``peak_at_half``) rather than raising, so callers decide how to react.
    """
    if grid_size < 3 or grid_size % 2 == 0:
        raise ContractError("grid_size must be odd and at least 3")
    k = as_kraus(channel)
    if k.input_dim != 2:
        raise ContractError("sweep needs a two-dimensional input")
    q = np.arange(grid_size) / (grid_size - 1)
    vals = np.array([coherent_information(k, k.diagonal_state([x, 1.0 - x])).value for x in q])
    best = vals.max()
    ties = np.flatnonzero(vals >= best - 1e-12)
    j = ties[np.argmin(np.abs(q[ties] - 0.5))]
    quasi = _qqsc_status(channel)
    return SweepResult(float(q[j]), float(vals[j]), q, vals, quasi)


def closed_form_curve(b: Btpm, q) -> np.ndarray:
    """Closed-form coherent-information curve of a two-input QQSC."""
    form = qqsc_canonical_form(b)
    return np.array([qqsc_closed_form(form, x) for x in np.atleast_1d(q)])
