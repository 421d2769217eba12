"""Basis transition probability matrices and the symmetry classes built on them."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ClassificationError, ContractError, NumericalDegeneracyError
from .quantum import KrausSet, apply_kraus, projector

ROW_SUM_TOL = 1e-10
COMMUTATOR_TOL = 1e-9
DEGENERACY_GAP = 1e-8
DIAGONAL_TOL = 1e-9
MULTISET_TOL = 1e-10
MATCH_DECIMALS = 12


@dataclass(frozen=True, eq=False)
class Btpm:
    """Row-stochastic matrix ``A[i, k] = Pr(|k'> | |i>)`` with labeled bases.

    ``input_basis``/``output_basis`` hold the basis vectors as columns when
    they are known (e.g. after extraction from a Kraus set); ``None`` means
    the computational basis.
    """

    probs: np.ndarray
    input_labels: tuple = ()
    output_labels: tuple = ()
    input_basis: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    output_basis: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        A = np.array(self.probs, dtype=float)
        if A.ndim != 2 or min(A.shape) < 1:
            raise ContractError(f"BTPM must be a non-empty 2-D matrix, got shape {A.shape}")
        if np.any(A < -1e-12) or np.any(A > 1 + 1e-12):
            raise ContractError("BTPM entries must lie in [0, 1]")
        sums = A.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) >= ROW_SUM_TOL:
            raise ContractError(f"BTPM rows must sum to 1 (got {sums})")
        A = np.clip(A, 0.0, 1.0)
        A.setflags(write=False)
        object.__setattr__(self, "probs", A)
        n, m = A.shape
        if not self.input_labels:
            object.__setattr__(self, "input_labels", tuple(_default_labels(n)))
        if not self.output_labels:
            object.__setattr__(self, "output_labels", tuple(label + "'" for label in _default_labels(m)))
        if len(self.input_labels) != n or len(self.output_labels) != m:
            raise ContractError("label counts must match the BTPM shape")

    @property
    def input_dim(self) -> int:
        return self.probs.shape[0]

    @property
    def output_dim(self) -> int:
        return self.probs.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Btpm):
            return NotImplemented
        return (self.input_labels == other.input_labels and self.output_labels == other.output_labels
                and np.array_equal(self.probs, other.probs))

    __hash__ = None

    def canonical(self) -> "Btpm":
        """Columns reordered lexicographically descending by ``(A[0,k], A[1,k], ...)``."""
        order = _lex_desc_order(self.probs)
        ob = None if self.output_basis is None else self.output_basis[:, order]
        return Btpm(self.probs[:, order], self.input_labels,
                    tuple(self.output_labels[k] for k in order), self.input_basis, ob)

    def to_dict(self) -> dict:
        return {"probs": self.probs.tolist(), "input_labels": list(self.input_labels),
                "output_labels": list(self.output_labels)}


def _default_labels(n):
    width = max(1, int(np.ceil(np.log2(n)))) if n > 1 else 1
    if n == 2 ** width:
        return [format(i, f"0{width}b") for i in range(n)]
    return [str(i) for i in range(n)]


def _lex_desc_order(A):
    # np.lexsort sorts by the last key first; row 0 must be primary
    return np.lexsort(tuple(-np.round(A[i], MATCH_DECIMALS) for i in reversed(range(A.shape[0]))))


@dataclass(frozen=True)
class NoBtpm:
    """Verdict that the basis images do not commute, with the evidence."""

    max_commutator: float
    pair: tuple

    def __bool__(self):
        return False


class SymmetryTag(str, enum.Enum):
    FULLY_SYMMETRIC = "FullySymmetric"
    QUASI_SYMMETRIC = "QuasiSymmetric"
    INPUT_SYMMETRIC_ONLY = "InputSymmetricOnly"
    ASYMMETRIC = "Asymmetric"


@dataclass(frozen=True)
class SymmetryClass:
    tag: SymmetryTag
    partition: tuple = ()

    @property
    def is_quasi_symmetric(self) -> bool:
        """True for QQSCs, which include the fully symmetric channels."""
        return self.tag in (SymmetryTag.FULLY_SYMMETRIC, SymmetryTag.QUASI_SYMMETRIC)


@dataclass(frozen=True)
class QqscCanonicalForm:
    """Operator elements ``E_k|0> = sqrt(p_k)|k'>``, ``E_k|1> = sqrt(p_k)|perm[k]'>``."""

    probs: tuple
    perm: tuple

    def __post_init__(self):
        if abs(sum(self.probs) - 1.0) >= ROW_SUM_TOL:
            raise ContractError("canonical probabilities must sum to 1")
        if sorted(self.perm) != list(range(len(self.probs))):
            raise ContractError(f"{self.perm} is not a permutation")

    @property
    def involutive(self) -> bool:
        return all(self.perm[self.perm[k]] == k for k in range(len(self.perm)))

    def inverse_perm(self) -> tuple:
        inv = [0] * len(self.perm)
        for k, j in enumerate(self.perm):
            inv[j] = k
        return tuple(inv)

    def _fixed_phases(self):
        """Phases for ``E_k|1>`` on fixed points of ``perm`` that cancel their weight.

        Completeness needs ``sum_{perm[k]=k} p_k e^{i theta_k} = 0``. The fixed
        weights are dealt into three groups (largest first, lightest group
        next) and the group sums closed into a triangle. Returns ``None`` when
        no such phases exist.
        """
        fixed = [k for k in range(len(self.perm)) if self.perm[k] == k and self.probs[k] > 0]
        phases = {}
        if not fixed:
            return phases
        groups = [[], [], []]
        sums = [0.0, 0.0, 0.0]
        for k in sorted(fixed, key=lambda k: -self.probs[k]):
            g = int(np.argmin(sums))
            groups[g].append(k)
            sums[g] += self.probs[k]
        a, b, c = sums
        if a <= 0 or b <= 0:
            return None
        cos_c = np.clip((a * a + b * b - c * c) / (2 * a * b), -1.0, 1.0)
        tb = np.pi - np.arccos(cos_c)
        tc = np.angle(-(a + b * np.exp(1j * tb))) if c > 0 else 0.0
        if abs(a + b * np.exp(1j * tb) + c * np.exp(1j * tc)) >= ROW_SUM_TOL:
            return None
        for g, theta in zip(groups, (0.0, tb, tc)):
            for k in g:
                phases[k] = np.exp(1j * theta)
        return phases

    @property
    def realizable(self) -> bool:
        """Whether operators of exactly this shape can be complete."""
        return self._fixed_phases() is not None

    def kraus(self, input_basis=None, output_basis=None) -> KrausSet:
        """Kraus set realizing this canonical form.

        Unlike :func:`kraus_from_btpm`, this reproduces the coherent action of
        the channel (bit flip maps to ``{sqrt(p) I, sqrt(1-p) X}``). Fixed
        points of ``perm`` carry phases on ``E_k|1>`` so the set is complete;
        when that is impossible the fixed points are split into separate
        ``|k'><0|`` and ``|k'><1|`` operators.
        """
        m = len(self.probs)
        phases = self._fixed_phases()
        split = []
        if phases is None:
            split = [k for k in range(m) if self.perm[k] == k and self.probs[k] > 0]
            phases = {}
        ops = np.zeros((m + len(split), m, 2), dtype=complex)
        for k, pk in enumerate(self.probs):
            s = np.sqrt(pk)
            ops[k, k, 0] = s
            if k in split:
                ops[m + split.index(k), k, 1] = s
            else:
                ops[k, self.perm[k], 1] = s * phases.get(k, 1.0)
        if output_basis is not None:
            ops = np.einsum("ab,kbi->kai", np.asarray(output_basis, dtype=complex), ops)
        if input_basis is not None:
            ops = np.einsum("kai,ji->kaj", ops, np.asarray(input_basis, dtype=complex).conj())
        return KrausSet(ops, input_basis=input_basis)


def _orthonormal(basis, dim):
    b = np.eye(dim, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    if b.shape != (dim, dim) or np.max(np.abs(b.conj().T @ b - np.eye(dim))) >= 1e-10:
        raise ContractError("input basis must be a square orthonormal matrix (columns)")
    return b


def _clusters(values, gap):
    """Split sorted eigenvalue indices wherever consecutive values differ by >= gap."""
    groups, start = [], 0
    for j in range(1, len(values) + 1):
        if j == len(values) or values[j] - values[j - 1] >= gap:
            groups.append(list(range(start, j)))
            start = j
    return groups


def _simultaneous_eigenbasis(mats, rng):
    dim = mats[0].shape[0]
    w = rng.uniform(0.5, 1.5, size=len(mats))
    combo = sum(wi * m for wi, m in zip(w, mats))
    vals, vecs = np.linalg.eigh(0.5 * (combo + combo.conj().T))
    blocks = [b for b in _clusters(vals, DEGENERACY_GAP)]
    # refine degenerate blocks against each sigma in turn
    for m in mats:
        refined = []
        for blk in blocks:
            if len(blk) == 1:
                refined.append(blk)
                continue
            V = vecs[:, blk]
            sub = V.conj().T @ m @ V
            sv, su = np.linalg.eigh(0.5 * (sub + sub.conj().T))
            vecs[:, blk] = V @ su
            refined.extend([[blk[i] for i in c] for c in _clusters(sv, DEGENERACY_GAP)])
        blocks = refined
    worst = 0.0
    for m in mats:
        d = vecs.conj().T @ m @ vecs
        worst = max(worst, float(np.max(np.abs(d - np.diag(np.diag(d))))) if dim > 1 else 0.0)
    if worst >= DIAGONAL_TOL:
        raise NumericalDegeneracyError(
            f"simultaneous diagonalization left off-diagonal residue {worst:.3e}",
            {"residual": worst, "blocks": [len(b) for b in blocks], "eigenvalues": vals.tolist()})
    return vecs


def extract_btpm(k: KrausSet, input_basis=None, seed: int = 42):
    """Find the BTPM of a channel in the given input basis.

    Computes ``sigma_i = E(|i><i|)`` for each input basis vector. When all
    pairs commute (max-norm below 1e-9) they are simultaneously diagonalized
    and the eigenvalue rows form the BTPM; otherwise a :class:`NoBtpm` verdict
    carrying the largest commutator norm is returned.

    Parameters
    ----------
    k : KrausSet
    input_basis : array_like, optional
        Basis vectors as columns; defaults to ``k``'s designated basis.
    seed : int
        Seed for the random weights of the diagonalizing linear combination.

    Returns
    -------
    Btpm or NoBtpm
    """
    basis = _orthonormal(k.basis() if input_basis is None else input_basis, k.input_dim)
    sigmas = [apply_kraus(k, projector(basis[:, i])) for i in range(k.input_dim)]
    worst, pair = 0.0, (0, 0)
    for i in range(len(sigmas)):
        for j in range(i + 1, len(sigmas)):
            c = sigmas[i] @ sigmas[j] - sigmas[j] @ sigmas[i]
            norm = float(np.max(np.abs(c)))
            if norm > worst:
                worst, pair = norm, (i, j)
    if worst >= COMMUTATOR_TOL:
        return NoBtpm(worst, pair)
    vecs = _simultaneous_eigenbasis(sigmas, np.random.default_rng(seed))
    A = np.array([np.real(np.einsum("ji,jk,ki->i", vecs.conj(), s, vecs)) for s in sigmas])
    A = np.where(np.abs(A) < 1e-15, 0.0, A)
    A = np.clip(A, 0.0, 1.0)
    A /= A.sum(axis=1, keepdims=True)
    c = Btpm(A, input_basis=basis, output_basis=vecs).canonical()
    # eigensolver order carries no meaning, so label columns in their final order
    return Btpm(c.probs, input_basis=basis, output_basis=c.output_basis)


def kraus_from_btpm(b: Btpm) -> KrausSet:
    """Operator elements with ``E_c |i> = sqrt(A[i, j]) |j'>`` where ``c = (i + j) mod L``.

    ``L = max(N, M)``, so there is one operator per output level whenever
    the output is at least as large as the input. Each operator sends every
    basis input to a single output level and no two inputs share a level
    within one operator, which makes ``sum E^dag E = I`` exact.
    """
    A = b.probs
    n, m = A.shape
    L = max(n, m)
    ops = np.zeros((L, m, n), dtype=complex)
    for i in range(n):
        for j in range(m):
            ops[(i + j) % L, j, i] = np.sqrt(A[i, j])
    if b.output_basis is not None:
        ops = np.einsum("ab,kbi->kai", b.output_basis, ops)
    if b.input_basis is not None:
        ops = np.einsum("kai,ji->kaj", ops, b.input_basis.conj())
    return KrausSet(ops, input_basis=b.input_basis)


def _is_perm_of(u, v, tol=MULTISET_TOL):
    return u.shape == v.shape and bool(np.all(np.abs(np.sort(u) - np.sort(v)) < tol))


def classify(b: Btpm) -> SymmetryClass:
    """Classify a BTPM as fully symmetric, quasi-symmetric, input-symmetric only, or asymmetric.

    Columns are grouped by their sorted entry multisets. A group is accepted
    when its sub-matrix rows are also mutual permutations, so each group is a
    symmetric sub-channel; a channel passes as quasi-symmetric only if every
    group is accepted.
    """
    A = b.probs
    n, m = A.shape
    input_sym = all(_is_perm_of(A[i], A[0]) for i in range(1, n))
    output_sym = all(_is_perm_of(A[:, k], A[:, 0]) for k in range(1, m))
    if not input_sym:
        return SymmetryClass(SymmetryTag.ASYMMETRIC)
    if output_sym:
        return SymmetryClass(SymmetryTag.FULLY_SYMMETRIC, (tuple(range(m)),))
    groups, keys = [], []
    for k in range(m):
        col = np.sort(A[:, k])
        for g, key in zip(groups, keys):
            if np.all(np.abs(col - key) < MULTISET_TOL):
                g.append(k)
                break
        else:
            groups.append([k])
            keys.append(col)
    for g in groups:
        sub = A[:, g]
        if not all(_is_perm_of(sub[i], sub[0]) for i in range(1, n)):
            return SymmetryClass(SymmetryTag.INPUT_SYMMETRIC_ONLY)
    return SymmetryClass(SymmetryTag.QUASI_SYMMETRIC, tuple(tuple(g) for g in groups))


def qqsc_canonical_form(b: Btpm) -> QqscCanonicalForm:
    """Recover ``(p_k, perm)`` with ``A[1, perm[k]] == A[0, k]`` for a 2-input QQSC.

    Fixed points are taken first, then swaps within each group, so the
    result is self-inverse whenever one exists. Any leftover columns are
    matched greedily by smallest index.
    """
    if b.input_dim != 2:
        raise ContractError("canonical QQSC form needs a two-dimensional input")
    cls = classify(b)
    if not cls.is_quasi_symmetric:
        raise ClassificationError(f"BTPM is {cls.tag.value}, not quasi-symmetric")
    a0 = np.round(b.probs[0], MATCH_DECIMALS)
    a1 = np.round(b.probs[1], MATCH_DECIMALS)
    m = b.output_dim
    perm = [-1] * m
    used = [False] * m
    for group in cls.partition:
        for k in group:
            if perm[k] < 0 and not used[k] and a1[k] == a0[k]:
                perm[k], used[k] = k, True
        for k in group:
            if perm[k] >= 0:
                continue
            for j in group:
                if j > k and perm[j] < 0 and not used[j] and not used[k] \
                        and a1[j] == a0[k] and a1[k] == a0[j]:
                    perm[k], perm[j] = j, k
                    used[j] = used[k] = True
                    break
    for k in range(m):
        if perm[k] >= 0:
            continue
        for j in range(m):
            if not used[j] and a1[j] == a0[k]:
                perm[k], used[j] = j, True
                break
        else:
            raise ClassificationError(f"no output level matches column {k}; classification inconsistent")
    return QqscCanonicalForm(tuple(float(x) for x in b.probs[0]), tuple(perm))


def channel_kraus(b: Btpm) -> KrausSet:
    """Kraus set used for coherent-information work on a BTPM-specified channel.

    Two-input QQSCs get their canonical operator elements (the coherent
    channel); anything else falls back to :func:`kraus_from_btpm`.
    """
    if b.input_dim == 2 and classify(b).is_quasi_symmetric:
        return qqsc_canonical_form(b).kraus(b.input_basis, b.output_basis)
    return kraus_from_btpm(b)
