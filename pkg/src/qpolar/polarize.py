"""Polar transform: generator matrix, coordinate-channel recursion, and polarization reports.

The quantum coordinate channels of a two-input/two-output QSC are handled
through their classical twins: the combined channel's BTPM equals the
classical combined TPM, and each coordinate channel's MSLCI equals the
symmetric capacity of the matching classical coordinate channel.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .btpm import Btpm, SymmetryTag, classify
from .errors import ClassificationError, ContractError, ResourceLimitError

EXACT_THRESHOLD = 16
DEFAULT_MU = 256
PREBIN_FACTOR = 8
MAX_COMBINED_N = 12
CONSERVATION_TOL = 1e-8
ROW_SUM_TOL = 1e-10


def _log2_exact(N: int) -> int:
    if not isinstance(N, (int, np.integer)) or N < 1 or N & (N - 1):
        raise ContractError(f"N must be a power of two, got {N!r}")
    return int(N).bit_length() - 1


# ---------------------------------------------------------------------------
# GF(2) generator matrix
# ---------------------------------------------------------------------------

def _pack_rows(bits: np.ndarray) -> np.ndarray:
    n_rows, n_cols = bits.shape
    n_words = (n_cols + 63) // 64
    words = np.zeros((n_rows, n_words), dtype=np.uint64)
    for c in range(n_cols):
        words[:, c // 64] |= bits[:, c].astype(np.uint64) << np.uint64(c % 64)
    return words


def _unpack_row(words: np.ndarray, n_cols: int) -> np.ndarray:
    c = np.arange(n_cols)
    return ((words[c // 64] >> (c % 64).astype(np.uint64)) & np.uint64(1)).astype(np.uint8)


def bit_reversal(N: int) -> np.ndarray:
    n = _log2_exact(N)
    return np.array([int(format(i, f"0{n}b")[::-1], 2) if n else 0 for i in range(N)])


@dataclass(frozen=True)
class GeneratorMatrix:
    """``G_N = B_N F^{(x)n}`` over GF(2), rows stored as 64-bit words."""

    n: int
    N: int
    words: np.ndarray = field(repr=False)

    def dense(self) -> np.ndarray:
        return np.array([_unpack_row(w, self.N) for w in self.words], dtype=np.uint8)

    def encode(self, u) -> np.ndarray:
        u = np.asarray(u).astype(bool)
        if u.shape != (self.N,):
            raise ContractError(f"expected a length-{self.N} binary vector, got shape {u.shape}")
        if not u.any():
            return np.zeros(self.N, dtype=np.uint8)
        return _unpack_row(np.bitwise_xor.reduce(self.words[u], axis=0), self.N)

    def encode_index(self, u: int) -> int:
        """Encode a big-endian integer label (bit ``N-1`` is ``u_1``)."""
        bits = [(u >> (self.N - 1 - j)) & 1 for j in range(self.N)]
        x = self.encode(bits)
        return int("".join(map(str, x)), 2) if self.N else 0


def generator_matrix(N: int) -> GeneratorMatrix:
    n = _log2_exact(N)
    F = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    G = np.ones((1, 1), dtype=np.uint8)
    for _ in range(n):
        G = np.kron(G, F)
    G = G[bit_reversal(N)] % 2
    return GeneratorMatrix(n, N, _pack_rows(G))


def encode(u) -> np.ndarray:
    """``u G_N`` over GF(2)."""
    u = np.asarray(u)
    return generator_matrix(len(u)).encode(u)


# ---------------------------------------------------------------------------
# classical binary-input channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassicalBinaryChannel:
    """Binary-input channel as an ``(M, 2)`` array of ``(p(y|0), p(y|1))``."""

    probs: np.ndarray

    def __post_init__(self):
        P = np.array(self.probs, dtype=float)
        if P.ndim != 2 or P.shape[1] != 2 or P.shape[0] < 1:
            raise ContractError(f"channel must be an (M, 2) array, got shape {P.shape}")
        if np.any(P < 0):
            raise ContractError("transition probabilities must be non-negative")
        sums = P.sum(axis=0)
        if np.max(np.abs(sums - 1.0)) >= ROW_SUM_TOL:
            raise ContractError(f"each input's probabilities must sum to 1, got {sums}")
        P.setflags(write=False)
        object.__setattr__(self, "probs", P)

    @classmethod
    def from_btpm(cls, b: Btpm) -> "ClassicalBinaryChannel":
        if b.input_dim != 2:
            raise ContractError("binary channel needs a two-row BTPM")
        return cls(b.probs.T)

    @classmethod
    def bsc(cls, eps: float) -> "ClassicalBinaryChannel":
        return cls([[1 - eps, eps], [eps, 1 - eps]])

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    def to_btpm(self) -> Btpm:
        return Btpm(self.probs.T)

    def merged(self) -> "ClassicalBinaryChannel":
        return ClassicalBinaryChannel(kernels.merge_identical(np.ascontiguousarray(self.probs)))


def shannon_capacity_uniform(w: ClassicalBinaryChannel) -> float:
    """Mutual information with a uniform input (the symmetric capacity), in bits."""
    return float(kernels.capacity(np.ascontiguousarray(w.probs)))


def _reduce(P, mode, mu):
    if mode == "exact":
        return kernels.merge_identical(P)
    if mode == "merged":
        return kernels.merge_ratio(P)
    if mode == "quantized":
        # identical rows share a bin, so binning subsumes exact merging
        if len(P) > PREBIN_FACTOR * mu:
            P = kernels.bin_degrade(P, PREBIN_FACTOR * mu)
        else:
            P = kernels.merge_identical(P)
        return kernels.greedy_degrade(P, mu)
    raise ContractError(f"unknown construction mode {mode!r}")


def polar_step_minus(w: ClassicalBinaryChannel, mode: str = "exact", mu: int = DEFAULT_MU):
    return ClassicalBinaryChannel(_reduce(kernels.polar_minus(np.ascontiguousarray(w.probs)), mode, mu))


def polar_step_plus(w: ClassicalBinaryChannel, mode: str = "exact", mu: int = DEFAULT_MU):
    return ClassicalBinaryChannel(_reduce(kernels.polar_plus(np.ascontiguousarray(w.probs)), mode, mu))


def resolve_mode(N: int, mode: str = "auto", exact_threshold: int = EXACT_THRESHOLD) -> str:
    if mode == "auto":
        return "exact" if N <= exact_threshold else "quantized"
    if mode not in ("exact", "merged", "quantized"):
        raise ContractError(f"unknown construction mode {mode!r}")
    return mode


def coordinate_channel(base: ClassicalBinaryChannel, N: int, i: int, mode: str = "auto",
                       exact_threshold: int = EXACT_THRESHOLD, mu: int = DEFAULT_MU):
    """``W_N^(i)`` via the minus/plus recursion selected by the bits of ``i - 1``.

    Bits are read most significant first; 0 selects the minus step and 1 the
    plus step.
    """
    n = _log2_exact(N)
    if not 1 <= i <= N:
        raise ContractError(f"index {i} out of range 1..{N}")
    mode = resolve_mode(N, mode, exact_threshold)
    w = base
    for bit in format(i - 1, f"0{n}b") if n else "":
        w = polar_step_plus(w, mode, mu) if bit == "1" else polar_step_minus(w, mode, mu)
    return w


def coordinate_channels(base: ClassicalBinaryChannel, N: int, mode: str = "auto",
                        exact_threshold: int = EXACT_THRESHOLD, mu: int = DEFAULT_MU,
                        threads: int = 1):
    """All ``N`` coordinate channels, built level by level so shared prefixes are reused."""
    n = _log2_exact(N)
    mode = resolve_mode(N, mode, exact_threshold)
    level = [base]

    def children(w):
        return polar_step_minus(w, mode, mu), polar_step_plus(w, mode, mu)

    for _ in range(n):
        if threads > 1 and len(level) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                pairs = list(pool.map(children, level))
        else:
            pairs = [children(w) for w in level]
        level = [c for pair in pairs for c in pair]
    return level


# ---------------------------------------------------------------------------
# combined and coordinate BTPMs of the quantum channel
# ---------------------------------------------------------------------------

def _require_qsc(base: Btpm):
    if base.probs.shape != (2, 2):
        raise ClassificationError(f"polarization needs a 2x2 BTPM, got {base.probs.shape}")
    cls = classify(base)
    if cls.tag is not SymmetryTag.FULLY_SYMMETRIC:
        raise ClassificationError(f"base channel is {cls.tag.value}, not a quantum symmetric channel")


def _bit_labels(N):
    return tuple(format(v, f"0{N}b") for v in range(2 ** N))


def combined_channel_btpm(base: Btpm, N: int) -> Btpm:
    """BTPM of the combined channel: ``Pr_N(V|Q) = prod_j Pr(V_j | C_j)`` with ``C = Q G_N``."""
    _require_qsc(base)
    _log2_exact(N)
    if N > MAX_COMBINED_N:
        raise ResourceLimitError(f"combined BTPM is 2^{N} x 2^{N}; limit is N <= {MAX_COMBINED_N}")
    T = np.ones((1, 1))
    for _ in range(N):
        T = np.kron(T, base.probs)
    G = generator_matrix(N)
    rows = [G.encode_index(q) for q in range(2 ** N)]
    labels = _bit_labels(N)
    return Btpm(T[rows], labels, tuple(v + "'" for v in labels))


def classical_combined_tpm(w: ClassicalBinaryChannel, N: int) -> np.ndarray:
    """``W_N(y|u) = prod_j W(y_j | x_j)``, ``x = u G_N``, by direct enumeration.

    Only defined for two-output ``w``; rows are indexed by ``u`` and columns
    by ``y``, both big-endian.
    """
    if w.size != 2:
        raise ContractError("direct enumeration needs a two-output base channel")
    _log2_exact(N)
    if N > MAX_COMBINED_N:
        raise ResourceLimitError(f"W_N is 2^{N} x 2^{N}; limit is N <= {MAX_COMBINED_N}")
    G = generator_matrix(N)
    ys = (np.arange(2 ** N)[:, None] >> (N - 1 - np.arange(N))[None, :]) & 1
    Wyx = w.probs  # Wyx[y, x]
    out = np.empty((2 ** N, 2 ** N))
    for u in range(2 ** N):
        x = G.encode([(u >> (N - 1 - j)) & 1 for j in range(N)])
        out[u] = np.prod(Wyx[ys, x[None, :]], axis=1)
    return out


def coordinate_btpm_from_classical(base: Btpm, N: int, i: int) -> ClassicalBinaryChannel:
    """Two-row BTPM of the quantum coordinate channel, ``2^(i-1) W_N^(i)(y, 0^(i-1) | u_i)``.

    Symbol ``y`` runs over all ``2^N`` output labels of the combined channel.
    """
    _require_qsc(base)
    if not 1 <= i <= N:
        raise ContractError(f"index {i} out of range 1..{N}")
    WN = classical_combined_tpm(ClassicalBinaryChannel.from_btpm(base), N)
    u = np.arange(2 ** N)
    prefix_zero = (u >> (N - i + 1)) == 0
    ui = (u >> (N - i)) & 1
    scale = 2.0 ** (i - 1) / 2.0 ** (N - 1)
    rows = [scale * WN[prefix_zero & (ui == b)].sum(axis=0) for b in (0, 1)]
    return ClassicalBinaryChannel(np.stack(rows, axis=1))


def combined_symmetry_violation(P: np.ndarray, N: int) -> float:
    """Max of ``|Pr(V|Q) - Pr(aG_N . V | Q ^ a)|`` over all ``a, Q, V``.

    The action ``b . V`` flips output bit ``j`` when ``b_j = 1``, which is the
    output permutation of a two-level QSC.
    """
    P = np.asarray(P)
    G = generator_matrix(N)
    idx = np.arange(2 ** N)
    worst = 0.0
    for a in range(2 ** N):
        b = G.encode_index(a)
        worst = max(worst, float(np.max(np.abs(P - P[np.ix_(idx ^ a, idx ^ b)]))))
    return worst


def coordinate_mslci(base: Btpm, N: int, i: int, mode: str = "auto",
                     exact_threshold: int = EXACT_THRESHOLD, mu: int = DEFAULT_MU) -> float:
    """MSLCI of the ``i``-th quantum coordinate channel (1-based)."""
    _require_qsc(base)
    w = coordinate_channel(ClassicalBinaryChannel.from_btpm(base), N, i, mode, exact_threshold, mu)
    return shannon_capacity_uniform(w)


@dataclass
class PolarizationReport:
    N: int
    base_mslci: float
    per_index: list
    sum_check: float
    good_fraction: dict
    construction_mode: str
    tolerances: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.per_index])

    @property
    def sum_deviation(self) -> float:
        return self.sum_check - self.N * self.base_mslci

    def invariant_failures(self) -> list:
        """Human-readable list of violated report invariants (empty when all hold)."""
        bad = []
        if len(self.per_index) != self.N:
            bad.append(f"expected {self.N} indices, got {len(self.per_index)}")
        v = self.values
        if v.size and (v.min() < -1e-9 or v.max() > 1 + 1e-9):
            bad.append(f"values outside [0, 1]: [{v.min()!r}, {v.max()!r}]")
        if self.construction_mode == "exact" and abs(self.sum_deviation) >= CONSERVATION_TOL:
            bad.append(f"sum check off by {self.sum_deviation!r}")
        return bad

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "base_mslci": self.base_mslci,
            "per_index": [[i, v] for i, v in self.per_index],
            "sum_check": self.sum_check,
            "sum_deviation": self.sum_deviation,
            "good_fraction": {repr(float(d)): f for d, f in self.good_fraction.items()},
            "construction_mode": self.construction_mode,
            "tolerances": self.tolerances,
        }


def polarization_report(base: Btpm, N: int, deltas: Sequence[float] = (0.01, 0.1), mode: str = "auto",
                        exact_threshold: int = EXACT_THRESHOLD, mu: int = DEFAULT_MU,
                        threads: int = 1) -> PolarizationReport:
    """Per-index MSLCI of all ``N`` coordinate channels with summary statistics."""
    _require_qsc(base)
    resolved = resolve_mode(N, mode, exact_threshold)
    w = ClassicalBinaryChannel.from_btpm(base)
    chans = coordinate_channels(w, N, resolved, exact_threshold, mu, threads)
    vals = [shannon_capacity_uniform(c) for c in chans]
    arr = np.array(vals)
    good = {float(d): float(np.mean(arr >= 1.0 - d)) for d in deltas}
    label = f"quantized({mu})" if resolved == "quantized" else resolved
    tol = {"merge_decimals": kernels.MERGE_DECIMALS, "conservation": CONSERVATION_TOL, "backend": kernels.BACKEND}
    if resolved == "quantized":
        tol["prebin_bins"] = PREBIN_FACTOR * mu
    return PolarizationReport(N, shannon_capacity_uniform(w), [(i + 1, v) for i, v in enumerate(vals)],
                              float(arr.sum()), good, label, tol)
