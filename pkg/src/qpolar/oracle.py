"""Brute-force density-matrix simulation of the combining circuit.

Everything here works on explicit state vectors and density operators over
qubits ordered ``(Q_1..Q_N, R_1..R_N)``; nothing reuses the closed-form
classical recursion, so it serves as an independent check on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .btpm import Btpm, NoBtpm, extract_btpm, qqsc_canonical_form
from .errors import ContractError, ResourceLimitError, UnsupportedInputError
from .polarize import combined_symmetry_violation, generator_matrix
from .quantum import I2, X, KrausSet, apply_kraus_on, partial_trace, purify, von_neumann_entropy

MAX_ORACLE_N = 4
_P0 = np.diag([1, 0]).astype(complex)
_P1 = np.diag([0, 1]).astype(complex)


@dataclass(frozen=True)
class Gate:
    kind: str  # "CNOT" or "SWAP"
    a: int  # control for CNOT
    b: int  # target for CNOT


@dataclass(frozen=True)
class CircuitSpec:
    N: int
    gates: tuple


def _reverse_shuffle_swaps(N, offset):
    # R_N sends position 2k -> k and 2k+1 -> N/2 + k
    dest = [k // 2 if k % 2 == 0 else N // 2 + k // 2 for k in range(N)]
    content = list(range(N))  # content[p] = original index currently at p
    swaps = []
    for p in range(N):
        want = dest.index(p)  # original index that must end at p
        q = content.index(want)
        if q != p:
            swaps.append(Gate("SWAP", offset + p, offset + q))
            content[p], content[q] = content[q], content[p]
    return swaps


def _gates(N, offset=0):
    if N == 1:
        return []
    layer = [Gate("CNOT", offset + 2 * k + 1, offset + 2 * k) for k in range(N // 2)]
    shuffle = _reverse_shuffle_swaps(N, offset)
    return layer + shuffle + _gates(N // 2, offset) + _gates(N // 2, offset + N // 2)


def build_circuit(N: int) -> CircuitSpec:
    """CNOT/SWAP network realizing ``u -> u G_N`` on ``N`` qubits.

    Recursive: a CNOT layer (control ``2k+1``, target ``2k``), the reverse
    shuffle as SWAPs, then two copies of the ``N/2`` circuit on the halves.
    """
    if N not in (1, 2, 4):
        raise ContractError(f"oracle circuits are built for N in {{1, 2, 4}}, got {N}")
    return CircuitSpec(N, tuple(_gates(N)))


def _lift(ops_by_qubit, n):
    return reduce(np.kron, [ops_by_qubit.get(j, I2) for j in range(n)])


def gate_matrix(g: Gate, n: int) -> np.ndarray:
    if g.kind == "CNOT":
        return _lift({g.a: _P0}, n) + _lift({g.a: _P1, g.b: X}, n)
    if g.kind == "SWAP":
        c1 = gate_matrix(Gate("CNOT", g.a, g.b), n)
        c2 = gate_matrix(Gate("CNOT", g.b, g.a), n)
        return c1 @ c2 @ c1
    raise ContractError(f"unknown gate {g.kind!r}")


def circuit_unitary(c: CircuitSpec) -> np.ndarray:
    U = np.eye(2 ** c.N, dtype=complex)
    for g in c.gates:
        U = gate_matrix(g, c.N) @ U
    return U


def simulate_basis(c: CircuitSpec, bits) -> np.ndarray:
    """Run a computational basis state through the circuit and read the output bits."""
    bits = [int(b) for b in bits]
    if len(bits) != c.N:
        raise ContractError(f"expected {c.N} bits")
    idx = int("".join(map(str, bits)), 2) if bits else 0
    out = circuit_unitary(c)[:, idx]
    j = int(np.argmax(np.abs(out)))
    if abs(abs(out[j]) - 1.0) > 1e-12:
        raise ContractError("circuit did not map a basis state to a basis state")
    return np.array([(j >> (c.N - 1 - k)) & 1 for k in range(c.N)], dtype=np.uint8)


def frame_channel(base: KrausSet, input_basis=None, seed: int = 42):
    """Rewrite ``base`` so its BTPM bases become the computational basis.

    Returns the rotated Kraus set and the BTPM it was rotated by.
    """
    b = extract_btpm(base, input_basis, seed)
    if isinstance(b, NoBtpm):
        raise UnsupportedInputError(f"channel has no BTPM (commutator norm {b.max_commutator:.3e})")
    ops = np.einsum("ab,kbc,cd->kad", b.output_basis.conj().T, base.operators, b.input_basis)
    return KrausSet(ops), b


def _check_n(N):
    if N > MAX_ORACLE_N:
        raise ResourceLimitError(f"oracle simulation is limited to N <= {MAX_ORACLE_N}, got {N}")
    if N not in (1, 2, 4):
        raise ContractError(f"N must be 1, 2 or 4, got {N}")


def _output_state(framed: KrausSet, weights) -> np.ndarray:
    """Density operator of ``(V_1..V_N, R_1..R_N)`` for inputs ``q_j|0><0| + (1-q_j)|1><1|``."""
    N = len(weights)
    rho_q = reduce(np.kron, [np.diag([q, 1.0 - q]).astype(complex) for q in weights])
    psi = purify(rho_q)
    U = circuit_unitary(build_circuit(N))
    psi = np.kron(U, np.eye(2 ** N)) @ psi
    rho = np.outer(psi, psi.conj())
    dims = [2] * (2 * N)
    for j in range(N):
        rho = apply_kraus_on(framed, rho, dims, j)
    return rho


def simulate_coordinate(base: KrausSet, N: int, i: int, q: float = 0.5, input_basis=None,
                        seed: int = 42, vary: str = "target") -> float:
    """``S(V_1^N R_1^(i-1)) - S(V_1^N R_1^i)`` from a full purified simulation.

    Each input ``Q_j`` is prepared diagonally in the channel's BTPM input
    basis and purified by its own reference ``R_j``. With ``vary="target"``
    only ``Q_i`` takes weight ``q`` and the others stay maximally mixed, so
    the coordinate channel is a fixed map of ``Q_i``; ``vary="all"`` prepares
    every input as ``q|0><0| + (1-q)|1><1|``.
    """
    if vary not in ("target", "all"):
        raise ContractError(f"vary must be 'target' or 'all', got {vary!r}")
    _check_n(N)
    if not 1 <= i <= N:
        raise ContractError(f"index {i} out of range 1..{N}")
    if base.input_dim != 2 or base.output_dim != 2:
        raise ContractError("oracle needs a qubit-to-qubit base channel")
    framed, _ = frame_channel(base, input_basis, seed)
    weights = [q if (vary == "all" or j == i - 1) else 0.5 for j in range(N)]
    rho = _output_state(framed, weights)
    dims = [2] * (2 * N)
    v = list(range(N))
    before = partial_trace(rho, dims, v + [N + j for j in range(i - 1)])
    after = partial_trace(rho, dims, v + [N + j for j in range(i)])
    return von_neumann_entropy(before) - von_neumann_entropy(after)


def combined_btpm_by_simulation(base: KrausSet, N: int, input_basis=None, seed: int = 42) -> np.ndarray:
    """``Pr_N(V|Q)`` read off the diagonal of the simulated output for each basis input."""
    _check_n(N)
    framed, _ = frame_channel(base, input_basis, seed)
    U = circuit_unitary(build_circuit(N))
    dims = [2] * N
    P = np.empty((2 ** N, 2 ** N))
    for qidx in range(2 ** N):
        col = U[:, qidx]
        rho = np.outer(col, col.conj())
        for j in range(N):
            rho = apply_kraus_on(framed, rho, dims, j)
        P[qidx] = np.real(np.diag(rho))
    return P


@dataclass(frozen=True)
class SymmetryCheck:
    passed: bool
    max_violation: float
    tolerance: float

    def __bool__(self):
        return self.passed


def verify_combined_symmetry(base: KrausSet, N: int, input_basis=None, tol: float = 1e-12,
                             seed: int = 42) -> SymmetryCheck:
    """Exhaustively check ``Pr_N(V|Q) == Pr_N(aG_N . V | Q ^ a)`` on the simulated channel."""
    try:
        P = combined_btpm_by_simulation(base, N, input_basis, seed)
    except UnsupportedInputError:
        return SymmetryCheck(False, float("inf"), tol)
    worst = combined_symmetry_violation(P, N)
    return SymmetryCheck(worst < tol, worst, tol)


@dataclass(frozen=True)
class Branch:
    k: int
    b: tuple
    Q: tuple
    V: tuple
    prob: float


def kraus_branches(base: KrausSet, N: int = 2, input_basis=None, seed: int = 42) -> list:
    """Enumerate ``F_k = E_b1 (x) ... (x) E_bN`` applied to every encoded basis input.

    Uses the canonical QQSC operator elements of the framed base channel, so
    each branch maps ``|Q G_N>`` to a single output basis vector. Raises if a
    branch spreads over several basis vectors.
    """
    _check_n(N)
    _, b = frame_channel(base, input_basis, seed)
    E = qqsc_canonical_form(Btpm(b.probs)).kraus().operators
    U = circuit_unitary(build_circuit(N))
    out = []
    for k in range(2 ** N):
        bits = tuple((k >> (N - 1 - j)) & 1 for j in range(N))
        F = reduce(np.kron, [E[bj] for bj in bits])
        for qidx in range(2 ** N):
            vec = F @ U[:, qidx]
            prob = float(np.vdot(vec, vec).real)
            support = np.flatnonzero(np.abs(vec) > 1e-12)
            if len(support) > 1:
                raise ContractError(f"branch {k} spreads over {len(support)} outputs")
            v = int(support[0]) if len(support) else -1
            out.append(Branch(k, bits, tuple((qidx >> (N - 1 - j)) & 1 for j in range(N)),
                              tuple((v >> (N - 1 - j)) & 1 for j in range(N)) if v >= 0 else (), prob))
    return out


def branch_rule_violation(base: KrausSet, N: int = 2, input_basis=None, seed: int = 42) -> float:
    """Check the branch bookkeeping against the combined BTPM.

    For input ``Q = 0`` the branches must hit distinct outputs with weights
    ``Pr_N(V | 0)``; for general ``Q`` a branch hitting ``V`` at ``Q = 0``
    must hit ``QG_N . V`` with weight ``Pr_N(QG_N . V | Q)``. Returns the
    largest discrepancy (``inf`` when the one-to-one rule fails).
    """
    P = combined_btpm_by_simulation(base, N, input_basis, seed)
    G = generator_matrix(N)
    branches = kraus_branches(base, N, input_basis, seed)
    zero = {br.k: br for br in branches if not any(br.Q)}
    if len({br.V for br in zero.values()}) != 2 ** N:
        return float("inf")
    worst = 0.0
    for br in branches:
        v0 = int("".join(map(str, zero[br.k].V)), 2)
        qidx = int("".join(map(str, br.Q)), 2)
        target = v0 ^ G.encode_index(qidx)
        got = int("".join(map(str, br.V)), 2) if br.V else -1
        if got != target:
            return float("inf")
        worst = max(worst, abs(br.prob - P[qidx, target]))
    return worst
