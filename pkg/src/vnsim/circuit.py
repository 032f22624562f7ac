"""Statevector emulation of the phase-kickback coefficient-readout circuit.

Register layout: one control qubit plus a second register of
``n_q - 1 = log2(n)`` qubits indexing the n basis strings.  Amplitude
``state[b * n + i]`` belongs to control bit ``b`` and register index ``i``.

The circuit interferes a uniform reference vector (control 0) against the
evolved, normalized coefficient vector (control 1):

    prep:    H on control; controlled-on-1 U_H; controlled-on-0 H^(n_q-1)
    evolve:  per time step, controlled-on-1 rotations exp(-dalpha_k Q_k)
    readout: H on control, then measure

which leaves p_{0,i} - p_{1,i} = rho_i / sqrt(n) for the normalized
coefficients, so rho_i = sqrt(n) (p_{0,i} - p_{1,i}).  The initial norm
r = ||rho(0)||_2 is carried classically on the plan and restores physical
units at readout (orthogonal evolution preserves it).

Gate blocks act as dense matrices on the selected half of the amplitude
array; no decomposition into elementary one/two-qubit gates is performed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .liouville import CoeffFunction, m_single, step_count
from .pauli import StructureTensor

HADAMARD_ON_CONTROL = "hadamard_on_control"
CONTROLLED_ON_1 = "controlled_on_1"
CONTROLLED_ON_0 = "controlled_on_0"
UNIFORM_SUPERPOSITION_ON_0 = "uniform_superposition_on_0"

_PAYLOAD_KINDS = (CONTROLLED_ON_1, CONTROLLED_ON_0, UNIFORM_SUPERPOSITION_ON_0)

UNITARITY_TOL = 1e-11


@dataclass
class GateBlock:
    """One dense gate block of the plan.

    ``k`` (1-based generator index), ``dalpha`` and ``step`` annotate the
    evolution blocks for plan dumps; prep/readout blocks leave them None.
    """

    kind: str
    payload: np.ndarray | None = None
    k: int | None = None
    dalpha: float | None = None
    step: int | None = None

    def __post_init__(self):
        if self.kind == HADAMARD_ON_CONTROL:
            if self.payload is not None:
                raise ValueError("control Hadamard carries no payload")
            return
        if self.kind not in _PAYLOAD_KINDS:
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.payload is None:
            raise ValueError(f"{self.kind} requires a payload")
        u = np.asarray(self.payload)
        residue = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if residue > UNITARITY_TOL:
            raise ValueError(f"payload is not unitary (residue {residue:.3e})")

    def describe(self) -> str:
        parts = [self.kind]
        parts.append("" if self.k is None else str(self.k))
        parts.append("" if self.dalpha is None else repr(float(self.dalpha)))
        parts.append("" if self.step is None else str(self.step))
        return ",".join(parts)


@dataclass
class CircuitPlan:
    """Ordered gate blocks plus the shot policy and the norm ledger."""

    n_qubits: int
    blocks: list[GateBlock]
    shots: int | None = None
    seed: object = None
    scale: float = 1.0

    def __post_init__(self):
        if not self.blocks or self.blocks[0].kind != HADAMARD_ON_CONTROL:
            raise ValueError("plan must start with the control-qubit Hadamard")
        n = self.n
        for b in self.blocks:
            if b.payload is not None and b.payload.shape != (n, n):
                raise ValueError("payload dimension inconsistent with register size")

    @property
    def n(self) -> int:
        """Second-register dimension 2^(n_qubits - 1)."""
        return 1 << (self.n_qubits - 1)

    def dump(self) -> str:
        """One line per block: kind, k, dalpha, step."""
        return "\n".join(b.describe() for b in self.blocks) + "\n"


@dataclass
class ShotResult:
    """Measurement counts over the 2n outcomes of one circuit execution."""

    counts: np.ndarray  # shape (2, n) of nonnegative ints
    shots: int
    seed: object = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if int(self.counts.sum()) != self.shots:
            raise ValueError("counts must sum to the shot total")

    def probabilities(self) -> np.ndarray:
        return self.counts / self.shots

    def to_csv(self) -> str:
        lines = ["control_bit,register_index,count"]
        for b in range(2):
            for i in range(self.counts.shape[1]):
                lines.append(f"{b},{i + 1},{int(self.counts[b, i])}")
        return "\n".join(lines) + "\n"


@dataclass
class KickbackEstimate:
    """Coefficients recovered from the interference probabilities.

    ``coefficients`` are on the normalized scale (unit Euclidean norm at
    t = 0); multiply by ``scale`` for physical values.  ``stderr`` holds
    per-coefficient standard errors on the normalized scale in shots mode
    and is None for exact probabilities.
    """

    coefficients: np.ndarray
    scale: float
    stderr: np.ndarray | None = None

    @property
    def physical(self) -> np.ndarray:
        return self.scale * self.coefficients

    @property
    def physical_stderr(self) -> np.ndarray | None:
        return None if self.stderr is None else self.scale * self.stderr


def householder_prep(rho0_normalized: np.ndarray) -> np.ndarray:
    """Real orthogonal reflection whose first column is the input vector.

    Uses U = I - w w^T / (1 - rho_p) with w = rho - e_p.  The default
    pivot p = 1 degenerates when rho is (numerically) e_1; the pivot then
    moves to the entry farthest from +1 and the column holding rho is
    swapped into position 1, so the contract holds for every unit vector.
    """
    rho = np.asarray(rho0_normalized, dtype=float)
    nr = float(np.linalg.norm(rho))
    if nr == 0.0:
        raise ValueError("cannot prepare a zero vector")
    if abs(nr - 1.0) > 1e-10:
        raise ValueError(f"input must be normalized (norm {nr!r})")
    pivot = 0
    if abs(1.0 - rho[0]) < 1e-8:
        pivot = int(np.argmin(rho))
    w = rho.copy()
    w[pivot] -= 1.0
    u = np.eye(rho.size) - np.outer(w, w) / (1.0 - rho[pivot])
    if pivot != 0:
        u[:, [0, pivot]] = u[:, [pivot, 0]]
    return u


def _hadamard_all(m: int) -> np.ndarray:
    h1 = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    h = np.array([[1.0]])
    for _ in range(m):
        h = np.kron(h, h1)
    return h


def build_plan(
    rho0: np.ndarray,
    a_of_t: CoeffFunction,
    dt: float,
    t_final: float,
    structure: StructureTensor,
    shots: int | None = None,
    seed: object = None,
) -> CircuitPlan:
    """Assemble the full gate-block sequence for one readout at t_final.

    Evolution blocks use dalpha = dt * a(t_{step-1}); generators with a
    zero angle (including the identity string, whose generator vanishes)
    contribute nothing and are elided from the plan.
    """
    rho0 = np.asarray(rho0, dtype=float)
    n = structure.dim
    if rho0.shape != (n,):
        raise ValueError(f"expected initial vector of length {n}")
    m = int(math.log2(n))
    if 1 << m != n:
        raise ValueError("basis dimension must be a power of two")
    r = float(np.linalg.norm(rho0))
    if r == 0.0:
        raise ValueError("initial vector must be nonzero")
    blocks = [GateBlock(HADAMARD_ON_CONTROL)]
    blocks.append(GateBlock(CONTROLLED_ON_1, householder_prep(rho0 / r)))
    blocks.append(GateBlock(UNIFORM_SUPERPOSITION_ON_0, _hadamard_all(m)))
    n_steps = step_count(t_final, dt)
    for step in range(1, n_steps + 1):
        dalpha = dt * np.asarray(a_of_t((step - 1) * dt), dtype=float)
        # blocks act in time order, so the highest generator index is laid
        # down first to realize the ordered product M_1 M_2 ... M_n
        for k in range(n - 1, -1, -1):
            if dalpha[k] == 0.0 or structure.planes(k)[0].size == 0:
                continue
            blocks.append(
                GateBlock(
                    CONTROLLED_ON_1,
                    m_single(k, float(dalpha[k]), structure),
                    k=k + 1,
                    dalpha=float(dalpha[k]),
                    step=step,
                )
            )
    blocks.append(GateBlock(HADAMARD_ON_CONTROL))
    return CircuitPlan(m + 1, blocks, shots=shots, seed=seed, scale=r)


def apply_block(state: np.ndarray, block: GateBlock) -> np.ndarray:
    """Apply one gate block to the 2n-amplitude statevector."""
    n = state.size // 2
    out = state.copy()
    if block.kind == HADAMARD_ON_CONTROL:
        top = state[:n]
        bot = state[n:]
        inv = 1.0 / math.sqrt(2.0)
        out[:n] = (top + bot) * inv
        out[n:] = (top - bot) * inv
    elif block.kind == CONTROLLED_ON_1:
        out[n:] = block.payload @ state[n:]
    else:  # CONTROLLED_ON_0 and the uniform-superposition block
        out[:n] = block.payload @ state[:n]
    return out


def run_statevector(plan: CircuitPlan) -> np.ndarray:
    """Execute the plan on |0...0> and return the final amplitudes."""
    state = np.zeros(2 * plan.n, dtype=complex)
    state[0] = 1.0
    for block in plan.blocks:
        state = apply_block(state, block)
        norm = float(np.linalg.norm(state))
        if abs(norm - 1.0) > 1e-10:
            raise RuntimeError(f"statevector norm drifted to {norm!r}")
    return state


def probabilities(state: np.ndarray) -> np.ndarray:
    """Outcome probabilities as a (2, n) table indexed [control_bit, i]."""
    p = np.abs(state) ** 2
    return p.reshape(2, -1)


def sample(state: np.ndarray, shots: int, seed: object) -> ShotResult:
    """Multinomial draw over the outcome probabilities.

    Uses a counter-based generator (Philox) keyed by ``seed``, so counts
    are reproducible for a fixed seed and independent sub-streams can be
    derived for sharding.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = probabilities(state).ravel()
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    rng = np.random.Generator(np.random.Philox(seed))
    counts = rng.multinomial(shots, p).reshape(2, -1)
    return ShotResult(counts=counts, shots=shots, seed=seed)


def kickback_readout(
    probs_or_counts: np.ndarray | ShotResult, scale: float = 1.0
) -> KickbackEstimate:
    """Recover coefficients from the 2n-outcome probability table.

    normalized_i = sqrt(n) * (p_{0,i} - p_{1,i}); the physical value is
    ``scale`` times that.  In shots mode each normalized coefficient gets
    the standard error sqrt((p_{0,i}+p_{1,i}) - (p_{0,i}-p_{1,i})^2) *
    sqrt(n / shots).
    """
    shots = None
    if isinstance(probs_or_counts, ShotResult):
        shots = probs_or_counts.shots
        p = probs_or_counts.probabilities().astype(float)
    else:
        p = np.asarray(probs_or_counts, dtype=float)
        if p.ndim == 1:
            if p.size % 2:
                raise ValueError("flat probability table must have 2n entries")
            p = p.reshape(2, -1)
        if p.ndim != 2 or p.shape[0] != 2:
            raise ValueError("probability table must have shape (2, n)")
        total = float(p.sum())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
    n = p.shape[1]
    root_n = math.sqrt(n)
    diff = p[0] - p[1]
    coeffs = root_n * diff
    stderr = None
    if shots is not None:
        var = np.clip(p[0] + p[1] - diff**2, 0.0, None)
        stderr = root_n * np.sqrt(var / shots)
    return KickbackEstimate(coefficients=coeffs, scale=float(scale), stderr=stderr)


def run_readout(
    rho0: np.ndarray,
    a_of_t: CoeffFunction,
    dt: float,
    n_steps: int,
    structure: StructureTensor,
    shots: int | None = None,
    seed: object = None,
) -> KickbackEstimate:
    """Convenience per-time-point execution: plan, run, read out."""
    plan = build_plan(
        rho0, a_of_t, dt, n_steps * dt, structure, shots=shots, seed=seed
    )
    state = run_statevector(plan)
    if shots is None:
        return kickback_readout(probabilities(state), plan.scale)
    return kickback_readout(sample(state, shots, seed), plan.scale)
