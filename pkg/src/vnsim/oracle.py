"""Independent ground truth: direct dense integration of the equation
of motion i d(rho)/dt = [H(t), rho(t)], then projection onto the basis.

The integrator deliberately repairs nothing except Hermiticity (which is
re-symmetrized each step to stop one-sided roundoff accumulation); trace
drift is left observable as a quality metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .liouville import Trajectory, step_count
from .pauli import PauliBasis

MatrixFunction = Callable[[float], np.ndarray]


@dataclass
class DenseTrajectory:
    """Time series of dense density matrices."""

    times: np.ndarray
    matrices: np.ndarray  # shape (samples, d, d), complex
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.matrices = np.asarray(self.matrices, dtype=complex)
        if self.matrices.ndim != 3 or len(self.matrices) != len(self.times):
            raise ValueError("matrices and times must have matching leading length")

    def traces(self) -> np.ndarray:
        return np.einsum("tii->t", self.matrices).real


def _hermiticity_residue(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def integrate_von_neumann(
    h_of_t: MatrixFunction,
    rho0: np.ndarray,
    dt: float,
    t_final: float,
    stride: int = 1,
    hermitian_tol: float = 1e-10,
    metadata: dict | None = None,
) -> DenseTrajectory:
    """Fixed-step RK4 on d(rho)/dt = -i [H(t), rho].

    H(t) is checked Hermitian (to ``hermitian_tol``) at every sampled
    time; rho is re-symmetrized each step; the trace is NOT renormalized.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n_steps = step_count(t_final, dt)
    rho = np.asarray(rho0, dtype=complex).copy()
    d = rho.shape[0]
    if rho.shape != (d, d):
        raise ValueError("initial density matrix must be square")

    def check_h(t: float) -> None:
        h = np.asarray(h_of_t(t))
        if h.shape != (d, d):
            raise ValueError(f"H({t}) has shape {h.shape}, expected {(d, d)}")
        if _hermiticity_residue(h) > hermitian_tol:
            raise ValueError(f"H({t}) is not Hermitian within {hermitian_tol}")

    def rhs(t: float, r: np.ndarray) -> np.ndarray:
        h = h_of_t(t)
        return -1j * (h @ r - r @ h)

    check_h(0.0)
    times = [0.0]
    mats = [rho.copy()]
    half = dt / 2.0
    for step in range(1, n_steps + 1):
        t0 = (step - 1) * dt
        k1 = rhs(t0, rho)
        k2 = rhs(t0 + half, rho + half * k1)
        k3 = rhs(t0 + half, rho + half * k2)
        k4 = rhs(t0 + dt, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if step % stride == 0 or step == n_steps:
            check_h(step * dt)
            times.append(step * dt)
            mats.append(rho.copy())
    meta = {"dt": dt, "t_final": t_final, "stride": stride}
    meta.update(metadata or {})
    return DenseTrajectory(np.array(times), np.array(mats), meta)


def project_trajectory(traj: DenseTrajectory, basis: PauliBasis) -> Trajectory:
    """Per-sample basis projection of a dense trajectory."""
    d = 2**basis.n_sites
    if traj.matrices.shape[1:] != (d, d):
        raise ValueError("trajectory dimension does not match basis")
    coeffs = np.einsum("kij,tji->tk", basis.matrices, traj.matrices) / d
    residue = float(np.max(np.abs(coeffs.imag))) if coeffs.size else 0.0
    if residue > 1e-9:
        raise ValueError(f"projection has imaginary residue {residue:.3e}")
    return Trajectory(
        traj.times.copy(), np.ascontiguousarray(coeffs.real), "oracle", dict(traj.metadata)
    )
