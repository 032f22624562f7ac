"""Model declarations: drive coefficients, initial states, observables.

A model's Hamiltonian is a sum of constant-plus-harmonic time profiles
multiplying fixed Hermitian matrices.  Drive terms on the string basis
are always obtained by projecting those matrices, never by transcribing
externally tabulated coefficient lists; where common tabulations of these
two systems disagree in sign with the projection, the discrepancy is
recorded in ``notes`` and surfaced in comparison reports.

Built-in presets:

* ``example1``      -- one spin 1/2 in a harmonically rotating transverse
  field with a static longitudinal field.
* ``example2``      -- two exchange-coupled spins 1/2 in the same field.
* ``example1-alt`` / ``example2-alt`` -- the same systems with the drive
  amplitude and carrier frequency swapped; the parameter set for these
  models is quoted ambiguously in common tabulations, so both readings
  ship and neither is asserted as canonical.

The JSON file schema mirrors ModelSpec: ``{name, n_sites, terms:
[{index, constant, harmonics: [{amp, freq, phase}]}], initial: {kind:
"dense"|"coeffs", data}, observables: [{name, matrix}]}`` with matrices
as row-major arrays of [re, im] pairs and 1-based term indices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .pauli import PauliBasis, build_basis, project

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# computational |1> is the lower level: (I - sigma_z)/2 projects onto it
P_LOW = np.diag([0.0, 1.0]).astype(complex)
P_HIGH = np.diag([1.0, 0.0]).astype(complex)


@dataclass(frozen=True)
class DriveTerm:
    """Time profile for one basis coefficient: constant + cosine harmonics."""

    index: int  # 1-based basis index
    constant: float = 0.0
    harmonics: tuple[tuple[float, float, float], ...] = ()  # (amp, freq, phase)

    def value(self, t: float) -> float:
        out = self.constant
        for amp, freq, phase in self.harmonics:
            out += amp * math.cos(freq * t + phase)
        return out


@dataclass
class ModelSpec:
    """A complete system declaration consumable by every propagator."""

    name: str
    n_sites: int
    terms: list[DriveTerm]
    initial_kind: str  # 'dense' | 'coeffs'
    initial_data: np.ndarray
    observables: list[tuple[str, np.ndarray]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    dense_hamiltonian: Callable[[float], np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        if self.initial_kind not in ("dense", "coeffs"):
            raise ValueError(f"unknown initial kind {self.initial_kind!r}")
        self.initial_data = np.asarray(self.initial_data)
        dim = self.dim
        for term in self.terms:
            if not 1 <= term.index <= dim:
                raise ValueError(f"term index {term.index} outside 1..{dim}")
        if self.initial_kind == "dense":
            d = 2**self.n_sites
            rho = self.initial_data
            if rho.shape != (d, d):
                raise ValueError("dense initial state has wrong shape")
            if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
                raise ValueError("initial density matrix must be Hermitian")
            if abs(np.trace(rho).real - 1.0) > 1e-10:
                raise ValueError("initial density matrix must have unit trace")
            if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
                raise ValueError("initial density matrix must be positive")
        elif self.initial_data.shape != (dim,):
            raise ValueError("coefficient initial state has wrong length")

    @property
    def dim(self) -> int:
        return 4**self.n_sites

    def basis(self) -> PauliBasis:
        return build_basis(self.n_sites)

    def coefficient_fn(self) -> Callable[[float], np.ndarray]:
        """Vectorized evaluator for the full drive vector a(t) (0-based)."""
        base = np.zeros(self.dim)
        idx, amp, freq, phase = [], [], [], []
        for term in self.terms:
            base[term.index - 1] += term.constant
            for a, w, p in term.harmonics:
                idx.append(term.index - 1)
                amp.append(a)
                freq.append(w)
                phase.append(p)
        idx = np.asarray(idx, dtype=np.intp)
        amp = np.asarray(amp)
        freq = np.asarray(freq)
        phase = np.asarray(phase)

        def a_of_t(t: float) -> np.ndarray:
            a = base.copy()
            if idx.size:
                np.add.at(a, idx, amp * np.cos(freq * t + phase))
            return a

        return a_of_t

    def hamiltonian_fn(self, basis: PauliBasis) -> Callable[[float], np.ndarray]:
        """Dense H(t); the declared matrix form when available, otherwise
        reconstructed from the drive terms."""
        if self.dense_hamiltonian is not None:
            return self.dense_hamiltonian
        a_of_t = self.coefficient_fn()
        mats = basis.matrices

        def h_of_t(t: float) -> np.ndarray:
            return np.einsum("k,kij->ij", a_of_t(t), mats)

        return h_of_t

    def initial_dense(self, basis: PauliBasis) -> np.ndarray:
        from .pauli import reconstruct

        if self.initial_kind == "dense":
            return np.asarray(self.initial_data, dtype=complex)
        return reconstruct(np.asarray(self.initial_data, dtype=float), basis)

    def initial_coeffs(self, basis: PauliBasis) -> np.ndarray:
        if self.initial_kind == "coeffs":
            return np.asarray(self.initial_data, dtype=float)
        return project(self.initial_data, basis)


def drive_terms_from_matrices(
    parts: list[tuple[np.ndarray, float, tuple[tuple[float, float, float], ...]]],
    basis: PauliBasis,
    tol: float = 1e-12,
) -> list[DriveTerm]:
    """Project matrix-valued Hamiltonian parts into per-index drive terms.

    Each part is (matrix, constant, harmonics); its projection scales the
    time profile onto every basis index the matrix touches.  Terms landing
    on the same index are merged.
    """
    constants: dict[int, float] = {}
    harmonics: dict[int, list[tuple[float, float, float]]] = {}
    for matrix, constant, harms in parts:
        coeffs = project(matrix, basis)
        for i, c in enumerate(coeffs):
            if abs(c) <= tol:
                continue
            if constant:
                constants[i] = constants.get(i, 0.0) + c * constant
            for amp, freq, phase in harms:
                harmonics.setdefault(i, []).append((c * amp, freq, phase))
    terms = []
    for i in sorted(set(constants) | set(harmonics)):
        terms.append(
            DriveTerm(
                index=i + 1,
                constant=constants.get(i, 0.0),
                harmonics=tuple(harmonics.get(i, ())),
            )
        )
    return terms


def example1_spec(
    omega: float = 22.0,
    omega0: float = 1.0,
    omega1: float = 0.9,
    phi: float = math.pi / 2,
    name: str = "example1",
) -> ModelSpec:
    """One spin 1/2: rotating transverse drive plus static longitudinal field.

    H(t) = omega1 cos(omega t) sx/2 - omega1 cos(omega t + phi) sy/2
           - omega0 sz/2, starting from the lower level (I - sz)/2.
    """
    basis = build_basis(1)
    parts = [
        (SIGMA_X / 2, 0.0, ((omega1, omega, 0.0),)),
        (SIGMA_Y / 2, 0.0, ((-omega1, omega, phi),)),
        (SIGMA_Z / 2, -omega0, ()),
    ]
    terms = drive_terms_from_matrices(parts, basis)

    def dense_h(t: float) -> np.ndarray:
        return (
            omega1 * math.cos(omega * t) * SIGMA_X / 2
            - omega1 * math.cos(omega * t + phi) * SIGMA_Y / 2
            - omega0 * SIGMA_Z / 2
        )

    return ModelSpec(
        name=name,
        n_sites=1,
        terms=terms,
        initial_kind="dense",
        initial_data=(IDENTITY_2 - SIGMA_Z) / 2,
        observables=[("P_L", P_LOW), ("P_H", P_HIGH), ("S_z", SIGMA_Z / 2)],
        notes=[
            "a_4 projects to -omega0/2 from the declared Hamiltonian; "
            "source tabulations list +omega0/2 (opposite sign)."
        ],
        params={"omega": omega, "omega0": omega0, "omega1": omega1, "phi": phi},
        dense_hamiltonian=dense_h,
    )


def example2_spec(
    omega: float = 22.0,
    omega0: float = 1.0,
    omega1: float = 0.9,
    phi: float = math.pi / 2,
    exchange: float = 3.0,
    name: str = "example2",
) -> ModelSpec:
    """Two spins 1/2 coupled by isotropic exchange in the same drive.

    H(t) = omega1 cos(omega t) (Sx1 + Sx2)
         + omega1 cos(omega t + phi) (Sy1 + Sy2)
         + omega0 (Sz1 + Sz2) + exchange * S1.S2,
    with S = sigma/2, starting from both spins in the lower level.
    """
    basis = build_basis(2)
    sx_sum = (np.kron(SIGMA_X, IDENTITY_2) + np.kron(IDENTITY_2, SIGMA_X)) / 2
    sy_sum = (np.kron(SIGMA_Y, IDENTITY_2) + np.kron(IDENTITY_2, SIGMA_Y)) / 2
    sz_sum = (np.kron(SIGMA_Z, IDENTITY_2) + np.kron(IDENTITY_2, SIGMA_Z)) / 2
    s_dot_s = (
        np.kron(SIGMA_X, SIGMA_X)
        + np.kron(SIGMA_Y, SIGMA_Y)
        + np.kron(SIGMA_Z, SIGMA_Z)
    ) / 4
    parts = [
        (sx_sum, 0.0, ((omega1, omega, 0.0),)),
        (sy_sum, 0.0, ((omega1, omega, phi),)),
        (sz_sum, omega0, ()),
        (s_dot_s, exchange, ()),
    ]
    terms = drive_terms_from_matrices(parts, basis)

    def dense_h(t: float) -> np.ndarray:
        return (
            omega1 * math.cos(omega * t) * sx_sum
            + omega1 * math.cos(omega * t + phi) * sy_sum
            + omega0 * sz_sum
            + exchange * s_dot_s
        )

    rho_site = (IDENTITY_2 - SIGMA_Z) / 2
    return ModelSpec(
        name=name,
        n_sites=2,
        terms=terms,
        initial_kind="dense",
        initial_data=np.kron(rho_site, rho_site),
        observables=[
            ("P_1L", np.kron(P_LOW, IDENTITY_2)),
            ("P_1H", np.kron(P_HIGH, IDENTITY_2)),
            ("P_2L", np.kron(IDENTITY_2, P_LOW)),
            ("P_2H", np.kron(IDENTITY_2, P_HIGH)),
            ("S_1z", np.kron(SIGMA_Z / 2, IDENTITY_2)),
            ("S_2z", np.kron(IDENTITY_2, SIGMA_Z / 2)),
        ],
        notes=[
            "a_3/a_9 project to +omega1 cos(omega t + phi)/2; source "
            "tabulations list the opposite sign.",
            "a_4/a_13 project to +omega0/2; source tabulations list "
            "-omega0/2.",
            "rho_4(0)/rho_13(0) project to -1/4; source tabulations list "
            "+1/4.",
        ],
        params={
            "omega": omega,
            "omega0": omega0,
            "omega1": omega1,
            "phi": phi,
            "exchange": exchange,
        },
        dense_hamiltonian=dense_h,
    )


PRESETS: dict[str, Callable[[], ModelSpec]] = {
    "example1": lambda: example1_spec(),
    "example1-alt": lambda: example1_spec(omega=0.9, omega1=22.0, name="example1-alt"),
    "example2": lambda: example2_spec(),
    "example2-alt": lambda: example2_spec(omega=0.9, omega1=22.0, name="example2-alt"),
}


def preset(name: str) -> ModelSpec:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
    return factory()


def evaluate_observable(
    obs: np.ndarray, rho_coeffs: np.ndarray, basis: PauliBasis
) -> float:
    """Tr[O rho] computed in coefficient space: 2^N * (o . rho)."""
    o = project(obs, basis)
    rho_coeffs = np.asarray(rho_coeffs, dtype=float)
    if rho_coeffs.shape != (basis.dim,):
        raise ValueError("coefficient vector does not match basis")
    return float(2**basis.n_sites * (o @ rho_coeffs))


def _matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def _matrix_from_json(data: list) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def model_to_json_dict(spec: ModelSpec) -> dict:
    if spec.initial_kind == "dense":
        initial = {"kind": "dense", "data": _matrix_to_json(spec.initial_data)}
    else:
        initial = {"kind": "coeffs", "data": [float(v) for v in spec.initial_data]}
    return {
        "name": spec.name,
        "n_sites": spec.n_sites,
        "terms": [
            {
                "index": t.index,
                "constant": t.constant,
                "harmonics": [
                    {"amp": a, "freq": w, "phase": p} for a, w, p in t.harmonics
                ],
            }
            for t in spec.terms
        ],
        "initial": initial,
        "observables": [
            {"name": name, "matrix": _matrix_to_json(m)}
            for name, m in spec.observables
        ],
    }


def model_from_json_dict(data: dict) -> ModelSpec:
    terms = [
        DriveTerm(
            index=int(t["index"]),
            constant=float(t.get("constant", 0.0)),
            harmonics=tuple(
                (float(h["amp"]), float(h["freq"]), float(h["phase"]))
                for h in t.get("harmonics", [])
            ),
        )
        for t in data["terms"]
    ]
    initial = data["initial"]
    if initial["kind"] == "dense":
        initial_data = _matrix_from_json(initial["data"])
    elif initial["kind"] == "coeffs":
        initial_data = np.asarray(initial["data"], dtype=float)
    else:
        raise ValueError(f"unknown initial kind {initial['kind']!r}")
    observables = [
        (o["name"], _matrix_from_json(o["matrix"]))
        for o in data.get("observables", [])
    ]
    return ModelSpec(
        name=data["name"],
        n_sites=int(data["n_sites"]),
        terms=terms,
        initial_kind=initial["kind"],
        initial_data=initial_data,
        observables=observables,
    )


def load_model(path: str) -> ModelSpec:
    with open(path, encoding="utf-8") as fh:
        return model_from_json_dict(json.load(fh))


def save_model(spec: ModelSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def resolve_model(name_or_path: str) -> ModelSpec:
    """Preset name or JSON file path."""
    if name_or_path in PRESETS:
        return preset(name_or_path)
    return load_model(name_or_path)
