"""Hermitian Pauli-string basis with a symplectic bit-mask encoding.

Every basis element is a tensor product of single-site factors from
{I, sigma_x, sigma_y, sigma_z}, stored as two integers: bit ``N-1-s`` of
``x_mask`` / ``z_mask`` holds the X / Z component on site ``s``.  The
factor with both bits set is sigma_y = i * X @ Z, which makes every
encoded string Hermitian, unitary and its own inverse.

The basis is ordered canonically: the element at 0-based index ``i`` has
per-site letters given by the base-4 digits of ``i`` (0=I, 1=X, 2=Y, 3=Z,
most significant digit = site 1), so index 0 is the identity string.
User-facing output elsewhere in the package converts to 1-based indices.

Products reduce to XOR on the masks plus a power-of-i phase tracked with
popcounts.  Two strings either commute or anticommute; the commutator of
an anticommuting pair is ``2 * phase * h_k`` for a single third string
``h_k``, so all structure constants are real and equal to +/-2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ResourceLimitError, StructureConsistencyError

MAX_SITES = 6

_LETTERS = "IXYZ"
# base-4 digit -> (x bit, z bit)
_DIGIT_TO_XZ = ((0, 0), (1, 0), (1, 1), (0, 1))
_XZ_TO_DIGIT = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}
_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)

_SITE_MATRICES = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """One Hermitian Pauli string on ``n_sites`` spin-1/2 sites."""

    x_mask: int
    z_mask: int
    n_sites: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        top = 1 << self.n_sites
        if not (0 <= self.x_mask < top and 0 <= self.z_mask < top):
            raise ValueError("mask out of range for n_sites")

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def site_digit(self, site: int) -> int:
        """Base-4 letter code (0=I, 1=X, 2=Y, 3=Z) on 0-based ``site``."""
        bit = self.n_sites - 1 - site
        x = (self.x_mask >> bit) & 1
        z = (self.z_mask >> bit) & 1
        return _XZ_TO_DIGIT[(x, z)]

    def label(self) -> str:
        return "".join(_LETTERS[self.site_digit(s)] for s in range(self.n_sites))

    def to_matrix(self) -> np.ndarray:
        """Dense 2^N x 2^N complex realization."""
        m = np.array([[1.0 + 0j]])
        for s in range(self.n_sites):
            m = np.kron(m, _SITE_MATRICES[self.site_digit(s)])
        return m

    def __repr__(self) -> str:
        return f"PauliString({self.label()!r})"


class PauliBasis:
    """All 4^N Pauli strings on N sites in canonical base-4 order."""

    def __init__(self, n_sites: int, elements: tuple[PauliString, ...]):
        self.n_sites = n_sites
        self.elements = elements
        self.dim = len(elements)
        self._index = {(p.x_mask, p.z_mask): i for i, p in enumerate(elements)}

    def __len__(self) -> int:
        return self.dim

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i: int) -> PauliString:
        return self.elements[i]

    def index_of(self, p: PauliString) -> int:
        if p.n_sites != self.n_sites:
            raise ValueError("site count mismatch")
        return self._index[(p.x_mask, p.z_mask)]

    @cached_property
    def matrices(self) -> np.ndarray:
        """Stacked dense realizations, shape (4^N, 2^N, 2^N)."""
        return np.stack([p.to_matrix() for p in self.elements])

    def labels(self) -> list[str]:
        return [p.label() for p in self.elements]

    def __repr__(self) -> str:
        return f"PauliBasis(n_sites={self.n_sites}, dim={self.dim})"


def build_basis(n_sites: int, max_sites: int = MAX_SITES) -> PauliBasis:
    """Construct the ordered Pauli-string basis for ``n_sites`` spins.

    Raises ResourceLimitError beyond ``max_sites`` (default 6); the basis
    holds 4^N strings of dimension 2^N, so the cap keeps desk-scale use
    from exploding.
    """
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    if n_sites > max_sites:
        raise ResourceLimitError(
            f"n_sites={n_sites} exceeds cap {max_sites} (4^N basis, 2^N matrices)"
        )
    elements = []
    for idx in range(4**n_sites):
        x_mask = 0
        z_mask = 0
        rem = idx
        for bit in range(n_sites):
            x, z = _DIGIT_TO_XZ[rem % 4]
            x_mask |= x << bit
            z_mask |= z << bit
            rem //= 4
        elements.append(PauliString(x_mask, z_mask, n_sites))
    return PauliBasis(n_sites, tuple(elements))


def multiply(p: PauliString, q: PauliString) -> tuple[complex, PauliString]:
    """Product p @ q as (phase, string) with phase in {+1, -1, +i, -i}.

    Writing each Hermitian string as i^{|x & z|} X^x Z^z, the product
    collects one factor of -1 per site where q's X passes p's Z, and the
    leftover power of i from re-normalizing the result to Hermitian form.
    """
    if p.n_sites != q.n_sites:
        raise ValueError("site count mismatch")
    x = p.x_mask ^ q.x_mask
    z = p.z_mask ^ q.z_mask
    ipow = (
        (p.x_mask & p.z_mask).bit_count()
        + (q.x_mask & q.z_mask).bit_count()
        - (x & z).bit_count()
        + 2 * (p.z_mask & q.x_mask).bit_count()
    ) % 4
    return _I_POWERS[ipow], PauliString(x, z, p.n_sites)


def commutes(p: PauliString, q: PauliString) -> bool:
    """True iff the two strings commute (symplectic inner product is even)."""
    if p.n_sites != q.n_sites:
        raise ValueError("site count mismatch")
    overlap = (p.x_mask & q.z_mask).bit_count() + (p.z_mask & q.x_mask).bit_count()
    return overlap % 2 == 0


def commutator_coeffs(i: int, j: int, basis: PauliBasis) -> list[tuple[int, float]]:
    """Sparse expansion [h_i, h_j] = i * sum_k c * h_k as [(k, c)].

    For Pauli strings the list is empty (commuting pair) or holds exactly
    one entry with c = +/-2.
    """
    p = basis[i]
    q = basis[j]
    if commutes(p, q):
        return []
    phase, r = multiply(p, q)
    # anticommuting Hermitian strings: p q is anti-Hermitian, so phase = +/-i
    c = 2 * phase / 1j
    if abs(c.imag) > 1e-12:
        raise StructureConsistencyError(
            f"non-real structure constant {c!r} for pair ({i}, {j})"
        )
    return [(basis.index_of(r), float(c.real))]


class StructureTensor:
    """Sparse commutator-closure constants and their rotation generators.

    ``entries`` maps (k, i, j) to the real constant such that
    [h_k, h_i] = i * sum_j entries[(k, i, j)] * h_j.  The dense generator
    Q_k with (Q_k)_{i,j} = entries[(k, i, j)] is skew-symmetric and, for
    Pauli strings, splits into disjoint 2x2 planes; the plane list per k
    drives exact closed-form rotations downstream.
    """

    def __init__(self, dim: int, entries: dict[tuple[int, int, int], float]):
        self.dim = dim
        self.entries = entries
        self._generators: dict[int, np.ndarray] = {}
        self._planes: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._coupling: tuple[np.ndarray, ...] | None = None

    def generator(self, k: int) -> np.ndarray:
        """Dense skew-symmetric Q_k, materialized once and cached."""
        if k not in self._generators:
            q = np.zeros((self.dim, self.dim))
            for (kk, i, j), c in self.entries.items():
                if kk == k:
                    q[i, j] = c
            q.setflags(write=False)
            self._generators[k] = q
        return self._generators[k]

    @property
    def generators(self) -> list[np.ndarray]:
        return [self.generator(k) for k in range(self.dim)]

    def planes(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Disjoint rotation planes of Q_k as index/coefficient arrays.

        Returns (ii, jj, cc) with i < j and (Q_k)_{i,j} = cc; each basis
        index appears in at most one plane for a given k.
        """
        if k not in self._planes:
            ii, jj, cc = [], [], []
            for (kk, i, j), c in sorted(self.entries.items()):
                if kk == k and i < j:
                    ii.append(i)
                    jj.append(j)
                    cc.append(c)
            self._planes[k] = (
                np.asarray(ii, dtype=np.intp),
                np.asarray(jj, dtype=np.intp),
                np.asarray(cc, dtype=float),
            )
        return self._planes[k]

    def coupling_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """All entries flattened to (ks, iis, jjs, cs) for generator assembly.

        The (i, j) positions across distinct k never collide, because k is
        fixed by the product h_i h_j; scattering with plain assignment is
        therefore exact.
        """
        if self._coupling is None:
            items = sorted(self.entries.items())
            ks = np.asarray([k for (k, _, _), _ in items], dtype=np.intp)
            iis = np.asarray([i for (_, i, _), _ in items], dtype=np.intp)
            jjs = np.asarray([j for (_, _, j), _ in items], dtype=np.intp)
            cs = np.asarray([c for _, c in items], dtype=float)
            self._coupling = (ks, iis, jjs, cs)
        return self._coupling

    def __repr__(self) -> str:
        return f"StructureTensor(dim={self.dim}, nnz={len(self.entries)})"


def build_structure_tensor(basis: PauliBasis) -> StructureTensor:
    """Assemble the full structure tensor of the basis.

    Validates the skew symmetries c_{k,i,j} = -c_{k,j,i} and
    c_{i,j,k} = -c_{j,i,k} exhaustively over the stored entries.
    """
    n = basis.dim
    entries: dict[tuple[int, int, int], float] = {}
    for k in range(n):
        for i in range(n):
            for j, c in commutator_coeffs(k, i, basis):
                entries[(k, i, j)] = c
    for (k, i, j), c in entries.items():
        if entries.get((k, j, i), 0.0) != -c or entries.get((i, k, j), 0.0) != -c:
            raise StructureConsistencyError(
                f"antisymmetry violated at (k={k}, i={i}, j={j})"
            )
    return StructureTensor(n, entries)


def project(
    op: np.ndarray,
    basis: PauliBasis,
    strict: bool = True,
    hermitian_tol: float = 1e-10,
) -> np.ndarray:
    """Coefficients of ``op`` in the basis via normalized traces.

    c_i = Tr[h_i @ op] / 2^N.  ``op`` is expected Hermitian within
    ``hermitian_tol``; violations raise in strict mode and warn otherwise
    (useful for integrator outputs carrying roundoff).  Returns the real
    parts; residual imaginary parts above the tolerance are rejected in
    strict mode.
    """
    op = np.asarray(op, dtype=complex)
    d = 2**basis.n_sites
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} does not match basis dim {d}")
    herm_residue = float(np.max(np.abs(op - op.conj().T)))
    if herm_residue > hermitian_tol:
        msg = f"operator is not Hermitian (residue {herm_residue:.3e})"
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, stacklevel=2)
    coeffs = np.einsum("kij,ji->k", basis.matrices, op) / d
    imag_residue = float(np.max(np.abs(coeffs.imag)))
    if strict and imag_residue > hermitian_tol:
        raise ValueError(f"projection has imaginary residue {imag_residue:.3e}")
    return np.ascontiguousarray(coeffs.real)


def reconstruct(coeffs: np.ndarray, basis: PauliBasis) -> np.ndarray:
    """Dense operator sum_i coeffs[i] * h_i (inverse of ``project``)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (basis.dim,):
        raise ValueError(f"expected {basis.dim} coefficients, got {coeffs.shape}")
    return np.einsum("k,kij->ij", coeffs, basis.matrices)
