"""Hermitian matrix kernel: traces, spectral surgery, density-cone projection.

Every function accepts stacked operands of shape (..., N, N) and broadcasts
over the leading axes; a single matrix is the degenerate stack.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-9
EIG_FLOOR = -1e-9
SPECTRAL_MERGE_TOL = 1e-10


def dag(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose on the last two axes."""
    return np.conj(np.swapaxes(m, -1, -2))


def trace(m: np.ndarray) -> np.ndarray:
    """Trace over the last two axes (complex)."""
    return np.einsum("...ii", m)


def hermitize(m: np.ndarray) -> np.ndarray:
    """Hermitian part (m + m^dag)/2."""
    return 0.5 * (m + dag(m))


def is_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    """True when max |m - m^dag| <= tol across the whole stack."""
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {m.shape}")
    return bool(np.max(np.abs(m - dag(m))) <= tol)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[a, b] = ab - ba."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def expectation(c: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """<C> = Re tr(c rho); imaginary part is discarded (roundoff for Hermitian args)."""
    return np.einsum("...ij,...ji->...", c, rho).real


def variance(c: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """V(c, rho) = <c^2> - <c>^2 >= 0."""
    return expectation(c @ c, rho) - expectation(c, rho) ** 2


def purity(rho: np.ndarray) -> np.ndarray:
    """tr(rho^2), in [1/N, 1] on the density cone."""
    return np.einsum("...ij,...ji->...", rho, rho).real


def born_probability(p: np.ndarray, rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """tr(p rho) for an orthogonal projector p; rejects non-idempotent p."""
    p = np.asarray(p)
    if np.max(np.abs(p @ p - p)) > tol:
        raise ValueError("p is not an orthogonal projector (p^2 != p)")
    return expectation(p, rho)


def luders_update(p: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Post-measurement state p rho p / tr(p rho); outcome probability must be positive."""
    prob = born_probability(p, rho)
    if np.any(prob <= 1e-12):
        raise ValueError("Luders update undefined: outcome probability <= 1e-12")
    return (p @ rho @ p) / np.asarray(prob)[..., None, None]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending, merged within tol) and their spectral projectors."""

    eigenvalues: np.ndarray
    projectors: list[np.ndarray]

    @property
    def degenerate(self) -> bool:
        return any(int(round(trace(p).real)) > 1 for p in self.projectors)


def spectral_decompose(c: np.ndarray, tol: float = SPECTRAL_MERGE_TOL) -> SpectralDecomposition:
    """Eigendecomposition of a single Hermitian matrix with near-degenerate merging.

    Eigenvalues closer than tol are merged into one spectral projector, so the
    projectors always resolve the identity and commute with c exactly.
    """
    c = np.asarray(c)
    if c.ndim != 2:
        raise ValueError("spectral_decompose expects a single matrix")
    if not is_hermitian(c):
        raise ValueError("spectral_decompose expects a Hermitian matrix")
    w, v = np.linalg.eigh(c)
    groups: list[list[int]] = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    eigenvalues = np.array([w[g].mean() for g in groups])
    projectors = [v[:, g] @ dag(v[:, g]) for g in groups]
    return SpectralDecomposition(eigenvalues=eigenvalues, projectors=projectors)


def project_to_density(m: np.ndarray) -> np.ndarray:
    """Nearest density matrix: hermitize, clip negative eigenvalues, renormalize trace.

    Raises ValueError when the clipped trace is not positive (nothing to
    normalize onto the cone).
    """
    m = hermitize(np.asarray(m))
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    tr = w.sum(axis=-1)
    if np.any(tr <= 0.0):
        raise ValueError("projection failed: non-positive trace after clipping")
    w = w / tr[..., None]
    return (v * w[..., None, :]) @ dag(v)


def min_eigenvalue(m: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of stacked Hermitian matrices.

    The 2x2 radical keeps the per-step positivity check cheap inside the
    integrator and stays exact on degenerate spectra.  Larger sizes go through
    eigvalsh: a trigonometric 3x3 closed form was tried and dropped, its
    arccos endpoint conditioning costs ~1e-8 absolute accuracy exactly on the
    near-pure states this check has to resolve against EIG_FLOOR.
    """
    m = np.asarray(m)
    n = m.shape[-1]
    if n == 2:
        a = m[..., 0, 0].real
        d = m[..., 1, 1].real
        b = m[..., 0, 1]
        mid = 0.5 * (a + d)
        rad = np.sqrt((0.5 * (a - d)) ** 2 + (b * b.conj()).real)
        return mid - rad
    return np.linalg.eigvalsh(m)[..., 0]


def validate_density(rho: np.ndarray, name: str = "rho") -> None:
    """Density-cone membership check: Hermitian, unit trace, spectrum above the floor."""
    rho = np.asarray(rho)
    if not is_hermitian(rho):
        raise ValueError(f"{name} is not Hermitian within {HERMITICITY_TOL}")
    if np.max(np.abs(trace(rho).real - 1.0)) > TRACE_TOL:
        raise ValueError(f"{name} trace deviates from 1 beyond {TRACE_TOL}")
    if np.min(min_eigenvalue(rho)) < EIG_FLOOR:
        raise ValueError(f"{name} has an eigenvalue below {EIG_FLOOR}")


def fidelity_to(rho_pure: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Overlap tr(rho_pure rho); the squared fidelity when rho_pure is rank one."""
    return expectation(rho_pure, rho)
