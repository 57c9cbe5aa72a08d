"""Shared builders for the test suite: canonical models and random states."""
import numpy as np

from smestab import ModelSpec, TargetSpec

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

RHO_D2 = np.diag([1.0, 0.0]).astype(complex)
RHO_D3 = np.diag([1.0, 0.0, 0.0]).astype(complex)

H_A3 = np.diag([0.0, 1.0, 3.0]).astype(complex)
C3 = np.diag([1.0, 0.0, -1.0]).astype(complex)
H_B3 = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=complex)
H_B3_FIRST_ROW = np.array([[0, 1, 1], [1, 0, 0], [1, 0, 0]], dtype=complex)


def qubit(mu=1.0, eta=1.0, omega=1.0):
    """Canonical two-level model: h_a = omega sz, h_b = sx, c = sz, target z=+1."""
    model = ModelSpec(h_a=omega * SZ, h_b=SX, c=SZ, mu=mu, eta=eta)
    return model, TargetSpec.for_model(model, RHO_D2)


def qutrit(mu=1.0, eta=1.0, h_b=None):
    """Three-level model with strongly regular h_a and a simple observable."""
    model = ModelSpec(h_a=H_A3, h_b=H_B3 if h_b is None else h_b, c=C3, mu=mu, eta=eta)
    return model, TargetSpec.for_model(model, RHO_D3)


def ginibre(rng, n, batch=()):
    """Full-rank random density matrices (normalized Wishart form)."""
    g = rng.normal(size=(*batch, n, n)) + 1j * rng.normal(size=(*batch, n, n))
    rho = g @ np.conj(np.swapaxes(g, -1, -2))
    tr = np.einsum("...ii", rho).real
    return rho / tr[..., None, None]


def random_pure(rng, n, batch=()):
    """Rank-one random density matrices from isotropic state vectors."""
    psi = rng.normal(size=(*batch, n)) + 1j * rng.normal(size=(*batch, n))
    psi = psi / np.linalg.norm(psi, axis=-1, keepdims=True)
    return np.einsum("...i,...j->...ij", psi, np.conj(psi))
