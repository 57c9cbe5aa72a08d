"""Closed-form qubit dynamics in Bloch coordinates (x, y, z) = tr(rho sigma).

Canonical model: h_a = omega sigma_z, h_b = sigma_x, c = sigma_z, target the
z = +1 pole diag(1, 0). The conditioned master equation reduces to

    dx = (-2 omega y - 2 mu x) dt - 2 sqrt(mu eta) x z dW
    dy = (+2 omega x - 2 u z - 2 mu y) dt - 2 sqrt(mu eta) y z dW
    dz =  2 u y dt + 2 sqrt(mu eta) (1 - z^2) dW

with V1 = (1 - z)/2, V2 = 1 - z^2, and the trace term T_ell = y (1 + 4 z/ell^2).
These forms exist to cross-check the general engine coordinate-free path; the
matrix engine is normative and the equivalence is pinned to 1e-9 by tests.
"""
from __future__ import annotations

import numpy as np

from .hermitian import EIG_FLOOR
from .integrate import SimConfig, _substream
from .lyapunov import ControllerSpec

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def to_density(b: np.ndarray) -> np.ndarray:
    """rho = (I + x sx + y sy + z sz)/2 for stacked Bloch vectors (..., 3)."""
    b = np.asarray(b, dtype=float)
    x, y, z = b[..., 0], b[..., 1], b[..., 2]
    out = 0.5 * (
        np.eye(2, dtype=complex)
        + x[..., None, None] * SIGMA_X
        + y[..., None, None] * SIGMA_Y
        + z[..., None, None] * SIGMA_Z
    )
    return out


def from_density(rho: np.ndarray) -> np.ndarray:
    """Bloch vector (..., 3) of stacked qubit densities."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (2, 2):
        raise ValueError("from_density expects 2x2 matrices")
    x = np.einsum("...ij,...ji->...", SIGMA_X, rho).real
    y = np.einsum("...ij,...ji->...", SIGMA_Y, rho).real
    z = np.einsum("...ij,...ji->...", SIGMA_Z, rho).real
    return np.stack([x, y, z], axis=-1)


def bloch_v1(b: np.ndarray) -> np.ndarray:
    """(1 - z)/2: distance to the z = +1 target pole."""
    return 0.5 * (1.0 - np.asarray(b)[..., 2])


def bloch_v2(b: np.ndarray) -> np.ndarray:
    """1 - z^2: variance of sigma_z."""
    return 1.0 - np.asarray(b)[..., 2] ** 2


def bloch_trace_term(b: np.ndarray, ell: float) -> np.ndarray:
    """T_ell = y (1 + 4 z / ell^2)."""
    b = np.asarray(b)
    return b[..., 1] * (1.0 + 4.0 * b[..., 2] / ell**2)


def bloch_feedback(b: np.ndarray, ctrl: ControllerSpec, mu: float, eta: float) -> np.ndarray:
    """The control laws in Bloch coordinates; mirrors feedback() exactly."""
    b = np.asarray(b)
    y = b[..., 1]
    if ctrl.kind == "open_loop":
        return np.zeros(y.shape)
    if ctrl.kind == "linear":
        return ctrl.k * y
    t = bloch_trace_term(b, ctrl.ell)
    if ctrl.kind == "sum_of_squares":
        return ctrl.k * t
    gain = 4.0 * ctrl.k * np.sqrt(mu * eta) / ctrl.ell
    return ctrl.k**2 * t - gain * bloch_v2(b)


def bloch_generator_vtilde(b: np.ndarray, u, ell: float, mu: float, eta: float) -> np.ndarray:
    """L Vt = -u y (1 + 4 z/ell^2) - (4 mu eta / ell^2) (1 - z^2)^2."""
    b = np.asarray(b)
    return -np.asarray(u) * bloch_trace_term(b, ell) - (
        4.0 * mu * eta / ell**2
    ) * bloch_v2(b) ** 2


def bloch_sme_increment(
    b: np.ndarray, omega: float, u, mu: float, eta: float, dt: float, dW
) -> np.ndarray:
    """One Euler-Maruyama increment (dx, dy, dz) of the conditioned equation."""
    b = np.asarray(b, dtype=float)
    u = np.asarray(u)
    dW = np.asarray(dW)
    x, y, z = b[..., 0], b[..., 1], b[..., 2]
    root = 2.0 * np.sqrt(mu * eta)
    dx = (-2.0 * omega * y - 2.0 * mu * x) * dt - root * x * z * dW
    dy = (2.0 * omega * x - 2.0 * u * z - 2.0 * mu * y) * dt - root * y * z * dW
    dz = 2.0 * u * y * dt + root * (1.0 - z**2) * dW
    return np.stack([dx, dy, dz], axis=-1)


def integrate_bloch(
    b0: np.ndarray,
    omega: float,
    ctrl: ControllerSpec,
    mu: float,
    eta: float,
    sim: SimConfig,
    indices: list[int] | None = None,
    n_trajectories: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Lockstep Bloch trajectories on the same substreams as the matrix engine.

    Returns (times, paths) with paths of shape (B, n_recorded, 3). The post-step
    maintenance mirrors the matrix engine: when the implied minimum eigenvalue
    (1 - r)/2 falls below the validity floor the vector is rescaled onto the
    unit sphere, which is what the eigenvalue clip does to a qubit state.
    """
    if indices is None:
        indices = list(range(n_trajectories))
    if sim.representation != "sme":
        raise ValueError("integrate_bloch implements the density representation only")
    b0 = np.asarray(b0, dtype=float)
    if b0.shape != (3,):
        raise ValueError("b0 must be a single Bloch vector of shape (3,)")
    n_steps = sim.n_steps
    slots = list(range(0, n_steps + 1, sim.record_stride))
    if slots[-1] != n_steps:
        slots.append(n_steps)
    slot_of = {k: j for j, k in enumerate(slots)}

    batch = len(indices)
    b = np.broadcast_to(b0, (batch, 3)).copy()
    gens = [_substream(sim.seed, i) for i in indices]
    sqrt_dt = np.sqrt(sim.dt)
    paths = np.zeros((batch, len(slots), 3))

    dw_block = np.empty((batch, 0))
    block_start = 0
    for k in range(n_steps + 1):
        if k in slot_of:
            paths[:, slot_of[k]] = b
        if k == n_steps:
            break
        if k >= block_start + dw_block.shape[1]:
            block_start = k
            width = min(4096, n_steps - k)
            dw_block = np.stack([g.normal(0.0, sqrt_dt, width) for g in gens])
        dw = dw_block[:, k - block_start]
        u = bloch_feedback(b, ctrl, mu, eta)
        b = b + bloch_sme_increment(b, omega, u, mu, eta, sim.dt, dw)
        r = np.sqrt(np.sum(b**2, axis=-1))
        hot = 0.5 * (1.0 - r) < EIG_FLOOR
        if np.any(hot):
            b[hot] = b[hot] / r[hot, None]
    return np.asarray(slots, dtype=float) * sim.dt, paths


def levelset_table(
    k: float, ell: float, mu: float, eta: float, resolution: int = 201
) -> dict[str, np.ndarray]:
    """Closed-loop L Vt of the square_of_sum law on a (y, z) grid over [-1, 1]^2.

    Returns flat arrays y, z, lv, physical (1 inside the unit disc). The law
    completes the square, so lv = -(k y (1 + 4 z/ell^2) - (2 sqrt(mu eta)/ell)
    (1 - z^2))^2 <= 0 everywhere.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    axis = np.linspace(-1.0, 1.0, resolution)
    yy, zz = np.meshgrid(axis, axis, indexing="ij")
    s = k * yy * (1.0 + 4.0 * zz / ell**2) - (2.0 * np.sqrt(mu * eta) / ell) * (
        1.0 - zz**2
    )
    lv = -(s**2)
    physical = (yy**2 + zz**2 <= 1.0).astype(int)
    return {
        "y": yy.ravel(),
        "z": zz.ravel(),
        "lv": lv.ravel(),
        "physical": physical.ravel(),
    }
