"""Euler-Maruyama integration of the conditioned dynamics, one or many paths.

Trajectories are advanced in lockstep on stacked (B, N, N) arrays. Each
trajectory index draws its Brownian increments from its own counter-based
substream keyed (master_seed, trajectory_index), so a path is bit-identical
whether it runs alone or inside any batch, and reruns reproduce it exactly.

Per step: the control is evaluated at the pre-step state, the Ito increment is
applied, the state is re-Hermitized and trace-renormalized, and the positivity
clip fires only when the smallest eigenvalue drops below the validity floor.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    ModelSpec,
    TargetSpec,
    diffusion_term,
    measurement_increment,
    sme_drift,
    sse_diffusion,
    sse_drift,
)
from .hermitian import EIG_FLOOR, dag, hermitize, min_eigenvalue, purity, trace
from .lyapunov import (
    ControllerSpec,
    LyapunovReport,
    closed_loop_generator,
    feedback,
    l0_v_tilde,
    lb_v_tilde,
    third_central_moment,
    v1 as _v1,
    v2 as _v2,
    v_tilde as _v_tilde,
)

REPRESENTATIONS = ("sme", "sse")
REJECTION_BUDGET = 1e-3
NOISE_WINDOW = 4096


class IntegrationError(RuntimeError):
    """Numerical failure inside the step loop (non-finite state, bad dt)."""


@dataclass(frozen=True)
class SimConfig:
    """Step size, horizon, seeding, and recording policy for one integration."""

    dt: float
    t_final: float
    seed: int
    record_stride: int = 1
    convergence_fidelity: float = 0.99
    representation: str = "sme"

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_final < self.dt:
            raise ValueError("t_final must cover at least one step")
        if self.seed < 0 or self.seed > 2**64 - 1:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.record_stride < 1 or int(self.record_stride) != self.record_stride:
            raise ValueError("record_stride must be a positive integer")
        if not 0.5 < self.convergence_fidelity <= 1.0:
            raise ValueError("convergence_fidelity must lie in (0.5, 1]")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"representation must be one of {REPRESENTATIONS}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass
class Trajectory:
    """One recorded path with its certificate series and final classification."""

    times: np.ndarray
    states: list[np.ndarray]
    controls: np.ndarray
    records: np.ndarray
    lyapunov: list[LyapunovReport]
    outcome: str
    fidelity_target: np.ndarray
    purity: np.ndarray
    n_steps: int
    n_projected: int
    n_rejected: int
    trajectory_index: int = 0

    @property
    def valid(self) -> bool:
        return self.n_rejected <= REJECTION_BUDGET * self.n_steps


def _substream(seed: int, index: int) -> np.random.Generator:
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def em_step(
    rho: np.ndarray,
    model: ModelSpec,
    target: TargetSpec,
    ctrl: ControllerSpec,
    dt: float,
    dW: float,
) -> tuple[np.ndarray, float, float]:
    """One Euler-Maruyama step of the density SME; control from the pre-step state.

    Returns (rho_next, u, dY). The result is re-Hermitized, trace-normalized,
    and eigenvalue-clipped when the spectrum leaves the validity floor; a
    non-positive trace raises IntegrationError (the step cannot be accepted).
    """
    if not np.isfinite(dW):
        raise ValueError("dW must be finite")
    rho = np.asarray(rho, dtype=complex)
    u = float(feedback(rho, model, target, ctrl))
    dY = float(measurement_increment(rho, model.c, model.eta, dt, dW))
    g = diffusion_term(rho, model.c, model.mu, model.eta)
    out = rho + sme_drift(rho, model, u) * dt + g * dW
    out = hermitize(out)
    tr = float(trace(out).real)
    if not np.isfinite(tr) or tr <= 0.0:
        raise IntegrationError("step rejected: non-positive trace after increment")
    out = out / tr
    if float(min_eigenvalue(out)) < EIG_FLOOR:
        w, v = np.linalg.eigh(out)
        w = np.clip(w, 0.0, None)
        out = (v * (w / w.sum())) @ dag(v)
    return out, u, dY


def sse_step(
    psi: np.ndarray,
    model: ModelSpec,
    target: TargetSpec,
    ctrl: ControllerSpec,
    dt: float,
    dW: float,
) -> tuple[np.ndarray, float, float]:
    """One Euler-Maruyama step of the state-vector equation, renormalized.

    Valid at eta = 1 only; the control is evaluated on |psi><psi| with the same
    law as the density path.
    """
    if model.eta != 1.0:
        raise ValueError("the state-vector representation requires eta = 1")
    if not np.isfinite(dW):
        raise ValueError("dW must be finite")
    psi = np.asarray(psi, dtype=complex)
    rho = np.einsum("...i,...j->...ij", psi, np.conj(psi))
    u = float(feedback(rho, model, target, ctrl))
    dY = float(measurement_increment(rho, model.c, model.eta, dt, dW))
    out = psi + sse_drift(psi, model, u) * dt + sse_diffusion(psi, model) * dW
    norm = float(np.linalg.norm(out))
    if not np.isfinite(norm) or norm <= 0.0:
        raise IntegrationError("step rejected: vanishing norm after increment")
    return out / norm, u, dY


@dataclass
class BatchResult:
    """Recorded series for a lockstep batch, trajectory-major."""

    indices: list[int]
    times: np.ndarray
    controls: np.ndarray
    records: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    v_tilde: np.ndarray
    lv: np.ndarray
    l0: np.ndarray
    lb: np.ndarray
    third: np.ndarray
    fidelity: np.ndarray
    purity: np.ndarray
    final_states: np.ndarray
    n_steps: int
    n_projected: np.ndarray
    n_rejected: np.ndarray
    states: np.ndarray | None = field(default=None, repr=False)


def _record_slots(n_steps: int, stride: int) -> np.ndarray:
    slots = list(range(0, n_steps + 1, stride))
    if slots[-1] != n_steps:
        slots.append(n_steps)
    return np.asarray(slots)


def _classify(final: np.ndarray, target: TargetSpec, threshold: float) -> list[str]:
    labels = []
    f_t = np.einsum("ij,bji->b", target.rho_d, final).real
    f_a = np.stack(
        [np.einsum("ij,bji->b", a, final).real for a in target.antipodal], axis=1
    )
    for i in range(final.shape[0]):
        if f_t[i] >= threshold:
            labels.append("converged_target")
            continue
        hits = np.nonzero(f_a[i] >= threshold)[0]
        labels.append(f"converged_antipodal({hits[0]})" if hits.size else "undetermined")
    return labels


def run_batch(
    rho0: np.ndarray,
    model: ModelSpec,
    target: TargetSpec,
    ctrl: ControllerSpec,
    sim: SimConfig,
    indices: list[int] | None = None,
    n_trajectories: int = 1,
    record_states: bool = False,
) -> BatchResult:
    """Integrate trajectories in lockstep from a shared or stacked initial state.

    rho0 is broadcast against (B, N, N), so one state may be shared by the
    whole batch or each trajectory may start from its own. indices selects the
    noise substreams (default 0..n_trajectories-1); every recorded scalar
    series has shape (B, n_recorded).
    """
    if indices is None:
        indices = list(range(n_trajectories))
    if sim.representation == "sse":
        return _run_batch_sse(rho0, model, target, ctrl, sim, indices, record_states)
    return _run_batch_sme(rho0, model, target, ctrl, sim, indices, record_states)


def _alloc(b: int, n_rec: int) -> dict[str, np.ndarray]:
    return {
        name: np.zeros((b, n_rec))
        for name in (
            "controls",
            "records",
            "v1",
            "v2",
            "v_tilde",
            "lv",
            "l0",
            "lb",
            "third",
            "fidelity",
            "purity",
        )
    }


def _record_point(
    out: dict[str, np.ndarray],
    slot: int,
    rho: np.ndarray,
    u: np.ndarray,
    window_dy: np.ndarray,
    model: ModelSpec,
    target: TargetSpec,
    ctrl: ControllerSpec,
) -> None:
    out["controls"][:, slot] = u
    out["records"][:, slot] = window_dy
    out["v1"][:, slot] = _v1(rho, target)
    out["v2"][:, slot] = _v2(rho, model)
    out["v_tilde"][:, slot] = _v_tilde(rho, model, target, ctrl.ell)
    out["lv"][:, slot] = closed_loop_generator(rho, model, target, ctrl)
    out["l0"][:, slot] = l0_v_tilde(rho, model, ctrl.ell)
    out["lb"][:, slot] = lb_v_tilde(rho, model, target, ctrl.ell)
    out["third"][:, slot] = third_central_moment(model.c, rho)
    out["fidelity"][:, slot] = np.einsum("ij,...ji->...", target.rho_d, rho).real
    out["purity"][:, slot] = purity(rho)


def _run_batch_sme(
    rho0: np.ndarray,
    model: ModelSpec,
    target: TargetSpec,
    ctrl: ControllerSpec,
    sim: SimConfig,
    indices: list[int],
    record_states: bool,
) -> BatchResult:
    b = len(indices)
    n = model.n
    n_steps = sim.n_steps
    slots = _record_slots(n_steps, sim.record_stride)
    n_rec = len(slots)
    slot_of = {int(k): j for j, k in enumerate(slots)}

    rho = np.broadcast_to(np.asarray(rho0, dtype=complex), (b, n, n)).copy()
    gens = [_substream(sim.seed, i) for i in indices]
    sqrt_dt = np.sqrt(sim.dt)

    out = _alloc(b, n_rec)
    states = np.zeros((b, n_rec, n, n), dtype=complex) if record_states else None
    n_projected = np.zeros(b, dtype=int)
    n_rejected = np.zeros(b, dtype=int)
    window_dy = np.zeros(b)

    dw_block = np.empty((b, 0))
    block_start = 0
    for k in range(n_steps + 1):
        u = feedback(rho, model, target, ctrl)
        if k in slot_of:
            j = slot_of[k]
            _record_point(out, j, rho, u, window_dy, model, target, ctrl)
            if states is not None:
                states[:, j] = rho
            window_dy = np.zeros(b)
        if k == n_steps:
            break
        if k >= block_start + dw_block.shape[1]:
            block_start = k
            width = min(NOISE_WINDOW, n_steps - k)
            dw_block = np.stack([g.normal(0.0, sqrt_dt, width) for g in gens])
        dw = dw_block[:, k - block_start]

        window_dy = window_dy + measurement_increment(rho, model.c, model.eta, sim.dt, dw)
        g = diffusion_term(rho, model.c, model.mu, model.eta)
        nxt = rho + sme_drift(rho, model, u) * sim.dt + g * dw[:, None, None]
        nxt = hermitize(nxt)
        tr = trace(nxt).real
        if not np.all(np.isfinite(tr)):
            raise IntegrationError(f"non-finite state at step {k}; reduce dt")
        bad = tr <= 0.0
        if np.any(bad):
            n_rejected[bad] += 1
            nxt[bad] = rho[bad]
            tr = np.where(bad, 1.0, tr)
        nxt = nxt / tr[:, None, None]
        low = min_eigenvalue(nxt) < EIG_FLOOR
        if np.any(low):
            n_projected[low] += 1
            w, v = np.linalg.eigh(nxt[low])
            w = np.clip(w, 0.0, None)
            w = w / w.sum(axis=-1, keepdims=True)
            nxt[low] = (v * w[..., None, :]) @ dag(v)
        rho = nxt

    return BatchResult(
        indices=list(indices),
        times=slots * sim.dt,
        final_states=rho,
        n_steps=n_steps,
        n_projected=n_projected,
        n_rejected=n_rejected,
        states=states,
        **out,
    )


def _run_batch_sse(
    rho0: np.ndarray,
    model: ModelSpec,
    target: TargetSpec,
    ctrl: ControllerSpec,
    sim: SimConfig,
    indices: list[int],
    record_states: bool,
) -> BatchResult:
    if model.eta != 1.0:
        raise ValueError("the state-vector representation requires eta = 1")
    b = len(indices)
    n = model.n
    n_steps = sim.n_steps
    slots = _record_slots(n_steps, sim.record_stride)
    n_rec = len(slots)
    slot_of = {int(k): j for j, k in enumerate(slots)}

    rho0 = np.asarray(rho0, dtype=complex)
    if np.max(np.abs(purity(rho0) - 1.0)) > 1e-9:
        raise ValueError("the state-vector representation requires a rank-one rho0")
    w0, v0 = np.linalg.eigh(rho0)
    psi = np.broadcast_to(v0[..., :, -1], (b, n)).copy()

    gens = [_substream(sim.seed, i) for i in indices]
    sqrt_dt = np.sqrt(sim.dt)

    out = _alloc(b, n_rec)
    states = np.zeros((b, n_rec, n, n), dtype=complex) if record_states else None
    window_dy = np.zeros(b)

    dw_block = np.empty((b, 0))
    block_start = 0
    for k in range(n_steps + 1):
        rho = np.einsum("...i,...j->...ij", psi, np.conj(psi))
        u = feedback(rho, model, target, ctrl)
        if k in slot_of:
            j = slot_of[k]
            _record_point(out, j, rho, u, window_dy, model, target, ctrl)
            if states is not None:
                states[:, j] = rho
            window_dy = np.zeros(b)
        if k == n_steps:
            break
        if k >= block_start + dw_block.shape[1]:
            block_start = k
            width = min(NOISE_WINDOW, n_steps - k)
            dw_block = np.stack([g.normal(0.0, sqrt_dt, width) for g in gens])
        dw = dw_block[:, k - block_start]

        window_dy = window_dy + measurement_increment(rho, model.c, model.eta, sim.dt, dw)
        psi = psi + sse_drift(psi, model, u) * sim.dt + sse_diffusion(psi, model) * dw[:, None]
        norm = np.linalg.norm(psi, axis=-1)
        if not np.all(np.isfinite(norm)) or np.any(norm <= 0.0):
            raise IntegrationError(f"degenerate state-vector norm at step {k}; reduce dt")
        psi = psi / norm[:, None]

    final = np.einsum("...i,...j->...ij", psi, np.conj(psi))
    return BatchResult(
        indices=list(indices),
        times=slots * sim.dt,
        final_states=final,
        n_steps=n_steps,
        n_projected=np.zeros(b, dtype=int),
        n_rejected=np.zeros(b, dtype=int),
        states=states,
        **out,
    )


def _to_trajectory(res: BatchResult, i: int, target: TargetSpec, threshold: float) -> Trajectory:
    outcome = _classify(res.final_states[i : i + 1], target, threshold)[0]
    reports = [
        LyapunovReport(
            v1=float(res.v1[i, j]),
            v2=float(res.v2[i, j]),
            v_tilde=float(res.v_tilde[i, j]),
            lv_closed_loop=float(res.lv[i, j]),
            l0_v=float(res.l0[i, j]),
            lb_v=float(res.lb[i, j]),
            third_moment=float(res.third[i, j]),
        )
        for j in range(len(res.times))
    ]
    states = [res.states[i, j] for j in range(len(res.times))] if res.states is not None else []
    return Trajectory(
        times=res.times.copy(),
        states=states,
        controls=res.controls[i].copy(),
        records=res.records[i].copy(),
        lyapunov=reports,
        outcome=outcome,
        fidelity_target=res.fidelity[i].copy(),
        purity=res.purity[i].copy(),
        n_steps=res.n_steps,
        n_projected=int(res.n_projected[i]),
        n_rejected=int(res.n_rejected[i]),
        trajectory_index=res.indices[i],
    )


def simulate(
    rho0: np.ndarray,
    model: ModelSpec,
    target: TargetSpec,
    ctrl: ControllerSpec,
    sim: SimConfig,
    trajectory_index: int = 0,
) -> Trajectory:
    """Integrate a single trajectory and record states and certificates."""
    res = run_batch(
        rho0, model, target, ctrl, sim, indices=[trajectory_index], record_states=True
    )
    return _to_trajectory(res, 0, target, sim.convergence_fidelity)


def simulate_many(
    rho0: np.ndarray,
    model: ModelSpec,
    target: TargetSpec,
    ctrl: ControllerSpec,
    sim: SimConfig,
    n_trajectories: int,
    record_states: bool = True,
) -> list[Trajectory]:
    """Integrate trajectories 0..n-1 in lockstep and split into Trajectory objects."""
    res = run_batch(
        rho0,
        model,
        target,
        ctrl,
        sim,
        n_trajectories=n_trajectories,
        record_states=record_states,
    )
    return [
        _to_trajectory(res, i, target, sim.convergence_fidelity)
        for i in range(n_trajectories)
    ]
