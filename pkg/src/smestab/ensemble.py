"""Ensemble reduction: outcome frequencies, mean certificates, CSV emission.

Trajectories are integrated in lockstep (see integrate.run_batch) and reduced
in trajectory-index order, so identical configurations produce byte-identical
outputs regardless of batch size or host.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import ModelSpec, TargetSpec
from .hermitian import validate_density
from .integrate import BatchResult, REJECTION_BUDGET, SimConfig, Trajectory, _classify, run_batch
from .lyapunov import ControllerSpec

INVALID_BUDGET = 0.01


class EnsembleError(RuntimeError):
    """Raised when too many trajectories fail their step-rejection budget."""


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything needed to reproduce one ensemble run."""

    n_trajectories: int
    model: ModelSpec
    target: TargetSpec
    controller: ControllerSpec
    sim: SimConfig
    rho0: np.ndarray
    output_dir: str | None = None

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be at least 1")
        rho0 = np.asarray(self.rho0, dtype=complex)
        object.__setattr__(self, "rho0", rho0)
        if rho0.shape != (self.model.n, self.model.n):
            raise ValueError(f"rho0 shape {rho0.shape} does not match model dimension")
        validate_density(rho0, name="rho0")


@dataclass
class EnsembleStats:
    """Reduced ensemble observables."""

    n_trajectories: int
    n_valid: int
    excluded_indices: list[int]
    outcome_counts: dict[str, int]
    target_frequency: float
    target_frequency_stderr: float
    times: np.ndarray
    mean_v1: np.ndarray
    mean_v2: np.ndarray
    mean_v_tilde: np.ndarray
    mean_purity: np.ndarray
    mean_fidelity: np.ndarray
    supermartingale_violations: int
    v_tilde_paths: np.ndarray = field(repr=False, default=None)


def _outcome_labels(target: TargetSpec) -> list[str]:
    labels = ["converged_target"]
    labels += [f"converged_antipodal({j})" for j in range(len(target.antipodal))]
    labels.append("undetermined")
    return labels


def _count_supermartingale_violations(vt: np.ndarray) -> int:
    """Mean-increment up-moves of Vt exceeding 3 standard errors."""
    if vt.shape[0] < 2:
        return 0
    inc = np.diff(vt, axis=1)
    mean = inc.mean(axis=0)
    se = inc.std(axis=0, ddof=1) / np.sqrt(vt.shape[0])
    return int(np.sum(mean > 3.0 * se))


def reduce_batch(res: BatchResult, target: TargetSpec, sim: SimConfig) -> EnsembleStats:
    """Classify, exclude over-budget trajectories, and average the certificates."""
    b = len(res.indices)
    valid = res.n_rejected <= REJECTION_BUDGET * res.n_steps
    excluded = [res.indices[i] for i in range(b) if not valid[i]]
    if len(excluded) > INVALID_BUDGET * b:
        raise EnsembleError(
            f"{len(excluded)} of {b} trajectories exceeded the step-rejection budget"
        )
    n_valid = int(valid.sum())
    outcomes = _classify(res.final_states[valid], target, sim.convergence_fidelity)
    counts = {label: 0 for label in _outcome_labels(target)}
    for o in outcomes:
        counts[o] += 1
    freq = counts["converged_target"] / n_valid
    stderr = float(np.sqrt(freq * (1.0 - freq) / n_valid))
    vt = res.v_tilde[valid]
    return EnsembleStats(
        n_trajectories=b,
        n_valid=n_valid,
        excluded_indices=excluded,
        outcome_counts=counts,
        target_frequency=freq,
        target_frequency_stderr=stderr,
        times=res.times.copy(),
        mean_v1=res.v1[valid].mean(axis=0),
        mean_v2=res.v2[valid].mean(axis=0),
        mean_v_tilde=vt.mean(axis=0),
        mean_purity=res.purity[valid].mean(axis=0),
        mean_fidelity=res.fidelity[valid].mean(axis=0),
        supermartingale_violations=_count_supermartingale_violations(vt),
        v_tilde_paths=vt,
    )


def run_ensemble(cfg: EnsembleConfig) -> EnsembleStats:
    """Integrate the configured ensemble and reduce it."""
    res = run_batch(
        cfg.rho0,
        cfg.model,
        cfg.target,
        cfg.controller,
        cfg.sim,
        n_trajectories=cfg.n_trajectories,
        record_states=False,
    )
    return reduce_batch(res, cfg.target, cfg.sim)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(path: str | Path, traj: Trajectory) -> None:
    """Columns t, u, dY, fidelity_target, purity, v1, v2, v_tilde, lv."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "u", "dY", "fidelity_target", "purity", "v1", "v2", "v_tilde", "lv"])
        for j, t in enumerate(traj.times):
            rep = traj.lyapunov[j]
            w.writerow(
                [
                    _fmt(t),
                    _fmt(traj.controls[j]),
                    _fmt(traj.records[j]),
                    _fmt(traj.fidelity_target[j]),
                    _fmt(traj.purity[j]),
                    _fmt(rep.v1),
                    _fmt(rep.v2),
                    _fmt(rep.v_tilde),
                    _fmt(rep.lv_closed_loop),
                ]
            )


def write_summary_csv(path: str | Path, stats: EnsembleStats) -> None:
    """Columns outcome, count, frequency, stderr (binomial, per outcome)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["outcome", "count", "frequency", "stderr"])
        for label, count in stats.outcome_counts.items():
            f = count / stats.n_valid
            se = np.sqrt(f * (1.0 - f) / stats.n_valid)
            w.writerow([label, count, _fmt(f), _fmt(se)])


def write_mean_curves_csv(path: str | Path, stats: EnsembleStats) -> None:
    """Columns t, mean_v1, mean_v2, mean_vtilde, mean_purity, mean_fidelity."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mean_v1", "mean_v2", "mean_vtilde", "mean_purity", "mean_fidelity"])
        for j, t in enumerate(stats.times):
            w.writerow(
                [
                    _fmt(t),
                    _fmt(stats.mean_v1[j]),
                    _fmt(stats.mean_v2[j]),
                    _fmt(stats.mean_v_tilde[j]),
                    _fmt(stats.mean_purity[j]),
                    _fmt(stats.mean_fidelity[j]),
                ]
            )


def write_levelset_csv(path: str | Path, table: dict[str, np.ndarray]) -> None:
    """Columns y, z, lv, physical."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "z", "lv", "physical"])
        for j in range(len(table["y"])):
            w.writerow(
                [
                    _fmt(table["y"][j]),
                    _fmt(table["z"][j]),
                    _fmt(table["lv"][j]),
                    int(table["physical"][j]),
                ]
            )
