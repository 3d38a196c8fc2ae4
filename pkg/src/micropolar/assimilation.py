"""
Twin experiments probing finite-dimensionality empirically.

Mode synchronization slaves the low Galerkin modes of a second solution to
a reference solution by direct overwrite after every step, which realizes
the low-mode agreement hypothesis exactly, and records the energy left in
the complementary modes.  Node synchronization nudges the second solution
toward the nodal interpolant of the reference (the standard constructive
proxy for the purely asymptotic determining-nodes definition).  A checker
for the generalized Gronwall hypotheses evaluates the sign-indefinite
decay coefficient along the reference trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from micropolar import spectral
from micropolar.dynamics import (
    CflViolationError,
    Forcing,
    NumericsError,
    Params,
    State,
    _Stepper,
)
from micropolar.estimates import Constants
from micropolar.spectral import Grid, NodeSet, mode_mask

__all__ = [
    "SyncConfig",
    "SyncReport",
    "GronwallReport",
    "run_mode_sync",
    "run_node_sync",
    "check_gronwall_conditions",
    "fit_decay_rate",
    "default_nudging_gain",
]


@dataclass(frozen=True)
class SyncConfig:
    """
    Shared setup of a twin experiment: two initial states, one forcing per
    solution (the same object is allowed), duration and output stride.
    """

    params: Params
    reference: State
    perturbed: State
    forcing1: Forcing
    forcing2: Forcing
    t_end: float
    dt: float
    stride: int = 10
    cfl_limit: float = 0.5
    converged_rtol: float = 1e-16
    sustained_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.reference.grid != self.perturbed.grid:
            raise ValueError("twin states must share one grid")
        if self.t_end <= 0 or self.dt <= 0:
            raise ValueError("t_end and dt must be positive")


@dataclass
class SyncReport:
    """Decay histories of a twin experiment plus the convergence verdict."""

    kind: str
    times: np.ndarray
    series: dict[str, np.ndarray]
    converged: bool
    threshold_time: float | None
    rate: float | None
    rate_r2: float | None
    initial: float
    final: float
    diverged: bool = False
    meta: dict = field(default_factory=dict)

    def min_relative(self) -> float:
        key = "delta_Q" if self.kind == "modes" else "h1_diff"
        if self.initial == 0:
            return 0.0
        return float(np.min(self.series[key]) / self.initial)


def _product_energy(grid: Grid, dU: np.ndarray, dW: np.ndarray,
                    mask: np.ndarray | None = None) -> float:
    density = np.abs(dU[0]) ** 2 + np.abs(dU[1]) ** 2 + np.abs(dW) ** 2
    if mask is not None:
        density = density * mask
    return float(grid.area * np.sum(density))


def _h1_energy(grid: Grid, dU: np.ndarray, dW: np.ndarray) -> float:
    density = np.abs(dU[0]) ** 2 + np.abs(dU[1]) ** 2 + np.abs(dW) ** 2
    return float(grid.area * np.sum(grid.lam * density))


def _convergence(times: np.ndarray, values: np.ndarray, initial: float,
                 rtol: float, sustained_fraction: float) -> tuple[bool, float | None]:
    """Converged when the tail of the run stays below rtol * initial."""
    if initial <= 0:
        return True, float(times[0]) if len(times) else None
    below = values <= rtol * initial
    tail = max(2, int(sustained_fraction * len(values)))
    if not np.all(below[-tail:]):
        return False, None
    idx = len(below) - 1
    while idx > 0 and below[idx - 1]:
        idx -= 1
    return True, float(times[idx])


def _fit_window(times: np.ndarray, values: np.ndarray, initial: float) -> tuple[float, float] | None:
    """Decay rate over the clean part of the history: below half the
    initial value, above the roundoff floor."""
    if initial <= 0:
        return None
    usable = (values > 1e-24 * initial) & (values < 0.5 * initial)
    if np.count_nonzero(usable) < 10:
        return None
    return fit_decay_rate(times[usable], values[usable], transient_fraction=0.0)


def run_mode_sync(config: SyncConfig, m: int) -> SyncReport:
    """
    Twin run with the first m enumerated modes of the second solution
    overwritten by the reference after every step (conjugate-closed so the
    fields stay real; the effective slaved count is reported).  Records the
    projected energy differences delta_P (identically zero by construction)
    and delta_Q at the configured stride.
    """
    grid = config.reference.grid
    mask_P = mode_mask(grid, m, conjugate_closed=True)
    mask_Q = ~mask_P
    effective_m = int(np.count_nonzero(mask_P))

    s1 = _Stepper(grid, config.params, config.forcing1, config.dt, config.cfl_limit)
    s2 = _Stepper(grid, config.params, config.forcing2, config.dt, config.cfl_limit)
    U1, W1 = config.reference.u.stacked(), config.reference.omega.coeffs.copy()
    U2, W2 = config.perturbed.u.stacked(), config.perturbed.omega.coeffs.copy()

    def slave() -> None:
        U2[:, mask_P] = U1[:, mask_P]
        W2[mask_P] = W1[mask_P]

    slave()
    nsteps = int(round(config.t_end / config.dt))
    t0 = config.reference.t
    times = [t0]
    delta_P = [_product_energy(grid, U1 - U2, W1 - W2, mask_P)]
    delta_Q = [_product_energy(grid, U1 - U2, W1 - W2, mask_Q)]
    for i in range(nsteps):
        t = t0 + i * config.dt
        U1, W1 = s1.advance(U1, W1, t)
        U2, W2 = s2.advance(U2, W2, t)
        slave()
        if (i + 1) % config.stride == 0 or i + 1 == nsteps:
            times.append(t0 + (i + 1) * config.dt)
            delta_P.append(_product_energy(grid, U1 - U2, W1 - W2, mask_P))
            delta_Q.append(_product_energy(grid, U1 - U2, W1 - W2, mask_Q))

    times_arr = np.asarray(times)
    dq = np.asarray(delta_Q)
    converged, threshold_time = _convergence(times_arr, dq, dq[0],
                                             config.converged_rtol, config.sustained_fraction)
    fit = _fit_window(times_arr, dq, dq[0])
    return SyncReport(
        kind="modes", times=times_arr,
        series={"delta_P": np.asarray(delta_P), "delta_Q": dq},
        converged=converged, threshold_time=threshold_time,
        rate=None if fit is None else fit[0],
        rate_r2=None if fit is None else fit[1],
        initial=float(dq[0]), final=float(dq[-1]),
        meta={"m": m, "effective_m": effective_m},
    )


def default_nudging_gain(constants: Constants, node_count: int) -> float:
    """Dimensional default mu = k1 lambda1 N / (2 c)."""
    return constants.k1 * constants.lambda1 * node_count / (2.0 * constants.c)


def run_node_sync(config: SyncConfig, nodes: NodeSet, mu: float) -> SyncReport:
    """
    Twin run where the second solution is relaxed toward the reference's
    nodal interpolant: its right-hand sides gain -mu (I_h(u2) - I_h(u1)) and
    -mu (I_h(w2) - I_h(w1)), treated with the explicit part of the scheme.
    Records the node-value gaps eta and the H1 energy of the full
    difference; an energy blowup is reported as a diverged experiment with
    diagnostics rather than raised.
    """
    if mu <= 0:
        raise ValueError(f"nudging gain must be positive, got mu={mu}")
    grid = config.reference.grid
    if nodes.grid != grid:
        raise ValueError("node set belongs to a different grid")
    sq_cell = nodes.square_of_cell

    U1, W1 = config.reference.u.stacked(), config.reference.omega.coeffs.copy()
    U2, W2 = config.perturbed.u.stacked(), config.perturbed.omega.coeffs.copy()
    ref = {"U": U1, "W": W1}

    def interp(coeffs: np.ndarray) -> np.ndarray:
        """Spectrum of the piecewise-constant nodal interpolant I_h."""
        if nodes.aligned:
            gi = nodes.grid_indices
            vals = spectral._to_phys_array(coeffs).real[gi[:, 0], gi[:, 1]]
        else:
            vals = spectral._sample_scalar(coeffs, nodes)
        piece = vals[sq_cell]
        return spectral._to_spec_array(piece - piece.mean())

    def nudge(t: float, U: np.ndarray, W: np.ndarray):
        RU, RW = ref["U"], ref["W"]
        dU = np.stack([interp(U[0] - RU[0]), interp(U[1] - RU[1])])
        dW = interp(W - RW)
        return -mu * dU, -mu * dW

    s1 = _Stepper(grid, config.params, config.forcing1, config.dt, config.cfl_limit)
    s2 = _Stepper(grid, config.params, config.forcing2, config.dt, config.cfl_limit,
                  extra=nudge)

    nsteps = int(round(config.t_end / config.dt))
    t0 = config.reference.t
    times = [t0]
    eta_u = [_eta_vec(U2 - U1, nodes)]
    eta_om = [_eta_scalar(W2 - W1, nodes)]
    h1 = [_h1_energy(grid, U2 - U1, W2 - W1)]
    diverged = False
    diagnostics: dict = {}
    for i in range(nsteps):
        t = t0 + i * config.dt
        try:
            # advance the nudged solution first so it observes the
            # reference at the same time level
            U2, W2 = s2.advance(U2, W2, t)
        except (NumericsError, CflViolationError) as err:
            diverged = True
            diagnostics = {"blowup_time": t, "error": str(err), "mu": mu}
            break
        # reference failures are configuration errors and propagate
        U1, W1 = s1.advance(U1, W1, t)
        ref["U"], ref["W"] = U1, W1
        if (i + 1) % config.stride == 0 or i + 1 == nsteps:
            times.append(t0 + (i + 1) * config.dt)
            eta_u.append(_eta_vec(U2 - U1, nodes))
            eta_om.append(_eta_scalar(W2 - W1, nodes))
            h1.append(_h1_energy(grid, U2 - U1, W2 - W1))

    times_arr = np.asarray(times)
    h1_arr = np.asarray(h1)
    if diverged:
        converged, threshold_time, fit = False, None, None
    else:
        converged, threshold_time = _convergence(times_arr, h1_arr, h1_arr[0], 1e-10,
                                                 config.sustained_fraction)
        fit = _fit_window(times_arr, h1_arr, h1_arr[0])
    return SyncReport(
        kind="nodes", times=times_arr,
        series={"eta_u": np.asarray(eta_u), "eta_omega": np.asarray(eta_om), "h1_diff": h1_arr},
        converged=converged, threshold_time=threshold_time,
        rate=None if fit is None else fit[0],
        rate_r2=None if fit is None else fit[1],
        initial=float(h1_arr[0]), final=float(h1_arr[-1]),
        diverged=diverged,
        meta={"mu": mu, "num_nodes": nodes.count, **diagnostics},
    )


def _eta_vec(dU: np.ndarray, nodes: NodeSet) -> float:
    v1 = spectral._sample_scalar(dU[0], nodes)
    v2 = spectral._sample_scalar(dU[1], nodes)
    return float(np.max(np.hypot(v1, v2)))


def _eta_scalar(dW: np.ndarray, nodes: NodeSet) -> float:
    return float(np.max(np.abs(spectral._sample_scalar(dW, nodes))))


@dataclass
class GronwallReport:
    """Windowed averages of the decay coefficient gamma along a trajectory."""

    window: float
    window_averages: np.ndarray
    window_starts: np.ndarray
    liminf_proxy: float
    gamma_minus_limsup_proxy: float
    l1_holds: bool
    l2_holds: bool


def check_gronwall_conditions(traj, constants: Constants, m: int, grid: Grid,
                              window: float | None = None) -> GronwallReport:
    """
    Hypothesis audit for the generalized Gronwall lemma at mode count m:
    sliding-window averages of

        gamma(t) = k1 lambda_{m+1} - (4 c1^2 / k3) (||u1||^2 + ||w1||^2)
                   - 16 nu_r^2 / alpha

    must stay positive (liminf condition), and averages of the negative part
    of gamma must stay bounded.  The window defaults to the constants'
    uniform-Gronwall length r.
    """
    if not 0 <= m < grid.num_modes:
        raise ValueError(f"mode count m={m} outside the enumerated table")
    if "u_h1_sq" not in traj.series or "omega_h1_sq" not in traj.series:
        raise ValueError("trajectory record lacks H1 norm series")
    t = traj.times
    h1 = traj.series["u_h1_sq"] + traj.series["omega_h1_sq"]
    cst = constants
    lam_next = float(grid.eigenvalues[m])
    gamma = cst.k1 * lam_next - (4.0 * cst.c1**2 / cst.k3_modes) * h1 \
        - 16.0 * cst.nu_r**2 / cst.alpha

    w = cst.r if window is None else window
    if len(t) < 2:
        raise ValueError("trajectory too short")
    dt_sample = float(t[1] - t[0])
    span = int(round(w / dt_sample))
    if span < 2:
        raise ValueError(f"window {w} covers fewer than two samples (spacing {dt_sample})")
    if span > len(t):
        raise ValueError(f"window {w} longer than the trajectory span")
    starts = np.arange(0, len(t) - span + 1)
    averages = np.array([float(np.mean(gamma[s: s + span])) for s in starts])
    neg_averages = np.array([float(np.mean(np.maximum(-gamma[s: s + span], 0.0)))
                             for s in starts])
    return GronwallReport(
        window=w,
        window_averages=averages,
        window_starts=t[starts],
        liminf_proxy=float(np.min(averages)),
        gamma_minus_limsup_proxy=float(np.max(neg_averages)),
        l1_holds=bool(np.all(averages > 0)),
        l2_holds=bool(np.isfinite(np.max(neg_averages))),
    )


def fit_decay_rate(times: Sequence[float], values: Sequence[float],
                   transient_fraction: float = 0.2) -> tuple[float, float]:
    """
    Least-squares slope of log(values) against time over the post-transient
    segment; returns (rate, R^2).  Requires at least 10 samples and strictly
    positive values in the fitted segment.
    """
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if len(t) != len(v):
        raise ValueError("times and values must have equal length")
    if len(v) < 10:
        raise ValueError(f"need at least 10 samples to fit a decay rate, got {len(v)}")
    start = int(transient_fraction * len(v))
    t, v = t[start:], v[start:]
    if np.any(v <= 0):
        raise ValueError("nonpositive entries in the fitted segment")
    logv = np.log(v)
    A = np.vstack([t, np.ones_like(t)]).T
    coef, residual, _, _ = np.linalg.lstsq(A, logv, rcond=None)
    rate = float(coef[0])
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    if ss_tot == 0:
        r2 = 1.0
    else:
        ss_res = float(residual[0]) if len(residual) else float(np.sum((logv - A @ coef) ** 2))
        r2 = 1.0 - ss_res / ss_tot
    return rate, r2
