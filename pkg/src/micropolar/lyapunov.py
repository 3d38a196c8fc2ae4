"""
Tangent-linear dynamics, Lyapunov spectra and attractor-dimension
diagnostics.

Perturbation pairs (V, Z) evolve under the dynamics linearized about a
co-integrated base trajectory, re-orthonormalized periodically by modified
Gram-Schmidt in the product L2 inner product (Benettin's method).  The
trace of the linearized generator restricted to the evolving span is
sampled at each re-orthonormalization and feeds the volume-element bound
q_N <= -kappa1 N^2 + kappa2; the pointwise Sobolev-Lieb-Thirring ratio
|rho|^2 / sum ||phi_j||_H1^2 is measured with exact zero-padded quadrature
to fit an empirical shape constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from micropolar import spectral
from micropolar.dynamics import Forcing, Params, State, _Stepper
from micropolar.estimates import Constants
from micropolar.spectral import (
    FieldError,
    Grid,
    ScalarField,
    VectorField,
    _leray_arrays,
    _to_phys_array,
    _to_spec_array,
)

__all__ = [
    "TangentState",
    "LyapunovReport",
    "TraceSeries",
    "tangent_rhs",
    "lyapunov_spectrum",
    "trace_PN",
    "lieb_thirring_check",
    "kaplan_yorke_dimension",
    "random_tangent_pairs",
]


@dataclass(frozen=True)
class TangentState:
    """Orthonormal perturbation pairs attached to a base state."""

    base: State
    pairs: tuple[tuple[VectorField, ScalarField], ...]

    def __post_init__(self) -> None:
        for v, z in self.pairs:
            if v.grid != self.base.grid or z.grid != self.base.grid:
                raise FieldError("tangent pairs must live on the base grid")


@dataclass
class TraceSeries:
    """Sampled trace of the linearized generator on the evolving span."""

    times: np.ndarray
    trace: np.ndarray
    running_average: np.ndarray
    sum_h1_sq: np.ndarray
    rho_l2: np.ndarray
    base_h1: np.ndarray


@dataclass
class LyapunovReport:
    """Benettin-run output with the dimension bound comparison."""

    exponents: np.ndarray
    partial_sums: np.ndarray
    kaplan_yorke: float | None
    ky_undetermined: bool
    trace: TraceSeries
    exponent_history_times: np.ndarray
    exponent_history: np.ndarray
    converged: bool
    kappa1: float | None = None
    kappa2: float | None = None
    bound_N: int | None = None
    bound_2N: int | None = None
    C0_used: float | None = None
    C0_fitted: float | None = None
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Tangent right-hand side
# ---------------------------------------------------------------------------

def _tangent_explicit(grid: Grid, params: Params, U: np.ndarray, W: np.ndarray,
                      V: np.ndarray, Z: np.ndarray,
                      velocity_only: bool) -> tuple[np.ndarray, np.ndarray]:
    """
    Explicit tangent terms for a batch of pairs, dealiased and projected:
        E_V = Leray[-(u.grad)V - (V.grad)u + 2 nu_r rot Z]
        E_Z = -(u.grad)Z - (V.grad)w + 2 nu_r rot V
    V has shape (N, 2, n, n), Z has (N, n, n).
    """
    mask = grid.dealias_mask
    d1 = grid.deriv_factor(0)
    d2 = grid.deriv_factor(1)
    u_phys = _to_phys_array(U).real
    gu = np.stack([
        _to_phys_array(np.stack([d1 * U[0], d2 * U[0]])).real,
        _to_phys_array(np.stack([d1 * U[1], d2 * U[1]])).real,
    ])  # gu[j, i] = d u_j / d x_i

    V_phys = _to_phys_array(V).real
    EV = np.empty_like(V)
    for j in range(2):
        dV1 = _to_phys_array(d1 * V[:, j]).real
        dV2 = _to_phys_array(d2 * V[:, j]).real
        adv = u_phys[0] * dV1 + u_phys[1] * dV2 \
            + V_phys[:, 0] * gu[j, 0] + V_phys[:, 1] * gu[j, 1]
        EV[:, j] = -_to_spec_array(adv)

    if velocity_only:
        EZ = np.zeros_like(Z)
    else:
        gw = _to_phys_array(np.stack([d1 * W, d2 * W])).real
        dZ1 = _to_phys_array(d1 * Z).real
        dZ2 = _to_phys_array(d2 * Z).real
        adv_z = u_phys[0] * dZ1 + u_phys[1] * dZ2 \
            + V_phys[:, 0] * gw[0] + V_phys[:, 1] * gw[1]
        EZ = -_to_spec_array(adv_z)

    two_nur = 2.0 * params.nu_r
    if two_nur != 0.0 and not velocity_only:
        EV[:, 0] += two_nur * (d2 * Z)
        EV[:, 1] += two_nur * (-(d1 * Z))
        EZ += two_nur * (d1 * V[:, 1] - d2 * V[:, 0])

    EV *= mask
    EZ *= mask
    EV[:, 0], EV[:, 1] = _leray_arrays(grid, EV[:, 0], EV[:, 1])
    EV[:, :, 0, 0] = 0.0
    EZ[:, 0, 0] = 0.0
    return EV, EZ


def tangent_rhs(base: State, perturbation: tuple[VectorField, ScalarField],
                params: Params) -> tuple[VectorField, ScalarField]:
    """
    Linearization of the autonomous right-hand side about ``base`` applied
    to one perturbation pair; matches the directional finite difference of
    :func:`micropolar.dynamics.rhs` to first order.
    """
    V, Z = perturbation
    grid = base.grid
    if V.grid != grid or Z.grid != grid:
        raise FieldError("perturbation lives on a different grid than the base")
    Vb = V.stacked()[None]
    Zb = Z.coeffs[None]
    EV, EZ = _tangent_explicit(grid, params, base.u.stacked(), base.omega.coeffs,
                               Vb, Zb, velocity_only=False)
    visc = (params.nu + params.nu_r) * grid.lam
    dV = EV[0] - visc * Vb[0]
    dZ = EZ[0] - (params.alpha * grid.lam + 4.0 * params.nu_r) * Zb[0]
    return VectorField.from_coeffs(grid, dV[0], dV[1]), ScalarField(grid, dZ)


# ---------------------------------------------------------------------------
# Orthonormalization and quadrature helpers
# ---------------------------------------------------------------------------

def _pair_inner(grid: Grid, V1, Z1, V2, Z2) -> float:
    s = np.sum(V1[0] * np.conj(V2[0]) + V1[1] * np.conj(V2[1]) + Z1 * np.conj(Z2))
    return float(grid.area * s.real)


def _mgs(grid: Grid, V: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """In-place modified Gram-Schmidt in the product inner product;
    returns the growth factors (diagonal of R)."""
    N = V.shape[0]
    norms = np.empty(N)
    for j in range(N):
        before = math.sqrt(_pair_inner(grid, V[j], Z[j], V[j], Z[j]))
        for i in range(j):
            proj = _pair_inner(grid, V[j], Z[j], V[i], Z[i])
            V[j] -= proj * V[i]
            Z[j] -= proj * Z[i]
        nrm = math.sqrt(_pair_inner(grid, V[j], Z[j], V[j], Z[j]))
        if nrm <= 1e-14 * before or nrm == 0.0:
            raise RuntimeError(
                f"rank loss during re-orthonormalization (vector {j}: "
                f"residual {nrm:.3e} of {before:.3e})"
            )
        V[j] /= nrm
        Z[j] /= nrm
        norms[j] = nrm
    return norms


def _padded_phys(coeffs: np.ndarray, n: int, pad: int) -> np.ndarray:
    """Physical samples on a (pad*n)^2 lattice via spectral zero padding."""
    m = pad * n
    kmap = (np.fft.fftfreq(n, 1.0 / n).astype(int)) % m
    shape = coeffs.shape[:-2] + (m, m)
    fine = np.zeros(shape, dtype=np.complex128)
    fine[..., kmap[:, None], kmap[None, :]] = coeffs
    return (np.fft.ifft2(fine, axes=(-2, -1)) * (m * m)).real


def _rho_and_h1(grid: Grid, V: np.ndarray, Z: np.ndarray,
                velocity_only: bool) -> tuple[float, float, np.ndarray]:
    """
    |rho|_{L2} for rho(x) = sum_j (|v_j|^2 + |z_j|^2), evaluated with exact
    zero-padded quadrature, plus sum_j ||phi_j||_H1^2 and per-pair H1 norms.
    """
    v_fine = _padded_phys(V, grid.n, 2)
    rho = np.sum(v_fine[:, 0] ** 2 + v_fine[:, 1] ** 2, axis=0)
    if not velocity_only:
        z_fine = _padded_phys(Z, grid.n, 2)
        rho += np.sum(z_fine**2, axis=0)
    rho_l2 = math.sqrt(grid.area * float(np.mean(rho**2)))
    h1_each = grid.area * np.sum(
        grid.lam * (np.abs(V[:, 0]) ** 2 + np.abs(V[:, 1]) ** 2 + np.abs(Z) ** 2), axis=(1, 2)
    ).real
    return rho_l2, float(np.sum(h1_each)), h1_each


def _trace_sample(grid: Grid, params: Params, U: np.ndarray, W: np.ndarray,
                  V: np.ndarray, Z: np.ndarray, velocity_only: bool) -> dict:
    """
    Term-by-term trace of the linearized generator on the orthonormal span:
    -sum a(phi_j, phi_j) - sum B(phi_j, ubar, phi_j) - sum R(phi_j, phi_j).
    """
    mask = grid.dealias_mask
    d1 = grid.deriv_factor(0)
    d2 = grid.deriv_factor(1)
    area = grid.area

    h1_v = area * np.sum(grid.lam * (np.abs(V[:, 0]) ** 2 + np.abs(V[:, 1]) ** 2), axis=(1, 2)).real
    h1_z = area * np.sum(grid.lam * np.abs(Z) ** 2, axis=(1, 2)).real
    a_term = (params.nu + params.nu_r) * np.sum(h1_v) + params.alpha * np.sum(h1_z)

    # B(phi_j, ubar, phi_j) = b(v_j, u, v_j) + b1(v_j, w, z_j)
    gu = np.stack([
        _to_phys_array(np.stack([d1 * U[0], d2 * U[0]])).real,
        _to_phys_array(np.stack([d1 * U[1], d2 * U[1]])).real,
    ])
    gw = _to_phys_array(np.stack([d1 * W, d2 * W])).real
    V_phys = _to_phys_array(V).real
    b_term = 0.0
    for j in range(2):
        q = V_phys[:, 0] * gu[j, 0] + V_phys[:, 1] * gu[j, 1]
        qh = _to_spec_array(q) * mask
        b_term += float(area * np.sum(qh * np.conj(V[:, j])).real)
    if not velocity_only:
        qz = V_phys[:, 0] * gw[0] + V_phys[:, 1] * gw[1]
        qzh = _to_spec_array(qz) * mask
        b_term += float(area * np.sum(qzh * np.conj(Z)).real)

    # R(phi_j, phi_j) = -4 nu_r (rot z_j, v_j) + 4 nu_r |z_j|^2
    r_term = 0.0
    if params.nu_r != 0.0 and not velocity_only:
        rot_z = np.stack([d2 * Z, -(d1 * Z)], axis=1)
        cross = area * np.sum(rot_z[:, 0] * np.conj(V[:, 0]) + rot_z[:, 1] * np.conj(V[:, 1])).real
        z_l2 = area * np.sum(np.abs(Z) ** 2).real
        r_term = -4.0 * params.nu_r * float(cross) + 4.0 * params.nu_r * float(z_l2)

    trace = -float(a_term) - b_term - float(r_term)
    rho_l2, sum_h1, h1_each = _rho_and_h1(grid, V, Z, velocity_only)
    base_h1 = math.sqrt(area * float(np.sum(grid.lam * (np.abs(U[0]) ** 2 + np.abs(U[1]) ** 2
                                                        + np.abs(W) ** 2)).real))
    return {"trace": trace, "sum_h1_sq": sum_h1, "rho_l2": rho_l2, "base_h1": base_h1,
            "h1_each": h1_each}


# ---------------------------------------------------------------------------
# Benettin co-integration
# ---------------------------------------------------------------------------

def random_tangent_pairs(grid: Grid, count: int, seed: int, kmax: int = 4,
                         velocity_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Seeded band-limited tangent pairs as raw arrays (not yet orthonormal)."""
    rng = np.random.default_rng(seed)
    n = grid.n
    band = (grid.lam > 0) & (np.sqrt(grid.k1**2 + grid.k2**2) <= kmax)

    def scalar() -> np.ndarray:
        raw = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * band
        flat = raw.ravel()
        return (0.5 * (flat + np.conj(flat[grid.conj_flat]))).reshape(n, n)

    V = np.empty((count, 2, n, n), dtype=np.complex128)
    Z = np.empty((count, n, n), dtype=np.complex128)
    for j in range(count):
        c1, c2 = _leray_arrays(grid, scalar(), scalar())
        V[j, 0], V[j, 1] = c1, c2
        Z[j] = 0.0 if velocity_only else scalar()
    return V, Z


class _TangentRun:
    """Co-integrates a base trajectory and N tangent pairs."""

    def __init__(self, initial: State, params: Params, forcing: Forcing, count: int,
                 dt: float, reorth_interval: int = 10, seed: int = 0,
                 velocity_only: bool = False, cfl_limit: float = 0.5):
        if count < 1:
            raise ValueError("need at least one tangent pair")
        if reorth_interval < 1:
            raise ValueError("re-orthonormalization interval must be >= 1 steps")
        if velocity_only and params.nu_r != 0.0:
            raise ValueError("velocity-only tangents are exact only for nu_r = 0")
        grid = initial.grid
        if count > grid.num_modes:
            raise ValueError(f"tangent count {count} exceeds the mode budget {grid.num_modes}")
        self.grid, self.params, self.dt = grid, params, dt
        self.velocity_only = velocity_only
        self.reorth_interval = reorth_interval

        self.base = _Stepper(grid, params, forcing, dt, cfl_limit)
        self.U = initial.u.stacked()
        self.W = initial.omega.coeffs.copy()
        self.t0 = initial.t
        self.t = initial.t

        self.V, self.Z = random_tangent_pairs(grid, count, seed, velocity_only=velocity_only)
        _mgs(grid, self.V, self.Z)
        self.log_sums = np.zeros(count)

        lam = grid.lam
        rv = 0.5 * dt * (params.nu + params.nu_r) * lam
        rw = 0.5 * dt * (params.alpha * lam + 4.0 * params.nu_r)
        self.num_u = (1.0 - rv) / (1.0 + rv)
        self.inv_den_u = 1.0 / (1.0 + rv)
        self.num_w = (1.0 - rw) / (1.0 + rw)
        self.inv_den_w = 1.0 / (1.0 + rw)
        self.EV_prev: np.ndarray | None = None
        self.EZ_prev: np.ndarray | None = None

    def _advance_block(self) -> None:
        """One reorth block: reorth_interval coupled steps, then MGS."""
        for _ in range(self.reorth_interval):
            EV, EZ = _tangent_explicit(self.grid, self.params, self.U, self.W,
                                       self.V, self.Z, self.velocity_only)
            if self.EV_prev is None:
                ExV, ExZ = EV, EZ
            else:
                ExV = 1.5 * EV - 0.5 * self.EV_prev
                ExZ = 1.5 * EZ - 0.5 * self.EZ_prev
            self.V = self.num_u * self.V + self.dt * self.inv_den_u * ExV
            if self.velocity_only:
                self.Z[...] = 0.0
            else:
                self.Z = self.num_w * self.Z + self.dt * self.inv_den_w * ExZ
            self.V[:, 0], self.V[:, 1] = _leray_arrays(self.grid, self.V[:, 0], self.V[:, 1])
            self.V *= self.grid.dealias_mask
            self.Z *= self.grid.dealias_mask
            self.EV_prev, self.EZ_prev = EV, EZ
            # base advances with its own AB2 history
            self.U, self.W = self.base.advance(self.U, self.W, self.t)
            self.t += self.dt
        growth = _mgs(self.grid, self.V, self.Z)
        self.log_sums += np.log(growth)

    def sample_trace(self) -> dict:
        return _trace_sample(self.grid, self.params, self.U, self.W, self.V, self.Z,
                             self.velocity_only)


def _assemble_trace(times: list[float], samples: list[dict]) -> TraceSeries:
    t = np.asarray(times)
    tr = np.asarray([s["trace"] for s in samples])
    if len(t) > 1:
        integral = np.concatenate([[0.0], np.cumsum(0.5 * (tr[1:] + tr[:-1]) * np.diff(t))])
        with np.errstate(invalid="ignore", divide="ignore"):
            running = np.where(t > t[0], integral / np.maximum(t - t[0], 1e-300), tr)
        running[0] = tr[0]
    else:
        running = tr.copy()
    return TraceSeries(
        times=t, trace=tr, running_average=running,
        sum_h1_sq=np.asarray([s["sum_h1_sq"] for s in samples]),
        rho_l2=np.asarray([s["rho_l2"] for s in samples]),
        base_h1=np.asarray([s["base_h1"] for s in samples]),
    )


def kaplan_yorke_dimension(exponents: np.ndarray) -> tuple[float | None, bool]:
    """
    Kaplan-Yorke dimension j + (mu_1+...+mu_j)/|mu_{j+1}| at the crossover.
    Returns (None, True) when every partial sum stays nonnegative within the
    computed exponents (crossover not bracketed).
    """
    mu = np.sort(np.asarray(exponents))[::-1]
    sums = np.cumsum(mu)
    if mu[0] < 0:
        return 0.0, False
    nonneg = np.nonzero(sums >= 0)[0]
    if len(nonneg) == len(mu):
        return None, True
    j = int(nonneg[-1]) + 1 if len(nonneg) else 0
    return float(j + sums[j - 1] / abs(mu[j])) if j > 0 else 0.0, False


def lyapunov_spectrum(initial: State, params: Params, forcing: Forcing, count: int,
                      t_span: float, dt: float, reorth_interval: int = 10, seed: int = 0,
                      constants: Constants | None = None,
                      velocity_only: bool = False,
                      convergence_rtol: float = 0.01) -> LyapunovReport:
    """
    Benettin estimate of the leading ``count`` Lyapunov exponents along one
    trajectory (an ergodic proxy for the attractor-uniform exponents; the
    gap is recorded in the report metadata).  Also samples the restricted
    trace at every re-orthonormalization and, when ``constants`` are given,
    compares the Kaplan-Yorke dimension against the volume-element bound.
    """
    run = _TangentRun(initial, params, forcing, count, dt, reorth_interval, seed,
                      velocity_only)
    nblocks = max(1, int(round(t_span / (dt * reorth_interval))))
    times = [run.t]
    samples = [run.sample_trace()]
    hist_t: list[float] = []
    hist: list[np.ndarray] = []
    for _ in range(nblocks):
        run._advance_block()
        times.append(run.t)
        samples.append(run.sample_trace())
        hist_t.append(run.t - run.t0)
        hist.append(run.log_sums / (run.t - run.t0))

    exponents = np.sort(hist[-1])[::-1]
    history = np.asarray(hist)
    hist_t_arr = np.asarray(hist_t)
    # settled when the sorted estimates move less than rtol (relative to the
    # largest exponent magnitude) over the trailing half of the run
    half = len(history) // 2
    scale = max(float(np.max(np.abs(exponents))), 1e-12)
    drift = float(np.max(np.abs(np.sort(history[half:], axis=1) - np.sort(history[-1])))) \
        if half >= 1 else math.inf
    converged = drift <= convergence_rtol * scale

    trace = _assemble_trace(times, samples)
    ky, undetermined = kaplan_yorke_dimension(exponents)

    report = LyapunovReport(
        exponents=exponents,
        partial_sums=np.cumsum(exponents),
        kaplan_yorke=ky,
        ky_undetermined=undetermined,
        trace=trace,
        exponent_history_times=hist_t_arr,
        exponent_history=history,
        converged=converged,
        meta={"count": count, "dt": dt, "reorth_interval": reorth_interval,
              "seed": seed, "velocity_only": velocity_only, "t_span": t_span,
              "exponent_estimator": "single-trajectory ergodic proxy"},
    )
    if constants is not None:
        from micropolar.estimates import attractor_bound

        c0_fit = float(np.max(trace.rho_l2**2 / np.maximum(trace.sum_h1_sq, 1e-300)))
        f_l2 = spectral.norm(forcing.f_at(initial.t))
        g_l2 = spectral.norm(forcing.g_at(initial.t))
        G2 = f_l2**2 + g_l2**2
        report.kappa1 = constants.k1 / (2.0 * c0_fit * initial.grid.area)
        report.kappa2 = c0_fit * G2 / (constants.k1**2 * constants.k2)
        report.bound_N = attractor_bound(constants, f_l2, g_l2)
        report.bound_2N = 2 * report.bound_N
        report.C0_used = constants.C0
        report.C0_fitted = c0_fit
    return report


def trace_PN(initial: State, params: Params, forcing: Forcing, count: int,
             t_span: float, dt: float, reorth_interval: int = 10,
             seed: int = 0) -> TraceSeries:
    """
    Trace of the linearized generator composed with the projector onto the
    leading ``count``-dimensional evolving subspace, sampled along the run,
    with its running time average.
    """
    report = lyapunov_spectrum(initial, params, forcing, count, t_span, dt,
                               reorth_interval, seed)
    return report.trace


def lieb_thirring_check(pairs, grid: Grid | None = None,
                        gram_tol: float = 1e-8) -> dict:
    """
    For an orthonormal family of pairs, the ratio |rho|^2 / sum ||phi_j||^2
    with rho(x) = sum_j (|v_j(x)|^2 + |z_j(x)|^2), plus the Schwartz lower
    pieces (integral of rho equals the family size N, and N^2 <= |Q| |rho|^2).
    Rejects families whose Gram matrix deviates from identity by more than
    ``gram_tol``.
    """
    if isinstance(pairs, TangentState):
        grid = pairs.base.grid
        plist = pairs.pairs
    else:
        plist = list(pairs)
        if grid is None:
            grid = plist[0][0].grid
    N = len(plist)
    V = np.stack([np.stack([v.u1.coeffs, v.u2.coeffs]) for v, _ in plist])
    Z = np.stack([z.coeffs for _, z in plist])

    gram = np.empty((N, N))
    for i in range(N):
        for j in range(N):
            gram[i, j] = _pair_inner(grid, V[i], Z[i], V[j], Z[j])
    dev = float(np.max(np.abs(gram - np.eye(N))))
    if dev > gram_tol:
        raise ValueError(f"family is not orthonormal (Gram deviation {dev:.3e})")

    rho_l2, sum_h1, h1_each = _rho_and_h1(grid, V, Z, velocity_only=False)
    v_fine = _padded_phys(V, grid.n, 2)
    rho = np.sum(v_fine[:, 0] ** 2 + v_fine[:, 1] ** 2, axis=0)
    rho += np.sum(_padded_phys(Z, grid.n, 2) ** 2, axis=0)
    rho_integral = grid.area * float(np.mean(rho))
    return {
        "ratio": rho_l2**2 / sum_h1,
        "rho_l2": rho_l2,
        "sum_h1_sq": sum_h1,
        "h1_each": h1_each,
        "rho_integral": rho_integral,
        "schwartz_lhs": N**2,
        "schwartz_rhs": grid.area * rho_l2**2,
        "gram_deviation": dev,
    }
