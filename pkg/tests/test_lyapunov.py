"""
Tangent-model and spectrum tests: linearity, finite-difference
consistency with an epsilon sweep, trace closed forms on a zero base,
Lieb-Thirring quadrature against the single-mode closed form, and the
exponent/trace bookkeeping of the Benettin run.
"""

import math

import numpy as np
import pytest

from micropolar.dynamics import Forcing, Params, State, make_forcing, random_state, rhs
from micropolar.estimates import compute_constants
from micropolar.lyapunov import (
    _mgs,
    kaplan_yorke_dimension,
    lieb_thirring_check,
    lyapunov_spectrum,
    random_tangent_pairs,
    tangent_rhs,
    trace_PN,
)
from micropolar.spectral import (
    ScalarField,
    VectorField,
    inner,
    norm,
    rot_scalar,
)


PARAMS = Params(nu=0.4, nu_r=0.15, alpha=0.5)


def perturbation(grid, seed, scale=1.0):
    s = random_state(grid, seed, scale, scale)
    return s.u, s.omega


class TestTangentRhs:
    def test_zero_base_pure_linear_decay(self, grid16):
        base = State.zero(grid16)
        V, Z = perturbation(grid16, 3)
        dV, dZ = tangent_rhs(base, (V, Z), PARAMS)
        lam = grid16.lam
        visc = (PARAMS.nu + PARAMS.nu_r) * lam
        expected_V1 = -visc * V.u1.coeffs + 2 * PARAMS.nu_r * rot_scalar(Z).u1.coeffs
        assert np.max(np.abs(dV.u1.coeffs - expected_V1)) < 1e-13
        expected_Z = -(PARAMS.alpha * lam + 4 * PARAMS.nu_r) * Z.coeffs \
            + 2 * PARAMS.nu_r * (grid16.deriv_factor(0) * V.u2.coeffs
                                 - grid16.deriv_factor(1) * V.u1.coeffs)
        assert np.max(np.abs(dZ.coeffs - expected_Z)) < 1e-13

    def test_linearity(self, grid16):
        base = random_state(grid16, 1, 0.3, 0.1)
        Va, Za = perturbation(grid16, 2)
        Vb, Zb = perturbation(grid16, 3)
        dVa, dZa = tangent_rhs(base, (Va, Za), PARAMS)
        dVb, dZb = tangent_rhs(base, (Vb, Zb), PARAMS)
        dVs, dZs = tangent_rhs(base, (Va + Vb, Za + Zb), PARAMS)
        scale = max(norm(dVs), norm(dZs), 1e-30)
        assert norm(dVs - (dVa + dVb)) < 1e-12 * scale
        assert norm(ScalarField(grid16, dZs.coeffs - dZa.coeffs - dZb.coeffs)) < 1e-12 * scale
        dV2, dZ2 = tangent_rhs(base, (2.0 * Va, 2.0 * Za), PARAMS)
        assert norm(dV2 - 2.0 * dVa) < 1e-12 * scale

    @pytest.mark.parametrize("nu_r", [0.0, 0.15])
    def test_finite_difference_consistency(self, grid16, nu_r):
        params = Params(nu=0.4, nu_r=nu_r, alpha=0.5)
        base = random_state(grid16, 7, 0.3, 0.1)
        V, Z = perturbation(grid16, 8)
        dV, dZ = tangent_rhs(base, (V, Z), params)
        fo = Forcing.zero(grid16)
        du0, dw0 = rhs(base, params, fo)
        errors = []
        for eps in (1e-3, 1e-4, 1e-5):
            bumped = State(
                VectorField.from_coeffs(grid16,
                                        base.u.u1.coeffs + eps * V.u1.coeffs,
                                        base.u.u2.coeffs + eps * V.u2.coeffs),
                ScalarField(grid16, base.omega.coeffs + eps * Z.coeffs), base.t)
            du, dw = rhs(bumped, params, fo)
            errV = (du.u1.coeffs - du0.u1.coeffs) / eps - dV.u1.coeffs
            errV2 = (du.u2.coeffs - du0.u2.coeffs) / eps - dV.u2.coeffs
            errW = (dw.coeffs - dw0.coeffs) / eps - dZ.coeffs
            errors.append(np.sqrt(np.sum(np.abs(errV) ** 2 + np.abs(errV2) ** 2
                                         + np.abs(errW) ** 2)))
        # quadratic nonlinearity: the FD error is exactly linear in epsilon
        assert errors[0] / errors[1] == pytest.approx(10.0, rel=0.02)
        assert errors[1] / errors[2] == pytest.approx(10.0, rel=0.02)

    def test_nu_r_zero_velocity_tangent_ignores_microrotation(self, grid16):
        params = Params(nu=0.4, nu_r=0.0, alpha=0.5)
        base = random_state(grid16, 9, 0.3, 0.2)
        V, Za = perturbation(grid16, 10)
        _, Zb = perturbation(grid16, 11)
        dVa, _ = tangent_rhs(base, (V, Za), params)
        dVb, _ = tangent_rhs(base, (V, Zb), params)
        assert np.array_equal(dVa.u1.coeffs, dVb.u1.coeffs)
        assert np.array_equal(dVa.u2.coeffs, dVb.u2.coeffs)


class TestOrthonormalization:
    def test_mgs_orthonormalizes(self, grid16):
        V, Z = random_tangent_pairs(grid16, 4, seed=0)
        _mgs(grid16, V, Z)
        for i in range(4):
            for j in range(4):
                ip = grid16.area * float(np.sum(
                    V[i, 0] * np.conj(V[j, 0]) + V[i, 1] * np.conj(V[j, 1])
                    + Z[i] * np.conj(Z[j])).real)
                assert ip == pytest.approx(1.0 if i == j else 0.0, abs=1e-10)

    def test_rank_loss_detected(self, grid16):
        V, Z = random_tangent_pairs(grid16, 2, seed=1)
        V[1] = V[0]
        Z[1] = Z[0]
        with pytest.raises(RuntimeError, match="rank"):
            _mgs(grid16, V, Z)


class TestLiebThirring:
    def test_single_mode_closed_form(self, grid16):
        # normalized divergence-free cosine mode: rho = (2/|Q|) cos^2(k.x),
        # |rho|^2 = 3/(2 |Q|), sum ||phi||^2 = lambda(k), ratio = 3/(2 |Q| lambda)
        k = (1, 0)
        area = grid16.area
        amp = 1.0 / math.sqrt(2.0 * area)
        c1 = np.zeros((16, 16), dtype=np.complex128)
        c2 = np.zeros((16, 16), dtype=np.complex128)
        c2[k[0] % 16, k[1] % 16] = amp  # polarization (-k2, k1)/|k| = (0, 1)
        c2[(-k[0]) % 16, (-k[1]) % 16] = amp
        v = VectorField.from_coeffs(grid16, c1, c2)
        z = ScalarField.zero(grid16)
        assert norm(v) == pytest.approx(1.0, rel=1e-13)
        out = lieb_thirring_check([(v, z)])
        lam = grid16.lambda1
        assert out["ratio"] == pytest.approx(3.0 / (2.0 * area * lam), rel=1e-12)
        assert out["rho_integral"] == pytest.approx(1.0, rel=1e-12)

    def test_schwartz_inequality(self, grid16):
        V, Z = random_tangent_pairs(grid16, 5, seed=4)
        _mgs(grid16, V, Z)
        pairs = [(VectorField.from_coeffs(grid16, V[j, 0], V[j, 1]),
                  ScalarField(grid16, Z[j])) for j in range(5)]
        out = lieb_thirring_check(pairs)
        assert out["schwartz_lhs"] <= out["schwartz_rhs"] * (1 + 1e-12)
        assert out["rho_integral"] == pytest.approx(5.0, rel=1e-12)

    def test_ratio_invariant_under_remixing(self, grid16):
        V, Z = random_tangent_pairs(grid16, 4, seed=6)
        _mgs(grid16, V, Z)
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        Vr = np.einsum("ij,jabc->iabc", q, V)
        Zr = np.einsum("ij,jbc->ibc", q, Z)
        def pairs(VV, ZZ):
            return [(VectorField.from_coeffs(grid16, VV[j, 0], VV[j, 1]),
                     ScalarField(grid16, ZZ[j])) for j in range(4)]
        a = lieb_thirring_check(pairs(V, Z))
        b = lieb_thirring_check(pairs(Vr, Zr))
        assert a["ratio"] == pytest.approx(b["ratio"], rel=1e-10)

    def test_non_orthonormal_rejected(self, grid16):
        V, Z = random_tangent_pairs(grid16, 3, seed=8)
        pairs = [(VectorField.from_coeffs(grid16, V[j, 0], V[j, 1]),
                  ScalarField(grid16, Z[j])) for j in range(3)]
        with pytest.raises(ValueError, match="Gram"):
            lieb_thirring_check(pairs)


class TestSpectrumRun:
    def test_zero_forcing_exponents_below_decay_rate(self, grid32):
        params = Params(nu=0.5, nu_r=0.1, alpha=0.5)
        init = random_state(grid32, 11, 0.05, 0.02)
        rep = lyapunov_spectrum(init, params, Forcing.zero(grid32), count=4,
                                t_span=8.0, dt=0.01, seed=3)
        k2 = min(params.nu, params.alpha) * grid32.lambda1
        assert np.all(rep.exponents <= -k2 * 0.95)
        assert np.all(np.diff(rep.exponents) <= 1e-12)

    def test_trace_sample_matches_trilinear_composition(self, grid16):
        # dual route: the batched trace against per-pair form evaluations
        from micropolar.lyapunov import _trace_sample
        from micropolar.spectral import apply_A1, trilinear_b, trilinear_b1

        params = PARAMS
        base = random_state(grid16, 13, 0.3, 0.15)
        V, Z = random_tangent_pairs(grid16, 3, seed=5)
        _mgs(grid16, V, Z)
        sample = _trace_sample(grid16, params, base.u.stacked(), base.omega.coeffs,
                               V, Z, velocity_only=False)
        total = 0.0
        for j in range(3):
            v = VectorField.from_coeffs(grid16, V[j, 0], V[j, 1])
            z = ScalarField(grid16, Z[j])
            a = (params.nu + params.nu_r) * norm(v, "H1") ** 2 \
                + params.alpha * norm(z, "H1") ** 2
            b = trilinear_b(v, base.u, v) + trilinear_b1(v, base.omega, z)
            r = -4 * params.nu_r * inner(rot_scalar(z), v) \
                + 4 * params.nu_r * norm(z) ** 2
            total += -(a + b + r)
        assert sample["trace"] == pytest.approx(total, rel=1e-10)

    def test_exponent_sum_matches_trace_average(self, grid32):
        params = Params(nu=0.3, nu_r=0.1, alpha=0.3)
        fo = make_forcing(grid32, "steady", 0.005, 0.001, mode_hi=6, seed=7)
        from micropolar.dynamics import simulate
        init = simulate(random_state(grid32, 21, 0.05, 0.02), params, fo,
                        t_end=5.0, dt=0.01, stride=10**9).final_state
        rep = lyapunov_spectrum(init, params, fo, count=4, t_span=20.0, dt=0.01, seed=9)
        assert rep.partial_sums[-1] == pytest.approx(rep.trace.running_average[-1], rel=0.02)

    def test_trace_PN_running_average(self, grid16):
        params = Params(nu=0.5, nu_r=0.0, alpha=0.5)
        init = random_state(grid16, 2, 0.05, 0.02)
        series = trace_PN(init, params, Forcing.zero(grid16), count=3,
                          t_span=2.0, dt=0.01)
        assert len(series.times) == len(series.trace) == len(series.running_average)
        assert np.all(series.trace < 0)

    def test_budget_and_config_validation(self, grid16):
        init = random_state(grid16, 2, 0.05, 0.02)
        with pytest.raises(ValueError):
            lyapunov_spectrum(init, PARAMS, Forcing.zero(grid16), count=0,
                              t_span=1.0, dt=0.01)
        with pytest.raises(ValueError, match="mode budget"):
            lyapunov_spectrum(init, PARAMS, Forcing.zero(grid16),
                              count=grid16.num_modes + 1, t_span=1.0, dt=0.01)
        with pytest.raises(ValueError, match="velocity-only"):
            lyapunov_spectrum(init, PARAMS, Forcing.zero(grid16), count=2,
                              t_span=1.0, dt=0.01, velocity_only=True)


class TestKaplanYorke:
    def test_contracting_spectrum(self):
        ky, undet = kaplan_yorke_dimension(np.array([-0.5, -1.0, -2.0]))
        assert ky == 0.0 and not undet

    def test_textbook_crossover(self):
        # mu = (1, 0.5, -4): j = 2, D = 2 + 1.5/4
        ky, undet = kaplan_yorke_dimension(np.array([1.0, 0.5, -4.0]))
        assert ky == pytest.approx(2.375)
        assert not undet

    def test_undetermined_when_no_crossover(self):
        ky, undet = kaplan_yorke_dimension(np.array([1.0, 0.5, -0.1]))
        assert ky is None and undet
