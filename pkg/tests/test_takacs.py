"""Explicit upwind marching of the coupled distortion system.

Exactness anchors: unit CFL advection is a pure index shift, the
sum/difference rotation commutes with the march, and the stationary
single-line cumulative profile is a fixed point of the scalar solver up
to discretization error.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lightqueue.errors import ConfigError, StabilityError
from lightqueue.fields import BoundaryConditions
from lightqueue.model import KernelSpec, ModelParams, recombine
from lightqueue.takacs import SolverConfig, fd_solve, fd_solve_scalar


def gaussian(center, width):
    return lambda x: np.exp(-0.5 * ((x - center) / width) ** 2)


TRANSPORT = ModelParams(a=0.0, v=1.0, nondimensional=False)
COUPLED = ModelParams(a=1.0, v=0.75)
SPEC = KernelSpec(lam=1.5, beta1=0.6, beta2=0.3)


class TestSolverConfig:
    def test_rejects_nonpositive_steps(self):
        with pytest.raises(ConfigError):
            SolverConfig(dx=-0.1, dt=0.1, x_min=0.0, x_max=1.0, t_end=1.0)

    def test_rejects_bad_method(self):
        with pytest.raises(ConfigError):
            SolverConfig(
                dx=0.1, dt=0.1, x_min=0.0, x_max=1.0, t_end=1.0, method="spectral"
            )

    def test_dt_must_tile_horizon(self):
        cfg = SolverConfig(dx=0.1, dt=0.3, x_min=0.0, x_max=1.0, t_end=1.0)
        with pytest.raises(ConfigError):
            cfg.n_steps()

    def test_dx_must_tile_domain(self):
        cfg = SolverConfig(dx=0.3, dt=0.1, x_min=0.0, x_max=1.0, t_end=1.0)
        with pytest.raises(ConfigError):
            cfg.x_grid()

    def test_cfl_violation_rejected_by_solver(self):
        cfg = SolverConfig(dx=0.05, dt=0.1, x_min=-1.0, x_max=1.0, t_end=1.0)
        bc = BoundaryConditions(f1=gaussian(0.0, 0.3))
        with pytest.raises(ConfigError):
            fd_solve(COUPLED, SPEC, bc, cfg)


class TestTransportLimit:
    def test_unit_cfl_is_exact_shift(self):
        # at v dt/dx = 1 the upwind update copies the right neighbor, so
        # the profile translates without any smearing
        cfg = SolverConfig(dx=0.1, dt=0.1, x_min=-4.0, x_max=4.0, t_end=1.0)
        bc = BoundaryConditions(f1=gaussian(0.0, 0.5))
        f = fd_solve(TRANSPORT, SPEC, bc, cfg)
        exact = gaussian(0.0, 0.5)(f.x + 1.0)
        interior = f.x <= cfg.x_max - 1.0 - 0.2
        assert_allclose(f.p1[-1][interior], exact[interior], rtol=0, atol=1e-12)

    def test_first_order_error_halves_with_the_grid(self):
        # fractional CFL smears at O(dx); halving dx and dt together
        # should cut the sup error by about two
        def sup_error(dx):
            cfg = SolverConfig(
                dx=dx, dt=dx / 2, x_min=-4.0, x_max=4.0, t_end=1.0
            )
            bc = BoundaryConditions(f1=gaussian(0.0, 0.5))
            f = fd_solve(TRANSPORT, SPEC, bc, cfg)
            window = f.x <= 2.0
            exact = gaussian(0.0, 0.5)(f.x + 1.0)
            return np.abs(f.p1[-1] - exact)[window].max()

        ratio = sup_error(0.1) / sup_error(0.05)
        assert 1.7 <= ratio <= 2.3

    def test_interior_mass_is_conserved(self):
        cfg = SolverConfig(dx=0.05, dt=0.025, x_min=-6.0, x_max=6.0, t_end=1.0)
        bc = BoundaryConditions(f1=gaussian(0.0, 0.5))
        f = fd_solve(TRANSPORT, SPEC, bc, cfg)
        masses = f.p1.sum(axis=1) * cfg.dx
        assert np.abs(masses - masses[0]).max() < 1e-12


class TestCoupledMarch:
    def test_zero_data_stays_zero(self):
        cfg = SolverConfig(dx=0.1, dt=0.1, x_min=-2.0, x_max=2.0, t_end=1.0)
        f = fd_solve(COUPLED, SPEC, BoundaryConditions(), cfg)
        assert not f.p1.any() and not f.p2.any()

    def test_decoupled_amplitudes_keep_second_component_dark(self):
        spec = KernelSpec(lam=1.5, beta1=0.6, beta2=0.0)
        cfg = SolverConfig(dx=0.05, dt=0.05, x_min=-4.0, x_max=4.0, t_end=1.0)
        bc = BoundaryConditions(f1=gaussian(1.0, 0.5))
        f = fd_solve(COUPLED, spec, bc, cfg)
        assert not f.p2.any()

    def test_march_commutes_with_channel_rotation(self):
        # the coupled run equals two scalar runs at amplitudes
        # beta1 +/- beta2 rotated back; rehearsed agreement ~3e-16
        cfg = SolverConfig(dx=0.05, dt=0.05, x_min=-4.0, x_max=4.0, t_end=1.0)
        f1, f2 = gaussian(1.0, 0.5), lambda x: 0.4 * gaussian(1.5, 0.7)(x)
        coupled = fd_solve(
            COUPLED, SPEC, BoundaryConditions(f1=f1, f2=f2), cfg
        )
        qp = fd_solve_scalar(
            COUPLED,
            SPEC.lam,
            SPEC.beta1 + SPEC.beta2,
            BoundaryConditions(f1=lambda x: f1(x) + f2(x)),
            cfg,
            kind="density",
        )
        qm = fd_solve_scalar(
            COUPLED,
            SPEC.lam,
            SPEC.beta1 - SPEC.beta2,
            BoundaryConditions(f1=lambda x: f1(x) - f2(x)),
            cfg,
            kind="density",
        )
        back = recombine(qp, qm)
        assert np.abs(coupled.p1 - back.p1).max() < 1e-10
        assert np.abs(coupled.p2 - back.p2).max() < 1e-10

    def test_convolution_methods_agree(self):
        # exact-cell recursion and direct trapezoid quadrature are
        # different O(dx^2) discretizations of the same smoothing;
        # rehearsed gap 1.6e-4 at dx = 0.05
        bc = BoundaryConditions(
            f1=gaussian(1.0, 0.5), f2=lambda x: 0.4 * gaussian(1.5, 0.7)(x)
        )
        kw = dict(dx=0.05, dt=0.05, x_min=-4.0, x_max=4.0, t_end=1.0)
        fr = fd_solve(COUPLED, SPEC, bc, SolverConfig(**kw))
        fq = fd_solve(
            COUPLED, SPEC, bc, SolverConfig(**kw, method="direct-quadrature")
        )
        assert np.abs(fr.p1 - fq.p1).max() < 5e-4
        assert np.abs(fr.p2 - fq.p2).max() < 5e-4

    def test_sup_norm_respects_relaxation_envelope(self):
        # substochastic amplitudes and no inflow: the march cannot grow
        # the sup norm past exp(a t_end) times the initial one
        cfg = SolverConfig(dx=0.05, dt=0.05, x_min=-4.0, x_max=4.0, t_end=2.0)
        bc = BoundaryConditions(
            f1=gaussian(1.0, 0.5), f2=lambda x: 0.4 * gaussian(1.5, 0.7)(x)
        )
        f = fd_solve(COUPLED, SPEC, bc, cfg)
        peak0 = max(np.abs(f.p1[0]).max(), np.abs(f.p2[0]).max())
        for j in range(f.t.size):
            peak = max(np.abs(f.p1[j]).max(), np.abs(f.p2[j]).max())
            assert peak <= np.exp(COUPLED.a * f.t[j]) * peak0 * (1 + 1e-12)

    def test_snapshot_stride(self):
        cfg = SolverConfig(
            dx=0.1, dt=0.05, x_min=-2.0, x_max=2.0, t_end=1.0, snapshot_every=4
        )
        f = fd_solve(TRANSPORT, SPEC, BoundaryConditions(f1=gaussian(0.0, 0.5)), cfg)
        assert_allclose(f.t, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0], rtol=0, atol=1e-12)

    def test_runaway_state_raises(self):
        cfg = SolverConfig(
            dx=0.05, dt=0.05, x_min=-4.0, x_max=4.0, t_end=1.0, p_max=0.5
        )
        bc = BoundaryConditions(f1=gaussian(1.0, 0.5))
        with pytest.raises(StabilityError):
            fd_solve(COUPLED, SPEC, bc, cfg)


class TestScalarQueueing:
    def test_stationary_profile_is_a_fixed_point(self):
        # full-mass jumps (beta = lam) with unit load 2/3: the known
        # cumulative profile 1 - (2/3) exp(-x/2) must sit still; the
        # rehearsed drift at this resolution is 7.5e-4
        params = ModelParams(a=1.0, v=1.0, nondimensional=False)
        rho, eta = 2.0 / 3.0, 0.5
        stationary = lambda x: 1.0 - rho * np.exp(-eta * np.maximum(x, 0.0))
        cfg = SolverConfig(dx=0.01, dt=0.01, x_min=0.0, x_max=15.0, t_end=2.0)
        bc = BoundaryConditions(f1=stationary, w1=lambda t: 1.0)
        f = fd_solve_scalar(params, 1.5, 1.5, bc, cfg)
        assert np.abs(f.p1[-1] - stationary(f.x)).max() < 2e-3

    def test_conservative_amplitude_preserves_mass(self):
        # beta = lam makes the smoothing mass-neutral; away from the
        # edges the density integral drifts only at O(dt)
        params = ModelParams(a=1.0, v=1.0, nondimensional=False)
        cfg = SolverConfig(dx=0.05, dt=0.025, x_min=-8.0, x_max=8.0, t_end=1.0)
        bc = BoundaryConditions(f1=gaussian(0.0, 0.5))
        f = fd_solve_scalar(params, 1.5, 1.5, bc, cfg, kind="density")
        m0 = f.p1[0].sum() * cfg.dx
        m1 = f.p1[-1].sum() * cfg.dx
        assert abs(m1 - m0) / m0 < 5e-4

    def test_second_component_always_zero(self):
        cfg = SolverConfig(dx=0.1, dt=0.1, x_min=-2.0, x_max=2.0, t_end=0.5)
        f = fd_solve_scalar(
            COUPLED, 1.5, 0.9, BoundaryConditions(f1=gaussian(0.0, 0.5)), cfg
        )
        assert not f.p2.any()

    def test_rejects_nonpositive_decay(self):
        cfg = SolverConfig(dx=0.1, dt=0.1, x_min=-2.0, x_max=2.0, t_end=0.5)
        with pytest.raises(ConfigError):
            fd_solve_scalar(COUPLED, -1.0, 0.9, BoundaryConditions(), cfg)
