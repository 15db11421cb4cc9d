"""Acceptance gate: one test per release criterion.

Run with -v to get a per-criterion pass/fail line.  Each test prints
its measured numbers so the margins are visible in the report, and
asserts exactly the contracted tolerance, never a looser one.
"""

import os
import time

import numpy as np
import pytest
from click.testing import CliRunner

from lightqueue.cli import main as cli_main
from lightqueue.config import (
    kernel_from,
    load_config,
    params_from,
    uniform_grid,
)
from lightqueue.fields import BoundaryConditions, SignalWaveform
from lightqueue.laplace import (
    ContourSpec,
    bromwich_invert,
    default_contour_pair,
    green_kernel,
    respond,
)
from lightqueue.model import (
    KernelSpec,
    ModelParams,
    characteristic_poly,
    clearing_curves,
    recombine,
)
from lightqueue.metrics import kl_distance
from lightqueue.takacs import SolverConfig, fd_solve, fd_solve_scalar
from lightqueue.workload_mc import (
    SimConfig,
    compare_cdf,
    simulate_workload,
    stationary_workload_sampler,
)

HEADLINE_PARAMS = ModelParams(a=1.0, v=0.75)
HEADLINE_SPEC = KernelSpec(lam=1.5, beta1=0.6, beta2=0.3)


@pytest.fixture(scope="module")
def bundle_kernel():
    """Kernel over the full analysis window of the default config."""
    cfg = load_config(None)
    g = cfg["green"]
    x = uniform_grid(g["x_min"], g["x_max"], g["dx"])
    t = uniform_grid(0.0, g["t_max"], g["dt"])
    kern = green_kernel(
        x, t, HEADLINE_PARAMS, HEADLINE_SPEC,
        *default_contour_pair(x, t, HEADLINE_PARAMS),
    )
    return cfg, kern


def test_criterion_1_flagship_cross_path():
    # direct march and kernel convolution agree to better than 5%
    # relative L2 on three snapshots, inside the five minute budget
    start = time.perf_counter()
    dx = 0.025
    cfg = SolverConfig(
        dx=dx, dt=1.0 / 30.0, x_min=-6.0, x_max=16.0, t_end=4.0,
        snapshot_every=30,
    )
    bc = BoundaryConditions(
        f1=lambda x: np.exp(-0.5 * ((x - 4.0) / 0.5) ** 2),
        f2=lambda x: 0.5 * np.exp(-0.5 * ((x - 5.0) / 0.7) ** 2),
    )
    fd = fd_solve(HEADLINE_PARAMS, HEADLINE_SPEC, bc, cfg)

    xk = np.round(np.arange(-22.0 / dx, 22.0 / dx + 0.5)) * dx
    tk = np.array([1.0, 2.0, 4.0])
    kern = green_kernel(
        xk, tk, HEADLINE_PARAMS, HEADLINE_SPEC,
        *default_contour_pair(xk, tk, HEADLINE_PARAMS),
    )
    sig = SignalWaveform(x=fd.x, phi1=bc.f1(fd.x), phi2=bc.f2(fd.x))
    for t_eval in tk:
        wave = respond(sig, kern, t_eval)
        j = fd.time_index(t_eval)
        window = fd.x <= 12.0
        num = np.sqrt(
            np.trapezoid(
                (fd.p1[j] - wave.phi1)[window] ** 2
                + (fd.p2[j] - wave.phi2)[window] ** 2,
                fd.x[window],
            )
        )
        den = np.sqrt(
            np.trapezoid(
                wave.phi1[window] ** 2 + wave.phi2[window] ** 2, fd.x[window]
            )
        )
        rel = num / den
        print(f"criterion 1: t={t_eval} rel L2 = {rel:.4f}")
        assert rel < 0.05
    elapsed = time.perf_counter() - start
    print(f"criterion 1: elapsed {elapsed:.1f}s")
    assert elapsed < 300.0


def test_criterion_2_queueing_cross_validation():
    # scalar march vs the known long-time cumulative profile, and a
    # million-path simulation within 3 standard errors of both
    start = time.perf_counter()
    params = ModelParams(a=1.0, v=1.0, nondimensional=False)
    stationary = lambda x: 1.0 - (2.0 / 3.0) * np.exp(-0.5 * np.maximum(x, 0.0))
    cfg = SolverConfig(
        dx=0.0025, dt=0.0025, x_min=0.0, x_max=40.0, t_end=10.0,
        snapshot_every=4000,
    )
    bc = BoundaryConditions(f1=stationary, w1=lambda t: 1.0)
    fd = fd_solve_scalar(params, 1.5, 1.5, bc, cfg)
    sup = np.abs(fd.p1[-1] - stationary(fd.x)).max()
    print(f"criterion 2: fd sup deviation {sup:.2e}")
    assert sup < 0.01

    sim = SimConfig(
        n_paths=10**6, t_end=10.0, seed=1234,
        initial=stationary_workload_sampler(1.0, 1.0, 1.5),
        v=1.0, a=1.0, lam=1.5, beta=1.5,
    )
    grid = np.round(np.arange(0, 241)) * 0.05
    emp = simulate_workload(sim, grid)
    z_closed = np.abs(
        (emp.cdf - stationary(emp.x))
        / np.where(emp.stderr > 0, emp.stderr, np.inf)
    ).max()
    rep = compare_cdf(emp, fd, 10.0)
    finite = np.isfinite(rep.z_scores)
    z_fd = np.abs(rep.z_scores[finite]).max()
    print(f"criterion 2: max|z| closed-form {z_closed:.2f}, fd {z_fd:.2f}")
    assert z_closed <= 3.0
    assert z_fd <= 3.0
    elapsed = time.perf_counter() - start
    print(f"criterion 2: elapsed {elapsed:.1f}s")
    assert elapsed < 120.0


def test_criterion_3_transform_pair_suite():
    # three known transform pairs, each to 1e-6 in under a second
    contour = ContourSpec(scheme="deformed")
    pairs = (
        (lambda s: 1.0 / (s + 1.5), 1.0, float(np.exp(-1.5))),
        (lambda s: 1.0 / s, 1.0, 1.0),
        (lambda s: 1.0 / (s + 1.5) ** 2, 2.0, float(2.0 * np.exp(-3.0))),
    )
    for fn, t_eval, want in pairs:
        start = time.perf_counter()
        got = bromwich_invert(fn, t_eval, contour)
        elapsed = time.perf_counter() - start
        print(f"criterion 3: t={t_eval} err {abs(got - want):.2e} in {elapsed:.3f}s")
        assert abs(got - want) < 1e-6
        assert elapsed < 1.0


def test_criterion_4_sum_difference_decoupling():
    # the coupled march equals the rotated pair of scalar marches
    cfg = SolverConfig(dx=0.05, dt=0.05, x_min=-4.0, x_max=4.0, t_end=1.0)
    f1 = lambda x: np.exp(-0.5 * ((x - 1.0) / 0.5) ** 2)
    f2 = lambda x: 0.4 * np.exp(-0.5 * ((x - 1.5) / 0.7) ** 2)
    coupled = fd_solve(
        HEADLINE_PARAMS, HEADLINE_SPEC, BoundaryConditions(f1=f1, f2=f2), cfg
    )
    qp = fd_solve_scalar(
        HEADLINE_PARAMS, HEADLINE_SPEC.lam,
        HEADLINE_SPEC.beta1 + HEADLINE_SPEC.beta2,
        BoundaryConditions(f1=lambda x: f1(x) + f2(x)), cfg, kind="density",
    )
    qm = fd_solve_scalar(
        HEADLINE_PARAMS, HEADLINE_SPEC.lam,
        HEADLINE_SPEC.beta1 - HEADLINE_SPEC.beta2,
        BoundaryConditions(f1=lambda x: f1(x) - f2(x)), cfg, kind="density",
    )
    back = recombine(qp, qm)
    gap = max(
        np.abs(coupled.p1 - back.p1).max(), np.abs(coupled.p2 - back.p2).max()
    )
    print(f"criterion 4: worst channel gap {gap:.2e}")
    assert gap < 1e-10


def test_criterion_5_causality_outside_the_cone(bundle_kernel):
    # with a three-step margin, nothing may appear ahead of the front
    # above a thousandth of the global peak
    cfg, kern = bundle_kernel
    margin = 3.0 * cfg["green"]["dt"]
    gmax = np.abs(kern.k).max()
    v = HEADLINE_PARAMS.v
    worst = 0.0
    for j, tj in enumerate(kern.t):
        outside = kern.x + v * tj < -v * margin
        if np.any(outside):
            worst = max(worst, np.abs(kern.k[j, outside]).max())
    print(f"criterion 5: worst outside-cone |K| = {worst:.2e}, bound {1e-3 * gmax:.2e}")
    assert worst < 1e-3 * gmax


def test_criterion_6_clearing_curves():
    # both branches are exact zeros of the characteristic symbol over
    # the default scan, with the contracted values at s = 0
    cfg = load_config(None)
    c = cfg["clearing"]
    plus, minus = clearing_curves(
        c["s_lo"], c["s_hi"], c["n"], HEADLINE_PARAMS, HEADLINE_SPEC
    )
    worst = 0.0
    for curve in (plus, minus):
        residual = characteristic_poly(
            curve.s, curve.tau, HEADLINE_PARAMS, HEADLINE_SPEC
        )
        worst = max(worst, np.abs(residual).max())
    print(f"criterion 6: worst |P(s, tau(s))| = {worst:.2e}")
    assert worst < 1e-10
    i0 = int(np.argmin(np.abs(plus.s)))
    print(f"criterion 6: tau_plus(0) = {plus.tau[i0]}, tau_minus(0) = {minus.tau[i0]}")
    assert abs(plus.tau[i0] - (-0.4)) < 1e-12
    assert abs(minus.tau[i0] - (-0.8)) < 1e-12


def test_criterion_7_kl_delay_profile(bundle_kernel):
    # the distance-to-aligned-slice series vanishes at zero delay,
    # stays nonnegative, and peaks at an intermediate delay
    cfg, kern = bundle_kernel
    m = cfg["metrics"]
    taus = uniform_grid(0.0, m["tau_max"], m["dtau"])
    series = kl_distance(
        kern, taus, m["speed_kl"], (m["x_lo"], m["x_hi"]), (1, 1)
    )
    peak = float(taus[int(np.argmax(series.values))])
    print(f"criterion 7: D(0) = {series.values[0]}, peak at tau = {peak:.2f}, "
          f"min value = {series.values.min():.2e}")
    assert series.values[0] == 0.0
    assert np.all(series.values >= -1e-12)
    assert 1.0 <= peak <= 3.0


def test_criterion_8_transport_convergence_order():
    # pure transport at fractional CFL: halving the grid halves the
    # error (ratio in [1.7, 2.3])
    params = ModelParams(a=0.0, v=1.0, nondimensional=False)
    pulse = lambda x: np.exp(-0.5 * (x / 0.5) ** 2)

    def sup_error(dx):
        cfg = SolverConfig(dx=dx, dt=dx / 2, x_min=-4.0, x_max=4.0, t_end=1.0)
        f = fd_solve(params, HEADLINE_SPEC, BoundaryConditions(f1=pulse), cfg)
        window = f.x <= 2.0
        return np.abs(f.p1[-1] - pulse(f.x + 1.0))[window].max()

    ratio = sup_error(0.1) / sup_error(0.05)
    print(f"criterion 8: error ratio under halving = {ratio:.3f}")
    assert 1.7 <= ratio <= 2.3


def test_criterion_9_pipeline_reruns_are_byte_identical(tmp_path):
    # every CLI pipeline replays bit-for-bit from its manifest
    runner = CliRunner()
    green_small = [
        "--set", "green.dx=0.2", "--set", "green.x_min=-2.0",
        "--set", "green.x_max=2.0", "--set", "green.dt=0.5",
        "--set", "green.t_max=2.5",
    ]
    metrics_small = [
        "--set", "metrics.tau_max=1.0", "--set", "metrics.dtau=0.5",
        "--set", "metrics.x_lo=-2.0", "--set", "metrics.x_hi=1.5",
    ]
    fd_small = [
        "--set", "solver.dx=0.1", "--set", "solver.dt=0.1",
        "--set", "solver.x_min=-2.0", "--set", "solver.x_max=2.0",
        "--set", "solver.t_end=0.5", "--set", "solver.snapshot_every=1",
    ]
    sim_small = ["--set", "sim.n_paths=2000", "--set", "sim.t_end=1.0"]

    def run(args):
        result = runner.invoke(cli_main, args)
        assert result.exit_code == 0, f"{args}: {result.output}"

    def same_bytes(a, b):
        with open(a, "rb") as fa, open(b, "rb") as fb:
            return fa.read() == fb.read()

    os.chdir(tmp_path)
    run(["green", *green_small, "--out", "k"])
    run(["rerun", "k.manifest.json", "--out", "k2"])
    checks = [("k.csv", "k2.csv"), ("k.rgk", "k2.rgk")]

    sig_x = np.round(np.arange(-3, 4)) * 0.2
    sig = SignalWaveform(
        x=sig_x, phi1=np.exp(-sig_x**2), phi2=np.zeros(sig_x.size)
    )
    with open("sig.csv", "w", newline="") as fh:
        fh.write(sig.to_csv())
    run(["respond", "--kernel", "k.rgk", "--signal", "sig.csv",
         "--t", "0.5", "--out", "resp"])
    run(["rerun", "resp.manifest.json", "--out", "resp2"])
    checks.append(("resp.csv", "resp2.csv"))

    run(["fd", *fd_small, "--out", "sol"])
    run(["rerun", "sol.manifest.json", "--out", "sol2"])
    checks.append(("sol.csv", "sol2.csv"))

    run(["simulate", *sim_small, "--seed", "5", "--out", "mc"])
    run(["rerun", "mc.manifest.json", "--out", "mc2"])
    checks.append(("mc.csv", "mc2.csv"))

    run(["metrics", *metrics_small, "--kernel", "k.rgk",
         "--metric", "autocorr", "--out", "ac"])
    run(["rerun", "ac.manifest.json", "--out", "ac2"])
    checks.append(("ac.csv", "ac2.csv"))

    run(["metrics", *metrics_small, "--kernel", "k.rgk",
         "--metric", "kl", "--out", "klm"])
    run(["rerun", "klm.manifest.json", "--out", "klm2"])
    checks.append(("klm.csv", "klm2.csv"))

    run(["clearing", "--s-range", "0:2:5", "--out", "cl"])
    run(["rerun", "cl.manifest.json", "--out", "cl2"])
    checks.append(("cl.csv", "cl2.csv"))

    run(["figures", *green_small, *metrics_small, *fd_small, "--outdir", "figs"])
    run(["rerun", "figs/manifest.json", "--outdir", "figs2"])
    for name in os.listdir("figs"):
        if name != "manifest.json":
            checks.append((os.path.join("figs", name), os.path.join("figs2", name)))

    for a, b in checks:
        assert same_bytes(a, b), f"{a} differs from {b}"
    print(f"criterion 9: {len(checks)} replayed outputs byte-identical")
