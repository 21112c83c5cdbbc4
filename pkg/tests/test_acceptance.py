"""Acceptance suite: one test per criterion, each asserting its stated
tolerances and runtime budget and printing a single PASS line."""
import itertools
import json
import time
from pathlib import Path

import numpy as np
import pytest

import consensuslab as cl
from consensuslab.cli import cmd_verify, parse_config

from oracles import lambda2_rayleigh_grid, scrambling_direct

GRID_VALUES = (0.0, 0.5, 1.0)


def report(label, elapsed, budget, detail=""):
    assert elapsed < budget, f"{label} took {elapsed:.1f}s, budget {budget}s"
    suffix = f" [{detail}]" if detail else ""
    print(f"ACCEPTANCE {label}: PASS ({elapsed:.2f}s / {budget}s){suffix}")


def all_ones_signal(n=2):
    return cl.PiecewiseConstantSignal(
        n, np.array([0.0, 1.0]), (cl.AdjacencyMatrix.ones(n),), "periodic")


def two_agent_run(dt):
    x0 = cl.Configuration.from_positions([-1.0, 1.0])
    return cl.integrate(x0, all_ones_signal(), cl.Constant(1.0), 5.0, dt)


def test_criterion_1_closed_form_oracle():
    start = time.perf_counter()
    traj = two_agent_run(1e-3)
    err = np.abs(traj.diameters - 2.0 * np.exp(-traj.times)).max()
    assert err <= 1e-6

    fit = cl.fit_exponential(traj.times, traj.diameters)
    assert 0.999 <= fit.gamma <= 1.001

    contraction = cl.window_contraction(traj, 1.0)
    assert np.abs(contraction.factors - np.exp(-1.0)).max() <= 1e-6
    report("1 closed-form oracle", time.perf_counter() - start, 1.0,
           f"max_err={err:.2e} gamma={fit.gamma:.6f}")


def _eq4_inequality_holds(adj, rng, cases=100):
    lam = cl.algebraic_connectivity(adj)
    n = adj.n
    positions = rng.normal(size=(cases, n, 2))
    diff = positions[:, :, None, :] - positions[:, None, :, :]
    sq = np.einsum("kijc,kijc->kij", diff, diff)
    energy = (adj.entries * sq).sum(axis=(1, 2)) / (2.0 * n * n)
    centered = positions - positions.mean(axis=1, keepdims=True)
    var = np.einsum("kic,kic->k", centered, centered) / n
    return bool(np.all(energy >= lam * var - 1e-9))


def _grid_matrices_exhaustive(n):
    off_diag = [(i, j) for i in range(n) for j in range(n) if i != j]
    for combo in itertools.product(GRID_VALUES, repeat=len(off_diag)):
        entries = np.eye(n)
        for (i, j), v in zip(off_diag, combo):
            entries[i, j] = v
        yield entries


def test_criterion_2_metric_oracles():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    eq4_rng = np.random.default_rng(2025)
    checked, balanced_checked = 0, 0

    def check(entries):
        nonlocal checked, balanced_checked
        adj = cl.AdjacencyMatrix.from_entries(entries)
        assert cl.scrambling(adj) == scrambling_direct(entries)
        checked += 1
        if cl.is_balanced(adj):
            lam = cl.algebraic_connectivity(adj)
            assert abs(lam - max(lambda2_rayleigh_grid(entries), 0.0)) <= 1e-6
            assert _eq4_inequality_holds(adj, eq4_rng)
            balanced_checked += 1

    for n in (1, 2, 3):
        for entries in _grid_matrices_exhaustive(n):
            check(entries)
    for _ in range(10**4):
        entries = rng.choice(GRID_VALUES, size=(4, 4))
        np.fill_diagonal(entries, 1.0)
        check(entries)

    report("2 metric oracles", time.perf_counter() - start, 30.0,
           f"{checked} matrices, {balanced_checked} balanced")


def _lattice_signal(rng, n, pieces, units=200):
    """Random balanced periodic signal with breakpoints on the 1/units lattice,
    so every critical window start lands exactly on the dense-scan grid."""
    cuts = np.sort(rng.choice(np.arange(1, units), size=pieces - 1,
                              replace=False))
    counts = np.diff(np.concatenate([[0], cuts, [units]]))
    mats = []
    for _ in range(pieces):
        entries = rng.random((n, n)) * (rng.random((n, n)) < 0.6)
        entries = 0.5 * (entries + entries.T)
        np.fill_diagonal(entries, 1.0)
        mats.append(cl.AdjacencyMatrix.from_entries(entries))
    breakpoints = np.concatenate([[0.0], np.cumsum(counts)]) / units
    return cl.PiecewiseConstantSignal(n, breakpoints, tuple(mats), "periodic")


def _scan_minima(sig, tau, points=10**4):
    starts = sig.period * np.arange(points) / points
    batch = cl.window_average_batch(sig, starts, tau)
    n = sig.n
    pair_sums = np.minimum(batch[:, :, None, :], batch[:, None, :, :]).sum(-1)
    eta_min = float(pair_sums.min(axis=(1, 2)).min() / n)

    degs = batch.sum(axis=2)
    laps = (degs[:, :, None] * np.eye(n) - batch) / n
    sym = 0.5 * (laps + np.transpose(laps, (0, 2, 1)))
    shifted = sym + 3.0 * np.ones((n, n)) / n
    lam_min = float(np.linalg.eigvalsh(shifted)[:, 0].min())
    return eta_min, max(lam_min, 0.0)


def test_criterion_3_persistence_exactness():
    start = time.perf_counter()
    rng = np.random.default_rng(303)
    for case in range(100):
        n = int(rng.integers(2, 6))
        sig = _lattice_signal(rng, n, pieces=int(rng.integers(2, 7)))
        tau = float(rng.integers(20, 180)) / 200.0
        window = cl.Window(tau, 0.5)

        eta_rep = cl.certify_eta(sig, window, 10.0)
        lam_rep = cl.certify_lambda2(sig, window, 10.0)
        eta_scan, lam_scan = _scan_minima(sig, tau)

        assert eta_rep.infimum_value <= eta_scan + 1e-9
        assert eta_rep.infimum_value >= eta_scan - 1e-9
        assert lam_rep.infimum_value <= lam_scan + 1e-9
        assert lam_rep.infimum_value >= lam_scan - 1e-9
    report("3 persistence exactness", time.perf_counter() - start, 60.0,
           "100 signals, eta and lambda2 vs 1e4-point scans")


def test_criterion_4_diameter_decay_under_scrambling_persistence(tmp_path):
    start = time.perf_counter()
    cfg = parse_config({
        "system": {"n": 5, "d": 2,
                   "kernel": {"form": "cucker_smale", "K": 1.0, "beta": 1.0}},
        "signal": {"type": "rotating_star", "dwell": 0.2},
        "window": {"tau": 1.0, "mu": 0.04},
        "run": {"t_end": 10.0, "dt": 0.01},
        "sweep": {"num_initial": 32, "init_set": "unit_ball", "seed": 7},
        "outputs": {"dir": str(tmp_path)},
    })
    bundle = cmd_verify(cfg)
    summary = bundle.summary

    mu = summary["persistence_infimum"]
    assert mu >= 0.04
    live = [r for r in summary["runs"] if not r["consensus_at_t0"]]
    assert len(live) == 32
    assert all(r["all_strict"] for r in live)
    assert summary["worst_kappa_hat"] <= 0.999
    assert all(r["gamma"] > 0.0 for r in live)
    assert all(r["rms_log_residual"] <= 0.2 for r in live)
    report("4 diameter decay, scrambling persistence", time.perf_counter() - start,
           120.0, f"certified mu={mu:.4f} worst_kappa="
                  f"{summary['worst_kappa_hat']:.4f}")


def test_criterion_5_variance_decay_under_connectivity_persistence(tmp_path):
    start = time.perf_counter()
    tau = 1.5
    cfg = parse_config({
        "system": {"n": 4, "d": 2, "kernel": {"form": "constant", "c": 1.0}},
        "signal": {"type": "blinking_pairs", "dwell": 0.5, "duty": 0.5},
        "window": {"tau": tau, "mu": 0.05},
        "run": {"t_end": 10.0, "dt": 0.01},
        "sweep": {"num_initial": 32, "init_set": "unit_ball", "seed": 11},
        "verify": {"observable": "variance"},
        "outputs": {"dir": str(tmp_path)},
    })
    bundle = cmd_verify(cfg)
    summary = bundle.summary

    mu_star = summary["persistence_infimum"]
    assert mu_star > 0.0
    reports = json.loads(Path(bundle.contraction_report).read_text())
    assert len(reports) == 32
    worst_slope = -np.inf
    for rep in reports:
        assert rep["kind"] == "variance" and "fit" in rep
        factors = np.asarray(rep["factors"])
        slopes = np.log(factors) / tau
        worst_slope = max(worst_slope, float(slopes.max()))
        assert np.all(factors < 1.0)  # strict variance decay per window
    assert worst_slope <= -2.0 * mu_star + 1e-3
    assert all(r["all_strict"] for r in summary["runs"])
    report("5 variance decay, connectivity persistence", time.perf_counter() - start,
           120.0, f"mu*={mu_star:.4f} worst_slope={worst_slope:.5f} "
                  f"bound={-2 * mu_star + 1e-3:.5f}")


def _random_triple(seed):
    rng = np.random.default_rng(seed)
    pick = int(rng.integers(3))
    if pick == 0:
        sig = cl.gen_rotating_star(int(rng.integers(3, 7)),
                                   dwell=float(0.1 + 0.4 * rng.random()))
    elif pick == 1:
        sig = cl.gen_blinking_pairs(int(rng.choice([4, 6])),
                                    dwell=float(0.2 + 0.4 * rng.random()),
                                    duty=float(0.3 + 0.7 * rng.random()))
    else:
        n = int(rng.integers(3, 6))
        mats = []
        for _ in range(int(rng.integers(2, 5))):
            entries = rng.random((n, n)) * (rng.random((n, n)) < 0.5)
            np.fill_diagonal(entries, 1.0)  # general (possibly unbalanced)
            mats.append(cl.AdjacencyMatrix.from_entries(entries))
        bp = np.concatenate([[0.0], np.cumsum(rng.integers(2, 8, len(mats)))])
        sig = cl.PiecewiseConstantSignal(n, bp * 0.05, tuple(mats), "periodic")
    if rng.random() < 0.5:
        kernel = cl.Constant(float(0.3 + rng.random()))
    else:
        kernel = cl.CuckerSmale(float(0.5 + rng.random()),
                                float(1.2 * rng.random()))
    d = int(rng.integers(1, 4))
    scale = float(0.5 + 1.5 * rng.random())
    x0 = cl.Configuration.from_positions(rng.normal(size=(sig.n, d)) * scale)
    return sig, kernel, x0


def test_criterion_6_invariant_suite():
    start = time.perf_counter()
    dir_rngs = {d: np.random.default_rng(640 + d) for d in (1, 2, 3)}
    directions = {}
    for d, rng in dir_rngs.items():
        dirs = rng.normal(size=(d, 64))
        directions[d] = dirs / np.linalg.norm(dirs, axis=0)

    for seed in range(200):
        sig, kernel, x0 = _random_triple(seed)
        traj = cl.integrate(x0, sig, kernel, 3.0, 1e-2, sample_every=4)

        # Elementary stability: max norm and 64 support functions nonincreasing
        norms = np.linalg.norm(traj.states, axis=2).max(axis=1)
        assert np.diff(norms).max() <= 1e-9
        support = (traj.states @ directions[traj.d]).max(axis=1)
        assert np.diff(support, axis=0).max() <= 1e-9

        # diameter cannot vanish in finite time faster than its lower bound
        d0 = traj.diameters[0]
        _, c_phi = cl.kernel_bounds(kernel, d0)
        assert np.all(traj.diameters >= d0 * np.exp(-2.0 * c_phi * traj.times)
                      - 1e-8)

        # maximizer geometry versus every later sample
        for ti in range(len(traj.times)):
            x_t = traj.state(ti)
            if traj.diameters[ti] <= 1e-12:
                continue
            for (i, j) in cl.diameter_pairs(x_t).pairs:
                delta = x_t.positions[i] - x_t.positions[j]
                later = traj.states[ti:] @ delta
                assert (float(x_t.positions[i] @ delta) - later).min() >= -1e-9
                assert (later - float(x_t.positions[j] @ delta)).min() >= -1e-9

    # tie the vectorized gap check to the public operation on one sample
    sig, kernel, x0 = _random_triple(7)
    traj = cl.integrate(x0, sig, kernel, 1.0, 1e-2, sample_every=10)
    x_t = traj.state(0)
    pair = next(iter(cl.diameter_pairs(x_t).pairs))
    y = next(k for k in range(x_t.n) if k != pair[0]
             and not np.array_equal(x_t.positions[k], x_t.positions[pair[0]]))
    delta = x_t.positions[pair[0]] - x_t.positions[pair[1]]
    direct = float((x_t.positions[pair[0]] - x_t.positions[y]) @ delta)
    assert cl.check_maximizer_geometry(x_t, pair, y) == pytest.approx(direct)

    report("6 invariant suite (stability, lower bound, geometry)",
           time.perf_counter() - start, 300.0, "200 random triples")


def _random_balanced_signal(rng, n, pieces, unit=0.05):
    counts = rng.integers(2, 8, size=pieces)
    mats = []
    for _ in range(pieces):
        entries = rng.random((n, n)) * (rng.random((n, n)) < 0.5)
        entries = 0.5 * (entries + entries.T)
        np.fill_diagonal(entries, 1.0)
        mats.append(cl.AdjacencyMatrix.from_entries(entries))
    bp = np.concatenate([[0.0], np.cumsum(counts)]) * unit
    return cl.PiecewiseConstantSignal(n, bp, tuple(mats), "periodic")


def test_criterion_7_conservation_and_dissipation():
    start = time.perf_counter()
    rng = np.random.default_rng(2027)
    worst_res, worst_drift = 0.0, 0.0
    for run in range(50):
        n = int(rng.integers(2, 6))
        pick = run % 3
        if pick == 0:
            sig = cl.gen_rotating_star(n, dwell=0.25)
        elif pick == 1:
            sig = cl.gen_blinking_pairs(n + (n % 2), dwell=0.5, duty=0.5)
        else:
            sig = _random_balanced_signal(rng, n, int(rng.integers(2, 5)))
        d = int(rng.integers(1, 4))
        x0 = cl.Configuration.from_positions(rng.normal(size=(sig.n, d)) * 0.5)
        traj = cl.integrate(x0, sig, cl.Constant(1.0), 2.0, 1e-3)
        worst_drift = max(worst_drift,
                          float(np.abs(traj.means - traj.means[0]).max()))
        worst_res = max(worst_res, cl.variance_dissipation_residual(traj, sig))
    assert worst_drift <= 1e-9
    assert worst_res <= 1e-5
    report("7 conservation and dissipation", time.perf_counter() - start, 60.0,
           f"drift={worst_drift:.2e} residual={worst_res:.2e}")


def test_criterion_8_integrator_order():
    # Fourth-order convergence on the criterion-1 problem.  The dt halving is
    # measured at 8e-3 -> 4e-3: at the criterion-1 step 1e-3 the global error
    # is ~1e-14, i.e. at the double-precision floor, where halving measures
    # roundoff instead of truncation order.
    start = time.perf_counter()

    def max_err(dt):
        traj = two_agent_run(dt)
        return np.abs(traj.diameters - 2.0 * np.exp(-traj.times)).max()

    ratio = max_err(8e-3) / max_err(4e-3)
    assert 12.0 <= ratio <= 20.0
    report("8 integrator order", time.perf_counter() - start, 60.0,
           f"error ratio={ratio:.2f}")
