"""Experiment orchestration: `consensus-lab simulate|certify|verify`.

Parses a JSON experiment config, runs the requested pipeline, writes CSV
trajectories and JSON reports into the output directory and returns an
OutputBundle.  Exit codes: 0 when every check passes, 2 when a check fails,
1 on input or domain errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, dynamics, signals
from .dynamics import Configuration, Constant, CuckerSmale, Trajectory
from .errors import ConfigError, ConsensusLabError
from .graphs import BALANCE_TOL, is_balanced
from .signals import PiecewiseConstantSignal, Window

SERIES_FLOOR_REL = 1e-14


@dataclass
class ExperimentConfig:
    n: int
    d: int
    kernel: object
    signal: PiecewiseConstantSignal
    window: Window
    t_end: float
    dt: float
    sample_every: int
    out_dir: str
    emit: tuple
    initial: np.ndarray | None = None
    sweep: dict | None = None
    certify_kinds: tuple | None = None
    observable: str = "diameter"
    raw: dict = field(default_factory=dict, repr=False)


@dataclass
class OutputBundle:
    trajectory_files: list
    persistence_report: str | None
    contraction_report: str | None
    decay_fit: str | None
    summary_path: str
    summary: dict

    @property
    def exit_code(self) -> int:
        ok = all(c["verdict"] == "pass" for c in self.summary["checks"])
        return 0 if ok else 2


def _get(data, key, where, expect=None, required=True, default=None):
    if key not in data:
        if required:
            raise ConfigError(f"{where}.{key}", "missing")
        return default
    value = data[key]
    if expect is not None and not isinstance(value, expect):
        raise ConfigError(f"{where}.{key}", f"expected {expect}")
    return value


def _parse_kernel(data):
    form = _get(data, "form", "system.kernel", str)
    if form == "constant":
        return Constant(float(_get(data, "c", "system.kernel")))
    if form == "cucker_smale":
        return CuckerSmale(float(_get(data, "K", "system.kernel")),
                           float(_get(data, "beta", "system.kernel")))
    raise ConfigError("system.kernel.form", f"unknown kernel form {form!r}")


def _parse_signal(data, n):
    kind = _get(data, "type", "signal", str)
    if kind == "rotating_star":
        sig = signals.gen_rotating_star(
            n, float(_get(data, "dwell", "signal")), data.get("seed"))
    elif kind == "blinking_pairs":
        sig = signals.gen_blinking_pairs(
            n, float(_get(data, "dwell", "signal")),
            float(_get(data, "duty", "signal")), data.get("seed"))
    elif kind == "inline":
        sig = PiecewiseConstantSignal.from_json_dict(_get(data, "data", "signal", dict))
    else:
        raise ConfigError("signal.type", f"unknown signal type {kind!r}")
    if sig.n != n:
        raise ConfigError("signal", f"signal has n={sig.n} but system.n={n}")
    return sig


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a config dictionary; ConfigError diagnostics name the field."""
    system = _get(data, "system", "config", dict)
    n = int(_get(system, "n", "system"))
    d = int(_get(system, "d", "system"))
    if n < 1:
        raise ConfigError("system.n", "must be >= 1")
    if d < 1:
        raise ConfigError("system.d", "must be >= 1")
    kernel = _parse_kernel(_get(system, "kernel", "system", dict))
    sig = _parse_signal(_get(data, "signal", "config", dict), n)

    window_data = _get(data, "window", "config", dict)
    try:
        window = Window(float(_get(window_data, "tau", "window")),
                        float(_get(window_data, "mu", "window")))
    except ValueError as exc:
        raise ConfigError("window", str(exc)) from exc

    run = _get(data, "run", "config", dict)
    t_end = float(_get(run, "t_end", "run"))
    if not t_end > 0:
        raise ConfigError("run.t_end", "must be > 0")
    if window.tau > t_end:
        raise ConfigError("window.tau", f"tau={window.tau} exceeds run.t_end={t_end}")
    dt = run.get("dt")
    if dt is None:
        dwell_min = float(np.diff(sig.breakpoints).min())
        dt = dynamics.default_dt(dwell_min, window.tau)
    dt = float(dt)
    if not dt > 0:
        raise ConfigError("run.dt", "must be > 0")
    sample_every = int(run.get("sample_every", 1))
    if sample_every < 1:
        raise ConfigError("run.sample_every", "must be >= 1")

    initial = data.get("initial")
    if initial is not None:
        initial = np.asarray(initial, dtype=np.float64)
        if initial.ndim == 1:
            initial = initial[:, None]
        if initial.shape != (n, d):
            raise ConfigError("initial", f"must be {n}x{d}, got {initial.shape}")

    sweep = data.get("sweep")
    if sweep is not None:
        sweep = dict(sweep)
        sweep.setdefault("num_initial", 32)
        sweep.setdefault("init_set", "unit_ball")
        sweep.setdefault("seed", 0)
        if int(sweep["num_initial"]) < 1:
            raise ConfigError("sweep.num_initial", "must be >= 1")
        init_set = sweep["init_set"]
        if not (init_set == "unit_ball" or isinstance(init_set, list)):
            raise ConfigError("sweep.init_set",
                              "must be 'unit_ball' or an explicit list")

    outputs = _get(data, "outputs", "config", dict, required=False, default={})
    emit = tuple(outputs.get("emit", ()))
    certify_kinds = data.get("certify", {}).get("kinds")
    if certify_kinds is not None:
        certify_kinds = tuple(certify_kinds)
        for kind in certify_kinds:
            if kind not in ("eta", "lambda2"):
                raise ConfigError("certify.kinds", f"unknown kind {kind!r}")

    observable = data.get("verify", {}).get("observable", "diameter")
    if observable not in ("diameter", "variance"):
        raise ConfigError("verify.observable", "must be 'diameter' or 'variance'")

    return ExperimentConfig(
        n=n, d=d, kernel=kernel, signal=sig, window=window,
        t_end=t_end, dt=dt, sample_every=sample_every,
        out_dir=outputs.get("dir", "."), emit=emit,
        initial=initial, sweep=sweep, certify_kinds=certify_kinds,
        observable=observable, raw=data,
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(json.load(fh))


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _observables_csv(path: Path, traj: Trajectory) -> None:
    with open(path, "w") as fh:
        fh.write("t,diameter,variance\n")
        for t, dia, var in zip(traj.times, traj.diameters, traj.variances):
            fh.write(f"{t:.17g},{dia:.17g},{var:.17g}\n")


def _check(name, value, threshold, ok):
    return {"name": name, "value": value, "threshold": threshold,
            "verdict": "pass" if ok else "fail"}


def _window_grid(cfg):
    """Multiples of tau inside [0, t_end]: forced onto the sample grid."""
    count = int(math.floor(cfg.t_end / cfg.window.tau + 1e-9))
    return cfg.window.tau * np.arange(count + 1)


def _run_one(cfg, x0):
    return dynamics.integrate(x0, cfg.signal, cfg.kernel, cfg.t_end, cfg.dt,
                              cfg.sample_every, forced_times=_window_grid(cfg))


def cmd_simulate(cfg: ExperimentConfig) -> OutputBundle:
    """Integrate one initial configuration; emit trajectory and observables."""
    if cfg.initial is None:
        raise ConfigError("initial", "simulate requires an initial configuration")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj = _run_one(cfg, Configuration(cfg.n, cfg.d, cfg.initial))

    traj_path = out / "trajectory.csv"
    traj.to_csv(traj_path)
    obs_path = out / "observables.csv"
    _observables_csv(obs_path, traj)

    growth = float(np.diff(traj.diameters).max()) if len(traj.times) > 1 else 0.0
    checks = [
        _check("state_finite", True, True, True),
        _check("diameter_nonincreasing", growth, 1e-9, growth <= 1e-9),
    ]
    summary = {"command": "simulate", "checks": checks,
               "files": [traj_path.name, obs_path.name]}
    summary_path = out / "summary.json"
    _write_json(summary_path, summary)
    return OutputBundle([str(traj_path), str(obs_path)], None, None, None,
                        str(summary_path), summary)


def _certify_reports(cfg):
    kinds = cfg.certify_kinds
    balanced = all(is_balanced(p, BALANCE_TOL) for p in cfg.signal.pieces)
    if kinds is None:
        kinds = ("eta", "lambda2") if balanced else ("eta",)
    reports = {}
    for kind in kinds:
        if kind == "eta":
            reports["eta"] = signals.certify_eta(cfg.signal, cfg.window, cfg.t_end)
        else:
            reports["lambda2"] = signals.certify_lambda2(cfg.signal, cfg.window,
                                                         cfg.t_end)
    return reports


def cmd_certify(cfg: ExperimentConfig) -> OutputBundle:
    """Certify window persistence of the signal; emit PersistenceReport JSON."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = _certify_reports(cfg)

    checks, paths = [], {}
    for kind, report in reports.items():
        path = out / f"persistence_{kind}.json"
        _write_json(path, report.to_json_dict())
        paths[kind] = str(path)
        checks.append(_check(f"{kind}_persistence", report.infimum_value,
                             cfg.window.mu, report.passes))
    summary = {"command": "certify", "checks": checks,
               "files": [Path(p).name for p in paths.values()]}
    summary_path = out / "summary.json"
    _write_json(summary_path, summary)
    return OutputBundle([], paths.get("eta") or paths.get("lambda2"), None, None,
                        str(summary_path), summary)


def _draw_initials(cfg):
    sweep = cfg.sweep
    init_set = sweep["init_set"]
    if isinstance(init_set, list):
        return [np.asarray(p, dtype=np.float64).reshape(cfg.n, cfg.d)
                for p in init_set]
    rng = np.random.Generator(np.random.Philox(key=int(sweep["seed"])))
    draws = []
    for _ in range(int(sweep["num_initial"])):
        direction = rng.normal(size=(cfg.n, cfg.d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = rng.random(cfg.n) ** (1.0 / cfg.d)
        draws.append(direction * radius[:, None])
    return draws


def cmd_verify(cfg: ExperimentConfig) -> OutputBundle:
    """Sweep initial configurations, measure per-window contraction and the
    fitted decay rate of the configured observable; certify the signal too.
    """
    if cfg.sweep is None:
        raise ConfigError("sweep", "verify requires a sweep block")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    kind = "eta" if cfg.observable == "diameter" else "lambda2"
    if kind == "eta":
        persistence = signals.certify_eta(cfg.signal, cfg.window, cfg.t_end)
    else:
        persistence = signals.certify_lambda2(cfg.signal, cfg.window, cfg.t_end)
    persistence_path = out / f"persistence_{kind}.json"
    _write_json(persistence_path, persistence.to_json_dict())

    runs = []
    contraction_dicts, fit_dicts, traj_files = [], [], []
    for idx, positions in enumerate(_draw_initials(cfg)):
        x0 = Configuration(cfg.n, cfg.d, positions)
        record = {"run": idx, "consensus_at_t0": False}
        diam0 = analysis.diameter(x0)
        if diam0 <= 0.0:
            record["consensus_at_t0"] = True
            runs.append(record)
            continue
        x0 = Configuration(cfg.n, cfg.d,
                           (x0.positions - x0.positions.mean(axis=0)) / diam0)
        traj = _run_one(cfg, x0)
        if "trajectories" in cfg.emit:
            path = out / f"trajectory_{idx:03d}.csv"
            traj.to_csv(path)
            traj_files.append(str(path))

        series = traj.diameters if cfg.observable == "diameter" else traj.variances
        contraction = analysis.window_contraction(traj, cfg.window.tau,
                                                  cfg.observable)
        keep = series > SERIES_FLOOR_REL * series[0]
        fit = analysis.fit_exponential(traj.times[keep], series[keep])
        record.update(
            kappa_hat=contraction.kappa_hat,
            all_strict=contraction.all_strict,
            gamma=fit.gamma,
            alpha=fit.alpha,
            rms_log_residual=fit.rms_log_residual,
        )
        runs.append(record)
        contraction_dicts.append(
            analysis.analysis_report_json(cfg.observable, contraction, fit))
        fit_dicts.append(fit.to_json_dict())

    contraction_path = out / "analysis_reports.json"
    _write_json(contraction_path, contraction_dicts)
    fits_path = out / "decay_fits.json"
    _write_json(fits_path, fit_dicts)

    live = [r for r in runs if not r["consensus_at_t0"]]
    worst_kappa = max((r["kappa_hat"] for r in live), default=0.0)
    worst_gamma = min((r["gamma"] for r in live), default=float("inf"))
    all_strict = all(r["all_strict"] for r in live)
    checks = [
        _check("persistence", persistence.infimum_value, cfg.window.mu,
               persistence.passes),
        _check("all_strict_every_run", all_strict, True, all_strict),
        _check("worst_kappa_hat", worst_kappa, 1.0, worst_kappa < 1.0),
        _check("every_gamma_positive", worst_gamma, 0.0, worst_gamma > 0.0),
    ]
    summary = {
        "command": "verify",
        "observable": cfg.observable,
        "checks": checks,
        "persistence_infimum": persistence.infimum_value,
        "worst_kappa_hat": worst_kappa,
        "worst_gamma": worst_gamma,
        "gamma_from_kappa": (-math.log(worst_kappa) / cfg.window.tau
                             if 0.0 < worst_kappa < 1.0 else None),
        "runs": runs,
        "files": [persistence_path.name, contraction_path.name, fits_path.name],
    }
    summary_path = out / "summary.json"
    _write_json(summary_path, summary)
    return OutputBundle(traj_files, str(persistence_path), str(contraction_path),
                        str(fits_path), str(summary_path), summary)


COMMANDS = {"simulate": cmd_simulate, "certify": cmd_certify, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="consensus-lab",
        description="Simulate, certify and verify consensus dynamics on "
                    "switching interaction graphs.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--dt", type=float, help="override run.dt")
    parser.add_argument("--seed", type=int, help="override sweep.seed")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            data = json.load(fh)
        if args.out is not None:
            data.setdefault("outputs", {})["dir"] = args.out
        if args.dt is not None:
            data.setdefault("run", {})["dt"] = args.dt
        if args.seed is not None and "sweep" in data:
            data["sweep"]["seed"] = args.seed
        cfg = parse_config(data)
        bundle = COMMANDS[args.command](cfg)
    except (ConsensusLabError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for check in bundle.summary["checks"]:
        print(f"{check['name']}: {check['verdict']} "
              f"(value={check['value']}, threshold={check['threshold']})")
    return bundle.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
