"""Experiment runner.

Two modes: ``converge`` sweeps uniform step counts and tabulates errors,
estimator values, orders and effectivity indices; ``adapt`` runs the
step-size controller and dumps the step trajectory.  Configuration comes
from a flat key = value file plus command-line overrides (flag beats file
beats default); results are written as CSV with a JSON summary echoing the
effective configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from .bench import (
    DEFAULT_THETA,
    PROBLEM_IDS,
    backend_for,
    build_problem,
    convergence_order,
    run_adaptive,
    run_uniform,
)
from .control import AdaptiveConfig, StepControlError
from .estimate import effectivity_index

_FILE_KEYS = {"problem", "m", "backend", "theta", "n_list", "tol", "k0",
              "k_max", "out"}
_BACKEND_NAMES = ("spectral", "dense")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one experiment invocation."""

    mode: str
    problem: str
    m: int
    backend: str
    theta: float
    out: str
    n_list: tuple[int, ...] = ()
    tol: float | None = None
    k0: float | None = None
    k_max: float | None = None


def _parse_n_list(text: str) -> tuple[int, ...]:
    items = [part.strip() for part in text.split(",") if part.strip()]
    try:
        values = tuple(int(part) for part in items)
    except ValueError:
        raise ConfigError(f"invalid step-count list {text!r}")
    if any(n < 1 for n in values):
        raise ConfigError("step counts must be positive")
    return values


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat key = value file; '#' starts a comment."""
    values: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FILE_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_config(mode: str, file_values: dict[str, str],
                 flags: dict[str, object]) -> RunConfig:
    """Layer defaults, file values and flags into an effective RunConfig."""

    def pick(key: str, default=None):
        if flags.get(key) is not None:
            return flags[key]
        if key in file_values:
            return file_values[key]
        return default

    problem = pick("problem")
    if problem is None:
        raise ConfigError("no problem given (use --problem)")
    problem = str(problem)
    if problem not in PROBLEM_IDS:
        raise ConfigError(f"unknown problem {problem!r}; choose from {PROBLEM_IDS}")

    backend = str(pick("backend", "spectral"))
    if backend not in _BACKEND_NAMES:
        raise ConfigError(f"unknown backend {backend!r}; choose from {_BACKEND_NAMES}")

    try:
        m = int(pick("m", 199))
        theta = float(pick("theta", DEFAULT_THETA[problem]))
    except ValueError as exc:
        raise ConfigError(str(exc))
    if m < 1:
        raise ConfigError("m must be at least 1")
    if not 0.0 < theta < 0.5:
        raise ConfigError("theta must lie in (0, 1/2)")

    out = str(pick("out", "."))

    n_list: tuple[int, ...] = ()
    tol = k0 = k_max = None
    if mode == "converge":
        raw = pick("n_list")
        if raw is None:
            raise ConfigError("no step counts given")
        n_list = _parse_n_list(raw) if isinstance(raw, str) else tuple(raw)
        if not n_list:
            raise ConfigError("no step counts given")
    elif mode == "adapt":
        for key in ("tol", "k0", "k_max"):
            value = pick(key)
            if value is None:
                raise ConfigError(f"adapt mode requires {key} (use --{key.replace('_', '')})")
        try:
            tol = float(pick("tol"))
            k0 = float(pick("k0"))
            k_max = float(pick("k_max"))
        except ValueError as exc:
            raise ConfigError(str(exc))
    else:
        raise ConfigError(f"unknown mode {mode!r}")

    return RunConfig(mode=mode, problem=problem, m=m, backend=backend,
                     theta=theta, out=out, n_list=n_list, tol=tol, k0=k0,
                     k_max=k_max)


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.5e}"


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}")


def _config_dict(cfg: RunConfig) -> dict:
    data = asdict(cfg)
    data["n_list"] = list(cfg.n_list)
    return data


def cmd_converge(cfg: RunConfig) -> Path:
    """Run the uniform sweep and write converge.csv / converge.json."""
    if not cfg.n_list:
        raise ConfigError("no step counts given")
    _, system = build_problem(cfg.problem, cfg.m)
    backend = backend_for(system, cfg.backend)

    rows = []
    for n in cfg.n_list:
        result = run_uniform(system, n, cfg.theta, backend)
        bound = result.breakdown.bound
        rows.append({
            "N": n,
            "err_inf": result.err_inf,
            "E": result.breakdown.global_e,
            "bound": bound,
            "ei_U": effectivity_index(bound, result.err_inf),
        })

    order_err = [None] + convergence_order([(r["N"], r["err_inf"]) for r in rows])
    order_e = [None] + convergence_order([(r["N"], r["E"]) for r in rows])

    lines = ["N,err_inf,order_err,E,order_E,bound,ei_U"]
    for row, oe, og in zip(rows, order_err, order_e):
        lines.append(",".join([
            str(row["N"]), _fmt(row["err_inf"]), _fmt(oe), _fmt(row["E"]),
            _fmt(og), _fmt(row["bound"]), _fmt(row["ei_U"]),
        ]))

    out_dir = Path(cfg.out)
    csv_path = out_dir / "converge.csv"
    _write_text(csv_path, "\n".join(lines) + "\n")
    summary = {
        "config": _config_dict(cfg),
        "rows": [{k: row[k] for k in ("N", "err_inf", "E", "bound", "ei_U")}
                 for row in rows],
    }
    _write_text(out_dir / "converge.json", json.dumps(summary, indent=2) + "\n")
    return csv_path


def cmd_adapt(cfg: RunConfig) -> Path:
    """Run the adaptive controller and write summary + trajectory CSVs.

    On a controller abort the partial trajectory is still flushed before the
    error propagates.
    """
    _, system = build_problem(cfg.problem, cfg.m)
    backend = backend_for(system, cfg.backend)
    control = AdaptiveConfig(tol=cfg.tol, theta=cfg.theta, k0=cfg.k0,
                             k_max=cfg.k_max, t_final=system.spec.t_final)
    out_dir = Path(cfg.out)

    try:
        result = run_adaptive(system, control, backend)
    except StepControlError as exc:
        _write_trajectory(out_dir, system, exc.trace.accepted,
                          exc.trace.local_estimates, exc.trace.rejected_per_step)
        raise

    trace = result.trace
    _write_trajectory(out_dir, system, trace.accepted, trace.local_estimates,
                      trace.rejected_per_step)

    header = "tol,eta,k_max,err_inf,bound,ei_U,count"
    line = ",".join([
        _fmt(cfg.tol), _fmt(control.eta), _fmt(cfg.k_max), _fmt(result.err_inf),
        _fmt(result.bound), _fmt(result.effectivity), str(trace.count),
    ])
    summary_path = out_dir / "adapt_summary.csv"
    _write_text(summary_path, header + "\n" + line + "\n")

    summary = {
        "config": _config_dict(cfg),
        "eta": control.eta,
        "err_inf": result.err_inf,
        "bound": result.bound,
        "ei_U": result.effectivity,
        "count": trace.count,
        "rejections": len(trace.rejections),
    }
    _write_text(out_dir / "adapt.json", json.dumps(summary, indent=2) + "\n")
    return summary_path


def _write_trajectory(out_dir: Path, system, accepted, estimates,
                      rejected_counts) -> None:
    from .linops import energy_norm  # local import keeps module init light

    lines = ["t_n,k_n,E_theta_n,err_n,rejected_count_at_step"]
    for rec, est, rej in zip(accepted, estimates, rejected_counts):
        err = energy_norm(system.op, system.z_exact(rec.t_right) - rec.z_right)
        lines.append(",".join([
            _fmt(rec.t_right), _fmt(rec.k), _fmt(est), _fmt(err), str(rej),
        ]))
    _write_text(out_dir / "adapt_trajectory.csv", "\n".join(lines) + "\n")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--problem", choices=PROBLEM_IDS)
    parser.add_argument("--m", type=int, help="interior grid size")
    parser.add_argument("--backend", choices=_BACKEND_NAMES)
    parser.add_argument("--theta", type=float,
                        help="bound parameter in (0, 1/2)")
    parser.add_argument("--out", help="output directory")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ifmidpoint",
        description="Uniform convergence sweeps and adaptive runs for the "
                    "integrating-factor midpoint method",
    )
    sub = parser.add_subparsers(dest="mode", required=True)

    converge = sub.add_parser("converge", help="uniform step-count sweep")
    _add_common_flags(converge)
    converge.add_argument("--n-list", dest="n_list",
                          help="comma-separated step counts, e.g. 16,32,64")

    adapt = sub.add_parser("adapt", help="tolerance-driven adaptive run")
    _add_common_flags(adapt)
    adapt.add_argument("--tol", type=float, help="error tolerance")
    adapt.add_argument("--k0", type=float, help="initial step size")
    adapt.add_argument("--kmax", dest="k_max", type=float,
                       help="maximum step size")

    args = parser.parse_args(argv)
    flags = {key: getattr(args, key, None)
             for key in ("problem", "m", "backend", "theta", "out", "n_list",
                         "tol", "k0", "k_max")}

    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = build_config(args.mode, file_values, flags)
        if cfg.mode == "converge":
            cmd_converge(cfg)
        else:
            cmd_adapt(cfg)
    except (ConfigError, StepControlError, OSError, ValueError) as exc:
        print(f"ifmidpoint: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
