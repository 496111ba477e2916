"""Command line for the sweep drivers.

Subcommands: sweep-eps, sweep-iters, sweep-area, propagate.  Settings come
from built-in defaults, overridden by a --config key=value file, overridden
by explicit flags.  Exit codes: 0 success, 2 configuration problem,
3 numerical budget exceeded.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .experiments import (
    ConfigError,
    ExperimentConfig,
    default_epsilon_grid,
    drift_violations,
    sweep_area,
    sweep_epsilon,
    sweep_iterations,
)
from .ode import IntegrationError

_CONFIG_KEYS = (
    "area_over_pi",
    "eps",
    "n",
    "oracle_tol",
    "hierarchy_tol",
    "out",
    "threads",
    "area_grid",
)

_SWEEP_DEFAULTS = {
    "sweep-eps": {"eps": None, "n": (0, 1, 2, 3, 4, 5)},
    "sweep-iters": {"eps": (0.5, 1.0, 2.0), "n": (0, 1, 2, 3, 4, 5, 6)},
    "sweep-area": {"eps": (1.0,), "n": (0, 1, 2)},
    "propagate": {"eps": (1.0,), "n": (3,)},
}


def _parse_eps(text: str) -> tuple[float, ...]:
    """Comma list, or lo:hi:count for a log-spaced grid."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad eps range {text!r}, expected lo:hi:count")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if not (lo > 0.0 and hi > lo and count >= 2):
            raise ConfigError("eps range needs 0 < lo < hi and count >= 2")
        return tuple(float(e) for e in np.geomspace(lo, hi, count))
    return tuple(float(x) for x in text.split(","))


def _parse_n(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def _parse_area_grid(text: str) -> tuple[float, ...]:
    """Comma list, or lo:hi:count for a uniform grid."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad area grid {text!r}, expected lo:hi:count")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if not (lo > 0.0 and hi > lo and count >= 2):
            raise ConfigError("area grid needs 0 < lo < hi and count >= 2")
        return tuple(float(a) for a in np.linspace(lo, hi, count))
    return tuple(float(x) for x in text.split(","))


def _read_config_file(path: str) -> dict:
    settings = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, value = (s.strip() for s in line.split("=", 1))
                key = key.replace("-", "_")
                if key not in _CONFIG_KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                settings[key] = value
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return settings


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kampulse",
        description="KAM propagator sweeps for a pulse-driven two-level system",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sweep-eps", "error and transition probability versus eps"),
        ("sweep-iters", "error versus iteration count at fixed eps values"),
        ("sweep-area", "error and probabilities versus pulse area"),
        ("propagate", "single point: print the propagator and its error"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--area-over-pi", type=float, default=None)
        cmd.add_argument(
            "--eps",
            type=str,
            default=None,
            help="comma list, or lo:hi:count for a log grid",
        )
        cmd.add_argument("--n", type=str, default=None, help="comma list of depths")
        cmd.add_argument("--oracle-tol", type=float, default=None)
        cmd.add_argument("--hierarchy-tol", type=float, default=None)
        cmd.add_argument("--out", type=str, default=None)
        cmd.add_argument("--config", type=str, default=None, help="key=value file")
        cmd.add_argument("--threads", type=int, default=None)
        if name == "sweep-area":
            cmd.add_argument(
                "--area-grid",
                type=str,
                default=None,
                help="comma list of A/pi, or lo:hi:count (uniform)",
            )
    return parser


def _merge_settings(args: argparse.Namespace) -> ExperimentConfig:
    from_file = _read_config_file(args.config) if args.config else {}
    defaults = _SWEEP_DEFAULTS[args.command]

    def pick(flag_value, key: str, parse):
        if flag_value is not None:
            return parse(flag_value) if isinstance(flag_value, str) else flag_value
        if key in from_file:
            return parse(from_file[key])
        return None

    eps = pick(args.eps, "eps", _parse_eps)
    if eps is None:
        eps = defaults["eps"] if defaults["eps"] is not None else default_epsilon_grid()
    n_values = pick(args.n, "n", _parse_n)
    if n_values is None:
        n_values = defaults["n"]
    area_grid = None
    if args.command == "sweep-area":
        area_grid = pick(getattr(args, "area_grid", None), "area_grid", _parse_area_grid)
    kwargs = {
        "epsilon_values": eps,
        "n_values": n_values,
        "area_over_pi_values": area_grid,
    }
    area = pick(args.area_over_pi, "area_over_pi", float)
    if area is not None:
        kwargs["area_over_pi"] = area
    oracle_tol = pick(args.oracle_tol, "oracle_tol", float)
    if oracle_tol is not None:
        kwargs["oracle_rel_tol"] = oracle_tol
    hierarchy_tol = pick(args.hierarchy_tol, "hierarchy_tol", float)
    if hierarchy_tol is not None:
        kwargs["hierarchy_tol"] = hierarchy_tol
    out = pick(args.out, "out", str)
    if out is not None:
        kwargs["output_path"] = out
    threads = pick(args.threads, "threads", int)
    if threads is not None:
        kwargs["threads"] = threads
    return ExperimentConfig(**kwargs)


def _run_propagate(config: ExperimentConfig) -> int:
    from .pulses import sine_squared
    from .su2 import StateVector2
    from .twolevel import KamConfig, build_hierarchy, propagator_lab
    from .experiments import _oracle, _to_state, delta_n

    epsilon = config.epsilon_values[0]
    n = config.n_values[0]
    pulse = sine_squared(math.pi * config.area_over_pi)
    hier = build_hierarchy(
        KamConfig(epsilon, n, pulse, hierarchy_tol=config.hierarchy_tol)
    )
    u = propagator_lab(hier, pulse.t_f, pulse.t_i)
    prop = _oracle(epsilon, pulse, config.oracle_rel_tol)
    ref = _to_state(prop.matrix)
    psi = u.apply(StateVector2.lower())
    print(f"epsilon={epsilon!r} area_over_pi={config.area_over_pi!r} n={n}")
    print("U =")
    for row in u.matrix:
        print("  [" + "  ".join(f"{z.real:+.12f}{z.imag:+.12f}j" for z in row) + "]")
    print(f"delta_n = {delta_n(ref, psi)!r}")
    print(f"p_numeric = {abs(ref.plus) ** 2!r}")
    print(f"p_kam = {abs(psi.plus) ** 2!r}")
    print(f"oracle_drift = {prop.drift!r}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _merge_settings(args)
        if args.command == "propagate":
            return _run_propagate(config)
        sweep = {
            "sweep-eps": sweep_epsilon,
            "sweep-iters": sweep_iterations,
            "sweep-area": sweep_area,
        }[args.command]
        records = sweep(config)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    bad = drift_violations(records, config)
    if bad:
        for r in bad:
            print(
                f"drift violation: eps={r.epsilon!r} area_over_pi={r.area_over_pi!r} "
                f"n={r.n} oracle_drift={r.oracle_drift!r}",
                file=sys.stderr,
            )
        return 3
    if config.output_path is None:
        from .experiments import format_csv

        sys.stdout.write(format_csv(records, config))
    return 0


if __name__ == "__main__":
    sys.exit(main())
