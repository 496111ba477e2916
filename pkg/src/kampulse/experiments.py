"""Sweep drivers, error metrics, and CSV emission for the two-level runs.

Each sweep point (eps, A/pi) integrates the Schrodinger oracle once,
builds one hierarchy at the deepest requested n, and reads every smaller
n from the same build.  Output rows are gathered and written
single-threaded in a fixed order so identical configs produce identical
files (the wall_time_ms column is diagnostic and excluded from that
guarantee).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from .ode import propagate_unitary
from .pulses import sine_squared
from .su2 import StateVector2
from .twolevel import KamConfig, build_hierarchy, propagator_lab

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SweepRecord",
    "CSV_COLUMNS",
    "default_epsilon_grid",
    "default_area_grid",
    "reference_state",
    "kam_state",
    "delta_n",
    "sweep_epsilon",
    "sweep_iterations",
    "sweep_area",
    "format_csv",
    "write_csv",
    "drift_violations",
]

CSV_COLUMNS = (
    "epsilon",
    "area_over_pi",
    "n",
    "delta_n",
    "p_numeric",
    "p_kam",
    "oracle_drift",
    "wall_time_ms",
)

_MAX_N = 12


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def default_epsilon_grid() -> tuple[float, ...]:
    """0 plus 60 log-spaced points covering [0.05, 5]."""
    return (0.0, *(float(e) for e in np.geomspace(0.05, 5.0, 60)))


def default_area_grid() -> tuple[float, ...]:
    """40 uniform A/pi points covering [0.05, 2]."""
    return tuple(float(a) for a in np.linspace(0.05, 2.0, 40))


@dataclass(frozen=True)
class ExperimentConfig:
    """Deterministic sweep specification (no seeds anywhere).

    area_over_pi is the pulse area in units of pi used by the eps and
    iteration sweeps; the area sweep walks area_over_pi_values instead
    (None selects the default grid).
    """

    area_over_pi: float = 0.5
    epsilon_values: tuple[float, ...] = field(default_factory=default_epsilon_grid)
    n_values: tuple[int, ...] = (0, 1, 2, 3, 4, 5)
    oracle_rel_tol: float = 1e-10
    hierarchy_tol: float = 1e-9
    output_path: str | None = None
    area_over_pi_values: tuple[float, ...] | None = None
    threads: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "epsilon_values", tuple(float(e) for e in self.epsilon_values)
        )
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if self.area_over_pi_values is not None:
            object.__setattr__(
                self,
                "area_over_pi_values",
                tuple(float(a) for a in self.area_over_pi_values),
            )
        if not self.epsilon_values:
            raise ConfigError("epsilon_values must be nonempty")
        if not self.n_values:
            raise ConfigError("n_values must be nonempty")
        if any(not math.isfinite(e) or e < 0.0 for e in self.epsilon_values):
            raise ConfigError("epsilon values must be finite and >= 0")
        if any(n < 0 or n > _MAX_N for n in self.n_values):
            raise ConfigError(f"n values must lie in [0, {_MAX_N}]")
        for name in ("oracle_rel_tol", "hierarchy_tol"):
            tol = getattr(self, name)
            if not (0.0 < tol <= 1e-2):
                raise ConfigError(f"{name} must lie in (0, 1e-2]")
        if not (math.isfinite(self.area_over_pi) and self.area_over_pi > 0.0):
            raise ConfigError("area_over_pi must be positive")
        if self.area_over_pi_values is not None and (
            not self.area_over_pi_values
            or any(
                not math.isfinite(a) or a <= 0.0 for a in self.area_over_pi_values
            )
        ):
            raise ConfigError("area_over_pi_values must be positive and nonempty")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


@dataclass(frozen=True)
class SweepRecord:
    """One CSV row: a single (eps, area, n) evaluation against the oracle."""

    epsilon: float
    area_over_pi: float
    n: int
    delta_n: float
    p_numeric: float
    p_kam: float
    oracle_drift: float
    wall_time_ms: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta_n <= 2.0 + 1e-9:
            raise ValueError(f"delta_n out of range: {self.delta_n!r}")
        for p in (self.p_numeric, self.p_kam):
            if not 0.0 <= p <= 1.0 + 1e-9:
                raise ValueError(f"probability out of range: {p!r}")


def _oracle(epsilon: float, pulse, rel_tol: float):
    omega = pulse.omega

    def hamiltonian(t: float) -> np.ndarray:
        w = omega(t)
        return np.array([[epsilon, w], [w, -epsilon]], dtype=complex)

    return propagate_unitary(hamiltonian, pulse.t_i, pulse.t_f, rel_tol=rel_tol)


def _to_state(matrix: np.ndarray) -> StateVector2:
    vec = matrix @ np.array([0.0, 1.0], dtype=complex)
    return StateVector2(complex(vec[0]), complex(vec[1]))


def reference_state(epsilon: float, pulse, oracle_tol: float = 1e-10) -> StateVector2:
    """psi(t_f) from direct integration of i dU/dt = (Omega sigma_1 + eps sigma_3) U,
    started in the lower level."""
    return _to_state(_oracle(epsilon, pulse, oracle_tol).matrix)


def kam_state(epsilon: float, pulse, n: int, tol: float = 1e-9) -> StateVector2:
    """psi^(n)(t_f) from the n-iteration lab-frame propagator, lower start."""
    hier = build_hierarchy(KamConfig(epsilon, n, pulse, hierarchy_tol=tol))
    u = propagator_lab(hier, pulse.t_f, pulse.t_i)
    return u.apply(StateVector2.lower())


def delta_n(psi_ref: StateVector2, psi_kam: StateVector2) -> float:
    """Phase-sensitive amplitude distance sqrt(sum_eta |a_eta - b_eta|^2)."""
    return math.hypot(
        abs(psi_ref.plus - psi_kam.plus), abs(psi_ref.minus - psi_kam.minus)
    )


def _evaluate_point(
    epsilon: float,
    area_over_pi: float,
    n_values: Sequence[int],
    oracle_rel_tol: float,
    hierarchy_tol: float,
) -> list[SweepRecord]:
    start = time.perf_counter()
    pulse = sine_squared(math.pi * area_over_pi)
    prop = _oracle(epsilon, pulse, oracle_rel_tol)
    ref = _to_state(prop.matrix)
    p_numeric = abs(ref.plus) ** 2
    hier = build_hierarchy(
        KamConfig(epsilon, max(n_values), pulse, hierarchy_tol=hierarchy_tol)
    )
    lower = StateVector2.lower()
    results = []
    for n in sorted(set(n_values)):
        psi = propagator_lab(hier, pulse.t_f, pulse.t_i, n=n).apply(lower)
        results.append((n, delta_n(ref, psi), abs(psi.plus) ** 2))
    wall_ms = (time.perf_counter() - start) * 1e3
    return [
        SweepRecord(
            epsilon=epsilon,
            area_over_pi=area_over_pi,
            n=n,
            delta_n=d,
            p_numeric=p_numeric,
            p_kam=p_kam,
            oracle_drift=prop.drift,
            wall_time_ms=wall_ms,
        )
        for n, d, p_kam in results
    ]


def _run_points(
    points: Sequence[tuple[float, float]], config: ExperimentConfig
) -> list[SweepRecord]:
    def work(point: tuple[float, float]) -> list[SweepRecord]:
        eps, area = point
        return _evaluate_point(
            eps, area, config.n_values, config.oracle_rel_tol, config.hierarchy_tol
        )

    if config.threads == 1:
        batches = [work(pt) for pt in points]
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            batches = list(pool.map(work, points))
    return [rec for batch in batches for rec in batch]


def _finish(
    records: list[SweepRecord], config: ExperimentConfig, sort_key
) -> list[SweepRecord]:
    records.sort(key=sort_key)
    if config.output_path is not None:
        write_csv(config.output_path, records, config)
    return records


def sweep_epsilon(config: ExperimentConfig) -> list[SweepRecord]:
    """Fixed area, eps over the configured grid; rows sorted by (n, eps)."""
    points = [(e, config.area_over_pi) for e in sorted(set(config.epsilon_values))]
    records = _run_points(points, config)
    return _finish(records, config, lambda r: (r.n, r.epsilon))


def sweep_iterations(config: ExperimentConfig) -> list[SweepRecord]:
    """Error versus iteration depth at a few eps; rows sorted by (n, eps)."""
    points = [(e, config.area_over_pi) for e in sorted(set(config.epsilon_values))]
    records = _run_points(points, config)
    return _finish(records, config, lambda r: (r.n, r.epsilon))


def sweep_area(config: ExperimentConfig) -> list[SweepRecord]:
    """Fixed eps values, area over a grid; rows sorted by (n, area, eps)."""
    areas = (
        config.area_over_pi_values
        if config.area_over_pi_values is not None
        else default_area_grid()
    )
    eps_values = sorted(set(config.epsilon_values))
    points = [(e, a) for a in sorted(set(areas)) for e in eps_values]
    records = _run_points(points, config)
    return _finish(records, config, lambda r: (r.n, r.area_over_pi, r.epsilon))


def _config_line(config: ExperimentConfig) -> str:
    parts = []
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            parts.append(f"{f.name}=[{','.join(repr(v) for v in value)}]")
        else:
            parts.append(f"{f.name}={value!r}")
    return " ".join(parts)


def format_csv(records: Iterable[SweepRecord], config: ExperimentConfig) -> str:
    """Render records as CSV text with repr round-trip float formatting."""
    lines = [
        "# columns: " + ",".join(CSV_COLUMNS),
        "# config: " + _config_line(config),
        ",".join(CSV_COLUMNS),
    ]
    for r in records:
        lines.append(
            ",".join(
                (
                    repr(r.epsilon),
                    repr(r.area_over_pi),
                    str(r.n),
                    repr(r.delta_n),
                    repr(r.p_numeric),
                    repr(r.p_kam),
                    repr(r.oracle_drift),
                    repr(r.wall_time_ms),
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(path: str, records: Iterable[SweepRecord], config: ExperimentConfig) -> None:
    """Write records to path; OSError is re-raised annotated with the path."""
    text = format_csv(records, config)
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path!r}: {exc}") from exc


def drift_violations(
    records: Iterable[SweepRecord], config: ExperimentConfig
) -> list[SweepRecord]:
    """Rows whose oracle drift exceeds 10x the configured oracle tolerance."""
    limit = 10.0 * config.oracle_rel_tol
    return [r for r in records if r.oracle_drift > limit]
