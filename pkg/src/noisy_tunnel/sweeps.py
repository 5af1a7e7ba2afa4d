"""Parameter sweep machinery behind the CLI data commands.

Grid points are pure function evaluations dispatched to a bounded thread
pool; results are assembled in grid order, so output is identical for any
worker count. The Kubo-number axis follows the fixed-amplitude convention:
sweeping K at fixed delta1 sets nu = delta1 / K point by point.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import nonmarkov, states
from .dynamics import ModelParams, evolve

SWEEPABLE_AXES = ("t", "K", "kappa", "epsilon", "nu", "delta1")


@dataclass(frozen=True)
class Axis:
    """One swept axis: name, range, point count, linear or log spacing."""

    name: str
    lo: float
    hi: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in SWEEPABLE_AXES:
            raise ValueError(f"axis {self.name!r} not sweepable; "
                             f"choose from {SWEEPABLE_AXES}")
        if self.count < 2:
            raise ValueError(f"axis {self.name!r} needs at least 2 points")
        if not self.lo < self.hi:
            raise ValueError(f"axis {self.name!r} needs lo < hi")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"axis {self.name!r}: scale must be linear or log")
        if self.scale == "log" and self.lo <= 0.0:
            raise ValueError(f"axis {self.name!r}: log scale needs lo > 0")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class SweepSpec:
    """Resolved settings for one sweep run."""

    axes: tuple[Axis, ...]
    fixed: dict[str, float]
    epsilons: tuple[float, ...]
    initial_states: tuple[str, ...]
    seed: int = 1234
    workers: int = 1
    n_realizations: int = 10_000
    oracle_dt: float = 1e-3

    def __post_init__(self):
        for tag in self.initial_states:
            if tag not in ("rho1", "rho2", "rho3"):
                raise ValueError(f"unknown initial state {tag!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if not self.oracle_dt > 0.0:
            raise ValueError("oracle dt must be positive")

    def axis(self, name: str) -> Axis:
        for ax in self.axes:
            if ax.name == name:
                return ax
        raise KeyError(name)


def nu_from_kubo(delta1: float, kubo: float) -> float:
    """Switching rate for a Kubo-number point at fixed noise amplitude."""
    if not kubo > 0.0:
        raise ValueError("Kubo number must be positive")
    return delta1 / kubo


def _pool_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ROW GENERATORS =======================================================

EVOLVE_HEADER = ["epsilon", "initial", "t", "Px", "Py", "Pz", "C_l1", "C_relent"]


def evolve_rows(spec: SweepSpec, method: str = "expm"):
    """Time series rows for each (epsilon, initial state) combination."""
    t_axis = spec.axis("t")
    times = np.concatenate([[0.0], t_axis.values()]) \
        if t_axis.lo > 0.0 else t_axis.values()
    tasks = [(eps, tag) for eps in spec.epsilons for tag in spec.initial_states]

    def run(task):
        eps, tag = task
        params = ModelParams(epsilon=eps, kappa=spec.fixed["kappa"],
                             delta0=spec.fixed["delta0"],
                             delta1=spec.fixed["delta1"], nu=spec.fixed["nu"])
        traj = evolve(params, states.canonical_bloch(tag), times, method=method,
                      label=tag)
        cl1 = states.l1_coherence_bloch(traj.bloch)
        crel = states.relative_entropy_coherence_bloch(traj.bloch)
        return [(eps, tag, float(t), float(b[0]), float(b[1]), float(b[2]),
                 float(c1), float(cr))
                for t, b, c1, cr in zip(times, traj.bloch, cl1, crel)]

    for chunk in _pool_map(run, tasks, spec.workers):
        yield from chunk


COHERENCE_HEADER = ["epsilon", "initial", "K", "t", "C_l1"]


def coherence_rows(spec: SweepSpec, method: str = "expm"):
    """l1-coherence grid over (t, K) per epsilon and initial state."""
    t_axis = spec.axis("t")
    k_axis = spec.axis("K")
    times = t_axis.values()
    if times[0] != 0.0:
        times = np.concatenate([[0.0], times])
    kubos = k_axis.values()
    delta1 = spec.fixed["delta1"]
    tasks = [(eps, tag, k) for eps in spec.epsilons
             for tag in spec.initial_states for k in kubos]

    def run(task):
        eps, tag, kubo = task
        params = ModelParams(epsilon=eps, kappa=spec.fixed["kappa"],
                             delta0=spec.fixed["delta0"], delta1=delta1,
                             nu=nu_from_kubo(delta1, kubo))
        traj = evolve(params, states.canonical_bloch(tag), times, method=method,
                      label=tag)
        cl1 = states.l1_coherence_bloch(traj.bloch)
        return [(eps, tag, float(kubo), float(t), float(c))
                for t, c in zip(times, cl1)]

    for chunk in _pool_map(run, tasks, spec.workers):
        yield from chunk


NONMARKOV_HEADER = ["epsilon", "K", "kappa", "N", "horizon", "dt",
                    "refine_delta", "horizon_warning"]


def nonmarkov_rows(spec: SweepSpec, horizon: float | None = None,
                   dt: float = 1e-3):
    """BLP measure grid over (K, kappa) per epsilon, pair (rho1, rho3).

    Each point reports convergence metadata: the horizon used (auto-chosen
    from the difference-vector envelope unless given), the grid step, and
    the change of N when the step is doubled (refinement delta).
    """
    k_axis = spec.axis("K")
    kap_axis = spec.axis("kappa")
    delta1 = spec.fixed["delta1"]
    rho_a = states.canonical_state("rho1")
    rho_b = states.canonical_state("rho3")
    tasks = [(eps, k, kap) for eps in spec.epsilons
             for k in k_axis.values() for kap in kap_axis.values()]

    def run(task):
        eps, kubo, kap = task
        params = ModelParams(epsilon=eps, kappa=kap,
                             delta0=spec.fixed["delta0"], delta1=delta1,
                             nu=nu_from_kubo(delta1, kubo))
        used_horizon = horizon if horizon is not None else \
            nonmarkov.default_horizon(params, rho_a, rho_b)
        fine = nonmarkov.blp_measure(params, rho_a, rho_b, used_horizon, dt)
        coarse = nonmarkov.blp_measure(params, rho_a, rho_b, used_horizon, 2 * dt)
        return (eps, float(kubo), float(kap), fine.n_value, fine.horizon,
                fine.grid_step, abs(fine.n_value - coarse.n_value),
                fine.horizon_warning)

    return _pool_map(run, tasks, spec.workers)
