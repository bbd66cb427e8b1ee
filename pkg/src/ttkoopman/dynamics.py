"""Benchmark ODE systems, adaptive integration and snapshot sampling.

All systems are autonomous polynomial vector fields, so their exact
coefficients over a monomial dictionary are available for error metrics.
Integration uses the Dormand-Prince 5(4) pair with dense output, so
sampling at small intervals never constrains the adaptive step size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .dictionary import MonomialDictionary, SnapshotSet
from .errors import IntegrationError

DEFAULT_ATOL = 1e-6
DEFAULT_RTOL = 1e-3


@dataclass(frozen=True)
class OdeSystem:
    """Autonomous system ``dx/dt = F(x)``."""

    name: str
    dimension: int
    vector_field: Callable[[np.ndarray], np.ndarray]


def vdp_field(x: np.ndarray) -> np.ndarray:
    """van der Pol oscillator: (x2, (1 - x1^2) x2 - x1)."""
    return np.array([x[1], (1.0 - x[0] ** 2) * x[1] - x[0]])


def lotka_volterra_field(x: np.ndarray) -> np.ndarray:
    """Four-species Lotka-Volterra chain."""
    return np.array([
        -0.12 * x[0] * x[1] + 0.6 * x[0],
        0.12 * x[0] * x[1] - 0.14 * x[1] * x[2] + 0.4 * x[1],
        0.08 * x[1] * x[2] - 0.14 * x[2] * x[3] + 0.2 * x[2],
        0.06 * x[2] * x[3] - 0.42 * x[3],
    ])


def lotka_volterra3_field(x: np.ndarray) -> np.ndarray:
    """Three-species cyclic Lotka-Volterra variant (closed with an x3*x1 term
    so the interior equilibrium exists and orbits stay bounded)."""
    return np.array([
        -0.12 * x[0] * x[1] + 0.6 * x[0],
        0.12 * x[0] * x[1] - 0.14 * x[1] * x[2] + 0.4 * x[1],
        0.08 * x[1] * x[2] - 0.14 * x[2] * x[0] + 0.2 * x[2],
    ])


def lorenz96_field(x: np.ndarray) -> np.ndarray:
    """Lorenz-96: dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + 8, cyclic."""
    return (np.roll(x, -1) - np.roll(x, 2)) * np.roll(x, 1) - x + 8.0


VDP = OdeSystem("vdp", 2, vdp_field)
LOTKA_VOLTERRA = OdeSystem("lotka_volterra", 4, lotka_volterra_field)
LOTKA_VOLTERRA3 = OdeSystem("lotka_volterra3", 3, lotka_volterra3_field)


def lorenz96(dimension: int = 10) -> OdeSystem:
    if dimension < 4:
        raise ValueError("Lorenz-96 needs at least 4 variables")
    return OdeSystem("lorenz96", dimension, lorenz96_field)


def get_system(tag: str, dimension: int | None = None) -> OdeSystem:
    """Look up a benchmark system by name."""
    if tag == "lorenz96":
        return lorenz96(10 if dimension is None else dimension)
    fixed = {s.name: s for s in (VDP, LOTKA_VOLTERRA, LOTKA_VOLTERRA3)}
    if tag not in fixed:
        raise ValueError(f"unknown system tag {tag!r}")
    system = fixed[tag]
    if dimension is not None and dimension != system.dimension:
        raise ValueError(f"{tag} is {system.dimension}-dimensional, got {dimension}")
    return system


class Trajectory:
    """Dense-output solution queryable at arbitrary times in [0, t_end]."""

    def __init__(self, system: OdeSystem, solution, t_end: float):
        self.system = system
        self._solution = solution
        self.t_end = t_end

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_end * (1 + 1e-12)):
            raise ValueError(f"query times must lie in [0, {self.t_end}]")
        return self._solution(np.minimum(t, self.t_end))


def integrate(system: OdeSystem, x0, t_end: float,
              atol: float = DEFAULT_ATOL, rtol: float = DEFAULT_RTOL) -> Trajectory:
    """Adaptive RK45 integration with continuous dense output."""
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if atol <= 0 or rtol <= 0:
        raise ValueError("tolerances must be positive")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.dimension,):
        raise ValueError(
            f"initial state must have shape ({system.dimension},), got {x0.shape}"
        )
    result = solve_ivp(
        lambda _t, y: system.vector_field(y),
        (0.0, t_end),
        x0,
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
    )
    if not result.success:
        last = float(result.t[-1]) if result.t.size else 0.0
        raise IntegrationError(
            f"integration of {system.name} failed at t={last}: {result.message}",
            last_time=last,
        )
    return Trajectory(system, result.sol, t_end)


def sample_pairs(trajectory: Trajectory, ts: float, count: int,
                 burn_in: int = 0) -> SnapshotSet:
    """Sample snapshot pairs at spacing ``ts`` after discarding ``burn_in``
    initial samples; column k of Y is the state one interval after column k
    of X (consecutive overlapping pairs)."""
    if ts <= 0:
        raise ValueError("sampling interval must be positive")
    if count < 1 or burn_in < 0:
        raise ValueError("need count >= 1 and burn_in >= 0")
    t_needed = (burn_in + count) * ts
    if t_needed > trajectory.t_end * (1 + 1e-12):
        raise ValueError(
            f"trajectory ends at t={trajectory.t_end}, but sampling needs t={t_needed}"
        )
    times = (burn_in + np.arange(count + 1)) * ts
    states = trajectory(times)
    return SnapshotSet(X=states[:, :-1], Y=states[:, 1:], ts=ts)


class TrueCoefficients:
    """Exact sparse dictionary coefficients of a polynomial vector field.

    ``maps[k]`` sends a monomial multi-index (per-variable exponents) to the
    coefficient of that monomial in F_k.
    """

    def __init__(self, dimension: int, maps: list[dict[tuple[int, ...], float]]):
        if len(maps) != dimension:
            raise ValueError("need one coefficient map per output dimension")
        self.dimension = dimension
        self.maps = maps

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Reassemble F(x) from the sparse coefficients."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.dimension)
        for k, cmap in enumerate(self.maps):
            for idx, w in cmap.items():
                out[k] += w * np.prod(x ** np.asarray(idx))
        return out

    def dense_matrix(self, dic: MonomialDictionary) -> np.ndarray:
        """Full (d, N_dic) coefficient matrix over the flattened dictionary."""
        W = np.zeros((self.dimension, dic.size))
        for k, cmap in enumerate(self.maps):
            for idx, w in cmap.items():
                W[k, dic.flat_index(idx)] = w
        return W

    def nonzero_mean(self) -> float:
        """Mean absolute value of the nonzero coefficients (NRMSE scale)."""
        values = [abs(w) for cmap in self.maps for w in cmap.values() if w != 0.0]
        return float(np.mean(values))


def _unit(d: int, *positions: int) -> tuple[int, ...]:
    idx = [0] * d
    for p in positions:
        idx[p % d] += 1
    return tuple(idx)


def true_coefficients(system: OdeSystem | str,
                      dic: MonomialDictionary) -> TrueCoefficients:
    """Exact coefficient maps for the named benchmark systems."""
    if isinstance(system, str):
        system = get_system(system, dimension=dic.d)
    if dic.d != system.dimension:
        raise ValueError(
            f"dictionary dimension {dic.d} != system dimension {system.dimension}"
        )
    if dic.degree < 2:
        raise ValueError("benchmark systems contain quadratic terms; need degree >= 2")
    d = system.dimension
    if system.name == "vdp":
        maps = [
            {_unit(d, 1): 1.0},
            {_unit(d, 0): -1.0, _unit(d, 1): 1.0, (2, 1): -1.0},
        ]
    elif system.name == "lotka_volterra":
        maps = [
            {_unit(d, 0, 1): -0.12, _unit(d, 0): 0.6},
            {_unit(d, 0, 1): 0.12, _unit(d, 1, 2): -0.14, _unit(d, 1): 0.4},
            {_unit(d, 1, 2): 0.08, _unit(d, 2, 3): -0.14, _unit(d, 2): 0.2},
            {_unit(d, 2, 3): 0.06, _unit(d, 3): -0.42},
        ]
    elif system.name == "lotka_volterra3":
        maps = [
            {_unit(d, 0, 1): -0.12, _unit(d, 0): 0.6},
            {_unit(d, 0, 1): 0.12, _unit(d, 1, 2): -0.14, _unit(d, 1): 0.4},
            {_unit(d, 1, 2): 0.08, _unit(d, 2, 0): -0.14, _unit(d, 2): 0.2},
        ]
    elif system.name == "lorenz96":
        maps = []
        for i in range(d):
            maps.append({
                _unit(d, i + 1, i - 1): 1.0,
                _unit(d, i - 2, i - 1): -1.0,
                _unit(d, i): -1.0,
                _unit(d): 8.0,
            })
    else:
        raise ValueError(f"no coefficient table for system {system.name!r}")
    return TrueCoefficients(d, maps)
