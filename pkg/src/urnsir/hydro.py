"""Deterministic density evolution on the unit interval.

Solves the coupled fields (rho1, rho0) = (infected, susceptible density)

    d rho1/dt = -psi(u) rho1 + rho0 * Integral lambda(u, v) rho1(t, v) dv
    d rho0/dt = -rho0 * Integral lambda(u, v) rho1(t, v) dv

with rho1(0) = phi, rho0(0) = 1 - phi, by the classical fixed-step
fourth-order Runge-Kutta scheme on the node grid m/M.  The kernel integral is
the right-endpoint node sum (1/M) sum_q lambda(u, q/M) rho1(t, q/M), chosen
to mirror the empirical sums (1/N) sum_j exactly, so law-of-large-numbers
comparisons share the discretization.

No clipping is applied anywhere: bound violations beyond tolerance raise
:class:`DensityBoundsError` instead of being silently projected.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .fields import TestFunction, sites
from .model import ModelSpec

__all__ = [
    "GridSpec",
    "DensityField",
    "DensityBoundsError",
    "solve_density",
    "density_residual",
    "write_density_csv",
]

BOUNDS_TOL = 1e-8


class DensityBoundsError(ValueError):
    """A solved density violated its a-priori bounds beyond tolerance."""


@dataclass(frozen=True)
class GridSpec:
    """Space/time discretization: M nodes at m/M, fixed step dt, horizon T."""

    M: int
    dt: float
    T: float

    def __post_init__(self) -> None:
        if not isinstance(self.M, (int, np.integer)) or self.M < 1:
            raise ValueError("M must be an integer >= 1")
        object.__setattr__(self, "M", int(self.M))
        dt = float(self.dt)
        t = float(self.T)
        if not np.isfinite(dt) or dt <= 0.0:
            raise ValueError("dt must be positive")
        if not np.isfinite(t) or t < 0.0:
            raise ValueError("T must be finite and >= 0")
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "T", t)

    def n_steps(self) -> int:
        if self.T == 0.0:
            return 0
        return max(1, int(round(self.T / self.dt)))

    def step(self) -> float:
        """Actual step T / n_steps (equals dt when dt divides T)."""
        n = self.n_steps()
        return self.T / n if n else self.dt


@dataclass(frozen=True)
class DensityField:
    """Densities on the node grid for each stored time.

    ``rho1`` and ``rho0`` have shape (len(times), M).
    """

    times: np.ndarray
    rho1: np.ndarray
    rho0: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        r1 = np.asarray(self.rho1, dtype=float)
        r0 = np.asarray(self.rho0, dtype=float)
        if times.ndim != 1 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if r1.shape != r0.shape or r1.shape[0] != times.size:
            raise ValueError("density arrays must be (n_times, M)")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rho1", r1)
        object.__setattr__(self, "rho0", r0)

    @property
    def m(self) -> int:
        return self.rho1.shape[1]

    def nodes(self) -> np.ndarray:
        return sites(self.m)

    def index_of(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the stored grid")
        return idx

    def node_integral(self, t: float, f: TestFunction) -> float:
        """(1/M) sum_m rho1(t, m/M) f(m/M), the node-sum integral of rho1*f."""
        fv = f.at_sites(self.m)
        return float(self.rho1[self.index_of(t)] @ fv) / self.m

    def total_infected(self, t: float) -> float:
        return float(self.rho1[self.index_of(t)].mean())

    def total_susceptible(self, t: float) -> float:
        return float(self.rho0[self.index_of(t)].mean())


def _rhs(spec: ModelSpec, rho1: np.ndarray, rho0: np.ndarray):
    force = spec.lam.node_average(rho1)
    return -spec.psi.at_sites(rho1.size) * rho1 + rho0 * force, -rho0 * force


def solve_density(spec: ModelSpec, grid: GridSpec) -> DensityField:
    """Integrate the density system; returns every time step.

    Raises :class:`DensityBoundsError` if any stored state leaves
    [0 - tol, ...] or rho1 + rho0 exceeds 1 + tol.
    """
    m = grid.M
    psi_v = spec.psi.at_sites(m)
    r1 = spec.phi.at_sites(m).astype(float)
    r0 = 1.0 - r1
    n = grid.n_steps()
    h = grid.step()
    times = np.empty(n + 1)
    rho1 = np.empty((n + 1, m))
    rho0 = np.empty((n + 1, m))
    times[0], rho1[0], rho0[0] = 0.0, r1, r0

    def f(a, b):
        force = spec.lam.node_average(a)
        return -psi_v * a + b * force, -b * force

    for k in range(n):
        k1a, k1b = f(r1, r0)
        k2a, k2b = f(r1 + 0.5 * h * k1a, r0 + 0.5 * h * k1b)
        k3a, k3b = f(r1 + 0.5 * h * k2a, r0 + 0.5 * h * k2b)
        k4a, k4b = f(r1 + h * k3a, r0 + h * k3b)
        r1 = r1 + (h / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
        r0 = r0 + (h / 6.0) * (k1b + 2 * k2b + 2 * k3b + k4b)
        times[k + 1] = (k + 1) * h
        rho1[k + 1] = r1
        rho0[k + 1] = r0

    low = min(rho1.min(), rho0.min())
    high = (rho1 + rho0).max()
    if low < -BOUNDS_TOL or high > 1.0 + BOUNDS_TOL:
        raise DensityBoundsError(
            f"density bounds violated: min={low:.3e}, max sum={high:.6f}"
        )
    if np.any(np.diff(rho0, axis=0) > BOUNDS_TOL):
        raise DensityBoundsError("susceptible density must be nonincreasing")
    return DensityField(times=times, rho1=rho1, rho0=rho0)


def density_residual(field: DensityField, spec: ModelSpec) -> float:
    """Max abs defect of the stored field against the density system.

    Time derivatives are centered finite differences, so the residual of an
    accurate solution scales like O(dt^2).  Needs at least three stored
    times.
    """
    if field.times.size < 3:
        raise ValueError("residual needs at least three stored times")
    worst = 0.0
    for k in range(1, field.times.size - 1):
        h2 = field.times[k + 1] - field.times[k - 1]
        d1 = (field.rho1[k + 1] - field.rho1[k - 1]) / h2
        d0 = (field.rho0[k + 1] - field.rho0[k - 1]) / h2
        f1, f0 = _rhs(spec, field.rho1[k], field.rho0[k])
        worst = max(
            worst,
            float(np.max(np.abs(d1 - f1))),
            float(np.max(np.abs(d0 - f0))),
        )
    return worst


def write_density_csv(field: DensityField, path) -> None:
    """Rows time, node_u, rho1, rho0 for every stored time and node."""
    nodes = field.nodes()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "node_u", "rho1", "rho0"])
        for k, t in enumerate(field.times):
            for m, u in enumerate(nodes):
                writer.writerow(
                    [f"{t:.10g}", f"{u:.10g}",
                     f"{field.rho1[k, m]:.12g}", f"{field.rho0[k, m]:.12g}"]
                )
