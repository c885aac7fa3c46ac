"""The charged-drop energy, its threshold parameters and relaxed envelope.

E(Omega) = P(Omega) + lambda * I1(Omega) + integral of g over Omega.

The relaxed (lower semicontinuous) envelope keeps E below the shape threshold
lambda_Omega = (pi / I1)^2 and grows affinely in sqrt(lambda) above it, at
slope 2*pi: excess charge escapes to infinity on vanishing pieces and pays
exactly 2*pi per unit of sqrt(lambda).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .equilibrium import EquilibriumSolution
from .errors import ConsistencyError, InvalidRegionError


# ----------------------------------------------------------------------------
# confining potentials (class G: nonnegative, locally Lipschitz, coercive)
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """Base class; subclasses implement __call__ on (n, 2) arrays."""

    def __call__(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def coercive(self) -> bool:
        return True

    def argmin(self):
        return None

    def lipschitz_bound(self, radius: float) -> float:
        """Lipschitz constant on the disk of given radius about the origin."""
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(Potential):
    def __call__(self, points):
        return np.zeros(len(np.atleast_2d(points)))

    @property
    def coercive(self) -> bool:
        return False

    def lipschitz_bound(self, radius):
        return 0.0

    def spec(self):
        return "zero"


@dataclass(frozen=True)
class Quadratic(Potential):
    """g(x) = a |x - x0|^2."""

    a: float = 1.0
    x0: tuple = (0.0, 0.0)

    def __call__(self, points):
        p = np.atleast_2d(points)
        return self.a * np.sum((p - np.asarray(self.x0)) ** 2, axis=1)

    def argmin(self):
        return np.asarray(self.x0, dtype=float)

    def lipschitz_bound(self, radius):
        return 2.0 * self.a * (radius + float(np.linalg.norm(self.x0)))

    def spec(self):
        return f"quadratic:a={self.a},x0={self.x0[0]},{self.x0[1]}"


@dataclass(frozen=True)
class Quartic(Potential):
    """g(x) = a |x - x0|^4."""

    a: float = 1.0
    x0: tuple = (0.0, 0.0)

    def __call__(self, points):
        p = np.atleast_2d(points)
        return self.a * np.sum((p - np.asarray(self.x0)) ** 2, axis=1) ** 2

    def argmin(self):
        return np.asarray(self.x0, dtype=float)

    def lipschitz_bound(self, radius):
        r = radius + float(np.linalg.norm(self.x0))
        return 4.0 * self.a * r**3

    def spec(self):
        return f"quartic:a={self.a},x0={self.x0[0]},{self.x0[1]}"


@dataclass(frozen=True)
class ShiftedDoubleWell(Potential):
    """g(x) = a * min(|x - x1|^2, |x - x2|^2)."""

    a: float = 1.0
    x1: tuple = (-1.0, 0.0)
    x2: tuple = (1.0, 0.0)

    def __call__(self, points):
        p = np.atleast_2d(points)
        d1 = np.sum((p - np.asarray(self.x1)) ** 2, axis=1)
        d2 = np.sum((p - np.asarray(self.x2)) ** 2, axis=1)
        return self.a * np.minimum(d1, d2)

    def argmin(self):
        return np.asarray(self.x1, dtype=float)

    def lipschitz_bound(self, radius):
        r = radius + max(float(np.linalg.norm(self.x1)), float(np.linalg.norm(self.x2)))
        return 2.0 * self.a * r

    def spec(self):
        return (f"doublewell:a={self.a},x1={self.x1[0]},{self.x1[1]},"
                f"x2={self.x2[0]},{self.x2[1]}")


@dataclass(frozen=True)
class TabulatedGrid(Potential):
    """Bilinear interpolation of sampled values; user asserts coercivity."""

    x: tuple
    y: tuple
    values: tuple  # row-major len(x)*len(y)

    def __call__(self, points):
        p = np.atleast_2d(points)
        xs, ys = np.asarray(self.x), np.asarray(self.y)
        v = np.asarray(self.values, dtype=float).reshape(len(xs), len(ys))
        ix = np.clip(np.searchsorted(xs, p[:, 0]) - 1, 0, len(xs) - 2)
        iy = np.clip(np.searchsorted(ys, p[:, 1]) - 1, 0, len(ys) - 2)
        tx = np.clip((p[:, 0] - xs[ix]) / (xs[ix + 1] - xs[ix]), 0, 1)
        ty = np.clip((p[:, 1] - ys[iy]) / (ys[iy + 1] - ys[iy]), 0, 1)
        return ((1 - tx) * (1 - ty) * v[ix, iy] + tx * (1 - ty) * v[ix + 1, iy]
                + (1 - tx) * ty * v[ix, iy + 1] + tx * ty * v[ix + 1, iy + 1])

    def lipschitz_bound(self, radius):
        v = np.asarray(self.values, dtype=float).reshape(len(self.x), len(self.y))
        dx = np.min(np.diff(self.x))
        dy = np.min(np.diff(self.y))
        return float(np.abs(np.diff(v, axis=0)).max() / dx
                     + np.abs(np.diff(v, axis=1)).max() / dy)

    def spec(self):
        return "tabulated"


def parse_potential(text: str) -> Potential:
    """Parse CLI potential specs like ``quadratic:a=1,x0=1,1``."""
    if ":" not in text:
        name, args = text.strip().lower(), ""
    else:
        name, args = text.split(":", 1)
        name = name.strip().lower()
    if name == "zero":
        return Zero()
    fields = {}
    if args:
        parts = args.split(",")
        k = 0
        while k < len(parts):
            key, _, val = parts[k].partition("=")
            key = key.strip()
            if key in ("x0", "x1", "x2"):
                fields[key] = (float(val), float(parts[k + 1]))
                k += 2
            else:
                fields[key] = float(val)
                k += 1
    if name == "quadratic":
        return Quadratic(a=fields.get("a", 1.0), x0=fields.get("x0", (0.0, 0.0)))
    if name == "quartic":
        return Quartic(a=fields.get("a", 1.0), x0=fields.get("x0", (0.0, 0.0)))
    if name == "doublewell":
        return ShiftedDoubleWell(a=fields.get("a", 1.0),
                                 x1=fields.get("x1", (-1.0, 0.0)),
                                 x2=fields.get("x2", (1.0, 0.0)))
    raise ValueError(f"unknown potential spec {text!r}")


# ----------------------------------------------------------------------------
# energy evaluation
# ----------------------------------------------------------------------------


@dataclass
class EnergyReport:
    perimeter: float
    I1: float
    g_integral: float
    lam: float
    energy: float            # P + lam*I1 + int g
    lambda_omega: float      # (pi / I1)^2
    lambda_c: float          # 4 m / pi
    energy_relaxed: float
    mass: float
    bound_gap: float         # P + lam*I1 - 2 pi sqrt(lam)

    def to_json(self) -> dict:
        return {
            "P": self.perimeter,
            "I1": self.I1,
            "g_integral": self.g_integral,
            "lambda": self.lam,
            "E": self.energy,
            "lambda_Omega": self.lambda_omega,
            "lambda_c": self.lambda_c,
            "E_relaxed": self.energy_relaxed,
            "mass": self.mass,
            "bound_gap": self.bound_gap,
        }


def relaxed_energy(P: float, I1: float, g_int: float, lam: float) -> float:
    """Explicit lower semicontinuous envelope at given building blocks."""
    lam_om = (math.pi / I1) ** 2
    if lam <= lam_om:
        return P + lam * I1 + g_int
    return P + lam_om * I1 + g_int + 2.0 * math.pi * (math.sqrt(lam) - math.sqrt(lam_om))


def evaluate(region, sol: EquilibriumSolution, g: Potential, lam: float) -> EnergyReport:
    """Assemble the full energy report for a solved region."""
    if lam < 0:
        raise InvalidRegionError("lambda must be nonnegative")
    if sol.mesh.region is not region and sol.mesh.region.components is not region.components:
        # identity check only: solutions are immutable and carry their mesh
        raise ConsistencyError("solution was computed on a different region")
    P = geometry.perimeter(region)
    m = geometry.area(region)
    g_int = float(np.sum(sol.mesh.areas * g(sol.mesh.centers)))
    E = P + lam * sol.I1 + g_int
    return EnergyReport(
        perimeter=P,
        I1=sol.I1,
        g_integral=g_int,
        lam=lam,
        energy=E,
        lambda_omega=(math.pi / sol.I1) ** 2,
        lambda_c=4.0 * m / math.pi,
        energy_relaxed=relaxed_energy(P, sol.I1, g_int, lam),
        mass=m,
        bound_gap=P + lam * sol.I1 - 2.0 * math.pi * math.sqrt(lam),
    )


def universal_lower_bound_gap(report: EnergyReport) -> float:
    """Gap in P + lam*I1 >= 2 pi sqrt(lam); negative means violation."""
    return report.bound_gap


def disk_quadrature_integral(g: Potential, m: float, center, n_r: int = 64,
                             n_t: int = 128) -> float:
    """Integral of g over the disk of area m via Gauss-Legendre x trapezoid."""
    r_ball = math.sqrt(m / math.pi)
    nodes, weights = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * r_ball * (nodes + 1.0)
    wr = 0.5 * r_ball * weights
    t = 2.0 * np.pi * np.arange(n_t) / n_t
    wt = 2.0 * np.pi / n_t
    X = center[0] + r[:, None] * np.cos(t)[None, :]
    Y = center[1] + r[:, None] * np.sin(t)[None, :]
    vals = g(np.column_stack([X.ravel(), Y.ravel()])).reshape(n_r, n_t)
    return float(np.sum(wr[:, None] * wt * r[:, None] * vals))


def ball_energy(m: float, lam: float, g: Potential, center=(0.0, 0.0)) -> EnergyReport:
    """Closed-form energy of the area-m ball (the comparison oracle).

    P = 2 sqrt(pi m), I1 = pi / (2 r) with r = sqrt(m/pi); the potential term
    is integrated numerically on a polar grid.
    """
    if m <= 0:
        raise InvalidRegionError("mass must be positive")
    r = math.sqrt(m / math.pi)
    P = 2.0 * math.sqrt(math.pi * m)
    I1 = math.pi / (2.0 * r)
    g_int = disk_quadrature_integral(g, m, np.asarray(center, dtype=float))
    E = P + lam * I1 + g_int
    return EnergyReport(
        perimeter=P,
        I1=I1,
        g_integral=g_int,
        lam=lam,
        energy=E,
        lambda_omega=(math.pi / I1) ** 2,
        lambda_c=4.0 * m / math.pi,
        energy_relaxed=relaxed_energy(P, I1, g_int, lam),
        mass=m,
        bound_gap=P + lam * I1 - 2.0 * math.pi * math.sqrt(lam),
    )


def lambda_critical(m: float) -> float:
    """Critical repulsion strength 4 m / pi for prescribed area m."""
    return 4.0 * m / math.pi
