"""Equilibrium (charge) measures, capacitary energy and potentials.

The discrete problem is  min m^T K m  over the probability simplex.  Its
stationarity conditions are the discrete analogue of the constant-potential
characterization: (K m)_i equals the energy on the support and is not smaller
off the support.  The primary solver solves K m = 1 on a shrinking support,
clamping negative masses; a projected-gradient descent guarantees termination
when the active set cycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import SolverFailureError
from .quadrature import CellMesh, KernelMatrix

DEFAULT_TOL = 1e-6
SIMPLEX_TOL = 1e-10
MAX_ACTIVE_ROUNDS = 50


@dataclass
class EquilibriumSolution:
    masses: np.ndarray          # (n,), >= 0, sums to 1
    I1: float                   # capacitary energy m^T K m
    cap1: float                 # 2*pi / I1
    residual: float             # max over support of |(Km)_i - I1| / I1
    off_support_violation: float  # max over off-support of (I1 - (Km)_i)/I1, >= 0
    mesh: CellMesh
    support: np.ndarray         # (n,) bool

    def potential_field(self, points) -> np.ndarray:
        """Equilibrium potential v at arbitrary points."""
        return quadrature.potential_at(self.mesh, self.masses, points)

    def capacitary_potential_field(self, points) -> np.ndarray:
        """Normalized potential u = v / I1 (equals 1 on the region)."""
        return self.potential_field(points) / self.I1


def capacity(sol: EquilibriumSolution) -> float:
    return 2.0 * math.pi / sol.I1


def _cg(K: np.ndarray, support: np.ndarray, b: np.ndarray, x0, tol_inf: float,
        max_iter: int = 2000):
    """Jacobi-preconditioned CG for K y = b restricted to ``support``.

    Stops on the infinity norm of the residual so the stationarity guarantee
    is uniform over cells.
    """
    mask = support.astype(float)
    diag = np.where(support, np.diag(K), 1.0)
    x = np.where(support, x0, 0.0) if x0 is not None else np.zeros_like(b)

    def matvec(v):
        return mask * (K @ (mask * v))

    r = mask * b - matvec(x)
    z = r / diag
    p = z.copy()
    rz = r @ z
    for it in range(max_iter):
        if np.max(np.abs(r)) <= tol_inf:
            return x, it
        Kp = matvec(p)
        alpha = rz / (p @ Kp)
        x += alpha * p
        r -= alpha * Kp
        z = r / diag
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {m >= 0, sum m = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _stationarity(K: np.ndarray, m: np.ndarray):
    pot = K @ m
    I1 = float(m @ pot)
    sup = m > 0
    res = float(np.max(np.abs(pot[sup] - I1)) / I1)
    off = float(max(0.0, np.max(I1 - pot[~sup], initial=0.0)) / I1)
    return I1, res, off, pot


def _projected_gradient(K: np.ndarray, m0: np.ndarray, tol: float,
                        max_iter: int = 4000):
    """Armijo projected-gradient fallback on the simplex."""
    m = _project_simplex(m0.copy())
    f = float(m @ (K @ m))
    step = 1.0 / np.max(np.diag(K))
    for _ in range(max_iter):
        grad = 2.0 * (K @ m)
        I1, res, off, _ = _stationarity(K, m)
        if res <= tol and off <= tol:
            return m
        t = step
        for _ in range(40):
            trial = _project_simplex(m - t * grad)
            f_trial = float(trial @ (K @ trial))
            if f_trial <= f - 1e-4 * float(grad @ (m - trial)):
                break
            t *= 0.5
        if np.allclose(trial, m):
            break
        m, f = trial, f_trial
    return m


def solve_equilibrium(
    mesh: CellMesh,
    K: KernelMatrix,
    tol: float = DEFAULT_TOL,
    warm_start: np.ndarray | None = None,
) -> EquilibriumSolution:
    """Minimize m^T K m over the probability simplex on the mesh cells."""
    A = K.matrix
    n = len(A)
    b = np.ones(n)
    support = np.ones(n, dtype=bool)
    y = warm_start * float(np.sum(warm_start)) if warm_start is not None else None
    if y is not None and len(y) != n:
        y = None
    seen = set()
    cycled = False
    for _ in range(MAX_ACTIVE_ROUNDS):
        key = support.tobytes()
        if key in seen:
            cycled = True
            break
        seen.add(key)
        y, _ = _cg(A, support, b, y, tol_inf=0.1 * tol)
        neg = support & (y < 0)
        if neg.any():
            support &= y >= 0
            y = np.where(support, y, 0.0)
            if support.sum() == 0:
                raise SolverFailureError("active set emptied the support")
            continue
        # KKT check off the support: potential there may not dip below the
        # on-support level, otherwise those cells re-enter the active set.
        pot = A @ np.where(support, y, 0.0)
        level = float(np.mean(pot[support]))
        violated = (~support) & (pot < level * (1.0 - 0.5 * tol))
        if not violated.any():
            break
        support |= violated
    else:
        cycled = True

    y = np.where(support & (y > 0), y, 0.0)
    total = float(y.sum())
    if total <= 0:
        raise SolverFailureError("nonpositive total mass from linear solve")
    m = y / total
    I1, res, off, pot = _stationarity(A, m)
    if cycled or res > tol or off > tol:
        m = _projected_gradient(A, m, tol)
        I1, res, off, pot = _stationarity(A, m)
        if res > tol:
            raise SolverFailureError(
                f"stationarity residual {res:.3e} above tolerance {tol:.1e}",
                best_masses=m,
                residual=res,
            )
    s = float(m.sum())
    if abs(s - 1.0) > SIMPLEX_TOL:
        m = m / s
        I1, res, off, pot = _stationarity(A, m)
    return EquilibriumSolution(
        masses=m,
        I1=I1,
        cap1=2.0 * math.pi / I1,
        residual=res,
        off_support_violation=off,
        mesh=mesh,
        support=m > 0,
    )


def potential_field(sol: EquilibriumSolution, points) -> np.ndarray:
    return sol.potential_field(points)


def solve_region(
    region,
    h: float,
    refine_boundary: bool = True,
    tol: float = DEFAULT_TOL,
) -> EquilibriumSolution:
    """Convenience wrapper: mesh, assemble and solve a region at spacing h."""
    mesh = quadrature.build_mesh(region, h, refine_boundary=refine_boundary)
    return solve_equilibrium(mesh, quadrature.assemble_kernel(mesh), tol=tol)


def richardson_I1(region, h: float, refine_boundary: bool = True,
                  tol: float = DEFAULT_TOL) -> tuple:
    """(h, h/2) Richardson extrapolation of I1 with the h^(1/2) edge rate.

    Returns (I1_extrapolated, I1_h, I1_h2).  The square-root rate comes from
    the dist^(-1/2) edge singularity of the equilibrium density.
    """
    i_h = solve_region(region, h, refine_boundary, tol).I1
    i_h2 = solve_region(region, h / 2.0, refine_boundary, tol).I1
    r = math.sqrt(2.0)
    return (r * i_h2 - i_h) / (r - 1.0), i_h, i_h2
