"""Constrained minimization of ``E(u) = int j(u,|Du|) - int F(|x|,u)`` over
``{u >= 0, int G(u) = 1}`` by projected gradient descent.

The descent direction is the cellwise strong-form gradient (adjoint of the
forward differences applied to the flux, plus the zero-order terms), which is
the exact derivative of the discrete energy.  Steps are projected back onto
the constraint by exact scaling (G is homogeneous) and accepted under an
Armijo decrease condition; trial steps use a Barzilai-Borwein guess, which
keeps the iteration count manageable on stiff grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import functional as fn
from .grid import Domain, GridFunction, grid_function
from .functional import (
    ConstraintModel,
    IntegrandModel,
    NonlinearityModel,
    DegenerateTestFunction,
)


class ZeroConstraintMass(ValueError):
    """``int G(u)`` vanishes, so the constraint projection is undefined."""


class EnergyDiverged(RuntimeError):
    """Energy fell below the configured floor (supercritical blow-up)."""

    def __init__(self, message: str, result: "MinimizeResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 20000
    step0: float = 1.0
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4
    grad_tol: float = 1e-6
    constraint_tol: float = 1e-8
    enforce_nonneg: bool = True
    energy_floor: float = -1e9

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.step0 > 0:
            raise ValueError("step0 must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not self.grad_tol > 0 or not self.constraint_tol > 0:
            raise ValueError("tolerances must be positive")


@dataclass
class MinimizeResult:
    u: GridFunction
    lam: float
    energy: float
    energy_trace: list[float]
    constraint_residual: float
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)


def project_to_constraint(u: GridFunction, constraint: ConstraintModel) -> GridFunction:
    """Scale u onto ``int G(u) = 1``; exact for the homogeneous power family."""
    mass = fn.g_constraint(u, constraint)
    if mass <= 1e-14:
        raise ZeroConstraintMass("constraint integral is (numerically) zero")
    c = mass ** (-1.0 / constraint.q)
    return grid_function(u.domain, c * u.values)


def energy_gradient(
    u: GridFunction, integrand: IntegrandModel, nonlinearity: NonlinearityModel
) -> np.ndarray:
    """Cellwise derivative density of the discrete energy.

    Exactly the adjoint-of-forward-differences divergence of the flux
    ``j_t(u,|Du|) Du/|Du|`` over the padded lattice (so boundary walls push
    back), plus ``j_s(u,|Du|)`` and ``-f(|x|,u)``.  Zero on inactive cells.
    """
    d = u.domain
    b, pv, mag = fn._flux_arrays(u, integrand)
    core = tuple(slice(1, None) for _ in range(d.dim))
    grad = np.zeros(d.shape)
    for axis in range(d.dim):
        lower = [slice(1, None)] * d.dim
        lower[axis] = slice(None, -1)
        grad += (b[axis][tuple(lower)] - b[axis][core]) / d.h
    grad += integrand.j_s(pv, mag)[core]
    grad -= nonlinearity.f(d.radii, u.values)
    grad *= d.mask
    return grad


def default_init(domain: Domain, constraint: ConstraintModel) -> GridFunction:
    """Centered smooth bump projected onto the constraint: strictly admissible."""
    bump = fn.smooth_bump(domain, [0.0] * domain.dim, width=0.5 * domain.extent)
    return project_to_constraint(bump, constraint)


def _multiplier_at(u, integrand, nonlinearity, constraint):
    """Multiplier at a solution: centered test bump, cutoff scale past max(u)."""
    k_hat = max(1.0, float(np.ceil(u.max())))
    v_hat = fn.smooth_bump(u.domain, [0.0] * u.domain.dim, width=0.6 * u.domain.extent)
    try:
        return fn.multiplier_estimate(u, integrand, nonlinearity, constraint, v_hat, k_hat)
    except DegenerateTestFunction:
        return float("nan")


def minimize(
    integrand: IntegrandModel,
    nonlinearity: NonlinearityModel,
    constraint: ConstraintModel,
    domain: Domain,
    init: GridFunction,
    opts: SolverOptions = SolverOptions(),
) -> MinimizeResult:
    """Projected gradient descent on the constrained energy.

    Iterates ``u <- project(clamp(u - tau * grad E(u)))`` with Armijo
    backtracking until the projected-gradient (KKT) residual drops below
    ``grad_tol``.  When no step of any size yields a float-measurable energy
    decrease the iterate is numerically stationary and is also reported as
    converged; very small ``grad_tol`` values can only be certified that way.
    Returns the best iterate with ``converged=False`` when the iteration
    budget runs out; raises :class:`EnergyDiverged` if the energy crosses the
    configured floor.
    """
    fn.scaling_admissibility_warning(integrand, nonlinearity, domain)
    u = project_to_constraint(init, constraint)
    energy = fn.total_energy(u, integrand, nonlinearity)
    trace = [energy]
    tau = opts.step0
    prev_vals = None
    prev_grad = None
    converged = False
    iterations = 0

    def result(u, lam_needed=True):
        res = fn.g_constraint(u, constraint) - 1.0
        lam = _multiplier_at(u, integrand, nonlinearity, constraint) if lam_needed else float("nan")
        return MinimizeResult(
            u=u,
            lam=lam,
            energy=trace[-1],
            energy_trace=trace,
            constraint_residual=abs(res),
            iterations=iterations,
            converged=converged,
            diagnostics={
                "final_step": tau,
                "zero_gradient_cells": "flux taken as zero where |Du| = 0",
            },
        )

    for iterations in range(1, opts.max_iters + 1):
        g = energy_gradient(u, integrand, nonlinearity)
        if prev_vals is not None:
            du = u.values - prev_vals
            dg = g - prev_grad
            denom = float(np.sum(du * dg))
            if denom > 1e-300:
                tau = float(np.clip(np.sum(du * du) / denom, 1e-12, 1e12))
        prev_vals, prev_grad = u.values, g

        # projected-gradient (KKT) residual: remove the component along the
        # constraint gradient, and at clamped cells only count descent
        # directions that point back into the feasible set
        w = constraint.g(u.values) * domain.mask
        wnorm2 = float(np.sum(w * w))
        lam_kkt = float(np.sum(g * w)) / wnorm2 if wnorm2 > 0 else 0.0
        r = g - lam_kkt * w
        if opts.enforce_nonneg:
            r = np.where(u.values > 0, r, np.minimum(r, 0.0))
        pg_norm = np.sqrt(float(np.sum(r * r)) * domain.cell_measure)
        if pg_norm <= opts.grad_tol:
            converged = True
            break

        accepted = None
        step = tau
        for _ in range(60):
            cand_vals = u.values - step * g
            if opts.enforce_nonneg:
                cand_vals = np.clip(cand_vals, 0.0, None)
            try:
                cand = project_to_constraint(grid_function(domain, cand_vals), constraint)
            except ZeroConstraintMass:
                step *= opts.backtrack_factor
                continue
            cand_energy = fn.total_energy(cand, integrand, nonlinearity)
            move = float(np.sum((cand.values - u.values) ** 2)) * domain.cell_measure
            if cand_energy <= energy - opts.armijo_c * move / step:
                accepted = (cand, cand_energy, move, step)
                break
            step *= opts.backtrack_factor
        if accepted is None:
            # no acceptable step: treat as stationary
            converged = True
            break
        u, energy, move, tau = accepted
        trace.append(energy)
        if energy < opts.energy_floor:
            partial = result(u, lam_needed=False)
            raise EnergyDiverged(
                f"energy {energy:.3e} fell below the floor {opts.energy_floor:.3e}", partial
            )

    return result(u)


def multi_start_minimize(
    integrand: IntegrandModel,
    nonlinearity: NonlinearityModel,
    constraint: ConstraintModel,
    domain: Domain,
    opts: SolverOptions = SolverOptions(),
    seed: int = 0,
    starts: int = 3,
    max_workers: int = 1,
) -> tuple[MinimizeResult, list[float]]:
    """Run the solver from several seeded initial bumps and keep the lowest
    energy; returns (best result, energies of all basins found)."""
    rng = np.random.default_rng(seed)
    inits = [default_init(domain, constraint)]
    for _ in range(starts - 1):
        center = rng.uniform(-0.3 * domain.extent, 0.3 * domain.extent, size=domain.dim)
        width = rng.uniform(0.3, 0.7) * domain.extent
        bump = fn.smooth_bump(domain, center, width=width)
        inits.append(project_to_constraint(bump, constraint))

    def run(init):
        return minimize(integrand, nonlinearity, constraint, domain, init, opts)

    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run, inits))
    else:
        results = [run(init) for init in inits]
    energies = [r.energy for r in results]
    best = results[int(np.argmin(energies))]
    return best, energies
