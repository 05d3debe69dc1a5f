"""Integrand families j, F, G with growth envelopes, and the variational
evaluators built from them: energies, first variations, the weak-form
Euler-Lagrange residual and the multiplier estimate.

All integrals use the wall-inclusive lattice calculus from :mod:`grid`:
gradient-dependent densities are evaluated on the padded lattice so the
zero-boundary walls are paid for, matching the zero-extension function model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import (
    Domain,
    GridFunction,
    exact_sum,
    grid_function,
    integrate,
    lp_norm,
    padded_gradient,
    padded_values,
)

P_DIRICHLET = "p_dirichlet"
WEIGHTED_P = "weighted_p"
ZERO = "zero"
PURE_POWER = "pure_power"
RADIAL_WEIGHTED = "radial_weighted"


class DegenerateTestFunction(ValueError):
    """The multiplier denominator pairing vanishes for this test function."""


# ---------------------------------------------------------------------------
# model families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegrandModel:
    """Gradient integrand ``j(s, t)``.

    ``p_dirichlet``: ``j = t^p``.  ``weighted_p``: ``j = (1 + k s^2/(1+s^2)) t^p``
    with the bounded weight keeping the growth envelope ``[1, 1+k] t^p``.
    Both are strictly convex and increasing in t on t >= 0 with j(s, 0) = 0.
    """

    family: str
    p: float
    kappa: float = 0.0

    def __post_init__(self):
        if self.family not in (P_DIRICHLET, WEIGHTED_P):
            raise ValueError(f"unknown integrand family {self.family!r}")
        if not self.p > 1:
            raise ValueError("exponent p must exceed 1")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.family == P_DIRICHLET and self.kappa != 0.0:
            raise ValueError("p_dirichlet has no kappa parameter")

    def _weight(self, s):
        s = np.asarray(s, dtype=float)
        return 1.0 + self.kappa * s**2 / (1.0 + s**2)

    def j(self, s, t):
        return self._weight(s) * np.asarray(t, dtype=float) ** self.p

    def j_s(self, s, t):
        s = np.asarray(s, dtype=float)
        return self.kappa * (2.0 * s / (1.0 + s**2) ** 2) * np.asarray(t, dtype=float) ** self.p

    def j_t(self, s, t):
        return self.p * self._weight(s) * np.asarray(t, dtype=float) ** (self.p - 1.0)

    # growth envelope constants: alpha0 |xi|^p <= j <= alpha |xi|^p,
    # |j_s| <= beta |xi|^p, |j_t| <= gamma |xi|^(p-1)
    @property
    def alpha0(self) -> float:
        return 1.0

    def alpha(self, tau: float) -> float:
        return 1.0 + self.kappa

    def beta(self, tau: float) -> float:
        return self.kappa

    def gamma(self, tau: float) -> float:
        return self.p * (1.0 + self.kappa)

    @classmethod
    def p_dirichlet(cls, p: float) -> "IntegrandModel":
        return cls(P_DIRICHLET, float(p))

    @classmethod
    def weighted_p(cls, p: float, kappa: float) -> "IntegrandModel":
        return cls(WEIGHTED_P, float(p), float(kappa))


def _default_radial_weight(r):
    return 1.0 / (1.0 + np.asarray(r, dtype=float) ** 2)


@dataclass(frozen=True)
class NonlinearityModel:
    """Lower-order term ``F(r, s) = c w(r) |s|^sigma`` with density f = dF/ds.

    ``zero`` drops the term; ``pure_power`` uses w = 1; ``radial_weighted``
    uses a nonincreasing weight (default ``1/(1+r^2)``).  A custom weight may
    be supplied; growth_validate flags weights that increase with radius.
    """

    family: str
    sigma: float = 0.0
    c: float = 0.0
    weight: Callable | None = None

    def __post_init__(self):
        if self.family not in (ZERO, PURE_POWER, RADIAL_WEIGHTED):
            raise ValueError(f"unknown nonlinearity family {self.family!r}")
        if self.family != ZERO:
            if not self.sigma > 1:
                raise ValueError("sigma must exceed 1")
            if self.c < 0:
                raise ValueError("coefficient must be nonnegative")

    def _w(self, r):
        if self.family == PURE_POWER:
            return np.ones_like(np.asarray(r, dtype=float))
        w = self.weight if self.weight is not None else _default_radial_weight
        return np.asarray(w(r), dtype=float)

    def F(self, r, s):
        if self.family == ZERO:
            return np.zeros(np.broadcast(r, s).shape)
        return self.c * self._w(r) * np.abs(s) ** self.sigma

    def f(self, r, s):
        if self.family == ZERO:
            return np.zeros(np.broadcast(r, s).shape)
        s = np.asarray(s, dtype=float)
        return self.sigma * self.c * self._w(r) * np.abs(s) ** (self.sigma - 2.0) * s

    @classmethod
    def zero(cls) -> "NonlinearityModel":
        return cls(ZERO)

    @classmethod
    def pure_power(cls, sigma: float, c: float = 1.0) -> "NonlinearityModel":
        return cls(PURE_POWER, float(sigma), float(c))

    @classmethod
    def radial_weighted(cls, sigma: float, c: float = 1.0, weight: Callable | None = None) -> "NonlinearityModel":
        return cls(RADIAL_WEIGHTED, float(sigma), float(c), weight)


@dataclass(frozen=True)
class ConstraintModel:
    """Constraint density ``G(s) = |s|^q`` with g = dG/ds; requires q >= p."""

    q: float

    def __post_init__(self):
        if not self.q > 1:
            raise ValueError("constraint exponent q must exceed 1")

    def G(self, s):
        return np.abs(s) ** self.q

    def g(self, s):
        s = np.asarray(s, dtype=float)
        return self.q * np.abs(s) ** (self.q - 2.0) * s


def cutoff_value(s):
    """Fixed smooth plateau bump: 1 on [-1, 1], 0 outside [-2, 2].

    Cubic smoothstep in between, so the slope never exceeds 1.5.
    """
    tau = np.clip(np.abs(s) - 1.0, 0.0, 1.0)
    return 1.0 - 3.0 * tau**2 + 2.0 * tau**3


def cutoff_derivative(s):
    s = np.asarray(s, dtype=float)
    tau = np.clip(np.abs(s) - 1.0, 0.0, 1.0)
    return (-6.0 * tau + 6.0 * tau**2) * np.sign(s)


@dataclass(frozen=True)
class CutoffSpec:
    """Scaled cutoff ``H(u / scale)`` used to build admissible test functions."""

    scale: float = 1.0

    def __post_init__(self):
        if self.scale < 1:
            raise ValueError("cutoff scale must be >= 1")

    def H(self, u):
        return cutoff_value(np.asarray(u, dtype=float) / self.scale)

    def H_prime(self, u):
        return cutoff_derivative(np.asarray(u, dtype=float) / self.scale)


@dataclass(frozen=True)
class FluxOperator:
    """Cut-off flux ``b(x, xi) = H(u(x)/k) j_t(u(x), |xi|) xi / |xi|``, b(x, 0) = 0."""

    u: GridFunction
    integrand: IntegrandModel
    cutoff: CutoffSpec

    def b(self, cell_values: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Evaluate at cells with values ``cell_values`` (shape (k,)) and
        vectors ``xi`` (shape (k, dim))."""
        s = np.asarray(cell_values, dtype=float)
        xi = np.asarray(xi, dtype=float)
        t = np.linalg.norm(xi, axis=-1)
        hval = self.cutoff.H(s)
        safe = np.where(t > 0, t, 1.0)
        coeff = np.where(t > 0, hval * self.integrand.j_t(s, t) / safe, 0.0)
        return coeff[..., None] * xi

    @property
    def bound_constant(self) -> float:
        """``gamma(2k)``: |b(x, xi)| <= gamma(2k) |xi|^(p-1) on the cutoff support."""
        return self.integrand.gamma(2.0 * self.cutoff.scale)


# ---------------------------------------------------------------------------
# energies and variations
# ---------------------------------------------------------------------------

def _padded_magnitude(u: GridFunction):
    pg = padded_gradient(u)
    return pg, np.sqrt(np.sum(pg**2, axis=0))


def j_energy(u: GridFunction, integrand: IntegrandModel) -> float:
    """``h^dim * sum j(u, |Du|)`` over the padded lattice (wall edges included)."""
    _, mag = _padded_magnitude(u)
    dens = integrand.j(padded_values(u), mag)
    return u.domain.cell_measure * exact_sum(dens)


def f_term(u: GridFunction, nonlinearity: NonlinearityModel) -> float:
    return integrate(nonlinearity.F(u.domain.radii, u.values), u.domain)


def g_constraint(u: GridFunction, constraint: ConstraintModel) -> float:
    return integrate(constraint.G(u.values), u.domain)


def total_energy(u: GridFunction, integrand: IntegrandModel, nonlinearity: NonlinearityModel) -> float:
    return j_energy(u, integrand) - f_term(u, nonlinearity)


def _flux_arrays(u: GridFunction, integrand: IntegrandModel):
    """Per-padded-cell flux ``j_t(u, |Du|) Du / |Du|`` with the 0-at-0 convention."""
    pg, mag = _padded_magnitude(u)
    pv = padded_values(u)
    safe = np.where(mag > 0, mag, 1.0)
    coeff = np.where(mag > 0, integrand.j_t(pv, mag) / safe, 0.0)
    return coeff * pg, pv, mag


def directional_derivative(
    u: GridFunction,
    v: GridFunction,
    integrand: IntegrandModel,
    nonlinearity: NonlinearityModel | None = None,
) -> float:
    """First variation at u in direction v.

    Returns ``int j_t(u,|Du|) Du/|Du| . Dv + int j_s(u,|Du|) v`` and, when a
    nonlinearity is supplied, subtracts ``int f(|x|, u) v``.  Exact derivative
    of :func:`j_energy` / :func:`total_energy` by construction.
    """
    b, pv, mag = _flux_arrays(u, integrand)
    dv = padded_gradient(v)
    term_t = exact_sum(np.sum(b * dv, axis=0))
    term_s = exact_sum(integrand.j_s(pv, mag) * padded_values(v))
    total = u.domain.cell_measure * (term_t + term_s)
    if nonlinearity is not None:
        total -= integrate(nonlinearity.f(u.domain.radii, u.values) * v.values, u.domain)
    return total


def constraint_pairing(u: GridFunction, v: GridFunction, constraint: ConstraintModel) -> float:
    """``int g(u) v``, the constraint side of the multiplier identity."""
    return integrate(constraint.g(u.values) * v.values, u.domain)


def cutoff_test_function(u: GridFunction, v: GridFunction, k: float) -> GridFunction:
    """Pointwise ``H(u/k) v``: bounded test function adapted to u."""
    spec = CutoffSpec(scale=float(k))
    return grid_function(u.domain, spec.H(u.values) * v.values)


def el_residual(
    u: GridFunction,
    lam: float,
    phi: GridFunction,
    integrand: IntegrandModel,
    nonlinearity: NonlinearityModel,
    constraint: ConstraintModel,
) -> float:
    """Weak-form constrained Euler-Lagrange residual tested against phi.

    ``int j_t(u,|Du|) Du/|Du| . Dphi + int j_s(u,|Du|) phi - int f phi
    - lam int g(u) phi``; affine in lam with slope ``-int g(u) phi``.
    """
    return directional_derivative(u, phi, integrand, nonlinearity) - lam * constraint_pairing(
        u, phi, constraint
    )


def multiplier_terms(
    u: GridFunction,
    integrand: IntegrandModel,
    nonlinearity: NonlinearityModel,
    constraint: ConstraintModel,
    v_hat: GridFunction,
    k_hat: float,
) -> tuple[float, float, float, float]:
    """The three numerator integrals and the denominator of the multiplier
    identity obtained by testing with ``H(u/k) v``.

    I1 pairs the cut-off flux with ``D v_hat``; I2 collects the ``j_s`` term
    and the chain-rule term ``H'(u/k) j_t(u,|Du|) |Du| / k``; I3 is the
    nonlinearity pairing with its sign.
    """
    spec = CutoffSpec(scale=float(k_hat))
    cm = u.domain.cell_measure
    b, pv, mag = _flux_arrays(u, integrand)
    h_pad = spec.H(pv)
    dv = padded_gradient(v_hat)
    i1 = cm * exact_sum(h_pad * np.sum(b * dv, axis=0))
    pv_hat = padded_values(v_hat)
    i2_dens = (
        h_pad * integrand.j_s(pv, mag)
        + spec.H_prime(pv) * integrand.j_t(pv, mag) * mag / k_hat
    ) * pv_hat
    i2 = cm * exact_sum(i2_dens)
    h_vals = spec.H(u.values)
    i3 = -integrate(nonlinearity.f(u.domain.radii, u.values) * h_vals * v_hat.values, u.domain)
    denom = integrate(constraint.g(u.values) * h_vals * v_hat.values, u.domain)
    return i1, i2, i3, denom


def multiplier_estimate(
    u: GridFunction,
    integrand: IntegrandModel,
    nonlinearity: NonlinearityModel,
    constraint: ConstraintModel,
    v_hat: GridFunction,
    k_hat: float,
) -> float:
    """Lagrange multiplier from the cut-off test identity.

    Raises :class:`DegenerateTestFunction` when the denominator pairing is
    negligible against ``||v_hat|| ||g(u)||``.
    """
    i1, i2, i3, denom = multiplier_terms(u, integrand, nonlinearity, constraint, v_hat, k_hat)
    g_norm = lp_norm(grid_function(u.domain, constraint.g(u.values)), 2.0)
    v_norm = lp_norm(v_hat, 2.0)
    if abs(denom) < 1e-10 * v_norm * g_norm:
        raise DegenerateTestFunction(
            "constraint pairing with the cut-off test function is degenerate"
        )
    return (i1 + i2 + i3) / denom


def smooth_bump(domain: Domain, center, width: float, height: float = 1.0) -> GridFunction:
    """Compactly supported C^1 bump ``height (1 - |x-c|^2/w^2)_+^2``."""
    c = np.asarray(center, dtype=float).reshape((-1,) + (1,) * domain.dim)
    r2 = np.sum((domain.coords - c) ** 2, axis=0)
    vals = height * np.clip(1.0 - r2 / width**2, 0.0, None) ** 2
    return grid_function(domain, vals)


# ---------------------------------------------------------------------------
# structural checks
# ---------------------------------------------------------------------------

@dataclass
class MonotoneReport:
    samples: int
    min_inner: float
    strict_zone_min: float | None
    strict_zone_samples: int

    @property
    def passed(self) -> bool:
        return self.min_inner >= -1e-12


def monotone_operator_check(flux: FluxOperator, samples: int, rng_seed: int) -> MonotoneReport:
    """Sample ``(b(x, xi) - b(x, xi')) . (xi - xi')`` at random cells/vectors.

    The inner product is nonnegative by convexity of ``t -> j(s, t)``; strict
    positivity is only meaningful where the cutoff is active, so the strict
    minimum is reported over cells with ``H(u/k) > 0`` and ``xi != xi'``.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(rng_seed)
    d = flux.u.domain
    active = np.flatnonzero(d.mask.ravel())
    cells = active[rng.integers(0, active.size, size=samples)]
    s = flux.u.values.ravel()[cells]
    xi = rng.normal(size=(samples, d.dim))
    xi2 = rng.normal(size=(samples, d.dim))
    inner = np.sum((flux.b(s, xi) - flux.b(s, xi2)) * (xi - xi2), axis=-1)
    strict = flux.cutoff.H(s) > 0
    strict_min = float(inner[strict].min()) if np.any(strict) else None
    return MonotoneReport(
        samples=samples,
        min_inner=float(inner.min()),
        strict_zone_min=strict_min,
        strict_zone_samples=int(np.count_nonzero(strict)),
    )


@dataclass
class GrowthReport:
    ok: bool
    violations: list[str]
    worst_slack: dict[str, float]
    p_star: float
    upper_critical_skipped: bool
    dimension: int


def growth_validate(
    integrand: IntegrandModel,
    nonlinearity: NonlinearityModel,
    constraint: ConstraintModel,
    dimension: int,
    sample_box: tuple[float, float, float] = (3.0, 3.0, 3.0),
    samples: int = 2000,
    rng_seed: int = 0,
) -> GrowthReport:
    """Sampled validation of the growth and monotonicity envelopes.

    Checks the two-sided gradient growth of j, the bounds on j_s and j_t, the
    radial monotonicity of f, and the constraint growth of g.  For p >= N the
    critical exponent is infinite; upper-critical checks are skipped and
    flagged.  Report-only: violations are listed, nothing raises.
    """
    rng = np.random.default_rng(rng_seed)
    s_max, xi_max, r_max = sample_box
    s = rng.uniform(-s_max, s_max, size=samples)
    t = rng.uniform(0.0, xi_max, size=samples)
    r = rng.uniform(0.0, r_max, size=samples)

    violations: list[str] = []
    worst: dict[str, float] = {}
    tol = 1e-9

    def check(name: str, slack: np.ndarray):
        m = float(np.min(slack))
        worst[name] = m
        if m < -tol:
            violations.append(name)

    tau = float(np.max(np.abs(s)))
    jv = integrand.j(s, t)
    check("j_lower", jv - integrand.alpha0 * t**integrand.p)
    check("j_upper", integrand.alpha(tau) * t**integrand.p - jv)
    check("j_s_bound", integrand.beta(tau) * t**integrand.p - np.abs(integrand.j_s(s, t)))
    check("j_t_bound", integrand.gamma(tau) * t ** (integrand.p - 1.0) - np.abs(integrand.j_t(s, t)))

    # radial monotonicity of f on s >= 0: f(r1, s) >= f(r2, s) for r1 <= r2
    s_pos = np.abs(s)
    r_pair = np.sort(rng.uniform(0.0, r_max, size=(samples, 2)), axis=1)
    check("f_radial_monotone", nonlinearity.f(r_pair[:, 0], s_pos) - nonlinearity.f(r_pair[:, 1], s_pos))

    p = integrand.p
    p_star = math.inf if p >= dimension else dimension * p / (dimension - p)
    skipped = not math.isfinite(p_star)
    if not skipped:
        # g growth against C (|s|^{p-1} + |s|^{p*-1}) with C from the family
        cG = constraint.q
        check(
            "g_growth",
            cG * (np.abs(s) ** (p - 1.0) + np.abs(s) ** (p_star - 1.0)) - np.abs(constraint.g(s)),
        )
        if constraint.q > p_star + tol:
            violations.append("constraint_exponent_supercritical")
        if nonlinearity.family != ZERO and nonlinearity.sigma > p_star + tol:
            violations.append("nonlinearity_exponent_supercritical")
    if constraint.q < p - tol:
        violations.append("constraint_exponent_below_p")

    return GrowthReport(
        ok=not violations,
        violations=violations,
        worst_slack=worst,
        p_star=p_star,
        upper_critical_skipped=skipped,
        dimension=dimension,
    )


def scaling_admissibility_warning(
    integrand: IntegrandModel, nonlinearity: NonlinearityModel, domain: Domain
) -> None:
    """Warn when a pure-power nonlinearity sits outside the scaling window.

    On a box (whole-space surrogate) the window is ``p < sigma < p + p^2/N``:
    below it the term is subcritical-trivial, above it the infimum escapes to
    minus infinity.  On a ball only the lower end matters.
    """
    if nonlinearity.family != PURE_POWER or nonlinearity.c == 0:
        return
    p, sigma = integrand.p, nonlinearity.sigma
    if sigma <= p:
        warnings.warn(
            f"sigma = {sigma} does not exceed p = {p}; nonlinearity too weak to shape the minimizer",
            stacklevel=3,
        )
    elif domain.kind == "box" and sigma >= p + p**2 / domain.dim:
        warnings.warn(
            f"sigma = {sigma} at or above the scaling threshold p + p^2/N = {p + p**2 / domain.dim};"
            " the constrained infimum is unbounded below",
            stacklevel=3,
        )


def models_from_config(config: dict) -> tuple[IntegrandModel, NonlinearityModel, ConstraintModel]:
    """Build the three models from the configuration mapping
    ``{"j": {...}, "F": {...}, "G": {...}}`` used by experiment configs."""
    jc = config["j"]
    integrand = IntegrandModel(
        family=jc["family"], p=float(jc["p"]), kappa=float(jc.get("kappa", 0.0))
    )
    fc = config.get("F", {"family": ZERO})
    family = fc["family"]
    if family == ZERO:
        nonlinearity = NonlinearityModel.zero()
    elif family == PURE_POWER:
        nonlinearity = NonlinearityModel.pure_power(float(fc["sigma"]), float(fc.get("c", 1.0)))
    elif family == RADIAL_WEIGHTED:
        nonlinearity = NonlinearityModel.radial_weighted(float(fc["sigma"]), float(fc.get("c", 1.0)))
    else:
        raise ValueError(f"unknown nonlinearity family {family!r}")
    constraint = ConstraintModel(q=float(config["G"]["q"]))
    return integrand, nonlinearity, constraint
