"""Regular-lattice representation of functions on a ball or box domain.

A domain is an axis-aligned cube of ``n`` cells per axis covering
``[-extent, extent]^dim``; cell centers sit at ``-extent + (i + 1/2) h`` with
``h = 2 extent / n``.  For a ball, cells whose center lies strictly inside the
sphere of radius ``extent`` are active; for a box, every cell is active (the
box stands in for the whole space, with functions extended by zero).

Functions live at cell centers and are extended by zero outside the lattice
and outside the active mask, mirroring zero boundary behaviour.  Gradients are
one-sided forward differences; this makes every lattice reflection map edges
onto edges exactly, which the rearrangement module relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

BALL = "ball"
BOX = "box"


@dataclass(frozen=True)
class Domain:
    """Uniform lattice over ``[-extent, extent]^dim`` with an activity mask."""

    kind: str
    extent: float
    dim: int
    n: int

    def __post_init__(self):
        if self.kind not in (BALL, BOX):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not self.extent > 0:
            raise ValueError("extent must be positive")
        if not 1 <= self.dim <= 3:
            raise ValueError("dimension must be 1, 2 or 3")
        if self.n < 4:
            raise ValueError("need at least 4 cells per axis")

    @property
    def h(self) -> float:
        return 2.0 * self.extent / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @cached_property
    def axis_centers(self) -> np.ndarray:
        i = np.arange(self.n)
        return -self.extent + (i + 0.5) * self.h

    @cached_property
    def coords(self) -> np.ndarray:
        """Cell-center coordinates, shape ``(dim, n, ..., n)``."""
        mesh = np.meshgrid(*([self.axis_centers] * self.dim), indexing="ij")
        return np.stack(mesh)

    @cached_property
    def radii(self) -> np.ndarray:
        """Distance of each cell center from the origin."""
        return np.sqrt(np.sum(self.coords**2, axis=0))

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean activity mask; cell centers strictly inside the domain."""
        if self.kind == BALL:
            m = self.radii < self.extent
        else:
            m = np.ones(self.shape, dtype=bool)
        m.setflags(write=False)
        return m

    @property
    def cell_measure(self) -> float:
        return self.h**self.dim

    @property
    def active_measure(self) -> float:
        return int(np.count_nonzero(self.mask)) * self.cell_measure


def make_domain(kind: str, extent: float, dimension: int, cells_per_axis: int) -> Domain:
    """Build a ball or box domain; rejects non-positive extent and n < 4."""
    return Domain(kind=kind, extent=float(extent), dim=int(dimension), n=int(cells_per_axis))


@dataclass(frozen=True)
class GridFunction:
    """Nonnegative-or-signed cell values on a domain, zero on inactive cells."""

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.domain.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match domain {self.domain.shape}"
            )

    @property
    def h(self) -> float:
        return self.domain.h

    def max(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class VectorField:
    """Per-cell vector data, one component per axis."""

    domain: Domain
    components: np.ndarray  # shape (dim, n, ..., n)

    @cached_property
    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.components**2, axis=0))


def grid_function(domain: Domain, values: np.ndarray) -> GridFunction:
    """Wrap per-cell values as a GridFunction, zeroing inactive cells.

    Rejects non-finite values.  Zeroing enforces the zero-extension model:
    sampling a profile on a ball keeps only its restriction to the ball.
    """
    arr = np.asarray(values, dtype=float)
    if arr.shape != domain.shape:
        raise ValueError(f"expected shape {domain.shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("grid function values must be finite")
    arr = np.where(domain.mask, arr, 0.0)
    arr.setflags(write=False)
    return GridFunction(domain, arr)


def from_profile(domain: Domain, profile) -> GridFunction:
    """Sample ``profile(x0, ..., x_{dim-1})`` at cell centers."""
    vals = profile(*domain.coords)
    return grid_function(domain, np.broadcast_to(np.asarray(vals, dtype=float), domain.shape).copy())


def exact_sum(arr: np.ndarray) -> float:
    """Order-independent compensated sum (identical multisets sum identically)."""
    return math.fsum(arr.ravel().tolist())


def integrate(values: np.ndarray, domain: Domain) -> float:
    """Midpoint quadrature: ``h^dim`` times the sum over active cells."""
    arr = np.asarray(values, dtype=float)
    if arr.shape != domain.shape:
        raise ValueError(f"expected shape {domain.shape}, got {arr.shape}")
    return domain.cell_measure * exact_sum(arr[domain.mask])


def gradient(u: GridFunction) -> VectorField:
    """Forward-difference gradient ``(u(x + h e_i) - u(x)) / h``.

    Neighbour values are read from the zero extension beyond the lattice, so
    the outermost cells see the wall.  Components are zeroed on inactive
    cells; the wall edges based at inactive or ghost cells are accounted for
    separately by :func:`padded_gradient`, which the energy evaluators use.
    """
    d = u.domain
    comps = np.empty((d.dim,) + d.shape)
    for axis in range(d.dim):
        comps[axis] = (_shift_down(u.values, axis) - u.values) / d.h
    comps *= d.mask
    return VectorField(d, comps)


def _shift_down(arr: np.ndarray, axis: int) -> np.ndarray:
    """arr[..., i+1, ...] with a zero read past the high end."""
    out = np.zeros_like(arr)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(None, -1)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def padded_values(u: GridFunction) -> np.ndarray:
    """Values with one ghost-zero layer prepended on the low side of each axis.

    The padded lattice carries every wall edge of the zero-extended function:
    the forward difference at a low-side ghost cell is the jump from zero into
    the first real cell.  High-side walls already live at the last real cell.
    """
    return np.pad(u.values, [(1, 0)] * u.domain.dim)


def padded_gradient(u: GridFunction) -> np.ndarray:
    """Forward differences on the padded lattice, shape ``(dim, n+1, ..., n+1)``."""
    pv = padded_values(u)
    comps = np.empty((u.domain.dim,) + pv.shape)
    for axis in range(u.domain.dim):
        comps[axis] = (_shift_down(pv, axis) - pv) / u.domain.h
    return comps


def gradient_pnorm_pow(u: GridFunction, p: float) -> float:
    """``h^dim * sum over all lattice edges |Du|^p`` (wall edges included).

    This edge sum is invariant under lattice reflections, which makes the
    discrete polarization inequalities exact rather than approximate.
    """
    mag = np.sqrt(np.sum(padded_gradient(u) ** 2, axis=0))
    return u.domain.cell_measure * exact_sum(mag**p)


def gradient_inner(u: GridFunction, v: GridFunction) -> float:
    """``h^dim * sum over all lattice edges Du . Dv`` on the padded lattice."""
    prod = np.sum(padded_gradient(u) * padded_gradient(v), axis=0)
    return u.domain.cell_measure * exact_sum(prod)


def lp_norm(u: GridFunction, p: float) -> float:
    """``(integral of |u|^p)^(1/p)`` by midpoint quadrature; requires p >= 1."""
    if p < 1:
        raise ValueError("lp_norm requires p >= 1")
    return integrate(np.abs(u.values) ** p, u.domain) ** (1.0 / p)


def lp_distance(u: GridFunction, v: GridFunction, p: float) -> float:
    return integrate(np.abs(u.values - v.values) ** p, u.domain) ** (1.0 / p)


def w1p_norm(u: GridFunction, p: float) -> float:
    """Sobolev norm ``(||u||_p^p + sum_i ||D_i u||_p^p)^(1/p)`` with wall edges."""
    pg = padded_gradient(u)
    total = exact_sum(np.abs(u.values[u.domain.mask]) ** p)
    for axis in range(u.domain.dim):
        total += exact_sum(np.abs(pg[axis]) ** p)
    return (u.domain.cell_measure * total) ** (1.0 / p)


def superlevel_measure(u: GridFunction, t: float) -> float:
    """Measure of the strict superlevel set ``{u > t}`` among active cells."""
    count = int(np.count_nonzero(u.values[u.domain.mask] > t))
    return count * u.domain.cell_measure


def boundary_tail_mass(u: GridFunction, p: float = 2.0, shell: float = 0.1) -> float:
    """``L^p`` mass on the outer ``shell`` fraction of the domain.

    Box domains stand in for the whole space; a noticeable tail here signals
    truncation error.
    """
    d = u.domain
    cutoff = (1.0 - shell) * d.extent
    outer = np.max(np.abs(d.coords), axis=0) >= cutoff if d.kind == BOX else d.radii >= cutoff
    vals = np.where(outer & d.mask, np.abs(u.values) ** p, 0.0)
    return (d.cell_measure * exact_sum(vals)) ** (1.0 / p)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def write_csv(u: GridFunction, path) -> None:
    """Write header ``N,<dim>,kind,<ball|box>,extent,<R>,n,<cells>`` then one
    value per line in row-major order.  Uses shortest round-trip float repr,
    so read(write(u)) is bit-identical."""
    d = u.domain
    lines = [f"N,{d.dim},kind,{d.kind},extent,{d.extent!r},n,{d.n}"]
    lines.extend(repr(v) for v in u.values.ravel().tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> GridFunction:
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValueError(f"{path}: empty grid-function file")
    tokens = text[0].split(",")
    if len(tokens) != 8 or tokens[0] != "N" or tokens[2] != "kind" or tokens[4] != "extent" or tokens[6] != "n":
        raise ValueError(f"{path}: malformed header {text[0]!r}")
    dim, kind, extent, n = int(tokens[1]), tokens[3], float(tokens[5]), int(tokens[7])
    domain = make_domain(kind, extent, dim, n)
    vals = np.array([float(line) for line in text[1:]], dtype=float)
    if vals.size != n**dim:
        raise ValueError(f"{path}: expected {n**dim} values, found {vals.size}")
    return grid_function(domain, vals.reshape(domain.shape))
