"""Gram-matrix construction for vector and grid-discretized functional data.

Each dataset component is an n x dim matrix of observations. Vector
components use plain Euclidean geometry; functional components carry a
grid of abscissae and use trapezoidal-rule quadrature to approximate the
L2 distance between discretized curves. All estimators downstream consume
only the resulting stack of symmetric n x n Gram matrices.

Every type here is immutable after construction (arrays are copied and
marked read-only), so instances are safe to share across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidInputError

GAUSSIAN = "gaussian"
LINEAR = "linear"
TRAPEZOID = "trapezoid"
NO_QUADRATURE = "none"


def _readonly_f64(values, name: str, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise InvalidInputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FunctionalGrid:
    """Strictly increasing abscissae t_1 < ... < t_r (r >= 2) of a discretized curve."""

    points: np.ndarray

    def __post_init__(self):
        pts = _readonly_f64(self.points, "grid points", ndim=1)
        if pts.size < 2:
            raise InvalidInputError(f"grid needs at least 2 points, got {pts.size}")
        if not np.all(np.diff(pts) > 0):
            raise InvalidInputError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return int(self.points.size)

    def trapezoid_weights(self) -> np.ndarray:
        """Per-point quadrature weights; they sum to t_r - t_1 up to rounding."""
        d = np.diff(self.points)
        w = np.empty_like(self.points)
        w[0] = d[0] / 2.0
        w[-1] = d[-1] / 2.0
        w[1:-1] = (d[:-1] + d[1:]) / 2.0
        return w


@dataclass(frozen=True, eq=False)
class ComponentData:
    """Observations of one component: row i of ``values`` is observation i.

    ``grid`` is present iff the component is functional, in which case the
    number of columns equals the grid length.
    """

    values: np.ndarray
    grid: FunctionalGrid | None = None

    def __post_init__(self):
        vals = _readonly_f64(self.values, "component values", ndim=2)
        if vals.shape[0] < 1:
            raise InvalidInputError("component needs at least one observation")
        if self.grid is not None and vals.shape[1] != len(self.grid):
            raise InvalidInputError(
                f"component has {vals.shape[1]} columns but its grid has {len(self.grid)} points"
            )
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True, eq=False)
class Sample:
    """d >= 2 components observed jointly, all with the same number of rows."""

    components: tuple[ComponentData, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 2:
            raise InvalidInputError(f"a sample needs d >= 2 components, got {len(comps)}")
        n = comps[0].n
        for k, comp in enumerate(comps):
            if comp.n != n:
                raise InvalidInputError(
                    f"component {k + 1} has {comp.n} observations, component 1 has {n}"
                )
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return self.components[0].n

    @property
    def d(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class KernelSpec:
    """Per-component kernel choice.

    ``gaussian`` computes exp(-eta_sq * D2) where D2 is the squared Euclidean
    distance (vector data) or the trapezoid-quadrature squared L2 distance
    (functional data, ``quadrature="trapezoid"``). ``linear`` computes plain
    inner products and takes no parameters.
    """

    kind: str
    eta_sq: float | None = None
    quadrature: str = NO_QUADRATURE

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, LINEAR):
            raise ConfigurationError(f"unknown kernel kind {self.kind!r}")
        if self.quadrature not in (TRAPEZOID, NO_QUADRATURE):
            raise ConfigurationError(f"unknown quadrature mode {self.quadrature!r}")
        if self.kind == GAUSSIAN:
            if self.eta_sq is None or not math.isfinite(self.eta_sq) or self.eta_sq <= 0:
                raise ConfigurationError(f"gaussian kernel needs eta_sq > 0, got {self.eta_sq!r}")
        else:
            if self.eta_sq is not None:
                raise ConfigurationError("linear kernel takes no eta_sq")
            if self.quadrature != NO_QUADRATURE:
                raise ConfigurationError("linear kernel does not support quadrature")

    @classmethod
    def gaussian(cls, eta_sq: float, quadrature: str = NO_QUADRATURE) -> "KernelSpec":
        return cls(GAUSSIAN, eta_sq=float(eta_sq), quadrature=quadrature)

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(LINEAR)


@dataclass(frozen=True, eq=False)
class GramStack:
    """d symmetric n x n kernel matrices, the single input to all estimators."""

    grams: tuple[np.ndarray, ...]

    def __post_init__(self):
        grams = tuple(self.grams)
        if not grams:
            raise InvalidInputError("GramStack needs at least one matrix")
        n = None
        frozen = []
        for k, g in enumerate(grams):
            arr = _readonly_f64(g, f"gram {k + 1}", ndim=2)
            if arr.shape[0] != arr.shape[1]:
                raise InvalidInputError(f"gram {k + 1} is not square: shape {arr.shape}")
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise InvalidInputError(f"gram {k + 1} is {arr.shape[0]}x{arr.shape[0]}, expected {n}x{n}")
            if not np.allclose(arr, arr.T, rtol=1e-12, atol=0.0):
                raise InvalidInputError(f"gram {k + 1} is not symmetric within 1e-12 relative tolerance")
            frozen.append(arr)
        object.__setattr__(self, "grams", tuple(frozen))

    @property
    def n(self) -> int:
        return int(self.grams[0].shape[0])

    @property
    def d(self) -> int:
        return len(self.grams)


def squared_l2_distance_trapezoid(f, g, grid: FunctionalGrid) -> float:
    """Trapezoidal-rule approximation of the squared L2 distance between two curves.

    Evaluates sum_m ((t_{m+1}-t_m)/2) * ((f_m-g_m)^2 + (f_{m+1}-g_{m+1})^2)
    over the grid panels. Symmetric in (f, g); zero iff f equals g pointwise
    on the grid.
    """
    fv = np.asarray(f, dtype=np.float64)
    gv = np.asarray(g, dtype=np.float64)
    r = len(grid)
    if fv.shape != (r,) or gv.shape != (r,):
        raise InvalidInputError(
            f"curve lengths {fv.shape} and {gv.shape} do not match the {r}-point grid"
        )
    u2 = (fv - gv) ** 2
    half_steps = np.diff(grid.points) / 2.0
    return float(np.sum(half_steps * (u2[:-1] + u2[1:])))


def _pairwise_sq_dists(values: np.ndarray, weights: np.ndarray | None) -> np.ndarray:
    # ||y_i||^2 + ||y_j||^2 - 2 <y_i, y_j> on (optionally) quadrature-scaled rows;
    # only i <= j is kept and mirrored, so the result is exactly symmetric.
    y = values if weights is None else values * np.sqrt(weights)
    sq = np.einsum("ij,ij->i", y, y)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    upper = np.triu(d2, k=1)
    d2 = upper + upper.T
    np.maximum(d2, 0.0, out=d2)
    return d2


def gaussian_gram(data: ComponentData, spec: KernelSpec) -> np.ndarray:
    """Gaussian Gram matrix exp(-eta_sq * D2) with exact symmetry and unit diagonal.

    With trapezoid quadrature, D2(i, j) equals
    :func:`squared_l2_distance_trapezoid` of rows i and j up to float
    reordering; otherwise it is the squared Euclidean distance.
    """
    if spec.kind != GAUSSIAN:
        raise ConfigurationError(f"gaussian_gram called with kernel kind {spec.kind!r}")
    if spec.quadrature == TRAPEZOID:
        if data.grid is None:
            raise ConfigurationError("trapezoid quadrature requires a functional grid")
        weights = data.grid.trapezoid_weights()
    else:
        weights = None
    d2 = _pairwise_sq_dists(data.values, weights)
    return np.exp(-spec.eta_sq * d2)


def linear_gram(data: ComponentData) -> np.ndarray:
    """Gram matrix of Euclidean inner products between observation rows."""
    g = data.values @ data.values.T
    upper = np.triu(g)
    return upper + np.triu(g, k=1).T


def build_gram_stack(sample: Sample, specs) -> GramStack:
    """Build one Gram matrix per component and assemble the stack.

    ``specs`` must contain exactly one :class:`KernelSpec` per component.
    """
    specs = tuple(specs)
    if len(specs) != sample.d:
        raise ConfigurationError(
            f"got {len(specs)} kernel specs for {sample.d} components"
        )
    grams = []
    for comp, spec in zip(sample.components, specs):
        if spec.kind == GAUSSIAN:
            grams.append(gaussian_gram(comp, spec))
        else:
            grams.append(linear_gram(comp))
    return GramStack(tuple(grams))


def read_component_csv(path) -> ComponentData:
    """Read one component from a CSV file.

    Rows are observations; columns are grid points or vector coordinates.
    When the first row is all-numeric, strictly increasing and followed by at
    least one further row, it is taken as a grid header of abscissae and the
    component is functional. Parsing is locale-independent (period decimal
    separator). Note the inherent format ambiguity: a headerless data file
    whose first row happens to be strictly increasing reads as functional.
    """
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for line_no, record in enumerate(csv.reader(fh), start=1):
            if not record:
                continue
            try:
                rows.append([float(cell) for cell in record])
            except ValueError:
                bad = next(c for c in record if not _is_float(c))
                raise InvalidInputError(
                    f"{path}: non-numeric cell {bad!r} on line {line_no}"
                ) from None
    if not rows:
        raise InvalidInputError(f"{path}: file contains no data")
    width = len(rows[0])
    for line_no, row in enumerate(rows, start=1):
        if len(row) != width:
            raise InvalidInputError(
                f"{path}: row {line_no} has {len(row)} cells, expected {width}"
            )
    first = np.asarray(rows[0], dtype=np.float64)
    grid = None
    if len(rows) > 1 and width >= 2 and np.all(np.diff(first) > 0):
        grid = FunctionalGrid(first)
        rows = rows[1:]
    return ComponentData(np.asarray(rows, dtype=np.float64), grid=grid)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def write_component_csv(path, data: ComponentData) -> None:
    """Write a component as CSV with full round-trip decimal precision.

    Functional components get their grid as the header row, so the file
    reads back identically through :func:`read_component_csv`.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if data.grid is not None:
            writer.writerow([repr(float(t)) for t in data.grid.points])
        for row in data.values:
            writer.writerow([repr(float(v)) for v in row])
