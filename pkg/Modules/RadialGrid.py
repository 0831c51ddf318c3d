# RadialGrid.py
# Version: 1.0
# Radial discretization of R^N-radial functions on [0, R].
#
# Nodes r_i = i h, h = R/(n-1). Integrals use the trapezoid rule against
# omega_{N-1} r^{N-1} dr. The Laplacian is written in flux form with edge
# weights b_{i+1/2} = omega (r_i r_{i+1})^{(N-1)/2}, so that
#
#     integrate(u * laplacian(v)) = -sum_i b_{i+1/2} (u_{i+1}-u_i)(v_{i+1}-v_i) / h
#
# holds exactly for fields vanishing at R. In N = 3 the interior stencil is
# the central-difference form of v'' + (N-1)/r v'.

import math
import os
import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import gamma

repo_home_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(repo_home_path)

from Modules.Definitions import ConfigurationError, ModelKind, NumericalError, PotentialShape

MIN_NODES = 16
POTENTIAL_TAIL_TOLERANCE = 1e-8


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in R^dim."""
    return 2.0 * math.pi ** (dim / 2.0) / gamma(dim / 2.0)


@dataclass(frozen=True)
class RadialGrid:
    dim: int = 3
    radius: float = 24.0
    nodes: int = 2001

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 3:
            raise ConfigurationError(f"grid dimension must be an integer >= 3, got {self.dim}", field="dim")
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ConfigurationError(f"grid radius must be positive, got {self.radius}", field="radius")
        if int(self.nodes) != self.nodes or self.nodes < MIN_NODES:
            raise ConfigurationError(f"grid needs at least {MIN_NODES} nodes, got {self.nodes}", field="nodes")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "nodes", int(self.nodes))

    @property
    def spacing(self) -> float:
        return self.radius / (self.nodes - 1)

    @cached_property
    def r(self) -> np.ndarray:
        return np.linspace(0.0, self.radius, self.nodes)

    @cached_property
    def omega(self) -> float:
        return sphere_area(self.dim)

    @cached_property
    def quad_weights(self) -> np.ndarray:
        weights = self.omega * self.r ** (self.dim - 1) * self.spacing
        weights[-1] *= 0.5
        return weights

    @cached_property
    def edge_weights(self) -> np.ndarray:
        """b_{i+1/2} for i = 0..n-2."""
        r = self.r
        return self.omega * (r[:-1] * r[1:]) ** ((self.dim - 1) / 2.0)

    @cached_property
    def laplacian_bands(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        (lower, diag, upper) of the discrete Laplacian; lower[i] multiplies
        v[i-1] and upper[i] multiplies v[i+1]. Row 0 is the ghost-node
        reflection 2N (v1 - v0)/h^2; the boundary row is zero.
        """
        n, h = self.nodes, self.spacing
        b = self.edge_weights
        lower = np.zeros(n)
        upper = np.zeros(n)
        interior_weight = self.omega * self.r[1:-1] ** (self.dim - 1) * h
        lower[1:-1] = b[:-1] / (h * interior_weight)
        upper[1:-1] = b[1:] / (h * interior_weight)
        upper[0] = 2.0 * self.dim / (h * h)
        diag = -(lower + upper)
        diag[-1] = 0.0
        return lower, diag, upper

    # ----------------------------------------------------------------
    # Array-level kernels
    # ----------------------------------------------------------------
    def apply_laplacian(self, values: np.ndarray) -> np.ndarray:
        lower, diag, upper = self.laplacian_bands
        out = diag * values
        out[1:] += lower[1:] * values[:-1]
        out[:-1] += upper[:-1] * values[1:]
        return out

    def integrate_values(self, values: np.ndarray) -> float:
        return float(np.dot(self.quad_weights, values))

    def gradient_squared(self, values: np.ndarray) -> float:
        """Discrete integral of |grad v|^2 over the ball."""
        diff = np.diff(values)
        return float(np.dot(self.edge_weights, diff * diff) / self.spacing)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.dot(self.quad_weights, a * b))

    def lp_norm(self, values: np.ndarray, p: float) -> float:
        if math.isinf(p):
            return float(np.max(np.abs(values)))
        return self.integrate_values(np.abs(values) ** p) ** (1.0 / p)

    def h1_norm_squared(self, values: np.ndarray, potential: np.ndarray) -> float:
        """||v||^2 = int |grad v|^2 + int V v^2."""
        return self.gradient_squared(values) + self.integrate_values(potential * values * values)

    def solve_shifted(self, shift: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """
        Solve (-Laplacian + diag(shift)) x = rhs with x[-1] = rhs[-1]
        (identity boundary row). Used both as the H1 preconditioner
        (shift = V) and for the Newton Jacobian.
        """
        lower, diag, upper = self.laplacian_bands
        n = self.nodes
        ab = np.zeros((3, n))
        ab[0, 1:] = -upper[:-1]
        ab[1, :] = -diag + shift
        ab[2, :-1] = -lower[1:]
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        try:
            return solve_banded((1, 1), ab, rhs)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"tridiagonal solve failed: {exc}") from exc

    def interpolate_from(self, other: "RadialGrid", values: np.ndarray) -> np.ndarray:
        """Linear interpolation of a nodal vector on ``other`` onto this grid (zero beyond other.radius)."""
        if other == self:
            return np.array(values, dtype=float)
        out = np.interp(self.r, other.r, values, right=0.0)
        out[-1] = 0.0
        return out

    def node_index(self, radius: float) -> int:
        return int(min(self.nodes - 1, max(0, round(radius / self.spacing))))

    def doubled(self) -> "RadialGrid":
        """Same spacing, twice the radius."""
        return RadialGrid(dim=self.dim, radius=2.0 * self.radius, nodes=2 * (self.nodes - 1) + 1)


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values of a radial function (v, u or a test direction) on a RadialGrid."""
    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.nodes,):
            raise ValueError(f"field has shape {values.shape}, grid expects ({self.grid.nodes},)")
        if not np.all(np.isfinite(values)):
            raise NumericalError("field contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "Field":
        return cls(grid, np.zeros(grid.nodes))

    @classmethod
    def from_function(cls, grid: RadialGrid, function: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, function(grid.r))

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def with_boundary_clamp(self) -> "Field":
        values = self.values.copy()
        values[-1] = 0.0
        return Field(self.grid, values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __mul__(self, other):
        other_values = other.values if isinstance(other, Field) else other
        return Field(self.grid, self.values * other_values)

    __rmul__ = __mul__


@dataclass(frozen=True)
class PotentialSpec:
    """
    V(r) = v_infty (Constant) or v_infty - depth * exp(-(r/width)^2)
    (GaussianWell). The implied lower bound is v0 = v_infty - depth.
    """
    v_infty: float = 1.0
    shape: PotentialShape = PotentialShape.CONSTANT
    depth: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if not isinstance(self.shape, PotentialShape):
            object.__setattr__(self, "shape", PotentialShape.from_text(str(self.shape)))
        object.__setattr__(self, "v_infty", float(self.v_infty))
        object.__setattr__(self, "depth", float(self.depth))
        object.__setattr__(self, "width", float(self.width))
        if not self.v_infty > 0.0:
            raise ConfigurationError(f"v_infty must be positive, got {self.v_infty}", field="v_infty")
        if self.shape is PotentialShape.GAUSSIAN_WELL:
            if not (0.0 <= self.depth < self.v_infty):
                raise ConfigurationError(
                    f"well depth must lie in [0, v_infty) so that V >= V0 > 0, got {self.depth}", field="depth")
            if not self.width > 0.0:
                raise ConfigurationError(f"well width must be positive, got {self.width}", field="width")

    @property
    def is_constant(self) -> bool:
        return self.shape is PotentialShape.CONSTANT or self.depth == 0.0

    @property
    def v0(self) -> float:
        if self.shape is PotentialShape.CONSTANT:
            return self.v_infty
        return self.v_infty - self.depth

    def value_at(self, r):
        if self.shape is PotentialShape.CONSTANT:
            return np.full_like(np.asarray(r, dtype=float), self.v_infty) if np.ndim(r) else self.v_infty
        return self.v_infty - self.depth * np.exp(-(np.asarray(r, dtype=float) / self.width) ** 2)

    def check_model(self, model: ModelKind):
        if model is ModelKind.SATURABLE and self.v0 < 1.0:
            raise ConfigurationError(
                f"saturable model requires V >= V0 >= 1, got V0 = {self.v0}", field="v_infty")


def laplacian_apply(v: Field) -> Field:
    return Field(v.grid, v.grid.apply_laplacian(v.values))


def integrate(w: Field) -> float:
    return w.grid.integrate_values(w.values)


def potential_eval(spec: PotentialSpec, grid: RadialGrid, model: Optional[ModelKind] = None) -> Field:
    if model is not None:
        spec.check_model(model)
    values = np.asarray(spec.value_at(grid.r), dtype=float)
    if abs(values[-1] - spec.v_infty) > POTENTIAL_TAIL_TOLERANCE:
        raise ConfigurationError(
            f"V(R) = {values[-1]:.10g} differs from v_infty by more than {POTENTIAL_TAIL_TOLERANCE:g}; "
            f"increase the radius or narrow the well", field="radius")
    return Field(grid, values)
