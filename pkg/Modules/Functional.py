# Functional.py
# Version: 1.0
# Energy functionals of the dual (v = G(u)) formulation, their gradients,
# the comparison functionals P_inf / Q_inf, the dilation energy, and the
# mountain-pass geometry check.
#
# Conventions: arrays are nodal vectors on a RadialGrid; the gradient is the
# strong-form residual, i.e. the Riesz representative under the quadrature
# inner product <a, b> = sum_i w_i a_i b_i, so that
#     d/de J(v + e psi)|_{e=0} = <grad J(v), psi>
# for every psi vanishing at R.

import math
import os
import sys
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

repo_home_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(repo_home_path)

from Modules.Definitions import ConfigurationError, DomainError, ModelKind
from Modules.Logger import Logger
from Modules.RadialGrid import Field, PotentialSpec, RadialGrid, potential_eval
from Modules.Transforms import ModelSpec, transform_table


@dataclass
class EnergyReport:
    """
    j_value            J_kappa(v) (J-tilde for the saturable model)
    i_value            I_kappa(u) evaluated directly on u = G^{-1}(v)
    grad_norm          H1 (dual) norm of the gradient
    mp_level           mountain-pass level estimate c_kappa
    comparison_level   d_inf estimate from P_inf / Q_inf along the solution ray
    descent_tol        tolerance the solver was asked to reach
    """
    j_value: float
    i_value: float
    grad_norm: float
    mp_level: float
    comparison_level: Optional[float] = None
    descent_tol: float = 1e-8

    def to_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "EnergyReport":
        return cls(**{key: data.get(key) for key in cls.__dataclass_fields__ if key in data})


@dataclass
class GeometryCheck:
    rho: float
    a0: float
    directions: int
    endpoint_scale: float
    endpoint_energy: float


def bump_profile(grid: RadialGrid, support: float) -> np.ndarray:
    """phi(r) = exp(1 - 1/(1 - (r/support)^2)) on r < support, 0 outside; phi(0) = 1."""
    support = min(support, 0.95 * grid.radius)
    s = grid.r / support
    inside = s < 1.0
    values = np.zeros(grid.nodes)
    values[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    values[-1] = 0.0
    return values


class EnergyFunctional:
    """
    J(v) = 1/2 int |grad v|^2 + 1/2 int V u^2 - int L(u),  u = G^{-1}(v)

    with L(t) = |t|^q/q (power model) or F(t) (saturable model). One instance
    per (ModelSpec, PotentialSpec, RadialGrid); all methods are pure.
    """

    def __init__(self, spec: ModelSpec, potential: PotentialSpec, grid: RadialGrid):
        self.spec = spec
        self.potential = potential
        self.grid = grid
        self.table = transform_table(spec)
        self.V = potential_eval(potential, grid, spec.model).values
        self.v_infty = potential.v_infty
        self.logger = Logger()

    # ----------------------------------------------------------------
    # Energy and its pieces
    # ----------------------------------------------------------------
    def recover(self, v: np.ndarray) -> np.ndarray:
        return self.table.G_inverse(v)

    def parts(self, v: np.ndarray, u: Optional[np.ndarray] = None) -> Tuple[float, float, float]:
        """(int |grad v|^2, int V u^2, int L(u))."""
        if u is None:
            u = self.recover(v)
        _, primitive = self.table.nonlinearity(u)
        grid = self.grid
        return (grid.gradient_squared(v),
                grid.integrate_values(self.V * u * u),
                grid.integrate_values(primitive))

    def energy(self, v: np.ndarray) -> float:
        gradient_term, mass_term, nonlinear_term = self.parts(v)
        return 0.5 * gradient_term + 0.5 * mass_term - nonlinear_term

    def energy_at_infinity(self, v: np.ndarray) -> float:
        u = self.recover(v)
        _, primitive = self.table.nonlinearity(u)
        grid = self.grid
        return (0.5 * grid.gradient_squared(v)
                + 0.5 * self.v_infty * grid.integrate_values(u * u)
                - grid.integrate_values(primitive))

    def original_energy(self, u: np.ndarray) -> float:
        """I(u) = 1/2 int g(u)^2 |grad u|^2 + 1/2 int V u^2 - int L(u), differenced directly in u."""
        grid = self.grid
        midpoint = 0.5 * (u[1:] + u[:-1])
        diff = np.diff(u)
        g_mid = self.table.g(midpoint)
        gradient_term = float(np.dot(grid.edge_weights, g_mid * g_mid * diff * diff) / grid.spacing)
        _, primitive = self.table.nonlinearity(u)
        return 0.5 * gradient_term + 0.5 * grid.integrate_values(self.V * u * u) - grid.integrate_values(primitive)

    # ----------------------------------------------------------------
    # Gradient, preconditioner, Jacobian
    # ----------------------------------------------------------------
    def reaction(self, u: np.ndarray) -> np.ndarray:
        """(V u - l(u)) / g(u): the zeroth-order part of the transformed equation."""
        l_value, _ = self.table.nonlinearity(u)
        return (self.V * u - l_value) / self.table.g(u)

    def gradient(self, v: np.ndarray, u: Optional[np.ndarray] = None) -> np.ndarray:
        if u is None:
            u = self.recover(v)
        grad = -self.grid.apply_laplacian(v) + self.reaction(u)
        grad[-1] = 0.0
        return grad

    def precondition(self, grad: np.ndarray) -> np.ndarray:
        """d = (-Laplacian + V)^{-1} grad, the H1 Riesz representative."""
        rhs = grad.copy()
        rhs[-1] = 0.0
        return self.grid.solve_shifted(self.V, rhs)

    def gradient_norm(self, v: np.ndarray, grad: Optional[np.ndarray] = None) -> float:
        if grad is None:
            grad = self.gradient(v)
        direction = self.precondition(grad)
        return math.sqrt(max(self.grid.inner(direction, grad), 0.0))

    def reaction_derivative(self, u: np.ndarray) -> np.ndarray:
        """d/dv [(V u - l(u))/g(u)] with du/dv = 1/g(u)."""
        g = self.table.g(u)
        g_prime = self.table.g_prime(u)
        l_value, _ = self.table.nonlinearity(u)
        l_prime = self.table.nonlinearity_prime(u)
        return ((self.V - l_prime) * g - (self.V * u - l_value) * g_prime) / g ** 3

    def h1_norm(self, v: np.ndarray) -> float:
        return math.sqrt(self.grid.h1_norm_squared(v, self.V))

    # ----------------------------------------------------------------
    # Comparison functionals
    # ----------------------------------------------------------------
    def energy_P_infty(self, v: np.ndarray) -> float:
        grid = self.grid
        q = self.spec.q
        return (3.0 * (grid.gradient_squared(v) + self.v_infty * grid.integrate_values(v * v))
                - grid.integrate_values(np.abs(v) ** q) / q)

    def energy_Q_infty(self, v: np.ndarray) -> float:
        grid = self.grid
        _, primitive = self.table.nonlinearity(v)
        return (0.5 * grid.gradient_squared(v)
                + 4.5 * self.v_infty * grid.integrate_values(v * v)
                - grid.integrate_values(primitive))

    def comparison_level(self, v: np.ndarray) -> float:
        """
        max_{t >= 0} P_inf(t v) (power model, closed form) or Q_inf(t v)
        (saturable model, bounded scalar search). Since J <= P_inf / Q_inf
        pointwise, this bounds the mountain-pass level from above.
        """
        grid = self.grid
        if not np.any(v):
            return 0.0
        if self.spec.model is ModelKind.POWER_Q:
            q = self.spec.q
            quadratic = grid.gradient_squared(v) + self.v_infty * grid.integrate_values(v * v)
            power = grid.integrate_values(np.abs(v) ** q)
            t_star = (6.0 * quadratic / power) ** (1.0 / (q - 2.0))
            return 3.0 * quadratic * t_star ** 2 * (1.0 - 2.0 / q)
        return ray_maximum(lambda t: self.energy_Q_infty(t * v))[0]

    def dilation(self, v: np.ndarray, t: float) -> float:
        """J_{kappa,inf}(v(./t)) through the scaling identities."""
        if not t > 0.0:
            raise DomainError(f"dilation parameter must be positive, got {t}")
        grid = self.grid
        dim = grid.dim
        u = self.recover(v)
        _, primitive = self.table.nonlinearity(u)
        return (t ** (dim - 2) * 0.5 * grid.gradient_squared(v)
                + t ** dim * (0.5 * self.v_infty * grid.integrate_values(u * u) - grid.integrate_values(primitive)))

    def pohozaev(self, v: np.ndarray) -> Tuple[float, float]:
        """(identity value, int |grad v|^2) for ((N-2)/2N) int|grad v|^2 + V_inf/2 int u^2 - int L(u)."""
        grid = self.grid
        dim = grid.dim
        u = self.recover(v)
        _, primitive = self.table.nonlinearity(u)
        gradient_term = grid.gradient_squared(v)
        value = ((dim - 2.0) / (2.0 * dim) * gradient_term
                 + 0.5 * self.v_infty * grid.integrate_values(u * u)
                 - grid.integrate_values(primitive))
        return value, gradient_term


def ray_maximum(energy_on_ray, samples: int = 64, max_doublings: int = 60) -> Tuple[float, float]:
    """
    Maximize t -> energy_on_ray(t) over t >= 0, where the function vanishes
    at 0 and tends to -inf. Returns (max value, argmax).
    """
    upper = 1.0
    for _ in range(max_doublings):
        if energy_on_ray(upper) < 0.0:
            break
        upper *= 2.0
    ts = np.linspace(0.0, upper, samples)
    values = np.array([energy_on_ray(t) for t in ts])
    k = int(np.argmax(values))
    lo = ts[max(k - 1, 0)]
    hi = ts[min(k + 1, samples - 1)]
    best_t, best_value = ts[k], values[k]
    if hi > lo:
        result = minimize_scalar(lambda t: -energy_on_ray(t), bounds=(lo, hi), method="bounded",
                                 options={"xatol": 1e-10 * max(1.0, hi)})
        if -result.fun > best_value:
            best_t, best_value = float(result.x), float(-result.fun)
    return float(best_value), float(best_t)


@lru_cache(maxsize=32)
def energy_functional(spec: ModelSpec, potential: PotentialSpec, grid: RadialGrid) -> EnergyFunctional:
    return EnergyFunctional(spec, potential, grid)


# --------------------------------------------------------------------
# Field-level operations
# --------------------------------------------------------------------
def energy_J(v: Field, spec: ModelSpec, potential: PotentialSpec) -> float:
    if spec.model is ModelKind.SATURABLE:
        raise ConfigurationError("energy_J is defined for the power model; use energy_J_tilde", field="model")
    return energy_functional(spec, potential, v.grid).energy(v.values)


def energy_J_tilde(v: Field, spec: ModelSpec, potential: PotentialSpec) -> float:
    if spec.model is not ModelKind.SATURABLE:
        raise ConfigurationError("energy_J_tilde is defined for the saturable model; use energy_J", field="model")
    return energy_functional(spec, potential, v.grid).energy(v.values)


def model_energy(v: Field, spec: ModelSpec, potential: PotentialSpec) -> float:
    """J_kappa or J-tilde_kappa, whichever the model calls for."""
    return energy_functional(spec, potential, v.grid).energy(v.values)


def grad_J(v: Field, spec: ModelSpec, potential: PotentialSpec) -> Field:
    return Field(v.grid, energy_functional(spec, potential, v.grid).gradient(v.values))


def energy_P_infty(v: Field, spec: ModelSpec, potential: PotentialSpec) -> float:
    return energy_functional(spec, potential, v.grid).energy_P_infty(v.values)


def energy_Q_infty(v: Field, spec: ModelSpec, potential: PotentialSpec) -> float:
    return energy_functional(spec, potential, v.grid).energy_Q_infty(v.values)


def energy_J_infty(v: Field, spec: ModelSpec, potential: PotentialSpec) -> float:
    return energy_functional(spec, potential, v.grid).energy_at_infinity(v.values)


def dilation_energy(v: Field, t: float, spec: ModelSpec, potential: PotentialSpec) -> float:
    return energy_functional(spec, potential, v.grid).dilation(v.values, t)


def comparison_level(v: Field, spec: ModelSpec, potential: PotentialSpec) -> float:
    return energy_functional(spec, potential, v.grid).comparison_level(v.values)


def h1_norm(v: Field, spec: ModelSpec, potential: PotentialSpec) -> float:
    return energy_functional(spec, potential, v.grid).h1_norm(v.values)


def mountain_pass_geometry(spec: ModelSpec, potential: PotentialSpec, grid: RadialGrid,
                           rho: float = 0.1, bump_support: float = 4.0) -> GeometryCheck:
    """
    Measure the two halves of the mountain-pass geometry: the smallest
    energy over a family of directions scaled to ||v|| = rho, and a scale
    t for which J(t phi) < 0 along the bump phi.
    """
    functional = energy_functional(spec, potential, grid)
    r = grid.r
    directions: List[np.ndarray] = [bump_profile(grid, bump_support)]
    for center in (0.0, 1.0, 2.0, 4.0):
        for width in (0.5, 1.0, 2.0, 4.0):
            profile = np.exp(-((r - center) / width) ** 2)
            profile[-1] = 0.0
            directions.append(profile)
    energies = []
    for profile in directions:
        scaled = profile * (rho / functional.h1_norm(profile))
        energies.append(functional.energy(scaled))
    a0 = float(min(energies))

    phi = directions[0]
    scale = 1.0
    endpoint_energy = functional.energy(phi)
    for _ in range(60):
        if endpoint_energy < 0.0:
            break
        scale *= 2.0
        endpoint_energy = functional.energy(scale * phi)
    functional.logger.debug(f"Mountain-pass geometry: rho={rho:g}, a0={a0:.6e}, "
                            f"J({scale:g} phi)={endpoint_energy:.6e}")
    return GeometryCheck(rho=rho, a0=a0, directions=len(directions),
                         endpoint_scale=scale, endpoint_energy=float(endpoint_energy))
