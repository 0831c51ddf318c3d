# ShootingOracle.py
# Version: 1.0
# Independent reference profile for radial solutions, found by shooting on
# the central amplitude u(0) = a.
#
# The radial ODE is integrated in the physical variable u, which avoids
# evaluating G^{-1} inside the right-hand side:
#
#     u'' = (V u - l(u) - g(u) g'(u) u'^2) / g(u)^2 - (N-1)/r u'
#
# with u''(0) = (V(0) a - l(a)) / (N g(a)^2). A trajectory that crosses
# zero overshoots (a too large); one that turns back up before crossing
# undershoots (a too small). Bisection on a between the two behaviours
# converges to the decaying ground state.

import math
import os
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

repo_home_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(repo_home_path)

from Modules.Logger import Logger
from Modules.RadialGrid import Field, PotentialSpec, RadialGrid
from Modules.Transforms import ModelSpec, transform_table

OVERSHOOT = "overshoot"
UNDERSHOOT = "undershoot"

START_RADIUS = 1e-6
MAX_BISECTIONS = 60
MAX_BRACKET_DOUBLINGS = 40
AMPLITUDE_RTOL = 1e-14


@dataclass
class Trajectory:
    amplitude: float
    behaviour: str
    end_radius: float
    solution: Optional[object] = field(default=None, repr=False)


@dataclass
class ShootingResult:
    v: Field
    u: Field
    amplitude: float
    converged: bool
    iterations: int
    end_radius: float
    bracket: Tuple[float, float]
    message: str = ""


class ShootingOracle:
    def __init__(self, model_spec: ModelSpec, potential: PotentialSpec, grid: RadialGrid,
                 rtol: float = 1e-10, atol: float = 1e-12):
        self.model_spec = model_spec
        self.potential = potential
        self.grid = grid
        self.table = transform_table(model_spec)
        self.rtol = rtol
        self.atol = atol
        self.logger = Logger()
        self.dim = grid.dim

    def _potential(self, r: float) -> float:
        return float(self.potential.value_at(r))

    def central_curvature(self, amplitude: float) -> float:
        g, _, l_value = self.table.scalar_terms(amplitude)
        return (self._potential(0.0) * amplitude - l_value) / (self.dim * g * g)

    def _rhs(self, r, y):
        u, du = y
        g, g_prime, l_value = self.table.scalar_terms(u)
        d2u = (self._potential(r) * u - l_value - g * g_prime * du * du) / (g * g) - (self.dim - 1.0) / r * du
        return [du, d2u]

    def shoot(self, amplitude: float) -> Trajectory:
        curvature = self.central_curvature(amplitude)
        if curvature >= 0.0:
            return Trajectory(amplitude, UNDERSHOOT, 0.0)

        def crosses_zero(r, y):
            return y[0]
        crosses_zero.terminal = True
        crosses_zero.direction = -1

        def turns_up(r, y):
            return y[1]
        turns_up.terminal = True
        turns_up.direction = 1

        r0 = START_RADIUS
        y0 = [amplitude + 0.5 * curvature * r0 * r0, curvature * r0]
        solution = solve_ivp(self._rhs, (r0, self.grid.radius), y0, method="DOP853",
                             rtol=self.rtol, atol=self.atol, events=(crosses_zero, turns_up),
                             dense_output=True)
        if solution.t_events[0].size:
            return Trajectory(amplitude, OVERSHOOT, float(solution.t_events[0][0]), solution)
        if solution.t_events[1].size:
            return Trajectory(amplitude, UNDERSHOOT, float(solution.t_events[1][0]), solution)
        # stayed positive and decreasing up to R
        return Trajectory(amplitude, UNDERSHOOT, float(solution.t[-1]), solution)

    def bracket(self) -> Tuple[Trajectory, Trajectory]:
        amplitude = 0.5
        low = self.shoot(amplitude)
        while low.behaviour == OVERSHOOT and amplitude > 1e-8:
            amplitude *= 0.5
            low = self.shoot(amplitude)
        high = low
        for _ in range(MAX_BRACKET_DOUBLINGS):
            amplitude *= 2.0
            high = self.shoot(amplitude)
            if high.behaviour == OVERSHOOT:
                break
            low = high
        return low, high

    def run(self) -> ShootingResult:
        low, high = self.bracket()
        grid = self.grid
        if low.behaviour != UNDERSHOOT or high.behaviour != OVERSHOOT:
            message = (f"no sign change in amplitude bracket [{low.amplitude:g}, {high.amplitude:g}]; "
                       f"oracle inconclusive")
            self.logger.warning(message)
            zeros = Field.zeros(grid)
            return ShootingResult(zeros, zeros, float("nan"), False, 0, 0.0,
                                  (low.amplitude, high.amplitude), message)

        iterations = 0
        while iterations < MAX_BISECTIONS and high.amplitude - low.amplitude > AMPLITUDE_RTOL * high.amplitude:
            middle = self.shoot(0.5 * (low.amplitude + high.amplitude))
            if middle.behaviour == OVERSHOOT:
                high = middle
            else:
                low = middle
            iterations += 1

        converged = high.amplitude - low.amplitude <= AMPLITUDE_RTOL * high.amplitude * 4.0
        u = self.sample(low, high)
        v = self.table.G(u)
        message = f"amplitude {low.amplitude:.15g} after {iterations} bisections, profile resolved to r = {self.resolved_radius(low, high):.4g}"
        self.logger.info(f"Shooting oracle: {message}")
        return ShootingResult(Field(grid, v), Field(grid, u), low.amplitude, converged, iterations,
                              self.resolved_radius(low, high), (low.amplitude, high.amplitude), message)

    @staticmethod
    def resolved_radius(low: Trajectory, high: Trajectory) -> float:
        return min(low.end_radius, high.end_radius)

    def sample(self, low: Trajectory, high: Trajectory) -> np.ndarray:
        """
        Profile on the grid: the undershooting trajectory up to the radius
        where either bracketing trajectory leaves the ground state, zero
        beyond it and at R.
        """
        r = self.grid.r
        end = self.resolved_radius(low, high)
        u = np.zeros(self.grid.nodes)
        u[0] = low.amplitude
        inside = (r > 0.0) & (r <= end)
        if low.solution is not None and np.any(inside):
            radii = np.maximum(r[inside], START_RADIUS)
            u[inside] = low.solution.sol(radii)[0]
        u = np.maximum(u, 0.0)
        u[-1] = 0.0
        return u


def shooting_oracle(model_spec: ModelSpec, potential: PotentialSpec, grid: RadialGrid) -> ShootingResult:
    return ShootingOracle(model_spec, potential, grid).run()
