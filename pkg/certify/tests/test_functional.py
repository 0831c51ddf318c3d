import unittest

import numpy as np
from numpy.testing import assert_allclose

from Modules.Definitions import ConfigurationError, DomainError, ModelKind
from Modules.Functional import (
    EnergyReport,
    comparison_level,
    dilation_energy,
    energy_J,
    energy_J_infty,
    energy_J_tilde,
    energy_P_infty,
    energy_Q_infty,
    energy_functional,
    grad_J,
    model_energy,
    mountain_pass_geometry,
    ray_maximum,
)
from Modules.MountainPassSolver import SolverConfig, mountain_pass_solve
from Modules.RadialGrid import Field, PotentialSpec, RadialGrid
from Modules.Transforms import ModelSpec

GRID = RadialGrid(dim=3, radius=16.0, nodes=801)
POWER = ModelSpec(model=ModelKind.POWER_Q, kappa=0.05, q=3.0)
SATURABLE = ModelSpec(model=ModelKind.SATURABLE, kappa=0.1, q=2.5)
CONSTANT = PotentialSpec(v_infty=1.0)
WELL = PotentialSpec(v_infty=1.5, shape="gaussian_well", depth=0.4, width=1.5)


def profile(amplitude=2.0, width=2.0):
    values = amplitude * np.exp(-(GRID.r / width) ** 2)
    values[-1] = 0.0
    return values


def direction():
    values = GRID.r * np.exp(-GRID.r / 3.0)
    values[-1] = 0.0
    return values


class GradientConsistencyTests(unittest.TestCase):
    """Directional derivatives of J agree with <grad J, psi> in the quadrature inner product."""

    def check(self, spec, potential, v):
        functional = energy_functional(spec, potential, GRID)
        psi = direction()
        eps = 1e-6
        numerical = (functional.energy(v + eps * psi) - functional.energy(v - eps * psi)) / (2.0 * eps)
        analytic = GRID.inner(functional.gradient(v), psi)
        self.assertAlmostEqual(numerical, analytic, delta=1e-6 * max(1.0, abs(analytic)))

    def test_power_model(self):
        self.check(POWER, CONSTANT, profile(amplitude=3.0))

    def test_power_model_past_breakpoint(self):
        # amplitude large enough that u crosses sqrt(1/(3 kappa))
        self.check(POWER, CONSTANT, profile(amplitude=6.0))

    def test_saturable_model(self):
        self.check(SATURABLE, CONSTANT, profile(amplitude=1.5))

    def test_potential_well(self):
        self.check(POWER, WELL, profile(amplitude=2.0))

    def test_jacobian_diagonal_matches_reaction_difference(self):
        functional = energy_functional(POWER, CONSTANT, GRID)
        v = profile(amplitude=5.0)
        eps = 1e-6
        upper = functional.reaction(functional.recover(v + eps))
        lower = functional.reaction(functional.recover(v - eps))
        assert_allclose(functional.reaction_derivative(functional.recover(v)), (upper - lower) / (2.0 * eps),
                        rtol=1e-5, atol=1e-7)

    def test_gradient_vanishes_at_boundary_node(self):
        gradient = grad_J(Field(GRID, profile()), POWER, CONSTANT)
        self.assertEqual(gradient.values[-1], 0.0)

    def test_preconditioned_direction_is_a_descent_direction(self):
        functional = energy_functional(POWER, CONSTANT, GRID)
        grad = functional.gradient(profile(amplitude=3.0))
        self.assertGreater(GRID.inner(functional.precondition(grad), grad), 0.0)


class RandomFieldGradientTests(unittest.TestCase):
    """Central differences of J against <grad J, psi> on seeded random smooth fields."""

    grid = RadialGrid(dim=3, radius=16.0, nodes=501)

    def random_bumps(self, rng, amplitude_range):
        r = self.grid.r
        values = np.zeros_like(r)
        for _ in range(3):
            amplitude = rng.uniform(*amplitude_range)
            width = rng.uniform(0.8, 4.0)
            center = rng.uniform(0.0, 3.0)
            values += amplitude * np.exp(-((r - center) / width) ** 2)
        values[-1] = 0.0
        return values

    def check_model(self, spec, potential, amplitude_range, seed):
        rng = np.random.default_rng(seed)
        functional = energy_functional(spec, potential, self.grid)
        for index in range(20):
            v = self.random_bumps(rng, amplitude_range)
            psi = self.random_bumps(rng, (-1.0, 1.0))
            gradient = functional.gradient(v)
            analytic = self.grid.inner(gradient, psi)
            scale = max(1.0, self.grid.inner(np.abs(gradient), np.abs(psi)))
            for eps in (1e-4, 1e-5):
                with self.subTest(field=index, eps=eps):
                    numerical = (functional.energy(v + eps * psi) - functional.energy(v - eps * psi)) / (2.0 * eps)
                    self.assertAlmostEqual(numerical, analytic, delta=1e-5 * scale)

    def test_power_model(self):
        self.check_model(POWER, CONSTANT, (0.2, 3.0), seed=20240611)

    def test_saturable_model(self):
        self.check_model(SATURABLE, CONSTANT, (0.1, 1.5), seed=20240612)

    def test_power_model_in_potential_well(self):
        self.check_model(POWER, WELL, (0.2, 3.0), seed=20240613)


class EnergyTests(unittest.TestCase):
    def test_zero_field_has_zero_energy(self):
        zero = Field.zeros(GRID)
        self.assertEqual(energy_J(zero, POWER, CONSTANT), 0.0)
        self.assertEqual(energy_J_tilde(zero, SATURABLE, CONSTANT), 0.0)

    def test_model_specific_entry_points(self):
        v = Field(GRID, profile())
        with self.assertRaises(ConfigurationError):
            energy_J(v, SATURABLE, CONSTANT)
        with self.assertRaises(ConfigurationError):
            energy_J_tilde(v, POWER, CONSTANT)
        self.assertEqual(model_energy(v, POWER, CONSTANT), energy_J(v, POWER, CONSTANT))

    def test_semilinear_energy_has_closed_pieces(self):
        spec = ModelSpec(model=ModelKind.POWER_Q, kappa=0.0, q=3.0, semilinear=True)
        values = profile()
        expected = (0.5 * GRID.gradient_squared(values) + 0.5 * GRID.integrate_values(values ** 2)
                    - GRID.integrate_values(np.abs(values) ** 3) / 3.0)
        self.assertAlmostEqual(energy_J(Field(GRID, values), spec, CONSTANT), expected, places=12)

    def test_dual_energy_matches_original_energy(self):
        functional = energy_functional(POWER, CONSTANT, GRID)
        v = profile(amplitude=3.0)
        u = functional.recover(v)
        self.assertAlmostEqual(functional.original_energy(u) / functional.energy(v), 1.0, delta=1e-4)

    def test_energy_at_infinity_equals_energy_for_constant_potential(self):
        v = Field(GRID, profile())
        self.assertAlmostEqual(energy_J_infty(v, POWER, CONSTANT), energy_J(v, POWER, CONSTANT), places=12)

    def test_well_energy_is_below_energy_at_infinity(self):
        rng = np.random.default_rng(7)
        for spec in (POWER, SATURABLE):
            functional = energy_functional(spec, WELL, GRID)
            for _ in range(10):
                v = profile(amplitude=rng.uniform(0.2, 4.0), width=rng.uniform(0.5, 4.0))
                self.assertLessEqual(functional.energy(v), functional.energy_at_infinity(v))
                field = Field(GRID, v)
                self.assertLessEqual(model_energy(field, spec, WELL), energy_J_infty(field, spec, WELL))

    def test_energy_report_round_trip(self):
        report = EnergyReport(j_value=1.5, i_value=1.49, grad_norm=1e-9, mp_level=1.5, comparison_level=2.0)
        self.assertEqual(EnergyReport.from_dict(report.to_dict()), report)


class ComparisonFunctionalTests(unittest.TestCase):
    def test_power_comparison_dominates_energy(self):
        for amplitude in (0.5, 2.0, 5.0, 12.0):
            v = Field(GRID, profile(amplitude=amplitude))
            self.assertGreaterEqual(energy_P_infty(v, POWER, CONSTANT), energy_J(v, POWER, CONSTANT))

    def test_saturable_comparison_dominates_energy(self):
        for amplitude in (0.5, 1.0, 3.0, 8.0):
            v = Field(GRID, profile(amplitude=amplitude))
            self.assertGreaterEqual(energy_Q_infty(v, SATURABLE, CONSTANT), energy_J_tilde(v, SATURABLE, CONSTANT))

    def test_comparison_level_bounds_energy_along_ray(self):
        for spec in (POWER, SATURABLE):
            functional = energy_functional(spec, CONSTANT, GRID)
            v = profile(amplitude=1.0)
            level = comparison_level(Field(GRID, v), spec, CONSTANT)
            ray = max(functional.energy(t * v) for t in np.linspace(0.0, 30.0, 301))
            self.assertGreaterEqual(level, ray)

    def test_power_closed_form_matches_ray_search(self):
        functional = energy_functional(POWER, CONSTANT, GRID)
        v = profile(amplitude=1.0)
        searched, _ = ray_maximum(lambda t: functional.energy_P_infty(t * v))
        self.assertAlmostEqual(functional.comparison_level(v) / searched, 1.0, delta=1e-8)

    def test_comparison_level_of_zero_is_zero(self):
        self.assertEqual(comparison_level(Field.zeros(GRID), POWER, CONSTANT), 0.0)


class DilationTests(unittest.TestCase):
    def test_unit_dilation_is_energy_at_infinity(self):
        v = Field(GRID, profile())
        self.assertAlmostEqual(dilation_energy(v, 1.0, POWER, CONSTANT), energy_J_infty(v, POWER, CONSTANT),
                               places=12)

    def test_dilation_scaling(self):
        functional = energy_functional(POWER, CONSTANT, GRID)
        v = profile()
        gradient_term = 0.5 * GRID.gradient_squared(v)
        rest = functional.energy_at_infinity(v) - gradient_term
        self.assertAlmostEqual(functional.dilation(v, 2.0), 2.0 * gradient_term + 8.0 * rest, places=10)

    def test_nonpositive_dilation_is_rejected(self):
        with self.assertRaises(DomainError):
            dilation_energy(Field(GRID, profile()), 0.0, POWER, CONSTANT)


class ConvergedDilationTests(unittest.TestCase):
    """On a computed ground state t -> J_inf(v(./t)) peaks at t = 1."""

    @classmethod
    def setUpClass(cls):
        spec = ModelSpec(model=ModelKind.POWER_Q, kappa=0.005, q=3.0)
        cls.solution = mountain_pass_solve(SolverConfig(model_spec=spec, potential=CONSTANT, grid=GRID))
        cls.functional = energy_functional(spec, CONSTANT, GRID)
        cls.v = cls.solution.v.values

    def test_solution_converged(self):
        self.assertTrue(self.solution.converged)

    def test_derivative_vanishes_at_unit_dilation(self):
        step = 1e-4
        derivative = (self.functional.dilation(self.v, 1.0 + step)
                      - self.functional.dilation(self.v, 1.0 - step)) / (2.0 * step)
        self.assertLess(abs(derivative), 3e-2 * GRID.gradient_squared(self.v))

    def test_increasing_then_decreasing(self):
        below = [self.functional.dilation(self.v, t) for t in np.linspace(0.2, 0.95, 16)]
        above = [self.functional.dilation(self.v, t) for t in np.linspace(1.05, 3.0, 40)]
        self.assertTrue(all(b > a for a, b in zip(below, below[1:])))
        self.assertTrue(all(b < a for a, b in zip(above, above[1:])))
        peak = self.functional.dilation(self.v, 1.0)
        self.assertGreater(peak, self.functional.dilation(self.v, 0.8))
        self.assertGreater(peak, self.functional.dilation(self.v, 1.25))


class GeometryTests(unittest.TestCase):
    def test_mountain_pass_geometry(self):
        for spec in (POWER, SATURABLE):
            geometry = mountain_pass_geometry(spec, CONSTANT, GRID, rho=0.1)
            self.assertGreater(geometry.a0, 0.0)
            self.assertLess(geometry.endpoint_energy, 0.0)
            self.assertGreater(geometry.directions, 1)


if __name__ == "__main__":
    unittest.main()
