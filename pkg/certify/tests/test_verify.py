import math
import unittest
from dataclasses import replace

import numpy as np
import pytest

from Modules.Definitions import ConfigurationError, DomainError, ModelKind
from Modules.Functional import EnergyReport
from Modules.MountainPassSolver import Solution, SolverConfig, mountain_pass_solve
from Modules.RadialGrid import Field, PotentialSpec, RadialGrid
from Modules.ShootingOracle import shooting_oracle
from Modules.Transforms import ModelSpec
from Modules.Verifier import (
    VerificationTolerances,
    check_energy_bound,
    check_linf,
    check_moser_chain,
    check_pohozaev,
    check_qualitative,
    format_summary,
    kappa_threshold_formulas,
    moser_exponents,
    pde_residual,
    sobolev_constant,
    verify_solution,
)

FAST_GRID = RadialGrid(dim=3, radius=16.0, nodes=801)
CONSTANT = PotentialSpec(v_infty=1.0)
COARSE = VerificationTolerances(residual_tol=1e-2, pohozaev_tol=1e-2)
POWER = ModelSpec(model=ModelKind.POWER_Q, kappa=0.005, q=3.0)
SATURABLE = ModelSpec(model=ModelKind.SATURABLE, kappa=0.05, q=2.5)


def zero_solution(spec=POWER, potential=CONSTANT):
    zero = Field.zeros(FAST_GRID)
    energy = EnergyReport(j_value=0.0, i_value=0.0, grad_norm=0.0, mp_level=0.0, comparison_level=0.0)
    return Solution(v=zero, u=zero, energy=energy, iterations=0, converged=True, path_trace=[],
                    model_spec=spec, potential=potential)


class ConstantTests(unittest.TestCase):
    def test_sobolev_constant_in_three_dimensions(self):
        self.assertAlmostEqual(sobolev_constant(3), 0.182556, places=5)

    def test_sobolev_constant_matches_gamma_form(self):
        for dim in (3, 4, 5):
            expected = (1.0 / (math.pi * dim * (dim - 2))) * (math.gamma(dim) / math.gamma(dim / 2.0)) ** (2.0 / dim)
            self.assertAlmostEqual(sobolev_constant(dim) / expected, 1.0, places=12)

    def test_moser_exponents(self):
        q1, sigma, theta = moser_exponents(POWER)
        self.assertAlmostEqual(q1, 1.2, places=14)
        self.assertAlmostEqual(sigma, 2.5, places=14)
        self.assertAlmostEqual(theta, 0.75, places=14)
        self.assertGreater(sigma, 1.0)

    def test_kappa_formulas_saturate_for_small_constants(self):
        self.assertAlmostEqual(kappa_threshold_formulas(POWER, 1e-12), 6.0 ** (-2.0 / 3.0), places=14)
        self.assertAlmostEqual(kappa_threshold_formulas(SATURABLE, 1e-12), 1.0 / 3.0, places=14)

    def test_kappa_formulas_shrink_with_the_constant(self):
        self.assertAlmostEqual(kappa_threshold_formulas(POWER, 100.0), 1.0 / (100.0 * math.sqrt(18.0)), places=14)
        self.assertLess(kappa_threshold_formulas(SATURABLE, 100.0), 1.0 / 3.0)

    def test_kappa_formulas_need_positive_constant(self):
        with self.assertRaises(DomainError):
            kappa_threshold_formulas(POWER, 0.0)
        with self.assertRaises(DomainError):
            kappa_threshold_formulas(SATURABLE, -1.0)


class TrivialSolutionTests(unittest.TestCase):
    def setUp(self):
        self.solution = zero_solution()

    def test_residual_vanishes(self):
        self.assertEqual(pde_residual(self.solution), (0.0, 0.0))

    def test_linf_and_pohozaev_are_trivial(self):
        self.assertTrue(check_linf(self.solution).passed)
        self.assertEqual(check_pohozaev(self.solution), 0.0)

    def test_energy_bound_is_trivial(self):
        check = check_energy_bound(self.solution)
        self.assertEqual(check.lhs, 0.0)
        self.assertTrue(check.passed)
        self.assertTrue(check.comparison_pass)

    def test_moser_chain_holds_trivially(self):
        moser = check_moser_chain(self.solution)
        self.assertTrue(moser.applicable)
        self.assertTrue(moser.chain_pass)
        self.assertIsNone(moser.constant)

    def test_report_flags_trivial_profile(self):
        self.assertFalse(check_qualitative(self.solution).nontrivial_pass)
        report = verify_solution(self.solution)
        self.assertFalse(report.passed)
        self.assertIn("trivial profile", report.failures)

    def test_pohozaev_needs_constant_potential(self):
        well = PotentialSpec(v_infty=1.5, shape="gaussian_well", depth=0.4, width=1.5)
        with self.assertRaises(ConfigurationError):
            check_pohozaev(zero_solution(potential=well))


class PowerCertificateTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.solution = mountain_pass_solve(SolverConfig(model_spec=POWER, potential=CONSTANT, grid=FAST_GRID))
        cls.report = verify_solution(cls.solution, COARSE)

    def test_all_certificates_pass(self):
        self.assertTrue(self.report.passed, self.report.failures)
        self.assertEqual(self.report.failures, [])

    def test_residuals_are_small_and_consistent(self):
        self.assertLess(self.report.pde_residual_max, 1e-2)
        self.assertLess(self.report.pde_residual_l2, 1e-2)
        self.assertLess(self.report.residual_agreement, 1e-2)

    def test_linf_certificate(self):
        self.assertTrue(self.report.linf_pass)
        self.assertLess(self.report.linf_u, self.report.linf_threshold)
        self.assertTrue(self.report.linf_chain_pass)

    def test_energy_bound_uses_full_norm(self):
        self.assertFalse(self.report.energy_bound_seminorm)
        self.assertTrue(self.report.energy_bound_pass)
        self.assertTrue(self.report.energy_bound_comparison_pass)

    def test_energy_bound_rejects_inflated_profile(self):
        check = check_energy_bound(self.solution)
        self.assertLessEqual(check.lhs, check.rhs * (1.0 + 1e-4))
        inflated = replace(self.solution, v=Field(self.solution.grid, 3.0 * self.solution.v.values))
        self.assertFalse(check_energy_bound(inflated).passed)

    def test_moser_chain(self):
        self.assertTrue(self.report.moser_applicable)
        self.assertEqual(len(self.report.moser_chain), 3)
        self.assertTrue(all(item.passed for item in self.report.moser_chain))
        self.assertIsNotNone(self.report.kappa0_formula_value)
        self.assertLessEqual(self.report.kappa0_formula_value, 6.0 ** (-2.0 / 3.0))

    def test_qualitative_shape(self):
        self.assertTrue(self.report.positivity_pass)
        self.assertTrue(self.report.monotonicity_pass)
        self.assertTrue(self.report.decay_pass)
        # u ~ exp(-sqrt(V) r) / r
        self.assertAlmostEqual(self.report.decay_rate, 1.0, delta=0.15)

    def test_path_maxima_never_rise(self):
        self.assertTrue(self.report.path_monotone)
        self.assertEqual((self.report.path_rises, self.report.forced_acceptances), (0, 0))
        self.assertEqual(self.report.notes, [])

    def test_report_serializes(self):
        data = self.report.to_dict()
        self.assertTrue(data["passed"])
        self.assertEqual(data["tolerances"]["residual_tol"], 1e-2)
        self.assertEqual(len(data["moser_chain"]), 3)

    def test_summary_ends_with_verdict(self):
        lines = format_summary(self.report)
        self.assertEqual(lines[-1], "overall: PASS")
        self.assertTrue(any(line.startswith("||u||_inf") for line in lines))


class SaturableCertificateTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.solution = mountain_pass_solve(SolverConfig(model_spec=SATURABLE, potential=CONSTANT, grid=FAST_GRID))
        cls.report = verify_solution(cls.solution, COARSE)

    def test_amplitude_floor_forces_linf_failure(self):
        self.assertTrue(self.solution.converged)
        self.assertFalse(self.report.linf_pass)
        self.assertAlmostEqual(self.report.amplitude_floor, (8.0 / 7.0) ** 2, places=12)
        self.assertGreaterEqual(self.report.linf_u, self.report.amplitude_floor * (1.0 - 1e-6))
        self.assertFalse(self.report.passed)

    def test_energy_bound_uses_seminorm(self):
        self.assertTrue(self.report.energy_bound_seminorm)

    def test_moser_chain_not_applicable(self):
        self.assertFalse(self.report.moser_applicable)
        self.assertEqual(self.report.moser_chain, [])
        self.assertIsNotNone(self.report.moser_constant)
        self.assertLessEqual(self.report.kappa0_formula_value, 1.0 / 3.0)

    def test_summary_reports_failure(self):
        self.assertEqual(format_summary(self.report)[-1], "overall: FAIL")


class PotentialWellTests(unittest.TestCase):
    """Gaussian well with V(0) = 0.5 and V -> 1 at infinity."""

    @classmethod
    def setUpClass(cls):
        cls.well = PotentialSpec(v_infty=1.0, shape="gaussian_well", depth=0.5, width=1.0)
        cls.solution = mountain_pass_solve(SolverConfig(model_spec=POWER, potential=cls.well, grid=FAST_GRID))
        cls.report = verify_solution(cls.solution, COARSE)

    def test_solve_converges_above_the_constant_case(self):
        self.assertEqual(self.well.v0, 0.5)
        self.assertTrue(self.solution.converged)
        constant = mountain_pass_solve(SolverConfig(model_spec=POWER, potential=CONSTANT, grid=FAST_GRID))
        self.assertGreater(self.solution.u.values[0], constant.u.values[0])

    def test_applicable_certificates_pass(self):
        self.assertTrue(self.report.passed, self.report.failures)
        self.assertTrue(self.report.linf_pass)
        self.assertTrue(self.report.energy_bound_pass)
        self.assertTrue(all(item.passed for item in self.report.moser_chain))

    def test_pohozaev_and_shape_checks_are_skipped(self):
        self.assertIsNone(self.report.pohozaev_residual)
        self.assertFalse(self.report.qualitative_applicable)


@pytest.mark.slow
class DeskScaleCertificateTests(unittest.TestCase):
    def test_default_tolerances_pass_at_desk_resolution(self):
        grid = RadialGrid(dim=3, radius=24.0, nodes=2001)
        solution = mountain_pass_solve(SolverConfig(model_spec=POWER, potential=CONSTANT, grid=grid))
        report = verify_solution(solution)
        self.assertTrue(report.passed, report.failures)
        self.assertLess(report.pohozaev_residual, 1e-3)
        self.assertLess(report.pde_residual_max, 1e-3)


@pytest.mark.slow
class ThresholdViolationTests(unittest.TestCase):
    """
    Power model at kappa = 0.02, q = 3, V = 1. The ground state has
    u(0) close to 5.10, above sqrt(1/(3 kappa)) = 4.0825, so the L-infinity
    certificate fails on every grid while all the others hold.
    """

    @classmethod
    def setUpClass(cls):
        cls.grid = RadialGrid(dim=3, radius=24.0, nodes=2001)
        cls.spec = ModelSpec(model=ModelKind.POWER_Q, kappa=0.02, q=3.0)
        cls.solution = mountain_pass_solve(SolverConfig(model_spec=cls.spec, potential=CONSTANT, grid=cls.grid))
        cls.report = verify_solution(cls.solution)

    def test_only_the_linf_certificate_fails(self):
        report = self.report
        self.assertTrue(self.solution.converged)
        self.assertIs(report.linf_pass, False)
        self.assertAlmostEqual(report.linf_threshold, math.sqrt(1.0 / 0.06), places=12)
        self.assertEqual(len(report.failures), 1, report.failures)
        self.assertTrue(report.failures[0].startswith("||u||_inf"))

    def test_remaining_certificates_hold(self):
        report = self.report
        self.assertLess(report.pde_residual_max, 1e-3)
        self.assertLess(report.pohozaev_residual, 1e-3)
        self.assertTrue(report.energy_bound_pass)
        self.assertTrue(report.linf_chain_pass)
        self.assertEqual(len(report.moser_chain), 3)
        self.assertTrue(all(item.passed for item in report.moser_chain))

    def test_amplitude_matches_shooting(self):
        oracle = shooting_oracle(self.spec, CONSTANT, self.grid)
        self.assertTrue(oracle.converged)
        self.assertGreater(oracle.amplitude, self.report.linf_threshold)
        self.assertAlmostEqual(self.report.linf_u / oracle.amplitude, 1.0, delta=1e-3)


@pytest.mark.slow
class RefinementOrderTests(unittest.TestCase):
    def test_pohozaev_residual_is_second_order(self):
        # the nodal PDE residual at kappa = 0.02 loses order where u crosses the
        # kink of g' at t*, the integrated Pohozaev residual does not
        spec = ModelSpec(model=ModelKind.POWER_Q, kappa=0.02, q=3.0)
        residuals = []
        for nodes in (501, 1001, 2001):
            grid = RadialGrid(dim=3, radius=24.0, nodes=nodes)
            solution = mountain_pass_solve(SolverConfig(model_spec=spec, potential=CONSTANT, grid=grid))
            self.assertTrue(solution.converged)
            residuals.append(check_pohozaev(solution))
        orders = [math.log2(coarse / fine) for coarse, fine in zip(residuals, residuals[1:])]
        for order in orders:
            self.assertGreaterEqual(order, 1.8, orders)

    def test_residual_is_second_order_below_the_breakpoint(self):
        residuals = []
        for nodes in (501, 1001, 2001):
            grid = RadialGrid(dim=3, radius=24.0, nodes=nodes)
            solution = mountain_pass_solve(SolverConfig(model_spec=POWER, potential=CONSTANT, grid=grid))
            residuals.append(pde_residual(solution)[0])
        orders = [math.log2(coarse / fine) for coarse, fine in zip(residuals, residuals[1:])]
        for order in orders:
            self.assertGreaterEqual(order, 1.8, orders)


if __name__ == "__main__":
    unittest.main()
