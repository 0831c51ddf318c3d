import os
import unittest
from unittest import mock

from Modules.ConfigParser import RunConfig, parse_config, serialize_config
from Modules.Definitions import ConfigurationError, Definitions, ModelKind, PotentialShape
from soliton_certifier.settings import load_settings

SATURABLE_CONFIG = """\
# saturable run on a smaller grid
[model]
model = saturable   # q defaults to 2.5
kappa = 0.1

[potential]
shape = gaussian_well
v_infty = 2.0
depth = 0.5
width = 1.5

[grid]
nodes = 801
radius = 16
adaptive = no

[sweep]
kappas = 0.01, 0.05, 0.1
workers = 2
"""


class ParseConfigTests(unittest.TestCase):
    def assertConfigError(self, text, line, fragment=None):
        with self.assertRaises(ConfigurationError) as context:
            parse_config(text)
        self.assertEqual(context.exception.line, line, str(context.exception))
        if fragment is not None:
            self.assertIn(fragment, str(context.exception))
        return context.exception

    def test_minimal_config_uses_defaults(self):
        self.assertEqual(parse_config("[model]\nmodel = power\n"), RunConfig())

    def test_full_config(self):
        config = parse_config(SATURABLE_CONFIG)
        self.assertIs(config.model.model, ModelKind.SATURABLE)
        self.assertEqual(config.model.q, 2.5)
        self.assertEqual(config.model.kappa, 0.1)
        self.assertIs(config.potential.shape, PotentialShape.GAUSSIAN_WELL)
        self.assertEqual(config.potential.v0, 1.5)
        self.assertEqual((config.grid.nodes, config.grid.radius, config.grid.adaptive), (801, 16.0, False))
        self.assertEqual(config.sweep.kappas, (0.01, 0.05, 0.1))
        self.assertEqual(config.sweep.workers, 2)

    def test_saturable_kappa_above_one_third(self):
        self.assertConfigError("[model]\nmodel = saturable\nkappa = 0.4\n", 3, "1/3")

    def test_power_q_must_exceed_two(self):
        error = self.assertConfigError("[model]\nmodel = power\n\nq = 2\n", 4)
        self.assertEqual(error.field, "q")

    def test_unknown_section(self):
        self.assertConfigError("[model]\nmodel = power\n[mesh]\nnodes = 10\n", 3, "unknown section")

    def test_unknown_key(self):
        self.assertConfigError("[model]\nmodel = power\nkapa = 0.1\n", 3, "unknown key 'kapa'")

    def test_duplicate_key(self):
        self.assertConfigError("[model]\nmodel = power\nkappa = 0.1\nkappa = 0.2\n", 4, "duplicate key")

    def test_duplicate_section(self):
        self.assertConfigError("[model]\nmodel = power\n[grid]\nnodes = 801\n[grid]\nradius = 16\n", 5,
                               "duplicate section")

    def test_malformed_values(self):
        self.assertConfigError("[model]\nmodel = power\nkappa = abc\n", 3, "expected a number")
        self.assertConfigError("[model]\nmodel = power\n[grid]\nnodes = 1e3\n", 4, "expected an integer")
        self.assertConfigError("[model]\nmodel = power\n[grid]\nadaptive = maybe\n", 4, "true or false")
        self.assertConfigError("[model]\nmodel = power\nkappa = nan\n", 3)

    def test_missing_required_key(self):
        self.assertConfigError("[model]\nkappa = 0.1\n", 1, "missing required key 'model'")
        self.assertConfigError("[grid]\nnodes = 801\n", 1, "missing required key 'model'")

    def test_syntax_errors_carry_lines(self):
        self.assertConfigError("[model\nmodel = power\n", 1, "malformed config")
        self.assertConfigError("[model]\nmodel = power\nkappa 0.1\n", 3, "malformed config")
        self.assertConfigError("[model]\nmodel = power\nkappa =\n", 3, "malformed config")

    def test_comments_and_blank_lines(self):
        text = "# leading comment\n\n[model]   # trailing\n  model = power\n\n# between\nkappa = 0.05 # inline\n"
        self.assertEqual(parse_config(text).model.kappa, 0.05)

    def test_hash_inside_a_value_is_rejected(self):
        error = self.assertConfigError("[model]\nmodel = power\n[output]\ndirectory = runs#1\n", 4, "'#' directly after")
        self.assertEqual(error.field, "directory")
        self.assertConfigError('[model]\nmodel = power\n[output]\ndirectory = "runs#1"\n', 4, "'#' directly after")
        self.assertConfigError("[model]\nmodel = power\nkappa = 0.05#inline\n", 3, "column 13")

    def test_inline_comment_after_whitespace_is_accepted(self):
        config = parse_config("[model]\nmodel = power\n[output]\ndirectory = runs\t# tab before comment\n")
        self.assertEqual(config.output.directory, "runs")

    def test_saturable_needs_potential_above_one(self):
        self.assertConfigError("[model]\nmodel = saturable\n[potential]\nv_infty = 0.5\n", 4, "V0 >= 1")

    def test_well_must_fit_inside_radius(self):
        text = ("[model]\nmodel = power\n[potential]\nshape = gaussian_well\ndepth = 0.5\nwidth = 10\n"
                "[grid]\nradius = 24\n")
        error = self.assertConfigError(text, 8, "increase the radius")
        self.assertEqual(error.field, "radius")

    def test_sweep_kappas_must_be_admissible(self):
        text = "[model]\nmodel = saturable\n[sweep]\nkappas = 0.1, 0.35\n"
        self.assertConfigError(text, 4, "inadmissible")

    def test_sweep_kappas_must_be_sorted(self):
        self.assertConfigError("[model]\nmodel = power\n[sweep]\nkappas = 0.2, 0.1\n", 4, "sorted")


class SerializeConfigTests(unittest.TestCase):
    def test_round_trip(self):
        for config in (RunConfig(), parse_config(SATURABLE_CONFIG)):
            self.assertEqual(parse_config(serialize_config(config)), config)

    def test_serialization_is_canonical(self):
        text = serialize_config(parse_config(SATURABLE_CONFIG))
        self.assertEqual(serialize_config(parse_config(text)), text)
        self.assertIn("q = 2.5", text)
        self.assertTrue(text.endswith("\n"))

    def test_every_schema_key_is_written(self):
        text = serialize_config(RunConfig())
        definitions = Definitions()
        for section in definitions.sections():
            self.assertIn(f"[{section}]", text)
            for key in definitions.keys(section):
                self.assertIn(f"\n{key} = ", text)


class RunConfigTests(unittest.TestCase):
    def test_solver_config(self):
        config = parse_config(SATURABLE_CONFIG)
        solver = config.solver_config(kappa=0.05)
        self.assertEqual(solver.model_spec.kappa, 0.05)
        self.assertEqual(solver.grid.nodes, 801)
        self.assertFalse(solver.adaptive_radius)
        self.assertEqual(solver.bump_support, config.solver.bump_radius)

    def test_tolerances(self):
        tolerances = RunConfig().tolerances()
        self.assertEqual((tolerances.residual_tol, tolerances.pohozaev_tol), (1e-3, 1e-3))

    def test_overrides_are_validated(self):
        config = RunConfig().with_overrides(nodes=801, radius=16.0, kappa=0.05, directory="out", workers=3)
        self.assertEqual((config.grid.nodes, config.grid.radius), (801, 16.0))
        self.assertEqual(config.model.kappa, 0.05)
        self.assertEqual(config.output.directory, "out")
        self.assertEqual(config.sweep.workers, 3)
        with self.assertRaises(ConfigurationError):
            RunConfig().with_overrides(workers=0)
        with self.assertRaises(ConfigurationError):
            RunConfig().with_overrides(kappas=[0.2, 0.1])
        with self.assertRaises(ConfigurationError):
            RunConfig().with_overrides(nodes=8)


class SettingsTests(unittest.TestCase):
    def test_defaults(self):
        with mock.patch.dict(os.environ, {}, clear=True):
            settings = load_settings()
        self.assertEqual(settings.log_level, "INFO")
        self.assertEqual(settings.workers, 1)
        self.assertEqual(settings.output_dir, "results")
        self.assertEqual(settings.log_dir, "")

    def test_environment_overrides(self):
        environment = {"SOLITON_LOG_LEVEL": "debug", "SOLITON_WORKERS": "4", "SOLITON_OUTPUT_DIR": "/tmp/runs"}
        with mock.patch.dict(os.environ, environment):
            settings = load_settings()
        self.assertEqual(settings.log_level, "DEBUG")
        self.assertEqual(settings.workers, 4)
        self.assertEqual(settings.output_dir, "/tmp/runs")

    def test_non_integer_workers_is_a_configuration_error(self):
        with mock.patch.dict(os.environ, {"SOLITON_WORKERS": "many"}):
            with self.assertRaises(ConfigurationError) as context:
                load_settings()
        self.assertEqual(context.exception.field, "SOLITON_WORKERS")
        self.assertIn("'many'", str(context.exception))

    def test_zero_workers_is_rejected(self):
        with mock.patch.dict(os.environ, {"SOLITON_WORKERS": "0"}):
            with self.assertRaises(ConfigurationError):
                load_settings()


if __name__ == "__main__":
    unittest.main()
