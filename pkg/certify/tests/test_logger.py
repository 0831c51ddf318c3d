import logging
import unittest

from Modules.Logger import Logger, RunContextFilter


class LoggerContextTests(unittest.TestCase):
    def test_singleton(self):
        self.assertIs(Logger(), Logger())

    def test_bind_stacks_and_restores(self):
        logger = Logger()
        self.assertEqual(logger.context_label(), "-")
        with logger.bind(command="sweep", model="power"):
            with logger.bind(kappa="0.02", model=None):
                self.assertEqual(logger.context_label(), "command=sweep model=power kappa=0.02")
            self.assertEqual(logger.context_label(), "command=sweep model=power")
        self.assertEqual(logger.context_label(), "-")

    def test_filter_stamps_record(self):
        logger = Logger()
        record = logging.LogRecord("SolitonCertifier", logging.INFO, __file__, 1, "message", None, None)
        with logger.bind(kappa="0.1"):
            self.assertTrue(RunContextFilter(logger).filter(record))
        self.assertEqual(record.run_context, "kappa=0.1")
        self.assertEqual(record.caller_class, "LoggerContextTests")

    def test_every_level_has_an_emit_method(self):
        logger = Logger()
        with self.assertLogs("SolitonCertifier", level="DEBUG") as captured:
            for name in ("debug", "info", "warning", "error", "critical"):
                getattr(logger, name)(f"{name} message")
        self.assertEqual([record.levelname for record in captured.records],
                         ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])

    def test_unknown_level_is_rejected(self):
        with self.assertRaises(ValueError):
            Logger().set_level("LOUD", "console")


if __name__ == "__main__":
    unittest.main()
