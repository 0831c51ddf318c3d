# Logger.py
# Version: 3.0
# Process-wide application logger for the soliton certifier.

import logging
import os
import sys
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path

LOG_FORMAT = "%(asctime)s - %(levelname)s - [%(run_context)s] %(message)s - %(caller_class)s - %(filename)s:%(lineno)d"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _caller_class() -> str:
    frame = sys._getframe(0)
    while frame is not None:
        owner = frame.f_locals.get("self")
        if owner is not None and not isinstance(owner, (Logger, RunContextFilter, logging.Handler, logging.Logger)):
            return owner.__class__.__name__
        frame = frame.f_back
    return "-"


# --------------------------------------------------------------------
# Run context on every record
# --------------------------------------------------------------------
class RunContextFilter(logging.Filter):
    """
    Stamps each record with the run context bound through ``Logger.bind``
    (for example ``command=sweep model=power kappa=0.02``) and with the
    class that issued the call, so that interleaved solves in a sweep log
    can be told apart.
    """

    def __init__(self, owner: "Logger"):
        super().__init__()
        self.owner = owner

    def filter(self, record):
        record.run_context = self.owner.context_label()
        record.caller_class = _caller_class()
        return True


class ColoredFormatter(logging.Formatter):
    """Colors the level name on a terminal; warnings from a long solve stand out."""
    COLOR_CODES = {
        "DEBUG": "\033[37m",
        "INFO": "\033[36m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[41m",
    }
    RESET_CODE = "\033[0m"

    def __init__(self, fmt, datefmt=None, use_color=True):
        super().__init__(fmt, datefmt)
        self.use_color = use_color

    def format(self, record):
        levelname = record.levelname
        if self.use_color and levelname in self.COLOR_CODES:
            record.levelname = f"{self.COLOR_CODES[levelname]}{levelname}{self.RESET_CODE}"
        try:
            return super().format(record)
        finally:
            record.levelname = levelname


# --------------------------------------------------------------------
# Logger Singleton Class
# --------------------------------------------------------------------
class Logger:
    """
    Singleton wrapper around the ``SolitonCertifier`` logger. Every module
    calls ``Logger()`` and gets the same instance.

    The console handler writes to stderr because stdout carries CSV output
    and summary tables. A file handler is attached only by
    ``add_file_handler`` (the CLI does this when SOLITON_LOG_DIR is set).
    Worker processes of a parallel sweep build their own instance with the
    default console level.
    """

    _instance = None

    def __new__(cls, *args, **kwargs):
        if cls._instance is None:
            cls._instance = super(Logger, cls).__new__(cls)
        return cls._instance

    def __init__(self, console_level=logging.INFO, source_name="soliton"):
        if getattr(self, "_initialized", False):
            return
        self.source_name = source_name
        self.log_filename = None
        self._context = {}

        self._logger = logging.getLogger("SolitonCertifier")
        self._logger.setLevel(logging.DEBUG)
        self._logger.propagate = False
        self._logger.handlers.clear()

        use_color = hasattr(sys.stderr, "isatty") and sys.stderr.isatty()
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(console_level)
        console_handler.setFormatter(ColoredFormatter(LOG_FORMAT, DATE_FORMAT, use_color=use_color))
        console_handler.addFilter(RunContextFilter(self))
        self._logger.addHandler(console_handler)
        self._initialized = True

    # ----------------------------------------------------------------
    # Context
    # ----------------------------------------------------------------
    def context_label(self) -> str:
        if not self._context:
            return "-"
        return " ".join(f"{key}={value}" for key, value in self._context.items())

    @contextmanager
    def bind(self, **values):
        """
        Adds ``values`` to the run context for the duration of the block.
        Nested binds stack; the previous context comes back on exit.
        """
        saved = dict(self._context)
        self._context.update({key: value for key, value in values.items() if value is not None})
        try:
            yield self
        finally:
            self._context = saved

    # ----------------------------------------------------------------
    # Handlers
    # ----------------------------------------------------------------
    def add_file_handler(self, directory, level=logging.DEBUG):
        """
        Writes every record at ``level`` or above to
        ``<directory>/<source_name>_<timestamp>.log`` and returns that path.
        A second call reuses the existing file.
        """
        if self.log_filename is not None:
            return self.log_filename
        Path(directory).mkdir(parents=True, exist_ok=True)
        timestamp = datetime.now().strftime("%Y-%m-%d_%H-%M-%S")
        self.log_filename = os.path.join(directory, f"{self.source_name}_{timestamp}.log")

        file_handler = logging.FileHandler(self.log_filename, encoding="utf-8")
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
        file_handler.addFilter(RunContextFilter(self))
        self._logger.addHandler(file_handler)
        self.debug(f"File logging enabled: {self.log_filename}")
        return self.log_filename

    def set_level(self, level, handler_type="both"):
        """
        Change the level of the console and/or file handlers.

        Parameters:
          level (int or str): e.g. logging.INFO or "WARNING".
          handler_type (str): 'console', 'file', or 'both'.
        """
        if isinstance(level, str):
            resolved = logging.getLevelName(level.upper())
            if not isinstance(resolved, int):
                raise ValueError(f"unknown log level: {level}")
            level = resolved
        for handler in self._logger.handlers:
            is_file = isinstance(handler, logging.FileHandler)
            if handler_type == "both" or (handler_type == "file") == is_file:
                handler.setLevel(level)

    # ----------------------------------------------------------------
    # Emit
    # ----------------------------------------------------------------
    def _log(self, level, msg, *args, **kwargs):
        kwargs.setdefault("stacklevel", 3)
        self._logger.log(level, msg, *args, **kwargs)

    def debug(self, msg, *args, **kwargs):
        self._log(logging.DEBUG, msg, *args, **kwargs)

    def info(self, msg, *args, **kwargs):
        self._log(logging.INFO, msg, *args, **kwargs)

    def warning(self, msg, *args, **kwargs):
        self._log(logging.WARNING, msg, *args, **kwargs)

    def error(self, msg, *args, **kwargs):
        self._log(logging.ERROR, msg, *args, **kwargs)

    def critical(self, msg, *args, **kwargs):
        self._log(logging.CRITICAL, msg, *args, **kwargs)

# End of Logger module
