# Definitions.py
# Version: 2.0
# This module defines the enumerations, constants, exceptions and configuration
# schema shared by every part of the soliton certifier.
# It provides a Definitions class that exposes the schema the same way the rest
# of the code base looks things up: by section and key, with defaults and types.

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple


# --------------------------------------------------------------------
# Enumerations
# --------------------------------------------------------------------
class ModelKind(Enum):
    """Which quasilinear equation is being solved."""
    POWER_Q = "power"
    SATURABLE = "saturable"

    @classmethod
    def from_text(cls, text: str) -> "ModelKind":
        lowered = text.strip().lower()
        for member in cls:
            if member.value == lowered or member.name.lower() == lowered:
                return member
        raise ConfigurationError(
            f"unknown model '{text}' (expected one of: {', '.join(m.value for m in cls)})",
            field="model",
        )


class PotentialShape(Enum):
    CONSTANT = "constant"
    GAUSSIAN_WELL = "gaussian_well"

    @classmethod
    def from_text(cls, text: str) -> "PotentialShape":
        lowered = text.strip().lower()
        for member in cls:
            if member.value == lowered:
                return member
        raise ConfigurationError(
            f"unknown potential shape '{text}' (expected one of: {', '.join(s.value for s in cls)})",
            field="shape",
        )


class Command(Enum):
    SOLVE = "solve"
    VERIFY = "verify"
    SWEEP = "sweep"
    TABLE = "table"


# --------------------------------------------------------------------
# Exit codes and numerical constants
# --------------------------------------------------------------------
EXIT_OK = 0
EXIT_GENERIC = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CERTIFICATE = 4
EXIT_IO = 5

GLUING_TOLERANCE = 1e-12
INVERSE_TOLERANCE = 1e-12
INVERSE_MAX_ITERATIONS = 100

# Upper bracket for G^{-1}(t)/t on t >= 0.
POWER_INVERSE_RATIO = 6.0 ** 0.5
SATURABLE_INVERSE_RATIO = 3.0

# Saturable nonlinearity coefficient on the outer piece f(t) = (7/8) t^(q-1).
SATURABLE_OUTER_COEFFICIENT = 7.0 / 8.0
SATURABLE_MAX_EXPONENT = 14.0 / 5.0
SATURABLE_MAX_KAPPA = 1.0 / 3.0

DEFAULT_Q = {ModelKind.POWER_Q: 3.0, ModelKind.SATURABLE: 2.5}


# --------------------------------------------------------------------
# Exceptions
# --------------------------------------------------------------------
class SolitonError(Exception):
    """Base class for every error raised by the certifier."""
    exit_code = EXIT_GENERIC


class ConfigurationError(SolitonError):
    """Invalid model, potential, grid or run configuration."""
    exit_code = EXIT_CONFIG

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(SolitonError, ValueError):
    """An argument outside the mathematical domain of an operation."""
    exit_code = EXIT_CONFIG


class NumericalError(SolitonError):
    """A numerical procedure failed to produce a trustworthy result."""
    exit_code = EXIT_SOLVER


class SolverError(NumericalError):
    """The mountain-pass solver could not produce a nontrivial critical point."""


class CertificateFailure(SolitonError):
    """A computed solution failed one or more requested certificates."""
    exit_code = EXIT_CERTIFICATE

    def __init__(self, message: str, report: Any = None):
        self.report = report
        super().__init__(message)


class FileFormatError(SolitonError):
    """A profile, solution or report file could not be read."""
    exit_code = EXIT_IO

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}"
            if line is not None:
                prefix += f":{line}"
            prefix += ": "
        super().__init__(prefix + message)


# --------------------------------------------------------------------
# Configuration schema
# Each entry: (key, type name, default, description).
# A default of None for "q" means "use the model default".
# --------------------------------------------------------------------
SchemaEntry = Tuple[str, str, Any, str]

CONFIG_SCHEMA: Dict[str, List[SchemaEntry]] = {
    "model": [
        ("model", "str", "power", "equation: 'power' (|u|^(q-2)u) or 'saturable'"),
        ("kappa", "float", 0.02, "quasilinear coupling; must be > 0 unless semilinear = true"),
        ("q", "float", None, "nonlinearity exponent; defaults to 3 (power) or 2.5 (saturable)"),
        ("dim", "int", 3, "space dimension N >= 3"),
        ("semilinear", "bool", False, "reference mode with kappa = 0 and g = 1"),
    ],
    "potential": [
        ("shape", "str", "constant", "'constant' or 'gaussian_well'"),
        ("v_infty", "float", 1.0, "limit value of V at infinity"),
        ("depth", "float", 0.0, "well depth a; V(0) = v_infty - a"),
        ("width", "float", 1.0, "well width w in V(r) = v_infty - a exp(-(r/w)^2)"),
    ],
    "grid": [
        ("nodes", "int", 2001, "number of radial nodes n >= 16"),
        ("radius", "float", 24.0, "truncation radius R"),
        ("adaptive", "bool", True, "double R (keeping h) until the tail is negligible"),
        ("max_doublings", "int", 3, "maximum number of radius doublings"),
    ],
    "solver": [
        ("path_points", "int", 17, "sample points on the mountain-pass path"),
        ("descent_tol", "float", 1e-8, "convergence tolerance on the H1 gradient norm"),
        ("max_iters", "int", 500, "maximum outer mountain-pass iterations"),
        ("seed_amplitude", "float", 1.0, "starting amplitude of the bump endpoint"),
        ("bump_radius", "float", 4.0, "support radius of the bump profile"),
        ("newton", "bool", True, "polish with Newton iterations near convergence"),
        ("newton_switch", "float", 1e-3, "gradient norm below which Newton is attempted"),
    ],
    "verify": [
        ("residual_tol", "float", 1e-3, "scale-normalized PDE residual tolerance"),
        ("pohozaev_tol", "float", 1e-3, "normalized Pohozaev residual tolerance"),
        ("energy_rtol", "float", 1e-4, "relative slack allowed in the energy bound"),
        ("fit_r2", "float", 0.99, "minimum R^2 of the exponential decay fit"),
    ],
    "sweep": [
        ("kappas", "float_list", (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3),
         "kappa values for the sweep subcommand"),
        ("workers", "int", 1, "parallel workers; 1 runs sequentially with warm starts"),
        ("threshold_tol", "float", 1e-3, "bracket width for threshold bisection"),
    ],
    "output": [
        ("directory", "str", "results", "directory for profile, solution and report files"),
        ("table_t_max", "float", 10.0, "largest t written by the table subcommand"),
        ("table_samples", "int", 201, "number of rows written by the table subcommand"),
    ],
}

REQUIRED_KEYS: Dict[str, Tuple[str, ...]] = {"model": ("model",)}


class Definitions:
    """
    Definitions gives lookup access to the configuration schema.

    Methods
    -------
    is_known_section(section) -> bool
    is_known_key(section, key) -> bool
    get_entry(section, key) -> Optional[SchemaEntry]
    default_for(section, key) -> Any
    keys(section) -> list of key names in schema order
    """

    def __init__(self):
        self.schema = CONFIG_SCHEMA
        self.required = REQUIRED_KEYS

    def sections(self) -> List[str]:
        return list(self.schema.keys())

    def is_known_section(self, section: str) -> bool:
        return section in self.schema

    def is_known_key(self, section: str, key: str) -> bool:
        return self.get_entry(section, key) is not None

    def get_entry(self, section: str, key: str) -> Optional[SchemaEntry]:
        for entry in self.schema.get(section, []):
            if entry[0] == key:
                return entry
        return None

    def default_for(self, section: str, key: str) -> Any:
        entry = self.get_entry(section, key)
        if entry is None:
            raise KeyError(f"{section}.{key}")
        return entry[2]

    def keys(self, section: str) -> List[str]:
        return [entry[0] for entry in self.schema.get(section, [])]

    def defaults(self, section: str) -> Dict[str, Any]:
        return {entry[0]: entry[2] for entry in self.schema.get(section, [])}
