# ConfigParser.py
# Version: 1.0
# Run configuration: a lark grammar for the INI-like config text, the typed
# RunConfig it is converted into, cross-field validation with line numbers,
# and the canonical serializer.
#
#     [model]
#     model = saturable      # comments run to the end of the line
#     kappa = 0.1
#
#     [grid]
#     nodes = 2001
#
# Sections and keys come from Definitions.CONFIG_SCHEMA; anything else is
# rejected. Every key is optional except [model] model.

import math
import os
import sys
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

repo_home_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(repo_home_path)

from Modules.Definitions import (
    CONFIG_SCHEMA,
    ConfigurationError,
    DEFAULT_Q,
    Definitions,
    ModelKind,
    PotentialShape,
    REQUIRED_KEYS,
)
from Modules.MountainPassSolver import SolverConfig
from Modules.RadialGrid import POTENTIAL_TAIL_TOLERANCE, Field, PotentialSpec, RadialGrid
from Modules.Transforms import ModelSpec
from Modules.Verifier import VerificationTolerances

CONFIG_GRAMMAR = r"""
    start: _NL* section*
    section: header entry*
    header: "[" NAME "]" _NL+
    entry: NAME "=" VALUE _NL+

    NAME: /[A-Za-z_][A-Za-z0-9_]*/
    VALUE: /[^\n#]+/
    _NL: /(\r?\n[\t ]*)+/
    COMMENT: /#[^\n]*/

    %import common.WS_INLINE
    %ignore WS_INLINE
    %ignore COMMENT
"""

TRUE_WORDS = {"true", "yes", "on", "1"}
FALSE_WORDS = {"false", "no", "off", "0"}


@lru_cache(maxsize=1)
def config_parser() -> Lark:
    return Lark(CONFIG_GRAMMAR, parser="lalr", lexer="contextual", propagate_positions=True)


# --------------------------------------------------------------------
# Settings dataclasses
# --------------------------------------------------------------------
@dataclass(frozen=True)
class GridSettings:
    nodes: int = 2001
    radius: float = 24.0
    adaptive: bool = True
    max_doublings: int = 3


@dataclass(frozen=True)
class SolverSettings:
    path_points: int = 17
    descent_tol: float = 1e-8
    max_iters: int = 500
    seed_amplitude: float = 1.0
    bump_radius: float = 4.0
    newton: bool = True
    newton_switch: float = 1e-3


@dataclass(frozen=True)
class VerifySettings:
    residual_tol: float = 1e-3
    pohozaev_tol: float = 1e-3
    energy_rtol: float = 1e-4
    fit_r2: float = 0.99


@dataclass(frozen=True)
class SweepSettings:
    kappas: Tuple[float, ...] = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3)
    workers: int = 1
    threshold_tol: float = 1e-3


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "results"
    table_t_max: float = 10.0
    table_samples: int = 201


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec = field(default_factory=ModelSpec)
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    grid: GridSettings = field(default_factory=GridSettings)
    solver: SolverSettings = field(default_factory=SolverSettings)
    verify: VerifySettings = field(default_factory=VerifySettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    output: OutputSettings = field(default_factory=OutputSettings)

    def radial_grid(self) -> RadialGrid:
        return RadialGrid(dim=self.model.dim, radius=self.grid.radius, nodes=self.grid.nodes)

    def solver_config(self, kappa: Optional[float] = None, initial_guess: Optional[Field] = None) -> SolverConfig:
        spec = self.model if kappa is None else self.model.with_kappa(kappa)
        solver = self.solver
        return SolverConfig(
            model_spec=spec,
            potential=self.potential,
            grid=self.radial_grid(),
            path_points=solver.path_points,
            descent_tol=solver.descent_tol,
            max_iters=solver.max_iters,
            seed_amplitude=solver.seed_amplitude,
            bump_support=solver.bump_radius,
            newton=solver.newton,
            newton_switch=solver.newton_switch,
            adaptive_radius=self.grid.adaptive,
            max_doublings=self.grid.max_doublings,
            initial_guess=initial_guess,
        )

    def tolerances(self) -> VerificationTolerances:
        verify = self.verify
        return VerificationTolerances(residual_tol=verify.residual_tol, pohozaev_tol=verify.pohozaev_tol,
                                      energy_rtol=verify.energy_rtol, fit_r2=verify.fit_r2)

    def with_overrides(self, nodes: Optional[int] = None, radius: Optional[float] = None,
                       kappa: Optional[float] = None, directory: Optional[str] = None,
                       workers: Optional[int] = None, kappas: Optional[Sequence[float]] = None) -> "RunConfig":
        """Command-line overrides; the result is validated like a parsed config."""
        config = self
        if nodes is not None:
            config = replace(config, grid=replace(config.grid, nodes=nodes))
        if radius is not None:
            config = replace(config, grid=replace(config.grid, radius=radius))
        if kappa is not None:
            config = replace(config, model=config.model.with_kappa(kappa))
        if directory is not None:
            config = replace(config, output=replace(config.output, directory=directory))
        if workers is not None:
            config = replace(config, sweep=replace(config.sweep, workers=workers))
        if kappas is not None:
            config = replace(config, sweep=replace(config.sweep, kappas=tuple(float(k) for k in kappas)))
        validate_run_config(config)
        return config


# --------------------------------------------------------------------
# Parse tree -> sections
# --------------------------------------------------------------------
@dataclass
class RawEntry:
    key: str
    text: str
    line: int


@dataclass
class RawSection:
    name: str
    line: int
    entries: List[RawEntry]


class ConfigTransformer(Transformer):
    def __init__(self, text: str):
        super().__init__()
        self.text = text

    def start(self, children) -> List[RawSection]:
        return [child for child in children if isinstance(child, RawSection)]

    def section(self, children) -> RawSection:
        name, line = children[0]
        return RawSection(name=name, line=line, entries=list(children[1:]))

    def header(self, children) -> Tuple[str, int]:
        token: Token = children[0]
        return str(token), token.line

    def entry(self, children) -> RawEntry:
        key, value = children
        raw = str(value)
        if self.text[value.end_pos:value.end_pos + 1] == "#" and not raw[-1].isspace():
            raise ConfigurationError(
                f"'#' directly after the value of '{key}' at column {value.end_column}; "
                f"values cannot contain '#', and an inline comment needs whitespace before it",
                field=str(key), line=key.line)
        return RawEntry(key=str(key), text=raw.strip(), line=key.line)


def _syntax_error(error: UnexpectedInput, text: str) -> ConfigurationError:
    if isinstance(error, UnexpectedCharacters):
        detail = f"unexpected character {error.char!r} at column {error.column}"
    elif isinstance(error, UnexpectedEOF):
        detail = "unexpected end of input"
    elif isinstance(error, UnexpectedToken):
        if error.token.type == "$END":
            detail = "unexpected end of input"
        elif error.token.type == "_NL":
            detail = f"missing value at column {error.column}"
        else:
            detail = f"unexpected {error.token!r} at column {error.column}"
    else:
        detail = "syntax error"
    line = getattr(error, "line", None)
    if line is None or line < 1:
        line = max(1, text.rstrip("\n").count("\n") + 1)
    return ConfigurationError(f"malformed config: {detail}", line=line)


def _convert(type_name: str, entry: RawEntry, section: str) -> Any:
    text = entry.text
    where = f"[{section}] {entry.key}"
    try:
        if type_name == "float":
            value = float(text)
            if math.isnan(value):
                raise ValueError(text)
            return value
        if type_name == "int":
            return int(text)
        if type_name == "bool":
            lowered = text.lower()
            if lowered in TRUE_WORDS:
                return True
            if lowered in FALSE_WORDS:
                return False
            raise ValueError(text)
        if type_name == "float_list":
            return tuple(float(item) for item in text.split(",") if item.strip())
        if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
            return text[1:-1]
        return text
    except ValueError:
        expected = {"float": "a number", "int": "an integer", "bool": "true or false",
                    "float_list": "a comma-separated list of numbers"}.get(type_name, "a value")
        raise ConfigurationError(f"malformed value for {where}: expected {expected}, got {text!r}",
                                 field=entry.key, line=entry.line) from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; every error carries the offending line."""
    try:
        tree = config_parser().parse(text + "\n")
    except UnexpectedInput as error:
        raise _syntax_error(error, text) from None
    try:
        sections = ConfigTransformer(text).transform(tree)
    except VisitError as error:
        raise error.orig_exc from None

    definitions = Definitions()
    values: Dict[str, Dict[str, Any]] = {}
    lines: Dict[Tuple[str, str], int] = {}
    section_lines: Dict[str, int] = {}
    for section in sections:
        if not definitions.is_known_section(section.name):
            raise ConfigurationError(
                f"unknown section [{section.name}] (expected one of: {', '.join(definitions.sections())})",
                line=section.line)
        if section.name in section_lines:
            raise ConfigurationError(f"duplicate section [{section.name}] (first at line "
                                     f"{section_lines[section.name]})", line=section.line)
        section_lines[section.name] = section.line
        values[section.name] = {}
        for entry in section.entries:
            schema_entry = definitions.get_entry(section.name, entry.key)
            if schema_entry is None:
                raise ConfigurationError(
                    f"unknown key '{entry.key}' in [{section.name}] "
                    f"(expected one of: {', '.join(definitions.keys(section.name))})",
                    field=entry.key, line=entry.line)
            if entry.key in values[section.name]:
                raise ConfigurationError(f"duplicate key '{entry.key}' in [{section.name}]",
                                         field=entry.key, line=entry.line)
            values[section.name][entry.key] = _convert(schema_entry[1], entry, section.name)
            lines[(section.name, entry.key)] = entry.line

    for section, keys in REQUIRED_KEYS.items():
        for key in keys:
            if key not in values.get(section, {}):
                raise ConfigurationError(f"missing required key '{key}' in [{section}]", field=key,
                                         line=section_lines.get(section, 1))

    def line_of(error: ConfigurationError, preferred: Sequence[str]) -> int:
        for section in preferred:
            if (section, error.field) in lines:
                return lines[(section, error.field)]
        for (section, key), line in lines.items():
            if key == error.field:
                return line
        for section in preferred:
            if section in section_lines:
                return section_lines[section]
        return 1

    try:
        config = build_run_config(values)
        validate_run_config(config)
    except ConfigurationError as error:
        if error.line is not None:
            raise
        raise ConfigurationError(str(error), field=error.field,
                                 line=line_of(error, ("model", "potential", "grid", "solver", "sweep"))) from None
    return config


def build_run_config(values: Dict[str, Dict[str, Any]]) -> RunConfig:
    definitions = Definitions()

    def merged(section: str) -> Dict[str, Any]:
        data = definitions.defaults(section)
        data.update(values.get(section, {}))
        return data

    model_values = merged("model")
    model = ModelKind.from_text(model_values["model"])
    q = model_values["q"] if model_values["q"] is not None else DEFAULT_Q[model]
    spec = ModelSpec(model=model, kappa=model_values["kappa"], q=q, dim=model_values["dim"],
                     semilinear=model_values["semilinear"])

    potential_values = merged("potential")
    potential = PotentialSpec(v_infty=potential_values["v_infty"],
                              shape=PotentialShape.from_text(potential_values["shape"]),
                              depth=potential_values["depth"], width=potential_values["width"])

    sweep_values = merged("sweep")
    sweep_values["kappas"] = tuple(float(kappa) for kappa in sweep_values["kappas"])
    return RunConfig(
        model=spec,
        potential=potential,
        grid=GridSettings(**merged("grid")),
        solver=SolverSettings(**merged("solver")),
        verify=VerifySettings(**merged("verify")),
        sweep=SweepSettings(**sweep_values),
        output=OutputSettings(**merged("output")),
    )


def validate_run_config(config: RunConfig):
    """Cross-field checks that need more than one section."""
    config.potential.check_model(config.model.model)
    grid = config.radial_grid()
    tail = float(config.potential.value_at(grid.radius))
    if abs(tail - config.potential.v_infty) > POTENTIAL_TAIL_TOLERANCE:
        raise ConfigurationError(
            f"V(R) = {tail:.10g} differs from v_infty by more than {POTENTIAL_TAIL_TOLERANCE:g}; "
            f"increase the radius or narrow the well", field="radius")
    if config.grid.max_doublings < 0:
        raise ConfigurationError(f"max_doublings must be >= 0, got {config.grid.max_doublings}",
                                 field="max_doublings")
    config.solver_config()

    verify = config.verify
    for name in ("residual_tol", "pohozaev_tol", "energy_rtol"):
        if not getattr(verify, name) > 0.0:
            raise ConfigurationError(f"{name} must be positive, got {getattr(verify, name)}", field=name)
    if not 0.0 < verify.fit_r2 <= 1.0:
        raise ConfigurationError(f"fit_r2 must lie in (0, 1], got {verify.fit_r2}", field="fit_r2")

    sweep = config.sweep
    if not sweep.kappas:
        raise ConfigurationError("sweep kappas must not be empty", field="kappas")
    if list(sweep.kappas) != sorted(sweep.kappas):
        raise ConfigurationError(f"sweep kappas must be sorted ascending, got {list(sweep.kappas)}",
                                 field="kappas")
    if not config.model.semilinear:
        for kappa in sweep.kappas:
            try:
                config.model.with_kappa(kappa)
            except ConfigurationError as error:
                raise ConfigurationError(f"sweep kappa {kappa:g} is inadmissible: {error}", field="kappas") from None
    if sweep.workers < 1:
        raise ConfigurationError(f"workers must be at least 1, got {sweep.workers}", field="workers")
    if not sweep.threshold_tol > 0.0:
        raise ConfigurationError(f"threshold_tol must be positive, got {sweep.threshold_tol}", field="threshold_tol")

    output = config.output
    if not output.directory:
        raise ConfigurationError("output directory must not be empty", field="directory")
    if not output.table_t_max > 0.0:
        raise ConfigurationError(f"table_t_max must be positive, got {output.table_t_max}", field="table_t_max")
    if output.table_samples < 2:
        raise ConfigurationError(f"table_samples must be at least 2, got {output.table_samples}",
                                 field="table_samples")


# --------------------------------------------------------------------
# Canonical serialization
# --------------------------------------------------------------------
def _format(type_name: str, value: Any) -> str:
    if type_name == "float":
        return repr(float(value))
    if type_name == "int":
        return str(int(value))
    if type_name == "bool":
        return "true" if value else "false"
    if type_name == "float_list":
        return ", ".join(repr(float(item)) for item in value)
    return str(value)


def config_values(config: RunConfig) -> Dict[str, Dict[str, Any]]:
    spec = config.model
    potential = config.potential
    return {
        "model": {"model": spec.model.value, "kappa": spec.kappa, "q": spec.q, "dim": spec.dim,
                  "semilinear": spec.semilinear},
        "potential": {"shape": potential.shape.value, "v_infty": potential.v_infty,
                      "depth": potential.depth, "width": potential.width},
        "grid": vars(config.grid),
        "solver": vars(config.solver),
        "verify": vars(config.verify),
        "sweep": vars(config.sweep),
        "output": vars(config.output),
    }


def serialize_config(config: RunConfig) -> str:
    """Canonical text: every section and key in schema order, exact floats, resolved q."""
    values = config_values(config)
    blocks = []
    for section, entries in CONFIG_SCHEMA.items():
        lines = [f"[{section}]"]
        for key, type_name, _, _ in entries:
            # q is written resolved
            lines.append(f"{key} = {_format(type_name, values[section][key])}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
