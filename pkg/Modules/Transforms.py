# Transforms.py
# Version: 1.0
# Truncated diffusion coefficient g, its primitive G, the inverse G^{-1}, and
# the model nonlinearities l / f with their primitives.
#
# Every function accepts a scalar or a numpy array and returns the same shape
# (floats for scalar input). Negative arguments use the even extension of g
# and the odd extension of G, implemented once through |t| and sign(t).

import math
import os
import sys
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

repo_home_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(repo_home_path)

from Modules.Definitions import (
    ConfigurationError,
    DEFAULT_Q,
    INVERSE_MAX_ITERATIONS,
    INVERSE_TOLERANCE,
    ModelKind,
    NumericalError,
    POWER_INVERSE_RATIO,
    SATURABLE_INVERSE_RATIO,
    SATURABLE_MAX_EXPONENT,
    SATURABLE_MAX_KAPPA,
    SATURABLE_OUTER_COEFFICIENT,
)


@dataclass(frozen=True)
class ModelSpec:
    """
    Which equation is solved, and with which parameters.

    model       PowerQ (l(t) = |t|^(q-2) t) or Saturable (three-piece f)
    kappa       quasilinear coupling, > 0; 0 only with semilinear=True
    q           nonlinearity exponent
    dim         space dimension N >= 3
    semilinear  reference mode: kappa = 0, g = 1, G = identity
    """
    model: ModelKind = ModelKind.POWER_Q
    kappa: float = 0.02
    q: float = 3.0
    dim: int = 3
    semilinear: bool = False

    def __post_init__(self):
        if not isinstance(self.model, ModelKind):
            object.__setattr__(self, "model", ModelKind.from_text(str(self.model)))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "q", float(self.q))
        if isinstance(self.dim, bool) or int(self.dim) != self.dim:
            raise ConfigurationError(f"dim must be an integer, got {self.dim!r}", field="dim")
        object.__setattr__(self, "dim", int(self.dim))
        self.validate()

    @classmethod
    def with_default_q(cls, model: ModelKind, kappa: float, dim: int = 3, semilinear: bool = False) -> "ModelSpec":
        return cls(model=model, kappa=kappa, q=DEFAULT_Q[model], dim=dim, semilinear=semilinear)

    @property
    def critical_exponent(self) -> float:
        """2* = 2N/(N-2)."""
        return 2.0 * self.dim / (self.dim - 2.0)

    def validate(self):
        if self.dim < 3:
            raise ConfigurationError(f"dim must be at least 3, got {self.dim}", field="dim")
        if not math.isfinite(self.kappa) or not math.isfinite(self.q):
            raise ConfigurationError("kappa and q must be finite numbers", field="kappa")
        if self.semilinear:
            if self.kappa != 0.0:
                raise ConfigurationError(
                    f"semilinear reference mode requires kappa = 0, got {self.kappa}", field="kappa")
        elif self.kappa <= 0.0:
            raise ConfigurationError(
                f"kappa must be > 0 (got {self.kappa}); set semilinear = true for the kappa = 0 reference mode",
                field="kappa")

        two_star = self.critical_exponent
        if self.model is ModelKind.POWER_Q:
            if not (2.0 < self.q < two_star):
                raise ConfigurationError(
                    f"power model requires 2 < q < 2N/(N-2) = {two_star:g}, got q = {self.q}", field="q")
        else:
            upper = min(SATURABLE_MAX_EXPONENT, two_star)
            if not (2.0 < self.q < upper):
                raise ConfigurationError(
                    f"saturable model requires 2 < q < min(14/5, 2N/(N-2)) = {upper:g}, got q = {self.q}",
                    field="q")
            if not self.kappa < SATURABLE_MAX_KAPPA:
                raise ConfigurationError(
                    f"saturable model requires 0 < kappa < 1/3, got kappa = {self.kappa}", field="kappa")

    def with_kappa(self, kappa: float) -> "ModelSpec":
        return ModelSpec(model=self.model, kappa=kappa, q=self.q, dim=self.dim, semilinear=self.semilinear)


class TransformTable:
    """
    Closed-form evaluation of g, g', G, G^{-1} and the nonlinearity for one
    ModelSpec.

    Both models share the inner piece g(t) = sqrt(1 - kappa t^2) for
    |t| < breakpoint and an outer piece g(t) = c1/|t| + c0, so G on the
    outer piece is G(t*) + c1 log(t/t*) + c0 (t - t*).
    """

    def __init__(self, model_spec: ModelSpec):
        self.model_spec = model_spec
        self.kappa = model_spec.kappa
        self.q = model_spec.q
        self.semilinear = model_spec.semilinear or model_spec.kappa == 0.0
        kappa = self.kappa

        if self.semilinear:
            self.breakpoint = math.inf
            self.outer_log = 0.0
            self.outer_affine = 1.0
            self.inverse_ratio = 1.0
            self.g_floor = 1.0
            self.G_break = math.inf
            return

        if model_spec.model is ModelKind.POWER_Q:
            self.breakpoint = math.sqrt(1.0 / (3.0 * kappa))
            self.outer_log = 1.0 / (3.0 * math.sqrt(2.0 * kappa))
            self.outer_affine = math.sqrt(1.0 / 6.0)
            self.inverse_ratio = POWER_INVERSE_RATIO
        else:
            self.breakpoint = 1.0
            root = math.sqrt(1.0 - kappa)
            self.outer_log = kappa / root
            self.outer_affine = (1.0 - 2.0 * kappa) / root
            self.inverse_ratio = SATURABLE_INVERSE_RATIO
        self.g_floor = self.outer_affine
        self.G_break = float(self._G_inner(np.float64(self.breakpoint)))

    # ----------------------------------------------------------------
    # g and g'
    # ----------------------------------------------------------------
    def g(self, t):
        t = np.asarray(t, dtype=float)
        if self.semilinear:
            return np.ones_like(t)
        a = np.abs(t)
        inner = a < self.breakpoint
        a_in = np.minimum(a, self.breakpoint)
        a_out = np.maximum(a, self.breakpoint)
        return np.where(inner,
                        np.sqrt(np.maximum(1.0 - self.kappa * a_in * a_in, 0.0)),
                        self.outer_log / a_out + self.outer_affine)

    def g_prime(self, t):
        t = np.asarray(t, dtype=float)
        if self.semilinear:
            return np.zeros_like(t)
        a = np.abs(t)
        inner = a < self.breakpoint
        a_in = np.minimum(a, self.breakpoint)
        a_out = np.maximum(a, self.breakpoint)
        inner_value = -self.kappa * a_in / np.sqrt(np.maximum(1.0 - self.kappa * a_in * a_in, 1e-300))
        outer_value = -self.outer_log / (a_out * a_out)
        return np.sign(t) * np.where(inner, inner_value, outer_value)

    # ----------------------------------------------------------------
    # G and its inverse
    # ----------------------------------------------------------------
    def _G_inner(self, a):
        root_kappa = math.sqrt(self.kappa)
        return (a * np.sqrt(np.maximum(1.0 - self.kappa * a * a, 0.0)) / 2.0
                + np.arcsin(np.minimum(root_kappa * a, 1.0)) / (2.0 * root_kappa))

    def G(self, u):
        u = np.asarray(u, dtype=float)
        if self.semilinear:
            return u.copy()
        a = np.abs(u)
        inner = a < self.breakpoint
        a_in = np.minimum(a, self.breakpoint)
        a_out = np.maximum(a, self.breakpoint)
        outer_value = (self.G_break
                       + self.outer_log * np.log(a_out / self.breakpoint)
                       + self.outer_affine * (a_out - self.breakpoint))
        return np.sign(u) * np.where(inner, self._G_inner(a_in), outer_value)

    def G_inverse(self, t):
        """
        Solve G(u) = |t| by Newton's method from u = |t|, bracketed in
        [|t|, ratio*|t|]. G is increasing and concave on [0, inf), so the
        iterates approach the root monotonically from below; the bisection
        fallback only triggers on rounding.
        """
        t = np.asarray(t, dtype=float)
        if self.semilinear:
            return t.copy()
        target = np.abs(t)
        lo = target.copy()
        hi = target * self.inverse_ratio
        u = target.copy()
        tolerance = INVERSE_TOLERANCE * np.maximum(1.0, target)
        for _ in range(INVERSE_MAX_ITERATIONS):
            residual = self.G(u) - target
            if np.all(np.abs(residual) <= tolerance):
                return np.sign(t) * u
            below = residual < 0.0
            lo = np.where(below, u, lo)
            hi = np.where(below, hi, u)
            step = u - residual / self.g(u)
            outside = (step < lo) | (step > hi)
            u = np.where(outside, 0.5 * (lo + hi), step)
        residual = self.G(u) - target
        if np.all(np.abs(residual) <= tolerance):
            return np.sign(t) * u
        worst = float(np.max(np.abs(residual)))
        raise NumericalError(f"G_inverse did not converge after {INVERSE_MAX_ITERATIONS} iterations "
                             f"(max residual {worst:.3e})")

    # ----------------------------------------------------------------
    # Nonlinearity l / f, primitive L / F, derivative
    # ----------------------------------------------------------------
    def nonlinearity(self, t):
        """Return (f(t), F(t))."""
        t = np.asarray(t, dtype=float)
        q = self.q
        if self.model_spec.model is ModelKind.POWER_Q:
            a = np.abs(t)
            return a ** (q - 2.0) * t, a ** q / q
        positive = np.maximum(t, 0.0)
        middle = np.minimum(positive, 1.0)
        outer = np.maximum(positive, 1.0)
        s = 1.0 + middle * middle
        f_middle = (1.0 - s ** -3) * middle
        F_middle = middle * middle / 2.0 + 1.0 / (4.0 * s * s) - 0.25
        f_outer = SATURABLE_OUTER_COEFFICIENT * outer ** (q - 1.0)
        F_outer = 7.0 * outer ** q / (8.0 * q) + (5.0 * q - 14.0) / (16.0 * q)
        on_middle = positive <= 1.0
        f = np.where(t <= 0.0, 0.0, np.where(on_middle, f_middle, f_outer))
        F = np.where(t <= 0.0, 0.0, np.where(on_middle, F_middle, F_outer))
        return f, F

    def nonlinearity_prime(self, t):
        t = np.asarray(t, dtype=float)
        q = self.q
        if self.model_spec.model is ModelKind.POWER_Q:
            return (q - 1.0) * np.abs(t) ** (q - 2.0)
        positive = np.maximum(t, 0.0)
        middle = np.minimum(positive, 1.0)
        outer = np.maximum(positive, 1.0)
        s = 1.0 + middle * middle
        d_middle = 1.0 - (1.0 - 5.0 * middle * middle) / s ** 4
        d_outer = SATURABLE_OUTER_COEFFICIENT * (q - 1.0) * outer ** (q - 2.0)
        return np.where(t <= 0.0, 0.0, np.where(positive <= 1.0, d_middle, d_outer))

    # ----------------------------------------------------------------
    # Scalar fast path used inside the ODE right-hand side
    # ----------------------------------------------------------------
    def scalar_terms(self, u: float) -> Tuple[float, float, float]:
        """(g(u), g'(u), l(u)) for a python float, without numpy overhead."""
        a = abs(u)
        if self.semilinear:
            g, g_prime = 1.0, 0.0
        elif a < self.breakpoint:
            g = math.sqrt(1.0 - self.kappa * a * a)
            g_prime = -self.kappa * u / g
        else:
            g = self.outer_log / a + self.outer_affine
            g_prime = -math.copysign(self.outer_log / (a * a), u)
        q = self.q
        if self.model_spec.model is ModelKind.POWER_Q:
            l_value = a ** (q - 2.0) * u
        elif u <= 0.0:
            l_value = 0.0
        elif u <= 1.0:
            l_value = (1.0 - (1.0 + u * u) ** -3) * u
        else:
            l_value = SATURABLE_OUTER_COEFFICIENT * u ** (q - 1.0)
        return g, g_prime, l_value

    # ----------------------------------------------------------------
    # Derived quantities
    # ----------------------------------------------------------------
    def linf_threshold(self) -> float:
        """Largest admissible ||u||_inf for the modified problem to solve the original one."""
        if self.model_spec.model is ModelKind.SATURABLE:
            return 1.0
        if self.semilinear:
            return math.inf
        return self.breakpoint

    def amplitude_floor(self, v0: float) -> float:
        """
        Smallest t > 0 with l(t)/t >= v0. At the maximum of a positive
        solution u'(0) = 0 and Delta u <= 0, so V u <= l(u) there and
        ||u||_inf is at least this value whenever V >= v0.
        """
        q = self.q
        if self.model_spec.model is ModelKind.POWER_Q:
            return v0 ** (1.0 / (q - 2.0))
        if v0 < 1.0 - 2.0 ** -3:
            return math.sqrt((1.0 - v0) ** (-1.0 / 3.0) - 1.0)
        return (v0 / SATURABLE_OUTER_COEFFICIENT) ** (1.0 / (q - 2.0))

    def rows(self, t_max: float = 10.0, samples: int = 201) -> List[Tuple[float, ...]]:
        """Rows (t, g, g', G, G_inverse, f, F) on a uniform grid of [0, t_max]."""
        t = np.linspace(0.0, t_max, samples)
        f, F = self.nonlinearity(t)
        columns = (t, self.g(t), self.g_prime(t), self.G(t), self.G_inverse(t), f, F)
        return [tuple(float(column[i]) for column in columns) for i in range(samples)]


@lru_cache(maxsize=64)
def transform_table(spec: ModelSpec) -> TransformTable:
    return TransformTable(spec)


def _out(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


def g_eval(t, spec: ModelSpec):
    return _out(transform_table(spec).g(t), t)


def g_derivative(t, spec: ModelSpec):
    return _out(transform_table(spec).g_prime(t), t)


def G_eval(u, spec: ModelSpec):
    return _out(transform_table(spec).G(u), u)


def G_inverse(t, spec: ModelSpec):
    return _out(transform_table(spec).G_inverse(t), t)


def nonlinearity_eval(t, spec: ModelSpec):
    f, F = transform_table(spec).nonlinearity(t)
    return _out(f, t), _out(F, t)


def nonlinearity_derivative(t, spec: ModelSpec):
    return _out(transform_table(spec).nonlinearity_prime(t), t)
