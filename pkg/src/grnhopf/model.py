"""Model parameters and pointwise kinetic functions.

The system couples an mRNA concentration ``m`` and a protein concentration
``p`` on the unit interval.  Transcription happens at a localized gene site
and is repressed by protein through a Hill function; translation happens in
the cytoplasm ``x >= l``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "ModelParams",
    "DiffusionRange",
    "hill",
    "hill_derivs",
    "cyto_indicator",
    "dirac_eps",
    "load_config",
    "CONFIG_KEYS",
]

CONFIG_KEYS = ("alpha_m", "alpha_p", "mu", "h", "l", "x_M", "epsilon", "D")


@dataclass(frozen=True)
class ModelParams:
    """Kinetic and geometric parameters.

    Parameters
    ----------
    alpha_m : float
        Maximal transcription rate.
    alpha_p : float
        Translation rate.
    mu : float
        Common degradation rate of mRNA and protein.
    h : int
        Hill coefficient of the repression.
    l : float
        Position of the nuclear membrane; the cytoplasm is ``[l, 1]``.
    x_M : float
        Center of the gene site, inside the nucleus.
    epsilon : float
        Half-width of the regularized point source.
    """

    alpha_m: float = 1.0
    alpha_p: float = 2.0
    mu: float = 0.03
    h: int = 5
    l: float = 0.5
    x_M: float = 0.1
    epsilon: float = 1e-3

    def __post_init__(self):
        for name in ("alpha_m", "alpha_p", "mu", "epsilon"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {val!r}")
        if int(self.h) != self.h or self.h < 1:
            raise ConfigurationError(f"h must be an integer >= 1, got {self.h!r}")
        object.__setattr__(self, "h", int(self.h))
        if not (0.0 < self.x_M < self.l < 1.0):
            raise ConfigurationError(
                f"need 0 < x_M < l < 1, got x_M={self.x_M!r}, l={self.l!r}")
        if self.epsilon >= min(self.x_M, self.l - self.x_M):
            raise ConfigurationError("source support must lie strictly inside the nucleus")

    @property
    def gain(self) -> float:
        """Loop gain ``alpha_m * alpha_p``."""
        return self.alpha_m * self.alpha_p

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DiffusionRange:
    """Admissible diffusion coefficients together with a current value."""

    d1: float = 1e-7
    d2: float = 0.1
    D: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.d1 <= self.D <= self.d2):
            raise ConfigurationError(
                f"need 0 < d1 <= D <= d2, got {self.d1!r}, {self.D!r}, {self.d2!r}")


def _check_nonneg(p):
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("Hill function is only defined for p >= 0")
    return arr


def _pow_term(coef, p, k):
    # coef * p**k, dropping terms whose coefficient vanishes (avoids 0 * inf at p = 0)
    if coef == 0:
        return np.zeros_like(p)
    return coef * p ** k


def hill(p, h: int):
    """Repression function ``1 / (1 + p**h)``.

    Raises
    ------
    DomainError
        If any ``p`` is negative.
    """
    arr = _check_nonneg(p)
    out = 1.0 / (1.0 + arr ** h)
    return out if np.ndim(p) else float(out)


def hill_derivs(p, h: int):
    """First three derivatives of :func:`hill` in closed form.

    Returns
    -------
    tuple
        ``(f1, f2, f3)``, scalars or arrays matching ``p``.
    """
    arr = _check_nonneg(p)
    u = arr ** h
    d = 1.0 + u
    f1 = -h * _pow_term(1.0, arr, h - 1) / d ** 2
    f2 = h * (_pow_term(h + 1.0, arr, 2 * h - 2) - _pow_term(h - 1.0, arr, h - 2)) / d ** 3
    f3 = -h * (_pow_term((h + 1.0) * (h + 2.0), arr, 3 * h - 3)
               - _pow_term(4.0 * (h * h - 1.0), arr, 2 * h - 3)
               + _pow_term((h - 1.0) * (h - 2.0), arr, h - 3)) / d ** 4
    if np.ndim(p):
        return f1, f2, f3
    return float(f1), float(f2), float(f3)


def cyto_indicator(x, l: float = 0.5):
    """Indicator of the cytoplasm, 1 for ``x >= l`` and 0 otherwise."""
    out = (np.asarray(x) >= l).astype(float)
    return out if np.ndim(x) else float(out)


def dirac_eps(x, x_M: float, epsilon: float):
    """Raised-cosine approximation of a point source at ``x_M``.

    The bump ``(1 + cos(pi (x - x_M) / epsilon)) / (2 epsilon)`` is supported
    on ``|x - x_M| < epsilon`` and has unit integral.
    """
    z = (np.asarray(x, dtype=float) - x_M) / epsilon
    out = np.where(np.abs(z) < 1.0, (1.0 + np.cos(np.pi * z)) / (2.0 * epsilon), 0.0)
    return out if np.ndim(x) else float(out)


def load_config(path=None, overrides: dict | None = None):
    """Read parameters from a flat ``key = value`` file.

    Missing keys fall back to the defaults of :class:`ModelParams`.  Entries of
    ``overrides`` that are not ``None`` take precedence over the file.

    Returns
    -------
    params : ModelParams
    D : float or None
        Diffusion coefficient if given in the file or the overrides.
    """
    values: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            parser.read_string("[params]\n" + text)
        except configparser.Error as exc:
            raise ConfigurationError(f"malformed config {path}: {exc}") from exc
        for key, raw in parser["params"].items():
            if key not in CONFIG_KEYS:
                raise ConfigurationError(f"unknown config key {key!r}")
            try:
                values[key] = float(raw)
            except ValueError as exc:
                raise ConfigurationError(f"config key {key!r}: not a number") from exc
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    D = values.pop("D", None)
    names = {f.name for f in fields(ModelParams)}
    kwargs = {k: v for k, v in values.items() if k in names}
    if "h" in kwargs:
        if float(kwargs["h"]) != int(kwargs["h"]):
            raise ConfigurationError("h must be an integer")
        kwargs["h"] = int(kwargs["h"])
    return ModelParams(**kwargs), D
