"""Test functions g for linear functionals, with optional antiderivatives.

The named presets are the ones the CLI accepts; any callable works for
library use, an antiderivative just unlocks exact integration against
piecewise-constant densities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import InvalidInputError

__all__ = ["Integrand", "PRESET_INTEGRANDS", "get_integrand"]


@dataclass(frozen=True)
class Integrand:
    """A scalar function of x with an optional exact antiderivative."""

    name: str
    fn: Callable
    antiderivative: Callable | None = None

    def __call__(self, x):
        return self.fn(x)


PRESET_INTEGRANDS = {
    "identity": Integrand("identity", lambda x: np.asarray(x, dtype=float) + 0.0,
                          lambda x: np.asarray(x, dtype=float) ** 2 / 2.0),
    "square": Integrand("square", lambda x: np.asarray(x, dtype=float) ** 2,
                        lambda x: np.asarray(x, dtype=float) ** 3 / 3.0),
    "exp": Integrand("exp", lambda x: np.exp(x), lambda x: np.exp(x)),
    "const": Integrand("const", lambda x: np.ones_like(np.asarray(x, dtype=float)),
                       lambda x: np.asarray(x, dtype=float) + 0.0),
}


def get_integrand(g) -> Integrand:
    """Coerce a preset name or callable to an Integrand."""
    if isinstance(g, Integrand):
        return g
    if isinstance(g, str):
        try:
            return PRESET_INTEGRANDS[g]
        except KeyError:
            raise InvalidInputError(
                f"unknown integrand {g!r}; presets: {sorted(PRESET_INTEGRANDS)}"
            ) from None
    if callable(g):
        return Integrand(getattr(g, "__name__", "custom"), g)
    raise InvalidInputError("g must be an Integrand, preset name, or callable")
