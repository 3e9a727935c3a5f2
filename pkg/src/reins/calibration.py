"""Fit a single numeric configuration field so the equilibrium hits a target loading."""

from __future__ import annotations

from dataclasses import dataclass

from scipy.optimize import brentq

from .equilibrium import StackelbergEquilibrium, solve_stackelberg
from .errors import RootFindingError
from .model import ModelBundle, with_value

__all__ = ["Calibration", "calibrate"]


@dataclass(frozen=True)
class Calibration:
    key: str
    value: float
    bundle: ModelBundle
    equilibrium: StackelbergEquilibrium


def calibrate(
    bundle: ModelBundle,
    key: str = "claims.lambda",
    target_eta: float = 0.7017,
    bracket: tuple[float, float] = (0.5, 2.0),
    t: float = 5.0,
    xtol: float = 1e-12,
) -> Calibration:
    """Solve ``eta*(key = v) = target_eta`` for ``v`` inside ``bracket``.

    The loading must change sign across the bracket; ``eta*`` is increasing
    in the Rayleigh scale, so the default bracket works for the shipped setup.
    """

    def gap(v: float) -> float:
        return solve_stackelberg(with_value(bundle, key, v), t).eta_star - target_eta

    lo, hi = bracket
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo * g_hi > 0:
        raise RootFindingError(f"target loading {target_eta} not bracketed by {key} in {bracket}")
    value = brentq(gap, lo, hi, xtol=xtol)
    fitted = with_value(bundle, key, value)
    return Calibration(key, value, fitted, solve_stackelberg(fitted, t))
