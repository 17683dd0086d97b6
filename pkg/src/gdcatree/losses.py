"""Loss functions, their convex conjugates and closed-form dual coordinate steps.

Two families are supported:

* squared error ``l(a) = (a - y)**2`` (2-smooth, so ``gamma = 1/2``)
* hinge ``l(a) = max(0, 1 - y*a)`` with ``y`` in {-1, +1} (non-smooth, ``gamma = 0``)

The dual coordinate step maximizes, over a scalar ``delta``,

    -(lam*m/2) * ||w + delta * x_i / (lam*m)||**2 - l*(-(alpha_i + delta))

which both families solve in closed form.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError

# tolerance on the hinge box constraint 0 <= y*alpha <= 1
BOX_TOL = 1e-12


class LossFamily(enum.IntEnum):
    SQUARED = 0
    HINGE = 1


@dataclass(frozen=True)
class LossSpec:
    """A loss family together with its smoothness constant.

    Losses are ``1/gamma``-smooth; ``gamma == 0`` marks a non-smooth loss.
    """

    family: LossFamily

    @property
    def gamma(self) -> float:
        return 0.5 if self.family is LossFamily.SQUARED else 0.0

    @property
    def is_smooth(self) -> bool:
        return self.gamma > 0

    @classmethod
    def from_name(cls, name: str) -> "LossSpec":
        key = name.strip().lower().replace("-", "_")
        aliases = {
            "squared": LossFamily.SQUARED,
            "squared_error": LossFamily.SQUARED,
            "squarederror": LossFamily.SQUARED,
            "ridge": LossFamily.SQUARED,
            "hinge": LossFamily.HINGE,
            "svm": LossFamily.HINGE,
        }
        if key not in aliases:
            raise ValueError(f"unknown loss family {name!r}; expected 'squared' or 'hinge'")
        return cls(aliases[key])

    @property
    def name(self) -> str:
        return "squared" if self.family is LossFamily.SQUARED else "hinge"


SQUARED = LossSpec(LossFamily.SQUARED)
HINGE = LossSpec(LossFamily.HINGE)


def primal_loss(spec: LossSpec, a: float, y: float) -> float:
    if spec.family is LossFamily.SQUARED:
        return (a - y) ** 2
    return max(0.0, 1.0 - y * a)


def conjugate(spec: LossSpec, b: float, y: float) -> float:
    """Convex conjugate ``l*(b)`` of the loss with label ``y``.

    Callers evaluating the dual pass ``b = -alpha_i``.

    Raises
    ------
    DomainError
        For hinge loss when ``-b*y`` is outside ``[0, 1]``, where the
        conjugate is ``+inf``.
    """
    if spec.family is LossFamily.SQUARED:
        return 0.25 * b * b + y * b
    s = -b * y
    if s < -BOX_TOL or s > 1.0 + BOX_TOL:
        raise DomainError(f"hinge conjugate undefined at b={b!r}, y={y!r} (need -b*y in [0, 1])")
    return y * b


def coordinate_update(
    spec: LossSpec,
    wx: float,
    alpha_i: float,
    xnorm2: float,
    lam: float,
    m: int,
    y: float,
) -> float:
    """Exact maximizer of the single-coordinate dual subproblem.

    Parameters
    ----------
    wx : float
        Current inner product ``w . x_i``.
    alpha_i : float
        Current value of the dual coordinate.
    xnorm2 : float
        Squared norm of ``x_i``; must be positive.
    lam, m : float, int
        Regularization parameter and total number of data points.
    y : float
        Label of the data point.

    Returns
    -------
    float
        The increment ``delta`` to add to ``alpha_i``.
    """
    if not xnorm2 > 0.0:
        raise DomainError(f"xnorm2 must be positive, got {xnorm2!r}")
    return _step(int(spec.family), wx, alpha_i, xnorm2, lam * m, y)


def _step(family: int, wx: float, alpha_i: float, xnorm2: float, lam_m: float, y: float) -> float:
    # kept numba-compatible; the engine kernel compiles an identical copy
    if family == 0:
        return (y - wx - 0.5 * alpha_i) / (xnorm2 / lam_m + 0.5)
    s = lam_m * (1.0 - y * wx) / xnorm2 + alpha_i * y
    s = min(1.0, max(0.0, s))
    return y * s - alpha_i


def subproblem_objective(
    spec: LossSpec,
    delta: float,
    wx: float,
    alpha_i: float,
    xnorm2: float,
    lam: float,
    m: int,
    y: float,
) -> float:
    """Single-coordinate dual objective up to the constant ``-(lam*m/2)*||w||**2``.

    Returns ``-inf`` outside the hinge conjugate's domain.
    """
    lam_m = lam * m
    quad = -delta * wx - 0.5 * delta * delta * xnorm2 / lam_m
    b = -(alpha_i + delta)
    try:
        return quad - conjugate(spec, b, y)
    except DomainError:
        return -math.inf
