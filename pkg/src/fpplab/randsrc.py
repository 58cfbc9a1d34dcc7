"""Seeded random streams and heavy-tailed passage-time laws.

Two laws are supported:

* ``PowerLaw(alpha, t0)`` with survival ``P[X > t] = min(1, (t/t0)**-alpha)``
* ``ShiftedPowerLaw(alpha)`` with survival ``P[X > t] = (t + 1)**-alpha``

All variates come from inverse-CDF transforms of a uniform on the open
interval (0, 1), so the same uniform always maps to the same variate. The
numba kernels elsewhere in the package use the identical transforms.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np
from scipy import integrate

from .errors import ParameterError

__all__ = [
    "LawKind",
    "WeightLaw",
    "RngStream",
    "as_generator",
    "open_uniform",
    "sample",
    "sample_many",
    "sample_residual",
    "residual_from_uniform",
    "tail",
    "residual_tail",
    "residual_min_mean",
    "residual_min_mean_many",
]

_MAX_SEED = 2**64 - 1


class LawKind(str, Enum):
    POWER = "pow"
    SHIFTED = "shiftpow"


@dataclass(frozen=True)
class WeightLaw:
    kind: LawKind = LawKind.POWER
    alpha: float = 0.8
    t0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be positive and finite, got {self.alpha!r}")
        if not (self.t0 > 0 and math.isfinite(self.t0)):
            raise ParameterError(f"t0 must be positive and finite, got {self.t0!r}")

    @classmethod
    def power(cls, alpha: float, t0: float = 1.0) -> "WeightLaw":
        return cls(LawKind.POWER, alpha, t0)

    @classmethod
    def shifted(cls, alpha: float) -> "WeightLaw":
        return cls(LawKind.SHIFTED, alpha, 1.0)

    @classmethod
    def from_dict(cls, d: dict) -> "WeightLaw":
        return cls(LawKind(d.get("kind", "pow")), float(d["alpha"]), float(d.get("t0", 1.0)))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "alpha": self.alpha, "t0": self.t0}

    @property
    def code(self) -> int:
        """Integer tag used by the numba kernels."""
        return 0 if self.kind is LawKind.POWER else 1

    def require_smoothing_range(self) -> None:
        if not (0.5 < self.alpha < 1.0):
            raise ParameterError(f"operation requires alpha in (1/2, 1), got {self.alpha}")


@dataclass
class RngStream:
    """Counter-based random stream identified by ``(master_seed, stream_index)``.

    Backed by Philox keyed through a ``SeedSequence`` spawn key, so distinct
    stream indices give independent streams and the output never depends on
    which worker consumes the stream.
    """

    master_seed: int
    stream_index: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _MAX_SEED:
                raise ParameterError(f"{name} must be an integer in [0, 2**64), got {v!r}")

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_index),))
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def child(self, index: int) -> "RngStream":
        """Independent sub-stream; used when one run needs several decoupled sources."""
        ss = np.random.SeedSequence(
            int(self.master_seed), spawn_key=(int(self.stream_index), int(index))
        )
        s = RngStream(self.master_seed, self.stream_index)
        s._gen = np.random.Generator(np.random.Philox(ss))
        return s


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    raise ParameterError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def open_uniform(gen: np.random.Generator, size=None):
    """Uniforms on (0, 1); the value 0 is redrawn."""
    if size is None:
        u = gen.random()
        while u == 0.0:
            u = gen.random()
        return u
    u = gen.random(size)
    bad = u == 0.0
    while bad.any():
        u[bad] = gen.random(int(bad.sum()))
        bad = u == 0.0
    return u


def _from_uniform(law: WeightLaw, u):
    if law.kind is LawKind.POWER:
        return law.t0 * u ** (-1.0 / law.alpha)
    return u ** (-1.0 / law.alpha) - 1.0


def sample(law: WeightLaw, rng: RngLike) -> float:
    return float(_from_uniform(law, open_uniform(as_generator(rng))))


def sample_many(law: WeightLaw, rng: RngLike, size: int) -> np.ndarray:
    return _from_uniform(law, open_uniform(as_generator(rng), size))


def residual_from_uniform(law: WeightLaw, age, u):
    """Inverse of the conditional CDF of ``X - age`` given ``X > age``."""
    if law.kind is LawKind.SHIFTED:
        # X_s has the law of (s + 1) * X
        return (age + 1.0) * (u ** (-1.0 / law.alpha) - 1.0)
    age = np.asarray(age, dtype=float)
    fresh = law.t0 * u ** (-1.0 / law.alpha)
    old = age * (u ** (-1.0 / law.alpha) - 1.0)
    out = np.where(age >= law.t0, old, fresh - age)
    return out if out.ndim else float(out)


def sample_residual(law: WeightLaw, age: float, rng: RngLike) -> float:
    if not age >= 0:
        raise ParameterError(f"age must be nonnegative, got {age!r}")
    return float(residual_from_uniform(law, age, open_uniform(as_generator(rng))))


def tail(law: WeightLaw, t: float) -> float:
    if law.kind is LawKind.POWER:
        if t <= law.t0:
            return 1.0
        return (t / law.t0) ** (-law.alpha)
    if t <= 0:
        return 1.0
    return (t + 1.0) ** (-law.alpha)


def residual_tail(law: WeightLaw, age: float, s: float) -> float:
    """``P[X - age > s | X > age]``."""
    if s < 0:
        return 1.0
    return tail(law, age + s) / tail(law, age)


def residual_min_mean(law: WeightLaw, t: float, rtol: float = 1e-6) -> float:
    """``E[min(X, Y - t) | Y > t]`` for i.i.d. power-law X, Y, by quadrature.

    The conditional survival is ``P[X > s] * ((t + s)/t)**-alpha``; it is
    integrated piecewise with breakpoints at the cutoff and at ``t``.
    """
    if law.kind is not LawKind.POWER:
        raise ParameterError("residual_min_mean is defined for the power law only")
    law.require_smoothing_range()
    if not t > max(1.0, law.t0):
        raise ParameterError(f"t must exceed max(1, t0), got {t!r}")
    a, t0 = law.alpha, law.t0

    def surv(s):
        px = 1.0 if s <= t0 else (s / t0) ** (-a)
        return px * (1.0 + s / t) ** (-a)

    opts = dict(epsabs=0.0, epsrel=rtol * 1e-2, limit=400)
    total = integrate.quad(surv, 0.0, min(t0, t), **opts)[0]
    if t > t0:
        # on (t0, t) integrate in u = log s, where the integrand is smooth
        total += integrate.quad(lambda u: surv(math.exp(u)) * math.exp(u), math.log(t0), math.log(t), **opts)[0]
    # beyond t the integrand is t^a s^(-2a) (1 + t/s)^(-a) t0^a; map s = t/v and
    # v = w^beta so that the v^(2a-2) singularity at 0 becomes bounded
    beta = 1.0 / (2.0 * a - 1.0)

    def tail_piece(w):
        if w == 0.0:
            return beta * t * (t / t0) ** (-a)
        v = w**beta
        return surv(t / v) * t / (v * v) * beta * w ** (beta - 1.0)

    total += integrate.quad(tail_piece, 0.0, 1.0, **opts)[0]
    return total


@functools.lru_cache(maxsize=16)
def _residual_min_mean_grid(law: WeightLaw, grid_max: float, points: int):
    grid = max(1.0, law.t0) + np.geomspace(1e-6, grid_max, points)
    vals = np.log([residual_min_mean(law, g) for g in grid])
    return grid, vals


def residual_min_mean_many(law: WeightLaw, t, grid_max: float = 1e12, points: int = 481) -> np.ndarray:
    """Vectorized ``residual_min_mean`` by log-log interpolation on a grid.

    The grid runs from just above ``max(1, t0)`` to ``grid_max``; beyond it the
    curve is extended as ``A t**(1 - alpha) + B`` matched at the last two grid
    points.
    """
    lo = max(1.0, law.t0)
    t = np.asarray(t, dtype=float)
    if np.any(t <= lo):
        raise ParameterError(f"t must exceed max(1, t0) = {lo}")
    grid, vals = _residual_min_mean_grid(law, grid_max, points)
    lg = np.log(grid)
    lt = np.log(t)
    out = np.interp(lt, lg, vals)
    far = lt > lg[-1]
    out = np.exp(out)
    p = 1.0 - law.alpha
    (g1, g2), (m1, m2) = grid[-2:], np.exp(vals[-2:])
    A = (m2 - m1) / (g2**p - g1**p)
    out[far] = m2 + A * (t[far] ** p - g2**p)
    return out
