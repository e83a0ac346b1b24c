"""Target conversion and qubit-scaling iteration schedules.

All variances here are *amplitude* variances in grid units: the statistics
of the normalised amplitude vector read as a mass function. The probability
distribution of a Gaussian-shaped state has half that variance.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

from .exceptions import InfeasibleTargetError

#: Bias of a single walk step; fixed by the H-step construction.
STEP_BIAS = 0.5

TARGET_KEYS = ("mu_hat", "sigma_hat_sq", "x0", "l", "n1", "nm", "c")


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class TargetSpec:
    """A normal distribution to load, in continuous-domain units."""

    mu_hat: float
    sigma_hat_sq: float
    x0: float
    l: float
    n1: int
    nm: int
    c: int = 2

    def __post_init__(self):
        if not self.sigma_hat_sq > 0:
            raise ValueError(f"sigma_hat_sq must be positive, got {self.sigma_hat_sq}")
        if not self.l > 0:
            raise ValueError(f"interval length l must be positive, got {self.l}")
        if not 1 <= self.n1 <= self.nm:
            raise ValueError(f"need 1 <= n1 <= nm, got n1={self.n1}, nm={self.nm}")
        if self.c < 0:
            raise ValueError(f"c must be non-negative, got {self.c}")
        if not self.x0 <= self.mu_hat <= self.x0 + self.l:
            warnings.warn(
                f"mu_hat={self.mu_hat} lies outside [{self.x0}, {self.x0 + self.l}]; "
                "the prepared state will wrap around the register",
                stacklevel=3,
            )

    @classmethod
    def from_dict(cls, data: dict) -> "TargetSpec":
        keys = set(data)
        if keys != set(TARGET_KEYS):
            missing = sorted(set(TARGET_KEYS) - keys)
            extra = sorted(keys - set(TARGET_KEYS))
            raise ValueError(f"bad target keys: missing={missing} unexpected={extra}")
        return cls(
            mu_hat=float(data["mu_hat"]),
            sigma_hat_sq=float(data["sigma_hat_sq"]),
            x0=float(data["x0"]),
            l=float(data["l"]),
            n1=int(data["n1"]),
            nm=int(data["nm"]),
            c=int(data["c"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "TargetSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in TARGET_KEYS}


@dataclass(frozen=True)
class GridMap:
    """Integer-grid view of a target: resolution, spacing, mean, variance."""

    N: int
    delta_x: float
    mu: float
    sigma_sq: float
    x0: float = 0.0

    def to_continuous(self, j):
        """Continuous coordinate of grid point(s) ``j``."""
        return self.x0 + j * self.delta_x


def to_grid_units(spec: TargetSpec) -> GridMap:
    N = 2**spec.nm
    scale = N / spec.l
    return GridMap(
        N=N,
        delta_x=spec.l / N,
        mu=scale * (spec.mu_hat - spec.x0),
        sigma_sq=scale * scale * spec.sigma_hat_sq,
        x0=spec.x0,
    )


def exact_iteration_count(grid: GridMap) -> int:
    """Walk steps needed on the full register with no qubit scaling.

    A walk of ``t`` unbiased steps has amplitude variance ``t/4``.
    """
    return round_half_away(4.0 * grid.sigma_sq)


@dataclass(frozen=True)
class Schedule:
    """Iterations per scaling stage; stage ``i`` runs on ``n1 + i`` qubits."""

    n1: int
    t: tuple
    alpha: float = 0.0
    p: float = field(default=STEP_BIAS, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(int(v) for v in self.t))
        if self.n1 < 1:
            raise ValueError("n1 must be >= 1")
        if not self.t:
            raise ValueError("a schedule needs at least one stage")
        if any(v < 0 for v in self.t):
            raise ValueError(f"iteration counts must be non-negative, got {self.t}")

    @property
    def m(self) -> int:
        return len(self.t)

    @property
    def nm(self) -> int:
        return self.n1 + self.m - 1

    @property
    def stage_qubits(self) -> tuple:
        return tuple(self.n1 + i for i in range(self.m))

    @property
    def total_steps(self) -> int:
        return sum(self.t)

    def to_dict(self) -> dict:
        return {
            "n1": self.n1,
            "nm": self.nm,
            "t": list(self.t),
            "alpha": self.alpha,
            "shift": round_half_away(self.alpha),
            "predicted_mean": predicted_mean(self),
            "predicted_variance": predicted_variance(self),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def baseline_variance(m: int) -> float:
    """Variance of the bare scaling cascade (every stage with zero steps)."""
    return (4 ** (m - 1) - 1) / 12.0


def _stage_weights(m: int) -> list:
    # variance contributed by one step at stage k, seen at the final stage
    return [4 ** (m - k) * STEP_BIAS * (1 - STEP_BIAS) for k in range(1, m + 1)]


def predicted_variance(s: Schedule) -> float:
    return baseline_variance(s.m) + sum(w * t for w, t in zip(_stage_weights(s.m), s.t))


def predicted_mean(s: Schedule) -> float:
    m = s.m
    return 0.5 * (2 ** (m - 1) - 1) + sum(
        2 ** (m - k) * s.p * t for k, t in enumerate(s.t, start=1)
    )


def plan_schedule(grid: GridMap, n1: int, nm: int, c: int = 2) -> Schedule:
    """Choose ``[t1, c, ..., c]`` hitting ``grid.sigma_sq``, then trim later stages.

    ``t1`` comes from inverting the closed-form stage variance; rounding
    leftovers are absorbed greedily by stages 2..m. Raises
    :class:`InfeasibleTargetError` below the cascade baseline.
    """
    if not 1 <= n1 <= nm:
        raise ValueError(f"need 1 <= n1 <= nm, got n1={n1}, nm={nm}")
    if c < 0:
        raise ValueError("c must be non-negative")
    m = nm - n1 + 1
    base = baseline_variance(m)
    target = grid.sigma_sq
    if target < base - 1e-12:
        raise InfeasibleTargetError(
            f"variance {target} is below the minimum {base} reachable when "
            f"scaling from {n1} to {nm} qubits",
            minimal_variance=base,
        )
    w = _stage_weights(m)
    t = [0] + [c] * (m - 1)
    rest = sum(wk * tk for wk, tk in zip(w[1:], t[1:]))
    t[0] = max(0, round_half_away((target - base - rest) / w[0]))

    for k in range(1, m):
        residual = target - base - sum(wk * tk for wk, tk in zip(w, t))
        t[k] = max(0, t[k] + round_half_away(residual / w[k]))

    sched = Schedule(n1=n1, t=tuple(t))
    sched = Schedule(n1=n1, t=sched.t, alpha=grid.mu - predicted_mean(sched))
    if not has_headroom(sched):
        warnings.warn(
            f"schedule {list(sched.t)} leaves under 3 standard deviations of "
            f"headroom on {nm} qubits; amplitudes will wrap around the register",
            stacklevel=2,
        )
    return sched


def plan(spec: TargetSpec) -> tuple:
    """Convenience: ``(grid, schedule)`` for a target spec."""
    grid = to_grid_units(spec)
    return grid, plan_schedule(grid, spec.n1, spec.nm, spec.c)


def shift_amount(s: Schedule, grid: GridMap) -> tuple:
    """Mean shift ``(alpha, applied)``; ``applied`` is the integer shift used."""
    alpha = grid.mu - predicted_mean(s)
    return alpha, round_half_away(alpha)


def support_bounds(s: Schedule) -> list:
    """Largest basis index carrying amplitude after each stage, without wraparound."""
    bounds = []
    top = 0
    for i, t in enumerate(s.t):
        if i:
            top = 2 * top + 1
        top += t
        bounds.append(top)
    return bounds


def wraps_around(s: Schedule) -> bool:
    """True if some stage's support reaches the top basis state of its register."""
    return any(b >= 2**n - 1 for b, n in zip(support_bounds(s), s.stage_qubits))


def guard_qubits_needed(s: Schedule) -> int:
    """Extra high-order qubits that keep every stage's walk off the modular boundary."""
    need = 0
    for b, n in zip(support_bounds(s), s.stage_qubits):
        need = max(need, (b + 1).bit_length() - n)
    return max(need, 0)


def has_headroom(s: Schedule, n_sigma: float = 3.0) -> bool:
    """Probability-space mean plus ``n_sigma`` deviations fits below ``2**nm - 1``."""
    sd = math.sqrt(predicted_variance(s) / 2.0)
    return predicted_mean(s) + n_sigma * sd <= 2**s.nm - 1


def exact_equivalent(s: Schedule) -> Schedule:
    """Single-stage schedule on ``nm`` qubits with the same predicted variance."""
    t = round_half_away(4.0 * predicted_variance(s))
    return Schedule(n1=s.nm, t=(t,), alpha=s.alpha + predicted_mean(s) - t / 2.0)


def recurrence_stats(s: Schedule) -> tuple:
    """Mean and variance by iterating the per-step and per-append recurrences."""
    mean = var = 0.0
    for i, t in enumerate(s.t):
        if i:
            mean, var = 2 * mean + 0.5, 4 * var + 0.25
        for _ in range(t):
            mean += s.p
            var += s.p * (1 - s.p)
    return mean, var


def parse_iterations(text: str) -> Sequence[int]:
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)
