"""Closed-form oracles and distribution metrics for the Galton walk."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln, ndtr

from .schedule import Schedule

#: Above this, binomial coefficients come from log-gamma instead of exact integers.
EXACT_BINOMIAL_LIMIT = 512


class Convention(str, enum.Enum):
    BIN_INTEGRAL = "bin-integral"
    MIDPOINT = "midpoint"


@dataclass(frozen=True)
class DistStats:
    mean_prob: float
    var_prob: float
    mean_amp: float
    var_amp: float
    amp_valid: bool = True


@dataclass(frozen=True)
class TrialsBound:
    t: int
    p_success: float
    expected_trials: float
    upper_bound: float


def binomial_amplitudes(t: int) -> np.ndarray:
    """Amplitudes ``C(t,k)/sqrt(C(2t,t))`` of ``t`` post-selected steps from |0>."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t <= EXACT_BINOMIAL_LIMIT:
        norm = math.sqrt(float(math.comb(2 * t, t)))
        return np.array([math.comb(t, k) / norm for k in range(t + 1)])
    k = np.arange(t + 1)
    log_c = gammaln(t + 1) - gammaln(k + 1) - gammaln(t - k + 1)
    log_norm = 0.5 * (gammaln(2 * t + 1) - 2 * gammaln(t + 1))
    return np.exp(log_c - log_norm)


def theoretical_p0(t: int) -> float:
    """Probability the ``t``-th step from |0> reads 0: ``1 - 1/(2t)``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return 1.0 - 1.0 / (2 * t)


def success_probabilities(t_max: int) -> np.ndarray:
    """``p_s(t)`` for ``t = 1..t_max``, accumulated in log space."""
    k = np.arange(1, t_max + 1)
    return np.exp(np.cumsum(np.log1p(-0.5 / k)))


def success_probability_exact(t: int) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return 1.0
    return float(success_probabilities(t)[-1])


def trials_upper_bound(t: int) -> float:
    """``e^{3/2} sqrt(t-1)``; only meaningful for ``t >= 2``."""
    if t < 2:
        return math.inf  # bound is undefined below two steps
    return math.exp(1.5) * math.sqrt(t - 1)


def expected_trials(t: int) -> TrialsBound:
    p = success_probability_exact(t)
    return TrialsBound(t=t, p_success=p, expected_trials=1.0 / p, upper_bound=trials_upper_bound(t))


def qpochhammer(a: float, q: float, terms: Optional[int] = None, start: int = 1) -> float:
    """``prod_{k=start}^{start+terms-1} (1 - a q^k)``; ``terms=None`` runs to convergence.

    The default ``start=1`` matches the product used in the scaled-run trials
    bound. ``start=0`` gives the textbook symbol.
    """
    if terms is None:
        if abs(q) >= 1:
            raise ValueError("the infinite product needs |q| < 1")
        if a * q**start >= 1:
            raise ValueError("a factor of the product is non-positive")
        prod, k = 1.0, start
        while True:
            factor = 1.0 - a * q**k
            new = prod * factor
            if abs(new - prod) <= 1e-15 * abs(new) or k - start > 10_000:
                return new
            prod, k = new, k + 1
    prod = 1.0
    for k in range(start, start + terms):
        prod *= 1.0 - a * q**k
    return prod


def qpochhammer_lower_bound(t1: int) -> float:
    """``exp(-2/(2 t1 - 1))``, a lower bound on ``(1/t1; 1/2)_inf``."""
    return math.exp(-2.0 / (2 * t1 - 1))


def scaled_trials_bound(t1: int, t_max: int, tight: bool = False) -> float:
    """Upper bound on expected attempts for a scaled schedule.

    ``t1`` is the first-stage count, ``t_max`` the largest later count.
    ``tight=True`` keeps the q-Pochhammer factor instead of its exponential
    lower bound.
    """
    if t1 < 2:
        raise ValueError("the bound assumes t1 >= 2")
    base = 1.0 / success_probability_exact(t1)
    keep = 1.0 - 1.0 / (2 * t1)
    if tight:
        per_stage = keep / qpochhammer(1.0 / t1, 0.5)
    else:
        per_stage = keep * math.exp(2.0 / (2 * t1 - 1))
    return base * per_stage**t_max


def gaussian_reference(
    mu: float,
    sigma_sq: float,
    N: int,
    convention: Convention | str = Convention.BIN_INTEGRAL,
) -> np.ndarray:
    """Unit-norm amplitudes of a discretised normal on grid points ``0..N-1``.

    ``BIN_INTEGRAL`` integrates the density over ``[j, j+1)``; ``MIDPOINT``
    samples it at ``j``. ``sigma_sq`` is the amplitude variance.
    """
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")
    convention = Convention(convention)
    x = np.arange(N, dtype=float)
    sd = math.sqrt(sigma_sq)
    if convention is Convention.BIN_INTEGRAL:
        lo, hi = (x - mu) / sd, (x + 1 - mu) / sd
        # difference the nearer tail to keep precision far from the mean
        amps = np.where(lo > 0, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
    else:
        amps = np.exp(-0.5 * ((x - mu) / sd) ** 2)
    return amps / np.linalg.norm(amps)


def _as_amplitudes(state_or_amps) -> np.ndarray:
    amps = getattr(state_or_amps, "amps", state_or_amps)
    return np.asarray(amps)


def stats(state_or_amps) -> DistStats:
    """Mean and variance of ``|a|^2`` and, for real non-negative ``a``, of ``a/sum(a)``."""
    a = _as_amplitudes(state_or_amps)
    x = np.arange(a.size, dtype=float)
    p = np.abs(a) ** 2
    p = p / p.sum()
    mp = float(p @ x)
    vp = float(p @ (x - mp) ** 2)
    scale = np.abs(a).max()
    real = np.real(a)
    valid = bool(np.all(np.abs(np.imag(a)) <= 1e-9 * scale) and np.all(real >= -1e-9 * scale))
    if not valid:
        return DistStats(mp, vp, math.nan, math.nan, False)
    w = np.clip(real, 0.0, None)
    w = w / w.sum()
    ma = float(w @ x)
    va = float(w @ (x - ma) ** 2)
    return DistStats(mp, vp, ma, va, True)


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def fidelity(a, b) -> float:
    a = _as_amplitudes(a)
    b = _as_amplitudes(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


def place(values, offset: int, size: int) -> np.ndarray:
    """Embed ``values`` at ``offset`` in a zero vector of ``size``, clipping the ends."""
    out = np.zeros(size, dtype=np.asarray(values).dtype)
    values = np.asarray(values)
    lo, hi = max(offset, 0), min(offset + values.size, size)
    if lo < hi:
        out[lo:hi] = values[lo - offset : hi - offset]
    return out


def walk_amplitudes(schedule: Schedule) -> tuple:
    """Classical recursion for the post-selected walk on the unbounded line.

    Returns ``(amplitudes, per_step_p0)``. Each step reads 1 with probability
    ``(a_0^2 + a_t^2 + sum (a_x - a_{x+1})^2) / 4`` and each appended |+>
    qubit duplicates every amplitude with a ``1/sqrt(2)`` factor.
    """
    a = np.array([1.0])
    p0s = []
    for r, t in enumerate(schedule.t):
        if r:
            a = np.repeat(a, 2) / math.sqrt(2.0)
        for _ in range(t):
            diff = np.concatenate(([a[0]], np.diff(-a), [-a[-1]]))
            p1 = 0.25 * float(diff @ diff)
            p0s.append(1.0 - p1)
            summed = np.concatenate((a, [0.0])) + np.concatenate(([0.0], a))
            a = summed / np.linalg.norm(summed)
    return a, p0s


def selection_curve(cfg) -> list:
    """``(global_step, stage, p0)`` triples of the post-selected run of ``cfg``."""
    from .galton import run_post_selected

    _, _, p0s = run_post_selected(cfg)
    sched = cfg.effective_schedule
    stages = [r + 1 for r, t in enumerate(sched.t) for _ in range(t)]
    return [(k + 1, stages[k], p) for k, p in enumerate(p0s)]


def matched_reference(state_or_amps, convention: Convention | str = Convention.BIN_INTEGRAL) -> np.ndarray:
    """Gaussian reference with the same amplitude mean and variance as the input.

    A bin ``[j, j+1)`` has its centre half a step above ``j`` and adds
    ``1/12`` of within-bin variance, so both are undone for ``BIN_INTEGRAL``.
    """
    a = _as_amplitudes(state_or_amps)
    d = stats(a)
    if not d.amp_valid:
        raise ValueError("amplitudes must be real and non-negative")
    if Convention(convention) is Convention.BIN_INTEGRAL:
        return gaussian_reference(d.mean_amp + 0.5, d.var_amp - 1.0 / 12.0, a.size, convention)
    return gaussian_reference(d.mean_amp, d.var_amp, a.size, convention)


def fold(state_or_amps, size: int) -> np.ndarray:
    """Wrap amplitudes onto ``size`` points, as a modular register would hold them."""
    a = _as_amplitudes(state_or_amps)
    if a.size % size:
        raise ValueError(f"{a.size} amplitudes do not fold onto {size}")
    out = a.reshape(-1, size).sum(axis=0)
    return out / np.linalg.norm(out)
