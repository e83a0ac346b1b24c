"""Conceptual-space X/Z errors and their effect on post-selection.

Errors are expressed in the logical (real-space) frame: the register is
taken out of Fourier space, the Pauli is applied, and the QFT is redone, so
the transforms themselves are treated as noiseless. A step with ``n`` data
qubits fails with probability ``1 - (1 - epsilon)^(2n)``.
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import statevector as sv
from .exceptions import ProjectionError
from .galton import FourierMode, RunConfig, RunRecord, _Walk, attempt_rng, run_attempt
from .schedule import Schedule


class ErrorKind(str, enum.Enum):
    BITFLIP_X = "X"
    PHASEFLIP_Z = "Z"


@dataclass(frozen=True)
class ErrorSpec:
    kind: ErrorKind
    j: int
    tau: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ErrorKind(self.kind))
        if self.j < 0:
            raise ValueError("qubit index must be non-negative")
        if self.tau is not None and self.tau < 0:
            raise ValueError("tau must be non-negative")


@dataclass(frozen=True)
class NoiseModel:
    epsilon: float
    multi_error: bool = False

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")

    @staticmethod
    def gates_per_step(n: int) -> int:
        return 2 * n


def op_infidelity(model: NoiseModel, n: int) -> float:
    return 1.0 - (1.0 - model.epsilon) ** NoiseModel.gates_per_step(n)


def discontinuity_count(n: int, j: int, t: int) -> int:
    """``floor(t / 2^(n-j))``: sign-pattern periods of ``Z_j`` spanned by ``t`` states."""
    return t // 2 ** (n - j)


def sign_boundaries(n: int, j: int, t: int) -> int:
    """Sign changes of ``Z_j`` inside the support ``0..t`` of a walk from |0>.

    ``Z_j`` flips sign every ``2^(n-j-1)`` basis states, so this is
    ``floor(t / 2^(n-j-1))``.
    """
    return t // 2 ** (n - j - 1)


def _p1_next(walk: _Walk) -> float:
    s = walk.state.copy()
    anc = walk.ancilla
    sv.apply_hadamard(s, anc)
    sv.ctrl_fourier_add(s, anc, walk.stage_add(), walk.n_reg)
    sv.apply_hadamard(s, anc)
    return sv.prob_of(s, anc, 1)


def _fork(walk: _Walk) -> _Walk:
    twin = copy.copy(walk)
    twin.state = walk.state.copy()
    return twin


def _check_no_wrap(n: int, t: int):
    if not 0 <= t < 2**n - 1:
        raise ValueError(f"t={t} would wrap around a {n}-qubit register")


def rejection_probability(n: int, t: int, spec: ErrorSpec) -> tuple:
    """``(p1_err, p1_clean)`` for one extra step after ``t`` steps and an error."""
    _check_no_wrap(n, t)
    if not 0 <= spec.j < n:
        raise IndexError(f"qubit {spec.j} out of range for {n} qubits")
    walk = _Walk(Schedule(n1=n, t=(t,)), mode=FourierMode.SINGLE_QFT, guard=0)
    for _ in range(t):
        walk.step()
    clean = _p1_next(walk)
    hit = _fork(walk)
    hit.inject(spec.kind.value, spec.j)
    return _p1_next(hit), clean


def rejection_sweep(
    n: int,
    ts: Iterable[int],
    js: Optional[Iterable[int]] = None,
    kinds: Iterable[str] = ("Z", "X"),
) -> list:
    """Rows ``(t, j, kind, p1_err, p1_clean)`` for every combination, one walk shared."""
    ts = sorted(set(ts))
    js = list(range(n)) if js is None else list(js)
    kinds = [ErrorKind(k) for k in kinds]
    if ts:
        _check_no_wrap(n, ts[-1])
    walk = _Walk(Schedule(n1=n, t=(ts[-1] if ts else 0,)), mode=FourierMode.SINGLE_QFT, guard=0)
    rows = []
    done = 0
    for t in ts:
        while done < t:
            walk.step()
            done += 1
        clean = _p1_next(walk)
        for j in js:
            for kind in kinds:
                hit = _fork(walk)
                hit.inject(kind.value, j)
                rows.append((t, j, kind.value, _p1_next(hit), clean))
    return rows


@dataclass
class NoisyRunRecord:
    record: RunRecord
    error_occurred: bool
    errors: list = field(default_factory=list)
    errors_applied: int = 0

    def to_dict(self) -> dict:
        out = self.record.to_dict()
        out["error_occurred"] = self.error_occurred
        out["errors"] = [list(e) for e in self.errors]
        out["errors_applied"] = self.errors_applied
        return out


def draw_errors(sched: Schedule, model: NoiseModel, rng: np.random.Generator) -> list:
    """Error events ``(step, kind, j)`` for a whole circuit execution.

    Every step is drawn, including ones an abort would skip: hardware runs
    the full circuit and post-selects afterwards, so whether an error
    happens does not depend on the ancilla readings.
    """
    events = []
    for k, r in enumerate(_step_plan(sched), start=1):
        n_r = sched.stage_qubits[r]
        if rng.random() < op_infidelity(model, n_r):
            kind = "X" if rng.random() < 0.5 else "Z"
            events.append((k, kind, int(rng.integers(n_r))))
            if not model.multi_error:
                break
    return events


def sample_noisy_run(cfg: RunConfig, model: NoiseModel, rng=None) -> NoisyRunRecord:
    """RUS run with random conceptual errors injected after their steps.

    ``rng`` may be a Generator shared by every attempt; by default each
    attempt draws from ``attempt_rng(cfg.seed, attempt)``.
    """
    sched = cfg.effective_schedule
    total = sched.nm + 1
    for attempt in range(cfg.max_attempts):
        gen = rng if rng is not None else attempt_rng(cfg.seed, attempt)
        events = draw_errors(sched, model, gen)
        pending = {k: (kind, j) for k, kind, j in events}
        applied = []

        def inject(walk, k, _outcome):
            if k in pending:
                walk.inject(*pending[k])
                applied.append(k)

        ok, trace, p0s, final = run_attempt(cfg, gen, after_step=inject)
        if ok:
            break
    rec = RunRecord(attempt + 1, ok, trace, p0s, final, total, cfg.guard)
    return NoisyRunRecord(rec, bool(events), events, len(applied))


@dataclass(frozen=True)
class NoisyAcceptance:
    accept: float
    p_error: float
    reject_given_error: float
    reject_given_no_error: float
    accept_clean: float


def _step_plan(sched: Schedule) -> list:
    return [r for r, t in enumerate(sched.t) for _ in range(t)]


def _run_rest(walk: _Walk, plan: list, start: int) -> float:
    prob = 1.0
    for r in plan[start:]:
        while walk.stage < r:
            walk.advance_stage()
        try:
            out = walk.step()
        except ProjectionError:
            return 0.0
        prob *= out.p0
    return prob


def noisy_acceptance_exact(cfg: RunConfig, model: NoiseModel) -> NoisyAcceptance:
    """Exact acceptance statistics of :func:`sample_noisy_run` (single-error model)."""
    if model.multi_error:
        raise NotImplementedError("exact analysis covers the single-error model only")
    sched = cfg.effective_schedule
    plan = _step_plan(sched)
    walk = _Walk(sched, cfg.fourier_mode, cfg.guard)
    survive = 1.0  # P(no error drawn at earlier steps)
    reach = 1.0  # P(all steps so far read 0)
    accept_err = p_err = 0.0
    for k, r in enumerate(plan):
        while walk.stage < r:
            walk.advance_stage()
        reach *= walk.step().p0
        n_r = walk.active_qubits
        q = op_infidelity(model, n_r)
        if q > 0:
            branch = survive * q
            p_err += branch
            total = 0.0
            for kind in ("X", "Z"):
                for j in range(n_r):
                    hit = _fork(walk)
                    hit.inject(kind, j)
                    total += _run_rest(hit, plan, k + 1)
            accept_err += branch * reach * total / (2 * n_r)
        survive *= 1.0 - q
    accept_no_err = survive * reach
    return NoisyAcceptance(
        accept=accept_no_err + accept_err,
        p_error=p_err,
        reject_given_error=1.0 - accept_err / p_err if p_err > 0 else float("nan"),
        reject_given_no_error=1.0 - reach,
        accept_clean=reach,
    )


def monte_carlo_acceptance(cfg: RunConfig, model: NoiseModel, shots: int) -> dict:
    """Single-attempt shots; shot ``i`` is seeded by ``(cfg.seed, i)``."""
    one = copy.copy(cfg)
    one.max_attempts = 1
    acc = err = acc_err = 0
    for i in range(shots):
        res = sample_noisy_run(one, model, rng=attempt_rng(cfg.seed, i))
        acc += res.record.accepted
        err += res.error_occurred
        acc_err += res.record.accepted and res.error_occurred
    no_err = shots - err
    return {
        "shots": shots,
        "accept_rate": acc / shots,
        "errors": err,
        "reject_given_error": 1 - acc_err / err if err else float("nan"),
        "reject_given_no_error": 1 - (acc - acc_err) / no_err if no_err else float("nan"),
    }


def acceptance_curve(cfg: RunConfig, epsilons: Iterable[float]) -> np.ndarray:
    return np.array([noisy_acceptance_exact(cfg, NoiseModel(e)).accept for e in epsilons])
