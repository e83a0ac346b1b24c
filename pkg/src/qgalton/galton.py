"""Repeat-until-success Galton walk with qubit scaling.

One H-step maps |j> to (|j> + |j+1>)/sqrt(2) when its ancilla reads 0:
Hadamard on the ancilla, a Fourier-space ``+d`` adder controlled by it,
another Hadamard, then a measurement. A 1 outcome discards the attempt.

Two register layouts are supported. ``PER_STAGE`` transforms only the
current ``n_r`` qubits and returns to real space to append each |+> qubit.
``SINGLE_QFT`` transforms the full final register once, with the
not-yet-used low qubits already in |+>, and adds ``2**(m-r)`` at stage ``r``.

``guard_qubits`` extra high-order qubits lift the walk off the modular
boundary of the adder; ``None`` picks the smallest count for which no stage
wraps, so the walk behaves as on the unbounded integer line.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import statevector as sv
from .exceptions import CapacityError
from .schedule import (
    Schedule,
    exact_equivalent,
    guard_qubits_needed,
    round_half_away,
)

_ANCILLA_TOL = 1e-12


class Variant(str, enum.Enum):
    MCMR = "mcmr"
    MCMR_FREE = "mcmr-free"
    EXACT_NO_SCALING = "exact"


class FourierMode(str, enum.Enum):
    PER_STAGE = "per-stage"
    SINGLE_QFT = "single-qft"


@dataclass
class RunConfig:
    schedule: Schedule
    variant: Variant = Variant.MCMR
    seed: int = 0
    max_attempts: int = 1
    fourier_mode: FourierMode = FourierMode.SINGLE_QFT
    guard_qubits: Optional[int] = None
    apply_shift: bool = True
    fractional_shift: bool = False

    def __post_init__(self):
        self.variant = Variant(self.variant)
        self.fourier_mode = FourierMode(self.fourier_mode)
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        if self.guard_qubits is not None and self.guard_qubits < 0:
            raise ValueError("guard_qubits must be non-negative")

    @property
    def effective_schedule(self) -> Schedule:
        if self.variant is Variant.EXACT_NO_SCALING:
            return exact_equivalent(self.schedule)
        return self.schedule

    @property
    def guard(self) -> int:
        if self.guard_qubits is not None:
            return self.guard_qubits
        return guard_qubits_needed(self.effective_schedule)

    def shift(self) -> float:
        alpha = self.effective_schedule.alpha
        return alpha if self.fractional_shift else round_half_away(alpha)


@dataclass
class StepOutcome:
    ancilla_bit: int
    p0: float


@dataclass
class RunRecord:
    attempts: int
    accepted: bool
    ancilla_trace: list = field(default_factory=list)
    per_step_p0: list = field(default_factory=list)
    final_state: Optional[sv.State] = None
    total_qubits: int = 0
    guard_qubits: int = 0

    def to_dict(self, include_probabilities: bool = False) -> dict:
        out = {
            "attempts": self.attempts,
            "accepted": self.accepted,
            "ancilla_trace": list(self.ancilla_trace),
            "per_step_p0": [float(p) for p in self.per_step_p0],
            "total_qubits": self.total_qubits,
        }
        if include_probabilities and self.final_state is not None:
            out["probabilities"] = self.final_state.probabilities().tolist()
        return out

    def to_json(self, include_probabilities: bool = False) -> str:
        return json.dumps(self.to_dict(include_probabilities))


def attempt_rng(seed: int, attempt: int) -> np.random.Generator:
    """Counter-based generator for one attempt, keyed by ``(seed, attempt)``."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(attempt)])
    return np.random.Generator(np.random.Philox(ss))


def _append_zero_qubit(s: sv.State) -> sv.State:
    if s.n + 1 > sv.max_qubits():
        raise CapacityError(f"{s.n + 1} qubits exceeds the cap of {sv.max_qubits()}")
    amps = np.zeros((s.amps.size, 2), dtype=np.complex128)
    amps[:, 0] = s.amps
    return sv.State(amps.reshape(-1))


def apply_H_step(
    s: sv.State,
    ancilla: int,
    stage_add: float = 1,
    rng: Optional[np.random.Generator] = None,
    n_reg: Optional[int] = None,
):
    """One walk step on a Fourier-space register; returns ``(StepOutcome, s)``.

    With ``rng=None`` the ancilla is projected onto 0 (post-selection);
    otherwise it is sampled. A 1 outcome is left in place for the caller
    to discard.
    """
    if sv.prob_of(s, ancilla, 1) > _ANCILLA_TOL:
        raise ValueError(f"ancilla qubit {ancilla} is not in |0>")
    sv.apply_hadamard(s, ancilla)
    sv.ctrl_fourier_add(s, ancilla, stage_add, n_reg)
    sv.apply_hadamard(s, ancilla)
    p0 = sv.prob_of(s, ancilla, 0)
    if rng is None:
        bit = 0
        sv.project(s, ancilla, 0)
    else:
        bit, _ = sv.measure_qubit(s, ancilla, rng)
    return StepOutcome(bit, p0), s


class _Walk:
    """Joint data-plus-ancilla state moving through the scaling stages."""

    def __init__(self, sched: Schedule, mode: FourierMode, guard: int):
        self.sched = sched
        self.mode = mode
        self.guard = guard
        if mode is FourierMode.SINGLE_QFT:
            n_reg = sched.nm + guard
            data = sv.basis_state(n_reg, 0)
            for q in range(sched.n1 + guard, n_reg):
                sv.apply_hadamard(data, q)
        else:
            n_reg = sched.n1 + guard
            data = sv.basis_state(n_reg, 0)
        self.n_reg = n_reg
        self.state = _append_zero_qubit(data)
        sv.qft(self.state, n_reg)
        self.stage = 0

    @property
    def ancilla(self) -> int:
        return self.n_reg

    @property
    def active_qubits(self) -> int:
        """Data qubits in play at the current stage, guard bits excluded."""
        return self.sched.stage_qubits[self.stage]

    def stage_add(self) -> int:
        if self.mode is FourierMode.SINGLE_QFT:
            return 2 ** (self.sched.m - 1 - self.stage)
        return 1

    def advance_stage(self):
        self.stage += 1
        if self.mode is FourierMode.PER_STAGE:
            sv.iqft(self.state, self.n_reg)
            self.state = sv.append_plus_qubit(self.state, position=self.n_reg)
            self.n_reg += 1
            sv.qft(self.state, self.n_reg)

    def step(self, rng=None) -> StepOutcome:
        out, self.state = apply_H_step(
            self.state, self.ancilla, self.stage_add(), rng, self.n_reg
        )
        return out

    def inject(self, kind: str, j: int):
        """Apply X or Z to data qubit ``j`` of the current stage, in real space."""
        if not 0 <= j < self.active_qubits:
            raise IndexError(f"qubit {j} outside the {self.active_qubits}-qubit register")
        gate = {"X": sv.apply_x, "Z": sv.apply_z}[kind]
        sv.iqft(self.state, self.n_reg)
        gate(self.state, self.guard + j)
        sv.qft(self.state, self.n_reg)

    def finish(self, shift: float) -> sv.State:
        if shift:
            sv.fourier_add(self.state, shift, self.n_reg)
        sv.iqft(self.state, self.n_reg)
        return sv.drop_last_qubit(self.state)


StepHook = Callable[[_Walk, int, StepOutcome], None]


def run_attempt(cfg: RunConfig, rng=None, after_step: Optional[StepHook] = None) -> tuple:
    """One MCMR attempt: ``(accepted, trace, per_step_p0, final_state_or_None)``.

    ``after_step(walk, global_step, outcome)`` runs after every step whose
    ancilla read 0.
    """
    sched = cfg.effective_schedule
    walk = _Walk(sched, cfg.fourier_mode, cfg.guard)
    trace, p0s = [], []
    k = 0
    for r, t in enumerate(sched.t):
        if r:
            walk.advance_stage()
        for _ in range(t):
            out = walk.step(rng)
            trace.append(out.ancilla_bit)
            p0s.append(out.p0)
            if out.ancilla_bit:
                return False, trace, p0s, None
            k += 1
            if after_step is not None:
                after_step(walk, k, out)
    shift = cfg.shift() if cfg.apply_shift else 0
    return True, trace, p0s, walk.finish(shift)


def run_mcmr(cfg: RunConfig) -> RunRecord:
    """Repeat attempts until one is accepted or ``max_attempts`` runs out."""
    if cfg.variant is Variant.MCMR_FREE:
        return run_mcmr_free(cfg)
    guard = cfg.guard
    total = cfg.effective_schedule.nm + 1
    for attempt in range(cfg.max_attempts):
        ok, trace, p0s, final = run_attempt(cfg, attempt_rng(cfg.seed, attempt))
        if ok:
            return RunRecord(attempt + 1, True, trace, p0s, final, total, guard)
    return RunRecord(cfg.max_attempts, False, trace, p0s, None, total, guard)


def _deferred_joint(cfg: RunConfig) -> tuple:
    """Evolve with one fresh ancilla per step; returns ``(state, n_reg, n_anc)``."""
    sched = cfg.effective_schedule
    guard = cfg.guard
    if sched.nm + guard + sched.total_steps > sv.max_qubits():
        raise CapacityError(
            f"MCMR-free run needs {sched.nm + guard + sched.total_steps} qubits, "
            f"cap is {sv.max_qubits()}"
        )
    single = cfg.fourier_mode is FourierMode.SINGLE_QFT
    n_reg = (sched.nm if single else sched.n1) + guard
    s = sv.basis_state(n_reg, 0)
    if single:
        for q in range(sched.n1 + guard, n_reg):
            sv.apply_hadamard(s, q)
    sv.qft(s, n_reg)
    n_anc = 0
    for r, t in enumerate(sched.t):
        if r and not single:
            sv.iqft(s, n_reg)
            s = sv.append_plus_qubit(s, position=n_reg)
            n_reg += 1
            sv.qft(s, n_reg)
        add = 2 ** (sched.m - 1 - r) if single else 1
        for _ in range(t):
            s = _append_zero_qubit(s)
            anc = s.n - 1
            sv.apply_hadamard(s, anc)
            sv.ctrl_fourier_add(s, anc, add, n_reg)
            sv.apply_hadamard(s, anc)
            n_anc += 1
    return s, n_reg, n_anc


def _deferred_finish(cfg, s, n_reg, n_anc) -> sv.State:
    data = sv.State(s.amps.reshape(1 << n_reg, 1 << n_anc)[:, 0].copy())
    data.amps /= data.norm()
    if cfg.apply_shift:
        shift = cfg.shift()
        if shift:
            sv.fourier_add(data, shift)
    return sv.iqft(data)


def _prefix_p0(marginal: np.ndarray, n_anc: int) -> list:
    # P(first k ancillas read 0) for k = 0..n_anc; ancilla 1 is the top bit
    prefix = [marginal[: 1 << (n_anc - k)].sum() for k in range(n_anc + 1)]
    return [float(prefix[k] / prefix[k - 1]) for k in range(1, n_anc + 1)]


def run_mcmr_free(cfg: RunConfig) -> RunRecord:
    """Deferred-measurement variant: every ancilla is read once, at the end."""
    s, n_reg, n_anc = _deferred_joint(cfg)
    total = cfg.effective_schedule.nm + n_anc
    guard = cfg.guard
    if n_anc == 0:
        return RunRecord(1, True, [], [], _deferred_finish(cfg, s, n_reg, 0), total, guard)
    probs = s.probabilities().reshape(1 << n_reg, 1 << n_anc)
    marginal = probs.sum(axis=0)
    marginal /= marginal.sum()
    cond = _prefix_p0(marginal, n_anc)
    for attempt in range(cfg.max_attempts):
        rng = attempt_rng(cfg.seed, attempt)
        idx = int(rng.choice(marginal.size, p=marginal))
        trace = [(idx >> (n_anc - 1 - i)) & 1 for i in range(n_anc)]
        first_one = trace.index(1) if 1 in trace else n_anc - 1
        p0s = cond[: first_one + 1]
        if idx == 0:
            final = _deferred_finish(cfg, s, n_reg, n_anc)
            return RunRecord(attempt + 1, True, trace, p0s, final, total, guard)
    return RunRecord(cfg.max_attempts, False, trace, p0s, None, total, guard)


def run_post_selected(cfg: RunConfig) -> tuple:
    """Project every ancilla onto 0: ``(state, acceptance_probability, per_step_p0)``."""
    if cfg.variant is Variant.MCMR_FREE:
        s, n_reg, n_anc = _deferred_joint(cfg)
        if n_anc == 0:
            return _deferred_finish(cfg, s, n_reg, 0), 1.0, []
        probs = s.probabilities().reshape(1 << n_reg, 1 << n_anc)
        cond = _prefix_p0(probs.sum(axis=0), n_anc)
        return _deferred_finish(cfg, s, n_reg, n_anc), float(np.prod(cond)), cond
    _, _, p0s, final = run_attempt(cfg, rng=None)
    return final, float(np.prod(p0s)) if p0s else 1.0, p0s


def qubit_resources(cfg: RunConfig) -> tuple:
    """Physical ``(total_qubits, ancilla_qubits)``; guard qubits are not counted."""
    sched = cfg.effective_schedule
    if cfg.variant is Variant.MCMR_FREE:
        return sched.nm + sched.total_steps, sched.total_steps
    return sched.nm + 1, 1


def resource_table(schedule: Schedule) -> list:
    """Rows ``(method, variant, total, ancillas)`` for scaled and exact runs."""
    rows = []
    for method, sched in (("approximate", schedule), ("exact", exact_equivalent(schedule))):
        for variant in (Variant.MCMR, Variant.MCMR_FREE):
            total, anc = qubit_resources(RunConfig(sched, variant=variant))
            rows.append((method, variant.value, total, anc))
    return rows
