"""Gate-level circuit for the MCMR walk and an OpenQASM 3 text emitter.

Layout: data register ``q[0..nm-1]`` (``q[0]`` most significant) plus one
ancilla ``a`` that is measured into ``m[k]`` after step ``k`` and reset.
The data register is read into ``c`` at the end. There are no guard qubits
here, so the adder is modular exactly as it would be on hardware.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import statevector as sv
from .galton import FourierMode
from .schedule import Schedule

GATE_NAMES = ("h", "u1", "cu1", "swap", "measure", "reset")


@dataclass(frozen=True)
class Instr:
    name: str
    qubits: tuple
    param: float = 0.0
    clbit: int = -1  # index into m for mid-circuit reads, -1 for the final read


@dataclass
class Circuit:
    n_data: int
    n_steps: int
    instrs: list = field(default_factory=list)

    @property
    def ancilla(self) -> int:
        return self.n_data

    def add(self, name, *qubits, param=0.0, clbit=-1):
        self.instrs.append(Instr(name, tuple(qubits), float(param), clbit))

    def counts(self) -> Counter:
        return Counter(i.name for i in self.instrs)

    def measurement_count(self) -> int:
        return self.counts()["measure"]


def _qft_instrs(k: int) -> list:
    """Textbook QFT on ``q[0..k-1]``; matches :func:`statevector.qft`."""
    out = []
    for j in range(k):
        out.append(Instr("h", (j,)))
        for i in range(j + 1, k):
            out.append(Instr("cu1", (i, j), math.pi / 2 ** (i - j)))
    for j in range(k // 2):
        out.append(Instr("swap", (j, k - 1 - j)))
    return out


def _inverse(instrs: list) -> list:
    return [Instr(i.name, i.qubits, -i.param) for i in reversed(instrs)]


def _adder(k: int, d: float, ctrl=None) -> list:
    out = []
    for q, lam in sv.adder_phases(k, d):
        if ctrl is None:
            out.append(Instr("u1", (q,), lam))
        else:
            out.append(Instr("cu1", (ctrl, q), lam))
    return out


def build_circuit(
    sched: Schedule,
    mode: FourierMode | str = FourierMode.SINGLE_QFT,
    shift: float = 0,
) -> Circuit:
    mode = FourierMode(mode)
    nm, m = sched.nm, sched.m
    circ = Circuit(nm, sched.total_steps)
    anc = circ.ancilla
    single = mode is FourierMode.SINGLE_QFT
    k = nm if single else sched.n1
    if single:
        for q in range(sched.n1, nm):
            circ.add("h", q)
    circ.instrs += _qft_instrs(k)
    step = 0
    for r, t in enumerate(sched.t):
        if r and not single:
            circ.instrs += _inverse(_qft_instrs(k))
            circ.add("h", k)
            k += 1
            circ.instrs += _qft_instrs(k)
        add = 2 ** (m - 1 - r) if single else 1
        for _ in range(t):
            circ.add("h", anc)
            circ.instrs += _adder(k, add, ctrl=anc)
            circ.add("h", anc)
            circ.add("measure", anc, clbit=step)
            circ.add("reset", anc)
            step += 1
    if shift:
        circ.instrs += _adder(nm, shift)
    circ.instrs += _inverse(_qft_instrs(nm))
    for q in range(nm):
        circ.add("measure", q, clbit=-1)
    return circ


def _fmt(x: float) -> str:
    return repr(float(x))


def to_qasm(circ: Circuit) -> str:
    counts = circ.counts()
    lines = ["// gate counts: " + ", ".join(f"{g}={counts.get(g, 0)}" for g in GATE_NAMES)]
    lines.append(f"// measurements: {circ.measurement_count()}")
    lines += [
        "OPENQASM 3.0;",
        'include "stdgates.inc";',
        f"qubit[{circ.n_data}] q;",
        "qubit a;",
    ]
    if circ.n_steps:
        lines.append(f"bit[{circ.n_steps}] m;")
    lines.append(f"bit[{circ.n_data}] c;")

    def ref(q):
        return "a" if q == circ.ancilla else f"q[{q}]"

    for ins in circ.instrs:
        if ins.name == "measure":
            target = f"m[{ins.clbit}]" if ins.clbit >= 0 else f"c[{ins.qubits[0]}]"
            lines.append(f"{target} = measure {ref(ins.qubits[0])};")
        elif ins.name in ("u1", "cu1"):
            qs = ", ".join(ref(q) for q in ins.qubits)
            lines.append(f"{ins.name}({_fmt(ins.param)}) {qs};")
        else:
            lines.append(f"{ins.name} " + ", ".join(ref(q) for q in ins.qubits) + ";")
    return "\n".join(lines) + "\n"


def replay(circ: Circuit) -> tuple:
    """Simulate with every mid-circuit read post-selected on 0.

    Returns ``(data_state, acceptance_probability, per_step_p0)``; the final
    register measurement is left out so the state can be compared directly.
    """
    s = sv.basis_state(circ.n_data + 1, 0)
    p0s = []
    for ins in circ.instrs:
        if ins.name == "h":
            sv.apply_hadamard(s, ins.qubits[0])
        elif ins.name == "u1":
            sv.apply_u1(s, ins.qubits[0], ins.param)
        elif ins.name == "cu1":
            sv.apply_cu1(s, *ins.qubits, ins.param)
        elif ins.name == "swap":
            sv.apply_swap(s, *ins.qubits)
        elif ins.name == "measure" and ins.clbit >= 0:
            p0s.append(sv.prob_of(s, ins.qubits[0], 0))
            sv.project(s, ins.qubits[0], 0)
        elif ins.name == "reset":
            pass  # already |0> after post-selection
    acc = float(np.prod(p0s)) if p0s else 1.0
    return sv.drop_last_qubit(s), acc, p0s
