"""Dense statevector kernel.

Qubit 0 is the most significant bit of the basis label, so the amplitude
array viewed as ``amps.reshape((2,) * n)`` has qubit ``q`` on axis ``q``.

Gates act in place and return the state they were given, so calls chain.
Fourier-space bookkeeping is left to the caller: :func:`fourier_add` assumes
the register was already transformed by :func:`qft`.
"""

from __future__ import annotations

import csv
import math
import os

import numpy as np

from .exceptions import CapacityError, ProjectionError

DEFAULT_MAX_QUBITS = 24
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_TWO_PI = 2.0 * math.pi


def max_qubits() -> int:
    """Qubit cap, overridable with ``GALTON_MAX_QUBITS`` (never above 24)."""
    env = os.environ.get("GALTON_MAX_QUBITS")
    if env:
        return min(int(env), DEFAULT_MAX_QUBITS)
    return DEFAULT_MAX_QUBITS


class State:
    """Amplitudes of an ``n``-qubit pure state."""

    __slots__ = ("n", "amps")

    def __init__(self, amps):
        amps = np.asarray(amps, dtype=np.complex128)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be one-dimensional")
        n = amps.size.bit_length() - 1
        if amps.size < 2 or amps.size != 1 << n:
            raise ValueError(f"length {amps.size} is not a power of two >= 2")
        if n > max_qubits():
            raise CapacityError(f"{n} qubits exceeds the cap of {max_qubits()}")
        self.n = n
        self.amps = np.ascontiguousarray(amps)

    def __repr__(self):
        return f"State(n={self.n})"

    def copy(self) -> "State":
        return State(self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def to_csv(self, path_or_file):
        """Write ``index,re,im,prob`` rows."""
        own = isinstance(path_or_file, (str, os.PathLike))
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["index", "re", "im", "prob"])
            for i, (a, p) in enumerate(zip(self.amps, self.probabilities())):
                w.writerow([i, repr(float(a.real)), repr(float(a.imag)), repr(float(p))])
        finally:
            if own:
                fh.close()


def _check_qubit(s: State, q: int):
    if not 0 <= q < s.n:
        raise IndexError(f"qubit {q} out of range for {s.n}-qubit state")


def _split(s: State, q: int) -> np.ndarray:
    # view with the bit of qubit q on axis 1
    return s.amps.reshape(1 << q, 2, -1)


def basis_state(n: int, x: int) -> State:
    if not 1 <= n <= max_qubits():
        raise CapacityError(f"cannot allocate {n} qubits (cap {max_qubits()})")
    if not 0 <= x < 1 << n:
        raise ValueError(f"basis index {x} out of range for {n} qubits")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[x] = 1.0
    return State(amps)


def apply_hadamard(s: State, q: int) -> State:
    _check_qubit(s, q)
    v = _split(s, q)
    a = v[:, 0, :].copy()
    b = v[:, 1, :]
    v[:, 0, :] = (a + b) * _INV_SQRT2
    v[:, 1, :] = (a - b) * _INV_SQRT2
    return s


def apply_x(s: State, q: int) -> State:
    _check_qubit(s, q)
    v = _split(s, q)
    v[:] = v[:, ::-1, :].copy()
    return s


def apply_z(s: State, q: int) -> State:
    _check_qubit(s, q)
    _split(s, q)[:, 1, :] *= -1.0
    return s


def apply_u1(s: State, q: int, lam: float) -> State:
    _check_qubit(s, q)
    _split(s, q)[:, 1, :] *= np.exp(1j * lam)
    return s


def apply_cu1(s: State, ctrl: int, tgt: int, lam: float) -> State:
    _check_qubit(s, ctrl)
    _check_qubit(s, tgt)
    if ctrl == tgt:
        raise ValueError("control and target must differ")
    t = s.amps.reshape((2,) * s.n)
    idx = [slice(None)] * s.n
    idx[ctrl] = 1
    idx[tgt] = 1
    t[tuple(idx)] *= np.exp(1j * lam)
    return s


def apply_swap(s: State, a: int, b: int) -> State:
    _check_qubit(s, a)
    _check_qubit(s, b)
    if a != b:
        t = s.amps.reshape((2,) * s.n)
        s.amps[:] = np.swapaxes(t, a, b).reshape(-1)
    return s


def _register(s: State, n_reg):
    n_reg = s.n if n_reg is None else n_reg
    if not 1 <= n_reg <= s.n:
        raise ValueError(f"register of {n_reg} qubits does not fit in {s.n}")
    return n_reg


def qft(s: State, n_reg: int | None = None) -> State:
    """|x> -> 2^{-k/2} sum_y exp(2 pi i x y / 2^k) |y> on the leading ``n_reg`` qubits."""
    k = _register(s, n_reg)
    v = s.amps.reshape(1 << k, -1)
    s.amps[:] = np.fft.ifft(v, axis=0, norm="ortho").reshape(-1)
    return s


def iqft(s: State, n_reg: int | None = None) -> State:
    k = _register(s, n_reg)
    v = s.amps.reshape(1 << k, -1)
    s.amps[:] = np.fft.fft(v, axis=0, norm="ortho").reshape(-1)
    return s


def _is_full_turn(d: float, k: int) -> bool:
    return float(d / 2**k).is_integer()


def adder_phases(n_reg: int, d: float) -> list:
    """``(qubit, angle)`` pairs of the Fourier-space ``+d`` adder.

    Qubit ``q`` takes ``U1(2 pi d / 2^(q+1))``; rotations by whole turns are
    dropped since they are the identity.
    """
    return [
        (q, _TWO_PI * d / 2 ** (q + 1))
        for q in range(n_reg)
        if not _is_full_turn(d, q + 1)
    ]


def fourier_add(s: State, d: float, n_reg: int | None = None) -> State:
    k = _register(s, n_reg)
    for q, lam in adder_phases(k, d):
        apply_u1(s, q, lam)
    return s


def ctrl_fourier_add(s: State, ctrl: int, d: float, n_reg: int | None = None) -> State:
    k = _register(s, n_reg)
    if ctrl < k:
        raise ValueError(f"control qubit {ctrl} lies inside the {k}-qubit register")
    for q, lam in adder_phases(k, d):
        apply_cu1(s, ctrl, q, lam)
    return s


def append_plus_qubit(s: State, position: int | None = None) -> State:
    """New state with a |+> qubit inserted at ``position`` (default: last).

    Inserting at the end of an ``n``-qubit register maps |x> to
    (|2x> + |2x+1>)/sqrt(2).
    """
    pos = s.n if position is None else position
    if not 0 <= pos <= s.n:
        raise IndexError(f"cannot insert a qubit at {pos} in a {s.n}-qubit state")
    if s.n + 1 > max_qubits():
        raise CapacityError(f"{s.n + 1} qubits exceeds the cap of {max_qubits()}")
    v = s.amps.reshape(1 << pos, 1, -1) * _INV_SQRT2
    return State(np.repeat(v, 2, axis=1).reshape(-1))


def prob_of(s: State, q: int, bit: int) -> float:
    _check_qubit(s, q)
    part = _split(s, q)[:, bit, :]
    return float(np.vdot(part, part).real)


def project(s: State, q: int, bit: int) -> State:
    """Collapse qubit ``q`` onto ``bit`` and renormalise, in place."""
    p = prob_of(s, q, bit)
    if p <= 0.0:
        raise ProjectionError(f"outcome {bit} on qubit {q} has zero probability")
    v = _split(s, q)
    v[:, 1 - bit, :] = 0.0
    s.amps /= math.sqrt(p)
    return s


def measure_qubit(s: State, q: int, rng: np.random.Generator) -> tuple:
    """Sample qubit ``q`` with ``rng``; returns ``(bit, s)`` with ``s`` collapsed."""
    p0 = prob_of(s, q, 0) / max(s.norm() ** 2, 1e-300)
    bit = 0 if rng.random() < p0 else 1
    return bit, project(s, q, bit)


def drop_last_qubit(s: State, bit: int = 0) -> State:
    """Data part of a state whose last qubit is known to be ``|bit>``."""
    return State(s.amps.reshape(-1, 2)[:, bit].copy())
