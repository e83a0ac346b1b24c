"""Command-line front end: ``qgalton <command> [options]``.

Commands print to stdout (or ``--out``) and emit data only:

* ``plan``            schedule JSON for a target file
* ``run``             JSON lines, one record per shot, then a summary line
* ``selection-curve`` CSV ``t,stage,n_qubits,p0_theory,p0_sim``
* ``noise-sweep``     CSV ``t,j,kind,p1_err,p1_clean``
* ``resources``       CSV ``method,variant,total_qubits,ancilla_qubits``
* ``export-circuit``  OpenQASM 3 text

Exit codes: 0 success, 1 usage or simulation error, 2 infeasible target,
3 no shot accepted within ``--max-attempts``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analysis, noise
from .circuit import build_circuit, to_qasm
from .exceptions import GaltonError, InfeasibleTargetError
from .galton import FourierMode, RunConfig, Variant, resource_table, run_mcmr, run_post_selected
from .schedule import (
    Schedule,
    TargetSpec,
    parse_iterations,
    plan,
    predicted_mean,
    predicted_variance,
    round_half_away,
)

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_EXHAUSTED = 0, 1, 2, 3

SELECTION_COLUMNS = ("t", "stage", "n_qubits", "p0_theory", "p0_sim")
SWEEP_COLUMNS = ("t", "j", "kind", "p1_err", "p1_clean")
RESOURCE_COLUMNS = ("method", "variant", "total_qubits", "ancilla_qubits")


def _load_spec(path) -> TargetSpec:
    with open(path) as fh:
        return TargetSpec.from_json(fh.read())


def _schedule(args) -> Schedule:
    """Schedule from ``--spec`` or from ``--n1``/``--t`` (with optional ``--alpha``)."""
    if getattr(args, "spec", None):
        return plan(_load_spec(args.spec))[1]
    if args.n1 is None or args.t is None:
        raise SystemExit("give either --spec or both --n1 and --t")
    return Schedule(n1=args.n1, t=parse_iterations(args.t), alpha=args.alpha)


def _config(args, sched: Schedule) -> RunConfig:
    return RunConfig(
        sched,
        variant=Variant(args.variant),
        seed=args.seed,
        max_attempts=args.max_attempts,
        fourier_mode=FourierMode(args.fourier),
    )


def shot_seed(seed: int, shot: int) -> int:
    """Independent 64-bit seed for shot ``shot`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(shot)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_shots(job) -> list:
    cfg, epsilon, shots = job
    out = []
    for i in shots:
        one = RunConfig(**{**vars(cfg), "seed": shot_seed(cfg.seed, i)})
        if epsilon > 0:
            res = noise.sample_noisy_run(one, noise.NoiseModel(epsilon))
            rec, extra = res.record, {"error_occurred": res.error_occurred}
        else:
            rec, extra = run_mcmr(one), {}
        d = {"shot": i, **rec.to_dict(), **extra}
        out.append(d)
    return out


def _write_rows(fh, columns, rows, fmt):
    if fmt == "json":
        for row in rows:
            fh.write(json.dumps(dict(zip(columns, row))) + "\n")
        return
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()


def cmd_plan(args) -> int:
    spec = _load_spec(args.spec)
    try:
        grid, sched = plan(spec)
    except InfeasibleTargetError as err:
        print(
            json.dumps({"feasible": False, "error": str(err), "minimal_variance": err.minimal_variance}),
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    out = {"feasible": True, "grid_mu": grid.mu, "grid_sigma_sq": grid.sigma_sq, **sched.to_dict()}
    with _Output(args.out) as fh:
        fh.write(json.dumps(out) + "\n")
    return EXIT_OK


def _summary(cfg: RunConfig, records: list, epsilon: float) -> dict:
    shots = len(records)
    accepted = sum(r["accepted"] for r in records)
    state, p_acc, _ = run_post_selected(cfg)
    sched = cfg.effective_schedule
    amps = analysis.fold(state, 2**sched.nm)
    d = analysis.stats(amps)
    tv = None
    if d.amp_valid and d.var_amp > 1.0 / 12.0:
        ref = analysis.matched_reference(np.abs(amps))
        tv = analysis.tv_distance(np.abs(amps) ** 2, ref**2)
    attempts = sum(r["attempts"] for r in records)
    return {
        "shots": shots,
        "accepted": accepted,
        "attempts": attempts,
        "acceptance_rate": accepted / attempts,
        "theoretical_acceptance": p_acc,
        "theoretical_sd": math.sqrt(p_acc * (1 - p_acc) / attempts),
        "epsilon": epsilon,
        "predicted_mean": predicted_mean(sched) + (cfg.shift() if cfg.apply_shift else 0),
        "predicted_variance": predicted_variance(sched),
        "mean_amp": d.mean_amp,
        "var_amp": d.var_amp,
        "mean_prob": d.mean_prob,
        "var_prob": d.var_prob,
        "tv_to_gaussian": tv,
    }


def cmd_run(args) -> int:
    if args.shots < 1:
        raise SystemExit("--shots must be at least 1")
    cfg = _config(args, _schedule(args))
    idx = list(range(args.shots))
    if args.workers > 1:
        chunks = [idx[k :: args.workers] for k in range(args.workers)]
        with ProcessPoolExecutor(args.workers) as pool:
            parts = pool.map(_run_shots, [(cfg, args.epsilon, c) for c in chunks])
            records = sorted((r for p in parts for r in p), key=lambda r: r["shot"])
    else:
        records = _run_shots((cfg, args.epsilon, idx))
    summary = _summary(cfg, records, args.epsilon)
    with _Output(args.out) as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")
        fh.write(json.dumps({"summary": summary}) + "\n")
    return EXIT_OK if summary["accepted"] else EXIT_EXHAUSTED


def cmd_selection_curve(args) -> int:
    cfg = _config(args, _schedule(args))
    sched = cfg.effective_schedule
    _, theory = analysis.walk_amplitudes(sched)
    rows = [
        (t, stage, sched.stage_qubits[stage - 1], theory[t - 1], p0)
        for t, stage, p0 in analysis.selection_curve(cfg)
    ]
    with _Output(args.out) as fh:
        _write_rows(fh, SELECTION_COLUMNS, rows, args.format)
    return EXIT_OK


def cmd_noise_sweep(args) -> int:
    ts = parse_iterations(args.t)
    js = parse_iterations(args.j) if args.j else None
    rows = noise.rejection_sweep(args.n, ts, js, kinds=args.kinds.split(","))
    with _Output(args.out) as fh:
        _write_rows(fh, SWEEP_COLUMNS, rows, args.format)
    return EXIT_OK


def cmd_resources(args) -> int:
    with _Output(args.out) as fh:
        _write_rows(fh, RESOURCE_COLUMNS, resource_table(_schedule(args)), args.format)
    return EXIT_OK


def cmd_export_circuit(args) -> int:
    sched = _schedule(args)
    circ = build_circuit(sched, args.fourier, round_half_away(sched.alpha))
    with _Output(args.out) as fh:
        fh.write(to_qasm(circ))
    return EXIT_OK


def _add_schedule_args(p):
    p.add_argument("--spec", help="target spec JSON file")
    p.add_argument("--n1", type=int, help="initial qubit count (with --t)")
    p.add_argument("--t", help="comma-separated iterations per stage, e.g. 2,2,2")
    p.add_argument("--alpha", type=float, default=0.0, help="mean shift (with --t)")


def _add_run_args(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=[v.value for v in Variant], default="mcmr")
    p.add_argument("--fourier", choices=[m.value for m in FourierMode], default="single-qft")
    p.add_argument("--max-attempts", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgalton", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="compute the iteration schedule for a target")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="simulate shots and print JSON lines")
    _add_schedule_args(p)
    _add_run_args(p)
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.0, help="two-qubit gate infidelity")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("selection-curve", help="per-step probability of reading 0")
    _add_schedule_args(p)
    _add_run_args(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_selection_curve)

    p = sub.add_parser("noise-sweep", help="rejection probability after an X or Z error")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--t", default="25,50,75,100,125,150,175,200,225,250")
    p.add_argument("--j", help="comma-separated qubit indices (default: all)")
    p.add_argument("--kinds", default="Z,X")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("resources", help="qubit counts for scaled and exact runs")
    _add_schedule_args(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("export-circuit", help="OpenQASM 3 text for the MCMR circuit")
    _add_schedule_args(p)
    p.add_argument("--fourier", choices=[m.value for m in FourierMode], default="single-qft")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_circuit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleTargetError as err:
        print(f"infeasible target: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (GaltonError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
