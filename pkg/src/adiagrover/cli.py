"""Command-line driver: oracle infidelity sweeps, Grover runs, sector phases
and overlap estimation.

Every subcommand reads an optional flat ``key=value`` config file
(``--config``); command-line flags override it. Sweeps are written as CSV
with a versioned header, single structured results as JSON.

Exit status: 0 on success, 1 on a configuration error, 2 on a numerical
failure (non-adiabatic breakdown, non-finite amplitudes, exhausted retries).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NonAdiabaticError, SpectrumError
from .evolver import sector_phase
from .fitting import fit_both
from .grover import estimate_overlap, optimal_iterations, run_grover
from .hamiltonians import (
    AkltSpec,
    IsingSpec,
    aklt_gap,
    aklt_hf,
    hamiltonian_norm_bound,
    ising_hf,
)
from .operators import StateVector, infidelity
from .protocols import ORACLE_VARIANTS, RngStream, oracle_error, protocol1_oracle, ideal_oracle
from .schedule import KINDS, AnnealSpec

CSV_VERSION = "# adiagrover-csv v1"
# infidelities below this are double-precision round-off, not signal
FIT_FLOOR = 1e-20
NORM_DRIFT_BOUND = 1e-9
BREAKDOWN_WEIGHT = 0.5

# default T grids (start:stop:points-per-decade), 1.5 decades each; tanh grids
# start just above the adiabatic threshold, linear ones inside the power-law regime
DEFAULT_GRIDS = {
    ("ising", "tanh"): "2.5:80:8",
    ("ising", "linear"): "10:320:8",
    ("aklt", "tanh"): "2.5:80:8",
    ("aklt", "linear"): "20:640:8",
}
DEFAULT_ORACLE = {"ising": "spin1", "aklt": "spin1"}

INFIDELITY_COLUMNS = [
    "experiment", "model", "oracle", "schedule", "total_time", "steps",
    "n", "epsilon", "c0", "seed", "infidelity", "norm_drift", "ancilla_weight", "flag",
]
GROVER_COLUMNS = [
    "seed", "step_index", "kind", "applied", "fidelity",
    "n", "oracle", "diffusion", "schedule", "total_time", "success_rate",
]


@dataclass(frozen=True)
class RunRecord:
    experiment: str
    parameters: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.metrics.items():
            if v is None or not math.isfinite(float(v)):
                raise ValueError(f"metric {k!r} is not finite: {v!r}")

    def row(self, columns) -> dict:
        merged = {"experiment": self.experiment, **self.parameters, **self.metrics}
        missing = [c for c in columns if c not in merged]
        if missing:
            raise KeyError(f"record lacks columns {missing}")
        return {c: merged[c] for c in columns}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------- parsing


def parse_time_grid(text: str) -> list[float]:
    """"30", "10,20,40" or geometric "start:stop:points_per_decade"."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, ppd = (float(x) for x in text.split(":"))
            if not (0 < start < stop) or ppd <= 0:
                raise ConfigError(f"bad time grid {text!r}: need 0 < start < stop and ppd > 0")
            k = int(round(math.log10(stop / start) * ppd)) + 1
            values = np.geomspace(start, stop, max(k, 2)).tolist()
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad time grid {text!r}: {exc}") from None
    if not values or any(not math.isfinite(v) or v <= 0 for v in values):
        raise ConfigError(f"total times must be positive and finite: {text!r}")
    return values


def _schedules(text: str) -> list[str]:
    kinds = [s.strip() for s in str(text).split(",") if s.strip()]
    bad = [k for k in kinds if k not in KINDS]
    if bad or not kinds:
        raise ConfigError(f"unknown schedule(s) {bad or text!r}; choose from {KINDS}")
    return kinds


def _seeds(args) -> list[int]:
    if args.seeds is not None:
        try:
            seeds = [int(s) for s in str(args.seeds).split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"bad seed list {args.seeds!r}") from None
    else:
        seeds = [args.seed if args.seed is not None else 0]
    if any(not 0 <= s < 2**64 for s in seeds):
        raise ConfigError("seeds must be 64-bit unsigned integers")
    return seeds


def read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _truthy(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Fill flags left unset on the command line from the config file."""
    if not args.config:
        return
    actions = {a.dest: a for a in parser._actions}
    for key, value in read_config(args.config).items():
        action = actions.get(key)
        if action is None or key in ("help", "config", "command"):
            raise ConfigError(f"unknown config key {key!r}")
        current = getattr(args, key)
        if action.choices is not None and value not in action.choices:
            raise ConfigError(f"bad value for {key}: {value!r}; choose from {list(action.choices)}")
        if isinstance(action, argparse._StoreTrueAction):
            if not current:
                setattr(args, key, _truthy(value))
        elif current is None:
            try:
                setattr(args, key, action.type(value) if action.type else value)
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {key}: {value!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--model", choices=("ising", "aklt"))
    p.add_argument("--schedule", help="comma list of schedule kinds (tanh, linear)")
    p.add_argument("--total-time", help="T: single value, comma list or start:stop:points-per-decade")
    p.add_argument("--steps", type=int, help="integration steps (default from the accuracy heuristic)")
    p.add_argument("--n", type=int, help="register qubits (ising) or sites (aklt)")
    p.add_argument("--epsilon", type=float, help="Ising coupling")
    p.add_argument("--c0", type=float, help="AKLT chemical potential (default -gap/2)")
    p.add_argument("--oracle", choices=ORACLE_VARIANTS)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", help="comma list of seeds")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--sampled", action="store_true", help="sample measurement outcomes / shot noise")
    p.add_argument("--threads", type=int, help="worker processes for independent sweep points")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adiagrover", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("oracle-infidelity", help="oracle infidelity vs T with decay fits")
    _add_common(p)
    p.add_argument("--fits-out", help="fit JSON path (default: next to --out, else stderr)")

    p = sub.add_parser("grover-run", help="full Grover search trajectory per seed")
    _add_common(p)
    p.add_argument("--diffusion", choices=ORACLE_VARIANTS)
    p.add_argument("--iterations", type=int)

    p = sub.add_parser("sector-phase", help="phase difference of the E+ and E- sectors")
    _add_common(p)
    p.add_argument("--energies", help="E+,E- pair (default 1,-1)")

    p = sub.add_parser("overlap-estimate", help="overlap with the target from Grover oscillations")
    _add_common(p)
    p.add_argument("--initial", help="uniform, random, or a .npy / text file of amplitudes")
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--shots", type=int, help="shots per point in --sampled mode (default 1000)")
    return parser


# ---------------------------------------------------------------- helpers


def _model_hf(model: str, n: int | None, epsilon: float | None, c0: float | None):
    if model == "ising":
        if c0 is not None:
            raise ConfigError("--c0 applies to the aklt model only")
        n = 2 if n is None else n
        eps = 1.0 if epsilon is None else epsilon
        if n < 1 or not eps > 0:
            raise ConfigError("ising needs n >= 1 and epsilon > 0")
        return ising_hf(IsingSpec(n, eps)), {"n": n, "epsilon": eps, "c0": 0.0}
    if epsilon is not None:
        raise ConfigError("--epsilon applies to the ising model only")
    n = 3 if n is None else n
    spec = AkltSpec(n, c0)
    c0_used = -aklt_gap(n) / 2.0 if c0 is None else c0
    return aklt_hf(spec), {"n": n, "epsilon": 1.0, "c0": c0_used}


def _eigen_superposition(hf) -> StateVector:
    _, v = hf.eigh()
    return StateVector.normalized(v.sum(axis=1), hf.dims)


def _ancilla_for(variant: str) -> str:
    return "spin1" if variant in ("spin1", "ideal") else "pair"


def _anneal_spec(kind: str, total_time: float, hf, variant: str, steps: int | None) -> AnnealSpec:
    hn = hamiltonian_norm_bound(hf, _ancilla_for(variant))
    return AnnealSpec.auto(kind, total_time, hn, steps)


def _pmap(fn, tasks: list, threads: int | None) -> list:
    """Map in config order; worker processes when threads > 1."""
    if threads is not None and threads < 1:
        raise ConfigError("--threads must be >= 1")
    if not threads or threads == 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _write_csv(columns, records: list[RunRecord], header: list[str], out: str | None) -> None:
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    for line in header:
        buf.write(f"# {line}\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec.row(columns))
    _emit(buf.getvalue(), out)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _units_line(model: str, gap: float) -> str:
    if model == "aklt":
        return (f"units: energies in the AKLT projector normalization, gap Delta={gap!r}; "
                "times in inverse energy units; T is time per unit of schedule parameter s")
    return ("units: energies in units of epsilon; times in units of 1/epsilon; "
            "T is time per unit of schedule parameter s")


# ---------------------------------------------------------------- oracle-infidelity


def _infidelity_task(task: tuple) -> dict:
    model, n, epsilon, c0, variant, kind, total_time, steps, sampled, seed = task
    hf, _ = _model_hf(model, n, epsilon if model == "ising" else None, c0 if model == "aklt" else None)
    phi = _eigen_superposition(hf)
    spec = _anneal_spec(kind, total_time, hf, variant, steps)
    if sampled and variant == "p1":
        try:
            out = protocol1_oracle(hf, phi, spec, RngStream(seed))
        except NonAdiabaticError:
            return {"steps": spec.steps, "infidelity": 1.0, "norm_drift": 0.0, "weight": 0.0}
        ideal = ideal_oracle(hf, phi) if out.applied else phi
        return {"steps": spec.steps, "infidelity": infidelity(out.register_state, ideal),
                "norm_drift": 0.0, "weight": out.weight}
    err, weight, drift = oracle_error(variant, hf, phi, spec)
    return {"steps": spec.steps, "infidelity": err, "norm_drift": drift, "weight": weight}


def _flag(metrics: dict) -> str:
    if not metrics["norm_drift"] <= NORM_DRIFT_BOUND:
        return "norm"
    if metrics["weight"] < BREAKDOWN_WEIGHT:
        return "breakdown"
    if metrics["infidelity"] < FIT_FLOOR:
        return "floor"
    return "ok"


def fit_rows(records: list[RunRecord], gap: float) -> dict:
    """Exponential and power-law fits per schedule over unflagged rows."""
    out = {}
    for kind in dict.fromkeys(r.parameters["schedule"] for r in records):
        rows = [r for r in records if r.parameters["schedule"] == kind]
        used = [r for r in rows if r.parameters["flag"] == "ok"]
        entry = {
            "n_points": len(used),
            "excluded": [{"total_time": r.parameters["total_time"], "flag": r.parameters["flag"]}
                         for r in rows if r.parameters["flag"] != "ok"],
        }
        if len(used) >= 3:
            fits = fit_both([r.parameters["total_time"] for r in used],
                            [r.metrics["infidelity"] for r in used])
            entry.update({m: f.to_dict() for m, f in fits.items()})
            entry["eta_fit"] = fits["exponential"].rate / gap
            entry["preferred"] = max(fits, key=lambda m: fits[m].r_squared)
        else:
            entry["error"] = "fewer than 3 usable points"
        out[kind] = entry
    return out


def cmd_oracle_infidelity(args) -> int:
    model = args.model or "ising"
    kinds = _schedules(args.schedule or "tanh,linear")
    variant = args.oracle or DEFAULT_ORACLE[model]
    if variant == "ideal":
        raise ConfigError("oracle-infidelity needs an annealed oracle (spin1, p1, p2)")
    hf, params = _model_hf(model, args.n, args.epsilon, args.c0)
    gap = aklt_gap(params["n"]) if model == "aklt" else 2.0 * params["epsilon"]
    seed = args.seed if args.seed is not None else 0
    tasks = []
    for kind in kinds:
        grid = parse_time_grid(args.total_time or DEFAULT_GRIDS[(model, kind)])
        for t in grid:
            tasks.append((model, params["n"], args.epsilon, args.c0, variant, kind, t,
                          args.steps, bool(args.sampled), seed))
    results = _pmap(_infidelity_task, tasks, args.threads)
    records = []
    for task, res in zip(tasks, results):
        rec = RunRecord(
            "oracle_infidelity",
            {"model": model, "oracle": variant, "schedule": task[5], "total_time": task[6],
             "steps": res["steps"], **params, "seed": seed, "flag": _flag(res)},
            {"infidelity": res["infidelity"], "norm_drift": res["norm_drift"],
             "ancilla_weight": res["weight"]},
        )
        records.append(rec)
    header = [_units_line(model, gap),
              f"flags: breakdown = ancilla weight < {BREAKDOWN_WEIGHT}; "
              f"floor = infidelity < {FIT_FLOOR:g}; norm = norm drift > {NORM_DRIFT_BOUND:g}"]
    _write_csv(INFIDELITY_COLUMNS, records, header, args.out)
    fits = json.dumps({"model": model, "oracle": variant, "gap": gap,
                       "fits": fit_rows(records, gap)}, indent=2, sort_keys=True) + "\n"
    fits_path = args.fits_out or (str(Path(args.out).with_suffix(".fits.json")) if args.out else None)
    if fits_path:
        Path(fits_path).write_text(fits)
    else:
        sys.stderr.write(fits)
    return 0


# ---------------------------------------------------------------- grover-run


def _grover_task(task: tuple):
    n, epsilon, variant, diffusion, kind, total_time, steps, iterations, seed = task
    hf = ising_hf(IsingSpec(n, epsilon))
    needs_spec = variant != "ideal" or diffusion != "ideal"
    spec = None
    if needs_spec:
        # one spec serves both; size the step count for the larger ancilla norm
        widest = "p1" if {variant, diffusion} & {"p1", "p2"} else "spin1"
        spec = _anneal_spec(kind, total_time, hf, widest, steps)
    run = run_grover(hf, spec, variant, diffusion, iterations, RngStream(seed),
                     diffusion_epsilon=epsilon)
    return run


def cmd_grover_run(args) -> int:
    if args.model not in (None, "ising"):
        raise ConfigError("grover-run searches an Ising register; --model must be ising")
    n = 4 if args.n is None else args.n
    eps = 1.0 if args.epsilon is None else args.epsilon
    if n < 1 or not eps > 0:
        raise ConfigError("grover-run needs n >= 1 and epsilon > 0")
    variant = args.oracle or "p1"
    diffusion = args.diffusion or ("ideal" if variant == "ideal" else "spin1")
    kinds = _schedules(args.schedule or "tanh")
    if len(kinds) != 1:
        raise ConfigError("grover-run takes a single schedule")
    times = parse_time_grid(args.total_time or "10")
    if len(times) != 1:
        raise ConfigError("grover-run takes a single total time")
    iterations = optimal_iterations(n) if args.iterations is None else args.iterations
    if iterations < 0:
        raise ConfigError("--iterations must be >= 0")
    seeds = _seeds(args)
    tasks = [(n, eps, variant, diffusion, kinds[0], times[0], args.steps, iterations, s) for s in seeds]
    runs = _pmap(_grover_task, tasks, args.threads)

    base = {"n": n, "oracle": variant, "diffusion": diffusion, "schedule": kinds[0],
            "total_time": times[0]}
    records = []
    for seed, run in zip(seeds, runs):
        records.append(RunRecord("grover_run", {"seed": seed, "step_index": 0, "kind": "initial",
                                                "applied": "", **base, "success_rate": ""},
                                 {"fidelity": run.initial_fidelity}))
        for i, st in enumerate(run.steps, 1):
            records.append(RunRecord("grover_run", {"seed": seed, "step_index": i, "kind": st.kind,
                                                    "applied": int(st.applied), **base,
                                                    "success_rate": ""},
                                     {"fidelity": st.fidelity_to_target}))
        oracle_steps = [s for s in run.steps if s.kind == "oracle"]
        rate = sum(s.applied for s in oracle_steps) / len(oracle_steps) if oracle_steps else 1.0
        records.append(RunRecord("grover_run", {"seed": seed, "step_index": len(run.steps),
                                                "kind": "final", "applied": "", **base},
                                 {"fidelity": run.final_fidelity, "success_rate": rate}))
    _write_csv(GROVER_COLUMNS, records, [_units_line("ising", 2.0 * eps),
                                         f"iterations: {iterations}"], args.out)
    return 0


# ---------------------------------------------------------------- sector-phase


def _wrap(angle: float) -> float:
    """Angle mapped into (-pi, pi]."""
    w = math.remainder(angle, 2.0 * math.pi)
    return math.pi if w <= -math.pi else w


def _phase_task(task: tuple) -> dict:
    e_plus, e_minus, kind, total_time, steps = task
    hn = max(abs(e_plus), abs(e_minus), 1.0)
    spec = AnnealSpec.auto(kind, total_time, hn, steps)
    entry = {"schedule": kind, "total_time": total_time, "steps": spec.steps}
    try:
        p_plus = sector_phase(e_plus, spec)
        p_minus = sector_phase(e_minus, spec)
    except NonAdiabaticError as exc:
        entry.update({"breakdown": True, "message": str(exc), "phase_plus": None,
                      "phase_minus": None, "difference": None, "deviation_from_pi": None})
        return entry
    diff = math.remainder(p_minus - p_plus, 2.0 * math.pi) % (2.0 * math.pi)
    entry.update({"breakdown": False, "phase_plus": p_plus, "phase_minus": p_minus,
                  "difference": diff, "deviation_from_pi": abs(_wrap(diff - math.pi))})
    return entry


def cmd_sector_phase(args) -> int:
    text = args.energies or "1,-1"
    try:
        e_plus, e_minus = (float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"--energies needs two comma-separated values, got {text!r}") from None
    if not (e_plus > 0 > e_minus):
        raise ConfigError("--energies needs E+ > 0 > E-")
    kinds = _schedules(args.schedule or "tanh,linear")
    times = parse_time_grid(args.total_time or "100")
    tasks = [(e_plus, e_minus, k, t, args.steps) for k in kinds for t in times]
    results = _pmap(_phase_task, tasks, args.threads)
    spread = {}
    for t in times:
        devs = [r["deviation_from_pi"] for r in results if r["total_time"] == t]
        if len(devs) > 1 and all(d is not None for d in devs):
            spread[repr(t)] = max(devs) - min(devs)
    payload = {"energies": [e_plus, e_minus], "results": results,
               "schedule_spread": spread}
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


# ---------------------------------------------------------------- overlap-estimate


def _load_initial(spec: str, dims, seed: int) -> StateVector:
    dim = int(np.prod(dims))
    if spec == "uniform":
        return StateVector(np.full(dim, dim ** -0.5, dtype=complex), dims)
    if spec == "random":
        g = RngStream(seed).generator
        return StateVector.normalized(g.normal(size=dim) + 1j * g.normal(size=dim), dims)
    path = Path(spec)
    try:
        if path.suffix == ".npy":
            amps = np.load(path)
        else:
            amps = np.loadtxt(path, dtype=complex).reshape(-1)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read initial state {spec!r}: {exc}") from None
    amps = np.asarray(amps, dtype=complex).reshape(-1)
    if amps.size != dim:
        raise ConfigError(f"initial state has {amps.size} amplitudes, register needs {dim}")
    if not np.linalg.norm(amps) > 0:
        raise ConfigError("initial state is zero")
    return StateVector.normalized(amps, dims)


def cmd_overlap_estimate(args) -> int:
    model = args.model or "ising"
    if model == "ising":
        hf, _ = _model_hf("ising", 4 if args.n is None else args.n, args.epsilon, args.c0)
    else:
        hf, _ = _model_hf("aklt", args.n, args.epsilon, args.c0)
    seed = args.seed if args.seed is not None else 0
    initial = _load_initial(args.initial or "uniform", hf.dims, seed)
    variant = args.oracle or "ideal"
    spec = None
    if variant != "ideal":
        kinds = _schedules(args.schedule or "tanh")
        spec = _anneal_spec(kinds[0], parse_time_grid(args.total_time or "10")[0], hf, variant, args.steps)
    shots = None
    if args.sampled:
        shots = 1000 if args.shots is None else args.shots
        if shots < 1:
            raise ConfigError("--shots must be positive")
    max_k = 40 if args.max_iterations is None else args.max_iterations
    if max_k < 2:
        raise ConfigError("--max-iterations must be at least 2")
    est = estimate_overlap(hf, initial, variant, max_k, RngStream(seed),
                           spec_anneal=spec, shots=shots)
    _, v = hf.eigh()
    gamma = float(abs(np.vdot(v[:, 0], initial.amplitudes)))
    payload = {
        "model": model, "oracle": variant, "seed": seed, "sampled": bool(args.sampled),
        "shots": shots, "gamma_hat": est.gamma_hat, "period_hat": est.period_hat,
        "theta_hat": est.theta_hat, "gamma_direct": gamma,
        "period_direct": math.pi / (2.0 * math.asin(gamma)),
        "samples": [[k, p] for k, p in est.samples],
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


COMMANDS = {
    "oracle-infidelity": cmd_oracle_infidelity,
    "grover-run": cmd_grover_run,
    "sector-phase": cmd_sector_phase,
    "overlap-estimate": cmd_overlap_estimate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        _apply_config(sub, args)
        return COMMANDS[args.command](args)
    except (ConfigError, SpectrumError) as exc:
        print(f"adiagrover: config error: {exc}", file=sys.stderr)
        return 1
    except (NonAdiabaticError, FloatingPointError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"adiagrover: numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"adiagrover: config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
