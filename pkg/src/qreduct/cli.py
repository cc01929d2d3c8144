"""Batch experiment runner: ``qreduct run <experiment.json>``.

An experiment file is a JSON object::

    {"kind": "sat-solve", "params": {"network": "fig4.json"}, "seed": 0,
     "output": "trace.json", "csv": "trace.csv"}

Relative paths resolve against the experiment file's directory.  The trace
written to ``output`` (stdout when absent) has three parts: ``config`` (the
resolved experiment), ``records`` (per step or per sample) and ``verdict``.
Floats carry 17 significant digits, so equal inputs give byte-identical
traces.  Exit status: 0 ok or satisfied, 2 unsatisfiable, 1 error.

Network files follow the schema of :mod:`qreduct.network`.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _jsonio, fermion, statistics, transmission
from .errors import ExperimentError, NetworkParseError, QReductError
from .evolve import EvolutionConfig, oracle_sweep, solve_sat
from .hilbert import commutator_norm, operator_schmidt_rank
from .network import BooleanNetwork, network_from_dict

EXIT_OK, EXIT_ERROR, EXIT_UNSAT = 0, 1, 2

# kind -> (required params, defaults)
KINDS = {
    "transmission-demo": ({"theta0", "phi_total"}, {"steps": None, "mirror": False}),
    "global-unitary-check": (set(), {"samples": 100, "schmidt_phi": math.pi / 4}),
    "sat-solve": ({"network"}, {"steps": 2000, "free_values": {}}),
    "oracle-compare": (set(), {"max_nodes": 5, "steps": 16, "workers": 1}),
    "fermion-embed": ({"theta0", "phi_total"}, {"steps": None}),
    "malfunction-scan": (set(), {"samples": 1000}),
    "relaxation-scaling": ({"sigma", "p_N"}, {"N": [1, 10, 100, 1000, 10000], "trials": 0}),
    "statistics-demo": (set(), {"k_a": 1.0, "k_b": 0.4, "points": 100, "span": 10.0}),
}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None
    csv: str | None = None
    permissive: bool = False
    cap: int | None = None
    base_dir: str = "."

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ExperimentError(f"unknown experiment kind {self.kind!r}; expected one of {sorted(KINDS)}")
        required, defaults = KINDS[self.kind]
        missing = sorted(required - set(self.params))
        if missing:
            raise ExperimentError(f"{self.kind} needs parameters {missing}")
        object.__setattr__(self, "params", {**defaults, **self.params})

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def echo(self) -> dict:
        return {"kind": self.kind, "params": self.params, "seed": self.seed,
                "permissive": self.permissive, "cap": self.cap}


def _load_json(path, error):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise error(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        err = error(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")
        err.line, err.column = exc.lineno, exc.colno
        raise err from exc


def parse_network(path, cap: int | None = None) -> BooleanNetwork:
    """Read, validate and size-check a network file."""
    net = network_from_dict(_load_json(path, NetworkParseError))
    net.check_size(cap)
    return net


def load_experiment(path) -> ExperimentSpec:
    data = _load_json(path, ExperimentError)
    if not isinstance(data, dict) or "kind" not in data:
        raise ExperimentError(f"{path}: experiment must be an object with a 'kind'")
    unknown = set(data) - {"kind", "params", "seed", "output", "csv", "permissive", "cap"}
    if unknown:
        raise ExperimentError(f"{path}: unknown fields {sorted(unknown)}")
    return ExperimentSpec(
        kind=data["kind"], params=dict(data.get("params", {})), seed=int(data.get("seed", 0)),
        output=data.get("output"), csv=data.get("csv"), permissive=bool(data.get("permissive", False)),
        cap=data.get("cap"), base_dir=str(Path(path).parent),
    )


def _record(trace, i, **extra):
    return {"phi": float(trace.phis[i]), "amplitudes": trace.amplitudes_by_bits(i, 1e-15),
            "residual": float(trace.residuals[i]), **extra}


def _pops(trace, i):
    amps = trace.amplitudes_by_bits(i)
    return abs(amps.get("01", 0)) ** 2, abs(amps.get("10", 0)) ** 2


def _transmission_demo(exp):
    p = exp.params
    tr = transmission.evolve_transmission(p["theta0"], p["phi_total"], p["steps"], mirror=p["mirror"])
    records, rows = [], []
    worst = 0.0
    for i in range(len(tr)):
        exact = transmission.closed_form_state(p["theta0"], tr.phis[i]).amplitudes
        err = float(np.abs(tr.state(i).amplitudes - exact).max())
        worst = max(worst, err)
        pr, ps = tr.populations(i)
        records.append(_record(tr, i, closed_form_error=err))
        rows.append([tr.phis[i], pr, ps, *_pops(tr, i), tr.residuals[i], err])
    header = ["phi", "p_r", "p_s", "pop_01", "pop_10", "residual", "closed_form_error"]
    return EXIT_OK, records, {"kind": "ok", "max_closed_form_error": worst}, header, rows


def _global_unitary_check(exp):
    p = exp.params
    rng = np.random.default_rng(exp.seed)
    records, rows, worst = [], [], 0.0
    for _ in range(int(p["samples"])):
        theta, phi = rng.uniform(0, math.pi / 2, size=2)
        out = transmission.global_unitary(phi).matrix @ transmission.initial_state(theta).amplitudes
        err = float(np.abs(out - transmission.closed_form_state(theta, phi).amplitudes).max())
        worst = max(worst, err)
        records.append({"theta0": theta, "phi": phi, "error": err})
        rows.append([theta, phi, err])
    q = transmission.global_unitary(p["schmidt_phi"])
    verdict = {
        "kind": "ok",
        "max_error": worst,
        "commutator_norm": commutator_norm(q, transmission.symmetrization_projector()),
        "schmidt_rank": operator_schmidt_rank(q, ["r"]),
    }
    return EXIT_OK, records, verdict, ["theta0", "phi", "error"], rows


def _sat_solve(exp):
    p = exp.params
    net = p["network"]
    net = network_from_dict(net) if isinstance(net, dict) else parse_network(exp.resolve(net), exp.cap)
    cfg = EvolutionConfig(steps=int(p["steps"]), seed=exp.seed, permissive=exp.permissive, cap=exp.cap)
    v = solve_sat(net, cfg, p["free_values"])
    records, rows = [], []
    if v.trace is not None:
        for i in range(len(v.trace)):
            pops = v.trace.populations(i)
            records.append(_record(v.trace, i))
            rows.append([v.trace.phis[i], v.trace.residuals[i], *pops])
    verdict = {"kind": v.kind, "witness": v.witness, "diagnostics": v.diagnostics}
    header = ["phi", "residual"] + [f"p_{x}" for x in net.nodes]
    return (EXIT_OK if v.satisfied else EXIT_UNSAT), records, verdict, header, rows


def _oracle_compare(exp):
    p = exp.params
    cfg = EvolutionConfig(steps=int(p["steps"]), seed=exp.seed, cap=exp.cap)
    rows = oracle_sweep(int(p["max_nodes"]), cfg, int(p["workers"]))
    bad = [r["index"] for r in rows
           if r["verdict"] != r["oracle"] or (r["verdict"] == "satisfied" and not r["witness_ok"])]
    verdict = {"kind": "ok" if not bad else "mismatch", "instances": len(rows),
               "unsatisfiable": sum(r["oracle"] == "unsatisfiable" for r in rows), "mismatches": bad}
    csv_rows = [[r["index"], len(r["network"]["nodes"]), r["oracle"], r["verdict"], r["residual"]] for r in rows]
    return (EXIT_OK if not bad else EXIT_ERROR), rows, verdict, \
        ["index", "nodes", "oracle", "verdict", "residual"], csv_rows


def _fermion_embed(exp):
    p = exp.params
    emb = fermion.embedded_evolution(p["theta0"], p["phi_total"], p["steps"])
    ref = transmission.evolve_transmission(p["theta0"], p["phi_total"], p["steps"])
    records, rows, worst = [], [], 0.0
    for i in range(len(emb)):
        alias = emb.alias.state(i)
        q = fermion.malfunction_probability(alias)
        fid = abs(np.vdot(ref.state(i).amplitudes, alias.amplitudes)) ** 2
        worst = max(worst, 1 - fid)
        records.append(_record(emb.alias, i, energy=float(emb.energies[i]), q=q))
        rows.append([emb.phis[i], *_pops(emb.alias, i), emb.alias.residuals[i], q, emb.energies[i]])
    verdict = {"kind": "ok", "max_infidelity_vs_transmission": worst,
               "max_energy": float(np.abs(emb.energies).max())}
    return EXIT_OK, records, verdict, ["phi", "pop_01", "pop_10", "residual", "q", "energy"], rows


def _malfunction_scan(exp):
    rng = np.random.default_rng(exp.seed)
    energies = fermion.TransmissionHamiltonian()
    records, rows, worst = [], [], 0.0
    for k in range(int(exp.params["samples"])):
        state = fermion.random_leakage_state(rng)
        gamma, delta = state.amplitudes[0], state.amplitudes[3]
        q = fermion.malfunction_probability(state)
        xi = fermion.expected_energy(state, energies)
        formula = abs(gamma) ** 2 * energies.E_c + abs(delta) ** 2 * energies.E_d
        worst = max(worst, abs(xi - formula))
        records.append({"sample": k, "q": q, "energy": xi, "energy_formula": formula})
        rows.append([k, q, xi, formula])
    return EXIT_OK, records, {"kind": "ok", "max_energy_error": worst}, \
        ["sample", "q", "energy", "energy_formula"], rows


def _relaxation_scaling(exp):
    p = exp.params
    sigma, p_n, trials = float(p["sigma"]), float(p["p_N"]), int(p["trials"])
    records, rows = [], []
    for k, n in enumerate(p["N"]):
        t = fermion.relaxation_time(sigma, p_n, int(n))
        mc = fermion.simulate_all_ground(sigma, t, int(n), trials, exp.seed + k) if trials else None
        ratio = t / math.log(n) if n > 1 else None
        records.append({"N": int(n), "t": t, "t_over_lnN": ratio, "monte_carlo": mc})
        rows.append([int(n), t, ratio, mc])
    ts = [r["t"] for r in records]
    verdict = {"kind": "ok", "monotone": all(a < b for a, b in zip(ts, ts[1:]))}
    return EXIT_OK, records, verdict, ["N", "t", "t_over_lnN", "monte_carlo"], rows


def _statistics_demo(exp):
    p = exp.params
    rng = np.random.default_rng(exp.seed)
    k = (p["k_a"] - p["k_b"]) / 2
    records, rows, worst = [], [], 0.0
    for _ in range(int(p["points"])):
        x1, x2 = rng.uniform(-p["span"], p["span"], size=2)
        row = {"x": x1 - x2}
        for sector in ("singlet", "triplet"):
            row[sector] = statistics.spatial_density(k, x1 - x2, sector)
            row[sector + "_plane_wave"] = statistics.plane_wave_density(p["k_a"], p["k_b"], x1, x2, sector)
            worst = max(worst, abs(row[sector] - row[sector + "_plane_wave"]))
        records.append(row)
        rows.append(list(row.values()))
    return EXIT_OK, records, {"kind": "ok", "max_density_error": worst}, list(records[0]) if records else [], rows


RUNNERS = {
    "transmission-demo": _transmission_demo,
    "global-unitary-check": _global_unitary_check,
    "sat-solve": _sat_solve,
    "oracle-compare": _oracle_compare,
    "fermion-embed": _fermion_embed,
    "malfunction-scan": _malfunction_scan,
    "relaxation-scaling": _relaxation_scaling,
    "statistics-demo": _statistics_demo,
}


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def run_experiment(exp: ExperimentSpec) -> tuple[int, dict]:
    """Run one experiment, write its artifacts and return (exit status, trace)."""
    code, records, verdict, header, rows = RUNNERS[exp.kind](exp)
    trace = {"config": exp.echo(), "records": records, "verdict": verdict}
    text = _jsonio.dumps(trace)
    if exp.output:
        out = exp.resolve(exp.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    else:
        sys.stdout.write(text)
    if exp.csv:
        table = exp.resolve(exp.csv)
        table.parent.mkdir(parents=True, exist_ok=True)
        with open(table, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([_cell(v) for v in row] for row in rows)
    return code, trace


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qreduct", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment file")
    run.add_argument("experiment", help="path to the experiment JSON")
    run.add_argument("--seed", type=int, help="override the experiment seed")
    run.add_argument("--steps", type=int, help="override the step count")
    run.add_argument("--out", help="trace JSON path (default: stdout)")
    run.add_argument("--csv", help="also write plot columns to this CSV")
    run.add_argument("--permissive", action="store_true", help="finish runs past impossible steps")
    run.add_argument("--cap", type=int, help="qubit cap (default $QREDUCT_CAP or 14)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        exp = load_experiment(args.experiment)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.out is not None:
            changes["output"] = os.path.abspath(args.out)
        if args.csv is not None:
            changes["csv"] = os.path.abspath(args.csv)
        if args.permissive:
            changes["permissive"] = True
        if args.cap is not None:
            changes["cap"] = args.cap
        if args.steps is not None:
            changes["params"] = {**exp.params, "steps": args.steps}
        code, _ = run_experiment(replace(exp, **changes))
        return code
    except (QReductError, ValueError, OSError) as exc:
        print(f"qreduct: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
