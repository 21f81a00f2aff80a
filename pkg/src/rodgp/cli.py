"""Command-line pipeline: simulate, estimate, sample, evaluate.

All commands read one JSON run config, record its hash in their outputs,
and derive every random stream from the single config seed, so rerunning
any command with the same inputs produces byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import interpolation, rodsim, solver, study
from .config import ConfigError, RunConfig, derive_seed, load_config, measurement_rng
from .measurements import PoseMeasurement, StrainMeasurement
from .prior import PriorHyperparams, StateNode, sample_prior, uniform_grid
from .rodsim import Actuation, GroundTruthShape, Scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_IO = 4


def _vec(x) -> list:
    return [float(v) for v in np.asarray(x).reshape(-1)]


def _write_json(path, document) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=1)
        fh.write("\n")


def _meta(cfg: RunConfig, **extra) -> dict:
    meta = {"seed": cfg.seed, "config_hash": cfg.config_hash()}
    meta.update(extra)
    return meta


def _state_doc(node: StateNode, sigma=None) -> dict:
    doc = {"s": float(node.s), "T": _vec(node.T), "eps": _vec(node.eps)}
    if sigma is not None:
        doc["sigma"] = _vec(sigma)
    return doc


def _shape_docs(samples) -> list:
    return [[_state_doc(node) for node in nodes] for nodes in samples]


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    props = cfg.props()
    dataset = rodsim.sample_dataset(
        props,
        args.count,
        loaded_fraction=args.loaded_fraction,
        seed=derive_seed(cfg.seed, "dataset"),
    )
    runs = []
    for actuation, shape in dataset:
        runs.append(
            {
                "actuation": _vec(actuation.tensions),
                "tip_wrench": _vec(actuation.tip_wrench),
                "states": [
                    _state_doc(node, sigma)
                    for node, sigma in zip(shape.nodes, shape.sigma)
                ],
            }
        )
    _write_json(args.out, {"meta": _meta(cfg), "runs": runs})
    return EXIT_OK


def _load_dataset(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid dataset JSON: {exc.msg}") from exc
    try:
        dataset = []
        for run in document["runs"]:
            actuation = Actuation(tuple(run["actuation"]), tuple(run["tip_wrench"]))
            nodes = [
                StateNode(
                    float(st["s"]),
                    np.array(st["T"], dtype=float).reshape(4, 4),
                    np.array(st["eps"], dtype=float),
                )
                for st in run["states"]
            ]
            sigma = np.array([st["sigma"] for st in run["states"]], dtype=float)
            dataset.append((actuation, GroundTruthShape(nodes, sigma)))
        return dataset
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed dataset: {exc}") from exc


def _measurement_doc(m) -> dict:
    if isinstance(m, PoseMeasurement):
        return {
            "kind": "pose",
            "s": float(m.s),
            "value": _vec(m.T_meas),
            "R": _vec(m.R),
            "mask": [bool(b) for b in m.mask],
        }
    return {
        "kind": "strain",
        "s": float(m.s),
        "value": _vec(m.eps_meas),
        "R": _vec(m.R),
        "mask": [bool(b) for b in m.mask],
    }


def _measurement_from_doc(doc):
    R = np.array(doc["R"], dtype=float).reshape(6, 6)
    mask = np.array(doc["mask"], dtype=bool)
    if doc["kind"] == "pose":
        T = np.array(doc["value"], dtype=float).reshape(4, 4)
        return PoseMeasurement(float(doc["s"]), T, R, mask)
    return StrainMeasurement(
        float(doc["s"]), np.array(doc["value"], dtype=float), R, mask
    )


def cmd_estimate(args) -> int:
    cfg = load_config(args.config)
    props = cfg.props()
    dataset = _load_dataset(args.dataset)
    if not 0 <= args.run_index < len(dataset):
        raise ConfigError(
            f"run index {args.run_index} out of range for {len(dataset)} runs"
        )
    scen_cfg = cfg.scenario_config()
    if args.lock_tip_strain:
        scen_cfg = dataclasses.replace(scen_cfg, lock_tip_strain=True)
    _, shape = dataset[args.run_index]
    rng = measurement_rng(cfg, scen_cfg.scenario, args.run_index)
    measurements = rodsim.extract_measurements(
        shape, scen_cfg.scenario, props, scen_cfg.noise, rng
    )
    guess = None
    if args.init == "model":
        grid = study.estimation_grid(
            props.total_length, scen_cfg.num_intervals, [m.s for m in measurements]
        )
        guess = study.model_guess(grid, shape)
    record = study.run_single(props, shape, measurements, scen_cfg, guess)
    solution = record.solution
    nodes_doc, interp_doc = [], []
    for i in range(record.arclengths.size):
        doc = _state_doc(record.states[i])
        doc["cov"] = _vec(record.covs[i])
        (nodes_doc if record.is_node[i] else interp_doc).append(doc)
    out = {
        "meta": _meta(
            cfg,
            run_index=args.run_index,
            scenario=scen_cfg.scenario.value,
            init=args.init,
        ),
        "problem": {
            "grid": _vec(solution.grid),
            "qc_diag": list(scen_cfg.qc_diag),
            "eps_bar": list(scen_cfg.eps_bar),
            "locks": [[bool(b) for b in row] for row in solution.problem.locks],
            "measurements": [_measurement_doc(m) for m in measurements],
        },
        "nodes": nodes_doc,
        "interpolated": interp_doc,
        "cost_history": [float(c) for c in solution.cost_history],
        "iterations": solution.iterations,
        "converged": bool(solution.converged),
    }
    _write_json(args.out, out)
    if not solution.converged:
        print(
            f"solver did not converge in {solution.iterations} iterations; "
            f"cost history written to {args.out}",
            file=sys.stderr,
        )
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_sample_prior(args) -> int:
    cfg = load_config(args.config)
    scen_cfg = cfg.scenario_config()
    grid = uniform_grid(cfg.props().total_length, scen_cfg.num_intervals)
    rng = np.random.default_rng(derive_seed(cfg.seed, "sample-prior"))
    samples = sample_prior(scen_cfg.hyperparams(), grid, args.count, rng)
    _write_json(args.out, {"meta": _meta(cfg), "samples": _shape_docs(samples)})
    return EXIT_OK


def cmd_sample_posterior(args) -> int:
    with open(args.solution, "r", encoding="utf-8") as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.solution}: invalid JSON: {exc.msg}") from exc
    try:
        problem_doc = document["problem"]
        grid = np.array(problem_doc["grid"], dtype=float)
        hyper_kwargs = dict(
            Qc=np.diag(problem_doc["qc_diag"]),
            eps_bar=np.array(problem_doc["eps_bar"], dtype=float),
        )
        locks = np.array(problem_doc["locks"], dtype=bool)
        measurements = [
            _measurement_from_doc(m) for m in problem_doc["measurements"]
        ]
        states = sorted(
            document["nodes"] + document["interpolated"], key=lambda st: st["s"]
        )
        nodes = [
            StateNode(
                float(st["s"]),
                np.array(st["T"], dtype=float).reshape(4, 4),
                np.array(st["eps"], dtype=float),
            )
            for st in states
            if any(abs(st["s"] - g) < solver.NODE_MATCH_TOL for g in grid)
        ]
        meta = document["meta"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{args.solution}: malformed solution file: {exc}") from exc
    problem = solver.Problem(
        grid, PriorHyperparams(**hyper_kwargs), measurements, nodes, locks
    )
    solution = solver.factorize(problem)
    rng = np.random.default_rng(derive_seed(int(meta["seed"]), "sample-posterior"))
    samples = solver.sample_posterior(solution, args.count, rng)
    out_meta = {"seed": int(meta["seed"]), "config_hash": meta["config_hash"]}
    _write_json(args.out, {"meta": out_meta, "samples": _shape_docs(samples)})
    return EXIT_OK


PROFILE_HEADER = (
    "s_m,pos_err_mean_m,pos_err_std_m,pos_err_min_m,pos_err_max_m,"
    "ang_err_mean_deg,ang_err_std_deg,ang_err_min_deg,ang_err_max_deg"
)


def _write_profile(path, profile: study.ErrorProfile) -> None:
    lines = [PROFILE_HEADER]
    for i in range(profile.arclengths.size):
        row = (
            profile.arclengths[i],
            profile.pos_mean[i],
            profile.pos_std[i],
            profile.pos_min[i],
            profile.pos_max[i],
            profile.ang_mean[i],
            profile.ang_std[i],
            profile.ang_min[i],
            profile.ang_max[i],
        )
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    props = cfg.props()
    dataset = _load_dataset(args.dataset)
    results = {}
    for scenario in Scenario:
        results[scenario] = study.run_study(
            props, dataset, cfg.scenario_config(scenario)
        )
    _write_profile(f"{args.out_prefix}_profile.csv", results[cfg.scenario()].profile)

    summary = ["scenario,tip_pos_err_mean_m,tip_ang_err_mean_deg,runs,failures,config_hash"]
    config_hash = cfg.config_hash()
    for scenario in Scenario:
        result = results[scenario]
        tip_pos, tip_ang = result.profile.tip_errors()
        summary.append(
            f"{scenario.value},{tip_pos!r},{tip_ang!r},"
            f"{result.profile.run_count},{len(result.failures)},{config_hash}"
        )
    with open(f"{args.out_prefix}_summary.csv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(summary) + "\n")

    failures = ["scenario,run_index,reason"]
    for scenario in Scenario:
        for index, reason in results[scenario].failures:
            failures.append(f'{scenario.value},{index},"{reason}"')
    with open(f"{args.out_prefix}_failures.csv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(failures) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rodgp",
        description="Continuum-robot state estimation pipeline on simulated data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a dataset of static equilibria")
    p.add_argument("--config", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--loaded-fraction", type=float, default=0.5)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate one dataset run")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--run-index", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--init", choices=("straight", "model"), default="straight")
    p.add_argument("--lock-tip-strain", action="store_true")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sample-prior", help="draw shape samples from the prior")
    p.add_argument("--config", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample_prior)

    p = sub.add_parser("sample-posterior", help="draw samples around an estimate")
    p.add_argument("--solution", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample_posterior)

    p = sub.add_parser("evaluate", help="run all scenario studies and emit CSVs")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
