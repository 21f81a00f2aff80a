"""Batch estimation studies on simulated tendon-driven robots.

Runs the estimator over a dataset of simulated configurations for one
sensor scenario, queries the posterior densely along arclength, and
collects position/orientation error statistics against the simulated
ground truth. Per-run solver failures are excluded from the aggregates
and reported alongside them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import interpolation, rodsim, se3, solver
from .measurements import PoseMeasurement, pose_error, strain_error
from .prior import PriorHyperparams, StateNode, uniform_grid
from .rodsim import MeasurementNoise, Scenario

# Measurement arclengths closer than this to an existing node reuse it
# instead of adding another one.
MERGE_TOL = 1e-9


@dataclass(frozen=True)
class ScenarioConfig:
    """Sensor scenario plus estimator settings for one study.

    The defaults are the reference study settings: millimetre position
    noise, 0.01 rad angular noise, 0.05 strain noise, a tenfold inflated
    measurement covariance, a smoothness prior that is much looser on
    the rotational strains, 29 intervals, and 5 interpolated states per
    interval.
    """

    scenario: Scenario
    noise: MeasurementNoise = MeasurementNoise()
    qc_diag: tuple = (1.0, 1.0, 1.0, 100.0, 100.0, 100.0)
    eps_bar: tuple = (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    num_intervals: int = 29
    states_per_interval: int = 5
    lock_root_pose: bool = True
    lock_tip_strain: bool = False
    lock_translational_strains: bool = False
    max_iters: int = 20
    step_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "qc_diag", tuple(float(q) for q in self.qc_diag))
        object.__setattr__(self, "eps_bar", tuple(float(e) for e in self.eps_bar))
        if len(self.qc_diag) != 6 or len(self.eps_bar) != 6:
            raise ValueError("qc_diag and eps_bar must have 6 entries")
        if self.num_intervals < 1:
            raise ValueError("need at least one interval")
        if self.states_per_interval < 0:
            raise ValueError("states_per_interval must be non-negative")

    def hyperparams(self) -> PriorHyperparams:
        return PriorHyperparams(np.diag(self.qc_diag), np.array(self.eps_bar))

    def locks(self, n_nodes: int) -> np.ndarray:
        return solver.default_locks(
            n_nodes,
            root_pose=self.lock_root_pose,
            tip_strain=self.lock_tip_strain,
            translational_strains=self.lock_translational_strains,
        )


def pose_errors(estimate: StateNode, truth: StateNode) -> tuple:
    """Translation distance in metres and rotation angle in degrees."""
    dp = float(np.linalg.norm(estimate.T[:3, 3] - truth.T[:3, 3]))
    return dp, se3.rotation_angle_deg(estimate.T[:3, :3], truth.T[:3, :3])


def estimation_grid(total_length, num_intervals, measurement_arclengths):
    """Uniform node grid with the measurement arclengths merged in."""
    grid = list(uniform_grid(total_length, num_intervals))
    for s in measurement_arclengths:
        if min(abs(s - g) for g in grid) > MERGE_TOL:
            grid.append(float(s))
    return np.sort(np.asarray(grid))


def straight_guess(grid, hyper: PriorHyperparams) -> list:
    """Constant-strain rollout of the prior mean from the identity pose."""
    return [
        StateNode(float(s), se3.exp_se3(s * hyper.eps_bar), hyper.eps_bar.copy())
        for s in grid
    ]


def model_guess(grid, shape: rodsim.GroundTruthShape) -> list:
    """Initial guess read off a simulated shape at the grid arclengths."""
    out = []
    for s in grid:
        state = shape.state_at(s)
        out.append(StateNode(float(s), state.T.copy(), state.eps.copy()))
    return out


def query_points(grid, per_interval: int):
    """All emitted arclengths: every node plus equally spaced interiors.

    Returns (arclengths, is_node) with n_nodes + per_interval*(n_nodes-1)
    entries in ascending order.
    """
    taus, is_node = [], []
    for k in range(grid.size - 1):
        taus.append(float(grid[k]))
        is_node.append(True)
        ds = grid[k + 1] - grid[k]
        for i in range(1, per_interval + 1):
            taus.append(float(grid[k] + ds * i / (per_interval + 1)))
            is_node.append(False)
    taus.append(float(grid[-1]))
    is_node.append(True)
    return np.array(taus), np.array(is_node)


@dataclass
class EstimateRecord:
    """One configuration's estimate sampled at the query points."""

    index: int
    solution: solver.Solution
    arclengths: np.ndarray
    is_node: np.ndarray
    states: list
    covs: list
    truth: list
    pos_err: np.ndarray
    ang_err: np.ndarray


@dataclass
class ErrorProfile:
    """Error statistics along arclength, aggregated across runs."""

    arclengths: np.ndarray
    pos_mean: np.ndarray
    pos_std: np.ndarray
    pos_min: np.ndarray
    pos_max: np.ndarray
    ang_mean: np.ndarray
    ang_std: np.ndarray
    ang_min: np.ndarray
    ang_max: np.ndarray
    run_count: int

    def tip_errors(self) -> tuple:
        """(mean position m, mean orientation deg) at the last arclength."""
        return float(self.pos_mean[-1]), float(self.ang_mean[-1])


@dataclass
class StudyResult:
    profile: ErrorProfile
    records: list
    failures: list = field(default_factory=list)


def run_single(
    props, shape, measurements, config: ScenarioConfig, initial_guess=None
) -> EstimateRecord:
    """Estimate one configuration and match it against its ground truth."""
    hyper = config.hyperparams()
    grid = estimation_grid(
        props.total_length, config.num_intervals, [m.s for m in measurements]
    )
    if initial_guess is None:
        initial_guess = straight_guess(grid, hyper)
    problem = solver.Problem(
        grid,
        hyper,
        measurements,
        initial_guess,
        locks=config.locks(grid.size),
        max_iters=config.max_iters,
        step_tol=config.step_tol,
    )
    solution = solver.gauss_newton(problem)
    taus, is_node = query_points(grid, config.states_per_interval)
    states = [interpolation.query_state(solution, t) for t in taus]
    covs = [interpolation.query_cov(solution, t) for t in taus]
    truth = [shape.state_at(t) for t in taus]
    errors = [pose_errors(e, t) for e, t in zip(states, truth)]
    return EstimateRecord(
        index=-1,
        solution=solution,
        arclengths=taus,
        is_node=is_node,
        states=states,
        covs=covs,
        truth=truth,
        pos_err=np.array([e[0] for e in errors]),
        ang_err=np.array([e[1] for e in errors]),
    )


def run_study(props, dataset, config: ScenarioConfig) -> StudyResult:
    """Run the estimator over a dataset for one sensor scenario.

    Each configuration gets an independent measurement-noise stream
    derived from (config.seed, run index), so results are reproducible
    and independent of the dataset size.
    """
    if not dataset:
        raise ValueError("dataset must be nonempty")
    records, failures = [], []
    for index, (_, shape) in enumerate(dataset):
        rng = np.random.default_rng([config.seed, index])
        measurements = rodsim.extract_measurements(
            shape, config.scenario, props, config.noise, rng
        )
        try:
            record = run_single(props, shape, measurements, config)
        except np.linalg.LinAlgError as exc:
            failures.append((index, f"solver error: {exc}"))
            continue
        if not record.solution.converged:
            failures.append(
                (index, f"no convergence in {record.solution.iterations} iterations")
            )
            continue
        record.index = index
        records.append(record)
    if not records:
        raise RuntimeError(f"every run failed: {failures}")
    pos = np.stack([r.pos_err for r in records])
    ang = np.stack([r.ang_err for r in records])
    profile = ErrorProfile(
        arclengths=records[0].arclengths.copy(),
        pos_mean=pos.mean(axis=0),
        pos_std=pos.std(axis=0),
        pos_min=pos.min(axis=0),
        pos_max=pos.max(axis=0),
        ang_mean=ang.mean(axis=0),
        ang_std=ang.std(axis=0),
        ang_min=ang.min(axis=0),
        ang_max=ang.max(axis=0),
        run_count=len(records),
    )
    return StudyResult(profile, records, failures)


def position_covariance(T, cov12) -> np.ndarray:
    """3x3 world-position covariance from a 12x12 state covariance.

    A left pose perturbation moves the translation by delta_rho plus
    delta_theta crossed into it, so the position picks up [I, -hat(p)]
    times the pose block.
    """
    A = np.hstack([np.eye(3), -se3.hat3(T[:3, 3])])
    return A @ cov12[0:6, 0:6] @ A.T


def envelope_hits(record: EstimateRecord, nodes_only: bool = True) -> np.ndarray:
    """Whether ground truth lies within the 3-sigma position envelope.

    Checked as a Mahalanobis distance of the true position under the
    estimated position covariance.
    """
    hits = []
    for i in range(record.arclengths.size):
        if nodes_only and not record.is_node[i]:
            continue
        P = position_covariance(record.states[i].T, record.covs[i])
        d = record.truth[i].T[:3, 3] - record.states[i].T[:3, 3]
        if np.trace(P) < 1e-18:
            # Locked sub-state: zero covariance, inside iff exact.
            hits.append(bool(np.linalg.norm(d) < 1e-9))
        else:
            m2 = float(d @ np.linalg.solve(P, d))
            hits.append(m2 <= 9.0)
    return np.array(hits)


def max_residual_sigmas(solution: solver.Solution, measurements) -> float:
    """Largest whitened measurement residual at the converged estimate."""
    worst = 0.0
    for m in measurements:
        k = int(np.argmin(np.abs(solution.grid - m.s)))
        if isinstance(m, PoseMeasurement):
            e = pose_error(m, solution.nodes[k].T)
        else:
            e = strain_error(m, solution.nodes[k].eps)
        sigmas = np.sqrt(np.diag(m.R)[m.mask])
        worst = max(worst, float(np.max(np.abs(e / sigmas))))
    return worst


@dataclass
class InitialGuessReport:
    """Straight-guess vs model-guess comparison on one configuration."""

    straight: solver.Solution
    model: solver.Solution
    straight_tip: tuple
    model_tip: tuple
    straight_residual_sigmas: float
    model_residual_sigmas: float

    @property
    def straight_cost(self) -> float:
        return self.straight.cost_history[-1]

    @property
    def model_cost(self) -> float:
        return self.model.cost_history[-1]


def initial_guess_study(props, actuation, config: ScenarioConfig) -> InitialGuessReport:
    """Estimate one loaded configuration from two initial guesses.

    The same measurements are solved once from the straight prior-mean
    rollout and once from the simulator shape, exposing how strongly the
    nonlinear solve depends on its starting point.
    """
    shape = rodsim.solve_static(props, actuation)
    rng = np.random.default_rng([config.seed])
    measurements = rodsim.extract_measurements(
        shape, config.scenario, props, config.noise, rng
    )
    hyper = config.hyperparams()
    grid = estimation_grid(
        props.total_length, config.num_intervals, [m.s for m in measurements]
    )
    solutions = []
    for guess in (straight_guess(grid, hyper), model_guess(grid, shape)):
        problem = solver.Problem(
            grid,
            hyper,
            measurements,
            guess,
            locks=config.locks(grid.size),
            max_iters=config.max_iters,
            step_tol=config.step_tol,
        )
        solutions.append(solver.gauss_newton(problem))
    tip_truth = shape.state_at(props.total_length)
    return InitialGuessReport(
        straight=solutions[0],
        model=solutions[1],
        straight_tip=pose_errors(solutions[0].nodes[-1], tip_truth),
        model_tip=pose_errors(solutions[1].nodes[-1], tip_truth),
        straight_residual_sigmas=max_residual_sigmas(solutions[0], measurements),
        model_residual_sigmas=max_residual_sigmas(solutions[1], measurements),
    )
