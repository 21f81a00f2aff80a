"""White-noise-on-strain-derivative prior over rod states.

The state at arclength s is a pose T(s) together with a body-frame strain
(twist per unit arclength) eps(s). Between grid nodes the strain derivative
is modelled as white noise with power spectral density Qc, which makes the
stacked variable gamma = [xi; psi] (local pose increment and its arclength
derivative) a linear SDE with closed-form transition and process noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import se3


@dataclass(frozen=True)
class PriorHyperparams:
    """Power spectral density Qc (6x6 SPD) and nominal strain eps_bar."""

    Qc: np.ndarray
    eps_bar: np.ndarray

    def __post_init__(self):
        Qc = np.array(self.Qc, dtype=float)
        eps_bar = np.array(self.eps_bar, dtype=float)
        if Qc.shape != (6, 6):
            raise ValueError(f"Qc must be 6x6, got {Qc.shape}")
        if eps_bar.shape != (6,):
            raise ValueError(f"eps_bar must be length 6, got {eps_bar.shape}")
        if not np.all(np.isfinite(Qc)) or not np.all(np.isfinite(eps_bar)):
            raise ValueError("hyperparameters must be finite")
        if np.max(np.abs(Qc - Qc.T)) > 1e-12:
            raise ValueError("Qc must be symmetric within 1e-12")
        try:
            np.linalg.cholesky(Qc)
        except np.linalg.LinAlgError as exc:
            raise ValueError("Qc must be positive definite") from exc
        object.__setattr__(self, "Qc", Qc)
        object.__setattr__(self, "eps_bar", eps_bar)


@dataclass
class StateNode:
    """Estimation variable at one grid arclength: pose and strain."""

    s: float
    T: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        self.T = np.array(self.T, dtype=float)
        self.eps = np.array(self.eps, dtype=float)
        if self.eps.shape != (6,):
            raise ValueError(f"eps must be length 6, got {self.eps.shape}")

    def copy(self) -> "StateNode":
        return StateNode(self.s, self.T.copy(), self.eps.copy())


def validate_grid(grid) -> np.ndarray:
    """Node arclengths: s_0 = 0, strictly increasing, at least two nodes."""
    s = np.asarray(grid, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("grid needs at least two arclengths")
    if abs(s[0]) > 1e-12:
        raise ValueError("grid must start at arclength 0")
    if np.any(np.diff(s) <= 0):
        raise ValueError("grid arclengths must be strictly increasing")
    return s


def uniform_grid(length: float, n_intervals: int) -> np.ndarray:
    if length <= 0 or n_intervals < 1:
        raise ValueError("length must be positive and n_intervals >= 1")
    return np.linspace(0.0, length, n_intervals + 1)


def transition(s: float, s_prev: float) -> np.ndarray:
    """12x12 transition [[I, ds*I], [0, I]] of gamma over [s_prev, s]."""
    ds = s - s_prev
    if ds < 0:
        raise ValueError("transition requires s >= s_prev")
    Phi = np.eye(12)
    Phi[0:6, 6:12] = ds * np.eye(6)
    return Phi


def process_cov(ds: float, hyper: PriorHyperparams) -> np.ndarray:
    """Accumulated process noise over an interval of length ds > 0."""
    if ds <= 0:
        raise ValueError("process covariance requires ds > 0")
    Qc = hyper.Qc
    Q = np.zeros((12, 12))
    Q[0:6, 0:6] = (ds**3 / 3.0) * Qc
    Q[0:6, 6:12] = (ds**2 / 2.0) * Qc
    Q[6:12, 0:6] = (ds**2 / 2.0) * Qc
    Q[6:12, 6:12] = ds * Qc
    return Q


def process_cov_inv(ds: float, hyper: PriorHyperparams) -> np.ndarray:
    """Closed-form inverse of process_cov (no numeric 12x12 inversion)."""
    if ds <= 0:
        raise ValueError("process covariance requires ds > 0")
    Qc_inv = np.linalg.inv(hyper.Qc)
    Qi = np.zeros((12, 12))
    Qi[0:6, 0:6] = (12.0 / ds**3) * Qc_inv
    Qi[0:6, 6:12] = (-6.0 / ds**2) * Qc_inv
    Qi[6:12, 0:6] = (-6.0 / ds**2) * Qc_inv
    Qi[6:12, 6:12] = (4.0 / ds) * Qc_inv
    return Qi


def prior_error(prev: StateNode, cur: StateNode) -> np.ndarray:
    """12-vector prior error of one interval, zero on constant-strain rollouts.

    Top block: log(T_k T_{k-1}^-1) - ds * eps_{k-1}. Bottom block:
    J(log(T_k T_{k-1}^-1))^-1 eps_k - eps_{k-1}.
    """
    ds = cur.s - prev.s
    xi = se3.log_se3(cur.T @ se3.pose_inverse(prev.T))
    e = np.empty(12)
    e[0:6] = xi - ds * prev.eps
    e[6:12] = se3.left_jacobian_inv(xi) @ cur.eps - prev.eps
    return e


def prior_error_jacobian(prev: StateNode, cur: StateNode) -> np.ndarray:
    """12x24 Jacobian of prior_error w.r.t. (dt_{k-1}, de_{k-1}, dt_k, de_k).

    Pose perturbations are left perturbations T <- exp(hat6(dt)) T. The
    strain-row pose blocks use the first-order 0.5 * curly_hat(eps_k)
    linearisation of the inverse-Jacobian derivative, which is the form the
    solver consumes; it is accurate to first order in the inter-node twist.
    """
    ds = cur.s - prev.s
    rel = cur.T @ se3.pose_inverse(prev.T)
    xi = se3.log_se3(rel)
    J_inv = se3.left_jacobian_inv(xi)
    T_adj = se3.adjoint(rel)
    half_curly = 0.5 * se3.curly_hat(cur.eps)

    E = np.zeros((12, 24))
    J_inv_T = J_inv @ T_adj
    E[0:6, 0:6] = -J_inv_T
    E[0:6, 6:12] = -ds * np.eye(6)
    E[0:6, 12:18] = J_inv
    E[6:12, 0:6] = -half_curly @ J_inv_T
    E[6:12, 6:12] = -np.eye(6)
    E[6:12, 12:18] = half_curly @ J_inv
    E[6:12, 18:24] = J_inv
    return E


def prior_cost(errors, grid, hyper: PriorHyperparams) -> float:
    """Sum of 0.5 * e^T Q^-1 e over the per-interval errors."""
    s = validate_grid(grid)
    errors = np.asarray(errors, dtype=float)
    if errors.shape != (s.size - 1, 12):
        raise ValueError(f"expected {(s.size - 1, 12)} errors, got {errors.shape}")
    total = 0.0
    for k in range(1, s.size):
        Qi = process_cov_inv(s[k] - s[k - 1], hyper)
        e = errors[k - 1]
        total += 0.5 * float(e @ Qi @ e)
    return total


def sample_prior(hyper: PriorHyperparams, grid, count: int, rng, root_pose=None):
    """Draw rod-shape samples by sequential rollout from the root.

    Each sample starts at gamma = (0, eps_bar) in the root frame, propagates
    the current gamma through the interval transition, adds Cholesky-shaped
    process noise, and compounds T_{k+1} = exp(hat6(xi)) T_k with the strain
    recovered as eps_{k+1} = J(xi) psi.
    """
    s = validate_grid(grid)
    rng = np.random.default_rng(rng)
    if root_pose is None:
        root_pose = np.eye(4)
    root_pose = se3.check_pose(root_pose)

    samples = []
    for _ in range(count):
        nodes = [StateNode(s[0], root_pose.copy(), hyper.eps_bar.copy())]
        for k in range(1, s.size):
            ds = s[k] - s[k - 1]
            gamma = np.concatenate([np.zeros(6), nodes[-1].eps])
            L = np.linalg.cholesky(process_cov(ds, hyper))
            gamma = transition(s[k], s[k - 1]) @ gamma + L @ rng.standard_normal(12)
            xi, psi = gamma[0:6], gamma[6:12]
            T = se3.exp_se3(xi) @ nodes[-1].T
            eps = se3.left_jacobian(xi) @ psi
            nodes.append(StateNode(s[k], T, eps))
        samples.append(nodes)
    return samples
