"""Continuous-arclength queries of a converged estimate.

Between nodes the posterior is conditioned on the two bracketing states
only (the prior is Markovian), so mean and covariance at any arclength
follow from closed-form gain matrices applied to the local variables
gamma = [xi; psi] expressed in the bracketing left node's frame.
"""

from __future__ import annotations

import numpy as np

from . import se3
from .prior import StateNode, process_cov, process_cov_inv, transition
from .solver import Solution


def interp_matrices(tau: float, s_k: float, s_k1: float, hyper):
    """Gain matrices (Lambda, Psi) for a query at tau inside [s_k, s_k1]."""
    if not (s_k <= tau <= s_k1) or s_k1 <= s_k:
        raise ValueError("query arclength must lie inside the interval")
    if tau == s_k:
        return np.eye(12), np.zeros((12, 12))
    Psi = process_cov(tau - s_k, hyper) @ transition(s_k1, tau).T @ process_cov_inv(s_k1 - s_k, hyper)
    Lam = transition(tau, s_k) - Psi @ transition(s_k1, s_k)
    return Lam, Psi


def _bracket(grid: np.ndarray, tau: float) -> int:
    """Index k with s_k <= tau <= s_{k+1}; exact hits prefer the left node."""
    if tau < grid[0] - 1e-12 or tau > grid[-1] + 1e-12:
        raise ValueError(f"query arclength {tau} outside the grid span")
    k = int(np.searchsorted(grid, tau, side="right")) - 1
    return min(max(k, 0), grid.size - 2)


def _node_hit(grid: np.ndarray, tau: float):
    hits = np.flatnonzero(np.abs(grid - tau) <= 1e-12)
    return int(hits[0]) if hits.size else None


def _local_knots(solution: Solution, k: int):
    """gamma at both ends of interval k in the left node's frame."""
    left, right = solution.nodes[k], solution.nodes[k + 1]
    xi = se3.log_se3(right.T @ se3.pose_inverse(left.T))
    gamma_l = np.concatenate([np.zeros(6), left.eps])
    gamma_r = np.concatenate([xi, se3.left_jacobian_inv(xi) @ right.eps])
    return gamma_l, gamma_r


def query_state(solution: Solution, tau: float) -> StateNode:
    """Posterior mean state at an arbitrary arclength."""
    grid = solution.grid
    hit = _node_hit(grid, tau)
    if hit is not None:
        return solution.nodes[hit].copy()
    k = _bracket(grid, tau)
    Lam, Psi = interp_matrices(tau, grid[k], grid[k + 1], solution.hyper)
    gamma_l, gamma_r = _local_knots(solution, k)
    gamma = Lam @ gamma_l + Psi @ gamma_r
    xi, psi = gamma[0:6], gamma[6:12]
    T = se3.exp_se3(xi) @ solution.nodes[k].T
    eps = se3.left_jacobian(xi) @ psi
    return StateNode(float(tau), T, eps)


def _local_from_global(xi, eps):
    """Linear map from node perturbations (dt, de) to (dxi, dpsi).

    At a knot whose local coordinate is xi, a left pose perturbation moves
    xi through J(xi)^-1 and the strain enters psi = J(xi)^-1 eps with the
    same first-order 0.5 curly_hat coupling used by the prior Jacobian.
    """
    J_inv = se3.left_jacobian_inv(xi)
    G = np.zeros((12, 12))
    G[0:6, 0:6] = J_inv
    G[6:12, 0:6] = 0.5 * se3.curly_hat(eps) @ J_inv
    G[6:12, 6:12] = J_inv
    return G


def _global_from_local(xi, psi):
    """Inverse map from (dxi, dpsi) at a queried point to (dt, de)."""
    J = se3.left_jacobian(xi)
    eps = J @ psi
    H = np.zeros((12, 12))
    H[0:6, 0:6] = J
    H[6:12, 0:6] = -0.5 * J @ se3.curly_hat(eps)
    H[6:12, 6:12] = J
    return H


def query_cov(solution: Solution, tau: float) -> np.ndarray:
    """Posterior 12x12 covariance at an arbitrary arclength.

    The correction term transports the joint covariance of the bracketing
    nodes into the left node's local coordinates, applies the interpolation
    gains, and maps back to a left perturbation at the queried mean.
    """
    grid = solution.grid
    hit = _node_hit(grid, tau)
    if hit is not None:
        return solution.marginal_covs[hit].copy()
    k = _bracket(grid, tau)
    hyper = solution.hyper
    Lam, Psi = interp_matrices(tau, grid[k], grid[k + 1], hyper)
    gamma_l, gamma_r = _local_knots(solution, k)
    gamma = Lam @ gamma_l + Psi @ gamma_r

    # Prior covariance of gamma(tau) and of the two knots, all in the local
    # frame anchored at node k (zero covariance at the anchor).
    Q_tau = process_cov(tau - grid[k], hyper)
    Q_int = process_cov(grid[k + 1] - grid[k], hyper)
    gain = np.hstack([Lam, Psi])
    P_check_pair = np.zeros((24, 24))
    P_check_pair[12:24, 12:24] = Q_int

    G = np.zeros((24, 24))
    G[0:12, 0:12] = _local_from_global(np.zeros(6), solution.nodes[k].eps)
    G[12:24, 12:24] = _local_from_global(gamma_r[0:6], solution.nodes[k + 1].eps)
    P_hat_pair = G @ solution.joint_covs[k] @ G.T

    P_local = Q_tau + gain @ (P_hat_pair - P_check_pair) @ gain.T
    H = _global_from_local(gamma[0:6], gamma[6:12])
    return H @ P_local @ H.T
