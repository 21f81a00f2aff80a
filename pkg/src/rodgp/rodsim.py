"""Static Cosserat-rod simulator for tendon-driven continuum robots.

Ground truth for the estimator: a multi-segment rod actuated by straight,
parallel-routed tendons that terminate at segment ends, plus an optional
wrench at the tip. Each tendon contributes a body-frame-constant internal
wrench everywhere proximal of its termination (the cross-section always
sees the same pull in local coordinates), so the internal stress splits
into that piecewise-constant part and a transported part obeying
d(sigma)/ds = -curly(eps)^T sigma. Only the transported part is unknown,
which makes the boundary-value problem a 6-dimensional shoot.

Kinematics use the same left-increment convention as the estimator:
dT/ds = hat6(eps) T, so simulated strains feed the prior directly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import se3
from .measurements import PoseMeasurement, StrainMeasurement, corrupt_pose, corrupt_strain
from .prior import StateNode

# Shooting convergence: residual infinity norm in N / N*m.
SHOOTING_TOL = 1e-9
MAX_SHOOTING_ITERATIONS = 50
# Finite-difference step for the shooting Jacobian.
SHOOTING_FD_STEP = 1e-7
MIN_STEPS_PER_SEGMENT = 200
# Newton iterations shoot at this resolution before polishing at the
# requested one; RK4 truncation error here is still well under the tol.
COARSE_SHOOTING_STEPS = 128
# Undeformed rod: unit stretch along the local x axis, no shear or curvature.
REST_STRAIN = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class RodProperties:
    """Geometry and material of a multi-segment tendon-driven rod.

    Tendons are (segment index, angular position) pairs; each tendon runs
    from the base to the end of its segment at constant cross-section
    offset pitch_radius from the backbone.
    """

    young_modulus: float
    poisson: float
    diameter: float
    segment_lengths: tuple
    pitch_radius: float
    tendons: tuple
    disks_per_segment: int

    def __post_init__(self):
        lengths = tuple(float(L) for L in self.segment_lengths)
        tendons = tuple((int(i), float(th)) for i, th in self.tendons)
        object.__setattr__(self, "segment_lengths", lengths)
        object.__setattr__(self, "tendons", tendons)
        if self.young_modulus <= 0 or self.diameter <= 0 or self.pitch_radius <= 0:
            raise ValueError("material and geometry parameters must be positive")
        if not 0.0 < self.poisson < 0.5:
            raise ValueError(f"Poisson ratio must be in (0, 0.5), got {self.poisson}")
        if not lengths or any(L <= 0 for L in lengths):
            raise ValueError("segment lengths must be positive")
        if self.disks_per_segment < 1:
            raise ValueError("need at least one disk per segment")
        for seg, _ in tendons:
            if not 0 <= seg < len(lengths):
                raise ValueError(f"tendon segment index {seg} out of range")

    @classmethod
    def default(cls) -> "RodProperties":
        """Two-segment reference robot used across tests and examples.

        54 GPa backbone of 1 mm diameter, 7 mm tendon pitch radius, two
        0.14 m segments with 7 disks each and four tendons per segment at
        right angles.
        """
        tendons = tuple(
            (seg, angle)
            for seg in (0, 1)
            for angle in (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)
        )
        return cls(
            young_modulus=54e9,
            poisson=0.3,
            diameter=1e-3,
            segment_lengths=(0.14, 0.14),
            pitch_radius=7e-3,
            tendons=tendons,
            disks_per_segment=7,
        )

    @property
    def total_length(self) -> float:
        return float(sum(self.segment_lengths))

    def segment_ends(self) -> np.ndarray:
        """Arclengths of the segment boundaries, excluding the base."""
        return np.cumsum(self.segment_lengths)

    def tendon_terminations(self) -> np.ndarray:
        """Termination arclength of each tendon (end of its segment)."""
        ends = self.segment_ends()
        return np.array([ends[seg] for seg, _ in self.tendons])

    def disk_arclengths(self) -> np.ndarray:
        """Disk positions: equally spaced within each segment, end included."""
        starts = np.concatenate([[0.0], self.segment_ends()[:-1]])
        disks = []
        for start, length in zip(starts, self.segment_lengths):
            for j in range(1, self.disks_per_segment + 1):
                disks.append(start + j * length / self.disks_per_segment)
        return np.array(disks)


def stiffness(props: RodProperties) -> np.ndarray:
    """Diagonal stiffness diag(EA, GA, GA, GJ, EI, EI), local x tangent."""
    area = np.pi * props.diameter**2 / 4.0
    inertia = np.pi * props.diameter**4 / 64.0
    polar = 2.0 * inertia
    shear_mod = props.young_modulus / (2.0 * (1.0 + props.poisson))
    E, G = props.young_modulus, shear_mod
    return np.diag([E * area, G * area, G * area, G * polar, E * inertia, E * inertia])


@dataclass(frozen=True)
class Actuation:
    """Per-tendon tensions (N) and an optional wrench at the tip."""

    tensions: tuple
    tip_wrench: tuple = (0.0,) * 6
    max_tension: float = 3.0

    def __post_init__(self):
        tensions = tuple(float(t) for t in self.tensions)
        wrench = tuple(float(w) for w in self.tip_wrench)
        object.__setattr__(self, "tensions", tensions)
        object.__setattr__(self, "tip_wrench", wrench)
        if len(wrench) != 6:
            raise ValueError(f"tip wrench must be length 6, got {len(wrench)}")
        if any(t < 0 for t in tensions):
            raise ValueError("tendon tensions must be non-negative")
        if any(t > self.max_tension + 1e-12 for t in tensions):
            raise ValueError(f"tendon tensions must not exceed {self.max_tension} N")


@dataclass
class GroundTruthShape:
    """Dense simulator output: states plus internal stress per sample."""

    nodes: list
    sigma: np.ndarray

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.sigma.shape != (len(self.nodes), 6):
            raise ValueError("need one 6-vector stress per node")

    @property
    def arclengths(self) -> np.ndarray:
        return np.array([node.s for node in self.nodes])

    def nearest_index(self, s: float) -> int:
        return int(np.argmin(np.abs(self.arclengths - s)))

    def state_at(self, s: float) -> StateNode:
        """State at the dense sample nearest to s."""
        return self.nodes[self.nearest_index(s)]


class ShootingError(RuntimeError):
    """Static solve failed; carries the best boundary residual seen."""

    def __init__(self, message: str, residual: np.ndarray):
        super().__init__(message)
        self.residual = residual


def tendon_point_wrenches(props: RodProperties, actuation: Actuation):
    """Per-tendon termination wrench in the local frame.

    The tendon pulls along -x (toward the base) at cross-section offset
    p = pitch_radius * (0, sin theta, cos theta); theta = 0 therefore
    bends about the local y axis. Zero-tension tendons are omitted.
    """
    if len(actuation.tensions) != len(props.tendons):
        raise ValueError(
            f"expected {len(props.tendons)} tensions, got {len(actuation.tensions)}"
        )
    terminations = props.tendon_terminations()
    wrenches = []
    for (seg, theta), tension, s_end in zip(
        props.tendons, actuation.tensions, terminations
    ):
        if tension == 0.0:
            continue
        offset = props.pitch_radius * np.array([0.0, np.sin(theta), np.cos(theta)])
        force = np.array([-tension, 0.0, 0.0])
        wrenches.append((float(s_end), np.concatenate([force, np.cross(offset, force)])))
    return wrenches


def _active_tendon_stress(wrenches, s: float) -> np.ndarray:
    """Body-frame-constant stress from tendons still routed past s."""
    total = np.zeros(6)
    for s_end, wrench in wrenches:
        if s < s_end - 1e-12:
            total = total + wrench
    return total


def integrate_rod(
    props: RodProperties,
    base_stress_guess: np.ndarray,
    wrenches,
    tip_wrench: np.ndarray,
    steps_per_segment: int = MIN_STEPS_PER_SEGMENT,
):
    """Integrate pose and stress from the base with fixed-step RK4.

    base_stress_guess is the transported stress component at s=0 (the part
    not attributable to routed tendons). Returns the dense shape and the
    boundary residual sigma(S) - tip_wrench. Crossing a point-wrench
    arclength drops that wrench from the stress, i.e. the total stress
    jumps by the applied wrench as the cut passes the termination.
    """
    if steps_per_segment < MIN_STEPS_PER_SEGMENT:
        raise ValueError(f"need at least {MIN_STEPS_PER_SEGMENT} steps per segment")
    # Round up so disk arclengths land exactly on dense samples.
    disks = props.disks_per_segment
    steps = int(-(-steps_per_segment // disks) * disks)
    base_stress = np.asarray(base_stress_guess, dtype=float)
    tip_wrench = np.asarray(tip_wrench, dtype=float)
    if not np.all(np.isfinite(base_stress)):
        raise ValueError("base stress guess must be finite")
    K_inv = np.linalg.inv(stiffness(props))

    def strain(sigma_total):
        return REST_STRAIN + K_inv @ sigma_total

    def derivative(T, sigma_p, sigma_tendon):
        eps = strain(sigma_p + sigma_tendon)
        return se3.hat6(eps) @ T, -se3.curly_hat(eps).T @ sigma_p

    T = np.eye(4)
    sigma_p = base_stress.copy()
    nodes = [StateNode(0.0, T.copy(), strain(sigma_p + _active_tendon_stress(wrenches, 0.0)))]
    stresses = [sigma_p + _active_tendon_stress(wrenches, 0.0)]

    # Divergent guesses overflow before the finiteness check catches
    # them; keep that path silent like the batch integrator.
    with np.errstate(over="ignore", invalid="ignore"):
        for start, length in zip(
            np.concatenate([[0.0], props.segment_ends()[:-1]]), props.segment_lengths
        ):
            # The tendon stress is constant within a segment, so RK4 never
            # straddles a jump.
            sigma_tendon = _active_tendon_stress(wrenches, start + 0.5 * length / steps)
            h = length / steps
            for j in range(1, steps + 1):
                k1_T, k1_s = derivative(T, sigma_p, sigma_tendon)
                k2_T, k2_s = derivative(T + 0.5 * h * k1_T, sigma_p + 0.5 * h * k1_s, sigma_tendon)
                k3_T, k3_s = derivative(T + 0.5 * h * k2_T, sigma_p + 0.5 * h * k2_s, sigma_tendon)
                k4_T, k4_s = derivative(T + h * k3_T, sigma_p + h * k3_s, sigma_tendon)
                T = T + h / 6.0 * (k1_T + 2.0 * k2_T + 2.0 * k3_T + k4_T)
                sigma_p = sigma_p + h / 6.0 * (k1_s + 2.0 * k2_s + 2.0 * k3_s + k4_s)
                if not (np.all(np.isfinite(T)) and np.all(np.isfinite(sigma_p))):
                    raise ShootingError("rod integration diverged", sigma_p)
                s = start + j * h if j < steps else start + length
                sigma_total = sigma_p + _active_tendon_stress(wrenches, s)
                nodes.append(StateNode(s, T.copy(), strain(sigma_total)))
                stresses.append(sigma_total)

    shape = GroundTruthShape(nodes, np.array(stresses))
    residual = stresses[-1] - tip_wrench
    return shape, residual


def _integrate_sigma_batch(props, base_stresses, wrenches, steps_per_segment):
    """Tip value of the transported stress for a batch of base guesses.

    The transported stress never feeds back into the pose, so shooting
    only needs this 6-dim ODE; rows evolve independently under RK4.
    Non-finite rows are left to propagate and flagged by the caller.
    The cross products are spelled out because this runs thousands of
    times per shooting solve.
    """
    k_inv = 1.0 / np.diag(stiffness(props))
    sigma = np.array(base_stresses, dtype=float)

    def derivative(sig, sigma_tendon):
        eps = REST_STRAIN + k_inv * (sig + sigma_tendon)
        n1, n2, n3, w1, w2, w3 = eps.T
        f1, f2, f3, m1, m2, m3 = sig.T
        out = np.empty_like(sig)
        out[:, 0] = w2 * f3 - w3 * f2
        out[:, 1] = w3 * f1 - w1 * f3
        out[:, 2] = w1 * f2 - w2 * f1
        out[:, 3] = n2 * f3 - n3 * f2 + w2 * m3 - w3 * m2
        out[:, 4] = n3 * f1 - n1 * f3 + w3 * m1 - w1 * m3
        out[:, 5] = n1 * f2 - n2 * f1 + w1 * m2 - w2 * m1
        return out

    starts = np.concatenate([[0.0], props.segment_ends()[:-1]])
    with np.errstate(over="ignore", invalid="ignore"):
        for start, length in zip(starts, props.segment_lengths):
            sigma_tendon = _active_tendon_stress(wrenches, start + 0.5 * length / steps_per_segment)
            h = length / steps_per_segment
            for _ in range(steps_per_segment):
                k1 = derivative(sigma, sigma_tendon)
                k2 = derivative(sigma + 0.5 * h * k1, sigma_tendon)
                k3 = derivative(sigma + 0.5 * h * k2, sigma_tendon)
                k4 = derivative(sigma + h * k3, sigma_tendon)
                sigma = sigma + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return sigma


def _newton_shoot(props, wrenches, tip_wrench, guess, steps_per_segment):
    """Damped Newton on the base stress at one integration resolution.

    The forward map is stiff for large trial stresses, so each step is
    backtracked until the residual norm decreases; non-finite trial
    residuals count as failures rather than errors.
    """

    def residuals_of(guesses):
        tips = _integrate_sigma_batch(props, guesses, wrenches, steps_per_segment)
        return tips - tip_wrench

    residual = residuals_of(guess[None, :])[0]
    best_norm = np.max(np.abs(residual))
    alphas = 0.5 ** np.arange(12)
    for _ in range(MAX_SHOOTING_ITERATIONS):
        norm = np.max(np.abs(residual))
        if norm < SHOOTING_TOL:
            return guess
        fd_steps = SHOOTING_FD_STEP * np.maximum(1.0, np.abs(guess))
        bumped = guess[None, :] + np.diag(fd_steps)
        jac = (residuals_of(bumped) - residual).T / fd_steps
        try:
            delta = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError as exc:
            raise ShootingError("singular shooting Jacobian", residual) from exc
        candidates = guess[None, :] + alphas[:, None] * delta[None, :]
        trial = residuals_of(candidates)
        trial_norms = np.max(np.abs(trial), axis=1)
        trial_norms[~np.all(np.isfinite(trial), axis=1)] = np.inf
        accepted = np.flatnonzero(trial_norms < norm)
        if accepted.size == 0:
            raise ShootingError(
                f"shooting step failed to reduce the residual below {norm:.3e}",
                residual,
            )
        pick = accepted[0]
        guess = candidates[pick]
        residual = trial[pick]
        best_norm = min(best_norm, trial_norms[pick])
    raise ShootingError(
        f"shooting did not converge in {MAX_SHOOTING_ITERATIONS} iterations; "
        f"best residual infinity norm {best_norm:.3e}",
        residual,
    )


def solve_static(
    props: RodProperties,
    actuation: Actuation,
    steps_per_segment: int = MIN_STEPS_PER_SEGMENT,
) -> GroundTruthShape:
    """Newton shooting on the base stress until the tip wrench balances.

    Shoots at a coarse resolution first, then re-verifies (and polishes
    if needed) at the requested one; RK4 is accurate enough that the
    polish almost never takes an extra step.
    """
    if steps_per_segment < MIN_STEPS_PER_SEGMENT:
        raise ValueError(f"need at least {MIN_STEPS_PER_SEGMENT} steps per segment")
    wrenches = tendon_point_wrenches(props, actuation)
    tip_wrench = np.asarray(actuation.tip_wrench, dtype=float)
    guess = _newton_shoot(
        props, wrenches, tip_wrench, np.zeros(6),
        min(COARSE_SHOOTING_STEPS, steps_per_segment),
    )
    if steps_per_segment > COARSE_SHOOTING_STEPS:
        guess = _newton_shoot(props, wrenches, tip_wrench, guess, steps_per_segment)
    shape, _ = integrate_rod(props, guess, wrenches, tip_wrench, steps_per_segment)
    return shape


def sample_dataset(
    props: RodProperties,
    count: int,
    loaded_fraction: float = 0.5,
    seed: int = 0,
    steps_per_segment: int = MIN_STEPS_PER_SEGMENT,
):
    """Random actuations and their solved shapes.

    Each draw tensions one or two tendons uniformly in [0, 3] N. The first
    floor(loaded_fraction * count) configurations additionally carry a tip
    wrench with force components uniform in [-0.1, 0.1] N and moment
    components uniform in [-0.01, 0.01] N*m. Per-configuration generators
    are seeded from (seed, index), so draws are independent of count and
    safe to fan out.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if not 0.0 <= loaded_fraction <= 1.0:
        raise ValueError("loaded fraction must be within [0, 1]")
    n_loaded = int(np.floor(loaded_fraction * count))
    dataset = []
    for index in range(count):
        rng = np.random.default_rng([int(seed), index])
        n_active = int(rng.integers(1, 3))
        active = rng.choice(len(props.tendons), size=n_active, replace=False)
        tensions = np.zeros(len(props.tendons))
        tensions[active] = rng.uniform(0.0, 3.0, size=n_active)
        wrench = np.zeros(6)
        if index < n_loaded:
            wrench[:3] = rng.uniform(-0.1, 0.1, size=3)
            wrench[3:] = rng.uniform(-0.01, 0.01, size=3)
        actuation = Actuation(tuple(tensions), tuple(wrench))
        dataset.append((actuation, solve_static(props, actuation, steps_per_segment)))
    return dataset


class Scenario(enum.Enum):
    """Sensor placements of the simulation study."""

    POSE_AT_SEGMENT_ENDS = "pose_at_segment_ends"
    STRAIN_AT_DISKS = "strain_at_disks"
    STRAIN_PLUS_TIP_POSE = "strain_plus_tip_pose"


# Keeps R positive definite when the injected noise is switched off.
MIN_MEASUREMENT_VARIANCE = 1e-12


@dataclass(frozen=True)
class MeasurementNoise:
    """Injected noise stds and the covariance inflation used for R."""

    sigma_t: float = 1e-3
    sigma_a: float = 0.01
    sigma_nu: float = 0.05
    sigma_omega: float = 0.05
    r_inflation: float = 10.0

    def pose_cov(self) -> np.ndarray:
        return self.r_inflation * np.diag(
            [max(self.sigma_t**2, MIN_MEASUREMENT_VARIANCE)] * 3
            + [max(self.sigma_a**2, MIN_MEASUREMENT_VARIANCE)] * 3
        )

    def strain_cov(self) -> np.ndarray:
        return self.r_inflation * np.diag(
            [max(self.sigma_nu**2, MIN_MEASUREMENT_VARIANCE)] * 3
            + [max(self.sigma_omega**2, MIN_MEASUREMENT_VARIANCE)] * 3
        )


def extract_measurements(
    shape: GroundTruthShape,
    scenario: Scenario,
    props: RodProperties,
    noise: MeasurementNoise,
    rng,
) -> list:
    """Scenario measurements read off the dense shape, then corrupted.

    Pose scenarios sense segment ends; strain scenarios sense every disk.
    The reported covariance R is the inflated noise covariance, not the
    injected one.
    """
    rng = np.random.default_rng(rng)
    pose_noise = np.diag([noise.sigma_t**2] * 3 + [noise.sigma_a**2] * 3)
    strain_noise = np.diag([noise.sigma_nu**2] * 3 + [noise.sigma_omega**2] * 3)

    def pose_at(s):
        state = shape.state_at(s)
        return PoseMeasurement(
            state.s, corrupt_pose(state.T, pose_noise, rng), noise.pose_cov()
        )

    def strain_at(s):
        state = shape.state_at(s)
        return StrainMeasurement(
            state.s, corrupt_strain(state.eps, strain_noise, rng), noise.strain_cov()
        )

    if scenario is Scenario.POSE_AT_SEGMENT_ENDS:
        return [pose_at(s) for s in props.segment_ends()]
    if scenario is Scenario.STRAIN_AT_DISKS:
        return [strain_at(s) for s in props.disk_arclengths()]
    if scenario is Scenario.STRAIN_PLUS_TIP_POSE:
        out = [strain_at(s) for s in props.disk_arclengths()]
        out.append(pose_at(props.total_length))
        return out
    raise ValueError(f"unknown scenario {scenario!r}")
