from dataclasses import dataclass, field

import numpy as np

from loopflow._utils.exception import NonConvergent

from ._trajectory import TrajectorySample


def axis_model(dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization of one double-integrator axis, state [p, v]."""
    A = np.array([[1.0, dt], [0.0, 1.0]])
    B = np.array([[0.5 * dt * dt], [dt]])
    return A, B


@dataclass(frozen=True)
class ControlGains:
    """
    LQ tracking gains for a per-axis double integrator.

    `k_axis` is the (1, 2) feedback row applied to [p - p_ref, v - v_ref] on
    every axis; `K_fb` is the equivalent (3, 6) block form acting on the
    stacked [p_err, v_err] state.
    """

    k_axis: np.ndarray
    k_ff: float
    dt: float
    P: np.ndarray
    Q: np.ndarray = field(repr=False)
    R: float = 1.0
    iterations: int = 0

    @property
    def K_fb(self) -> np.ndarray:
        eye = np.eye(3)
        return np.hstack([self.k_axis[0, 0] * eye, self.k_axis[0, 1] * eye])

    def closed_loop_matrix(self) -> np.ndarray:
        A, B = axis_model(self.dt)
        return A - B @ self.k_axis

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.closed_loop_matrix()))))


def derive_gains(
    q_pos: float = 8.0,
    q_vel: float = 4.0,
    r_acc: float = 1.0,
    dt: float = 0.01,
    k_ff: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 200_000,
) -> ControlGains:
    """
    Infinite-horizon discrete LQ gains by fixed-point iteration of the Riccati equation.

    Raises:
        NonConvergent: If the residual is still above tol after max_iter iterations.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if q_pos <= 0 or q_vel <= 0 or r_acc <= 0:
        raise ValueError("cost weights must be positive")
    A, B = axis_model(dt)
    Q = np.diag([q_pos, q_vel])
    R = float(r_acc)
    P = Q.copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        BtP = B.T @ P
        gain = np.linalg.solve(R + BtP @ B, BtP @ A)
        P_next = Q + A.T @ P @ A - A.T @ P @ B @ gain
        P_next = 0.5 * (P_next + P_next.T)
        residual = float(np.max(np.abs(P_next - P)))
        P = P_next
        if residual <= tol:
            BtP = B.T @ P
            k_axis = np.linalg.solve(R + BtP @ B, BtP @ A)
            return ControlGains(k_axis=k_axis, k_ff=float(k_ff), dt=float(dt), P=P, Q=Q, R=R, iterations=it)
    raise NonConvergent(
        f"Riccati iteration did not converge in {max_iter} iterations (residual {residual:.3e}).",
        residual=residual,
    )


def control_step(state, ref: TrajectorySample, gains: ControlGains, a_max: float = 6.0) -> np.ndarray:
    """u = -K_fb [p - p_ref; v - v_ref] + K_ff a_ref, clipped per axis to +-a_max."""
    e_p = state.p - ref.p
    e_v = state.v - ref.v
    u = -(gains.k_axis[0, 0] * e_p + gains.k_axis[0, 1] * e_v) + gains.k_ff * ref.a
    return np.clip(u, -a_max, a_max)
