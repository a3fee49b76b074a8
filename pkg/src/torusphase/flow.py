"""Time integration of the phase flow d(phi)/dt = theta - theta_hat.

The flow is the gradient flow of the volume functional; it preserves the
hypercritical range of the phase and decreases V, I and J.  The integrator
treats a hypercriticality breach as a hard error: the continuous flow cannot
lose it, so a breach diagnoses a discretization failure and must surface.

Two schemes:
  explicit-rk4   classical four-stage update; step size from the parabolic
                 bound dt <= cfl_sigma * h^2 / max tr(eta^{-1}) (alpha-frame).
  imex           one implicit-Euler-style solve of the constant-coefficient
                 alpha-Laplacian wrapped around the explicit remainder,
                 with splitting constant c = max eigenvalue of eta^{-1}
                 recomputed each step; dt = cfl_sigma * h (accuracy bound,
                 no stability restriction).

An independent damped Newton solver for the stationary equation doubles as
the convergence oracle for the flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .fields import (
    GridSpec,
    ScalarField,
    complex_hessian_entries,
    helmholtz_solve,
    laplacian_apply,
    solve_constant_laplacian,
)
from .functionals import (
    HALF_PI,
    BackgroundData,
    StateCache,
    dhym_residual,
    evaluate_state,
    functional_report,
)

SCHEMES = ("explicit-rk4", "imex")

TRACE_COLUMNS = (
    "t",
    "theta_min",
    "theta_max",
    "v_max",
    "V",
    "I",
    "J",
    "res_dhym_sup",
    "res_dhym_l2",
    "res_ma_sup",
    "dissipation",
    "dt_used",
)


class FlowError(RuntimeError):
    pass


class HypercriticalityLost(FlowError):
    def __init__(self, t, index, theta):
        super().__init__(
            f"hypercritical phase lost at t={t:.6g}, grid index {index}, theta={theta:.6g}"
        )
        self.t = t
        self.index = index
        self.theta = theta


class StagnationError(FlowError):
    pass


@dataclass
class FlowConfig:
    grid_n: int
    scheme: str = "explicit-rk4"
    cfl_sigma: float = 0.2
    t_max: float = 10.0
    residual_tol: float = 1e-8
    sample_interval: float = 0.1
    seed: int = 0
    require_hypercritical: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if not 0.0 < self.cfl_sigma <= 1.0:
            raise ValueError("cfl_sigma must lie in (0, 1]")
        if self.residual_tol <= 0.0:
            raise ValueError("residual_tol must be positive")
        if self.sample_interval <= 0.0 or self.t_max <= 0.0:
            raise ValueError("sample_interval and t_max must be positive")


@dataclass
class FlowState:
    t: float
    cache: StateCache

    @property
    def phi(self) -> ScalarField:
        return self.cache.phi


@dataclass
class FlowTrace:
    rows: list = field(default_factory=list)
    converged: bool = False

    def column(self, name: str) -> np.ndarray:
        i = TRACE_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])


def rhs(state: FlowState | StateCache, bg: BackgroundData) -> ScalarField:
    """Pointwise flow velocity theta - theta_hat."""
    cache = state.cache if isinstance(state, FlowState) else state
    return ScalarField(cache.phi.grid, cache.theta - bg.theta_hat)


def _alpha_frame_trace_inv(cache: StateCache) -> np.ndarray:
    return 1.0 / (1.0 + cache.lam1**2) + 1.0 / (1.0 + cache.lam2**2)


def cfl_dt(cache: StateCache, grid: GridSpec, cfl_sigma: float) -> float:
    """Parabolic step bound for the explicit scheme."""
    h = grid.spacing
    return cfl_sigma * h * h / float(np.max(_alpha_frame_trace_inv(cache)))


def _check_hypercritical(state: FlowState):
    theta = state.cache.theta
    idx_flat = int(np.argmin(theta))
    tmin = float(theta.reshape(-1)[idx_flat])
    if tmin <= HALF_PI:
        idx = np.unravel_index(idx_flat, theta.shape)
        raise HypercriticalityLost(state.t, idx, tmin)


def step(state: FlowState, bg: BackgroundData, dt: float, scheme: str,
         cfl_sigma: float = 0.2) -> FlowState:
    """Advance one step with the chosen scheme.  Errors on CFL violation
    (explicit scheme) and on non-finite values."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if scheme == "explicit-rk4":
        bound = cfl_dt(state.cache, state.phi.grid, cfl_sigma)
        if dt > bound * (1.0 + 1e-12):
            raise FlowError(f"CFL violation: dt={dt:.3e} > {bound:.3e}")
        return _step_rk4(state, bg, dt)
    if scheme == "imex":
        return _step_imex(state, bg, dt)
    raise ValueError(f"unknown scheme {scheme!r}")


def _step_rk4(state: FlowState, bg: BackgroundData, dt: float) -> FlowState:
    g = state.phi.grid
    th = bg.theta_hat
    phi0 = state.phi.values
    k1 = state.cache.theta - th
    k2 = evaluate_state(ScalarField(g, phi0 + 0.5 * dt * k1), bg).theta - th
    k3 = evaluate_state(ScalarField(g, phi0 + 0.5 * dt * k2), bg).theta - th
    k4 = evaluate_state(ScalarField(g, phi0 + dt * k3), bg).theta - th
    phi1 = phi0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return FlowState(state.t + dt, evaluate_state(ScalarField(g, phi1), bg))


def _step_imex(state: FlowState, bg: BackgroundData, dt: float) -> FlowState:
    g = state.phi.grid
    cache = state.cache
    # Largest eigenvalue of eta^{-1} in the alpha-frame over the grid.
    c = max(
        float(np.max(1.0 / (1.0 + cache.lam1**2))),
        float(np.max(1.0 / (1.0 + cache.lam2**2))),
    )
    lap = laplacian_apply(state.phi, bg.alpha).values
    expl = state.phi.values + dt * ((cache.theta - bg.theta_hat) - c * lap)
    phi1 = helmholtz_solve(ScalarField(g, expl), bg.alpha, dt * c)
    return FlowState(state.t + dt, evaluate_state(phi1, bg))


def _trace_row(state: FlowState, bg: BackgroundData, dt_used: float):
    rep = functional_report(state.cache, bg)
    theta = state.cache.theta
    return (
        state.t,
        float(theta.min()),
        float(theta.max()),
        float(state.cache.v.max()),
        rep.v_val,
        rep.i_val,
        rep.j_val,
        rep.res_dhym_sup,
        rep.res_dhym_l2,
        rep.res_ma_sup,
        rep.dissipation,
        dt_used,
    )


def run(
    config: FlowConfig,
    bg: BackgroundData,
    phi0: ScalarField | None = None,
) -> tuple[FlowTrace, FlowState]:
    """Integrate until the L2 phase residual drops below residual_tol or
    t_max is reached; sample the monitors every sample_interval."""
    grid = bg.grid
    if phi0 is None:
        phi0 = ScalarField(grid, np.zeros(grid.shape))
    state = FlowState(0.0, evaluate_state(phi0, bg))
    if config.require_hypercritical:
        _check_hypercritical(state)

    trace = FlowTrace()
    trace.rows.append(_trace_row(state, bg, 0.0))
    sample_idx = 1
    while True:
        _, res_l2 = dhym_residual(state.cache, bg)
        if res_l2 < config.residual_tol:
            trace.converged = True
            break
        if state.t >= config.t_max - 1e-12 * max(1.0, config.t_max):
            break
        target = min(sample_idx * config.sample_interval, config.t_max)
        if config.scheme == "explicit-rk4":
            dt = min(cfl_dt(state.cache, grid, config.cfl_sigma), target - state.t)
        else:
            dt = min(config.cfl_sigma * grid.spacing, target - state.t)
        state = step(state, bg, dt, config.scheme, config.cfl_sigma)
        if state.t >= target - 1e-12 * max(1.0, target):
            state.t = target  # snap to the exact sample time
            trace.rows.append(_trace_row(state, bg, dt))
            sample_idx += 1
        if config.require_hypercritical:
            _check_hypercritical(state)

    # Final row if the state moved past the last recorded sample.
    if state.t > trace.rows[-1][0]:
        trace.rows.append(_trace_row(state, bg, 0.0))
    return trace, state


def _bicgstab(apply_a, solve_m, b: np.ndarray, tol: float, maxit: int) -> np.ndarray:
    """Stabilised biconjugate gradients on the zero-mean subspace.

    The linearised phase operator is elliptic but not symmetric (the volume
    weight varies through a different contraction than the phase), so plain
    CG does not apply.  All reductions go through np.sum, keeping runs
    bit-reproducible.
    """

    def proj(a):
        return a - a.mean()

    b = proj(b)
    b_norm = math.sqrt(float(np.sum(b * b)))
    x = np.zeros_like(b)
    if b_norm == 0.0:
        return x
    r = b.copy()
    r_shadow = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    for _ in range(maxit):
        rho_new = float(np.sum(r_shadow * r))
        if not math.isfinite(rho_new) or abs(rho_new) < 1e-300:
            raise StagnationError("Krylov breakdown (rho)")
        beta = (rho_new / rho) * (alpha / omega)
        rho = rho_new
        p = r + beta * (p - omega * v)
        p_hat = proj(solve_m(p))
        v = proj(apply_a(p_hat))
        denom = float(np.sum(r_shadow * v))
        if not math.isfinite(denom) or abs(denom) < 1e-300:
            raise StagnationError("Krylov breakdown (shadow angle)")
        alpha = rho / denom
        s = r - alpha * v
        if math.sqrt(float(np.sum(s * s))) <= tol * b_norm:
            return x + alpha * p_hat
        s_hat = proj(solve_m(s))
        t = proj(apply_a(s_hat))
        tt = float(np.sum(t * t))
        if tt == 0.0:
            raise StagnationError("Krylov breakdown (t = 0)")
        omega = float(np.sum(t * s)) / tt
        x = x + alpha * p_hat + omega * s_hat
        r = s - omega * t
        if math.sqrt(float(np.sum(r * r))) <= tol * b_norm:
            return x
        if omega == 0.0:
            raise StagnationError("Krylov breakdown (omega = 0)")
    raise StagnationError("linear solve did not converge")


def newton_dhym(
    phi0: ScalarField,
    bg: BackgroundData,
    tol: float = 1e-10,
    max_iter: int = 40,
    cg_tol: float = 1e-12,
    cg_maxit: int = 1500,
) -> ScalarField:
    """Damped Newton solve of theta(phi) = theta_hat; returns phi with mean 0.

    Each step solves the v-weighted linearisation
        v * tr(eta^{-1} Hessian(dphi)) = -v * (theta - theta_hat - mu)
    by preconditioned stabilised biconjugate gradients, where mu is the
    v-weighted mean of (theta - theta_hat) -- the discrete compatibility
    constant making the right side orthogonal to constants.  The
    preconditioner is the constant-coefficient solve with the averaged
    weighted metric.  Damping halves the update up to ten times whenever it
    would leave the hypercritical range or fail to reduce the sup residual.
    """
    grid = phi0.grid
    phi = ScalarField(grid, phi0.values - phi0.values.mean())
    state = evaluate_state(phi, bg)
    if not state.hypercritical_everywhere():
        raise HypercriticalityLost(0.0, None, float(state.theta.min()))

    for _ in range(max_iter):
        drift = state.theta - bg.theta_hat
        sup = float(np.max(np.abs(drift)))
        if sup < tol:
            return phi
        e11, e12, e22 = state.eta_inverse(bg)
        mu = float(np.sum(drift * state.v) / np.sum(state.v))
        rhs_arr = -state.v * (drift - mu)

        def apply_a(u, _e=(e11, e12, e22), _v=state.v):
            lin = linearized_phase_raw(u, _e, grid)
            return -_v * lin  # negated: CG needs positive definite

        w11 = float(np.mean(state.v * e11))
        w12 = complex(np.mean(state.v * e12))
        w22 = float(np.mean(state.v * e22))
        winv = np.array([[w11, w12], [np.conj(w12), w22]])
        coeff = np.linalg.inv(winv)

        def solve_m(r):
            return -solve_constant_laplacian(ScalarField(grid, r), coeff).values

        delta = _bicgstab(apply_a, solve_m, -rhs_arr, cg_tol, cg_maxit)

        scale = 1.0
        for _halving in range(11):
            trial = ScalarField(grid, phi.values + scale * delta)
            trial = ScalarField(grid, trial.values - trial.values.mean())
            trial_state = evaluate_state(trial, bg)
            trial_sup = float(np.max(np.abs(trial_state.theta - bg.theta_hat)))
            if trial_state.hypercritical_everywhere() and trial_sup < sup:
                phi, state = trial, trial_state
                break
            scale *= 0.5
        else:
            raise StagnationError(
                f"Newton backtracking failed at sup residual {sup:.3e}"
            )
    raise StagnationError("Newton iteration limit reached")


def linearized_phase_raw(u: np.ndarray, eta_entries, grid: GridSpec) -> np.ndarray:
    """tr(eta^{-1} Hessian(u)) for a bare array u and fixed eta entries."""
    h11, h12, h22 = complex_hessian_entries(ScalarField(grid, u))
    e11, e12, e22 = eta_entries
    return kernels.trace_contract(e11, e12, e22, h11, h12, h22)
