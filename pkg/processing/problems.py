"""
Benchmark problems: the 1-D double integrator and the planar Earth-Mars
low-thrust rendezvous.

Problem callables are module-level functions bound with functools.partial
so built problems can be shipped to worker processes.
"""
from functools import partial
from typing import Callable, List, NamedTuple, Optional, Tuple
import logging
import numpy as np
from models.DoubleIntegratorConfig import DoubleIntegratorConfig
from models.GaussianState import GaussianState
from models.LowThrustConfig import LowThrustConfig
from models.StochasticProblem import StochasticProblem
from processing.exceptions import SingularRadiusError

logger = logging.getLogger(__name__)


# ───────────────────────────────────────────────────────────────
# Double integrator
# ───────────────────────────────────────────────────────────────

def double_integrator_step(x: np.ndarray,
                           u: np.ndarray,
                           w: np.ndarray,
                           cfg: DoubleIntegratorConfig) -> np.ndarray:
    """r' = r + Δt·v + w₁,  v' = v + b·u + w₂."""
    x, u, w = np.asarray(x, float), np.asarray(u, float), np.asarray(w, float)
    return np.stack([x[..., 0] + cfg.dt * x[..., 1] + w[..., 0],
                     x[..., 1] + cfg.b * u[..., 0] + w[..., 1]], axis=-1)


def stage_cost_di(x, u, w, cfg: DoubleIntegratorConfig) -> np.ndarray:
    return np.abs(np.asarray(u, float)[..., 0])


def terminal_cost_di(x, cfg: DoubleIntegratorConfig) -> np.ndarray:
    d = np.asarray(x, float) - np.asarray(cfg.xf)
    return cfg.c_f * np.sum(d ** 2, axis=-1)


def _di_dynamics(x, u, w, k, cfg):
    return double_integrator_step(x, u, w, cfg)


def _di_stage_cost(x, u, w, k, cfg, smoothing):
    # √(u²+δ) − √δ: zero at rest, within √δ of |u|
    u = np.asarray(u, float)[..., 0]
    return np.sqrt(u ** 2 + smoothing) - np.sqrt(smoothing)


def _di_jacobian(x, u, k, cfg):
    lead = x.shape[:-1]
    A = np.array([[1.0, cfg.dt], [0.0, 1.0]])
    B = np.array([[0.0], [cfg.b]])
    return (np.broadcast_to(A, lead + (2, 2)).copy(),
            np.broadcast_to(B, lead + (2, 1)).copy())


def _di_stage_derivatives(x, u, k, cfg, smoothing):
    u = np.asarray(u, float)
    lead = u.shape[:-1]
    s = np.sqrt(u ** 2 + smoothing)
    return (np.zeros(lead + (2,)),
            u / s,
            np.zeros(lead + (2, 2)),
            (smoothing / s ** 3)[..., None],
            np.zeros(lead + (1, 2)))


def _di_terminal_derivatives(x, cfg):
    x = np.asarray(x, float)
    lead = x.shape[:-1]
    return (2.0 * cfg.c_f * (x - np.asarray(cfg.xf)),
            np.broadcast_to(2.0 * cfg.c_f * np.eye(2), lead + (2, 2)).copy())


def build_double_integrator(cfg: DoubleIntegratorConfig,
                            duty_cycle: Optional[float] = None,
                            smoothing: Optional[float] = None) -> StochasticProblem:
    """
    Double integrator problem with |u| <= duty·u_max. The stage cost is
    the smoothed |u| with δ = `smoothing` (default cfg.abs_smoothing).
    """
    duty = cfg.duty_cycle if duty_cycle is None else duty_cycle
    delta = cfg.abs_smoothing if smoothing is None else smoothing
    if delta <= 0:
        raise ValueError(f"smoothing must be > 0, got {delta}")
    return StochasticProblem(
        name="double_integrator",
        nx=2, nu=1, nw=2, N=cfg.N,
        dynamics=partial(_di_dynamics, cfg=cfg),
        stage_cost=partial(_di_stage_cost, cfg=cfg, smoothing=delta),
        terminal_cost=partial(terminal_cost_di, cfg=cfg),
        control_bound=duty * cfg.u_max,
        noise_cov=np.diag(cfg.noise_diag),
        init=GaussianState(mean=cfg.x0, cov=np.diag(cfg.init_cov_diag)),
        kappa_x=cfg.kappa,
        kappa_w=cfg.kappa,
        prob_level_multiplier=cfg.prob_level_multiplier,
        epsilon_singularity=cfg.epsilon_singularity,
        dynamics_jacobian=partial(_di_jacobian, cfg=cfg),
        stage_cost_derivatives=partial(_di_stage_derivatives, cfg=cfg,
                                       smoothing=delta),
        terminal_cost_derivatives=partial(_di_terminal_derivatives, cfg=cfg))


def smoothing_schedule(cfg: DoubleIntegratorConfig) -> List[float]:
    """
    Decreasing δ values for continuation: smoothing_start shrunk by
    smoothing_factor per solve, ending exactly at abs_smoothing.
    """
    deltas = []
    delta = cfg.smoothing_start
    while delta > cfg.abs_smoothing * (1.0 + 1e-9):
        deltas.append(delta)
        delta *= cfg.smoothing_factor
    return deltas + [cfg.abs_smoothing]


# ───────────────────────────────────────────────────────────────
# Two-body dynamics
# ───────────────────────────────────────────────────────────────

def two_body_derivative(x: np.ndarray,
                        u: np.ndarray,
                        gm: float,
                        min_radius: float = 0.0) -> np.ndarray:
    """
    d/dt [r, v] = [v, −gm·r/‖r‖³ + u] for planar states (..., 4).

    Raises:
        SingularRadiusError: ‖r‖ <= min_radius anywhere in the batch.
    """
    x, u = np.asarray(x, float), np.asarray(u, float)
    r, v = x[..., :2], x[..., 2:]
    rn = np.linalg.norm(r, axis=-1, keepdims=True)
    if np.any(rn <= min_radius):
        raise SingularRadiusError(f"radius {rn.min():.3e} below {min_radius:.3e}")
    return np.concatenate([v, -gm * r / rn ** 3 + u], axis=-1)


def rk4_step(x: np.ndarray,
             u: np.ndarray,
             dt: float,
             derivative: Callable[[np.ndarray, np.ndarray], np.ndarray],
             substeps: int = 1) -> np.ndarray:
    """
    Classical RK4 over [0, dt] with u held constant, split into
    `substeps` equal steps.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    h = dt / substeps
    x = np.asarray(x, float)
    for _ in range(substeps):
        k1 = derivative(x, u)
        k2 = derivative(x + 0.5 * h * k1, u)
        k3 = derivative(x + 0.5 * h * k2, u)
        k4 = derivative(x + h * k3, u)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def specific_energy(x: np.ndarray, gm: float) -> np.ndarray:
    x = np.asarray(x, float)
    return (0.5 * np.sum(x[..., 2:] ** 2, axis=-1)
            - gm / np.linalg.norm(x[..., :2], axis=-1))


def angular_momentum(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, float)
    return x[..., 0] * x[..., 3] - x[..., 1] * x[..., 2]


# ───────────────────────────────────────────────────────────────
# Scaling
# ───────────────────────────────────────────────────────────────

_DIMENSIONS = {"length": (1, 0), "time": (0, 1),
               "velocity": (1, -1), "acceleration": (1, -2)}


def _unit(kind: str, cfg: LowThrustConfig) -> np.ndarray:
    if kind == "state":
        v = cfg.length_scale / cfg.time_scale
        return np.array([cfg.length_scale, cfg.length_scale, v, v])
    if kind not in _DIMENSIONS:
        raise ValueError(f"unknown quantity kind {kind!r}")
    p, q = _DIMENSIONS[kind]
    return np.asarray(cfg.length_scale ** p * cfg.time_scale ** q)


def scale(value, kind: str, cfg: LowThrustConfig) -> np.ndarray:
    """Physical -> nondimensional. kind: length|time|velocity|acceleration|state."""
    return np.asarray(value, float) / _unit(kind, cfg)


def unscale(value, kind: str, cfg: LowThrustConfig) -> np.ndarray:
    return np.asarray(value, float) * _unit(kind, cfg)


class LowThrustConstants(NamedTuple):
    """Scaled constants of a LowThrustConfig."""
    gm: float
    dt: float
    u_ub: float
    min_radius: float
    target: np.ndarray
    c_f: float
    mass_leak: float
    substeps: int


def scaled_constants(cfg: LowThrustConfig) -> LowThrustConstants:
    L, T = cfg.length_scale, cfg.time_scale
    return LowThrustConstants(
        gm=cfg.gm_sun * T ** 2 / L ** 3,
        dt=float(scale(cfg.dt, "time", cfg)),
        u_ub=float(scale(cfg.u_ub, "acceleration", cfg)),
        min_radius=float(scale(cfg.min_radius_km, "length", cfg)),
        target=scale(cfg.r_mars + cfg.v_mars, "state", cfg),
        c_f=cfg.c_f,
        mass_leak=cfg.mass_leak,
        substeps=cfg.substeps)


def low_thrust_step(x, u, w, k, consts: LowThrustConstants) -> np.ndarray:
    """RK4 two-body step in scaled units plus additive noise w."""
    f = partial(two_body_derivative, gm=consts.gm, min_radius=consts.min_radius)
    return rk4_step(x, u, consts.dt, f, consts.substeps) + np.asarray(w, float)


def stage_cost_lt(x, u, w, k, consts: LowThrustConstants) -> np.ndarray:
    """√(‖u‖² + ε), the mass-leak smoothed control norm."""
    u = np.asarray(u, float)
    return np.sqrt(np.sum(u ** 2, axis=-1) + consts.mass_leak)


def terminal_cost_lt(x, consts: LowThrustConstants) -> np.ndarray:
    d = np.asarray(x, float) - consts.target
    return consts.c_f * np.sum(d ** 2, axis=-1)


def _lt_stage_derivatives(x, u, k, consts):
    u = np.asarray(u, float)
    lead = u.shape[:-1]
    s = np.sqrt(np.sum(u ** 2, axis=-1) + consts.mass_leak)[..., None]
    luu = (np.eye(2) / s[..., None]
           - u[..., :, None] * u[..., None, :] / s[..., None] ** 3)
    return (np.zeros(lead + (4,)), u / s, np.zeros(lead + (4, 4)),
            luu, np.zeros(lead + (2, 4)))


def _lt_terminal_derivatives(x, consts):
    x = np.asarray(x, float)
    lead = x.shape[:-1]
    return (2.0 * consts.c_f * (x - consts.target),
            np.broadcast_to(2.0 * consts.c_f * np.eye(4), lead + (4, 4)).copy())


def build_low_thrust(cfg: LowThrustConfig,
                     duty_cycle: Optional[float] = None) -> StochasticProblem:
    """
    Scaled low-thrust rendezvous problem with ‖u‖ <= duty·u_UB.
    """
    duty = cfg.duty_cycle if duty_cycle is None else duty_cycle
    consts = scaled_constants(cfg)
    L, T = cfg.length_scale, cfg.time_scale
    sr2 = cfg.sigma_r2 / L ** 2
    sv2 = cfg.sigma_v2 * (T / L) ** 2
    logger.debug(f"Low-thrust scaled constants: gm={consts.gm:.6f}, "
                 f"dt={consts.dt:.6f}, u_ub={consts.u_ub:.3e}")
    return StochasticProblem(
        name="low_thrust",
        nx=4, nu=2, nw=4, N=cfg.N,
        dynamics=partial(low_thrust_step, consts=consts),
        stage_cost=partial(stage_cost_lt, consts=consts),
        terminal_cost=partial(terminal_cost_lt, consts=consts),
        control_bound=duty * consts.u_ub,
        noise_cov=np.diag([sr2, sr2, sv2, sv2]),
        init=GaussianState(mean=scale(cfg.r_earth + cfg.v_earth, "state", cfg),
                           cov=np.zeros((4, 4))),
        kappa_x=cfg.kappa,
        kappa_w=cfg.kappa,
        prob_level_multiplier=cfg.prob_level_multiplier,
        epsilon_singularity=cfg.epsilon_singularity,
        stage_cost_derivatives=partial(_lt_stage_derivatives, consts=consts),
        terminal_cost_derivatives=partial(_lt_terminal_derivatives, consts=consts))


def duty_cycle_margin(b: float, sigma_v2: float, multiplier: float = 3.0) -> float:
    """1 − q·σ_v / b: share of the per-step velocity change left after
    reserving q standard deviations of velocity noise."""
    return 1.0 - multiplier * np.sqrt(sigma_v2) / b


def build_problem(name: str,
                  cfg,
                  duty_cycle: Optional[float] = None,
                  smoothing: Optional[float] = None) -> StochasticProblem:
    """`smoothing` applies to the double integrator only."""
    if name == "double_integrator":
        return build_double_integrator(cfg, duty_cycle, smoothing)
    if name == "low_thrust":
        return build_low_thrust(cfg, duty_cycle)
    raise ValueError(f"unknown problem {name!r}")


def continuation(name: str, cfg) -> List[Optional[float]]:
    """Smoothing values a nominal solve walks through, last one final."""
    if name == "double_integrator":
        return smoothing_schedule(cfg)
    return [None]


def problem_units(name: str, cfg) -> Tuple[np.ndarray, np.ndarray]:
    """
    Multipliers taking solver states/controls back to physical units.
    """
    if name == "low_thrust":
        return _unit("state", cfg), np.full(2, float(_unit("acceleration", cfg)))
    return np.ones(2), np.ones(1)
