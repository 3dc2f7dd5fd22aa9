"""Finite-control-set predictive torque/flux controller.

Stator-flux estimation by voltage-model integration, one-step current and
flux prediction, cost minimization over the active voltage-vector table
(optionally with one-period delay compensation), and the outer PI speed
loop producing the torque reference.

All vectors are (alpha, beta) tuples in the stationary frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .converter import VectorEntry
from .machine import DerivedParams, MachineParams, rotor_flux_from, torque

Vec2 = tuple[float, float]


@dataclass(frozen=True)
class MpcConfig:
    Ts: float                        # control period [s]
    lam: float                       # flux weighting factor [N m / Wb]
    flux_ref: float                  # stator flux magnitude reference [Wb]
    delay_compensation: bool = True
    flux_term_multiplier: float = 1.0

    def __post_init__(self):
        if self.Ts <= 0.0:
            raise ValueError("Ts must be > 0")
        if self.lam < 0.0:
            raise ValueError("lambda must be >= 0")
        if self.flux_ref <= 0.0:
            raise ValueError("flux_ref must be > 0")


@dataclass
class EstimatorState:
    psis_hat: Vec2 = (0.0, 0.0)      # estimated stator flux [Wb]
    last_vs: Vec2 = (0.0, 0.0)       # last applied stator voltage [V]


@dataclass(frozen=True)
class PiConfig:
    kp: float                        # [N m s / rad]
    ki: float                        # [N m / rad]
    t_max: float                     # torque saturation [N m]

    def __post_init__(self):
        if self.kp < 0.0 or self.ki < 0.0:
            raise ValueError("PI gains must be >= 0")
        if self.t_max <= 0.0:
            raise ValueError("t_max must be > 0")


@dataclass
class PiState:
    integrator: float = 0.0


def estimate_stator_flux(est: EstimatorState, vs: Vec2, is_meas: Vec2,
                         Rs: float, Ts: float) -> EstimatorState:
    """Voltage-model update: psis(k) = psis(k-1) + Ts*vs - Rs*Ts*is.

    vs is the voltage applied over the elapsed interval, is the current
    measured now.
    """
    if Ts <= 0.0:
        raise ValueError("Ts must be > 0")
    pa = est.psis_hat[0] + Ts * vs[0] - Rs * Ts * is_meas[0]
    pb = est.psis_hat[1] + Ts * vs[1] - Rs * Ts * is_meas[1]
    return EstimatorState(psis_hat=(pa, pb), last_vs=vs)


def predict_stator_flux(psis_k: Vec2, vs_candidate: Vec2, is_k: Vec2,
                        Rs: float, Ts: float) -> Vec2:
    """One-step flux prediction, same affine form as the estimator update."""
    if Ts <= 0.0:
        raise ValueError("Ts must be > 0")
    return (psis_k[0] + Ts * vs_candidate[0] - Rs * Ts * is_k[0],
            psis_k[1] + Ts * vs_candidate[1] - Rs * Ts * is_k[1])


def predict_current(is_k: Vec2, psir_k: Vec2, vs_candidate: Vec2,
                    omega_e: float, d: DerivedParams, Ts: float) -> Vec2:
    """Semi-implicit one-step current prediction.

    is(k+1) = (1 + Ts/tau_sigma)^-1 * { is(k)
              + (Ts/tau_sigma)*(1/R_sigma)*[ kr*(1/tau_r - j*omega)*psir(k)
              + vs(k) ] }
    """
    if Ts <= 0.0:
        raise ValueError("Ts must be > 0")
    inv_tr = 1.0 / d.tau_r
    ga = psir_k[0] * inv_tr + omega_e * psir_k[1]
    gb = psir_k[1] * inv_tr - omega_e * psir_k[0]
    r = Ts / d.tau_sigma
    inv_den = 1.0 / (1.0 + r)
    fa = (d.kr * ga + vs_candidate[0]) / d.R_sigma
    fb = (d.kr * gb + vs_candidate[1]) / d.R_sigma
    return ((is_k[0] + r * fa) * inv_den, (is_k[1] + r * fb) * inv_den)


def predict_torque(psis_k1: Vec2, is_k1: Vec2, p: int) -> float:
    """Torque at the prediction horizon; same convention as the plant."""
    return torque(psis_k1, is_k1, p)


def cost(te_ref: float, te_pred: float, flux_ref: float,
         flux_pred_mag: float, cfg: MpcConfig) -> float:
    """g = |Te* - Te| + m*lambda*| |psis*| - |psis| |."""
    return (abs(te_ref - te_pred)
            + cfg.flux_term_multiplier * cfg.lam * abs(flux_ref - flux_pred_mag))


def select_vector(est: EstimatorState, is_meas: Vec2, omega_e: float,
                  te_ref: float, vectors: list[VectorEntry], cfg: MpcConfig,
                  params: MachineParams, d: DerivedParams,
                  committed_index: int | None = None
                  ) -> tuple[int, list[float]]:
    """Pick the cost-minimizing candidate from the vector table.

    Without delay compensation the cost is evaluated one step ahead and the
    winner is meant to be applied immediately. With delay compensation the
    state is first advanced one step under the already-committed vector
    (``committed_index``), each candidate is evaluated at the second step,
    and the winner is meant to be applied over the NEXT period. Ties break
    to the lowest table index. Returns (index, per-candidate costs).
    """
    if not vectors:
        raise ValueError("empty vector table")
    psis_k = est.psis_hat
    psir_k = rotor_flux_from(psis_k, is_meas, params)
    if cfg.delay_compensation:
        if committed_index is None:
            raise ValueError("delay compensation requires committed_index")
        v_com = vectors[committed_index].v
        is_1 = predict_current(is_meas, psir_k, v_com, omega_e, d, cfg.Ts)
        psis_1 = predict_stator_flux(psis_k, v_com, is_meas, params.Rs, cfg.Ts)
        psir_1 = rotor_flux_from(psis_1, is_1, params)
    else:
        is_1, psis_1, psir_1 = is_meas, psis_k, psir_k

    costs: list[float] = []
    best_idx = 0
    best_g = float("inf")
    for entry in vectors:
        is_p = predict_current(is_1, psir_1, entry.v, omega_e, d, cfg.Ts)
        psis_p = predict_stator_flux(psis_1, entry.v, is_1, params.Rs, cfg.Ts)
        te_p = torque(psis_p, is_p, params.p)
        mag = (psis_p[0] * psis_p[0] + psis_p[1] * psis_p[1]) ** 0.5
        g = cost(te_ref, te_p, cfg.flux_ref, mag, cfg)
        costs.append(g)
        if g < best_g:
            best_g = g
            best_idx = entry.index
    return best_idx, costs


def pi_speed_step(omega_ref: float, omega_m: float, state: PiState,
                  cfg: PiConfig, dt: float) -> tuple[float, PiState]:
    """Saturated PI with integrator freeze while saturated (anti-windup).

    Returns (torque reference, new state).
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    e = omega_ref - omega_m
    integ = state.integrator + cfg.ki * e * dt
    out = cfg.kp * e + integ
    if out > cfg.t_max:
        return cfg.t_max, PiState(integrator=state.integrator)
    if out < -cfg.t_max:
        return -cfg.t_max, PiState(integrator=state.integrator)
    return out, PiState(integrator=integ)
