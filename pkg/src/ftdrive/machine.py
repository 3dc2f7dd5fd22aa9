"""Squirrel-cage induction machine model in the stationary alpha-beta frame.

Continuous-time electrical model (stator current + rotor flux state) with
mechanical dynamics, the algebraic stator/rotor flux maps, and a reference
fixed-step integrator. The state vector is (is_alpha, is_beta, psir_alpha,
psir_beta, omega_m); stator flux is derived, never stored.

Conventions fixed project-wide:
  - torque Te = 1.5*p*(psis_alpha*is_beta - psis_beta*is_alpha)
  - electrical speed omega = p * omega_m
  - tau_sigma = sigma*Ls / R_sigma
"""

from __future__ import annotations

import math
from dataclasses import dataclass

Vec2 = tuple[float, float]


class IntegrationDiverged(RuntimeError):
    """Raised when a machine integration step produces a non-finite state."""


@dataclass(frozen=True)
class MachineParams:
    Rs: float      # stator resistance [Ohm]
    Rr: float      # rotor resistance [Ohm]
    Ls: float      # stator inductance [H]
    Lr: float      # rotor inductance [H]
    Lm: float      # magnetizing inductance [H]
    p: int         # pole pairs
    J: float       # total inertia [kg m^2]
    Tn: float      # nominal torque [N m]
    psi_n: float   # nominal stator flux [Wb]

    def __post_init__(self):
        for name in ("Rs", "Rr", "Ls", "Lr", "Lm", "J", "Tn", "psi_n"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"MachineParams.{name} must be > 0")
        if self.p < 1:
            raise ValueError("MachineParams.p must be >= 1")


@dataclass(frozen=True)
class DerivedParams:
    kr: float         # rotor coupling factor Lm/Lr
    R_sigma: float    # Rs + Rr*kr^2 [Ohm]
    tau_r: float      # Lr/Rr [s]
    sigma: float      # 1 - Lm^2/(Ls*Lr)
    tau_sigma: float  # sigma*Ls/R_sigma [s]


@dataclass
class MachineState:
    is_alpha: float = 0.0
    is_beta: float = 0.0
    psir_alpha: float = 0.0
    psir_beta: float = 0.0
    omega_m: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.is_alpha, self.is_beta,
                self.psir_alpha, self.psir_beta, self.omega_m)


@dataclass
class MachineInputs:
    vs_alpha: float = 0.0
    vs_beta: float = 0.0
    T_load: float = 0.0


def derive_params(params: MachineParams) -> DerivedParams:
    """Compute the derived machine constants.

    Rejects leakage-free parameter sets (Lm^2 >= Ls*Lr), which make the
    transient inductance singular.
    """
    if params.Lm * params.Lm >= params.Ls * params.Lr:
        raise ValueError("Lm^2 >= Ls*Lr: leakage-free machine is singular")
    kr = params.Lm / params.Lr
    r_sigma = params.Rs + params.Rr * kr * kr
    tau_r = params.Lr / params.Rr
    sigma = 1.0 - params.Lm * params.Lm / (params.Ls * params.Lr)
    tau_sigma = sigma * params.Ls / r_sigma
    return DerivedParams(kr=kr, R_sigma=r_sigma, tau_r=tau_r,
                         sigma=sigma, tau_sigma=tau_sigma)


def stator_flux_from(is_vec: Vec2, psir: Vec2, d: DerivedParams,
                     params: MachineParams) -> Vec2:
    """psis = kr*psir + sigma*Ls*is (rotor current eliminated)."""
    sls = d.sigma * params.Ls
    return (d.kr * psir[0] + sls * is_vec[0],
            d.kr * psir[1] + sls * is_vec[1])


def rotor_flux_from(psis: Vec2, is_vec: Vec2, params: MachineParams) -> Vec2:
    """Exact inverse of stator_flux_from on (psis, is).

    psir = (Lr/Lm)*psis + (Lm - Lr*Ls/Lm)*is
    """
    a = params.Lr / params.Lm
    b = params.Lm - params.Lr * params.Ls / params.Lm
    return (a * psis[0] + b * is_vec[0], a * psis[1] + b * is_vec[1])


def torque(psis: Vec2, is_vec: Vec2, p: int) -> float:
    """Electromagnetic torque, fixed sign convention (positive accelerates)."""
    return 1.5 * p * (psis[0] * is_vec[1] - psis[1] * is_vec[0])


def derivatives(state: MachineState, u: MachineInputs,
                params: MachineParams, d: DerivedParams
                ) -> tuple[float, float, float, float, float]:
    """Time derivative of the state under the given inputs.

    Returns (dis_alpha, dis_beta, dpsir_alpha, dpsir_beta, domega_m)/dt.
    """
    return _rhs(state.is_alpha, state.is_beta,
                state.psir_alpha, state.psir_beta, state.omega_m,
                u.vs_alpha, u.vs_beta, u.T_load, params, d)


def _rhs(ia: float, ib: float, pa: float, pb: float, wm: float,
         va: float, vb: float, tl: float,
         params: MachineParams, d: DerivedParams
         ) -> tuple[float, float, float, float, float]:
    w = params.p * wm                      # electrical speed
    inv_tr = 1.0 / d.tau_r
    # (1/tau_r - j*w) * psir
    ga = pa * inv_tr + w * pb
    gb = pb * inv_tr - w * pa
    k = d.kr / d.R_sigma
    inv_ts = 1.0 / d.tau_sigma
    dia = (-ia + k * ga + va / d.R_sigma) * inv_ts
    dib = (-ib + k * gb + vb / d.R_sigma) * inv_ts
    lm_tr = params.Lm * inv_tr
    dpa = -pa * inv_tr - w * pb + lm_tr * ia
    dpb = -pb * inv_tr + w * pa + lm_tr * ib
    sls = d.sigma * params.Ls
    psa = d.kr * pa + sls * ia
    psb = d.kr * pb + sls * ib
    te = 1.5 * params.p * (psa * ib - psb * ia)
    dwm = (te - tl) / params.J
    return (dia, dib, dpa, dpb, dwm)


def _rk4_step(y: tuple[float, float, float, float, float],
              va: float, vb: float, tl: float, dt: float,
              params: MachineParams, d: DerivedParams
              ) -> tuple[float, float, float, float, float]:
    """One classic RK4 step on the machine state tuple, inputs held."""
    ia, ib, pa, pb, wm = y
    k1 = _rhs(ia, ib, pa, pb, wm, va, vb, tl, params, d)
    h2 = 0.5 * dt
    k2 = _rhs(ia + h2 * k1[0], ib + h2 * k1[1], pa + h2 * k1[2],
              pb + h2 * k1[3], wm + h2 * k1[4], va, vb, tl, params, d)
    k3 = _rhs(ia + h2 * k2[0], ib + h2 * k2[1], pa + h2 * k2[2],
              pb + h2 * k2[3], wm + h2 * k2[4], va, vb, tl, params, d)
    k4 = _rhs(ia + dt * k3[0], ib + dt * k3[1], pa + dt * k3[2],
              pb + dt * k3[3], wm + dt * k3[4], va, vb, tl, params, d)
    s = dt / 6.0
    return (ia + s * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
            ib + s * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
            pa + s * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]),
            pb + s * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3]),
            wm + s * (k1[4] + 2.0 * (k2[4] + k3[4]) + k4[4]))


def _euler_step(y: tuple[float, float, float, float, float],
                va: float, vb: float, tl: float, dt: float,
                params: MachineParams, d: DerivedParams
                ) -> tuple[float, float, float, float, float]:
    k = _rhs(y[0], y[1], y[2], y[3], y[4], va, vb, tl, params, d)
    return (y[0] + dt * k[0], y[1] + dt * k[1], y[2] + dt * k[2],
            y[3] + dt * k[3], y[4] + dt * k[4])


def integrate_step(state: MachineState, u: MachineInputs, dt: float,
                   params: MachineParams, d: DerivedParams,
                   method: str = "rk4") -> MachineState:
    """One explicit step of the chosen method with inputs held over dt.

    rk4 is the project-wide reference integrator. dt = 0 returns the state
    unchanged. A non-finite result raises IntegrationDiverged.
    """
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    if dt == 0.0:
        return MachineState(*state.as_tuple())
    if method == "rk4":
        y = _rk4_step(state.as_tuple(), u.vs_alpha, u.vs_beta, u.T_load,
                      dt, params, d)
    elif method == "euler":
        y = _euler_step(state.as_tuple(), u.vs_alpha, u.vs_beta, u.T_load,
                        dt, params, d)
    else:
        raise ValueError(f"unknown integration method: {method!r}")
    if not all(math.isfinite(v) for v in y):
        raise IntegrationDiverged(f"non-finite state after {method} step")
    return MachineState(*y)


# Table-scale reference parameter set used by presets and tests.
def reference_params() -> MachineParams:
    """Machine parameter set of the implemented prototype scale."""
    return MachineParams(Rs=1.4, Rr=1.1, Ls=0.175, Lr=0.175, Lm=0.170,
                         p=2, J=0.06, Tn=15.0, psi_n=0.6)
