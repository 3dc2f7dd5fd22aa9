"""Deterministic fixed-step drive simulation engine.

Couples the machine, converter, controller and fault manager on a fixed
grid: every sim step advances the converter conduction state and the
machine (rk4 on held voltages); every control period runs estimator ->
detector -> reconfiguration FSM -> PI -> vector selection -> actuation.

Conduction handling beyond the healthy three-wire case:
  - a leg whose commanded device cannot conduct freewheels through the
    antiparallel diode picked by the current sign until the current
    crosses zero, then blocks;
  - one dead leg with the neutral relay open runs the machine in a
    constrained two-wire mode (the two live windings in series);
  - an isolated leg with the neutral relay closed runs the two-leg
    postfault model (isolated phase voltage forced to zero, the phase
    current sum returning through the link midpoint);
  - a shorted device pins its leg to the corresponding rail; during the
    reconfiguration shoot-through the leg midpoint sits between the
    rails and the analytic fault current discharges both link halves
    through the leg fuse;
  - two or more dead legs coast the machine (currents zero, rotor flux
    and speed decay).
"""

from __future__ import annotations

import math
import random

from . import analysis
from .converter import (DEVICE_LEG, LEGS, LOWER, UPPER, DcLinkState,
                        FuseElement, SwitchingState, dc_link_step,
                        dcdc_balancer_step, fuse_step, inverse_clarke,
                        voltage_vector_table)
from .design.fuse import FuseDesignParams, fault_current
from .faults import (DetectorWindow, FaultSupervisor, classify_open_switch,
                     conduction_contradicts, crossing_devices,
                     normalized_dc_current, sc_detection_event)
from .machine import (IntegrationDiverged, derive_params, _rhs, _rk4_step,
                      stator_flux_from, torque)
from .mpc import (EstimatorState, PiState, estimate_stator_flux,
                  pi_speed_step, select_vector)
from .scenario import Scenario
from .trace import Trace

_SQRT3 = math.sqrt(3.0)
# Clarke projection directions and their in-plane normals, per phase.
_UNIT = {"a": (1.0, 0.0), "b": (-0.5, _SQRT3 / 2.0),
         "c": (-0.5, -_SQRT3 / 2.0)}
_PERP = {"a": (0.0, 1.0), "b": (-_SQRT3 / 2.0, -0.5),
         "c": (_SQRT3 / 2.0, -0.5)}

_TE_RAMP_PERIODS = 10       # startup torque-reference ramp
_EPS_CURRENT = 1e-9         # zero-current threshold for diode blocking [A]
_EPS_RATE = 1e-6            # diode breakover threshold [A/s]


class SimulationAborted(RuntimeError):
    """A scenario run failed; carries the failing step and a partial trace."""

    def __init__(self, reason: str, step: int, time: float,
                 trace: Trace | None = None):
        super().__init__(f"step {step} (t = {time:.6g} s): {reason}")
        self.reason = reason
        self.step = step
        self.time = time
        self.partial_trace = trace


class _Engine:
    def __init__(self, s: Scenario):
        self.s = s
        self.params = s.machine
        self.d = derive_params(s.machine)
        self.dt = s.sim.dt
        self.Ts = s.sim.ts
        self.spc = s.sim.steps_per_control

        half = 0.5 * s.dc_link.v_ref_total
        self.dc = DcLinkState(v_dc1=half, v_dc2=half,
                              c1=s.dc_link.c1, c2=s.dc_link.c2)
        self.sw = SwitchingState()
        self.fuses = {leg: FuseElement(rated_i2t=s.dc_link.fuse.rated_i2t)
                      for leg in LEGS}
        self.fuse_wave = FuseDesignParams(
            Vdc=s.dc_link.v_ref_total, Rf=s.dc_link.fuse.rf,
            alpha=s.dc_link.fuse.alpha, omega_d=s.dc_link.fuse.omega_d)

        self.y = (0.0, 0.0, 0.0, 0.0, 0.0)   # is_a, is_b, psir_a, psir_b, wm
        self.supervisor = FaultSupervisor()
        self.mode_label = self.supervisor.mode.label()
        self.blocked: set[str] = set()
        self.shoot: dict[str, float] = {}    # leg -> shoot-through start time
        self.gating_stopped = False

        self.est = EstimatorState()
        self.psir_cm = (0.0, 0.0)            # current-model rotor flux
        self.pi_state = PiState()
        self.te_ref = 0.0
        self.ctrl_count = 0

        self.table_mode = "normal"
        self.table = voltage_vector_table("normal", self.dc)
        self.pending_index = 0               # vector for the next boundary
        self.applied_index = 0
        # running sum of the stator voltage the plant actually saw, for
        # the flux estimator; on a faulted leg this differs from the
        # commanded vector while the freewheel diodes pick the rail
        self.vs_sum = (0.0, 0.0)
        self.vs_steps = 0

        det = s.detector
        self.det = det
        self.window = DetectorWindow(det.window_samples) if det.enabled \
            else None
        self.eps_amp = det.resolved_epsilon_amp(s.machine)
        if det.enabled:
            period = 1.0 / det.fundamental_hz
            self.sample_every = max(
                1, round(period / (det.window_samples * self.Ts)))
        else:
            self.sample_every = 1
        self.samples_since_flush = 0

        self.pending_events: list[tuple[str, str | None]] = []
        self.sc_schedule: list[tuple[float, str]] = []
        self.dcdc_schedule: list[tuple[float, str]] = []
        self.faults = sorted(s.faults, key=lambda f: (f.time, f.target))
        self.next_fault = 0

        self.rng = random.Random(s.noise.seed) if s.noise.enabled else None

        self.trace = Trace()
        self.detections: list[dict] = []
        self.fuse_events: list[dict] = []
        self.dcdc_events: list[dict] = []
        self.warnings: list[str] = []
        self.multi_fault_flagged = False

    # -- measurement helpers -------------------------------------------

    def _dead_legs(self) -> set[str]:
        """Legs carrying no machine current. A shoot-through leg still
        conducts (clamped to the link midpoint), so it is not dead."""
        return self.sw.isolated | self.blocked

    def _phase_currents(self, isa: float, isb: float
                        ) -> tuple[float, float, float]:
        """Terminal currents consistent with the present conduction mode."""
        if self.gating_stopped:
            return (0.0, 0.0, 0.0)
        dead = self._dead_legs()
        if len(dead) >= 2:
            return (0.0, 0.0, 0.0)
        if len(dead) == 1:
            leg = next(iter(dead))
            ux, uy = _UNIT[leg]
            gamma = -(ux * isa + uy * isb) if self.sw.rn_closed else 0.0
            out = []
            for x in LEGS:
                if x == leg:
                    out.append(0.0)
                else:
                    ex, ey = _UNIT[x]
                    out.append(ex * isa + ey * isb + gamma)
            return (out[0], out[1], out[2])
        return inverse_clarke(isa, isb)

    def _i_mid(self, ia: float, ib: float, ic: float) -> float:
        return -(ia + ib + ic) if self.sw.rn_closed else 0.0

    # -- fault schedule --------------------------------------------------

    def _inject_due_faults(self, t: float) -> None:
        while (self.next_fault < len(self.faults)
               and self.faults[self.next_fault].time <= t):
            f = self.faults[self.next_fault]
            self.next_fault += 1
            if f.target in ("Q1", "Q2"):
                if self.det.enabled:
                    self.dcdc_schedule.append(
                        (sc_detection_event(f, self.det.sc_latency),
                         f.target))
                continue
            self.sw.health[f.target] = (
                "open_fault" if f.kind == "open_circuit" else "short_fault")
            if f.kind == "short_circuit" and self.det.enabled:
                self.sc_schedule.append(
                    (sc_detection_event(f, self.det.sc_latency), f.target))

    # -- control period ----------------------------------------------------

    def _control(self, t: float) -> None:
        ctrl_idx = self.ctrl_count
        self.ctrl_count += 1
        isa, isb, _, _, wm = self.y
        if self.rng is not None:
            std = self.s.noise.current_std
            if std > 0.0:
                isa += self.rng.gauss(0.0, std)
                isb += self.rng.gauss(0.0, std)
            if self.s.noise.speed_std > 0.0:
                wm += self.rng.gauss(0.0, self.s.noise.speed_std)
        omega_e = self.params.p * wm

        # voltage-model flux estimate over the elapsed period, fed the
        # period-averaged voltage the machine actually received
        if ctrl_idx > 0 and self.vs_steps > 0:
            vs_avg = (self.vs_sum[0] / self.vs_steps,
                      self.vs_sum[1] / self.vs_steps)
            self.est = estimate_stator_flux(
                self.est, vs_avg, (isa, isb), self.params.Rs, self.Ts)
        self.vs_sum = (0.0, 0.0)
        self.vs_steps = 0
        self._observer_step((isa, isb), omega_e)

        events = self._detector_events(t, isa, isb)
        events.extend(self._due_scheduled_events(t))
        if events:
            for act in self.supervisor.step(events, t):
                self._apply_action(act, t)
        label = self.supervisor.mode.label()
        if label != self.mode_label:
            self.mode_label = label
            if self.window is not None:
                self.window.flush()
                self.samples_since_flush = 0
            # re-anchor the open-integrator estimate on the current-model
            # flux so control after a topology change starts drift-free
            psis = stator_flux_from((isa, isb), self.psir_cm, self.d,
                                    self.params)
            self.est = EstimatorState(psis_hat=psis,
                                      last_vs=self.est.last_vs)

        if self.gating_stopped or self.supervisor.mode.kind == "shutdown":
            self.te_ref = 0.0
            return

        raw, self.pi_state = pi_speed_step(
            self.s.omega_ref(t), wm, self.pi_state, self.s.pi, self.Ts)
        ramp = min(1.0, (ctrl_idx + 1) / _TE_RAMP_PERIODS)
        self.te_ref = raw * ramp

        self.table = voltage_vector_table(self.table_mode, self.dc)
        if self.s.mpc.delay_compensation:
            entry = self.table[self.pending_index]
            self._actuate(entry)
            best, _ = select_vector(
                self.est, (isa, isb), omega_e, self.te_ref, self.table,
                self.s.mpc, self.params, self.d,
                committed_index=entry.index)
            self.pending_index = best
        else:
            best, _ = select_vector(
                self.est, (isa, isb), omega_e, self.te_ref, self.table,
                self.s.mpc, self.params, self.d, committed_index=None)
            self._actuate(self.table[best])
            self.pending_index = best

    def _observer_step(self, is_meas: tuple[float, float], omega_e: float
                       ) -> None:
        """Current-model rotor-flux observer (Euler at the control period)."""
        pa, pb = self.psir_cm
        inv_tr = 1.0 / self.d.tau_r
        lm_tr = self.params.Lm * inv_tr
        dpa = -pa * inv_tr - omega_e * pb + lm_tr * is_meas[0]
        dpb = -pb * inv_tr + omega_e * pa + lm_tr * is_meas[1]
        self.psir_cm = (pa + self.Ts * dpa, pb + self.Ts * dpb)

    def _detector_events(self, t: float, isa: float, isb: float
                         ) -> list[tuple[str, str | None]]:
        if self.window is None:
            return []
        if self.ctrl_count % self.sample_every != 1 % self.sample_every:
            return []
        ia, ib, ic = self._phase_currents(isa, isb)
        self.window.push(ia, ib, ic)
        self.samples_since_flush += 1
        if (not self.window.full
                or self.samples_since_flush < self.det.window_samples
                or t < self.det.arm_time
                or self.supervisor.mode.kind not in ("normal", "postfault")):
            return []
        results = normalized_dc_current(self.window, self.eps_amp)
        for k, leg in enumerate(LEGS):
            if leg in self.sw.isolated:
                results[k] = None
        device, multi = classify_open_switch(results, self.det.threshold)
        if device is not None and conduction_contradicts(
                self.window, device, self.eps_amp):
            device = None
        elif device is None and multi:
            # a healthy phase often crosses alongside the faulted one
            # while the window turns over; when the conduction test
            # clears exactly one implied device, that is the fault
            survivors = [d for d in crossing_devices(results,
                                                     self.det.threshold)
                         if not conduction_contradicts(self.window, d,
                                                       self.eps_amp)]
            if len(survivors) == 1:
                device = survivors[0]
                multi = False
        if multi and device is None and not self.multi_fault_flagged:
            self.multi_fault_flagged = True
            self.warnings.append(
                f"unresolved multi-phase detector crossing at t = {t:.6g} s")
        if (device is None or device in self.supervisor.handled_devices
                or DEVICE_LEG[device] in self.sw.isolated):
            return []
        self.detections.append({"device": device, "kind": "open_circuit",
                                "detection_time": t})
        return [("open_switch_detected", device)]

    def _due_scheduled_events(self, t: float
                              ) -> list[tuple[str, str | None]]:
        events = list(self.pending_events)
        self.pending_events.clear()
        for td, dev in [p for p in self.sc_schedule if p[0] <= t]:
            self.sc_schedule.remove((td, dev))
            self.detections.append({"device": dev, "kind": "short_circuit",
                                    "detection_time": t})
            events.append(("short_circuit_detected", dev))
        for td, dev in [p for p in self.dcdc_schedule if p[0] <= t]:
            self.dcdc_schedule.remove((td, dev))
            events.append(("dcdc_fault", dev))
        return events

    def _apply_action(self, action: tuple[str, str | None], t: float
                      ) -> None:
        kind, payload = action
        if kind == "gate_block":
            if self.sw.health[payload] == "healthy":
                self.sw.health[payload] = "gate_blocked"
        elif kind == "gate_on":
            leg = DEVICE_LEG[payload]
            self.shoot[leg] = t
            self.blocked.discard(leg)
        elif kind == "close_rn":
            self.sw.rn_closed = True
        elif kind == "set_vector_table":
            leg = payload.rsplit("_", 1)[1]
            old_levels = self.table[self.pending_index].levels
            self.table_mode = payload
            self.sw.isolated.add(leg)
            self.blocked.discard(leg)
            self.table = voltage_vector_table(payload, self.dc)
            self.pending_index = self._remap_index(old_levels, leg)
            self.applied_index = self.pending_index
        elif kind in ("open_isolation_relay", "enable_redundant"):
            self.dcdc_events.append({"action": kind, "device": payload,
                                     "time": t})
        elif kind == "stop_gating":
            self.gating_stopped = True
        else:
            raise SimulationAborted(f"unknown FSM action {kind!r}",
                                    step=-1, time=t)

    def _remap_index(self, levels: tuple, isolated_leg: str) -> int:
        """Postfault table index carrying over the surviving legs' levels."""
        bits = [levels[k] for k, leg in enumerate(LEGS)
                if leg != isolated_leg]
        return ((bits[0] or 0) << 1) | (bits[1] or 0)

    def _actuate(self, entry) -> None:
        for leg, level in zip(LEGS, entry.levels):
            if level is not None:
                self.sw.set_level(leg, level)
        self.applied_index = entry.index

    # -- conduction and integration ----------------------------------------

    def _resolve_legs(self, ia3: tuple[float, float, float]
                      ) -> dict[str, tuple[str, float] | str | None]:
        """Per-leg (rail tag, pole voltage) or None when no current path.

        Rail tags: 'top', 'bot', 'mid' (shoot-through divider).
        """
        v1, v2 = self.dc.v_dc1, self.dc.v_dc2
        status: dict[str, tuple[str, float] | str | None] = {}
        levels = dict(zip(LEGS, self.sw.levels()))
        currents = dict(zip(LEGS, ia3))
        for x in LEGS:
            if x in self.sw.isolated or self.gating_stopped:
                status[x] = None
            elif x in self.shoot:
                status[x] = ("mid", 0.5 * (v1 - v2))
            elif self.sw.health[UPPER[x]] == "short_fault":
                status[x] = ("top", v1)
            elif self.sw.health[LOWER[x]] == "short_fault":
                status[x] = ("bot", -v2)
            else:
                lvl = levels[x]
                dev = UPPER[x] if lvl else LOWER[x]
                if self.sw.health[dev] == "healthy":
                    self.blocked.discard(x)
                    status[x] = ("top", v1) if lvl else ("bot", -v2)
                elif x in self.blocked:
                    status[x] = "trial"
                else:
                    # commanded device cannot conduct: freewheel through
                    # the diode matching the present current direction
                    i_x = currents[x]
                    if i_x < -_EPS_CURRENT:
                        status[x] = ("top", v1)
                    elif i_x > _EPS_CURRENT:
                        status[x] = ("bot", -v2)
                    else:
                        self.blocked.add(x)
                        status[x] = "trial"
        for x in LEGS:
            if status[x] == "trial":
                status[x] = self._diode_breakover(x, status)
        return status

    def _diode_breakover(self, x: str, status: dict
                         ) -> tuple[str, float] | None:
        """A blocked leg conducts only if a rail diode is forward-driven."""
        others = [s for leg, s in status.items()
                  if leg != x and isinstance(s, tuple)]
        if len(others) != 2:
            return None
        v1, v2 = self.dc.v_dc1, self.dc.v_dc2
        for tag, pole in (("top", v1), ("bot", -v2)):
            trial = dict(status)
            trial[x] = (tag, pole)
            va, vb = self._stator_voltage_three_wire(trial)
            dia, dib, _, _, _ = _rhs(self.y[0], self.y[1], self.y[2],
                                     self.y[3], self.y[4], va, vb, 0.0,
                                     self.params, self.d)
            ux, uy = _UNIT[x]
            rate = ux * dia + uy * dib
            if tag == "top" and rate < -_EPS_RATE:
                self.blocked.discard(x)
                return (tag, pole)
            if tag == "bot" and rate > _EPS_RATE:
                self.blocked.discard(x)
                return (tag, pole)
        return None

    def _stator_voltage_three_wire(self, status: dict
                                   ) -> tuple[float, float]:
        pa, pb, pc = (status[x][1] for x in LEGS)
        if not self.sw.rn_closed:
            mean = (pa + pb + pc) / 3.0
            pa, pb, pc = pa - mean, pb - mean, pc - mean
        return ((2.0 / 3.0) * (pa - 0.5 * pb - 0.5 * pc),
                (pb - pc) / _SQRT3)

    def _integrate(self, status: dict, t: float) -> None:
        live = [x for x in LEGS if isinstance(status[x], tuple)]
        tl = self.s.t_load(t)
        if len(live) == 3:
            va, vb = self._stator_voltage_three_wire(status)
            self._note_stator_voltage(va, vb)
            self.y = _rk4_step(self.y, va, vb, tl, self.dt, self.params,
                               self.d)
            self._post_step_blocking(status)
        elif len(live) == 2:
            dead = next(x for x in LEGS if x not in live)
            if dead in self.sw.isolated and self.sw.rn_closed:
                # postfault: isolated phase voltage is zero, live phases
                # see their pole voltages against the link midpoint
                poles = {x: (status[x][1] if x in live else 0.0)
                         for x in LEGS}
                va = (2.0 / 3.0) * (poles["a"] - 0.5 * poles["b"]
                                    - 0.5 * poles["c"])
                vb = (poles["b"] - poles["c"]) / _SQRT3
                self._note_stator_voltage(va, vb)
                self.y = _rk4_step(self.y, va, vb, tl, self.dt, self.params,
                                   self.d)
            else:
                self._two_wire_step(dead, live, status, tl)
        else:
            self._note_stator_voltage(0.0, 0.0)
            self._coast_step(tl)
        if not all(math.isfinite(v) for v in self.y):
            raise IntegrationDiverged("machine state is not finite")

    def _note_stator_voltage(self, va: float, vb: float) -> None:
        self.vs_sum = (self.vs_sum[0] + va, self.vs_sum[1] + vb)
        self.vs_steps += 1

    def _post_step_blocking(self, status: dict) -> None:
        """Freewheeling legs block when their current crosses zero."""
        isa, isb = self.y[0], self.y[1]
        newly_blocked = False
        for x in LEGS:
            st = status[x]
            if not isinstance(st, tuple) or st[0] == "mid":
                continue
            if (self.sw.health[UPPER[x]] == "short_fault"
                    or self.sw.health[LOWER[x]] == "short_fault"):
                continue
            lvl = getattr(self.sw, f"leg_{x}")
            if self.sw.health[UPPER[x] if lvl else LOWER[x]] == "healthy":
                continue
            ux, uy = _UNIT[x]
            i_x = ux * isa + uy * isb
            freewheel_positive = st[0] == "bot"
            if (freewheel_positive and i_x <= _EPS_CURRENT) or \
                    (not freewheel_positive and i_x >= -_EPS_CURRENT):
                self.blocked.add(x)
                newly_blocked = True
        if newly_blocked:
            self._project_currents()

    def _project_currents(self) -> None:
        """Constrain the stator current to the space the dead legs allow."""
        dead = self._dead_legs()
        if not dead:
            return
        isa, isb = self.y[0], self.y[1]
        if len(dead) == 1:
            leg = next(iter(dead))
            if leg in self.sw.isolated and self.sw.rn_closed:
                return                       # postfault keeps both axes
            wx, wy = _PERP[leg]
            iw = wx * isa + wy * isb
            self.y = (iw * wx, iw * wy, self.y[2], self.y[3], self.y[4])
        else:
            self.y = (0.0, 0.0, self.y[2], self.y[3], self.y[4])

    def _two_wire_step(self, dead: str, live: list, status: dict, tl: float
                       ) -> None:
        wx, wy = _PERP[dead]
        y0, z0 = live
        uy, uz = _UNIT[y0], _UNIT[z0]
        dot = (uy[0] - uz[0]) * wx + (uy[1] - uz[1]) * wy
        u_w = (1.0 / 3.0) * (status[y0][1] - status[z0][1]) * dot
        self._note_stator_voltage(u_w * wx, u_w * wy)
        iw = wx * self.y[0] + wy * self.y[1]
        state = (iw, self.y[2], self.y[3], self.y[4])
        dt = self.dt
        k1 = self._two_wire_rhs(state, u_w, tl, wx, wy)
        s2 = tuple(state[i] + 0.5 * dt * k1[i] for i in range(4))
        k2 = self._two_wire_rhs(s2, u_w, tl, wx, wy)
        s3 = tuple(state[i] + 0.5 * dt * k2[i] for i in range(4))
        k3 = self._two_wire_rhs(s3, u_w, tl, wx, wy)
        s4 = tuple(state[i] + dt * k3[i] for i in range(4))
        k4 = self._two_wire_rhs(s4, u_w, tl, wx, wy)
        h6 = dt / 6.0
        iw, pa, pb, wm = (state[i] + h6 * (k1[i] + 2.0 * (k2[i] + k3[i])
                                           + k4[i]) for i in range(4))
        if not (math.isfinite(iw) and math.isfinite(pa)
                and math.isfinite(pb) and math.isfinite(wm)):
            raise IntegrationDiverged("two-wire state is not finite")
        self.y = (iw * wx, iw * wy, pa, pb, wm)

    def _two_wire_rhs(self, state: tuple, u_w: float, tl: float,
                      wx: float, wy: float) -> tuple:
        iw, pa, pb, wm = state
        d, params = self.d, self.params
        w = params.p * wm
        inv_tr = 1.0 / d.tau_r
        ga = pa * inv_tr + w * pb
        gb = pb * inv_tr - w * pa
        gw = wx * ga + wy * gb
        diw = (-iw + (d.kr * gw + u_w) / d.R_sigma) / d.tau_sigma
        isa, isb = iw * wx, iw * wy
        lm_tr = params.Lm * inv_tr
        dpa = -pa * inv_tr - w * pb + lm_tr * isa
        dpb = -pb * inv_tr + w * pa + lm_tr * isb
        sls = d.sigma * params.Ls
        psa = d.kr * pa + sls * isa
        psb = d.kr * pb + sls * isb
        te = 1.5 * params.p * (psa * isb - psb * isa)
        return (diw, dpa, dpb, (te - tl) / params.J)

    def _coast_step(self, tl: float) -> None:
        _, _, pa, pb, wm = self.y
        w = self.params.p * wm
        decay = math.exp(-self.dt / self.d.tau_r)
        th = w * self.dt
        c, sn = math.cos(th), math.sin(th)
        pa, pb = decay * (pa * c - pb * sn), decay * (pa * sn + pb * c)
        wm = wm - tl * self.dt / self.params.J
        self.y = (0.0, 0.0, pa, pb, wm)

    # -- per-step converter bookkeeping ---------------------------------

    def _rail_currents(self, status: dict, ia3: tuple) -> tuple[float, float]:
        """Machine current drawn from the top rail and the matching
        bottom-rail sum. A mid-clamped leg draws from the link midpoint;
        its return already flows through the other legs, so it enters
        neither rail sum."""
        i_up = 0.0
        i_low = 0.0
        for x, i_x in zip(LEGS, ia3):
            st = status[x]
            if not isinstance(st, tuple):
                continue
            if st[0] == "top":
                i_up += i_x
            elif st[0] == "bot":
                i_low += i_x
        return i_up, i_low

    def _fuse_update(self, t: float) -> float:
        """Advance shoot-through fuse elements.

        Returns the total analytic fault current, which flows from the top
        rail straight to the bottom rail and discharges both link halves.
        """
        inj = 0.0
        for leg in sorted(self.shoot):
            i_f = fault_current(t - self.shoot[leg], self.fuse_wave)
            inj += i_f
            f = fuse_step(self.fuses[leg], i_f, self.dt)
            self.fuses[leg] = f
            if f.state == "blown":
                start = self.shoot.pop(leg)
                self.sw.isolated.add(leg)
                self.blocked.discard(leg)
                self._project_currents()
                self.pending_events.append(("fuse_blown", leg))
                self.fuse_events.append({
                    "leg": leg, "shoot_through_start": start,
                    "blow_time": t + self.dt,
                    "clearing_time": t + self.dt - start,
                    "accumulated_i2t": f.accumulated_i2t})
        return inj

    # -- main loop -------------------------------------------------------

    def run(self) -> tuple[Trace, dict]:
        s = self.s
        n_steps = round(s.sim.duration / self.dt)
        dec = s.sim.decimation
        t = 0.0
        k = 0
        try:
            for k in range(n_steps):
                t = k * self.dt
                self._inject_due_faults(t)
                if k % self.spc == 0:
                    self._control(t)
                ia3 = self._phase_currents(self.y[0], self.y[1])
                if k % dec == 0:
                    self._record(t, ia3)
                status = self._resolve_legs(ia3)
                i_up, i_low = self._rail_currents(status, ia3)
                inj = self._fuse_update(t)
                i_src = dcdc_balancer_step(self.dc, s.dc_link.balancer,
                                           self.dt)
                self.dc = dc_link_step(
                    self.dc, i_up + inj, -i_low + inj,
                    self._i_mid(*ia3), i_src, self.dt)
                self._integrate(status, t)
        except IntegrationDiverged as e:
            raise SimulationAborted(str(e), step=k, time=t,
                                    trace=self.trace) from e
        return self.trace, self._summary(n_steps)

    def _record(self, t: float, ia3: tuple) -> None:
        isa, isb, pra, prb, wm = self.y
        psa, psb = stator_flux_from((isa, isb), (pra, prb), self.d,
                                    self.params)
        self.trace.append({
            "t": t, "ia": ia3[0], "ib": ia3[1], "ic": ia3[2],
            "i_mid": self._i_mid(*ia3),
            "v_dc1": self.dc.v_dc1, "v_dc2": self.dc.v_dc2,
            "psis_alpha": psa, "psis_beta": psb,
            "psis_est_alpha": self.est.psis_hat[0],
            "psis_est_beta": self.est.psis_hat[1],
            "te": torque((psa, psb), (isa, isb), self.params.p),
            "te_ref": self.te_ref,
            "omega_m": wm, "omega_ref": self.s.omega_ref(t),
            "vector_index": (self.applied_index
                             if not self.gating_stopped else -1),
            "mode": self.mode_label,
            "health": self._health_summary(),
        })

    def _health_summary(self) -> str:
        parts = []
        short = {"open_fault": "open", "short_fault": "short",
                 "gate_blocked": "blk"}
        for dev in ("S1", "S2", "S3", "S4", "S5", "S6"):
            h = self.sw.health[dev]
            if h != "healthy":
                parts.append(f"{dev}={short[h]}")
        if self.sw.isolated:
            parts.append("iso=" + "".join(sorted(self.sw.isolated)))
        if self.sw.rn_closed:
            parts.append("rn=1")
        return "|".join(parts) if parts else "ok"

    def _summary(self, n_steps: int) -> dict:
        s = self.s
        out = {
            "schema": 1,
            "name": s.name,
            "duration": s.sim.duration,
            "sim_steps": n_steps,
            "control_steps": self.ctrl_count,
            "mode_transitions": [list(tr) for tr in
                                 self.supervisor.transitions],
            "detections": self.detections,
            "fuse_events": self.fuse_events,
            "dcdc_events": self.dcdc_events,
            "warnings": list(self.warnings),
            "final": {"omega_m": self.y[4], "v_dc1": self.dc.v_dc1,
                      "v_dc2": self.dc.v_dc2},
        }
        if self.detections and s.faults:
            first = self.detections[0]
            fault = min(s.faults, key=lambda f: f.time)
            lat = first["detection_time"] - fault.time
            rec = {"device": first["device"], "fault_time": fault.time,
                   "detection_time": first["detection_time"],
                   "latency_s": lat}
            if s.detector.fundamental_hz:
                rec["latency_periods"] = lat * s.detector.fundamental_hz
            out["first_detection"] = rec
        ref_final = s.omega_ref(s.sim.duration)
        if ref_final != 0.0 and len(self.trace) > 0:
            tol = 0.05 * abs(ref_final)
            ts = self.trace["t"]
            om = self.trace["omega_m"]
            settled = None
            for k in range(len(ts) - 1, -1, -1):
                if abs(om[k] - ref_final) > tol:
                    settled = ts[k + 1] if k + 1 < len(ts) else None
                    break
            else:
                settled = ts[0]
            out["settling"] = {"omega_ref_final": ref_final,
                               "within_5pct_from": settled}
        out["analysis"] = self._analysis_block()
        return out

    def _analysis_block(self) -> dict | None:
        w = self.s.analysis
        if w.prefault is None and w.postfault is None:
            return None
        block: dict = {}
        try:
            if w.prefault is not None:
                block["prefault"] = analysis.window_sequence_summary(
                    self.trace, *w.prefault).to_dict()
                block["prefault_circularity"] = \
                    analysis.flux_locus_circularity(self.trace, w.prefault)
            if w.postfault is not None:
                block["postfault"] = analysis.window_sequence_summary(
                    self.trace, *w.postfault).to_dict()
                block["postfault_circularity"] = \
                    analysis.flux_locus_circularity(self.trace, w.postfault)
            if w.prefault is not None and w.postfault is not None:
                rep = analysis.negative_sequence_report(
                    self.trace, w.prefault, w.postfault)
                block["remaining_phase_ratio"] = rep.remaining_phase_ratio
                block["isolated_leg"] = rep.isolated_leg
        except (analysis.InsufficientData, ValueError) as e:
            block["error"] = str(e)
        return block


def run_scenario(s: Scenario) -> tuple[Trace, dict]:
    """Run one scenario to completion; returns (trace, summary).

    Deterministic: the same scenario produces a bit-identical trace.
    Raises SimulationAborted (with the partial trace attached) when the
    machine integration diverges.
    """
    return _Engine(s).run()
