"""Fault injection, detection and reconfiguration management.

Open-circuit detection works on the normalized DC content of the phase
currents: chi = mean / fundamental-amplitude over a sliding one-period
window. |chi| above threshold names the leg; the sign of the window mean
names the device (non-positive mean -> upper device starved of positive
current -> upper open). Short-circuit detection is an analog gate-voltage
comparison abstracted to a fixed latency. The reconfiguration state machine
executes isolation (deliberate shoot-through blowing the leg fuse for a
short, relay/redundant swap for the first stage) and enables the two-leg
postfault control mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .converter import COMPLEMENT, DEVICE_LEG, LOWER, UPPER

INVERTER_DEVICES = tuple(sorted(DEVICE_LEG))          # S1..S6
DCDC_DEVICES = ("Q1", "Q2")
FAULT_KINDS = ("open_circuit", "short_circuit")


class InvalidTransition(RuntimeError):
    """Raised for reconfiguration actions on already-isolated hardware."""


@dataclass(frozen=True)
class FaultEvent:
    time: float
    target: str          # S1..S6, Q1, Q2
    kind: str            # open_circuit | short_circuit

    def __post_init__(self):
        if self.time < 0.0:
            raise ValueError("fault time must be >= 0")
        if self.target not in INVERTER_DEVICES + DCDC_DEVICES:
            raise ValueError(f"unknown fault target: {self.target!r}")
        if self.kind not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind: {self.kind!r}")


def sc_detection_event(fault: FaultEvent, latency: float) -> float:
    """Detection time of a short-circuit fault (fixed-latency abstraction)."""
    if latency < 0.0:
        raise ValueError("latency must be >= 0")
    return fault.time + latency


class DetectorWindow:
    """Per-phase circular buffers of n current samples over one period."""

    def __init__(self, n: int):
        if n < 16:
            raise ValueError("window must hold at least 16 samples")
        self.n = n
        self._buf = [[0.0] * n, [0.0] * n, [0.0] * n]
        self._idx = 0
        self._count = 0
        self._cos = [math.cos(2.0 * math.pi * m / n) for m in range(n)]
        self._sin = [math.sin(2.0 * math.pi * m / n) for m in range(n)]

    @property
    def full(self) -> bool:
        return self._count >= self.n

    def push(self, ia: float, ib: float, ic: float) -> None:
        k = self._idx
        self._buf[0][k] = ia
        self._buf[1][k] = ib
        self._buf[2][k] = ic
        self._idx = (k + 1) % self.n
        self._count += 1

    def flush(self) -> None:
        self._count = 0
        self._idx = 0

    def phase_samples(self, phase: int) -> list[float]:
        return list(self._buf[phase])

    def recent(self, phase: int, count: int) -> list[float]:
        """The newest count samples of one phase, oldest first."""
        if not 0 < count <= self.n:
            raise ValueError("count must be in 1..n")
        k = self._idx
        return [self._buf[phase][(k - count + j) % self.n]
                for j in range(count)]


def normalized_dc_current(window: DetectorWindow, epsilon_amp: float
                          ) -> list[tuple[float, float, float] | None]:
    """Per-phase (chi, mean, fundamental amplitude), or None if indeterminate.

    chi = mean / sqrt(A1^2 + B1^2) with true-amplitude (2/n) single-bin
    Fourier coefficients, so a pure sinusoid of amplitude A has fundamental
    amplitude A and chi = 0, and a positive-half-wave-rectified sinusoid has
    chi = 2/pi. A phase whose fundamental amplitude is below epsilon_amp is
    indeterminate (zero current or a DC-only window) and classification on
    it is suppressed.
    """
    if not window.full:
        raise ValueError("detector window is not full")
    n = window.n
    cos_t, sin_t = window._cos, window._sin
    out: list[tuple[float, float, float] | None] = []
    for ph in range(3):
        buf = window._buf[ph]
        s = a1 = b1 = 0.0
        for m in range(n):
            v = buf[m]
            s += v
            a1 += v * cos_t[m]
            b1 += v * sin_t[m]
        amp = 2.0 / n * math.hypot(a1, b1)
        mean = s / n
        if amp < epsilon_amp:
            out.append(None)
        else:
            out.append((mean / amp, mean, amp))
    return out


def crossing_devices(results: list[tuple[float, float, float] | None],
                     threshold: float) -> list[str]:
    """Device implied by each phase with |chi| above threshold.

    Non-positive window mean points at the upper device of the phase
    (starved of positive current), positive mean at the lower.
    """
    out = []
    for k, r in enumerate(results):
        if r is None or abs(r[0]) <= threshold:
            continue
        leg = "abc"[k]
        out.append(UPPER[leg] if r[1] <= 0.0 else LOWER[leg])
    return out


def classify_open_switch(results: list[tuple[float, float, float] | None],
                         threshold: float
                         ) -> tuple[str | None, bool]:
    """Name the open device from per-phase (chi, mean, amp) results.

    Returns (device or None, multi_fault flag). Exactly one phase with
    |chi| > threshold names a device: non-positive mean -> upper device,
    positive mean -> lower device. Several phases above threshold set the
    multi-fault flag and name nothing (the single-fault table does not
    apply).
    """
    implied = crossing_devices(results, threshold)
    if not implied:
        return None, False
    if len(implied) > 1:
        return None, True
    return implied[0], False


def conduction_contradicts(window: DetectorWindow, device: str,
                           epsilon: float, count: int | None = None,
                           run_samples: int = 3) -> bool:
    """True when recent samples show the named device still conducting.

    A broken upper switch cannot source positive phase current and a
    broken lower switch cannot sink negative, so by the time chi crosses
    the threshold the forbidden polarity must be gone from the newest
    samples. A crossing whose phase still carried that polarity for a
    sustained stretch is a transient of the window turning over (a
    healthy phase reacting to the fault elsewhere), not a fault
    signature.

    Sustained means run_samples consecutive samples beyond epsilon:
    genuine faults still show one- or two-sample blips of the forbidden
    polarity when a floating pole overshoots a rail and the opposite
    freewheel diode conducts, while a working device carries its
    half-cycles for a large fraction of the period. The default tail of
    5/8 window must exceed the half period a healthy phase naturally
    dwells on one polarity, or the check is vacuous for crossings soon
    after the window fills with one-sided samples.
    """
    leg = DEVICE_LEG[device]
    phase = "abc".index(leg)
    tail = window.recent(phase,
                         count if count is not None else 5 * window.n // 8)
    upper = UPPER[leg] == device
    run = 0
    for v in tail:
        if (v > epsilon) if upper else (v < -epsilon):
            run += 1
            if run >= run_samples:
                return True
        else:
            run = 0
    return False


def dcdc_slope_check(iL_slope: float, gate_command: bool, deadband: float
                     ) -> str:
    """Consistency of first-stage inductor current slope vs gate command.

    The slope must have persisted for a full switching period (the caller's
    monitor guarantees that). Commanded on with a falling slope beyond the
    deadband is an open suspect; commanded off with a rising slope beyond
    the deadband is a short suspect; anything else is consistent.
    """
    if gate_command and iL_slope <= -deadband:
        return "open_suspect"
    if not gate_command and iL_slope >= deadband:
        return "short_suspect"
    return "consistent"


class DcdcSlopeMonitor:
    """Tracks slope/command consistency persistence over switching periods."""

    def __init__(self, deadband: float, period: float):
        if period <= 0.0:
            raise ValueError("period must be > 0")
        self.deadband = deadband
        self.period = period
        self._suspect: str = "consistent"
        self._since: float | None = None

    def feed(self, iL_slope: float, gate_command: bool, t: float) -> str:
        """Returns a verdict once an inconsistency persists one full period."""
        verdict = dcdc_slope_check(iL_slope, gate_command, self.deadband)
        if verdict == "consistent":
            self._suspect = "consistent"
            self._since = None
            return "consistent"
        if verdict != self._suspect:
            self._suspect = verdict
            self._since = t
            return "consistent"
        if t - self._since >= self.period:
            return verdict
        return "consistent"


@dataclass
class DriveMode:
    kind: str = "normal"     # normal|fault_detected|isolating|postfault|shutdown
    device: str | None = None
    leg: str | None = None
    entered_at: float = 0.0

    def label(self) -> str:
        if self.kind in ("normal", "shutdown"):
            return self.kind
        if self.kind == "fault_detected":
            return f"fault_detected:{self.device}"
        return f"{self.kind}:{self.leg}"


# FSM input events are (kind, payload) tuples:
#   ("open_switch_detected", device)
#   ("short_circuit_detected", device)
#   ("fuse_blown", leg)
#   ("dcdc_fault", device)
# Emitted actions are (kind, payload) tuples:
#   ("gate_block", device), ("gate_on", device), ("close_rn", None),
#   ("set_vector_table", mode string), ("open_isolation_relay", device),
#   ("enable_redundant", device), ("stop_gating", None)


@dataclass
class FaultSupervisor:
    mode: DriveMode = field(default_factory=DriveMode)
    rn_closed: bool = False
    isolated_legs: set = field(default_factory=set)
    handled_devices: set = field(default_factory=set)
    replaced_dcdc: set = field(default_factory=set)
    known_faults: dict = field(default_factory=dict)
    transitions: list = field(default_factory=list)   # (t, from, to, trigger)

    def _goto(self, t: float, kind: str, trigger: str,
              device: str | None = None, leg: str | None = None) -> None:
        frm = self.mode.label()
        self.mode = DriveMode(kind=kind, device=device, leg=leg, entered_at=t)
        self.transitions.append((t, frm, self.mode.label(), trigger))

    def step(self, events: list[tuple[str, str | None]], t: float
             ) -> list[tuple[str, str | None]]:
        """Process detection/status events at time t; return actions."""
        actions: list[tuple[str, str | None]] = []
        for kind, payload in events:
            actions.extend(self._dispatch(kind, payload, t))
        return actions

    def _dispatch(self, kind: str, payload: str | None, t: float
                  ) -> list[tuple[str, str | None]]:
        if self.mode.kind == "shutdown":
            return []
        if kind == "dcdc_fault":
            return self._handle_dcdc(payload, t)
        if kind == "fuse_blown":
            return self._handle_fuse_blown(payload, t)
        if kind in ("open_switch_detected", "short_circuit_detected"):
            return self._handle_switch_fault(kind, payload, t)
        raise ValueError(f"unknown FSM event: {kind!r}")

    def _handle_dcdc(self, device: str, t: float
                     ) -> list[tuple[str, str | None]]:
        if device in self.replaced_dcdc:
            raise InvalidTransition(
                f"{device} already replaced by its redundant switch")
        self.replaced_dcdc.add(device)
        # first-stage redundancy: drive mode is unaffected
        return [("open_isolation_relay", device),
                ("enable_redundant", device)]

    def _handle_fuse_blown(self, leg: str, t: float
                           ) -> list[tuple[str, str | None]]:
        if leg in self.isolated_legs:
            raise InvalidTransition(f"leg {leg} fuse already blown")
        self.isolated_legs.add(leg)
        if self.mode.kind == "isolating" and self.mode.leg == leg:
            device = self.mode.device
            self._goto(t, "postfault", f"fuse_blown:{leg}",
                       device=device, leg=leg)
            return self._postfault_actions(device, leg)
        return []

    def _handle_switch_fault(self, kind: str, device: str, t: float
                             ) -> list[tuple[str, str | None]]:
        if device in self.handled_devices:
            return []
        leg = DEVICE_LEG[device]
        if leg in self.isolated_legs:
            raise InvalidTransition(
                f"detection for {device} on isolated leg {leg}")
        if self.mode.kind == "isolating":
            return []   # reconfiguration already in progress
        if self.mode.kind == "postfault":
            # a second fault on a remaining leg: the two-leg table cannot
            # lose another phase
            self.handled_devices.add(device)
            self._goto(t, "shutdown", f"second_fault:{device}")
            return [("stop_gating", None)]
        # mode is normal
        self.handled_devices.add(device)
        self.known_faults[device] = kind
        self._goto(t, "fault_detected", f"{kind}:{device}",
                   device=device, leg=leg)
        if kind == "open_switch_detected":
            self._goto(t, "postfault", f"reconfigure:{device}",
                       device=device, leg=leg)
            return self._postfault_actions(device, leg)
        # short circuit: blow the leg fuse through a deliberate shoot-through
        comp = COMPLEMENT[device]
        if comp in self.known_faults:
            self._goto(t, "shutdown", f"double_fault:{device}")
            return [("stop_gating", None)]
        self._goto(t, "isolating", f"shoot_through:{leg}",
                   device=device, leg=leg)
        return [("gate_on", comp)]

    def _postfault_actions(self, device: str, leg: str
                           ) -> list[tuple[str, str | None]]:
        actions: list[tuple[str, str | None]] = [
            ("gate_block", COMPLEMENT[device])]
        if not self.rn_closed:
            self.rn_closed = True
            actions.append(("close_rn", None))
        actions.append(("set_vector_table", f"postfault_leg_{leg}"))
        return actions


def fsm_step(supervisor: FaultSupervisor,
             events: list[tuple[str, str | None]], t: float
             ) -> tuple[DriveMode, list[tuple[str, str | None]]]:
    """Advance the reconfiguration state machine; returns (mode, actions)."""
    actions = supervisor.step(events, t)
    return supervisor.mode, actions
