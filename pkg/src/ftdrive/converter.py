"""Switched model of the two-stage converter.

Split DC link with midpoint, six-switch inverter with per-device health,
neutral relay R_N, per-leg series fast fuses, and an averaged first-stage
voltage balancer. Voltage vectors use the amplitude-invariant Clarke
transform (2/3 scaling), which is the convention under which the four
two-leg (postfault) vectors take their documented closed forms.

Device naming: S1/S2/S3 are the upper devices of legs a/b/c, S4/S5/S6 the
lower devices. Logic level 1 means the upper device of the leg conducts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

Vec2 = tuple[float, float]

LEGS = ("a", "b", "c")
UPPER = {"a": "S1", "b": "S2", "c": "S3"}
LOWER = {"a": "S4", "b": "S5", "c": "S6"}
DEVICE_LEG = {"S1": "a", "S2": "b", "S3": "c", "S4": "a", "S5": "b", "S6": "c"}
COMPLEMENT = {"S1": "S4", "S4": "S1", "S2": "S5", "S5": "S2",
              "S3": "S6", "S6": "S3"}

HEALTH_STATES = ("healthy", "open_fault", "short_fault", "gate_blocked")

SQRT3 = math.sqrt(3.0)


class InvalidConfiguration(RuntimeError):
    """Raised for electrically undefined converter configurations."""


@dataclass
class SwitchingState:
    leg_a: int = 0
    leg_b: int = 0
    leg_c: int = 0
    health: dict = field(default_factory=lambda: {d: "healthy" for d in DEVICE_LEG})
    isolated: set = field(default_factory=set)   # legs cut by fuse/relay
    rn_closed: bool = False

    def levels(self) -> tuple[int, int, int]:
        return (self.leg_a, self.leg_b, self.leg_c)

    def set_level(self, leg: str, level: int) -> None:
        setattr(self, f"leg_{leg}", level)


@dataclass
class DcLinkState:
    v_dc1: float
    v_dc2: float
    c1: float
    c2: float
    i_mid: float = 0.0
    clamped: bool = False   # set when the last step clamped a negative voltage

    def __post_init__(self):
        if self.c1 <= 0.0 or self.c2 <= 0.0:
            raise ValueError("capacitances must be > 0")
        if self.v_dc1 < 0.0 or self.v_dc2 < 0.0:
            raise ValueError("capacitor voltages must be >= 0")


@dataclass
class FuseElement:
    rated_i2t: float               # melt energy [A^2 s]
    accumulated_i2t: float = 0.0
    state: str = "intact"          # intact | blown

    def __post_init__(self):
        if self.rated_i2t <= 0.0:
            raise ValueError("rated_i2t must be > 0")


@dataclass(frozen=True)
class DcdcBalancerConfig:
    v_ref_total: float             # target total bus voltage [V]
    bandwidth: float               # closed-loop corner [rad/s]
    max_source_current: float      # slew bound [A]
    duty: float = 0.5              # config metadata
    switching_hz: float = 100e3    # config metadata

    def __post_init__(self):
        if self.bandwidth <= 0.0:
            raise ValueError("bandwidth must be > 0")
        if self.v_ref_total <= 0.0:
            raise ValueError("v_ref_total must be > 0")


def pole_voltages(sw: SwitchingState, dc: DcLinkState
                  ) -> tuple[float | None, float | None, float | None]:
    """Per-leg output voltage w.r.t. the DC-bus midpoint.

    Logic 1 -> +v_dc1, logic 0 -> -v_dc2; an isolated leg returns None
    (floating marker).
    """
    out = []
    for leg, level in zip(LEGS, sw.levels()):
        if leg in sw.isolated:
            out.append(None)
        else:
            out.append(dc.v_dc1 if level else -dc.v_dc2)
    return tuple(out)


def machine_phase_voltages(poles: tuple[float | None, float | None, float | None],
                           rn_closed: bool,
                           isolated: set | frozenset = frozenset()
                           ) -> tuple[float, float, float]:
    """Machine terminal voltages w.r.t. the machine neutral.

    With R_N closed the neutral sits at the midpoint: each phase sees its
    pole voltage and an isolated phase is clamped to 0. With R_N open the
    neutral floats: phase voltages are the pole voltages minus their common
    mode, and an isolated leg has no defined current path.
    """
    if rn_closed:
        return tuple(0.0 if (poles[k] is None or LEGS[k] in isolated)
                     else poles[k] for k in range(3))
    if isolated or any(p is None for p in poles):
        raise InvalidConfiguration(
            "isolated leg with R_N open: no current path defined")
    mean = (poles[0] + poles[1] + poles[2]) / 3.0
    return (poles[0] - mean, poles[1] - mean, poles[2] - mean)


def clarke(v_a: float, v_b: float, v_c: float) -> Vec2:
    """Amplitude-invariant abc -> alpha-beta transform."""
    return ((2.0 / 3.0) * (v_a - 0.5 * v_b - 0.5 * v_c),
            (v_b - v_c) / SQRT3)


def inverse_clarke(v_alpha: float, v_beta: float) -> tuple[float, float, float]:
    """alpha-beta -> abc, zero-mean triple."""
    half_b = SQRT3 * 0.5 * v_beta
    return (v_alpha, -0.5 * v_alpha + half_b, -0.5 * v_alpha - half_b)


@dataclass(frozen=True)
class VectorEntry:
    index: int
    levels: tuple            # per-leg logic level, None on an isolated leg
    v: Vec2                  # stator voltage vector [V]


def voltage_vector_table(mode: str, dc: DcLinkState) -> list[VectorEntry]:
    """Candidate switching states and their voltage vectors.

    mode 'normal' enumerates the 8 three-leg states (binary order on
    (Sa, Sb, Sc)); 'postfault_leg_x' enumerates the 4 states of the two
    remaining legs (binary order) with the isolated phase clamped to 0.
    """
    entries: list[VectorEntry] = []
    if mode == "normal":
        for idx in range(8):
            sa, sb, sc = (idx >> 2) & 1, (idx >> 1) & 1, idx & 1
            va = dc.v_dc1 if sa else -dc.v_dc2
            vb = dc.v_dc1 if sb else -dc.v_dc2
            vc = dc.v_dc1 if sc else -dc.v_dc2
            entries.append(VectorEntry(idx, (sa, sb, sc), clarke(va, vb, vc)))
        return entries
    if mode.startswith("postfault_leg_"):
        leg = mode[-1]
        if leg not in LEGS:
            raise ValueError(f"unknown vector table mode: {mode!r}")
        others = [x for x in LEGS if x != leg]
        for idx in range(4):
            lv = {leg: None,
                  others[0]: (idx >> 1) & 1,
                  others[1]: idx & 1}
            phase = {x: 0.0 if lv[x] is None
                     else (dc.v_dc1 if lv[x] else -dc.v_dc2) for x in LEGS}
            entries.append(VectorEntry(
                idx, (lv["a"], lv["b"], lv["c"]),
                clarke(phase["a"], phase["b"], phase["c"])))
        return entries
    raise ValueError(f"unknown vector table mode: {mode!r}")


def dc_link_step(dc: DcLinkState, i_upper_rail: float, i_lower_rail: float,
                 i_mid: float, i_source: tuple[float, float], dt: float
                 ) -> DcLinkState:
    """Charge balance on the split link over one step.

    v_dc1 += (i_source1 - i_upper_rail)*dt/c1, and symmetrically for v_dc2.
    i_upper_rail is the current drawn from the top rail by the legs;
    i_lower_rail is defined with the same sign convention for the bottom
    rail (current drawn from it discharges C2). A negative voltage clamps
    to 0 and flags `clamped` on the returned state.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    v1 = dc.v_dc1 + (i_source[0] - i_upper_rail) * dt / dc.c1
    v2 = dc.v_dc2 + (i_source[1] - i_lower_rail) * dt / dc.c2
    clamped = False
    if v1 < 0.0:
        v1, clamped = 0.0, True
    if v2 < 0.0:
        v2, clamped = 0.0, True
    return DcLinkState(v_dc1=v1, v_dc2=v2, c1=dc.c1, c2=dc.c2,
                       i_mid=i_mid, clamped=clamped)


def dcdc_balancer_step(dc: DcLinkState, cfg: DcdcBalancerConfig, dt: float
                       ) -> tuple[float, float]:
    """Averaged first-stage regulator: source currents into each half-bus.

    Proportional law i = C*bw*(v_ref/2 - v), bounded by the slew limit, so
    each half relaxes toward v_ref_total/2 with the configured bandwidth.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    half = 0.5 * cfg.v_ref_total
    lim = cfg.max_source_current
    i1 = dc.c1 * cfg.bandwidth * (half - dc.v_dc1)
    i2 = dc.c2 * cfg.bandwidth * (half - dc.v_dc2)
    i1 = -lim if i1 < -lim else (lim if i1 > lim else i1)
    i2 = -lim if i2 < -lim else (lim if i2 > lim else i2)
    return (i1, i2)


def fuse_step(f: FuseElement, i: float, dt: float) -> FuseElement:
    """Accumulate i^2*dt; transition to blown at the rated melt energy.

    A blown fuse carries no current and never accumulates further
    (absorbing state).
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if f.state == "blown":
        return f
    acc = f.accumulated_i2t + i * i * dt
    state = "blown" if acc >= f.rated_i2t else "intact"
    return replace(f, accumulated_i2t=acc, state=state)
