"""Ready-made scenarios for the reference 4 kW drive.

All presets share the same machine, link and controller settings and the
5 us / 20 us step pair; they differ in speed/load profiles and injected
faults. The fault presets ramp to 40 rad/s under a 10 Nm load, arm the
detector once the drive is in steady state and inject the fault around
t = 1.3 s, leaving ten fundamental periods of settled waveform on each
side of the reconfiguration for sequence analysis. 40 rad/s keeps the
postfault drive inside its shrunken voltage region: with the neutral on
the midpoint the four remaining vectors sustain at most about 87 V,
which at 0.6 Wb caps the electrical frequency near 140 rad/s. Each
fault is timed to the angle of its own phase current where the blocked
polarity has just ended (OC_FAULT_TIME below), so the crippled drive
rides through the undetected stretch instead of stalling under load.
"""

from __future__ import annotations

from .converter import DcdcBalancerConfig
from .faults import FaultEvent, INVERTER_DEVICES
from .machine import reference_params
from .mpc import MpcConfig, PiConfig
from .scenario import (AnalysisWindows, DcLinkConfig, DetectorConfig,
                       FuseConfig, Profile, Scenario, SimConfig)

# steady-state electrical fundamental at 40 rad/s under 10 Nm
FAULT_RUN_FUNDAMENTAL_HZ = 14.459

# prefault/postfault windows of the leg-a fault run: ten fundamental
# periods each, ending clear of the fault and the run end
S1_PREFAULT_WINDOW = (0.58, 1.295)
S1_POSTFAULT_WINDOW = (1.60, 2.32)

# unbalance window for the unreconfigured counterfactual: the first two
# fundamental periods after the fault. The two-wire drive cannot hold the
# load (its air-gap field pulsates on a line, near-zero mean torque at low
# speed), so only the stretch still near the operating point is comparable.
NO_STRATEGY_COMPARISON_WINDOW = (1.30, 1.4383)

# Each device opens at the same angle of its own phase current: the leg-a
# upper timing shifted by the sequence lags (b and c trail a by a third
# and two thirds of a period) plus half a period for the lower devices,
# whose blocked polarity is the mirror. An open falling mid-conduction of
# the device instead snaps the phase dead through the freewheel path and
# can stall the drive before the window signature forms.
_T1 = 1.0 / FAULT_RUN_FUNDAMENTAL_HZ
OC_FAULT_TIME = {
    "S1": 1.3,
    "S2": round(1.3 + _T1 / 3, 5),
    "S3": round(1.3 + 2 * _T1 / 3, 5),
    "S4": round(1.3 + _T1 / 2, 5),
    "S5": round(1.3 + 5 * _T1 / 6, 5),
    "S6": round(1.3 + _T1 / 6, 5),
}


def _dc_link(rated_i2t: float = 16.0) -> DcLinkConfig:
    return DcLinkConfig(
        c1=3600e-6, c2=3600e-6, v_ref_total=300.0,
        balancer=DcdcBalancerConfig(v_ref_total=300.0,
                                    bandwidth=628.3185307179587,
                                    max_source_current=60.0),
        fuse=FuseConfig(rated_i2t=rated_i2t))


def _mpc(ts: float = 20e-6, delay_compensation: bool = True) -> MpcConfig:
    # multiplier 3: the heavier printed flux weighting. At rated flux and
    # low speed the plain weighting lets per-period torque differences
    # outvote the flux term near sector boundaries and the locus grows
    # 60-degree-spaced dents; tripling the term keeps it round.
    return MpcConfig(Ts=ts, lam=25.0, flux_ref=0.6,
                     delay_compensation=delay_compensation,
                     flux_term_multiplier=3.0)


def _pi() -> PiConfig:
    return PiConfig(kp=4.8, ki=24.0, t_max=22.5)


def healthy_speed_step() -> Scenario:
    """Ramp to 100 rad/s, no load, no faults; settles well inside 1 s."""
    return Scenario(
        name="healthy-100",
        machine=reference_params(),
        dc_link=_dc_link(),
        mpc=_mpc(),
        pi=_pi(),
        detector=DetectorConfig(enabled=False),
        omega_ref=Profile(((0.05, 0.0), (0.65, 100.0))),
        t_load=Profile.constant(0.0),
        sim=SimConfig(dt=5e-6, ts=20e-6, duration=1.1),
    )


def open_switch(device: str) -> Scenario:
    """Open-circuit one inverter device at 1.3 s in the steady fault run.

    The leg-a upper device run is the long one with analysis windows; the
    other five stop shortly after reconfiguration.
    """
    if device not in INVERTER_DEVICES:
        raise ValueError(f"unknown inverter device: {device!r}")
    long_run = device == "S1"
    return Scenario(
        name=f"oc-{device.lower()}",
        machine=reference_params(),
        dc_link=_dc_link(),
        mpc=_mpc(),
        pi=_pi(),
        detector=DetectorConfig(
            enabled=True, arm_time=0.5,
            fundamental_hz=FAULT_RUN_FUNDAMENTAL_HZ),
        faults=(FaultEvent(time=OC_FAULT_TIME[device], target=device,
                           kind="open_circuit"),),
        omega_ref=Profile(((0.10, 0.0), (0.40, 40.0))),
        t_load=Profile(((0.30, 0.0), (0.40, 10.0))),
        sim=SimConfig(dt=5e-6, ts=20e-6, duration=2.35 if long_run
                      else 1.60),
        analysis=(AnalysisWindows(prefault=S1_PREFAULT_WINDOW,
                                  postfault=S1_POSTFAULT_WINDOW)
                  if long_run else AnalysisWindows()),
    )


def no_strategy_double_open() -> Scenario:
    """Both leg-a devices open at 1.3 s with detection disabled.

    The drive limps on in the constrained two-wire mode with no
    reconfiguration; the counterfactual for the sequence-unbalance
    comparison. It stalls under the load within a few fundamental
    periods, so no postfault analysis window is defined here; compare
    over NO_STRATEGY_COMPARISON_WINDOW right after the fault.
    """
    return Scenario(
        name="no-strategy-leg-a",
        machine=reference_params(),
        dc_link=_dc_link(),
        mpc=_mpc(),
        pi=_pi(),
        detector=DetectorConfig(enabled=False),
        faults=(FaultEvent(time=1.3, target="S1", kind="open_circuit"),
                FaultEvent(time=1.3, target="S4", kind="open_circuit")),
        omega_ref=Profile(((0.10, 0.0), (0.40, 40.0))),
        t_load=Profile(((0.30, 0.0), (0.40, 10.0))),
        sim=SimConfig(dt=5e-6, ts=20e-6, duration=1.55),
        analysis=AnalysisWindows(prefault=S1_PREFAULT_WINDOW),
    )


def short_circuit(device: str = "S1") -> Scenario:
    """Short one inverter device at 0.15 s during the speed ramp.

    Short runs exercise the isolation chain: rail pin, complementary
    gate-on, fuse clearing, reconfiguration. The window classifier never
    arms; short-circuit detection is the fixed-latency hardware path.
    """
    if device not in INVERTER_DEVICES:
        raise ValueError(f"unknown inverter device: {device!r}")
    return Scenario(
        name=f"sc-{device.lower()}",
        machine=reference_params(),
        dc_link=_dc_link(),
        mpc=_mpc(),
        pi=_pi(),
        detector=DetectorConfig(
            enabled=True, arm_time=1e9,
            fundamental_hz=FAULT_RUN_FUNDAMENTAL_HZ),
        faults=(FaultEvent(time=0.15, target=device,
                           kind="short_circuit"),),
        omega_ref=Profile(((0.02, 0.0), (0.12, 40.0))),
        t_load=Profile.constant(0.0),
        sim=SimConfig(dt=5e-6, ts=20e-6, duration=0.30),
    )


def delay_compensation_pair() -> tuple[Scenario, Scenario]:
    """Same drive at a 100 us control period, with and without the
    one-period actuation-delay compensation in the predictor."""
    def build(compensated: bool) -> Scenario:
        return Scenario(
            name="delay-comp-on" if compensated else "delay-comp-off",
            machine=reference_params(),
            dc_link=_dc_link(),
            mpc=_mpc(ts=100e-6, delay_compensation=compensated),
            pi=_pi(),
            detector=DetectorConfig(enabled=False),
            omega_ref=Profile(((0.05, 0.0), (0.35, 100.0))),
            t_load=Profile.constant(0.0),
            sim=SimConfig(dt=5e-6, ts=100e-6, duration=0.7),
        )
    return build(True), build(False)


def dcdc_switch_fault(device: str = "Q1") -> Scenario:
    """Short a first-stage dc-dc device; the drive itself rides through
    while the supervisor swaps in the redundant stage."""
    if device not in ("Q1", "Q2"):
        raise ValueError(f"unknown dc-dc device: {device!r}")
    return Scenario(
        name=f"dcdc-{device.lower()}",
        machine=reference_params(),
        dc_link=_dc_link(),
        mpc=_mpc(),
        pi=_pi(),
        detector=DetectorConfig(
            enabled=True, arm_time=1e9,
            fundamental_hz=FAULT_RUN_FUNDAMENTAL_HZ),
        faults=(FaultEvent(time=0.15, target=device,
                           kind="short_circuit"),),
        omega_ref=Profile(((0.02, 0.0), (0.12, 40.0))),
        t_load=Profile.constant(0.0),
        sim=SimConfig(dt=5e-6, ts=20e-6, duration=0.30),
    )


PRESETS = {
    "healthy-100": healthy_speed_step,
    "no-strategy-leg-a": no_strategy_double_open,
    **{f"oc-{dev.lower()}": (lambda d=dev: open_switch(d))
       for dev in INVERTER_DEVICES},
    **{f"sc-{dev.lower()}": (lambda d=dev: short_circuit(d))
       for dev in INVERTER_DEVICES},
    "dcdc-q1": lambda: dcdc_switch_fault("Q1"),
    "dcdc-q2": lambda: dcdc_switch_fault("Q2"),
}


def preset(name: str) -> Scenario:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset: {name!r}") from None
