"""Scenario configuration: dataclasses, validation, JSON (schema 1) I/O.

A scenario bundles the machine parameters, DC-link and balancer setup,
controller tuning, detector settings, the fault schedule, reference
profiles and the solver grid. Loading is strict: unknown keys and
malformed sections raise ScenarioError so the CLI can map them to the
invalid-input exit code.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field

from .converter import DcdcBalancerConfig
from .faults import FaultEvent
from .machine import MachineParams
from .mpc import MpcConfig, PiConfig


class ScenarioError(ValueError):
    """Raised for malformed or inconsistent scenario input."""


@dataclass(frozen=True)
class Profile:
    """Piecewise-linear profile of time; clamps outside the sampled range."""

    points: tuple            # ((t, value), ...) ascending in t

    def __post_init__(self):
        pts = tuple((float(t), float(v)) for t, v in self.points)
        if not pts:
            raise ScenarioError("profile needs at least one point")
        times = [t for t, _ in pts]
        if times != sorted(times) or len(set(times)) != len(times):
            raise ScenarioError("profile times must be strictly ascending")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_times", times)

    @classmethod
    def constant(cls, value: float) -> "Profile":
        return cls(points=((0.0, value),))

    def value(self, t: float) -> float:
        pts = self.points
        if t <= pts[0][0]:
            return pts[0][1]
        if t >= pts[-1][0]:
            return pts[-1][1]
        k = bisect_right(self._times, t) - 1
        t0, v0 = pts[k]
        t1, v1 = pts[k + 1]
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    __call__ = value


@dataclass(frozen=True)
class FuseConfig:
    """Per-leg fast fuse rating plus the shoot-through waveform constants.

    The deliberate shoot-through that clears a shorted device is modeled by
    the analytic underdamped fault current; these constants parameterize it
    (same meaning as the design-side FuseDesignParams).
    """

    rated_i2t: float
    rf: float = 0.5
    alpha: float = 50.0
    omega_d: float = 1000.0

    def __post_init__(self):
        if self.rated_i2t <= 0.0:
            raise ScenarioError("fuse rated_i2t must be > 0")
        if self.rf <= 0.0 or self.omega_d <= 0.0 or self.alpha < 0.0:
            raise ScenarioError("invalid fuse waveform constants")


@dataclass(frozen=True)
class DcLinkConfig:
    c1: float
    c2: float
    v_ref_total: float
    balancer: DcdcBalancerConfig
    fuse: FuseConfig

    def __post_init__(self):
        if self.c1 <= 0.0 or self.c2 <= 0.0:
            raise ScenarioError("capacitances must be > 0")
        if self.v_ref_total <= 0.0:
            raise ScenarioError("v_ref_total must be > 0")


@dataclass(frozen=True)
class DetectorConfig:
    enabled: bool = True
    threshold: float = 0.45
    window_samples: int = 64
    epsilon_amp: float | None = None     # None -> 2% of rated peak current
    sc_latency: float = 2e-6
    arm_time: float = 0.0                # classification suppressed before this
    fundamental_hz: float | None = None  # expected steady-state fundamental

    def __post_init__(self):
        if self.threshold <= 0.0:
            raise ScenarioError("detector threshold must be > 0")
        if self.window_samples < 16:
            raise ScenarioError("detector window must hold >= 16 samples")
        if self.sc_latency < 0.0 or self.arm_time < 0.0:
            raise ScenarioError("detector times must be >= 0")
        if self.enabled and (self.fundamental_hz is None
                             or self.fundamental_hz <= 0.0):
            raise ScenarioError(
                "enabled detector needs a positive fundamental_hz")

    def resolved_epsilon_amp(self, m: MachineParams) -> float:
        if self.epsilon_amp is not None:
            if self.epsilon_amp <= 0.0:
                raise ScenarioError("epsilon_amp must be > 0")
            return self.epsilon_amp
        return 0.02 * m.Tn / (1.5 * m.p * m.psi_n)


@dataclass(frozen=True)
class NoiseConfig:
    current_std: float = 0.0
    speed_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.current_std < 0.0 or self.speed_std < 0.0:
            raise ScenarioError("noise std must be >= 0")

    @property
    def enabled(self) -> bool:
        return self.current_std > 0.0 or self.speed_std > 0.0


@dataclass(frozen=True)
class SimConfig:
    dt: float
    ts: float
    duration: float
    decimation: int = 10

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ScenarioError("sim dt must be > 0")
        if self.duration < 0.0:
            raise ScenarioError("duration must be >= 0")
        if self.decimation < 1:
            raise ScenarioError("decimation must be >= 1")
        k = round(self.ts / self.dt)
        if k < 1 or abs(k * self.dt - self.ts) > 1e-12:
            raise ScenarioError("control period ts must be an integer "
                                "multiple of sim dt")

    @property
    def steps_per_control(self) -> int:
        return round(self.ts / self.dt)


@dataclass(frozen=True)
class AnalysisWindows:
    """Optional steady-state windows evaluated into the run summary."""

    prefault: tuple | None = None      # (t0, t1)
    postfault: tuple | None = None

    def __post_init__(self):
        for w in (self.prefault, self.postfault):
            if w is not None and (len(w) != 2 or w[0] >= w[1] or w[0] < 0.0):
                raise ScenarioError(f"bad analysis window: {w!r}")


@dataclass(frozen=True)
class Scenario:
    name: str
    machine: MachineParams
    dc_link: DcLinkConfig
    mpc: MpcConfig
    pi: PiConfig
    detector: DetectorConfig
    faults: tuple = ()
    omega_ref: Profile = field(default_factory=lambda: Profile.constant(0.0))
    t_load: Profile = field(default_factory=lambda: Profile.constant(0.0))
    sim: SimConfig = None
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    analysis: AnalysisWindows = field(default_factory=AnalysisWindows)

    def __post_init__(self):
        if self.sim is None:
            raise ScenarioError("scenario needs a sim section")
        if abs(self.mpc.Ts - self.sim.ts) > 1e-15:
            raise ScenarioError("mpc.Ts must equal sim.ts")
        seen = set()
        for f in self.faults:
            if not isinstance(f, FaultEvent):
                raise ScenarioError("faults must be FaultEvent instances")
            if f.target in seen:
                raise ScenarioError(f"duplicate fault target {f.target}")
            seen.add(f.target)


def _require_keys(section: dict, allowed: set, required: set, where: str
                  ) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ScenarioError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(section)
    if missing:
        raise ScenarioError(f"missing keys in {where}: {sorted(missing)}")


def _profile_from(obj, where: str) -> Profile:
    if isinstance(obj, (int, float)):
        return Profile.constant(float(obj))
    if isinstance(obj, (list, tuple)):
        try:
            return Profile(points=tuple((p[0], p[1]) for p in obj))
        except (TypeError, IndexError) as e:
            raise ScenarioError(f"bad profile in {where}: {e}") from None
    raise ScenarioError(f"{where} must be a number or a [t, value] list")


def scenario_from_dict(doc: dict) -> Scenario:
    """Build and validate a Scenario from a schema-1 document."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be an object")
    if doc.get("schema") != 1:
        raise ScenarioError("unsupported scenario schema "
                            f"{doc.get('schema')!r} (expected 1)")
    _require_keys(doc, {"schema", "name", "machine", "dc_link", "controller",
                        "detector", "faults", "profiles", "sim", "noise",
                        "analysis"},
                  {"machine", "dc_link", "controller", "profiles", "sim"},
                  "scenario")

    m = doc["machine"]
    _require_keys(m, {"Rs", "Rr", "Ls", "Lr", "Lm", "p", "J", "Tn", "psi_n"},
                  {"Rs", "Rr", "Ls", "Lr", "Lm", "p", "J", "Tn", "psi_n"},
                  "machine")
    try:
        machine = MachineParams(Rs=float(m["Rs"]), Rr=float(m["Rr"]),
                                Ls=float(m["Ls"]), Lr=float(m["Lr"]),
                                Lm=float(m["Lm"]), p=int(m["p"]),
                                J=float(m["J"]), Tn=float(m["Tn"]),
                                psi_n=float(m["psi_n"]))
    except ValueError as e:
        raise ScenarioError(f"machine: {e}") from None

    dl = doc["dc_link"]
    _require_keys(dl, {"c1", "c2", "v_ref_total", "balancer", "fuse"},
                  {"c1", "c2", "v_ref_total", "fuse"}, "dc_link")
    bal = dl.get("balancer", {})
    _require_keys(bal, {"bandwidth", "max_source_current", "duty",
                        "switching_hz"}, set(), "dc_link.balancer")
    try:
        balancer = DcdcBalancerConfig(
            v_ref_total=float(dl["v_ref_total"]),
            bandwidth=float(bal.get("bandwidth", 1000.0)),
            max_source_current=float(bal.get("max_source_current", 60.0)),
            duty=float(bal.get("duty", 0.5)),
            switching_hz=float(bal.get("switching_hz", 100e3)))
    except ValueError as e:
        raise ScenarioError(f"dc_link.balancer: {e}") from None
    fu = dl["fuse"]
    _require_keys(fu, {"rated_i2t", "rf", "alpha", "omega_d"},
                  {"rated_i2t"}, "dc_link.fuse")
    fuse = FuseConfig(rated_i2t=float(fu["rated_i2t"]),
                      rf=float(fu.get("rf", 0.5)),
                      alpha=float(fu.get("alpha", 50.0)),
                      omega_d=float(fu.get("omega_d", 1000.0)))
    dc_link = DcLinkConfig(c1=float(dl["c1"]), c2=float(dl["c2"]),
                           v_ref_total=float(dl["v_ref_total"]),
                           balancer=balancer, fuse=fuse)

    sm = doc["sim"]
    _require_keys(sm, {"dt", "ts", "duration", "decimation"},
                  {"dt", "ts", "duration"}, "sim")
    sim = SimConfig(dt=float(sm["dt"]), ts=float(sm["ts"]),
                    duration=float(sm["duration"]),
                    decimation=int(sm.get("decimation", 10)))

    c = doc["controller"]
    _require_keys(c, {"lambda", "flux_ref", "delay_compensation",
                      "flux_term_multiplier", "pi"},
                  {"flux_ref", "pi"}, "controller")
    lam = c.get("lambda")
    if lam is None:
        lam = machine.Tn / machine.psi_n
    try:
        mpc = MpcConfig(Ts=sim.ts, lam=float(lam),
                        flux_ref=float(c["flux_ref"]),
                        delay_compensation=bool(
                            c.get("delay_compensation", True)),
                        flux_term_multiplier=float(
                            c.get("flux_term_multiplier", 1.0)))
    except ValueError as e:
        raise ScenarioError(f"controller: {e}") from None
    pc = c["pi"]
    _require_keys(pc, {"kp", "ki", "t_max"}, {"kp", "ki", "t_max"},
                  "controller.pi")
    try:
        pi = PiConfig(kp=float(pc["kp"]), ki=float(pc["ki"]),
                      t_max=float(pc["t_max"]))
    except ValueError as e:
        raise ScenarioError(f"controller.pi: {e}") from None

    det = doc.get("detector", {"enabled": False})
    _require_keys(det, {"enabled", "threshold", "window_samples",
                        "epsilon_amp", "sc_latency", "arm_time",
                        "fundamental_hz"}, set(), "detector")
    detector = DetectorConfig(
        enabled=bool(det.get("enabled", True)),
        threshold=float(det.get("threshold", 0.45)),
        window_samples=int(det.get("window_samples", 64)),
        epsilon_amp=(None if det.get("epsilon_amp") is None
                     else float(det["epsilon_amp"])),
        sc_latency=float(det.get("sc_latency", 2e-6)),
        arm_time=float(det.get("arm_time", 0.0)),
        fundamental_hz=(None if det.get("fundamental_hz") is None
                        else float(det["fundamental_hz"])))

    faults = []
    for k, f in enumerate(doc.get("faults", [])):
        _require_keys(f, {"time", "target", "kind"},
                      {"time", "target", "kind"}, f"faults[{k}]")
        try:
            faults.append(FaultEvent(time=float(f["time"]),
                                     target=str(f["target"]),
                                     kind=str(f["kind"])))
        except ValueError as e:
            raise ScenarioError(f"faults[{k}]: {e}") from None

    pr = doc["profiles"]
    _require_keys(pr, {"omega_ref", "t_load"}, {"omega_ref", "t_load"},
                  "profiles")
    omega_ref = _profile_from(pr["omega_ref"], "profiles.omega_ref")
    t_load = _profile_from(pr["t_load"], "profiles.t_load")

    nz = doc.get("noise", {})
    _require_keys(nz, {"current_std", "speed_std", "seed"}, set(), "noise")
    noise = NoiseConfig(current_std=float(nz.get("current_std", 0.0)),
                        speed_std=float(nz.get("speed_std", 0.0)),
                        seed=int(nz.get("seed", 0)))

    an = doc.get("analysis", {})
    _require_keys(an, {"prefault", "postfault"}, set(), "analysis")
    def _win(w):
        return None if w is None else (float(w[0]), float(w[1]))
    analysis = AnalysisWindows(prefault=_win(an.get("prefault")),
                               postfault=_win(an.get("postfault")))

    return Scenario(name=str(doc.get("name", "scenario")), machine=machine,
                    dc_link=dc_link, mpc=mpc, pi=pi, detector=detector,
                    faults=tuple(faults), omega_ref=omega_ref,
                    t_load=t_load, sim=sim, noise=noise, analysis=analysis)


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ScenarioError(f"cannot read scenario file: {e}") from None
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario file is not valid JSON: {e}") from None
    return scenario_from_dict(doc)


def scenario_to_dict(s: Scenario) -> dict:
    """Inverse of scenario_from_dict (round-trips through JSON)."""
    return {
        "schema": 1,
        "name": s.name,
        "machine": {"Rs": s.machine.Rs, "Rr": s.machine.Rr,
                    "Ls": s.machine.Ls, "Lr": s.machine.Lr,
                    "Lm": s.machine.Lm, "p": s.machine.p, "J": s.machine.J,
                    "Tn": s.machine.Tn, "psi_n": s.machine.psi_n},
        "dc_link": {"c1": s.dc_link.c1, "c2": s.dc_link.c2,
                    "v_ref_total": s.dc_link.v_ref_total,
                    "balancer": {
                        "bandwidth": s.dc_link.balancer.bandwidth,
                        "max_source_current":
                            s.dc_link.balancer.max_source_current,
                        "duty": s.dc_link.balancer.duty,
                        "switching_hz": s.dc_link.balancer.switching_hz},
                    "fuse": {"rated_i2t": s.dc_link.fuse.rated_i2t,
                             "rf": s.dc_link.fuse.rf,
                             "alpha": s.dc_link.fuse.alpha,
                             "omega_d": s.dc_link.fuse.omega_d}},
        "controller": {"lambda": s.mpc.lam, "flux_ref": s.mpc.flux_ref,
                       "delay_compensation": s.mpc.delay_compensation,
                       "flux_term_multiplier": s.mpc.flux_term_multiplier,
                       "pi": {"kp": s.pi.kp, "ki": s.pi.ki,
                              "t_max": s.pi.t_max}},
        "detector": {"enabled": s.detector.enabled,
                     "threshold": s.detector.threshold,
                     "window_samples": s.detector.window_samples,
                     "epsilon_amp": s.detector.epsilon_amp,
                     "sc_latency": s.detector.sc_latency,
                     "arm_time": s.detector.arm_time,
                     "fundamental_hz": s.detector.fundamental_hz},
        "faults": [{"time": f.time, "target": f.target, "kind": f.kind}
                   for f in s.faults],
        "profiles": {"omega_ref": [list(p) for p in s.omega_ref.points],
                     "t_load": [list(p) for p in s.t_load.points]},
        "sim": {"dt": s.sim.dt, "ts": s.sim.ts, "duration": s.sim.duration,
                "decimation": s.sim.decimation},
        "noise": {"current_std": s.noise.current_std,
                  "speed_std": s.noise.speed_std, "seed": s.noise.seed},
        "analysis": {
            "prefault": (None if s.analysis.prefault is None
                         else list(s.analysis.prefault)),
            "postfault": (None if s.analysis.postfault is None
                          else list(s.analysis.postfault))},
    }


def save_scenario(path, s: Scenario) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(s), fh, indent=2)
        fh.write("\n")
