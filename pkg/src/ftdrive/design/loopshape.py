"""Controller network analysis/synthesis and loop-gain margin computation.

The voltage controller is an integral-double-lead network around an error
amplifier: transfer function F*(s+wzc1)*(s+wzc2) / [s*(s+wpc1)*(s+wpc2)],
realized with (R1, R2, R3, RA, RB, C1, C2, C3). The loop gain adds the
plant's LHP zero, RHP zero and output-filter resonance around one
configurable gain scalar; margins are found by a dense log-frequency
pre-scan plus bisection.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


class InfeasibleDesign(ValueError):
    """Raised when requested corner frequencies cannot be realized."""


class NoCrossover(RuntimeError):
    """Raised when the loop gain has no unity-gain crossover in range."""


@dataclass(frozen=True)
class RationalTransferFunction:
    """gain * prod(s - z) / prod(s - p), roots in rad/s."""
    gain: float
    zeros: tuple
    poles: tuple

    def __post_init__(self):
        for roots in (self.zeros, self.poles):
            for r in roots:
                if complex(r).imag == 0.0:
                    continue
                rc = complex(r).conjugate()
                if not any(abs(rc - complex(q)) <= 1e-9 * max(1.0, abs(rc))
                           for q in roots):
                    raise ValueError(
                        "complex roots must come in conjugate pairs")

    def eval(self, s: complex) -> complex:
        num = complex(self.gain)
        for z in self.zeros:
            num *= (s - z)
        den = complex(1.0)
        for p in self.poles:
            den *= (s - p)
        return num / den

    def at_frequency(self, f_hz: float) -> complex:
        return self.eval(1j * TWO_PI * f_hz)


@dataclass(frozen=True)
class ControllerComponents:
    R1: float
    R2: float
    R3: float
    RA: float
    RB: float
    C1: float
    C2: float
    C3: float

    def __post_init__(self):
        for name in ("R1", "R2", "R3", "RA", "RB", "C1", "C2", "C3"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")

    @property
    def h11(self) -> float:
        return self.RA * self.RB / (self.RA + self.RB)


def controller_tf(c: ControllerComponents
                  ) -> tuple[RationalTransferFunction, float, dict]:
    """Factored controller transfer function from the component values.

    Returns (tf, F, corners) with corners = {zc1, zc2, pc1, pc2} in rad/s:
      wzc1 = 1/(R2*C1)
      wpc1 = (C1+C2)/(R2*C1*C2)
      wzc2 = 1/((R1+R3)*C3)
      wpc2 = (R1+h11)/(C3*(R1*R3 + h11*(R1+R3)))
      F    = (R1+R3)/(C2*(R1*R3 + h11*(R1+R3)))
    """
    h11 = c.h11
    mix = c.R1 * c.R3 + h11 * (c.R1 + c.R3)
    zc1 = 1.0 / (c.R2 * c.C1)
    pc1 = (c.C1 + c.C2) / (c.R2 * c.C1 * c.C2)
    zc2 = 1.0 / ((c.R1 + c.R3) * c.C3)
    pc2 = (c.R1 + h11) / (c.C3 * mix)
    f_gain = (c.R1 + c.R3) / (c.C2 * mix)
    tf = RationalTransferFunction(gain=f_gain,
                                  zeros=(-zc1, -zc2),
                                  poles=(0.0, -pc1, -pc2))
    return tf, f_gain, {"zc1": zc1, "zc2": zc2, "pc1": pc1, "pc2": pc2}


def synthesize_components(F_target: float, zc1: float, zc2: float,
                          pc1: float, pc2: float, R1_seed: float = 10e3
                          ) -> ControllerComponents:
    """Component values realizing the five targets (inverse of controller_tf).

    The network forces pc1 > zc1 ((C1+C2)/C2 > 1) and pc2 > zc2; requests
    violating either ordering raise InfeasibleDesign. R1 is a free seed that
    sets the impedance scale.
    """
    if F_target <= 0.0 or min(zc1, zc2, pc1, pc2) <= 0.0:
        raise InfeasibleDesign("targets must be > 0")
    if pc1 <= zc1:
        raise InfeasibleDesign("pc1 must exceed zc1: (C1+C2)/C2 > 1")
    if pc2 <= zc2:
        raise InfeasibleDesign("pc2 must exceed zc2 in this network")
    if R1_seed <= 0.0:
        raise InfeasibleDesign("R1_seed must be > 0")
    r1 = R1_seed
    rho = pc2 / zc2
    # R3 chosen so the feasibility bound rho < 1 + R1/R3 holds with margin 2x
    r3 = r1 / (2.0 * (rho - 1.0))
    h11 = r1 * ((r1 + r3) - rho * r3) / ((r1 + r3) * (rho - 1.0))
    mix = r1 * r3 + h11 * (r1 + r3)
    c2 = (r1 + r3) / (F_target * mix)
    c1 = c2 * (pc1 / zc1 - 1.0)
    r2 = 1.0 / (zc1 * c1)
    c3 = 1.0 / ((r1 + r3) * zc2)
    ra = rb = 2.0 * h11
    return ControllerComponents(R1=r1, R2=r2, R3=r3, RA=ra, RB=rb,
                                C1=c1, C2=c2, C3=c3)


@dataclass(frozen=True)
class LoopGainParams:
    beta: float            # feedback ratio
    F: float               # controller gain [rad/s]
    Tm: float              # modulator gain [1/V]
    f_zc: float            # controller double zero [Hz]
    f_pc: float            # controller double pole [Hz]
    f_zn: float            # plant LHP zero [Hz]
    f_zp: float            # plant RHP zero [Hz]
    zeta: float            # output filter damping
    omega_0: float         # output filter resonance [rad/s]
    plant_gain: float = 1.0
    dc_gain_sign: float = -1.0

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ValueError("beta must be in (0, 1]")
        if not (0.0 < self.zeta < 1.0):
            raise ValueError("zeta must be in (0, 1)")
        for name in ("F", "Tm", "f_zc", "f_pc", "f_zn", "f_zp", "omega_0",
                     "plant_gain"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")


def loop_gain(p: LoopGainParams) -> RationalTransferFunction:
    """Loop transmission with the published factored dynamics.

    T(s) = sign * K * (s+wzc)^2 (s+wzn) (s-wzp)
                / [ s (s+wpc)^2 (s^2 + 2*zeta*w0*s + w0^2) ],
    K = beta*F*Tm*plant_gain. Note the DC sign of sign*(s-wzp) is positive
    for sign = -1, so the low-frequency phase starts at -90 deg and the
    usual margin conventions apply directly.
    """
    k = p.beta * p.F * p.Tm * p.plant_gain
    wzc = TWO_PI * p.f_zc
    wpc = TWO_PI * p.f_pc
    wzn = TWO_PI * p.f_zn
    wzp = TWO_PI * p.f_zp
    wd = p.omega_0 * math.sqrt(1.0 - p.zeta * p.zeta)
    res = complex(-p.zeta * p.omega_0, wd)
    return RationalTransferFunction(
        gain=p.dc_gain_sign * k,
        zeros=(-wzc, -wzc, -wzn, +wzp),
        poles=(0.0, -wpc, -wpc, res, res.conjugate()))


@dataclass(frozen=True)
class MarginReport:
    gain_margin_db: float            # inf when no phase crossover
    phase_margin_deg: float
    gain_crossover_hz: float
    phase_crossover_hz: float | None
    multiple_crossovers: bool


def _scan_grid(f_lo: float, f_hi: float, per_decade: int = 64) -> list[float]:
    decades = math.log10(f_hi / f_lo)
    n = max(2, int(math.ceil(decades * per_decade)) + 1)
    step = decades / (n - 1)
    return [f_lo * 10.0 ** (k * step) for k in range(n)]


def _phase_near(tf: RationalTransferFunction, f: float, ref: float) -> float:
    """Phase [rad] at f on the branch continuous with ref."""
    ph = cmath.phase(tf.at_frequency(f))
    while ph - ref > math.pi:
        ph -= TWO_PI
    while ph - ref < -math.pi:
        ph += TWO_PI
    return ph


def margins(tf: RationalTransferFunction, f_lo: float = 1.0,
            f_hi: float = 1e6) -> MarginReport:
    """Gain and phase margins over [f_lo, f_hi] Hz.

    Dense log pre-scan (64 points/decade, locally refined where the phase
    moves fast) locates unity-gain and -180 deg crossings; each is polished
    by bisection to 1e-6 relative frequency. PM = 180 deg + phase at the
    unity-gain crossover, GM = -|T| in dB at the phase crossover. With
    several crossovers the worst-case margins are reported and flagged.
    Raises NoCrossover when |T| never crosses unity in range.
    """
    if not (0.0 < f_lo < f_hi):
        raise ValueError("need 0 < f_lo < f_hi")
    freqs = _scan_grid(f_lo, f_hi)
    resp = [tf.at_frequency(f) for f in freqs]
    mags = [abs(h) for h in resp]
    # unwrapped phase along the scan, refining where it jumps
    phases = [cmath.phase(resp[0])]
    k = 1
    while k < len(freqs):
        ph = _phase_near(tf, freqs[k], phases[k - 1])
        if abs(ph - phases[k - 1]) > math.radians(60.0):
            fm = math.sqrt(freqs[k - 1] * freqs[k])
            if fm / freqs[k - 1] > 1.0 + 1e-12:
                freqs.insert(k, fm)
                resp.insert(k, tf.at_frequency(fm))
                mags.insert(k, abs(resp[k]))
                continue
        phases.append(ph)
        k += 1

    def bisect_mag(a: float, b: float) -> float:
        ga = math.log10(abs(tf.at_frequency(a)))
        while (b - a) / a > 1e-6:
            m = math.sqrt(a * b)
            gm = math.log10(abs(tf.at_frequency(m)))
            if (ga <= 0.0) == (gm <= 0.0):
                a, ga = m, gm
            else:
                b = m
        return math.sqrt(a * b)

    gain_crossings: list[float] = []
    for i in range(len(freqs) - 1):
        if (mags[i] - 1.0) == 0.0:
            gain_crossings.append(freqs[i])
        elif (mags[i] - 1.0) * (mags[i + 1] - 1.0) < 0.0:
            gain_crossings.append(bisect_mag(freqs[i], freqs[i + 1]))
    if not gain_crossings:
        raise NoCrossover(
            f"|T| does not cross unity in [{f_lo:g}, {f_hi:g}] Hz")

    def phase_at(f: float) -> float:
        # branch consistent with the scan's unwrapped phase
        i = 0
        while i + 1 < len(freqs) and freqs[i + 1] <= f:
            i += 1
        return _phase_near(tf, f, phases[i])

    pm_list = [math.degrees(phase_at(f)) + 180.0 for f in gain_crossings]

    # -180 deg (mod 360) crossings of the unwrapped phase
    def bisect_phase(a: float, b: float, level: float) -> float:
        pa = phase_at(a) - level
        while (b - a) / a > 1e-6:
            m = math.sqrt(a * b)
            pmid = phase_at(m) - level
            if (pa <= 0.0) == (pmid <= 0.0):
                a, pa = m, pmid
            else:
                b = m
        return math.sqrt(a * b)

    lo_ph, hi_ph = min(phases), max(phases)
    levels = []
    k0 = int(math.floor((hi_ph + math.pi) / TWO_PI))
    k1 = int(math.ceil((lo_ph + math.pi) / TWO_PI))
    for k in range(min(k0, k1), max(k0, k1) + 1):
        lv = -math.pi + k * TWO_PI
        if lo_ph - 1e-12 <= lv <= hi_ph + 1e-12:
            levels.append(lv)
    phase_crossings: list[float] = []
    for lv in levels:
        for i in range(len(freqs) - 1):
            d0, d1 = phases[i] - lv, phases[i + 1] - lv
            if d0 == 0.0:
                phase_crossings.append(freqs[i])
            elif d0 * d1 < 0.0:
                phase_crossings.append(bisect_phase(freqs[i], freqs[i + 1], lv))

    if phase_crossings:
        gm_list = [-20.0 * math.log10(abs(tf.at_frequency(f)))
                   for f in phase_crossings]
        gm_best = min(gm_list)
        f_180 = phase_crossings[gm_list.index(gm_best)]
    else:
        gm_best, f_180 = math.inf, None

    pm_best = min(pm_list)
    f_c = gain_crossings[pm_list.index(pm_best)]
    return MarginReport(
        gain_margin_db=gm_best,
        phase_margin_deg=pm_best,
        gain_crossover_hz=f_c,
        phase_crossover_hz=f_180,
        multiple_crossovers=(len(gain_crossings) > 1
                             or len(phase_crossings) > 1))


def bode_table(tf: RationalTransferFunction, f_lo: float, f_hi: float,
               per_decade: int = 32) -> list[tuple[float, float, float]]:
    """(f_hz, magnitude_db, phase_deg) rows for plotting."""
    rows = []
    ref = cmath.phase(tf.at_frequency(f_lo))
    for f in _scan_grid(f_lo, f_hi, per_decade):
        ph = _phase_near(tf, f, ref)
        ref = ph
        h = tf.at_frequency(f)
        rows.append((f, 20.0 * math.log10(abs(h)), math.degrees(ph)))
    return rows
