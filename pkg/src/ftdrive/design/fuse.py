"""Analytic short-circuit fuse current and Joule-integral sizing.

The shoot-through fault current through a leg fuse is the underdamped RLC
response i(t) = exp(-alpha*t) * [A*cos(wd*t) + B*sin(wd*t)] with
A = Vdc/(2*Rf) and B = alpha*A/wd. Its Joule integral has a closed form
(re-derived from the squared waveform; contracted against adaptive
quadrature in the tests). A fuse's nominal melt energy divides the Joule
integral at the protection time by the withstand factor at that time, and
the selected catalog rating is the nearest standard value below nominal.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass


class UnsupportedRegime(ValueError):
    """Raised for non-underdamped parameterizations (the waveform model
    assumes an oscillatory response)."""


class DomainError(ValueError):
    """Raised when a lookup time lies outside the withstand-curve domain."""


class NoFeasibleFuse(ValueError):
    """Raised when every catalog rating exceeds the nominal melt energy."""


@dataclass(frozen=True)
class FuseDesignParams:
    Vdc: float                 # bus voltage [V]
    Rf: float                  # fault-loop resistance [Ohm]
    alpha: float               # damping constant [1/s]
    omega_d: float             # damped angular frequency [rad/s]
    catalog: tuple = ()        # ascending standard I2t ratings [A^2 s]

    def __post_init__(self):
        if self.Vdc <= 0.0 or self.Rf <= 0.0:
            raise ValueError("Vdc and Rf must be > 0")
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0")
        if self.omega_d <= 0.0:
            raise UnsupportedRegime(
                "omega_d must be > 0 (underdamped response only)")
        if self.catalog and list(self.catalog) != sorted(self.catalog):
            raise ValueError("catalog must be ascending")


def fuse_params_from_circuit_literal(Vdc: float, Rf: float, L: float,
                                     C: float, catalog: tuple = ()
                                     ) -> FuseDesignParams:
    """Literal textbook parameterization: alpha = 1/(4*Rf), w0 = 1/sqrt(LC).

    Note alpha here carries the literal printed form (dimensionally 1/Ohm,
    not 1/s); supply alpha and omega_d directly to FuseDesignParams for a
    physically consistent damping. Kept for reproducing the published
    sizing flow verbatim.
    """
    alpha = 1.0 / (4.0 * Rf)
    w0 = 1.0 / math.sqrt(L * C)
    if w0 <= alpha:
        raise UnsupportedRegime("parameterization is not underdamped")
    wd = math.sqrt(w0 * w0 - alpha * alpha)
    return FuseDesignParams(Vdc=Vdc, Rf=Rf, alpha=alpha, omega_d=wd,
                            catalog=tuple(catalog))


def fault_current(t: float, p: FuseDesignParams) -> float:
    """Shoot-through fuse current at time t [A]."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    a = p.Vdc / (2.0 * p.Rf)
    b = p.alpha * a / p.omega_d
    return math.exp(-p.alpha * t) * (a * math.cos(p.omega_d * t)
                                     + b * math.sin(p.omega_d * t))


def joule_integral(t: float, p: FuseDesignParams) -> float:
    """Closed-form integral of the squared fault current over [0, t] [A^2 s].

    i^2 = exp(-2at) * [ (A^2+B^2)/2 + (A^2-B^2)/2 * cos(2wt) + AB*sin(2wt) ]
    integrated with the standard exponential-times-trig antiderivatives.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0
    a = p.Vdc / (2.0 * p.Rf)
    b = p.alpha * a / p.omega_d
    c0 = 0.5 * (a * a + b * b)
    c2 = 0.5 * (a * a - b * b)
    s2 = a * b
    al2 = 2.0 * p.alpha
    w2 = 2.0 * p.omega_d
    e = math.exp(-al2 * t)
    cw = math.cos(w2 * t)
    sw = math.sin(w2 * t)
    i0 = t if p.alpha == 0.0 else (1.0 - e) / al2
    den = al2 * al2 + w2 * w2
    ic = (e * (-al2 * cw + w2 * sw) + al2) / den
    isn = (e * (-al2 * sw - w2 * cw) + w2) / den
    return c0 * i0 + c2 * ic + s2 * isn


def blow_time(rated_i2t: float, p: FuseDesignParams, t_max: float = 10.0
              ) -> float:
    """Smallest t with joule_integral(t) >= rated_i2t, by bisection.

    Raises ValueError when the rating is never reached by t_max (the
    integral saturates at finite energy for alpha > 0).
    """
    if rated_i2t <= 0.0:
        raise ValueError("rated_i2t must be > 0")
    if joule_integral(t_max, p) < rated_i2t:
        raise ValueError("rated energy is not reached within t_max")
    lo, hi = 0.0, t_max
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if joule_integral(mid, p) >= rated_i2t:
            hi = mid
        else:
            lo = mid
    return hi


class WithstandCurve:
    """Time-dependent melt-energy derating factor, linear in log-time.

    Sample points (time [s], factor >= 1) with ascending times; lookups
    outside the sampled domain raise DomainError rather than extrapolate.
    The shipped placeholder curve is non-normative example data, not vendor
    data.
    """

    def __init__(self, points: list[tuple[float, float]]):
        if len(points) < 2:
            raise ValueError("need at least two curve points")
        times = [t for t, _ in points]
        if any(t <= 0.0 for t in times) or times != sorted(times) \
                or len(set(times)) != len(times):
            raise ValueError("times must be positive and strictly ascending")
        if any(fw < 1.0 for _, fw in points):
            raise ValueError("withstand factor must be >= 1 everywhere")
        self.points = [(float(t), float(fw)) for t, fw in points]
        self._logt = [math.log10(t) for t, _ in self.points]

    @classmethod
    def placeholder(cls) -> "WithstandCurve":
        return cls([(1e-3, 4.0), (1e-2, 2.0), (0.1, 1.3), (1.0, 1.0)])

    @classmethod
    def from_csv(cls, path) -> "WithstandCurve":
        points = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                points.append((float(row["time_s"]), float(row["fw"])))
        return cls(points)

    def interpolate(self, t: float) -> float:
        if t < self.points[0][0] or t > self.points[-1][0]:
            raise DomainError(
                f"t = {t:g} s outside withstand curve domain "
                f"[{self.points[0][0]:g}, {self.points[-1][0]:g}] s")
        x = math.log10(t)
        k = bisect.bisect_right(self._logt, x) - 1
        if k >= len(self.points) - 1:
            return self.points[-1][1]
        x0, x1 = self._logt[k], self._logt[k + 1]
        y0, y1 = self.points[k][1], self.points[k + 1][1]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def nominal_melt_energy(t0: float, p: FuseDesignParams, w: WithstandCurve
                        ) -> float:
    """Nominal I2t rating: Joule integral at t0 over the withstand factor."""
    return joule_integral(t0, p) / w.interpolate(t0)


# standard fast-fuse melt-energy ratings [A^2 s]
DEFAULT_CATALOG = (1.0, 2.5, 4.5, 8.0, 10.0, 16.0, 25.0, 50.0, 100.0)


def select_fuse(i2t_nominal: float, catalog) -> float:
    """Largest standard rating not exceeding the nominal melt energy."""
    cat = sorted(catalog)
    if not cat:
        raise ValueError("catalog is empty")
    k = bisect.bisect_right(cat, i2t_nominal) - 1
    if k < 0:
        raise NoFeasibleFuse(
            f"nominal {i2t_nominal:g} A^2 s below smallest rating {cat[0]:g}")
    return cat[k]
