"""Post-run trace analysis.

Single-bin Fourier phasors over exact fundamental periods, Fortescue
symmetrical components, flux-locus circularity, and the combined
negative-sequence report used to quantify the postfault strategy.

Phasor convention: for samples x_m on a uniform grid spanning exactly one
period, A1 = (2/n) sum x_m cos(2 pi m/n) and B1 = (2/n) sum x_m sin(...),
amplitude = sqrt(A1^2 + B1^2), phase = atan2(B1, A1), and the complex
phasor is X = A1 - j B1 so that x(t) ~= Re[X exp(j w t)].
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .trace import Trace

_A = cmath.exp(2j * math.pi / 3.0)       # Fortescue rotation operator


class InsufficientData(ValueError):
    """Raised when a window is too short for the requested analysis."""


def fundamental_phasor(samples, f1: float) -> tuple[float, float]:
    """(amplitude, phase) of the fundamental of one exact period of samples.

    The grid must span exactly one period of f1 with the end point
    excluded (m/n spacing). f1 only documents the bin; the coefficients
    are grid-relative.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 16:
        raise InsufficientData("need at least 16 samples per period")
    if f1 <= 0.0:
        raise ValueError("f1 must be > 0")
    m = np.arange(n)
    ang = 2.0 * math.pi * m / n
    a1 = 2.0 / n * float(np.dot(x, np.cos(ang)))
    b1 = 2.0 / n * float(np.dot(x, np.sin(ang)))
    return (math.hypot(a1, b1), math.atan2(b1, a1))


def _phasor_complex(samples) -> complex:
    amp, ph = fundamental_phasor(samples, 1.0)
    return amp * cmath.exp(-1j * ph)


@dataclass(frozen=True)
class PhasorSet:
    """Per-phase complex fundamental phasors at a common frequency."""

    f1: float
    a: complex
    b: complex
    c: complex

    def amplitudes(self) -> tuple[float, float, float]:
        return (abs(self.a), abs(self.b), abs(self.c))


def sequence_components(p: PhasorSet) -> tuple[complex, complex, complex]:
    """Fortescue (positive, negative, zero) complex amplitudes."""
    pos = (p.a + _A * p.b + _A * _A * p.c) / 3.0
    neg = (p.a + _A * _A * p.b + _A * p.c) / 3.0
    zero = (p.a + p.b + p.c) / 3.0
    return (pos, neg, zero)


def phasors_from_sequence(pos: complex, neg: complex, zero: complex,
                          f1: float = 1.0) -> PhasorSet:
    """Inverse Fortescue map (reconstruction identity)."""
    a2 = _A * _A
    return PhasorSet(f1=f1,
                     a=pos + neg + zero,
                     b=a2 * pos + _A * neg + zero,
                     c=_A * pos + a2 * neg + zero)


def _window_arrays(trace: Trace, t0: float, t1: float, columns
                   ) -> list[np.ndarray]:
    t = np.asarray(trace["t"], dtype=float)
    if t.size == 0:
        raise InsufficientData("empty trace")
    sel = (t >= t0) & (t <= t1)
    if int(sel.sum()) < 16:
        raise InsufficientData(f"window [{t0}, {t1}] holds fewer than "
                               "16 samples")
    out = [t[sel]]
    for c in columns:
        out.append(np.asarray(trace[c], dtype=float)[sel])
    return out


def estimate_fundamental_hz(trace: Trace, t0: float, t1: float) -> float:
    """Fundamental frequency from the mean slope of the stator-flux angle."""
    t, pa, pb = _window_arrays(trace, t0, t1, ("psis_alpha", "psis_beta"))
    r = np.hypot(pa, pb)
    if float(r.min()) < 1e-6:
        raise InsufficientData("stator flux vanishes inside the window")
    theta = np.unwrap(np.arctan2(pb, pa))
    tc = t - t.mean()
    slope = float(np.dot(tc, theta - theta.mean()) / np.dot(tc, tc))
    f1 = slope / (2.0 * math.pi)
    if f1 <= 0.0:
        raise InsufficientData("non-positive fundamental frequency estimate")
    return f1


def window_phase_phasors(trace: Trace, t0: float, t1: float,
                         f1: float | None = None,
                         samples_per_period: int = 64
                         ) -> list[PhasorSet]:
    """One PhasorSet per whole fundamental period inside [t0, t1].

    Phase currents are resampled onto a uniform per-period grid (linear
    interpolation of the decimated trace).
    """
    if f1 is None:
        f1 = estimate_fundamental_hz(trace, t0, t1)
    t, ia, ib, ic = _window_arrays(trace, t0, t1, ("ia", "ib", "ic"))
    period = 1.0 / f1
    n_periods = int(math.floor((t[-1] - t[0]) / period))
    if n_periods < 1:
        raise InsufficientData("window shorter than one fundamental period")
    n = samples_per_period
    out = []
    for k in range(n_periods):
        grid = t[0] + (k + np.arange(n) / n) * period
        xa = np.interp(grid, t, ia)
        xb = np.interp(grid, t, ib)
        xc = np.interp(grid, t, ic)
        out.append(PhasorSet(f1=f1, a=_phasor_complex(xa),
                             b=_phasor_complex(xb), c=_phasor_complex(xc)))
    return out


@dataclass(frozen=True)
class WindowSequenceSummary:
    f1_hz: float
    n_periods: int
    amp_a: float
    amp_b: float
    amp_c: float
    pos_mag: float
    neg_mag: float
    zero_mag: float

    @property
    def neg_over_pos(self) -> float:
        return self.neg_mag / self.pos_mag if self.pos_mag > 0.0 else math.inf

    def to_dict(self) -> dict:
        return {"f1_hz": self.f1_hz, "n_periods": self.n_periods,
                "amp_a": self.amp_a, "amp_b": self.amp_b,
                "amp_c": self.amp_c, "pos_mag": self.pos_mag,
                "neg_mag": self.neg_mag, "zero_mag": self.zero_mag,
                "neg_over_pos": self.neg_over_pos}


def window_sequence_summary(trace: Trace, t0: float, t1: float,
                            f1: float | None = None,
                            samples_per_period: int = 64
                            ) -> WindowSequenceSummary:
    """Sequence magnitudes averaged over the whole periods in the window."""
    sets = window_phase_phasors(trace, t0, t1, f1, samples_per_period)
    amps = np.array([p.amplitudes() for p in sets])
    seqs = np.array([[abs(x) for x in sequence_components(p)] for p in sets])
    am = amps.mean(axis=0)
    sm = seqs.mean(axis=0)
    return WindowSequenceSummary(f1_hz=sets[0].f1, n_periods=len(sets),
                                 amp_a=float(am[0]), amp_b=float(am[1]),
                                 amp_c=float(am[2]), pos_mag=float(sm[0]),
                                 neg_mag=float(sm[1]), zero_mag=float(sm[2]))


def flux_locus_radii(trace: Trace, window: tuple[float, float]) -> np.ndarray:
    """Stator-flux magnitudes over a window covering >= 1 electrical period."""
    t0, t1 = window
    f1 = estimate_fundamental_hz(trace, t0, t1)
    if (t1 - t0) * f1 < 1.0:
        raise InsufficientData("window covers less than one period")
    _, pa, pb = _window_arrays(trace, t0, t1, ("psis_alpha", "psis_beta"))
    return np.hypot(pa, pb)


def flux_locus_circularity(trace: Trace, window: tuple[float, float]
                           ) -> float:
    """max/min radius ratio of the stator-flux locus (1 = perfect circle)."""
    r = flux_locus_radii(trace, window)
    rmin = float(r.min())
    if rmin <= 0.0:
        raise InsufficientData("flux locus collapses to the origin")
    return float(r.max()) / rmin


@dataclass(frozen=True)
class NegativeSequenceReport:
    prefault: WindowSequenceSummary
    postfault: WindowSequenceSummary
    isolated_leg: str | None
    remaining_phase_ratio: float | None
    without_strategy: WindowSequenceSummary | None = None
    improvement_ratio: float | None = None

    def to_dict(self) -> dict:
        return {
            "prefault": self.prefault.to_dict(),
            "postfault": self.postfault.to_dict(),
            "isolated_leg": self.isolated_leg,
            "remaining_phase_ratio": self.remaining_phase_ratio,
            "without_strategy": (None if self.without_strategy is None
                                 else self.without_strategy.to_dict()),
            "improvement_ratio": self.improvement_ratio,
        }


def _isolated_leg_from_mode(trace: Trace, t0: float, t1: float) -> str | None:
    for t, mode in zip(trace["t"], trace["mode"]):
        if t0 <= t <= t1 and mode.startswith("postfault:"):
            return mode.split(":", 1)[1]
    return None


def negative_sequence_report(trace: Trace,
                             prefault: tuple[float, float],
                             postfault: tuple[float, float],
                             no_strategy_trace: Trace | None = None,
                             no_strategy_window: tuple[float, float]
                             | None = None,
                             samples_per_period: int = 64
                             ) -> NegativeSequenceReport:
    """Pre/post sequence summary, remaining-phase current ratio, and the
    improvement over an uncompensated run when one is supplied.

    The no-strategy trace is analyzed over no_strategy_window (default:
    the postfault window) at the fundamental estimated from its own
    prefault window. An unreconfigured drive cannot in general sustain
    rotation, so its own window rarely defines a fundamental; the healthy
    prefault frequency is the reference the unbalance is measured at.
    """
    pre = window_sequence_summary(trace, *prefault,
                                  samples_per_period=samples_per_period)
    post = window_sequence_summary(trace, *postfault,
                                   samples_per_period=samples_per_period)
    leg = _isolated_leg_from_mode(trace, *postfault)
    ratio = None
    if leg is not None:
        remaining = [x for x in "abc" if x != leg]
        pairs = [(getattr(post, f"amp_{x}"), getattr(pre, f"amp_{x}"))
                 for x in remaining]
        if all(p > 0.0 for _, p in pairs):
            ratio = sum(a / p for a, p in pairs) / len(pairs)
    without = improvement = None
    if no_strategy_trace is not None:
        f1_ref = estimate_fundamental_hz(no_strategy_trace, *prefault)
        without = window_sequence_summary(
            no_strategy_trace,
            *(no_strategy_window if no_strategy_window is not None
              else postfault),
            f1=f1_ref, samples_per_period=samples_per_period)
        if post.neg_mag > 0.0:
            improvement = without.neg_mag / post.neg_mag
    return NegativeSequenceReport(prefault=pre, postfault=post,
                                  isolated_leg=leg,
                                  remaining_phase_ratio=ratio,
                                  without_strategy=without,
                                  improvement_ratio=improvement)
