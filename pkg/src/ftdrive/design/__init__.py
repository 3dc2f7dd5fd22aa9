"""Offline design calculators.

loopshape: integral-double-lead controller synthesis and loop-gain margins.
fuse: analytic short-circuit current and Joule-integral fuse sizing.
ratings: normalized overrating factor comparison of converter topologies.
"""

from .loopshape import (ControllerComponents, InfeasibleDesign,
                        LoopGainParams, MarginReport, NoCrossover,
                        RationalTransferFunction, controller_tf, loop_gain,
                        margins, synthesize_components)
from .fuse import (DomainError, FuseDesignParams, NoFeasibleFuse,
                   UnsupportedRegime, WithstandCurve, blow_time,
                   fault_current, fuse_params_from_circuit_literal,
                   joule_integral, nominal_melt_energy, select_fuse)
from .ratings import (DeviceRating, DeviceRatingSheet, nof,
                      read_rating_sheet, six_switch_baseline,
                      write_rating_sheet)

__all__ = [
    "ControllerComponents", "InfeasibleDesign", "LoopGainParams",
    "MarginReport", "NoCrossover", "RationalTransferFunction",
    "controller_tf", "loop_gain", "margins", "synthesize_components",
    "DomainError", "FuseDesignParams", "NoFeasibleFuse", "UnsupportedRegime",
    "WithstandCurve", "blow_time", "fault_current",
    "fuse_params_from_circuit_literal", "joule_integral",
    "nominal_melt_energy", "select_fuse",
    "DeviceRating", "DeviceRatingSheet", "nof", "read_rating_sheet",
    "six_switch_baseline", "write_rating_sheet",
]
