"""Fault-tolerant converter-fed induction motor drive toolkit.

Simulation: a deterministic fixed-step model of a split-link two-level
inverter driving an induction machine under predictive torque/flux
control, with switch fault injection, detection, isolation and
postfault reconfiguration (`run_scenario`, `presets`).

Design: loop-gain margins for the link balancer (`design.loopshape`),
Joule-integral fuse sizing (`design.fuse`) and installed-silicon
comparison of converter topologies (`design.ratings`).

Analysis: fundamental phasors, symmetrical components and flux-locus
circularity over trace windows (`analysis`).
"""

from . import analysis, design, presets
from .converter import (DcdcBalancerConfig, DcLinkState, FuseElement,
                        InvalidConfiguration, SwitchingState, clarke,
                        inverse_clarke, voltage_vector_table)
from .faults import (DetectorWindow, DriveMode, FaultEvent, FaultSupervisor,
                     classify_open_switch, normalized_dc_current)
from .harness import SimulationAborted, run_scenario
from .machine import (DerivedParams, IntegrationDiverged, MachineParams,
                      derive_params, integrate_step, reference_params)
from .mpc import EstimatorState, MpcConfig, PiConfig, select_vector
from .scenario import (AnalysisWindows, DcLinkConfig, DetectorConfig,
                       FuseConfig, NoiseConfig, Profile, Scenario,
                       ScenarioError, SimConfig, load_scenario,
                       save_scenario, scenario_from_dict, scenario_to_dict)
from .trace import Trace, TraceFormatError, read_trace

__version__ = "0.1.0"

__all__ = [
    "AnalysisWindows",
    "DcdcBalancerConfig",
    "DcLinkConfig",
    "DcLinkState",
    "DerivedParams",
    "DetectorConfig",
    "DetectorWindow",
    "DriveMode",
    "EstimatorState",
    "FaultEvent",
    "FaultSupervisor",
    "FuseConfig",
    "FuseElement",
    "IntegrationDiverged",
    "InvalidConfiguration",
    "MachineParams",
    "MpcConfig",
    "NoiseConfig",
    "PiConfig",
    "Profile",
    "Scenario",
    "ScenarioError",
    "SimConfig",
    "SimulationAborted",
    "SwitchingState",
    "Trace",
    "TraceFormatError",
    "analysis",
    "clarke",
    "classify_open_switch",
    "derive_params",
    "design",
    "integrate_step",
    "inverse_clarke",
    "load_scenario",
    "normalized_dc_current",
    "presets",
    "read_trace",
    "reference_params",
    "run_scenario",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "select_vector",
    "voltage_vector_table",
]
