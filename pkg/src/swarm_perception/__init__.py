"""Collective perception for swarms of robots with imperfect binary sensors."""
from .estimation import (
    EstimatePair,
    ObservationTally,
    SensorAccuracy,
    fuse_social,
    informed_estimate,
    local_confidence,
    local_estimate,
    reading_probability,
    sample_reading,
)
from .metrics import TrialRecord, aggregate, consensus_fraction, convergence_round, decide_bin
from .topology import TopologyGraph
from .static import StaticTrialConfig, run_static_trial
from .dynamic import ArenaConfig, run_dynamic_trial
from .runner import SweepSpec, load_config, run_sweep, analyze

__version__ = "0.1.0"
