"""oamwalk - OAM quantum walk in a q-plate ring resonator and its mode-sorter readout."""

from .coins import compose, hadamard, initial_coin_state, qwp_operator, hwp_operator
from .config import ScenarioConfig, load_config, parse_config
from .exceptions import OamWalkError
from .models import CoinOperator, QPlateSpec, Spectrum, StepSeries, WalkerState, WaveplateSpec
from .resonator import CavityConfig, PulseModel, convolve_steps, deconvolve_series
from .scenarios import list_scenarios, run_scenario
from .sorter import SorterDesign, crosstalk_matrix, preset, similarity, sorter_pipeline
from .testing import WalkFixtures
from .walk import evolve, probabilities, step

__version__ = "0.1.0"

__all__ = [
    "CavityConfig",
    "CoinOperator",
    "OamWalkError",
    "PulseModel",
    "QPlateSpec",
    "ScenarioConfig",
    "SorterDesign",
    "Spectrum",
    "StepSeries",
    "WalkFixtures",
    "WalkerState",
    "WaveplateSpec",
    "compose",
    "convolve_steps",
    "crosstalk_matrix",
    "deconvolve_series",
    "evolve",
    "hadamard",
    "hwp_operator",
    "initial_coin_state",
    "list_scenarios",
    "load_config",
    "parse_config",
    "preset",
    "probabilities",
    "qwp_operator",
    "run_scenario",
    "similarity",
    "sorter_pipeline",
    "step",
]
