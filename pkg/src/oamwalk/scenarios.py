"""Scenario registry and the batch runner that writes result tables."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

from .coins import initial_coin_state
from .config import (
    CavitySettings,
    CoinConfig,
    OutputSettings,
    ScenarioConfig,
    SorterDesignConfig,
    SorterSettings,
    output_root,
)
from .emit import emit_spectrum_csv, write_table_csv
from .models import QPlateSpec, StepSeries, WalkerState
from .optics import superposition_mode
from .resonator import convolve_steps, deconvolve_series
from .sorter import (
    bin_spectrum,
    crosstalk_matrix,
    default_waist,
    design_grid,
    similarity,
    sorter_pipeline,
    spot_law_fit,
    weighting_spectrum,
)
from .walk import (
    classical_rw_distribution,
    evolve,
    lobe_weights,
    nonseparability,
    probabilities,
    variance,
)

logger = logging.getLogger(__name__)

ScenarioFactory = Callable[[], ScenarioConfig]
SCENARIOS: Dict[str, ScenarioFactory] = {}


def register(name: str) -> Callable[[ScenarioFactory], ScenarioFactory]:
    def decorator(factory: ScenarioFactory) -> ScenarioFactory:
        SCENARIOS[name] = factory
        return factory
    return decorator


def list_scenarios() -> List[str]:
    return sorted(SCENARIOS)


def default_config(name: str) -> ScenarioConfig:
    """Default configuration of a registered scenario.

    Raises:
        KeyError: If no scenario of that name is registered
    """
    return SCENARIOS[name]()


@dataclass
class ScenarioResult:
    """Outcome of one run: where it wrote and what it measured."""
    scenario: str
    directory: Path
    files: List[Path] = field(default_factory=list)
    summary: List[Dict[str, object]] = field(default_factory=list)


QWP45 = CoinConfig(kind="quarter", theta=45.0)


@register("hadamard-symmetric")
def _hadamard_symmetric() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="hadamard-symmetric",
        description="Hadamard coin (QWP at 45 deg) with diagonal input",
        coins=[QWP45], initial_hwp=67.5, steps=8,
    )


@register("hadamard-asymmetric")
def _hadamard_asymmetric() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="hadamard-asymmetric",
        description="Hadamard coin with horizontal input; left-weighted spreading",
        coins=[QWP45], initial_hwp=45.0, steps=5,
    )


@register("qwp-sweep")
def _qwp_sweep() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="qwp-sweep",
        description="Quarter-wave coin at 45, 90 and 135 deg with horizontal input",
        coins=[CoinConfig(kind="quarter", theta=t) for t in (45.0, 90.0, 135.0)],
        initial_hwp=45.0, steps=4,
    )


@register("identity-coin")
def _identity_coin() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="identity-coin",
        description="Half-wave plate at 0 deg: ballistic ladder to +-n",
        coins=[CoinConfig(kind="half", theta=0.0)], initial_hwp=67.5, steps=10,
    )


@register("not-coin")
def _not_coin() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="not-coin",
        description="Bare q-plate: walker oscillates between l = 0 and +-1",
        coins=[CoinConfig(kind="none")], initial_hwp=67.5, steps=5,
    )


@register("overlap-correction")
def _overlap_correction() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="overlap-correction",
        description="Symmetric Hadamard walk through the gated cavity readout and its correction",
        coins=[QWP45], initial_hwp=67.5, steps=7, cavity=CavitySettings(),
    )


@register("traditional-walk")
def _traditional_walk() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="traditional-walk",
        description=(
            "100-step Hadamard walk from diagonal and horizontal input against the "
            "classical random walk"
        ),
        coins=[QWP45], initial_hwp=67.5, extra_hwp=[45.0], steps=100,
        output=OutputSettings(convolved=False, deconvolved=False),
    )


@register("sorter-crosstalk")
def _sorter_crosstalk() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="sorter-crosstalk",
        description="Cross-talk of the 1-copy and 3-copy diffractive sorters over l = -7..7",
        mode="crosstalk",
        sorter=SorterSettings(
            designs=[SorterDesignConfig.from_preset("diffractive-1"),
                     SorterDesignConfig.from_preset("diffractive-3")],
            grid=1024, lrange=(-7, 7),
        ),
    )


@register("sorter-positions")
def _sorter_positions() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="sorter-positions",
        description="Spot centroid against OAM for the three sorter designs",
        mode="positions",
        sorter=SorterSettings(
            designs=[SorterDesignConfig.from_preset(n)
                     for n in ("refractive", "diffractive-1", "diffractive-3")],
            grid=1024, lrange=(-5, 5),
        ),
    )


@register("sorter-weighting")
def _sorter_weighting() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="sorter-weighting",
        description="Multiplexed OAM superposition detected by the 3-copy sorter",
        mode="weighting",
        sorter=SorterSettings(
            designs=[SorterDesignConfig.from_preset("diffractive-3")],
            grid=1024, lrange=(-5, 5),
            superposition={-2: 1.0, 1: 0.8, 3: 0.6},
        ),
    )


def _spectrum_files(series: StepSeries, directory: Path, prefix: str) -> List[Path]:
    return [
        emit_spectrum_csv(spec, directory / f"{prefix}_step_{n:03d}.csv")
        for n, spec in enumerate(series)
    ]


def _run_walk(cfg: ScenarioConfig, coin: CoinConfig, hwp: float, directory: Path,
              result: ScenarioResult) -> None:
    plate = coin.to_plate()
    initial = WalkerState.localized(0, initial_coin_state(hwp))
    states = evolve(initial, plate, QPlateSpec(cfg.q), cfg.steps, cfg.bounds)
    ideal = StepSeries.from_sequence([probabilities(s) for s in states])
    if cfg.output.ideal:
        result.files += _spectrum_files(ideal, directory, "ideal")

    convolved: Optional[StepSeries] = None
    deconvolved: Optional[StepSeries] = None
    if cfg.cavity is not None:
        cavity = cfg.cavity.to_model()
        convolved = convolve_steps(ideal, cavity)
        deconvolved = deconvolve_series(convolved, cavity)
        if cfg.output.convolved:
            result.files += _spectrum_files(convolved, directory, "convolved")
        if cfg.output.deconvolved:
            result.files += _spectrum_files(deconvolved, directory, "deconvolved")

    header = ["step", "variance", "classical_variance", "nonseparability",
              "left_lobe", "right_lobe"]
    if convolved is not None:
        header += ["convolved_variance", "convolved_similarity",
                   "deconvolved_variance", "deconvolved_similarity"]
    rows = []
    for n, (state, spec) in enumerate(zip(states, ideal)):
        left, right = lobe_weights(spec, n)
        row = [n, variance(spec), variance(classical_rw_distribution(n)),
               nonseparability(state), left, right]
        if convolved is not None and deconvolved is not None:
            row += [variance(convolved[n]), similarity(convolved[n], spec),
                    variance(deconvolved[n]), similarity(deconvolved[n], spec)]
        rows.append(row)
        result.summary.append({"coin": coin.label, "input_hwp": hwp, **dict(zip(header, row))})
    result.files.append(write_table_csv(directory / "summary.csv", header, rows))
    logger.info(
        f"Walk {cfg.scenario}/{coin.label} from HWP {hwp:g}: {cfg.steps} steps, "
        f"final variance={rows[-1][1]:.4f}"
    )


def _sorter_designs(cfg: ScenarioConfig):
    settings = cfg.sorter
    for design_cfg in settings.designs:
        design = design_cfg.to_design()
        yield design, design_grid(design, settings.grid, settings.oversample)


def _run_crosstalk(cfg: ScenarioConfig, directory: Path, result: ScenarioResult) -> None:
    settings = cfg.sorter
    summary = []
    for design, sampling in _sorter_designs(cfg):
        matrix = crosstalk_matrix(design, settings.lrange, sampling, workers=settings.workers)
        header = ["input_l"] + [f"detected_{l}" for l in matrix.modes]
        rows = [[int(l)] + list(matrix.entries[i]) for i, l in enumerate(matrix.modes)]
        result.files.append(
            write_table_csv(directory / f"crosstalk_{design.name}.csv", header, rows)
        )
        diag = matrix.diagonal()
        summary.append([design.name, design.copies, float(diag.mean()), float(diag.min()),
                        matrix.mean_leakage()])
    header = ["design", "copies", "mean_diagonal", "min_diagonal", "mean_leakage"]
    result.files.append(write_table_csv(directory / "summary.csv", header, summary))
    result.summary += [dict(zip(header, row)) for row in summary]


def _run_positions(cfg: ScenarioConfig, directory: Path, result: ScenarioResult) -> None:
    settings = cfg.sorter
    summary = []
    for design, sampling in _sorter_designs(cfg):
        fit = spot_law_fit(design, settings.lrange, sampling)
        rows = [[l, t, l * fit.expected_slope] for l, t in zip(fit.modes, fit.centroids)]
        result.files.append(write_table_csv(
            directory / f"positions_{design.name}.csv", ["l", "centroid_m", "design_m"], rows
        ))
        summary.append([design.name, fit.slope, fit.expected_slope, fit.slope_error, fit.r_squared])
    header = ["design", "slope_m", "expected_slope_m", "slope_error", "r_squared"]
    result.files.append(write_table_csv(directory / "summary.csv", header, summary))
    result.summary += [dict(zip(header, row)) for row in summary]


def _run_weighting(cfg: ScenarioConfig, directory: Path, result: ScenarioResult) -> None:
    settings = cfg.sorter
    expected = weighting_spectrum(settings.superposition, settings.lrange)
    summary = []
    for design, sampling in _sorter_designs(cfg):
        source = superposition_mode(sampling, settings.superposition, default_waist(sampling))
        measured = bin_spectrum(sorter_pipeline(source, design), design, settings.lrange)
        rows = [[int(l), m, e]
                for l, m, e in zip(measured.sites, measured.weights, expected.weights)]
        result.files.append(write_table_csv(
            directory / f"weighting_{design.name}.csv", ["l", "measured", "expected"], rows
        ))
        summary.append([design.name, similarity(measured, expected)])
    header = ["design", "similarity"]
    result.files.append(write_table_csv(directory / "summary.csv", header, summary))
    result.summary += [dict(zip(header, row)) for row in summary]


def run_scenario(cfg: ScenarioConfig, output_dir: Optional[Path] = None) -> ScenarioResult:
    """Run one scenario and write its tables under <output>/<scenario>/.

    Output depends only on the configuration, so repeated runs write identical bytes.
    """
    root = Path(output_dir) if output_dir is not None else output_root(cfg)
    directory = root / cfg.scenario
    result = ScenarioResult(cfg.scenario, directory)
    logger.info(f"Running scenario {cfg.scenario} (mode={cfg.mode}) into {directory}")
    if cfg.mode == "walk":
        angles = [cfg.initial_hwp, *cfg.extra_hwp]
        for coin in cfg.coins:
            target = directory / coin.label if len(cfg.coins) > 1 else directory
            for hwp in angles:
                subdir = target / f"hwp{hwp:g}" if len(angles) > 1 else target
                _run_walk(cfg, coin, hwp, subdir, result)
    elif cfg.mode == "crosstalk":
        _run_crosstalk(cfg, directory, result)
    elif cfg.mode == "positions":
        _run_positions(cfg, directory, result)
    else:
        _run_weighting(cfg, directory, result)
    logger.info(f"Scenario {cfg.scenario} wrote {len(result.files)} file(s)")
    return result
