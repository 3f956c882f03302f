"""Self-check suite behind ``oamwalk verify``.

Each check returns a CheckResult; a check that raises is reported as failed
rather than aborting the run.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .coins import (
    balanced,
    coin_theta,
    compose,
    equal_up_to_global_phase,
    global_phase,
    hadamard,
    hwp_operator,
    identity_coin,
    not_coin,
    qwp_operator,
    waveplate_operator,
)
from .exceptions import OamWalkError
from .models import UNITARY_TOL, QPlateSpec, Spectrum, StepSeries, WaveplateSpec, unitarity_error
from .resonator import (
    CavityConfig,
    PulseModel,
    bs_weight,
    convolve_steps,
    deconvolve_weights,
    fwhm,
    fwtm,
    window_bounds,
    window_integral,
    window_integral_quad,
)
from .optics import oam_mode
from .sorter import (
    crosstalk_matrix,
    default_waist,
    design_grid,
    preset,
    similarity,
    sorter_pipeline,
)
from .testing import ORACLE_COINS, WalkFixtures, dense_evolve
from .walk import (
    classical_rw_distribution,
    evolve,
    lobe_weights,
    probabilities,
    variance,
)

logger = logging.getLogger(__name__)

QWP45 = WaveplateSpec("quarter", 45.0)
HALF = QPlateSpec(0.5)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_unitarity() -> CheckResult:
    coins = [hadamard(), balanced(), not_coin(), identity_coin()]
    coins += [qwp_operator(t) for t in range(0, 180, 15)]
    coins += [hwp_operator(t) for t in range(0, 180, 15)]
    coins += [coin_theta(t) for t in range(0, 360, 30)]
    worst = max(unitarity_error(c.matrix) for c in coins)
    return CheckResult("unitarity", worst < UNITARY_TOL, f"max|U^dag U - I| = {worst:.2e}")


def check_operator_identities() -> CheckResult:
    q45 = qwp_operator(45.0)
    pairs = [
        (q45, compose([not_coin(), hadamard()])),
        (hwp_operator(0.0), compose([not_coin(), identity_coin()])),
    ]
    for theta in (0.0, 45.0, 90.0, 135.0, 180.0):
        sandwich = compose([q45, hwp_operator(theta / 4.0), q45])
        pairs.append((sandwich, compose([not_coin(), coin_theta(theta)])))
    failed = [f"{a.name}~{b.name}" for a, b in pairs if not equal_up_to_global_phase(a, b)]
    detail = f"{len(pairs)} identities; failed: {failed or 'none'}"
    return CheckResult("operator identities", not failed, detail)


def check_oracle(max_steps: int = 8) -> CheckResult:
    worst = 0.0
    for name, (factory, plate) in ORACLE_COINS.items():
        coin = factory()
        lam = global_phase(waveplate_operator(plate), compose([not_coin(), coin]))
        initial = WalkFixtures.symmetric(-max_steps, max_steps)
        states = evolve(initial, plate, HALF, max_steps, bounds=(-max_steps, max_steps))
        for n, state in enumerate(states):
            expected = lam ** n * dense_evolve(initial, coin, n)
            worst = max(worst, float(np.max(np.abs(state.amps - expected))))
    detail = f"max amplitude error {worst:.2e} over n <= {max_steps}"
    return CheckResult("dense oracle", worst < 1e-12, detail)


def check_norm_and_parity() -> CheckResult:
    states = evolve(WalkFixtures.symmetric(), QWP45, HALF, 100)
    norm_err = max(abs(s.norm() - 1.0) for s in states)
    parity = 0.0
    for n, s in enumerate(states):
        spec = probabilities(s)
        off = spec.weights[(spec.sites + n) % 2 == 1]
        parity = max(parity, float(np.max(off, initial=0.0)))
    ok = norm_err < 1e-10 and parity == 0.0
    detail = f"norm error {norm_err:.2e}, off-parity weight {parity:.1e}"
    return CheckResult("norm and parity", ok, detail)


def check_not_and_identity() -> CheckResult:
    initial = WalkFixtures.symmetric(-100, 100)
    states = evolve(initial, None, HALF, 100, bounds=(-100, 100))
    periodic = max(
        float(np.max(np.abs(s.amps - _phase_against(s, initial) * initial.amps)))
        for s in states[::2]
    )
    ladder = evolve(WalkFixtures.symmetric(), WaveplateSpec("half", 0.0), HALF, 10)
    support_ok = all(set(s.support()) <= {-n, n} for n, s in enumerate(ladder))
    ok = periodic < 1e-12 and support_ok
    detail = f"period error {periodic:.1e}, support ok={support_ok}"
    return CheckResult("NOT periodicity / identity ladder", ok, detail)


def _phase_against(state, reference) -> complex:
    idx = np.unravel_index(np.argmax(np.abs(reference.amps)), reference.amps.shape)
    ratio = state.amps[idx] / reference.amps[idx]
    return ratio / abs(ratio) if ratio != 0 else 1.0


def check_spreading() -> CheckResult:
    quantum = probabilities(evolve(WalkFixtures.symmetric(), QWP45, HALF, 100)[-1])
    half = probabilities(evolve(WalkFixtures.symmetric(), QWP45, HALF, 50)[-1])
    ratio = variance(quantum) / variance(classical_rw_distribution(100))
    scaled_half = variance(half) / 50 ** 2
    drift = abs(variance(quantum) / 100 ** 2 - scaled_half) / scaled_half
    peak = quantum.weights.max() > quantum.at(0)
    ok = ratio > 10 and drift < 0.2 and peak
    detail = f"variance ratio {ratio:.1f}, n^2 drift {drift:.3f}"
    return CheckResult("ballistic spreading", ok, detail)


def check_asymmetry() -> CheckResult:
    spec = probabilities(evolve(WalkFixtures.horizontal(), QWP45, HALF, 5)[-1])
    left, right = lobe_weights(spec, 5)
    ratio = left / right
    detail = f"left/right lobe ratio {ratio:.3f}"
    return CheckResult("asymmetric Hadamard", 2.5 <= ratio <= 3.5, detail)


def check_pulse() -> CheckResult:
    p = PulseModel()
    cfg = CavityConfig()
    w_sum = sum(bs_weight(CavityConfig(transmission=0.5), n) for n in range(200))
    quad_err = max(
        abs(window_integral(p, lo, hi) - window_integral_quad(p, lo, hi))
        for lo, hi in window_bounds(cfg).values()
    )
    shape = abs(fwtm(p) / fwhm(p) - np.sqrt(np.log(10.0) / np.log(2.0)))
    ok = (abs(fwhm(p) - 14.3) < 0.1 and shape < 1e-12
          and abs(w_sum - 1.0) < 1e-9 and quad_err < 1e-9)
    return CheckResult(
        "pulse model",
        ok,
        f"FWHM {fwhm(p):.2f} ns, FWTM {fwtm(p):.2f} ns, "
        f"sum w {w_sum:.12f}, erf/quad {quad_err:.1e}",
    )


def check_overlap_round_trip() -> CheckResult:
    states = evolve(WalkFixtures.symmetric(), QWP45, HALF, 8)
    ideal = StepSeries.from_sequence([probabilities(s) for s in states])
    cfg = CavityConfig()
    measured = convolve_steps(ideal, cfg)
    worst = max(
        float(np.max(np.abs(
            deconvolve_weights(measured, cfg, n) - ideal[n].weights
        )))
        for n in range(len(ideal))
    )
    odd = measured[5]
    even_weight = float(np.sum(odd.weights[(odd.sites % 2) == 0]))
    ok = worst < 1e-9 and even_weight > 0
    detail = f"max error {worst:.1e}, step-5 even-l weight {even_weight:.3f}"
    return CheckResult("overlap round trip", ok, detail)


def check_similarity() -> CheckResult:
    w = Spectrum.from_mapping({-1: 0.2, 0: 0.5, 1: 0.3})
    cases = [
        similarity(w, w) == 1.0,
        similarity(Spectrum.from_mapping({0: 1.0, 1: 0.0}),
                   Spectrum.from_mapping({0: 0.0, 1: 1.0})) == 0.0,
        abs(similarity(Spectrum.from_mapping({0: 0.5, 1: 0.5, 2: 0.0}),
                       Spectrum.from_mapping({0: 1.0, 1: 0.0, 2: 0.0})) - 0.5) < 1e-12,
    ]
    return CheckResult("similarity", all(cases), f"{sum(cases)}/{len(cases)} cases")


def check_sorter_energy(grid: int = 256) -> CheckResult:
    design = preset("diffractive-3")
    sampling = design_grid(design, grid)
    source = oam_mode(sampling, 2, default_waist(sampling))
    detected = sorter_pipeline(source, design)
    err = abs(detected.power() - source.power())
    return CheckResult("sorter energy", err < 1e-6, f"power change {err:.1e}")


def check_copy_benefit(grid: int = 512) -> CheckResult:
    leak = {}
    for name in ("diffractive-1", "diffractive-3"):
        design = preset(name)
        matrix = crosstalk_matrix(design, (-7, 7), design_grid(design, grid))
        leak[name] = matrix.mean_leakage()
    ok = leak["diffractive-3"] < leak["diffractive-1"]
    detail = ", ".join(f"{k} leakage {v:.3f}" for k, v in leak.items())
    return CheckResult("copy-count benefit", ok, detail)


QUICK_CHECKS: List[Callable[[], CheckResult]] = [
    check_unitarity,
    check_operator_identities,
    check_oracle,
    check_norm_and_parity,
    check_not_and_identity,
    check_spreading,
    check_asymmetry,
    check_pulse,
    check_overlap_round_trip,
    check_similarity,
]
SORTER_CHECKS: List[Callable[[], CheckResult]] = [check_sorter_energy, check_copy_benefit]


def run_checks(quick: bool = False) -> List[CheckResult]:
    checks = QUICK_CHECKS if quick else QUICK_CHECKS + SORTER_CHECKS
    results = []
    for check in checks:
        try:
            result = check()
        except OamWalkError as e:
            logger.debug(f"{check.__name__} raised: {e.log_details}")
            name = check.__name__.removeprefix("check_")
            result = CheckResult(name, False, f"error: {e.message}")
        logger.debug(f"{result.name}: passed={result.passed} {result.detail}")
        results.append(result)
    return results
