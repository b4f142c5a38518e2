"""Seeded Monte Carlo simulation of finite-statistics Bell tests.

Sources: the exact singlet sampler, a white-noise-degraded singlet
(correlations scaled by gamma), or an explicit finite hidden-variable model.
Detection is a single joint Bernoulli(eta) draw per trial under fair
sampling, or the model's own detection sets otherwise.

Reproducibility contract: every random stream is derived from the spec's
master seed with a SplitMix64-style mixing function, one stream per
(pair or sweep cell), so results are independent of execution order and
identical specs give bit-identical results.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import bounds
from .core import (
    LABELS,
    HiddenVariableModel,
    MeasurementSetting,
    NoiseParameters,
    SettingTriple,
    TrialRecord,
    validate_model,
)
from .lhv import STATISTIC_PATTERNS
from .quantum import chsh_statistic, sample_correlated_outcomes

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    """SplitMix64 finalizer."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(master: int, *counters: int) -> int:
    """Fold counters into a master seed; the documented stream-split rule."""
    h = master & _MASK64
    for c in counters:
        h = _mix64((h + _GOLDEN + (c & _MASK64)) & _MASK64)
    return h


def _float_bits(x: float) -> int:
    return int(np.float64(x).view(np.uint64))


SOURCES = ("quantum", "quantum_white_noise", "lhv")


@dataclass(frozen=True)
class ExperimentSpec:
    """Full description of one simulated Bell test run."""

    source: str
    settings: SettingTriple | tuple[MeasurementSetting, ...]
    trials_per_pair: int
    seed: int
    eta: float = 1.0
    gamma: float = 1.0
    fair_sampling: bool = True
    model: HiddenVariableModel | None = None
    statistic: str = "ob"  # "ob" or "chsh"
    pattern: str = "e7"  # pair pattern for the "ob" statistic

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.trials_per_pair < 1:
            raise ValueError("trials_per_pair must be >= 1")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta!r}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        if self.statistic not in ("ob", "chsh"):
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if self.statistic == "ob":
            if self.pattern not in STATISTIC_PATTERNS:
                raise ValueError(f"unknown pattern {self.pattern!r}")
            if not isinstance(self.settings, SettingTriple):
                raise ValueError("the ob statistic needs a SettingTriple")
        else:
            if self.source == "lhv":
                raise ValueError("chsh statistic requires a quantum-family source")
            if not (isinstance(self.settings, tuple) and len(self.settings) == 4):
                raise ValueError("the chsh statistic needs 4 settings (a, a', b, b')")
        if self.source == "lhv":
            if self.model is None:
                raise ValueError("lhv source requires a model")
            violations = validate_model(self.model)
            if violations:
                raise ValueError("invalid model: " + "; ".join(violations))
        elif not self.fair_sampling:
            raise ValueError(
                "non-fair sampling requires an lhv source: a quantum source has "
                "no hidden variable for detection to condition on"
            )


@dataclass(frozen=True)
class PairEstimate:
    pair: tuple[str, str]
    correlation: float
    n_detected: int
    std_error: float


@dataclass(frozen=True)
class ExperimentResult:
    pairs: tuple[PairEstimate, ...]
    statistic: float
    statistic_se: float
    bound_used: float
    violation_sigma: float


def detection_censor(
    record: TrialRecord, eta: float, rng: np.random.Generator, fair_sampling: bool = True
) -> TrialRecord:
    """Redraw a trial's detection flag as an independent Bernoulli(eta).

    Only the fair-sampling path is available here: a bare trial record
    carries no hidden variable, so model-driven (non-fair) detection can only
    be applied inside run_experiment where the atom is known.
    """
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta!r}")
    if not fair_sampling:
        raise ValueError(
            "non-fair detection censoring needs the hidden variable; "
            "only run_experiment with an lhv source supports it"
        )
    detected = True if eta >= 1.0 else bool(rng.random() < eta)
    return replace(record, detected=detected)


def _experiment_pairs(spec: ExperimentSpec):
    """(label pair, Alice setting, Bob setting) per measured pair."""
    if spec.statistic == "ob":
        t = spec.settings
        return [((s, u), t.get(s), t.get(u)) for s, u in STATISTIC_PATTERNS[spec.pattern]]
    a, a2, b, b2 = spec.settings
    return [(("a", "b"), a, b), (("a", "b2"), a, b2), (("a2", "b"), a2, b), (("a2", "b2"), a2, b2)]


def _simulate_pair(spec: ExperimentSpec, pair, alice, bob, rng):
    """One pair's outcome products and detection flags.

    RNG consumption order (part of the determinism contract): outcomes (or
    atom draws) first, then detection flags.
    """
    n = spec.trials_per_pair
    if spec.source in ("quantum", "quantum_white_noise"):
        scale = spec.gamma if spec.source == "quantum_white_noise" else 1.0
        rho = scale * -alice.dot(bob)
        alpha, beta = sample_correlated_outcomes(rho, rng, n)
        products = (alpha * beta).astype(np.int8)
        detected = rng.random(n) < spec.eta if spec.eta < 1.0 else np.ones(n, dtype=bool)
        return products, detected

    m = spec.model
    s, t = pair
    weights = np.array([float(w) for w in m.weights], dtype=np.float64)
    weights = weights / weights.sum()
    atoms = rng.choice(m.n_atoms, size=n, p=weights)
    a_vals = np.array([strat.a_out[s] for strat in m.strategy_at], dtype=np.int8)
    b_vals = np.array([strat.b_out[t] for strat in m.strategy_at], dtype=np.int8)
    products = a_vals[atoms] * b_vals[atoms]
    if spec.fair_sampling:
        detected = rng.random(n) < spec.eta if spec.eta < 1.0 else np.ones(n, dtype=bool)
    else:
        flags = np.array([flag[s + t] for flag in m.detect_flag], dtype=bool)
        detected = flags[atoms]
    return products, detected


def _model_noise(spec: ExperimentSpec) -> NoiseParameters:
    """Noise parameters that pick the applicable classical bound."""
    if spec.source == "quantum":
        eps = 0.0
    elif spec.source == "quantum_white_noise":
        eps = 1.0 - spec.gamma
    else:
        m = spec.model
        eps = max(
            sum(float(w) for w, flag in zip(m.weights, m.anticorr_flag) if not flag[s])
            for s in LABELS
        )
    if spec.source == "lhv" and not spec.fair_sampling:
        eta = sum(float(w) for w, d in zip(spec.model.weights, spec.model.detect_flag) if d["ab"])
    else:
        eta = spec.eta
    return NoiseParameters(epsilon=min(max(eps, 0.0), 1.0), eta=eta)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Simulate all pairs, estimate conditional correlations, and compare the
    statistic against the applicable classical bound.

    Per-pair estimate: mean outcome product over detected trials; standard
    error sqrt((1 - rho^2) / n_detected), the plug-in variance of a +-1
    product. The statistic's standard error adds the per-pair errors in
    quadrature.
    """
    estimates = []
    for index, (pair, alice, bob) in enumerate(_experiment_pairs(spec)):
        rng = np.random.default_rng(derive_seed(spec.seed, index))
        products, detected = _simulate_pair(spec, pair, alice, bob, rng)
        kept = products[detected]
        if kept.size == 0:
            raise RuntimeError(f"pair {pair}: no detected trials, cannot estimate")
        rho = float(np.mean(kept, dtype=np.float64))
        se = math.sqrt(max(1.0 - rho * rho, 0.0) / kept.size)
        estimates.append(
            PairEstimate(pair=pair, correlation=rho, n_detected=int(kept.size), std_error=se)
        )

    if spec.statistic == "ob":
        p1, p2, p3 = (e.correlation for e in estimates)
        stat = abs(p1 - p2) - p3
        bound = bounds.theorem4_bound(_model_noise(spec))
    else:
        stat = chsh_statistic(*(e.correlation for e in estimates))
        bound = bounds.chsh_bounds().classical_bound
    se = math.sqrt(sum(e.std_error**2 for e in estimates))
    if se > 0:
        sigma = (stat - bound) / se
    else:
        sigma = 0.0 if stat == bound else math.copysign(math.inf, stat - bound)
    return ExperimentResult(
        pairs=tuple(estimates),
        statistic=stat,
        statistic_se=se,
        bound_used=bound,
        violation_sigma=sigma,
    )


@dataclass(frozen=True)
class SweepCell:
    gamma: float
    eta: float
    result: ExperimentResult | None
    error: str | None


def cell_seed(master: int, gamma: float, eta: float) -> int:
    """Per-cell seed from the master seed and the cell's (gamma, eta) values
    (their IEEE-754 bit patterns), so cell order never matters."""
    return derive_seed(master, _float_bits(gamma), _float_bits(eta))


def sweep(
    template: ExperimentSpec,
    gamma_values: Sequence[float],
    eta_values: Sequence[float],
    threads: int = 1,
) -> list[SweepCell]:
    """Run one experiment per (gamma, eta) cell of a white-noise sweep.

    A failing cell is recorded with its error message, not fatal. Cells are
    independent (per-cell derived seeds), so any thread count gives the same
    results.
    """
    if not gamma_values or not eta_values:
        raise ValueError("gamma_values and eta_values must be nonempty")
    if template.source == "lhv":
        raise ValueError("sweeps over gamma require a quantum-family source")

    cells = [(g, e) for g in gamma_values for e in eta_values]

    def run_cell(cell):
        g, e = cell
        try:
            spec = replace(
                template,
                source="quantum_white_noise",
                gamma=g,
                eta=e,
                seed=cell_seed(template.seed, g, e),
            )
            return SweepCell(gamma=g, eta=e, result=run_experiment(spec), error=None)
        except Exception as exc:  # recorded per cell
            return SweepCell(gamma=g, eta=e, result=None, error=str(exc))

    if threads == 0:
        import os

        threads = os.cpu_count() or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_cell, cells))
    return [run_cell(c) for c in cells]


# ---------------------------------------------------------------------------
# Serialization


def result_to_json(result: ExperimentResult) -> dict:
    return {
        "pairs": [
            {
                "pair": list(e.pair),
                "correlation": e.correlation,
                "n_detected": e.n_detected,
                "std_error": e.std_error,
            }
            for e in result.pairs
        ],
        "statistic": result.statistic,
        "statistic_se": result.statistic_se,
        "bound_used": result.bound_used,
        "violation_sigma": result.violation_sigma,
    }


SUMMARY_CSV_HEADER = "gamma,eta,statistic,se,bound,violation_sigma"


def summary_csv_row(gamma: float, eta: float, result: ExperimentResult) -> str:
    fields = (
        gamma,
        eta,
        result.statistic,
        result.statistic_se,
        result.bound_used,
        result.violation_sigma,
    )
    return ",".join(f"{x:.10g}" for x in fields)


def sweep_csv(cells: Sequence[SweepCell]) -> str:
    lines = [SUMMARY_CSV_HEADER]
    for c in cells:
        if c.result is None:
            lines.append(f"{c.gamma:.10g},{c.eta:.10g},nan,nan,nan,nan")
        else:
            lines.append(summary_csv_row(c.gamma, c.eta, c.result))
    return "\n".join(lines) + "\n"
