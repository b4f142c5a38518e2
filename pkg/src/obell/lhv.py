"""Local hidden-variable machinery: exact model correlations, exhaustive
deterministic-strategy enumeration (the brute-force oracle behind every
classical bound), and constructors for imperfect-anti-correlation and
detection-censored models.

Enumeration results use exact rational arithmetic so bound checks at the
boundary (e.g. a maximum of exactly 1) never suffer float noise.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import (
    LABELS,
    PAIR_KEYS,
    DeterministicStrategy,
    HiddenVariableModel,
    Number,
    validate_model,
)

#: Setting-pair patterns for the three-correlation statistic
#: |P(p1) - P(p2)| - P(p3). "e7" is the pattern of the perfect-correlation
#: inequality; "e10" the pattern used by the detection-efficiency bounds.
STATISTIC_PATTERNS: dict[str, tuple[tuple[str, str], ...]] = {
    "e7": (("a", "b"), ("a", "c"), ("b", "c")),
    "e10": (("a", "b"), ("b", "c"), ("a", "c")),
}


def _require_valid(m: HiddenVariableModel) -> None:
    violations = validate_model(m)
    if violations:
        raise ValueError("invalid hidden-variable model: " + "; ".join(violations))


def lhv_correlation(m: HiddenVariableModel, s: str, t: str) -> Number:
    """P(s, t) = sum_lambda w(lambda) A_s(lambda) B_t(lambda), exactly."""
    _require_valid(m)
    return sum(w * strat.product(s, t) for w, strat in zip(m.weights, m.strategy_at))


def lhv_conditional_correlation(m: HiddenVariableModel, s: str, t: str) -> Number:
    """Correlation conditioned on joint detection of the pair (s, t).

    Averages the outcome product over the atoms flagged detected for (s, t)
    and renormalizes by their total mass. Conditioning on a null detection
    event is an error.
    """
    _require_valid(m)
    key = s + t
    mass = sum(w for w, d in zip(m.weights, m.detect_flag) if d[key])
    if mass <= 0:
        raise ValueError(f"pair ({s}, {t}): zero detection mass, cannot condition")
    num = sum(
        w * strat.product(s, t)
        for w, strat, d in zip(m.weights, m.strategy_at, m.detect_flag)
        if d[key]
    )
    return num / mass


def model_ob_statistic(
    m: HiddenVariableModel, pattern: str = "e7", conditional: bool = False
) -> Number:
    """|P(p1) - P(p2)| - P(p3) for the given pair pattern, optionally using
    detection-conditioned correlations."""
    pairs = STATISTIC_PATTERNS[pattern]
    corr = lhv_conditional_correlation if conditional else lhv_correlation
    p1, p2, p3 = (corr(m, s, t) for s, t in pairs)
    return abs(p1 - p2) - p3


def enumerate_strategies(perfect_anticorrelation: bool) -> list[DeterministicStrategy]:
    """All deterministic strategies, in lexicographic order with +1 before -1.

    Constrained (perfect anti-correlation, B_s = -A_s): iterates over
    (A_a, A_b, A_c), 8 strategies. Unconstrained: iterates over
    (A_a, A_b, A_c, B_a, B_b, B_c), 64 strategies.
    """
    out = []
    if perfect_anticorrelation:
        for bits in itertools.product((1, -1), repeat=3):
            a_out = dict(zip(LABELS, bits))
            out.append(
                DeterministicStrategy(a_out=a_out, b_out={s: -v for s, v in a_out.items()})
            )
    else:
        for bits in itertools.product((1, -1), repeat=6):
            out.append(
                DeterministicStrategy(
                    a_out=dict(zip(LABELS, bits[:3])),
                    b_out=dict(zip(LABELS, bits[3:])),
                )
            )
    return out


def strategy_ob_statistic(strat: DeterministicStrategy, pattern: str = "e7") -> int:
    pairs = STATISTIC_PATTERNS[pattern]
    p1, p2, p3 = (strat.product(s, t) for s, t in pairs)
    return abs(p1 - p2) - p3


def classical_ob_maximum(perfect_anticorrelation: bool, pattern: str = "e7") -> Fraction:
    """Exact maximum of the Bell statistic over all LHV models.

    It suffices to maximize over deterministic strategies: the statistic is
    convex in the model's atom weights (|.| of an affine map minus an affine
    map), so the maximum over the mixture polytope is attained at a vertex,
    i.e. at a single deterministic strategy.
    """
    return Fraction(
        max(
            strategy_ob_statistic(s, pattern)
            for s in enumerate_strategies(perfect_anticorrelation)
        )
    )


def make_epsilon_model(
    base: Sequence[tuple[Number, DeterministicStrategy]],
    flip_sets: Mapping[str, Iterable[int]],
    epsilon: Number,
) -> HiddenVariableModel:
    """Build a model with imperfect anti-correlations.

    ``flip_sets[s]`` lists the atoms on which the anti-correlation at setting
    s is broken (there the dichotomous outcomes are forced equal, B_s = A_s;
    everywhere else B_s = -A_s). Bob's outputs are rewritten accordingly, so
    only the Alice side of each base strategy matters. The declared defect
    ``epsilon`` caps the mass of every flip set.
    """
    weights = [w for w, _ in base]
    total = sum(weights)
    if abs(total - 1) > 1e-12:
        raise ValueError(f"base weights must sum to 1, got {float(total)!r}")
    n = len(base)
    flips = {s: frozenset(flip_sets.get(s, ())) for s in LABELS}
    for s, atoms in flips.items():
        if any(not 0 <= i < n for i in atoms):
            raise ValueError(f"flip_sets[{s!r}] references atoms outside 0..{n - 1}")
        mass = sum(weights[i] for i in atoms)
        if mass > epsilon + 1e-12:
            raise ValueError(
                f"flip_sets[{s!r}] has mass {float(mass)!r}, above declared epsilon {float(epsilon)!r}"
            )

    strategies = []
    anticorr = []
    for i, (_, strat) in enumerate(base):
        flag = {s: i not in flips[s] for s in LABELS}
        b_out = {s: (-strat.a_out[s] if flag[s] else strat.a_out[s]) for s in LABELS}
        strategies.append(DeterministicStrategy(a_out=dict(strat.a_out), b_out=b_out))
        anticorr.append(flag)
    return HiddenVariableModel.build(weights, strategies, anticorr_flag=anticorr)


def make_detection_model(
    base: HiddenVariableModel, detect_sets: Mapping[str, Iterable[int]]
) -> HiddenVariableModel:
    """Attach detection sets to a model; all nine pair masses must be equal.

    ``detect_sets`` maps each pair key ("ab", "ac", ..., "cc") to the atoms
    detected for that pair. The setting-independence assumption requires the
    detected mass to agree across pairs within 1e-12.
    """
    _require_valid(base)
    missing = [k for k in PAIR_KEYS if k not in detect_sets]
    if missing:
        raise ValueError(f"detect_sets missing pairs {missing}")
    n = base.n_atoms
    masses = {}
    for key in PAIR_KEYS:
        atoms = frozenset(detect_sets[key])
        if any(not 0 <= i < n for i in atoms):
            raise ValueError(f"detect_sets[{key!r}] references atoms outside 0..{n - 1}")
        masses[key] = sum(base.weights[i] for i in atoms)
    reference = masses["ab"]
    for key, mass in masses.items():
        if abs(mass - reference) > 1e-12:
            raise ValueError(
                f"detection mass for pair {key!r} is {float(mass)!r}, "
                f"differs from pair 'ab' mass {float(reference)!r}"
            )
    detect = [
        {key: (i in frozenset(detect_sets[key])) for key in PAIR_KEYS} for i in range(n)
    ]
    return HiddenVariableModel(
        weights=base.weights,
        strategy_at=base.strategy_at,
        anticorr_flag=base.anticorr_flag,
        detect_flag=tuple(detect),
    )


def _check_grid_fraction(value: Number, atoms: int, name: str) -> int:
    count = round(value * atoms)
    if abs(count - value * atoms) > 1e-9:
        raise ValueError(f"{name}={float(value)!r} must be a multiple of 1/{atoms}")
    return count


def epsilon_ob_maximum(epsilon: Number, atoms: int) -> Fraction:
    """Exact maximum of the statistic over all imperfect-anti-correlation
    models on a uniform grid of ``atoms`` atoms with flip mass <= epsilon
    per setting.

    Atoms carry equal weight and enter the objective additively, so only the
    number of atoms per (flip-at-b, flip-at-c) class matters, and within a
    class every atom takes the per-class optimal sign assignment. Maximizing
    over class counts is therefore exhaustive over all strategy assignments
    and flip placements. The a-flip set never enters: the statistic involves
    only B_b and B_c.
    """
    if not 1 <= atoms <= 12:
        raise ValueError("atoms must lie in 1..12")
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    cap = _check_grid_fraction(epsilon, atoms, "epsilon")

    best: Fraction | None = None
    for branch in (1, -1):
        # Per-atom optimum for each flip class; sb/sc is the sign of B_b/B_c
        # relative to -A_b/-A_c, x = A_a A_b, y = A_a A_c.
        value = {}
        for fb, fc in itertools.product((0, 1), repeat=2):
            sb = 1 if fb else -1
            sc = 1 if fc else -1
            value[(fb, fc)] = max(
                branch * (sb * x - sc * y) - sc * x * y
                for x in (1, -1)
                for y in (1, -1)
            )
        for n_bc in range(cap + 1):
            for n_b in range(cap - n_bc + 1):
                for n_c in range(cap - n_bc + 1):
                    n_plain = atoms - n_bc - n_b - n_c
                    if n_plain < 0:
                        continue
                    total = (
                        n_plain * value[(0, 0)]
                        + n_b * value[(1, 0)]
                        + n_c * value[(0, 1)]
                        + n_bc * value[(1, 1)]
                    )
                    candidate = Fraction(total, atoms)
                    if best is None or candidate > best:
                        best = candidate
    assert best is not None
    return best


def detection_ob_maximum(eta: Number, atoms: int) -> Fraction:
    """Exact maximum of the detection-conditioned statistic (pattern "e10")
    over perfect-anti-correlation models on a uniform grid of ``atoms``
    atoms, with every pair's detection set holding exactly eta * atoms atoms.

    Same exchangeability reduction as epsilon_ob_maximum: atoms are grouped
    by their membership pattern in the three detection sets the statistic
    reads (pairs (a,b), (b,c), (a,c)); the remaining six pair sets can always
    be filled to the required mass and never enter the objective.
    """
    if not 1 <= atoms <= 10:
        raise ValueError("atoms must lie in 1..10")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    k = _check_grid_fraction(eta, atoms, "eta")
    if k == 0:
        raise ValueError("eta must give at least one detected atom per pair")

    combos = list(itertools.product((0, 1), repeat=3))  # membership in ab, bc, ac
    best: Fraction | None = None
    for branch in (1, -1):
        # Perfect anti-correlation: A_s B_t = -A_s A_t; x = A_a A_b, y = A_a A_c.
        value = {
            (m_ab, m_bc, m_ac): max(
                -branch * x * m_ab + branch * x * y * m_bc + y * m_ac
                for x in (1, -1)
                for y in (1, -1)
            )
            for m_ab, m_bc, m_ac in combos
        }

        def search(index: int, remaining: int, in_ab: int, in_bc: int, in_ac: int, acc: int):
            nonlocal best
            if index == len(combos):
                if remaining == 0 and in_ab == in_bc == in_ac == k:
                    candidate = Fraction(acc, k)
                    if best is None or candidate > best:
                        best = candidate
                return
            m_ab, m_bc, m_ac = combos[index]
            for count in range(remaining + 1):
                ab = in_ab + count * m_ab
                bc = in_bc + count * m_bc
                ac = in_ac + count * m_ac
                if ab > k or bc > k or ac > k:
                    break
                search(
                    index + 1,
                    remaining - count,
                    ab,
                    bc,
                    ac,
                    acc + count * value[combos[index]],
                )

        search(0, atoms, 0, 0, 0, 0)
    assert best is not None
    return best
