"""Random model generators shared by the property and acceptance tests."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from obell.core import LABELS, PAIR_KEYS, DeterministicStrategy, HiddenVariableModel
from obell.lhv import make_detection_model, make_epsilon_model


def random_strategies(rng: np.random.Generator, n: int) -> list[DeterministicStrategy]:
    """n perfect-anticorrelation strategies with random Alice outputs."""
    out = []
    for _ in range(n):
        a_out = {s: int(rng.choice((1, -1))) for s in LABELS}
        out.append(DeterministicStrategy(a_out=a_out, b_out={s: -v for s, v in a_out.items()}))
    return out


def random_perfect_model(rng: np.random.Generator, max_atoms: int = 8) -> HiddenVariableModel:
    """Random mixture of perfect-anticorrelation strategies, float weights."""
    n = int(rng.integers(1, max_atoms + 1))
    weights = rng.dirichlet(np.ones(n))
    return HiddenVariableModel.build([float(w) for w in weights], random_strategies(rng, n))


def random_epsilon_model(
    rng: np.random.Generator, epsilon: float, max_atoms: int = 8
) -> HiddenVariableModel:
    """Random model whose anti-correlation defect mass is <= epsilon per setting."""
    n = int(rng.integers(1, max_atoms + 1))
    weights = [float(w) for w in rng.dirichlet(np.ones(n))]
    base = list(zip(weights, random_strategies(rng, n)))
    flip_sets: dict[str, set[int]] = {}
    for s in LABELS:
        chosen: set[int] = set()
        mass = 0.0
        for i in rng.permutation(n):
            if rng.random() < 0.5 and mass + weights[i] <= epsilon:
                chosen.add(int(i))
                mass += weights[i]
        flip_sets[s] = chosen
    return make_epsilon_model(base, flip_sets, epsilon)


def uniform_fraction_weights(n: int) -> list[Fraction]:
    return [Fraction(1, n)] * n


def random_detection_model(
    rng: np.random.Generator, n_atoms: int, detected_per_pair: int
) -> HiddenVariableModel:
    """Uniform-weight perfect-anticorrelation model with random equal-size
    detection sets (joint efficiency detected_per_pair / n_atoms), exact
    rational weights."""
    base = HiddenVariableModel.build(
        uniform_fraction_weights(n_atoms), random_strategies(rng, n_atoms)
    )
    detect_sets = {
        key: set(int(i) for i in rng.choice(n_atoms, size=detected_per_pair, replace=False))
        for key in PAIR_KEYS
    }
    return make_detection_model(base, detect_sets)


def random_combined_model(
    rng: np.random.Generator, n_atoms: int, flips_per_label: int, detected_per_pair: int
) -> HiddenVariableModel:
    """Uniform-weight model with both defects: epsilon = flips_per_label/n,
    eta = detected_per_pair/n, exact rational weights."""
    weights = uniform_fraction_weights(n_atoms)
    base = list(zip(weights, random_strategies(rng, n_atoms)))
    flip_sets = {
        s: set(int(i) for i in rng.choice(n_atoms, size=flips_per_label, replace=False))
        for s in LABELS
    }
    model = make_epsilon_model(base, flip_sets, Fraction(flips_per_label, n_atoms))
    detect_sets = {
        key: set(int(i) for i in rng.choice(n_atoms, size=detected_per_pair, replace=False))
        for key in PAIR_KEYS
    }
    return make_detection_model(model, detect_sets)
