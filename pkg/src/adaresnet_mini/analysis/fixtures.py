"""Published final skip weights (8 sites × 3 rounds) used as regression fixtures."""

from typing import Dict, List, Tuple

CIFAR10_ROUNDS: List[Tuple[float, float, float]] = [
    (-0.28722298, 0.27989703, 0.32219923),
    (-0.41371468, -0.28776032, -0.30848),
    (-0.37947246, -0.3051696, -0.5491747),
    (0.8734257, 1.1673123, 0.84171796),
    (-1.7672663, -1.9361044, -1.9803141),
    (1.7821076, 1.7983766, 2.0427594),
    (-1.1800854, 1.2597568, 1.1798627),
    (-0.82326496, -0.8402289, -0.8131428),
]

MNIST_ROUNDS: List[Tuple[float, float, float]] = [
    (0.44887054, 0.4484792, -0.5003674),
    (-0.34602356, -0.35169616, -0.31584582),
    (-0.74334604, -0.5807008, 0.8818225),
    (0.5266892, 0.3835334, 0.43830293),
    (-3.0067017, -2.7609563, -2.7376952),
    (2.1653237, 2.065729, 2.4824123),
    (-2.8167214, -2.9216428, 2.5657778),
    (-0.8365008, -0.94025135, -0.9289533),
]

# name -> (group, rows)
FIXTURES: Dict[str, Tuple[str, List[Tuple[float, float, float]]]] = {
    "reference-cifar10": ("cifar10", CIFAR10_ROUNDS),
    "reference-mnist": ("mnist", MNIST_ROUNDS),
}

ALIASES: Dict[str, str] = {
    "paper-table-1": "reference-cifar10",
    "paper-table-2": "reference-mnist",
}


def fixture_names() -> List[str]:
    return sorted(FIXTURES) + sorted(ALIASES)
