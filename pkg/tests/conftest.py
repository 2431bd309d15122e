"""Shared fixtures: golden design tables and random trial data."""
from pathlib import Path

import numpy as np
import pytest

from schemas import DesignSpec, EndpointAssumption, TrialData

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

THREE_DOMAIN_WINPS = (0.7, 0.65, 0.6)
FIVE_DOMAIN_WINPS = (0.593, 0.556, 0.551, 0.544, 0.553)

# (correlation, lower_bound, sd_ratio, alloc_ratio) -> (n at 80%, n at 90%)
THREE_DOMAIN_GRID = {
    (0.75, 0.55, 1.0, 1.0): (214, 286),
    (0.75, 0.55, 1.0, 2.0): (240, 321),
    (0.75, 0.55, 2.0, 1.0): (216, 290),
    (0.75, 0.55, 2.0, 2.0): (194, 260),
    (0.75, 0.60, 1.0, 1.0): (818, 1096),
    (0.75, 0.60, 1.0, 2.0): (921, 1232),
    (0.75, 0.60, 2.0, 1.0): (830, 1110),
    (0.75, 0.60, 2.0, 2.0): (743, 993),
    (0.15, 0.55, 1.0, 1.0): (112, 150),
    (0.15, 0.55, 1.0, 2.0): (126, 168),
    (0.15, 0.55, 2.0, 1.0): (114, 152),
    (0.15, 0.55, 2.0, 2.0): (102, 135),
    (0.15, 0.60, 1.0, 1.0): (426, 570),
    (0.15, 0.60, 1.0, 2.0): (480, 642),
    (0.15, 0.60, 2.0, 1.0): (432, 578),
    (0.15, 0.60, 2.0, 2.0): (387, 518),
}

# (alloc_ratio, sd_ratio, assurance) -> n for rho = 0.1, 0.3, 0.5
FIVE_DOMAIN_GRID = {
    (1.0, 0.5, 0.8): (210, 328, 448),
    (1.0, 0.5, 0.9): (280, 440, 598),
    (1.0, 1.0, 0.8): (208, 328, 446),
    (1.0, 1.0, 0.9): (280, 438, 598),
    (1.0, 2.0, 0.8): (210, 328, 448),
    (1.0, 2.0, 0.9): (280, 440, 598),
    (0.5, 0.5, 0.8): (188, 296, 402),
    (0.5, 0.5, 0.9): (252, 395, 539),
    (0.5, 1.0, 0.8): (234, 368, 501),
    (0.5, 1.0, 0.9): (314, 492, 672),
    (0.5, 2.0, 0.8): (282, 443, 603),
    (0.5, 2.0, 0.9): (378, 593, 807),
}
FIVE_DOMAIN_RHOS = (0.1, 0.3, 0.5)


def make_design(winps, correlation=0.0, lower_bound=0.55, assurance=0.8, sd_ratio=1.0, alloc_ratio=1.0, ci_level=0.95):
    return DesignSpec(
        endpoints=[EndpointAssumption(winp=w, sd_ratio=sd_ratio) for w in winps],
        correlation=correlation,
        lower_bound=lower_bound,
        assurance=assurance,
        alloc_ratio=alloc_ratio,
        ci_level=ci_level,
    )


def random_trial(rng: np.random.Generator, m: int, n: int, k: int, ties: bool = False) -> TrialData:
    if ties:
        return TrialData(treated=rng.integers(0, 4, size=(m, k)), control=rng.integers(0, 4, size=(n, k)))
    return TrialData(treated=rng.normal(0.3, 1.0, size=(m, k)), control=rng.normal(0.0, 1.0, size=(n, k)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_trial():
    return TrialData(treated=[[2.0], [3.0]], control=[[1.0], [2.0]])
