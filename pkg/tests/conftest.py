import numpy as np
import pytest

from lcmdiv import datasets
from lcmdiv.divergence import power
from lcmdiv.estimation import FitOptions, fit
from lcmdiv.model import ModelDesign, Theta


def make_design(seed=0, k=3, m=2, t=2, u=1, logit_scale=0.8) -> ModelDesign:
    """Random small design with a generic (full-rank, no-redundancy) structure."""
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(m, u))
    return ModelDesign(
        Q=rng.normal(size=(m, k, t)) * logit_scale,
        C=rng.normal(size=(m, k)) * 0.3,
        V=V,
        d=rng.normal(size=m) * 0.2,
    )


def random_theta(design: ModelDesign, seed=0, scale=0.7) -> Theta:
    rng = np.random.default_rng(seed)
    return Theta(
        lam=rng.normal(0.0, scale, design.t), eta=rng.normal(0.0, scale, design.u)
    )


# Reference values from the original published analysis of the Coleman data.
COLEMAN_REF_LAMBDA = np.array(
    [-2.34292610, 1.72393168, -0.84040580, 1.56524945,
     -2.06480043, 2.29928080, -0.91137901, 2.01252338]
)
COLEMAN_REF_ETA = np.array([0.50480183, 0.16964329, -0.87356633, -0.00424661])
COLEMAN_REF_W = np.array([0.38936544, 0.27848377, 0.09811597, 0.23403482])
# Item probabilities by class; the (3,1) cell is the corrected value (the
# source prints 0.8463457, a dropped digit).
COLEMAN_REF_P = np.array(
    [
        [0.08762969, 0.30144933, 0.11256540, 0.28671773],
        [0.08762969, 0.82710532, 0.11256540, 0.88210569],
        [0.84863457, 0.30144933, 0.90881746, 0.28671773],
        [0.84863457, 0.82710532, 0.90881746, 0.88210569],
    ]
)
# Goodness-of-fit statistics for a = -1, -1/2, 0, 2/3, 1, 3/2, 2, 5/2, 3.
COLEMAN_REF_A_GRID = (-1.0, -0.5, 0.0, 2.0 / 3.0, 1.0, 1.5, 2.0, 2.5, 3.0)
COLEMAN_REF_T_ROW = (1.279, 1.278, 1.277, 1.277, 1.277, 1.277, 1.278, 1.279, 1.281)
# Nested-chain statistics at a = 2/3: (M1-M2, M2-M3, M3-M4).
COLEMAN_REF_NESTED_S = (3.754, 4.578, 30.626)
COLEMAN_REF_NESTED_T = (3.386, 4.585, 30.616)


@pytest.fixture(scope="session")
def coleman_design():
    return datasets.coleman_design_m1()


@pytest.fixture(scope="session")
def coleman_counts():
    return datasets.coleman_counts()


@pytest.fixture(scope="session")
def coleman_fit_23(coleman_design, coleman_counts):
    return fit(coleman_design, coleman_counts, power(2.0 / 3.0), FitOptions(starts=30, seed=1))


@pytest.fixture(scope="session")
def coleman_fit_mle(coleman_design, coleman_counts):
    return fit(coleman_design, coleman_counts, power(0.0), FitOptions(starts=30, seed=1))


@pytest.fixture(scope="session")
def coleman_chain():
    return datasets.coleman_chain()


@pytest.fixture(scope="session")
def coleman_chain_fits(coleman_chain, coleman_counts):
    opts = FitOptions(starts=30, seed=5)
    return {
        level: fit(coleman_chain.model_design(level), coleman_counts, power(2.0 / 3.0), opts)
        for level in range(1, 5)
    }
