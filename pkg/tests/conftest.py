import numpy as np
import pytest

from lightqueue import KernelSpec, ModelParams


@pytest.fixture
def fig_params() -> ModelParams:
    # headline operating point used throughout: unit rate, v = 0.75 c
    return ModelParams(a=1.0, v=0.75)


@pytest.fixture
def fig_spec() -> KernelSpec:
    return KernelSpec(lam=1.5, beta1=0.6, beta2=0.3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260822)
