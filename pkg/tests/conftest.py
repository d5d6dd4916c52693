import numpy as np
import pytest

from randliou import (
    ModelParams,
    build_liouvillian,
    sample_hamiltonian,
    sample_jump_operators,
)


def build_instance(n, beta, r, g=None, g_eff=None, seed=0, realization=0):
    """One sampled Liouvillian with its params."""
    if g_eff is not None:
        params = ModelParams.from_geff(n, beta, r, g_eff, seed, realization)
    else:
        params = ModelParams(n, beta, r, g, seed, realization)
    hamiltonian = sample_hamiltonian(params)
    jumps = sample_jump_operators(params)
    return params, build_liouvillian(hamiltonian, jumps, params=params)


@pytest.fixture
def small_instance():
    return build_instance(n=5, beta=2, r=2, g=0.3, seed=7)


def multiset_max_distance(a, b):
    """Max distance after sorting both complex multisets identically."""
    a = np.sort_complex(np.round(np.asarray(a), 9))
    b = np.sort_complex(np.round(np.asarray(b), 9))
    return float(np.max(np.abs(a - b)))
