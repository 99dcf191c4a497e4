import itertools

import numpy as np
import pytest

from repcost import _kernels_py as py
from repcost import kernels
from repcost.generations import elementary_link_state

cy = pytest.importorskip("repcost._kernels", reason="compiled extension not built")

LINK = np.asarray(elementary_link_state(0.01).weights)


def test_backend_selected():
    assert kernels.BACKEND in ("python", "cython")


@pytest.mark.parametrize("dejmps", [True, False])
@pytest.mark.parametrize("rounds", [(0,), (1, 0), (0, 2, 1), (2, 1, 0, 3)])
def test_g1_chain_equivalent(rounds, dejmps):
    a = py.g1_chain(LINK, rounds, dejmps, 0.01, 0.07)
    b = cy.g1_chain(LINK, rounds, dejmps, 0.01, 0.07)
    assert np.array_equal(np.asarray(a[0]), np.asarray(b[0]))
    assert a[1] == b[1] and a[2] == b[2]


def test_schedule_costs_equivalent_and_ordered():
    choices = (0, 1, 2)
    args = (LINK, choices, 3, True, 0.01, 0.2, 1e-4, 10.0, 800.0)
    a = np.asarray(py.g1_schedule_costs(*args))
    b = np.asarray(cy.g1_schedule_costs(*args))
    assert a.shape == (3**4,)
    assert np.array_equal(a, b)
    # index order follows itertools.product over levels
    for idx, sched in enumerate(itertools.product(choices, repeat=4)):
        w, mean, _ = py.g1_chain(LINK, sched, True, 0.01, 0.2)
        sf = py._key_fraction(tuple(w))
        if sf <= 0:
            assert a[idx] == np.inf
            continue
        qubits = 2 * 10 * 2 ** sum(sched) * 2**3
        assert a[idx] == pytest.approx(qubits / (sf / (mean * 1e-4) * 800.0), rel=1e-12)


@pytest.mark.parametrize("rounds", [(0,), (0, 0, 0), (1, 0), (0, 2, 1)])
def test_monte_carlo_streams_identical(rounds):
    a = py.mc_chain(np.random.default_rng(11), 3000, 0.15, LINK, rounds, True, 0.01)
    b = cy.mc_chain(np.random.default_rng(11), 3000, 0.15, LINK, rounds, True, 0.01)
    assert np.array_equal(a[0], b[0])
    assert np.array_equal(a[1], b[1])


def test_env_var_forces_pure_python():
    import os
    import subprocess
    import sys

    env = dict(os.environ, REPCOST_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import repcost; print(repcost.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
