import numpy as np
import pytest

from qsvtrisk import statevector as sv
from qsvtrisk.portfolio import PortfolioModel, enumerate_scenarios
from qsvtrisk.uncertainty import build_uncertainty, uncertainty_layout
from conftest import random_model


def c_marginal(model):
    circ = build_uncertainty(model)
    lay = uncertainty_layout(model)
    state = sv.apply(sv.Statevector.zero(lay), circ.op)
    return sv.marginal_probabilities(state, ["C"]), state


def test_single_counterparty_constant_pd_half():
    model = PortfolioModel([0.5], [0.0], [100.0], [[0.0]], qubits_per_factor=1)
    marg, _ = c_marginal(model)
    np.testing.assert_allclose(marg, [0.5, 0.5], atol=1e-12)


def test_table1_marginal_matches_oracle(table1_model, table1_scenarios):
    marg, state = c_marginal(table1_model)
    np.testing.assert_allclose(marg, table1_scenarios.probabilities, atol=1e-8)
    assert marg.sum() == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("seed,n", [(0, 2), (1, 3), (2, 4), (3, 6)])
def test_random_models_marginal_exhaustive(seed, n):
    model = random_model(seed, n=n, f=2, z=1 if n == 6 else 2)
    marg, _ = c_marginal(model)
    table = enumerate_scenarios(model)
    assert np.max(np.abs(marg - table.probabilities)) <= 1e-8


def test_uncertainty_is_unitary(table1_model):
    circ = build_uncertainty(table1_model)
    lay = uncertainty_layout(table1_model)
    rng = np.random.default_rng(9)
    t = rng.normal(size=(2,) * lay.total) + 1j * rng.normal(size=(2,) * lay.total)
    t /= np.linalg.norm(t)
    st = sv.Statevector(t.astype(np.complex128), lay)
    roundtrip = sv.apply(sv.apply(st, circ.op), sv.adjoint(circ.op))
    np.testing.assert_allclose(roundtrip.tensor, st.tensor, atol=1e-12)


def test_capacity_guard():
    model = PortfolioModel([0.1] * 12, [0.0] * 12, [1.0] * 12, [[0.0]] * 12,
                           qubits_per_factor=8)
    with pytest.raises(ValueError, match="capacity"):
        build_uncertainty(model)
