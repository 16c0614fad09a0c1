import numpy as np
import pytest

from qsvtrisk.portfolio import PortfolioModel, enumerate_scenarios


# Experiment inputs: 4 assets, 2 factors, 2 qubits per factor, truncation 2.
TABLE1 = dict(
    intrinsic_pd=[0.256, 0.072, 0.135, 0.072],
    sensitivities=[0.090, 0.090, 0.090, 0.090],
    lgd=[18406.56, 54807.94, 13719.59, 21127.25],
    factor_loadings=[[0.158, 0.058],
                     [0.256, 0.157],
                     [0.158, 0.058],
                     [0.158, 0.058]],
    qubits_per_factor=2,
    truncation=2.0,
)

# Published reference CDF (rounded to 4 decimals in the source table).
REFERENCE_BENCHMARK_CDF = {
    0.00: 0.5752, 13719.59: 0.6548, 18406.56: 0.8413, 21127.25: 0.8784,
    32126.15: 0.9087, 34846.84: 0.9141, 39533.81: 0.9258, 53253.40: 0.9297,
    54807.94: 0.9692, 68527.53: 0.9741, 73214.50: 0.9927, 75935.19: 0.9956,
    86934.09: 0.9990, 89654.78: 1.0000, 94341.75: 1.0000, 108061.34: 1.0000,
}


@pytest.fixture(scope="session")
def table1_model():
    return PortfolioModel(**TABLE1)


@pytest.fixture(scope="session")
def table1_scenarios(table1_model):
    return enumerate_scenarios(table1_model)


def random_model(seed, n=3, f=2, z=2):
    rng = np.random.default_rng(seed)
    return PortfolioModel(
        intrinsic_pd=rng.uniform(0.05, 0.4, size=n),
        sensitivities=rng.uniform(0.0, 0.5, size=n),
        lgd=rng.uniform(100.0, 5000.0, size=n),
        factor_loadings=rng.uniform(-0.5, 0.5, size=(n, f)),
        qubits_per_factor=z,
    )
