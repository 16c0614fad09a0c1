"""
Credit-portfolio domain model and the exhaustive classical oracle.

Model: n counterparties under a multi-factor Gaussian conditional
independence model. Conditioned on the systemic factor vector z, defaults
are independent Bernoulli events with

    pd_i(z) = Phi( (Phi^-1(p0_i) + sqrt(rho_i) * (w_i . z)) / sqrt(1 - rho_i) )

where p0_i is the intrinsic PD, rho_i the sensitivity, and w_i the i-th row
of the factor-loading matrix. The factors are discretized per factor on
2**z_qubits equispaced points over [-trunc, +trunc] with weights
proportional to the standard normal pdf (normalized per factor); the joint
grid is the product.

Scenario conventions: scenario j in [0, 2**n) defaults counterparty i iff
bit (i-1) of j is set (counterparty 1 is the least significant bit), with
loss L_j = sum_i j_i * l_i and L_M = L_{2^n - 1}.

Everything here is classical and exact up to float error; it is the
benchmark oracle the quantum pipeline is validated against.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.special import ndtr, ndtri

ENUMERATION_GUARD_QUBITS = 24   # cap on n + f*z for full enumeration
MAX_COUNTERPARTIES = 20


@dataclass(frozen=True)
class PortfolioModel:
    intrinsic_pd: np.ndarray          # shape (n,), values in (0, 1)
    sensitivities: np.ndarray         # rho, shape (n,), values in [0, 1)
    lgd: np.ndarray                   # loss given default, shape (n,), > 0
    factor_loadings: np.ndarray       # w, shape (n, f)
    qubits_per_factor: int = 2
    truncation: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "intrinsic_pd", np.asarray(self.intrinsic_pd, dtype=float))
        object.__setattr__(self, "sensitivities", np.asarray(self.sensitivities, dtype=float))
        object.__setattr__(self, "lgd", np.asarray(self.lgd, dtype=float))
        object.__setattr__(self, "factor_loadings",
                           np.atleast_2d(np.asarray(self.factor_loadings, dtype=float)))
        n = self.n
        for name, arr in [("intrinsic_pd", self.intrinsic_pd),
                          ("sensitivities", self.sensitivities), ("lgd", self.lgd)]:
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
        if self.factor_loadings.shape[0] != n:
            raise ValueError("factor_loadings must have one row per counterparty")
        if not np.all((self.intrinsic_pd > 0) & (self.intrinsic_pd < 1)):
            raise ValueError("intrinsic PDs must lie in (0, 1)")
        if not np.all((self.sensitivities >= 0) & (self.sensitivities < 1)):
            raise ValueError("sensitivities must lie in [0, 1)")
        if not np.all(self.lgd > 0):
            raise ValueError("LGDs must be positive")
        if self.qubits_per_factor < 1 or self.truncation <= 0:
            raise ValueError("bad discretization settings")
        if n > MAX_COUNTERPARTIES:
            raise ValueError(f"n={n} exceeds enumeration cap {MAX_COUNTERPARTIES}")

    @property
    def n(self) -> int:
        return len(np.atleast_1d(self.intrinsic_pd))

    @property
    def num_factors(self) -> int:
        return self.factor_loadings.shape[1]

    @property
    def max_loss(self) -> float:
        return float(self.lgd.sum())


@dataclass(frozen=True)
class ScenarioTable:
    probabilities: np.ndarray         # p_j, shape (2**n,)
    losses: np.ndarray                # L_j, shape (2**n,)

    @property
    def max_loss(self) -> float:
        return float(self.losses[-1])

    def distinct_losses(self) -> np.ndarray:
        return np.unique(np.round(self.losses, 9))


def factor_grid(model: PortfolioModel) -> tuple[np.ndarray, np.ndarray]:
    """Per-factor grid points and normalized weights, shapes (2**z,)."""
    m = 2 ** model.qubits_per_factor
    points = np.linspace(-model.truncation, model.truncation, m)
    weights = np.exp(-0.5 * points ** 2)
    return points, weights / weights.sum()


def scenario_loss(model: PortfolioModel, j: int) -> float:
    """Total loss of scenario j: sum of the LGDs of the defaulted counterparties."""
    if not 0 <= j < 2 ** model.n:
        raise IndexError(f"scenario index {j} out of range for n={model.n}")
    bits = (j >> np.arange(model.n)) & 1
    return float(bits @ model.lgd)


def conditional_pd(model: PortfolioModel, i: int, zpoint) -> np.ndarray:
    """Default probability of counterparty i (0-based) at factor point(s) z.

    zpoint may be a single f-vector or an array of them (last axis = f).
    """
    z = np.asarray(zpoint, dtype=float)
    shift = z @ model.factor_loadings[i]
    arg = (ndtri(model.intrinsic_pd[i]) + np.sqrt(model.sensitivities[i]) * shift)
    return ndtr(arg / np.sqrt(1.0 - model.sensitivities[i]))


def enumerate_scenarios(model: PortfolioModel) -> ScenarioTable:
    """Exact scenario distribution by integrating the Bernoulli products over
    the discretized factor grid."""
    n, f = model.n, model.num_factors
    if n + f * model.qubits_per_factor > ENUMERATION_GUARD_QUBITS:
        raise ValueError("model too large for full enumeration")
    points, weights = factor_grid(model)
    probs = np.zeros(2 ** n)
    for gidx in product(range(len(points)), repeat=f):
        zvec = points[list(gidx)]
        q = float(np.prod(weights[list(gidx)]))
        pd = np.array([conditional_pd(model, i, zvec) for i in range(n)])
        scen = np.ones(1)
        for i in range(n):
            # counterparty i occupies bit i of the scenario index
            scen = np.kron(np.array([1.0 - pd[i], pd[i]]), scen)
        probs += q * scen
    j = np.arange(2 ** n)
    bits = (j[:, None] >> np.arange(n)[None, :]) & 1
    losses = bits @ model.lgd
    return ScenarioTable(probs, losses)


@dataclass(frozen=True)
class OracleMetrics:
    """Classical benchmark quantities derived from a ScenarioTable."""

    alpha_var: float
    distinct_losses: np.ndarray
    cdf_values: np.ndarray            # CDF at each distinct loss
    var: float
    expected_loss: float
    cvar_lower_tail: float            # sum_{L_j <= VaR} p_j L_j (tail as written in the source method)
    upper_tail_partial: float         # sum_{L_j > VaR} p_j L_j
    expected_shortfall: float         # conventional E[L | worst alpha share]

    def cdf(self, x: float) -> float:
        idx = np.searchsorted(self.distinct_losses, x + 1e-9) - 1
        return 0.0 if idx < 0 else float(self.cdf_values[idx])


def oracle_metrics(table: ScenarioTable, alpha_var: float) -> OracleMetrics:
    if not 0 < alpha_var < 1:
        raise ValueError("alpha_var must lie in (0, 1)")
    order = np.argsort(table.losses, kind="stable")
    losses = table.losses[order]
    probs = table.probabilities[order]
    distinct, start = np.unique(np.round(losses, 9), return_index=True)
    mass = np.add.reduceat(probs, start)
    cdf_values = np.cumsum(mass)
    cdf_values[-1] = min(cdf_values[-1], 1.0)

    level = 1.0 - alpha_var
    hit = np.nonzero(cdf_values >= level - 1e-12)[0]
    var = float(distinct[hit[0]])

    expected = float(probs @ losses)
    lower = float(np.sum(mass[: hit[0] + 1] * distinct[: hit[0] + 1]))
    upper = expected - lower
    # conventional expected shortfall: mean of the worst alpha_var slice,
    # splitting the atom at VaR
    tail_above = float(np.sum(mass[hit[0] + 1:]))
    atom = alpha_var - tail_above
    es = (upper + max(atom, 0.0) * var) / alpha_var
    return OracleMetrics(alpha_var, distinct, cdf_values, var, expected,
                         lower, upper, es)
