"""
Amplitude estimation over a state-preparation circuit: Grover operator
construction and the iterative estimation scheme with Clopper-Pearson
confidence bookkeeping.

The iterative scheme follows the published variant that replaces phase
estimation with adaptively chosen Grover powers: each round picks the
largest power k (doubling rule, min_ratio >= 2) keeping the scaled angle
interval inside a known half-plane, measures Q^k A|0> on the good-state
projector, and intersects the resulting confidence interval with the
running one. Exact mode skips sampling entirely and returns the simulated
acceptance probability as a zero-width interval, which keeps the
acceptance-test layer deterministic.

Rounds are simulated, not sampled per shot: the circuit runs once per round
on the dense simulator and the good-state count is a binomial draw from the
exact probability, seeded per problem.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import beta as _beta

from . import statevector as sv


@dataclass(frozen=True)
class AmplitudeProblem:
    """State preparation plus a basis-aligned good-state predicate."""

    circuit: sv.CircuitOp
    layout: sv.RegisterLayout
    good: tuple[tuple[str, int], ...]     # [(register, required value), ...]
    shots: int = 2048
    seed: int = 0
    exact: bool = False

    def good_pattern(self):
        pattern = []
        for name, value in self.good:
            for o in range(self.layout.size(name)):
                pattern.append(((name, o), (value >> o) & 1))
        return tuple(pattern)


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    confidence: float
    oracle_queries: int
    rounds: int
    capped: bool = False

    @property
    def estimate(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)


def grover_operator(problem: AmplitudeProblem) -> sv.CircuitOp:
    """G = A S0 A^dag S_chi; S_chi flips good states, S0 flips the all-zero state."""
    all_zero = tuple(((name, o), 0) for name, size in problem.layout.registers
                     for o in range(size))
    s0 = sv.mcz(all_zero)
    s_chi = sv.mcz(problem.good_pattern())
    return sv.seq(s_chi, sv.adjoint(problem.circuit), s0, problem.circuit,
                  label="grover")


class _Simulator:
    """Compiled-factor application of A and G for one problem."""

    def __init__(self, problem: AmplitudeProblem):
        self.problem = problem
        lay = problem.layout
        self.factors = sv.compile_factors(problem.circuit, lay)
        self.factors_dag = sv.compile_factors(sv.adjoint(problem.circuit), lay)
        self.s0 = self._diag(tuple(((name, o), 0) for name, size in lay.registers
                                   for o in range(size)))
        self.s_chi = self._diag(problem.good_pattern())
        zero = np.zeros((2,) * lay.total, dtype=np.complex128)
        zero[(0,) * lay.total] = 1.0
        self.prepared = sv.apply_factors(zero, self.factors)
        self.good_idx = self._good_index()

    def _diag(self, pattern):
        lay = self.problem.layout
        axes = {lay.axis(*q) for q, _ in pattern}
        shape = [2 if a in axes else 1 for a in range(lay.total)]
        d = np.ones(shape)
        idx = [0] * lay.total
        for q, pol in pattern:
            idx[lay.axis(*q)] = pol
        d[tuple(idx[a] if shape[a] == 2 else 0 for a in range(lay.total))] = -1.0
        return d

    def _good_index(self):
        lay = self.problem.layout
        idx = [slice(None)] * lay.total
        for name, value in self.problem.good:
            for o in range(lay.size(name)):
                idx[lay.axis(name, o)] = (value >> o) & 1
        return tuple(idx)

    def good_probability(self, power: int) -> float:
        state = self.prepared
        for _ in range(power):
            state = state * self.s_chi
            state = sv.apply_factors(state, self.factors_dag)
            state = state * self.s0
            state = sv.apply_factors(state, self.factors)
        return float(np.sum(np.abs(state[self.good_idx]) ** 2))


def good_probability(problem: AmplitudeProblem) -> float:
    """Exact acceptance probability a = P(good) of A|0>."""
    return _Simulator(problem).good_probability(0)


def _find_next_k(k: int, upper_half: bool, theta_interval, min_ratio: float):
    """Largest feasible Grover power keeping the scaled interval in one half-plane."""
    theta_l, theta_u = theta_interval
    old_scaling = 4 * k + 2
    max_scaling = int(1.0 / (2.0 * (theta_u - theta_l)))
    scaling = max_scaling - (max_scaling - 2) % 4
    while scaling >= min_ratio * old_scaling:
        theta_min = scaling * theta_l - int(scaling * theta_l)
        theta_max = scaling * theta_u - int(scaling * theta_u)
        if theta_min <= theta_max <= 0.5 and theta_min <= 0.5:
            return (scaling - 2) // 4, True
        if theta_max >= 0.5 and theta_max >= theta_min >= 0.5:
            return (scaling - 2) // 4, False
        scaling -= 4
    return k, upper_half


def _clopper_pearson(counts: int, shots: int, alpha: float):
    lower, upper = 0.0, 1.0
    if counts != 0:
        lower = float(_beta.ppf(alpha / 2, counts, shots - counts + 1))
    if counts != shots:
        upper = float(_beta.ppf(1 - alpha / 2, counts + 1, shots - counts))
    return lower, upper


def iqae(problem: AmplitudeProblem, eps: float, alpha: float,
         min_ratio: float = 2.0) -> ConfidenceInterval:
    """Interval of half-width <= eps containing a with probability >= 1-alpha.

    Exact mode returns the simulated probability as a zero-width interval
    with zero oracle queries (a single application of A).
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    sim = _Simulator(problem)

    if problem.exact:
        p = sim.good_probability(0)
        return ConfidenceInterval(p, p, 1.0, oracle_queries=0, rounds=1)

    rng = np.random.default_rng(problem.seed)
    shots = problem.shots
    max_rounds = int(np.log(min_ratio * np.pi / 8 / eps) / np.log(min_ratio)) + 1
    round_cap = max_rounds + 10

    powers = [0]
    theta_intervals = [(0.0, 0.25)]
    a_interval = (0.0, 1.0)
    upper_half = True
    num_one_shots: list[int] = []
    queries = 0
    rounds = 0
    capped = False

    while theta_intervals[-1][1] - theta_intervals[-1][0] > eps / np.pi:
        if rounds >= round_cap:
            capped = True
            break
        rounds += 1
        k, upper_half = _find_next_k(powers[-1], upper_half, theta_intervals[-1], min_ratio)
        powers.append(k)

        p = sim.good_probability(k)
        one_counts = int(rng.binomial(shots, min(max(p, 0.0), 1.0)))
        num_one_shots.append(one_counts)
        queries += shots * (2 * k + 1)

        # pool shots from consecutive rounds that stayed at the same power
        round_shots = shots
        round_ones = one_counts
        j = 1
        while rounds - j >= 1 and powers[rounds - j] == powers[rounds]:
            round_shots += shots
            round_ones += num_one_shots[rounds - j - 1]
            j += 1

        a_min, a_max = _clopper_pearson(round_ones, round_shots, alpha / max_rounds)
        if upper_half:
            theta_min_i = np.arccos(1 - 2 * a_min) / (2 * np.pi)
            theta_max_i = np.arccos(1 - 2 * a_max) / (2 * np.pi)
        else:
            theta_min_i = 1 - np.arccos(1 - 2 * a_max) / (2 * np.pi)
            theta_max_i = 1 - np.arccos(1 - 2 * a_min) / (2 * np.pi)

        scaling = 4 * k + 2
        last_l, last_u = theta_intervals[-1]
        theta_u = (int(scaling * last_u) + theta_max_i) / scaling
        theta_l = (int(scaling * last_l) + theta_min_i) / scaling
        theta_intervals.append((theta_l, theta_u))
        a_interval = (float(np.sin(2 * np.pi * theta_l) ** 2),
                      float(np.sin(2 * np.pi * theta_u) ** 2))

    return ConfidenceInterval(a_interval[0], a_interval[1], 1.0 - alpha,
                              oracle_queries=queries, rounds=rounds, capped=capped)


def rescale_estimate(interval: ConfidenceInterval, k: float) -> ConfidenceInterval:
    """Divide the interval by k**2, undoing the filter's amplitude scale.

    The rescaled upper bound may exceed 1; it is intentionally not clipped
    (display layers may clip, decision logic must not).
    """
    if not 0 < k <= 1:
        raise ValueError("k must lie in (0, 1]")
    return replace(interval, lower=interval.lower / k ** 2,
                   upper=interval.upper / k ** 2)
