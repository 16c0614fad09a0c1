"""
Loss-to-amplitude loading: a calibrated linear angle map theta(x) = s*x and
the circuit that rotates qubit T by 2*theta(l_i) per defaulted counterparty.

Additivity of the linear map makes the accumulated angle for scenario j
equal theta0 + theta(L_j), so the |1>_T amplitude is sin(theta0 + theta(L_j))
with depth n controlled rotations plus one uncontrolled offset rotation.

Calibration places the angle window so that losses at or below the target
land below arcsin(mu) and the rest land above it, keeping safety margins
beta_min/beta_max away from the filter's usable range. The intercept is the
smallest value satisfying both window constraints,

    theta0 = max(beta_min, (L_M asin(mu) - L_T beta_max) / (L_M - L_T)),

which maximizes the slope (the source material prints this with min, which
violates its own constraint system whenever the branches differ; see the
calibration tests). The inverted variant flips the window to estimate the
tail function instead, complemented in post-processing.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import asin, pi, sin

import numpy as np

from . import statevector as sv
from .portfolio import PortfolioModel

ANGLE_SLACK = 1e-9


@dataclass(frozen=True)
class ThetaMap:
    """Linear angle map theta(x) = slope * x with offset theta0."""

    theta0: float
    slope: float
    l_target: float
    l_max: float
    mu: float
    beta_min: float
    beta_max: float
    inverted: bool = False

    def theta(self, x: float) -> float:
        return self.slope * x

    def angle(self, x: float) -> float:
        """Accumulated rotation half-angle for total loss x."""
        return self.theta0 + self.slope * x


def calibrate_theta(l_target: float, l_max: float, mu: float,
                    beta_min: float = 0.0, beta_max: float = pi / 2,
                    inverted: bool = False) -> ThetaMap:
    """Fit the angle window for target loss l_target out of maximal loss l_max."""
    if not 0 < l_target < l_max:
        raise ValueError(f"need 0 < l_target < l_max, got {l_target} vs {l_max}")
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    a = asin(mu)
    if not -a < beta_min < a:
        raise ValueError(f"beta_min must lie in (-asin mu, asin mu) = (+-{a:.4f})")
    if not a < beta_max < pi - a:
        raise ValueError(f"beta_max must lie in (asin mu, pi - asin mu)")

    if not inverted:
        theta0 = max(beta_min, (l_max * a - l_target * beta_max) / (l_max - l_target))
    else:
        theta0 = min(beta_max, (l_max * a - l_target * beta_min) / (l_max - l_target))
    slope = (a - theta0) / l_target
    return ThetaMap(theta0, slope, l_target, l_max, mu, beta_min, beta_max, inverted)


def cover_all_theta(l_max: float, mu: float, margin: float = 0.8,
                    beta_min: float = 0.0) -> ThetaMap:
    """Angle map placing every loss strictly inside the filter plateau.

    Used to estimate the total (unfiltered) acceptance probability, e.g. the
    distribution-function value at the maximal loss.
    """
    a = asin(mu)
    slope = (a * margin - beta_min) / l_max
    return ThetaMap(beta_min, slope, l_max, l_max, mu, beta_min, pi / 2, False)


@dataclass(frozen=True)
class LoadingCircuit:
    """RY(2 theta0) on T then one closed-controlled RY(2 theta(l_i)) per counterparty."""

    op: sv.CircuitOp
    theta_map: ThetaMap
    n: int

    def angle_for_scenario(self, loss: float) -> float:
        return self.theta_map.angle(loss)


def build_loading(model: PortfolioModel, theta_map: ThetaMap,
                  c_register: str = "C", t_register: str = "T") -> LoadingCircuit:
    """Assemble the amplitude loader for the model under the calibrated map."""
    lo = theta_map.angle(0.0)
    hi = theta_map.angle(model.max_loss)
    window = (min(lo, hi), max(lo, hi))
    if window[0] < theta_map.beta_min - ANGLE_SLACK or window[1] > theta_map.beta_max + ANGLE_SLACK:
        raise ValueError(
            f"angle window [{window[0]:.6f}, {window[1]:.6f}] overflows "
            f"[{theta_map.beta_min:.6f}, {theta_map.beta_max:.6f}]")
    ops = [sv.ry((t_register, 0), 2.0 * theta_map.theta0)]
    for i in range(model.n):
        ops.append(sv.ry((t_register, 0), 2.0 * theta_map.theta(float(model.lgd[i])),
                         controls=(((c_register, i), 1),)))
    return LoadingCircuit(sv.seq(*ops, label="loss-loader"), theta_map, model.n)
