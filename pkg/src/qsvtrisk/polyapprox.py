"""
Bounded even Chebyshev approximations of the scenario-filter targets.

Two target families:
  - threshold_target: a k-scaled indicator of |x| <= mu, smoothed over a
    band of half-width delta around the jump so that a moderate-degree
    Chebyshev expansion converges fast. The transition kernel is an error
    function of a reparametrized argument that saturates at the band edges,
    so the target equals k resp. 0 *exactly* outside ||x|-mu| <= delta.
  - cvar_target: k * sqrt(mu^2 - x^2) on [-mu, mu], zero outside. Continuous
    but not smooth at +-mu; coefficients decay algebraically, so expect a
    larger certified error at equal degree.

Coefficients come from discrete Chebyshev-Gauss quadrature (a cosine
transform at >= 2d nodes), odd coefficients are forced to zero, and the
result is rescaled if needed so the dense-grid sup norm stays below 1,
which the singular-value transform downstream requires.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy.special import erf

SUP_NORM_CAP = 1.0 - 1e-4
DENSE_GRID = 10_000
_EDGE_SHARPNESS = 2.5   # saturating-erf steepness; keeps the d=1000 tail ~1e-4


@dataclass(frozen=True)
class TargetFunction:
    """Callable filter target plus the metadata the certificate needs."""

    kind: str                 # 'threshold' | 'cvar'
    mu: float
    k: float
    delta: float              # smoothing half-width; 0 for cvar
    fn: object

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def _saturating_step(t: np.ndarray) -> np.ndarray:
    """C-infinity ramp: exactly 0 for t <= 0, exactly 1 for t >= 1, monotone."""
    t = np.clip(t, 0.0, 1.0)
    u = 2.0 * t - 1.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        arg = np.where(np.abs(u) < 1.0,
                       _EDGE_SHARPNESS * u / np.sqrt(np.maximum(1.0 - u * u, 1e-300)),
                       np.sign(u) * np.inf)
        val = 0.5 * (1.0 + erf(arg))
    return np.where(t <= 0.0, 0.0, np.where(t >= 1.0, 1.0, val))


def threshold_target(mu: float, k: float, delta: float) -> TargetFunction:
    """Smoothed k-scaled indicator of |x| <= mu.

    Equal to k for |x| <= mu - delta and to 0 for |x| >= mu + delta (exactly,
    which is well within the contracted 1e-12), with a monotone transition
    across the band and value k/2 at |x| = mu.
    """
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    if not 0 < k < 1:
        raise ValueError("k must lie in (0, 1)")
    if delta <= 0:
        raise ValueError("delta must be positive")

    def fn(x):
        return k * _saturating_step((mu + delta - np.abs(x)) / (2.0 * delta))

    return TargetFunction("threshold", float(mu), float(k), float(delta), fn)


def cvar_target(mu: float, k: float) -> TargetFunction:
    """k * sqrt(mu^2 - x^2) inside [-mu, mu], zero outside."""
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    if not 0 < k <= 1:
        raise ValueError("k must lie in (0, 1]")

    def fn(x):
        return k * np.sqrt(np.maximum(mu * mu - x * x, 0.0))

    return TargetFunction("cvar", float(mu), float(k), 0.0, fn)


@dataclass(frozen=True)
class ChebyshevPolynomial:
    """Even Chebyshev expansion with its approximation certificate."""

    coefficients: np.ndarray   # length degree+1, odd entries exactly zero
    degree: int
    mu: float
    k: float                   # effective plateau scale (after any rescale)
    delta: float
    kind: str
    sup_norm: float            # measured on the dense grid
    outside_band_error: float  # max |P - k*tau_mu| off the delta-bands (threshold)
    max_target_error: float    # max |P - target| on the dense grid
    post_scale: float          # applied to keep sup norm under the cap

    def coefficient_hash(self) -> str:
        import hashlib
        return hashlib.sha256(np.ascontiguousarray(self.coefficients).tobytes()).hexdigest()


def evaluate(poly: ChebyshevPolynomial, x):
    """Clenshaw evaluation; domain is [-1, 1]."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-12):
        raise ValueError("evaluation point outside [-1, 1]")
    out = _cheb.chebval(np.clip(arr, -1.0, 1.0), poly.coefficients)
    return float(out) if np.isscalar(x) else out


def approximate(target: TargetFunction, d: int) -> ChebyshevPolynomial:
    """Project the target on even Chebyshev polynomials up to degree d.

    Uses Chebyshev-Gauss quadrature at 2d+2 nodes, zeroes the odd
    coefficients (raising if the target carries genuine odd mass), rescales
    below the sup-norm cap, and records the error certificate.
    """
    if d < 4 or d % 2 != 0:
        raise ValueError("degree must be even and >= 4")
    nodes = 2 * d + 2
    theta = np.pi * (np.arange(nodes) + 0.5) / nodes
    values = target(np.cos(theta))
    ks = np.arange(d + 1)
    coef = (2.0 / nodes) * np.cos(np.outer(ks, theta)) @ values
    coef[0] *= 0.5

    odd_mass = float(np.max(np.abs(coef[1::2]))) if d >= 1 else 0.0
    if odd_mass > 1e-10:
        raise ValueError(f"target is not even: odd-coefficient mass {odd_mass:.3e}")
    coef[1::2] = 0.0

    grid = np.linspace(-1.0, 1.0, DENSE_GRID)
    vals = _cheb.chebval(grid, coef)
    sup = float(np.max(np.abs(vals)))
    scale = 1.0
    if sup > SUP_NORM_CAP:
        scale = SUP_NORM_CAP / sup
        coef = coef * scale
        vals = vals * scale
    effective_k = target.k * scale

    tau = np.where(np.abs(grid) <= target.mu, effective_k, 0.0)
    if target.kind == "threshold":
        off_band = np.abs(np.abs(grid) - target.mu) > target.delta
        outside = float(np.max(np.abs(vals - tau)[off_band]))
    else:
        outside = float(np.max(np.abs(vals - scale * target(grid))))
    max_target_err = float(np.max(np.abs(vals - scale * target(grid))))

    return ChebyshevPolynomial(
        coefficients=coef, degree=d, mu=target.mu, k=effective_k,
        delta=target.delta, kind=target.kind,
        sup_norm=float(np.max(np.abs(vals))), outside_band_error=outside,
        max_target_error=max_target_err, post_scale=scale)


def constant_polynomial(k: float, d: int = 4) -> ChebyshevPolynomial:
    """Degree-d representation of the constant k (only c0 nonzero)."""
    coef = np.zeros(d + 1)
    coef[0] = k
    return ChebyshevPolynomial(coef, d, mu=0.5, k=k, delta=0.0, kind="constant",
                               sup_norm=abs(k), outside_band_error=0.0,
                               max_target_error=0.0, post_scale=1.0)
