"""
Phase factors for realizing even polynomials through alternating signal and
processing rotations, plus their translation to the projector convention
the singular-value-transform circuit consumes.

Solver convention ("wx"): with W(t) = [[cos t, i sin t], [i sin t, cos t]]
and a real phase list (psi_0, ..., psi_d),

    U(t) = e^{i psi_0 Z} W(t) e^{i psi_1 Z} ... W(t) e^{i psi_d Z}

has top-left entry whose real part is an even/odd real polynomial in cos t
of degree <= d. Given a bounded even target P, we find a palindromic phase
list with Re U(t)[0,0] = P(cos t) by zero-residual least squares on the
d/2+1 positive Chebyshev nodes (Gauss-Newton steps, analytic Jacobian from
differentiating the matrix product; symmetric initialization pi/4 at both
ends, zero elsewhere).

The block circuit downstream needs the d-vector Phi of projector-rotation
phases such that its (T,B)=(0,0) diagonal equals P evaluated at the sine of
the loading angle. Reducing that circuit per scenario to a 2x2 product and
matching slot by slot gives the exact offset translation implemented in
projector_phases(); its end-to-end correctness is exercised by the
diagonal-identity tests rather than asserted here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy.optimize import least_squares

from .polyapprox import ChebyshevPolynomial

DEFAULT_RESIDUAL_TOL = 1e-8
DEFAULT_VERIFY_TOL = 1e-6


class PhaseSolveError(RuntimeError):
    """Raised when the optimizer cannot reach the requested residual."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


@dataclass(frozen=True)
class PhaseSequence:
    """Solved phase factors for one even polynomial.

    phases is the projector-convention vector (length = degree) consumed by
    the block circuit; wx_phases (length = degree+1, palindromic) is the
    solver-convention list used for reconstruction checks.
    """

    phases: np.ndarray
    wx_phases: np.ndarray
    degree: int
    polynomial_hash: str
    residual: float
    verification_error: float

    def __post_init__(self):
        if len(self.phases) != self.degree:
            raise ValueError("projector-phase vector must have length equal to the degree")
        if len(self.wx_phases) != self.degree + 1:
            raise ValueError("wx phase list must have length degree+1")


def signal_unitary(theta: float, phases) -> np.ndarray:
    """Product e^{i psi_0 Z} W(theta) e^{i psi_1 Z} ... W(theta) e^{i psi_d Z}.

    phases may be a PhaseSequence (its wx list is used) or a raw list of
    degree+1 reals. A single-entry list gives diag(e^{i psi_0}, e^{-i psi_0}).
    """
    psi = phases.wx_phases if isinstance(phases, PhaseSequence) else np.asarray(phases, float)
    c, s = np.cos(theta), np.sin(theta)
    w = np.array([[c, 1j * s], [1j * s, c]])
    u = np.diag([np.exp(1j * psi[0]), np.exp(-1j * psi[0])])
    for p in psi[1:]:
        u = u @ w @ np.diag([np.exp(1j * p), np.exp(-1j * p)])
    return u


def _tl_batch(xs: np.ndarray, psi: np.ndarray, want_grad: bool = False):
    """Top-left of the wx product at signal values cos(theta)=xs, batched.

    Optionally returns d/dpsi of the top-left as an array (d+1, len(xs)).
    """
    n = len(xs)
    d = len(psi) - 1
    s = np.sqrt(np.maximum(1.0 - xs ** 2, 0.0))
    w = np.zeros((n, 2, 2), dtype=complex)
    w[:, 0, 0] = xs
    w[:, 1, 1] = xs
    w[:, 0, 1] = 1j * s
    w[:, 1, 0] = 1j * s
    eph = np.exp(1j * psi)

    pre = np.empty((d + 1, n, 2, 2), dtype=complex)
    acc = np.zeros((n, 2, 2), dtype=complex)
    acc[:, 0, 0] = eph[0]
    acc[:, 1, 1] = np.conj(eph[0])
    pre[0] = acc
    for m in range(1, d + 1):
        acc = acc @ w
        acc = acc * np.array([eph[m], np.conj(eph[m])])[None, None, :]
        pre[m] = acc
    tl = pre[d][:, 0, 0]
    if not want_grad:
        return tl, None

    suf = np.empty((d + 1, n, 2), dtype=complex)
    cur = np.zeros((n, 2), dtype=complex)
    cur[:, 0] = 1.0
    suf[d] = cur
    for m in range(d - 1, -1, -1):
        cur = np.einsum("nij,nj->ni", w, cur * np.array([eph[m + 1], np.conj(eph[m + 1])])[None, :])
        suf[m] = cur
    # d TL / d psi_m = <0| (prefix through slot m) (i Z) (suffix after slot m) |0>
    grad = 1j * (pre[:, :, 0, 0] * suf[:, :, 0] - pre[:, :, 0, 1] * suf[:, :, 1])
    return tl, grad


def projector_phases(wx_phases: np.ndarray) -> np.ndarray:
    """Translate palindromic wx phases for P into the projector convention.

    The returned Phi (length d) makes the alternating block circuit evaluate
    P at the *sine* of the loading angle; constant pi/2 offsets and the odd-
    slot sign flips come from reducing that circuit to the wx product.
    """
    psi = np.asarray(wx_phases, dtype=float)
    d = len(psi) - 1
    if d % 2 != 0:
        raise ValueError("even degree required")
    if d == 0:
        return np.zeros(0)
    phi = np.empty(d)
    for m in range(1, d):
        phi[m - 1] = (-psi[m] - np.pi / 2) if m % 2 == 1 else (np.pi / 2 - psi[m])
    phi[d - 1] = np.pi / 2 - 2.0 * psi[0]
    return phi


def solve_phases(poly: ChebyshevPolynomial, tol: float = DEFAULT_RESIDUAL_TOL) -> PhaseSequence:
    """Find phases realizing the even polynomial; deterministic for fixed input.

    Raises PhaseSolveError (with the best residual) if the Chebyshev-node
    residual cannot be brought below tol.
    """
    coef = np.asarray(poly.coefficients, dtype=float)
    d = poly.degree
    if d % 2 != 0:
        raise ValueError("even degree required")
    if coef[1::2].size and np.max(np.abs(coef[1::2])) > 1e-15:
        raise ValueError("odd coefficients must be zero")

    if d == 0:
        wx = np.array([float(np.arccos(np.clip(coef[0], -1.0, 1.0)))])
        return PhaseSequence(np.zeros(0), wx, 0, poly.coefficient_hash(), 0.0,
                             verification_error=abs(float(np.cos(wx[0])) - coef[0]))

    nh = d // 2 + 1
    nodes = np.cos(np.pi * (2 * np.arange(1, nh + 1) - 1) / (4 * nh))
    targets = _cheb.chebval(nodes, coef)

    def full_of(reduced):
        return np.concatenate([reduced, reduced[-2::-1]])

    def residuals(reduced):
        tl, _ = _tl_batch(nodes, full_of(reduced))
        return tl.real - targets

    def jacobian(reduced):
        _, grad = _tl_batch(nodes, full_of(reduced), want_grad=True)
        gr = grad.real
        jac = np.empty((nh, nh))
        for j in range(nh):
            jac[:, j] = gr[j] + (gr[d - j] if j != d - j else 0.0)
        return jac

    reduced0 = np.zeros(nh)
    reduced0[0] = np.pi / 4
    result = least_squares(residuals, reduced0, jac=jacobian, method="lm",
                           xtol=2.3e-16, ftol=2.3e-16, gtol=2.3e-16, max_nfev=400)
    wx = full_of(result.x)
    residual = float(np.max(np.abs(residuals(result.x))))
    if residual > tol:
        raise PhaseSolveError(
            f"phase solve stalled: node residual {residual:.3e} > tol {tol:.1e}", residual)

    seq = PhaseSequence(projector_phases(wx), wx, d, poly.coefficient_hash(),
                        residual, verification_error=np.nan)
    verr = verify_phases(seq, poly, grid=max(d, 1000))
    return PhaseSequence(seq.phases, wx, d, seq.polynomial_hash, residual, verr)


def verify_phases(phases, poly: ChebyshevPolynomial, grid: int) -> float:
    """Max |Re top-left - P(cos theta)| over an equispaced theta grid."""
    psi = phases.wx_phases if isinstance(phases, PhaseSequence) else np.asarray(phases, float)
    d = len(psi) - 1
    if grid < max(d, 1):
        raise ValueError("grid must have at least degree points")
    theta = np.linspace(0.0, np.pi, grid)
    tl, _ = _tl_batch(np.cos(theta), psi)
    ref = _cheb.chebval(np.cos(theta), poly.coefficients)
    return float(np.max(np.abs(tl.real - ref)))


def phase_sequence_from_wx(wx_phases, poly: ChebyshevPolynomial) -> PhaseSequence:
    """Package externally known wx phases (e.g. exact closed forms) for reuse."""
    wx = np.asarray(wx_phases, dtype=float)
    d = len(wx) - 1
    verr = verify_phases(wx, poly, grid=max(d, 1000))
    return PhaseSequence(projector_phases(wx), wx, d, poly.coefficient_hash(),
                         residual=0.0, verification_error=verr)
