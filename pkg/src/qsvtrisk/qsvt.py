"""
Assembly of the singular-value-transform block circuit around the loss
loader A, with projectors Pi = |0><0|_T and Pi~ = |1><1|_T.

Structure (application order, d even):

    H_B, then for j = 1..d:
        j odd:  A,        X_B open-controlled on T, RZ_B(2 phi_j), X_B open-controlled on T
        j even: A-dagger, X_B controlled on T,      RZ_B(2 phi_j), X_B controlled on T
    then H_B.

The controlled-X / RZ(2 phi) / controlled-X sandwich equals the projector
phase RZ(-2 phi) on the projected block and RZ(+2 phi) on its complement
(phase kickback); ej_equivalence_check verifies that identity on dense
matrices. With phases translated from the solver convention, the circuit's
(T,B)=(0,0) diagonal equals P(sin(alpha_j)) per scenario, alpha_j the
loading angle; diagonal_action exposes that vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .loading import LoadingCircuit
from .polyapprox import ChebyshevPolynomial
from .qsp import PhaseSequence


@dataclass(frozen=True)
class QsvtCircuit:
    op: sv.CircuitOp
    degree: int
    loading: LoadingCircuit
    phases: PhaseSequence
    c_register: str = "C"
    t_register: str = "T"
    b_register: str = "B"

    def layout(self) -> sv.RegisterLayout:
        return sv.RegisterLayout(((self.c_register, self.loading.n),
                                  (self.t_register, 1), (self.b_register, 1)))


def build_qsvt(loading: LoadingCircuit, phases: PhaseSequence,
               c_register: str = "C", t_register: str = "T",
               b_register: str = "B") -> QsvtCircuit:
    """Alternate A / A-dagger blocks with projector phase sandwiches."""
    d = phases.degree
    if d % 2 != 0 or d < 2:
        raise ValueError("an even phase count >= 2 is required")
    t = (t_register, 0)
    b = (b_register, 0)
    a_dag = sv.adjoint(loading.op)
    blocks: list[sv.CircuitOp] = [sv.h(b)]
    for j in range(1, d + 1):
        phi = float(phases.phases[j - 1])
        if j % 2 == 1:
            blocks.append(sv.seq(
                loading.op,
                sv.x(b, controls=((t, 0),)),
                sv.rz(b, 2.0 * phi),
                sv.x(b, controls=((t, 0),)),
                label=f"block-{j}"))
        else:
            blocks.append(sv.seq(
                a_dag,
                sv.x(b, controls=((t, 1),)),
                sv.rz(b, 2.0 * phi),
                sv.x(b, controls=((t, 1),)),
                label=f"block-{j}"))
    blocks.append(sv.h(b))
    return QsvtCircuit(sv.seq(*blocks, label="qsvt"), d, loading, phases,
                       c_register, t_register, b_register)


def diagonal_action(qsvt: QsvtCircuit, loading: LoadingCircuit | None = None,
                    poly: ChebyshevPolynomial | None = None) -> np.ndarray:
    """Per-scenario amplitudes <j,0_T,0_B| Q |j,0_T,0_B>, returned as reals.

    With phases solved for poly these equal poly evaluated at sin(alpha_j).
    Passing poly checks the phase provenance matches it.
    """
    if poly is not None and poly.coefficient_hash() != qsvt.phases.polynomial_hash:
        raise ValueError("phase sequence was not solved for this polynomial")
    layout = qsvt.layout()
    n = qsvt.loading.n
    mat = sv.to_matrix(qsvt.op, layout)
    # with layout (C, T, B) the index of |j, 0, 0> is j itself
    diag = np.diagonal(mat)[: 2 ** n]
    if np.max(np.abs(diag.imag)) > 1e-9:
        raise ArithmeticError("diagonal drifted off the real axis")
    return diag.real.copy()


def ej_equivalence_check(phi: float, projector_diag, seed: int | None = None) -> float:
    """Max |R_j - E_j| over dense matrices for a diagonal projector.

    R_j = (Pi X_B + Pi_perp) RZ_B(2 phi) (Pi X_B + Pi_perp)  versus the
    phase-kickback form E_j = Pi RZ_B(-2 phi) + Pi_perp RZ_B(2 phi).
    Ordering: system tensor B.
    """
    diag = np.asarray(projector_diag, dtype=float)
    if seed is not None:
        diag = (np.random.default_rng(seed).random(len(diag)) < 0.5).astype(float)
    pi_ = np.diag(diag)
    pi_perp = np.eye(len(diag)) - pi_
    x_b = np.array([[0.0, 1.0], [1.0, 0.0]])
    rz = lambda lam: np.diag([np.exp(-0.5j * lam), np.exp(0.5j * lam)])
    ctrl = np.kron(pi_, x_b) + np.kron(pi_perp, np.eye(2))
    r_j = ctrl @ np.kron(np.eye(len(diag)), rz(2.0 * phi)) @ ctrl
    e_j = np.kron(pi_, rz(-2.0 * phi)) + np.kron(pi_perp, rz(2.0 * phi))
    return float(np.max(np.abs(r_j - e_j)))
