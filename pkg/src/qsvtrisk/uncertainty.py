"""
The scenario-distribution loader: prepares registers Z and C so that
measuring C yields scenario j with exactly the classical probability p_j.

Construction:
  1. per factor, amplitude-encode the discretized truncated Gaussian via a
     rotation tree (plain RY on the factor's top qubit, then uniformly
     controlled RYs for the lower bits, angles from conditional probability
     halves);
  2. per counterparty i, a uniformly controlled RY on C_i conditioned on the
     full Z basis state g with angle 2*arcsin(sqrt(pd_i(z_g))).

Exact by construction at this scale; depth is not a concern here because the
scaling analysis downstream only covers the filter block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .portfolio import PortfolioModel, conditional_pd, factor_grid

CAPACITY_QUBITS = 18


@dataclass(frozen=True)
class UncertaintyCircuit:
    op: sv.CircuitOp
    z_qubits: int
    n: int


def uncertainty_layout(model: PortfolioModel) -> sv.RegisterLayout:
    return sv.RegisterLayout((("Z", model.num_factors * model.qubits_per_factor),
                              ("C", model.n)))


def _rotation_tree(probs: np.ndarray, register: str, base_offset: int) -> list[sv.CircuitOp]:
    """Ops preparing amplitudes sqrt(probs) on z qubits starting at base_offset.

    Qubit base_offset+b carries bit b of the encoded index (little-endian).
    """
    z = int(np.log2(len(probs)))
    assert 2 ** z == len(probs)
    ops: list[sv.CircuitOp] = []
    for b in range(z - 1, -1, -1):
        high_bits = z - 1 - b
        angles = []
        for hv in range(2 ** high_bits):
            # mass of branches with the already-prepared high bits equal to hv
            mask_total = 0.0
            mask_one = 0.0
            for v in range(len(probs)):
                if (v >> (b + 1)) == hv:
                    mask_total += probs[v]
                    if (v >> b) & 1:
                        mask_one += probs[v]
            p0 = mask_total - mask_one
            angles.append(2.0 * np.arctan2(np.sqrt(max(mask_one, 0.0)),
                                           np.sqrt(max(p0, 0.0))))
        if high_bits == 0:
            ops.append(sv.ry((register, base_offset + b), angles[0]))
        else:
            controls = tuple((register, base_offset + b + 1 + t) for t in range(high_bits))
            ops.append(sv.ucry((register, base_offset + b), controls, angles))
    return ops


def build_uncertainty(model: PortfolioModel, z_register: str = "Z",
                      c_register: str = "C") -> UncertaintyCircuit:
    """Build the distribution loader; marginal of C equals enumerate_scenarios."""
    f, z, n = model.num_factors, model.qubits_per_factor, model.n
    if f * z + n > CAPACITY_QUBITS:
        raise ValueError(f"{f * z + n} qubits exceed the loader capacity {CAPACITY_QUBITS}")
    points, weights = factor_grid(model)

    ops: list[sv.CircuitOp] = []
    for factor in range(f):
        ops.extend(_rotation_tree(weights, z_register, factor * z))

    z_total = f * z
    z_controls = tuple((z_register, q) for q in range(z_total))
    for i in range(n):
        angles = []
        for g in range(2 ** z_total):
            zvec = np.array([points[(g >> (factor * z)) & (2 ** z - 1)]
                             for factor in range(f)])
            pd = float(conditional_pd(model, i, zvec))
            angles.append(2.0 * np.arcsin(np.sqrt(pd)))
        ops.append(sv.ucry((c_register, i), z_controls, angles))

    return UncertaintyCircuit(sv.seq(*ops, label="uncertainty"), z_total, n)
