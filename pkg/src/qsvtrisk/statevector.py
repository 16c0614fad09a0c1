"""
Dense statevector simulator over named qubit registers.

Kept deliberately small: the circuits built elsewhere in this package only
need RY/RZ/X/H, their controlled variants (with open or closed controls),
uniformly-controlled RY, multi-controlled phase flips, and composition.
Dense simulation only; practical up to ~16-20 qubits.

Conventions, used everywhere in this package:
  - A register's qubit at offset o carries bit 2**o of the register's basis
    value (offset 0 = least significant bit).
  - Statevector amplitudes are stored as a tensor of shape (2,)*total with
    axis q belonging to qubit q of the layout (registers in declaration
    order, offsets ascending).
  - RY(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]],
    RZ(t) = diag(exp(-i t/2), exp(+i t/2)).
  - An open control (polarity 0) fires when the control qubit is |0>.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np

MAX_QUBITS = 20

Qubit = tuple[str, int]                 # (register name, offset)
Control = tuple[Qubit, int]             # (qubit, polarity 0|1)


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named registers; maps (register, offset) to a global qubit axis."""

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.registers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names in {names}")
        if any(size < 1 for _, size in self.registers):
            raise ValueError("register sizes must be >= 1")
        if self.total > MAX_QUBITS:
            raise ValueError(f"{self.total} qubits exceeds dense-simulation cap {MAX_QUBITS}")

    @property
    def total(self) -> int:
        return sum(size for _, size in self.registers)

    def size(self, name: str) -> int:
        for reg, size in self.registers:
            if reg == name:
                return size
        raise KeyError(f"no register named {name!r}")

    def axis(self, name: str, offset: int = 0) -> int:
        base = 0
        for reg, size in self.registers:
            if reg == name:
                if not 0 <= offset < size:
                    raise IndexError(f"offset {offset} out of range for register {name!r}[{size}]")
                return base + offset
            base += size
        raise KeyError(f"no register named {name!r}")

    def axes(self, name: str) -> list[int]:
        return [self.axis(name, o) for o in range(self.size(name))]


@dataclass(frozen=True)
class CircuitOp:
    """One gate or a composite sequence; immutable and composable.

    kind is one of 'ry', 'rz', 'x', 'h', 'ucry', 'mcz', 'seq'.
    """

    kind: str
    target: Qubit | None = None
    angle: float | None = None
    angles: tuple[float, ...] | None = None      # ucry, indexed by control basis value
    controls: tuple[Control, ...] = ()
    pattern: tuple[Control, ...] = ()            # mcz: amplitude sign flips where all match
    children: tuple["CircuitOp", ...] = ()
    label: str = ""


def ry(target: Qubit, angle: float, controls: tuple[Control, ...] = ()) -> CircuitOp:
    return CircuitOp("ry", target=target, angle=float(angle), controls=tuple(controls))


def rz(target: Qubit, angle: float, controls: tuple[Control, ...] = ()) -> CircuitOp:
    return CircuitOp("rz", target=target, angle=float(angle), controls=tuple(controls))


def x(target: Qubit, controls: tuple[Control, ...] = ()) -> CircuitOp:
    return CircuitOp("x", target=target, controls=tuple(controls))


def h(target: Qubit) -> CircuitOp:
    return CircuitOp("h", target=target)


def ucry(target: Qubit, controls: tuple[Qubit, ...], angles) -> CircuitOp:
    """Uniformly-controlled RY: RY(angles[v]) on target for each control value v.

    Controls are listed least-significant first; v = sum(bit_t * 2**t).
    """
    controls = tuple(controls)
    angles = tuple(float(a) for a in angles)
    if len(angles) != 2 ** len(controls):
        raise ValueError(f"need {2**len(controls)} angles, got {len(angles)}")
    return CircuitOp("ucry", target=target, angles=angles,
                     controls=tuple((q, 1) for q in controls))


def mcz(pattern: tuple[Control, ...]) -> CircuitOp:
    """Flip the amplitude sign on basis states where every (qubit, polarity) matches."""
    if not pattern:
        raise ValueError("mcz needs at least one (qubit, polarity) term")
    return CircuitOp("mcz", pattern=tuple(pattern))


def seq(*children: CircuitOp, label: str = "") -> CircuitOp:
    return CircuitOp("seq", children=tuple(children), label=label)


def adjoint(op: CircuitOp) -> CircuitOp:
    if op.kind == "seq":
        return replace(op, children=tuple(adjoint(c) for c in reversed(op.children)),
                       label=op.label + "^dag" if op.label else "")
    if op.kind in ("ry", "rz"):
        return replace(op, angle=-op.angle)
    if op.kind == "ucry":
        return replace(op, angles=tuple(-a for a in op.angles))
    if op.kind in ("x", "h", "mcz"):
        return op
    raise ValueError(f"unknown op kind {op.kind!r}")


@dataclass(frozen=True)
class Statevector:
    """Complex amplitudes as a (2,)*total tensor plus the register layout."""

    tensor: np.ndarray
    layout: RegisterLayout

    @classmethod
    def zero(cls, layout: RegisterLayout) -> "Statevector":
        t = np.zeros((2,) * layout.total, dtype=np.complex128)
        t[(0,) * layout.total] = 1.0
        return cls(t, layout)

    @classmethod
    def basis(cls, layout: RegisterLayout, values: dict[str, int]) -> "Statevector":
        """Computational basis state with each register set to the given value."""
        idx = [0] * layout.total
        for name, value in values.items():
            size = layout.size(name)
            if not 0 <= value < 2 ** size:
                raise ValueError(f"value {value} exceeds register {name!r}[{size}]")
            for o in range(size):
                idx[layout.axis(name, o)] = (value >> o) & 1
        t = np.zeros((2,) * layout.total, dtype=np.complex128)
        t[tuple(idx)] = 1.0
        return cls(t, layout)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor))

    def amplitude(self, values: dict[str, int]) -> complex:
        idx = [0] * self.layout.total
        for name, value in values.items():
            for o in range(self.layout.size(name)):
                idx[self.layout.axis(name, o)] = (value >> o) & 1
        return complex(self.tensor[tuple(idx)])


_RY = lambda t: np.array([[math.cos(t / 2), -math.sin(t / 2)],
                          [math.sin(t / 2), math.cos(t / 2)]], dtype=np.complex128)
_RZ = lambda t: np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)


def _1q_matrix(op: CircuitOp) -> np.ndarray:
    if op.kind == "ry":
        return _RY(op.angle)
    if op.kind == "rz":
        return _RZ(op.angle)
    if op.kind == "x":
        return _X
    if op.kind == "h":
        return _H
    raise ValueError(f"no 1q matrix for kind {op.kind!r}")


def _apply_1q(tensor: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(tensor, axis, 0)
    shape = moved.shape
    out = mat @ moved.reshape(2, -1)
    return np.moveaxis(out.reshape(shape), 0, axis)


def _apply_op(tensor: np.ndarray, op: CircuitOp, axis_of) -> np.ndarray:
    """Apply op to a tensor whose qubit axes are resolved by axis_of((reg, off)).

    Trailing non-qubit axes (e.g. a batch dimension) are carried through.
    """
    if op.kind == "seq":
        for child in op.children:
            tensor = _apply_op(tensor, child, axis_of)
        return tensor

    if op.kind == "mcz":
        idx = [slice(None)] * tensor.ndim
        for qubit, pol in op.pattern:
            idx[axis_of(qubit)] = pol
        tensor = tensor.copy()
        tensor[tuple(idx)] *= -1.0
        return tensor

    if op.kind == "ucry":
        taxis = axis_of(op.target)
        caxes = [axis_of(q) for q, _ in op.controls]
        if taxis in caxes:
            raise ValueError("control coincides with target")
        tensor = tensor.copy()
        for value, angle in enumerate(op.angles):
            idx = [slice(None)] * tensor.ndim
            for t, caxis in enumerate(caxes):
                idx[caxis] = (value >> t) & 1
            sub = tensor[tuple(idx)]
            sub_taxis = taxis - sum(1 for c in caxes if c < taxis)
            tensor[tuple(idx)] = _apply_1q(sub, _RY(angle), sub_taxis)
        return tensor

    # plain or controlled 1-qubit gate
    mat = _1q_matrix(op)
    taxis = axis_of(op.target)
    if not op.controls:
        return _apply_1q(tensor, mat, taxis)
    caxes = [axis_of(q) for q, _ in op.controls]
    if taxis in caxes or len(set(caxes)) != len(caxes):
        raise ValueError("malformed control set (control = target or repeated control)")
    idx = [slice(None)] * tensor.ndim
    for (_, pol), caxis in zip(op.controls, caxes):
        idx[caxis] = pol
    tensor = tensor.copy()
    sub = tensor[tuple(idx)]
    sub_taxis = taxis - sum(1 for c in caxes if c < taxis)
    tensor[tuple(idx)] = _apply_1q(sub, mat, sub_taxis)
    return tensor


def apply(state: Statevector, op: CircuitOp) -> Statevector:
    """Unitary image of the state; raises if the norm drifts beyond 1e-12."""
    out = _apply_op(state.tensor, op, lambda q: state.layout.axis(*q))
    new = Statevector(out, state.layout)
    if abs(new.norm() - 1.0) > 1e-12:
        raise ArithmeticError(f"statevector norm drifted to {new.norm()!r}")
    return new


def probability_of(state: Statevector, constraints) -> float:
    """Total probability of basis states consistent with [(register, value), ...]."""
    idx = [slice(None)] * state.layout.total
    for name, value in constraints:
        size = state.layout.size(name)
        if not 0 <= value < 2 ** size:
            raise ValueError(f"constraint value {value} exceeds register {name!r}[{size}]")
        for o in range(size):
            idx[state.layout.axis(name, o)] = (value >> o) & 1
    sub = state.tensor[tuple(idx)]
    return float(np.sum(np.abs(sub) ** 2))


def marginal_probabilities(state: Statevector, registers) -> np.ndarray:
    """Joint distribution over the listed registers, shape (2**s1, ..., 2**sk)."""
    probs = np.abs(state.tensor) ** 2
    keep: list[int] = []
    for name in registers:
        keep.extend(state.layout.axes(name))
    other = tuple(a for a in range(state.layout.total) if a not in keep)
    if other:
        probs = probs.sum(axis=other)
    # surviving axes follow ascending global order; rearrange so each listed
    # register forms a contiguous MSB-first block, then collapse per register
    pos = {a: i for i, a in enumerate(sorted(keep))}
    desired = []
    for name in registers:
        desired.extend(pos[a] for a in reversed(state.layout.axes(name)))
    probs = np.transpose(probs, desired)
    return probs.reshape([2 ** state.layout.size(name) for name in registers])


def sample(state: Statevector, registers, shots: int, seed: int) -> dict[tuple[int, ...], int]:
    """Multinomial draw over the joint values of the listed registers.

    Deterministic for a fixed seed. Keys are tuples of register values.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = marginal_probabilities(state, registers).reshape(-1)
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    sizes = [state.layout.size(name) for name in registers]
    out: dict[tuple[int, ...], int] = {}
    for flat, cnt in enumerate(counts):
        if cnt == 0:
            continue
        key = []
        rem = flat
        for size in reversed(sizes):
            key.append(rem % (2 ** size))
            rem //= 2 ** size
        out[tuple(reversed(key))] = int(cnt)
    return out


def to_matrix(op: CircuitOp, layout: RegisterLayout, registers=None) -> np.ndarray:
    """Dense unitary of op over the given registers (default: all of layout).

    The column index is the input basis state with the FIRST listed register
    as the least significant block, matching Statevector.basis ordering.
    """
    regs = [name for name, _ in layout.registers] if registers is None else list(registers)
    axes_map: dict[Qubit, int] = {}
    pos = 0
    for name in regs:
        for o in range(layout.size(name)):
            axes_map[(name, o)] = pos
            pos += 1
    dim = 2 ** pos

    def axis_of(q):
        if q not in axes_map:
            raise KeyError(f"op touches qubit {q} outside registers {regs}")
        return axes_map[q]

    batch = np.eye(dim, dtype=np.complex128)
    # row index (axis set) little-endian over qubits: bit b of row -> axis b
    tensor = batch.reshape((2,) * pos + (dim,), order="F")
    tensor = _apply_op(tensor, op, axis_of)
    return tensor.reshape((dim, dim), order="F")


def compile_factors(op: CircuitOp, layout: RegisterLayout, max_qubits: int = 8):
    """Flatten op into [('diag', tensor) | ('matrix', mat, axes)] factors.

    Subtrees touching at most max_qubits qubits are compiled to dense
    matrices; mcz nodes become broadcastable diagonal tensors. Used for fast
    repeated application inside amplitude estimation.
    """
    factors = []

    def support(node: CircuitOp) -> set[int]:
        if node.kind == "seq":
            return set().union(*(support(c) for c in node.children)) if node.children else set()
        qs = set()
        if node.target is not None:
            qs.add(layout.axis(*node.target))
        for q, _ in node.controls:
            qs.add(layout.axis(*q))
        for q, _ in node.pattern:
            qs.add(layout.axis(*q))
        return qs

    def emit(node: CircuitOp):
        if node.kind == "mcz":
            # broadcastable diagonal: shape 2 on constrained axes, 1 elsewhere
            axes = {layout.axis(*q) for q, _ in node.pattern}
            shape = [2 if a in axes else 1 for a in range(layout.total)]
            d = np.ones(shape)
            idx = [0] * layout.total
            for q, pol in node.pattern:
                idx[layout.axis(*q)] = pol
            d[tuple(idx[a] if shape[a] == 2 else 0 for a in range(layout.total))] = -1.0
            factors.append(("diag", d))
            return
        sup = support(node)
        if len(sup) <= max_qubits and node.kind != "seq":
            axes = sorted(sup)
            factors.append(("matrix", _submatrix(node, layout, axes), axes))
        elif node.kind == "seq":
            # try compiling the whole subtree at once, else recurse
            if 0 < len(sup) <= max_qubits and not _contains_mcz(node):
                axes = sorted(sup)
                factors.append(("matrix", _submatrix(node, layout, axes), axes))
            else:
                for c in node.children:
                    emit(c)
        else:
            raise ValueError(f"gate spans {len(sup)} qubits > max_qubits={max_qubits}")

    emit(op)
    return factors


def _contains_mcz(node: CircuitOp) -> bool:
    if node.kind == "mcz":
        return True
    return any(_contains_mcz(c) for c in node.children)


def _submatrix(node: CircuitOp, layout: RegisterLayout, axes: list[int]) -> np.ndarray:
    pos_of = {a: i for i, a in enumerate(axes)}

    def axis_of(q):
        return pos_of[layout.axis(*q)]

    m = len(axes)
    dim = 2 ** m
    tensor = np.eye(dim, dtype=np.complex128).reshape((2,) * m + (dim,), order="F")
    tensor = _apply_op(tensor, node, axis_of)
    return tensor.reshape((dim, dim), order="F")


def apply_factors(tensor: np.ndarray, factors) -> np.ndarray:
    """Apply compiled factors to a (2,)*total amplitude tensor."""
    for item in factors:
        if item[0] == "diag":
            tensor = tensor * item[1]
        else:
            _, mat, axes = item
            m = len(axes)
            mt = mat.reshape((2,) * (2 * m), order="F")
            # contract input indices (last m of mt, little-endian) with tensor axes
            tensor = np.tensordot(mt, tensor, axes=(list(range(m, 2 * m)), axes))
            # output axes land in front (little-endian order); move them back
            tensor = np.moveaxis(tensor, range(m), axes)
    return tensor


def gate_counts(op: CircuitOp) -> dict[str, int]:
    """Leaf-gate census; ucry reported as 2**(#controls) controlled rotations."""
    counts: dict[str, int] = {}

    def add(key, n=1):
        counts[key] = counts.get(key, 0) + n

    def walk(node: CircuitOp):
        if node.kind == "seq":
            for c in node.children:
                walk(c)
        elif node.kind == "ucry":
            add("cry", 2 ** len(node.controls))
        elif node.kind == "mcz":
            add("mcz")
        elif node.kind in ("ry", "rz", "x", "h"):
            add(("c" + node.kind) if node.controls else node.kind)
        else:
            raise ValueError(f"unknown op kind {node.kind!r}")

    walk(op)
    return counts


def controlled_rotation_count(op: CircuitOp) -> int:
    counts = gate_counts(op)
    return counts.get("cry", 0) + counts.get("crz", 0)
