"""
Composite sequence descriptors and their evaluation.

A sequence is an immutable tree of nodes. Concat parts are listed in time order:
the first part acts first, so its matrix is the rightmost factor of the product.
Subtrees are shared freely; evaluation memoizes on node identity.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from composite_cnot import params as params_module
from composite_cnot.params import (
    A1_FACTORS,
    A2_FACTORS,
    THETA0,
    VALID_K,
    InvalidParamsError,
    ParamTable,
    SequenceError,
    SequenceParams,
)
from composite_cnot.su4_algebra import (
    HADAMARD,
    IDENTITY4,
    SINGLE_QUBIT_PAULIS,
    ZZ,
    AlgebraError,
    PauliIndex,
    PauliString,
    commutation_sign,
    local_gate,
    pauli_matrix,
    pauli_rotation,
    phase_normalized,
    su2_exp,
)

logger = logging.getLogger(__name__)

XX = PauliString.parse("XX")
ZI = PauliString.parse("ZI")
XI = PauliString.parse("XI")
IY = PauliString.parse("IY")

ANGLE_MATCH_TOLERANCE = 1e-12


class InvalidEchoError(SequenceError):
    """Exception raised when echo pulses cannot form the requested sequence."""

    pass


class DescriptorError(SequenceError):
    """Exception raised when a sequence descriptor cannot be parsed."""

    pass


@dataclass(frozen=True, eq=False)
class EntanglingBlock:
    """One application of the (possibly noisy) building block exp[-i angle/2 ZZ]."""

    angle: float


@dataclass(frozen=True, eq=False)
class LocalGate:
    """An ideal local gate a (x) b, kept with its tensor factors."""

    factors: Tuple[np.ndarray, np.ndarray]
    label: str = "local"
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", local_gate(*self.factors))


@dataclass(frozen=True, eq=False)
class EchoWrap:
    """echo . inner . echo"""

    echo: PauliString
    inner: "SequenceNode"


@dataclass(frozen=True, eq=False)
class Concat:
    parts: Tuple["SequenceNode", ...]


@dataclass(frozen=True, eq=False)
class Power:
    inner: "SequenceNode"
    n: int


SequenceNode = Union[EntanglingBlock, LocalGate, EchoWrap, Concat, Power]


# --- primitive constructors -------------------------------------------------


def zz_rotation(theta: float) -> EntanglingBlock:
    """The building block (theta)_ZZ = exp[-i theta/2 ZZ]."""
    return EntanglingBlock(float(theta))


def concat(*parts: SequenceNode) -> Concat:
    return Concat(tuple(parts))


def power(inner: SequenceNode, n: int) -> SequenceNode:
    if n < 1:
        raise SequenceError(f"Power must be positive, got {n}")
    return inner if n == 1 else Power(inner, int(n))


def rotation(axis: PauliString, angle: float, label: Optional[str] = None) -> LocalGate:
    """
    Single-qubit rotation exp[-i angle/2 sigma_axis] for an axis like XI or IY.

    Raises:
        SequenceError: If the axis acts on both qubits
    """
    if axis.first != PauliIndex.I and axis.second != PauliIndex.I:
        raise SequenceError(f"Rotation axis {axis} is not local to one qubit")
    if axis.is_identity:
        raise SequenceError("Rotation axis must not be the identity")
    half = angle / 2
    eye = np.eye(2, dtype=complex)
    if axis.first != PauliIndex.I:
        factors = (np.cos(half) * eye - 1j * np.sin(half) * SINGLE_QUBIT_PAULIS[axis.first], eye)
    else:
        factors = (eye, np.cos(half) * eye - 1j * np.sin(half) * SINGLE_QUBIT_PAULIS[axis.second])
    return LocalGate(factors, label or f"R{axis.name}({angle:.6g})")


def pauli_gate(p: PauliString) -> LocalGate:
    return LocalGate(
        (SINGLE_QUBIT_PAULIS[p.first].copy(), SINGLE_QUBIT_PAULIS[p.second].copy()),
        p.name,
    )


def _z_phase(angle: float) -> np.ndarray:
    """exp(-i angle/2 Z) on one qubit."""
    return su2_exp(np.array([0.0, 0.0, angle / 2]))


A1_GATE = LocalGate(A1_FACTORS, "A1")
A2_GATE = LocalGate(A2_FACTORS, "A2")
TARGET_HADAMARD = LocalGate((np.eye(2, dtype=complex), HADAMARD.copy()), "IH")
# exp(i pi/4 ZI) exp(i pi/4 IZ) (I (x) H): with exp(-i pi/4 ZZ) between the two
# Hadamard layers this is CZ conjugated into CNOT.
ISING_DRESSING = LocalGate((_z_phase(-np.pi / 2), _z_phase(-np.pi / 2) @ HADAMARD), "CZ_DRESSING")
# Same role for the sqrt(SWAP) construction, which contributes ZI exp(-i pi/4 ZZ)
SQRT_SWAP_DRESSING = LocalGate((_z_phase(np.pi / 2), _z_phase(-np.pi / 2) @ HADAMARD), "SWAP_DRESSING")
SQRT_SWAP_FLIP = rotation(ZI, np.pi, "RZI(pi)")

BUILTIN_LOCALS = {
    "A1": A1_GATE,
    "A2": A2_GATE,
    "H2": TARGET_HADAMARD,
    "CZ_DRESSING": ISING_DRESSING,
    "SWAP_DRESSING": SQRT_SWAP_DRESSING,
}


# --- echo sequences ---------------------------------------------------------


def length2(inner: SequenceNode, echo: PauliString) -> Concat:
    """
    inner . echo . inner . echo, i.e. the echo-wrapped copy acts first.

    Cancels, to all orders, every error channel that commutes with ZZ and
    anticommutes with the echo.
    """
    if commutation_sign(echo, ZZ) == -1:
        logger.warning(
            f"Echo {echo} anticommutes with ZZ; the length-2 sequence is a local operation"
        )
    return Concat((EchoWrap(echo, inner), inner))


def length4(inner: SequenceNode, echo_a: PauliString, echo_b: PauliString) -> Concat:
    """
    length2(length2(inner, echo_a), echo_b).

    Raises:
        InvalidEchoError: If an echo anticommutes with ZZ or the echoes commute
    """
    for echo in (echo_a, echo_b):
        if commutation_sign(echo, ZZ) != 1 or echo.is_identity:
            raise InvalidEchoError(f"Echo {echo} must be a non-identity string commuting with ZZ")
    if commutation_sign(echo_a, echo_b) == 1:
        raise InvalidEchoError(
            f"Echoes {echo_a} and {echo_b} commute and address the same channels"
        )
    return length2(length2(inner, echo_a), echo_b)


def five_piece(inner: SequenceNode) -> Concat:
    """inner inner (ZZ inner ZZ) inner inner."""
    return Concat((inner, inner, EchoWrap(ZZ, inner), inner, inner))


def length5(theta0: float = THETA0) -> Concat:
    """Five blocks of theta0 with a ZZ echo around the middle one."""
    return five_piece(zz_rotation(theta0))


def length10(theta0: float = THETA0, echo: PauliString = XX, interchanged: bool = False) -> Concat:
    """
    Length-5 nesting of a length-2 sequence at theta0/2 per block.

    With interchanged=True the length-5 sequence is the inner layer.
    """
    block = zz_rotation(theta0 / 2)
    if interchanged:
        return length2(five_piece(block), echo)
    return five_piece(length2(block, echo))


def length20(theta0: float = THETA0, interchanged: bool = False) -> Concat:
    """U5[U2_XX[U2_ZI[(theta0/4)_ZZ]]]; interchanged puts U5 innermost."""
    block = zz_rotation(theta0 / 4)
    if interchanged:
        return length2(length2(five_piece(block), ZI), XX)
    return five_piece(length2(length2(block, ZI), XX))


def uk(k: int, theta0: float = THETA0) -> Concat:
    """The standard U^(k) for k in {5, 10, 20}; each block rotates by 5 theta0 / k."""
    if k == 5:
        return length5(theta0)
    if k == 10:
        return length10(theta0)
    if k == 20:
        return length20(theta0)
    raise InvalidParamsError(f"k must be one of {VALID_K}, got {k}")


def echo_sequence(echoes: Sequence[PauliString], theta: float) -> Concat:
    """
    The general echo-interleaved product of blocks of angle theta.

    echoes[0] wraps the block that acts first; identity echoes add no gates.
    """
    block = zz_rotation(theta)
    return Concat(
        tuple(block if echo.is_identity else EchoWrap(echo, block) for echo in echoes)
    )


# --- CNOT constructions -----------------------------------------------------


def cnot_from_uk(k: int, table: Optional[ParamTable] = None) -> Concat:
    """
    A1 R_XI(psi) U^(k) R_XI(phi) U^(k) R_XI(psi) A2, with A2 acting first.

    R_XI(a) = exp[-i a/2 XI]; psi and phi are the closed-form constants.
    """
    table = table or params_module.PUBLISHED
    u = uk(k, table.theta0)
    r_psi = rotation(XI, table.eq10_psi)
    return Concat(
        (A2_GATE, r_psi, u, rotation(XI, table.eq10_phi), u, r_psi, A1_GATE)
    )


def zz_corrected(k: int, params: SequenceParams, inner: Optional[SequenceNode] = None) -> Concat:
    """
    (prod_{j=4..1} exp[i psi_j/2 IY] U^{n_j} exp[-i psi_j/2 IY]) U, with U = U^(k).

    Args:
        k: Length of the inner sequence (5, 10 or 20)
        params: Tilt angles psi and repetitions n
        inner: Optional replacement for U^(k)

    Raises:
        InvalidParamsError: If params are inconsistent with k
    """
    if params.k != k:
        raise InvalidParamsError(f"Parameters for k={params.k} used with k={k}")
    u = inner if inner is not None else uk(k)
    parts: List[SequenceNode] = [u]
    for psi, n in zip(params.psi, params.n):
        parts.extend((rotation(IY, psi), power(u, n), rotation(IY, -psi)))
    return Concat(tuple(parts))


def cnot_final(k: int, params: Optional[SequenceParams] = None) -> Concat:
    """A1 exp[-i phi1/2 IY] U^(6k) exp[-i phi2/2 IY] A2, with A2 acting first."""
    params = params or params_module.PUBLISHED.cnot[k]
    if params.target != "cnot":
        raise InvalidParamsError("cnot_final needs CNOT-target parameters")
    return Concat(
        (
            A2_GATE,
            rotation(IY, params.phi2),
            zz_corrected(k, params),
            rotation(IY, params.phi1),
            A1_GATE,
        )
    )


def self_similar(k: int, params: Optional[SequenceParams] = None) -> Concat:
    """
    XI^m exp[-i beta/2 IY] U^(6k) XI^m exp[-i gamma/2 IY], a corrected (5 theta0/k)_ZZ.
    """
    params = params or params_module.PUBLISHED.self_similar[k]
    if params.target != "self-similar":
        raise InvalidParamsError("self_similar needs self-similar parameters")
    flip = (pauli_gate(XI),) if params.m else ()
    return Concat(
        (rotation(IY, params.gamma),)
        + flip
        + (zz_corrected(k, params), rotation(IY, params.beta))
        + flip
    )


def uncorrected_cnot_ising() -> Concat:
    """One (pi/2)_ZZ block dressed into CNOT by ideal local gates."""
    return Concat((ISING_DRESSING, zz_rotation(np.pi / 2), TARGET_HADAMARD))


def length2_cnot(echo: PauliString = XX) -> Concat:
    """A length-2 sequence at pi/4 per block dressed into CNOT."""
    return Concat((ISING_DRESSING, length2(zz_rotation(np.pi / 4), echo), TARGET_HADAMARD))


def uncorrected_cnot_sqrt_swap() -> Concat:
    """
    CNOT from two sqrt(SWAP) gates around a pi rotation about ZI.

    Each block of angle pi/4 is a sqrt(SWAP) when evolved under an isotropic
    Heisenberg coupling. The ZI flip also commutes with ZZ blocks, so the
    construction is a CNOT under the Ising block rule too.
    """
    swap_half = zz_rotation(np.pi / 4)
    return Concat(
        (SQRT_SWAP_DRESSING, swap_half, SQRT_SWAP_FLIP, swap_half, TARGET_HADAMARD)
    )


def nest(node: SequenceNode, replacement: SequenceNode, angle: float) -> SequenceNode:
    """
    Replace every block of the given angle by `replacement`, keeping shared subtrees shared.

    Raises:
        SequenceError: If a block with a different angle is found
    """
    memo: Dict[int, SequenceNode] = {}

    def visit(n: SequenceNode) -> SequenceNode:
        key = id(n)
        if key in memo:
            return memo[key]
        if isinstance(n, EntanglingBlock):
            if abs(n.angle - angle) > ANGLE_MATCH_TOLERANCE:
                raise SequenceError(
                    f"Block angle {n.angle:.12g} does not match replacement angle {angle:.12g}"
                )
            out = replacement
        elif isinstance(n, LocalGate):
            out = n
        elif isinstance(n, EchoWrap):
            out = EchoWrap(n.echo, visit(n.inner))
        elif isinstance(n, Concat):
            out = Concat(tuple(visit(p) for p in n.parts))
        elif isinstance(n, Power):
            out = Power(visit(n.inner), n.n)
        else:
            raise SequenceError(f"Unknown node type {type(n).__name__}")
        memo[key] = out
        return out

    return visit(node)


def second_order_cnot(table: Optional[ParamTable] = None) -> SequenceNode:
    """cnot_final(20) with every block replaced by the self-similar k=20 rotation."""
    table = table or params_module.PUBLISHED
    outer = cnot_final(20, table.cnot[20])
    return nest(outer, self_similar(20, table.self_similar[20]), table.theta0 / 4)


# --- structural metrics -----------------------------------------------------


def _fold(node: SequenceNode, block, local, echo, memo) -> float:
    key = id(node)
    if key in memo:
        return memo[key]
    if isinstance(node, EntanglingBlock):
        out = block(node)
    elif isinstance(node, LocalGate):
        out = local(node)
    elif isinstance(node, EchoWrap):
        out = echo(node) + _fold(node.inner, block, local, echo, memo)
    elif isinstance(node, Concat):
        out = sum(_fold(p, block, local, echo, memo) for p in node.parts)
    elif isinstance(node, Power):
        out = node.n * _fold(node.inner, block, local, echo, memo)
    else:
        raise SequenceError(f"Unknown node type {type(node).__name__}")
    memo[key] = out
    return out


def block_count(node: SequenceNode) -> int:
    """Number of entangling block applications."""
    return int(_fold(node, lambda b: 1, lambda g: 0, lambda e: 0, {}))


def total_angle(node: SequenceNode) -> float:
    """Sum of |theta| over all block applications."""
    return float(_fold(node, lambda b: abs(b.angle), lambda g: 0.0, lambda e: 0.0, {}))


def interaction_time(node: SequenceNode, alpha: float = 1.0) -> float:
    """Total coupling time with block time theta/(2 alpha)."""
    return total_angle(node) / (2 * alpha)


def _echo_pulses(echo: PauliString) -> List[np.ndarray]:
    """One single-qubit pi pulse per non-identity factor of the echo."""
    eye = np.eye(2, dtype=complex)
    pulses = []
    if echo.first != PauliIndex.I:
        pulses.append(local_gate(SINGLE_QUBIT_PAULIS[echo.first], eye))
    if echo.second != PauliIndex.I:
        pulses.append(local_gate(eye, SINGLE_QUBIT_PAULIS[echo.second]))
    return pulses


def _echo_gate_count(e: EchoWrap) -> int:
    # inserted on both sides of the inner sequence
    return 2 * len(_echo_pulses(e.echo))


def local_gate_count(node: SequenceNode, merged: bool = False) -> int:
    """
    Count local operations.

    Unmerged: every explicit local gate and every single-qubit echo pulse
    counts separately, so a ZZ or XX echo costs four and a ZI echo two.
    Merged: the number of inter-block slots (ends included) holding a
    non-identity product of local gates.
    """
    if merged:
        return sum(compile_program(node).active)
    return int(_fold(node, lambda b: 0, lambda g: 1, _echo_gate_count, {}))


# --- evaluation -------------------------------------------------------------


def ideal_block(angle: float) -> np.ndarray:
    return pauli_rotation(ZZ, angle)


def is_identity_up_to_phase(u: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(phase_normalized(u) - IDENTITY4)) < tol)


@dataclass(frozen=True)
class Program:
    """
    Time-ordered local slots and blocks: slots[0], angles[0], slots[1], ..., slots[-1].

    `pulses[i]` lists the local gates merged into slots[i], in time order.
    `active` marks the slots holding a non-identity local product.
    """

    slots: Tuple[np.ndarray, ...]
    angles: Tuple[float, ...]
    active: Tuple[bool, ...]
    pulses: Tuple[Tuple[np.ndarray, ...], ...]


def _walk(node: SequenceNode, out: list) -> None:
    if isinstance(node, EntanglingBlock):
        out.append(float(node.angle))
    elif isinstance(node, LocalGate):
        out.append(node.matrix)
    elif isinstance(node, EchoWrap):
        pulses = _echo_pulses(node.echo)
        out.extend(pulses)
        _walk(node.inner, out)
        out.extend(pulses)
    elif isinstance(node, Concat):
        for part in node.parts:
            _walk(part, out)
    elif isinstance(node, Power):
        for _ in range(node.n):
            _walk(node.inner, out)
    else:
        raise SequenceError(f"Unknown node type {type(node).__name__}")


@lru_cache(maxsize=32)
def compile_program(node: SequenceNode) -> Program:
    """Flatten a sequence into alternating merged local slots and blocks."""
    events: list = []
    _walk(node, events)
    slots, angles, pulses = [], [], []
    current, group = IDENTITY4, []
    for event in events:
        if isinstance(event, float):
            slots.append(current)
            pulses.append(tuple(group))
            angles.append(event)
            current, group = IDENTITY4, []
        else:
            current = event @ current
            group.append(event)
    slots.append(current)
    pulses.append(tuple(group))
    active = tuple(not is_identity_up_to_phase(s) for s in slots)
    logger.debug(f"Compiled program with {len(angles)} blocks, {sum(active)} active slots")
    return Program(tuple(slots), tuple(angles), active, tuple(pulses))


def _evaluate_tree(node: SequenceNode, block_rule: Callable, memo: dict) -> np.ndarray:
    key = id(node)
    if key in memo:
        return memo[key]
    if isinstance(node, EntanglingBlock):
        out = block_rule(node.angle)
    elif isinstance(node, LocalGate):
        out = node.matrix
    elif isinstance(node, EchoWrap):
        echo = pauli_matrix(node.echo)
        out = echo @ _evaluate_tree(node.inner, block_rule, memo) @ echo
    elif isinstance(node, Concat):
        out = IDENTITY4
        for part in node.parts:
            out = _evaluate_tree(part, block_rule, memo) @ out
    elif isinstance(node, Power):
        inner = _evaluate_tree(node.inner, block_rule, memo)
        out = inner
        for _ in range(node.n - 1):
            out = inner @ out
    else:
        raise SequenceError(f"Unknown node type {type(node).__name__}")
    memo[key] = out
    return out


def evaluate_program(program: Program, block_rule: Callable, local_rule: Optional[Callable] = None) -> np.ndarray:
    """
    Multiply out a compiled program.

    local_rule(program, slot_index) returns the (possibly perturbed) local gate
    of a slot; slots without pulses are skipped.
    """

    def slot(i: int) -> np.ndarray:
        if local_rule is None or not program.pulses[i]:
            return program.slots[i]
        return local_rule(program, i)

    u = slot(0)
    for i, angle in enumerate(program.angles):
        u = slot(i + 1) @ (block_rule(angle) @ u)
    return u


def evaluate(node: SequenceNode, realization=None) -> np.ndarray:
    """
    Evaluate a sequence to a 4x4 unitary.

    Args:
        node: Sequence to evaluate
        realization: Object with `block_rule(angle)` and optional `local_rule`;
            None evaluates the noise-free sequence

    Returns:
        The time-ordered matrix product
    """
    if realization is None:
        return _evaluate_tree(node, ideal_block, {})
    local_rule = getattr(realization, "local_rule", None)
    if local_rule is not None:
        return evaluate_program(compile_program(node), realization.block_rule, local_rule)
    return _evaluate_tree(node, realization.block_rule, {})


# --- descriptors ------------------------------------------------------------


def _pauli(value) -> PauliString:
    try:
        return PauliString.parse(str(value))
    except AlgebraError as e:
        raise DescriptorError(str(e)) from e


def _single_part(d: dict) -> SequenceNode:
    parts = d.get("parts") or []
    if len(parts) != 1:
        raise DescriptorError(f"'{d.get('type')}' needs exactly one entry in 'parts'")
    return from_descriptor(parts[0])


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def _params_from_descriptor(d: dict, k: int, target: str) -> SequenceParams:
    values = d.get("params")
    if values is None:
        return params_module.PUBLISHED.params(target, k)
    try:
        return SequenceParams(k=k, target=target, **values)
    except TypeError as e:
        raise DescriptorError(f"Invalid params {values}: {e}") from e


def from_descriptor(d: dict) -> SequenceNode:
    """
    Build a sequence from a JSON-compatible descriptor.

    Raises:
        DescriptorError: If the descriptor is malformed
    """
    if not isinstance(d, dict) or "type" not in d:
        raise DescriptorError(f"Descriptor must be a mapping with a 'type': {d!r}")
    kind = d["type"]
    theta0 = float(d.get("theta0", THETA0))
    try:
        if kind == "block":
            return zz_rotation(float(d["angle"]))
        if kind == "echo":
            return EchoWrap(_pauli(d["echo"]), _single_part(d))
        if kind == "concat":
            return Concat(tuple(from_descriptor(p) for p in d.get("parts", [])))
        if kind == "power":
            return power(_single_part(d), int(d["n"]))
        if kind == "rotation":
            return rotation(_pauli(d["axis"]), float(d["angle"]))
        if kind == "pauli":
            return pauli_gate(_pauli(d["echo"]))
        if kind == "local":
            if "factors" in d:
                a, b = (_matrix_from_json(f) for f in d["factors"])
                return LocalGate((a, b), d.get("name", "local"))
            return BUILTIN_LOCALS[d["name"]]
        if kind == "length2":
            return length2(_single_part(d), _pauli(d.get("echo", "XX")))
        if kind == "length4":
            echo_a, echo_b = (_pauli(e) for e in d.get("echo", ("ZI", "XX")))
            return length4(_single_part(d), echo_a, echo_b)
        if kind == "length5":
            return length5(float(d.get("angle", theta0)))
        if kind == "length10":
            return length10(
                float(d.get("angle", theta0)),
                _pauli(d.get("echo", "XX")),
                bool(d.get("interchanged", False)),
            )
        if kind == "length20":
            return length20(float(d.get("angle", theta0)), bool(d.get("interchanged", False)))
        if kind == "uk":
            return uk(int(d["k"]), theta0)
        if kind == "cnot_from_uk":
            return cnot_from_uk(int(d["k"]))
        if kind == "zz_corrected":
            k = int(d["k"])
            return zz_corrected(k, _params_from_descriptor(d, k, d.get("target", "cnot")))
        if kind == "cnot_final":
            k = int(d["k"])
            return cnot_final(k, _params_from_descriptor(d, k, "cnot"))
        if kind == "self_similar":
            k = int(d["k"])
            return self_similar(k, _params_from_descriptor(d, k, "self-similar"))
        if kind == "named":
            from composite_cnot import catalog

            return catalog.build_sequence(d["name"]).node
    except KeyError as e:
        raise DescriptorError(f"Descriptor of type '{kind}' is missing {e}") from e
    except (TypeError, ValueError) as e:
        raise DescriptorError(f"Invalid descriptor of type '{kind}': {e}") from e
    raise DescriptorError(f"Unknown descriptor type '{kind}'")


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def to_descriptor(node: SequenceNode) -> dict:
    """Serialize a sequence into primitive descriptor types."""
    if isinstance(node, EntanglingBlock):
        return {"type": "block", "angle": node.angle}
    if isinstance(node, LocalGate):
        return {
            "type": "local",
            "name": node.label,
            "factors": [_matrix_to_json(f) for f in node.factors],
        }
    if isinstance(node, EchoWrap):
        return {"type": "echo", "echo": node.echo.name, "parts": [to_descriptor(node.inner)]}
    if isinstance(node, Concat):
        return {"type": "concat", "parts": [to_descriptor(p) for p in node.parts]}
    if isinstance(node, Power):
        return {"type": "power", "n": node.n, "parts": [to_descriptor(node.inner)]}
    raise SequenceError(f"Unknown node type {type(node).__name__}")
