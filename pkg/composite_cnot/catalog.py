"""
Named sequences used by the CLI, configuration files and checks.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, List

import numpy as np

from composite_cnot import params as params_module
from composite_cnot.config import PARAM_SOURCES
from composite_cnot.params import ParamTable, SequenceError
from composite_cnot.sequences import (
    XX,
    ZI,
    SequenceNode,
    cnot_final,
    cnot_from_uk,
    ideal_block,
    length2,
    length2_cnot,
    length4,
    length5,
    length10,
    length20,
    second_order_cnot,
    self_similar,
    uncorrected_cnot_ising,
    uncorrected_cnot_sqrt_swap,
    zz_rotation,
)
from composite_cnot.su4_algebra import CNOT, NON_IDENTITY_STRINGS, ZZ, PauliString, commutation_sign

logger = logging.getLogger(__name__)

ALL_CHANNELS: FrozenSet[PauliString] = frozenset(NON_IDENTITY_STRINGS)
ANTICOMMUTING = frozenset(c for c in NON_IDENTITY_STRINGS if commutation_sign(c, ZZ) == -1)
COMMUTING = ALL_CHANNELS - ANTICOMMUTING - {ZZ}
NON_ZZ = ALL_CHANNELS - {ZZ}


def _echo_cancelled(echo: PauliString) -> FrozenSet[PauliString]:
    return frozenset(c for c in COMMUTING if commutation_sign(c, echo) == -1)


LENGTH10_CHANNELS = ANTICOMMUTING | _echo_cancelled(XX)
# The IY tilts around U^(k) also cancel ZZ plus these commuting channels
TILTED5_CHANNELS = ANTICOMMUTING | {ZZ} | {PauliString.parse(n) for n in ("IZ", "XX", "YX")}
TILTED10_CHANNELS = LENGTH10_CHANNELS | {ZZ, XX}


class UnknownSequenceError(SequenceError):
    """Exception raised when a sequence id is not in the catalog."""

    pass


@dataclass(frozen=True)
class SequenceSpec:
    name: str
    node: SequenceNode
    target: np.ndarray
    description: str
    cancelled: FrozenSet[PauliString]


@dataclass(frozen=True)
class _Entry:
    build: Callable[[ParamTable], SequenceNode]
    target: Callable[[ParamTable], np.ndarray]
    description: str
    cancelled: FrozenSet[PauliString]


def _cnot(table: ParamTable) -> np.ndarray:
    return CNOT


def _rotation(angle: float) -> Callable[[ParamTable], np.ndarray]:
    return lambda table: ideal_block(angle)


def _five_theta0(table: ParamTable) -> np.ndarray:
    return ideal_block(5 * table.theta0)


def _self_similar_target(k: int) -> Callable[[ParamTable], np.ndarray]:
    return lambda table: ideal_block(5 * table.theta0 / k)


_ENTRIES: Dict[str, _Entry] = {
    "block": _Entry(
        lambda t: zz_rotation(np.pi / 2), _rotation(np.pi / 2),
        "single (pi/2)_ZZ block", frozenset(),
    ),
    "length2": _Entry(
        lambda t: length2(zz_rotation(np.pi / 4), XX), _rotation(np.pi / 2),
        "length-2 XX echo of (pi/4)_ZZ", _echo_cancelled(XX),
    ),
    "length4": _Entry(
        lambda t: length4(zz_rotation(np.pi / 8), ZI, XX), _rotation(np.pi / 2),
        "length-4 ZI/XX echo of (pi/8)_ZZ", COMMUTING,
    ),
    "length5": _Entry(
        lambda t: length5(t.theta0), _five_theta0,
        "five theta0 blocks with a ZZ echo around the middle one", ANTICOMMUTING,
    ),
    "length10": _Entry(
        lambda t: length10(t.theta0), _five_theta0,
        "length-5 nesting of a length-2 XX sequence", LENGTH10_CHANNELS,
    ),
    "length20": _Entry(
        lambda t: length20(t.theta0), _five_theta0,
        "length-5 nesting of length-2 XX and ZI sequences", NON_ZZ,
    ),
    "cnot5": _Entry(
        lambda t: cnot_from_uk(5, t), _cnot, "CNOT from two U^(5)", ANTICOMMUTING,
    ),
    "cnot10": _Entry(
        lambda t: cnot_from_uk(10, t), _cnot, "CNOT from two U^(10)", LENGTH10_CHANNELS,
    ),
    "cnot20": _Entry(
        lambda t: cnot_from_uk(20, t), _cnot, "CNOT from two U^(20)", NON_ZZ,
    ),
    "cnot_final5": _Entry(
        lambda t: cnot_final(5, t.cnot[5]), _cnot,
        "CNOT from the ZZ-corrected U^(30)", TILTED5_CHANNELS,
    ),
    "cnot_final10": _Entry(
        lambda t: cnot_final(10, t.cnot[10]), _cnot,
        "CNOT from the ZZ-corrected U^(60)", TILTED10_CHANNELS,
    ),
    "length120": _Entry(
        lambda t: cnot_final(20, t.cnot[20]), _cnot,
        "CNOT from the ZZ-corrected U^(120)", ALL_CHANNELS,
    ),
    "second_order": _Entry(
        second_order_cnot, _cnot,
        "length-120 CNOT with every block replaced by the self-similar k=20 rotation",
        ALL_CHANNELS,
    ),
    "self_similar5": _Entry(
        lambda t: self_similar(5, t.self_similar[5]), _self_similar_target(5),
        "corrected (theta0)_ZZ from U^(30)", TILTED5_CHANNELS,
    ),
    "self_similar10": _Entry(
        lambda t: self_similar(10, t.self_similar[10]), _self_similar_target(10),
        "corrected (theta0/2)_ZZ from U^(60)", TILTED10_CHANNELS,
    ),
    "self_similar20": _Entry(
        lambda t: self_similar(20, t.self_similar[20]), _self_similar_target(20),
        "corrected (theta0/4)_ZZ from U^(120)", ALL_CHANNELS,
    ),
    "uncorrected_ising": _Entry(
        lambda t: uncorrected_cnot_ising(), _cnot,
        "CNOT from one (pi/2)_ZZ block", frozenset(),
    ),
    "uncorrected_heisenberg": _Entry(
        lambda t: uncorrected_cnot_sqrt_swap(), _cnot,
        "CNOT from two sqrt(SWAP) evolutions around a ZI flip",
        frozenset(),
    ),
    "length2_cnot": _Entry(
        lambda t: length2_cnot(XX), _cnot,
        "length-2 XX sequence at pi/4 per block dressed to CNOT", _echo_cancelled(XX),
    ),
}

ALIASES = {"length40": "cnot20", "cnot_final20": "length120"}


def known_sequences() -> List[str]:
    """All sequence ids, aliases included."""
    return sorted(list(_ENTRIES) + list(ALIASES))


def _resolve(name: str) -> str:
    key = ALIASES.get(name, name)
    if key not in _ENTRIES:
        raise UnknownSequenceError(
            f"Unknown sequence '{name}'. Known sequences: {', '.join(known_sequences())}"
        )
    return key


def _table(params: str) -> ParamTable:
    if params == "published":
        return params_module.PUBLISHED
    if params == "refined":
        from composite_cnot.optimizer import refine_table

        return refine_table(params_module.PUBLISHED)
    raise SequenceError(f"Unknown parameter source '{params}', expected one of {PARAM_SOURCES}")


@lru_cache(maxsize=64)
def build_sequence(name: str, params: str = "published") -> SequenceSpec:
    """
    Build a named sequence with its target and advertised cancelled channels.

    Args:
        name: Sequence id or alias
        params: "published" for printed-precision parameters or "refined"

    Raises:
        UnknownSequenceError: If the id is not known
    """
    _resolve(name)
    table = _table(params)
    logger.debug(f"Building '{name}' with {table.label} parameters")
    return sequence_from_table(name, table)


def advertised_cancelled(name: str) -> FrozenSet[PauliString]:
    """Channels the named sequence cancels at first order."""
    return _ENTRIES[_resolve(name)].cancelled


def description(name: str) -> str:
    return _ENTRIES[_resolve(name)].description


def sequence_from_table(name: str, table: ParamTable) -> SequenceSpec:
    """Like build_sequence, for an explicit (possibly modified) parameter table; not cached."""
    key = _resolve(name)
    entry = _ENTRIES[key]
    return SequenceSpec(key, entry.build(table), entry.target(table), entry.description, entry.cancelled)
