"""
Published constants of the composite CNOT construction.

Closed-form constants are evaluated at full floating precision. The numerically
found sequence parameters are stored at the printed 6-decimal precision.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from composite_cnot.su4_algebra import SINGLE_QUBIT_PAULIS, local_gate, su2_exp

SQRT13 = np.sqrt(13.0)

# Smallest positive root of 4cos^2(t) + 2cos(t) - 3 = 0
THETA0 = float(np.arccos((SQRT13 - 1) / 4))

# Local tilt angles for the CNOT built from two U^(k)
EQ10_PSI = float(
    2
    * np.arctan(
        np.sqrt(-57 + 16 * SQRT13) / (4 - SQRT13 + 2 * np.sqrt(-7 + 2 * SQRT13))
    )
)
EQ10_PHI = float(-2 * np.arccos(-1 / (2 * np.sqrt(-14 + 4 * SQRT13))))

_X, _Y, _Z = SINGLE_QUBIT_PAULIS[1:]

A1_FACTORS = (
    su2_exp(np.pi / (2 * np.sqrt(2)) * np.array([1.0, -1.0, 0.0])),
    su2_exp(5 * np.pi / (3 * np.sqrt(3)) * np.array([1.0, 1.0, -1.0])),
)
A2_FACTORS = (_X.copy(), su2_exp(np.array([0.0, np.pi / 4, 0.0])))
A1 = local_gate(*A1_FACTORS)
A2 = local_gate(*A2_FACTORS)

VALID_K = (5, 10, 20)


class SequenceError(Exception):
    """Base exception for sequence construction errors."""

    pass


class InvalidParamsError(SequenceError):
    """Exception raised when a sequence parameter set is inconsistent."""

    pass


@dataclass(frozen=True)
class SequenceParams:
    """
    Parameters of the ZZ-correcting sequence and its local dressing.

    For a CNOT target phi1/phi2 are used; for a self-similar target beta/gamma/m are used.
    """

    k: int
    psi: Tuple[float, float, float, float]
    n: Tuple[int, int, int, int]
    phi1: float = 0.0
    phi2: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    m: int = 0
    target: str = "cnot"

    def __post_init__(self):
        object.__setattr__(self, "psi", tuple(float(x) for x in self.psi))
        object.__setattr__(self, "n", tuple(int(x) for x in self.n))
        if self.k not in VALID_K:
            raise InvalidParamsError(f"k must be one of {VALID_K}, got {self.k}")
        if len(self.psi) != 4 or len(self.n) != 4:
            raise InvalidParamsError("psi and n must each have four entries")
        if any(x < 1 for x in self.n) or 1 + sum(self.n) != 6:
            raise InvalidParamsError(
                f"n={self.n} violates 1 + sum(n) = 6 with positive entries"
            )
        if self.m not in (0, 1):
            raise InvalidParamsError(f"m must be 0 or 1, got {self.m}")
        if self.target not in ("cnot", "self-similar"):
            raise InvalidParamsError(f"Unknown target '{self.target}'")

    def with_psi(self, psi) -> "SequenceParams":
        return replace(self, psi=tuple(psi))

    def with_locals(self, first: float, second: float) -> "SequenceParams":
        """Replace (phi1, phi2) for a CNOT target or (beta, gamma) otherwise."""
        if self.target == "cnot":
            return replace(self, phi1=first, phi2=second)
        return replace(self, beta=first, gamma=second)

    @property
    def local_angles(self) -> Tuple[float, float]:
        if self.target == "cnot":
            return (self.phi1, self.phi2)
        return (self.beta, self.gamma)


_CNOT_PSI = (1.135268, -0.405533, -1.841855, 0.191753)
_SELF_SIMILAR = {
    5: dict(psi=(-0.183589, -3.061776, -2.019322, 1.750803), m=1,
            beta=3.111045, gamma=-2.117345),
    10: dict(psi=(-0.103032, -3.129928, -2.583841, 0.844394), m=1,
             beta=2.290846, gamma=-1.850509),
    20: dict(psi=(-0.0522225, -3.138440, -2.862841, 0.418648), m=0,
             beta=-1.216184, gamma=1.430782),
}


@dataclass(frozen=True)
class ParamTable:
    """The full set of sequence constants used by the named constructions."""

    theta0: float = THETA0
    eq10_psi: float = EQ10_PSI
    eq10_phi: float = EQ10_PHI
    cnot: Dict[int, SequenceParams] = field(default_factory=dict)
    self_similar: Dict[int, SequenceParams] = field(default_factory=dict)
    label: str = "published"

    def params(self, target: str, k: int) -> SequenceParams:
        table = self.cnot if target == "cnot" else self.self_similar
        try:
            return table[k]
        except KeyError:
            raise InvalidParamsError(f"No {target} parameters for k={k}") from None

    def with_params(self, params: SequenceParams) -> "ParamTable":
        """Return a copy with one parameter set replaced."""
        cnot = dict(self.cnot)
        self_similar = dict(self.self_similar)
        (cnot if params.target == "cnot" else self_similar)[params.k] = params
        return replace(self, cnot=cnot, self_similar=self_similar)


PUBLISHED = ParamTable(
    cnot={
        k: SequenceParams(
            k=k, psi=_CNOT_PSI, n=(1, 1, 1, 2), phi1=-1.607820, phi2=0.234035
        )
        for k in VALID_K
    },
    self_similar={
        k: SequenceParams(k=k, n=(1, 2, 1, 1), target="self-similar", **values)
        for k, values in _SELF_SIMILAR.items()
    },
)

CNOT_PARAMS = PUBLISHED.cnot
SELF_SIMILAR_PARAMS = PUBLISHED.self_similar


def published_params(target: str, k: int, table: Optional[ParamTable] = None):
    """Look up a published parameter set by target ("cnot" or "self-similar") and k."""
    return (table or PUBLISHED).params(target, k)
