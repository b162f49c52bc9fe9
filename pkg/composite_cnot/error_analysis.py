"""
First-order error extraction, echo cancellation conditions and suppression-order fits.

Errors are inserted to the right of every ideal block:
    (theta)_ZZ -> exp[-i theta/2 ZZ] exp[i sum delta_ij sigma_ij]
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from composite_cnot.su4_algebra import (
    ALL_PAULI_STRINGS,
    NON_IDENTITY_STRINGS,
    ZZ,
    AlgebraError,
    PauliString,
    commutation_sign,
    hermitian_from_coefficients,
    infidelity,
    pauli_matrix,
)

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
SUPPRESSION_THRESHOLD = 1e-8
# builder(0) must match the target this well, phase-insensitive
MISWIRE_TOLERANCE = 1e-8
NUMERICAL_FLOOR = 1e-15
DEFAULT_ORDER_DELTAS = (1e-3, 2e-3, 5e-3, 1e-2)


# Custom exceptions
class AnalysisError(Exception):
    """Base exception for error analysis failures."""

    pass


class MiswiredSequenceError(AnalysisError):
    """Exception raised when a noise-free sequence does not reproduce its target."""

    pass


class IllConditionedFitError(AnalysisError):
    """Exception raised when a suppression-order fit cannot be trusted."""

    pass


@dataclass(frozen=True)
class ErrorVector:
    """
    Sixteen error amplitudes delta_ij, indexed by PauliString in canonical order.

    The (I, I) entry is a pure global phase and never changes an infidelity.
    """

    delta: Tuple[float, ...] = (0.0,) * 16

    def __post_init__(self):
        values = tuple(float(x) for x in self.delta)
        if len(values) != len(ALL_PAULI_STRINGS):
            raise AnalysisError(f"ErrorVector needs 16 entries, got {len(values)}")
        object.__setattr__(self, "delta", values)

    @classmethod
    def zero(cls) -> "ErrorVector":
        return cls()

    @classmethod
    def single(cls, channel: PauliString, value: float) -> "ErrorVector":
        values = [0.0] * len(ALL_PAULI_STRINGS)
        values[ALL_PAULI_STRINGS.index(channel)] = float(value)
        return cls(tuple(values))

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "ErrorVector":
        """
        Build from {"XI": 0.01, ...}; keys may be names or PauliStrings.

        Raises:
            AnalysisError: On an unknown channel name
        """
        values = [0.0] * len(ALL_PAULI_STRINGS)
        for key, value in (mapping or {}).items():
            try:
                p = key if isinstance(key, PauliString) else PauliString.parse(str(key))
            except AlgebraError as e:
                raise AnalysisError(str(e)) from e
            values[ALL_PAULI_STRINGS.index(p)] = float(value)
        return cls(tuple(values))

    def __getitem__(self, channel: PauliString) -> float:
        return self.delta[ALL_PAULI_STRINGS.index(channel)]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.delta))

    def generator(self) -> np.ndarray:
        """The Hermitian sum delta_ij sigma_ij."""
        return hermitian_from_coefficients(dict(zip(ALL_PAULI_STRINGS, self.delta)))


@dataclass(frozen=True)
class ChannelReport:
    channel: PauliString
    coefficient: complex
    suppressed: bool
    empirical_order: Optional[int] = None
    slope: Optional[float] = None

    def as_row(self) -> dict:
        return {
            "channel": self.channel.name,
            "abs_coefficient": abs(self.coefficient),
            "suppressed": self.suppressed,
            "empirical_order": "" if self.empirical_order is None else self.empirical_order,
            "slope": "" if self.slope is None else self.slope,
        }


@dataclass(frozen=True)
class XiZeta:
    """Echo signs: xi_l against ZZ and zeta_m against each channel."""

    xi: Tuple[int, ...]
    zeta: Dict[PauliString, Tuple[int, ...]]


def xi_zeta(echoes: Sequence[PauliString], channels: Sequence[PauliString] = NON_IDENTITY_STRINGS) -> XiZeta:
    """Recompute the echo signs from the echo list (first entry acts first)."""
    xi = tuple(commutation_sign(e, ZZ) for e in echoes)
    zeta = {c: tuple(commutation_sign(e, c) for e in echoes) for c in channels}
    return XiZeta(xi, zeta)


def multiplicative_builder(node) -> Callable[[ErrorVector], np.ndarray]:
    """Map an ErrorVector to the sequence evaluated with that error on every block."""
    from composite_cnot.noise_sim import MultiplicativeChannel, sample_realization
    from composite_cnot.sequences import evaluate

    def build(delta: ErrorVector) -> np.ndarray:
        return evaluate(node, sample_realization(MultiplicativeChannel(delta), 0, 0))

    return build


def _central_difference(builder, channel: PauliString, h: float) -> np.ndarray:
    plus = builder(ErrorVector.single(channel, h))
    minus = builder(ErrorVector.single(channel, -h))
    return (plus - minus) / (2 * h)


def _check_wiring(builder, target: np.ndarray) -> np.ndarray:
    base = builder(ErrorVector.zero())
    defect = infidelity(base, target)
    if defect > MISWIRE_TOLERANCE:
        raise MiswiredSequenceError(
            f"Noise-free sequence misses its target (infidelity {defect:.3e})"
        )
    return base


def first_order_vector(
    builder: Callable[[ErrorVector], np.ndarray],
    target: np.ndarray,
    channel: PauliString,
    h: float = DEFAULT_STEP,
) -> Dict[PauliString, complex]:
    """
    Project the first-order response to an error on `channel` onto all 16 Pauli strings.

    The derivative is the Richardson combination (4 D(h/2) - D(h)) / 3 of two
    central differences and is referred back through builder(0)^dagger.

    Args:
        builder: ErrorVector -> 4x4 unitary
        target: Ideal unitary the noise-free builder must reproduce
        channel: Error channel to perturb
        h: Finite-difference step

    Returns:
        Mapping PauliString -> coefficient c with builder0^dagger dB = i sum c sigma

    Raises:
        MiswiredSequenceError: If builder(0) is not the target up to phase
    """
    base = _check_wiring(builder, target)
    coarse = _central_difference(builder, channel, h)
    fine = _central_difference(builder, channel, h / 2)
    derivative = base.conj().T @ ((4 * fine - coarse) / 3)
    return {
        p: complex(np.trace(pauli_matrix(p) @ (-1j * derivative)) / 4)
        for p in ALL_PAULI_STRINGS
    }


def first_order_error(
    builder: Callable[[ErrorVector], np.ndarray],
    target: np.ndarray,
    channel: PauliString,
    h: float = DEFAULT_STEP,
) -> complex:
    """Largest-magnitude non-identity first-order coefficient for an error on `channel`."""
    vector = first_order_vector(builder, target, channel, h)
    return max((vector[p] for p in NON_IDENTITY_STRINGS), key=abs)


def richardson_defect(builder, channel: PauliString, h: float = DEFAULT_STEP) -> float:
    """Frobenius distance between central differences at h and h/2; scales as h^2."""
    return float(
        np.linalg.norm(
            _central_difference(builder, channel, h) - _central_difference(builder, channel, h / 2)
        )
    )


def verify_eq6(echoes: Sequence[PauliString], theta: float, channel: PauliString) -> Tuple[float, float]:
    """
    Residuals of the first-order condition for a ZZ-anticommuting channel.

    With s_m = sum_{l<m} xi_l the first-order term is sum_m zeta_m exp(i s_m theta ZZ) c,
    so the channel is cancelled iff both
        zeta_1 + sum_{m>=2} zeta_m cos(s_m theta)  and  sum_{m>=2} zeta_m sin(s_m theta)
    vanish. Signs are returned so callers can inspect them.

    Raises:
        AnalysisError: If the channel commutes with ZZ
    """
    if commutation_sign(channel, ZZ) != -1:
        raise AnalysisError(f"Channel {channel} commutes with ZZ")
    signs = xi_zeta(echoes, (channel,))
    zeta = signs.zeta[channel]
    partial = np.concatenate(([0], np.cumsum(signs.xi)[:-1]))
    r1 = zeta[0] + sum(z * np.cos(s * theta) for z, s in zip(zeta[1:], partial[1:]))
    r2 = sum(z * np.sin(s * theta) for z, s in zip(zeta[1:], partial[1:]))
    return float(r1), float(r2)


def verify_eq7(theta: float, zeta3: int, zeta4: int, zeta5: int) -> float:
    """|zeta3 + 2 zeta4 cos(theta) + zeta5 (4 cos^2(theta) - 2)|"""
    c = np.cos(theta)
    return float(abs(zeta3 + 2 * zeta4 * c + zeta5 * (4 * c * c - 2)))


def eq7_roots(zeta3: int, zeta4: int, zeta5: int) -> List[float]:
    """Real roots theta in [0, pi] of the length-5 condition, ascending."""
    roots = np.roots([4 * zeta5, 2 * zeta4, zeta3 - 2 * zeta5])
    thetas = []
    for r in roots:
        if abs(r.imag) < 1e-12 and -1.0 <= r.real <= 1.0:
            thetas.append(float(np.arccos(r.real)))
    return sorted(thetas)


def fit_slope(deltas: Sequence[float], infidelities: Sequence[float]) -> float:
    """
    Least-squares slope of log(infidelity) against log(delta).

    Raises:
        IllConditionedFitError: If the deltas span less than a decade or any
            infidelity is at the numerical floor
    """
    deltas = np.asarray(deltas, dtype=float)
    values = np.asarray(infidelities, dtype=float)
    if len(deltas) < 2 or np.min(deltas) <= 0 or np.max(deltas) / np.min(deltas) < 10:
        raise IllConditionedFitError("Deltas must be positive and span at least one decade")
    if np.any(values < NUMERICAL_FLOOR):
        raise IllConditionedFitError(
            f"Infidelity {np.min(values):.2e} is below the numerical floor {NUMERICAL_FLOOR:.0e}"
        )
    slope, _ = np.polyfit(np.log(deltas), np.log(values), 1)
    return float(slope)


def suppression_order(
    builder: Callable[[ErrorVector], np.ndarray],
    target: np.ndarray,
    channel: PauliString,
    deltas: Sequence[float] = DEFAULT_ORDER_DELTAS,
) -> float:
    """
    Empirical slope of infidelity against error strength on one channel.

    About 2 for an uncorrected channel and 4 after first-order correction.
    The nested second-order CNOT leaves an O(delta^4) error, so about 8.
    Infidelities are taken against builder(0) so the intrinsic error of the
    parameters does not flatten the curve.
    """
    base = _check_wiring(builder, target)
    values = [infidelity(builder(ErrorVector.single(channel, d)), base) for d in deltas]
    logger.debug(f"{channel}: infidelities {['%.3e' % v for v in values]}")
    return fit_slope(deltas, values)


def _report(builder, target, channel, threshold, orders, deltas) -> ChannelReport:
    coefficient = first_order_error(builder, target, channel)
    suppressed = abs(coefficient) < threshold
    order, slope = None, None
    if orders:
        try:
            slope = suppression_order(builder, target, channel, deltas)
            order = int(round(slope / 2))
        except IllConditionedFitError as e:
            logger.warning(f"No empirical order for {channel}: {e}")
    return ChannelReport(channel, coefficient, suppressed, order, slope)


def channel_report(
    node,
    target: np.ndarray,
    threshold: float = SUPPRESSION_THRESHOLD,
    orders: bool = False,
    deltas: Sequence[float] = DEFAULT_ORDER_DELTAS,
    workers: int = 1,
) -> List[ChannelReport]:
    """
    First-order report over the 15 non-identity channels, in canonical order.

    Args:
        node: Sequence to analyze
        target: Its ideal unitary
        threshold: |coefficient| below which a channel counts as suppressed
        orders: Also fit the empirical suppression order per channel
        deltas: Error strengths for the order fit
        workers: Threads used across channels

    Raises:
        MiswiredSequenceError: If the noise-free sequence misses the target
    """
    builder = multiplicative_builder(node)
    _check_wiring(builder, target)
    if workers <= 1:
        return [_report(builder, target, c, threshold, orders, deltas) for c in NON_IDENTITY_STRINGS]

    reports: Dict[PauliString, ChannelReport] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_channel = {
            executor.submit(_report, builder, target, c, threshold, orders, deltas): c
            for c in NON_IDENTITY_STRINGS
        }
        for future in as_completed(future_to_channel):
            reports[future_to_channel[future]] = future.result()
    return [reports[c] for c in NON_IDENTITY_STRINGS]


def cancelled_channels(node, target: np.ndarray, threshold: float = SUPPRESSION_THRESHOLD) -> frozenset:
    """Channels whose first-order coefficient is below threshold."""
    return frozenset(r.channel for r in channel_report(node, target, threshold) if r.suppressed)

