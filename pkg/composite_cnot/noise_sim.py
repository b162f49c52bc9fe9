"""
Stochastic noise scenarios and Monte Carlo infidelity estimation.

Randomness is counter based: every draw comes from a Philox generator keyed by
(seed, sample_index, stream...), so results do not depend on execution order or
on the number of worker threads.
"""

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from composite_cnot import catalog
from composite_cnot.sequences import (
    Program,
    compile_program,
    evaluate,
    evaluate_program,
    ideal_block,
    uncorrected_cnot_ising as _uncorrected_ising_node,
    uncorrected_cnot_sqrt_swap,
)
from composite_cnot.su4_algebra import (
    IDENTITY4,
    NON_IDENTITY_STRINGS,
    PauliString,
    expm_hermitian,
    infidelity,
    local_gate,
    pauli_matrix,
    pauli_rotation,
    phase_normalized,
    su2_exp,
    ZZ,
)

if TYPE_CHECKING:
    from composite_cnot.error_analysis import ErrorVector

logger = logging.getLogger(__name__)

# Fixed sample chunk; results are merged chunk by chunk in index order
CHUNK_SIZE = 50
DEFAULT_LOCAL_SAMPLES = 500

STREAM_BLOCK = 0
STREAM_LOCAL_SYSTEMATIC = 1
STREAM_LOCAL_RANDOM = 2

_FIELD_AXES = tuple(PauliString.parse(name) for name in ("XI", "YI", "ZI", "IX", "IY", "IZ"))
_XX = PauliString.parse("XX")
_YY = PauliString.parse("YY")


# Custom exceptions
class NoiseModelError(Exception):
    """Base exception for noise model errors."""

    pass


class ScenarioError(NoiseModelError):
    """Exception raised when a noise scenario is invalid or unsupported."""

    pass


@dataclass(frozen=True)
class HeisenbergFields:
    """H = alpha (ZZ + dx XX + dy YY) + sum_j (B_j1 sigma_jI + B_j2 sigma_Ij)."""

    alpha: float = 1.0
    delta_x: float = 1.0
    delta_y: float = 1.0
    sigma: float = 0.0
    kind = "heisenberg"

    def __post_init__(self):
        _check_positive("alpha", self.alpha)
        _check_non_negative("sigma", self.sigma)


@dataclass(frozen=True)
class IsingFullSu4:
    """H = alpha ZZ + sum delta_ij sigma_ij, with only `channels` fluctuating."""

    alpha: float = 1.0
    sigma: float = 0.0
    channels: Tuple[PauliString, ...] = NON_IDENTITY_STRINGS
    kind = "ising"

    def __post_init__(self):
        _check_positive("alpha", self.alpha)
        _check_non_negative("sigma", self.sigma)
        object.__setattr__(self, "channels", tuple(sorted(set(self.channels))))
        if any(p.is_identity for p in self.channels):
            raise ScenarioError("The identity is not a noise channel")


@dataclass(frozen=True)
class MultiplicativeChannel:
    """Each block evaluates to exp[-i theta/2 ZZ] exp[i sum delta_ij sigma_ij]."""

    delta: "ErrorVector"
    kind = "multiplicative"


@dataclass(frozen=True)
class LocalGateNoise:
    """
    Local gates L become P L with P = exp[-i Da.sigma] (x) exp[-i Db.sigma].

    mode "systematic" perturbs each merged slot, reusing one P per distinct
    gate within a sample; "random" draws a fresh P for every pulse invoked.
    Blocks follow `two_qubit` when given.
    """

    mode: str = "systematic"
    scale: float = 0.0
    two_qubit: Optional[Union[HeisenbergFields, IsingFullSu4]] = None
    kind = "local"

    def __post_init__(self):
        if self.mode not in ("systematic", "random"):
            raise ScenarioError(f"Unknown local noise mode '{self.mode}'")
        _check_non_negative("scale", self.scale)


NoiseScenario = Union[HeisenbergFields, IsingFullSu4, MultiplicativeChannel, LocalGateNoise]


def _check_non_negative(name: str, value: float) -> None:
    if not value >= 0:
        raise ScenarioError(f"{name} must be non-negative, got {value}")


def _check_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ScenarioError(f"{name} must be positive, got {value}")


@dataclass
class NoiseRealization:
    """
    One quasistatic noise sample.

    block_rule maps a block angle to its noisy unitary; local_rule, when set,
    maps (compiled program, slot index) to the perturbed slot.
    """

    block_rule: Callable[[float], np.ndarray]
    local_rule: Optional[Callable[[Program, int], np.ndarray]] = None
    sample_index: int = 0


NULL_REALIZATION = NoiseRealization(ideal_block)


def make_rng(seed: int, sample_index: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, sample_index, stream...)."""
    key = [int(seed), int(sample_index), *(int(s) for s in stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def with_sigma(scenario: NoiseScenario, sigma: float) -> NoiseScenario:
    """Return the scenario with its two-qubit noise strength set to sigma."""
    if isinstance(scenario, (HeisenbergFields, IsingFullSu4)):
        return replace(scenario, sigma=float(sigma))
    if isinstance(scenario, LocalGateNoise):
        inner = scenario.two_qubit or IsingFullSu4()
        return replace(scenario, two_qubit=replace(inner, sigma=float(sigma)))
    raise ScenarioError(f"Scenario '{scenario.kind}' has no sigma parameter")


def draw_noise_terms(scenario: NoiseScenario, rng_seed: int, sample_index: int) -> np.ndarray:
    """
    Draw the stochastic variables of a Hamiltonian scenario.

    Returns six fields (X1, Y1, Z1, X2, Y2, Z2) for HeisenbergFields and fifteen
    coefficients in canonical channel order for IsingFullSu4, in units of alpha.
    """
    rng = make_rng(rng_seed, sample_index, STREAM_BLOCK)
    if isinstance(scenario, HeisenbergFields):
        return rng.normal(0.0, 1.0, size=6) * scenario.sigma * scenario.alpha
    if isinstance(scenario, IsingFullSu4):
        draws = rng.normal(0.0, 1.0, size=len(NON_IDENTITY_STRINGS))
        mask = np.array([p in scenario.channels for p in NON_IDENTITY_STRINGS], dtype=float)
        return draws * mask * scenario.sigma * scenario.alpha
    raise ScenarioError(f"Scenario '{scenario.kind}' has no Hamiltonian noise terms")


def hamiltonian(scenario: NoiseScenario, terms: np.ndarray) -> np.ndarray:
    """Assemble the noisy two-qubit Hamiltonian for drawn noise terms."""
    if isinstance(scenario, HeisenbergFields):
        h = scenario.alpha * (
            pauli_matrix(ZZ)
            + scenario.delta_x * pauli_matrix(_XX)
            + scenario.delta_y * pauli_matrix(_YY)
        )
        axes = _FIELD_AXES
    elif isinstance(scenario, IsingFullSu4):
        h = scenario.alpha * pauli_matrix(ZZ)
        axes = NON_IDENTITY_STRINGS
    else:
        raise ScenarioError(f"Scenario '{scenario.kind}' has no Hamiltonian")
    for axis, value in zip(axes, terms):
        if value:
            h = h + value * pauli_matrix(axis)
    return h


class _EigenPropagator:
    """exp(-i H t) for one fixed H, with t = theta/(2 alpha)."""

    def __init__(self, h: np.ndarray, alpha: float):
        self.alpha = alpha
        self.evals, self.evecs = np.linalg.eigh(h)
        self.cache: Dict[float, np.ndarray] = {}

    def __call__(self, angle: float) -> np.ndarray:
        u = self.cache.get(angle)
        if u is None:
            t = angle / (2 * self.alpha)
            u = (self.evecs * np.exp(-1j * t * self.evals)) @ self.evecs.conj().T
            self.cache[angle] = u
        return u


class _MultiplicativeRule:
    def __init__(self, delta: "ErrorVector"):
        self.error = expm_hermitian(delta.generator(), -1.0)
        self.cache: Dict[float, np.ndarray] = {}

    def __call__(self, angle: float) -> np.ndarray:
        u = self.cache.get(angle)
        if u is None:
            u = pauli_rotation(ZZ, angle) @ self.error
            self.cache[angle] = u
        return u


def gate_identity(matrix: np.ndarray) -> int:
    """Stable integer key of a local gate, insensitive to global phase."""
    canonical = np.round(phase_normalized(matrix), 10) + 0.0
    digest = hashlib.md5(canonical.tobytes()).digest()
    return int.from_bytes(digest[:8], "big")


Factors = Tuple[np.ndarray, np.ndarray]


def _factors(d: np.ndarray) -> Factors:
    return su2_exp(d[:3]), su2_exp(d[3:])


class LocalPerturber:
    """
    Perturbs the local slots of a compiled program per LocalGateNoise.

    Systematic mode treats each active merged slot as one local gate and reuses
    one perturbation per distinct gate within a sample. Random mode gives every
    pulse of every slot its own perturbation. `applied` collects the factors of
    each perturbation in invocation order.
    """

    def __init__(self, scenario: LocalGateNoise, rng_seed: int, sample_index: int):
        self.scenario = scenario
        self.rng_seed = rng_seed
        self.sample_index = sample_index
        self.applied: List[Factors] = []
        self._systematic: Dict[int, Factors] = {}

    def systematic_factors(self, matrix: np.ndarray) -> Factors:
        key = gate_identity(matrix)
        if key not in self._systematic:
            rng = make_rng(self.rng_seed, self.sample_index, STREAM_LOCAL_SYSTEMATIC, key)
            self._systematic[key] = _factors(rng.normal(0.0, self.scenario.scale, size=6))
        return self._systematic[key]

    def random_factors(self, slot: int, count: int) -> List[Factors]:
        rng = make_rng(self.rng_seed, self.sample_index, STREAM_LOCAL_RANDOM, slot)
        draws = rng.normal(0.0, self.scenario.scale, size=(count, 6))
        return [_factors(d) for d in draws]

    def __call__(self, program: Program, slot: int) -> np.ndarray:
        if self.scenario.mode == "random":
            pulses = program.pulses[slot]
            u = IDENTITY4
            for pulse, factors in zip(pulses, self.random_factors(slot, len(pulses))):
                self.applied.append(factors)
                u = local_gate(*factors) @ pulse @ u
            return u
        matrix = program.slots[slot]
        if not program.active[slot]:
            return matrix
        factors = self.systematic_factors(matrix)
        self.applied.append(factors)
        return local_gate(*factors) @ matrix


def sample_realization(scenario: NoiseScenario, rng_seed: int, sample_index: int) -> NoiseRealization:
    """
    Draw one noise realization.

    Args:
        scenario: Noise model
        rng_seed: Non-negative run seed
        sample_index: Index of this sample within the run

    Returns:
        NoiseRealization; identical inputs give identical realizations
    """
    if rng_seed < 0 or sample_index < 0:
        raise ScenarioError("rng_seed and sample_index must be non-negative")
    if isinstance(scenario, (HeisenbergFields, IsingFullSu4)):
        if scenario.sigma == 0 and isinstance(scenario, IsingFullSu4):
            h = hamiltonian(scenario, np.zeros(len(NON_IDENTITY_STRINGS)))
        else:
            h = hamiltonian(scenario, draw_noise_terms(scenario, rng_seed, sample_index))
        return NoiseRealization(_EigenPropagator(h, scenario.alpha), None, sample_index)
    if isinstance(scenario, MultiplicativeChannel):
        return NoiseRealization(_MultiplicativeRule(scenario.delta), None, sample_index)
    if isinstance(scenario, LocalGateNoise):
        if scenario.two_qubit is not None:
            block_rule = sample_realization(scenario.two_qubit, rng_seed, sample_index).block_rule
        else:
            block_rule = ideal_block
        perturber = LocalPerturber(scenario, rng_seed, sample_index)
        return NoiseRealization(block_rule, perturber, sample_index)
    raise ScenarioError(f"Unsupported scenario {type(scenario).__name__}")


_SQRT_SWAP_CNOT = uncorrected_cnot_sqrt_swap()
_ISING_CNOT = _uncorrected_ising_node()


def uncorrected_cnot_heisenberg(realization: NoiseRealization) -> np.ndarray:
    """CNOT from two sqrt(SWAP) evolutions; exact for a noise-free isotropic Heisenberg coupling."""
    return evaluate(_SQRT_SWAP_CNOT, realization)


def uncorrected_cnot_ising(realization: NoiseRealization) -> np.ndarray:
    """CNOT from a single (pi/2)_ZZ evolution with ideal local gates."""
    return evaluate(_ISING_CNOT, realization)


def corrected_cnot(sequence, realization: NoiseRealization) -> np.ndarray:
    return evaluate(sequence, realization)


@dataclass
class RunningStats:
    """Welford accumulator of count, mean and sum of squared deviations."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def merge(self, other: "RunningStats") -> "RunningStats":
        """Combine two accumulators (Chan et al. pairwise update)."""
        if other.count == 0:
            return RunningStats(self.count, self.mean, self.m2)
        if self.count == 0:
            return RunningStats(other.count, other.mean, other.m2)
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return RunningStats(count, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def std_error(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self.variance / self.count)


@dataclass(frozen=True)
class SweepResult:
    sequence_id: str
    sigma: float
    mean_infidelity: float
    std_error: float
    n_samples: int
    seed: int

    def as_row(self) -> dict:
        return {
            "sequence_id": self.sequence_id,
            "sigma": self.sigma,
            "mean_infidelity": self.mean_infidelity,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class LocalNoisePoint:
    sequence_id: str
    mode: str
    scale: float
    sigma: float
    cnot_infidelity: float
    local_infidelity: float
    single_qubit_infidelity: float
    ratio: float
    n_samples: int
    seed: int

    def as_row(self) -> dict:
        return {
            "sequence_id": self.sequence_id,
            "mode": self.mode,
            "scale": self.scale,
            "sigma": self.sigma,
            "cnot_infidelity": self.cnot_infidelity,
            "local_infidelity": self.local_infidelity,
            "single_qubit_infidelity": self.single_qubit_infidelity,
            "ratio": self.ratio,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def _run_chunk(sample_fn: Callable[[int], Sequence[float]], start: int, stop: int, width: int) -> List[RunningStats]:
    stats = [RunningStats() for _ in range(width)]
    for index in range(start, stop):
        for acc, value in zip(stats, sample_fn(index)):
            acc.push(float(value))
    return stats


def accumulate(sample_fn: Callable[[int], Sequence[float]], n_samples: int, width: int = 1, workers: int = 1) -> List[RunningStats]:
    """
    Average `width` quantities over samples 0..n_samples-1.

    Samples are processed in fixed chunks and merged in chunk order, so the
    result is bitwise identical for any worker count.
    """
    bounds = [(s, min(s + CHUNK_SIZE, n_samples)) for s in range(0, n_samples, CHUNK_SIZE)]
    chunk_stats: Dict[int, List[RunningStats]] = {}
    if workers <= 1:
        for index, (start, stop) in enumerate(bounds):
            chunk_stats[index] = _run_chunk(sample_fn, start, stop, width)
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            future_to_chunk = {
                executor.submit(_run_chunk, sample_fn, start, stop, width): index
                for index, (start, stop) in enumerate(bounds)
            }
            for future in as_completed(future_to_chunk):
                chunk_stats[future_to_chunk[future]] = future.result()
    merged = [RunningStats() for _ in range(width)]
    for index in range(len(bounds)):
        merged = [m.merge(c) for m, c in zip(merged, chunk_stats[index])]
    return merged


def run_sweep(
    sequence_id: str,
    scenario: NoiseScenario,
    sigma_grid: Sequence[float],
    n_samples: int,
    seed: int,
    workers: int = 1,
    params: str = "refined",
) -> List[SweepResult]:
    """
    Mean infidelity of a named sequence against its target for each sigma.

    Args:
        sequence_id: Catalog name of the sequence
        scenario: Hamiltonian noise scenario; its sigma is replaced per grid point
        sigma_grid: Noise strengths in units of alpha
        n_samples: Samples per grid point
        seed: Run seed
        workers: Worker threads
        params: "published" or "refined" sequence parameters

    Returns:
        One SweepResult per sigma, in grid order
    """
    if n_samples < 1:
        raise ScenarioError(f"n_samples must be positive, got {n_samples}")
    if not len(sigma_grid):
        raise ScenarioError("Empty sigma grid")
    spec = catalog.build_sequence(sequence_id, params)
    results = []
    for sigma in sigma_grid:
        point = with_sigma(scenario, sigma)

        def sample(index: int, point=point) -> Tuple[float]:
            u = corrected_cnot(spec.node, sample_realization(point, seed, index))
            return (infidelity(u, spec.target),)

        (stats,) = accumulate(sample, n_samples, 1, workers)
        logger.info(
            f"{sequence_id}: sigma={sigma:.3e} mean infidelity={stats.mean:.4e} "
            f"(+/- {stats.std_error:.1e}, n={stats.count})"
        )
        results.append(
            SweepResult(sequence_id, float(sigma), stats.mean, stats.std_error, stats.count, seed)
        )
    return results


def local_gate_study(
    sequence_id: str,
    mode: str,
    scale_grid: Sequence[float],
    sigma_grid: Sequence[float],
    n_samples: int = DEFAULT_LOCAL_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    params: str = "refined",
) -> List[LocalNoisePoint]:
    """
    CNOT infidelity against the mean infidelity of the perturbed local gates.

    Systematic mode perturbs the merged slots between blocks; random mode
    perturbs every pulse on its own. The local infidelity is averaged over the
    perturbations applied in each sample. The two-qubit blocks fluctuate on the
    channels the sequence cancels, with strength sigma.

    Returns:
        One LocalNoisePoint per (scale, sigma), scale-major
    """
    spec = catalog.build_sequence(sequence_id, params)
    program = compile_program(spec.node)
    if mode == "random":
        perturbed = sum(len(p) for p in program.pulses)
    else:
        perturbed = sum(program.active)
    channels = tuple(spec.cancelled) or NON_IDENTITY_STRINGS
    logger.info(
        f"{sequence_id}: {len(program.angles)} blocks, {perturbed} perturbed local gates, mode={mode}"
    )
    eye2 = np.eye(2, dtype=complex)
    points = []
    for scale in scale_grid:
        for sigma in sigma_grid:
            scenario = LocalGateNoise(mode, float(scale), IsingFullSu4(sigma=float(sigma), channels=channels))

            def sample(index: int, scenario=scenario) -> Tuple[float, float, float]:
                realization = sample_realization(scenario, seed, index)
                perturber = realization.local_rule
                u = evaluate_program(program, realization.block_rule, perturber)
                local, single = 0.0, 0.0
                for a, b in perturber.applied:
                    local += infidelity(local_gate(a, b), IDENTITY4)
                    single += 0.5 * (infidelity(a, eye2) + infidelity(b, eye2))
                count = max(len(perturber.applied), 1)
                return infidelity(u, spec.target), local / count, single / count

            cnot, local, single = accumulate(sample, n_samples, 3, workers)
            ratio = cnot.mean / local.mean if local.mean > 0 else float("nan")
            logger.info(
                f"{sequence_id} {mode}: scale={scale:.2e} sigma={sigma:.2e} "
                f"cnot={cnot.mean:.3e} local={local.mean:.3e} ratio={ratio:.1f}"
            )
            points.append(
                LocalNoisePoint(
                    sequence_id, mode, float(scale), float(sigma), cnot.mean,
                    local.mean, single.mean, ratio, cnot.count, seed,
                )
            )
    return points


def scenario_from_config(config: dict) -> NoiseScenario:
    """
    Build a scenario from a mapping such as {"type": "ising", "alpha": 1.0}.

    Raises:
        ScenarioError: On an unknown type or invalid values
    """
    config = dict(config or {})
    kind = str(config.pop("type", "ising")).lower()
    try:
        if kind == "heisenberg":
            return HeisenbergFields(
                alpha=float(config.get("alpha", 1.0)),
                delta_x=float(config.get("delta_x", 1.0)),
                delta_y=float(config.get("delta_y", 1.0)),
                sigma=float(config.get("sigma", 0.0)),
            )
        if kind == "ising":
            channels = config.get("channels")
            return IsingFullSu4(
                alpha=float(config.get("alpha", 1.0)),
                sigma=float(config.get("sigma", 0.0)),
                channels=tuple(PauliString.parse(c) for c in channels) if channels else NON_IDENTITY_STRINGS,
            )
        if kind == "multiplicative":
            from composite_cnot.error_analysis import ErrorVector

            return MultiplicativeChannel(ErrorVector.from_mapping(config.get("delta", {})))
        if kind == "local":
            inner = config.get("two_qubit")
            return LocalGateNoise(
                mode=str(config.get("mode", "systematic")),
                scale=float(config.get("scale", 0.0)),
                two_qubit=scenario_from_config(inner) if inner else None,
            )
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"Invalid '{kind}' scenario: {e}") from e
    raise ScenarioError(f"Unknown scenario type '{kind}'")
