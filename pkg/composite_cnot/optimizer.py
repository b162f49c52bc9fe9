"""
Search for the tilt angles of the ZZ-correcting sequence in its reduced SU(2) form.

The operators ZZ, ZX and IY close under commutation like X, Y and Z, so every
U^(k) and every exp[i psi/2 IY] maps to a 2x2 matrix:

    exp[-i (5 theta0/2)(1 + delta) ZZ]  ->  exp[-i (5 theta0/2)(1 + delta) X]
    exp[i psi/2 IY]                     ->  exp[i psi/2 Z]

A sequence cancels the ZZ error to first order when the delta-derivative of the
reduced product vanishes, and it is locally equivalent to the target when its
invariants match.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from composite_cnot.params import (
    THETA0,
    VALID_K,
    A1,
    A2,
    ParamTable,
    SequenceParams,
)
from composite_cnot.su4_algebra import (
    CNOT,
    IDENTITY4,
    SINGLE_QUBIT_PAULIS,
    PauliString,
    infidelity,
    pauli_matrix,
    pauli_rotation,
    su2_coefficients,
    su2_components,
)

logger = logging.getLogger(__name__)

U_ANGLE = 5 * THETA0 / 2
COMPOSITIONS = ((2, 1, 1, 1), (1, 2, 1, 1), (1, 1, 2, 1), (1, 1, 1, 2))
CNOT_COMPOSITION = (1, 1, 1, 2)
SELF_SIMILAR_COMPOSITION = (1, 2, 1, 1)

DEFAULT_TOL = 1e-12
DEFAULT_RESTARTS = 3
INITIAL_STEP = 0.1
RESTART_SHRINK = 0.5
NELDER_MEAD_OPTIONS = {"xatol": 1e-13, "fatol": 1e-26, "maxiter": 20000, "maxfev": 20000}
# Powell polish works on offsets y with psi = psi0 + y / POLISH_SCALE
POLISH_SCALE = 1e4
OBJECTIVE_SCALE = 1e8
POWELL_OPTIONS = {"xtol": 1e-12, "ftol": 1e-15, "maxfev": 20000}

_I2 = SINGLE_QUBIT_PAULIS[0]
_X, _Z = SINGLE_QUBIT_PAULIS[1], SINGLE_QUBIT_PAULIS[3]
_ZZ = pauli_matrix(PauliString.parse("ZZ"))
_ZX = pauli_matrix(PauliString.parse("ZX"))
_IY_STRING = PauliString.parse("IY")
_IY = pauli_matrix(_IY_STRING)
_XI = pauli_matrix(PauliString.parse("XI"))


# Custom exceptions
class OptimizerError(Exception):
    """Base exception for parameter search errors."""

    pass


class InvalidCompositionError(OptimizerError):
    """Exception raised when repetition counts do not satisfy 1 + sum(n) = 6."""

    pass


def check_composition(n: Sequence[int]) -> Tuple[int, int, int, int]:
    """
    Validate repetition counts.

    Raises:
        InvalidCompositionError: Unless n has four positive entries with 1 + sum(n) = 6
    """
    try:
        n = tuple(int(x) for x in n)
    except (TypeError, ValueError) as e:
        raise InvalidCompositionError(f"Invalid repetition counts {n!r}") from e
    if len(n) != 4 or any(x < 1 for x in n) or 1 + sum(n) != 6:
        raise InvalidCompositionError(f"n={n} violates 1 + sum(n) = 6 with four positive entries")
    return n


def _x_power(count: int, delta: float) -> np.ndarray:
    angle = count * U_ANGLE * (1 + delta)
    return np.cos(angle) * _I2 - 1j * np.sin(angle) * _X


def _z_tilt(psi: float) -> np.ndarray:
    """exp[i psi/2 Z]"""
    return np.cos(psi / 2) * _I2 + 1j * np.sin(psi / 2) * _Z


def _propagate(psi: Sequence[float], n: Sequence[int], delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Reduced product and its exact delta-derivative."""
    m = _x_power(1, delta)
    dm = -1j * U_ANGLE * _X @ m
    for angle, count in zip(psi, n):
        tilt = _z_tilt(angle)
        block = _x_power(count, delta)
        dblock = -1j * count * U_ANGLE * _X @ block
        left, right = tilt, tilt.conj().T
        dm = left @ (dblock @ right @ m + block @ right @ dm)
        m = left @ block @ right @ m
    return m, dm


def reduced_sequence(psi: Sequence[float], n: Sequence[int], delta: float = 0.0) -> np.ndarray:
    """(prod_{j=4..1} exp[i psi_j/2 Z] U^{n_j} exp[-i psi_j/2 Z]) U with U = exp[-i 5 theta0/2 (1+delta) X]."""
    return _propagate(psi, check_composition(n), delta)[0]


def reduced_delta(block_delta: float, k: int) -> float:
    """Reduced delta produced by a ZZ error of block_delta on each of the k blocks of U^(k)."""
    return -2 * k * block_delta / (5 * THETA0)


def embed_reduced(m: np.ndarray) -> np.ndarray:
    """Map c1 I + i c2 X + i c3 Y + i c4 Z to c1 I + i c2 ZZ + i c3 ZX + i c4 IY."""
    c1, c2, c3, c4 = su2_coefficients(m)
    return c1 * IDENTITY4 + 1j * (c2 * _ZZ + c3 * _ZX + c4 * _IY)


@dataclass(frozen=True)
class Su2Expansion:
    """Reduced product A + delta B with A = L1 I + i L2 X + i L3 Y + i L4 Z, likewise B."""

    lam: Tuple[float, float, float, float]
    delta_coeff: Tuple[float, float, float, float]

    @property
    def first_order_norm(self) -> float:
        return float(np.linalg.norm(self.delta_coeff))


def reduced_sequence_expansion(psi: Sequence[float], n: Sequence[int], delta: float = 0.0) -> Su2Expansion:
    """
    Expand the reduced product to first order in delta.

    Args:
        psi: Four tilt angles
        n: Repetition counts with 1 + sum(n) = 6
        delta: Expansion point (0 for the published problem)

    Returns:
        Su2Expansion with the unperturbed and first-order coefficients

    Raises:
        InvalidCompositionError: On invalid n
    """
    m, dm = _propagate(psi, check_composition(n), delta)
    return Su2Expansion(su2_components(m), su2_coefficients(dm))


def reduced_invariants(lam: Sequence[float]) -> Tuple[float, float]:
    """Local invariants (G1, G2) of the 4x4 gate whose reduced form has coefficients lam."""
    l1, l2, l3, l4 = (x * x for x in lam)
    off = l2 + l3
    g1 = (l1 + l4 - off) ** 2
    g2 = 3 * l4 * l4 + 3 * l1 * l1 - 2 * l1 * off + 3 * off * off + l4 * (6 * l1 - 2 * off)
    return float(g1), float(g2)


def target_invariants(target: str, k: Optional[int] = None) -> Tuple[float, float]:
    """
    Invariants the corrected U^(6k) must reach.

    (0, 1) for the CNOT class; for a self-similar target, those of (5 theta0/k)_ZZ.

    Raises:
        OptimizerError: On an unknown target or missing k
    """
    if target == "cnot":
        return 0.0, 1.0
    if target == "self-similar":
        if k not in VALID_K:
            raise OptimizerError(f"Self-similar target needs k in {VALID_K}, got {k}")
        half = 5 * THETA0 / (2 * k)
        return reduced_invariants((np.cos(half), -np.sin(half), 0.0, 0.0))
    raise OptimizerError(f"Unknown target '{target}'")


@dataclass(frozen=True)
class ObjectiveSpec:
    n: Tuple[int, int, int, int]
    target_invariants: Tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "n", check_composition(self.n))
        object.__setattr__(self, "target_invariants", tuple(float(x) for x in self.target_invariants))

    @classmethod
    def for_cnot(cls, n: Sequence[int] = CNOT_COMPOSITION) -> "ObjectiveSpec":
        return cls(tuple(n), target_invariants("cnot"))

    @classmethod
    def for_self_similar(cls, k: int, n: Sequence[int] = SELF_SIMILAR_COMPOSITION) -> "ObjectiveSpec":
        return cls(tuple(n), target_invariants("self-similar", k))

    @classmethod
    def for_params(cls, params: SequenceParams) -> "ObjectiveSpec":
        if params.target == "cnot":
            return cls.for_cnot(params.n)
        return cls.for_self_similar(params.k, params.n)


def residuals(psi: Sequence[float], spec: ObjectiveSpec) -> np.ndarray:
    """(Delta1..Delta4, G1 - G1*, G2 - G2*); the objective is their squared norm."""
    expansion = reduced_sequence_expansion(psi, spec.n)
    g1, g2 = reduced_invariants(expansion.lam)
    return np.array(
        list(expansion.delta_coeff)
        + [g1 - spec.target_invariants[0], g2 - spec.target_invariants[1]]
    )


def objective(psi: Sequence[float], spec: ObjectiveSpec) -> float:
    """f = sum Delta_i^2 + (G1 - G1*)^2 + (G2 - G2*)^2"""
    r = residuals(psi, spec)
    return float(np.dot(r, r))


@dataclass(frozen=True)
class OptimizationResult:
    psi: Tuple[float, float, float, float]
    objective_value: float
    converged: bool
    restarts_used: int
    n: Tuple[int, int, int, int] = CNOT_COMPOSITION
    seed_index: int = 0


def wrap_angles(psi: Sequence[float]) -> Tuple[float, ...]:
    """Map angles into [-pi, pi)."""
    return tuple(float((x + np.pi) % (2 * np.pi) - np.pi) for x in psi)


def polish(spec: ObjectiveSpec, psi: Sequence[float]) -> Tuple[np.ndarray, float]:
    """
    Powell refinement of a near-solution on a rescaled objective.

    Returns the polished angles and their objective, or the input unchanged if
    the polish did not improve it.
    """
    psi0 = np.asarray(psi, dtype=float)
    start = objective(psi0, spec)

    def scaled(y):
        return objective(psi0 + y / POLISH_SCALE, spec) * OBJECTIVE_SCALE

    result = optimize.minimize(scaled, np.zeros(4), method="Powell", options=POWELL_OPTIONS)
    candidate = psi0 + np.asarray(result.x) / POLISH_SCALE
    value = objective(candidate, spec)
    if value < start:
        return candidate, value
    return psi0, start


def _search_from(spec: ObjectiveSpec, seed: Sequence[float], tol: float, max_restarts: int, seed_index: int) -> OptimizationResult:
    x = np.asarray(seed, dtype=float)
    best_x, best_f = x, objective(x, spec)
    step = INITIAL_STEP
    restarts = 0
    for attempt in range(max_restarts + 1):
        restarts = attempt
        simplex = np.vstack([x, x + step * np.eye(4)])
        options = dict(NELDER_MEAD_OPTIONS, initial_simplex=simplex)
        result = optimize.minimize(objective, x, args=(spec,), method="Nelder-Mead", options=options)
        if result.fun < best_f:
            best_x, best_f = np.asarray(result.x), float(result.fun)
        if best_f < tol:
            break
        x = best_x
        step *= RESTART_SHRINK
    best_x, best_f = polish(spec, best_x)
    logger.debug(f"Seed {seed_index}: f={best_f:.3e} after {restarts} restarts")
    return OptimizationResult(
        tuple(float(v) for v in best_x), best_f, best_f < tol, restarts, spec.n, seed_index
    )


def best_result(results: Sequence[OptimizationResult]) -> OptimizationResult:
    return min(results, key=lambda r: (r.objective_value, wrap_angles(r.psi)))


def minimize(
    spec: ObjectiveSpec,
    seeds: Sequence[Sequence[float]],
    tol: float = DEFAULT_TOL,
    workers: int = 1,
    max_restarts: int = DEFAULT_RESTARTS,
) -> OptimizationResult:
    """
    Nelder-Mead descent with shrinking restarts from each seed, then a Powell polish.

    Args:
        spec: Repetition counts and target invariants
        seeds: Starting points, four angles each
        tol: Objective value accepted as converged
        workers: Threads across seeds
        max_restarts: Simplex restarts per seed

    Returns:
        The best result over all seeds (lowest f, then lexicographic wrapped psi).
        Non-convergence is logged and flagged, not raised.

    Raises:
        OptimizerError: If tol is not positive or no seeds are given
    """
    if not tol > 0:
        raise OptimizerError(f"tol must be positive, got {tol}")
    seeds = [tuple(float(v) for v in s) for s in seeds]
    if not seeds:
        raise OptimizerError("At least one seed is required")
    if any(len(s) != 4 for s in seeds):
        raise OptimizerError("Each seed needs four angles")

    if workers <= 1:
        results = [_search_from(spec, s, tol, max_restarts, i) for i, s in enumerate(seeds)]
    else:
        results = []
        with ThreadPoolExecutor(max_workers=workers) as executor:
            future_to_seed = {
                executor.submit(_search_from, spec, s, tol, max_restarts, i): i
                for i, s in enumerate(seeds)
            }
            for future in as_completed(future_to_seed):
                results.append(future.result())

    best = best_result(results)
    converged = sum(r.converged for r in results)
    logger.info(
        f"n={spec.n}: {converged}/{len(seeds)} seeds converged, best f={best.objective_value:.3e}"
    )
    if not best.converged:
        logger.warning(f"No seed reached f < {tol:.1e} for n={spec.n}")
    return best


def random_seeds(count: int, rng_seed: int = 0) -> np.ndarray:
    """count starting points uniform in [-pi, pi)^4."""
    rng = np.random.Generator(np.random.Philox(rng_seed))
    return rng.uniform(-np.pi, np.pi, size=(count, 4))


def perturbed_seeds(center: Sequence[float], count: int, radius: float = 0.3, rng_seed: int = 0) -> np.ndarray:
    """count starting points uniform in a box of half-width radius around center."""
    rng = np.random.Generator(np.random.Philox(rng_seed))
    return np.asarray(center, dtype=float) + rng.uniform(-radius, radius, size=(count, 4))


def search_compositions(
    target: str,
    k: Optional[int],
    seeds: Sequence[Sequence[float]],
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> Dict[Tuple[int, ...], OptimizationResult]:
    """Run minimize for each of the four compositions of 5 into 4 positive parts."""
    out = {}
    for n in COMPOSITIONS:
        spec = ObjectiveSpec(n, target_invariants(target, k))
        out[n] = minimize(spec, seeds, tol, workers)
    return out


def compare_with_published(result: OptimizationResult, params: SequenceParams) -> List[dict]:
    """Side-by-side rows of found and published angles, differences taken mod 2 pi."""
    rows = []
    for index, (found, published) in enumerate(zip(result.psi, params.psi), start=1):
        (difference,) = wrap_angles([found - published])
        rows.append(
            {
                "parameter": f"psi{index}",
                "found": float(found),
                "published": float(published),
                "difference": difference,
            }
        )
    return rows


# --- refinement of printed-precision parameters ----------------------------


def _aligned_defect(u: np.ndarray, target: np.ndarray) -> np.ndarray:
    w = target.conj().T @ u
    overlap = np.trace(w)
    aligned = w * (abs(overlap) / overlap) - IDENTITY4
    return np.concatenate((aligned.real.ravel(), aligned.imag.ravel()))


def _dressed(params: SequenceParams, core: np.ndarray, first: float, second: float) -> np.ndarray:
    if params.target == "cnot":
        return A1 @ pauli_rotation(_IY_STRING, first) @ core @ pauli_rotation(_IY_STRING, second) @ A2
    flip = _XI if params.m else IDENTITY4
    return flip @ pauli_rotation(_IY_STRING, first) @ core @ flip @ pauli_rotation(_IY_STRING, second)


def dressed_target(params: SequenceParams) -> np.ndarray:
    if params.target == "cnot":
        return CNOT
    return pauli_rotation(PauliString.parse("ZZ"), 5 * THETA0 / params.k)


@lru_cache(maxsize=None)
def refine_params(params: SequenceParams) -> SequenceParams:
    """
    Push printed-precision parameters onto the exact solution nearby.

    The tilt angles are solved against the reduced residuals, then the two
    local angles against the noise-free 4x4 construction. Both stages are
    least-squares solves started at the given values.
    """
    spec = ObjectiveSpec.for_params(params)
    before = objective(params.psi, spec)
    psi, _ = polish(spec, params.psi)
    fit = optimize.least_squares(
        residuals, psi, args=(spec,), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15
    )
    psi = fit.x if objective(fit.x, spec) < objective(psi, spec) else psi

    core = embed_reduced(reduced_sequence(psi, spec.n))
    target = dressed_target(params)

    def local_residuals(angles):
        return _aligned_defect(_dressed(params, core, *angles), target)

    start = np.array(params.local_angles, dtype=float)
    local_fit = optimize.least_squares(
        local_residuals, start, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15
    )
    refined = params.with_psi(tuple(float(x) for x in psi)).with_locals(*map(float, local_fit.x))
    logger.info(
        f"Refined {params.target} k={params.k}: f {before:.2e} -> {objective(refined.psi, spec):.2e}, "
        f"intrinsic infidelity {infidelity(_dressed(params, core, *local_fit.x), target):.2e}"
    )
    return refined


def refine_table(table: ParamTable) -> ParamTable:
    """Copy of table with every parameter set refined."""
    refined = table
    for params in list(table.cnot.values()) + list(table.self_similar.values()):
        refined = refined.with_params(refine_params(params))
    return replace(refined, label="refined")
