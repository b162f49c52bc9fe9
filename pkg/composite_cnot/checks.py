"""
Verification suite run by the `verify` command.

Every check reads the parameter table it is given (the published table by
default, looked up at call time) and reports pass/fail with a short detail.
A check that raises is reported as failed.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from composite_cnot import catalog
from composite_cnot import params as params_module
from composite_cnot.error_analysis import (
    ErrorVector,
    cancelled_channels,
    channel_report,
    eq7_roots,
    multiplicative_builder,
    verify_eq7,
)
from composite_cnot.noise_sim import HeisenbergFields, sample_realization
from composite_cnot.optimizer import (
    ObjectiveSpec,
    objective,
    reduced_invariants,
    reduced_sequence_expansion,
    refine_table,
)
from composite_cnot.params import VALID_K, ParamTable
from composite_cnot.sequences import (
    evaluate,
    interaction_time,
    length10,
    length20,
    local_gate_count,
    zz_corrected,
)
from composite_cnot.su4_algebra import CNOT, IDENTITY4, infidelity, makhlin_invariants

logger = logging.getLogger(__name__)

CLOSED_FORM_TOLERANCE = 1e-12
CNOT_TOLERANCE = 1e-10
INTRINSIC_TOLERANCE = 1e-10
OBJECTIVE_TOLERANCE = 1e-9
INVARIANT_TOLERANCE = 1e-9
ALL_ORDERS_DELTA = 0.3
UNSUPPRESSED_FLOOR = 1e-2

CANCELLATION_SEQUENCES = (
    "length2", "length4", "length5", "length10", "length20",
    "cnot5", "cnot10", "cnot20", "cnot_final5", "cnot_final10", "length120",
    "self_similar5", "self_similar10", "self_similar20", "length2_cnot",
)
# Off-set coefficients must be clearly nonzero for these
PARTITION_SEQUENCES = ("length5", "length20", "length120")

# Merged local slots, ends included
EXPECTED_LOCAL_SLOTS = {"cnot20": 41, "length120": 121}


class UnknownCheckError(Exception):
    """Exception raised when a requested check name is not registered."""

    pass


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def as_row(self) -> dict:
        return {"check": self.name, "result": "PASS" if self.passed else "FAIL", "detail": self.detail}


CheckOutcome = Tuple[bool, str]


def check_eq7(table: ParamTable) -> CheckOutcome:
    theta0 = table.theta0
    c = np.cos(theta0)
    root = abs(4 * c * c + 2 * c - 3)
    residual = verify_eq7(theta0, -1, 1, 1)
    roots = eq7_roots(-1, 1, 1)
    alternative = eq7_roots(1, 1, -1)
    passed = (
        root < CLOSED_FORM_TOLERANCE
        and residual < CLOSED_FORM_TOLERANCE
        and abs(theta0 / np.pi - 0.27) < 0.005
        and bool(roots)
        and abs(roots[0] - theta0) < 1e-12
        and bool(alternative)
        and min(alternative) > theta0
    )
    return passed, (
        f"theta0/pi={theta0 / np.pi:.6f} residual={residual:.1e} "
        f"alternative root/pi={min(alternative) / np.pi if alternative else float('nan'):.4f}"
    )


def check_closed_forms(table: ParamTable) -> CheckOutcome:
    failures = []
    worst = 0.0
    for name in ("length5", "length10", "length20", "length2", "length4"):
        spec = catalog.sequence_from_table(name, table)
        value = infidelity(evaluate(spec.node), spec.target)
        worst = max(worst, value)
        if value >= CLOSED_FORM_TOLERANCE:
            failures.append(f"{name}={value:.1e}")
    for name in ("cnot5", "cnot10", "cnot20", "uncorrected_ising", "length2_cnot"):
        spec = catalog.sequence_from_table(name, table)
        value = infidelity(evaluate(spec.node), spec.target)
        worst = max(worst, value)
        if value >= CNOT_TOLERANCE:
            failures.append(f"{name}={value:.1e}")
    heisenberg = catalog.sequence_from_table("uncorrected_heisenberg", table)
    isotropic = sample_realization(HeisenbergFields(), 0, 0)
    value = infidelity(evaluate(heisenberg.node, isotropic), CNOT)
    if value >= CNOT_TOLERANCE:
        failures.append(f"uncorrected_heisenberg={value:.1e}")
    if failures:
        return False, "infidelity too large: " + ", ".join(failures)
    return True, f"worst infidelity {worst:.1e}"


def check_cancellation(table: ParamTable) -> CheckOutcome:
    refined = refine_table(table)
    failures = []
    for name in CANCELLATION_SEQUENCES:
        spec = catalog.sequence_from_table(name, refined)
        found = cancelled_channels(spec.node, spec.target)
        if found != spec.cancelled:
            extra = sorted(c.name for c in found - spec.cancelled)
            missing = sorted(c.name for c in spec.cancelled - found)
            failures.append(f"{name} (missing {missing}, unexpected {extra})")
    for name in PARTITION_SEQUENCES:
        spec = catalog.sequence_from_table(name, refined)
        for report in channel_report(spec.node, spec.target):
            if report.channel not in spec.cancelled and abs(report.coefficient) <= UNSUPPRESSED_FLOOR:
                failures.append(f"{name}/{report.channel} coefficient {abs(report.coefficient):.1e}")
    if failures:
        return False, "; ".join(failures)
    return True, f"{len(CANCELLATION_SEQUENCES)} sequences match their advertised channel sets"


def check_all_orders(table: ParamTable) -> CheckOutcome:
    worst = 0.0
    for name in ("length2", "length4"):
        spec = catalog.sequence_from_table(name, table)
        builder = multiplicative_builder(spec.node)
        for channel in spec.cancelled:
            value = infidelity(builder(ErrorVector.single(channel, ALL_ORDERS_DELTA)), spec.target)
            worst = max(worst, value)
    return worst < CLOSED_FORM_TOLERANCE, f"worst infidelity at delta={ALL_ORDERS_DELTA}: {worst:.1e}"


def check_intrinsic(table: ParamTable) -> CheckOutcome:
    failures = []
    values = {}
    for k in VALID_K:
        values[f"cnot_final({k})"] = catalog.sequence_from_table(f"cnot_final{k}", table)
        values[f"self_similar({k})"] = catalog.sequence_from_table(f"self_similar{k}", table)
    worst = 0.0
    for label, spec in values.items():
        value = infidelity(evaluate(spec.node), spec.target)
        worst = max(worst, value)
        if value >= INTRINSIC_TOLERANCE:
            failures.append(f"{label} intrinsic infidelity {value:.2e}")
    if failures:
        return False, "; ".join(failures)
    return True, f"worst intrinsic infidelity {worst:.1e}"


def check_objective(table: ParamTable) -> CheckOutcome:
    failures = []
    worst = 0.0
    for params in list(table.cnot.values()) + list(table.self_similar.values()):
        value = objective(params.psi, ObjectiveSpec.for_params(params))
        worst = max(worst, value)
        if value >= OBJECTIVE_TOLERANCE:
            failures.append(f"{params.target} k={params.k}: f={value:.2e}")
    if failures:
        return False, "; ".join(failures)
    return True, f"worst objective {worst:.1e}"


def check_interaction_time(table: ParamTable) -> CheckOutcome:
    failures = []
    cnot20 = catalog.sequence_from_table("cnot20", table).node
    expected = 5 * table.theta0
    for alpha in (1.0, 2.5):
        value = interaction_time(cnot20, alpha)
        if abs(value - expected / alpha) > 1e-12:
            failures.append(f"cnot20 time {value:.12g} at alpha={alpha}, expected {expected / alpha:.12g}")
    for name, slots in EXPECTED_LOCAL_SLOTS.items():
        count = local_gate_count(catalog.sequence_from_table(name, table).node, merged=True)
        if count != slots:
            failures.append(f"{name} has {count} local slots, expected {slots}")
    savings = (
        local_gate_count(length10(table.theta0), merged=True)
        - local_gate_count(length10(table.theta0, interchanged=True), merged=True),
        local_gate_count(length20(table.theta0), merged=True)
        - local_gate_count(length20(table.theta0, interchanged=True), merged=True),
    )
    if savings != (4, 8):
        failures.append(f"interchanged nesting saves {savings}, expected (4, 8)")
    if failures:
        return False, "; ".join(failures)
    return True, f"cnot20 interaction time 5 theta0/alpha; local slots {EXPECTED_LOCAL_SLOTS}"


def check_invariants(table: ParamTable) -> CheckOutcome:
    failures = []
    for label, u, expected in (("CNOT", CNOT, (0.0, 1.0)), ("identity", IDENTITY4, (1.0, 3.0))):
        g = makhlin_invariants(u)
        if max(abs(g.g1 - expected[0]), abs(g.g2 - expected[1])) > INVARIANT_TOLERANCE:
            failures.append(f"{label} invariants {tuple(g)}")
    for params in list(table.cnot.values()) + list(table.self_similar.values()):
        reduced = reduced_invariants(reduced_sequence_expansion(params.psi, params.n).lam)
        full = makhlin_invariants(evaluate(zz_corrected(params.k, params)))
        gap = max(abs(reduced[0] - full.g1), abs(reduced[1] - full.g2))
        if gap > INVARIANT_TOLERANCE:
            failures.append(f"{params.target} k={params.k} reduced/full gap {gap:.1e}")
    if failures:
        return False, "; ".join(failures)
    return True, "reduced and full invariants agree"


CHECKS: Dict[str, Callable[[ParamTable], CheckOutcome]] = {
    "eq7": check_eq7,
    "closed_forms": check_closed_forms,
    "cancellation": check_cancellation,
    "all_orders": check_all_orders,
    "intrinsic": check_intrinsic,
    "objective": check_objective,
    "interaction_time": check_interaction_time,
    "invariants": check_invariants,
}


def run_checks(names: Optional[Sequence[str]] = None, table: Optional[ParamTable] = None) -> List[CheckResult]:
    """
    Run the named checks (all when names is None) in registry order.

    Raises:
        UnknownCheckError: If a name is not registered
    """
    selected = list(CHECKS) if not names else list(names)
    unknown = [n for n in selected if n not in CHECKS]
    if unknown:
        raise UnknownCheckError(
            f"Unknown check(s) {', '.join(unknown)}. Available: {', '.join(CHECKS)}"
        )
    table = table or params_module.PUBLISHED
    results = []
    for name in selected:
        logger.info(f"Running check '{name}'")
        try:
            passed, detail = CHECKS[name](table)
        except Exception as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        level = logging.INFO if passed else logging.ERROR
        logger.log(level, f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        results.append(CheckResult(name, bool(passed), detail))
    return results
