#!/usr/bin/env python
"""
Test module for the sequence catalog and the verification suite.
Run this module from the root directory:
python -m tests.test_catalog
"""

import logging
import sys
import unittest
from unittest.mock import patch

from composite_cnot import catalog
from composite_cnot import checks
from composite_cnot.error_analysis import cancelled_channels
from composite_cnot.params import PUBLISHED, SequenceError
from composite_cnot.sequences import evaluate
from composite_cnot.su4_algebra import PauliString, infidelity

# Setup logging with stdout handler
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler(sys.stdout)],
)
logger = logging.getLogger(__name__)

CLOSED_FORM_SEQUENCES = (
    "block", "length2", "length4", "length5", "length10", "length20",
    "cnot5", "cnot10", "cnot20", "uncorrected_ising", "length2_cnot",
)
FAST_CHECKS = ["eq7", "closed_forms", "all_orders", "intrinsic", "objective", "interaction_time", "invariants"]


class CatalogTests(unittest.TestCase):
    """Test cases for sequence lookup and the advertised channel sets."""

    def setUp(self):
        """Set up before each test."""
        print(f"\n{'='*70}")

    def test_known_sequences_and_aliases(self):
        print("\nTEST: Sequence Ids and Aliases")
        print("------------------------------")
        known = catalog.known_sequences()
        for name in ("length5", "cnot20", "length120", "second_order", "length40", "cnot_final20"):
            self.assertIn(name, known)
        self.assertEqual(catalog.build_sequence("length40").name, "cnot20")
        self.assertEqual(catalog.build_sequence("cnot_final20").name, "length120")
        self.assertIs(catalog.build_sequence("length5"), catalog.build_sequence("length5"))
        self.assertTrue(catalog.description("length40").startswith("CNOT"))
        print(f"✅ {len(known)} ids, aliases resolve to their canonical sequences")

    def test_unknown_sequence(self):
        print("\nTEST: Unknown Sequence")
        print("----------------------")
        with self.assertRaises(catalog.UnknownSequenceError):
            catalog.build_sequence("length7")
        with self.assertRaises(SequenceError):
            catalog.advertised_cancelled("teleport")
        with self.assertRaises(SequenceError):
            catalog.build_sequence("length5", "exact")
        print("✅ Unknown ids and parameter sources raise")

    def test_advertised_sets(self):
        print("\nTEST: Advertised Channel Sets")
        print("-----------------------------")
        expected_sizes = {
            "block": 0, "length2": 4, "length4": 6, "length5": 8, "length10": 12, "length20": 14, "length120": 15,
            "cnot_final5": 12, "self_similar5": 12, "cnot_final10": 14, "self_similar10": 14,
        }
        for name, size in expected_sizes.items():
            self.assertEqual(len(catalog.advertised_cancelled(name)), size, name)
        self.assertEqual(
            catalog.advertised_cancelled("length2"),
            {PauliString.parse(n) for n in ("ZI", "IZ", "XY", "YX")},
        )
        self.assertEqual(catalog.advertised_cancelled("length5"), catalog.ANTICOMMUTING)
        self.assertEqual(
            catalog.ALL_CHANNELS - catalog.advertised_cancelled("cnot_final5"),
            {PauliString.parse(n) for n in ("ZI", "XY", "YY")},
        )
        self.assertEqual(
            catalog.ALL_CHANNELS - catalog.advertised_cancelled("self_similar10"),
            {PauliString.parse("YY")},
        )
        print("✅ Channel set sizes grow with the nesting depth")

    def test_closed_form_targets(self):
        print("\nTEST: Closed-Form Sequences Reach Their Targets")
        print("-----------------------------------------------")
        for name in CLOSED_FORM_SEQUENCES:
            spec = catalog.build_sequence(name, "published")
            value = infidelity(evaluate(spec.node), spec.target)
            self.assertLess(value, 1e-10, name)
        print(f"✅ {len(CLOSED_FORM_SEQUENCES)} sequences hit their targets")

    def test_closed_form_cancellation(self):
        print("\nTEST: Closed-Form Cancelled Channels")
        print("------------------------------------")
        for name in ("length2", "length4", "length5", "length10", "length20", "cnot5", "cnot10", "cnot20", "length2_cnot"):
            spec = catalog.build_sequence(name, "published")
            self.assertEqual(cancelled_channels(spec.node, spec.target), spec.cancelled, name)
            print(f"✅ {name}: {len(spec.cancelled)} channels")


class CheckSuiteTests(unittest.TestCase):
    """Test cases for the verification suite."""

    def setUp(self):
        """Set up before each test."""
        print(f"\n{'='*70}")

    def test_fast_checks_pass(self):
        print("\nTEST: Verification Suite")
        print("------------------------")
        results = checks.run_checks(FAST_CHECKS)
        self.assertEqual([r.name for r in results], FAST_CHECKS)
        for result in results:
            self.assertTrue(result.passed, f"{result.name}: {result.detail}")
            print(f"✅ {result.name}: {result.detail}")

    def test_corrupted_table_fails_intrinsic_check(self):
        print("\nTEST: Corrupted Parameter Table")
        print("-------------------------------")
        params = PUBLISHED.cnot[20]
        psi = list(params.psi)
        psi[1] += 1e-2
        table = PUBLISHED.with_params(params.with_psi(psi))
        results = {r.name: r for r in checks.run_checks(["intrinsic", "objective"], table)}
        self.assertFalse(results["intrinsic"].passed)
        self.assertIn("cnot_final(20)", results["intrinsic"].detail)
        self.assertFalse(results["objective"].passed)
        print(f"✅ {results['intrinsic'].detail}")

    def test_cancellation_check(self):
        print("\nTEST: Cancellation Check")
        print("------------------------")
        (result,) = checks.run_checks(["cancellation"])
        self.assertTrue(result.passed, result.detail)
        print(f"✅ {result.detail}")

    def test_unknown_check(self):
        print("\nTEST: Unknown Check")
        print("-------------------")
        with self.assertRaises(checks.UnknownCheckError):
            checks.run_checks(["eq7", "eq99"])
        print("✅ Unknown check names raise UnknownCheckError")

    def test_raising_check_is_reported_failed(self):
        print("\nTEST: Raising Check")
        print("-------------------")

        def broken(table):
            raise ValueError("no data")

        with patch.dict(checks.CHECKS, {"broken": broken}):
            (result,) = checks.run_checks(["broken"])
        self.assertFalse(result.passed)
        self.assertEqual(result.as_row(), {"check": "broken", "result": "FAIL", "detail": "ValueError: no data"})
        print(f"✅ Reported as: {result.detail}")


def main():
    unittest.main(argv=[sys.argv[0]])


if __name__ == "__main__":
    main()
