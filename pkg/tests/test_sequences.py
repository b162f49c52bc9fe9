#!/usr/bin/env python
"""
Test module for sequence construction, structural metrics and evaluation.
Run this module from the root directory:
python -m tests.test_sequences
"""

import logging
import sys
import unittest

import numpy as np

from composite_cnot import params as params_module
from composite_cnot.optimizer import refine_table
from composite_cnot.params import THETA0, VALID_K, SequenceError
from composite_cnot.sequences import (
    XI,
    XX,
    ZI,
    DescriptorError,
    InvalidEchoError,
    block_count,
    cnot_final,
    cnot_from_uk,
    compile_program,
    echo_sequence,
    evaluate,
    evaluate_program,
    from_descriptor,
    ideal_block,
    interaction_time,
    is_identity_up_to_phase,
    length2,
    length2_cnot,
    length4,
    length5,
    length10,
    length20,
    local_gate_count,
    nest,
    power,
    rotation,
    second_order_cnot,
    self_similar,
    to_descriptor,
    total_angle,
    uncorrected_cnot_ising,
    uncorrected_cnot_sqrt_swap,
    uk,
    zz_corrected,
    zz_rotation,
)
from composite_cnot.su4_algebra import CNOT, IDENTITY_STRING, ZZ, PauliString, infidelity

# Setup logging with stdout handler
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler(sys.stdout)],
)
logger = logging.getLogger(__name__)


class EchoSequenceTests(unittest.TestCase):
    """Test cases for the echo-based building sequences."""

    def setUp(self):
        """Set up before each test."""
        print(f"\n{'='*70}")

    def test_noise_free_echo_sequences_are_zz_rotations(self):
        print("\nTEST: Noise-Free Echo Sequences")
        print("-------------------------------")
        cases = {
            "length2": (length2(zz_rotation(np.pi / 4), XX), np.pi / 2),
            "length4": (length4(zz_rotation(np.pi / 8), ZI, XX), np.pi / 2),
            "length5": (length5(), 5 * THETA0),
            "length10": (length10(), 5 * THETA0),
            "length20": (length20(), 5 * THETA0),
            "length10 interchanged": (length10(interchanged=True), 5 * THETA0),
            "length20 interchanged": (length20(interchanged=True), 5 * THETA0),
        }
        for name, (node, angle) in cases.items():
            value = infidelity(evaluate(node), ideal_block(angle))
            self.assertLess(value, 1e-12, name)
            print(f"✅ {name}: infidelity {value:.1e}")

    def test_uk_dispatch(self):
        print("\nTEST: U^(k) Lengths")
        print("-------------------")
        for k in VALID_K:
            self.assertEqual(block_count(uk(k)), k)
        with self.assertRaises(SequenceError):
            uk(7)
        print("✅ U^(k) has k blocks; other k rejected")

    def test_length4_rejects_bad_echoes(self):
        print("\nTEST: Length-4 Echo Validation")
        print("------------------------------")
        block = zz_rotation(np.pi / 8)
        with self.assertRaises(InvalidEchoError):
            length4(block, XI, XX)
        with self.assertRaises(InvalidEchoError):
            length4(block, ZI, PauliString.parse("IZ"))
        print("✅ Anticommuting or mutually commuting echoes raise InvalidEchoError")

    def test_echo_sequence_matches_length5(self):
        print("\nTEST: General Echo Sequence")
        print("---------------------------")
        echoes = [IDENTITY_STRING, IDENTITY_STRING, ZZ, IDENTITY_STRING, IDENTITY_STRING]
        u = evaluate(echo_sequence(echoes, THETA0))
        self.assertLess(infidelity(u, evaluate(length5())), 1e-14)
        print("✅ echo_sequence reproduces the length-5 sequence")


class CnotConstructionTests(unittest.TestCase):
    """Test cases for the CNOT constructions."""

    def setUp(self):
        """Set up before each test."""
        print(f"\n{'='*70}")

    def test_closed_form_cnots(self):
        print("\nTEST: CNOT from Two U^(k)")
        print("-------------------------")
        for k in VALID_K:
            value = infidelity(evaluate(cnot_from_uk(k)), CNOT)
            self.assertLess(value, 1e-10, f"k={k}")
            print(f"✅ k={k}: infidelity {value:.1e}")

    def test_uncorrected_cnots(self):
        print("\nTEST: Uncorrected CNOT Dressings")
        print("--------------------------------")
        self.assertLess(infidelity(evaluate(uncorrected_cnot_ising()), CNOT), 1e-12)
        self.assertLess(infidelity(evaluate(length2_cnot()), CNOT), 1e-12)
        self.assertLess(infidelity(evaluate(uncorrected_cnot_sqrt_swap()), CNOT), 1e-12)
        print("✅ All three dressings give CNOT exactly")

    def test_intrinsic_cnot_final(self):
        print("\nTEST: Intrinsic Infidelity of the Corrected CNOTs")
        print("-------------------------------------------------")
        refined = refine_table(params_module.PUBLISHED)
        for k in VALID_K:
            published = infidelity(evaluate(cnot_final(k)), CNOT)
            exact = infidelity(evaluate(cnot_final(k, refined.cnot[k])), CNOT)
            self.assertLess(published, 1e-10, f"published k={k}")
            self.assertLess(exact, 1e-12, f"refined k={k}")
            print(f"✅ k={k}: published {published:.1e}, refined {exact:.1e}")

    def test_intrinsic_self_similar(self):
        print("\nTEST: Intrinsic Infidelity of the Self-Similar Rotations")
        print("--------------------------------------------------------")
        for k in VALID_K:
            value = infidelity(evaluate(self_similar(k)), ideal_block(5 * THETA0 / k))
            self.assertLess(value, 1e-10, f"k={k}")
            print(f"✅ k={k}: infidelity {value:.1e}")

    def test_mismatched_params_rejected(self):
        print("\nTEST: Parameter Validation")
        print("--------------------------")
        self.assertEqual(params_module.CNOT_PARAMS[20].n, (1, 1, 1, 2))
        self.assertEqual(params_module.SELF_SIMILAR_PARAMS[5].n, (1, 2, 1, 1))
        with self.assertRaises(SequenceError):
            params_module.published_params("self-similar", 7)
        with self.assertRaises(SequenceError):
            zz_corrected(10, params_module.PUBLISHED.cnot[20])
        with self.assertRaises(SequenceError):
            cnot_final(20, params_module.PUBLISHED.self_similar[20])
        with self.assertRaises(SequenceError):
            power(length5(), 0)
        with self.assertRaises(SequenceError):
            rotation(XX, 0.1)
        print("✅ Inconsistent parameters raise SequenceError")


class MetricTests(unittest.TestCase):
    """Test cases for block counts, interaction time and local gate counts."""

    def setUp(self):
        """Set up before each test."""
        print(f"\n{'='*70}")

    def test_block_counts(self):
        print("\nTEST: Block Counts")
        print("------------------")
        self.assertEqual(block_count(cnot_from_uk(20)), 40)
        self.assertEqual(block_count(cnot_final(20)), 120)
        self.assertEqual(block_count(self_similar(20)), 120)
        self.assertEqual(block_count(second_order_cnot()), 14400)
        print("✅ 40, 120, 120 and 14400 blocks")

    def test_interaction_time(self):
        print("\nTEST: Interaction Time")
        print("----------------------")
        node = cnot_from_uk(20)
        for alpha in (1.0, 2.0):
            self.assertAlmostEqual(interaction_time(node, alpha), 5 * THETA0 / alpha, places=12)
        self.assertAlmostEqual(interaction_time(zz_rotation(np.pi / 2)), np.pi / 4, places=14)
        self.assertAlmostEqual(total_angle(cnot_final(20)), 30 * THETA0, places=11)
        self.assertAlmostEqual(total_angle(length2(zz_rotation(-0.3), XX)), 0.6, places=14)
        print(f"✅ Corrected CNOT takes 5 theta0 / alpha = {5 * THETA0:.6f}")

    def test_merged_local_slots(self):
        print("\nTEST: Merged Local Gate Slots")
        print("-----------------------------")
        expected = {
            "length10": (length10(), 10),
            "length10 interchanged": (length10(interchanged=True), 6),
            "length20": (length20(), 20),
            "length20 interchanged": (length20(interchanged=True), 12),
            "cnot20": (cnot_from_uk(20), 41),
            "cnot_final(20)": (cnot_final(20), 121),
        }
        for name, (node, count) in expected.items():
            self.assertEqual(local_gate_count(node, merged=True), count, name)
            print(f"✅ {name}: {count} slots")

    def test_unmerged_counts(self):
        print("\nTEST: Unmerged Local Gate Counts")
        print("--------------------------------")
        self.assertEqual(local_gate_count(length5()), 4)
        self.assertEqual(local_gate_count(length2(zz_rotation(0.1), XX)), 4)
        self.assertEqual(local_gate_count(length2(zz_rotation(0.1), ZI)), 2)
        self.assertEqual(local_gate_count(cnot_from_uk(20)), 93)
        self.assertEqual(local_gate_count(cnot_final(20)), 276)
        program = compile_program(cnot_final(20))
        self.assertEqual(sum(len(p) for p in program.pulses), 276)
        print("✅ ZZ and XX echoes cost four single-qubit pulses, a ZI echo two")


class EvaluationTests(unittest.TestCase):
    """Test cases for compiled evaluation, nesting and descriptors."""

    def setUp(self):
        """Set up before each test."""
        print(f"\n{'='*70}")

    def test_program_matches_tree(self):
        print("\nTEST: Compiled Program Evaluation")
        print("---------------------------------")
        node = cnot_final(5)
        program = compile_program(node)
        self.assertEqual(len(program.angles), 30)
        self.assertEqual(len(program.slots), 31)
        u = evaluate_program(program, ideal_block, lambda p, i: p.slots[i])
        self.assertLess(np.max(np.abs(u - evaluate(node))), 1e-12)
        print("✅ Flattened program and tree evaluation agree")

    def test_nest_replaces_blocks(self):
        print("\nTEST: Nesting")
        print("-------------")
        outer = length5()
        nested = nest(outer, length2(zz_rotation(THETA0 / 2), XX), THETA0)
        self.assertEqual(block_count(nested), 10)
        self.assertLess(infidelity(evaluate(nested), evaluate(length10())), 1e-14)
        with self.assertRaises(SequenceError):
            nest(outer, zz_rotation(0.1), THETA0 / 3)
        print("✅ nest builds length10 from length5; angle mismatch raises")

    def test_second_order_is_cnot(self):
        print("\nTEST: Second-Order Nested CNOT")
        print("------------------------------")
        value = infidelity(evaluate(second_order_cnot()), CNOT)
        self.assertLess(value, 1e-6)
        print(f"✅ Intrinsic infidelity {value:.1e}")

    def test_descriptor_round_trip(self):
        print("\nTEST: Sequence Descriptors")
        print("--------------------------")
        node = cnot_from_uk(10)
        rebuilt = from_descriptor(to_descriptor(node))
        self.assertLess(np.max(np.abs(evaluate(rebuilt) - evaluate(node))), 1e-12)
        named = from_descriptor({"type": "length4", "echo": ["ZI", "XX"], "parts": [{"type": "block", "angle": np.pi / 8}]})
        self.assertTrue(is_identity_up_to_phase(evaluate(named) @ ideal_block(-np.pi / 2)))
        print("✅ Descriptors rebuild equivalent sequences")

    def test_bad_descriptors(self):
        print("\nTEST: Malformed Descriptors")
        print("---------------------------")
        for bad in ({"angle": 1.0}, {"type": "teleport"}, {"type": "block"}, {"type": "echo", "echo": "QQ", "parts": [{"type": "block", "angle": 1}]}):
            with self.assertRaises(DescriptorError):
                from_descriptor(bad)
        print("✅ Malformed descriptors raise DescriptorError")


def main():
    unittest.main(argv=[sys.argv[0]])


if __name__ == "__main__":
    main()
