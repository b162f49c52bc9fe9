#!/usr/bin/env python
"""
Test module for the reduced SU(2) search for the ZZ-correcting tilt angles.
Run this module from the root directory:
python -m tests.test_optimizer

Set CNOT_SLOW_TESTS=1 to include the random-seed searches.
"""

import logging
import os
import sys
import unittest

import numpy as np

from composite_cnot import params as params_module
from composite_cnot.error_analysis import ErrorVector, multiplicative_builder
from composite_cnot.optimizer import (
    COMPOSITIONS,
    InvalidCompositionError,
    ObjectiveSpec,
    OptimizerError,
    check_composition,
    compare_with_published,
    embed_reduced,
    minimize,
    objective,
    perturbed_seeds,
    random_seeds,
    reduced_delta,
    reduced_invariants,
    reduced_sequence,
    reduced_sequence_expansion,
    refine_params,
    search_compositions,
    target_invariants,
    wrap_angles,
)
from composite_cnot.params import THETA0, VALID_K
from composite_cnot.sequences import evaluate, ideal_block, zz_corrected
from composite_cnot.su4_algebra import ZZ, makhlin_invariants

# Setup logging with stdout handler
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler(sys.stdout)],
)
logger = logging.getLogger(__name__)

SLOW = os.getenv("CNOT_SLOW_TESTS") == "1"


def _all_published():
    table = params_module.PUBLISHED
    return list(table.cnot.values()) + list(table.self_similar.values())


class ReducedFormTests(unittest.TestCase):
    """Test cases for the reduced SU(2) representation."""

    def setUp(self):
        """Set up before each test."""
        print(f"\n{'='*70}")

    def test_compositions(self):
        print("\nTEST: Repetition Counts")
        print("-----------------------")
        for n in COMPOSITIONS:
            self.assertEqual(check_composition(n), n)
        for bad in ((1, 1, 1, 1), (2, 2, 1, 0), (1, 1, 3), ("a", 1, 1, 2)):
            with self.assertRaises(InvalidCompositionError):
                check_composition(bad)
        print(f"✅ {len(COMPOSITIONS)} compositions accepted, invalid counts rejected")

    def test_embedding_matches_full_sequence(self):
        print("\nTEST: Reduced Product Embedding")
        print("-------------------------------")
        for params in _all_published():
            full = evaluate(zz_corrected(params.k, params))
            reduced = embed_reduced(reduced_sequence(params.psi, params.n))
            self.assertLess(np.max(np.abs(full - reduced)), 1e-12, f"{params.target} k={params.k}")
        print("✅ Embedded reduced products equal the 4x4 sequences")

    def test_reduced_delta_matches_zz_error(self):
        print("\nTEST: Reduced Delta Mapping")
        print("---------------------------")
        params = params_module.PUBLISHED.cnot[5]
        block_delta = 1e-3
        builder = multiplicative_builder(zz_corrected(5, params))
        full = builder(ErrorVector.single(ZZ, block_delta))
        reduced = embed_reduced(reduced_sequence(params.psi, params.n, reduced_delta(block_delta, 5)))
        self.assertLess(np.max(np.abs(full - reduced)), 1e-12)
        print(f"✅ ZZ error {block_delta} maps to reduced delta {reduced_delta(block_delta, 5):.6e}")

    def test_invariants(self):
        print("\nTEST: Reduced Invariants")
        print("------------------------")
        self.assertEqual(reduced_invariants((1.0, 0.0, 0.0, 0.0)), (1.0, 3.0))
        self.assertEqual(target_invariants("cnot"), (0.0, 1.0))
        for k in VALID_K:
            g = makhlin_invariants(ideal_block(5 * THETA0 / k))
            expected = target_invariants("self-similar", k)
            self.assertAlmostEqual(expected[0], g.g1, places=12)
            self.assertAlmostEqual(expected[1], g.g2, places=12)
        for params in _all_published():
            lam = reduced_sequence_expansion(params.psi, params.n).lam
            g = makhlin_invariants(evaluate(zz_corrected(params.k, params)))
            self.assertAlmostEqual(reduced_invariants(lam)[0], g.g1, places=9)
            self.assertAlmostEqual(reduced_invariants(lam)[1], g.g2, places=9)
        with self.assertRaises(OptimizerError):
            target_invariants("self-similar", 7)
        with self.assertRaises(OptimizerError):
            target_invariants("toffoli")
        print("✅ Reduced and full invariants agree")

    def test_published_objective(self):
        print("\nTEST: Published Parameter Objective")
        print("-----------------------------------")
        for params in _all_published():
            spec = ObjectiveSpec.for_params(params)
            value = objective(params.psi, spec)
            expansion = reduced_sequence_expansion(params.psi, params.n)
            self.assertLess(value, 1e-9, f"{params.target} k={params.k}")
            self.assertLess(expansion.first_order_norm, 1e-4)
            print(f"✅ {params.target} k={params.k}: f = {value:.2e}")


class SearchTests(unittest.TestCase):
    """Test cases for the Nelder-Mead search and the refinement."""

    def setUp(self):
        """Set up before each test."""
        print(f"\n{'='*70}")

    def test_search_near_published(self):
        print("\nTEST: Local Search Near Published Angles")
        print("----------------------------------------")
        published = params_module.PUBLISHED.cnot[20]
        seeds = perturbed_seeds(published.psi, 3, radius=0.05, rng_seed=1)
        result = minimize(ObjectiveSpec.for_cnot(), seeds)
        self.assertTrue(result.converged)
        self.assertLess(result.objective_value, 1e-12)
        rows = compare_with_published(result, published)
        self.assertEqual([r["parameter"] for r in rows], ["psi1", "psi2", "psi3", "psi4"])
        for row in rows:
            self.assertLess(abs(row["difference"]), 1e-4, row["parameter"])
        print(f"✅ Recovered psi = {np.round(result.psi, 6)} with f = {result.objective_value:.1e}")

    def test_search_from_wide_seeds(self):
        print("\nTEST: Search from Seeds 0.3 rad Away")
        print("------------------------------------")
        published = params_module.PUBLISHED.cnot[20]
        seeds = perturbed_seeds(published.psi, 4, radius=0.3, rng_seed=1)
        spec = ObjectiveSpec.for_cnot()
        result = minimize(spec, seeds)
        self.assertTrue(result.converged)
        self.assertLess(result.objective_value, 1e-10)
        for i in range(4):
            for step in (-1e-3, 1e-3):
                psi = list(result.psi)
                psi[i] += step
                self.assertGreater(objective(psi, spec), result.objective_value)
        drift = max(abs(row["difference"]) for row in compare_with_published(result, published))
        print(f"✅ f = {result.objective_value:.1e}, largest difference from published {drift:.1e}")

    def test_refined_angles_are_local_minima(self):
        print("\nTEST: Local Minimality of Refined Angles")
        print("----------------------------------------")
        for params in _all_published():
            spec = ObjectiveSpec.for_params(params)
            refined = refine_params(params)
            best = objective(refined.psi, spec)
            for i in range(4):
                for step in (-1e-3, 1e-3):
                    psi = list(refined.psi)
                    psi[i] += step
                    self.assertGreater(objective(psi, spec), best, f"{params.target} k={params.k} psi{i + 1}")
            print(f"✅ {params.target} k={params.k}: f = {best:.1e} rises in all 8 directions")

    def test_worker_count_does_not_change_result(self):
        print("\nTEST: Threaded Search Determinism")
        print("---------------------------------")
        seeds = perturbed_seeds(params_module.PUBLISHED.cnot[20].psi, 3, radius=0.05, rng_seed=2)
        spec = ObjectiveSpec.for_cnot()
        self.assertEqual(minimize(spec, seeds, workers=1), minimize(spec, seeds, workers=3))
        print("✅ Same best result with 1 and 3 workers")

    def test_invalid_search_arguments(self):
        print("\nTEST: Search Argument Validation")
        print("--------------------------------")
        spec = ObjectiveSpec.for_cnot()
        with self.assertRaises(OptimizerError):
            minimize(spec, [], 1e-12)
        with self.assertRaises(OptimizerError):
            minimize(spec, [(0.0, 0.0, 0.0, 0.0)], 0.0)
        with self.assertRaises(OptimizerError):
            minimize(spec, [(0.0, 0.0, 0.0)])
        with self.assertRaises(InvalidCompositionError):
            ObjectiveSpec((1, 1, 1, 1), (0.0, 1.0))
        print("✅ Empty seeds, bad tolerance and bad counts rejected")

    def test_refinement(self):
        print("\nTEST: Parameter Refinement")
        print("--------------------------")
        for params in _all_published():
            refined = refine_params(params)
            value = objective(refined.psi, ObjectiveSpec.for_params(params))
            self.assertLess(value, 1e-20, f"{params.target} k={params.k}")
            drift = max(abs(d) for d in wrap_angles(np.subtract(refined.psi, params.psi)))
            self.assertLess(drift, 1e-4)
            print(f"✅ {params.target} k={params.k}: f = {value:.1e}, drift {drift:.1e}")

    def test_seed_helpers(self):
        print("\nTEST: Seed Generation")
        print("---------------------")
        seeds = random_seeds(5, 42)
        self.assertEqual(seeds.shape, (5, 4))
        self.assertTrue(np.array_equal(seeds, random_seeds(5, 42)))
        self.assertTrue(np.all(np.abs(seeds) <= np.pi))
        self.assertAlmostEqual(wrap_angles([3 * np.pi / 2])[0], -np.pi / 2, places=12)
        print("✅ Seeds are reproducible and in range")

    def test_random_search_finds_cnot_solution(self):
        print("\nTEST: Random-Seed Search for the CNOT Target")
        print("--------------------------------------------")
        if not SLOW:
            print("ℹ️ Skipping slow search - set CNOT_SLOW_TESTS=1")
            self.skipTest("Slow test")
            return
        result = minimize(ObjectiveSpec.for_cnot(), random_seeds(50, 0), workers=4)
        self.assertLess(result.objective_value, 1e-10)
        print(f"✅ Best f = {result.objective_value:.1e} at psi = {np.round(result.psi, 6)}")

    def test_composition_scan(self):
        print("\nTEST: Composition Scan")
        print("----------------------")
        if not SLOW:
            print("ℹ️ Skipping slow search - set CNOT_SLOW_TESTS=1")
            self.skipTest("Slow test")
            return
        found = search_compositions("cnot", None, random_seeds(20, 3), workers=4)
        self.assertEqual(set(found), set(COMPOSITIONS))
        self.assertTrue(any(r.converged for r in found.values()))
        for n, r in found.items():
            print(f"   n={n}: f = {r.objective_value:.1e}")
        print("✅ At least one composition reaches the CNOT class")


def main():
    unittest.main(argv=[sys.argv[0]])


if __name__ == "__main__":
    main()
