#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_adversary
----------------------------------

Tests for `pyapple.adversary` module.
"""

import math
import unittest

import numpy as np

from pyapple.hypothesis import (family_singletons, family_flipped_singletons, family_powerset, is_realizable)
from pyapple.dimensions import witness_tree, AppleTreeWitness, AppleNode
from pyapple.learners import make_learner, LearnerFactory, ConstrainedSoaLearner
from pyapple.protocol import run_game, FULL_INFORMATION
from pyapple.adversary import (plan_adversary, realize_stream, lower_bound_experiment, stochastic_agnostic_stream,
                               greedy_adversarial_stream, exhaustive_worst_case, AdversaryError, AdversaryPlan)


class TestPlan(unittest.TestCase):
    def setUp(self):
        self.hclass = family_singletons(10)
        self.tree = witness_tree(self.hclass.universe(), 1, 3)

    def test_always_zero_goes_right(self):
        plan = plan_adversary(self.tree, self.hclass, LearnerFactory('always0', self.hclass), num_sims=4,
                              rng=np.random.default_rng(0))
        self.assertEqual(plan.sigma, [1])
        self.assertEqual(plan.estimates, [0.0])
        self.assertEqual(plan.block_size, 3)

    def test_always_one_goes_left(self):
        plan = plan_adversary(self.tree, self.hclass, LearnerFactory('always1', self.hclass), num_sims=4,
                              rng=np.random.default_rng(0))
        self.assertEqual(plan.sigma, [0, 0, 0])
        self.assertEqual(plan.instances, [0, 1, 2])
        self.assertEqual(plan.ones, 0)

    def test_realize_stream(self):
        plan = plan_adversary(self.tree, self.hclass, LearnerFactory('always1', self.hclass), num_sims=4,
                              rng=np.random.default_rng(0))
        stream = realize_stream(plan, 12)
        self.assertEqual(len(stream), 12)
        self.assertEqual(stream.to_list()[:3], [[0, 0]] * 3)
        self.assertEqual(stream.to_list()[-4:], [[2, 0]] * 4)
        self.assertTrue(is_realizable(stream, self.hclass))
        with self.assertRaises(AdversaryError):
            realize_stream(plan, 8)

    def test_empty_plan(self):
        with self.assertRaises(AdversaryError):
            realize_stream(AdversaryPlan(self.tree, 3, 1), 12)

    def test_plan_is_reproducible(self):
        factory = LearnerFactory('conversion', self.hclass, 12)
        first = plan_adversary(self.tree, self.hclass, factory, num_sims=20, rng=np.random.default_rng(9))
        second = plan_adversary(self.tree, self.hclass, factory, num_sims=20, rng=np.random.default_rng(9))
        self.assertEqual(first.to_dict(), second.to_dict())
        self.assertTrue(all(0 <= p <= 1 for p in first.estimates))

    def test_rejects_unshattered_tree(self):
        tree = AppleTreeWitness(1, 2, AppleNode(0, AppleNode(0, None, None), None))
        with self.assertRaises(AdversaryError):
            plan_adversary(tree, self.hclass, LearnerFactory('always0', self.hclass), num_sims=2)

    def test_rejects_shallow_tree(self):
        tree = witness_tree(family_powerset(2).universe(), 2, 1)
        with self.assertRaises(AdversaryError):
            plan_adversary(tree, family_powerset(2), LearnerFactory('always0', family_powerset(2)), num_sims=2)


class TestLowerBound(unittest.TestCase):
    def test_constant_learners_err_every_round(self):
        hclass = family_singletons(10)
        for kind in ('always0', 'always1'):
            report = lower_bound_experiment(hclass, 1, kind, 12, num_sims=4, eval_seeds=3,
                                            rng=np.random.default_rng(1))
            self.assertEqual(report['depth'], 3)
            self.assertEqual(report['mean'], 12.0)
            self.assertEqual(report['std_err'], 0.0)
            self.assertEqual(report['floor'], 0.75)
            self.assertTrue(report['meets_floor'])

    def test_width_range(self):
        with self.assertRaises(AdversaryError):
            lower_bound_experiment(family_singletons(10), 2, 'always0', 12, num_sims=2, eval_seeds=2)

    def test_depth_is_capped_by_horizon(self):
        report = lower_bound_experiment(family_singletons(40), 1, 'det_w1', 9, num_sims=2, eval_seeds=2,
                                        rng=np.random.default_rng(0))
        self.assertEqual(report['depth'], 3)
        self.assertEqual(len(report['stream']), 9)


class TestStreams(unittest.TestCase):
    def test_noise_free_stream_is_realizable(self):
        hclass = family_singletons(5)
        stream = stochastic_agnostic_stream(hclass, 0.0, 50, np.random.default_rng(2))
        self.assertEqual(len(stream), 50)
        self.assertTrue(is_realizable(stream, hclass))

    def test_noise_rate_range(self):
        with self.assertRaises(AdversaryError):
            stochastic_agnostic_stream(family_singletons(5), 0.6, 10, np.random.default_rng(0))

    def test_greedy_against_det_ldim1(self):
        hclass = family_singletons(4)
        horizon = 9
        learner = make_learner('det_ldim1', hclass, horizon)
        stream = greedy_adversarial_stream(learner, hclass, horizon)
        self.assertEqual(len(stream), horizon)
        self.assertTrue(is_realizable(stream, hclass))
        transcript = run_game(learner, stream)
        self.assertLessEqual(transcript.mistakes, 1 + 2 * math.ceil(math.sqrt(horizon)))

    def test_greedy_rejects_randomized(self):
        hclass = family_singletons(4)
        with self.assertRaises(AdversaryError):
            greedy_adversarial_stream(make_learner('conversion', hclass, 8), hclass, 8)


class TestExhaustive(unittest.TestCase):
    def test_det_w1_on_flipped_singletons(self):
        hclass = family_flipped_singletons(3)
        result = exhaustive_worst_case(LearnerFactory('det_w1', hclass), hclass, 4)
        self.assertEqual(result['mistakes'], 1)
        self.assertEqual(result['false_neg'], 0)

    def test_det_w1_on_powerset(self):
        hclass = family_powerset(2)
        result = exhaustive_worst_case(LearnerFactory('det_w1', hclass), hclass, 3)
        self.assertLessEqual(result['mistakes'], 2)

    def test_always_zero(self):
        hclass = family_singletons(3)
        result = exhaustive_worst_case(LearnerFactory('always0', hclass), hclass, 3)
        self.assertEqual(result['false_neg'], 3)
        self.assertEqual(result['false_pos'], 0)

    def test_constrained_soa_budgets(self):
        hclass = family_singletons(4)
        result = exhaustive_worst_case(lambda: ConstrainedSoaLearner(hclass, 2), hclass, 4, FULL_INFORMATION)
        self.assertLessEqual(result['false_neg'], 1)
        self.assertLessEqual(result['false_pos'], 1)

    def test_transition_hook(self):
        hclass = family_singletons(2)
        seen = []
        exhaustive_worst_case(LearnerFactory('det_w1', hclass), hclass, 2,
                              on_transition=lambda before, after, x, prediction, label: seen.append((x, label)))
        self.assertIn((0, 1), seen)
        self.assertIn((1, 0), seen)

    def test_rejects_randomized(self):
        hclass = family_singletons(3)
        with self.assertRaises(AdversaryError):
            exhaustive_worst_case(LearnerFactory('conversion', hclass, 3), hclass, 3)


if __name__ == '__main__':
    unittest.main()
