#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_experiments
----------------------------------

Tests for `pyapple.experiments` module.
"""

import json
import math
import os
import tempfile
import unittest

import numpy as np
import pandas

from pyapple.hypothesis import family_singletons, ClassError, CapExceededError
from pyapple.learners import LearnerError, build_expert_set
from pyapple.experiments import (ExperimentConfig, ConfigError, run_command, exit_code_for, read_json_argument,
                                 resolve_class, resolve_stream, learner_spec, expert_cover, fit_exponent,
                                 classify_regime, dumps, EXIT_CAP, EXIT_CONFIG, EXIT_RUNTIME)


def read_json(path):
    with open(path, encoding='utf-8') as f:
        return json.load(f)


class CommandTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out_dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def experiment(self, **data):
        data['out_dir'] = self.out_dir
        return ExperimentConfig(data)

    def artifact(self, command, name):
        return os.path.join(self.out_dir, command, name)


class TestConfig(unittest.TestCase):
    def test_defaults(self):
        experiment = ExperimentConfig()
        self.assertEqual(experiment.seed, 0)
        self.assertEqual(experiment.jobs, 1)
        self.assertEqual(experiment.get('mode'), 'apple')

    def test_unknown_key(self):
        with self.assertRaisesRegex(ConfigError, 'colour'):
            ExperimentConfig({'colour': 'red'})

    def test_overrides_skip_unset_flags(self):
        experiment = ExperimentConfig({'horizon': 10, 'seed': 3}).with_overrides({'horizon': None, 'seed': 5})
        self.assertEqual(experiment.get('horizon'), 10)
        self.assertEqual(experiment.seed, 5)

    def test_require(self):
        with self.assertRaisesRegex(ConfigError, 'learner'):
            ExperimentConfig().require('learner')

    def test_seed_list(self):
        experiment = ExperimentConfig({'seeds': 4, 'seed': 1})
        seeds = experiment.seed_list()
        self.assertEqual(len(seeds), 4)
        self.assertEqual(seeds, ExperimentConfig({'seeds': 4, 'seed': 1}).seed_list())
        self.assertEqual(ExperimentConfig({'seeds': [7, 8]}).seed_list(), [7, 8])

    def test_digest(self):
        first = ExperimentConfig({'horizon': 10, 'class': {'family': 'singletons', 'n': 3}})
        second = ExperimentConfig({'class': {'n': 3, 'family': 'singletons'}, 'horizon': 10})
        self.assertEqual(first.digest(), second.digest())
        self.assertNotEqual(first.digest(), first.with_overrides({'horizon': 11}).digest())

    def test_from_file(self):
        with tempfile.NamedTemporaryFile('w', suffix='.json', delete=False) as f:
            json.dump({'horizon': 12}, f)
        try:
            self.assertEqual(ExperimentConfig.from_file(f.name).get('horizon'), 12)
        finally:
            os.unlink(f.name)

    def test_config_must_be_an_object(self):
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_file('[1, 2]')


class TestArguments(unittest.TestCase):
    def test_read_json_argument(self):
        self.assertEqual(read_json_argument('{"n": 3}', 'class'), {'n': 3})
        self.assertEqual(read_json_argument([[0, 1]], 'stream'), [[0, 1]])
        with self.assertRaisesRegex(ConfigError, 'no such file'):
            read_json_argument('/nonexistent/class.json', 'class')
        with self.assertRaisesRegex(ConfigError, 'invalid JSON'):
            read_json_argument('{"n": }', 'class')

    def test_resolve_class(self):
        hclass = resolve_class({'family': 'singletons', 'n': 'T'}, 8)
        self.assertEqual(hclass.size, 8)
        with self.assertRaisesRegex(ConfigError, 'no horizon'):
            resolve_class({'family': 'singletons', 'n': 'T'})

    def test_learner_spec(self):
        self.assertEqual(learner_spec('soa'), 'soa')
        self.assertEqual(learner_spec('{"kind": "det_w1"}'), {'kind': 'det_w1'})

    def test_resolve_stream(self):
        hclass = family_singletons(4)
        rng = np.random.default_rng(0)
        stream = resolve_stream({'kind': 'target', 'hypothesis': 2}, hclass, 10, rng)
        self.assertEqual(len(stream), 10)
        self.assertTrue(all(y == int(x == 2) for x, y in stream))
        self.assertEqual(resolve_stream([[1, 0]], hclass, None, rng).to_list(), [[1, 0]])

    def test_resolve_stream_errors(self):
        hclass = family_singletons(4)
        rng = np.random.default_rng(0)
        with self.assertRaises(ConfigError):
            resolve_stream(None, hclass, 10, rng)
        with self.assertRaises(ConfigError):
            resolve_stream({'kind': 'target', 'hypothesis': 9}, hclass, 10, rng)
        with self.assertRaises(ConfigError):
            resolve_stream({'kind': 'greedy'}, hclass, 10, rng)
        with self.assertRaises(ConfigError):
            resolve_stream({'kind': 'replay'}, hclass, 10, rng)
        with self.assertRaises(ConfigError):
            resolve_stream({'kind': 'target'}, hclass, None, rng)
        with self.assertRaises(ClassError):
            resolve_stream([[9, 0]], hclass, None, rng)
        with self.assertRaises(ClassError) as context:
            resolve_stream([['a', 1]], hclass, None, rng)
        self.assertEqual(exit_code_for(context.exception), EXIT_CONFIG)

    def test_exit_codes(self):
        self.assertEqual(exit_code_for(CapExceededError('big')), EXIT_CAP)
        self.assertEqual(exit_code_for(ConfigError('bad')), EXIT_CONFIG)
        self.assertEqual(exit_code_for(ClassError('bad')), EXIT_CONFIG)
        self.assertEqual(exit_code_for(LearnerError('broke')), EXIT_RUNTIME)

    def test_dumps(self):
        data = json.loads(dumps({'inf': math.inf, 'n': np.int64(3), 'ok': np.bool_(True), 'nan': math.nan}))
        self.assertEqual(data, {'inf': 'inf', 'n': 3, 'ok': True, 'nan': None})


class TestDims(CommandTestCase):
    def test_dims(self):
        report = run_command('dims', self.experiment(**{'class': {'family': 'powerset', 'd': 3}}))
        self.assertEqual(report['ldim'], 3)
        written = read_json(self.artifact('dims', 'dims.json'))
        self.assertEqual(written['aldim_by_width'], {'1': 3, '2': 3, '3': 3, '4': 3})
        manifest = read_json(self.artifact('dims', 'manifest.json'))
        self.assertEqual(manifest['artifacts'], ['dims.json', 'manifest.json'])
        self.assertEqual(manifest['command'], 'dims')
        self.assertIn('numpy', manifest['versions'])

    def test_dims_with_witness(self):
        report = run_command('dims', self.experiment(**{'class': {'family': 'singletons', 'n': 5}, 'witness': True}))
        self.assertEqual(report['witness']['depth'], 4)

    def test_missing_class_file(self):
        experiment = self.experiment(**{'class': '/nonexistent/class.json'})
        with self.assertRaises(ConfigError) as context:
            run_command('dims', experiment)
        self.assertEqual(exit_code_for(context.exception), EXIT_CONFIG)

    def test_unknown_command(self):
        with self.assertRaises(ConfigError):
            run_command('serve', self.experiment())


class TestPlay(CommandTestCase):
    def test_play(self):
        summary = run_command('play', self.experiment(**{
            'class': {'family': 'powerset', 'd': 3},
            'learner': {'kind': 'soa'},
            'mode': 'full',
            'stream': {'kind': 'target', 'hypothesis': 5},
            'horizon': 20,
            'seed': 7,
        }))
        self.assertLessEqual(summary['mistakes'], 3)
        self.assertEqual(summary['regret'], summary['mistakes'])
        frame = pandas.read_csv(self.artifact('play', 'transcript.csv'))
        self.assertEqual(len(frame), 20)

    def test_play_explicit_rounds(self):
        summary = run_command('play', self.experiment(**{
            'class': {'family': 'singletons', 'n': 3},
            'learner': 'det_w1',
            'stream': [[0, 0], [1, 1], [2, 0]],
        }))
        self.assertEqual(summary['rounds'], 3)
        self.assertEqual(summary['false_pos'], 1)

    def test_bad_learner(self):
        with self.assertRaises(ConfigError):
            run_command('play', self.experiment(**{
                'class': {'family': 'singletons', 'n': 3},
                'learner': 'perceptron',
                'stream': [[0, 0]],
            }))


class TestBench(CommandTestCase):
    def test_bench(self):
        results = run_command('bench', self.experiment(**{
            'class': {'family': 'singletons', 'n': 6},
            'learners': ['always1', {'kind': 'det_w1'}],
            'stream': {'kind': 'target', 'hypothesis': 1},
            'horizon': 12,
            'seeds': [0, 1],
        }))
        self.assertEqual(len(results), 2)
        self.assertTrue((results['horizon'] == 12).all())
        totals = pandas.read_csv(self.artifact('bench', 'totals.csv'))
        self.assertEqual(len(totals), 4)


class TestAdversary(CommandTestCase):
    def test_always_zero(self):
        report = run_command('adversary', self.experiment(**{
            'class': {'family': 'singletons', 'n': 10},
            'learner': 'always0',
            'width': 1,
            'horizon': 12,
            'sims': 4,
            'eval_seeds': 2,
        }))
        self.assertEqual(report['plan']['sigma'], [1])
        self.assertEqual(report['mean'], 12.0)
        self.assertEqual(read_json(self.artifact('adversary', 'plan.json'))['sigma'], [1])
        summary = read_json(self.artifact('adversary', 'summary.json'))
        self.assertNotIn('stream', summary)

    def test_width_too_large(self):
        with self.assertRaises(ConfigError):
            run_command('adversary', self.experiment(**{
                'class': {'family': 'singletons', 'n': 10},
                'learner': 'always0',
                'width': 2,
                'horizon': 12,
                'sims': 2,
                'eval_seeds': 2,
            }))


class TestExperts(CommandTestCase):
    def test_experts(self):
        summary = run_command('experts', self.experiment(**{
            'class': {'family': 'singletons', 'n': 4},
            'horizon': 12,
            'stream': {'kind': 'stochastic', 'noise': 0.2},
        }))
        self.assertEqual(summary['experts'], 13)
        self.assertEqual(summary['ldim'], 1)
        self.assertTrue(summary['covered'])
        frame = pandas.read_csv(self.artifact('experts', 'experts.csv'), dtype=str, keep_default_na=False)
        self.assertEqual(frame['flip_set'].tolist()[:3], ['', '0', '1'])

    def test_stream_length_must_match(self):
        with self.assertRaises(ConfigError):
            run_command('experts', self.experiment(**{
                'class': {'family': 'singletons', 'n': 4},
                'horizon': 3,
                'stream': [[0, 0]],
            }))

    def test_expert_cover(self):
        hclass = family_singletons(4)
        instances = [3, 1, 0, 2]
        predictions = build_expert_set(hclass, 4).predictions(instances)
        covered = expert_cover(hclass, predictions, instances)
        self.assertTrue(all(e is not None for e in covered))


class TestTrichotomy(CommandTestCase):
    def test_fit_exponent(self):
        self.assertAlmostEqual(fit_exponent([16, 32, 64], [4, 8, 16], 100), 1.0)
        self.assertAlmostEqual(fit_exponent([16, 64, 256], [2, 4, 8], 100), 0.5)
        self.assertAlmostEqual(fit_exponent([16, 32, 64], [0, 0, 0], 100), 0.0)

    def test_classify_regime(self):
        self.assertEqual(classify_regime(0.02), 'constant')
        self.assertEqual(classify_regime(0.5), 'sqrt')
        self.assertEqual(classify_regime(1.1), 'linear')
        self.assertEqual(classify_regime(0.25), 'indeterminate')

    def test_trichotomy(self):
        table, fits = run_command('trichotomy', self.experiment(**{
            'horizons': [4, 8],
            'seeds': [0, 1],
            'sims': 2,
            'cases': [{
                'name': 'constant',
                'class': {'matrix': [[1, 1, 1, 1], [0, 0, 0, 0]]},
                'learner': {'kind': 'det_w1'},
            }],
        }))
        self.assertEqual(table['mean'].tolist(), [1.0, 1.0])
        self.assertEqual(fits[0]['regime'], 'constant')
        self.assertTrue(os.path.exists(self.artifact('trichotomy', 'exponents.json')))

    def test_needs_two_horizons(self):
        with self.assertRaises(ConfigError):
            run_command('trichotomy', self.experiment(horizons=[8], cases=[]))


if __name__ == '__main__':
    unittest.main()
