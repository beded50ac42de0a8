import copy
import hashlib
import json
import math
import os
import platform

import numpy as np
import pandas

import pyapple
from pyapple import log, config
from pyapple.hypothesis import (load_class, load_stream, LabeledStream, ClassError, CapExceededError)
from pyapple.dimensions import dimension_report, ldim
from pyapple.learners import LearnerFactory, LearnerError, build_expert_set
from pyapple.protocol import run_game, monte_carlo, check_mode, APPLE_TASTING
from pyapple.adversary import (lower_bound_experiment, stochastic_agnostic_stream, greedy_adversarial_stream,
                               AdversaryError, SEED_HIGH)


COMMANDS = ('dims', 'play', 'bench', 'adversary', 'experts', 'trichotomy')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_RUNTIME = 4

# placeholder in a class description that is replaced by the horizon
HORIZON_PLACEHOLDER = 'T'


class ConfigError(Exception):
    pass


def exit_code_for(error):
    if isinstance(error, CapExceededError):
        return EXIT_CAP
    if isinstance(error, (ConfigError, ClassError, FileNotFoundError, json.JSONDecodeError)):
        return EXIT_CONFIG
    # learner, protocol, adversary and dimension failures
    return EXIT_RUNTIME


def read_json_argument(value, what):
    """A JSON argument given inline or as a path to a file."""
    if isinstance(value, (dict, list)):
        return value
    if not isinstance(value, str):
        raise ConfigError('{}: expected JSON or a file path, got {!r}'.format(what, value))
    text = value.strip()
    if text.startswith(('{', '[')):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError('{}: invalid JSON: {}'.format(what, e))
    if not os.path.exists(value):
        raise ConfigError('{}: no such file {}'.format(what, value))
    try:
        with open(value, encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError('{}: {} is not valid JSON: {}'.format(what, value, e))


class ExperimentConfig:
    """Everything one command needs, serializable back to the JSON it came from."""

    FIELDS = ('class', 'learner', 'learners', 'stream', 'horizon', 'horizons', 'seed', 'seeds', 'width',
              'witness', 'sims', 'eval_seeds', 'out_dir', 'jobs', 'mode', 'cases')

    def __init__(self, data=None):
        data = dict(data or {})
        unknown = set(data) - set(self.FIELDS)
        if unknown:
            raise ConfigError('unknown config keys: {}'.format(', '.join(sorted(unknown))))
        self.data = data
        self.data.setdefault('seed', config.experiments.get('seed', 0))
        self.data.setdefault('out_dir', config.experiments.get('out_dir', 'results'))
        self.data.setdefault('jobs', config.experiments.get('jobs', 1))
        self.data.setdefault('mode', APPLE_TASTING)

    @classmethod
    def from_file(cls, path):
        data = read_json_argument(path, 'config')
        if not isinstance(data, dict):
            raise ConfigError('config must be a JSON object')
        return cls(data)

    def with_overrides(self, overrides):
        data = copy.deepcopy(self.data)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig(data)

    def get(self, key, default=None):
        return self.data.get(key, default)

    def require(self, key):
        if self.data.get(key) is None:
            raise ConfigError('missing required setting: {}'.format(key))
        return self.data[key]

    @property
    def seed(self):
        return int(self.data['seed'])

    @property
    def jobs(self):
        return int(self.data['jobs'])

    def hclass(self, horizon=None):
        return resolve_class(read_json_argument(self.require('class'), 'class'), horizon)

    def seed_list(self, count_key='seeds', default=None):
        """Explicit seed lists pass through; a count derives that many seeds from the base seed."""
        seeds = self.data.get(count_key, default)
        if seeds is None:
            raise ConfigError('missing required setting: {}'.format(count_key))
        if isinstance(seeds, list):
            return [int(s) for s in seeds]
        rng = np.random.default_rng(self.seed)
        return [int(s) for s in rng.integers(0, SEED_HIGH, size=int(seeds))]

    def to_dict(self):
        return copy.deepcopy(self.data)

    def digest(self):
        return hashlib.sha1(dumps(self.data).encode('utf-8')).hexdigest()


def resolve_class(description, horizon=None):
    """Load a class, substituting the horizon for any "T" parameter."""
    if not isinstance(description, dict):
        raise ConfigError('class description must be a JSON object')
    resolved = {}
    for key, value in description.items():
        if value == HORIZON_PLACEHOLDER:
            if horizon is None:
                raise ConfigError('class parameter {} is "T" but no horizon is set'.format(key))
            value = horizon
        resolved[key] = value
    return load_class(resolved)


def learner_spec(spec):
    """Learner specs may be a bare kind name, inline JSON or a JSON file."""
    if isinstance(spec, str) and (spec.strip().startswith('{') or os.path.exists(spec)):
        return read_json_argument(spec, 'learner')
    return spec


def build_factory(spec, hclass, horizon):
    spec = learner_spec(spec)
    try:
        return LearnerFactory(spec, hclass, horizon)
    except CapExceededError:
        raise
    except LearnerError as e:
        raise ConfigError('learner {!r}: {}'.format(spec, e))


def resolve_stream(spec, hclass, horizon, rng, factory=None):
    """A stream from an inline list, a file, or a generator description.

    Generators: {"kind": "stochastic", "noise": p}, {"kind": "target", "hypothesis": i}
    and {"kind": "greedy", "lookahead": k} (against the learner being played)."""
    if spec is None:
        raise ConfigError('missing required setting: stream')
    if isinstance(spec, str):
        spec = read_json_argument(spec, 'stream')

    if isinstance(spec, list) or (isinstance(spec, dict) and 'rounds' in spec):
        return load_stream(spec).validate(hclass)

    kind = spec.get('kind')
    if not horizon:
        raise ConfigError('stream kind {!r} needs a horizon'.format(kind))
    if kind == 'stochastic':
        return stochastic_agnostic_stream(hclass, spec.get('noise', 0.0), horizon, rng)
    elif kind == 'target':
        target = int(spec.get('hypothesis', 0))
        if not 0 <= target < hclass.size:
            raise ConfigError('target hypothesis {} out of range'.format(target))
        instances = rng.integers(hclass.instance_count, size=horizon)
        return LabeledStream(zip(instances.tolist(), hclass.matrix[target, instances].tolist()))
    elif kind == 'greedy':
        if factory is None:
            raise ConfigError('greedy stream needs a learner')
        return greedy_adversarial_stream(factory(), hclass, horizon, spec.get('lookahead'))

    raise ConfigError('unknown stream kind {!r}'.format(kind))


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, float) and math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def dumps(data):
    return json.dumps(_plain(data), sort_keys=True, indent=2)


class ArtifactWriter:
    """Writes one command's outputs into out_dir/<command>/ and records them for the manifest."""

    def __init__(self, out_dir, command):
        self.path = os.path.join(out_dir, command)
        self.command = command
        self.artifacts = []
        os.makedirs(self.path, exist_ok=True)

    def json(self, name, data):
        with open(os.path.join(self.path, name), 'w', encoding='utf-8') as f:
            f.write(dumps(data))
            f.write('\n')
        self.artifacts.append(name)

    def csv(self, name, frame):
        frame.to_csv(os.path.join(self.path, name), index=False, float_format='%.12g')
        self.artifacts.append(name)

    def manifest(self, experiment):
        self.json('manifest.json', {
            'command': self.command,
            'config': experiment.to_dict(),
            'config_hash': experiment.digest(),
            'seed': experiment.seed,
            'artifacts': sorted(self.artifacts + ['manifest.json']),
            'versions': {
                'pyapple': pyapple.__version__,
                'numpy': np.__version__,
                'pandas': pandas.__version__,
                'python': platform.python_version(),
            },
        })
        log.info('{}: wrote {} artifacts to {}'.format(self.command, len(self.artifacts), self.path))


def cmd_dims(experiment):
    hclass = experiment.hclass(experiment.get('horizon'))
    width = experiment.get('width')
    witness = experiment.get('witness')
    report = dimension_report(hclass,
                              max_width=int(width) if width else None,
                              witness=bool(witness),
                              witness_width=int(witness) if witness and witness is not True else 1,
                              horizon=experiment.get('horizon'))

    writer = ArtifactWriter(experiment.get('out_dir'), 'dims')
    writer.json('dims.json', report)
    writer.manifest(experiment)
    return report


def cmd_play(experiment):
    horizon = experiment.get('horizon')
    hclass = experiment.hclass(horizon)
    mode = check_mode(experiment.get('mode'))
    rng = np.random.default_rng(experiment.seed)

    if horizon is None:
        # explicit rounds only; generated streams need a horizon up front
        stream = resolve_stream(experiment.get('stream'), hclass, None, rng)
        factory = build_factory(experiment.require('learner'), hclass, len(stream))
    else:
        factory = build_factory(experiment.require('learner'), hclass, horizon)
        stream = resolve_stream(experiment.get('stream'), hclass, horizon, rng, factory)

    transcript = run_game(factory(), stream, mode, experiment.seed)
    summary = transcript.summary(hclass)
    summary['class'] = hclass.describe()
    summary['learner'] = learner_spec(experiment.get('learner'))
    summary['learner_state'] = transcript.learner_summary

    writer = ArtifactWriter(experiment.get('out_dir'), 'play')
    writer.csv('transcript.csv', transcript.to_frame())
    writer.json('summary.json', summary)
    writer.manifest(experiment)
    log.info('play: {} on {}: {} mistakes, regret {}'.format(
        transcript.learner_kind, hclass.describe(), summary['mistakes'], summary['regret']))
    return summary


def _learner_specs(experiment):
    specs = experiment.get('learners')
    if specs is None:
        specs = [experiment.require('learner')]
    return [learner_spec(s) for s in specs]


def cmd_bench(experiment):
    horizon = experiment.get('horizon')
    hclass = experiment.hclass(horizon)
    mode = check_mode(experiment.get('mode'))
    seeds = experiment.seed_list('seeds', default=100)

    rows = []
    totals = []
    for spec in _learner_specs(experiment):
        factory = build_factory(spec, hclass, horizon)
        # same generated stream for every learner
        rng = np.random.default_rng(experiment.seed)
        stream = resolve_stream(experiment.get('stream'), hclass, horizon, rng, factory)
        result = monte_carlo(factory, stream, seeds, hclass, mode, experiment.jobs)
        name = json.dumps(spec, sort_keys=True)
        rows.append({'learner': name, 'horizon': len(stream), 'mean': result['mean'], 'std_err': result['std_err'],
                     'mean_regret': result['mean_regret'], 'errors': result['errors']})
        frame = result['totals'].copy()
        frame.insert(0, 'learner', name)
        totals.append(frame)
        log.info('bench: {}: mean {:.3f} +/- {:.3f}'.format(name, result['mean'], result['std_err']))

    results = pandas.DataFrame(rows)
    writer = ArtifactWriter(experiment.get('out_dir'), 'bench')
    writer.csv('results.csv', results)
    writer.csv('totals.csv', pandas.concat(totals, ignore_index=True))
    writer.manifest(experiment)
    return results


def cmd_adversary(experiment):
    horizon = int(experiment.require('horizon'))
    hclass = experiment.hclass(horizon)
    width = int(experiment.get('width') or 1)
    rng = np.random.default_rng(experiment.seed)

    factory = build_factory(experiment.require('learner'), hclass, horizon)
    try:
        report = lower_bound_experiment(hclass, width, factory, horizon,
                                        num_sims=experiment.get('sims'),
                                        eval_seeds=experiment.get('eval_seeds'),
                                        rng=rng, jobs=experiment.jobs)
    except AdversaryError as e:
        raise ConfigError(str(e))

    totals = report.pop('totals')
    writer = ArtifactWriter(experiment.get('out_dir'), 'adversary')
    writer.json('plan.json', report['plan'])
    writer.csv('results.csv', totals)
    writer.json('summary.json', {k: v for k, v in report.items() if k not in ('plan', 'stream')})
    writer.manifest(experiment)
    return report


def cmd_experts(experiment):
    horizon = int(experiment.require('horizon'))
    hclass = experiment.hclass(horizon)
    experts = build_expert_set(hclass, horizon)

    frame = pandas.DataFrame({
        'expert': range(len(experts)),
        'flip_set': [' '.join(str(t) for t in flips) for flips in experts.flip_sets],
    })
    summary = {
        'class': hclass.describe(),
        'horizon': horizon,
        'ldim': ldim(hclass.universe()),
        'experts': len(experts),
    }

    writer = ArtifactWriter(experiment.get('out_dir'), 'experts')
    if experiment.get('stream') is not None:
        rng = np.random.default_rng(experiment.seed)
        stream = resolve_stream(experiment.get('stream'), hclass, horizon, rng)
        if len(stream) != horizon:
            raise ConfigError('stream has {} rounds, horizon is {}'.format(len(stream), horizon))
        predictions = experts.predictions(stream.instances)
        covered = expert_cover(hclass, predictions, stream.instances)
        frame['predictions'] = [''.join(str(int(v)) for v in row) for row in predictions]
        summary['cover'] = {str(h): e for h, e in enumerate(covered)}
        summary['covered'] = all(e is not None for e in covered)

    writer.csv('experts.csv', frame)
    writer.json('summary.json', summary)
    writer.manifest(experiment)
    log.info('experts: {} experts for {} at T={}'.format(len(experts), hclass.describe(), horizon))
    return summary


def expert_cover(hclass, predictions, instances):
    """For each hypothesis, the first expert whose predictions match it everywhere, or None."""
    labels = hclass.matrix[:, np.asarray(instances, dtype=np.int64)]
    covered = []
    for row in labels:
        matches = np.flatnonzero((predictions == row).all(axis=1))
        covered.append(int(matches[0]) if len(matches) else None)
    return covered


def fit_exponent(horizons, means, seed_count):
    """Least-squares slope of log(mean mistakes) against log(T)."""
    floor = 0.5 / seed_count
    x = np.log(np.asarray(horizons, dtype=float))
    y = np.log(np.maximum(np.asarray(means, dtype=float), floor))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def classify_regime(alpha, bands=None):
    bands = bands or config.experiments.get('regime_bands', {})
    for name, (low, high) in sorted(bands.items(), key=lambda item: item[1][0]):
        if low <= alpha <= high:
            return name
    return 'indeterminate'


def trichotomy_cell(hclass, spec, horizon, stream_spec, seeds, rng, num_sims=None, jobs=1):
    """Mean mistakes and standard error of one learner at one horizon.

    The default stream is the width-1 lower-bound adversary planned against the learner."""
    factory = build_factory(spec, hclass, horizon)
    stream_spec = stream_spec or {'kind': 'adversary', 'width': 1}
    if isinstance(stream_spec, dict) and stream_spec.get('kind') == 'adversary':
        report = lower_bound_experiment(hclass, int(stream_spec.get('width', 1)), factory, horizon,
                                        num_sims=num_sims, eval_seeds=len(seeds),
                                        rng=rng, jobs=jobs)
        return report['mean'], report['std_err']
    stream = resolve_stream(stream_spec, hclass, horizon, rng, factory)
    result = monte_carlo(factory, stream, seeds, hclass, APPLE_TASTING, jobs)
    return result['mean'], result['std_err']


def cmd_trichotomy(experiment):
    """Mistakes against the horizon for each (class, learner) case, with a fitted log-log exponent."""
    horizons = sorted(int(t) for t in experiment.require('horizons'))
    if len(horizons) < 2:
        raise ConfigError('trichotomy needs at least 2 horizons, got {}'.format(len(horizons)))
    if len(horizons) < 4 or horizons[-1] < 10 * horizons[0]:
        log.warning('trichotomy: {} horizons spanning {}..{}; exponents will be rough'.format(
            len(horizons), horizons[0], horizons[-1]))

    cases = experiment.get('cases')
    if cases is None:
        cases = [{'class': experiment.require('class'), 'learner': spec, 'stream': experiment.get('stream')}
                 for spec in _learner_specs(experiment)]

    seeds = experiment.seed_list('seeds', default=200)
    rng = np.random.default_rng(experiment.seed)

    rows = []
    fits = []
    for case in cases:
        name = case.get('name') or '{} / {}'.format(json.dumps(case['class'], sort_keys=True),
                                                   json.dumps(case['learner'], sort_keys=True))
        means = []
        for horizon in horizons:
            hclass = resolve_class(read_json_argument(case['class'], 'class'), horizon)
            mean, std_err = trichotomy_cell(hclass, case['learner'], horizon, case.get('stream'), seeds, rng,
                                            num_sims=experiment.get('sims'), jobs=experiment.jobs)
            means.append(mean)
            rows.append({'case': name, 'class': hclass.describe(), 'horizon': horizon,
                         'mean': mean, 'std_err': std_err})
            log.debug('trichotomy: {} T={}: {:.3f}'.format(name, horizon, mean))

        alpha = fit_exponent(horizons, means, len(seeds))
        regime = classify_regime(alpha)
        fits.append({'case': name, 'alpha': alpha, 'regime': regime})
        log.info('trichotomy: {}: alpha={:.3f} ({})'.format(name, alpha, regime))

    table = pandas.DataFrame(rows)
    writer = ArtifactWriter(experiment.get('out_dir'), 'trichotomy')
    writer.csv('table.csv', table)
    writer.json('exponents.json', {'horizons': horizons, 'fits': fits})
    writer.manifest(experiment)
    return table, fits


def run_command(command, experiment):
    if command not in COMMANDS:
        raise ConfigError('unknown command {!r}'.format(command))
    return globals()['cmd_' + command](experiment)
