import concurrent.futures
import io
import math
from collections import namedtuple

import numpy as np
import pandas

from pyapple import log
from pyapple.learners import LearnerFactory, LearnerError, ProtocolError


FULL_INFORMATION = 'full'
APPLE_TASTING = 'apple'
MODES = (FULL_INFORMATION, APPLE_TASTING)

NO_MISTAKE = 'none'
FALSE_POSITIVE = 'false_pos'
FALSE_NEGATIVE = 'false_neg'

RoundRecord = namedtuple('RoundRecord', ['round', 'instance', 'prediction', 'feedback_visible',
                                         'true_label', 'mistake_kind', 'p1'])

TRANSCRIPT_COLUMNS = list(RoundRecord._fields)


def mistake_kind(prediction, label):
    if prediction == label:
        return NO_MISTAKE
    return FALSE_POSITIVE if prediction == 1 else FALSE_NEGATIVE


def check_mode(mode):
    if mode not in MODES:
        raise ProtocolError('unknown feedback mode {!r}, expected one of: {}'.format(mode, ', '.join(MODES)))
    return mode


class GameTranscript:
    """Everything that happened in one learner-vs-stream game."""

    def __init__(self, mode, seed, learner_kind=None):
        self.mode = mode
        self.seed = seed
        self.learner_kind = learner_kind
        self.records = []
        self.error = None
        self.learner_summary = {}

    @property
    def complete(self):
        return self.error is None

    @property
    def false_pos(self):
        return sum(1 for r in self.records if r.mistake_kind == FALSE_POSITIVE)

    @property
    def false_neg(self):
        return sum(1 for r in self.records if r.mistake_kind == FALSE_NEGATIVE)

    @property
    def mistakes(self):
        return self.false_pos + self.false_neg

    @property
    def predictions(self):
        return [r.prediction for r in self.records]

    @property
    def hidden_rounds(self):
        return [r.round for r in self.records if not r.feedback_visible]

    def to_frame(self):
        frame = pandas.DataFrame(self.records, columns=TRANSCRIPT_COLUMNS)
        if frame['p1'].isna().all():
            frame = frame.drop(columns=['p1'])
        return frame

    def to_csv(self, path=None):
        """Write the per-round CSV to path, or return it as a string."""
        if path is None:
            buffer = io.StringIO()
            self.to_frame().to_csv(buffer, index=False, float_format='%.12g')
            return buffer.getvalue()
        self.to_frame().to_csv(path, index=False, float_format='%.12g')

    def summary(self, hclass=None):
        data = {
            'mistakes': self.mistakes,
            'false_pos': self.false_pos,
            'false_neg': self.false_neg,
            'rounds': len(self.records),
            'seed': self.seed,
            'mode': self.mode,
            'error': self.error,
        }
        if hclass is not None:
            data['regret'] = regret(self, hclass)
        if self.learner_summary:
            data['learner'] = self.learner_summary
        return data

    def __repr__(self):
        return 'GameTranscript(mode={}, rounds={}, mistakes={}{})'.format(
            self.mode, len(self.records), self.mistakes, ', error' if self.error else '')


def run_game(learner, stream, mode=APPLE_TASTING, seed=0):
    """Play a learner against a stream from a fresh learner state.

    Under apple tasting the label is withheld from `update` on rounds the
    learner predicted 0. A learner error ends the game early and is kept on
    the transcript."""
    check_mode(mode)
    if learner.hclass is not None:
        stream.validate(learner.hclass)

    rng = np.random.default_rng(seed)
    learner.reset()
    transcript = GameTranscript(mode, seed, learner.kind)

    for t, (x, y) in enumerate(stream):
        try:
            prediction = learner.predict(x, rng)
            visible = mode == FULL_INFORMATION or prediction == 1
            p1 = learner.diagnostics().get('p1')
            transcript.records.append(RoundRecord(t, x, prediction, visible, y, mistake_kind(prediction, y), p1))
            learner.update(x, prediction, y if visible else None)
        except LearnerError as e:
            transcript.error = 'round {}: {}: {}'.format(t, type(e).__name__, e)
            log.warning('protocol: game truncated at {}'.format(transcript.error))
            break

    transcript.learner_summary = learner.summary()
    return transcript


def comparator_loss(stream, hclass):
    """Fewest mistakes any single hypothesis makes on the stream."""
    if len(stream) == 0:
        return 0
    losses = (hclass.matrix[:, stream.instances] != stream.labels).sum(axis=1)
    return int(losses.min())


def regret(transcript, hclass):
    """Mistakes minus the best hypothesis's loss on the rounds actually played."""
    if not transcript.records:
        return 0
    instances = np.array([r.instance for r in transcript.records], dtype=np.int64)
    labels = np.array([r.true_label for r in transcript.records], dtype=np.int64)
    losses = (hclass.matrix[:, instances] != labels).sum(axis=1)
    return transcript.mistakes - int(losses.min())


def firewall_check(learner, stream, seed, rng):
    """Replay a game with every hidden label flipped at random.

    Returns True when the prediction sequence is unchanged."""
    first = run_game(learner, stream, APPLE_TASTING, seed)
    hidden = set(first.hidden_rounds)
    if not hidden:
        return True

    labels = [1 - y if t in hidden and rng.random() < 0.5 else y for t, (_, y) in enumerate(stream)]
    second = run_game(learner, stream.with_labels(labels), APPLE_TASTING, seed)
    return first.predictions == second.predictions and first.error == second.error


def _play_seed(factory, stream, mode, seed, comparator):
    transcript = run_game(factory(), stream, mode, seed)
    return {
        'seed': seed,
        'mistakes': transcript.mistakes,
        'false_pos': transcript.false_pos,
        'false_neg': transcript.false_neg,
        'regret': transcript.mistakes - comparator,
        'error': transcript.error,
    }


def monte_carlo(learner, stream, seeds, hclass, mode=APPLE_TASTING, jobs=1, horizon=None):
    """Replay one learner on one stream under many seeds.

    `learner` is a spec dict or a zero-argument factory. Per-seed totals come
    back in seed order whatever the worker count."""
    check_mode(mode)
    seeds = [int(s) for s in seeds]
    if len(seeds) < 2:
        raise ProtocolError('monte carlo needs at least 2 seeds, got {}'.format(len(seeds)))

    factory = learner if callable(learner) else LearnerFactory(learner, hclass, horizon or len(stream))
    comparator = comparator_loss(stream, hclass)

    if jobs and jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(jobs) as executor:
            futures = [executor.submit(_play_seed, factory, stream, mode, seed, comparator) for seed in seeds]
            rows = [f.result() for f in futures]
    else:
        rows = [_play_seed(factory, stream, mode, seed, comparator) for seed in seeds]

    totals = pandas.DataFrame(rows, columns=['seed', 'mistakes', 'false_pos', 'false_neg', 'regret', 'error'])
    errors = totals['error'].notna().sum()
    if errors:
        log.warning('protocol: {} of {} replays ended in an error'.format(errors, len(seeds)))

    mistakes = totals['mistakes'].to_numpy(dtype=float)
    return {
        'mean': float(mistakes.mean()),
        'std_err': float(mistakes.std(ddof=1) / math.sqrt(len(mistakes))),
        'mean_regret': float(totals['regret'].mean()),
        'comparator_loss': comparator,
        'errors': int(errors),
        'totals': totals,
    }
