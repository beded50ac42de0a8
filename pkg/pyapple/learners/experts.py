import copy
import itertools
import math

import numpy as np

from pyapple import log, config
from pyapple.hypothesis import VersionSpace, CapExceededError
from pyapple.dimensions import ldim
from pyapple.learners.base import Learner, LearnerError
from pyapple.learners.soa import soa_predict
from pyapple.learners.exp4at import Exp4AtLearner


def expert_count(horizon, depth):
    return sum(math.comb(horizon, k) for k in range(min(depth, horizon) + 1))


class ExpertSet:
    """One expert per flip-set L of at most ldim(H) rounds.

    Expert L runs SOA on its own past predictions and negates SOA's answer on
    the rounds in L. Rounds are numbered from 0. A flip that contradicts every
    hypothesis left in the expert's simulation leaves that simulation alone."""

    def __init__(self, hclass, horizon, flip_sets):
        self.hclass = hclass
        self.horizon = horizon
        self.flip_sets = [tuple(f) for f in flip_sets]

        self.flips = np.zeros((horizon, len(self.flip_sets)), dtype=bool)
        for i, rounds in enumerate(self.flip_sets):
            for t in rounds:
                if not 0 <= t < horizon:
                    raise LearnerError('experts: flip round {} outside horizon {}'.format(t, horizon))
                self.flips[t, i] = True
        self.reset()

    def __len__(self):
        return len(self.flip_sets)

    def reset(self):
        self.masks = [self.hclass.full_mask] * len(self.flip_sets)
        self.t = 0

    def clone(self):
        twin = copy.copy(self)
        twin.masks = list(self.masks)
        return twin

    def advise(self, x):
        if self.t >= self.horizon:
            raise LearnerError('experts: asked for round {} past horizon {}'.format(self.t, self.horizon))

        flips = self.flips[self.t]
        ones = self.hclass.ones[x]
        predictions = np.empty(len(self.flip_sets), dtype=np.uint8)
        soa_memo = {}
        for i, mask in enumerate(self.masks):
            label = soa_memo.get(mask)
            if label is None:
                label = soa_predict(VersionSpace(self.hclass, mask), x)
                soa_memo[mask] = label
            if flips[i]:
                label = 1 - label
            predictions[i] = label

            narrowed = mask & ones if label else mask & ~ones
            if narrowed:
                self.masks[i] = narrowed

        self.t += 1
        return predictions

    def predictions(self, instances):
        """N x len(instances) matrix of every expert's predictions on a fresh run."""
        runner = self.clone()
        runner.reset()
        columns = [runner.advise(int(x)) for x in instances]
        if not columns:
            return np.zeros((len(self), 0), dtype=np.uint8)
        return np.stack(columns, axis=1)


def build_expert_set(hclass, horizon):
    """Enumerate flip-sets in lexicographic order of their sorted round tuples."""
    if int(horizon) != horizon or horizon < 1:
        raise LearnerError('experts: horizon must be a positive integer, got {!r}'.format(horizon))

    depth = ldim(hclass.universe())
    count = expert_count(horizon, depth)
    cap = config.learners.get('expert_cap', 200000)
    if count > cap:
        raise CapExceededError('experts: {} experts for T={} and ldim={} exceeds cap {}; '
                               'use a smaller horizon or class'.format(count, horizon, depth, cap))

    flip_sets = sorted(itertools.chain.from_iterable(
        itertools.combinations(range(horizon), k) for k in range(min(depth, horizon) + 1)))
    log.debug('experts: built {} experts for {} at T={}'.format(count, hclass.describe(), horizon))
    return ExpertSet(hclass, horizon, flip_sets)


class FollowExpertLearner(Learner):
    """Follows a single expert. Used when the expert set has one member."""

    kind = 'agnostic_experts'

    def __init__(self, hclass, source):
        super().__init__(hclass)
        self.source = source

    def reset(self):
        self.source.reset()

    def clone(self):
        twin = super().clone()
        twin.source = self.source.clone()
        return twin

    def predict(self, x, rng):
        return int(self.source.advise(x)[0])

    def update(self, x, prediction, label):
        pass

    def state_key(self):
        return self.source.t


class AgnosticLearner(Exp4AtLearner):
    kind = 'agnostic_experts'

    @classmethod
    def from_spec(cls, hclass, horizon):
        return agnostic_learner(hclass, horizon)


def agnostic_learner(hclass, horizon):
    """EXP4.AT over the flip-set expert cover with eta = sqrt(ln N / 2T)."""
    experts = build_expert_set(hclass, horizon)
    if len(experts) == 1:
        log.info('experts: single expert for {}, following it directly'.format(hclass.describe()))
        return FollowExpertLearner(hclass, experts)
    return AgnosticLearner(hclass, experts, horizon=horizon)
