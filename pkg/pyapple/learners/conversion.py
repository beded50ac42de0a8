import math

from pyapple import log
from pyapple.learners.base import Learner, LearnerError


class ConversionLearner(Learner):
    """Turns a full-information learner into an apple-tasting one.

    Whenever the inner learner says 0 the wrapper still predicts 1 with
    probability sqrt(M_minus / T). The inner learner is only updated on
    rounds where the wrapper predicted 1 and so saw the label."""

    kind = 'conversion'
    randomized = True

    def __init__(self, hclass, inner, horizon, m_minus=None):
        super().__init__(hclass)
        if not horizon or horizon < 1:
            raise LearnerError('conversion: a positive horizon is required')
        if m_minus is None:
            try:
                m_minus = inner.false_negative_budget()
            except AttributeError:
                raise LearnerError('conversion: inner learner {} declares no false-negative budget, '
                                   'pass m_minus explicitly'.format(inner.kind))
        if m_minus < 0:
            raise LearnerError('conversion: m_minus must be non-negative, got {}'.format(m_minus))
        if m_minus > horizon:
            raise LearnerError('conversion: m_minus {} exceeds horizon {}'.format(m_minus, horizon))

        self.inner = inner
        self.horizon = horizon
        self.m_minus = m_minus
        self.exploration = math.sqrt(m_minus / horizon)

        self._inner_prediction = None
        self.inner_false_negatives = 0
        self.budget_overruns = 0

    @classmethod
    def from_spec(cls, hclass, horizon, inner=None, m_minus=None):
        # local import, the registry imports this module
        from pyapple.learners import make_learner
        inner = make_learner(inner or {'kind': 'constrained_soa', 'width': 'auto'}, hclass, horizon)
        return cls(hclass, inner, horizon, m_minus=m_minus)

    def reset(self):
        self.inner.reset()
        self._inner_prediction = None
        self.inner_false_negatives = 0
        self.budget_overruns = 0

    def clone(self):
        twin = super().clone()
        twin.inner = self.inner.clone()
        return twin

    def predict(self, x, rng):
        self._inner_prediction = self.inner.predict(x, rng)
        # drawn every round so the generator advances the same way whatever the inner learner says
        r = rng.random()
        if self._inner_prediction == 1 or r < self.exploration:
            return 1
        return 0

    def update(self, x, prediction, label):
        if prediction != 1 or label is None:
            return

        if self._inner_prediction == 0 and label == 1:
            self.inner_false_negatives += 1
            if self.inner_false_negatives > self.m_minus:
                self.budget_overruns += 1
                log.warning('learners: conversion: inner learner made {} false negatives, declared budget {}'.format(
                    self.inner_false_negatives, self.m_minus))

        self.inner.update(x, self._inner_prediction, label)

    def diagnostics(self):
        return {'p1': 1.0 if self._inner_prediction == 1 else self.exploration}

    def summary(self):
        return {
            'exploration': self.exploration,
            'm_minus': self.m_minus,
            'inner': self.inner.kind,
            'inner_false_negatives': self.inner_false_negatives,
            'budget_overruns': self.budget_overruns,
        }
