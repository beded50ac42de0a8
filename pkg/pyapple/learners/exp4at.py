import copy
import math

import numpy as np

from pyapple import config
from pyapple.learners.base import Learner, LearnerError


def importance_weighted_loss(y, label, prediction, p1):
    """Estimate of 1{y != label} from apple-tasting feedback: zero unless the learner predicted 1."""
    if prediction != 1:
        return 0.0
    return float(y != label) / p1


# largest rate a default may take; the weights reject 1/2 itself
MAX_DEFAULT_ETA = 0.5 - 1e-9


def default_eta(n_experts, horizon):
    """sqrt(ln N / 2T), held below 1/2 for short horizons. Zero for a single expert."""
    return min(math.sqrt(math.log(n_experts) / (2 * horizon)), MAX_DEFAULT_ETA)


class Exp4Weights:
    """Exponential weights over N experts, updated with importance-weighted losses.

    Weights live in log space and are renormalized after every update."""

    def __init__(self, n_experts, eta):
        if n_experts < 1:
            raise LearnerError('exp4at: need at least one expert')
        if not 0 < eta < 0.5:
            raise LearnerError('exp4at: learning rate must be in (0, 1/2), got {}'.format(eta))
        self.n_experts = n_experts
        self.eta = eta
        self.tolerance = config.learners.get('weight_tolerance', 1e-9)
        self.reset()

    def reset(self):
        self.log_q = np.full(self.n_experts, -math.log(self.n_experts))
        self.q = np.full(self.n_experts, 1.0 / self.n_experts)

    def _check_advice(self, advice):
        advice = np.asarray(advice)
        if advice.shape != (self.n_experts,):
            raise LearnerError('exp4at: advice has shape {}, expected ({},)'.format(advice.shape, self.n_experts))
        return advice

    def probability(self, advice):
        advice = self._check_advice(advice)
        return (1 - self.eta) * float(self.q @ advice) + self.eta

    def round(self, advice, rng):
        """Sample a prediction; returns (label, p1)."""
        p1 = self.probability(advice)
        return int(rng.random() < p1), p1

    def update(self, advice, prediction, label, p1):
        if prediction != 1 or label is None:
            return
        advice = self._check_advice(advice)
        losses = (advice != label) / p1

        log_q = self.log_q - self.eta * losses
        log_q -= log_q.max()
        total = np.exp(log_q).sum()
        log_q -= math.log(total)
        q = np.exp(log_q)
        if abs(q.sum() - 1.0) > self.tolerance:
            raise LearnerError('exp4at: weights sum to {!r} after renormalizing'.format(q.sum()))
        self.q = q
        self.log_q = log_q


def exp4at_round(weights, advice, rng):
    return weights.round(advice, rng)


class FixedAdvice:
    """A precomputed N x T advice matrix, read one column per round."""

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=np.uint8)
        if matrix.ndim != 2 or matrix.size == 0:
            raise LearnerError('exp4at: advice must be a non-empty N x T matrix')
        if not np.isin(matrix, (0, 1)).all():
            raise LearnerError('exp4at: advice must be binary')
        self.matrix = matrix
        self.t = 0

    def __len__(self):
        return self.matrix.shape[0]

    @property
    def horizon(self):
        return self.matrix.shape[1]

    def reset(self):
        self.t = 0

    def clone(self):
        return copy.copy(self)

    def advise(self, x):
        if self.t >= self.matrix.shape[1]:
            raise LearnerError('exp4at: advice exhausted after {} rounds'.format(self.matrix.shape[1]))
        column = self.matrix[:, self.t]
        self.t += 1
        return column


class HypothesisAdvice:
    """Every hypothesis of the class is an expert."""

    def __init__(self, hclass):
        self.hclass = hclass

    def __len__(self):
        return self.hclass.size

    def reset(self):
        pass

    def clone(self):
        return self

    def advise(self, x):
        return self.hclass.matrix[:, x]


class Exp4AtLearner(Learner):
    kind = 'exp4at'
    randomized = True

    def __init__(self, hclass, source, horizon=None, eta=None):
        super().__init__(hclass)
        n = len(source)
        if eta is None:
            if not horizon:
                raise LearnerError('exp4at: either eta or a horizon is required')
            eta = default_eta(n, horizon)
        self.source = source
        self.weights = Exp4Weights(n, eta)
        self._advice = None
        self._p1 = None

    @classmethod
    def from_spec(cls, hclass, horizon, experts=None, advice=None, eta=None):
        if advice is not None:
            source = FixedAdvice(advice)
        elif experts in (None, 'hypotheses'):
            source = HypothesisAdvice(hclass)
        else:
            raise LearnerError('exp4at: unknown expert source {!r}'.format(experts))
        return cls(hclass, source, horizon=horizon, eta=eta)

    @property
    def eta(self):
        return self.weights.eta

    def reset(self):
        self.source.reset()
        self.weights.reset()
        self._advice = None
        self._p1 = None

    def clone(self):
        twin = super().clone()
        twin.weights = Exp4Weights(self.weights.n_experts, self.weights.eta)
        twin.weights.q = self.weights.q.copy()
        twin.weights.log_q = self.weights.log_q.copy()
        twin.source = self.source.clone()
        return twin

    def predict(self, x, rng):
        self._advice = self.source.advise(x)
        label, self._p1 = self.weights.round(self._advice, rng)
        return label

    def update(self, x, prediction, label):
        self.weights.update(self._advice, prediction, label, self._p1)

    def diagnostics(self):
        return {'p1': self._p1}

    def summary(self):
        return {'experts': self.weights.n_experts, 'eta': self.eta}
