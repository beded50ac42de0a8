import math

from pyapple.hypothesis import mask_members
from pyapple.dimensions import ldim
from pyapple.learners.base import VersionSpaceLearner, LearnerError


class DetW1Learner(VersionSpaceLearner):
    """Predicts 1 whenever any surviving hypothesis says 1.

    Learns only from its own 1 predictions, so it makes at most AL_1(H) mistakes."""

    kind = 'det_w1'

    @classmethod
    def from_spec(cls, hclass, horizon):
        return cls(hclass)

    def predict(self, x, rng):
        return 1 if self.version_space.mask & self.hclass.ones[x] else 0

    def update(self, x, prediction, label):
        if prediction == 1 and label is not None:
            self.narrow(x, label)


FORCED = 'forced'
RESOLVE = 'resolve'
COUNT = 'count'
WAIT = 'wait'


class DetLdim1Learner(VersionSpaceLearner):
    """Deterministic apple-tasting learner for classes of Littlestone dimension 1.

    Counts, per hypothesis, the rounds it wanted a 1 while the learner said 0.
    Once any hypothesis in the 1-branch has been passed over `threshold`
    times the learner pays for a look."""

    kind = 'det_ldim1'

    def __init__(self, hclass, threshold):
        if int(threshold) != threshold or threshold < 1:
            raise LearnerError('det_ldim1: threshold must be a positive integer, got {!r}'.format(threshold))
        depth = ldim(hclass.universe())
        if depth != 1:
            raise LearnerError('det_ldim1: needs a class of Littlestone dimension 1, {} has {}'.format(
                hclass.describe(), depth))
        super().__init__(hclass)
        self.threshold = int(threshold)
        self.counts = {}
        self.branch = None
        self._pending = 0

    @classmethod
    def from_spec(cls, hclass, horizon, threshold=None):
        if threshold is None:
            if not horizon:
                raise LearnerError('det_ldim1: needs a horizon or an explicit threshold')
            threshold = math.ceil(math.sqrt(horizon))
        return cls(hclass, threshold)

    def reset(self):
        super().reset()
        self.counts = {}
        self.branch = None
        self._pending = 0

    def clone(self):
        twin = super().clone()
        twin.counts = dict(self.counts)
        return twin

    def predict(self, x, rng):
        labels = self.version_space.projection(x)
        if len(labels) == 1:
            self.branch = FORCED
            return next(iter(labels))

        zeros, ones = self.version_space.split(x)
        if ldim(zeros) == 0:
            self.branch = RESOLVE
            return 1
        if any(self.counts.get(h, 0) >= self.threshold for h in ones.members):
            self.branch = COUNT
            return 1

        self.branch = WAIT
        self._pending = ones.mask
        return 0

    def update(self, x, prediction, label):
        if self.branch == WAIT:
            for h in mask_members(self._pending):
                self.counts[h] = self.counts.get(h, 0) + 1
            self._pending = 0
        elif prediction == 1 and label is not None:
            self.narrow(x, label)

    def state_key(self):
        return self.version_space.mask, tuple(sorted(self.counts.items()))

    def summary(self):
        return {'threshold': self.threshold, 'max_count': max(self.counts.values(), default=0)}
