from pyapple import log
from pyapple.dimensions import ldim, aldim, best_width
from pyapple.learners.base import VersionSpaceLearner, LearnerError, ProtocolError


def soa_predict(version_space, x):
    """Predict the label whose projection keeps the larger Littlestone dimension.

    Ties go to 1: under apple tasting a 1 buys feedback."""
    if version_space.is_empty():
        raise LearnerError('soa: cannot predict from an empty version space')

    labels = version_space.projection(x)
    if len(labels) == 1:
        return next(iter(labels))

    zeros, ones = version_space.split(x)
    return 1 if ldim(ones) >= ldim(zeros) else 0


class SoaLearner(VersionSpaceLearner):
    """Standard optimal algorithm. Learns from every label it is shown."""

    kind = 'soa'

    @classmethod
    def from_spec(cls, hclass, horizon):
        return cls(hclass)

    def predict(self, x, rng):
        return soa_predict(self.version_space, x)

    def update(self, x, prediction, label):
        if label is None:
            return
        self.narrow(x, label)


class ConstrainedSoaLearner(VersionSpaceLearner):
    """Full-information learner with a false-negative budget.

    Predicts 1 only when the 0-branch would lose apple depth at the current
    width. Every false negative spends one unit of width, so on a realizable
    stream it makes at most width - 1 false negatives and at most
    AL_width(H) false positives."""

    kind = 'constrained_soa'

    def __init__(self, hclass, width):
        if int(width) != width or width < 1:
            raise LearnerError('constrained_soa: width must be a positive integer, got {!r}'.format(width))
        super().__init__(hclass)
        self.width = int(width)
        self.remaining_width = self.width

    @classmethod
    def from_spec(cls, hclass, horizon, width=1):
        if width == 'auto':
            if not horizon:
                raise LearnerError('constrained_soa: width "auto" needs a horizon')
            width = best_width(hclass.universe(), horizon)
            log.debug('learners: constrained_soa picked width {} for T={}'.format(width, horizon))
        return cls(hclass, width)

    def reset(self):
        super().reset()
        self.remaining_width = self.width

    def predict(self, x, rng):
        labels = self.version_space.projection(x)
        if len(labels) == 1:
            return next(iter(labels))

        zeros, _ = self.version_space.split(x)
        w = self.remaining_width
        if aldim(zeros, w) < aldim(self.version_space, w):
            return 1
        return 0

    def update(self, x, prediction, label):
        if label is None:
            raise ProtocolError('constrained_soa: needs the true label every round (full-information only)')

        self.narrow(x, label)
        if prediction == 0 and label == 1:
            if self.remaining_width == 1:
                raise ProtocolError('constrained_soa: false-negative budget of {} exhausted; '
                                    'stream is not realizable'.format(self.width - 1))
            self.remaining_width -= 1

    def potential(self):
        """AL at the remaining width of the current version space."""
        return aldim(self.version_space, self.remaining_width)

    def false_negative_budget(self):
        return self.width - 1

    def false_positive_budget(self):
        return aldim(self.hclass.universe(), self.width)

    def state_key(self):
        return self.version_space.mask, self.remaining_width

    def summary(self):
        return {'width': self.width, 'remaining_width': self.remaining_width}
