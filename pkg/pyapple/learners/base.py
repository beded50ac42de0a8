import copy


class LearnerError(Exception):
    pass


class ProtocolError(LearnerError):
    """The feedback a learner received breaks its contract: a non-realizable
    label emptied its version space, or a full-information learner got none."""
    pass


class Learner:
    """The predict/update contract every learner follows.

    `update` is called once per round after `predict`. Under apple tasting the
    label is None on rounds the learner predicted 0; a learner must never need
    it there."""

    kind = None
    randomized = False

    def __init__(self, hclass):
        self.hclass = hclass

    def predict(self, x, rng):
        raise NotImplementedError

    def update(self, x, prediction, label):
        raise NotImplementedError

    def reset(self):
        pass

    def clone(self):
        return copy.copy(self)

    def state_key(self):
        """Hashable snapshot of everything that drives future predictions (deterministic learners only)."""
        raise LearnerError('{} does not expose its state'.format(self.kind))

    def diagnostics(self):
        """Per-round auxiliary data for the transcript."""
        return {}

    def summary(self):
        return {}

    def __repr__(self):
        return '{}({})'.format(type(self).__name__, self.hclass.describe() if self.hclass else '')


class VersionSpaceLearner(Learner):
    """Base for learners that keep the hypotheses consistent with what they were told."""

    def __init__(self, hclass):
        super().__init__(hclass)
        self.version_space = hclass.universe()

    def reset(self):
        self.version_space = self.hclass.universe()

    def narrow(self, x, label):
        narrowed = self.version_space.project(x, label)
        if narrowed.is_empty():
            raise ProtocolError('{}: label {} on instance {} empties the version space; '
                                'stream is not realizable by {}'.format(self.kind, label, x, self.hclass.describe()))
        self.version_space = narrowed

    def state_key(self):
        return self.version_space.mask


class ConstantLearner(Learner):
    """Always predicts the same label and ignores feedback."""

    def __init__(self, hclass, label):
        super().__init__(hclass)
        self.label = label
        self.kind = 'always{}'.format(label)

    @classmethod
    def from_spec(cls, hclass, horizon, label=0):
        return cls(hclass, label)

    def predict(self, x, rng):
        return self.label

    def update(self, x, prediction, label):
        pass

    def state_key(self):
        return self.label


class AlwaysZero(ConstantLearner):
    @classmethod
    def from_spec(cls, hclass, horizon):
        return cls(hclass, 0)


class AlwaysOne(ConstantLearner):
    @classmethod
    def from_spec(cls, hclass, horizon):
        return cls(hclass, 1)
