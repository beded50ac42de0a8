from pyapple.learners.base import Learner, VersionSpaceLearner, LearnerError, ProtocolError, AlwaysZero, AlwaysOne
from pyapple.learners.soa import soa_predict, SoaLearner, ConstrainedSoaLearner
from pyapple.learners.conversion import ConversionLearner
from pyapple.learners.exp4at import (importance_weighted_loss, exp4at_round, Exp4Weights, Exp4AtLearner,
                                     FixedAdvice, HypothesisAdvice)
from pyapple.learners.experts import ExpertSet, build_expert_set, agnostic_learner, AgnosticLearner
from pyapple.learners.deterministic import DetW1Learner, DetLdim1Learner

LEARNERS = {
    'soa': SoaLearner,
    'constrained_soa': ConstrainedSoaLearner,
    'conversion': ConversionLearner,
    'exp4at': Exp4AtLearner,
    'agnostic_experts': AgnosticLearner,
    'det_w1': DetW1Learner,
    'det_ldim1': DetLdim1Learner,
    'always0': AlwaysZero,
    'always1': AlwaysOne,
}


def make_learner(spec, hclass, horizon=None):
    """Build a learner from its JSON spec, e.g. {"kind": "conversion", "inner": {...}}."""
    if isinstance(spec, str):
        spec = {'kind': spec}
    if not isinstance(spec, dict) or 'kind' not in spec:
        raise LearnerError('learner spec needs a "kind", got {!r}'.format(spec))

    kind = spec['kind']
    try:
        learner_class = LEARNERS[kind]
    except KeyError:
        raise LearnerError('unknown learner kind {!r}, expected one of: {}'.format(kind, ', '.join(sorted(LEARNERS))))

    params = {k: v for k, v in spec.items() if k != 'kind'}
    try:
        return learner_class.from_spec(hclass, horizon, **params)
    except TypeError as e:
        raise LearnerError('bad parameters for learner {!r}: {}'.format(kind, e))


class LearnerFactory:
    """Picklable zero-argument constructor for fresh learners, for worker processes."""

    def __init__(self, spec, hclass, horizon=None):
        self.spec = spec
        self.hclass = hclass
        self.horizon = horizon
        # fail on a bad spec here rather than inside a worker
        make_learner(spec, hclass, horizon)

    def __call__(self):
        return make_learner(self.spec, self.hclass, self.horizon)

    def __repr__(self):
        return 'LearnerFactory({!r})'.format(self.spec)
