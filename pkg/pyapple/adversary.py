import concurrent.futures
import math

import numpy as np

from pyapple import log, config
from pyapple.hypothesis import LabeledStream, popcount
from pyapple.dimensions import ldim, aldim, witness_tree, verify_shattered, INF
from pyapple.learners import LearnerFactory
from pyapple.protocol import monte_carlo, APPLE_TASTING, FULL_INFORMATION, check_mode


SEED_HIGH = 2 ** 31 - 1


class AdversaryError(Exception):
    pass


class AdversaryPlan:
    """The planned path through a shattered apple tree, one bit per block."""

    def __init__(self, tree, block_size, num_sims):
        self.tree = tree
        self.block_size = block_size
        self.num_sims = num_sims
        self.instances = []
        self.sigma = []
        self.estimates = []

    @property
    def ones(self):
        return sum(self.sigma)

    def rounds(self):
        """The labeled blocks, before padding."""
        rounds = []
        for x, bit in zip(self.instances, self.sigma):
            rounds.extend([(x, bit)] * self.block_size)
        return rounds

    def to_dict(self):
        return {
            'tree': self.tree.to_dict(),
            'block_size': self.block_size,
            'num_sims': self.num_sims,
            'instances': list(self.instances),
            'sigma': list(self.sigma),
            'estimates': list(self.estimates),
        }

    def __repr__(self):
        return 'AdversaryPlan(w={}, d={}, sigma={})'.format(self.tree.width, self.tree.depth, self.sigma)


def _event_occurs(factory, prefix, x, block_size, seed):
    """Replay prefix, then show x block_size times; True if the learner ever predicts 1 on x."""
    learner = factory()
    learner.reset()
    rng = np.random.default_rng(seed)
    for xi, yi in prefix:
        prediction = learner.predict(xi, rng)
        learner.update(xi, prediction, yi if prediction == 1 else None)
    for _ in range(block_size):
        prediction = learner.predict(x, rng)
        if prediction == 1:
            return True
        learner.update(x, prediction, None)
    return False


def plan_adversary(tree, hclass, learner_factory, num_sims=None, rng=None, jobs=1):
    """Walk the tree against a black-box learner.

    At each step the chance the learner predicts 1 at least once on a block of
    the node's instance is estimated from `num_sims` fresh replays. The path
    goes left (label 0) when that estimate is at least 1/2, right otherwise."""
    num_sims = num_sims or config.adversary.get('num_sims', 200)
    if num_sims < 1:
        raise AdversaryError('num_sims must be at least 1, got {}'.format(num_sims))
    if tree.depth < tree.width:
        raise AdversaryError('tree depth {} is below its width {}, blocks would be empty'.format(tree.depth, tree.width))
    if not verify_shattered(tree, hclass.universe()):
        raise AdversaryError('tree {} is not shattered by {}'.format(tree, hclass.describe()))

    rng = rng if rng is not None else np.random.default_rng()
    plan = AdversaryPlan(tree, tree.depth // tree.width, num_sims)

    executor = concurrent.futures.ProcessPoolExecutor(jobs) if jobs and jobs > 1 else None
    try:
        node = tree.root
        while node is not None:
            prefix = plan.rounds()
            seeds = [int(s) for s in rng.integers(0, SEED_HIGH, size=num_sims)]
            if executor:
                futures = [executor.submit(_event_occurs, learner_factory, prefix, node.instance, plan.block_size, s)
                           for s in seeds]
                hits = [f.result() for f in futures]
            else:
                hits = [_event_occurs(learner_factory, prefix, node.instance, plan.block_size, s) for s in seeds]

            estimate = sum(hits) / num_sims
            bit = 0 if estimate >= 0.5 else 1
            log.debug('adversary: step {}: x={} P(A)={:.3f} -> {}'.format(len(plan.sigma), node.instance, estimate, bit))

            plan.instances.append(node.instance)
            plan.sigma.append(bit)
            plan.estimates.append(estimate)
            node = node.right if bit else node.left
    finally:
        if executor:
            executor.shutdown()

    log.info('adversary: planned sigma={} ({} ones, {} steps)'.format(plan.sigma, plan.ones, len(plan.sigma)))
    return plan


def realize_stream(plan, horizon):
    """Blocks of the plan, padded to the horizon with the last labeled instance."""
    rounds = plan.rounds()
    if not rounds:
        raise AdversaryError('plan has no steps')
    if horizon < len(rounds):
        raise AdversaryError('horizon {} is shorter than the planned blocks ({} rounds)'.format(horizon, len(rounds)))
    rounds.extend([rounds[-1]] * (horizon - len(rounds)))
    return LabeledStream(rounds)


def lower_bound_experiment(hclass, width, learner, horizon, num_sims=None, eval_seeds=None, rng=None, jobs=1):
    """Plan a hard realizable stream for `learner` and measure its mistakes on it.

    `learner` is a spec dict or a zero-argument factory."""
    num_sims = num_sims or config.adversary.get('num_sims', 200)
    eval_seeds = eval_seeds or config.adversary.get('eval_seeds', 2000)
    delta = config.adversary.get('slack_delta', 0.1)
    rng = rng if rng is not None else np.random.default_rng()

    universe = hclass.universe()
    L = ldim(universe)
    if width < 1 or width > min(L, horizon):
        raise AdversaryError('width {} must be between 1 and min(ldim={}, T={})'.format(width, L, horizon))

    al = aldim(universe, width)
    depth = int(math.isqrt(int(width * min(horizon, al))))
    if depth < width:
        raise AdversaryError('depth {} is below width {}'.format(depth, width))

    tree = witness_tree(universe, width, depth)
    if tree is None:
        raise AdversaryError('no width-{} depth-{} tree for {}'.format(width, depth, hclass.describe()))

    factory = learner if callable(learner) else LearnerFactory(learner, hclass, horizon)
    plan = plan_adversary(tree, hclass, factory, num_sims, rng, jobs)
    stream = realize_stream(plan, horizon)

    seeds = [int(s) for s in rng.integers(0, SEED_HIGH, size=eval_seeds)]
    result = monte_carlo(factory, stream, seeds, hclass, APPLE_TASTING, jobs)

    floor = depth / 4
    slack = depth * math.exp(-2 * num_sims * delta ** 2)
    half_width = 1.96 * result['std_err']
    report = {
        'class': hclass.describe(),
        'width': width,
        'aldim': al if al != INF else 'inf',
        'depth': depth,
        'block_size': plan.block_size,
        'horizon': horizon,
        'plan': plan.to_dict(),
        'stream': stream.to_list(),
        'mean': result['mean'],
        'std_err': result['std_err'],
        'ci': [result['mean'] - half_width, result['mean'] + half_width],
        'floor': floor,
        'slack': slack,
        'slack_delta': delta,
        'meets_floor': result['mean'] >= floor - 3 * result['std_err'] - slack,
        'totals': result['totals'],
    }
    log.info('adversary: {}: mean mistakes {:.3f} +/- {:.3f}, floor d/4 = {:.2f}'.format(
        hclass.describe(), result['mean'], result['std_err'], floor))
    return report


def stochastic_agnostic_stream(hclass, noise_rate, horizon, rng):
    """Labels from a uniformly chosen hypothesis on uniform instances, each flipped with probability noise_rate."""
    if not 0 <= noise_rate <= 0.5:
        raise AdversaryError('noise rate must be in [0, 1/2], got {}'.format(noise_rate))
    target = int(rng.integers(hclass.size))
    instances = rng.integers(hclass.instance_count, size=horizon)
    flips = rng.random(horizon) < noise_rate
    labels = hclass.matrix[target, instances].astype(np.int64) ^ flips
    return LabeledStream(zip(instances.tolist(), labels.tolist()))


def _consistent_moves(hclass, mask):
    for x, ones in enumerate(hclass.ones):
        for y in (1, 0):
            narrowed = mask & ones if y else mask & ~ones
            if narrowed:
                yield x, y, narrowed


def _feedback(mode, prediction, label):
    return label if mode == FULL_INFORMATION or prediction == 1 else None


def _lookahead(learner, hclass, x, y, mask, depth, mode, rng):
    sim = learner.clone()
    prediction = sim.predict(x, rng)
    mistakes = int(prediction != y)
    sim.update(x, prediction, _feedback(mode, prediction, y))
    if depth <= 1:
        return mistakes
    return mistakes + max((_lookahead(sim, hclass, nx, ny, nmask, depth - 1, mode, rng)
                           for nx, ny, nmask in _consistent_moves(hclass, mask)), default=0)


def greedy_adversarial_stream(learner, hclass, horizon, lookahead=None, mode=APPLE_TASTING):
    """Build a realizable stream one round at a time against a deterministic learner.

    Each round picks the labeled instance with the most mistakes over the next
    `lookahead` rounds, preferring moves that keep more hypotheses alive."""
    check_mode(mode)
    if learner.randomized:
        raise AdversaryError('greedy search needs a deterministic learner, {} is randomized'.format(learner.kind))
    lookahead = lookahead or config.adversary.get('greedy_lookahead', 1)

    rng = np.random.default_rng(0)
    learner.reset()
    mask = hclass.full_mask
    rounds = []
    for t in range(horizon):
        depth = min(lookahead, horizon - t)
        best_key, best_move = None, None
        for x, y, narrowed in _consistent_moves(hclass, mask):
            score = _lookahead(learner, hclass, x, y, narrowed, depth, mode, rng)
            key = (score, popcount(narrowed), y, -x)
            if best_key is None or key > best_key:
                best_key, best_move = key, (x, y, narrowed)

        x, y, mask = best_move
        prediction = learner.predict(x, rng)
        learner.update(x, prediction, _feedback(mode, prediction, y))
        rounds.append((x, y))

    return LabeledStream(rounds)


def exhaustive_worst_case(learner_factory, hclass, horizon, mode=APPLE_TASTING, on_transition=None):
    """Worst false positives, false negatives and total mistakes of a deterministic
    learner over every realizable stream of length `horizon`.

    Each maximum is taken separately. `on_transition(before, after, x, prediction, label)`
    sees every distinct state transition once."""
    check_mode(mode)
    rng = np.random.default_rng(0)
    memo = {}

    def search(learner, mask, remaining):
        if remaining == 0:
            return 0, 0, 0
        key = (learner.state_key(), mask, remaining)
        if key in memo:
            return memo[key]

        worst = (0, 0, 0)
        for x in range(hclass.instance_count):
            probe = learner.clone()
            prediction = probe.predict(x, rng)
            ones = hclass.ones[x]
            for y in (0, 1):
                narrowed = mask & ones if y else mask & ~ones
                if not narrowed:
                    continue
                child = probe.clone()
                child.update(x, prediction, _feedback(mode, prediction, y))
                if on_transition:
                    on_transition(probe, child, x, prediction, y)

                fp = int(prediction == 1 and y == 0)
                fn = int(prediction == 0 and y == 1)
                sub = search(child, narrowed, remaining - 1)
                worst = (max(worst[0], sub[0] + fp), max(worst[1], sub[1] + fn), max(worst[2], sub[2] + fp + fn))

        memo[key] = worst
        return worst

    learner = learner_factory()
    learner.reset()
    if learner.randomized:
        raise AdversaryError('exhaustive search needs a deterministic learner, {} is randomized'.format(learner.kind))

    false_pos, false_neg, mistakes = search(learner, hclass.full_mask, horizon)
    log.debug('adversary: exhaustive search over {} at T={} visited {} states'.format(
        hclass.describe(), horizon, len(memo)))
    return {'false_pos': false_pos, 'false_neg': false_neg, 'mistakes': mistakes, 'states': len(memo)}
