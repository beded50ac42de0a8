import functools
import itertools
import math
import weakref
from collections import namedtuple

import numpy as np

from pyapple import log, config
from pyapple.hypothesis import popcount, CapExceededError


INF = math.inf


class DimensionError(Exception):
    pass


AppleNode = namedtuple('AppleNode', ['instance', 'left', 'right'])


class DimensionCache:
    """Memo of computed depths, keyed by (version-space mask, width).

    Width None holds Littlestone depths. Entries are value-equal to an uncached
    recomputation, so concurrent writers may overwrite each other freely."""

    def __init__(self):
        self.entries = {}
        self.hits = 0
        self.misses = 0

    def get(self, mask, width):
        value = self.entries.get((mask, width))
        if value is None:
            self.misses += 1
        else:
            self.hits += 1
        return value

    def put(self, mask, width, value):
        self.entries[(mask, width)] = value

    def clear(self):
        self.entries.clear()
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self.entries)


_caches = weakref.WeakKeyDictionary()


def cache_for(hclass):
    cache = _caches.get(hclass)
    if cache is None:
        cache = DimensionCache()
        _caches[hclass] = cache
    return cache


@functools.lru_cache(maxsize=None)
def leaf_count(w, d):
    """Leaves of an apple tree of width w and depth d: sum_{j <= min(w, d)} C(d, j)."""
    return sum(math.comb(d, j) for j in range(min(w, d) + 1))


@functools.lru_cache(maxsize=None)
def depth_bound(n, w):
    """Deepest width-w tree that n hypotheses could possibly shatter.

    Distinct leaves of a shattered tree need distinct hypotheses."""
    if w == 0:
        return INF
    d = 0
    while leaf_count(w, d + 1) <= n:
        d += 1
    return d


def _ldim(hclass, mask, cache):
    value = cache.get(mask, None)
    if value is not None:
        return value

    n = popcount(mask)
    bound = n.bit_length() - 1
    best = 0
    if bound > 0:
        seen = set()
        for ones_x in hclass.ones:
            ones = mask & ones_x
            if not ones or ones == mask or ones in seen:
                continue
            seen.add(ones)
            zeros = mask ^ ones

            small, large = sorted((zeros, ones), key=popcount)
            if popcount(small).bit_length() <= best:
                continue
            first = _ldim(hclass, small, cache)
            if first + 1 <= best:
                continue
            second = _ldim(hclass, large, cache) if first > 0 else 0
            best = max(best, 1 + min(first, second))
            if best >= bound:
                break

    cache.put(mask, None, best)
    return best


def _aldim(hclass, mask, w, cache):
    if w == 0:
        return INF

    value = cache.get(mask, w)
    if value is not None:
        return value

    bound = depth_bound(popcount(mask), w)
    best = 0
    if bound > 0:
        seen = set()
        for ones_x in hclass.ones:
            ones = mask & ones_x
            if not ones or ones == mask or ones in seen:
                continue
            seen.add(ones)
            zeros = mask ^ ones

            if 1 + min(depth_bound(popcount(zeros), w), depth_bound(popcount(ones), w - 1)) <= best:
                continue
            right = _aldim(hclass, ones, w - 1, cache)
            if 1 + right <= best:
                continue
            # zeros is nonempty, so its depth is at least 0
            left = _aldim(hclass, zeros, w, cache) if right > 0 else 0
            best = max(best, 1 + min(left, right))
            if best >= bound:
                break

    cache.put(mask, w, best)
    return best


def _require_nonempty(version_space):
    if version_space.is_empty():
        raise DimensionError('dimension of empty version space undefined')


def _shatters_mask(hclass, mask, w, d, cache):
    if not mask:
        return False
    if d == 0 or w == 0:
        return True
    return _aldim(hclass, mask, w, cache) >= d


def shatters(version_space, w, d):
    """True iff some width-w, depth-d apple tree is shattered by the version space."""
    if w < 0 or d < 0:
        raise DimensionError('width and depth must be non-negative, got w={} d={}'.format(w, d))
    hclass = version_space.hclass
    return _shatters_mask(hclass, version_space.mask, w, d, cache_for(hclass))


def ldim(version_space):
    _require_nonempty(version_space)
    hclass = version_space.hclass
    return _ldim(hclass, version_space.mask, cache_for(hclass))


def aldim(version_space, w):
    _require_nonempty(version_space)
    if int(w) != w or w < 1:
        raise DimensionError('width must be a positive integer, got {!r}'.format(w))
    hclass = version_space.hclass
    return _aldim(hclass, version_space.mask, int(w), cache_for(hclass))


def effective_width(version_space):
    """Smallest w with a finite AL_w. On a finite class width 1 always qualifies."""
    _require_nonempty(version_space)
    return 1


def effective_width_report(version_space):
    report = {'finite': effective_width(version_space), 'family': None}
    tag = version_space.hclass.family_tag
    if tag and tag.get('W'):
        entry = tag.get('W')
        report['family'] = {'value': entry.value, 'provenance': entry.provenance, 'scope': entry.scope}
    return report


def best_width(version_space, horizon):
    """Width minimizing AL_w + 2 sqrt((w - 1) T) over w = 1..ldim + 1."""
    top = ldim(version_space) + 1
    scored = [(aldim(version_space, w) + 2 * math.sqrt((w - 1) * horizon), w) for w in range(1, top + 1)]
    return min(scored)[1]


class AppleTreeWitness:
    """A concrete apple tree with an instance at every internal node.

    Leaves are None. A node with budget (w, d) is a leaf iff w == 0 or d == 0;
    otherwise its left child has budget (w, d - 1) and its right (w - 1, d - 1)."""

    def __init__(self, width, depth, root):
        self.width = width
        self.depth = depth
        self.root = root

    def is_valid_shape(self):
        def check(node, w, d):
            if w == 0 or d == 0:
                return node is None
            if node is None or not isinstance(node, AppleNode):
                return False
            return check(node.left, w, d - 1) and check(node.right, w - 1, d - 1)
        return check(self.root, self.width, self.depth)

    def paths(self):
        """Every root-to-leaf path as a list of (instance, edge label) pairs."""
        found = []

        def walk(node, prefix):
            if node is None:
                found.append(prefix)
                return
            walk(node.left, prefix + [(node.instance, 0)])
            walk(node.right, prefix + [(node.instance, 1)])

        walk(self.root, [])
        return found

    def node_at(self, prefix):
        """The node reached by following a bit sequence from the root, or None at a leaf."""
        node = self.root
        for bit in prefix:
            if node is None:
                raise DimensionError('path {} runs past a leaf'.format(list(prefix)))
            node = node.right if bit else node.left
        return node

    def to_dict(self):
        def dump(node):
            if node is None:
                return None
            return {'x': node.instance, '0': dump(node.left), '1': dump(node.right)}
        return {'width': self.width, 'depth': self.depth, 'root': dump(self.root)}

    @classmethod
    def from_dict(cls, data):
        def load(node):
            if node is None:
                return None
            return AppleNode(node['x'], load(node['0']), load(node['1']))
        return cls(data['width'], data['depth'], load(data['root']))

    def __repr__(self):
        return 'AppleTreeWitness(w={}, d={})'.format(self.width, self.depth)


def witness_tree(version_space, w, d):
    """A shattered width-w, depth-d tree, lowest feasible instance first at every node, or None."""
    if w < 1 or d < 0:
        raise DimensionError('witness needs w >= 1 and d >= 0, got w={} d={}'.format(w, d))

    hclass = version_space.hclass
    cache = cache_for(hclass)
    if not _shatters_mask(hclass, version_space.mask, w, d, cache):
        return None

    def build(mask, w, d):
        if w == 0 or d == 0:
            return None
        for x, ones_x in enumerate(hclass.ones):
            ones = mask & ones_x
            zeros = mask ^ ones
            if _shatters_mask(hclass, zeros, w, d - 1, cache) and _shatters_mask(hclass, ones, w - 1, d - 1, cache):
                return AppleNode(x, build(zeros, w, d - 1), build(ones, w - 1, d - 1))
        raise DimensionError('no feasible instance at budget (w={}, d={}) under a shattering mask'.format(w, d))

    tree = AppleTreeWitness(w, d, build(version_space.mask, w, d))
    log.debug('dims: built witness {} for {}'.format(tree, hclass.describe()))
    return tree


def verify_shattered(tree, version_space):
    """Check every root-to-leaf path against the version space by direct enumeration."""
    if not tree.is_valid_shape():
        return False

    hclass = version_space.hclass
    for path in tree.paths():
        mask = version_space.mask
        for x, bit in path:
            ones = hclass.ones[x]
            mask &= ones if bit else ~ones
        if not mask & hclass.full_mask:
            return False
    return True


def _tree_shape(w, d):
    """Internal node count and paths (as (node id, edge label) lists) of the width-w, depth-d apple tree."""
    paths = []
    counter = itertools.count()

    def walk(w, d, prefix):
        if w == 0 or d == 0:
            paths.append(prefix)
            return
        node = next(counter)
        walk(w, d - 1, prefix + [(node, 0)])
        walk(w - 1, d - 1, prefix + [(node, 1)])

    walk(w, d, [])
    return next(counter), paths


def _some_assignment_shatters(rows, instance_count, w, d):
    internal, paths = _tree_shape(w, d)
    assignments = np.array(list(itertools.product(range(instance_count), repeat=internal)), dtype=np.int64)

    shattered = np.ones(len(assignments), dtype=bool)
    for path in paths:
        consistent = np.ones((len(assignments), rows.shape[0]), dtype=bool)
        for node, bit in path:
            consistent &= rows[:, assignments[:, node]].T == bit
        shattered &= consistent.any(axis=1)
        if not shattered.any():
            return False
    return bool(shattered.any())


def brute_force_aldim(version_space, w):
    """AL_w by enumerating every instance assignment of each fixed tree shape.

    Independent of the memoized recursion; only usable on tiny classes."""
    _require_nonempty(version_space)
    if w < 1:
        raise DimensionError('width must be a positive integer, got {!r}'.format(w))

    hclass = version_space.hclass
    members = version_space.members
    max_instances = config.dimensions.get('oracle_max_instances', 4)
    max_hypotheses = config.dimensions.get('oracle_max_hypotheses', 8)
    if hclass.instance_count > max_instances or len(members) > max_hypotheses:
        raise CapExceededError('oracle is limited to |X| <= {} and |V| <= {}, got |X|={} |V|={}'.format(
            max_instances, max_hypotheses, hclass.instance_count, len(members)))

    rows = np.asarray(hclass.matrix[members], dtype=np.int64)
    best = 0
    for d in range(1, len(members) + w + 1):
        # distinct leaves need distinct hypotheses
        if leaf_count(w, d) > len(members):
            return best
        if not _some_assignment_shatters(rows, hclass.instance_count, w, d):
            return best
        best = d

    raise DimensionError('depth search passed |V| + w = {}; this is a bug'.format(len(members) + w))


def bounds(hclass, horizon):
    """Realizable lower and upper bounds on the minimax expected mistakes at horizon T."""
    universe = hclass.universe()
    L = ldim(universe)
    T = horizon
    lower_terms = {}
    upper_terms = {}
    for w in range(1, L + 2):
        al = aldim(universe, w)
        lower_terms[w] = math.sqrt(min(w, L, T) * min(al, T)) / 8
        upper_terms[w] = al + 2 * math.sqrt((w - 1) * T)

    W = effective_width(universe)
    return {
        'horizon': T,
        'lower': max(lower_terms.values()),
        'lower_by_width': lower_terms,
        'upper': min(upper_terms.values()),
        'upper_by_width': upper_terms,
        'upper_at_effective_width': upper_terms[W],
    }


def dimension_report(hclass, max_width=None, witness=False, witness_width=1, horizon=None):
    """Everything `dims` prints: ldim, AL_w by width, effective width, family metadata, witness."""
    universe = hclass.universe()
    L = ldim(universe)
    top = max_width or L + 1

    report = {
        'class': hclass.describe(),
        'hypotheses': hclass.size,
        'instances': hclass.instance_count,
        'ldim': L,
        'aldim_by_width': {str(w): aldim(universe, w) for w in range(1, top + 1)},
        'effective_width': effective_width(universe),
        'effective_width_family': effective_width_report(universe)['family'],
        'family': hclass.family_tag.to_dict() if hclass.family_tag else None,
    }

    if witness:
        depth = aldim(universe, witness_width)
        tree = witness_tree(universe, witness_width, depth)
        report['witness'] = tree.to_dict() if tree else None

    if horizon:
        report['bounds'] = {k: v for k, v in bounds(hclass, horizon).items()}

    log.info('dims: {}: ldim={} aldim={}'.format(hclass.describe(), L, report['aldim_by_width']))
    return report
