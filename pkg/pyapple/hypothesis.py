import itertools
import math
from collections import namedtuple

import numpy as np

from pyapple import log, config


STATED = 'stated'
DERIVED = 'derived'

# scope of a metadata value: the named (infinite) family, or the finite truncation we actually built
FAMILY = 'family'
TRUNCATION = 'truncation'

FAMILIES = ('singletons', 'flipped_singletons', 'kwise', 'powerset')


class ClassError(ValueError):
    pass


class CapExceededError(Exception):
    pass


DimensionValue = namedtuple('DimensionValue', ['value', 'provenance', 'scope', 'note'])


def popcount(mask):
    return bin(mask).count('1')


def mask_members(mask):
    """Indices of the set bits of a version-space mask, lowest first."""
    members = []
    i = 0
    while mask:
        if mask & 1:
            members.append(i)
        mask >>= 1
        i += 1
    return members


class FamilyDimensionEntry:
    """Closed-form dimension values for a named family.

    Values are labeled with where they come from (stated in the literature or
    derived here) and whether they describe the infinite family or the finite
    truncation. They are reported next to computed values, never in place of them."""

    def __init__(self, name, parameters, values):
        self.name = name
        self.parameters = dict(parameters)
        self.values = dict(values)

    def get(self, key):
        return self.values.get(key)

    def value(self, key, default=None):
        entry = self.values.get(key)
        return entry.value if entry else default

    def to_dict(self):
        return {
            'family': self.name,
            'parameters': self.parameters,
            'values': {
                key: {
                    'value': _json_number(entry.value),
                    'provenance': entry.provenance,
                    'scope': entry.scope,
                    'note': entry.note,
                } for key, entry in sorted(self.values.items())
            }
        }

    def __repr__(self):
        return 'FamilyDimensionEntry({}, {})'.format(self.name, self.parameters)


def _json_number(value):
    if isinstance(value, float) and math.isinf(value):
        return 'inf'
    return value


class HypothesisClass:
    """A finite binary class as an |H| x |X| matrix.

    Rows are distinct. Column x is also kept as a bitmask over hypotheses
    so projections of a version space are a single AND."""

    def __init__(self, matrix, family_tag=None):
        matrix = np.array(matrix, dtype=np.uint8)
        matrix.flags.writeable = False

        self.matrix = matrix
        self.size, self.instance_count = matrix.shape
        self.family_tag = family_tag
        self.full_mask = (1 << self.size) - 1

        ones = []
        for x in range(self.instance_count):
            column_mask = 0
            for h in np.flatnonzero(matrix[:, x]):
                column_mask |= 1 << int(h)
            ones.append(column_mask)
        self.ones = tuple(ones)

        self._key = (self.size, self.instance_count, matrix.tobytes())

    @property
    def hypotheses(self):
        return [tuple(int(v) for v in row) for row in self.matrix]

    def universe(self):
        return VersionSpace(self, self.full_mask)

    def version_space(self, members=None):
        if members is None:
            return self.universe()
        mask = 0
        for h in members:
            if not 0 <= h < self.size:
                raise ClassError('hypothesis index {} out of range for class of size {}'.format(h, self.size))
            mask |= 1 << h
        return VersionSpace(self, mask)

    def label(self, h, x):
        return int(self.matrix[h, x])

    def describe(self):
        if self.family_tag:
            params = ', '.join('{}={}'.format(k, v) for k, v in sorted(self.family_tag.parameters.items()))
            return '{}({})'.format(self.family_tag.name, params)
        return 'matrix({}x{})'.format(self.size, self.instance_count)

    def to_dict(self):
        if self.family_tag:
            data = {'family': self.family_tag.name}
            data.update(self.family_tag.parameters)
            return data
        return {'matrix': self.hypotheses}

    def __len__(self):
        return self.size

    def __eq__(self, other):
        return isinstance(other, HypothesisClass) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return 'HypothesisClass({})'.format(self.describe())


class VersionSpace:
    """A subset of a class, held as a bitmask over hypothesis indices."""

    __slots__ = ('hclass', 'mask')

    def __init__(self, hclass, mask):
        self.hclass = hclass
        self.mask = mask

    @property
    def members(self):
        return mask_members(self.mask)

    def is_empty(self):
        return self.mask == 0

    def project(self, x, y):
        ones = self.mask & self.hclass.ones[x]
        return VersionSpace(self.hclass, ones if y else self.mask ^ ones)

    def split(self, x):
        ones = self.mask & self.hclass.ones[x]
        return VersionSpace(self.hclass, self.mask ^ ones), VersionSpace(self.hclass, ones)

    def projection(self, x):
        """V(x): the set of labels members give to x."""
        ones = self.mask & self.hclass.ones[x]
        labels = set()
        if ones:
            labels.add(1)
        if self.mask ^ ones:
            labels.add(0)
        return frozenset(labels)

    def __contains__(self, h):
        return bool(self.mask >> h & 1)

    def __len__(self):
        return popcount(self.mask)

    def __eq__(self, other):
        return isinstance(other, VersionSpace) and self.mask == other.mask and self.hclass == other.hclass

    def __hash__(self):
        return hash((self.hclass, self.mask))

    def __repr__(self):
        return 'VersionSpace({}, members={})'.format(self.hclass.describe(), self.members)


class LabeledStream:
    """An ordered sequence of (instance, label) rounds."""

    def __init__(self, rounds):
        cleaned = []
        for t, item in enumerate(rounds):
            try:
                x, y = item
            except (TypeError, ValueError):
                raise ClassError('stream round {} is not an [instance, label] pair: {!r}'.format(t, item))
            try:
                valid = int(x) == x and x >= 0
            except (TypeError, ValueError):
                valid = False
            if not valid:
                raise ClassError('stream round {} has invalid instance {!r}'.format(t, x))
            if y not in (0, 1):
                raise ClassError('stream round {} has non-binary label {!r}'.format(t, y))
            cleaned.append((int(x), int(y)))
        self.rounds = tuple(cleaned)

    @property
    def instances(self):
        return np.array([x for x, _ in self.rounds], dtype=np.int64)

    @property
    def labels(self):
        return np.array([y for _, y in self.rounds], dtype=np.int64)

    def validate(self, hclass):
        for t, (x, _) in enumerate(self.rounds):
            if x >= hclass.instance_count:
                raise ClassError('stream round {} uses instance {} but the class only has {} instances'.format(
                    t, x, hclass.instance_count))
        return self

    def with_labels(self, labels):
        return LabeledStream(zip((x for x, _ in self.rounds), labels))

    def to_list(self):
        return [[x, y] for x, y in self.rounds]

    def __len__(self):
        return len(self.rounds)

    def __iter__(self):
        return iter(self.rounds)

    def __getitem__(self, item):
        return self.rounds[item]

    def __eq__(self, other):
        return isinstance(other, LabeledStream) and self.rounds == other.rounds

    def __hash__(self):
        return hash(self.rounds)

    def __repr__(self):
        return 'LabeledStream(T={})'.format(len(self.rounds))


def make_class(matrix, family_tag=None):
    """Build a deduplicated class from binary rows, keeping first occurrences in order."""
    if matrix is None or len(matrix) == 0:
        raise ClassError('hypothesis matrix is empty')

    width = None
    rows = []
    seen = set()
    for i, row in enumerate(matrix):
        row = list(row)
        if width is None:
            width = len(row)
            if width == 0:
                raise ClassError('row 0 has zero instances')
        elif len(row) != width:
            raise ClassError('row {} has {} entries, expected {}'.format(i, len(row), width))
        for value in row:
            if value not in (0, 1):
                raise ClassError('row {} has non-binary entry {!r}'.format(i, value))
        row = tuple(int(v) for v in row)
        if row in seen:
            continue
        seen.add(row)
        rows.append(row)

    max_hypotheses = config.hypothesis.get('max_hypotheses', 4096)
    if len(rows) > max_hypotheses:
        raise CapExceededError('class has {} hypotheses, cap is {}'.format(len(rows), max_hypotheses))

    if len(rows) < len(matrix):
        log.debug('hypothesis: dropped {} duplicate rows'.format(len(matrix) - len(rows)))

    return HypothesisClass(rows, family_tag=family_tag)


def project(version_space, x, y):
    return version_space.project(x, y)


def is_realizable(stream, hclass):
    """True iff some hypothesis agrees with every round of the stream."""
    if len(stream) == 0:
        return True
    stream.validate(hclass)
    agree = hclass.matrix[:, stream.instances] == stream.labels
    return bool(agree.all(axis=1).any())


def consistent_mask(stream, hclass):
    """Bitmask of the hypotheses that agree with every round of the stream."""
    mask = hclass.full_mask
    for x, y in stream:
        ones = hclass.ones[x]
        mask &= ones if y else ~ones
    return mask & hclass.full_mask


def _check_n(n, name='n'):
    if int(n) != n or n < 1:
        raise ClassError('{} must be a positive integer, got {!r}'.format(name, n))
    return int(n)


def family_singletons(n):
    n = _check_n(n)
    values = {
        'AL_1': DimensionValue(math.inf, STATED, FAMILY, None),
        'AL_2': DimensionValue(1, DERIVED, FAMILY, 'AL_w = L for w >= L + 1'),
        'W': DimensionValue(2, STATED, FAMILY, None),
    }
    if n >= 2:
        values['L'] = DimensionValue(1, STATED, FAMILY, None)
    tag = FamilyDimensionEntry('singletons', {'n': n}, values)
    return HypothesisClass(np.eye(n, dtype=np.uint8), family_tag=tag)


def family_flipped_singletons(n):
    n = _check_n(n)
    values = {
        'W': DimensionValue(1, DERIVED, FAMILY, 'learnable with at most one mistake'),
    }
    if n >= 2:
        values['L'] = DimensionValue(1, DERIVED, FAMILY, 'complement of the singletons')
        values['AL_1'] = DimensionValue(1, DERIVED, FAMILY, 'only h_x labels x with 0')
    tag = FamilyDimensionEntry('flipped_singletons', {'n': n}, values)
    return HypothesisClass(1 - np.eye(n, dtype=np.uint8), family_tag=tag)


def family_kwise(n, k):
    n = _check_n(n)
    k = _check_n(k, 'k')
    if k > n:
        raise ClassError('kwise family needs k <= n, got k={} n={}'.format(k, n))

    count = sum(math.comb(n, i) for i in range(k + 1))
    max_hypotheses = config.hypothesis.get('max_hypotheses', 4096)
    if count > max_hypotheses:
        raise CapExceededError('kwise(n={}, k={}) has {} hypotheses, cap is {}'.format(n, k, count, max_hypotheses))

    rows = []
    for size in range(k + 1):
        for subset in itertools.combinations(range(n), size):
            row = [0] * n
            for a in subset:
                row[a] = 1
            rows.append(row)

    values = {
        'L': DimensionValue(k, DERIVED, FAMILY, 'every path with k+1 ones needs k+1 distinct instances'),
        'AL_{}'.format(k): DimensionValue(math.inf, STATED, FAMILY, None),
        'W': DimensionValue(k + 1, STATED, FAMILY, None),
        'AL_{}'.format(k + 1): DimensionValue(0, STATED, FAMILY,
                                              'the width recursion gives k here; see DESIGN.md'),
    }
    tag = FamilyDimensionEntry('kwise', {'n': n, 'k': k}, values)
    return HypothesisClass(rows, family_tag=tag)


def family_powerset(d):
    d = _check_n(d, 'd')
    cap = config.hypothesis.get('powerset_cap', 12)
    if d > cap:
        raise CapExceededError('powerset(d={}) has 2^{} hypotheses, cap is d <= {}'.format(d, d, cap))

    rows = list(itertools.product((0, 1), repeat=d))
    values = {
        'L': DimensionValue(d, STATED, TRUNCATION, None),
        'AL_1': DimensionValue(d, STATED, TRUNCATION, None),
        'W': DimensionValue(1, DERIVED, TRUNCATION, 'finite class'),
    }
    tag = FamilyDimensionEntry('powerset', {'d': d}, values)
    return HypothesisClass(rows, family_tag=tag)


def load_class(description):
    """Build a class from its JSON description.

    Either {"matrix": [[0, 1], ...]} or {"family": "singletons", "n": 8}."""
    if not isinstance(description, dict):
        raise ClassError('class description must be an object, got {!r}'.format(type(description).__name__))

    if 'matrix' in description:
        return make_class(description['matrix'])

    family = description.get('family')
    try:
        if family == 'singletons':
            return family_singletons(description['n'])
        elif family == 'flipped_singletons':
            return family_flipped_singletons(description['n'])
        elif family == 'kwise':
            return family_kwise(description['n'], description['k'])
        elif family == 'powerset':
            return family_powerset(description['d'])
    except KeyError as e:
        raise ClassError('family {} is missing parameter {}'.format(family, e))

    raise ClassError('unknown class family {!r}, expected one of {}'.format(family, ', '.join(FAMILIES)))


def load_stream(data):
    if isinstance(data, dict):
        data = data.get('rounds', [])
    return LabeledStream(data)
