"""Sparse parity hashes h(x) = Ax + b over GF(2).

Rows of A and assignments are packed little-endian into uint64 words:
variable j (0-based, DIMACS variable j + 1) lives in word j // 64, bit j % 64.
Sampling uses numpy's PCG64 generator; the stream is consumed row-major over
A (one uniform double per entry, entry set iff the double is < f) and then one
integer draw per bit of b.
"""
import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from xorcount.comb import LogNum
from xorcount.errors import CapacityError, DimensionError, ParameterError

WORD_BITS = 64
SEED_MASK = (1 << 64) - 1
EXACT_SURVIVAL_MAX_BITS = 24
EXACT_DENSITY_BITS = 20
_SAMPLE_BLOCK_ROWS = 256
_SCAN_BLOCK = 1 << 16


def n_words(n):
    return max(1, -(-n // WORD_BITS))


def pack_rows(bits):
    """Pack a (rows, n) 0/1 array into (rows, words) uint64."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim == 1:
        bits = bits[None, :]
    rows, n = bits.shape
    packed = np.packbits(bits, axis=1, bitorder='little')
    padded = np.zeros((rows, n_words(n) * 8), dtype=np.uint8)
    padded[:, :packed.shape[1]] = packed
    return padded.view('<u8').astype(np.uint64)


def unpack_rows(words, n):
    words = np.ascontiguousarray(words, dtype='<u8')
    if words.ndim == 1:
        words = words[None, :]
    as_bytes = words.view(np.uint8).reshape(words.shape[0], -1)
    return np.unpackbits(as_bytes, axis=1, count=n, bitorder='little')


def ints_to_words(values, n):
    """Pack nonnegative Python ints (bit j = variable j) into (k, words) uint64."""
    words = n_words(n)
    if words == 1:
        arr = np.asarray(values, dtype=np.uint64).reshape(-1)
        if arr.size and (n < WORD_BITS and int(arr.max()) >> n):
            raise DimensionError(f"a value does not fit in {n} bits")
        return arr[:, None]
    out = np.zeros((len(values), words), dtype=np.uint64)
    mask = (1 << WORD_BITS) - 1
    for row, value in enumerate(values):
        if value < 0 or value >> n:
            raise DimensionError(f"value {value} does not fit in {n} bits")
        for w in range(words):
            out[row, w] = (value >> (WORD_BITS * w)) & mask
    return out


def _parity(words_matrix, rows):
    """Parity of popcount(x & row) for every x (k, W) and row (m, W) -> (k, m)."""
    anded = np.bitwise_and(words_matrix[:, None, :], rows[None, :, :])
    return (np.bitwise_count(anded).sum(axis=2, dtype=np.int64) & 1).astype(np.uint8)


def derive_seed(seed, trial_index):
    """Per-trial seed: master seed XOR the first 64 bits of blake2b(trial index)."""
    digest = hashlib.blake2b(int(trial_index).to_bytes(8, 'little', signed=False), digest_size=8)
    return (int(seed) & SEED_MASK) ^ int.from_bytes(digest.digest(), 'little')


@dataclass(frozen=True)
class HashParams:
    n: int
    m: int
    f: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ParameterError(f"hash needs n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        if self.m > self.n:
            raise ParameterError(f"m={self.m} exceeds n={self.n}")
        if not (0.0 <= self.f <= 0.5):
            raise ParameterError(f"density f must lie in [0, 1/2], got {self.f}")
        if not (0 <= self.seed <= SEED_MASK):
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


class Assignment:
    """One x in {0,1}^n, packed."""

    __slots__ = ('n', 'words')

    def __init__(self, words, n):
        words = np.array(words, dtype=np.uint64).reshape(-1)
        if words.shape[0] != n_words(n):
            raise DimensionError(f"{words.shape[0]} words cannot hold exactly {n} bits")
        words.setflags(write=False)
        self.n = n
        self.words = words

    @classmethod
    def from_bits(cls, bits):
        bits = list(bits)
        return cls(pack_rows(np.asarray(bits, dtype=np.uint8))[0], len(bits))

    @classmethod
    def from_int(cls, value, n):
        return cls(ints_to_words([value], n)[0], n)

    def to_bits(self):
        return tuple(int(b) for b in unpack_rows(self.words, self.n)[0])

    def to_int(self):
        return sum(int(w) << (WORD_BITS * i) for i, w in enumerate(self.words))

    def to_string(self):
        return ''.join(str(b) for b in self.to_bits())

    def __eq__(self, other):
        return isinstance(other, Assignment) and self.n == other.n and bool(np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.n, self.words.tobytes()))

    def __repr__(self):
        return f"Assignment({self.to_string()})"


class ExplicitSet:
    """A deduplicated set of n-bit assignments stored as packed rows."""

    def __init__(self, rows, n):
        rows = np.asarray(rows, dtype=np.uint64).reshape(-1, n_words(n))
        if rows.shape[0]:
            rows = np.unique(rows, axis=0)
        rows.setflags(write=False)
        self.n = n
        self.rows = rows

    @classmethod
    def from_ints(cls, values, n):
        return cls(ints_to_words(list(values), n), n)

    @classmethod
    def from_bits(cls, rows, n=None):
        rows = [list(r) for r in rows]
        if n is None:
            if not rows:
                raise DimensionError("cannot infer n from an empty set")
            n = len(rows[0])
        if any(len(r) != n for r in rows):
            raise DimensionError(f"every element must have width {n}")
        if not rows:
            return cls(np.zeros((0, n_words(n)), dtype=np.uint64), n)
        return cls(pack_rows(np.asarray(rows, dtype=np.uint8)), n)

    @classmethod
    def from_assignments(cls, assignments, n):
        assignments = list(assignments)
        if any(a.n != n for a in assignments):
            raise DimensionError(f"every element must have width {n}")
        if not assignments:
            return cls(np.zeros((0, n_words(n)), dtype=np.uint64), n)
        return cls(np.stack([a.words for a in assignments]), n)

    @classmethod
    def full_cube(cls, n):
        if n > 26:
            raise CapacityError(f"full cube of width {n} is too large to list", estimate=1 << n)
        return cls(np.arange(1 << n, dtype=np.uint64)[:, None], n)

    @classmethod
    def random_subset(cls, n, k, seed):
        """k distinct elements of {0,1}^n chosen uniformly (n <= 62)."""
        if n > 62:
            raise CapacityError(f"random subsets are limited to n <= 62, got {n}")
        if k > (1 << n):
            raise ParameterError(f"cannot choose {k} distinct elements from 2^{n}")
        rng = np.random.Generator(np.random.PCG64(seed))
        values = rng.choice(1 << n, size=k, replace=False) if n <= 24 else _sparse_choice(rng, n, k)
        return cls.from_ints([int(v) for v in values], n)

    def __len__(self):
        return int(self.rows.shape[0])

    def __iter__(self):
        for row in self.rows:
            yield Assignment(row, self.n)

    def __contains__(self, x):
        if x.n != self.n or not len(self):
            return False
        return bool(np.any(np.all(self.rows == x.words[None, :], axis=1)))

    def to_ints(self):
        if self.rows.shape[1] == 1:
            return [int(v) for v in self.rows[:, 0]]
        return [Assignment(row, self.n).to_int() for row in self.rows]


def _sparse_choice(rng, n, k):
    chosen = set()
    while len(chosen) < k:
        chosen.update(int(v) for v in rng.integers(0, 1 << n, size=k - len(chosen), dtype=np.uint64))
    return sorted(chosen)


class ParityHash:
    """h_{A,b}; immutable, with A packed as (m, words) uint64."""

    __slots__ = ('n', 'a', 'b', 'params')

    def __init__(self, a, b, n, params=None):
        a = np.array(a, dtype=np.uint64).reshape(-1, n_words(n))
        b = np.array(b, dtype=np.uint8).reshape(-1)
        if a.shape[0] != b.shape[0]:
            raise DimensionError(f"A has {a.shape[0]} rows but b has {b.shape[0]} bits")
        a.setflags(write=False)
        b.setflags(write=False)
        self.n = n
        self.a = a
        self.b = b
        self.params = params

    @classmethod
    def from_bits(cls, a_bits, b_bits):
        a_bits = np.asarray(a_bits, dtype=np.uint8)
        if a_bits.ndim == 1:
            a_bits = a_bits[None, :]
        return cls(pack_rows(a_bits), b_bits, a_bits.shape[1])

    @classmethod
    def identity(cls, n):
        """The m = 0 hash: every element survives."""
        return cls(np.zeros((0, n_words(n)), dtype=np.uint64), np.zeros(0, dtype=np.uint8), n)

    @property
    def m(self):
        return int(self.b.shape[0])

    def row_bits(self):
        return unpack_rows(self.a, self.n) if self.m else np.zeros((0, self.n), dtype=np.uint8)

    def row_support(self, i):
        """0-based columns of row i with a nonzero coefficient."""
        return [int(j) for j in np.flatnonzero(unpack_rows(self.a[i], self.n)[0])]

    def to_bytes(self):
        header = self.n.to_bytes(4, 'little') + self.m.to_bytes(4, 'little')
        return header + self.a.astype('<u8').tobytes() + self.b.tobytes()

    def digest(self):
        return hashlib.blake2b(self.to_bytes(), digest_size=16).hexdigest()

    def __eq__(self, other):
        return isinstance(other, ParityHash) and self.to_bytes() == other.to_bytes()

    def __hash__(self):
        return hash(self.to_bytes())

    def __repr__(self):
        return f"ParityHash(n={self.n}, m={self.m}, digest={self.digest()[:12]})"


def sample_hash(params):
    """Draw h from the f-sparse family, bit-reproducible per (params, seed)."""
    if not isinstance(params, HashParams):
        raise ParameterError("sample_hash expects HashParams")
    rng = np.random.Generator(np.random.PCG64(params.seed))
    blocks = []
    for start in range(0, params.m, _SAMPLE_BLOCK_ROWS):
        rows = min(_SAMPLE_BLOCK_ROWS, params.m - start)
        blocks.append(pack_rows(rng.random((rows, params.n)) < params.f))
    a = np.concatenate(blocks, axis=0)
    b = rng.integers(0, 2, size=params.m, dtype=np.uint8)
    return ParityHash(a, b, params.n, params)


def apply_hash(h, x):
    """(Ax + b) mod 2 as a tuple of m bits."""
    if x.n != h.n:
        raise DimensionError(f"assignment has width {x.n}, hash expects {h.n}")
    if not h.m:
        return ()
    parity = _parity(x.words[None, :], h.a)[0]
    return tuple(int(v) for v in parity ^ h.b)


def survivor_mask(h, s):
    """Boolean mask over the rows of an ExplicitSet: h(x) = 0."""
    if s.n != h.n:
        raise DimensionError(f"set has width {s.n}, hash expects {h.n}")
    k = len(s)
    if not h.m or not k:
        return np.ones(k, dtype=bool)
    out = np.empty(k, dtype=bool)
    step = max(1, _SCAN_BLOCK // max(1, h.m))
    for start in range(0, k, step):
        block = s.rows[start:start + step]
        out[start:start + step] = np.all(_parity(block, h.a) == h.b[None, :], axis=1)
    return out


def count_survivors(h, s):
    """|S intersect h^-1(0)|."""
    if not isinstance(s, ExplicitSet):
        s = ExplicitSet.from_assignments(s, h.n)
    return int(np.count_nonzero(survivor_mask(h, s)))


def _exact_density(f):
    if not (0.0 <= f <= 0.5):
        raise ParameterError(f"density f must lie in [0, 1/2], got {f}")
    value = Fraction(f)
    numerator = value.numerator
    while numerator and numerator % 2 == 0:
        numerator //= 2
    if numerator.bit_length() > EXACT_DENSITY_BITS:
        raise ParameterError(f"f={f} needs more than {EXACT_DENSITY_BITS} significand bits for exact weights")
    return value


def _image_size_counts(s, m):
    """Sum of |A S| over all m x n matrices A, grouped by popcount(A)."""
    n = s.n
    mn = m * n
    xs = np.asarray(s.to_ints(), dtype=np.uint64)
    row_values = np.arange(1 << n, dtype=np.uint64)
    # parity of <r, x> for every candidate row r and every element x
    parity = (np.bitwise_count(row_values[:, None] & xs[None, :]) & 1).astype(np.uint32)
    row_weight = np.bitwise_count(row_values).astype(np.int64)
    counts = np.zeros(mn + 1, dtype=np.int64)
    total = 1 << mn
    step = max(1, (1 << 20) // max(1, len(xs)))
    row_mask = np.uint64((1 << n) - 1)
    for start in range(0, total, step):
        idx = np.arange(start, min(total, start + step), dtype=np.uint64)
        codes = np.zeros((idx.shape[0], len(xs)), dtype=np.uint32)
        weight = np.zeros(idx.shape[0], dtype=np.int64)
        for i in range(m):
            r = ((idx >> np.uint64(i * n)) & row_mask).astype(np.intp)
            codes |= parity[r] << np.uint32(i)
            weight += row_weight[r]
        codes.sort(axis=1)
        images = 1 + np.count_nonzero(np.diff(codes, axis=1), axis=1)
        np.add.at(counts, weight, images)
    return counts


def exact_survival_fraction(s, m, f):
    """Pr[S(h) >= 1] over all (A, b), exactly, as a Fraction.

    For a fixed A the probability over b is |A S| / 2^m, so only the image
    sizes need enumerating, grouped by the number of ones in A.
    """
    n = s.n
    if m < 1 or m > n:
        raise ParameterError(f"need 1 <= m <= n, got m={m}, n={n}")
    if m * n + m > EXACT_SURVIVAL_MAX_BITS:
        raise CapacityError(f"mn + m = {m * n + m} exceeds {EXACT_SURVIVAL_MAX_BITS}",
                            estimate=1 << (m * n + m))
    p = _exact_density(f)
    if not len(s):
        return Fraction(0)
    counts = _image_size_counts(s, m)
    mn = m * n
    total = sum(int(counts[k]) * p ** k * (1 - p) ** (mn - k) for k in range(mn + 1))
    return total / (1 << m)


def exact_survival_probability(s, m, f):
    return LogNum.from_fraction(exact_survival_fraction(s, m, f))


def empirical_survival_rate(s, m, f, trials, seed):
    """Fraction of sampled hashes with S(h) >= 1 and its standard error."""
    hits = 0
    for k in range(trials):
        h = sample_hash(HashParams(s.n, m, f, derive_seed(seed, k)))
        hits += bool(survivor_mask(h, s).any())
    rate = hits / trials
    return rate, math.sqrt(max(rate * (1 - rate), 1e-12) / trials)
