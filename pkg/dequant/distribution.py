"""
Outcome distributions shared by every backend.

``Distribution`` is an explicit bitstring -> probability (exact mode) or
bitstring -> count (empirical mode) map. ``ProductDistribution`` keeps the
block factors produced by the block-product backend so that wide separable
circuits can be queried and sampled without listing 2^n outcomes.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType

import numpy as np
import pandas as pd
from django.conf import settings

from .exceptions import ResourceLimitError
from .rng import chunk_rng, chunk_sizes

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    EXACT = 'exact'
    EMPIRICAL = 'empirical'


@dataclass(frozen=True)
class Distribution:
    outcomes: dict
    mode: Mode = Mode.EXACT
    shots: int = None

    def __post_init__(self):
        object.__setattr__(self, 'mode', Mode(self.mode))
        object.__setattr__(self, 'outcomes', MappingProxyType(dict(sorted(self.outcomes.items()))))
        if len({len(bits) for bits in self.outcomes}) > 1:
            raise ValueError("outcome strings must all have the same width")

        if self.mode is Mode.EMPIRICAL:
            total = sum(self.outcomes.values())
            if self.shots is None:
                object.__setattr__(self, 'shots', total)
            elif total != self.shots:
                raise ValueError(f"counts sum to {total}, expected {self.shots} shots")
        elif self.outcomes:
            total = math.fsum(self.outcomes.values())
            if abs(total - 1.0) > settings.DEQUANT_DISTRIBUTION_TOLERANCE:
                raise ValueError(f"probabilities sum to {total!r}")

    @classmethod
    def exact(cls, probabilities):
        """Drop outcomes below the probability cutoff and renormalise."""
        cutoff = settings.DEQUANT_PROBABILITY_CUTOFF
        kept = {bits: float(p) for bits, p in probabilities.items() if p > cutoff}
        if not kept:
            raise ValueError("no outcome has probability above the cutoff")
        total = math.fsum(kept.values())
        if abs(total - 1.0) > settings.DEQUANT_DISTRIBUTION_TOLERANCE:
            raise ValueError(f"probabilities sum to {total!r}")
        return cls({bits: p / total for bits, p in kept.items()}, Mode.EXACT)

    @classmethod
    def empirical(cls, counts):
        kept = {bits: int(c) for bits, c in counts.items() if c}
        return cls(kept, Mode.EMPIRICAL, sum(kept.values()))

    @classmethod
    def from_dict(cls, data):
        return cls(data['outcomes'], Mode(data['mode']), data.get('shots'))

    @property
    def is_exact(self):
        return self.mode is Mode.EXACT

    @property
    def width(self):
        return len(next(iter(self.outcomes))) if self.outcomes else 0

    def probabilities(self):
        if self.is_exact:
            return dict(self.outcomes)
        return {bits: count / self.shots for bits, count in self.outcomes.items()}

    def probability(self, bits):
        return self.probabilities().get(bits, 0.0)

    def sample(self, shots, seed):
        """Draw ``shots`` outcomes in-process, chunk by chunk."""
        outcomes = list(self.outcomes)
        weights = list(self.probabilities().values())
        sizes = chunk_sizes(shots, settings.DEQUANT_SHOT_CHUNK)
        parts = [sample_chunk(outcomes, weights, seed, chunk, size) for chunk, size in enumerate(sizes)]
        return Distribution.empirical(merge_counts(parts))

    def to_dict(self):
        data = {'mode': self.mode.value, 'outcomes': dict(self.outcomes)}
        if not self.is_exact:
            data['shots'] = self.shots
        return data

    def to_frame(self):
        frame = pd.DataFrame(
            {'outcome': list(self.outcomes), 'probability': list(self.probabilities().values())}
        )
        if not self.is_exact:
            frame.insert(1, 'count', list(self.outcomes.values()))
        return frame


def sample_chunk(outcomes, probabilities, seed, chunk, size):
    """Counts for one sampling chunk; depends only on (seed, chunk, size)."""
    weights = np.asarray(probabilities, dtype=float)
    weights = weights / weights.sum()
    draws = chunk_rng(seed, chunk).choice(len(outcomes), size=size, p=weights)
    counts = np.bincount(draws, minlength=len(outcomes))
    return {outcomes[i]: int(c) for i, c in enumerate(counts) if c}


def _packed_rows(bits):
    width = bits.shape[1]
    return np.ascontiguousarray(bits.astype(np.uint8) + ord('0')).view(f'S{width}').ravel()


def rows_to_strings(bits):
    """Rows of a 0/1 matrix as '010...' strings."""
    return [row.decode() for row in _packed_rows(bits)]


def count_rows(bits):
    rows = _packed_rows(bits)
    values, counts = np.unique(rows, return_counts=True)
    return {v.decode(): int(c) for v, c in zip(values, counts)}


def merge_counts(parts):
    merged = {}
    for part in parts:
        for bits, count in part.items():
            merged[bits] = merged.get(bits, 0) + count
    return merged


@dataclass(frozen=True, eq=False)
class ProductFactor:
    """Joint probabilities of ``qubits`` (first listed qubit is the high bit)."""

    qubits: tuple
    probabilities: np.ndarray

    def support(self):
        cutoff = settings.DEQUANT_PROBABILITY_CUTOFF
        return np.flatnonzero(self.probabilities > cutoff)


@dataclass(frozen=True, eq=False)
class ProductDistribution:
    qubits: tuple
    factors: tuple

    def __post_init__(self):
        covered = sorted(q for f in self.factors for q in f.qubits)
        if covered != sorted(self.qubits):
            raise ValueError("product factors must cover each measured qubit exactly once")

    @property
    def width(self):
        return len(self.qubits)

    def _positions(self):
        return {q: i for i, q in enumerate(self.qubits)}

    def marginal(self, qubit):
        for factor in self.factors:
            if qubit in factor.qubits:
                k = len(factor.qubits)
                axis = factor.qubits.index(qubit)
                table = factor.probabilities.reshape((2,) * k)
                others = tuple(a for a in range(k) if a != axis)
                return np.sum(table, axis=others) if others else table.copy()
        raise KeyError(f"qubit {qubit} is not measured")

    def marginals(self):
        return {q: self.marginal(q) for q in self.qubits}

    def probability(self, bits):
        if len(bits) != self.width:
            raise ValueError(f"expected {self.width} bits, got {len(bits)}")
        positions = self._positions()
        result = 1.0
        for factor in self.factors:
            index = 0
            for q in factor.qubits:
                index = (index << 1) | int(bits[positions[q]])
            result *= float(factor.probabilities[index])
        return result

    def support_size(self):
        return math.prod(len(f.support()) for f in self.factors)

    def expand(self):
        """Explicit Distribution; refuses when the support is too large to list."""
        limit = 2 ** settings.DEQUANT_MAX_EXPANDED_QUBITS
        size = self.support_size()
        if size > limit:
            raise ResourceLimitError(
                f"product distribution has {size} outcomes, more than the expansion limit {limit}"
            )
        positions = self._positions()
        probabilities = {}
        supports = [f.support() for f in self.factors]
        for choice in itertools.product(*supports):
            chars = ['0'] * self.width
            p = 1.0
            for factor, index in zip(self.factors, choice):
                k = len(factor.qubits)
                p *= float(factor.probabilities[index])
                for j, q in enumerate(factor.qubits):
                    chars[positions[q]] = '1' if (index >> (k - 1 - j)) & 1 else '0'
            probabilities[''.join(chars)] = p
        return Distribution.exact(probabilities)

    def sample_chunk(self, seed, chunk, size):
        rng = chunk_rng(seed, chunk)
        positions = self._positions()
        bits = np.zeros((size, self.width), dtype=np.uint8)
        for factor in self.factors:
            k = len(factor.qubits)
            weights = factor.probabilities / factor.probabilities.sum()
            draws = rng.choice(2 ** k, size=size, p=weights)
            for j, q in enumerate(factor.qubits):
                bits[:, positions[q]] = (draws >> (k - 1 - j)) & 1
        return count_rows(bits)

    def sample(self, shots, seed):
        sizes = chunk_sizes(shots, settings.DEQUANT_SHOT_CHUNK)
        parts = [self.sample_chunk(seed, chunk, size) for chunk, size in enumerate(sizes)]
        return Distribution.empirical(merge_counts(parts))

