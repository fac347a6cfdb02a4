"""
Problem-level suite: Deutsch-Jozsa function classes and circuits, quantum
and phase-bit solvers, the valid-function census, and the QFT with its
measure-as-you-go classical sampler.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
import pandas as pd
from django.conf import settings

from .circuit import Circuit, Gate, GateKind, TruthTable
from .dense import product_state, run_to_distribution
from .distribution import Distribution, count_rows, merge_counts
from .exceptions import BackendFailure, InvalidFunctionError
from .phasebit import Axis, dequantised_readings, phase_vector_separable, phases_of, readings_to_outcome
from .rng import chunk_rng, chunk_sizes
from .runner import run_backend

logger = logging.getLogger(__name__)

CENSUS_MAX_INPUTS = 16
ENUMERATION_MAX_INPUTS = 4


class FunctionTag(str, Enum):
    CONSTANT = 'CONSTANT'
    BALANCED = 'BALANCED'
    INVALID = 'INVALID'


@dataclass(frozen=True)
class FunctionClass:
    tag: FunctionTag
    value: int = None

    @property
    def is_valid(self):
        return self.tag is not FunctionTag.INVALID

    def __str__(self):
        if self.tag is FunctionTag.CONSTANT:
            return f"CONSTANT({self.value})"
        return self.tag.value


def classify_function(f):
    ones = sum(f.values)
    if ones == 0 or ones == len(f):
        return FunctionClass(FunctionTag.CONSTANT, f.values[0])
    if 2 * ones == len(f):
        return FunctionClass(FunctionTag.BALANCED)
    return FunctionClass(FunctionTag.INVALID)


def truth_tables(n):
    """Every function on n inputs, in lexicographic order of its bits."""
    if not 1 <= n <= ENUMERATION_MAX_INPUTS:
        raise ValueError(f"enumeration supports 1..{ENUMERATION_MAX_INPUTS} inputs, got {n}")
    for values in itertools.product((0, 1), repeat=2 ** n):
        yield TruthTable(n, values)


@dataclass(frozen=True)
class CensusReport:
    n: int
    n_constant: int
    n_balanced: int
    n_invalid: int
    p_valid: Fraction

    @property
    def total(self):
        return self.n_constant + self.n_balanced + self.n_invalid


def function_census(n):
    if not 1 <= n <= CENSUS_MAX_INPUTS:
        raise ValueError(f"census supports 1..{CENSUS_MAX_INPUTS} inputs, got {n}")
    size = 2 ** n
    total = 2 ** size
    balanced = math.comb(size, size // 2)
    return CensusReport(n, 2, balanced, total - balanced - 2, Fraction(balanced + 2, total))


def census_table(max_n):
    if max_n < 1:
        raise ValueError(f"census needs at least one input, got {max_n}")
    rows = []
    for n in range(1, max_n + 1):
        report = function_census(n)
        rows.append({
            'n': n,
            'constant': report.n_constant,
            'balanced': report.n_balanced,
            'invalid': report.n_invalid,
            'p_valid': str(report.p_valid),
            'p_valid_float': float(report.p_valid),
        })
    return pd.DataFrame(rows, columns=['n', 'constant', 'balanced', 'invalid', 'p_valid', 'p_valid_float'])


def build_dj_circuit(n, oracle='f'):
    """X on the ancilla, H everywhere, the oracle, H everywhere, measure the inputs."""
    if n < 1:
        raise ValueError(f"Deutsch-Jozsa needs at least one input, got {n}")
    everyone = range(n + 1)
    gates = [Gate(GateKind.X, (n,))]
    gates += [Gate(GateKind.H, (q,)) for q in everyone]
    gates.append(Gate(GateKind.ORACLE, tuple(everyone), oracle=oracle))
    gates += [Gate(GateKind.H, (q,)) for q in everyone]
    gates.append(Gate(GateKind.MEASURE, tuple(range(n))))
    return Circuit(n + 1, tuple(gates))


def _require_valid(f):
    function_class = classify_function(f)
    if not function_class.is_valid:
        raise InvalidFunctionError(f"tt {f.bits} is neither constant nor balanced")
    return function_class


@dataclass
class QuantumSolution:
    tag: FunctionTag
    outcome: str
    backend: str
    distribution: Distribution


def dj_quantum_solve(f, backend='dense', cap=None, shots=None, seed=None):
    """
    Run the Deutsch-Jozsa circuit for ``f`` on ``backend``. Strong runs read
    the probability of all-zeros; weak runs (``shots`` given) use the most
    frequent sampled outcome.
    """
    _require_valid(f)
    circuit = build_dj_circuit(f.n_inputs).bind_oracles({'f': f})
    exact = shots is None
    result = run_backend(circuit, backend, cap=cap, shots=shots, seed=seed, exact=exact)
    if result.failed:
        raise BackendFailure(result.reason, result.detail)

    distribution = result.distribution
    zeros = '0' * f.n_inputs
    probabilities = distribution.probabilities()
    outcome = max(probabilities, key=lambda bits: (probabilities[bits], bits))
    if exact:
        constant = probabilities.get(zeros, 0.0) >= 1 - settings.DEQUANT_DISTRIBUTION_TOLERANCE
    else:
        constant = outcome == zeros
    tag = FunctionTag.CONSTANT if constant else FunctionTag.BALANCED
    logger.info(f"tt {f.bits} on {backend}: {tag.value}, outcome {outcome}")
    return QuantumSolution(tag, outcome, str(result.backend), distribution)


@dataclass
class DequantisedSolution:
    tag: FunctionTag
    readings: tuple
    exponents: tuple
    f00: int
    truth_table: TruthTable

    @property
    def outcome(self):
        return readings_to_outcome(self.readings)


def dj_dequantised_solve(f):
    """
    Solve with phase bits. Beyond constant/balanced, the axis of each pair
    gives one XOR of neighbouring values and the shared sign gives f at the
    all-zeros input, which together pin down the whole truth table.
    """
    if f.n_inputs not in (1, 2):
        raise ValueError(f"the phase-bit solver handles 1 or 2 inputs, got {f.n_inputs}")
    _require_valid(f)
    readings = dequantised_readings(f)
    exponents = tuple(1 if r.axis is Axis.REAL else 0 for r in readings)
    f00 = 0 if readings[0].sign > 0 else 1

    if f.n_inputs == 1:
        values = (f00, f00 ^ exponents[0])
    else:
        f10 = f00 ^ exponents[0]
        f11 = f10 ^ exponents[1]
        values = (f00, f00 ^ f11 ^ f10, f10, f11)
    tag = FunctionTag.BALANCED if any(exponents) else FunctionTag.CONSTANT
    return DequantisedSolution(tag, readings, exponents, f00, TruthTable(f.n_inputs, values))


def build_factorised_dj_circuit(f):
    """
    The Deutsch-Jozsa circuit with the black box replaced by one Z per input
    whose sign factor is (1, -1). Only separable valid functions qualify.
    """
    _require_valid(f)
    factorisation = phase_vector_separable(phases_of(f))
    if factorisation is None:
        raise InvalidFunctionError(f"tt {f.bits} does not factor into single-input phases")
    n = f.n_inputs
    everyone = range(n + 1)
    gates = [Gate(GateKind.X, (n,))]
    gates += [Gate(GateKind.H, (q,)) for q in everyone]
    gates += [Gate(GateKind.Z, (q,)) for q, (_, c) in enumerate(factorisation.factors) if c < 0]
    gates += [Gate(GateKind.H, (q,)) for q in everyone]
    gates.append(Gate(GateKind.MEASURE, tuple(range(n))))
    return Circuit(n + 1, tuple(gates))


def qft_circuit(n, measure=True):
    """
    QFT over n qubits without the final swaps: qubit j gets H followed by
    RK(m - j + 1) controlled by every later qubit m.
    """
    if n < 1:
        raise ValueError(f"QFT needs at least one qubit, got {n}")
    gates = []
    for j in range(n):
        gates.append(Gate(GateKind.H, (j,)))
        for m in range(j + 1, n):
            gates.append(Gate(GateKind.RK, (m, j), k=m - j + 1))
    if measure:
        gates.append(Gate(GateKind.MEASURE, tuple(range(n))))
    return Circuit(n, tuple(gates))


def _check_product_input(inputs):
    states = np.asarray(inputs, dtype=complex)
    if states.ndim != 2 or states.shape[1] != 2 or len(states) == 0:
        raise ValueError("input must be a non-empty list of single-qubit states (pairs of amplitudes)")
    norms = np.sum(np.abs(states) ** 2, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > settings.DEQUANT_NORM_TOLERANCE)
    if len(bad):
        raise ValueError(f"input state for qubit {int(bad[0])} is not normalised (norm^2 {norms[bad[0]]:.6g})")
    return states


def _semiclassical_bits(states, rng, size):
    """
    Sample ``size`` QFT outcomes of a product input one qubit at a time.
    ``phase`` accumulates the rotation sum over earlier measured bits, so each
    qubit costs O(1) per sample.
    """
    n = len(states)
    bits = np.zeros((size, n), dtype=np.uint8)
    phase = np.zeros(size)
    for m in range(n):
        zero, one = states[m]
        rotated = one * np.exp(2j * np.pi * phase)
        p_one = np.abs(zero - rotated) ** 2 / 2
        outcome = rng.random(size) < p_one
        bits[:, m] = outcome
        phase = (phase + outcome / 2) / 2
    return bits


def semiclassical_qft_sample(inputs, rng):
    states = _check_product_input(inputs)
    bits = _semiclassical_bits(states, rng, 1)[0]
    return ''.join(str(b) for b in bits)


def semiclassical_qft_counts(inputs, shots, seed):
    states = _check_product_input(inputs)
    sizes = chunk_sizes(shots, settings.DEQUANT_SHOT_CHUNK)
    parts = [count_rows(_semiclassical_bits(states, chunk_rng(seed, chunk), size)) for chunk, size in enumerate(sizes)]
    return Distribution.empirical(merge_counts(parts))


def semiclassical_qft_probabilities(inputs):
    """Exact distribution of the semiclassical procedure, enumerating every bit history."""
    states = _check_product_input(inputs)
    histories = {'': (1.0, 0.0)}
    for zero, one in states:
        following = {}
        for prefix, (weight, phase) in histories.items():
            rotated = one * np.exp(2j * np.pi * phase)
            p_one = float(abs(zero - rotated) ** 2 / 2)
            for bit, p in ((0, 1.0 - p_one), (1, p_one)):
                if weight * p > settings.DEQUANT_PROBABILITY_CUTOFF:
                    following[prefix + str(bit)] = (weight * p, (phase + bit / 2) / 2)
        histories = following
    return Distribution.exact({bits: weight for bits, (weight, _) in histories.items()})


def qft_reference_distribution(inputs):
    """The QFT outcome distribution of a product input on the dense simulator."""
    states = _check_product_input(inputs)
    return run_to_distribution(qft_circuit(len(states)), initial=product_state(states))
