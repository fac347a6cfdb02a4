"""
Bounded-entanglement simulator.

The global state is kept as a product of entanglement blocks, each a dense
vector over its own qubits. A gate merges the blocks it touches, acts on the
merged block with the dense kernel, then single qubits are peeled back off
whenever the block factorises. A merge beyond the cap stops the run with a
CAP_EXCEEDED report.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from django.conf import settings

from .circuit import GateKind
from .dense import (
    StateVector,
    _oracle_table,
    apply_gate_tensor,
    marginal_probabilities,
    project,
    terminal_measurements,
)
from .distribution import Distribution, ProductDistribution, ProductFactor
from .exceptions import CapExceeded, ResourceLimitError

logger = logging.getLogger(__name__)


@dataclass
class Block:
    qubits: list
    amplitudes: np.ndarray

    @property
    def size(self):
        return len(self.qubits)

    def tensor(self):
        return self.amplitudes.reshape((2,) * self.size)


class BlockState:
    def __init__(self, n, cap):
        self.n = n
        self.cap = cap
        self.blocks = {}
        self.owner = [None] * n
        self.max_block_size = 0
        self.max_block_outside_oracles = 0
        self.memory_high_water = 0
        self._next_id = 0

    def add_block(self, qubits, amplitudes):
        block_id = self._next_id
        self._next_id += 1
        self.blocks[block_id] = Block(list(qubits), amplitudes)
        for q in qubits:
            self.owner[q] = block_id
        return block_id

    def amplitude_count(self):
        return sum(2 ** b.size for b in self.blocks.values())

    def partition(self):
        return sorted(sorted(b.qubits) for b in self.blocks.values())

    def copy(self):
        clone = BlockState(self.n, self.cap)
        clone.blocks = {i: Block(list(b.qubits), b.amplitudes.copy()) for i, b in self.blocks.items()}
        clone.owner = list(self.owner)
        clone.max_block_size = self.max_block_size
        clone.max_block_outside_oracles = self.max_block_outside_oracles
        clone.memory_high_water = self.memory_high_water
        clone._next_id = self._next_id
        return clone

    def to_statevector(self):
        if self.n > settings.DEQUANT_DENSE_MAX_QUBITS:
            raise ResourceLimitError(f"{self.n} qubits is beyond the dense cap")
        order = []
        amplitudes = np.ones(1, dtype=complex)
        for block in self.blocks.values():
            order.extend(block.qubits)
            amplitudes = np.kron(amplitudes, block.amplitudes)
        tensor = amplitudes.reshape((2,) * self.n)
        tensor = np.transpose(tensor, [order.index(q) for q in range(self.n)])
        return StateVector(self.n, tensor.reshape(-1))

    def _track(self, size, oracle):
        self.max_block_size = max(self.max_block_size, size)
        if not oracle:
            self.max_block_outside_oracles = max(self.max_block_outside_oracles, size)
        self.memory_high_water = max(self.memory_high_water, self.amplitude_count())


def init_product(n, bits, cap):
    if cap < 1:
        raise ValueError(f"block cap must be at least 1, got {cap}")
    if n < 1:
        raise ValueError(f"qubit count must be positive, got {n}")
    if len(bits) != n:
        raise ValueError(f"expected {n} bits, got {len(bits)}")
    state = BlockState(n, cap)
    for q, bit in enumerate(bits):
        amplitudes = np.zeros(2, dtype=complex)
        amplitudes[int(bit)] = 1.0
        state.add_block([q], amplitudes)
    state._track(1, oracle=False)
    return state


def _merge(state, block_ids):
    if len(block_ids) == 1:
        return block_ids[0]
    qubits = []
    amplitudes = np.ones(1, dtype=complex)
    for block_id in block_ids:
        block = state.blocks.pop(block_id)
        qubits.extend(block.qubits)
        amplitudes = np.kron(amplitudes, block.amplitudes)
    return state.add_block(qubits, amplitudes)


def apply_gate_block(state, gate, oracles=None, gate_index=None):
    """
    Apply a unitary gate in place and return ``state``.

    Raises CapExceeded without touching the state when the blocks the gate
    spans would merge into more than ``state.cap`` qubits.
    """
    if gate.is_measurement:
        raise ValueError("measurement gates are handled by run_blockstate")
    block_ids = list(dict.fromkeys(state.owner[q] for q in gate.qubits))
    size = sum(state.blocks[b].size for b in block_ids)
    if size > state.cap:
        raise CapExceeded(gate_index, size, state.cap)

    table = None
    if gate.kind is GateKind.ORACLE:
        table = _oracle_table(gate, oracles)
    block_id = _merge(state, block_ids)
    block = state.blocks[block_id]
    if len(block_ids) > 1:
        logger.debug(f"Gate {gate_index}: merged {len(block_ids)} blocks into {block.size} qubits")
    state._track(block.size, oracle=gate.kind is GateKind.ORACLE)

    axes = [block.qubits.index(q) for q in gate.qubits]
    block.amplitudes = apply_gate_tensor(block.tensor(), gate, axes, table).reshape(-1)
    split_blocks(state, block_id)
    return state


def _peel(block, axis, tolerance):
    """Return (qubit factor, remaining vector) if ``axis`` factors out, else None."""
    matrix = np.moveaxis(block.tensor(), axis, 0).reshape(2, -1)
    norms = np.linalg.norm(matrix, axis=1)
    pivot = int(np.argmax(norms))
    row, other = matrix[pivot], matrix[1 - pivot]
    scale = norms[pivot]
    if scale == 0:
        return None
    c = np.vdot(row, other) / (scale * scale)
    if np.linalg.norm(other - c * row) > tolerance:
        return None
    factor = np.empty(2, dtype=complex)
    factor[pivot] = scale
    factor[1 - pivot] = c * scale
    return factor, row / scale


def split_blocks(state, block_id):
    """Greedily peel single qubits off a block while it factorises."""
    tolerance = settings.DEQUANT_SPLIT_TOLERANCE
    block = state.blocks[block_id]
    peeled = True
    while peeled and block.size > 1:
        peeled = False
        for axis in range(block.size):
            result = _peel(block, axis, tolerance)
            if result is None:
                continue
            factor, rest = result
            qubit = block.qubits.pop(axis)
            block.amplitudes = rest
            state.add_block([qubit], factor)
            logger.debug(f"Split qubit {qubit} off a block, {block.size} qubits remain")
            peeled = True
            break
    return state


def measure_block_qubit(state, qubit, outcome):
    """Project ``qubit`` onto ``outcome`` in place; returns the Born probability."""
    block = state.blocks[state.owner[qubit]]
    axis = block.qubits.index(qubit)
    tensor = block.tensor()
    p = float(marginal_probabilities(tensor, [axis])[outcome])
    if p > 0:
        block.amplitudes = project(tensor, [axis], outcome).reshape(-1)
        split_blocks(state, state.owner[qubit])
    return p


class Verdict(str, Enum):
    DEQUANTISABLE = 'DEQUANTISABLE'
    WITHIN_CAP = 'WITHIN_CAP'
    CAP_EXCEEDED = 'CAP_EXCEEDED'


def logarithmic_bound(width):
    return max(1, math.ceil(math.log2(width)))


@dataclass
class BlockReport:
    verdict: Verdict
    width: int
    cap: int
    gate_count: int
    max_block_size: int = 0
    max_block_outside_oracles: int = 0
    memory_high_water: int = 0
    failing_gate: int = None
    attempted_size: int = None
    product: ProductDistribution = None
    mixture: Distribution = None
    partition: list = field(default_factory=list)

    @property
    def completed(self):
        return self.verdict is not Verdict.CAP_EXCEEDED

    @property
    def distribution(self):
        if self.mixture is not None:
            return self.mixture
        if self.product is not None:
            return self.product.expand()
        return None

    def to_dict(self):
        data = {
            'verdict': self.verdict.value,
            'width': self.width,
            'cap': self.cap,
            'gate_count': self.gate_count,
            'max_block_size': self.max_block_size,
            'max_block_outside_oracles': self.max_block_outside_oracles,
            'memory_high_water': self.memory_high_water,
        }
        if self.failing_gate is not None:
            data['failing_gate'] = self.failing_gate
            data['attempted_size'] = self.attempted_size
        return data


def _product_of(state, qubits):
    factors = []
    seen = set()
    wanted = set(qubits)
    for q in qubits:
        block_id = state.owner[q]
        if block_id in seen:
            continue
        seen.add(block_id)
        block = state.blocks[block_id]
        axes = [i for i, b in enumerate(block.qubits) if b in wanted]
        probs = marginal_probabilities(block.tensor(), axes)
        factors.append(ProductFactor(tuple(block.qubits[i] for i in axes), probs / probs.sum()))
    return ProductDistribution(tuple(qubits), tuple(factors))


def run_blockstate(circuit, input_bits=None, cap=None):
    """
    Strong simulation on the block-product representation.

    Without intermediate measurements the report carries a ProductDistribution
    read directly from the final blocks; otherwise every branch is expanded
    and mixed into an explicit Distribution.
    """
    if not circuit.measured_qubits:
        raise ValueError("circuit has no measure gate")
    circuit.require_oracles()
    cap = settings.DEQUANT_DEFAULT_BLOCK_CAP if cap is None else cap
    input_bits = input_bits or '0' * circuit.width
    state = init_product(circuit.width, input_bits, cap)
    terminal = terminal_measurements(circuit)
    cutoff = settings.DEQUANT_PROBABILITY_CUTOFF

    logger.info(f"Block-product run: {circuit.width} qubits, {circuit.gate_count} gates, cap {cap}")
    branches = [(1.0, state, {})]
    deferred = set()
    branched = False
    for index, gate in enumerate(circuit.gates):
        if gate.is_measurement:
            if index in terminal:
                deferred.update(gate.qubits)
                continue
            branched = True
            for q in gate.qubits:
                expanded = []
                for weight, branch, recorded in branches:
                    for outcome in (0, 1):
                        child = branch.copy()
                        p = measure_block_qubit(child, q, outcome)
                        if weight * p <= cutoff:
                            continue
                        expanded.append((weight * p, child, {**recorded, q: outcome}))
                branches = expanded
            continue
        try:
            for _, branch, _ in branches:
                apply_gate_block(branch, gate, circuit.oracles, gate_index=index)
        except CapExceeded as exc:
            logger.info(f"Cap exceeded at gate {index}: {exc}")
            worst = max(branches, key=lambda b: b[1].max_block_size)[1]
            return BlockReport(
                Verdict.CAP_EXCEEDED, circuit.width, cap, circuit.gate_count,
                max_block_size=max(worst.max_block_size, exc.size),
                max_block_outside_oracles=worst.max_block_outside_oracles,
                memory_high_water=worst.memory_high_water,
                failing_gate=index, attempted_size=exc.size,
            )

    final = [b for _, b, _ in branches]
    max_size = max(b.max_block_size for b in final)
    max_outside = max(b.max_block_outside_oracles for b in final)
    verdict = Verdict.DEQUANTISABLE if max_outside <= logarithmic_bound(circuit.width) else Verdict.WITHIN_CAP
    report = BlockReport(
        verdict, circuit.width, cap, circuit.gate_count,
        max_block_size=max_size,
        max_block_outside_oracles=max_outside,
        memory_high_water=max(b.memory_high_water for b in final),
        partition=final[0].partition(),
    )

    measured = circuit.measured_qubits
    deferred_order = tuple(sorted(deferred))
    if not branched:
        report.product = _product_of(final[0], deferred_order)
    else:
        outcomes = {}
        for weight, branch, recorded in branches:
            if deferred_order:
                local = _product_of(branch, deferred_order).expand().probabilities()
            else:
                local = {'': 1.0}
            for bits, p in local.items():
                values = dict(recorded)
                values.update(zip(deferred_order, (int(b) for b in bits)))
                key = ''.join(str(values[q]) for q in measured)
                outcomes[key] = outcomes.get(key, 0.0) + weight * p
        report.mixture = Distribution.exact(outcomes)
    logger.info(
        f"Block-product run finished: max block {max_size}, outside oracles {max_outside}, verdict {verdict.value}"
    )
    return report
