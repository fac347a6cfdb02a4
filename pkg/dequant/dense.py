"""
Dense statevector reference simulator.

The state of n qubits is a complex128 vector of length 2^n; gates act on the
vector viewed as an n-axis tensor where axis q is qubit q (qubit 0 is the
most significant bit). Every other backend is compared against it.
"""

import logging
from dataclasses import dataclass
from math import pi, sqrt

import numpy as np
from django.conf import settings

from .circuit import GateKind
from .distribution import Distribution, merge_counts
from .exceptions import DequantError, ResourceLimitError, UnresolvedOracleError
from .rng import shot_rng

logger = logging.getLogger(__name__)

_SQRT2_INV = 1 / sqrt(2)

SINGLE_QUBIT_MATRICES = {
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.T: np.array([[1, 0], [0, np.exp(1j * pi / 4)]], dtype=complex),
}


def rk_phase(k):
    """Phase applied by RK(k) to |11>: e^{2 pi i / 2^k}."""
    return np.exp(2j * pi / 2 ** k)


@dataclass
class StateVector:
    n: int
    amplitudes: np.ndarray

    def tensor(self):
        return self.amplitudes.reshape((2,) * self.n)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def copy(self):
        return StateVector(self.n, self.amplitudes.copy())


def _check_width(n):
    if n < 1:
        raise ValueError(f"qubit count must be positive, got {n}")
    cap = settings.DEQUANT_DENSE_MAX_QUBITS
    if n > cap:
        raise ResourceLimitError(
            f"dense backend refuses {n} qubits: 2^{n} amplitudes exceed the {cap}-qubit cap"
        )


def init_basis(n, bits):
    _check_width(n)
    if len(bits) != n:
        raise ValueError(f"expected {n} bits, got {len(bits)}")
    amplitudes = np.zeros(2 ** n, dtype=complex)
    amplitudes[int(bits, 2)] = 1.0
    return StateVector(n, amplitudes)


def product_state(vectors):
    """Tensor product of single-qubit states, qubit 0 first."""
    vectors = [np.asarray(v, dtype=complex) for v in vectors]
    _check_width(len(vectors))
    amplitudes = vectors[0]
    for v in vectors[1:]:
        amplitudes = np.kron(amplitudes, v)
    return StateVector(len(vectors), amplitudes)


def _slice(n, assignments):
    index = [slice(None)] * n
    for axis, value in assignments.items():
        index[axis] = value
    return tuple(index)


def apply_gate_tensor(tensor, gate, axes, table=None):
    """
    Apply a unitary gate to ``tensor`` (shape (2,)*m) on the given axes and
    return the new tensor. ``axes`` lines up with ``gate.qubits``; ``table``
    is the truth table for ORACLE gates.
    """
    m = tensor.ndim
    kind = gate.kind

    if kind in SINGLE_QUBIT_MATRICES:
        (axis,) = axes
        out = np.tensordot(SINGLE_QUBIT_MATRICES[kind], tensor, axes=([1], [axis]))
        return np.moveaxis(out, 0, axis)

    if kind is GateKind.CNOT:
        c, t = axes
        out = tensor.copy()
        out[_slice(m, {c: 1, t: 0})] = tensor[_slice(m, {c: 1, t: 1})]
        out[_slice(m, {c: 1, t: 1})] = tensor[_slice(m, {c: 1, t: 0})]
        return out

    if kind is GateKind.CZ:
        c, t = axes
        out = tensor.copy()
        out[_slice(m, {c: 1, t: 1})] *= -1
        return out

    if kind is GateKind.RK:
        c, t = axes
        out = tensor.copy()
        out[_slice(m, {c: 1, t: 1})] *= rk_phase(gate.k)
        return out

    if kind is GateKind.CCX:
        c1, c2, t = axes
        out = tensor.copy()
        out[_slice(m, {c1: 1, c2: 1, t: 0})] = tensor[_slice(m, {c1: 1, c2: 1, t: 1})]
        out[_slice(m, {c1: 1, c2: 1, t: 1})] = tensor[_slice(m, {c1: 1, c2: 1, t: 0})]
        return out

    if kind is GateKind.ORACLE:
        if table is None:
            raise DequantError(f"oracle {gate.oracle!r} applied without a truth table")
        k = len(axes) - 1
        front = list(range(k + 1))
        moved = np.moveaxis(tensor, list(axes), front)
        rest = moved.shape[k + 1:]
        flat = moved.reshape((2 ** k, 2, -1)).copy()
        flips = np.asarray(table.values, dtype=bool)
        flat[flips] = flat[flips][:, ::-1, :]
        return np.moveaxis(flat.reshape((2,) * (k + 1) + rest), front, list(axes))

    raise ValueError(f"{kind.value} is not a unitary gate")


def apply_gate(state, gate, oracles=None):
    if gate.is_measurement:
        raise ValueError("measurement gates go through measure_qubits")
    for q in gate.qubits:
        if not 0 <= q < state.n:
            raise ValueError(f"qubit index {q} out of range for {state.n} qubits")
    table = None
    if gate.kind is GateKind.ORACLE:
        table = _oracle_table(gate, oracles)
    tensor = apply_gate_tensor(state.tensor(), gate, gate.qubits, table)
    return StateVector(state.n, tensor.reshape(-1))


def _oracle_table(gate, oracles):
    if not oracles or gate.oracle not in oracles:
        raise UnresolvedOracleError(f"oracle {gate.oracle!r} has no truth table bound")
    return oracles[gate.oracle]


def marginal_probabilities(tensor, axes):
    """Joint probabilities of ``axes`` in the listed order, flattened."""
    probs = np.abs(tensor) ** 2
    others = tuple(a for a in range(tensor.ndim) if a not in axes)
    marginal = np.sum(probs, axis=others) if others else probs
    ordered = sorted(axes)
    marginal = np.transpose(marginal, [ordered.index(a) for a in axes])
    return marginal.reshape(-1)


def probabilities(state, qubits):
    return marginal_probabilities(state.tensor(), list(qubits))


def state_overlap(a, b):
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def project(tensor, axes, outcome):
    """Project ``axes`` onto ``outcome`` (an int, first axis high) and renormalise."""
    k = len(axes)
    out = tensor.copy()
    keep = _slice(tensor.ndim, {a: (outcome >> (k - 1 - j)) & 1 for j, a in enumerate(axes)})
    mask = np.zeros_like(out, dtype=bool)
    mask[keep] = True
    out[~mask] = 0
    norm = np.linalg.norm(out)
    if norm == 0:
        raise DequantError("cannot renormalise a zero-norm projection")
    return out / norm


def measure_qubits(state, qubits, rng):
    qubits = list(qubits)
    for q in qubits:
        if not 0 <= q < state.n:
            raise ValueError(f"qubit index {q} out of range for {state.n} qubits")
    tensor = state.tensor()
    probs = marginal_probabilities(tensor, qubits)
    total = probs.sum()
    if total == 0:
        raise DequantError("cannot measure a zero-norm state")
    outcome = int(rng.choice(len(probs), p=probs / total))
    bits = format(outcome, f'0{len(qubits)}b')
    collapsed = project(tensor, qubits, outcome)
    return bits, StateVector(state.n, collapsed.reshape(-1))


def terminal_measurements(circuit):
    """Indices of MEASURE gates whose qubits no later unitary gate touches."""
    touched = set()
    terminal = set()
    for index in range(len(circuit.gates) - 1, -1, -1):
        gate = circuit.gates[index]
        if gate.is_measurement:
            if not touched.intersection(gate.qubits):
                terminal.add(index)
        else:
            touched.update(gate.qubits)
    return terminal


def _require_measurement(circuit):
    if not circuit.measured_qubits:
        raise ValueError("circuit has no measure gate")


def run_to_distribution(circuit, initial=None):
    """
    Exact outcome distribution over the measured qubits (ascending order).

    Measurements that no later gate disturbs are read off the final state;
    intermediate ones branch over every outcome with non-negligible weight.
    """
    _require_measurement(circuit)
    circuit.require_oracles()
    state = initial.copy() if initial is not None else init_basis(circuit.width, '0' * circuit.width)
    if state.n != circuit.width:
        raise ValueError(f"initial state has {state.n} qubits, circuit has {circuit.width}")

    cutoff = settings.DEQUANT_PROBABILITY_CUTOFF
    terminal = terminal_measurements(circuit)
    deferred = set()
    # (weight, tensor, recorded bits per qubit)
    branches = [(1.0, state.tensor(), {})]

    logger.info(f"Dense run: {circuit.width} qubits, {circuit.gate_count} gates")
    for index, gate in enumerate(circuit.gates):
        if not gate.is_measurement:
            table = circuit.truth_table(gate.oracle) if gate.kind is GateKind.ORACLE else None
            branches = [(w, apply_gate_tensor(t, gate, gate.qubits, table), r) for w, t, r in branches]
            continue
        if index in terminal:
            deferred.update(gate.qubits)
            continue

        expanded = []
        for weight, tensor, recorded in branches:
            probs = marginal_probabilities(tensor, list(gate.qubits))
            for outcome, p in enumerate(probs):
                if weight * p <= cutoff:
                    continue
                bits = format(outcome, f'0{len(gate.qubits)}b')
                record = dict(recorded)
                record.update(zip(gate.qubits, (int(b) for b in bits)))
                expanded.append((weight * p, project(tensor, list(gate.qubits), outcome), record))
        logger.debug(f"Gate {index}: intermediate measurement, {len(branches)} -> {len(expanded)} branches")
        branches = expanded

    measured = circuit.measured_qubits
    deferred_order = sorted(deferred)
    outcomes = {}
    for weight, tensor, recorded in branches:
        drift = abs(np.linalg.norm(tensor) - 1.0)
        if drift > settings.DEQUANT_NORM_TOLERANCE:
            logger.warning(f"Statevector norm drifted by {drift:.3e}")
        if deferred_order:
            probs = marginal_probabilities(tensor, deferred_order)
        else:
            probs = np.ones(1)
        for outcome, p in enumerate(probs):
            if weight * p <= cutoff:
                continue
            values = dict(recorded)
            if deferred_order:
                bits = format(outcome, f'0{len(deferred_order)}b')
                values.update(zip(deferred_order, (int(b) for b in bits)))
            key = ''.join(str(values[q]) for q in measured)
            outcomes[key] = outcomes.get(key, 0.0) + weight * float(p)
    return Distribution.exact(outcomes)


def sample_run(circuit, shots, seed):
    """
    Weak mode: draw ``shots`` outcomes. Circuits whose measurements are all
    terminal sample the final state once; otherwise each shot is simulated
    with its own derived generator and real collapses.
    """
    _require_measurement(circuit)
    terminal = terminal_measurements(circuit)
    measure_indices = {i for i, g in enumerate(circuit.gates) if g.is_measurement}
    if measure_indices <= terminal:
        return run_to_distribution(circuit).sample(shots, seed)

    circuit.require_oracles()
    measured = circuit.measured_qubits
    counts = []
    for shot in range(shots):
        rng = shot_rng(seed, shot)
        state = init_basis(circuit.width, '0' * circuit.width)
        values = {}
        for gate in circuit.gates:
            if gate.is_measurement:
                bits, state = measure_qubits(state, gate.qubits, rng)
                values.update(zip(gate.qubits, (int(b) for b in bits)))
            else:
                state = apply_gate(state, gate, circuit.oracles)
        counts.append({''.join(str(values[q]) for q in measured): 1})
    return Distribution.empirical(merge_counts(counts))
