"""
Stabiliser tableau backend for Clifford circuits.

Rows 0..n-1 are destabilisers, rows n..2n-1 stabilisers. Each row's X and Z
parts are bit-packed into uint64 words (qubit q lives in word q >> 6, bit
q & 63) so a gate touches one word column and a row product touches W
words. Phases are single bits: 1 means the row carries a minus sign.
"""

import itertools
import logging

import numpy as np
from django.conf import settings

from .circuit import CLIFFORD_KINDS, GateKind, is_clifford
from .dense import terminal_measurements
from .distribution import Distribution, count_rows, merge_counts, rows_to_strings
from .exceptions import NonCliffordGateError, ResourceLimitError
from .rng import chunk_rng, chunk_sizes, shot_rng

logger = logging.getLogger(__name__)

_ZERO = np.uint64(0)


def _locate(q):
    return q >> 6, np.uint64(1 << (q & 63))


def _column(bits, q):
    word, mask = _locate(q)
    return (bits[:, word] & mask) != 0


def _flip(bits, q, rows):
    word, mask = _locate(q)
    bits[:, word] ^= np.where(rows, mask, _ZERO)


def _phase_exponent(x1, z1, x2, z2):
    """
    Sum over qubits of the power of i picked up when Pauli (x1, z1) multiplies
    Pauli (x2, z2); broadcasts over leading row axes.
    """
    plus = (x1 & z1 & ~x2 & z2) | (x1 & ~z1 & x2 & z2) | (~x1 & z1 & x2 & ~z2)
    minus = (x1 & z1 & x2 & ~z2) | (x1 & ~z1 & ~x2 & z2) | (~x1 & z1 & x2 & z2)
    return (
        np.bitwise_count(plus).sum(axis=-1, dtype=np.int64)
        - np.bitwise_count(minus).sum(axis=-1, dtype=np.int64)
    )


def _rowsum(x, z, r, targets, source):
    """Replace every target row by (source row) * (target row), phases included."""
    if len(targets) == 0:
        return
    x1, z1 = x[source], z[source]
    total = (
        2 * r[targets].astype(np.int64)
        + 2 * int(r[source])
        + _phase_exponent(x1, z1, x[targets], z[targets])
    )
    r[targets] = (np.mod(total, 4) == 2).astype(np.uint8)
    x[targets] ^= x1
    z[targets] ^= z1


def _product_phase(xs, zs, rs):
    """Phase bit of the ordered product of the given rows."""
    acc_x = np.bitwise_xor.accumulate(xs, axis=0)
    acc_z = np.bitwise_xor.accumulate(zs, axis=0)
    prev_x = np.vstack([np.zeros_like(xs[:1]), acc_x[:-1]])
    prev_z = np.vstack([np.zeros_like(zs[:1]), acc_z[:-1]])
    total = 2 * int(rs.sum()) + int(_phase_exponent(xs, zs, prev_x, prev_z).sum())
    return int(total % 4 == 2)


def _swap_rows(arrays, a, b):
    if a != b:
        for array in arrays:
            array[[a, b]] = array[[b, a]]


class Tableau:
    def __init__(self, n, x, z, r):
        self.n = n
        self.x = x
        self.z = z
        self.r = r

    @property
    def words(self):
        return self.x.shape[1]

    def copy(self):
        return Tableau(self.n, self.x.copy(), self.z.copy(), self.r.copy())

    def has_random_outcome(self, q):
        return bool(_column(self.x[self.n:], q).any())

    def __str__(self):
        return '\n'.join(stabilizer_strings(self))


def init_tableau(n):
    if n < 1:
        raise ValueError(f"qubit count must be positive, got {n}")
    words = (n + 63) // 64
    x = np.zeros((2 * n, words), dtype=np.uint64)
    z = np.zeros((2 * n, words), dtype=np.uint64)
    qubits = np.arange(n)
    masks = np.left_shift(np.uint64(1), (qubits & 63).astype(np.uint64))
    x[qubits, qubits >> 6] = masks
    z[n + qubits, qubits >> 6] = masks
    return Tableau(n, x, z, np.zeros(2 * n, dtype=np.uint8))


def _hadamard(tab, a):
    xa, za = _column(tab.x, a), _column(tab.z, a)
    tab.r ^= (xa & za).astype(np.uint8)
    differ = xa ^ za
    _flip(tab.x, a, differ)
    _flip(tab.z, a, differ)


def _phase(tab, a):
    xa, za = _column(tab.x, a), _column(tab.z, a)
    tab.r ^= (xa & za).astype(np.uint8)
    _flip(tab.z, a, xa)


def _cnot(tab, a, b):
    xa, za = _column(tab.x, a), _column(tab.z, a)
    xb, zb = _column(tab.x, b), _column(tab.z, b)
    tab.r ^= (xa & zb & ~(xb ^ za)).astype(np.uint8)
    _flip(tab.x, b, xa)
    _flip(tab.z, a, zb)


def apply_clifford(tab, gate):
    """Conjugate every row by ``gate`` in place and return the tableau."""
    for q in gate.qubits:
        if not 0 <= q < tab.n:
            raise ValueError(f"qubit index {q} out of range for {tab.n} qubits")
    kind = gate.kind
    if kind is GateKind.H:
        _hadamard(tab, gate.qubits[0])
    elif kind is GateKind.S:
        _phase(tab, gate.qubits[0])
    elif kind is GateKind.X:
        tab.r ^= _column(tab.z, gate.qubits[0]).astype(np.uint8)
    elif kind is GateKind.Z:
        tab.r ^= _column(tab.x, gate.qubits[0]).astype(np.uint8)
    elif kind is GateKind.Y:
        a = gate.qubits[0]
        tab.r ^= (_column(tab.x, a) ^ _column(tab.z, a)).astype(np.uint8)
    elif kind is GateKind.CNOT:
        _cnot(tab, *gate.qubits)
    elif kind is GateKind.CZ:
        c, t = gate.qubits
        _hadamard(tab, t)
        _cnot(tab, c, t)
        _hadamard(tab, t)
    else:
        raise NonCliffordGateError(f"{kind.value} is not a Clifford gate")
    return tab


def _deterministic_outcome(tab, q):
    n = tab.n
    rows = np.flatnonzero(_column(tab.x[:n], q)) + n
    if len(rows) == 0:
        return 0
    return _product_phase(tab.x[rows], tab.z[rows], tab.r[rows])


def measure_z(tab, q, rng=None, forced=None):
    """
    Measure qubit ``q`` in the computational basis, updating ``tab`` in place.

    A random outcome is drawn from ``rng`` unless ``forced`` fixes it; forcing
    a deterministic measurement to the impossible value raises ValueError.
    """
    if not 0 <= q < tab.n:
        raise ValueError(f"qubit index {q} out of range for {tab.n} qubits")
    n = tab.n
    anticommuting = np.flatnonzero(_column(tab.x[n:], q))
    if len(anticommuting) == 0:
        bit = _deterministic_outcome(tab, q)
        if forced is not None and forced != bit:
            raise ValueError(f"qubit {q} is deterministically {bit}")
        return bit, tab

    p = int(anticommuting[0]) + n
    rows = np.flatnonzero(_column(tab.x, q))
    _rowsum(tab.x, tab.z, tab.r, rows[rows != p], p)
    destabiliser = p - n
    tab.x[destabiliser] = tab.x[p]
    tab.z[destabiliser] = tab.z[p]
    tab.r[destabiliser] = tab.r[p]
    tab.x[p] = 0
    tab.z[p] = 0
    word, mask = _locate(q)
    tab.z[p, word] = mask
    bit = int(rng.integers(2)) if forced is None else int(forced)
    tab.r[p] = bit
    return bit, tab


def outcome_probability(tab, q, bit):
    if not 0 <= q < tab.n:
        raise ValueError(f"qubit index {q} out of range for {tab.n} qubits")
    if tab.has_random_outcome(q):
        return 0.5
    return 1.0 if _deterministic_outcome(tab, q) == bit else 0.0


class AffineOutcomes:
    """
    Outcomes of measuring ``qubits`` on a stabiliser state: the uniform
    distribution over offset + span(basis) in GF(2)^m.
    """

    def __init__(self, qubits, offset, basis):
        self.qubits = tuple(qubits)
        self.offset = offset
        self.basis = basis

    @property
    def dimension(self):
        return len(self.basis)

    def probabilities(self):
        k = self.dimension
        if k > settings.DEQUANT_MAX_EXPANDED_QUBITS:
            raise ResourceLimitError(f"measurement has 2^{k} equally likely outcomes, too many to list")
        choices = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8).reshape(2 ** k, k)
        rows = self.offset ^ ((choices @ self.basis) & 1)
        p = 1.0 / 2 ** k
        return {bits: p for bits in rows_to_strings(rows)}

    def sample_chunk(self, rng, size):
        choices = rng.integers(0, 2, size=(size, self.dimension), dtype=np.uint8)
        rows = self.offset ^ ((choices @ self.basis) & 1)
        return count_rows(rows)


def _unpack(packed, n):
    as_bytes = np.ascontiguousarray(packed.astype('<u8')).view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder='little')[..., :n]


def _find_pivot(rows, columns, position):
    """
    Next entry of ``columns[position:]`` set in some of ``rows``, as
    (column, row offset, next position); column is None when there is none.
    """
    if position < len(columns):
        q = int(columns[position])
        candidates = np.flatnonzero(_column(rows, q))
        if len(candidates):
            return q, int(candidates[0]), position + 1
    if len(rows) == 0 or position >= len(columns):
        return None, None, len(columns)
    # Elimination never adds support outside the union of the remaining rows.
    support = _unpack(np.bitwise_or.reduce(rows, axis=0), rows.shape[1] * 64)
    live = np.flatnonzero(support[columns[position:]])
    if len(live) == 0:
        return None, None, len(columns)
    position += int(live[0])
    q = int(columns[position])
    return q, int(np.flatnonzero(_column(rows, q))[0]), position + 1


def _echelon(z, r, columns, start=0):
    """
    Row-echelon form of the packed rows ``z[start:]`` over ``columns`` (in the
    given order), with sign bits carried along. Returns the pivots as
    (row, column) pairs and the index of the first non-pivot row.
    """
    pivot_row = start
    pivots = []
    columns = np.asarray(columns, dtype=np.int64)
    position = 0
    while pivot_row < len(z):
        q, offset, position = _find_pivot(z[pivot_row:], columns, position)
        if q is None:
            break
        _swap_rows((z, r), pivot_row, pivot_row + offset)
        below = np.flatnonzero(_column(z[pivot_row + 1:], q)) + pivot_row + 1
        z[below] ^= z[pivot_row]
        r[below] ^= r[pivot_row]
        pivots.append((pivot_row, q))
        pivot_row += 1
    return pivots, pivot_row


def measurement_space(tab, qubits):
    """
    Joint outcome distribution of measuring ``qubits`` (in the given order)
    without changing ``tab``.
    """
    n = tab.n
    qubits = tuple(qubits)
    x, z, r = tab.x[n:].copy(), tab.z[n:].copy(), tab.r[n:].copy()

    # Gaussian elimination on the X part; rows past the X rank are +/-Z strings.
    pivot_row = 0
    columns = np.arange(n)
    position = 0
    while pivot_row < n:
        q, offset, position = _find_pivot(x[pivot_row:], columns, position)
        if q is None:
            break
        _swap_rows((x, z, r), pivot_row, pivot_row + offset)
        rows = np.flatnonzero(_column(x, q))
        _rowsum(x, z, r, rows[rows != pivot_row], pivot_row)
        pivot_row += 1

    zs, signs = z[pivot_row:], r[pivot_row:]
    measured = set(qubits)
    _, free_start = _echelon(zs, signs, [q for q in range(n) if q not in measured])
    constraints, constraint_signs = zs[free_start:], signs[free_start:]
    pivots, rank = _echelon(constraints, constraint_signs, sorted(measured))

    pivot_columns = {col for _, col in pivots}
    free = [q for q in sorted(measured) if q not in pivot_columns]
    # Row 0 is the particular solution, row j+1 the homogeneous solution
    # with free variable free[j] set.
    solutions = np.zeros((len(free) + 1, tab.words), dtype=np.uint64)
    for j, q in enumerate(free):
        word, mask = _locate(q)
        solutions[j + 1, word] |= mask
    for row, q in reversed(pivots):
        parity = np.bitwise_count(solutions & constraints[row]).sum(axis=1, dtype=np.int64) & 1
        parity[0] ^= int(constraint_signs[row])
        _flip(solutions, q, parity.astype(bool))

    bits = _unpack(solutions, n)[:, list(qubits)]
    logger.debug(f"Measurement space: {len(qubits)} qubits, {rank} constraints, {len(free)} free bits")
    return AffineOutcomes(qubits, bits[0], bits[1:])


def _require_clifford(circuit):
    if not is_clifford(circuit):
        bad = sorted({g.kind.value for g in circuit.gates if g.kind not in CLIFFORD_KINDS})
        raise NonCliffordGateError(f"circuit contains non-Clifford gates: {', '.join(bad)}")
    if not circuit.measured_qubits:
        raise ValueError("circuit has no measure gate")


def _unitary_prefix(circuit):
    """Tableau after every gate that precedes the first measurement, and that index."""
    tab = init_tableau(circuit.width)
    for index, gate in enumerate(circuit.gates):
        if gate.is_measurement:
            return tab, index
        apply_clifford(tab, gate)
    return tab, len(circuit.gates)


def exact_distribution(circuit):
    """Strong simulation: intermediate measurements branch on forced outcomes."""
    _require_clifford(circuit)
    terminal = terminal_measurements(circuit)
    measured = circuit.measured_qubits
    tab, start = _unitary_prefix(circuit)
    logger.info(f"Stabiliser run: {circuit.width} qubits, {circuit.gate_count} gates")

    branches = [(1.0, tab, {})]
    deferred = set()
    for index in range(start, len(circuit.gates)):
        gate = circuit.gates[index]
        if not gate.is_measurement:
            for _, branch, _ in branches:
                apply_clifford(branch, gate)
            continue
        if index in terminal:
            deferred.update(gate.qubits)
            continue
        for q in gate.qubits:
            expanded = []
            for weight, branch, recorded in branches:
                if not branch.has_random_outcome(q):
                    bit, _ = measure_z(branch, q)
                    expanded.append((weight, branch, {**recorded, q: bit}))
                    continue
                for bit in (0, 1):
                    child = branch.copy()
                    measure_z(child, q, forced=bit)
                    expanded.append((weight / 2, child, {**recorded, q: bit}))
            branches = expanded

    deferred_order = tuple(sorted(deferred))
    outcomes = {}
    for weight, branch, recorded in branches:
        if deferred_order:
            local = measurement_space(branch, deferred_order).probabilities()
        else:
            local = {'': 1.0}
        for bits, p in local.items():
            values = dict(recorded)
            values.update(zip(deferred_order, (int(b) for b in bits)))
            key = ''.join(str(values[q]) for q in measured)
            outcomes[key] = outcomes.get(key, 0.0) + weight * p
    return Distribution.exact(outcomes)


def sample_run(circuit, shots, seed):
    """
    Weak simulation. With only terminal measurements the outcome space is
    solved once and sampled in chunks; otherwise each shot collapses its own
    copy of the tableau with a per-shot generator.
    """
    _require_clifford(circuit)
    terminal = terminal_measurements(circuit)
    measure_indices = {i for i, g in enumerate(circuit.gates) if g.is_measurement}
    tab, start = _unitary_prefix(circuit)

    if measure_indices <= terminal:
        for gate in circuit.gates[start:]:
            if not gate.is_measurement:
                apply_clifford(tab, gate)
        space = measurement_space(tab, circuit.measured_qubits)
        sizes = chunk_sizes(shots, settings.DEQUANT_SHOT_CHUNK)
        parts = [space.sample_chunk(chunk_rng(seed, chunk), size) for chunk, size in enumerate(sizes)]
        return Distribution.empirical(merge_counts(parts))

    measured = circuit.measured_qubits
    parts = []
    for shot in range(shots):
        rng = shot_rng(seed, shot)
        branch = tab.copy()
        values = {}
        for gate in circuit.gates[start:]:
            if gate.is_measurement:
                for q in gate.qubits:
                    values[q], _ = measure_z(branch, q, rng)
            else:
                apply_clifford(branch, gate)
        parts.append({''.join(str(values[q]) for q in measured): 1})
    return Distribution.empirical(merge_counts(parts))


def run_circuit(circuit):
    """Apply every gate, measuring nothing; returns the final tableau."""
    tab = init_tableau(circuit.width)
    for gate in circuit.gates:
        if not gate.is_measurement:
            apply_clifford(tab, gate)
    return tab


def check_invariants(tab):
    """True when the rows form a symplectic basis: only destabiliser i and stabiliser i anticommute."""
    n = tab.n
    x = _unpack(tab.x, n).astype(np.int64)
    z = _unpack(tab.z, n).astype(np.int64)
    products = (x @ z.T + z @ x.T) % 2
    expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
    expected[np.arange(n), np.arange(n) + n] = 1
    expected[np.arange(n) + n, np.arange(n)] = 1
    return bool(np.array_equal(products, expected))


def stabilizer_strings(tab, destabilizers=False):
    n = tab.n
    rows = range(n) if destabilizers else range(n, 2 * n)
    x = _unpack(tab.x, n)
    z = _unpack(tab.z, n)
    letters = np.array(['I', 'X', 'Z', 'Y'])
    strings = []
    for row in rows:
        paulis = ''.join(letters[x[row] + 2 * z[row]])
        strings.append(('-' if tab.r[row] else '+') + paulis)
    return strings
