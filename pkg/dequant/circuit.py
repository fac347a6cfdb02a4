"""
Circuit intermediate representation, the .dqc / .tt text formats and the
structural analysis used to pick a backend.

Qubit 0 is the most significant bit of every outcome string and of every
truth-table index. An ORACLE gate lists its k input qubits followed by one
target qubit and acts as U_f|x>|y> = |x>|y XOR f(x)>.
"""

import itertools
import logging
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType

from .exceptions import CircuitSyntaxError, TruthTableError, UnresolvedOracleError

logger = logging.getLogger(__name__)


class GateKind(str, Enum):
    X = 'x'
    Y = 'y'
    Z = 'z'
    H = 'h'
    S = 's'
    T = 't'
    CNOT = 'cnot'
    CZ = 'cz'
    CCX = 'ccx'
    RK = 'rk'
    ORACLE = 'oracle'
    MEASURE = 'measure'


GATE_ARITY = {
    GateKind.X: 1,
    GateKind.Y: 1,
    GateKind.Z: 1,
    GateKind.H: 1,
    GateKind.S: 1,
    GateKind.T: 1,
    GateKind.CNOT: 2,
    GateKind.CZ: 2,
    GateKind.RK: 2,
    GateKind.CCX: 3,
}

# Clifford generators plus computational-basis measurement. ORACLE is
# deliberately absent: deciding whether a truth table induces a Clifford map
# is not attempted.
CLIFFORD_KINDS = frozenset({
    GateKind.X, GateKind.Y, GateKind.Z, GateKind.H, GateKind.S,
    GateKind.CNOT, GateKind.CZ, GateKind.MEASURE,
})

RK_MAX = 64

_COMMENT = re.compile(r'#.*$')
_IDENTIFIER = re.compile(r'^[A-Za-z_][A-Za-z0-9_]*$')


@dataclass(frozen=True)
class TruthTable:
    """Values of f: {0,1}^n -> {0,1}, listed in lexicographic input order."""

    n_inputs: int
    values: tuple

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        object.__setattr__(self, 'values', values)
        if self.n_inputs < 1:
            raise TruthTableError(f"truth table needs at least one input, got {self.n_inputs}")
        if len(values) != 2 ** self.n_inputs:
            raise TruthTableError(
                f"truth table over {self.n_inputs} inputs needs {2 ** self.n_inputs} values, got {len(values)}"
            )
        if any(v not in (0, 1) for v in values):
            raise TruthTableError("truth table entries must be 0 or 1")

    @classmethod
    def from_bits(cls, bits):
        bits = bits.strip()
        bad = set(bits) - {'0', '1'}
        if bad:
            raise TruthTableError(f"non-bit characters in truth table: {''.join(sorted(bad))!r}")
        length = len(bits)
        if length < 2 or length & (length - 1):
            raise TruthTableError(f"length {length} not a power of two")
        return cls(length.bit_length() - 1, tuple(int(b) for b in bits))

    def __call__(self, x):
        return self.values[x]

    def __len__(self):
        return len(self.values)

    @property
    def bits(self):
        return ''.join(str(v) for v in self.values)

    def negated(self):
        return TruthTable(self.n_inputs, tuple(v ^ 1 for v in self.values))


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple
    k: int = None
    oracle: str = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', GateKind(self.kind))
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, 'qubits', qubits)

        if any(q < 0 for q in qubits):
            raise ValueError(f"negative qubit index in {self.kind.value} gate")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit index in {self.kind.value} gate")

        expected = GATE_ARITY.get(self.kind)
        if expected is not None and len(qubits) != expected:
            raise ValueError(f"{self.kind.value} takes {expected} qubit(s), got {len(qubits)}")
        if self.kind is GateKind.ORACLE:
            if not self.oracle or not _IDENTIFIER.match(self.oracle):
                raise ValueError(f"invalid oracle name {self.oracle!r}")
            if len(qubits) < 2:
                raise ValueError("oracle needs at least one input qubit and a target")
        if self.kind is GateKind.MEASURE and not qubits:
            raise ValueError("measure needs at least one qubit")
        if self.kind is GateKind.RK:
            if self.k is None or not 1 <= self.k <= RK_MAX:
                raise ValueError(f"rk exponent must be in 1..{RK_MAX}, got {self.k}")

    @property
    def is_measurement(self):
        return self.kind is GateKind.MEASURE

    def __str__(self):
        qubits = ' '.join(str(q) for q in self.qubits)
        if self.kind is GateKind.RK:
            return f"rk {self.k} {qubits}"
        if self.kind is GateKind.ORACLE:
            return f"oracle {self.oracle} {qubits}"
        return f"{self.kind.value} {qubits}"


@dataclass(frozen=True)
class Circuit:
    """One member C_n of a circuit family: T(n) gates over ``width`` qubits."""

    width: int
    gates: tuple
    oracles: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'gates', tuple(self.gates))
        object.__setattr__(self, 'oracles', MappingProxyType(dict(self.oracles)))
        if self.width < 1:
            raise ValueError(f"circuit width must be positive, got {self.width}")
        for index, gate in enumerate(self.gates):
            for q in gate.qubits:
                if q >= self.width:
                    raise ValueError(f"gate {index} ({gate}) uses qubit {q} outside width {self.width}")

    @property
    def gate_count(self):
        return len(self.gates)

    @property
    def measured_qubits(self):
        return tuple(sorted({q for g in self.gates if g.is_measurement for q in g.qubits}))

    @property
    def oracle_names(self):
        return tuple(sorted({g.oracle for g in self.gates if g.kind is GateKind.ORACLE}))

    def bind_oracles(self, tables):
        merged = dict(self.oracles)
        merged.update(tables)
        bound = replace(self, oracles=merged)
        for gate in bound.gates:
            if gate.kind is GateKind.ORACLE and gate.oracle in merged:
                _check_oracle_arity(gate, merged[gate.oracle])
        return bound

    def truth_table(self, name):
        try:
            return self.oracles[name]
        except KeyError:
            raise UnresolvedOracleError(f"oracle {name!r} has no truth table bound") from None

    def require_oracles(self):
        for gate in self.gates:
            if gate.kind is GateKind.ORACLE:
                _check_oracle_arity(gate, self.truth_table(gate.oracle))


def _check_oracle_arity(gate, table):
    if len(gate.qubits) != table.n_inputs + 1:
        raise UnresolvedOracleError(
            f"oracle {gate.oracle!r} is a {table.n_inputs}-input function but the gate "
            f"lists {len(gate.qubits)} qubits (expected {table.n_inputs + 1})"
        )


def _lines(text):
    return text.splitlines() if isinstance(text, str) else text


def _parse_int(token, lineno, what):
    try:
        return int(token)
    except ValueError:
        raise CircuitSyntaxError(lineno, f"expected integer {what}, got {token!r}") from None


def _parse_qubits(tokens, lineno, width):
    qubits = [_parse_int(t, lineno, 'qubit index') for t in tokens]
    for q in qubits:
        if not 0 <= q < width:
            raise CircuitSyntaxError(lineno, f"qubit index {q} out of range for {width} qubits")
    if len(set(qubits)) != len(qubits):
        raise CircuitSyntaxError(lineno, "duplicate qubit index")
    return qubits


def _parse_gate(mnemonic, args, lineno, width):
    try:
        kind = GateKind(mnemonic)
    except ValueError:
        raise CircuitSyntaxError(lineno, f"unknown gate {mnemonic!r}") from None

    k = oracle = None
    if kind is GateKind.RK:
        if not args:
            raise CircuitSyntaxError(lineno, "rk needs an exponent")
        k = _parse_int(args[0], lineno, 'rk exponent')
        args = args[1:]
    elif kind is GateKind.ORACLE:
        if not args:
            raise CircuitSyntaxError(lineno, "oracle needs a name")
        oracle, args = args[0], args[1:]

    expected = GATE_ARITY.get(kind)
    if expected is not None and len(args) != expected:
        raise CircuitSyntaxError(lineno, f"{mnemonic} takes {expected} qubit(s), got {len(args)}")

    qubits = _parse_qubits(args, lineno, width)
    try:
        return Gate(kind, tuple(qubits), k=k, oracle=oracle)
    except ValueError as exc:
        raise CircuitSyntaxError(lineno, str(exc)) from None


def parse_circuit(text):
    """Parse .dqc text (a string or an iterable of lines) into a Circuit."""
    width = None
    gates = []
    lineno = 0
    for lineno, raw in enumerate(_lines(text), start=1):
        line = _COMMENT.sub('', raw).strip()
        if not line:
            continue
        tokens = line.split()
        mnemonic = tokens[0].lower()
        if width is None:
            if mnemonic != 'qubits' or len(tokens) != 2:
                raise CircuitSyntaxError(lineno, "expected 'qubits <n>' before any gate")
            width = _parse_int(tokens[1], lineno, 'qubit count')
            if width < 1:
                raise CircuitSyntaxError(lineno, f"qubit count must be positive, got {width}")
            continue
        if mnemonic == 'qubits':
            raise CircuitSyntaxError(lineno, "qubit count declared twice")
        gates.append(_parse_gate(mnemonic, tokens[1:], lineno, width))

    if width is None:
        raise CircuitSyntaxError(max(lineno, 1), "missing 'qubits <n>' header")
    logger.debug(f"Parsed circuit: {width} qubits, {len(gates)} gates")
    return Circuit(width, tuple(gates))


def serialize(circuit):
    lines = [f"qubits {circuit.width}"]
    lines.extend(str(g) for g in circuit.gates)
    return '\n'.join(lines) + '\n'


def load_truth_table(text):
    """Parse .tt text: one ``tt <bits>`` line, comments allowed."""
    found = None
    for lineno, raw in enumerate(_lines(text), start=1):
        line = _COMMENT.sub('', raw).strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0].lower() != 'tt' or len(tokens) != 2:
            raise TruthTableError(f"line {lineno}: expected 'tt <bits>'")
        if found is not None:
            raise TruthTableError(f"line {lineno}: more than one truth table")
        found = tokens[1]
    if found is None:
        raise TruthTableError("no 'tt <bits>' line found")
    return TruthTable.from_bits(found)


def is_clifford(circuit):
    return all(g.kind in CLIFFORD_KINDS for g in circuit.gates)


def gate_counts(circuit):
    return Counter(g.kind.value for g in circuit.gates)


def static_block_bound(circuit):
    """Largest set of qubits linked by multi-qubit gates, ignoring any later splits."""
    parent = list(range(circuit.width))

    def find(q):
        while parent[q] != q:
            parent[q] = parent[parent[q]]
            q = parent[q]
        return q

    for gate in circuit.gates:
        if gate.is_measurement or len(gate.qubits) < 2:
            continue
        root = find(gate.qubits[0])
        for q in gate.qubits[1:]:
            other = find(q)
            if other != root:
                parent[other] = root

    sizes = Counter(find(q) for q in range(circuit.width))
    return max(sizes.values())


def span_profile(circuit):
    """For each qubit, how many multi-qubit gates have a qubit range covering it."""
    delta = [0] * (circuit.width + 1)
    for gate in circuit.gates:
        if gate.is_measurement or len(gate.qubits) < 2:
            continue
        delta[min(gate.qubits)] += 1
        delta[max(gate.qubits) + 1] -= 1
    return list(itertools.accumulate(delta[:-1]))


@dataclass(frozen=True)
class Recommendation:
    backend: str
    rationale: str
    block_bound: int


def recommend_backend(circuit, block_cap):
    bound = static_block_bound(circuit)
    if is_clifford(circuit):
        return Recommendation(
            'stabilizer',
            f"all {circuit.gate_count} gates are Clifford or computational-basis measurements",
            bound,
        )
    if bound <= block_cap:
        return Recommendation(
            'blockstate',
            f"static connectivity scan bounds every entanglement block at {bound} <= cap {block_cap}",
            bound,
        )
    return Recommendation(
        'dense',
        f"non-Clifford gates present and static connectivity reaches {bound} qubits > cap {block_cap}",
        bound,
    )
