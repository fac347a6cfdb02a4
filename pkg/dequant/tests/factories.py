import numpy as np
from hypothesis import strategies as st

from dequant.circuit import Circuit, Gate, GateKind, TruthTable

ONE_QUBIT_CLIFFORDS = (GateKind.X, GateKind.Y, GateKind.Z, GateKind.H, GateKind.S)
TWO_QUBIT_CLIFFORDS = (GateKind.CNOT, GateKind.CZ)


def random_clifford_circuit(seed, max_width=8, max_gates=60, measure=True):
    """Seeded random Clifford circuit, all qubits measured at the end."""
    rng = np.random.default_rng(seed)
    width = int(rng.integers(1, max_width + 1))
    gates = []
    for _ in range(int(rng.integers(0, max_gates + 1))):
        if width > 1 and rng.random() < 0.4:
            kind = TWO_QUBIT_CLIFFORDS[rng.integers(len(TWO_QUBIT_CLIFFORDS))]
            a, b = rng.choice(width, size=2, replace=False)
            gates.append(Gate(kind, (int(a), int(b))))
        else:
            kind = ONE_QUBIT_CLIFFORDS[rng.integers(len(ONE_QUBIT_CLIFFORDS))]
            gates.append(Gate(kind, (int(rng.integers(width)),)))
    if measure:
        gates.append(Gate(GateKind.MEASURE, tuple(range(width))))
    return Circuit(width, tuple(gates))


def ghz_circuit(n):
    gates = [Gate(GateKind.H, (0,))]
    gates += [Gate(GateKind.CNOT, (q, q + 1)) for q in range(n - 1)]
    gates.append(Gate(GateKind.MEASURE, tuple(range(n))))
    return Circuit(n, tuple(gates))


def bell_circuit():
    return ghz_circuit(2)


def separable_circuit(n):
    """H on every qubit, a layer of phase gates, H again, measure all."""
    phases = (GateKind.Z, GateKind.S, GateKind.T)
    gates = [Gate(GateKind.H, (q,)) for q in range(n)]
    gates += [Gate(phases[q % 3], (q,)) for q in range(n)]
    gates += [Gate(GateKind.H, (q,)) for q in range(n)]
    gates.append(Gate(GateKind.MEASURE, tuple(range(n))))
    return Circuit(n, tuple(gates))


def valid_two_input_tables():
    return [TruthTable.from_bits(bits) for bits in ('0000', '1111', '0011', '1100', '0101', '1010', '0110', '1001')]


def invalid_two_input_tables():
    valid = {t.bits for t in valid_two_input_tables()}
    return [TruthTable.from_bits(format(i, '04b')) for i in range(16) if format(i, '04b') not in valid]


@st.composite
def gate_lines(draw, width):
    """One syntactically valid .dqc gate line for a circuit of ``width`` qubits."""
    qubit = st.integers(0, width - 1)
    choices = ['x', 'y', 'z', 'h', 's', 't']
    if width >= 2:
        choices += ['cnot', 'cz', 'rk']
    if width >= 3:
        choices.append('ccx')
    choices.append('measure')
    mnemonic = draw(st.sampled_from(choices))
    if mnemonic in ('cnot', 'cz', 'rk', 'ccx'):
        arity = 3 if mnemonic == 'ccx' else 2
        qubits = draw(st.lists(qubit, min_size=arity, max_size=arity, unique=True))
    elif mnemonic == 'measure':
        qubits = draw(st.lists(qubit, min_size=1, max_size=width, unique=True))
    else:
        qubits = [draw(qubit)]
    if draw(st.booleans()):
        mnemonic = mnemonic.upper()
    prefix = f"{mnemonic} {draw(st.integers(1, 64))}" if mnemonic.lower() == 'rk' else mnemonic
    return ' '.join([prefix] + [str(q) for q in qubits])


@st.composite
def circuit_texts(draw):
    width = draw(st.integers(1, 6))
    lines = draw(st.lists(gate_lines(width), max_size=20))
    return f"qubits {width}\n" + '\n'.join(lines) + '\n'


single_qubit_states = st.tuples(
    st.floats(0, np.pi), st.floats(0, 2 * np.pi),
).map(lambda angles: (np.cos(angles[0] / 2), np.exp(1j * angles[1]) * np.sin(angles[0] / 2)))


def random_product_input(rng, n):
    theta = rng.uniform(0, np.pi, size=n)
    phi = rng.uniform(0, 2 * np.pi, size=n)
    return [(np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)) for t, p in zip(theta, phi)]
