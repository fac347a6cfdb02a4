"""
Classical bits embedded in complex numbers over the basis {1, i}.

A PhasePair z = (re + im*i) * 2^(scale/2) with integer re, im and scale, so
the whole Deutsch-Jozsa pipeline stays exact: products of (1 +/- i) factors
give even Gaussian integers which canonicalisation folds into the scale.
"""

import logging
from dataclasses import dataclass
from enum import Enum

from .circuit import Gate, GateKind
from .distribution import Distribution
from .exceptions import InvalidFunctionError, UnsupportedCircuitError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhasePair:
    re: int
    im: int
    scale: int = 0

    def __post_init__(self):
        re, im, scale = int(self.re), int(self.im), int(self.scale)
        if re == 0 and im == 0:
            raise ValueError("a phase pair cannot be zero")
        while re % 2 == 0 and im % 2 == 0:
            re, im, scale = re // 2, im // 2, scale + 2
        object.__setattr__(self, 're', re)
        object.__setattr__(self, 'im', im)
        object.__setattr__(self, 'scale', scale)

    def __mul__(self, other):
        return PhasePair(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
            self.scale + other.scale,
        )

    def __neg__(self):
        return PhasePair(-self.re, -self.im, self.scale)

    def conjugate(self):
        return PhasePair(self.re, -self.im, self.scale)

    def halved(self):
        return PhasePair(self.re, self.im, self.scale - 2)

    def __complex__(self):
        return complex(self.re, self.im) * 2 ** (self.scale / 2)

    def __str__(self):
        if self.im == 0:
            body = f"{self.re}"
        elif self.re == 0:
            body = f"{self.im}i"
        else:
            body = f"{self.re}{self.im:+d}i"
        return body if self.scale == 0 else f"({body})*2^({self.scale}/2)"


ONE_PLUS_I = PhasePair(1, 1)


@dataclass(frozen=True)
class PhaseRegister:
    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, 'pairs', tuple(self.pairs))
        if not self.pairs:
            raise ValueError("a phase register needs at least one pair")

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, index):
        return self.pairs[index]


def equal_superposition(m):
    if m < 1:
        raise ValueError(f"register size must be at least 1, got {m}")
    return PhaseRegister((ONE_PLUS_I,) * m)


def _signed(pair, sign, flip):
    """sign * (re + (-1)^flip * im * i)."""
    im = -pair.im if flip else pair.im
    return PhasePair(sign * pair.re, sign * im, pair.scale)


def apply_cf(register, f):
    """
    The two-input classical black box C_f: C^2 -> C^2.

    Pair 1 picks up (-1)^(f(00) xor f(10)) on its imaginary part, pair 2
    (-1)^(f(10) xor f(11)); both carry the overall sign (-1)^f(00).
    """
    if len(register) != 2:
        raise ValueError(f"C_f acts on two pairs, got {len(register)}")
    if f.n_inputs != 2:
        raise ValueError(f"C_f needs a 2-input function, got {f.n_inputs} inputs")
    f00, f01, f10, f11 = f.values
    if f00 ^ f11 != f01 ^ f10:
        raise InvalidFunctionError(
            f"tt {f.bits} breaks f(00) xor f(11) = f(01) xor f(10); the oracle output is not separable"
        )
    sign = -1 if f00 else 1
    first, second = register
    return PhaseRegister((
        _signed(first, sign, f00 ^ f10),
        _signed(second, sign, f10 ^ f11),
    ))


def apply_cf_single(pair, f):
    """One-input black box: (-1)^f(0) * (a + (-1)^(f(0) xor f(1)) b i)."""
    if f.n_inputs != 1:
        raise ValueError(f"expected a 1-input function, got {f.n_inputs} inputs")
    f0, f1 = f.values
    return _signed(pair, -1 if f0 else 1, f0 ^ f1)


def hadamard_analogue(register, inputs):
    if len(register) != len(inputs):
        raise ValueError(f"register sizes differ: {len(register)} vs {len(inputs)}")
    return PhaseRegister(tuple((out * inp).halved() for out, inp in zip(register, inputs)))


class Axis(str, Enum):
    REAL = 'real'
    IMAGINARY = 'imaginary'
    MIXED = 'mixed'


@dataclass(frozen=True)
class AxisReading:
    axis: Axis
    sign: int = 0

    def __str__(self):
        if self.axis is Axis.MIXED:
            return 'MIXED'
        return f"{self.axis.name}({'+' if self.sign > 0 else '-'})"


def measure_axis(pair):
    if pair.re == 0:
        return AxisReading(Axis.IMAGINARY, 1 if pair.im > 0 else -1)
    if pair.im == 0:
        return AxisReading(Axis.REAL, 1 if pair.re > 0 else -1)
    return AxisReading(Axis.MIXED)


@dataclass(frozen=True)
class SignFactorisation:
    """phases == sign * factors[0] (x) factors[1] (x) ...; each factor is (1, +/-1)."""

    sign: int
    factors: tuple

    def expand(self):
        vector = [self.sign]
        for _, c in reversed(self.factors):
            vector = vector + [c * v for v in vector]
        return tuple(vector)


def phase_vector_separable(phases):
    """
    Factor a +/-1 vector of length 2^n into single-qubit sign factors.

    Peels the leftmost qubit: the second half must equal plus or minus the
    first half, which then becomes the vector for the remaining qubits.
    Returns None when some step fails.
    """
    phases = tuple(int(p) for p in phases)
    length = len(phases)
    if length < 2 or length & (length - 1):
        raise ValueError(f"phase vector length {length} is not a power of two >= 2")
    if any(p not in (1, -1) for p in phases):
        raise ValueError("phase vector entries must be +1 or -1")

    factors = []
    current = phases
    while len(current) > 1:
        half = len(current) // 2
        top, bottom = current[:half], current[half:]
        if bottom == top:
            factors.append((1, 1))
        elif all(b == -t for t, b in zip(top, bottom)):
            factors.append((1, -1))
        else:
            logger.debug(f"Phase vector not separable at qubit {len(factors)}")
            return None
        current = top
    return SignFactorisation(current[0], tuple(factors))


def phases_of(f):
    """The sign pattern (-1)^f(x) the oracle kicks back onto |x>|->."""
    return tuple(-1 if v else 1 for v in f.values)


def dequantised_readings(f):
    """
    Run the phase-bit pipeline for a 1- or 2-input function: equal
    superposition, black box, Hadamard analogue, axis readout.
    """
    if f.n_inputs == 1:
        inputs = equal_superposition(1)
        outputs = PhaseRegister((apply_cf_single(inputs[0], f),))
    elif f.n_inputs == 2:
        inputs = equal_superposition(2)
        outputs = apply_cf(inputs, f)
    else:
        raise ValueError(f"the phase-bit black box is defined for 1 or 2 inputs, got {f.n_inputs}")
    final = hadamard_analogue(outputs, inputs)
    readings = tuple(measure_axis(pair) for pair in final)
    logger.debug(f"tt {f.bits}: {' '.join(str(p) for p in final)} -> {' '.join(str(r) for r in readings)}")
    return readings


def readings_to_outcome(readings):
    """Map axis readings to the quantum outcome bits: IMAGINARY -> 0, REAL -> 1."""
    bits = []
    for reading in readings:
        if reading.axis is Axis.MIXED:
            raise InvalidFunctionError("a mixed reading has no outcome bit")
        bits.append('0' if reading.axis is Axis.IMAGINARY else '1')
    return ''.join(bits)


def _expected_dj_gates(n, oracle):
    everyone = range(n + 1)
    gates = [Gate(GateKind.X, (n,))]
    gates += [Gate(GateKind.H, (q,)) for q in everyone]
    gates.append(Gate(GateKind.ORACLE, tuple(everyone), oracle=oracle))
    gates += [Gate(GateKind.H, (q,)) for q in everyone]
    gates.append(Gate(GateKind.MEASURE, tuple(range(n))))
    return tuple(gates)


def run_phasebit(circuit):
    """
    Exact outcome distribution of a Deutsch or two-input Deutsch-Jozsa
    circuit, computed with phase bits instead of amplitudes.
    """
    n = circuit.width - 1
    oracles = [g.oracle for g in circuit.gates if g.kind is GateKind.ORACLE]
    if n not in (1, 2) or len(oracles) != 1 or circuit.gates != _expected_dj_gates(n, oracles[0]):
        raise UnsupportedCircuitError(
            "the phase-bit backend only runs the 1- and 2-input Deutsch-Jozsa circuit shape"
        )
    f = circuit.truth_table(oracles[0])
    outcome = readings_to_outcome(dequantised_readings(f))
    return Distribution.exact({outcome: 1.0})
