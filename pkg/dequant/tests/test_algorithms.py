import time
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st

from dequant.algorithms import (
    FunctionTag,
    build_dj_circuit,
    census_table,
    classify_function,
    dj_dequantised_solve,
    dj_quantum_solve,
    function_census,
    qft_circuit,
    qft_reference_distribution,
    semiclassical_qft_counts,
    semiclassical_qft_probabilities,
    semiclassical_qft_sample,
    truth_tables,
)
from dequant.circuit import GateKind, TruthTable
from dequant.exceptions import BackendFailure, InvalidFunctionError
from dequant.harness import tvd
from dequant.rng import run_rng

from .factories import random_product_input, single_qubit_states, valid_two_input_tables

KET_ZERO = (1, 0)
KET_ONE = (0, 1)
KET_PLUS = (1 / np.sqrt(2), 1 / np.sqrt(2))


def tt(bits):
    return TruthTable.from_bits(bits)


class ClassifyTests(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(str(classify_function(tt('1111'))), 'CONSTANT(1)')
        self.assertEqual(classify_function(tt('0110')).tag, FunctionTag.BALANCED)
        self.assertEqual(classify_function(tt('1110')).tag, FunctionTag.INVALID)

    def test_two_input_partition(self):
        tags = [classify_function(f).tag for f in truth_tables(2)]
        self.assertEqual(tags.count(FunctionTag.CONSTANT), 2)
        self.assertEqual(tags.count(FunctionTag.BALANCED), 6)
        self.assertEqual(tags.count(FunctionTag.INVALID), 8)


class CensusTests(SimpleTestCase):
    def test_small_sizes(self):
        expected = {1: (2, 2, 0), 2: (2, 6, 8), 3: (2, 70, 184)}
        for n, counts in expected.items():
            report = function_census(n)
            self.assertEqual((report.n_constant, report.n_balanced, report.n_invalid), counts)
            self.assertEqual(report.total, 2 ** 2 ** n)

    def test_matches_enumeration(self):
        for n in (1, 2, 3):
            tags = [classify_function(f).tag for f in truth_tables(n)]
            report = function_census(n)
            self.assertEqual(tags.count(FunctionTag.BALANCED), report.n_balanced)
            self.assertEqual(tags.count(FunctionTag.INVALID), report.n_invalid)

    def test_exact_probability(self):
        self.assertEqual(function_census(2).p_valid, Fraction(1, 2))
        report = function_census(16)
        self.assertEqual(report.n_constant + report.n_balanced + report.n_invalid, 2 ** 65536)
        self.assertLess(report.p_valid, Fraction(1, 100))

    def test_range(self):
        for n in (0, 17):
            with self.assertRaises(ValueError):
                function_census(n)

    def test_table(self):
        table = census_table(3)
        self.assertEqual(list(table['balanced']), [2, 6, 70])
        self.assertEqual(list(table['p_valid']), ['1', '1/2', '9/32'])


class DeutschJozsaTests(SimpleTestCase):
    def test_circuit_shape(self):
        circuit = build_dj_circuit(2)
        self.assertEqual(circuit.width, 3)
        self.assertEqual(circuit.gate_count, 9)
        self.assertEqual(circuit.gates[0].kind, GateKind.X)
        self.assertEqual(circuit.gates[4].kind, GateKind.ORACLE)
        self.assertEqual(circuit.measured_qubits, (0, 1))
        self.assertEqual(build_dj_circuit(1).width, 2)
        self.assertEqual(build_dj_circuit(4).gate_count, 13)

    def test_quantum_examples(self):
        self.assertEqual(dj_quantum_solve(tt('0000')).tag, FunctionTag.CONSTANT)
        self.assertEqual(dj_quantum_solve(tt('0011'), 'blockstate', cap=3).tag, FunctionTag.BALANCED)
        solution = dj_quantum_solve(tt('0110'))
        self.assertEqual((solution.tag, solution.outcome), (FunctionTag.BALANCED, '11'))

    def test_quantum_rejects_invalid(self):
        with self.assertRaises(InvalidFunctionError):
            dj_quantum_solve(tt('0001'))

    def test_backend_failure_propagates(self):
        with self.assertRaises(BackendFailure) as ctx:
            dj_quantum_solve(tt('0011'), 'blockstate', cap=2)
        self.assertEqual(ctx.exception.reason.value, 'CAP_EXCEEDED')

    def test_weak_mode(self):
        solution = dj_quantum_solve(tt('0101'), shots=200, seed=9)
        self.assertEqual((solution.tag, solution.outcome), (FunctionTag.BALANCED, '01'))
        self.assertEqual(solution.distribution.shots, 200)

    def test_dequantised_examples(self):
        constant_one = dj_dequantised_solve(tt('1111'))
        self.assertEqual((constant_one.tag, constant_one.f00), (FunctionTag.CONSTANT, 1))
        self.assertEqual([str(r) for r in constant_one.readings], ['IMAGINARY(-)', 'IMAGINARY(-)'])

        balanced = dj_dequantised_solve(tt('0011'))
        self.assertEqual(balanced.tag, FunctionTag.BALANCED)
        self.assertEqual([r.axis.name for r in balanced.readings], ['REAL', 'IMAGINARY'])
        self.assertEqual((balanced.f00, balanced.truth_table.bits), (0, '0011'))
        self.assertEqual(balanced.exponents, (1, 0))

        with self.assertRaises(InvalidFunctionError):
            dj_dequantised_solve(tt('1110'))

    def test_deutsch(self):
        for bits in ('00', '01', '10', '11'):
            self.assertEqual(dj_dequantised_solve(tt(bits)).truth_table.bits, bits)

    def test_every_two_input_function(self):
        started = time.perf_counter()
        for f in truth_tables(2):
            function_class = classify_function(f)
            if not function_class.is_valid:
                with self.assertRaises(InvalidFunctionError):
                    dj_dequantised_solve(f)
                continue
            dense = dj_quantum_solve(f, 'dense')
            block = dj_quantum_solve(f, 'blockstate', cap=3)
            phase = dj_dequantised_solve(f)
            self.assertEqual(dense.tag, function_class.tag)
            self.assertEqual({dense.tag, block.tag, phase.tag}, {dense.tag})
            self.assertEqual(tvd(dense.distribution, block.distribution), 0.0)
            self.assertEqual(dense.outcome, phase.outcome)
            self.assertEqual(phase.truth_table, f)
        self.assertLess(time.perf_counter() - started, 5)

    def test_negation_symmetry(self):
        for f in valid_two_input_tables():
            g = f.negated()
            self.assertEqual(dj_quantum_solve(f).outcome, dj_quantum_solve(g).outcome)
            self.assertNotEqual(dj_dequantised_solve(f).f00, dj_dequantised_solve(g).f00)


class SemiclassicalQftTests(SimpleTestCase):
    def test_qft_circuit(self):
        circuit = qft_circuit(3)
        kinds = [g.kind for g in circuit.gates]
        self.assertEqual(kinds.count(GateKind.H), 3)
        self.assertEqual([g.k for g in circuit.gates if g.kind is GateKind.RK], [2, 3, 2])

    def test_single_qubit_is_hadamard(self):
        probabilities = semiclassical_qft_probabilities([KET_ZERO]).probabilities()
        self.assertAlmostEqual(probabilities['0'], 0.5, delta=1e-12)
        self.assertAlmostEqual(probabilities['1'], 0.5, delta=1e-12)
        self.assertIn(semiclassical_qft_sample([KET_ZERO], run_rng(0)), {'0', '1'})

    def test_basis_input_is_uniform(self):
        counts = semiclassical_qft_counts([KET_ZERO, KET_ONE, KET_ONE], 100_000, seed=1)
        uniform = semiclassical_qft_probabilities([KET_ZERO, KET_ONE, KET_ONE])
        self.assertEqual(len(uniform.outcomes), 8)
        self.assertLess(tvd(counts, uniform), 0.02)

    def test_plus_input_matches_dense(self):
        inputs = [KET_PLUS] * 3
        counts = semiclassical_qft_counts(inputs, 100_000, seed=2)
        self.assertLess(tvd(counts, qft_reference_distribution(inputs)), 0.02)

    def test_exact_distribution_matches_dense(self):
        rng = np.random.default_rng(5)
        for n in (1, 2, 4, 6):
            inputs = random_product_input(rng, n)
            self.assertLess(
                tvd(semiclassical_qft_probabilities(inputs), qft_reference_distribution(inputs)), 1e-9,
            )

    def test_twenty_random_eight_qubit_inputs(self):
        # 4e5 samples keep the expected empirical distance over 256 outcomes well under 0.02.
        rng = np.random.default_rng(8)
        started = time.perf_counter()
        for trial in range(20):
            inputs = random_product_input(rng, 8)
            reference = qft_reference_distribution(inputs)
            self.assertLess(tvd(semiclassical_qft_probabilities(inputs), reference), 1e-9)
            counts = semiclassical_qft_counts(inputs, 400_000, seed=trial)
            self.assertLess(tvd(counts, reference), 0.02)
        self.assertLess(time.perf_counter() - started, 30)

    @given(st.lists(single_qubit_states, min_size=1, max_size=5))
    @hypothesis_settings(max_examples=40, deadline=None)
    def test_product_inputs(self, inputs):
        self.assertLess(tvd(semiclassical_qft_probabilities(inputs), qft_reference_distribution(inputs)), 1e-9)

    def test_rejects_unnormalised_input(self):
        with self.assertRaises(ValueError):
            semiclassical_qft_sample([(1, 1)], run_rng(0))
        with self.assertRaises(ValueError):
            semiclassical_qft_counts([], 10, seed=0)
