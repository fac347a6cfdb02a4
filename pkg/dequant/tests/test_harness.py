import json

import numpy as np
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings, strategies as st

from dequant.algorithms import build_dj_circuit
from dequant.blockstate import run_blockstate
from dequant.circuit import TruthTable, parse_circuit
from dequant.distribution import Distribution, Mode
from dequant.exceptions import UnresolvedOracleError
from dequant.harness import analyze, certify, circuit_digest, sample, tvd
from dequant.runner import Backend, FailureReason, RunResult, run_backend

from .factories import bell_circuit, ghz_circuit, random_clifford_circuit, separable_circuit

TWO_BIT_OUTCOMES = ('00', '01', '10', '11')


def dj(bits):
    return build_dj_circuit(2).bind_oracles({'f': TruthTable.from_bits(bits)})


def two_bit_distribution(weights):
    total = sum(weights)
    return Distribution.exact({bits: w / total for bits, w in zip(TWO_BIT_OUTCOMES, weights)})


two_bit_distributions = st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4).map(two_bit_distribution)


class TvdTests(SimpleTestCase):
    def test_examples(self):
        half = Distribution.exact({'0': 0.5, '1': 0.5})
        zero = Distribution.exact({'0': 1.0})
        one = Distribution.exact({'1': 1.0})
        self.assertEqual(tvd(zero, one), 1.0)
        self.assertEqual(tvd(half, zero), 0.5)
        self.assertEqual(tvd(half, half), 0.0)

    def test_empirical_is_normalised(self):
        counts = Distribution.empirical({'0': 30, '1': 70})
        self.assertAlmostEqual(tvd(counts, Distribution.exact({'0': 0.3, '1': 0.7})), 0.0, delta=1e-12)

    def test_rejects_mismatched_widths(self):
        with self.assertRaises(ValueError):
            tvd(Distribution.exact({'0': 1.0}), Distribution.exact({'00': 1.0}))
        with self.assertRaises(ValueError):
            tvd(Distribution({}), Distribution.exact({'0': 1.0}))

    @given(two_bit_distributions, two_bit_distributions, two_bit_distributions)
    @hypothesis_settings(max_examples=60, deadline=None)
    def test_metric(self, p, q, r):
        self.assertEqual(tvd(p, p), 0.0)
        self.assertAlmostEqual(tvd(p, q), tvd(q, p), delta=1e-15)
        self.assertGreaterEqual(tvd(p, q), 0.0)
        self.assertLessEqual(tvd(p, q), 1.0 + 1e-12)
        self.assertLessEqual(tvd(p, r), tvd(p, q) + tvd(q, r) + 1e-12)


class SampleTests(SimpleTestCase):
    def test_point_mass(self):
        counts = sample(Distribution.exact({'0': 1.0}), 100, seed=0)
        self.assertEqual(counts.mode, Mode.EMPIRICAL)
        self.assertEqual(dict(counts.outcomes), {'0': 100})

    def test_bell_frequencies(self):
        bell = Distribution.exact({'00': 0.5, '11': 0.5})
        counts = sample(bell, 10_000, seed=1)
        self.assertEqual(set(counts.outcomes), {'00', '11'})
        self.assertLess(abs(counts.outcomes['00'] - 5000), 300)
        self.assertEqual(dict(counts.outcomes), dict(sample(bell, 10_000, seed=1).outcomes))

    def test_empirical_converges(self):
        weights = np.arange(1, 17, dtype=float)
        exact = Distribution.exact({format(i, '04b'): float(w) for i, w in enumerate(weights / weights.sum())})
        for seed in (11, 12, 13):
            distances = [tvd(sample(exact, shots, seed=seed), exact) for shots in (10**2, 10**3, 10**4, 10**5)]
            if all(b <= a for a, b in zip(distances, distances[1:])) and distances[-1] < 0.02:
                break
        else:
            self.fail(f"empirical tvd did not shrink with shots: {distances}")

    def test_tasks_match_in_process_sampling(self):
        distribution = two_bit_distribution([1, 2, 3, 4])
        self.assertEqual(
            dict(sample(distribution, 10_000, seed=7).outcomes),
            dict(distribution.sample(10_000, seed=7).outcomes),
        )

    @override_settings(DEQUANT_SHOT_CHUNK=100)
    def test_shots_add_up_across_chunks(self):
        counts = sample(two_bit_distribution([1, 1, 1, 1]), 1050, seed=2)
        self.assertEqual(counts.shots, 1050)

    def test_from_run_result_and_product(self):
        result = run_backend(bell_circuit(), 'stabilizer')
        self.assertEqual(sample(result, 50, seed=0).shots, 50)

        product = run_blockstate(separable_circuit(100), cap=1).product
        counts = sample(product, 500, seed=0)
        self.assertEqual((counts.shots, counts.width), (500, 100))

    def test_rejects_failed_run(self):
        failed = run_backend(bell_circuit(), 'blockstate', cap=1)
        with self.assertRaises(ValueError):
            sample(failed, 10, seed=0)
        with self.assertRaises(TypeError):
            sample({'0': 1.0}, 10, seed=0)


class RunBackendTests(SimpleTestCase):
    def test_failures_are_results(self):
        non_clifford = parse_circuit("qubits 1\nt 0\nmeasure 0")
        self.assertEqual(run_backend(non_clifford, 'stabilizer').reason, FailureReason.NON_CLIFFORD)
        self.assertEqual(run_backend(bell_circuit(), 'phasebit').reason, FailureReason.UNSUPPORTED)
        capped = run_backend(bell_circuit(), 'blockstate', cap=1)
        self.assertEqual(capped.reason, FailureReason.CAP_EXCEEDED)
        self.assertEqual(capped.block_report['failing_gate'], 1)

    def test_weak_run_needs_shots(self):
        with self.assertRaises(ValueError):
            run_backend(bell_circuit(), 'dense', exact=False)

    def test_dict_round_trip(self):
        result = run_backend(bell_circuit(), Backend.DENSE, shots=100, seed=3, exact=False)
        self.assertEqual((result.shots, result.seed), (100, 3))
        data = json.loads(json.dumps(result.to_dict()))
        restored = RunResult.from_dict(data)
        self.assertEqual(restored.backend, Backend.DENSE)
        self.assertEqual(dict(restored.distribution.outcomes), dict(result.distribution.outcomes))

    @override_settings(DEQUANT_MAX_EXPANDED_QUBITS=10)
    def test_wide_product_reports_marginals(self):
        result = run_backend(separable_circuit(40), 'blockstate', cap=1)
        self.assertFalse(result.failed)
        self.assertIsNone(result.distribution)
        self.assertEqual(len(result.marginals), 40)
        self.assertAlmostEqual(result.marginals[0][1], 1.0, delta=1e-12)
        restored = RunResult.from_dict(json.loads(json.dumps(result.to_dict())))
        self.assertEqual(restored.marginals[1], result.marginals[1])


class CertifyTests(SimpleTestCase):
    def test_dj_phasebit_and_blockstate(self):
        for candidate in ('phasebit', 'blockstate'):
            certificate = certify(dj('0110'), 'dense', candidate, gamma=1e-9)
            self.assertTrue(certificate.verdict, candidate)
            self.assertEqual(certificate.tvd, 0.0)
            self.assertEqual(certificate.mode, 'strong')
        self.assertEqual(certify(dj('0110'), 'dense', 'blockstate', gamma=1e-9).candidate_max_block_size, 3)

    def test_random_clifford_stabilizer(self):
        certificate = certify(random_clifford_circuit(12), 'dense', 'stabilizer', gamma=1e-6)
        self.assertTrue(certificate.verdict)
        self.assertLess(certificate.tvd, 1e-9)
        self.assertNotIn('cap', certificate.to_dict())

    def test_bell_cap_one_fails(self):
        certificate = certify(bell_circuit(), 'dense', 'blockstate', gamma=0.01, cap=1)
        self.assertFalse(certificate.verdict)
        self.assertEqual(certificate.reason, 'CAP_EXCEEDED')
        self.assertIsNone(certificate.tvd)
        self.assertEqual(certificate.to_dict()['cap'], 1)
        self.assertNotIn('tvd', certificate.to_dict())

    @override_settings(DEQUANT_DENSE_MAX_QUBITS=2)
    def test_reference_failure_is_flagged(self):
        certificate = certify(ghz_circuit(3), 'dense', 'stabilizer', gamma=0.01)
        self.assertFalse(certificate.verdict)
        self.assertEqual(certificate.reason, 'REFERENCE_RESOURCE_LIMIT')

    def test_weak_mode(self):
        certificate = certify(bell_circuit(), 'dense', 'stabilizer', gamma=0.05, shots=10_000, seed=3)
        self.assertTrue(certificate.verdict)
        self.assertEqual((certificate.mode, certificate.shots, certificate.seed), ('weak', 10_000, 3))

    def test_reproducible(self):
        first = certify(bell_circuit(), 'dense', 'stabilizer', gamma=0.05, shots=2000, seed=5)
        second = certify(bell_circuit(), 'dense', 'stabilizer', gamma=0.05, shots=2000, seed=5)
        self.assertEqual(first.to_json(), second.to_json())
        self.assertNotIn('reference_wall_time', first.to_dict())

    def test_timings(self):
        data = certify(bell_circuit(), 'dense', 'stabilizer', gamma=0.01, timings=True).to_dict()
        self.assertGreaterEqual(data['reference_wall_time'], 0.0)
        self.assertIn('candidate_memory_peak', data)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(ValueError):
            certify(bell_circuit(), 'dense', 'stabilizer', gamma=0)
        with self.assertRaises(ValueError):
            certify(bell_circuit(), 'dense', 'quantum', gamma=0.1)
        with self.assertRaises(UnresolvedOracleError):
            certify(build_dj_circuit(2), 'dense', 'phasebit', gamma=0.1)

    def test_digest_covers_oracles(self):
        self.assertNotEqual(circuit_digest(dj('0011')), circuit_digest(dj('0101')))
        self.assertEqual(circuit_digest(dj('0011')), circuit_digest(dj('0011')))
        self.assertEqual(len(circuit_digest(bell_circuit())), 64)


class AnalyzeTests(SimpleTestCase):
    def test_clifford(self):
        report = analyze(bell_circuit())
        self.assertTrue(report['clifford'])
        self.assertEqual(report['recommended_backend'], 'stabilizer')
        self.assertEqual(report['gate_counts'], {'cnot': 1, 'h': 1, 'measure': 1})
        self.assertEqual(report['static_block_bound'], 2)

    def test_non_clifford(self):
        report = analyze(separable_circuit(5), block_cap=2)
        self.assertFalse(report['clifford'])
        self.assertEqual(report['recommended_backend'], 'blockstate')
        self.assertEqual(report['max_span'], 0)
        self.assertEqual(report['block_cap'], 2)
