import json
import logging
import sys
from pathlib import Path

import pandas as pd
from django.core.management.base import BaseCommand, CommandError

from dequant.algorithms import census_table, dj_dequantised_solve, dj_quantum_solve
from dequant.circuit import TruthTable, load_truth_table, parse_circuit
from dequant.exceptions import BackendFailure, DequantError
from dequant.harness import analyze, certify
from dequant.runner import Backend, run_backend

logger = logging.getLogger(__name__)

BACKENDS = [b.value for b in Backend]

VERDICT_FALSE = 2


class Command(BaseCommand):
    help = "Run circuits on the classical backends and certify de-quantisation."

    def run_from_argv(self, argv):
        # Argument errors surface as CommandError before execute() runs.
        try:
            super().run_from_argv(argv)
        except CommandError as e:
            self.stderr.write(f"CommandError: {e}")
            sys.exit(e.returncode)

    def add_arguments(self, parser):
        parser.called_from_command_line = False
        subcommands = parser.add_subparsers(dest='subcommand', title='subcommands')

        run = subcommands.add_parser('run', help="Simulate a circuit on one backend")
        self._circuit_arguments(run)
        run.add_argument('--backend', choices=BACKENDS, required=True)
        run.add_argument('--cap', type=int, default=None, help="Block cap for the blockstate backend")
        run.add_argument('--shots', type=int, default=None)
        run.add_argument('--seed', type=int, default=None)
        run.add_argument('--exact', action='store_true', help="Compute the exact distribution even when --shots is given")
        run.add_argument('--table', action='store_true', help="Print the distribution as a table instead of JSON")

        analyze_parser = subcommands.add_parser('analyze', help="Report Clifford status, block bound and recommended backend")
        self._circuit_arguments(analyze_parser)
        analyze_parser.add_argument('--cap', type=int, default=None)
        analyze_parser.add_argument('--json', action='store_true')

        compare = subcommands.add_parser('compare', help="Certify a candidate backend against a reference")
        self._circuit_arguments(compare)
        compare.add_argument('--reference', choices=BACKENDS, default=Backend.DENSE.value)
        compare.add_argument('--candidate', choices=BACKENDS, required=True)
        compare.add_argument('--gamma', type=float, required=True)
        compare.add_argument('--cap', type=int, default=None)
        compare.add_argument('--shots', type=int, default=None)
        compare.add_argument('--seed', type=int, default=None)
        compare.add_argument('--timings', action='store_true', help="Record wall time and traced memory")

        dj = subcommands.add_parser('dj', help="Solve a Deutsch-Jozsa instance")
        dj.add_argument('--n', type=int, choices=[1, 2], required=True)
        dj.add_argument('--tt', required=True, help="Truth table bits, e.g. 0110")
        dj.add_argument('--method', choices=['quantum', 'dequantised'], default='quantum')
        dj.add_argument('--backend', choices=BACKENDS, default=Backend.DENSE.value)
        dj.add_argument('--cap', type=int, default=None)

        census = subcommands.add_parser('census', help="Count constant, balanced and invalid functions")
        census.add_argument('--n', type=int, required=True)
        census.add_argument('--all', action='store_true', help="Show every input size from 1 to n")

    def _circuit_arguments(self, parser):
        parser.add_argument('--circuit', required=True, help="Path to a .dqc file")
        parser.add_argument(
            '--oracle', action='append', default=[], metavar='NAME=PATH',
            help="Bind an oracle to a .tt file; repeatable",
        )

    def handle(self, *args, **options):
        if options['verbosity'] >= 3:
            logging.getLogger('dequant').setLevel(logging.DEBUG)
        subcommand = options.get('subcommand')
        if not subcommand:
            raise CommandError("choose a subcommand: run, analyze, compare, dj or census", returncode=1)
        try:
            getattr(self, f'_handle_{subcommand}')(options)
        except (DequantError, ValueError, OSError) as e:
            logger.debug(f"{subcommand} failed", exc_info=True)
            raise CommandError(str(e), returncode=1)

    def _load_circuit(self, options):
        circuit = parse_circuit(Path(options['circuit']).read_text())
        tables = {}
        for binding in options['oracle']:
            name, sep, path = binding.partition('=')
            if not sep or not name or not path:
                raise CommandError(f"--oracle expects NAME=PATH, got {binding!r}", returncode=1)
            tables[name] = load_truth_table(Path(path).read_text())
        return circuit.bind_oracles(tables) if tables else circuit

    def _emit(self, data):
        self.stdout.write(json.dumps(data, indent=2, sort_keys=True))

    def _handle_run(self, options):
        circuit = self._load_circuit(options)
        exact = options['exact'] or options['shots'] is None
        result = run_backend(
            circuit, options['backend'], cap=options['cap'],
            shots=options['shots'], seed=options['seed'], exact=exact,
        )
        if options['table'] and result.distribution is not None:
            self.stdout.write(result.distribution.to_frame().to_string(index=False))
        else:
            self._emit(result.to_dict())
        if result.failed:
            raise CommandError(f"{result.backend} failed: {result.reason.value}", returncode=VERDICT_FALSE)

    def _handle_analyze(self, options):
        report = analyze(self._load_circuit(options), options['cap'])
        if options['json']:
            self._emit(report)
            return
        rows = dict(report)
        rows['gate_counts'] = ', '.join(f"{kind}={count}" for kind, count in report['gate_counts'].items())
        self.stdout.write(pd.Series(rows).to_string())

    def _handle_compare(self, options):
        certificate = certify(
            self._load_circuit(options), options['reference'], options['candidate'], options['gamma'],
            shots=options['shots'], seed=options['seed'], cap=options['cap'], timings=options['timings'],
        )
        self.stdout.write(certificate.to_json())
        if not certificate.verdict:
            raise CommandError(f"verdict false ({certificate.reason or f'tvd {certificate.tvd}'})", returncode=VERDICT_FALSE)

    def _handle_dj(self, options):
        f = TruthTable.from_bits(options['tt'])
        if f.n_inputs != options['n']:
            raise CommandError(f"--tt has {len(f)} bits but --n {options['n']} needs {2 ** options['n']}", returncode=1)
        if options['method'] == 'dequantised':
            solution = dj_dequantised_solve(f)
            self._emit({
                'method': 'dequantised',
                'classification': solution.tag.value,
                'readings': [str(r) for r in solution.readings],
                'outcome': solution.outcome,
                'f00': solution.f00,
                'truth_table': solution.truth_table.bits,
            })
            return
        try:
            solution = dj_quantum_solve(f, options['backend'], cap=options['cap'])
        except BackendFailure as e:
            raise CommandError(str(e), returncode=VERDICT_FALSE)
        self._emit({
            'method': 'quantum',
            'backend': solution.backend,
            'classification': solution.tag.value,
            'outcome': solution.outcome,
            'distribution': dict(solution.distribution.probabilities()),
        })

    def _handle_census(self, options):
        table = census_table(options['n'])
        if not options['all']:
            table = table.tail(1)
        self.stdout.write(table.to_string(index=False))
