"""
One entry point that runs a circuit on any backend and packs the outcome,
or the structured reason it could not be produced, into a RunResult.
"""

import logging
import time
import tracemalloc
from dataclasses import dataclass, fields
from enum import Enum

from django.conf import settings

from . import blockstate, dense, phasebit, stabilizer
from .distribution import Distribution
from .exceptions import (
    InvalidFunctionError,
    NonCliffordGateError,
    ResourceLimitError,
    UnsupportedCircuitError,
)

logger = logging.getLogger(__name__)


class Backend(str, Enum):
    DENSE = 'dense'
    PHASEBIT = 'phasebit'
    BLOCKSTATE = 'blockstate'
    STABILIZER = 'stabilizer'

    def __str__(self):
        return self.value


class FailureReason(str, Enum):
    CAP_EXCEEDED = 'CAP_EXCEEDED'
    NON_CLIFFORD = 'NON_CLIFFORD'
    UNSUPPORTED = 'UNSUPPORTED'
    INVALID_FUNCTION = 'INVALID_FUNCTION'
    RESOURCE_LIMIT = 'RESOURCE_LIMIT'


@dataclass
class RunResult:
    backend: Backend
    width: int
    gate_count: int
    exact: bool
    shots: int = None
    seed: int = None
    distribution: Distribution = None
    marginals: dict = None
    reason: FailureReason = None
    detail: str = ''
    wall_time: float = None
    memory_peak: int = None
    block_report: dict = None

    @property
    def failed(self):
        return self.reason is not None

    def to_dict(self):
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data['backend'] = self.backend.value
        data['reason'] = self.reason.value if self.reason else None
        data['distribution'] = self.distribution.to_dict() if self.distribution else None
        if self.marginals is not None:
            data['marginals'] = {str(q): list(p) for q, p in self.marginals.items()}
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data['backend'] = Backend(data['backend'])
        data['reason'] = FailureReason(data['reason']) if data.get('reason') else None
        if data.get('distribution'):
            data['distribution'] = Distribution.from_dict(data['distribution'])
        if data.get('marginals') is not None:
            data['marginals'] = {int(q): tuple(p) for q, p in data['marginals'].items()}
        return cls(**data)


class _CapFailure(Exception):
    def __init__(self, report):
        self.report = report


@dataclass
class _Outcome:
    distribution: Distribution = None
    marginals: dict = None
    block_report: dict = None


def _run_dense(circuit, exact, shots, seed, cap):
    if exact:
        return _Outcome(dense.run_to_distribution(circuit))
    return _Outcome(dense.sample_run(circuit, shots, seed))


def _run_stabilizer(circuit, exact, shots, seed, cap):
    if exact:
        return _Outcome(stabilizer.exact_distribution(circuit))
    return _Outcome(stabilizer.sample_run(circuit, shots, seed))


def _run_phasebit(circuit, exact, shots, seed, cap):
    distribution = phasebit.run_phasebit(circuit)
    return _Outcome(distribution if exact else distribution.sample(shots, seed))


def _run_blockstate(circuit, exact, shots, seed, cap):
    report = blockstate.run_blockstate(circuit, cap=cap)
    outcome = _Outcome(block_report=report.to_dict())
    if not report.completed:
        raise _CapFailure(report)

    if report.mixture is not None:
        outcome.distribution = report.mixture if exact else report.mixture.sample(shots, seed)
    elif not exact:
        outcome.distribution = report.product.sample(shots, seed)
    elif report.product.support_size() <= 2 ** settings.DEQUANT_MAX_EXPANDED_QUBITS:
        outcome.distribution = report.product.expand()
    else:
        logger.warning(
            f"Product distribution over {report.product.width} qubits is too large to list; reporting marginals"
        )
        outcome.marginals = {q: tuple(float(p) for p in m) for q, m in report.product.marginals().items()}
    return outcome


_RUNNERS = {
    Backend.DENSE: _run_dense,
    Backend.STABILIZER: _run_stabilizer,
    Backend.PHASEBIT: _run_phasebit,
    Backend.BLOCKSTATE: _run_blockstate,
}

_FAILURES = (
    (NonCliffordGateError, FailureReason.NON_CLIFFORD),
    (UnsupportedCircuitError, FailureReason.UNSUPPORTED),
    (InvalidFunctionError, FailureReason.INVALID_FUNCTION),
    (ResourceLimitError, FailureReason.RESOURCE_LIMIT),
)


def run_backend(circuit, backend, cap=None, shots=None, seed=None, exact=True):
    """
    Run ``circuit`` on ``backend``. Strong runs (``exact``) return the exact
    distribution; weak runs draw ``shots`` samples from ``seed``. Backend
    limits come back as a failed RunResult, never as an exception.
    """
    backend = Backend(backend)
    if not exact and not shots:
        raise ValueError("a sampled run needs a positive shot count")
    seed = settings.DEQUANT_DEFAULT_SEED if seed is None else seed
    cap = settings.DEQUANT_DEFAULT_BLOCK_CAP if cap is None else cap
    result = RunResult(
        backend, circuit.width, circuit.gate_count, exact,
        shots=None if exact else shots, seed=None if exact else seed,
    )

    logger.info(f"Running {circuit.gate_count} gates on {backend} ({'exact' if exact else f'{shots} shots'})")
    tracing = tracemalloc.is_tracing()
    if not tracing:
        tracemalloc.start()
    tracemalloc.reset_peak()
    started = time.perf_counter()
    try:
        outcome = _RUNNERS[backend](circuit, exact, shots, seed, cap)
        result.distribution = outcome.distribution
        result.marginals = outcome.marginals
        result.block_report = outcome.block_report
    except _CapFailure as exc:
        report = exc.report
        result.reason = FailureReason.CAP_EXCEEDED
        result.detail = f"gate {report.failing_gate} needs a {report.attempted_size}-qubit block, cap is {report.cap}"
        result.block_report = report.to_dict()
    except tuple(error for error, _ in _FAILURES) as exc:
        result.reason = next(reason for error, reason in _FAILURES if isinstance(exc, error))
        result.detail = str(exc)
    finally:
        result.wall_time = time.perf_counter() - started
        _, result.memory_peak = tracemalloc.get_traced_memory()
        if not tracing:
            tracemalloc.stop()

    if result.failed:
        logger.info(f"{backend} could not run the circuit: {result.reason.value} ({result.detail})")
    else:
        logger.info(f"{backend} finished in {result.wall_time:.3f}s, peak memory {result.memory_peak} bytes")
    return result
