"""
Certification harness: distances between outcome distributions, seeded
sampling fanned out over Celery, and the de-quantisation certificate that
compares a candidate backend with a reference backend on one circuit.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, fields

from django.conf import settings

from .circuit import (
    gate_counts,
    is_clifford,
    recommend_backend,
    serialize,
    span_profile,
    static_block_bound,
)
from .distribution import Distribution, ProductDistribution, merge_counts
from .rng import chunk_sizes
from .runner import Backend, RunResult
from .tasks import run_backend_task, sample_chunk_task

logger = logging.getLogger(__name__)


def tvd(p, q):
    """Total variation distance; empirical distributions are normalised by their shots."""
    if not p.outcomes or not q.outcomes:
        raise ValueError("total variation distance needs two non-empty distributions")
    if p.width != q.width:
        raise ValueError(f"distributions over {p.width} and {q.width} bits cannot be compared")
    pp, qq = p.probabilities(), q.probabilities()
    return 0.5 * math.fsum(abs(pp.get(bits, 0.0) - qq.get(bits, 0.0)) for bits in pp.keys() | qq.keys())


def sample(source, shots, seed=None):
    """
    Draw ``shots`` outcomes from a Distribution, a ProductDistribution or a
    successful RunResult. Each chunk of shots is a separate task keyed by
    (seed, chunk), so the counts do not depend on how the chunks are scheduled.
    """
    seed = settings.DEQUANT_DEFAULT_SEED if seed is None else seed
    if isinstance(source, RunResult):
        if source.distribution is None:
            raise ValueError(f"run on {source.backend} has no distribution to sample")
        source = source.distribution
    if isinstance(source, ProductDistribution):
        return source.sample(shots, seed)
    if not isinstance(source, Distribution):
        raise TypeError(f"cannot sample from {type(source).__name__}")

    outcomes = list(source.outcomes)
    probabilities = list(source.probabilities().values())
    sizes = chunk_sizes(shots, settings.DEQUANT_SHOT_CHUNK)
    pending = [
        sample_chunk_task.delay(outcomes, probabilities, seed, chunk, size)
        for chunk, size in enumerate(sizes)
    ]
    logger.debug(f"Dispatched {len(pending)} sampling chunks for {shots} shots")
    return Distribution.empirical(merge_counts(result.get() for result in pending))


@dataclass
class DequantCertificate:
    circuit_sha256: str
    width: int
    gate_count: int
    reference: str
    candidate: str
    gamma: float
    mode: str
    verdict: bool
    tvd: float = None
    shots: int = None
    seed: int = None
    cap: int = None
    reason: str = None
    detail: str = ''
    candidate_max_block_size: int = None
    candidate_memory_high_water: int = None
    reference_wall_time: float = None
    candidate_wall_time: float = None
    reference_memory_peak: int = None
    candidate_memory_peak: int = None
    schema_version: int = None

    def __post_init__(self):
        if self.schema_version is None:
            self.schema_version = settings.DEQUANT_CERTIFICATE_SCHEMA

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def circuit_digest(circuit):
    """sha256 of the serialised circuit followed by each bound truth table."""
    digest = hashlib.sha256(serialize(circuit).encode())
    for name in sorted(circuit.oracles):
        digest.update(f"tt {name} {circuit.oracles[name].bits}\n".encode())
    return digest.hexdigest()


def _dispatch(circuit, backend, **options):
    oracle_bits = {name: table.bits for name, table in circuit.oracles.items()}
    payload = run_backend_task.delay(serialize(circuit), oracle_bits, backend.value, **options).get()
    return RunResult.from_dict(payload)


def certify(circuit, reference, candidate, gamma, shots=None, seed=None, cap=None, timings=False):
    """
    Compare ``candidate`` against ``reference`` on ``circuit``. The reference
    always runs strong; the candidate runs strong unless ``shots`` is given.
    Wall time and traced memory are only recorded with ``timings`` so that
    a certificate is reproducible byte for byte.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    reference, candidate = Backend(reference), Backend(candidate)
    circuit.require_oracles()
    seed = settings.DEQUANT_DEFAULT_SEED if seed is None else seed
    cap = settings.DEQUANT_DEFAULT_BLOCK_CAP if cap is None else cap
    weak = shots is not None

    logger.info(f"Certifying {candidate} against {reference} at gamma={gamma} ({'weak' if weak else 'strong'})")
    reference_run = _dispatch(circuit, reference, cap=cap, exact=True)
    candidate_run = _dispatch(circuit, candidate, cap=cap, shots=shots, seed=seed, exact=not weak)

    certificate = DequantCertificate(
        circuit_sha256=circuit_digest(circuit),
        width=circuit.width,
        gate_count=circuit.gate_count,
        reference=reference.value,
        candidate=candidate.value,
        gamma=gamma,
        mode='weak' if weak else 'strong',
        verdict=False,
        shots=shots if weak else None,
        seed=seed if weak else None,
        cap=cap if Backend.BLOCKSTATE in (reference, candidate) else None,
    )
    if candidate_run.block_report:
        certificate.candidate_max_block_size = candidate_run.block_report['max_block_size']
        certificate.candidate_memory_high_water = candidate_run.block_report['memory_high_water']
    if timings:
        certificate.reference_wall_time = reference_run.wall_time
        certificate.candidate_wall_time = candidate_run.wall_time
        certificate.reference_memory_peak = reference_run.memory_peak
        certificate.candidate_memory_peak = candidate_run.memory_peak

    if reference_run.failed:
        certificate.reason = f"REFERENCE_{reference_run.reason.value}"
        certificate.detail = reference_run.detail
    elif candidate_run.failed:
        certificate.reason = candidate_run.reason.value
        certificate.detail = candidate_run.detail
    elif reference_run.distribution is None or candidate_run.distribution is None:
        certificate.reason = 'RESOURCE_LIMIT'
        certificate.detail = "outcome distribution too large to list"
    else:
        certificate.tvd = tvd(reference_run.distribution, candidate_run.distribution)
        certificate.verdict = certificate.tvd < gamma
    logger.info(f"Certificate verdict {certificate.verdict} (tvd={certificate.tvd}, reason={certificate.reason})")
    return certificate


def analyze(circuit, block_cap=None):
    block_cap = settings.DEQUANT_DEFAULT_BLOCK_CAP if block_cap is None else block_cap
    recommendation = recommend_backend(circuit, block_cap)
    profile = span_profile(circuit)
    return {
        'width': circuit.width,
        'gate_count': circuit.gate_count,
        'gate_counts': dict(sorted(gate_counts(circuit).items())),
        'clifford': is_clifford(circuit),
        'static_block_bound': static_block_bound(circuit),
        'max_span': max(profile) if profile else 0,
        'block_cap': block_cap,
        'recommended_backend': recommendation.backend,
        'rationale': recommendation.rationale,
    }
