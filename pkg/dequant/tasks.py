import logging

from celery import shared_task
from django.conf import settings

from .circuit import TruthTable, parse_circuit
from .distribution import sample_chunk
from .runner import run_backend


# Configure logging
logging.basicConfig(
    level=getattr(logging, str(settings.DEQUANT_LOG_LEVEL).upper(), logging.WARNING),
    format=(
        '%(asctime)s - %(levelname)s - %(name)s - %(module)s - '
        '%(funcName)s - line:%(lineno)d - %(process)d - '
        '%(threadName)s - %(message)s'
    ),
    handlers=(
        logging.StreamHandler(),
    )
)

logger = logging.getLogger(__name__)


@shared_task
def run_backend_task(circuit_text, oracle_bits, backend, cap=None, shots=None, seed=None, exact=True):
    """Run one backend on a serialised circuit; returns RunResult.to_dict()."""
    try:
        circuit = parse_circuit(circuit_text)
        tables = {name: TruthTable.from_bits(bits) for name, bits in (oracle_bits or {}).items()}
        if tables:
            circuit = circuit.bind_oracles(tables)
        logger.debug(f"Task received {circuit.gate_count} gates for {backend}")
        return run_backend(circuit, backend, cap=cap, shots=shots, seed=seed, exact=exact).to_dict()
    except Exception as e:
        logger.error(f"Backend task for {backend} failed: {e}", exc_info=True)
        raise


@shared_task
def sample_chunk_task(outcomes, probabilities, seed, chunk, size):
    logger.debug(f"Sampling chunk {chunk}: {size} shots over {len(outcomes)} outcomes")
    return sample_chunk(outcomes, probabilities, seed, chunk, size)
