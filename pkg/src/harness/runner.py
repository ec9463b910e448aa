# src/harness/runner.py

import logging
import time
from concurrent.futures import ThreadPoolExecutor
import numpy as np

from src.utils.errors import ArgumentError
from src.utils.metrics import HarnessMetrics

logger = logging.getLogger(__name__)

DEFAULT_BATCH = 256


def replica_batches(replicas, batch_size):
    """Split replica ids 0..R-1 into consecutive batches."""
    if replicas < 1:
        raise ArgumentError(f"Need at least one replica, got {replicas}")
    if batch_size < 1:
        raise ArgumentError(f"Batch size must be positive, got {batch_size}")
    ids = np.arange(replicas)
    return [ids[i:i + batch_size].tolist() for i in range(0, replicas, batch_size)]


class MonteCarloRunner:
    """
    Fans replica batches out to worker threads. Each call of the batch function
    gets a list of replica ids and returns arrays whose leading axis runs over
    that batch; results are concatenated in replica order, so the output does
    not depend on the number of workers or on the batch size as long as the
    batch function seeds each replica from its id.

    Args:
        workers (int): Thread count
        batch_size (int): Replicas per batch
        metrics (HarnessMetrics, optional): Instruments to update
    """

    def __init__(self, workers=1, batch_size=DEFAULT_BATCH, metrics=None):
        self.workers = max(1, int(workers))
        self.batch_size = int(batch_size)
        self.metrics = metrics or HarnessMetrics()

    def map(self, experiment, replicas, batch_fn):
        """
        Returns:
            array or tuple of arrays: per-replica results stacked along axis 0
        """
        batches = replica_batches(replicas, self.batch_size)
        start = time.perf_counter()
        if self.workers == 1 or len(batches) == 1:
            results = [batch_fn(b) for b in batches]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                results = list(executor.map(batch_fn, batches))
        self.metrics.replicas.labels(experiment=experiment).inc(replicas)
        logger.debug(f"{experiment}: {replicas} replicas in {len(batches)} batches, "
                     f"{time.perf_counter() - start:.2f}s")
        if isinstance(results[0], tuple):
            return tuple(np.concatenate([np.asarray(r[i]) for r in results]) for i in range(len(results[0])))
        return np.concatenate([np.asarray(r) for r in results])
