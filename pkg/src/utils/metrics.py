# src/utils/metrics.py

import logging
from prometheus_client import CollectorRegistry, Counter, Histogram, Gauge, generate_latest, write_to_textfile

logger = logging.getLogger(__name__)


class HarnessMetrics:
    """Prometheus instruments of one runner, kept in their own registry."""

    def __init__(self, registry=None):
        self.registry = registry or CollectorRegistry()
        self.replicas = Counter('parapde_replicas_total', 'Replicas simulated', ['experiment'],
                                registry=self.registry)
        self.duration = Histogram('parapde_experiment_seconds', 'Experiment wall time', ['experiment'],
                                  registry=self.registry)
        self.check_failures = Counter('parapde_check_failures_total', 'Failed acceptance checks', ['experiment'],
                                      registry=self.registry)
        self.rows = Gauge('parapde_last_run_rows', 'Report rows of the last run', ['experiment'],
                          registry=self.registry)

    def record_run(self, experiment, seconds, n_rows, n_failures):
        self.duration.labels(experiment=experiment).observe(seconds)
        self.rows.labels(experiment=experiment).set(n_rows)
        if n_failures:
            self.check_failures.labels(experiment=experiment).inc(n_failures)

    def latest(self):
        return generate_latest(self.registry)

    def export(self, path):
        """Write the registry in the text exposition format; no-op without a path."""
        if not path:
            return
        write_to_textfile(path, self.registry)
        logger.info(f"Wrote metrics to {path}")
