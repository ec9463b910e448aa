# src/fields/streams.py

"""
Replayable random streams.

Every replica owns its own numpy Generator derived from
SeedSequence([seed, experiment key, replica, tag]), so a replica's draws do
not depend on which other replicas share its batch or on the worker that runs it.
"""

import hashlib
import logging
import numpy as np

from src.utils.errors import ArgumentError

logger = logging.getLogger(__name__)

# Stream tags keep independent noise sources of one replica apart.
TAG_SPACE_NOISE = 0
TAG_OU_INITIAL = 1
TAG_OU_INCREMENTS = 2
TAG_POTENTIAL = 3
TAG_BURGERS = 4
TAG_FRACTIONAL = 5


def experiment_key(experiment):
    """64-bit integer derived from the experiment name."""
    return int(hashlib.md5(str(experiment).encode("utf-8")).hexdigest()[:16], 16)


def replica_seed_sequence(seed, experiment, replica, tag=TAG_SPACE_NOISE):
    if seed < 0 or replica < 0:
        raise ArgumentError(f"Seed and replica must be nonnegative, got seed={seed}, replica={replica}")
    return np.random.SeedSequence([int(seed), experiment_key(experiment), int(replica), int(tag)])


def replica_rng(seed, experiment, replica, tag=TAG_SPACE_NOISE):
    return np.random.Generator(np.random.PCG64(replica_seed_sequence(seed, experiment, replica, tag)))


def _standard_complex(rng, shape):
    # real and imaginary parts interleaved per sample so block size never changes the stream
    parts = rng.standard_normal((shape[0], 2) + tuple(shape[1:])) if shape else rng.standard_normal(2)
    if not shape:
        return parts[0] + 1j * parts[1]
    return parts[:, 0] + 1j * parts[:, 1]


def hermitian_gaussian(z, grid, variance=1.0):
    """
    Turn i.i.d. complex normals z (E|z|^2 = 2) into Hermitian amplitudes h with
    h(-k) = conj(h(k)) and E|h(k)|^2 = variance; self-paired modes come out real.
    """
    z = np.asarray(z, dtype=np.complex128)
    h = (z + np.conj(grid.reflect(z))) / np.sqrt(2.0)
    return h * np.sqrt(variance / 2.0)


class NoiseStream:
    """
    Cursor over the Hermitian amplitudes of one replica.

    Args:
        grid (TorusGrid): Mode lattice of the amplitudes
        seed (int): Master seed
        experiment (str): Experiment name mixed into the seed
        replica (int): Replica index
        tag (int): Stream tag
    """

    def __init__(self, grid, seed, experiment, replica, tag=TAG_SPACE_NOISE):
        self.grid = grid
        self.seed = int(seed)
        self.experiment = experiment
        self.replica = int(replica)
        self.tag = int(tag)
        self.rng = replica_rng(seed, experiment, replica, tag)
        self.drawn = 0

    def next_block(self, n_steps):
        """Standard Hermitian amplitudes of shape (n_steps, *grid.shape)."""
        if n_steps < 0:
            raise ArgumentError(f"Block length must be nonnegative, got {n_steps}")
        z = _standard_complex(self.rng, (n_steps,) + self.grid.shape)
        self.drawn += n_steps
        return hermitian_gaussian(z, self.grid)

    def next(self):
        return self.next_block(1)[0]


class EnsembleNoise:
    """A batch of NoiseStreams advanced together; draws have a replica axis after the step axis."""

    def __init__(self, grid, seed, experiment, replicas, tag=TAG_SPACE_NOISE):
        self.grid = grid
        self.replicas = [int(r) for r in replicas]
        if not self.replicas:
            raise ArgumentError("EnsembleNoise needs at least one replica")
        self.streams = [NoiseStream(grid, seed, experiment, r, tag) for r in self.replicas]

    def __len__(self):
        return len(self.streams)

    def next_block(self, n_steps):
        """Shape (n_steps, n_replicas, *grid.shape)."""
        return np.stack([s.next_block(n_steps) for s in self.streams], axis=1)

    def next(self):
        """Shape (n_replicas, *grid.shape)."""
        return np.stack([s.next() for s in self.streams])
