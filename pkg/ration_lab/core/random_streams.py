"""
Counter-based random streams keyed by (seed, stream, path index)
"""
import numpy as np

# Stream identifiers keep unrelated consumers of one seed apart
EVALUATION_STREAM = 0
SEIR_STREAM = 1
CALIBRATION_STREAM = 2
INSTANCE_STREAM = 3


def path_rng(seed: int, path: int, stream: int = EVALUATION_STREAM) -> np.random.Generator:
    """Generator whose draws depend only on (seed, stream, path)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(path)))
    return np.random.Generator(np.random.PCG64(sequence))
