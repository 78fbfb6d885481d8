"""One seed, independent random streams per consumer."""
import numpy as np

INIT = 0
SHUFFLE = 1
DATA = 2


def derived_rng(seed: int, stream: int) -> np.random.Generator:
    """Generator for ``stream`` derived from ``seed`` via ``SeedSequence`` spawn keys."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream,)))
