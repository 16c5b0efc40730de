"""Named random substreams so every pipeline stage is independently reproducible."""

import numpy as np

# Default seed used by the CLI whenever none is given on the command line or
# through the CKDE_SEED environment variable.
DEFAULT_SEED = 123456789


def substream(seed: int, name: str) -> np.random.Generator:
    """Return a generator for the substream `name` of the root seed.

    The same (seed, name) pair always yields the same stream, and distinct
    names yield statistically independent streams.

    :param seed: root seed, a non-negative integer.
    :param name: label of the substream, e.g. "corpus" or "sampling".
    """
    key = int.from_bytes(name.encode("utf-8"), "little")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))
