"""Named, counter-based random streams.

Every random quantity in the package is drawn from a Philox generator keyed
by ``(seed, name)``.  Two calls with the same pair always produce the same
stream, independent of call order or thread count, and no global state is
touched.
"""

import hashlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    """Return the generator for the stream ``name`` under ``seed``.

    Parameters
    ----------
    seed : int
        Non-negative run seed.
    name : str
        Stream label, e.g. ``"probe-points"``.

    Returns
    -------
    numpy.random.Generator
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    digest = hashlib.sha256(f"{int(seed)}:{name}".encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
