import numpy as np


def as_generator(rng=None):
    """Coerce ``None``, an int seed or a Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def worker_streams(seed, workers):
    """Independent generators for ``workers`` MC workers of one master seed."""
    children = np.random.SeedSequence(seed).spawn(max(1, int(workers)))
    return [np.random.default_rng(c) for c in children]


def complex_normal(rng, shape):
    """i.i.d. CN(0, 1) samples: real and imaginary parts N(0, 1/2)."""
    z = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
