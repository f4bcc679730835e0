import numpy as np

RNG_ALGORITHM = "numpy.PCG64+SeedSequence"

_SEED_MODULUS = 2**64


class RandomStream:
    """
    A seeded, reproducible stream of uniform doubles in [0, 1).

    Streams use numpy's PCG64 bit generator seeded through `SeedSequence`. A
    derived stream `derive(i)` uses the same entropy with spawn key `(..., i)`, so
    `(seed, batch_index)` fully determines every batch. A stream is single-owner:
    do not share one instance between threads.

    Args:
        seed: Any 64-bit integer. Negative seeds are taken modulo 2**64.
        spawn_key: Derivation path from the root stream.
    """

    algorithm = RNG_ALGORITHM

    def __init__(self, seed: int, *, spawn_key: tuple[int, ...] = ()):
        self._seed = seed
        self._spawn_key = spawn_key
        sequence = np.random.SeedSequence(seed % _SEED_MODULUS, spawn_key=spawn_key)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def spawn_key(self) -> tuple[int, ...]:
        return self._spawn_key

    def derive(self, index: int) -> "RandomStream":
        """
        Get an independent child stream.

        Args:
            index: Child index, e.g. a batch number.

        Returns:
            RandomStream: The stream for `(seed, *spawn_key, index)`.
        """
        return RandomStream(self._seed, spawn_key=(*self._spawn_key, index))

    def uniform(self) -> float:
        return float(self._generator.random())

    def uniforms(self, count: int) -> np.ndarray:
        """Draw `count` doubles; identical to `count` calls of `uniform`."""
        return self._generator.random(count)
