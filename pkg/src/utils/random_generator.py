"""
Random generator utility - Seeded, splittable random streams for samplers.
"""

import hashlib
import secrets
from typing import Optional, Sequence, Tuple, Union

import numpy as np

KeyPart = Union[int, str, float]


def _key_to_int(part: KeyPart) -> int:
    """Map a key component to a stable non-negative 32-bit integer."""
    if isinstance(part, (int, np.integer)) and part >= 0:
        return int(part) & 0xFFFFFFFF
    digest = hashlib.sha256(repr(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


class RandomGenerator:
    """
    Seed holder that hands out independent, reproducible random streams.

    A RandomGenerator wraps a numpy ``SeedSequence``. Samplers never share a
    stream: each consumer asks for ``stream(*key)`` (or ``spawn(*key)`` for a
    nested holder) with a key naming what it is used for. Keys are hashed
    deterministically, so the stream a replicate receives depends only on
    (seed, key) and not on scheduling order or worker count.

    Attributes:
        seed (int): Root entropy for reproducibility
        key (tuple): Spawn path from the root seed to this holder
    """

    def __init__(self, seed: Optional[int] = None, key: Sequence[KeyPart] = ()):
        """
        Initialize the RandomGenerator.

        Args:
            seed: Root seed; a fresh one is drawn from the OS when None
            key: Spawn path below the root (used by ``spawn``)
        """
        self.seed = int(seed) if seed is not None else self.generate_seed()
        self.key: Tuple[int, ...] = tuple(_key_to_int(part) for part in key)
        self._sequence = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._generator: Optional[np.random.Generator] = None

    @staticmethod
    def generate_seed() -> int:
        """Draw a fresh 63-bit seed from the operating system."""
        return secrets.randbits(63)

    @property
    def generator(self) -> np.random.Generator:
        """The numpy Generator owned by this holder (created lazily)."""
        if self._generator is None:
            self._generator = np.random.Generator(np.random.PCG64(self._sequence))
        return self._generator

    def spawn(self, *key: KeyPart) -> 'RandomGenerator':
        """
        Derive a child holder for a named sub-task.

        Args:
            *key: Components naming the sub-task (ints or strings)

        Returns:
            RandomGenerator whose streams are independent of this one's
        """
        return RandomGenerator(self.seed, self.key + tuple(_key_to_int(k) for k in key))

    def stream(self, *key: KeyPart) -> np.random.Generator:
        """Shortcut for ``spawn(*key).generator``."""
        return self.spawn(*key).generator

    def to_dict(self):
        """Serialize to dictionary."""
        return {'seed': self.seed, 'key': list(self.key)}

    @staticmethod
    def from_dict(data) -> 'RandomGenerator':
        """Deserialize from dictionary."""
        return RandomGenerator(data['seed'], data.get('key', ()))

    def __repr__(self):
        """String representation of the RandomGenerator."""
        return f"RandomGenerator(seed={self.seed}, key={self.key})"
