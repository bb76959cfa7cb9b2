"""
Unit tests for seeded random streams.
"""

import unittest

import numpy as np

from src.utils.random_generator import RandomGenerator


class TestRandomGenerator(unittest.TestCase):
    """Test cases for RandomGenerator."""

    def test_same_key_same_stream(self):
        """Test equal (seed, key) pairs give identical draws."""
        a = RandomGenerator(42).stream('data', 'hill', 50, repr(0.05), 3).standard_normal(5)
        b = RandomGenerator(42).stream('data', 'hill', 50, repr(0.05), 3).standard_normal(5)
        self.assertTrue(np.array_equal(a, b))

    def test_different_keys_differ(self):
        """Test different keys or seeds give different draws."""
        base = RandomGenerator(42)
        a = base.stream('data', 1).standard_normal(5)
        b = base.stream('data', 2).standard_normal(5)
        c = RandomGenerator(43).stream('data', 1).standard_normal(5)
        self.assertFalse(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))

    def test_stream_independent_of_request_order(self):
        """Test a stream does not depend on which other streams were drawn first."""
        first = RandomGenerator(7)
        first.stream('x').standard_normal(100)
        after = first.stream('y').standard_normal(3)
        fresh = RandomGenerator(7).stream('y').standard_normal(3)
        self.assertTrue(np.array_equal(after, fresh))

    def test_spawn_matches_stream(self):
        """Test nested spawning equals a single combined key."""
        nested = RandomGenerator(5).spawn('fit').spawn('nlfs_os_hill').generator.uniform(size=4)
        flat = RandomGenerator(5).stream('fit', 'nlfs_os_hill').uniform(size=4)
        self.assertTrue(np.array_equal(nested, flat))

    def test_generated_seed(self):
        """Test a missing seed is filled with a non-negative integer."""
        rng = RandomGenerator()
        self.assertIsInstance(rng.seed, int)
        self.assertGreaterEqual(rng.seed, 0)

    def test_serialization(self):
        """Test to_dict/from_dict preserves the stream."""
        original = RandomGenerator(99, key=('fit', 2))
        restored = RandomGenerator.from_dict(original.to_dict())
        self.assertTrue(np.array_equal(original.generator.uniform(size=3),
                                       restored.generator.uniform(size=3)))


if __name__ == '__main__':
    unittest.main()
