import numpy as np
import pytest

from kinetic_brw._kernel import IMPLEMENTATION, _python

try:
    from kinetic_brw._kernel import _speedups
except ImportError:
    _speedups = None

needs_compiled = pytest.mark.skipif(_speedups is None, reason="compiled kernel not built")


def random_generation(rng, n_parents, mean_children=2):
    parent_pos = rng.normal(size=n_parents)
    parent_death = rng.uniform(0.0, 3.0, n_parents)
    counts = rng.integers(0, 2 * mean_children + 1, n_parents).astype(np.int64)
    n_children = int(counts.sum())
    neg_log_w = rng.exponential(0.7, n_children)
    lifetimes = rng.standard_exponential(n_children)
    return parent_pos, parent_death, counts, neg_log_w, lifetimes


class TestPythonKernel:
    def test_hand_built_generation(self):
        parent_pos = np.array([0.0, 10.0])
        parent_death = np.array([1.0, 2.0])
        counts = np.array([2, 2], dtype=np.int64)
        neg_log_w = np.array([0.1, 0.2, 0.3, 0.4])
        lifetimes = np.array([5.0, 0.5, 0.1, 9.0])
        alive, nxt_pos, nxt_death = _python.expand_generation(
            parent_pos, parent_death, counts, neg_log_w, lifetimes, 3.0
        )
        # children: pos 0.1, 0.2 die at 6.0, 1.5; pos 10.3, 10.4 die at 2.1, 11.0
        np.testing.assert_allclose(alive, [0.1, 10.4])
        np.testing.assert_allclose(nxt_pos, [0.2, 10.3])
        np.testing.assert_allclose(nxt_death, [1.5, 2.1])

    def test_zero_count_parents_are_skipped(self):
        alive, nxt_pos, nxt_death = _python.expand_generation(
            np.array([1.0]), np.array([0.5]), np.array([0], dtype=np.int64),
            np.empty(0), np.empty(0), 2.0,
        )
        assert alive.size == nxt_pos.size == nxt_death.size == 0

    def test_empty_generation(self):
        alive, nxt_pos, nxt_death = _python.expand_generation(
            np.empty(0), np.empty(0), np.empty(0, dtype=np.int64),
            np.empty(0), np.empty(0), 1.0,
        )
        assert alive.size == 0 and nxt_pos.size == 0


@needs_compiled
class TestCompiledKernel:
    @pytest.mark.parametrize("seed", range(5))
    def test_bit_identical_to_python(self, seed):
        rng = np.random.default_rng(seed)
        args = random_generation(rng, n_parents=500)
        t = 2.0
        a1, p1, d1 = _python.expand_generation(*args, t)
        a2, p2, d2 = _speedups.expand_generation(*args, t)
        np.testing.assert_array_equal(np.asarray(a1), np.asarray(a2))
        np.testing.assert_array_equal(np.asarray(p1), np.asarray(p2))
        np.testing.assert_array_equal(np.asarray(d1), np.asarray(d2))

    def test_selected_at_import(self):
        import os

        expected = "python" if os.environ.get("KINETIC_BRW_PURE") else "compiled"
        assert IMPLEMENTATION == expected

    def test_empty_inputs(self):
        alive, nxt_pos, nxt_death = _speedups.expand_generation(
            np.empty(0), np.empty(0), np.empty(0, dtype=np.int64),
            np.empty(0), np.empty(0), 1.0,
        )
        assert np.asarray(alive).size == 0 and np.asarray(nxt_pos).size == 0
