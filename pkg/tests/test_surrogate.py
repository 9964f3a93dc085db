import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from survnet import surrogate as sg
from survnet.errors import BookkeepingError, ConfigError


class TestAugment:
    def test_permutation_preserves_multiset(self):
        X = np.array([[1.0, 2.0], [3.0, 4.0]])
        state = sg.augment(X, seed=0)
        assert sorted(state.data[:, 2:].ravel()) == [1.0, 2.0, 3.0, 4.0]
        np.testing.assert_array_equal(state.data[:, :2], X)

    def test_constant_matrix(self):
        state = sg.augment(np.full((5, 3), 7.5), q=6, seed=1)
        assert np.all(state.data[:, 3:] == 7.5)

    @given(st.integers(2, 12), st.integers(1, 8), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_multiset_property(self, n, p, seed):
        X = np.random.default_rng(seed).normal(size=(n, p))
        state = sg.augment(X, seed=seed)
        np.testing.assert_array_equal(np.sort(state.data[:, p:].ravel()), np.sort(X.ravel()))

    def test_fewer_surrogates_sampled_without_replacement(self):
        X = np.arange(40.0).reshape(10, 4)
        state = sg.augment(X, q=2, seed=3)
        block = state.data[:, 4:].ravel()
        assert len(np.unique(block)) == block.size
        assert set(block) <= set(X.ravel())

    def test_more_surrogates_with_replacement(self):
        X = np.arange(6.0).reshape(3, 2)
        state = sg.augment(X, q=5, seed=4)
        block = state.data[:, 2:].ravel()
        assert block.size == 15 and set(block) <= set(X.ravel())

    def test_column_means_match_grand_mean(self):
        # each surrogate column is n draws without replacement from the pool
        # of all entries; its mean should sit within 3 standard errors
        rng = np.random.default_rng(5)
        X = rng.exponential(size=(4000, 20)) + np.arange(20)
        state = sg.augment(X, seed=6)
        se = X.std() / np.sqrt(X.shape[0])
        dev = np.abs(state.data[:, 20:].mean(axis=0) - X.mean())
        assert np.all(dev < 3 * se + 1e-12)

    def test_deterministic_and_target_free(self):
        X = np.random.default_rng(7).normal(size=(30, 4))
        a, b = sg.augment(X, seed=8), sg.augment(X, seed=8)
        np.testing.assert_array_equal(a.data, b.data)

    @pytest.mark.parametrize("q", [0, -3])
    def test_bad_q(self, q):
        with pytest.raises(ConfigError):
            sg.augment(np.ones((3, 2)), q=q)

    def test_origin_tags(self):
        state = sg.augment(np.ones((3, 5)), q=3)
        assert state.is_surrogate.tolist() == [False] * 5 + [True] * 3
        assert state.active.all()


class TestCounts:
    def test_full_size(self):
        state = sg.augment(np.zeros((2, 784)))
        assert sg.counts(state) == (1568, 784)

    def test_small(self):
        assert sg.counts(sg.augment(np.ones((4, 5)), q=3)) == (8, 3)

    def test_all_surrogates_gone(self):
        state = sg.augment(np.ones((4, 5)), q=3)
        state = sg.deactivate(state, [5, 6, 7])
        assert sg.counts(state) == (5, 0)


class TestDeactivate:
    def test_empty_is_noop(self):
        state = sg.augment(np.ones((4, 3)))
        assert sg.deactivate(state, []) is state

    def test_one_surrogate(self):
        state = sg.augment(np.ones((4, 3)))
        after = sg.deactivate(state, [4])
        assert sg.counts(after) == (5, 2)
        assert sg.counts(state) == (6, 3)

    def test_all_originals(self):
        state = sg.deactivate(sg.augment(np.ones((4, 3))), [0, 1, 2])
        r, r0 = sg.counts(state)
        assert r == r0 == 3

    def test_inactive_is_logic_error(self):
        state = sg.deactivate(sg.augment(np.ones((4, 3))), [1])
        with pytest.raises(BookkeepingError):
            sg.deactivate(state, [1])

    def test_monotone(self):
        state = sg.augment(np.ones((4, 6)))
        rng = np.random.default_rng(0)
        prev = state.active
        while state.active.any():
            ids = rng.choice(state.active_ids, size=min(3, len(state.active_ids)), replace=False)
            state = sg.deactivate(state, ids)
            assert not (state.active & ~prev).any()
            prev = state.active
