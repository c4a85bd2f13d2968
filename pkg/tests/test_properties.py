"""Randomized invariants over generated instances."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from condgraph.closure import compute_closure
from condgraph.diagnostics import p_value
from condgraph.ds import DsSampler
from condgraph.graph import FixedSet, Graph, table_instance
from condgraph.oracle import closure_oracle, state_space
from condgraph.ugs import UgsSampler
from condgraph.wgs import WgsSampler, delta_measure, interior_weights, wgs_select_walk

SETTINGS = settings(max_examples=40, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])


@st.composite
def digraphs(draw, max_n=5):
    n = draw(st.integers(2, max_n))
    w = draw(arrays(np.int64, (n, n), elements=st.integers(0, 1)))
    np.fill_diagonal(w, 0)
    # roughly a quarter of the pairs fixed
    mask = draw(arrays(np.bool_, (n, n), elements=st.sampled_from([False, False, False, True])))
    return Graph(w), FixedSet.from_mask(mask)


@st.composite
def tables(draw, max_dim=4, high=4):
    r = draw(st.integers(2, max_dim))
    c = draw(st.integers(2, max_dim))
    t = draw(arrays(np.int64, (r, c), elements=st.integers(0, high)))
    cells = draw(st.lists(st.tuples(st.integers(0, r - 1), st.integers(0, c - 1)), max_size=3))
    return table_instance(t, cells)


class TestClosureProperties:
    @SETTINGS
    @given(digraphs())
    def test_matches_oracle(self, inst):
        g, f = inst
        assert compute_closure(g, f) == closure_oracle(state_space(g, f))

    @SETTINGS
    @given(digraphs(max_n=7))
    def test_monotone_idempotent(self, inst):
        g, f = inst
        ft = compute_closure(g, f)
        assert f.issubset(ft) and compute_closure(g, ft) == ft


class TestConservation:
    @SETTINGS
    @given(digraphs(max_n=7), st.integers(0, 2 ** 32))
    def test_ugs(self, inst, seed):
        g, f = inst
        s = UgsSampler(g, f, seed)
        s.advance(300, verify=True)
        np.testing.assert_array_equal(s.W.sum(axis=0), g.weights.sum(axis=0))

    @SETTINGS
    @given(tables(), st.integers(0, 2 ** 32))
    def test_wgs(self, inst, seed):
        g, f = inst
        s = WgsSampler(g, f, seed)
        s.advance(300, verify=True)
        np.testing.assert_array_equal(s.W[f.mask], g.weights[f.mask])

    @SETTINGS
    @given(tables(), st.integers(0, 2 ** 32))
    def test_ds(self, inst, seed):
        g, _ = inst
        s = DsSampler(g, None, seed)
        s.advance(300, verify=True)


class TestDeltaMeasureProperties:
    @SETTINGS
    @given(tables(max_dim=3, high=6), st.integers(0, 2 ** 32))
    def test_measure(self, inst, seed):
        g, f = inst
        walk = wgs_select_walk(g, f, seed)
        if walk is None or not walk.touched_edges:
            return
        m = delta_measure(g, walk, f)
        assert m.low <= 0 <= m.up
        assert m.weight_low > 0 and m.weight_up > 0
        assert sum(m.probabilities().values()) == 1
        assert len(set(interior_weights(g, walk, f))) <= 1


class TestPValueProperties:
    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.integers(1, 50), elements=st.floats(-5, 5)),
           st.floats(-6, 6), st.floats(-6, 6))
    def test_monotone(self, trace, a, b):
        lo, hi = min(a, b), max(a, b)
        assert p_value(trace, lo)[0] >= p_value(trace, hi)[0]
        assert 0 <= p_value(trace, lo)[0] <= 1
