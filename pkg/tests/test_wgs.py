from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from scipy import stats as sps

from condgraph.errors import DomainError
from condgraph.graph import FixedSet, Graph, strength_sequence, table_instance
from condgraph.oracle import state_space, uniformity_test
from condgraph.wgs import (DeltaMeasure, WgsSampler, WgsWalk, delta_bounds, delta_measure,
                           hypergeometric_measure, interior_weights, neighborhoods_weighted,
                           shifted, walk_probability, walk_visits, wgs_select_walk, wgs_step)

from conftest import random_table_instance

# 2x2 tables: rows are vertices 0, 1 and columns 2, 3
C1, R1, C2, R2 = 2, 0, 3, 1
CYCLE = (C1, R1, C2, R2, C1)
SQUARE = {(0, 2): 1, (1, 3): 1, (0, 3): -1, (1, 2): -1}


def square_walk():
    return WgsWalk(CYCLE, walk_visits(CYCLE))


class TestVisits:
    def test_cycle(self):
        assert walk_visits(CYCLE) == SQUARE

    def test_zero_margins(self, rng):
        for _ in range(50):
            g, f = random_table_instance(rng, (3, 4), 3, 2)
            walk = wgs_select_walk(g, f, rng)
            if walk is None:
                continue
            m = walk.visits_matrix(g.n)
            np.testing.assert_array_equal(m.sum(axis=0), 0)
            np.testing.assert_array_equal(m.sum(axis=1), 0)
            assert not any(f.mask[e] for e in walk.touched_edges)

    def test_undirected_canonical(self):
        v = walk_visits((0, 1, 2, 3, 0), directed=False)
        assert all(u <= w for u, w in v)


class TestBounds:
    def test_permutation_table(self):
        g, _ = table_instance([[1, 0], [0, 1]])
        assert delta_bounds(g, WgsWalk(CYCLE, SQUARE)) == (-1, 0)

    def test_constant_table(self):
        g, _ = table_instance([[1, 1], [1, 1]])
        assert delta_bounds(g, WgsWalk(CYCLE, SQUARE)) == (-1, 1)

    def test_double_visit(self):
        g, _ = table_instance([[3, 3], [3, 3]])
        walk = WgsWalk(CYCLE, {(0, 2): 2, (0, 3): -1})
        assert delta_bounds(g, walk)[0] == -1

    def test_negative_visit_sign(self):
        # c=3 and two negative visits allow delta up to 1, not -2
        g, _ = table_instance([[3, 3], [3, 3]])
        walk = WgsWalk(CYCLE, {(0, 2): 1, (0, 3): -2})
        assert delta_bounds(g, walk)[1] == 1

    def test_tight(self, rng):
        for _ in range(50):
            g, f = random_table_instance(rng, (3, 3), 4, 1)
            walk = wgs_select_walk(g, f, rng)
            if walk is None:
                continue
            low, up = walk.delta_low, walk.delta_up
            assert low <= 0 <= up
            for d in (low, up):
                shifted(g, walk, d)
            for d in (low - 1, up + 1):
                with pytest.raises(DomainError):
                    shifted(g, walk, d)


class TestWalkProbability:
    def test_constant_table(self):
        g, _ = table_instance([[1, 1], [1, 1]])
        assert walk_probability(g, CYCLE) == Fraction(1, 2)

    def test_blocked_direction(self):
        g, _ = table_instance([[0, 2], [2, 0]])
        assert walk_probability(g, CYCLE) == Fraction(1, 2)

    def test_unsampleable(self):
        g, _ = table_instance([[0, 1], [0, 1]])
        assert walk_probability(g, CYCLE) == 0

    def test_matches_empirical_selection(self):
        g, f = table_instance([[1, 1], [1, 1]])
        rng = np.random.default_rng(4)
        hits = 0
        n = 20000
        for _ in range(n):
            w = wgs_select_walk(g, f, rng)
            hits += w.vertices in (CYCLE, CYCLE[::-1])
        assert abs(hits / n - 0.5) < 0.015


class TestDeltaMeasure:
    def test_uniform_thirds(self):
        g, f = table_instance([[1, 1], [1, 1]])
        m = delta_measure(g, square_walk(), f)
        assert (m.low, m.up) == (-1, 1)
        assert (m.weight_low, m.weight_up, m.weight_interior) == (Fraction(1, 2),) * 3
        assert m.normalizer == Fraction(3, 2)
        assert m.probabilities() == {-1: Fraction(1, 3), 0: Fraction(1, 3), 1: Fraction(1, 3)}

    def test_degenerate(self):
        m = DeltaMeasure(0, 0, Fraction(1), Fraction(1))
        assert m.probabilities() == {0: 1}

    def test_adjacent_bounds_ignore_interior(self):
        a = DeltaMeasure(-1, 0, Fraction(1, 3), Fraction(1, 6), Fraction(0))
        b = DeltaMeasure(-1, 0, Fraction(1, 3), Fraction(1, 6), Fraction(7))
        assert a.normalizer == b.normalizer == Fraction(1, 2)
        assert sum(a.probabilities().values()) == 1

    def test_sums_to_one_and_positive(self, rng):
        for _ in range(50):
            g, f = random_table_instance(rng, (3, 3), 3, 1)
            walk = wgs_select_walk(g, f, rng)
            if walk is None or not walk.touched_edges:
                continue
            m = delta_measure(g, walk, f)
            assert m.weight_low > 0 and m.weight_up > 0
            assert sum(m.probabilities().values()) == 1

    def test_interior_invariance(self, rng):
        checked = 0
        for _ in range(200):
            g, f = random_table_instance(rng, (3, 3), 8, 1)
            walk = wgs_select_walk(g, f, rng)
            if walk is None or walk.delta_up - walk.delta_low < 3:
                continue
            ws = interior_weights(g, walk, f)
            assert len(set(ws)) == 1
            checked += 1
        assert checked > 20

    def test_hypergeometric_normalized(self):
        g, f = table_instance([[1, 1], [1, 1]])
        h = hypergeometric_measure(g, square_walk(), f)
        # masses 1/4, 1, 1/4 at delta -1, 0, 1
        np.testing.assert_allclose([h[-1], h[0], h[1]], [1 / 6, 2 / 3, 1 / 6])


class TestSelection:
    def test_neighborhoods(self):
        g, f = table_instance([[0, 2], [1, 0]])
        assert neighborhoods_weighted(g, f, C1) == ({R2}, set())
        assert neighborhoods_weighted(g, f, R1) == (set(), {C1, C2})

    def test_identity_when_stuck(self):
        g, f = table_instance([[1], [1]])
        assert wgs_select_walk(g, f, 0) is None
        s = WgsSampler(g, f, 0)
        assert s.advance(100) == 0
        assert s.identities == 100

    def test_six_cycle(self):
        # every 2x2 subtable contains a fixed cell, so only 6-cycles move
        t = [[1, 1, 0], [0, 1, 1], [1, 0, 1]]
        g, f = table_instance(t, [(0, 2), (1, 0), (2, 1)])
        s = WgsSampler(g, f, 3)
        lengths = set()
        for _ in range(300):
            info = s.step()
            if info.walk is not None:
                lengths.add(len(info.walk))
        assert 7 in lengths
        assert state_space(g, f).count == 3

    def test_reference_step(self, rng):
        g, f = table_instance([[2, 1], [0, 3]])
        for _ in range(50):
            h, walk = wgs_step(g, f, rng)
            assert strength_sequence(h) == strength_sequence(g)
            g = h


class TestSampler:
    def test_all_fixed(self):
        g, _ = table_instance([[1, 2], [3, 4]], [(0, 0), (0, 1), (1, 0), (1, 1)])
        s = WgsSampler(g, FixedSet.all_pairs(4), 0)
        assert s.frozen
        s.advance(10)
        np.testing.assert_array_equal(s.W, g.weights)

    def test_unknown_target(self):
        g, f = table_instance([[1]])
        with pytest.raises(DomainError):
            WgsSampler(g, f, target="poisson")

    def test_kernel_matches_exact_measure(self, rng):
        g, f = table_instance(rng.integers(0, 4, (3, 4)), [(0, 1)])
        s = WgsSampler(g, f, 17)
        seen = 0
        for _ in range(400):
            before = s.graph
            info = s.step()
            if info.status != 0:
                continue
            m = delta_measure(before, info.walk, f)
            assert (info.delta_low, info.delta_up) == (m.low, m.up)
            np.testing.assert_allclose([info.weight_low, info.weight_up],
                                       [float(m.weight_low), float(m.weight_up)], rtol=1e-12)
            if m.up - m.low >= 2:
                np.testing.assert_allclose(info.weight_interior, float(m.weight_interior),
                                           rtol=1e-12)
            np.testing.assert_array_equal(s.W, shifted(before, info.walk, info.delta).weights)
            seen += 1
        assert seen > 100

    def test_conservation(self, rng):
        for _ in range(10):
            g, f = random_table_instance(rng, (4, 5), 3, 3)
            WgsSampler(g, f, int(rng.integers(1 << 30))).advance(20000, verify=True)

    @pytest.mark.parametrize("table,count", [
        ([[1, 1], [1, 1]], 3),
        ([[1, 0], [0, 1]], 2),
        ([[1, 0, 0], [0, 1, 0], [0, 0, 1]], 6),
    ])
    def test_uniform(self, table, count):
        g, f = table_instance(table)
        space = state_space(g, f)
        assert space.count == count
        s = WgsSampler(g, f, 8)
        s.advance(1000)
        codes = s.record_states(50000, space.encoder())
        _, p = uniformity_test(space, space.visit_counts(codes[::11]))
        assert p > 0.001

    def test_two_tables_alternate_evenly(self):
        g, f = table_instance([[1, 0], [0, 1]])
        s = WgsSampler(g, f, 1)
        codes = s.record_states(20000, state_space(g, f).encoder())
        assert abs(np.mean(codes == codes[0]) - 0.5) < 0.02

    def test_hypergeometric_target(self):
        g, f = table_instance([[1, 1], [1, 1]])
        space = state_space(g, f)
        s = WgsSampler(g, f, 5, target="hypergeometric")
        s.advance(1000)
        counts = space.visit_counts(s.record_states(60000, space.encoder())[::11])
        mass = np.array([1 / np.prod([factorial(int(x)) for x in space.matrix(k).ravel()])
                         for k in range(space.count)])
        expected = mass / mass.sum() * counts.sum()
        assert sps.chisquare(counts, expected).pvalue > 0.001

    def test_undirected_multigraph_uniform(self):
        w = np.array([[0, 1, 1, 0], [1, 0, 0, 1], [1, 0, 0, 1], [0, 1, 1, 0]])
        g = Graph(w, directed=False, weighted=True)
        space = state_space(g)
        s = WgsSampler(g, None, 2)
        s.advance(1000)
        codes = s.record_states(100000, space.encoder(), verify=True)
        _, p = uniformity_test(space, space.visit_counts(codes[::11]))
        assert p > 0.001
