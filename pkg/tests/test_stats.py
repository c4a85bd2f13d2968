import numpy as np
import pytest
from scipy import optimize

from condgraph.errors import ConvergenceError, DomainError
from condgraph.graph import Graph, table_instance
from condgraph.stats import (ExpectedCounts, chi_squared, compartmentalization, ipfp,
                             likelihood_ratio, make_statistic)

from conftest import random_digraph


def brute_force_quasi(t, mask):
    """Maximize the Poisson log-likelihood of a row x column model over the free cells."""
    rows, cols = t.shape
    free = ~mask

    def nll(theta):
        a, b = theta[:rows], theta[rows:]
        logm = a[:, None] + b[None, :]
        m = np.exp(logm)
        val = (m - t * logm)[free].sum()
        r = np.where(free, m - t, 0.0)
        return val, np.concatenate([r.sum(axis=1), r.sum(axis=0)])

    res = optimize.minimize(nll, np.zeros(rows + cols), jac=True, method="BFGS",
                            options={"gtol": 1e-12, "maxiter": 10000})
    return np.exp(res.x[:rows, None] + res.x[None, rows:])


class TestCompartmentalization:
    def test_shared_predator(self):
        g = Graph.from_edges(3, [(0, 2), (1, 2)])
        assert compartmentalization(g) == pytest.approx(1 / 3)

    def test_edgeless(self):
        assert compartmentalization(Graph(np.zeros((4, 4)))) == 0.0

    def test_too_small(self):
        with pytest.raises(DomainError):
            compartmentalization(Graph(np.zeros((1, 1))))

    def test_rejects_undirected(self, matching):
        with pytest.raises(DomainError):
            compartmentalization(matching)

    def test_relabel_invariant(self, rng):
        for _ in range(20):
            g = random_digraph(rng, 7)
            p = rng.permutation(7)
            h = Graph(g.weights[np.ix_(p, p)])
            c = compartmentalization(g)
            assert 0.0 <= c <= 1.0
            assert compartmentalization(h) == pytest.approx(c)

    def test_direct_formula(self, rng):
        g = random_digraph(rng, 6, 0.5)
        w = g.weights.astype(bool)
        total = 0.0
        for i in range(6):
            for j in range(6):
                if i != j:
                    union = (w[i] | w[j]).sum()
                    total += (w[i] & w[j]).sum() / union if union else 0.0
        assert compartmentalization(g) == pytest.approx(total / 30)


class TestIPFP:
    def test_independence_closed_form(self):
        np.testing.assert_allclose(ipfp([[2, 0], [0, 2]]).fitted, [[1, 1], [1, 1]])

    def test_rank_one_fixed_point(self):
        np.testing.assert_allclose(ipfp([[1, 2], [2, 4]]).fitted, [[1, 2], [2, 4]])

    def test_structural_zero_matches_optimizer(self):
        t = np.array([[10, 4, 6], [3, 12, 5], [7, 2, 9]], dtype=float)
        mask = np.zeros((3, 3), dtype=bool)
        mask[0, 1] = True
        fit = ipfp(t, mask, tol=1e-12)
        ref = brute_force_quasi(t, mask)
        np.testing.assert_allclose(fit.fitted[~mask], ref[~mask], atol=1e-6)
        assert fit.fitted[0, 1] == t[0, 1]

    def test_margins_match(self, rng):
        t = rng.integers(1, 20, (4, 5)).astype(float)
        mask = np.zeros_like(t, dtype=bool)
        mask[[0, 1, 3], [2, 0, 4]] = True
        fit = ipfp(t, mask, tol=1e-9)
        m = np.where(fit.free_mask, fit.fitted, 0)
        obs = np.where(fit.free_mask, t, 0)
        np.testing.assert_allclose(m.sum(axis=1), obs.sum(axis=1), atol=1e-8)
        np.testing.assert_allclose(m.sum(axis=0), obs.sum(axis=0), atol=1e-8)

    def test_tighter_tol_no_worse(self, rng):
        t = rng.integers(1, 20, (4, 4))
        cells = [(0, 0), (2, 1)]
        assert ipfp(t, cells, tol=1e-10).discrepancy <= ipfp(t, cells, tol=1e-4).discrepancy

    def test_cell_list_and_mask_agree(self):
        t = np.arange(1, 10).reshape(3, 3)
        mask = np.zeros((3, 3), dtype=bool)
        mask[1, 2] = True
        np.testing.assert_allclose(ipfp(t, [(1, 2)]).fitted, ipfp(t, mask).fitted)

    def test_non_convergence(self):
        t = np.array([[10, 4, 6], [3, 12, 5], [7, 2, 9]])
        with pytest.raises(ConvergenceError) as err:
            ipfp(t, [(0, 1), (1, 2)], tol=1e-15, max_iter=2)
        assert err.value.discrepancy > 0

    def test_negative(self):
        with pytest.raises(DomainError):
            ipfp([[1, -1], [0, 1]])


class TestStatistics:
    def test_g2_diagonal(self):
        t = [[2, 0], [0, 2]]
        assert likelihood_ratio(t, ipfp(t)) == pytest.approx(8 * np.log(2))

    def test_zero_at_fit(self):
        t = np.array([[1, 2], [2, 4]])
        m = ipfp(t)
        assert chi_squared(t, m) == pytest.approx(0, abs=1e-12)
        assert likelihood_ratio(t, m) == pytest.approx(0, abs=1e-12)

    def test_single_cell(self):
        assert likelihood_ratio([[5]], ipfp([[5]])) == pytest.approx(0, abs=1e-12)

    def test_chi2_value(self):
        t = [[2, 0], [0, 2]]
        assert chi_squared(t, ipfp(t)) == pytest.approx(4.0)

    def test_support_error(self):
        m = ExpectedCounts(np.array([[0.0, 1.0], [1.0, 1.0]]), np.zeros((2, 2), dtype=bool),
                           np.zeros(2), np.zeros(2))
        for stat in (chi_squared, likelihood_ratio):
            with pytest.raises(DomainError):
                stat([[1, 1], [1, 1]], m)

    def test_fixed_cells_ignored(self):
        t = np.array([[9, 1], [1, 1]])
        m = ipfp(t, [(0, 0)])
        assert chi_squared(t, m) == pytest.approx(0, abs=1e-9)

    def test_permutation_invariant(self, rng):
        t = rng.integers(0, 10, (4, 5))
        cells = [(0, 1), (3, 3)]
        m = ipfp(t, cells)
        pr, pc = rng.permutation(4), rng.permutation(5)
        inv_r, inv_c = np.argsort(pr), np.argsort(pc)
        cells2 = [(int(inv_r[i]), int(inv_c[j])) for i, j in cells]
        t2 = t[np.ix_(pr, pc)]
        m2 = ipfp(t2, cells2)
        assert chi_squared(t2, m2) == pytest.approx(chi_squared(t, m))
        assert likelihood_ratio(t2, m2) == pytest.approx(likelihood_ratio(t, m))
        assert chi_squared(t, m) >= 0 and likelihood_ratio(t, m) >= 0


class TestCompiledStatistic:
    def test_table_statistics_agree(self, rng):
        t = rng.integers(0, 6, (4, 3))
        g, f = table_instance(t, [(1, 1)])
        fit = ipfp(t, [(1, 1)])
        assert make_statistic("g2", g, f)(g.weights) == pytest.approx(likelihood_ratio(t, fit))
        assert make_statistic("chi2", g, f)(g.weights) == pytest.approx(chi_squared(t, fit))

    def test_compartmentalization_agrees(self, rng):
        g = random_digraph(rng, 8)
        stat = make_statistic("compartmentalization", g)
        assert stat(g.weights) == pytest.approx(compartmentalization(g))

    def test_errors(self, rng):
        g = random_digraph(rng, 4)
        with pytest.raises(DomainError):
            make_statistic("g2", g)
        with pytest.raises(DomainError):
            make_statistic("kurtosis", g)
        t, _ = table_instance([[1, 2]])
        with pytest.raises(DomainError):
            make_statistic("compartmentalization", t)
