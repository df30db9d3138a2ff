import io
import itertools
import math
import random

import numpy as np
import pytest

from kconn.graph_gen import (
    GraphError,
    Layer,
    LayerSampler,
    ModelParams,
    UnionGraph,
    build_union,
    export_edge_list,
    generate,
    import_edge_list,
    sample_layer,
    sample_layers,
)
from kconn.model_spec import JointDistribution


def layer(index, vertices, edges):
    return Layer(index, len(vertices), 1.0, frozenset(vertices), frozenset(edges))


def check_layer(lay, n):
    assert len(lay.vertices) == min(lay.x, n)
    for u, v in lay.edges:
        assert u < v and u in lay.vertices and v in lay.vertices


class TestSampleLayer:
    def test_empty_layer(self):
        lay = sample_layer(LayerSampler(1), 10, JointDistribution.point_mass(0, 0.5), 1)
        assert lay.vertices == frozenset() and lay.edges == frozenset()

    def test_forced_edge(self):
        for i in range(1, 50):
            lay = sample_layer(LayerSampler(7), 10, JointDistribution.point_mass(2, 1.0), i)
            check_layer(lay, 10)
            assert len(lay.edges) == 1 and set(next(iter(lay.edges))) == set(lay.vertices)

    def test_q_zero(self):
        lay = sample_layer(3, 8, JointDistribution.point_mass(5, 0.0), 4)
        assert len(lay.vertices) == 5 and not lay.edges

    def test_truncated_to_n(self):
        lay = sample_layer(3, 6, JointDistribution.point_mass(40, 1.0), 1)
        assert lay.vertices == frozenset(range(6)) and len(lay.edges) == 15

    def test_mixture_invariants(self):
        d = JointDistribution.from_atoms([(1, 1.0, 0.2), (3, 0.5, 0.3), (12, 0.9, 0.5)])
        for i in range(1, 200):
            check_layer(sample_layer(11, 9, d, i), 9)

    def test_substream_is_pure(self):
        d = JointDistribution.from_atoms([(4, 0.5, 0.5), (7, 0.2, 0.5)])
        a = sample_layer(5, 30, d, 17)
        b = sample_layer(5, 30, d, 17)
        assert (a.x, a.q, a.vertices, a.edges) == (b.x, b.q, b.vertices, b.edges)

    def test_uniform_subsets(self):
        n, trials = 5, 100_000
        b = sample_layers(2024, n, JointDistribution.point_mass(2, 1.0), 1, trials, keep_vertices=True)
        pairs = b.eu * n + b.ev
        counts = np.bincount(pairs, minlength=n * n)
        se = math.sqrt(0.1 * 0.9 / trials)
        for u, v in itertools.combinations(range(n), 2):
            assert abs(counts[u * n + v] / trials - 0.1) <= 3 * se
        assert counts.sum() == trials

    @pytest.mark.parametrize("x0,q0", [(5, 0.3), (12, 0.05), (30, 0.9)])
    def test_edge_marginal(self, x0, q0):
        n, trials = 40, 200_000
        b = sample_layers(99, n, JointDistribution.point_mass(x0, q0), 1, trials)
        hits = int(np.count_nonzero((b.eu == 3) & (b.ev == 17)))
        p = x0 * (x0 - 1) / (n * (n - 1)) * q0
        assert abs(hits / trials - p) <= 3 * math.sqrt(p * (1 - p) / trials)

    def test_edge_count_distribution(self):
        # sparse path (geometric skipping) keeps Binomial(C(x,2), q) edge counts
        x, q, trials = 60, 0.01, 20_000
        b = sample_layers(5, 100, JointDistribution.point_mass(x, q), 1, trials)
        ne = np.diff(b.e_off)
        P = x * (x - 1) // 2
        assert abs(ne.mean() - P * q) <= 3 * math.sqrt(P * q * (1 - q) / trials)


class TestBuildUnion:
    def test_dedup(self):
        g = build_union(3, [layer(1, {0, 1}, {(0, 1)}), layer(2, {0, 1}, {(0, 1)})])
        assert g.num_edges == 1 and g.m == 2
        assert g.layer_degrees(0) == [(1, 1), (2, 1)]

    def test_zero_layers(self):
        g = build_union(4, [])
        assert g.num_edges == 0 and g.m == 0 and list(g.degrees) == [0] * 4

    def test_path(self):
        g = build_union(3, [layer(1, {0, 1}, {(0, 1)}), layer(2, {1, 2}, {(1, 2)})])
        assert list(g.degrees) == [1, 2, 1]
        assert g.layer_degrees(1) == [(1, 1), (2, 1)]

    def test_out_of_range(self):
        with pytest.raises(GraphError):
            build_union(3, [layer(1, {0, 3}, {(0, 3)})])

    def test_zero_layer_degree_not_stored(self):
        g = build_union(4, [layer(1, {0, 1, 2}, {(0, 1)})])
        assert g.layer_degrees(2) == []

    def test_order_independent(self):
        d = JointDistribution.from_atoms([(3, 0.7, 0.5), (6, 0.3, 0.5)])
        layers = [sample_layer(8, 15, d, i) for i in range(1, 25)]
        g1 = build_union(15, layers)
        shuffled = layers[:]
        random.Random(3).shuffle(shuffled)
        g2 = build_union(15, shuffled)
        assert np.array_equal(g1.edges, g2.edges)
        assert np.array_equal(g1.indices, g2.indices)
        for v in range(15):
            assert g1.layer_degrees(v) == g2.layer_degrees(v)

    def test_invariants_on_sample(self):
        d = JointDistribution.from_atoms([(2, 1.0, 0.3), (5, 0.6, 0.4), (9, 0.2, 0.3)])
        layers = [sample_layer(31, 20, d, i) for i in range(1, 60)]
        g = build_union(20, layers)
        union = set().union(*(lay.edges for lay in layers))
        assert g.edge_set() == union
        for v in range(20):
            s = sum(dv for _, dv in g.layer_degrees(v))
            assert g.degrees[v] <= s
            expected = [(lay.index, sum(1 for e in lay.edges if v in e)) for lay in layers]
            assert g.layer_degrees(v) == [(i, dv) for i, dv in expected if dv]


class TestGenerate:
    def test_deterministic(self):
        d = JointDistribution.from_atoms([(3, 0.5, 0.5), (10, 0.2, 0.5)])
        p = ModelParams(200, 300, 2)
        a, b = generate(p, d, 12345), generate(p, d, 12345)
        assert np.array_equal(a.edges, b.edges)
        assert np.array_equal(a.ld_degree, b.ld_degree)
        assert not np.array_equal(a.edges, generate(p, d, 12346).edges)

    def test_m_zero(self):
        g = generate(ModelParams(5, 0), JointDistribution.point_mass(2, 1.0), 0)
        assert g.num_edges == 0 and g.n == 5

    def test_matches_layerwise_union(self):
        d = JointDistribution.from_atoms([(2, 1.0, 0.4), (6, 0.5, 0.6)])
        g = generate(ModelParams(25, 40), d, 77)
        ref = build_union(25, [sample_layer(77, 25, d, i) for i in range(1, 41)])
        assert np.array_equal(g.edges, ref.edges)
        assert np.array_equal(g.ld_layer, ref.ld_layer)
        assert np.array_equal(g.ld_degree, ref.ld_degree)

    def test_prefix_coupling(self):
        d = JointDistribution.point_mass(4, 0.5)
        small = generate(ModelParams(50, 30), d, 9)
        big = generate(ModelParams(50, 60), d, 9)
        assert small.edge_set() <= big.edge_set()

    def test_expected_distinct_edges(self):
        n, m, runs = 1000, 3000, 60
        P = n * (n - 1) // 2
        expected = P * -math.expm1(m * math.log1p(-1 / P))
        counts = np.array([generate(ModelParams(n, m), JointDistribution.point_mass(2, 1.0), s).num_edges
                           for s in range(runs)])
        assert counts.max() <= m
        se = counts.std(ddof=1) / math.sqrt(runs)
        assert abs(counts.mean() - expected) <= 3 * max(se, 1e-9)


class TestEdgeList:
    def test_path_export(self):
        g = UnionGraph.from_edges(3, [(2, 3), (1, 2)], one_based=True)
        g.m = 2
        buf = io.StringIO()
        export_edge_list(g, buf)
        assert buf.getvalue() == "# n=3 m=2\n1 2\n2 3\n"

    def test_empty_export(self):
        buf = io.StringIO()
        export_edge_list(UnionGraph.from_edges(2, []), buf)
        assert buf.getvalue() == "# n=2 m=0\n"

    def test_round_trip(self, tmp_path):
        g = generate(ModelParams(60, 80), JointDistribution.point_mass(5, 0.4), 3)
        path = tmp_path / "g.txt"
        export_edge_list(g, path)
        back = import_edge_list(path)
        assert back.n == g.n and back.m == g.m
        assert np.array_equal(back.edges, g.edges)
        assert np.array_equal(back.indices, g.indices)

    @pytest.mark.parametrize("text", ["1 2\n", "# n=3 m=1\n1 4\n", "# n=3 m=1\n1 1\n", "# n=3\n1 2 3\n"])
    def test_bad_input(self, text):
        with pytest.raises(GraphError):
            import_edge_list(io.StringIO(text))
