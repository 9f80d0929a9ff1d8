import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathlink.generators import cycle, path_graph, star
from pathlink.graph import Graph, common_neighbors, load_graph, serialize_edges


def write_edges(tmp_path, text, name="edges.txt"):
    f = tmp_path / name
    f.write_text(text)
    return f


class TestLoadGraph:
    def test_path_graph_with_default_features(self, tmp_path):
        g = load_graph(write_edges(tmp_path, "0 1\n1 2\n"))
        assert g.n == 3
        assert [g.degree(v) for v in range(3)] == [1, 2, 1]
        np.testing.assert_array_equal(g.features, np.eye(3))

    def test_reversed_duplicate_collapses(self, tmp_path):
        g = load_graph(write_edges(tmp_path, "0 1\n1 0\n"))
        assert g.num_edges == 1
        np.testing.assert_array_equal(g.edges, [[0, 1]])

    def test_self_loop_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="self-loop"):
            load_graph(write_edges(tmp_path, "0 0\n"))

    def test_malformed_line_reports_line_number(self, tmp_path):
        with pytest.raises(ValueError, match="line 2"):
            load_graph(write_edges(tmp_path, "0 1\n0 x\n"))
        with pytest.raises(ValueError, match="line 3"):
            load_graph(write_edges(tmp_path, "0 1\n1 2\n7\n"))

    def test_feature_row_count_must_match(self, tmp_path):
        edges = write_edges(tmp_path, "0 1\n1 2\n")
        feats = tmp_path / "feats.csv"
        feats.write_text("1.0,0.0\n0.0,1.0\n")  # 2 rows for a 3-node edge file
        with pytest.raises(ValueError, match="feature file"):
            load_graph(edges, feats)

    def test_out_of_range_id_with_explicit_n(self, tmp_path):
        with pytest.raises(ValueError, match="out of range"):
            load_graph(write_edges(tmp_path, "0 5\n"), n=3)

    def test_feature_csv_loads(self, tmp_path):
        edges = write_edges(tmp_path, "0 1\n")
        feats = tmp_path / "feats.csv"
        feats.write_text("1.5,2.0\n-0.5,3.25\n")
        g = load_graph(edges, feats)
        np.testing.assert_allclose(g.features, [[1.5, 2.0], [-0.5, 3.25]])

    def test_f_max_wraps_one_hot_columns(self, tmp_path):
        g = load_graph(write_edges(tmp_path, "0 1\n1 2\n2 3\n3 4\n4 5\n"), f_max=4)
        assert g.features.shape == (6, 4)
        assert g.features[4, 0] == 1.0 and g.features[5, 1] == 1.0


class TestQueries:
    def test_degree_on_cycle(self):
        g = cycle(8)
        assert all(g.degree(v) == 2 for v in range(8))

    def test_star_center_degree(self):
        assert star(4).degree(0) == 4

    def test_isolated_node_degree_zero(self):
        g = Graph.from_edges(3, [(0, 1)])
        assert g.degree(2) == 0

    def test_degree_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            cycle(4).degree(9)

    def test_common_neighbors_triangle(self):
        g = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
        assert common_neighbors(g, 0, 1).tolist() == [2]

    def test_common_neighbors_antipodal_cycle(self):
        assert common_neighbors(cycle(8), 0, 4).tolist() == []

    def test_common_neighbors_rejects_equal_nodes(self):
        with pytest.raises(ValueError, match="distinct"):
            common_neighbors(cycle(4), 1, 1)

    def test_common_neighbors_matches_brute_force(self):
        from pathlink.generators import gnp

        g = gnp(30, 0.2, seed=42)
        rng = np.random.default_rng(0)
        for _ in range(20):
            u, v = rng.choice(30, size=2, replace=False)
            expected = sorted(
                set(g.neighbors(int(u)).tolist()) & set(g.neighbors(int(v)).tolist())
            )
            assert common_neighbors(g, int(u), int(v)).tolist() == expected


class TestInvariants:
    @given(
        edges=st.lists(
            st.tuples(st.integers(0, 14), st.integers(0, 14)).filter(lambda e: e[0] != e[1]),
            min_size=1,
            max_size=40,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_round_trip_reproduces_canonical_edge_list(self, edges, tmp_path_factory):
        tmp = tmp_path_factory.mktemp("roundtrip")
        f = tmp / "edges.txt"
        f.write_text("".join(f"{u} {v}\n" for u, v in edges))
        g = load_graph(f)
        canonical = sorted({(min(u, v), max(u, v)) for u, v in edges})
        assert serialize_edges(g) == "".join(f"{u} {v}\n" for u, v in canonical)

    @given(
        edges=st.lists(
            st.tuples(st.integers(0, 9), st.integers(0, 9)).filter(lambda e: e[0] != e[1]),
            min_size=1,
            max_size=25,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_handshake_and_symmetry(self, edges):
        n = 10
        g = Graph.from_edges(n, edges)
        assert int(g.degrees.sum()) == 2 * g.num_edges
        for u in range(n):
            for v in g.neighbors(u):
                assert u in g.neighbors(int(v))
        # CSR basics
        assert len(g.csr_offsets) == n + 1
        assert g.csr_offsets[-1] == 2 * g.num_edges
        assert np.all(np.diff(g.csr_offsets) >= 0)

    def test_common_neighbors_is_symmetric(self):
        from pathlink.generators import gnp

        g = gnp(20, 0.3, seed=7)
        for u, v in [(0, 1), (3, 12), (5, 19)]:
            assert common_neighbors(g, u, v).tolist() == common_neighbors(g, v, u).tolist()

    def test_neighbor_lists_sorted(self):
        from pathlink.generators import gnp

        g = gnp(25, 0.3, seed=3)
        for v in range(g.n):
            nbrs = g.neighbors(v)
            assert np.all(np.diff(nbrs) > 0)

    def test_neighbor_sum_matches_dense(self):
        from conftest import dense_adjacency
        from pathlink.generators import gnp

        g = gnp(15, 0.3, seed=5)
        x = np.random.default_rng(1).normal(size=(15, 4))
        a = dense_adjacency(g.n, g.edges)
        np.testing.assert_allclose(g.neighbor_sum(x), a @ x, atol=1e-12)
