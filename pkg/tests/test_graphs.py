import numpy as np
import pytest

from upbkit.graphs import (
    K5_EDGES,
    ColoringScan,
    EdgeColoring,
    PartyGraph,
    RealizationError,
    Violation,
    check_party_constraints,
    enumerate_colorings,
    enumerate_valid_party_graphs,
    explicit_extension,
    is_valid_party_graph,
    realize_coloring,
)
from upbkit.product_search import SearchConfig, is_extendible

# the two admissible heavy graphs: a five-vertex path and a four-cycle plus
# an isolated vertex (canonical labelings from exhaustive enumeration)
PATH_FORM = PartyGraph(5, frozenset({(0, 1), (1, 2), (2, 3), (3, 4)})).canonical_form()
CYCLE_FORM = PartyGraph(5, frozenset({(0, 1), (1, 2), (2, 3), (0, 3)})).canonical_form()


@pytest.fixture(scope="module")
def scan() -> ColoringScan:
    return enumerate_colorings()


class TestPartyConstraints:
    def test_path_is_valid(self):
        g = PartyGraph(5, frozenset({(0, 1), (1, 2), (2, 3), (3, 4)}))
        assert check_party_constraints(g) == []

    def test_triangle_has_odd_cycle(self):
        g = PartyGraph(3, frozenset({(0, 1), (1, 2), (0, 2)}))
        violations = check_party_constraints(g)
        assert any(v.kind == "odd_cycle" for v in violations)

    def test_star_has_valence_violation(self):
        g = PartyGraph(4, frozenset({(0, 1), (0, 2), (0, 3)}))
        violations = check_party_constraints(g)
        assert Violation("valence", (0,)) in violations

    def test_five_cycle_is_odd(self):
        g = PartyGraph(5, frozenset({(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)}))
        assert any(v.kind == "odd_cycle" for v in check_party_constraints(g))

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            PartyGraph(3, frozenset({(1, 1)}))


class TestEnumerateValidGraphs:
    def test_exactly_two_classes(self):
        classes = enumerate_valid_party_graphs(5, 4)
        assert len(classes) == 2
        forms = {g.canonical_form() for g in classes}
        assert forms == {PATH_FORM, CYCLE_FORM}

    def test_impossible_edge_count_is_empty(self):
        assert enumerate_valid_party_graphs(5, 11) == []

    def test_monotone_violation(self):
        # adding edges never removes a violation, so single-party labeling
        # suffices for the existence scan
        rng = np.random.default_rng(21)
        checked = 0
        while checked < 1000:
            mask = rng.integers(0, 2, len(K5_EDGES)).astype(bool)
            edges = frozenset(e for e, b in zip(K5_EDGES, mask) if b)
            g = PartyGraph(5, edges)
            if is_valid_party_graph(g):
                continue
            remaining = [e for e in K5_EDGES if e not in edges]
            if not remaining:
                continue
            extra = remaining[int(rng.integers(0, len(remaining)))]
            bigger = PartyGraph(5, edges | {extra})
            assert not is_valid_party_graph(bigger)
            checked += 1


class TestEnumerateColorings:
    def test_scan_is_exhaustive(self, scan):
        assert scan.scanned == 3 ** 10 == 59049

    def test_survivor_count_regression(self, scan):
        assert len(scan.survivors) == 4590

    def test_every_survivor_has_heavy_party(self, scan):
        for coloring in scan.survivors:
            assert coloring.heavy_parties()

    def test_heavy_graphs_fall_into_the_two_classes(self, scan):
        cache: dict[frozenset, tuple] = {}
        seen = set()
        for coloring in scan.survivors:
            g = coloring.party_graph(coloring.heavy_parties()[0])
            key = frozenset(g.edges)
            if key not in cache:
                cache[key] = g.canonical_form()
            seen.add(cache[key])
            assert cache[key] in (PATH_FORM, CYCLE_FORM)
        assert seen == {PATH_FORM, CYCLE_FORM}

    def test_order_independence(self, scan):
        # re-enumeration reproduces the same survivor set
        again = enumerate_colorings()
        assert [c.labels for c in again.survivors] == [c.labels for c in scan.survivors]


class TestRealizeColoring:
    def test_realization_is_orthonormal_with_margins(self, scan):
        coloring = scan.survivors[0]
        members = realize_coloring(coloring, seed=5)
        stack = np.array([m.tensor for m in members])
        assert np.abs(stack @ stack.conj().T - np.eye(5)).max() < 1e-12
        for (i, j), label in zip(K5_EDGES, coloring.labels):
            p = "ABC".index(label)
            assert abs(np.vdot(members[i].factors[p], members[j].factors[p])) < 1e-14

    def test_different_seeds_same_outcome(self, scan):
        coloring = scan.survivors[100]
        a = realize_coloring(coloring, seed=1)
        b = realize_coloring(coloring, seed=2)
        assert np.abs(a[0].tensor - b[0].tensor).max() > 1e-3
        cfg = SearchConfig(grid_resolution=10, max_iterations=40)
        for members in (a, b):
            hit = is_extendible(members, cfg)
            assert hit is not None and hit.residual <= 1e-9

    def test_full_survivor_sweep_always_extendible(self, scan):
        # the refutation experiment: every survivor, ten realizations each,
        # always an extension product vector in the three-dim complement
        for idx, coloring in enumerate(scan.survivors):
            for rep in range(10):
                members = realize_coloring(coloring, seed=idx * 10 + rep)
                ext = explicit_extension(coloring, members)
                leak = np.sqrt(
                    sum(abs(np.vdot(m.tensor, ext.tensor)) ** 2 for m in members)
                )
                assert leak <= 1e-9

    def test_sampled_survivors_extendible_by_search(self, scan):
        rng = np.random.default_rng(22)
        cfg = SearchConfig(grid_resolution=10, max_iterations=40)
        for idx in rng.choice(len(scan.survivors), size=6, replace=False):
            members = realize_coloring(scan.survivors[idx], seed=int(idx))
            hit = is_extendible(members, cfg)
            assert hit is not None and hit.residual <= 1e-9

    def test_unrealizable_margin_fails(self, scan):
        with pytest.raises(RealizationError):
            realize_coloring(scan.survivors[0], seed=3, margin=0.49, attempts=5)


def test_coloring_validation():
    with pytest.raises(ValueError):
        EdgeColoring(("A",) * 9)
    with pytest.raises(ValueError):
        EdgeColoring(("A",) * 9 + ("X",))
