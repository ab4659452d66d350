import pytest

from conftest import ALL_NAMED_GRAPHS, graph
from pathid.graphs import (
    Admg,
    CausalGraph,
    GraphError,
    ParseError,
    districts,
    hidden_form,
    induced_subgraph,
    latent_project,
    mutilate,
    normalize_hidden,
    parse_admg,
    parse_graph,
    render_admg,
    render_graph,
    ystar,
)


def dset(blocks):
    return frozenset(frozenset(b) for b in blocks)


class TestParsing:
    def test_mediation_graph_roundtrip(self):
        g = graph("confounded_mediation")
        assert g.observed == frozenset({"A", "M", "Y"})
        assert g.hidden == frozenset({"U"})
        assert ("U", "M") in g.directed_edges
        assert parse_graph(render_graph(g)) == g

    def test_two_node_chain(self):
        g = parse_graph("obs A Y\nA -> Y")
        assert g.observed == frozenset({"A", "Y"})
        assert g.directed_edges == frozenset({("A", "Y")})

    def test_self_loop_rejected(self):
        with pytest.raises(ParseError, match="self-loop"):
            parse_graph("obs A\nA -> A")

    def test_cycle_rejected(self):
        with pytest.raises(ParseError, match="cycle"):
            parse_graph("obs A B\nA -> B\nB -> A")

    def test_undeclared_node(self):
        with pytest.raises(ParseError, match="undeclared node M"):
            parse_graph("obs A Y\nA -> M")

    def test_duplicate_declaration(self):
        with pytest.raises(ParseError, match="duplicate declaration"):
            parse_graph("obs A Y\nhid A")

    def test_duplicate_edge(self):
        with pytest.raises(ParseError, match="duplicate edge"):
            parse_graph("obs A Y\nA -> Y\nA -> Y")

    def test_error_carries_line_number(self):
        with pytest.raises(ParseError, match="line 3"):
            parse_graph("obs A Y\nA -> Y\nA -> Z")

    def test_comments_and_blank_lines(self):
        g = parse_graph("# a graph\nobs A Y\n\nA -> Y  # edge\n")
        assert g.directed_edges == frozenset({("A", "Y")})

    def test_bidirected_needs_admg_parser(self):
        with pytest.raises(ParseError):
            parse_graph("obs A Y\nA <-> Y")
        admg = parse_admg("obs A Y\nA <-> Y")
        assert admg.bidirected_edges == frozenset({("A", "Y")})

    def test_bidirected_forbidden_with_hidden(self):
        with pytest.raises(ParseError, match="hidden"):
            parse_admg("obs A Y\nhid U\nA <-> Y\nU -> A\nU -> Y")

    def test_admg_roundtrip(self):
        admg = parse_admg("obs A M Y\nA -> M\nM -> Y\nA <-> Y")
        assert parse_admg(render_admg(admg)) == admg

    @pytest.mark.parametrize("name", sorted(ALL_NAMED_GRAPHS))
    def test_named_graphs_roundtrip(self, name):
        g = graph(name)
        assert parse_graph(render_graph(g)) == g


class TestHiddenNormalization:
    def test_hidden_chain_is_projected(self):
        g = normalize_hidden(
            frozenset({"X", "Y", "Z"}),
            frozenset({"U1", "U2"}),
            frozenset({("U1", "U2"), ("U2", "Y"), ("U1", "X"), ("X", "Z")}),
        )
        # U2 ends with one observed child and disappears; U1 reaches X and Y
        assert g.hidden == frozenset({"U1"})
        assert ("U1", "Y") in g.directed_edges

    def test_hidden_with_observed_parent(self):
        g = normalize_hidden(
            frozenset({"X", "P", "Q"}),
            frozenset({"U"}),
            frozenset({("X", "U"), ("U", "P"), ("U", "Q")}),
        )
        # the mediation through U becomes direct edges; U stays as a root
        assert ("X", "P") in g.directed_edges and ("X", "Q") in g.directed_edges
        assert g.parents("U") == frozenset()

    def test_single_child_hidden_dropped(self):
        g = normalize_hidden(
            frozenset({"X", "Y"}),
            frozenset({"U"}),
            frozenset({("U", "X"), ("X", "Y")}),
        )
        assert g.hidden == frozenset()

    def test_direct_constructor_rejects_noncanonical(self):
        with pytest.raises(GraphError, match="normalize_hidden"):
            CausalGraph(
                frozenset({"X", "P", "Q"}),
                frozenset({"U"}),
                frozenset({("X", "U"), ("U", "P"), ("U", "Q")}),
            )


class TestLatentProjection:
    def test_confounded_mediation(self):
        admg = latent_project(graph("confounded_mediation"))
        assert admg.directed_edges == frozenset(
            {("A", "M"), ("A", "Y"), ("M", "Y")}
        )
        assert admg.bidirected_edges == frozenset({("M", "Y")})

    def test_collider_covariates(self):
        admg = latent_project(graph("collider_covariates"))
        assert admg.bidirected_edges == frozenset(
            {("A", "C3"), ("C2", "M"), ("C2", "C3")}
        )
        assert ("C1", "C3") in admg.directed_edges

    def test_no_hidden_is_identity(self):
        g = graph("two_mediators")
        admg = latent_project(g)
        assert admg.bidirected_edges == frozenset()
        assert admg.directed_edges == g.directed_edges

    def test_hidden_form_inverts_projection(self):
        admg = latent_project(graph("collider_covariates"))
        assert latent_project(hidden_form(admg)) == admg


class TestDistricts:
    def test_confounded_mediation_partition(self):
        admg = latent_project(graph("confounded_mediation"))
        assert districts(admg) == dset([{"A"}, {"M", "Y"}])

    def test_outcome_ancestor_subgraph_districts(self):
        admg = latent_project(graph("collider_covariates"))
        sub = induced_subgraph(admg, ystar(admg, "A", "Y"))
        assert districts(sub) == dset([{"C1"}, {"C3"}, {"M"}, {"Y"}])

    def test_no_bidirected_all_singletons(self):
        admg = latent_project(graph("two_mediators"))
        assert districts(admg) == dset([{v} for v in admg.nodes])

    @pytest.mark.parametrize("name", sorted(ALL_NAMED_GRAPHS))
    def test_districts_partition(self, name):
        admg = latent_project(graph(name))
        blocks = districts(admg)
        union = frozenset().union(*blocks)
        assert union == admg.nodes
        assert sum(len(b) for b in blocks) == len(admg.nodes)

    @pytest.mark.parametrize("name", sorted(ALL_NAMED_GRAPHS))
    def test_subgraph_districts_refine(self, name):
        admg = latent_project(graph(name))
        full = districts(admg)
        for keep_size in range(1, len(admg.nodes)):
            keep = frozenset(sorted(admg.nodes)[:keep_size])
            for block in districts(induced_subgraph(admg, keep)):
                assert any(block <= d for d in full)


class TestSurgery:
    def test_mutilate_cut_out(self):
        g = graph("baseline_covariates")
        cut = mutilate(g, cut_out={"A", "M"})
        assert not [e for e in cut.directed_edges if e[0] in ("A", "M")]
        assert cut.nodes == g.nodes

    def test_mutilate_identity(self):
        admg = latent_project(graph("confounded_mediation"))
        assert mutilate(admg) == admg

    def test_mutilate_cut_in_no_incoming(self):
        admg = latent_project(graph("confounded_mediation"))
        cut = mutilate(admg, cut_in={"A"})
        assert cut == admg  # the treatment already has no incoming edges
        cut_m = mutilate(admg, cut_in={"M"})
        assert ("A", "M") not in cut_m.directed_edges
        assert ("M", "Y") not in cut_m.bidirected_edges

    def test_mutilate_idempotent(self):
        admg = latent_project(graph("collider_covariates"))
        once = mutilate(admg, cut_out={"A"}, cut_in={"M"})
        assert mutilate(once, cut_out={"A"}, cut_in={"M"}) == once

    def test_mutilate_unknown_node(self):
        admg = latent_project(graph("confounded_mediation"))
        with pytest.raises(GraphError, match="unknown"):
            mutilate(admg, cut_out={"Q"})


class TestYstar:
    def test_confounded_mediation(self):
        admg = latent_project(graph("confounded_mediation"))
        assert ystar(admg, "A", "Y") == frozenset({"M", "Y"})

    def test_collider_covariates(self):
        admg = latent_project(graph("collider_covariates"))
        assert ystar(admg, "A", "Y") == frozenset({"C1", "C3", "M", "Y"})

    def test_chain(self):
        admg = parse_admg("obs A Y\nA -> Y")
        assert ystar(admg, "A", "Y") == frozenset({"Y"})

    def test_induced_subgraph_identity_and_singleton(self):
        admg = latent_project(graph("collider_covariates"))
        assert induced_subgraph(admg, admg.nodes) == admg
        single = induced_subgraph(admg, {"Y"})
        assert single.nodes == frozenset({"Y"})
        assert not single.directed_edges and not single.bidirected_edges
