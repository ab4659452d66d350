import json

import pytest

from conftest import (
    COLLIDER_COVARIATES,
    CONFOUNDED_MEDIATION,
    INDUCED_CONFOUNDING,
    INSTRUMENT_MEDIATOR,
    OUTCOME_COVARIATE,
    graph,
)
from pathid.cli import main
from pathid.expr import to_json
from pathid.identify import NATURAL_DIRECT, Query, identify_natural
from pathid.npsem import random_spec, spec_dumps
from random import Random


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def med_graph(tmp_path):
    return write(tmp_path, "g.graph", CONFOUNDED_MEDIATION)


@pytest.fixture
def direct_query(tmp_path):
    return write(
        tmp_path,
        "q.json",
        json.dumps(
            {
                "kind": "path_specific",
                "treatment": "A",
                "outcome": "Y",
                "paths": [["A", "Y"]],
            }
        ),
    )


class TestInspect:
    def test_mediation_graph(self, capsys, med_graph):
        code, out, _ = run(capsys, "inspect", med_graph)
        assert code == 0
        assert "districts: {A} {M,Y}" in out
        assert "M <-> Y" in out

    def test_collider_covariates(self, capsys, tmp_path):
        path = write(tmp_path, "g.graph", COLLIDER_COVARIATES)
        code, out, _ = run(capsys, "inspect", path)
        assert code == 0
        assert "G_{Y*} districts: {C1} {C3} {M} {Y}" in out
        assert "Y* (ancestors of Y avoiding A): {C1,C3,M,Y}" in out

    def test_single_node_graph(self, capsys, tmp_path):
        path = write(tmp_path, "g.graph", "obs A Y\n")
        code, out, _ = run(capsys, "inspect", path)
        assert code == 0
        assert "(none)" in out

    def test_parse_error_exit_2(self, capsys, tmp_path):
        path = write(tmp_path, "bad.graph", "obs A\nA -> A\n")
        code, _, err = run(capsys, "inspect", path)
        assert code == 2
        assert "line 2" in err


class TestIdentify:
    def test_instrument_mediator_direct(self, capsys, tmp_path, direct_query):
        gpath = write(tmp_path, "g6a.graph", INSTRUMENT_MEDIATOR)
        code, out, _ = run(capsys, "identify", gpath, "--query", direct_query)
        assert code == 0
        assert "Σ_l p(l|a') p(y|a,l)" in out

    def test_recanting_district_exit_1(self, capsys, med_graph, direct_query):
        code, out, _ = run(capsys, "identify", med_graph, "--query", direct_query)
        assert code == 1
        assert "not identified: recanting district {M,Y}" in out

    def test_recanting_witness_exit_1(self, capsys, tmp_path):
        gpath = write(tmp_path, "g3a.graph", INDUCED_CONFOUNDING)
        qpath = write(
            tmp_path,
            "qi.json",
            json.dumps(
                {
                    "kind": "natural_indirect",
                    "treatment": "A",
                    "outcome": "Y",
                    "mediators": ["M"],
                }
            ),
        )
        code, out, _ = run(capsys, "identify", gpath, "--query", qpath)
        assert code == 1
        assert "not identified: recanting witness L" in out

    def test_json_format_roundtrips(self, capsys, tmp_path, direct_query):
        gpath = write(tmp_path, "g6a.graph", INSTRUMENT_MEDIATOR)
        code, out, _ = run(
            capsys, "identify", gpath, "--query", direct_query, "--format", "json"
        )
        assert code == 0
        json.loads(out)

    def test_invalid_query_exit_2(self, capsys, med_graph, tmp_path):
        qpath = write(
            tmp_path,
            "bad.json",
            json.dumps({"kind": "total", "treatment": "A", "outcome": "A"}),
        )
        code, _, err = run(capsys, "identify", med_graph, "--query", qpath)
        assert code == 2
        assert "invalid query" in err

    def test_conditional_query_rejected(self, capsys, med_graph, tmp_path):
        qpath = write(
            tmp_path,
            "cond.json",
            json.dumps(
                {"kind": "total", "treatment": "A", "outcome": "Y", "given": {"M": 0}}
            ),
        )
        code, _, err = run(capsys, "identify", med_graph, "--query", qpath)
        assert code == 2
        assert "not supported" in err


class TestCheckAdjustment:
    def test_outcome_covariate(self, capsys, tmp_path):
        gpath = write(tmp_path, "g2b.graph", OUTCOME_COVARIATE)
        code, out, _ = run(capsys, "check-adjustment", gpath, "--roles", "A,M,Y")
        assert code == 0
        assert "valid adjustment sets: 1" in out
        assert "{C}" in out

    def test_max_size_bound(self, capsys, tmp_path):
        gpath = write(tmp_path, "g2b.graph", OUTCOME_COVARIATE)
        code, out, _ = run(
            capsys, "check-adjustment", gpath, "--roles", "A,M,Y", "--max-size", "0"
        )
        assert code == 0
        assert "{C}" not in out


class TestVerify:
    def test_identified_query_passes(self, capsys, tmp_path, direct_query):
        gpath = write(tmp_path, "g6a.graph", INSTRUMENT_MEDIATOR)
        code, out, _ = run(
            capsys, "verify", gpath, "--query", direct_query, "--n", "5"
        )
        assert code == 0
        assert out.count("PASS") == 5
        assert "5/5 specs passed" in out

    def test_not_identified_exit_1(self, capsys, med_graph, direct_query):
        code, out, _ = run(capsys, "verify", med_graph, "--query", direct_query)
        assert code == 1
        assert "not identified" in out

    def test_explicit_npsem_file(self, capsys, tmp_path, direct_query):
        gpath = write(tmp_path, "g6a.graph", INSTRUMENT_MEDIATOR)
        spec = random_spec(graph("instrument_mediator"), Random(3))
        npath = write(tmp_path, "m.json", spec_dumps(spec))
        code, out, _ = run(
            capsys, "verify", gpath, "--query", direct_query, "--npsem", npath
        )
        assert code == 0
        assert "1/1 specs passed" in out

    def test_tampered_expression_fails(self, capsys, tmp_path, direct_query):
        # flip one world label in the identified functional: FAIL expected
        gpath = write(tmp_path, "g6a.graph", INSTRUMENT_MEDIATOR)
        g = graph("instrument_mediator")
        res = identify_natural(Query(g, "A", "Y", NATURAL_DIRECT, mediators={"M"}))
        from pathid.identify import _swap_worlds

        tampered = _swap_worlds(res.expression)
        epath = write(tmp_path, "e.json", json.dumps(to_json(tampered)))
        code, out, _ = run(
            capsys, "verify", gpath, "--query", direct_query,
            "--expr", epath, "--n", "3",
        )
        assert code == 1
        assert "FAIL" in out
        assert "mismatch at worlds" in out

    def test_seeded_output_is_deterministic(self, capsys, tmp_path, direct_query):
        gpath = write(tmp_path, "g6a.graph", INSTRUMENT_MEDIATOR)
        argv = ["verify", gpath, "--query", direct_query, "--n", "3", "--seed", "7"]
        code1, out1, _ = run(capsys, *argv)
        code2, out2, _ = run(capsys, *argv)
        assert (code1, out1) == (code2, out2)


class TestRender:
    def test_render_expression_file(self, capsys, tmp_path):
        g = graph("instrument_mediator")
        res = identify_natural(Query(g, "A", "Y", NATURAL_DIRECT, mediators={"M"}))
        epath = write(tmp_path, "e.json", json.dumps(to_json(res.expression)))
        code, out, _ = run(capsys, "render", "--expr", epath, "--format", "latex")
        assert code == 0
        assert "\\sum" in out and "\\mid" in out

    def test_color_env(self, capsys, tmp_path, direct_query, monkeypatch):
        gpath = write(tmp_path, "g6a.graph", INSTRUMENT_MEDIATOR)
        monkeypatch.setenv("PATHID_COLOR", "1")
        _, out, _ = run(capsys, "verify", gpath, "--query", direct_query, "--n", "1")
        assert "\x1b[32m" in out
        monkeypatch.setenv("PATHID_COLOR", "0")
        _, out, _ = run(capsys, "verify", gpath, "--query", direct_query, "--n", "1")
        assert "\x1b[" not in out
