import json
import os
import subprocess
from pathlib import Path
from decimal import Decimal

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ewstrack


SCHEMA = json.loads(
    (Path(os.environ.get("EWS_SOURCE_DIR", Path(__file__).resolve().parents[2])) / "docs/schemas/interchange.schema.json")
    .read_text())


def validator(schema):
    return jsonschema.Draft202012Validator(schema)


def test_version():
    assert ewstrack.__version__.count(".") == 2


def test_fixture_corpus_matches_published_schema(root, interchange_schema):
    docs = sorted((root / "fixtures/corpus").glob("*.json"))
    assert len(docs) == 3
    for path in docs:
        doc = json.loads(path.read_text())
        validator(interchange_schema).validate(doc)
        assert ewstrack.parse_document(doc) == doc
    assert ewstrack.validate_corpus([p.read_text() for p in docs]) == []


def test_errors_carry_codes():
    with pytest.raises(ewstrack.EwsError) as info:
        ewstrack.parse_document({"file_name": "a.pdf", "elements": [{"kind": "table", "page": 1, "markdown": "| a |"}]})
    assert info.value.code == "SchemaViolation"
    assert "element 0" in str(info.value)
    with pytest.raises(ewstrack.EwsError) as info:
        ewstrack.parse_document("{not json")
    assert info.value.code == "MalformedJson"
    assert isinstance(info.value, ValueError)


element = st.fixed_dictionaries(
    {
        "kind": st.sampled_from(["text", "table", "image", "figure"]),
        "page": st.one_of(st.integers(-2, 5), st.just(2_000_000)),
        "markdown": st.sampled_from(["", "Some text.", "| a | b |\n| --- | --- |"]),
    },
    optional={
        "image_ref": st.one_of(st.none(), st.just("x.png"), st.integers(0, 3)),
        "caption": st.one_of(st.none(), st.just("Figure 1")),
        "table_dims": st.one_of(
            st.none(),
            st.fixed_dictionaries({"rows": st.integers(0, 3), "cols": st.integers(0, 3)}),
            st.just({"rows": 1}),
        ),
        "extra": st.just(1),
    },
)


@settings(max_examples=300, deadline=None)
@given(st.lists(element, max_size=4), st.sampled_from(["doc.pdf", ""]))
def test_schema_and_parser_accept_the_same_documents(elements, name):
    doc = {"file_name": name, "elements": elements}
    schema_ok = validator(SCHEMA).is_valid(doc)
    try:
        ewstrack.parse_document(doc)
        parser_ok = True
    except ewstrack.EwsError as e:
        assert e.code == "SchemaViolation"
        parser_ok = False
    assert schema_ok == parser_ok


def test_chunking_and_ids(root):
    doc = json.loads((root / "fixtures/corpus/sahel_hydromet.json").read_text())
    chunks = ewstrack.chunk_document(doc)
    assert [c["id"] for c in chunks][:3] == [ewstrack.chunk_id("sahel_hydromet.pdf", i, k)
                                             for i, k in enumerate(["text", "text", "table"])]
    with pytest.raises(ewstrack.EwsError):
        ewstrack.chunk_document(doc, max_text_chars=10, min_text_chars=20)


def test_fusion_and_embedding():
    fused = ewstrack.rrf_fuse(["a", "b"], ["c", "a", "d"])
    assert fused[0][0] == "a"
    assert abs(fused[0][1] - (1 / 61 + 1 / 62)) < 1e-12
    assert [f[0] for f in fused] == ["a", "c", "b", "d"]
    v = ewstrack.hash_embed("weather radar", dim=32, seed=3)
    assert len(v) == 32
    assert abs(sum(x * x for x in v) - 1.0) < 1e-5
    assert v == ewstrack.hash_embed("weather radar", dim=32, seed=3)


def test_money_and_tolerance():
    assert ewstrack.parse_money("USD 1.2 million") == (Decimal("1200000"), "USD")
    assert ewstrack.parse_money("1.5m CHF") == (Decimal("1500000"), "CHF")
    with pytest.raises(ewstrack.EwsError) as info:
        ewstrack.parse_money("a lot")
    assert info.value.code == "Unparseable"
    assert ewstrack.budget_tp("150", "100", "1000")
    assert not ewstrack.budget_tp("150.0001", "100", "1000")
    with pytest.raises(ewstrack.EwsError):
        ewstrack.budget_tp("1", "1", "0")


def test_gold_budgets_match_python_sums(root):
    import csv

    sums = {}
    with open(root / "tests/data/gold_298.csv", newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            amount = Decimal(row["Amount"].strip().replace(",", ""))
            sums[row["Project ID"]] = sums.get(row["Project ID"], Decimal(0)) + amount
    budgets = ewstrack.gold_budgets(root / "tests/data/gold_298.csv")
    assert {p: b["total"] for p, b in budgets.items()} == sums
    for b in budgets.values():
        assert sum(b["pillars"].values()) == b["total"]


def test_pipeline_in_process(root, tmp_path, result_schema):
    scripts = str(root / "fixtures/scripts")
    corpus, index, run = tmp_path / "corpus", tmp_path / "index", tmp_path / "run"
    status, out, err = ewstrack.run_cli(["ingest", str(root / "fixtures/corpus"), str(corpus)])
    assert status == 0, err
    status, out, err = ewstrack.run_cli(["index", str(corpus), str(index), "--script-dir", scripts])
    assert status == 0, err
    status, out, err = ewstrack.run_cli(
        ["extract", str(index), "--all", "--method", "agent", "--out", str(run), "--script-dir", scripts])
    assert status == 0, err
    expected = json.loads((root / "fixtures/expected.json").read_text())
    for project, e in expected.items():
        result = json.loads((run / "results" / f"{project}.json").read_text())
        validator(result_schema).validate(result)
        assert ewstrack.check_extraction(result) == []
        for pillar, amount in e["pillars"].items():
            assert Decimal(str(result["pillar_allocations"][pillar]["amount"])) == Decimal(amount)
        text, data = ewstrack.render_report(result)
        assert "Allocation by pillar" in text
        assert sum(ewstrack.percentage_tenths(result)) == 1000
        assert len(data["pillars"]) == 5
    status, out, err = ewstrack.run_cli(["evaluate", str(run), str(root / "fixtures/gold.csv")])
    assert status == 0, err
    metrics = json.loads((run / "metrics" / "metrics.json").read_text())
    assert metrics["amounts"]["accuracy"] == 1.0


def test_ingest_consumes_converter_output(tmp_path, interchange_schema):
    # What an external PDF converter writes: one interchange file per PDF.
    doc = {
        "file_name": "converted.pdf",
        "elements": [
            {"kind": "text", "page": 1, "markdown": "# Converted\n\nA one-page document."},
            {"kind": "table", "page": 1, "markdown": "| Item | USD |\n| --- | --- |\n| Sirens | 1,000 |",
             "table_dims": {"rows": 3, "cols": 2}},
            {"kind": "image", "page": 1, "markdown": "", "image_ref": "converted/fig.png", "caption": "Map"},
        ],
    }
    validator(interchange_schema).validate(doc)
    src = tmp_path / "in"
    src.mkdir()
    (src / "converted.json").write_text(json.dumps(doc))
    status, out, err = ewstrack.run_cli(["ingest", str(src), str(tmp_path / "out")])
    assert status == 0, err
    manifest = json.loads((tmp_path / "out" / "corpus_manifest.json").read_text())
    assert manifest["documents"][0]["file_name"] == "converted.pdf"
    assert manifest["documents"][0]["elements"] == 3

    (src / "broken.json").write_text(json.dumps({"file_name": "b.pdf", "elements": [{"kind": "image", "page": 1,
                                                                                      "markdown": ""}]}))
    status, out, err = ewstrack.run_cli(["ingest", str(src), str(tmp_path / "out2")])
    assert status == 1
    assert "broken.json" in err


@pytest.mark.skipif(not os.environ.get("EWS_CLI"), reason="command line binary not built")
def test_command_line_binary_exit_codes():
    cli = os.environ["EWS_CLI"]
    assert subprocess.run([cli, "--version"], capture_output=True).returncode == 0
    assert subprocess.run([cli, "frobnicate"], capture_output=True).returncode == 2
    assert subprocess.run([cli, "report", "/nonexistent.json"], capture_output=True).returncode == 2
