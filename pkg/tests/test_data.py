import json

import pytest

from claimcheck.data import (Claim, Corpus, DocEvidence, Document, Label, Prediction,
                             Provenance, load_claims, load_corpus, load_predictions,
                             save_claims, save_corpus, save_predictions,
                             validate_predictions)
from claimcheck.errors import DataValidationError, ParseError


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


class TestCorpusIO:
    def test_single_record(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_lines(path, ['{"doc_id": 4983, "title": "t", "abstract": ["s1", "s2"]}'])
        corpus = load_corpus(path)
        assert len(corpus) == 1
        assert corpus[4983].sentences == ("s1", "s2")

    def test_duplicate_doc_id(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_lines(path, ['{"doc_id": 7, "title": "a", "abstract": ["x"]}',
                           '{"doc_id": 7, "title": "b", "abstract": ["y"]}'])
        with pytest.raises(DataValidationError, match="duplicate doc_id 7"):
            load_corpus(path)

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_lines(path, ['{"doc_id": 1, "title": "a", "abstract": []}', "{nope"])
        with pytest.raises(ParseError) as exc:
            load_corpus(path)
        assert exc.value.line_no == 2

    def test_fixture_roundtrip_byte_identical(self, fixtures_dir, tmp_path):
        # round-trip oracle: serialize(parse(x)) == normalize(x); the shipped
        # fixture is already canonical
        original = (fixtures_dir / "corpus.jsonl").read_bytes()
        corpus = load_corpus(fixtures_dir / "corpus.jsonl")
        assert len(corpus) == 20
        out = tmp_path / "copy.jsonl"
        save_corpus(corpus, out)
        assert out.read_bytes() == original

    def test_extra_fields_tolerated(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_lines(path, ['{"doc_id": 3, "title": "t", "abstract": ["s"], "structured": false}'])
        assert load_corpus(path)[3].title == "t"

    def test_empty_abstract_is_degenerate_but_loads(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_lines(path, ['{"doc_id": 5, "title": "stub", "abstract": []}'])
        assert load_corpus(path)[5].degenerate


class TestClaimIO:
    def test_valid_claim(self, tmp_path):
        corpus = Corpus([Document(11, "t", ("a", "b", "c"))])
        path = tmp_path / "claims.jsonl"
        write_lines(path, [json.dumps({
            "id": 1, "claim": "x",
            "evidence": {"11": [{"sentences": [0, 1], "label": "SUPPORT"}]},
            "cited_doc_ids": [11],
        })])
        claims = load_claims(path, corpus)
        assert claims[0].evidence[11].label is Label.SUPPORTS
        assert claims[0].evidence[11].rationales == ((0, 1),)

    def test_out_of_range_sentence(self, tmp_path):
        corpus = Corpus([Document(11, "t", ("a", "b", "c"))])
        path = tmp_path / "claims.jsonl"
        write_lines(path, [json.dumps({
            "id": 9, "claim": "x",
            "evidence": {"11": [{"sentences": [5], "label": "SUPPORT"}]},
            "cited_doc_ids": [11],
        })])
        with pytest.raises(DataValidationError, match="claim 9"):
            load_claims(path, corpus)

    def test_dangling_doc_id(self, tmp_path):
        corpus = Corpus([Document(11, "t", ("a",))])
        path = tmp_path / "claims.jsonl"
        write_lines(path, [json.dumps({
            "id": 2, "claim": "x",
            "evidence": {"99": [{"sentences": [0], "label": "SUPPORT"}]},
            "cited_doc_ids": [99],
        })])
        with pytest.raises(DataValidationError, match="claim 2"):
            load_claims(path, corpus)

    def test_empty_evidence_means_nei_everywhere(self, tmp_path):
        corpus = Corpus([Document(11, "t", ("a",))])
        path = tmp_path / "claims.jsonl"
        write_lines(path, ['{"id": 3, "claim": "x", "evidence": {}, "cited_doc_ids": [11]}'])
        claim = load_claims(path, corpus)[0]
        assert claim.evidence == {}

    def test_heterogeneous_labels_rejected(self, tmp_path):
        corpus = Corpus([Document(11, "t", ("a", "b"))])
        path = tmp_path / "claims.jsonl"
        write_lines(path, [json.dumps({
            "id": 4, "claim": "x",
            "evidence": {"11": [{"sentences": [0], "label": "SUPPORT"},
                                {"sentences": [1], "label": "CONTRADICT"}]},
            "cited_doc_ids": [11],
        })])
        with pytest.raises(DataValidationError, match="homogeneous"):
            load_claims(path, corpus)

    def test_unannotated_evidence_roundtrip(self, tmp_path):
        claim = Claim(claim_id=7, text="weak", cited_doc_ids=(11,),
                      evidence={11: DocEvidence(label=Label.SUPPORTS)},
                      provenance=Provenance.WEAK_TITLE)
        path = tmp_path / "weak.jsonl"
        save_claims([claim], path)
        loaded = load_claims(path, None)[0]
        assert not loaded.evidence[11].annotated
        assert loaded.provenance is Provenance.WEAK_TITLE
        assert loaded == claim

    def test_claims_roundtrip_byte_identical(self, fixtures_dir, main_corpus, tmp_path):
        original = (fixtures_dir / "claims.jsonl").read_bytes()
        claims = load_claims(fixtures_dir / "claims.jsonl", main_corpus)
        out = tmp_path / "claims.jsonl"
        save_claims(claims, out)
        assert out.read_bytes() == original


class TestPredictions:
    def test_roundtrip(self, tmp_path):
        preds = [
            Prediction(1, 11, Label.SUPPORTS, frozenset({0, 2})),
            Prediction(1, 12, Label.REFUTES, frozenset({1})),
            Prediction(2, 11, Label.NEI, frozenset()),
        ]
        path = tmp_path / "preds.jsonl"
        save_predictions(preds, path, claim_ids=[1, 2])
        loaded = load_predictions(path)
        # NEI pairs serialize as absence; the non-NEI records round-trip
        assert loaded == [p for p in preds if p.label is not Label.NEI]
        lines = path.read_text().splitlines()
        assert json.loads(lines[1]) == {"id": 2, "evidence": {}}

    def test_validate_clean(self, main_corpus, main_claims):
        preds = [Prediction(1, 101, Label.SUPPORTS, frozenset({2})),
                 Prediction(1, 103, Label.NEI, frozenset())]
        assert validate_predictions(preds, main_corpus, main_claims) == []

    def test_validate_violations(self, main_corpus, main_claims):
        preds = [
            Prediction(1, 101, Label.SUPPORTS, frozenset()),       # non-NEI, no rationales
            Prediction(1, 101, Label.SUPPORTS, frozenset({99})),   # dup pair + bad index
            Prediction(999, 101, Label.SUPPORTS, frozenset({0})),  # unknown claim
            Prediction(1, 999, Label.SUPPORTS, frozenset({0})),    # unknown doc
        ]
        violations = validate_predictions(preds, main_corpus, main_claims)
        messages = [v.message for v in violations]
        assert any("empty rationale" in m for m in messages)
        assert any("duplicate" in m for m in messages)
        assert any("out of range" in m for m in messages)
        assert any("unknown claim" in m for m in messages)
        assert any("unknown doc" in m for m in messages)

    def test_random_valid_predictions_pass(self, main_corpus, main_claims):
        import numpy as np

        rng = np.random.default_rng(0)
        preds = []
        for claim in main_claims:
            for doc_id in claim.cited_doc_ids:
                n = len(main_corpus[doc_id].sentences)
                if rng.random() < 0.5:
                    preds.append(Prediction(claim.claim_id, doc_id, Label.NEI, frozenset()))
                else:
                    label = Label.SUPPORTS if rng.random() < 0.5 else Label.REFUTES
                    size = int(rng.integers(1, n + 1))
                    idx = frozenset(int(i) for i in rng.choice(n, size=size, replace=False))
                    preds.append(Prediction(claim.claim_id, doc_id, label, idx))
        assert validate_predictions(preds, main_corpus, main_claims) == []
