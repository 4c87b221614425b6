import pathlib
import sys

import numpy as np
import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from claimcheck.data import Claim, DocEvidence, Label, Prediction, load_claims, load_corpus
from claimcheck.encoder import EncoderConfig
from claimcheck.verifier import LossConfig, VerifierModel

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def main_corpus():
    return load_corpus(FIXTURES / "corpus.jsonl")


@pytest.fixture(scope="session")
def main_claims(main_corpus):
    return load_claims(FIXTURES / "claims.jsonl", main_corpus)


@pytest.fixture(scope="session")
def synth_corpus():
    return load_corpus(FIXTURES / "synth" / "corpus.jsonl")


def small_model(seed=7, **overrides):
    """A gradcheck-sized model: every parameter is cheap to finite-difference."""
    defaults = dict(vocab_size=37, max_length=40, window=3, hidden_size=6,
                    num_layers=2, ffn_size=10)
    defaults.update(overrides)
    return VerifierModel(EncoderConfig(**defaults), LossConfig(lambda_rationale=4.0), seed=seed)


def random_gold_and_preds(rng, n_claims=6, n_docs=4, n_sentences=6,
                          first_claim_id=0, first_doc_id=0):
    """Random scoring instance in both claimcheck and oracle representations."""
    wire = {"SUPPORTS": "SUPPORT", "REFUTES": "CONTRADICT"}
    claims = []
    gold = {}
    doc_ids = [first_doc_id + d for d in range(n_docs)]
    for c in range(n_claims):
        claim_id = first_claim_id + c
        evidence = {}
        for doc_id in doc_ids:
            if rng.random() < 0.4:
                label = Label.SUPPORTS if rng.random() < 0.5 else Label.REFUTES
                rationales = []
                for _ in range(int(rng.integers(1, 3))):
                    size = int(rng.integers(1, min(3, n_sentences) + 1))
                    rationale = tuple(sorted(rng.choice(n_sentences, size=size, replace=False)))
                    rationales.append(tuple(int(i) for i in rationale))
                evidence[doc_id] = DocEvidence(label=label, rationales=tuple(rationales))
                gold[(claim_id, doc_id)] = (wire[label.value],
                                            [tuple(r) for r in rationales])
        claims.append(Claim(claim_id=claim_id, text=f"claim {claim_id}",
                            evidence=evidence, cited_doc_ids=tuple(doc_ids)))
    predictions = []
    preds = {}
    labels = [Label.SUPPORTS, Label.REFUTES, Label.NEI]
    for c in range(n_claims):
        claim_id = first_claim_id + c
        for doc_id in doc_ids:
            if rng.random() < 0.55:
                label = labels[int(rng.integers(0, 3))]
                if label is Label.NEI:
                    predictions.append(Prediction(claim_id, doc_id, Label.NEI, frozenset()))
                    continue
                size = int(rng.integers(1, n_sentences + 1))
                chosen = frozenset(int(i) for i in
                                   rng.choice(n_sentences, size=size, replace=False))
                predictions.append(Prediction(claim_id, doc_id, label, chosen))
                preds[(claim_id, doc_id)] = (wire[label.value], set(chosen))
    return claims, predictions, gold, preds
