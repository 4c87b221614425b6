import math

import numpy as np
import pytest

from claimcheck.data import Claim, Document, Label
from claimcheck.errors import AssemblyError, DataValidationError, PredictionError
from claimcheck.verifier import (CLS_ID, SEP_ID, HashingTokenizer, LossConfig,
                                 VerifierOutput, VerifierRelevanceScorer, assemble_input,
                                 decode, load_checkpoint, multitask_loss, predict_batch,
                                 save_checkpoint)
from conftest import small_model


def recount_assembly(assembled, tokenizer_m):
    """Recount-oracle: scan the emitted sequence and re-derive the invariants."""
    ids = assembled.token_ids.tolist()
    assert ids[0] == CLS_ID
    sep_positions = [i for i, t in enumerate(ids) if t == SEP_ID]
    m = assembled.claim_token_count
    # layout: CLS, m claim tokens, SEP, title..., SEP, then sentence blocks
    assert ids[1 + m] == SEP_ID
    expected_global = m + assembled.num_sentences + 3
    assert int(assembled.global_attention_mask.sum()) == expected_global
    markers = list(assembled.sentence_marker_positions)
    assert markers == sorted(markers)
    assert markers == sep_positions[2:]
    flagged = np.flatnonzero(assembled.global_attention_mask).tolist()
    assert flagged[:1 + m] == list(range(1 + m))
    assert set(sep_positions) <= set(flagged)


class TestAssembleInput:
    def test_zero_retained_sentences_pathological_cap(self):
        tokenizer = HashingTokenizer(64)
        doc = Document(1, "one two three", ("sentence tokens here extra words",))
        claim = "four five"
        m, p = 2, 3
        assembled = assemble_input(claim, doc, tokenizer, max_length=1 + m + 1 + p + 1)
        assert len(assembled.token_ids) == 1 + m + 1 + p + 1
        assert assembled.num_sentences == 0
        assert assembled.truncated
        assert int(assembled.global_attention_mask.sum()) == m + 3

    def test_two_sentences_fully_retained(self):
        tokenizer = HashingTokenizer(64)
        doc = Document(1, "title here", ("alpha beta", "gamma"))
        assembled = assemble_input("claim words three", doc, tokenizer, max_length=50)
        assert not assembled.truncated
        assert assembled.num_sentences == 2
        assert int(np.count_nonzero(assembled.token_ids == SEP_ID)) == 4
        assert int(assembled.global_attention_mask.sum()) == 3 + 5  # m + n' + 3

    def test_random_pairs_recount_oracle(self):
        rng = np.random.default_rng(8)
        tokenizer = HashingTokenizer(256)
        vocab = [f"tok{i}" for i in range(30)]
        for _ in range(100):
            claim = " ".join(rng.choice(vocab, size=int(rng.integers(1, 6))))
            title = " ".join(rng.choice(vocab, size=int(rng.integers(1, 5))))
            sentences = tuple(" ".join(rng.choice(vocab, size=int(rng.integers(1, 6))))
                              for _ in range(int(rng.integers(1, 6))))
            doc = Document(1, title, sentences)
            max_length = int(rng.integers(16, 64))
            try:
                assembled = assemble_input(claim, doc, tokenizer, max_length)
            except AssemblyError:
                prefix = 3 + len(tokenizer.encode(claim)) + len(tokenizer.encode(title))
                assert prefix > max_length
                continue
            assert len(assembled.token_ids) <= max_length
            recount_assembly(assembled, tokenizer)

    def test_truncation_monotonicity(self):
        tokenizer = HashingTokenizer(128)
        doc = Document(1, "t1 t2", tuple(f"w{i} w{i} w{i}" for i in range(8)))
        previous = -1
        for max_length in range(10, 60):
            try:
                assembled = assemble_input("c1 c2 c3", doc, tokenizer, max_length)
            except AssemblyError:
                continue
            assert assembled.num_sentences >= previous
            previous = assembled.num_sentences

    def test_claim_title_overflow_raises(self):
        tokenizer = HashingTokenizer(64)
        doc = Document(1, "a b c d e f g", ("s",))
        with pytest.raises(AssemblyError, match="max_length"):
            assemble_input("x y z", doc, tokenizer, max_length=8)

    def test_empty_abstract_rejected(self):
        tokenizer = HashingTokenizer(64)
        with pytest.raises(AssemblyError, match="empty abstract"):
            assemble_input("c", Document(1, "t", ()), tokenizer, max_length=32)

    def test_whole_sentences_only(self):
        tokenizer = HashingTokenizer(64)
        doc = Document(1, "t", ("one two three four", "five six"))
        # room for prefix + first sentence + SEP but only part of the second
        assembled = assemble_input("c", doc, tokenizer, max_length=10)
        assert assembled.num_sentences == 1
        assert assembled.truncated


class TestForwardShapes:
    def test_probability_contract(self):
        model = small_model()
        doc = Document(1, "title", ("alpha beta", "gamma delta", "eps"))
        out = model.forward(model.assemble("alpha claim", doc))
        assert out.label_probs.shape == (3,)
        assert abs(out.label_probs.sum() - 1.0) < 1e-6
        assert len(out.rationale_probs) == 3
        assert np.all((out.rationale_probs >= 0) & (out.rationale_probs <= 1))

    def test_state_length_mismatch_rejected(self):
        from claimcheck.verifier import apply_heads, init_head_params

        model = small_model()
        assembled = model.assemble("c", Document(1, "t", ("a b",)))
        params = init_head_params(6, np.random.default_rng(0))
        with pytest.raises(DataValidationError, match="positions"):
            apply_heads(params, np.zeros((3, 6)), assembled)


class TestMultitaskLoss:
    def test_perfect_prediction_zero_loss(self):
        out = VerifierOutput(label_probs=np.array([1.0, 0.0, 0.0]),
                             rationale_probs=np.array([1.0, 0.0]))
        assert multitask_loss(out, Label.SUPPORTS, {0}, LossConfig(1.0)) == 0.0

    def test_hand_evaluated_example(self):
        out = VerifierOutput(label_probs=np.array([0.7, 0.2, 0.1]),
                             rationale_probs=np.array([0.9, 0.2]))
        loss = multitask_loss(out, Label.SUPPORTS, {0}, LossConfig(1.0))
        expected = -math.log(0.7) + 0.5 * (-math.log(0.9) - math.log(0.8))
        assert loss == pytest.approx(expected, abs=1e-12)
        assert loss == pytest.approx(0.5208, abs=5e-4)

    def test_absent_rationales_gate_for_any_lambda(self):
        out = VerifierOutput(label_probs=np.array([0.7, 0.2, 0.1]),
                             rationale_probs=np.array([0.9, 0.2]))
        for lam in (0.0, 1.0, 15.0, 1e6):
            loss = multitask_loss(out, Label.SUPPORTS, None, LossConfig(lam))
            assert loss == pytest.approx(-math.log(0.7), abs=1e-12)

    def test_logit_and_probability_routes_agree(self):
        rng = np.random.default_rng(1)
        model = small_model()
        doc = Document(1, "title words", ("alpha beta", "gamma", "delta eps"))
        assembled = model.assemble("alpha gamma", doc)
        out = model.forward(assembled)
        for gold in (frozenset({0, 2}), frozenset(), None):
            loss, _ = model.loss_and_grads(assembled, Label.REFUTES, gold)
            ref = multitask_loss(out, Label.REFUTES, gold, model.loss_config)
            assert loss == pytest.approx(ref, rel=1e-12)


class TestGradients:
    def test_finite_differences_every_parameter(self):
        rng = np.random.default_rng(99)
        model = small_model(seed=5)
        vocab = [f"t{i}" for i in range(15)]
        for _ in range(3):
            claim = " ".join(rng.choice(vocab, size=2))
            doc = Document(1, " ".join(rng.choice(vocab, size=2)),
                           tuple(" ".join(rng.choice(vocab, size=3)) for _ in range(2)))
            assembled = model.assemble(claim, doc)
            gold_label = Label.REFUTES
            gold = frozenset({0})
            _, grads = model.loss_and_grads(assembled, gold_label, gold)
            h = 1e-6
            for name in sorted(model.params):
                param = model.params[name]
                flat = param.reshape(-1)
                analytic = grads[name].reshape(-1)
                for idx in range(flat.size):
                    original = flat[idx]
                    flat[idx] = original + h
                    up, _ = model.loss_and_grads(assembled, gold_label, gold)
                    flat[idx] = original - h
                    down, _ = model.loss_and_grads(assembled, gold_label, gold)
                    flat[idx] = original
                    fd = (up - down) / (2 * h)
                    assert abs(fd - analytic[idx]) <= 1e-4 * max(abs(fd), abs(analytic[idx])) + 1e-8

    def test_rationale_head_gradient_exactly_zero_when_absent(self):
        model = small_model(seed=2)
        doc = Document(1, "title", ("alpha beta", "gamma delta"))
        assembled = model.assemble("claim text", doc)
        for lam in (0.0, 1.0, 500.0):
            model.loss_config = LossConfig(lambda_rationale=lam)
            _, grads = model.loss_and_grads(assembled, Label.SUPPORTS, None)
            for name, grad in grads.items():
                if name.startswith("rationale_head"):
                    assert not np.any(grad)

    def test_encoder_gradient_nonzero_when_absent(self):
        model = small_model(seed=2)
        doc = Document(1, "title", ("alpha beta",))
        assembled = model.assemble("claim text", doc)
        _, grads = model.loss_and_grads(assembled, Label.SUPPORTS, None)
        assert np.any(grads["label_head/w2"])
        assert np.any(grads["layer0/attn/wq"])


class TestDecode:
    def out(self, label_probs, rationale_probs):
        return VerifierOutput(np.array(label_probs), np.array(rationale_probs))

    def test_supports_with_rationale(self):
        pred = decode(self.out([0.8, 0.1, 0.1], [0.9, 0.1]), 0.5, claim_id=1, doc_id=2)
        assert pred.label is Label.SUPPORTS
        assert pred.rationale_indices == {0}

    def test_forced_nei_without_rationales(self):
        pred = decode(self.out([0.8, 0.1, 0.1], [0.3, 0.2]), 0.5, claim_id=1, doc_id=2)
        assert pred.label is Label.NEI
        assert pred.rationale_indices == frozenset()

    def test_nei_clears_rationales(self):
        pred = decode(self.out([0.1, 0.1, 0.8], [0.9, 0.9]), 0.5, claim_id=1, doc_id=2)
        assert pred.label is Label.NEI
        assert pred.rationale_indices == frozenset()

    def test_threshold_boundary_inclusive(self):
        pred = decode(self.out([0.6, 0.3, 0.1], [0.5]), 0.5, claim_id=1, doc_id=2)
        assert pred.rationale_indices == {0}

    def test_invalid_threshold(self):
        with pytest.raises(DataValidationError):
            decode(self.out([1, 0, 0], [1.0]), 0.0, claim_id=1, doc_id=2)

    def test_decode_totality_random(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            probs = rng.dirichlet(np.ones(3))
            rationale = rng.uniform(size=int(rng.integers(0, 5)))
            pred = decode(self.out(probs, rationale), 0.5, claim_id=1, doc_id=2)
            assert (pred.label is Label.NEI) == (not pred.rationale_indices)


class TestPredictBatch:
    def test_doc_id_order_and_count(self):
        model = small_model()
        claim = Claim(9, "alpha claim", {}, (3, 1, 2))
        docs = [Document(3, "t", ("a b",)), Document(1, "t", ("c",)), Document(2, "t", ("d e",))]
        preds = predict_batch(model, claim, docs)
        assert [p.doc_id for p in preds] == [1, 2, 3]
        assert all(p.claim_id == 9 for p in preds)

    def test_errors_aggregated_with_identifiers(self):
        model = small_model()
        claim = Claim(9, "alpha claim", {}, ())
        docs = [Document(1, "t", ("ok",)), Document(2, "t", ()), Document(3, "t", ())]
        with pytest.raises(PredictionError) as exc:
            predict_batch(model, claim, docs)
        assert exc.value.claim_id == 9
        assert [doc_id for doc_id, _ in exc.value.failures] == [2, 3]


class TestCheckpoint:
    def test_roundtrip_and_byte_determinism(self, tmp_path):
        model = small_model(seed=11)
        path_a, path_b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(path_a, model, extra_meta={"epoch_completed": 0})
        save_checkpoint(path_b, model, extra_meta={"epoch_completed": 0})
        assert path_a.read_bytes() == path_b.read_bytes()
        loaded, opt_state, meta = load_checkpoint(path_a)
        assert opt_state is None
        assert meta["encoder"] == model.encoder_config.to_dict()
        assert sorted(loaded.params) == sorted(model.params)
        for name in model.params:
            assert np.array_equal(loaded.params[name], model.params[name])
        doc = Document(1, "t", ("alpha beta",))
        out_a = model.forward(model.assemble("c", doc))
        out_b = loaded.forward(loaded.assemble("c", doc))
        assert np.array_equal(out_a.label_probs, out_b.label_probs)

    def test_version_rejected(self, tmp_path):
        from claimcheck.errors import CheckpointError
        import zipfile, io, json
        import numpy as np2

        model = small_model()
        path = tmp_path / "bad.ckpt"
        save_checkpoint(path, model)
        # rewrite the meta entry with a bogus version
        with np.load(path) as archive:
            arrays = {k: archive[k] for k in archive.files}
        meta = json.loads(bytes(arrays["__meta__"]).decode())
        meta["format_version"] = 999
        arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
        with zipfile.ZipFile(path, "w") as zf:
            for k, v in arrays.items():
                buf = io.BytesIO()
                np.lib.format.write_array(buf, v, allow_pickle=False)
                zf.writestr(k + ".npy", buf.getvalue())
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)


class TestRelevanceScorer:
    def test_returns_probability_like_score(self):
        model = small_model()
        scorer = VerifierRelevanceScorer(model)
        score = scorer("alpha claim", "some document text about alpha")
        assert 0.0 <= score <= 1.0
