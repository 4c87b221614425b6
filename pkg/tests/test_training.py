import json
import pathlib

import numpy as np
import pytest

from claimcheck.data import Claim, load_claims, load_corpus, save_claims
from claimcheck.errors import ConfigError, DataValidationError
from claimcheck.training import (FewShotSpec, LazyAdam, StageConfig, parse_stage_config,
                                 run_stage, sample_few_shot, tune_lambda, warmup_linear_lr)
from claimcheck.verifier import load_checkpoint

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def write_config(path, out, claims, corpus, *, epochs=2, seed=3, extra=""):
    path.write_text(f"""
stage = test
seed = {seed}
epochs = {epochs}
batch_size = 4
learning_rate = 0.002
lambda_rationale = 5.0
max_length = 96
encoder.vocab_size = 512
encoder.hidden_size = 12
encoder.num_layers = 1
encoder.ffn_size = 24
encoder.window = 8
checkpoint_out = {out}
dataset.1.claims = {claims}
dataset.1.corpus = {corpus}
{extra}
""", encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    """First 12 synthetic claims; small enough for multi-run tests."""
    tmp = tmp_path_factory.mktemp("tiny")
    corpus_path = FIXTURES / "synth" / "corpus.jsonl"
    corpus = load_corpus(corpus_path)
    claims = load_claims(FIXTURES / "synth" / "claims_train.jsonl", corpus)[:12]
    claims_path = tmp / "claims.jsonl"
    save_claims(claims, claims_path)
    return claims_path, corpus_path


class TestConfigParsing:
    def test_roundtrip_keys(self, tmp_path, tiny_dataset):
        claims, corpus = tiny_dataset
        path = write_config(tmp_path / "s.cfg", tmp_path / "m.ckpt", claims, corpus)
        config = parse_stage_config(path)
        assert config.epochs == 2
        assert config.encoder.hidden_size == 12
        assert config.datasets[0].weight == 1.0

    def test_unknown_key_rejected(self, tmp_path, tiny_dataset):
        claims, corpus = tiny_dataset
        path = write_config(tmp_path / "s.cfg", tmp_path / "m.ckpt", claims, corpus,
                            extra="bogus_key = 1")
        with pytest.raises(ConfigError, match="bogus_key"):
            parse_stage_config(path)

    def test_missing_dataset_rejected(self, tmp_path):
        path = tmp_path / "s.cfg"
        path.write_text("seed = 1\nepochs = 1\ncheckpoint_out = x\n")
        with pytest.raises(ConfigError, match="dataset"):
            parse_stage_config(path)

    def test_dev_requires_both(self, tmp_path, tiny_dataset):
        claims, corpus = tiny_dataset
        path = write_config(tmp_path / "s.cfg", tmp_path / "m.ckpt", claims, corpus,
                            extra=f"dev_claims = {claims}")
        with pytest.raises(ConfigError, match="together"):
            parse_stage_config(path)


class TestSchedule:
    def test_warmup_then_decay(self):
        lrs = [warmup_linear_lr(1.0, step, 100) for step in range(100)]
        assert lrs[9] == pytest.approx(1.0)          # end of 10% warmup
        assert lrs[0] == pytest.approx(0.1)
        assert all(b <= a for a, b in zip(lrs[9:], lrs[10:]))
        assert lrs[-1] == pytest.approx(1 / 90)

    def test_lazy_adam_skips_zero_gradient_tensors(self):
        params = {"a": np.ones(3), "b": np.ones(3)}
        opt = LazyAdam(params.keys())
        grads = {"a": np.array([1.0, 0.5, -1.0]), "b": np.zeros(3)}
        opt.step(params, grads, lr=0.1)
        assert not np.array_equal(params["a"], np.ones(3))
        assert np.array_equal(params["b"], np.ones(3))
        assert opt.t["a"] == 1 and opt.t["b"] == 0
        # a later zero gradient leaves the tensor alone despite momentum
        before = params["a"].copy()
        opt.step(params, {"a": np.zeros(3), "b": np.zeros(3)}, lr=0.1)
        assert np.array_equal(params["a"], before)


class TestRunStage:
    def test_identical_seed_identical_parameters(self, tmp_path, tiny_dataset):
        claims, corpus = tiny_dataset
        results = []
        for name in ("a", "b"):
            cfg = parse_stage_config(write_config(
                tmp_path / f"{name}.cfg", tmp_path / f"{name}.ckpt", claims, corpus))
            results.append(run_stage(cfg).model.params)
        assert sorted(results[0]) == sorted(results[1])
        for name in results[0]:
            assert np.array_equal(results[0][name], results[1][name]), name

    def test_resume_bit_compatible_with_uninterrupted(self, tmp_path, tiny_dataset):
        claims, corpus = tiny_dataset
        # uninterrupted: 3 epochs under a fixed schedule length
        cfg_full = parse_stage_config(write_config(
            tmp_path / "full.cfg", tmp_path / "full.ckpt", claims, corpus, epochs=3,
            extra="schedule_total_steps = 24"))
        full = run_stage(cfg_full)
        # interrupted: 2 epochs, then continue 1 more from the checkpoint
        cfg_a = parse_stage_config(write_config(
            tmp_path / "a.cfg", tmp_path / "a.ckpt", claims, corpus, epochs=2,
            extra="schedule_total_steps = 24"))
        run_stage(cfg_a)
        cfg_b = parse_stage_config(write_config(
            tmp_path / "b.cfg", tmp_path / "b.ckpt", claims, corpus, epochs=1,
            extra=f"schedule_total_steps = 24\ncheckpoint_in = {tmp_path / 'a.ckpt'}"))
        resumed = run_stage(cfg_b)
        for name in full.model.params:
            assert np.array_equal(full.model.params[name], resumed.model.params[name]), name
        full_ckpt, full_opt, _ = load_checkpoint(tmp_path / "full.ckpt")
        res_ckpt, res_opt, _ = load_checkpoint(tmp_path / "b.ckpt")
        for name in full_opt["m"]:
            assert np.array_equal(full_opt["m"][name], res_opt["m"][name])
        assert full_opt["t"] == res_opt["t"]

    def test_lambda_gating_parameter_probe(self, tmp_path, tiny_dataset):
        # 50/50 mix of rationale-bearing and unannotated data, batch size 1:
        # the rationale head must move only on rationale-bearing batches
        claims_path, corpus_path = tiny_dataset
        path = write_config(
            tmp_path / "mix.cfg", tmp_path / "mix.ckpt",
            claims_path, corpus_path, epochs=1,
            extra=(f"dataset.2.claims = {FIXTURES / 'claims_weak_titles.jsonl'}\n"
                   f"dataset.2.corpus = {FIXTURES / 'weak_corpus.jsonl'}\n"))
        path.write_text(path.read_text().replace("batch_size = 4", "batch_size = 1"))
        cfg = parse_stage_config(path)

        seen = []
        before = {}

        def probe(info):
            params = info["model"].params
            if not before:
                rationale_names = [n for n in params if n.startswith("rationale_head")]
                # first call observes the post-step state; seed the baseline
                # from a fresh model with the same seed
                from claimcheck.verifier import VerifierModel

                reference = VerifierModel(info["model"].encoder_config,
                                          info["model"].loss_config, seed=cfg.seed)
                for name in rationale_names:
                    before[name] = reference.params[name]
            delta = max(float(np.max(np.abs(params[name] - before[name])))
                        for name in before)
            seen.append((info["has_rationale_supervision"], delta))
            for name in before:
                before[name] = params[name].copy()

        run_stage(cfg, batch_callback=probe)
        absent = [delta for has_sup, delta in seen if not has_sup]
        bearing = [delta for has_sup, delta in seen if has_sup]
        assert absent, "expected unannotated batches in the mix"
        assert bearing, "expected rationale-bearing batches in the mix"
        assert max(absent) == 0.0
        assert max(bearing) > 0.0

    def test_nan_divergence_aborts_with_last_good(self, tmp_path, tiny_dataset):
        claims, corpus = tiny_dataset
        path = write_config(tmp_path / "nan.cfg", tmp_path / "nan.ckpt", claims, corpus,
                            epochs=2)
        text = path.read_text().replace("learning_rate = 0.002",
                                        "learning_rate = 1e200")
        path.write_text(text)
        cfg = parse_stage_config(path)
        result = run_stage(cfg)
        assert result.aborted
        model, _, meta = load_checkpoint(tmp_path / "nan.ckpt")
        assert meta["aborted"] is True
        assert all(np.isfinite(v).all() for v in model.params.values())

    def test_writes_resolved_config_and_log(self, tmp_path, tiny_dataset):
        claims, corpus = tiny_dataset
        cfg = parse_stage_config(write_config(
            tmp_path / "c.cfg", tmp_path / "c.ckpt", claims, corpus, epochs=1))
        run_stage(cfg)
        resolved = (tmp_path / "c.ckpt.resolved.cfg").read_text()
        assert "seed = 3" in resolved
        log = json.loads((tmp_path / "c.ckpt.trainlog.json").read_text())
        assert log["log"][0]["epoch"] == 0

    def test_datasets_seen_audit_for_zero_shot(self, tmp_path, tiny_dataset):
        claims, corpus = tiny_dataset
        stage1 = parse_stage_config(write_config(
            tmp_path / "s1.cfg", tmp_path / "s1.ckpt", claims, corpus, epochs=1))
        run_stage(stage1)
        _, _, meta1 = load_checkpoint(tmp_path / "s1.ckpt")
        seen1 = {record["path"] for record in meta1["datasets_seen"]}
        assert seen1 == {str(claims)}
        # stage 2 extends the audit trail
        stage2_claims = FIXTURES / "synth" / "claims_dev.jsonl"
        stage2 = parse_stage_config(write_config(
            tmp_path / "s2.cfg", tmp_path / "s2.ckpt", stage2_claims,
            FIXTURES / "synth" / "corpus.jsonl", epochs=1,
            extra=f"checkpoint_in = {tmp_path / 's1.ckpt'}"))
        run_stage(stage2)
        _, _, meta2 = load_checkpoint(tmp_path / "s2.ckpt")
        seen2 = {record["path"] for record in meta2["datasets_seen"]}
        assert str(stage2_claims) in seen2 and str(claims) in seen2
        # the stage-1 checkpoint never saw stage-2 data
        assert str(stage2_claims) not in seen1

    def test_dataset_weight_subsampling(self, tmp_path, tiny_dataset):
        claims, corpus = tiny_dataset
        cfg = parse_stage_config(write_config(
            tmp_path / "w.cfg", tmp_path / "w.ckpt", claims, corpus, epochs=1,
            extra="dataset.1.weight = 0.5\n"))
        # 12 claims -> ~30 pairs; weight 0.5 halves the per-epoch count
        seen_pairs = []
        run_stage(cfg, batch_callback=lambda info: seen_pairs.extend(info["pairs"]))
        full_cfg = parse_stage_config(write_config(
            tmp_path / "wf.cfg", tmp_path / "wf.ckpt", claims, corpus, epochs=1))
        full_pairs = []
        run_stage(full_cfg, batch_callback=lambda info: full_pairs.extend(info["pairs"]))
        assert len(seen_pairs) == round(0.5 * len(full_pairs))


class TestFewShot:
    def test_45_from_809_distinct(self):
        claims = [Claim(i, f"claim {i}", {}, ()) for i in range(809)]
        subset = sample_few_shot(claims, FewShotSpec(n_examples=45, seed=4))
        ids = [claim.claim_id for claim in subset]
        assert len(ids) == 45 and len(set(ids)) == 45

    def test_whole_set(self):
        claims = [Claim(i, f"claim {i}", {}, ()) for i in range(10)]
        subset = sample_few_shot(claims, FewShotSpec(n_examples=10, seed=0))
        assert subset == claims

    def test_oversample_rejected(self):
        claims = [Claim(i, "c", {}, ()) for i in range(5)]
        with pytest.raises(DataValidationError):
            sample_few_shot(claims, FewShotSpec(n_examples=6, seed=0))

    def test_expected_overlap_hypergeometric(self):
        # mean overlap of two independent 45-of-809 samples is n^2/N
        claims = [Claim(i, "c", {}, ()) for i in range(809)]
        n, total = 45, 809
        expected = n * n / total
        variance = n * (n / total) * (1 - n / total) * ((total - n) / (total - 1))
        repetitions = 300
        overlaps = []
        for seed in range(repetitions):
            a = {c.claim_id for c in sample_few_shot(claims, FewShotSpec(n, seed=2 * seed))}
            b = {c.claim_id for c in sample_few_shot(claims, FewShotSpec(n, seed=2 * seed + 1))}
            overlaps.append(len(a & b))
        mean = float(np.mean(overlaps))
        tolerance = 3 * np.sqrt(variance / repetitions)
        assert abs(mean - expected) <= tolerance
        assert any(o > 0 for o in overlaps) and any(o < n for o in overlaps)


class TestTuneLambda:
    def _config(self, tmp_path, tiny_dataset, name):
        claims, corpus = tiny_dataset
        return parse_stage_config(write_config(
            tmp_path / f"{name}.cfg", tmp_path / f"{name}.ckpt", claims, corpus, epochs=1,
            extra=(f"dev_claims = {claims}\n"
                   f"dev_corpus = {corpus}\n")))

    def test_single_value_grid(self, tmp_path, tiny_dataset):
        best, report = tune_lambda([7.0], self._config(tmp_path, tiny_dataset, "g1"))
        assert best == 7.0
        assert report["selected_lambda"] == 7.0

    def test_grid_selects_argmax_and_order_invariant(self, tmp_path, tiny_dataset):
        config = self._config(tmp_path, tiny_dataset, "g2")
        best_fwd, report_fwd = tune_lambda([1.0, 15.0], config)
        best_rev, report_rev = tune_lambda([15.0, 1.0], config)
        assert best_fwd == best_rev
        scores = {r["lambda"]: r["dev_label_rationale_f1"] for r in report_fwd["results"]}
        assert len(scores) == 2
        argmax = max(sorted(scores), key=lambda lam: (scores[lam], -lam))
        assert best_fwd == argmax

    def test_requires_dev(self, tmp_path, tiny_dataset):
        claims, corpus = tiny_dataset
        cfg = parse_stage_config(write_config(
            tmp_path / "nodev.cfg", tmp_path / "nodev.ckpt", claims, corpus, epochs=1))
        with pytest.raises(ConfigError, match="dev"):
            tune_lambda([1.0], cfg)
