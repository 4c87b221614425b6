"""Two-stage finetuning orchestration, few-shot sampling, and lambda tuning.

A stage trains on one or more datasets (claims + corpus + mixing weight,
optionally with mined hard negatives), running minibatch gradient descent
on the multitask loss with an adaptive-moment optimizer, 10% linear warmup
and linear decay. Instances whose gold rationales were never annotated
contribute label loss only; the optimizer skips parameter tensors whose
batch gradient is exactly zero, so such batches leave the rationale head
untouched (moments included).

Everything is deterministic given the stage seed: dataset order, per-epoch
shuffles, weighted subsampling, and initialization. Checkpoints carry the
optimizer state, so save -> load -> continue is bit-compatible with an
uninterrupted run (give both runs the same schedule_total_steps).
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from claimcheck.data import (Claim, Corpus, Label, load_claims, load_corpus)
from claimcheck.encoder import EncoderConfig
from claimcheck.errors import ConfigError, DataValidationError
from claimcheck.evaluation import MetricVariant, evaluate_all
from claimcheck.manifest import file_digest
from claimcheck.verifier import (AssembledInput, LossConfig, VerifierModel, load_checkpoint,
                                 predict_batch, save_checkpoint)


@dataclass(frozen=True)
class DatasetSpec:
    claims_path: str
    corpus_path: str
    weight: float = 1.0
    negatives_path: str | None = None

    def __post_init__(self):
        if self.weight <= 0:
            raise ConfigError(f"dataset weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class StageConfig:
    datasets: tuple[DatasetSpec, ...]
    epochs: int
    seed: int
    checkpoint_out: str
    batch_size: int = 8
    learning_rate: float = 1e-4
    lambda_rationale: float = 15.0
    max_length: int = 256
    threshold: float = 0.5
    checkpoint_in: str | None = None
    dev_claims: str | None = None
    dev_corpus: str | None = None
    early_stop_patience: int | None = None
    schedule_total_steps: int | None = None
    stage: str = ""
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def to_flat_dict(self) -> dict[str, str]:
        flat = {
            "stage": self.stage,
            "epochs": str(self.epochs),
            "seed": str(self.seed),
            "batch_size": str(self.batch_size),
            "learning_rate": repr(self.learning_rate),
            "lambda_rationale": repr(self.lambda_rationale),
            "max_length": str(self.max_length),
            "threshold": repr(self.threshold),
            "checkpoint_out": self.checkpoint_out,
        }
        if self.checkpoint_in:
            flat["checkpoint_in"] = self.checkpoint_in
        if self.dev_claims:
            flat["dev_claims"] = self.dev_claims
            flat["dev_corpus"] = self.dev_corpus or ""
        if self.early_stop_patience is not None:
            flat["early_stop_patience"] = str(self.early_stop_patience)
        if self.schedule_total_steps is not None:
            flat["schedule_total_steps"] = str(self.schedule_total_steps)
        for key, value in self.encoder.to_dict().items():
            flat[f"encoder.{key}"] = str(value)
        for i, dataset in enumerate(self.datasets, start=1):
            flat[f"dataset.{i}.claims"] = dataset.claims_path
            flat[f"dataset.{i}.corpus"] = dataset.corpus_path
            flat[f"dataset.{i}.weight"] = repr(dataset.weight)
            if dataset.negatives_path:
                flat[f"dataset.{i}.negatives"] = dataset.negatives_path
        return flat


def parse_stage_config(path) -> StageConfig:
    """Read a flat `key = value` config file."""
    raw: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{line_no}: expected `key = value`, got {stripped!r}")
            key, _, value = stripped.partition("=")
            raw[key.strip()] = value.strip()
    return stage_config_from_dict(raw, source=str(path))


_MISSING = object()


def stage_config_from_dict(raw: dict[str, str], source: str = "<dict>") -> StageConfig:
    raw = dict(raw)

    def pop(key, convert, default=_MISSING):
        if key in raw:
            value = raw.pop(key)
            try:
                return convert(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{source}: bad value for {key}: {exc}") from None
        if default is _MISSING:
            raise ConfigError(f"{source}: missing required key {key!r}")
        return default

    datasets = []
    index = 1
    while f"dataset.{index}.claims" in raw:
        datasets.append(
            DatasetSpec(
                claims_path=raw.pop(f"dataset.{index}.claims"),
                corpus_path=pop(f"dataset.{index}.corpus", str),
                weight=pop(f"dataset.{index}.weight", float, 1.0),
                negatives_path=raw.pop(f"dataset.{index}.negatives", None),
            )
        )
        index += 1
    if not datasets:
        raise ConfigError(f"{source}: no datasets configured (dataset.1.claims = ...)")

    max_length = pop("max_length", int, 256)
    encoder = EncoderConfig(
        vocab_size=pop("encoder.vocab_size", int, 4096),
        max_length=max_length,
        window=pop("encoder.window", int, 16),
        hidden_size=pop("encoder.hidden_size", int, 64),
        num_layers=pop("encoder.num_layers", int, 2),
        ffn_size=pop("encoder.ffn_size", int, 128),
    )

    config = StageConfig(
        datasets=tuple(datasets),
        epochs=pop("epochs", int),
        seed=pop("seed", int),
        checkpoint_out=pop("checkpoint_out", str),
        batch_size=pop("batch_size", int, 8),
        learning_rate=pop("learning_rate", float, 1e-4),
        lambda_rationale=pop("lambda_rationale", float, 15.0),
        max_length=max_length,
        threshold=pop("threshold", float, 0.5),
        checkpoint_in=raw.pop("checkpoint_in", None),
        dev_claims=raw.pop("dev_claims", None),
        dev_corpus=raw.pop("dev_corpus", None),
        early_stop_patience=pop("early_stop_patience", int, None),
        schedule_total_steps=pop("schedule_total_steps", int, None),
        stage=raw.pop("stage", ""),
        encoder=encoder,
    )
    if raw:
        raise ConfigError(f"{source}: unknown config keys {sorted(raw)}")
    if (config.dev_claims is None) != (config.dev_corpus is None):
        raise ConfigError(f"{source}: dev_claims and dev_corpus must be given together")
    return config


@dataclass(frozen=True)
class FewShotSpec:
    n_examples: int = 45
    seed: int = 0


def sample_few_shot(claims: list[Claim], spec: FewShotSpec) -> list[Claim]:
    """Uniform sample without replacement, deterministic under the seed.

    The subset preserves the original claim order.
    """
    if spec.n_examples > len(claims):
        raise DataValidationError(
            f"cannot sample {spec.n_examples} from {len(claims)} claims"
        )
    rng = np.random.default_rng(spec.seed)
    chosen = rng.choice(len(claims), size=spec.n_examples, replace=False)
    return [claims[i] for i in sorted(chosen)]


@dataclass
class TrainInstance:
    claim_id: int
    doc_id: int
    assembled: AssembledInput
    gold_label: Label
    gold_rationales: frozenset[int] | None

    @property
    def has_rationale_supervision(self) -> bool:
        return self.gold_rationales is not None


def build_instances(claims: list[Claim], corpus: Corpus, model: VerifierModel,
                    negatives: dict[int, list[int]] | None = None) -> list[TrainInstance]:
    """Turn claims into per-pair training instances.

    Evidence docs carry their label and the union of rationale sentences
    (or no rationale supervision when unannotated). Cited docs without
    evidence and mined negatives become NEI pairs with all-zero rationale
    targets. Rationale indices beyond the retained sentence count (dropped
    by truncation) cannot be supervised and are omitted.
    """
    instances = []
    for claim in claims:
        pair_docs: list[tuple[int, Label, frozenset[int] | None]] = []
        for doc_id in sorted(claim.evidence):
            doc_evidence = claim.evidence[doc_id]
            gold = doc_evidence.sentence_union() if doc_evidence.annotated else None
            pair_docs.append((doc_id, doc_evidence.label, gold))
        nei_docs = {doc_id for doc_id in claim.cited_doc_ids if doc_id not in claim.evidence}
        if negatives:
            nei_docs.update(d for d in negatives.get(claim.claim_id, ())
                            if d not in claim.evidence)
        pair_docs.extend((doc_id, Label.NEI, frozenset()) for doc_id in sorted(nei_docs))
        for doc_id, label, gold in pair_docs:
            assembled = model.assemble(claim.text, corpus[doc_id])
            if gold is not None:
                gold = frozenset(i for i in gold if i < assembled.num_sentences)
            instances.append(
                TrainInstance(
                    claim_id=claim.claim_id,
                    doc_id=doc_id,
                    assembled=assembled,
                    gold_label=label,
                    gold_rationales=gold,
                )
            )
    return instances


class LazyAdam:
    """Adaptive-moment optimizer that skips zero-gradient tensors.

    A tensor whose batch gradient is exactly zero keeps its parameters,
    moments, and per-tensor step count unchanged. This makes "no rationale
    supervision in this batch => rationale head untouched" hold exactly,
    which plain momentum-carrying updates would violate.
    """

    def __init__(self, param_names, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {name: None for name in param_names}
        self.v = {name: None for name in param_names}
        self.t = {name: 0 for name in param_names}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             lr: float) -> None:
        for name in sorted(params):
            grad = grads[name]
            if not np.any(grad):
                continue
            if self.m[name] is None:
                self.m[name] = np.zeros_like(params[name])
                self.v[name] = np.zeros_like(params[name])
            self.t[name] += 1
            t = self.t[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            params[name] -= lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state(self) -> dict:
        return {
            "m": {name: value for name, value in self.m.items() if value is not None},
            "v": {name: value for name, value in self.v.items() if value is not None},
            "t": {name: count for name, count in self.t.items() if count},
        }

    def load_state(self, state: dict) -> None:
        for name, value in state["m"].items():
            self.m[name] = np.array(value, dtype=np.float64)
        for name, value in state["v"].items():
            self.v[name] = np.array(value, dtype=np.float64)
        for name, count in state["t"].items():
            self.t[name] = int(count)


def warmup_linear_lr(base_lr: float, step: int, total_steps: int) -> float:
    """Linear warmup over the first 10% of steps, then linear decay."""
    warmup = max(1, math.ceil(0.1 * total_steps))
    if step < warmup:
        return base_lr * (step + 1) / warmup
    if total_steps <= warmup:
        return base_lr
    return base_lr * (total_steps - step) / (total_steps - warmup)


def _epoch_instance_indices(counts_by_dataset, datasets, seed, epoch):
    """Deterministic per-epoch instance selection honoring dataset weights."""
    selected = []
    offset = 0
    for ds_index, (dataset, count) in enumerate(zip(datasets, counts_by_dataset)):
        indices = np.arange(count) + offset
        weight = dataset.weight
        if weight == 1.0:
            selected.append(indices)
        else:
            rng = np.random.default_rng([seed, epoch, ds_index])
            full_copies = int(weight)
            for _ in range(full_copies):
                selected.append(indices)
            remainder = round((weight - full_copies) * count)
            if remainder:
                extra = rng.choice(count, size=remainder, replace=False)
                selected.append(np.sort(extra) + offset)
        offset += count
    combined = np.concatenate(selected) if selected else np.zeros(0, dtype=np.int64)
    shuffle_rng = np.random.default_rng([seed, epoch])
    return combined[shuffle_rng.permutation(len(combined))]


@dataclass
class TrainResult:
    model: VerifierModel
    checkpoint_path: str
    log: list[dict]
    aborted: bool = False


def _dev_metrics(model: VerifierModel, dev_claims, dev_corpus, threshold: float) -> dict:
    predictions = []
    for claim in dev_claims:
        docs = [dev_corpus[d] for d in claim.cited_doc_ids if d in dev_corpus]
        predictions.extend(predict_batch(model, claim, docs, threshold))
    results, _ = evaluate_all(predictions, dev_claims)
    return {variant.value: round(result.f1, 6) for variant, result in results.items()}


def run_stage(config: StageConfig, batch_callback=None) -> TrainResult:
    """Run one finetuning stage and write checkpoint, log, and resolved config.

    batch_callback(info) fires after every optimizer step with the batch's
    epoch, loss, instance pairs, and rationale-supervision flag; tests use
    it to probe per-batch parameter deltas.

    Non-finite loss aborts the stage and writes the last epoch-end state.
    """
    if config.checkpoint_in:
        model, opt_state, prior_meta = load_checkpoint(config.checkpoint_in)
        model.loss_config = LossConfig(lambda_rationale=config.lambda_rationale)
        start_epoch = int(prior_meta.get("epoch_completed", 0))
        global_step = int(prior_meta.get("global_step", 0))
        datasets_seen = list(prior_meta.get("datasets_seen", []))
    else:
        model = VerifierModel(config.encoder, LossConfig(config.lambda_rationale),
                              seed=config.seed)
        opt_state = None
        start_epoch = 0
        global_step = 0
        datasets_seen = []

    optimizer = LazyAdam(model.params.keys())
    if opt_state:
        optimizer.load_state(opt_state)

    instances: list[TrainInstance] = []
    counts = []
    for dataset in config.datasets:
        corpus = load_corpus(dataset.corpus_path)
        claims = load_claims(dataset.claims_path, corpus)
        negatives = None
        if dataset.negatives_path:
            from claimcheck.weak import load_mined_negatives

            negatives = load_mined_negatives(dataset.negatives_path)
        dataset_instances = build_instances(claims, corpus, model, negatives)
        counts.append(len(dataset_instances))
        instances.extend(dataset_instances)
        record = {"path": dataset.claims_path, "sha256": file_digest(dataset.claims_path)}
        if record not in datasets_seen:
            datasets_seen.append(record)
    if not instances:
        raise ConfigError("stage has no training instances")

    dev_claims = dev_corpus = None
    if config.dev_claims:
        dev_corpus = load_corpus(config.dev_corpus)
        dev_claims = load_claims(config.dev_claims, dev_corpus)

    # per-epoch instance counts are weight-determined, identical every epoch
    epoch_size = 0
    for dataset, count in zip(config.datasets, counts):
        if dataset.weight == 1.0:
            epoch_size += count
        else:
            full_copies = int(dataset.weight)
            epoch_size += full_copies * count + round((dataset.weight - full_copies) * count)
    steps_per_epoch = math.ceil(epoch_size / config.batch_size)
    total_steps = config.schedule_total_steps or (config.epochs * steps_per_epoch)

    def snapshot():
        return ({name: value.copy() for name, value in model.params.items()},
                dict(optimizer.t),
                {name: None if value is None else value.copy()
                 for name, value in optimizer.m.items()},
                {name: None if value is None else value.copy()
                 for name, value in optimizer.v.items()},
                global_step)

    last_good = snapshot()
    last_good_epoch = start_epoch
    epochs_completed = start_epoch
    log: list[dict] = []
    aborted = False
    best_dev = -1.0
    epochs_since_best = 0

    for epoch in range(start_epoch, start_epoch + config.epochs):
        order = _epoch_instance_indices(counts, config.datasets, config.seed, epoch)
        epoch_losses = []
        for batch_start in range(0, len(order), config.batch_size):
            batch = [instances[i] for i in order[batch_start:batch_start + config.batch_size]]
            batch_grads = {name: np.zeros_like(value) for name, value in model.params.items()}
            batch_loss = 0.0
            for instance in batch:
                loss, grads = model.loss_and_grads(
                    instance.assembled, instance.gold_label, instance.gold_rationales
                )
                batch_loss += loss
                for name, grad in grads.items():
                    batch_grads[name] += grad
            scale = 1.0 / len(batch)
            batch_loss *= scale
            for name in batch_grads:
                batch_grads[name] *= scale
            if not np.isfinite(batch_loss):
                aborted = True
                break
            lr = warmup_linear_lr(config.learning_rate, global_step, total_steps)
            optimizer.step(model.params, batch_grads, lr)
            global_step += 1
            epoch_losses.append(batch_loss)
            if batch_callback is not None:
                batch_callback({
                    "epoch": epoch,
                    "step": global_step,
                    "loss": batch_loss,
                    "pairs": [(inst.claim_id, inst.doc_id) for inst in batch],
                    "has_rationale_supervision": any(
                        inst.has_rationale_supervision for inst in batch
                    ),
                    "model": model,
                })
        if aborted:
            params, t_state, m_state, v_state, global_step = last_good
            model.params = params
            optimizer.t = t_state
            optimizer.m = m_state
            optimizer.v = v_state
            log.append({"epoch": epoch, "status": "aborted_nan",
                        "restored_epoch": last_good_epoch})
            break

        entry = {"epoch": epoch, "train_loss": round(float(np.mean(epoch_losses)), 8)}
        if dev_claims is not None:
            metrics = _dev_metrics(model, dev_claims, dev_corpus, config.threshold)
            entry["dev"] = metrics
            score = metrics[MetricVariant.ABSTRACT_LABEL_RATIONALE.value]
            if score > best_dev:
                best_dev = score
                epochs_since_best = 0
            else:
                epochs_since_best += 1
        log.append(entry)
        last_good = snapshot()
        last_good_epoch = epoch + 1
        epochs_completed = epoch + 1
        if (config.early_stop_patience is not None and dev_claims is not None
                and epochs_since_best >= config.early_stop_patience):
            log.append({"epoch": epoch, "status": "early_stop", "best_dev_f1": best_dev})
            break

    meta = {
        "epoch_completed": last_good_epoch if aborted else epochs_completed,
        "global_step": global_step,
        "datasets_seen": datasets_seen,
        "config": config.to_flat_dict(),
        "aborted": aborted,
    }
    save_checkpoint(config.checkpoint_out, model, optimizer.state(), extra_meta=meta)
    with open(config.checkpoint_out + ".trainlog.json", "w", encoding="utf-8") as handle:
        json.dump({"log": log, "aborted": aborted}, handle, indent=2, sort_keys=True)
        handle.write("\n")
    resolved_path = config.checkpoint_out + ".resolved.cfg"
    with open(resolved_path, "w", encoding="utf-8") as handle:
        for key, value in sorted(config.to_flat_dict().items()):
            handle.write(f"{key} = {value}\n")
    return TrainResult(model=model, checkpoint_path=config.checkpoint_out, log=log,
                       aborted=aborted)


def tune_lambda(grid: list[float], config: StageConfig) -> tuple[float, dict]:
    """Train one model per lambda; select argmax dev label+rationale F1.

    Ties resolve to the smaller lambda; the report carries every candidate
    score so the selection is auditable.
    """
    if not grid:
        raise ConfigError("lambda grid must be non-empty")
    if config.dev_claims is None:
        raise ConfigError("lambda tuning needs a dev set")
    results = []
    for lam in grid:
        variant = replace(config,
                          lambda_rationale=float(lam),
                          checkpoint_out=f"{config.checkpoint_out}.lambda{lam:g}")
        outcome = run_stage(variant)
        dev_entries = [entry["dev"] for entry in outcome.log if "dev" in entry]
        final_f1 = dev_entries[-1][MetricVariant.ABSTRACT_LABEL_RATIONALE.value]
        results.append({"lambda": float(lam), "dev_label_rationale_f1": final_f1,
                        "checkpoint": variant.checkpoint_out})
    best = max(results, key=lambda record: (record["dev_label_rationale_f1"], -record["lambda"]))
    report = {"grid": [float(lam) for lam in grid], "results": results,
              "selected_lambda": best["lambda"]}
    return best["lambda"], report
