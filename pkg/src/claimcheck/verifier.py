"""Joint label + rationale prediction over a claim/title/abstract encoding.

The input layout is

    CLS  claim tokens  SEP  title tokens  SEP  s1 tokens  SEP1 ... sn tokens  SEPn

with global attention at CLS, every claim token, and every SEP. A three-way
classification head (two feedforward layers + softmax) over the CLS state
predicts SUPPORTS/REFUTES/NEI; a two-way head over each SEPi state predicts
whether sentence i is a rationale. Training minimizes

    loss = label_cross_entropy + lambda_rationale * mean_i rationale_bce_i

where the rationale term is dropped entirely (exactly zero, no gradient)
for instances whose gold rationales were never annotated.
"""

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass

import numpy as np

from claimcheck.data import Document, Label, Prediction
from claimcheck.encoder import EncoderConfig, encoder_backward, encoder_forward, init_encoder_params
from claimcheck.errors import AssemblyError, CheckpointError, DataValidationError, PredictionError
from claimcheck.text import tokenize

CHECKPOINT_FORMAT_VERSION = 1

CLS_ID = 0
SEP_ID = 1

# index order of the label head's softmax
LABEL_ORDER = (Label.SUPPORTS, Label.REFUTES, Label.NEI)
LABEL_INDEX = {label: i for i, label in enumerate(LABEL_ORDER)}


class HashingTokenizer:
    """Stable word-level tokenizer: md5-hashed ids, no fitted vocabulary.

    Ids 0 and 1 are reserved for CLS and SEP; words map into
    [2, vocab_size). Hashing keeps the mapping identical across runs and
    machines without storing a vocab in checkpoints.
    """

    def __init__(self, vocab_size: int):
        if vocab_size < 3:
            raise DataValidationError(f"vocab_size must be >= 3, got {vocab_size}")
        self.vocab_size = vocab_size
        self._cache: dict[str, int] = {}

    def word_id(self, word: str) -> int:
        wid = self._cache.get(word)
        if wid is None:
            digest = hashlib.md5(word.encode("utf-8")).digest()
            wid = 2 + int.from_bytes(digest[:8], "big") % (self.vocab_size - 2)
            self._cache[word] = wid
        return wid

    def encode(self, text: str) -> list[int]:
        return [self.word_id(word) for word in tokenize(text)]


@dataclass(frozen=True)
class AssembledInput:
    token_ids: np.ndarray                 # int64 (n,)
    cls_position: int
    sentence_marker_positions: tuple[int, ...]
    global_attention_mask: np.ndarray     # bool (n,)
    truncated: bool
    claim_token_count: int

    @property
    def num_sentences(self) -> int:
        return len(self.sentence_marker_positions)


@dataclass(frozen=True)
class VerifierOutput:
    label_probs: np.ndarray       # (3,) over LABEL_ORDER
    rationale_probs: np.ndarray   # (n',)


@dataclass(frozen=True)
class LossConfig:
    """lambda_rationale weights the rationale term; reduction is fixed to
    the per-sentence mean so the weight is comparable across abstract
    lengths."""

    lambda_rationale: float = 15.0

    def __post_init__(self):
        if self.lambda_rationale < 0:
            raise DataValidationError(
                f"lambda_rationale must be >= 0, got {self.lambda_rationale}"
            )


def assemble_input(claim_text: str, document: Document, tokenizer: HashingTokenizer,
                   max_length: int) -> AssembledInput:
    """Tokenize and lay out one claim/document pair.

    When the full sequence would exceed max_length, whole trailing
    sentences are dropped (never partial ones); the claim and title are
    never dropped. A pair whose claim + title alone exceed max_length is
    rejected as degenerate.
    """
    if document.degenerate:
        raise AssemblyError(f"doc {document.doc_id} has an empty abstract")
    claim_ids = tokenizer.encode(claim_text)
    title_ids = tokenizer.encode(document.title)
    m = len(claim_ids)
    prefix = [CLS_ID, *claim_ids, SEP_ID, *title_ids, SEP_ID]
    if len(prefix) > max_length:
        raise AssemblyError(
            f"doc {document.doc_id}: claim + title occupy {len(prefix)} tokens, "
            f"over max_length {max_length}"
        )
    ids = list(prefix)
    markers = []
    truncated = False
    for sentence in document.sentences:
        sentence_ids = tokenizer.encode(sentence)
        if len(ids) + len(sentence_ids) + 1 > max_length:
            truncated = True
            break
        ids.extend(sentence_ids)
        ids.append(SEP_ID)
        markers.append(len(ids) - 1)

    token_ids = np.array(ids, dtype=np.int64)
    global_mask = np.zeros(len(ids), dtype=bool)
    global_mask[0] = True                      # CLS
    global_mask[1:1 + m] = True                # claim tokens
    global_mask[token_ids == SEP_ID] = True    # every separator
    return AssembledInput(
        token_ids=token_ids,
        cls_position=0,
        sentence_marker_positions=tuple(markers),
        global_attention_mask=global_mask,
        truncated=truncated,
        claim_token_count=m,
    )


def init_head_params(hidden_size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    params = {}
    for head, n_out in (("label_head", 3), ("rationale_head", 2)):
        params[f"{head}/w1"] = rng.normal(0.0, 0.02, size=(hidden_size, hidden_size))
        params[f"{head}/b1"] = np.zeros(hidden_size)
        params[f"{head}/w2"] = rng.normal(0.0, 0.02, size=(hidden_size, n_out))
        params[f"{head}/b2"] = np.zeros(n_out)
    return params


def _log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def apply_heads(params: dict, states: np.ndarray, assembled: AssembledInput):
    """Run both prediction heads over encoder states.

    Works with any encoder meeting the one-vector-per-position contract;
    raises if the state matrix does not line up with the input.
    """
    if states.shape[0] != len(assembled.token_ids):
        raise DataValidationError(
            f"encoder returned {states.shape[0]} states for "
            f"{len(assembled.token_ids)} input positions"
        )
    cls_state = states[assembled.cls_position]
    label_hidden = np.tanh(cls_state @ params["label_head/w1"] + params["label_head/b1"])
    label_logits = label_hidden @ params["label_head/w2"] + params["label_head/b2"]

    marker_positions = np.array(assembled.sentence_marker_positions, dtype=np.int64)
    marker_states = states[marker_positions] if len(marker_positions) else np.zeros((0, states.shape[1]))
    rationale_hidden = np.tanh(marker_states @ params["rationale_head/w1"]
                               + params["rationale_head/b1"])
    rationale_logits = rationale_hidden @ params["rationale_head/w2"] + params["rationale_head/b2"]

    cache = {
        "cls_state": cls_state, "label_hidden": label_hidden,
        "marker_states": marker_states, "rationale_hidden": rationale_hidden,
        "marker_positions": marker_positions,
    }
    return label_logits, rationale_logits, cache


def output_from_logits(label_logits: np.ndarray, rationale_logits: np.ndarray) -> VerifierOutput:
    label_probs = np.exp(_log_softmax(label_logits))
    if rationale_logits.shape[0]:
        rationale_probs = np.exp(_log_softmax(rationale_logits))[:, 1]
    else:
        rationale_probs = np.zeros(0)
    return VerifierOutput(label_probs=label_probs, rationale_probs=rationale_probs)


def multitask_loss(output: VerifierOutput, gold_label: Label,
                   gold_rationales: frozenset[int] | set[int] | None,
                   cfg: LossConfig) -> float:
    """Reference loss on probabilities.

    gold_rationales None means the instance carries no rationale
    annotation: the rationale term contributes exactly 0 for any lambda.
    An empty set is different -- it asserts that no sentence is a rationale
    and trains the head toward all-zero targets.
    """
    label_loss = -np.log(output.label_probs[LABEL_INDEX[gold_label]])
    if gold_rationales is None or len(output.rationale_probs) == 0:
        return float(label_loss)
    probs = output.rationale_probs
    targets = np.zeros(len(probs))
    for index in gold_rationales:
        if not 0 <= index < len(probs):
            raise DataValidationError(
                f"gold rationale index {index} out of range for {len(probs)} sentences"
            )
        targets[index] = 1.0
    with np.errstate(divide="ignore"):
        log_hit = np.log(probs)
        log_miss = np.log(1.0 - probs)
    # select per-sentence terms rather than mixing, so a saturated correct
    # probability contributes exactly 0 instead of 0 * -inf
    bce = -np.where(targets > 0, log_hit, log_miss)
    rationale_loss = bce.mean()
    return float(label_loss + cfg.lambda_rationale * rationale_loss)


def decode(output: VerifierOutput, threshold: float, claim_id: int, doc_id: int) -> Prediction:
    """Threshold rationales, argmax the label, and reconcile the two.

    A non-NEI verdict with no rationale above threshold is forced to NEI;
    an NEI verdict always carries an empty rationale set. Label argmax
    ties resolve to the first of (SUPPORTS, REFUTES, NEI).
    """
    if not 0.0 < threshold < 1.0:
        raise DataValidationError(f"threshold must be in (0, 1), got {threshold}")
    rationale_indices = frozenset(
        int(i) for i in np.flatnonzero(output.rationale_probs >= threshold)
    )
    label = LABEL_ORDER[int(np.argmax(output.label_probs))]
    if label is Label.NEI:
        rationale_indices = frozenset()
    elif not rationale_indices:
        label = Label.NEI
    return Prediction(claim_id=claim_id, doc_id=doc_id, label=label,
                      rationale_indices=rationale_indices)


class VerifierModel:
    """Toy encoder + both heads with a flat parameter registry."""

    def __init__(self, encoder_config: EncoderConfig, loss_config: LossConfig,
                 seed: int, params: dict[str, np.ndarray] | None = None):
        self.encoder_config = encoder_config
        self.loss_config = loss_config
        self.seed = seed
        self.tokenizer = HashingTokenizer(encoder_config.vocab_size)
        if params is None:
            rng = np.random.default_rng(seed)
            params = init_encoder_params(encoder_config, rng)
            params.update(init_head_params(encoder_config.hidden_size, rng))
        self.params = params

    def assemble(self, claim_text: str, document: Document) -> AssembledInput:
        return assemble_input(claim_text, document, self.tokenizer,
                              self.encoder_config.max_length)

    def encode(self, assembled: AssembledInput, need_cache: bool = False):
        return encoder_forward(self.params, self.encoder_config, assembled.token_ids,
                               assembled.global_attention_mask, need_cache=need_cache)

    def forward(self, assembled: AssembledInput) -> VerifierOutput:
        states, _ = self.encode(assembled)
        label_logits, rationale_logits, _ = apply_heads(self.params, states, assembled)
        return output_from_logits(label_logits, rationale_logits)

    def attention_matrices(self, assembled: AssembledInput) -> list[np.ndarray]:
        _, cache = self.encode(assembled)
        return cache["attention"]

    def loss_and_grads(self, assembled: AssembledInput, gold_label: Label,
                       gold_rationales: frozenset[int] | None):
        """Multitask loss and its gradient w.r.t. every parameter.

        Computed from logits for numerical stability; identical in value
        to multitask_loss on the corresponding VerifierOutput. When
        gold_rationales is None the rationale head receives exactly zero
        gradient.
        """
        states, enc_cache = self.encode(assembled, need_cache=True)
        label_logits, rationale_logits, head_cache = apply_heads(self.params, states, assembled)

        grads = {name: np.zeros_like(value) for name, value in self.params.items()}
        d_states = np.zeros_like(states)

        gold_index = LABEL_INDEX[gold_label]
        label_log_probs = _log_softmax(label_logits)
        loss = -label_log_probs[gold_index]
        d_label_logits = np.exp(label_log_probs)
        d_label_logits[gold_index] -= 1.0
        d_label_hidden = d_label_logits @ self.params["label_head/w2"].T
        grads["label_head/w2"] += np.outer(head_cache["label_hidden"], d_label_logits)
        grads["label_head/b2"] += d_label_logits
        d_pre = d_label_hidden * (1.0 - head_cache["label_hidden"] ** 2)
        grads["label_head/w1"] += np.outer(head_cache["cls_state"], d_pre)
        grads["label_head/b1"] += d_pre
        d_states[assembled.cls_position] += d_pre @ self.params["label_head/w1"].T

        n_sentences = assembled.num_sentences
        if gold_rationales is not None and n_sentences > 0:
            targets = np.zeros(n_sentences, dtype=np.int64)
            for index in gold_rationales:
                if not 0 <= index < n_sentences:
                    raise DataValidationError(
                        f"gold rationale index {index} out of range for {n_sentences} sentences"
                    )
                targets[index] = 1
            rationale_log_probs = _log_softmax(rationale_logits)
            per_sentence = -rationale_log_probs[np.arange(n_sentences), targets]
            loss = loss + self.loss_config.lambda_rationale * per_sentence.mean()

            scale = self.loss_config.lambda_rationale / n_sentences
            d_rationale_logits = np.exp(rationale_log_probs)
            d_rationale_logits[np.arange(n_sentences), targets] -= 1.0
            d_rationale_logits *= scale
            hidden = head_cache["rationale_hidden"]
            d_hidden = d_rationale_logits @ self.params["rationale_head/w2"].T
            grads["rationale_head/w2"] += hidden.T @ d_rationale_logits
            grads["rationale_head/b2"] += d_rationale_logits.sum(axis=0)
            d_pre = d_hidden * (1.0 - hidden ** 2)
            grads["rationale_head/w1"] += head_cache["marker_states"].T @ d_pre
            grads["rationale_head/b1"] += d_pre.sum(axis=0)
            np.add.at(d_states, head_cache["marker_positions"],
                      d_pre @ self.params["rationale_head/w1"].T)

        enc_grads = encoder_backward(self.params, self.encoder_config, enc_cache, d_states)
        for name, grad in enc_grads.items():
            grads[name] += grad
        return float(loss), grads

    def predict(self, claim_text: str, document: Document, claim_id: int,
                threshold: float = 0.5) -> Prediction:
        assembled = self.assemble(claim_text, document)
        output = self.forward(assembled)
        return decode(output, threshold, claim_id, document.doc_id)


def predict_batch(model: VerifierModel, claim, documents, threshold: float = 0.5
                  ) -> list[Prediction]:
    """Predict for every candidate document, in ascending doc_id order.

    Per-document failures are collected and raised together with their
    identifiers rather than aborting at the first one.
    """
    predictions = []
    failures = []
    for document in sorted(documents, key=lambda d: d.doc_id):
        try:
            predictions.append(model.predict(claim.text, document, claim.claim_id, threshold))
        except Exception as exc:
            failures.append((document.doc_id, str(exc)))
    if failures:
        raise PredictionError(claim.claim_id, failures)
    return predictions


class VerifierRelevanceScorer:
    """Toy cross-scorer for reranking: relevance = 1 - P(NEI).

    Reuses the verifier encoder and label head on a claim/text pair; the
    document text is treated as a single-sentence abstract with an empty
    title.
    """

    def __init__(self, model: VerifierModel, doc_id: int = -1):
        self.model = model
        self.doc_id = doc_id

    def __call__(self, claim_text: str, doc_text: str) -> float:
        document = Document(doc_id=self.doc_id, title="", sentences=(doc_text,))
        assembled = self.model.assemble(claim_text, document)
        output = self.model.forward(assembled)
        return float(1.0 - output.label_probs[LABEL_INDEX[Label.NEI]])


def _meta_to_array(meta: dict) -> np.ndarray:
    return np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)


def save_checkpoint(path, model: VerifierModel, optimizer_state: dict | None = None,
                    extra_meta: dict | None = None) -> None:
    """Write a single-file checkpoint with byte-deterministic content.

    Same model + optimizer state always produce identical bytes (fixed zip
    timestamps, sorted entries), which keeps rerun-from-manifest outputs
    comparable. Readable with np.load as a regular .npz.
    """
    meta = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "encoder": model.encoder_config.to_dict(),
        "loss": {"lambda_rationale": model.loss_config.lambda_rationale},
        "seed": model.seed,
    }
    if extra_meta:
        meta.update(extra_meta)
    arrays = {"__meta__": _meta_to_array(meta)}
    for name, value in model.params.items():
        arrays[f"param/{name}"] = value
    if optimizer_state is not None:
        for name, value in optimizer_state["m"].items():
            arrays[f"opt/m/{name}"] = value
        for name, value in optimizer_state["v"].items():
            arrays[f"opt/v/{name}"] = value
        for name, value in optimizer_state["t"].items():
            arrays[f"opt/t/{name}"] = np.array([value], dtype=np.int64)
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as archive:
        for name in sorted(arrays):
            buffer = io.BytesIO()
            np.lib.format.write_array(buffer, np.ascontiguousarray(arrays[name]),
                                      allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            archive.writestr(info, buffer.getvalue())


def load_checkpoint(path):
    """Read a checkpoint; returns (model, optimizer_state | None, meta)."""
    try:
        archive = np.load(path)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    with archive:
        if "__meta__.npy" in getattr(archive, "files", []) or "__meta__" in archive:
            meta = json.loads(bytes(archive["__meta__"]).decode("utf-8"))
        else:
            raise CheckpointError(f"checkpoint {path} lacks a metadata header")
        version = meta.get("format_version")
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version!r}")
        params = {}
        opt_m, opt_v, opt_t = {}, {}, {}
        for key in archive.files:
            name = key[:-4] if key.endswith(".npy") else key
            if name.startswith("param/"):
                params[name[len("param/"):]] = archive[key]
            elif name.startswith("opt/m/"):
                opt_m[name[len("opt/m/"):]] = archive[key]
            elif name.startswith("opt/v/"):
                opt_v[name[len("opt/v/"):]] = archive[key]
            elif name.startswith("opt/t/"):
                opt_t[name[len("opt/t/"):]] = int(archive[key][0])
    encoder_config = EncoderConfig(**meta["encoder"])
    loss_config = LossConfig(lambda_rationale=meta["loss"]["lambda_rationale"])
    model = VerifierModel(encoder_config, loss_config, seed=meta["seed"], params=params)
    optimizer_state = {"m": opt_m, "v": opt_v, "t": opt_t} if opt_m else None
    return model, optimizer_state, meta
