"""Corpus, claim, and prediction schemas plus JSONL readers/writers.

Wire formats follow the public SciFact conventions so third-party files
load and score without conversion:

  corpus.jsonl       {"doc_id": int, "title": str, "abstract": [str, ...]}
  claims.jsonl       {"id": int, "claim": str,
                      "evidence": {"<doc_id>": [{"sentences": [int, ...],
                                                 "label": "SUPPORT"|"CONTRADICT"}]},
                      "cited_doc_ids": [int, ...]}
  predictions.jsonl  {"id": int,
                      "evidence": {"<doc_id>": {"label": ..., "sentences": [...]}}}

Unknown fields are ignored on read. An evidence entry with an empty
"sentences" list means the label is known but no rationales were annotated
(weakly supervised data); such an entry must be the only one for its doc.
A (claim, doc) pair is NEI exactly when the doc is absent from the claim's
evidence mapping.

All types are immutable after construction and safe to share across
threads. Loaders are single-threaded per file.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping

from claimcheck.errors import DataValidationError, ParseError


class Label(Enum):
    SUPPORTS = "SUPPORTS"
    REFUTES = "REFUTES"
    NEI = "NEI"

    @classmethod
    def from_wire(cls, value: str) -> "Label":
        try:
            return _WIRE_TO_LABEL[value]
        except KeyError:
            raise DataValidationError(f"unknown evidence label {value!r}") from None

    def to_wire(self) -> str:
        if self is Label.NEI:
            raise DataValidationError("NEI is represented by absence, not serialized")
        return "SUPPORT" if self is Label.SUPPORTS else "CONTRADICT"


_WIRE_TO_LABEL = {"SUPPORT": Label.SUPPORTS, "CONTRADICT": Label.REFUTES}


class Provenance(Enum):
    HUMAN = "HUMAN"
    WEAK_ICO = "WEAK_ICO"
    WEAK_TITLE = "WEAK_TITLE"


@dataclass(frozen=True)
class Document:
    doc_id: int
    title: str
    sentences: tuple[str, ...]

    @property
    def degenerate(self) -> bool:
        """True for stub documents with no abstract sentences."""
        return len(self.sentences) == 0

    def text(self) -> str:
        """Title and abstract as one string (the indexed/scored text)."""
        return " ".join((self.title, *self.sentences))


class Corpus:
    """Immutable doc_id -> Document mapping."""

    def __init__(self, documents: Iterable[Document]):
        docs = {}
        for doc in documents:
            if doc.doc_id in docs:
                raise DataValidationError(f"duplicate doc_id {doc.doc_id}")
            docs[doc.doc_id] = doc
        self._docs = docs

    def __len__(self) -> int:
        return len(self._docs)

    def __iter__(self) -> Iterator[Document]:
        return iter(self._docs.values())

    def __contains__(self, doc_id: int) -> bool:
        return doc_id in self._docs

    def __getitem__(self, doc_id: int) -> Document:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise KeyError(f"doc_id {doc_id} not in corpus") from None

    def get(self, doc_id: int, default=None):
        return self._docs.get(doc_id, default)

    @property
    def doc_ids(self) -> list[int]:
        return sorted(self._docs)


@dataclass(frozen=True)
class DocEvidence:
    """Gold evidence of one document for one claim.

    rationales is a tuple of sentence-index tuples, one per annotated
    rationale. An empty tuple means the label is known but rationales were
    never annotated (weak supervision); the rationale loss is skipped for
    such pairs.
    """

    label: Label
    rationales: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.label is Label.NEI:
            raise DataValidationError("NEI pairs are represented by absence from evidence")
        for rationale in self.rationales:
            if len(rationale) == 0:
                raise DataValidationError("rationale sentence set must be non-empty")
            if list(rationale) != sorted(set(rationale)):
                raise DataValidationError("rationale indices must be strictly increasing")

    @property
    def annotated(self) -> bool:
        return len(self.rationales) > 0

    def sentence_union(self) -> frozenset[int]:
        """All rationale sentences for this pair, shared sentences counted once."""
        return frozenset(i for rationale in self.rationales for i in rationale)


@dataclass(frozen=True)
class Claim:
    claim_id: int
    text: str
    evidence: Mapping[int, DocEvidence] = field(default_factory=dict)
    cited_doc_ids: tuple[int, ...] = ()
    provenance: Provenance = Provenance.HUMAN
    generation_trace: Mapping[str, object] | None = None


@dataclass(frozen=True)
class Prediction:
    """Model verdict for one (claim, document) pair.

    A well-formed prediction has rationales exactly when the label is not
    NEI. The constructor stays permissive so third-party files can be loaded
    and then flagged by validate_predictions; decode() guarantees the
    invariant for model outputs.
    """

    claim_id: int
    doc_id: int
    label: Label
    rationale_indices: frozenset[int] = frozenset()


@dataclass(frozen=True)
class Violation:
    """One prediction-validation failure; claim_id/doc_id may be None."""

    claim_id: int | None
    doc_id: int | None
    message: str


def _read_jsonl(path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"malformed JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise ParseError(path, line_no, "expected a JSON object")
            yield line_no, obj


def _require(obj: dict, key: str, path, line_no):
    if key not in obj:
        raise ParseError(path, line_no, f"missing field {key!r}")
    return obj[key]


def load_corpus(path) -> Corpus:
    """Read corpus.jsonl; duplicate doc_id is an error."""
    documents = []
    seen = set()
    for line_no, obj in _read_jsonl(path):
        doc_id = _require(obj, "doc_id", path, line_no)
        title = _require(obj, "title", path, line_no)
        abstract = _require(obj, "abstract", path, line_no)
        if not isinstance(doc_id, int):
            raise ParseError(path, line_no, "doc_id must be an integer")
        if not isinstance(abstract, list) or not all(isinstance(s, str) for s in abstract):
            raise ParseError(path, line_no, "abstract must be a list of strings")
        if doc_id in seen:
            raise DataValidationError(f"{path}:{line_no}: duplicate doc_id {doc_id}")
        seen.add(doc_id)
        documents.append(Document(doc_id=doc_id, title=str(title), sentences=tuple(abstract)))
    return Corpus(documents)


def save_corpus(corpus: Corpus, path) -> None:
    """Write corpus.jsonl in canonical form (ascending doc_id, fixed key order)."""
    with open(path, "w", encoding="utf-8") as handle:
        for doc_id in corpus.doc_ids:
            doc = corpus[doc_id]
            record = {"doc_id": doc.doc_id, "title": doc.title, "abstract": list(doc.sentences)}
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def _parse_evidence(raw: dict, claim_id: int, path, line_no) -> dict[int, DocEvidence]:
    evidence = {}
    for doc_key, entries in raw.items():
        try:
            doc_id = int(doc_key)
        except (TypeError, ValueError):
            raise ParseError(path, line_no, f"evidence doc_id {doc_key!r} is not an integer")
        if not isinstance(entries, list) or not entries:
            raise ParseError(path, line_no, f"evidence for doc {doc_id} must be a non-empty list")
        labels = set()
        rationales = []
        for entry in entries:
            label = Label.from_wire(_require(entry, "label", path, line_no))
            sentences = _require(entry, "sentences", path, line_no)
            labels.add(label)
            if sentences:
                rationales.append(tuple(sorted(set(int(i) for i in sentences))))
            elif len(entries) > 1:
                raise DataValidationError(
                    f"claim {claim_id}, doc {doc_id}: empty-sentence evidence entry "
                    "mixed with annotated rationales"
                )
        if len(labels) != 1:
            raise DataValidationError(
                f"claim {claim_id}, doc {doc_id}: rationale labels are not homogeneous"
            )
        evidence[doc_id] = DocEvidence(label=labels.pop(), rationales=tuple(rationales))
    return evidence


def check_claim_against_corpus(claim: Claim, corpus: Corpus) -> None:
    for doc_id, doc_evidence in claim.evidence.items():
        if doc_id not in corpus:
            raise DataValidationError(
                f"claim {claim.claim_id}: evidence doc {doc_id} not in corpus"
            )
        n_sentences = len(corpus[doc_id].sentences)
        for rationale in doc_evidence.rationales:
            for index in rationale:
                if not 0 <= index < n_sentences:
                    raise DataValidationError(
                        f"claim {claim.claim_id}: sentence index {index} out of range "
                        f"for doc {doc_id} ({n_sentences} sentences)"
                    )


def load_claims(path, corpus: Corpus | None) -> list[Claim]:
    """Read claims.jsonl.

    When a corpus is given, evidence doc ids and sentence indices are
    validated against it; pass corpus=None to skip (e.g. when only claim
    text is needed for retrieval).
    """
    claims = []
    seen = set()
    for line_no, obj in _read_jsonl(path):
        claim_id = _require(obj, "id", path, line_no)
        text = _require(obj, "claim", path, line_no)
        if claim_id in seen:
            raise DataValidationError(f"{path}:{line_no}: duplicate claim id {claim_id}")
        seen.add(claim_id)
        evidence = _parse_evidence(obj.get("evidence", {}), claim_id, path, line_no)
        cited = tuple(int(d) for d in obj.get("cited_doc_ids", []))
        provenance = Provenance(obj.get("provenance", "HUMAN"))
        trace = obj.get("generation_trace")
        claim = Claim(
            claim_id=int(claim_id),
            text=str(text),
            evidence=evidence,
            cited_doc_ids=cited,
            provenance=provenance,
            generation_trace=trace,
        )
        if corpus is not None:
            check_claim_against_corpus(claim, corpus)
        claims.append(claim)
    return claims


def claim_to_record(claim: Claim) -> dict:
    evidence = {}
    for doc_id in sorted(claim.evidence):
        doc_evidence = claim.evidence[doc_id]
        label = doc_evidence.label.to_wire()
        if doc_evidence.annotated:
            entries = [
                {"sentences": list(rationale), "label": label}
                for rationale in doc_evidence.rationales
            ]
        else:
            entries = [{"sentences": [], "label": label}]
        evidence[str(doc_id)] = entries
    record = {
        "id": claim.claim_id,
        "claim": claim.text,
        "evidence": evidence,
        "cited_doc_ids": list(claim.cited_doc_ids),
    }
    if claim.provenance is not Provenance.HUMAN:
        record["provenance"] = claim.provenance.value
    if claim.generation_trace is not None:
        record["generation_trace"] = claim.generation_trace
    return record


def save_claims(claims: Iterable[Claim], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for claim in claims:
            handle.write(json.dumps(claim_to_record(claim), ensure_ascii=False) + "\n")


def load_predictions(path) -> list[Prediction]:
    """Read predictions.jsonl; returns only non-NEI pairs (NEI = absence)."""
    predictions = []
    for line_no, obj in _read_jsonl(path):
        claim_id = int(_require(obj, "id", path, line_no))
        for doc_key, entry in _require(obj, "evidence", path, line_no).items():
            label = Label.from_wire(_require(entry, "label", path, line_no))
            sentences = _require(entry, "sentences", path, line_no)
            predictions.append(
                Prediction(
                    claim_id=claim_id,
                    doc_id=int(doc_key),
                    label=label,
                    rationale_indices=frozenset(int(i) for i in sentences),
                )
            )
    return predictions


def save_predictions(predictions: Iterable[Prediction], path, claim_ids=None) -> None:
    """Write predictions.jsonl, one line per claim.

    NEI predictions are dropped (the format represents NEI by absence).
    claim_ids, when given, fixes the set of emitted lines so claims whose
    predictions are all NEI still appear with empty evidence.
    """
    by_claim: dict[int, list[Prediction]] = {}
    for pred in predictions:
        if pred.label is Label.NEI:
            continue
        by_claim.setdefault(pred.claim_id, []).append(pred)
    ids = sorted(by_claim) if claim_ids is None else list(claim_ids)
    with open(path, "w", encoding="utf-8") as handle:
        for claim_id in ids:
            evidence = {}
            for pred in sorted(by_claim.get(claim_id, []), key=lambda p: p.doc_id):
                evidence[str(pred.doc_id)] = {
                    "label": pred.label.to_wire(),
                    "sentences": sorted(pred.rationale_indices),
                }
            handle.write(
                json.dumps({"id": claim_id, "evidence": evidence}, ensure_ascii=False) + "\n"
            )


def validate_predictions(
    predictions: list[Prediction], corpus: Corpus, claims: list[Claim]
) -> list[Violation]:
    """Check predictions against the corpus and claim set.

    Violations are returned, never raised. The Prediction constructor
    already enforces the label/rationale consistency invariant, so records
    built in-process only surface referential problems here.
    """
    violations = []
    known_claims = {claim.claim_id for claim in claims}
    seen_pairs = set()
    for pred in predictions:
        if pred.claim_id not in known_claims:
            violations.append(Violation(pred.claim_id, pred.doc_id, "unknown claim id"))
            continue
        if pred.doc_id not in corpus:
            violations.append(Violation(pred.claim_id, pred.doc_id, "unknown doc id"))
            continue
        pair = (pred.claim_id, pred.doc_id)
        if pair in seen_pairs:
            violations.append(Violation(pred.claim_id, pred.doc_id, "duplicate (claim, doc) pair"))
        seen_pairs.add(pair)
        n_sentences = len(corpus[pred.doc_id].sentences)
        for index in pred.rationale_indices:
            if not 0 <= index < n_sentences:
                violations.append(
                    Violation(
                        pred.claim_id,
                        pred.doc_id,
                        f"rationale index {index} out of range ({n_sentences} sentences)",
                    )
                )
        if pred.label is Label.NEI and pred.rationale_indices:
            violations.append(Violation(pred.claim_id, pred.doc_id, "NEI with rationales"))
        if pred.label is not Label.NEI and not pred.rationale_indices:
            violations.append(
                Violation(pred.claim_id, pred.doc_id, "non-NEI with empty rationale set")
            )
    return violations
