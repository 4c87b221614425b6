"""Task metrics: abstract-level and sentence-level scoring, agreement, breakdowns.

Scoring unit and correctness rules:

  * Abstract-level: the unit is a (claim, doc) pair. Predicted positives
    are pairs predicted non-NEI; gold positives are pairs with gold
    evidence. A predicted pair is correct when its label matches gold
    and, for the label+rationale variant, at least one gold rationale has
    all of its sentences contained in the predicted rationale set. This
    variant rewards recall in rationale selection.
  * Sentence-level: the unit is a predicted rationale sentence. A
    predicted sentence is correct when it belongs to some gold rationale
    whose sentence set is entirely contained in the predicted set for the
    pair and, for the selection+label variant, the predicted label matches
    gold. Recall divides by the union of gold rationale sentences per pair
    (shared sentences counted once). This rewards precision in selection.

Pairs predicted NEI contribute to no count in any variant.

All computations are exact per-pair tallies aggregated at the end, so any
variant can be recomputed over any subset of pairs (used by the category
breakdown and the report command).
"""

import json
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum

from claimcheck.data import Claim, Label, Prediction
from claimcheck.errors import DataValidationError, ParseError


class MetricVariant(Enum):
    ABSTRACT_LABEL_ONLY = "abstract_label_only"
    ABSTRACT_LABEL_RATIONALE = "abstract_label_rationale"
    SENTENCE_SELECTION_ONLY = "sentence_selection_only"
    SENTENCE_SELECTION_LABEL = "sentence_selection_label"


@dataclass(frozen=True)
class MetricResult:
    variant: MetricVariant
    precision: float
    recall: float
    f1: float
    correct: int
    predicted: int
    gold: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "counts": {"correct": self.correct, "predicted": self.predicted, "gold": self.gold},
        }


@dataclass(frozen=True)
class CategoryAnnotation:
    claim_id: int
    doc_id: int
    context: bool
    background: bool
    numerical: bool

    CATEGORIES = ("context", "background", "numerical")


@dataclass(frozen=True)
class PairOutcome:
    """Everything any metric variant needs to know about one (claim, doc) pair."""

    claim_id: int
    doc_id: int
    gold: bool
    predicted: bool
    label_correct: bool
    rationale_hit: bool
    n_predicted_sentences: int
    n_gold_sentences: int
    n_correct_sentences: int

    @property
    def pair(self) -> tuple[int, int]:
        return (self.claim_id, self.doc_id)


def f1(precision: float, recall: float) -> float:
    """Harmonic mean, 0 when both inputs are 0; scale-invariant."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def compute_pair_outcomes(predictions: list[Prediction], claims: list[Claim],
                          max_rationale_sentences: int | None = None) -> list[PairOutcome]:
    """Tally every pair that is predicted non-NEI or carries gold evidence.

    max_rationale_sentences, when set, voids rationale credit (containment
    and correct-sentence counts) for pairs predicting more sentences than
    the cap; the sentences still count as predicted.
    """
    claims_by_id = {claim.claim_id: claim for claim in claims}
    preds_by_pair: dict[tuple[int, int], Prediction] = {}
    for pred in predictions:
        if pred.claim_id not in claims_by_id:
            raise DataValidationError(f"prediction references unknown claim {pred.claim_id}")
        if pred.label is Label.NEI:
            continue
        pair = (pred.claim_id, pred.doc_id)
        if pair in preds_by_pair:
            raise DataValidationError(f"duplicate prediction for pair {pair}")
        preds_by_pair[pair] = pred

    pairs = set(preds_by_pair)
    for claim in claims:
        for doc_id in claim.evidence:
            pairs.add((claim.claim_id, doc_id))

    outcomes = []
    for claim_id, doc_id in sorted(pairs):
        claim = claims_by_id[claim_id]
        doc_evidence = claim.evidence.get(doc_id)
        pred = preds_by_pair.get((claim_id, doc_id))
        predicted_set = pred.rationale_indices if pred is not None else frozenset()
        over_cap = (max_rationale_sentences is not None
                    and len(predicted_set) > max_rationale_sentences)

        label_correct = (pred is not None and doc_evidence is not None
                         and pred.label is doc_evidence.label)
        rationale_hit = False
        n_correct = 0
        n_gold = 0
        if doc_evidence is not None:
            n_gold = len(doc_evidence.sentence_union())
            if not over_cap:
                covered = set()
                for rationale in doc_evidence.rationales:
                    if set(rationale) <= predicted_set:
                        rationale_hit = True
                        covered.update(rationale)
                n_correct = len(covered)
        outcomes.append(
            PairOutcome(
                claim_id=claim_id,
                doc_id=doc_id,
                gold=doc_evidence is not None,
                predicted=pred is not None,
                label_correct=label_correct,
                rationale_hit=rationale_hit,
                n_predicted_sentences=len(predicted_set),
                n_gold_sentences=n_gold,
                n_correct_sentences=n_correct,
            )
        )
    return outcomes


def _result(variant: MetricVariant, correct: int, predicted: int, gold: int) -> MetricResult:
    precision = correct / predicted if predicted else 0.0
    recall = correct / gold if gold else 0.0
    return MetricResult(variant=variant, precision=precision, recall=recall,
                        f1=f1(precision, recall), correct=correct, predicted=predicted, gold=gold)


def score_outcomes(outcomes: list[PairOutcome], variant: MetricVariant) -> MetricResult:
    if variant is MetricVariant.ABSTRACT_LABEL_ONLY:
        correct = sum(1 for o in outcomes if o.label_correct)
        return _result(variant, correct, sum(1 for o in outcomes if o.predicted),
                       sum(1 for o in outcomes if o.gold))
    if variant is MetricVariant.ABSTRACT_LABEL_RATIONALE:
        correct = sum(1 for o in outcomes if o.label_correct and o.rationale_hit)
        return _result(variant, correct, sum(1 for o in outcomes if o.predicted),
                       sum(1 for o in outcomes if o.gold))
    predicted = sum(o.n_predicted_sentences for o in outcomes)
    gold = sum(o.n_gold_sentences for o in outcomes)
    if variant is MetricVariant.SENTENCE_SELECTION_ONLY:
        correct = sum(o.n_correct_sentences for o in outcomes)
    else:
        correct = sum(o.n_correct_sentences for o in outcomes if o.label_correct)
    return _result(variant, correct, predicted, gold)


def abstract_level(predictions: list[Prediction], claims: list[Claim],
                   require_rationale: bool) -> MetricResult:
    variant = (MetricVariant.ABSTRACT_LABEL_RATIONALE if require_rationale
               else MetricVariant.ABSTRACT_LABEL_ONLY)
    return score_outcomes(compute_pair_outcomes(predictions, claims), variant)


def sentence_level(predictions: list[Prediction], claims: list[Claim],
                   require_label: bool) -> MetricResult:
    variant = (MetricVariant.SENTENCE_SELECTION_LABEL if require_label
               else MetricVariant.SENTENCE_SELECTION_ONLY)
    return score_outcomes(compute_pair_outcomes(predictions, claims), variant)


def evaluate_all(predictions: list[Prediction], claims: list[Claim],
                 max_rationale_sentences: int | None = None
                 ) -> tuple[dict[MetricVariant, MetricResult], list[PairOutcome]]:
    outcomes = compute_pair_outcomes(predictions, claims, max_rationale_sentences)
    results = {variant: score_outcomes(outcomes, variant) for variant in MetricVariant}
    return results, outcomes


def _annotated_pairs(claims: list[Claim]) -> set[tuple[int, int]]:
    return {(claim.claim_id, doc_id) for claim in claims for doc_id in claim.cited_doc_ids}


def claims_as_predictions(claims: list[Claim]) -> list[Prediction]:
    """Flatten gold-style annotations into predictions (union of rationales)."""
    predictions = []
    for claim in claims:
        for doc_id in sorted(claim.evidence):
            doc_evidence = claim.evidence[doc_id]
            predictions.append(
                Prediction(
                    claim_id=claim.claim_id,
                    doc_id=doc_id,
                    label=doc_evidence.label,
                    rationale_indices=doc_evidence.sentence_union(),
                )
            )
    return predictions


def human_agreement(annotations_a: list[Claim], annotations_b: list[Claim]
                    ) -> dict[MetricVariant, MetricResult]:
    """Score annotator B against annotator A over the same pair set.

    Both files must annotate the same (claim, cited doc) pairs; A plays
    gold, B's evidence is flattened into predictions, and all four metric
    variants are computed.
    """
    pairs_a = _annotated_pairs(annotations_a)
    pairs_b = _annotated_pairs(annotations_b)
    if pairs_a != pairs_b:
        difference = sorted(pairs_a.symmetric_difference(pairs_b))
        raise DataValidationError(
            f"annotation sets cover different pairs; symmetric difference: {difference}"
        )
    results, _ = evaluate_all(claims_as_predictions(annotations_b), annotations_a)
    return results


def load_category_annotations(path) -> list[CategoryAnnotation]:
    annotations = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"malformed JSON: {exc.msg}") from None
            annotations.append(
                CategoryAnnotation(
                    claim_id=int(obj["claim_id"]),
                    doc_id=int(obj["doc_id"]),
                    context=bool(obj["context"]),
                    background=bool(obj["background"]),
                    numerical=bool(obj["numerical"]),
                )
            )
    return annotations


def by_category_outcomes(outcomes: list[PairOutcome],
                         annotations: list[CategoryAnnotation],
                         variant: MetricVariant) -> dict:
    """Score each category axis independently over yes/no buckets.

    Every annotated pair must exist in the gold evidence. Pairs seen during
    scoring but missing from the annotation file are excluded from buckets
    and counted under "unannotated".
    """
    gold_pairs = {outcome.pair for outcome in outcomes if outcome.gold}
    annotation_by_pair = {}
    for annotation in annotations:
        pair = (annotation.claim_id, annotation.doc_id)
        if pair not in gold_pairs:
            raise DataValidationError(f"annotated pair {pair} has no gold evidence")
        if pair in annotation_by_pair:
            raise DataValidationError(f"duplicate annotation for pair {pair}")
        annotation_by_pair[pair] = annotation

    breakdown = {}
    for category in CategoryAnnotation.CATEGORIES:
        yes, no, unannotated = [], [], 0
        for outcome in outcomes:
            annotation = annotation_by_pair.get(outcome.pair)
            if annotation is None:
                unannotated += 1
            elif getattr(annotation, category):
                yes.append(outcome)
            else:
                no.append(outcome)
        breakdown[category] = {
            "yes": score_outcomes(yes, variant),
            "no": score_outcomes(no, variant),
            "counts": {"yes": len(yes), "no": len(no), "unannotated": unannotated},
        }
    return breakdown


def by_category(predictions: list[Prediction], claims: list[Claim],
                annotations: list[CategoryAnnotation], variant: MetricVariant) -> dict:
    outcomes = compute_pair_outcomes(predictions, claims)
    return by_category_outcomes(outcomes, annotations, variant)


def outcome_to_dict(outcome: PairOutcome) -> dict:
    return asdict(outcome)


def outcome_from_dict(record: dict) -> PairOutcome:
    return PairOutcome(**record)


def percent_1dp(value: float) -> float:
    """Present a [0, 1] ratio as a percentage, half-up to one decimal.

    Presentation only; internal arithmetic keeps full precision.
    """
    return float(Decimal(repr(value * 100.0)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))
