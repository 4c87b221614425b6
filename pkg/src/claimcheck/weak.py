"""Weakly-labeled claim generation and hard-negative mining.

Two generators produce training claims without human annotation:

  * ICO prompts (intervention / comparator / outcome plus a significance
    direction) are filled into a fixed template, yielding one supported
    and one refuted claim that differ in exactly one verb token.
  * Claim-like paper titles become supported claims against their own
    abstract; titles featuring a negation additionally yield a refuted
    variant with the negation removed.

Generated claims carry a provenance tag and a replayable generation
trace. Hard negatives are lexically similar abstracts with no evidentiary
relation, sampled from the retrieval pool to serve as NEI training pairs.
"""

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from claimcheck.data import Claim, Corpus, DocEvidence, Document, Label, Provenance
from claimcheck.errors import DataValidationError, ParseError
from claimcheck.retrieval import InvertedIndex, retrieve
from claimcheck.text import tokenize

logger = logging.getLogger("claimcheck.weak")


class Direction(Enum):
    SIG_INCREASED = "SIG_INCREASED"
    SIG_DECREASED = "SIG_DECREASED"
    NO_SIG_DIFF = "NO_SIG_DIFF"


@dataclass(frozen=True)
class IcoPrompt:
    doc_id: int
    intervention: str
    comparator: str
    outcome: str
    direction: Direction
    rationale_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.intervention.strip() or not self.outcome.strip():
            raise DataValidationError("ICO prompt needs non-empty intervention and outcome")


_DIRECTION_VERB = {Direction.SIG_INCREASED: "increases", Direction.SIG_DECREASED: "decreases"}
_OPPOSITE_VERB = {"increases": "decreases", "decreases": "increases"}


def _ico_text(prompt: IcoPrompt, verb: str) -> str:
    text = f"{prompt.intervention} {verb} {prompt.outcome}"
    if prompt.comparator.strip():
        text += f" compared to {prompt.comparator}"
    return text


def ico_to_claims(prompt: IcoPrompt, first_claim_id: int) -> list[Claim]:
    """Template a prompt into a supported/refuted claim pair.

    Prompts reporting no significant difference are skipped: there is no
    verb template for null results.
    """
    if prompt.direction is Direction.NO_SIG_DIFF:
        logger.info("skipping NO_SIG_DIFF prompt for doc %d", prompt.doc_id)
        return []
    if prompt.rationale_indices is not None:
        rationales = (tuple(sorted(set(prompt.rationale_indices))),)
    else:
        rationales = ()
    verb = _DIRECTION_VERB[prompt.direction]
    claims = []
    for offset, (claim_verb, label) in enumerate(
        ((verb, Label.SUPPORTS), (_OPPOSITE_VERB[verb], Label.REFUTES))
    ):
        trace = {
            "rule": "ico_template",
            "doc_id": prompt.doc_id,
            "direction": prompt.direction.value,
            "verb": claim_verb,
            "outcome": prompt.outcome,
        }
        claims.append(
            Claim(
                claim_id=first_claim_id + offset,
                text=_ico_text(prompt, claim_verb),
                evidence={prompt.doc_id: DocEvidence(label=label, rationales=rationales)},
                cited_doc_ids=(prompt.doc_id,),
                provenance=Provenance.WEAK_ICO,
                generation_trace=trace,
            )
        )
    return claims


# Titles counted as claim-like must contain a finite finding verb. The
# does/do entries admit negated titles ("X does not improve Y.").
FINDING_VERBS = frozenset({
    "increases", "decreases", "improves", "reduces", "enhances", "inhibits",
    "prevents", "promotes", "induces", "suppresses", "elevates", "lowers",
    "impairs", "predicts", "causes", "protects", "attenuates", "ameliorates",
})

# (pattern, replacement) applied once to produce the refuted variant;
# "fails to X" is deliberately excluded as too error-prone to rewrite.
NEGATION_RULES = (
    ("does not", "does"),
    ("do not", "do"),
    ("is not", "is"),
    ("are not", "are"),
    ("cannot", "can"),
)


def title_is_claim_like(title: str) -> bool:
    """Declarative-finding gate: no question mark, >= 4 tokens, finding verb."""
    if title.strip().endswith("?"):
        return False
    tokens = tokenize(title)
    if len(tokens) < 4:
        return False
    if any(token in FINDING_VERBS for token in tokens):
        return True
    for i, token in enumerate(tokens[:-1]):
        if token in ("is", "are"):
            if (tokens[i + 1:i + 3] == ["associated", "with"]
                    or tokens[i + 1:i + 4] == ["not", "associated", "with"]):
                return True
        # does/do/cannot followed by a verb, negated or not
        if token in ("does", "do", "cannot"):
            return True
    return False


def _negation_matches(title: str) -> list[tuple[re.Match, str]]:
    matches = []
    for pattern, replacement in NEGATION_RULES:
        regex = re.compile(r"\b" + pattern.replace(" ", r"\s+") + r"\b", re.IGNORECASE)
        matches.extend((match, replacement) for match in regex.finditer(title))
    return matches


def strip_negation(title: str) -> str | None:
    """Rewrite the single negation in a title, or None when not applicable.

    Titles with more than one negation are left alone: removing only one
    would produce a half-contradiction.
    """
    matches = _negation_matches(title)
    if len(matches) != 1:
        if len(matches) > 1:
            logger.info("title has %d negations, not flipping: %r", len(matches), title)
        return None
    match, replacement = matches[0]
    if match.group(0)[0].isupper():
        replacement = replacement[0].upper() + replacement[1:]
    return title[:match.start()] + replacement + title[match.end():]


def title_to_claims(document: Document, first_claim_id: int) -> list[Claim]:
    """Treat a claim-like title as a supported claim over its own abstract.

    Rationales are never annotated for these pairs, so the emitted
    evidence carries a label only (the rationale loss term is gated off
    during training). A title with a single negation also yields a
    refuted, negation-stripped variant.
    """
    if not title_is_claim_like(document.title) or document.degenerate:
        return []
    evidence_support = {document.doc_id: DocEvidence(label=Label.SUPPORTS)}
    claims = [
        Claim(
            claim_id=first_claim_id,
            text=document.title,
            evidence=evidence_support,
            cited_doc_ids=(document.doc_id,),
            provenance=Provenance.WEAK_TITLE,
            generation_trace={"rule": "title_support", "doc_id": document.doc_id},
        )
    ]
    flipped = strip_negation(document.title)
    if flipped is not None:
        claims.append(
            Claim(
                claim_id=first_claim_id + 1,
                text=flipped,
                evidence={document.doc_id: DocEvidence(label=Label.REFUTES)},
                cited_doc_ids=(document.doc_id,),
                provenance=Provenance.WEAK_TITLE,
                generation_trace={"rule": "title_negation_flip", "doc_id": document.doc_id},
            )
        )
    return claims


def generate_ico_claims(prompts, first_claim_id: int = 0) -> list[Claim]:
    claims = []
    next_id = first_claim_id
    for prompt in prompts:
        generated = ico_to_claims(prompt, next_id)
        claims.extend(generated)
        next_id += len(generated)
    return claims


def generate_title_claims(corpus: Corpus, first_claim_id: int = 0) -> list[Claim]:
    claims = []
    next_id = first_claim_id
    for doc_id in sorted(doc.doc_id for doc in corpus):
        generated = title_to_claims(corpus[doc_id], next_id)
        claims.extend(generated)
        next_id += len(generated)
    return claims


def mine_hard_negatives(claim: Claim, index: InvertedIndex, pool_size: int = 1000,
                        sample_size: int = 20, seed: int = 0) -> list[int]:
    """Sample NEI training docs from the claim's retrieval pool.

    Retrieves the top pool_size abstracts, drops every doc annotated as
    evidence for the claim, and samples sample_size uniformly without
    replacement. Returns all remaining candidates when fewer are left.
    Output is sorted by doc_id; identical seed gives identical output.
    """
    if pool_size < sample_size:
        raise DataValidationError(
            f"pool_size {pool_size} smaller than sample_size {sample_size}"
        )
    ranked = retrieve(index, claim, k=pool_size)
    eligible = sorted(doc_id for doc_id in ranked.doc_ids if doc_id not in claim.evidence)
    if len(eligible) <= sample_size:
        if len(eligible) < sample_size:
            logger.info(
                "claim %d: only %d eligible negatives (wanted %d)",
                claim.claim_id, len(eligible), sample_size,
            )
        return eligible
    rng = np.random.default_rng(seed)
    chosen = rng.choice(np.array(eligible, dtype=np.int64), size=sample_size, replace=False)
    return sorted(int(doc_id) for doc_id in chosen)


def load_ico_prompts(path) -> list[IcoPrompt]:
    prompts = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"malformed JSON: {exc.msg}") from None
            try:
                direction = Direction(obj["direction"])
            except (KeyError, ValueError):
                raise ParseError(path, line_no, f"bad direction {obj.get('direction')!r}")
            indices = obj.get("rationale_indices")
            prompts.append(
                IcoPrompt(
                    doc_id=int(obj["doc_id"]),
                    intervention=str(obj["intervention"]),
                    comparator=str(obj.get("comparator", "")),
                    outcome=str(obj["outcome"]),
                    direction=direction,
                    rationale_indices=None if indices is None else tuple(int(i) for i in indices),
                )
            )
    return prompts


def save_mined_negatives(negatives: dict[int, list[int]], path) -> None:
    """One line per claim: {"id": claim_id, "doc_ids": [...]}."""
    with open(path, "w", encoding="utf-8") as handle:
        for claim_id in sorted(negatives):
            record = {"id": claim_id, "doc_ids": list(negatives[claim_id])}
            handle.write(json.dumps(record) + "\n")


def load_mined_negatives(path) -> dict[int, list[int]]:
    negatives = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"malformed JSON: {exc.msg}") from None
            negatives[int(obj["id"])] = [int(d) for d in obj["doc_ids"]]
    return negatives
