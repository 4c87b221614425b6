"""Regenerate every fixture under fixtures/. Deterministic; run from repo root.

The synthetic training set is keyword-determined by construction: a claim
"cmpdNN raises mkNN ..." is supported by a doc whose signal sentence says
"increases", refuted by one saying "decreases", and NEI against filler docs
containing neither verb. Rationales are exactly the signal sentences. All
sentences are padded to six tokens so separator positions are stereotyped,
which keeps the task learnable by the small encoder within a few epochs.
"""

import json
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from claimcheck.data import (Claim, Corpus, DocEvidence, Document, Label,  # noqa: E402
                             save_claims, save_corpus)
from claimcheck.weak import generate_title_claims  # noqa: E402

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

# ---------------------------------------------------------------------------
# main 20-doc corpus + hand-written gold claims


MAIN_DOCS = [
    (101, "Vitamin D supplementation and fracture incidence in older adults",
     ["We enrolled 2489 adults over 65 in a randomized trial of daily vitamin D.",
      "Participants received 2000 IU daily or matched placebo for three years.",
      "Fracture incidence fell by 21 percent in the supplemented group.",
      "Serum calcifediol rose to a median of 38 nanograms per milliliter.",
      "Adverse events were similar between arms."]),
    (102, "Statin therapy and hepatic enzyme elevation: a cohort analysis",
     ["We followed 11640 statin initiators for five years.",
      "Alanine aminotransferase elevations above three times normal occurred in 1.1 percent.",
      "Discontinuation normalized enzymes in nearly all cases.",
      "No excess of severe hepatic injury was observed."]),
    (103, "Gut microbiome diversity after short-course antibiotics",
     ["Stool samples were collected from 48 volunteers before and after azithromycin.",
      "Shannon diversity dropped sharply within one week of exposure.",
      "Diversity recovered to baseline in most subjects by week twelve.",
      "Three taxa remained depleted at six months."]),
    (104, "Sleep restriction impairs glucose tolerance in healthy men",
     ["Eleven healthy men slept four hours nightly for six nights.",
      "Intravenous glucose tolerance declined by forty percent versus rested baseline.",
      "Cortisol and sympathetic tone rose during restriction.",
      "Findings reversed after recovery sleep."]),
    (105, "BCL-2 silencing in murine leukemia models",
     ["We used inducible shRNA to silence BCL-2 in transplanted leukemias.",
      "Silencing produced rapid loss of leukemic blasts in marrow.",
      "Median survival extended from 28 to 61 days.",
      "No effect was seen in BCL-2 negative control grafts."]),
    (106, "Handwashing adherence and ventilator-associated pneumonia",
     ["An education program raised hand hygiene adherence from 41 to 78 percent.",
      "Ventilator-associated pneumonia rates per 1000 device days fell from 9.2 to 4.1.",
      "The association persisted after adjustment for case mix."]),
    (107, "Dietary fiber and colonic transit: a crossover study",
     ["Twenty volunteers alternated high and low fiber diets for four weeks each.",
      "Mean colonic transit time shortened by 14 hours on high fiber.",
      "Stool frequency increased modestly.",
      "No carryover effects were detected."]),
    (108, "Peripheral intravenous drug administration errors on medical wards",
     ["Observers recorded 483 intravenous drug administrations across two hospitals.",
      "At least one error occurred in 49 percent of administrations.",
      "Most errors occurred when giving bolus doses.",
      "Severe errors were rare but clustered in night shifts."]),
    (109, "Abnormal prion protein prevalence in archived appendix samples",
     ["We screened 32441 appendix samples from three birth cohorts.",
      "Sixteen samples were positive for abnormal prion protein.",
      "Prevalence was about one in two thousand.",
      "Positivity did not differ by birth cohort."]),
    (110, "Hematopoietic stem cell chromosome segregation dynamics",
     ["Label-retention assays tracked chromosome fate in hematopoietic stem cells.",
      "All tracked stem cells segregated their chromosomes randomly.",
      "No evidence supported the immortal strand hypothesis.",
      "Results held in both young and aged marrow."]),
    (111, "Metformin and colorectal adenoma recurrence in diabetics",
     ["We randomized 498 diabetic adults with resected adenomas to metformin or placebo.",
      "Recurrence at three years was 38 percent with metformin versus 51 percent with placebo.",
      "Benefit concentrated in proximal lesions."]),
    (112, "Exercise intensity and hippocampal volume in late adulthood",
     ["A twelve month aerobic program was compared with stretching in 120 adults.",
      "Anterior hippocampal volume grew two percent with aerobic exercise.",
      "Volume declined slightly in the stretching arm.",
      "Fitness gains correlated with volume change."]),
    (113, "Influenza vaccination and hospitalization among heart failure patients",
     ["We linked vaccination registries to 39871 heart failure admissions.",
      "Vaccinated patients had 18 percent lower all-cause hospitalization.",
      "Residual confounding cannot be excluded."]),
    (114, "Thermal tolerance limits of reef-building corals",
     ["Colonies from four reefs were exposed to graded thermal stress.",
      "Bleaching onset varied by two degrees across source reefs.",
      "Symbiont clade composition explained most variance.",
      "Recovery was slowest in colonies from stable thermal regimes."]),
    (115, "Telomerase activation in idiopathic pulmonary fibrosis fibroblasts",
     ["Fibroblasts from 22 fibrosis patients were profiled for telomerase activity.",
      "Activity was detected in a minority of lines.",
      "Telomere length did not predict proliferative capacity."]),
    (116, "School closure timing and pandemic influenza transmission",
     ["We modeled closure timing against 1918 city-level mortality records.",
      "Earlier closures were associated with lower peak death rates.",
      "Total mortality changed less than peak mortality."]),
    (117, "CRISPR base editing efficiency across chromatin states",
     ["Editing efficiency was assayed at 212 genomic sites.",
      "Open chromatin sites edited three times more efficiently.",
      "Nucleosome occupancy predicted residual variation."]),
    (118, "Maternal folate status and offspring neural tube defects",
     ["A case-control design compared 684 affected and 2740 unaffected pregnancies.",
      "Low maternal red cell folate tripled neural tube defect risk.",
      "Risk fell monotonically across folate quintiles."]),
    (119, "Urban green space exposure and adolescent anxiety symptoms",
     ["Cohort members were geocoded to residential greenness yearly.",
      "Higher greenness exposure was associated with fewer anxiety symptoms.",
      "Associations weakened after moving adjustment."]),
    (120, "Deep ocean warming signals in Argo float records",
     ["We analyzed 17 years of Argo temperature profiles below 2000 meters.",
      "Abyssal warming was detectable in all basins.",
      "Southern Ocean trends were largest."]),
]


def _evidence(label, *rationales):
    return DocEvidence(label=label, rationales=tuple(tuple(r) for r in rationales))


MAIN_CLAIMS = [
    Claim(1, "Vitamin D supplementation reduces fracture risk in older adults.",
          {101: _evidence(Label.SUPPORTS, [2])}, (101, 103)),
    Claim(2, "Short-course antibiotics permanently destroy gut microbiome diversity.",
          {103: _evidence(Label.REFUTES, [2])}, (103, 115)),
    Claim(3, "Sleep restriction impairs glucose tolerance.",
          {104: _evidence(Label.SUPPORTS, [1], [2])}, (104,)),
    Claim(4, "Silencing of BCL-2 slows the progression of leukemia in mice.",
          {105: _evidence(Label.SUPPORTS, [1, 2])}, (105, 110)),
    Claim(5, "Statin therapy commonly causes irreversible liver injury.",
          {102: _evidence(Label.REFUTES, [2], [3])}, (102,)),
    Claim(6, "Hand hygiene programs reduce ventilator-associated pneumonia.",
          {106: _evidence(Label.SUPPORTS, [1])}, (106, 108)),
    Claim(7, "Errors in peripheral IV drug administration are most common during bolus administration.",
          {108: _evidence(Label.SUPPORTS, [2])}, (108,)),
    Claim(8, "About 1 in 2000 people in the UK carry abnormal prion protein.",
          {109: _evidence(Label.SUPPORTS, [1, 2])}, (109,)),
    Claim(9, "Hematopoietic stem cells segregate their chromosomes randomly.",
          {110: _evidence(Label.SUPPORTS, [1])}, (110, 117)),
    Claim(10, "Metformin increases colorectal adenoma recurrence.",
          {111: _evidence(Label.REFUTES, [1])}, (111,)),
    Claim(11, "Aerobic exercise increases hippocampal volume in older adults.",
          {112: _evidence(Label.SUPPORTS, [1]), 119: _evidence(Label.SUPPORTS, [1])},
          (112, 119)),
    Claim(12, "Influenza vaccination eliminates hospitalization risk in heart failure.",
          {}, (113, 116)),
    Claim(13, "Base editing works equally well in open and closed chromatin.",
          {117: _evidence(Label.REFUTES, [1])}, (117,)),
    Claim(14, "Low maternal folate increases neural tube defect risk.",
          {118: _evidence(Label.SUPPORTS, [1], [2])}, (118, 101)),
]


# ---------------------------------------------------------------------------
# weak-supervision corpus: titles for the title->claim generator, abstracts
# referenced by the ICO prompt fixture

WEAK_DOCS = [
    # claim-like titles
    (300, "Dietary fiber intake reduces colonic inflammation in mice.",
     ["Mice received cellulose enriched or control chow for eight weeks.",
      "Colonic interleukin six fell with fiber enrichment.",
      "Histology scores improved in the fiber group."]),
    (301, "Vitamin B6 supplementation increases immune responses in critically ill patients.",
     ["Fifty-one critically ill patients were randomized to B6 or control.",
      "Lymphocyte counts rose after fourteen days of supplementation.",
      "No difference in mortality was observed."]),
    (302, "Early mobilization improves functional recovery after hip surgery.",
     ["Patients mobilized within 24 hours walked farther at discharge.",
      "Length of stay shortened by two days.",
      "Readmission rates were unchanged."]),
    (303, "Nightly melatonin lowers delirium incidence in intensive care.",
     ["A double blind trial assigned 380 patients to melatonin or placebo.",
      "Delirium occurred in 12 percent versus 20 percent.",
      "Sedative use was similar between arms."]),
    (304, "Resistance training enhances insulin sensitivity in prediabetes.",
     ["Participants trained three times weekly for twelve weeks.",
      "Insulin sensitivity index improved by 25 percent.",
      "Fat mass changed little."]),
    (305, "Maternal smoking predicts reduced birth weight across cohorts.",
     ["Birth weight fell 180 grams per ten cigarettes daily.",
      "The gradient replicated in four national cohorts.",
      "Paternal smoking showed no independent association."]),
    # negated, claim-like titles (flip material)
    (306, "Vitamin E does not improve cognitive outcomes in older adults.",
     ["A seven year trial followed 3786 participants on vitamin E or placebo.",
      "Cognitive decline slopes were indistinguishable between arms.",
      "Adverse events were slightly higher with supplementation."]),
    (307, "Screening colonoscopy intervals do not require shortening after negative exams.",
     ["Registry data covered 412000 negative baseline colonoscopies.",
      "Interval cancer incidence stayed low for ten years.",
      "Earlier repeat exams detected few additional lesions."]),
    (308, "Antibiotic prophylaxis is not associated with fewer catheter infections here.",
     ["We audited 2210 catheter insertions across nine wards.",
      "Infection rates matched between prophylaxis and standard care.",
      "Resistant isolates were commoner with prophylaxis."]),
    (309, "Caffeine cannot reverse sleep debt related attention lapses.",
     ["Volunteers restricted to five hours of sleep received caffeine or placebo.",
      "Lapses on vigilance testing stayed elevated despite caffeine.",
      "Subjective alertness improved transiently."]),
    (310, "Probiotic yogurts do not reduce antibiotic associated diarrhea in children.",
     ["A cluster randomized design enrolled 1943 pediatric courses.",
      "Diarrhea incidence was 14 percent in both arms.",
      "No strain specific effects emerged."]),
    (311, "Low dose aspirin does not prevent first venous thrombosis.",
     ["Event rates were 0.9 versus 1.0 per hundred person years.",
      "Bleeding increased with aspirin.",
      "Subgroups showed no heterogeneity."]),
    # not claim-like
    (312, "Methods for measuring colonic transit time",
     ["We review radiopaque marker, scintigraphic, and capsule techniques.",
      "Each method trades cost against resolution.",
      "Reporting standards remain inconsistent."]),
    (313, "A survey of hand hygiene auditing practice",
     ["Ninety-two infection control teams described their auditing programs.",
      "Direct observation remained the dominant method.",
      "Electronic monitoring adoption was rare."]),
    (314, "Does vitamin D prevent respiratory infections?",
     ["We meta-analyzed 25 randomized trials of supplementation.",
      "Protective effects concentrated in deficient participants.",
      "Dosing regimens varied widely."]),
    (315, "Proteomics of the aging hippocampus",
     ["Tissue from young and aged donors underwent mass spectrometry.",
      "Synaptic vesicle proteins declined with age.",
      "Glial markers rose."]),
    (316, "Statistical considerations in stepped wedge trials",
     ["Intracluster correlation drives power in stepped wedge designs.",
      "We tabulate design effects across plausible scenarios.",
      "Software implementations are compared."]),
    (317, "Corrigendum to prior cohort report",
     ["A transcription error affected Table 2.",
      "Corrected estimates differ by less than one percent.",
      "Conclusions are unchanged."]),
    (318, "Imaging protocols for murine leukemia burden",
     ["Bioluminescent and flow cytometric endpoints are compared.",
      "Agreement was strongest at high disease burden.",
      "We provide a harmonized protocol."]),
    (319, "On the taxonomy of reef symbionts",
     ["We revise clade assignments using long read sequencing.",
      "Two new clades are proposed.",
      "Legacy names are mapped to the revision."]),
]

ICO_PROMPTS = [
    {"doc_id": 300, "intervention": "cellulose enriched chow", "comparator": "control chow",
     "outcome": "colonic interleukin six", "direction": "SIG_DECREASED",
     "rationale_indices": [1]},
    {"doc_id": 301, "intervention": "vitamin B6 supplementation", "comparator": "standard care",
     "outcome": "lymphocyte counts", "direction": "SIG_INCREASED", "rationale_indices": [1]},
    {"doc_id": 302, "intervention": "early mobilization", "comparator": "usual mobilization",
     "outcome": "walking distance at discharge", "direction": "SIG_INCREASED",
     "rationale_indices": [0]},
    {"doc_id": 303, "intervention": "nightly melatonin", "comparator": "placebo",
     "outcome": "delirium incidence", "direction": "SIG_DECREASED", "rationale_indices": [1]},
    {"doc_id": 304, "intervention": "resistance training", "comparator": "",
     "outcome": "insulin sensitivity", "direction": "SIG_INCREASED", "rationale_indices": [1]},
    {"doc_id": 305, "intervention": "maternal smoking", "comparator": "",
     "outcome": "birth weight", "direction": "SIG_DECREASED", "rationale_indices": [0]},
    {"doc_id": 306, "intervention": "vitamin E", "comparator": "placebo",
     "outcome": "cognitive decline", "direction": "NO_SIG_DIFF"},
    {"doc_id": 308, "intervention": "antibiotic prophylaxis", "comparator": "standard care",
     "outcome": "catheter infection rate", "direction": "NO_SIG_DIFF"},
    {"doc_id": 309, "intervention": "caffeine", "comparator": "placebo",
     "outcome": "vigilance lapses", "direction": "SIG_DECREASED"},
    {"doc_id": 310, "intervention": "probiotic yogurt", "comparator": "",
     "outcome": "diarrhea incidence", "direction": "SIG_DECREASED", "rationale_indices": [1]},
    {"doc_id": 311, "intervention": "low dose aspirin", "comparator": "placebo",
     "outcome": "bleeding events", "direction": "SIG_INCREASED", "rationale_indices": [1]},
    {"doc_id": 304, "intervention": "resistance training", "comparator": "stretching",
     "outcome": "fat mass", "direction": "NO_SIG_DIFF"},
]


# ---------------------------------------------------------------------------
# synthetic keyword-separable training set

SUPPORT_VERB = "increases"
REFUTE_VERB = "decreases"
FILLER_WORDS = [
    "cohort", "baseline", "assay", "samples", "protocol", "values", "panel",
    "visit", "record", "profile", "subset", "interval", "readings", "batch",
    "series", "measure", "archive", "survey", "screen", "registry", "group",
    "window", "period", "marker", "entries", "index", "review", "chart",
]
CLAIM_TAILS = ["consistently", "reliably", "markedly", "substantially",
               "measurably", "overall", "broadly", "notably"]


def _filler_sentence(rng) -> str:
    words = rng.choice(FILLER_WORDS, size=6, replace=False)
    return " ".join(words)


def build_synth(rng):
    docs = []
    directions = {}
    signal_sentences = {}
    for i in range(40):
        doc_id = 200 + i
        verb = SUPPORT_VERB if i % 2 == 0 else REFUTE_VERB
        directions[doc_id] = verb
        n_sentences = int(rng.integers(4, 7))
        n_signal = 2 if i % 5 == 0 else 1
        positions = sorted(int(p) for p in rng.choice(n_sentences, size=n_signal, replace=False))
        sentences = []
        for s in range(n_sentences):
            if s in positions:
                sentences.append(f"cmpd{i:02d} treatment clearly {verb} mk{i:02d} levels")
            else:
                sentences.append(_filler_sentence(rng))
        signal_sentences[doc_id] = positions
        title = f"assessment of mk{i:02d} response under cmpd{i:02d} dosing"
        docs.append(Document(doc_id=doc_id, title=title, sentences=tuple(sentences)))
    for j in range(20):
        doc_id = 240 + j
        n_sentences = int(rng.integers(4, 7))
        sentences = tuple(_filler_sentence(rng) for _ in range(n_sentences))
        title = f"registry notes on {FILLER_WORDS[j % len(FILLER_WORDS)]} handling"
        docs.append(Document(doc_id=doc_id, title=title, sentences=sentences))

    def make_claims(first_id, count):
        claims = []
        for offset in range(count):
            claim_id = first_id + offset
            i = int(rng.integers(0, 40))
            doc_id = 200 + i
            tail = CLAIM_TAILS[int(rng.integers(0, len(CLAIM_TAILS)))]
            text = f"cmpd{i:02d} raises mk{i:02d} {tail}"
            label = Label.SUPPORTS if directions[doc_id] == SUPPORT_VERB else Label.REFUTES
            rationales = tuple((p,) for p in signal_sentences[doc_id])
            n_fillers = int(rng.integers(1, 3))
            fillers = sorted(int(d) for d in rng.choice(np.arange(240, 260),
                                                        size=n_fillers, replace=False))
            claims.append(
                Claim(
                    claim_id=claim_id,
                    text=text,
                    evidence={doc_id: DocEvidence(label=label, rationales=rationales)},
                    cited_doc_ids=tuple([doc_id] + fillers),
                )
            )
        return claims

    train = make_claims(1000, 400)
    dev = make_claims(1400, 100)
    return Corpus(docs), train, dev


TRAIN_CONFIG = """\
# synthetic end-to-end training stage
stage = synth-stage2
seed = 13
epochs = 8
batch_size = 8
learning_rate = 0.001
lambda_rationale = 15.0
max_length = 96
encoder.vocab_size = 4096
encoder.hidden_size = 64
encoder.num_layers = 2
encoder.window = 16
encoder.ffn_size = 128
checkpoint_out = {out}
dev_claims = {dev_claims}
dev_corpus = {corpus}
dataset.1.claims = {train_claims}
dataset.1.corpus = {corpus}
dataset.1.weight = 1.0
"""


# ---------------------------------------------------------------------------
# category-breakdown fixture: 128 gold pairs, Table-3-like annotation counts

def build_category(rng):
    docs = []
    for i in range(16):
        doc_id = 400 + i
        sentences = tuple(_filler_sentence(rng) for _ in range(6))
        docs.append(Document(doc_id=doc_id, title=f"case series {i:02d} notes",
                             sentences=sentences))
    corpus = Corpus(docs)

    claims = []
    predictions = []
    for k in range(128):
        claim_id = 2000 + k
        doc_id = 400 + (k % 16)
        label = Label.SUPPORTS if k % 3 else Label.REFUTES
        n_rat = 2 if k % 4 == 0 else 1
        start = int(rng.integers(0, 6 - n_rat + 1))
        rationale = tuple(range(start, start + n_rat))
        claims.append(
            Claim(claim_id=claim_id, text=f"finding {k:03d} holds in case series",
                  evidence={doc_id: DocEvidence(label=label, rationales=(rationale,))},
                  cited_doc_ids=(doc_id,))
        )
        roll = rng.random()
        if roll < 0.70:      # correct label, full rationale
            predictions.append({"id": claim_id, "evidence": {
                str(doc_id): {"label": label.to_wire(), "sentences": list(rationale)}}})
        elif roll < 0.80:    # wrong label
            wrong = Label.REFUTES if label is Label.SUPPORTS else Label.SUPPORTS
            predictions.append({"id": claim_id, "evidence": {
                str(doc_id): {"label": wrong.to_wire(), "sentences": list(rationale)}}})
        elif roll < 0.90:    # incomplete or stray rationale
            sentences = [rationale[0]] if n_rat == 2 else [(rationale[0] + 1) % 6]
            predictions.append({"id": claim_id, "evidence": {
                str(doc_id): {"label": label.to_wire(), "sentences": sentences}}})
        else:                # predicted NEI
            predictions.append({"id": claim_id, "evidence": {}})

    pair_order = rng.permutation(128)
    context_yes = set(int(i) for i in pair_order[:85])
    background_yes = set(int(i) for i in rng.permutation(128)[:22])
    numerical_yes = set(int(i) for i in rng.permutation(128)[:22])
    annotations = []
    for k in range(128):
        annotations.append({
            "claim_id": 2000 + k,
            "doc_id": 400 + (k % 16),
            "context": k in context_yes,
            "background": k in background_yes,
            "numerical": k in numerical_yes,
        })
    return corpus, claims, predictions, annotations


# ---------------------------------------------------------------------------
# human-agreement fixture: two annotators over the main corpus

def build_agreement():
    base = [
        # claim_id, text, cited, A-evidence, B-evidence
        (600, "Vitamin D lowers fracture incidence.", (101, 104),
         {101: _evidence(Label.SUPPORTS, [2])}, {101: _evidence(Label.SUPPORTS, [2, 3])}),
        (601, "Sleep restriction worsens glucose tolerance.", (104, 102),
         {104: _evidence(Label.SUPPORTS, [1])}, {104: _evidence(Label.SUPPORTS, [1])}),
        (602, "Statins usually cause lasting liver damage.", (102,),
         {102: _evidence(Label.REFUTES, [2], [3])}, {102: _evidence(Label.REFUTES, [3])}),
        (603, "BCL-2 silencing shortens survival in leukemic mice.", (105, 110),
         {105: _evidence(Label.REFUTES, [2])}, {105: _evidence(Label.SUPPORTS, [2])}),
        (604, "Hand hygiene programs cut pneumonia rates.", (106, 108),
         {106: _evidence(Label.SUPPORTS, [1])}, {106: _evidence(Label.SUPPORTS, [1]),
                                                 108: _evidence(Label.SUPPORTS, [1])}),
        (605, "Aerobic training grows the anterior hippocampus.", (112,),
         {112: _evidence(Label.SUPPORTS, [1])}, {}),
        (606, "Base editing favors open chromatin.", (117, 103),
         {117: _evidence(Label.SUPPORTS, [1])}, {117: _evidence(Label.SUPPORTS, [1])}),
        (607, "Folate deficiency raises neural tube defect risk.", (118,),
         {118: _evidence(Label.SUPPORTS, [1], [2])}, {118: _evidence(Label.SUPPORTS, [1], [2])}),
        (608, "Fiber shortens colonic transit.", (107, 112),
         {107: _evidence(Label.SUPPORTS, [1])}, {107: _evidence(Label.SUPPORTS, [1, 2])}),
        (609, "Appendix screening shows prion positivity near 1 in 2000.", (109,),
         {109: _evidence(Label.SUPPORTS, [2])}, {109: _evidence(Label.SUPPORTS, [1, 2])}),
    ]
    annotator_a, annotator_b = [], []
    for claim_id, text, cited, ev_a, ev_b in base:
        annotator_a.append(Claim(claim_id, text, ev_a, cited))
        annotator_b.append(Claim(claim_id, text, ev_b, cited))
    return annotator_a, annotator_b


def write_jsonl(records, path):
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def main():
    FIXTURES.mkdir(exist_ok=True)
    (FIXTURES / "synth").mkdir(exist_ok=True)
    (FIXTURES / "category").mkdir(exist_ok=True)

    main_corpus = Corpus(Document(d, t, tuple(s)) for d, t, s in MAIN_DOCS)
    save_corpus(main_corpus, FIXTURES / "corpus.jsonl")
    save_claims(MAIN_CLAIMS, FIXTURES / "claims.jsonl")
    gold_preds = []
    for claim in MAIN_CLAIMS:
        evidence = {}
        for doc_id in sorted(claim.evidence):
            doc_evidence = claim.evidence[doc_id]
            evidence[str(doc_id)] = {
                "label": doc_evidence.label.to_wire(),
                "sentences": sorted(doc_evidence.sentence_union()),
            }
        gold_preds.append({"id": claim.claim_id, "evidence": evidence})
    write_jsonl(gold_preds, FIXTURES / "predictions_gold.jsonl")

    weak_corpus = Corpus(Document(d, t, tuple(s)) for d, t, s in WEAK_DOCS)
    save_corpus(weak_corpus, FIXTURES / "weak_corpus.jsonl")
    write_jsonl(ICO_PROMPTS, FIXTURES / "ico_prompts.jsonl")
    title_claims = generate_title_claims(weak_corpus, first_claim_id=3000)
    save_claims(title_claims, FIXTURES / "claims_weak_titles.jsonl")

    rng = np.random.default_rng(20260810)
    synth_corpus, train_claims, dev_claims = build_synth(rng)
    save_corpus(synth_corpus, FIXTURES / "synth" / "corpus.jsonl")
    save_claims(train_claims, FIXTURES / "synth" / "claims_train.jsonl")
    save_claims(dev_claims, FIXTURES / "synth" / "claims_dev.jsonl")
    config = TRAIN_CONFIG.format(
        out="fixtures/synth/model.ckpt",
        dev_claims="fixtures/synth/claims_dev.jsonl",
        corpus="fixtures/synth/corpus.jsonl",
        train_claims="fixtures/synth/claims_train.jsonl",
    )
    (FIXTURES / "synth" / "train_config.cfg").write_text(config, encoding="utf-8")

    cat_corpus, cat_claims, cat_preds, cat_annotations = build_category(rng)
    save_corpus(cat_corpus, FIXTURES / "category" / "corpus.jsonl")
    save_claims(cat_claims, FIXTURES / "category" / "claims.jsonl")
    write_jsonl(cat_preds, FIXTURES / "category" / "predictions.jsonl")
    write_jsonl(cat_annotations, FIXTURES / "category" / "annotations.jsonl")

    annotator_a, annotator_b = build_agreement()
    save_claims(annotator_a, FIXTURES / "annotations_a.jsonl")
    save_claims(annotator_b, FIXTURES / "annotations_b.jsonl")
    print("fixtures written to", FIXTURES)


if __name__ == "__main__":
    main()
