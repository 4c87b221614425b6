"""Single command-line entry point for every pipeline stage.

Subcommands: index, retrieve, weakgen, mine-negatives, train, predict,
evaluate, report. All diagnostics go to standard error; data goes to files
only. Every artifact-producing command writes a manifest beside its output
so runs can be reproduced exactly. Exit codes: 0 success, 1 validation
error, 2 I/O error, 64 usage error.
"""

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from claimcheck import data as dm
from claimcheck import evaluation as ev
from claimcheck import retrieval as rt
from claimcheck import training as tr
from claimcheck import weak
from claimcheck.errors import ClaimCheckError
from claimcheck.manifest import TOOL_VERSION, write_manifest
from claimcheck.verifier import VerifierRelevanceScorer, load_checkpoint, predict_batch

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _cmd_index(args, argv):
    corpus = dm.load_corpus(args.corpus)
    index = rt.build_index(corpus, rt.Bm25Params(k1=args.k1, b=args.b))
    rt.save_index(index, args.out)
    write_manifest(args.out, "index build", argv,
                   {"corpus": args.corpus, "out": args.out, "k1": args.k1, "b": args.b},
                   [args.corpus])
    _log(f"indexed {index.num_docs} documents -> {args.out}")
    return EXIT_OK


def _cmd_retrieve(args, argv):
    index = rt.load_index(args.index)
    claims = dm.load_claims(args.claims, corpus=None)
    scorer = None
    inputs = [args.index, args.claims]
    if args.rerank_model:
        model, _, _ = load_checkpoint(args.rerank_model)
        scorer = VerifierRelevanceScorer(model)
        inputs.append(args.rerank_model)
    corpus = dm.load_corpus(args.corpus) if args.corpus else None
    with open(args.out, "w", encoding="utf-8") as handle:
        for claim in claims:
            ranked = rt.retrieve(index, claim, k=args.k)
            if scorer is not None:
                if corpus is None:
                    raise _UsageError("--rerank-model requires --corpus for document text")
                depth = min(args.rerank_depth, len(ranked.entries))
                ranked = rt.rerank(ranked, claim, corpus, scorer, depth)
            record = {
                "id": claim.claim_id,
                "doc_ids": [doc_id for doc_id, _ in ranked.entries],
                "scores": [score for _, score in ranked.entries],
            }
            handle.write(json.dumps(record) + "\n")
    write_manifest(args.out, "retrieve", argv,
                   {"index": args.index, "claims": args.claims, "k": args.k,
                    "out": args.out, "rerank_model": args.rerank_model,
                    "rerank_depth": args.rerank_depth, "corpus": args.corpus},
                   inputs)
    _log(f"retrieved top-{args.k} for {len(claims)} claims -> {args.out}")
    return EXIT_OK


def _cmd_weakgen_ico(args, argv):
    corpus = dm.load_corpus(args.corpus)
    prompts = weak.load_ico_prompts(args.prompts)
    claims = weak.generate_ico_claims(prompts, first_claim_id=args.first_id)
    for claim in claims:
        dm.check_claim_against_corpus(claim, corpus)
    dm.save_claims(claims, args.out)
    write_manifest(args.out, "weakgen ico", argv,
                   {"prompts": args.prompts, "corpus": args.corpus,
                    "out": args.out, "first_id": args.first_id},
                   [args.prompts, args.corpus])
    _log(f"generated {len(claims)} claims from {len(prompts)} prompts -> {args.out}")
    return EXIT_OK


def _cmd_weakgen_titles(args, argv):
    corpus = dm.load_corpus(args.corpus)
    claims = weak.generate_title_claims(corpus, first_claim_id=args.first_id)
    dm.save_claims(claims, args.out)
    write_manifest(args.out, "weakgen titles", argv,
                   {"corpus": args.corpus, "out": args.out, "first_id": args.first_id},
                   [args.corpus])
    _log(f"generated {len(claims)} title claims from {len(corpus)} documents -> {args.out}")
    return EXIT_OK


def _cmd_mine_negatives(args, argv):
    index = rt.load_index(args.index)
    claims = dm.load_claims(args.claims, corpus=None)
    negatives = {}
    for claim in claims:
        child_seed = int(np.random.SeedSequence([args.seed, claim.claim_id]).generate_state(1)[0])
        negatives[claim.claim_id] = weak.mine_hard_negatives(
            claim, index, pool_size=args.pool, sample_size=args.sample, seed=child_seed
        )
    weak.save_mined_negatives(negatives, args.out)
    write_manifest(args.out, "mine-negatives", argv,
                   {"claims": args.claims, "index": args.index, "pool": args.pool,
                    "sample": args.sample, "seed": args.seed, "out": args.out},
                   [args.claims, args.index], seeds={"seed": args.seed})
    _log(f"mined negatives for {len(claims)} claims -> {args.out}")
    return EXIT_OK


def _cmd_train(args, argv):
    config = tr.parse_stage_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.few_shot is not None:
        spec = tr.FewShotSpec(n_examples=args.few_shot, seed=config.seed)
        datasets = []
        for i, dataset in enumerate(config.datasets, start=1):
            corpus = dm.load_corpus(dataset.corpus_path)
            claims = dm.load_claims(dataset.claims_path, corpus)
            subset = tr.sample_few_shot(claims, spec)
            subset_path = f"{config.checkpoint_out}.fewshot{args.few_shot}.ds{i}.jsonl"
            dm.save_claims(subset, subset_path)
            datasets.append(replace(dataset, claims_path=subset_path))
            _log(f"few-shot: sampled {len(subset)}/{len(claims)} claims -> {subset_path}")
        config = replace(config, datasets=tuple(datasets))
    result = tr.run_stage(config)
    inputs = [args.config]
    for dataset in config.datasets:
        inputs.extend([dataset.claims_path, dataset.corpus_path])
        if dataset.negatives_path:
            inputs.append(dataset.negatives_path)
    if config.dev_claims:
        inputs.extend([config.dev_claims, config.dev_corpus])
    if config.checkpoint_in:
        inputs.append(config.checkpoint_in)
    write_manifest(result.checkpoint_path, "train", argv,
                   {"config": args.config, "few_shot": args.few_shot, "seed": config.seed},
                   inputs, seeds={"seed": config.seed})
    status = "aborted (non-finite loss)" if result.aborted else "done"
    _log(f"training {status}; checkpoint -> {result.checkpoint_path}")
    return EXIT_VALIDATION if result.aborted else EXIT_OK


def _cmd_predict(args, argv):
    model, _, _ = load_checkpoint(args.model)
    corpus = dm.load_corpus(args.corpus)
    claims = dm.load_claims(args.claims, corpus)
    candidates: dict[int, list[int]] = {}
    inputs = [args.model, args.corpus, args.claims]
    if args.oracle:
        for claim in claims:
            candidates[claim.claim_id] = list(claim.cited_doc_ids)
    else:
        inputs.append(args.retrievals)
        with open(args.retrievals, encoding="utf-8") as handle:
            for line in handle:
                if line.strip():
                    record = json.loads(line)
                    candidates[int(record["id"])] = [int(d) for d in record["doc_ids"]]
    predictions = []
    for claim in claims:
        doc_ids = candidates.get(claim.claim_id)
        if doc_ids is None:
            _log(f"warning: no candidates for claim {claim.claim_id}; predicting nothing")
            continue
        docs = []
        for doc_id in doc_ids:
            if doc_id not in corpus:
                raise dm.DataValidationError(
                    f"claim {claim.claim_id}: candidate doc {doc_id} not in corpus"
                )
            docs.append(corpus[doc_id])
        predictions.extend(predict_batch(model, claim, docs, threshold=args.threshold))
    dm.save_predictions(predictions, args.out, claim_ids=[c.claim_id for c in claims])
    write_manifest(args.out, "predict", argv,
                   {"model": args.model, "corpus": args.corpus, "claims": args.claims,
                    "oracle": args.oracle, "retrievals": args.retrievals,
                    "threshold": args.threshold, "out": args.out},
                   inputs, seeds={"model_seed": model.seed})
    _log(f"predicted {len(predictions)} pairs for {len(claims)} claims -> {args.out}")
    return EXIT_OK


_VARIANT_CHOICES = ["all"] + [variant.value for variant in ev.MetricVariant]


def _cmd_evaluate(args, argv):
    corpus = dm.load_corpus(args.corpus)
    claims = dm.load_claims(args.gold, corpus)
    predictions = dm.load_predictions(args.preds)
    violations = dm.validate_predictions(predictions, corpus, claims)
    if violations:
        for violation in violations:
            _log(f"invalid prediction (claim {violation.claim_id}, doc {violation.doc_id}): "
                 f"{violation.message}")
        return EXIT_VALIDATION
    results, outcomes = ev.evaluate_all(predictions, claims,
                                        max_rationale_sentences=args.max_rationales)
    wanted = ([variant for variant in ev.MetricVariant] if args.variant == "all"
              else [ev.MetricVariant(args.variant)])
    report = {
        "variants": {variant.value: results[variant].to_dict() for variant in wanted},
        "pairs": [ev.outcome_to_dict(outcome) for outcome in outcomes],
    }
    with open(args.out, "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2, sort_keys=True)
        handle.write("\n")
    write_manifest(args.out, "evaluate", argv,
                   {"gold": args.gold, "corpus": args.corpus, "preds": args.preds,
                    "variant": args.variant, "max_rationales": args.max_rationales,
                    "out": args.out},
                   [args.gold, args.corpus, args.preds])
    for variant in wanted:
        result = results[variant]
        _log(f"{variant.value}: P={ev.percent_1dp(result.precision)} "
             f"R={ev.percent_1dp(result.recall)} F1={ev.percent_1dp(result.f1)}")
    return EXIT_OK


_SHORT_VARIANT = {
    ev.MetricVariant.SENTENCE_SELECTION_ONLY: "Sentence Selection-Only",
    ev.MetricVariant.SENTENCE_SELECTION_LABEL: "Sentence Selection+Label",
    ev.MetricVariant.ABSTRACT_LABEL_ONLY: "Abstract Label-Only",
    ev.MetricVariant.ABSTRACT_LABEL_RATIONALE: "Abstract Label+Rationale",
}


def _report_rows(report: dict, annotations):
    """(row name, outcome subset) pairs: overall plus category buckets."""
    outcomes = [ev.outcome_from_dict(record) for record in report["pairs"]]
    rows = [("overall", outcomes)]
    if annotations is not None:
        # validates annotated pairs against gold before any bucketing
        ev.by_category_outcomes(outcomes, annotations, ev.MetricVariant.ABSTRACT_LABEL_ONLY)
        annotation_by_pair = {(a.claim_id, a.doc_id): a for a in annotations}
        for category in ev.CategoryAnnotation.CATEGORIES:
            for wanted in (True, False):
                subset = [
                    outcome for outcome in outcomes
                    if (annotation := annotation_by_pair.get(outcome.pair)) is not None
                    and getattr(annotation, category) is wanted
                ]
                rows.append((f"{category}:{'yes' if wanted else 'no'}", subset))
    return rows


def _cmd_report(args, argv):
    with open(args.eval, encoding="utf-8") as handle:
        report = json.load(handle)
    annotations = (ev.load_category_annotations(args.by_category)
                   if args.by_category else None)
    rows = _report_rows(report, annotations)
    variants = list(_SHORT_VARIANT)

    if args.format == "json":
        payload = {"variants": report["variants"]}
        if annotations is not None:
            payload["by_category"] = {}
            for variant in variants:
                breakdown = ev.by_category_outcomes(
                    [ev.outcome_from_dict(r) for r in report["pairs"]], annotations, variant)
                payload["by_category"][variant.value] = {
                    category: {
                        "yes": buckets["yes"].to_dict(),
                        "no": buckets["no"].to_dict(),
                        "counts": buckets["counts"],
                    }
                    for category, buckets in breakdown.items()
                }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        table = []
        for name, outcomes in rows:
            cells = [name, str(len(outcomes))]
            for variant in variants:
                result = ev.score_outcomes(outcomes, variant)
                cells.extend([f"{ev.percent_1dp(result.precision):.1f}",
                              f"{ev.percent_1dp(result.recall):.1f}",
                              f"{ev.percent_1dp(result.f1):.1f}"])
            table.append(cells)
        header = ["subset", "pairs"]
        for variant in variants:
            label = _SHORT_VARIANT[variant]
            header.extend([f"{label} P", f"{label} R", f"{label} F1"])
        if args.format == "tsv":
            lines = ["\t".join(header)] + ["\t".join(row) for row in table]
            text = "\n".join(lines) + "\n"
        else:  # markdown-table
            lines = ["| " + " | ".join(header) + " |",
                     "|" + "|".join(["---"] * len(header)) + "|"]
            lines += ["| " + " | ".join(row) + " |" for row in table]
            text = "\n".join(lines) + "\n"

    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(text)
    write_manifest(args.out, "report", argv,
                   {"eval": args.eval, "by_category": args.by_category,
                    "format": args.format, "out": args.out},
                   [args.eval] + ([args.by_category] if args.by_category else []))
    _log(f"report ({args.format}) -> {args.out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="claimcheck",
                     description="Scientific claim verification pipeline")
    parser.add_argument("--version", action="version", version=f"claimcheck {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p_index = sub.add_parser("index", help="build retrieval artifacts")
    index_sub = p_index.add_subparsers(dest="index_command", metavar="ACTION")
    p_build = index_sub.add_parser("build", help="build a BM25 index over a corpus")
    p_build.add_argument("--corpus", required=True, help="corpus.jsonl to index")
    p_build.add_argument("--out", required=True, help="output index JSON file")
    p_build.add_argument("--k1", type=float, default=1.2, help="BM25 saturation (default 1.2)")
    p_build.add_argument("--b", type=float, default=0.75,
                         help="BM25 length normalization (default 0.75)")
    p_build.set_defaults(func=_cmd_index)

    p_retrieve = sub.add_parser("retrieve", help="rank corpus documents for each claim")
    p_retrieve.add_argument("--index", required=True, help="index file from `index build`")
    p_retrieve.add_argument("--claims", required=True, help="claims.jsonl with claim text")
    p_retrieve.add_argument("--k", type=int, required=True, help="number of documents per claim")
    p_retrieve.add_argument("--out", required=True, help="output JSONL of ranked doc ids")
    p_retrieve.add_argument("--rerank-model", default=None,
                            help="optional verifier checkpoint used as a cross-scorer")
    p_retrieve.add_argument("--rerank-depth", type=int, default=50,
                            help="how many top entries the reranker may reorder")
    p_retrieve.add_argument("--corpus", default=None,
                            help="corpus.jsonl (required with --rerank-model)")
    p_retrieve.set_defaults(func=_cmd_retrieve)

    p_weakgen = sub.add_parser("weakgen", help="generate weakly-labeled claims")
    weakgen_sub = p_weakgen.add_subparsers(dest="weakgen_command", metavar="SOURCE")
    p_ico = weakgen_sub.add_parser("ico", help="template claims from ICO prompts")
    p_ico.add_argument("--prompts", required=True, help="ICO prompts JSONL")
    p_ico.add_argument("--corpus", required=True, help="corpus the prompts reference")
    p_ico.add_argument("--out", required=True, help="output claims.jsonl")
    p_ico.add_argument("--first-id", type=int, default=0, help="first generated claim id")
    p_ico.set_defaults(func=_cmd_weakgen_ico)
    p_titles = weakgen_sub.add_parser("titles", help="treat claim-like titles as claims")
    p_titles.add_argument("--corpus", required=True, help="corpus whose titles to mine")
    p_titles.add_argument("--out", required=True, help="output claims.jsonl")
    p_titles.add_argument("--first-id", type=int, default=0, help="first generated claim id")
    p_titles.set_defaults(func=_cmd_weakgen_titles)

    p_mine = sub.add_parser("mine-negatives", help="sample hard-negative NEI docs per claim")
    p_mine.add_argument("--claims", required=True, help="claims.jsonl")
    p_mine.add_argument("--index", required=True, help="retrieval index")
    p_mine.add_argument("--pool", type=int, default=1000, help="retrieval pool size")
    p_mine.add_argument("--sample", type=int, default=20, help="negatives sampled per claim")
    p_mine.add_argument("--seed", type=int, required=True, help="sampling seed")
    p_mine.add_argument("--out", required=True, help="output JSONL {id, doc_ids}")
    p_mine.set_defaults(func=_cmd_mine_negatives)

    p_train = sub.add_parser("train", help="run one finetuning stage from a config file")
    p_train.add_argument("--config", required=True, help="flat key=value stage config")
    p_train.add_argument("--few-shot", type=int, default=None,
                         help="subsample each dataset to N claims before training")
    p_train.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_train.set_defaults(func=_cmd_train)

    p_predict = sub.add_parser("predict", help="predict labels and rationales")
    p_predict.add_argument("--model", required=True, help="model checkpoint")
    p_predict.add_argument("--corpus", required=True, help="corpus.jsonl")
    p_predict.add_argument("--claims", required=True, help="claims.jsonl")
    group = p_predict.add_mutually_exclusive_group(required=True)
    group.add_argument("--retrievals", default=None,
                       help="candidates from a `retrieve` output file (open setting)")
    group.add_argument("--oracle", action="store_true",
                       help="use each claim's cited docs as candidates (oracle setting)")
    p_predict.add_argument("--threshold", type=float, default=0.5,
                           help="rationale probability threshold (default 0.5)")
    p_predict.add_argument("--out", required=True, help="output predictions.jsonl")
    p_predict.set_defaults(func=_cmd_predict)

    p_eval = sub.add_parser("evaluate", help="score predictions against gold claims")
    p_eval.add_argument("--gold", required=True, help="gold claims.jsonl")
    p_eval.add_argument("--corpus", required=True, help="corpus.jsonl")
    p_eval.add_argument("--preds", required=True, help="predictions.jsonl")
    p_eval.add_argument("--variant", choices=_VARIANT_CHOICES, default="all",
                        help="which metric variant to report (default all)")
    p_eval.add_argument("--max-rationales", type=int, default=None,
                        help="optional cap on counted predicted rationale sentences")
    p_eval.add_argument("--out", required=True, help="output report.json")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_report = sub.add_parser("report", help="render an evaluation report")
    p_report.add_argument("--eval", required=True, help="report.json from `evaluate`")
    p_report.add_argument("--by-category", default=None,
                          help="category annotations JSONL for bucketed scores")
    p_report.add_argument("--format", choices=["json", "tsv", "markdown-table"],
                          default="markdown-table")
    p_report.add_argument("--out", required=True, help="output file")
    p_report.set_defaults(func=_cmd_report)
    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        _log(f"usage error: {exc}")
        return EXIT_USAGE
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, argv)
    except _UsageError as exc:
        _log(f"usage error: {exc}")
        return EXIT_USAGE
    except ClaimCheckError as exc:
        _log(f"error: {exc}")
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        _log(f"I/O error: {exc}")
        return EXIT_IO
    except OSError as exc:
        _log(f"I/O error: {exc}")
        return EXIT_IO
    except json.JSONDecodeError as exc:
        _log(f"error: malformed JSON input: {exc}")
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
