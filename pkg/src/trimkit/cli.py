"""Command-line entry point.

One executable, one subcommand per pipeline stage, files as the
interchange between stages. Exit codes: 0 success, 1 usage error,
2 runtime error. Diagnostics go to stderr; data goes to the named
output files or stdout. The ``eval`` and ``sweep`` report paths also
render a PNG figure next to the CSV unless ``--no-figure`` is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import costmodel, distill, inferability, lmscore, metrics, pipeline, textcore
from .errors import TrimkitError
from .reconstruct import ReconstructionConfig, reconstruct as beam_reconstruct

logger = logging.getLogger("trimkit")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _cfg(args, config, attr, key=None):
    value = getattr(args, attr, None)
    return value if value is not None else config[key or attr]


def _resolve_workers(args, config) -> int:
    workers = _cfg(args, config, "workers")
    return int(workers) if workers else (os.cpu_count() or 1)


def _load_lm(path) -> lmscore.NGramModel:
    if path is None:
        raise _UsageError("an n-gram model is required: pass --lm or set lm_path in the config")
    return lmscore.load_model(path)


def _resolve_lexicon(args, config) -> textcore.Lexicon:
    """Removal set from --report/--level when given, else from --lexicon."""
    report_path = _cfg(args, config, "report")
    if report_path:
        report = inferability.read_report(report_path)
        level = int(_cfg(args, config, "level"))
        step = int(_cfg(args, config, "step"))
        return inferability.level_set(report, level, step)
    return textcore.load_lexicon(_cfg(args, config, "lexicon"))


def _recon_cfg(args, config, model) -> ReconstructionConfig:
    return ReconstructionConfig(
        beam_width=int(_cfg(args, config, "beam_width")),
        max_consecutive_insertions=int(_cfg(args, config, "max_consecutive_insertions")),
        insertion_penalty=float(_cfg(args, config, "insertion_penalty")),
        model=model,
    )


def _figure_path(out: str | Path) -> Path:
    return Path(out).with_suffix(".png")


def _add_corpus_flags(p: _Parser):
    p.add_argument("--corpus", help="corpus file (default: config 'corpus')")
    p.add_argument("--format", choices=("plain", "jsonl"), dest="corpus_format",
                   help="corpus format (default: %s)" % pipeline.DEFAULT_CONFIG["corpus_format"])


def _add_termset_flags(p: _Parser):
    p.add_argument("--lexicon", help="builtin lexicon name or word-per-line file "
                                     "(default: extended)")
    p.add_argument("--report", help="inferability report CSV; overrides --lexicon")
    p.add_argument("--level", type=int, help="level within --report (default: 5)")
    p.add_argument("--step", type=int, help="words per level (default: 5)")


def _add_recon_flags(p: _Parser):
    p.add_argument("--lm", help="trained n-gram model file")
    p.add_argument("--beam-width", type=int, dest="beam_width",
                   help="beam width (default: 8)")
    p.add_argument("--max-consecutive", type=int, dest="max_consecutive_insertions",
                   help="max consecutive insertions per gap (default: 2)")
    p.add_argument("--insertion-penalty", type=float, dest="insertion_penalty",
                   help="log-space penalty per inserted token (default: 0.5)")


def _load_corpus(args, config) -> textcore.Corpus:
    path = _cfg(args, config, "corpus")
    if not path:
        raise _UsageError("a corpus is required: pass --corpus or set 'corpus' in the config")
    fmt = _cfg(args, config, "corpus_format")
    return textcore.load_corpus(path, format=fmt)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_train_lm(args, config) -> int:
    corpus = _load_corpus(args, config)
    model = lmscore.train_ngram(corpus,
                                order=int(_cfg(args, config, "order")),
                                smoothing_k=float(_cfg(args, config, "smoothing_k")))
    lmscore.save_model(model, args.out)
    logger.info("trained order-%d model on %d fragments (%d words) -> %s",
                model.order, len(corpus), len(model.vocab), args.out)
    return EXIT_OK


def _cmd_rank(args, config) -> int:
    corpus = _load_corpus(args, config)
    wordset = textcore.load_lexicon(_cfg(args, config, "lexicon"))
    if args.scorer_url:
        scorer = lmscore.HttpScorer(args.scorer_url)
    else:
        scorer = lmscore.NGramScorer(_load_lm(args.lm or config["lm_path"]))
    report = inferability.rank_terms(corpus, wordset, scorer,
                                     window=args.window,
                                     per_fragment_average=args.per_fragment_average)
    inferability.write_report(report, args.out)
    logger.info("ranked %d words (%d never seen) -> %s",
                len(report.entries), len(report.skipped), args.out)
    return EXIT_OK


def _cmd_distill(args, config) -> int:
    corpus = _load_corpus(args, config)
    lexicon = _resolve_lexicon(args, config)
    s = distill.TermSet(lexicon, source=lexicon.name)
    pairs = list(distill.make_pairs(corpus, s))
    distill.write_pairs(pairs, args.out)
    nonzero = [distill.saved_tokens_pct(p) for p in pairs if len(p.original)]
    mean_saved = sum(nonzero) / len(nonzero) if nonzero else 0.0
    logger.info("distilled %d fragments with %d-word set, mean saved %.2f%% -> %s",
                len(pairs), len(lexicon), mean_saved, args.out)
    return EXIT_OK


def _cmd_reconstruct(args, config) -> int:
    pairs = distill.read_pairs(args.pairs)
    lexicon = _resolve_lexicon(args, config)
    model = _load_lm(args.lm or config["lm_path"])
    cfg = _recon_cfg(args, config, model)
    s = distill.TermSet(lexicon, source=lexicon.name)
    workers = _resolve_workers(args, config)

    def one(pair):
        rec = beam_reconstruct(pair.distilled, s, cfg)
        record = distill.pair_record(pair)
        record["reconstructed"] = textcore.detokenize(rec.output)
        record["inserted_positions"] = list(rec.inserted_positions)
        record["score"] = rec.score
        return record

    from concurrent.futures import ThreadPoolExecutor
    if workers <= 1:
        records = [one(p) for p in pairs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, pairs))
    with open(args.out, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    logger.info("reconstructed %d pairs -> %s", len(records), args.out)
    return EXIT_OK


def _cmd_eval(args, config) -> int:
    pairs = distill.read_pairs(args.pairs)
    lexicon = _resolve_lexicon(args, config)
    model = _load_lm(args.lm or config["lm_path"])
    cfg = _recon_cfg(args, config, model)
    reports, summary = pipeline.run_offline_eval(
        pairs, cfg, lexicon, model,
        reconstructor=args.reconstructor,
        workers=_resolve_workers(args, config))
    metrics.write_metrics_csv(reports, args.out)
    for column in metrics.METRIC_COLUMNS:
        mean, std = summary[column]
        print(f"{column}: {mean:.2f}({std:.2f})", file=sys.stderr)
    if not args.no_figure:
        from . import figures
        figure = figures.render_eval_figure(summary, _figure_path(args.out))
        logger.info("figure -> %s", figure)
    logger.info("evaluated %d pairs -> %s", len(reports), args.out)
    return EXIT_OK


def _cmd_sweep(args, config) -> int:
    corpus = _load_corpus(args, config)
    report = inferability.read_report(args.report)
    model = _load_lm(args.lm or config["lm_path"])
    cfg = _recon_cfg(args, config, model)
    rows = pipeline.run_level_sweep(corpus, report,
                                    max_level=args.levels,
                                    step=int(_cfg(args, config, "step")),
                                    recon_cfg=cfg, lm=model,
                                    workers=_resolve_workers(args, config),
                                    reconstructor=args.reconstructor)
    pipeline.write_sweep_csv(rows, args.out)
    if not args.no_figure:
        from . import figures
        figure = figures.render_sweep_figure(rows, _figure_path(args.out))
        logger.info("figure -> %s", figure)
    logger.info("swept %d levels -> %s", len(rows), args.out)
    return EXIT_OK


def _profile_from_results(path: str, extra_input: float) -> costmodel.UsageProfile:
    """Average token counts out of a metrics CSV (summary rows excluded)."""
    originals, distilled = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["id"] in ("mean", "std"):
                continue
            originals.append(float(row["original_tokens"]))
            distilled.append(float(row["distilled_tokens"]))
    if not originals:
        raise TrimkitError(f"{path}: no per-pair rows")
    mean_orig = sum(originals) / len(originals)
    mean_dist = sum(distilled) / len(distilled)
    return costmodel.UsageProfile(extra_input=extra_input,
                                  gained_output=mean_orig - mean_dist,
                                  recon_input=mean_dist,
                                  recon_output=mean_orig)


def _cmd_cost(args, config) -> int:
    params = costmodel.load_pricing(args.pricing or config["pricing"])
    token_factor = float(_cfg(args, config, "token_factor"))
    if args.results:
        if args.extra_input is None:
            raise _UsageError("--extra-input is required with --results "
                              "(prompt overhead is not in the CSV)")
        profile = _profile_from_results(args.results, args.extra_input)
    else:
        if args.extra_input is None or args.gain is None:
            raise _UsageError("either --results or both --extra-input and --gain are required")
        profile = costmodel.UsageProfile(extra_input=args.extra_input,
                                         gained_output=args.gain,
                                         recon_input=args.recon_input,
                                         recon_output=args.recon_output)
    profile = profile.scaled(token_factor)
    verdict = costmodel.break_even(params, profile)
    need = costmodel.min_gain(params, profile.extra_input,
                              profile.recon_input, profile.recon_output)
    print(f"saves={'true' if verdict.saves else 'false'}")
    print(f"margin={verdict.margin:.10g} {verdict.currency}")
    print(f"lhs={verdict.lhs:.10g} rhs={verdict.rhs:.10g}")
    print(f"min_gain={need:.10g} tokens (profile gain: {profile.gained_output:g})")
    return EXIT_OK


def _cmd_trim(args, config) -> int:
    lexicon = _resolve_lexicon(args, config)
    s = distill.TermSet(lexicon, source=lexicon.name)
    endpoint = dict(config["endpoint"])
    if args.endpoint:
        endpoint["base_url"] = args.endpoint

    if args.simulate_answer_file:
        answer = Path(args.simulate_answer_file).read_text(encoding="utf-8")
        client = pipeline.SimulatedGenerationClient(answer, s,
                                                    temperature=endpoint["temperature"])
    elif endpoint["base_url"]:
        client = pipeline.HttpGenerationClient(
            base_url=endpoint["base_url"],
            auth_header=endpoint["auth_header"],
            auth_value=endpoint["auth_value"],
            timeout=float(endpoint["timeout"]),
            retries=int(endpoint["retries"]),
            temperature=float(endpoint["temperature"]),
            max_concurrency=int(endpoint["concurrency"]))
    else:
        raise _UsageError("no generation endpoint: pass --endpoint, configure one, "
                          "or use --simulate-answer-file")

    model = None
    if args.lm or config["lm_path"]:
        model = _load_lm(args.lm or config["lm_path"])
    cfg = _recon_cfg(args, config, model) if model is not None else None

    result = pipeline.run_trim(args.question, s, client, recon_cfg=cfg, lm=model)
    payload = {
        "distilled": result.distilled,
        "reconstructed": result.reconstructed,
        "usage": {"input_tokens": result.usage.input_tokens,
                  "output_tokens": result.usage.output_tokens},
        "lexicon_count": result.lexicon_count,
        "perplexity": result.perplexity,
    }
    if result.recon_error:
        payload["recon_error"] = result.recon_error
    if args.pricing or config["pricing"]:
        params = costmodel.load_pricing(args.pricing or config["pricing"])
        plain_tokens = len(textcore.tokenize(
            distill.build_prompt(s, args.question, template="plain")))
        profile = pipeline.usage_profile_from_result(
            result, plain_tokens, token_factor=float(_cfg(args, config, "token_factor")))
        verdict = costmodel.break_even(params, profile)
        payload["cost"] = {"saves": verdict.saves, "margin": verdict.margin,
                           "lhs": verdict.lhs, "rhs": verdict.rhs}
    print(json.dumps(payload, indent=2, ensure_ascii=False))
    return EXIT_OK


def _cmd_count(args, config) -> int:
    corpus = _load_corpus(args, config)
    lexicon = textcore.load_lexicon(_cfg(args, config, "lexicon"))
    mean, std = pipeline.exploratory_count(corpus, lexicon)
    print(f"mean={mean:.4f} std={std:.4f} n={len(corpus)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="trimkit",
                     description="Function-word distillation, reconstruction, "
                                 "and round-trip evaluation.")
    parser.add_argument("--config", help="JSON config file "
                                         f"(default: ${pipeline.ENV_CONFIG} if set)")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("train-lm", help="train and save the n-gram scorer",
                       description="Train the add-k n-gram model used for masked "
                                   "scoring, reconstruction, and perplexity.")
    _add_corpus_flags(p)
    p.add_argument("--order", type=int, help="n-gram order (default: 3)")
    p.add_argument("--smoothing-k", type=float, dest="smoothing_k",
                   help="add-k smoothing constant (default: 0.01)")
    p.add_argument("--out", required=True, help="model output file")
    p.set_defaults(handler=_cmd_train_lm)

    p = sub.add_parser("rank", help="rank words by contextual inferability",
                       description="Score every occurrence of every candidate word "
                                   "and write the sorted report CSV.")
    _add_corpus_flags(p)
    p.add_argument("--lexicon", help="candidate word set (default: extended)")
    p.add_argument("--lm", help="trained n-gram model file")
    p.add_argument("--scorer-url", help="external masked-scorer HTTP endpoint")
    p.add_argument("--window", type=int, default=inferability.DEFAULT_WINDOW,
                   help="context window radius in tokens (default: %(default)s)")
    p.add_argument("--per-fragment-average", action="store_true",
                   help="average within fragments before averaging across them")
    p.add_argument("--out", required=True, help="report CSV output")
    p.set_defaults(handler=_cmd_rank)

    p = sub.add_parser("distill", help="remove the term set from a corpus",
                       description="Write (original, distilled) pairs as JSONL.")
    _add_corpus_flags(p)
    _add_termset_flags(p)
    p.add_argument("--out", required=True, help="pairs JSONL output")
    p.set_defaults(handler=_cmd_distill)

    p = sub.add_parser("reconstruct", help="beam-reconstruct distilled pairs",
                       description="Add reconstructed text, inserted positions, and "
                                   "scores to a pairs JSONL file.")
    p.add_argument("--pairs", required=True, help="pairs JSONL from the distill stage")
    _add_termset_flags(p)
    _add_recon_flags(p)
    p.add_argument("--workers", type=int, help="parallel workers (default: all cores)")
    p.add_argument("--out", required=True, help="augmented JSONL output")
    p.set_defaults(handler=_cmd_reconstruct)

    p = sub.add_parser("eval", help="evaluate reconstruction quality",
                       description="Reconstruct and score every pair; write per-pair "
                                   "CSV rows plus a mean/std summary block and a "
                                   "summary figure.")
    p.add_argument("--pairs", required=True, help="pairs JSONL from the distill stage")
    _add_termset_flags(p)
    _add_recon_flags(p)
    p.add_argument("--reconstructor", choices=("beam", "identity", "oracle"),
                   default="beam", help="reconstruction strategy (default: %(default)s)")
    p.add_argument("--workers", type=int, help="parallel workers (default: all cores)")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p.add_argument("--out", required=True, help="results CSV output")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("sweep", help="quality vs. savings across level sets",
                       description="Distill, reconstruct, and evaluate the corpus at "
                                   "every removal-set size; write the per-level CSV "
                                   "and the degradation figure.")
    _add_corpus_flags(p)
    p.add_argument("--report", required=True, help="inferability report CSV")
    p.add_argument("--levels", type=int, required=True, help="number of levels to sweep")
    p.add_argument("--step", type=int, help="words per level (default: 5)")
    _add_recon_flags(p)
    p.add_argument("--reconstructor", choices=("beam", "identity", "oracle"),
                   default="beam",
                   help="reconstruction strategy; 'oracle' is the self-test "
                        "mode (default: %(default)s)")
    p.add_argument("--workers", type=int, help="parallel workers (default: all cores)")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p.add_argument("--out", required=True, help="sweep CSV output")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("cost", help="break-even verdict for a pricing profile",
                       description="Evaluate the saving inequality from explicit "
                                   "token counts or from an eval results CSV.")
    p.add_argument("--pricing", help="pricing JSON file")
    p.add_argument("--extra-input", type=float, dest="extra_input",
                   help="instruction-prompt token overhead")
    p.add_argument("--gain", type=float, help="output tokens saved per query")
    p.add_argument("--recon-input", type=float, dest="recon_input", default=0.0,
                   help="reconstructor input tokens (default: %(default)s)")
    p.add_argument("--recon-output", type=float, dest="recon_output", default=0.0,
                   help="reconstructor output tokens (default: %(default)s)")
    p.add_argument("--results", help="eval results CSV to average a profile from")
    p.add_argument("--token-factor", type=float, dest="token_factor",
                   help="words-to-billing-tokens factor (default: 1.0)")
    p.set_defaults(handler=_cmd_cost)

    p = sub.add_parser("trim", help="distilled generation plus reconstruction",
                       description="Build the distilled-instruction prompt, query the "
                                   "generation endpoint (or the offline simulator), "
                                   "and reconstruct the answer.")
    p.add_argument("--question", required=True, help="the knowledge question to ask")
    _add_termset_flags(p)
    _add_recon_flags(p)
    p.add_argument("--endpoint", help="generation endpoint base URL")
    p.add_argument("--simulate-answer-file",
                   help="run offline: distill this canned answer instead of "
                        "calling an endpoint")
    p.add_argument("--pricing", help="pricing JSON for a per-query cost verdict")
    p.set_defaults(handler=_cmd_trim)

    p = sub.add_parser("count", help="lexicon-term counts per fragment",
                       description="Mean and std of lexicon-term counts over the "
                                   "corpus fragments.")
    _add_corpus_flags(p)
    p.add_argument("--lexicon", help="lexicon to count (default: extended)")
    p.set_defaults(handler=_cmd_count)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(stream=sys.stderr,
                        level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = pipeline.load_config(args.config)
        return args.handler(args, config)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except TrimkitError as exc:
        print(f"trimkit: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"trimkit: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
