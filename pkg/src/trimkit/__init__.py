"""trimkit: distill inferable function words, reconstruct them cheaply,
and measure the round trip."""

from .errors import (ConfigError, CorpusError, GenerationError, LexiconError,
                     ScorerError, SearchSpaceError, TemplateError, TrimkitError)
from .textcore import (Corpus, Lexicon, Paragraph, Token, TokenSeq,
                       count_lexicon_terms, detokenize, load_corpus,
                       load_lexicon, tokenize)
from .lmscore import (HttpScorer, LineStreamScorer, MaskedQuery, NGramModel,
                      NGramScorer, ScoreDistribution, delta_p, load_model,
                      masked_predict, save_model, sequence_logprob, train_ngram)
from .inferability import (InferabilityEntry, InferabilityReport, level_set,
                           rank_terms, read_report, write_report)
from .distill import (DistilledPair, TermSet, build_prompt, distill_seq,
                      make_pairs, read_pairs, reinsert_removed,
                      saved_tokens_pct, saved_tokens_pct_words_only, write_pairs)
from .reconstruct import (Reconstruction, ReconstructionConfig,
                          count_insertion_patterns, exhaustive_reconstruct,
                          reconstruct)
from .metrics import (AlignmentOp, HttpEmbedder, MetricReport, NwScoring,
                      RougeScores, TfidfEmbedder, ThetaCounts, bleu,
                      cosine_similarity, evaluate_pair, meteor_lite, nw_align,
                      rouge, summarize, theta_metrics, theta_ops,
                      write_metrics_csv)
from .costmodel import BreakEven, CostParams, UsageProfile, break_even, load_pricing, min_gain
from .pipeline import (HttpGenerationClient, LevelSweepRow,
                       SimulatedGenerationClient, TrimResult,
                       exploratory_count, load_config, run_level_sweep,
                       run_offline_eval, run_trim, write_sweep_csv)

__version__ = "0.1.0"
