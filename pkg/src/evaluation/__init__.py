"""
Evaluation Module

Metric folds, the per-model scoring protocols (perplexity, fill-in-the-blank,
compatibility AUC), personalized CTR/KR metrics and the EvalReport.
"""
from .metrics import (
    MATCH_SCHEMAS, RankCutoffs, attribute_match_rate, item_diversity, perplexity_from_log_likelihoods,
    personalization_rate, random_base_rate, rank_of, recall_at, roc_auc, validity_rate,
)
from .protocols import (
    CompatibilityResult, FITBResult, PerplexityResult, compatibility_auc, corrupt, evaluation_examples, fitb,
    fitb_positions, item_log_likelihoods, outfit_scores, perplexity,
)
from .personalized import CTR, KR, PersonalizedResult, personalized_metrics, recommend, references_for
from .validity import ValidityResult, generated_validity, sample_outfits
from .report import EvalReport, print_reports, read_reports, report_table, write_reports

__all__ = [
    "MATCH_SCHEMAS", "RankCutoffs", "attribute_match_rate", "item_diversity", "perplexity_from_log_likelihoods",
    "personalization_rate", "random_base_rate", "rank_of", "recall_at", "roc_auc", "validity_rate",
    "CompatibilityResult", "FITBResult", "PerplexityResult", "compatibility_auc", "corrupt",
    "evaluation_examples", "fitb", "fitb_positions", "item_log_likelihoods", "outfit_scores", "perplexity",
    "CTR", "KR", "PersonalizedResult", "personalized_metrics", "recommend", "references_for",
    "ValidityResult", "generated_validity", "sample_outfits",
    "EvalReport", "print_reports", "read_reports", "report_table", "write_reports",
]
