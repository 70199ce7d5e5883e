from .metrics import (
    K_VALUES,
    RankingReport,
    ensemble_score,
    evaluate_users,
    ndcg_at_k,
    recall_at_k,
)
from .quality import (
    BASELINE_FILE,
    EVAL_FLOOR,
    FullEvalBaseline,
    QualitySnapshot,
    compute_quality,
    eval_item,
    eval_user,
    item_scores,
    quality_q,
)

__all__ = [
    "K_VALUES", "RankingReport", "ensemble_score", "evaluate_users", "ndcg_at_k", "recall_at_k",
    "BASELINE_FILE", "EVAL_FLOOR", "FullEvalBaseline", "QualitySnapshot", "compute_quality",
    "eval_item", "eval_user", "item_scores", "quality_q",
]
