"""Biased-voter ensembles, evaluation and misclassification triage."""

from ._core import (
    BiasvoteError,
    Dataset,
    GoldLabels,
    LabelTriple,
    Record,
    TaskAEnsemble,
    TaskBModel,
    adjust_splits,
    cohen_kappa,
    combine_predictions,
    cross_eval,
    decode_class,
    emr,
    encode_class,
    load_dataset,
    load_task_a,
    load_task_b,
    majority_vote,
    preprocess,
    prf,
    sample_size,
    save_hateval_tsv,
    session_report,
    token_rate_table,
    train_task_a,
    train_task_b,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
