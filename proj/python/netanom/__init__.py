"""Network anomaly detection toolkit.

Thin re-export of the native module: classifiers trained from scratch,
adversarial training-set generation, a two-level stacked ensemble, streaming
edge scores, and unsupervised baselines.
"""

from ._core import (
    Classifier,
    StackedEnsemble,
    auc,
    f1_per_class,
    feature_mean_shift,
    isolation_forest_score,
    lda_fgsm,
    lof_score,
    midas_scores,
    standardize,
    synth_dataset,
    synth_edge_stream,
)

__all__ = [
    "Classifier",
    "StackedEnsemble",
    "auc",
    "f1_per_class",
    "feature_mean_shift",
    "isolation_forest_score",
    "lda_fgsm",
    "lof_score",
    "midas_scores",
    "standardize",
    "synth_dataset",
    "synth_edge_stream",
]
