"""Objective evaluation and analysis tools.

Corpus BLEU, six-feature acoustic expressivity descriptors, standardized
Euclidean distances, forward stepwise LDA with Wilks' lambda, one-way ANOVA
and Pearson correlation, plus a text/figure report renderer.
"""

from prosody_units.evaluation.bleu import TokenizedCorpus, bleu, tokenize
from prosody_units.evaluation.features import (
    FEATURE_NAMES,
    FeatureVector,
    extract_features,
    read_feature_csv,
    write_feature_csv,
)
from prosody_units.evaluation.slda import SldaResult, SldaStep, forward_slda
from prosody_units.evaluation.stats import (
    anova_oneway,
    f_sf,
    pearson,
    reg_inc_beta,
    standardized_euclidean,
    t_sf_two_sided,
)

__all__ = [
    "FEATURE_NAMES",
    "FeatureVector",
    "SldaResult",
    "SldaStep",
    "TokenizedCorpus",
    "anova_oneway",
    "bleu",
    "extract_features",
    "f_sf",
    "forward_slda",
    "pearson",
    "read_feature_csv",
    "reg_inc_beta",
    "standardized_euclidean",
    "t_sf_two_sided",
    "tokenize",
    "write_feature_csv",
]
