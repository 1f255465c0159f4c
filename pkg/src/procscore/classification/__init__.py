from procscore.classification.baselines import ZeroRule, keyword_rule, zero_rule_fit, zero_rule_predict
from procscore.classification.features import (
    DEFAULT_SCHEMA,
    CommitChain,
    FeatureSchema,
    build_chains,
    featurize,
)
from procscore.classification.hmm import DiscreteHMM, fit_hmm_supervised, hmm_forward, hmm_viterbi
from procscore.classification.jcd import JCDModel, fit_jcd, predict_jcd
from procscore.classification.labels import ACTIVITIES, Activity
from procscore.classification.metrics import ClassifierMetrics, cohen_kappa, evaluate

__all__ = [
    "ACTIVITIES", "Activity", "ClassifierMetrics", "CommitChain", "DEFAULT_SCHEMA", "DiscreteHMM",
    "FeatureSchema", "JCDModel", "ZeroRule", "build_chains", "cohen_kappa", "evaluate", "featurize",
    "fit_hmm_supervised", "fit_jcd", "hmm_forward", "hmm_viterbi", "keyword_rule", "predict_jcd",
    "zero_rule_fit", "zero_rule_predict",
]
