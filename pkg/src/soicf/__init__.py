"""Sparse, valid counterfactual explanations for univariate time-series classifiers.

A customised NSGA-II searches over subsequence-of-interest chromosomes; the
candidate values on each SoI come from an AR model of the difference between a
classifier-space reference and the target.
"""
from .classifier import (
    Classifier,
    ExternalClassifier,
    KNNSoftmaxClassifier,
    ProtocolError,
    TransportError,
    fit_knn_softmax,
    predict,
)
from .evolution import (
    Candidate,
    Chromosome,
    ExplainResult,
    FrontPartition,
    RunConfig,
    crossover,
    expand,
    fast_nondominated_sort,
    init_population,
    mutate,
    run_explain,
    tournament_select,
)
from .metrics import MetricReport, diversity, evaluate_run, l1_proximity, l2_proximity, sparsity, validity
from .objectives import f1, f2
from .reference import NoReferenceError, ReferenceSet, js_distance, select_references
from .soigen import ARModel, fit_ar, generate, predict_insample
from .timeseries import (
    Dataset,
    UCRFormatError,
    cbf_train_test,
    generate_cbf,
    load_ucr,
    parse_ucr,
    serialize_ucr,
    write_ucr,
)

__version__ = "0.1.0"
