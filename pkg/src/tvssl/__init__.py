"""Kernel semi-supervised classifiers with graph total-variation, Cheeger
and Laplacian regularization."""

from .binary import (
    BinaryModel,
    LabeledSet,
    cheeger_rls_train,
    cheeger_svm_train,
    lap_rls_train,
    lap_svm_train,
    predict_binary,
    rls_train,
    svm_train,
    transductive_labels,
    tv_rls_train,
    tv_svm_train,
)
from .data_io import Dataset, SplitSpec, load_csv, make_split, make_two_moons, save_csv
from .graph import (
    SimilarityGraph,
    build_knn_graph,
    dirichlet_energy,
    graph_tv,
    laplacian_apply,
    load_edge_list,
    save_edge_list,
)
from .kernel import KernelMatrix, kernel_expand, median_bandwidth, rbf_gram
from .multiclass import (
    MultiLabelSet,
    MulticlassModel,
    cheeger_rls_mc_train,
    cheeger_svm_mc_train,
    lap_rls_mc_train,
    lap_svm_mc_train,
    predict_multiclass,
    transductive_classes,
    tv_rls_mc_train,
    tv_svm_mc_train,
)
from .opt_core import (
    DualSolution,
    HyperParams,
    ProxTrace,
    normalize_ball_zero_mean,
    project_simplex,
    qp_box_eq,
    solve_spd,
    tv_prox,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryModel",
    "Dataset",
    "DualSolution",
    "HyperParams",
    "KernelMatrix",
    "LabeledSet",
    "MultiLabelSet",
    "MulticlassModel",
    "ProxTrace",
    "SimilarityGraph",
    "SplitSpec",
    "build_knn_graph",
    "cheeger_rls_mc_train",
    "cheeger_rls_train",
    "cheeger_svm_mc_train",
    "cheeger_svm_train",
    "dirichlet_energy",
    "graph_tv",
    "kernel_expand",
    "lap_rls_mc_train",
    "lap_rls_train",
    "lap_svm_mc_train",
    "lap_svm_train",
    "laplacian_apply",
    "load_csv",
    "load_edge_list",
    "make_split",
    "make_two_moons",
    "median_bandwidth",
    "normalize_ball_zero_mean",
    "predict_binary",
    "predict_multiclass",
    "project_simplex",
    "qp_box_eq",
    "rbf_gram",
    "rls_train",
    "save_csv",
    "save_edge_list",
    "solve_spd",
    "svm_train",
    "transductive_classes",
    "transductive_labels",
    "tv_prox",
    "tv_rls_mc_train",
    "tv_rls_train",
    "tv_svm_mc_train",
    "tv_svm_train",
]
