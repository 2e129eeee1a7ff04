"""Optimal-scaling embedding and large-scale clustering of mixed data."""

__version__ = "0.1.0"

from .dataset import (AttributeSchema, MixedDataset, clip_upper_quantile,
                      load_csv, standardize, write_csv)
from .indicator import (IndicatorMatrix, apply_block, apply_block_transpose,
                        build_indicator)
from .homals import (HomalsConfig, HomalsSolution, center_and_orthonormalize,
                     eigen_check, fit, loss)
from .embedding import (EmbeddedDataset, HomogeneityAnalysis, embed,
                        score_new)
from .clustering import (BirchClusterer, ClaraClusterer, ClusteringResult,
                         MiniBatchKMeansClusterer, birch, clara,
                         minibatch_kmeans, pam_full)
from .validation import (ClusterProfile, ValidationReport,
                         adjusted_rand_index, calinski_harabasz, profile,
                         sweep_k)
from .synthgen import SynthConfig, generate

__all__ = [
    "AttributeSchema", "MixedDataset", "clip_upper_quantile", "load_csv",
    "standardize", "write_csv",
    "IndicatorMatrix", "apply_block", "apply_block_transpose",
    "build_indicator",
    "HomalsConfig", "HomalsSolution", "center_and_orthonormalize",
    "eigen_check", "fit", "loss",
    "EmbeddedDataset", "HomogeneityAnalysis", "embed", "score_new",
    "BirchClusterer", "ClaraClusterer", "ClusteringResult",
    "MiniBatchKMeansClusterer", "birch", "clara", "minibatch_kmeans",
    "pam_full",
    "ClusterProfile", "ValidationReport", "adjusted_rand_index",
    "calinski_harabasz", "profile", "sweep_k",
    "SynthConfig", "generate",
]
