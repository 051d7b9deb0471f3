"""Flowsheet-driven distributed process monitoring.

Decompose a plant digraph into monitoring blocks, fit a full-PCA model per
block, fuse the block T^2 statistics into one plant-level fault index and
inspect clipped contribution maps.
"""
from .decompose import (
    DecompositionConfig,
    MonitoringBlock,
    blocks_from_partition,
    control_refine,
    decompose,
    mar,
    mar_decompose,
    merge_pass,
)
from .errors import BlockmonError, ComputationError, FlowsheetError, InputError
from .evaluation import BlockMonitor, Dataset, benchmark_run, far, fdr, load_dataset, load_matrix
from .fdist import f_cdf, f_quantile
from .flowsheet import (
    FlowsheetGraph,
    initial_subgraphs,
    load_flowsheet,
    load_tep_flowsheet,
    measurement_count,
    parse_flowsheet,
)
from .fusion import bic, calibrate_threshold, confirm_alarms, likelihoods, posterior
from .pca import PcaModel, contributions, fit_full_pca, fit_standardizer, hotelling_t2, t2_limit

__version__ = "0.1.0"
