from .data_model import Dataset, ActiveSet, SelectionResult
from .data_model import standardize, load_csv, write_csv
from .errors import CovScreenError, DataError, ConstantColumnError, RankDeficientError, ScreeningError, \
    ResampleError, ConfigError
from .cov_block import ThresholdEdges, BlockPartition
from .cov_block import default_delta, threshold_edges, partition_blocks, partition_dataset
from .screening import ScreenStats
from .screening import semi_partial_oracle, semi_partial_all, cis_screen, sis_stats, holp_stats, min_model_size
from .screening import CisScreener, SisScreener, HolpScreener, create_screener
from .regression import LassoFit, lasso_cd, adaptive_lasso, lasso_select, kkt_residual
from .icis import IcisParams, FrequencyTable, FdrCurve
from .icis import icis_single, icis_resample, select_by_frequency, permutation_fdr, run_icis
from .simgen import ModelSpec, SimTruth
from .simgen import gen_block_ar1, gen_model_e, generate
from .bench import ExperimentConfig, ExperimentReport, ExperimentRunner
from .bench import metrics_fp_fn, run_experiment, emit_report, preset_config
from .version import VERSION_STRING
