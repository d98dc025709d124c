"""Online multi-source transfer learning over seasonal categorical streams.

Pre-trained per-season Naive Bayes models are combined with an online target
model under adaptive or static weighting, evaluated prequentially, and
compared by AUROC with DeLong's paired test. A seeded synthetic generator
provides multi-season benchmarks with controllable seasonal drift.
"""

from .data_model import (
    DataError,
    Feature,
    Instance,
    Schema,
    SchemaError,
    SeasonDataset,
    load_schema,
    load_season_csv,
    split_by_season,
    validate_dataset,
    validate_instance,
    write_schema,
    write_season_csv,
)
from .ensemble import (
    EnsembleState,
    MsawConfig,
    WeightStrategy,
    combine,
    msaw_step,
    penalty_factor,
    run_stream,
    static_weights,
    write_weight_trajectory,
)
from .evaluation import (
    EvalRecord,
    MetricReport,
    auroc,
    compare_methods,
    delong_test,
    evaluate_static,
    write_metrics_csv,
    write_metrics_json,
    write_records_csv,
)
from .experiment import (
    ConfigError,
    ExperimentConfig,
    MethodRun,
    load_config,
    load_experiment_data,
    run_methods,
    season_reports,
)
from .naive_bayes import FeatureStat, NaiveBayesModel, fit_batch, fit_pooled
from .synth import DriftSpec, generate

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DriftSpec",
    "EnsembleState",
    "EvalRecord",
    "ExperimentConfig",
    "ConfigError",
    "Feature",
    "FeatureStat",
    "Instance",
    "MethodRun",
    "MetricReport",
    "MsawConfig",
    "NaiveBayesModel",
    "Schema",
    "SchemaError",
    "SeasonDataset",
    "WeightStrategy",
    "auroc",
    "combine",
    "compare_methods",
    "delong_test",
    "evaluate_static",
    "fit_batch",
    "fit_pooled",
    "generate",
    "load_config",
    "load_experiment_data",
    "load_schema",
    "load_season_csv",
    "msaw_step",
    "penalty_factor",
    "run_methods",
    "run_stream",
    "season_reports",
    "split_by_season",
    "static_weights",
    "validate_dataset",
    "validate_instance",
    "write_metrics_csv",
    "write_metrics_json",
    "write_records_csv",
    "write_schema",
    "write_season_csv",
    "write_weight_trajectory",
]
