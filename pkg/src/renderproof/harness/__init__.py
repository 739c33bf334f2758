from .config import ConfigError, ExperimentConfig, SceneEntry, VariantEntry, load_config, parse_config
from .experiment import run_experiment, write_report
from .report import (BASELINE, IMPROVED, REGRESSED, TIED, Report, ReportError, VerdictGrid, assemble,
                     classify, emit_csv, emit_markdown, rank_verdict)

__all__ = [
    "ConfigError", "ExperimentConfig", "SceneEntry", "VariantEntry", "load_config", "parse_config",
    "run_experiment", "write_report", "BASELINE", "IMPROVED", "REGRESSED", "TIED", "Report",
    "ReportError", "VerdictGrid", "assemble", "classify", "emit_csv", "emit_markdown",
    "rank_verdict",
]
