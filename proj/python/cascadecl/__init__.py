"""Propagation-graph fake news detection with continual learning."""

from cascadecl._core import (
    Error,
    GraphDataset,
    build_dataset,
    compute_metrics,
    gem_project,
    load_archive,
    report_csv,
    run_incremental,
    run_single,
    save_archive,
    stratified_split,
    synthetic,
)

__all__ = [
    "Error",
    "GraphDataset",
    "build_dataset",
    "compute_metrics",
    "gem_project",
    "load_archive",
    "report_csv",
    "run_incremental",
    "run_single",
    "save_archive",
    "stratified_split",
    "synthetic",
]
