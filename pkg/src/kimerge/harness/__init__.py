"""Experiment orchestration, configuration, and diagnostics."""

from .artifacts import load_student, load_teachers, save_student, save_teachers
from .config import (
    DataConfig,
    DiagnosticsSection,
    ExperimentConfig,
    ModelConfig,
    StudentSection,
    config_from_dict,
    config_to_dict,
    load_config,
)
from .diagnostics import (
    SelectionErrorReport,
    SupervisionQuality,
    TeacherCalibration,
    compute_ece,
    selection_error_report,
    supervision_quality,
    teacher_calibration,
)
from .experiment import DEFAULT_TAUS, MetricsReport, render_report, run_experiment, sweep_tau

__all__ = [
    "DEFAULT_TAUS",
    "DataConfig",
    "DiagnosticsSection",
    "ExperimentConfig",
    "MetricsReport",
    "ModelConfig",
    "SelectionErrorReport",
    "StudentSection",
    "SupervisionQuality",
    "TeacherCalibration",
    "compute_ece",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "load_student",
    "load_teachers",
    "render_report",
    "run_experiment",
    "save_student",
    "save_teachers",
    "selection_error_report",
    "supervision_quality",
    "sweep_tau",
    "teacher_calibration",
]
