"""Request/response models for the HTTP service.

Every endpoint is stateless: requests name files on the server's filesystem,
responses echo the paths written plus summary numbers. Unknown fields are
rejected so typos fail loudly.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GenerateDataRequest(_Strict):
    out_dir: str
    n_classes: int = Field(default=4, ge=4)
    feature_dim: int = Field(default=8, ge=1)
    separation: float = Field(default=2.5, gt=0)
    spread: float = Field(default=1.0, ge=0)
    per_class_train: int = Field(default=500, ge=1)
    per_class_test: int = Field(default=125, ge=1)
    teachers: int = Field(default=2, ge=2)
    seed: int = 1


class GenerateDataResponse(_Strict):
    train_path: str
    test_path: str
    space_path: str
    labels: list[str]
    subsets: list[list[int]]
    n_train: int
    n_test: int
    feature_dim: int


class TrainTeachersRequest(_Strict):
    train_path: str
    out_dir: str
    teachers: int = Field(default=2, ge=2)
    partition: list[list[int]] | None = None
    hidden_dims: list[int] = [64]
    dropout_rate: float = Field(default=0.1, ge=0, lt=1)
    epochs: int = Field(default=20, ge=1)
    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    seed: int = 1


class TrainTeachersResponse(_Strict):
    teacher_paths: list[str]
    labels: list[str]
    subsets: list[list[int]]
    fit_accuracies: list[float]


class IntegrateRequest(_Strict):
    data_path: str
    teachers_dir: str
    out_path: str
    strategy: str = "hard"
    k: int = Field(default=16, ge=1)
    tau: float = Field(default=0.2, gt=0)
    seed: int = 1


class IntegrateResponse(_Strict):
    cache_path: str
    strategy: str
    n_instances: int
    mean_weight: float
    min_weight: float
    max_weight: float


class TrainStudentRequest(_Strict):
    data_path: str
    cache_path: str
    space_path: str
    out_stem: str
    seed: int = 1
    hidden_dims: list[int] = [64]
    dropout_rate: float = Field(default=0.1, ge=0, lt=1)
    epochs: int = Field(default=3, ge=1)
    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    eval_every: int = Field(default=100, ge=1)
    val_fraction: float = Field(default=0.05, gt=0, lt=1)


class TrainStudentResponse(_Strict):
    student_path: str
    log_path: str
    steps_logged: int
    best_val_accuracy: float
    final_loss: float


class EvaluateRequest(_Strict):
    student_path: str
    data_path: str


class EvaluateResponse(_Strict):
    accuracy: float
    n_instances: int
    labels: list[str]
    per_class_accuracy: list[float]
    confusion: list[list[int]]


class AnalyzeRequest(_Strict):
    teachers_dir: str
    data_path: str
    k: int = Field(default=16, ge=1)
    ece_bins: int = Field(default=10, ge=1)
    seed: int = 1
    student_path: str | None = None


class AnalyzeResponse(_Strict):
    selection_error_rate: float
    mean_margin_on_errors: float | None
    error_histogram: list[int]
    ece_deterministic: float
    ece_mc: float
    oracle_confusion: list[list[int]] | None


class RunRequest(_Strict):
    config: dict
    out_dir: str


class StrategySummary(_Strict):
    mean: float
    std: float | None


class RunResponse(_Strict):
    accuracies: dict[str, dict[int, float]]
    summary: dict[str, StrategySummary]
    baselines: dict[str, float]
    artifacts: dict[str, str]


class SweepTauRequest(_Strict):
    config: dict
    out_dir: str
    taus: list[float] | None = None


class SweepTauResponse(_Strict):
    results: dict[str, dict[int, float]]
    csv_path: str


class HealthResponse(_Strict):
    status: str
    version: str
