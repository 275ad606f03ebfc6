"""kimerge: merge specialist classifiers over disjoint label sets into one
student model, without labels, by scoring each teacher's competence per
instance through dropout-perturbed inference."""

__version__ = "0.1.0"
