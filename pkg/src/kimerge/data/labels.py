"""Global label set and its partition into disjoint teacher subsets."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import PartitionError


@dataclass(frozen=True)
class LabelSpace:
    """Ordered global labels plus N disjoint subsets covering all of them.

    ``subsets[i]`` lists the global indices teacher i owns, in order; local
    index j of teacher i therefore means global index ``subsets[i][j]``.
    """

    labels: tuple[str, ...]
    subsets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        labels = tuple(str(name) for name in self.labels)
        subsets = tuple(tuple(int(g) for g in s) for s in self.subsets)
        if len(set(labels)) != len(labels):
            raise PartitionError("label names must be unique")
        if len(subsets) < 2:
            raise PartitionError("need at least 2 teacher subsets")
        seen: set[int] = set()
        for i, subset in enumerate(subsets):
            if len(subset) < 2:
                raise PartitionError(f"subset {i} has {len(subset)} labels, need >= 2")
            if len(set(subset)) != len(subset) or seen & set(subset):
                raise PartitionError(f"subset {i} overlaps another subset")
            seen |= set(subset)
        if seen != set(range(len(labels))):
            raise PartitionError("subsets must cover every global label exactly once")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "subsets", subsets)

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def n_subsets(self) -> int:
        return len(self.subsets)

    def subset_sizes(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.subsets)

    def owner_of(self, global_index: int) -> int:
        """Index of the subset that owns a global label."""
        for i, subset in enumerate(self.subsets):
            if global_index in subset:
                return i
        raise PartitionError(f"global index {global_index} outside the label space")


def partition_label_space(labels, teacher_count: int) -> LabelSpace:
    """Sort labels by name and split into N contiguous groups.

    Each group gets floor(L/N) labels; the final group absorbs the remainder,
    e.g. 10 labels over 4 teachers give sizes (2, 2, 2, 4).
    """
    names = sorted(str(name) for name in labels)
    n = int(teacher_count)
    if n < 2:
        raise PartitionError(f"need at least 2 teachers, got {n}")
    if len(names) < 2 * n:
        raise PartitionError(
            f"{len(names)} labels cannot give {n} subsets of >= 2 labels each"
        )
    base = len(names) // n
    subsets = []
    for i in range(n):
        start = i * base
        stop = (i + 1) * base if i < n - 1 else len(names)
        subsets.append(tuple(range(start, stop)))
    return LabelSpace(tuple(names), tuple(subsets))
