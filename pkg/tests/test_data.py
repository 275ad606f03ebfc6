import numpy as np
import pytest

from kimerge.data import (
    Dataset,
    LabelSpace,
    MixtureSpec,
    TagMixtureSpec,
    TagSpace,
    basis_means,
    generate_mixture,
    generate_tag_mixture,
    hash_vectorize,
    load_jsonl,
    partition_label_space,
    save_jsonl,
    split_tag_dataset,
    split_validation,
)
from kimerge.errors import DatasetFormatError, InputError, PartitionError, SplitError


def _labels(n):
    return [f"class_{i:02d}" for i in range(n)]


def test_partition_even_split():
    space = partition_label_space(_labels(4), 2)
    assert space.subset_sizes() == (2, 2)
    assert space.subsets == ((0, 1), (2, 3))


def test_partition_remainder_goes_last():
    space = partition_label_space(_labels(10), 4)
    assert space.subset_sizes() == (2, 2, 2, 4)
    space = partition_label_space(_labels(10), 5)
    assert space.subset_sizes() == (2, 2, 2, 2, 2)


def test_partition_sorts_by_name():
    space = partition_label_space(["zebra", "apple", "mango", "kiwi"], 2)
    assert space.labels == ("apple", "kiwi", "mango", "zebra")
    flat = [g for subset in space.subsets for g in subset]
    assert flat == list(range(4))


def test_partition_rejects_small_subsets():
    with pytest.raises(PartitionError):
        partition_label_space(_labels(3), 2)
    with pytest.raises(PartitionError):
        partition_label_space(_labels(4), 1)


def test_label_space_rejects_overlap_and_gaps():
    with pytest.raises(PartitionError):
        LabelSpace(tuple(_labels(4)), ((0, 1), (1, 2, 3)))
    with pytest.raises(PartitionError):
        LabelSpace(tuple(_labels(5)), ((0, 1), (2, 3)))
    with pytest.raises(PartitionError):
        LabelSpace(tuple(_labels(4)), ((0,), (1, 2, 3)))


def test_owner_lookup():
    space = partition_label_space(_labels(6), 3)
    assert [space.owner_of(g) for g in range(6)] == [0, 0, 1, 1, 2, 2]


def test_hash_vectorize_contract():
    assert not hash_vectorize("", 64).any()
    assert not hash_vectorize("...!!!", 64).any()
    v = hash_vectorize("the quick brown fox", 64)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_array_equal(v, hash_vectorize("the quick brown fox", 64))
    assert not np.array_equal(v, hash_vectorize("a different sentence", 64))
    with pytest.raises(InputError):
        hash_vectorize("text", 0)


def test_hash_vectorize_case_and_punctuation_fold():
    a = hash_vectorize("Hello, World!", 128)
    b = hash_vectorize("hello world", 128)
    np.testing.assert_array_equal(a, b)


def test_mixture_counts_and_determinism():
    spec = MixtureSpec(basis_means(3, 5, 4.0), spread=0.5, per_class=7, seed=11)
    ds = generate_mixture(spec)
    assert len(ds) == 21
    assert ds.feature_dim == 5
    assert np.bincount(ds.labels).tolist() == [7, 7, 7]
    again = generate_mixture(spec)
    np.testing.assert_array_equal(ds.features, again.features)
    np.testing.assert_array_equal(ds.labels, again.labels)


def test_mixture_zero_spread_hits_means():
    means = basis_means(2, 3, 2.0)
    ds = generate_mixture(MixtureSpec(means, spread=0.0, per_class=4, seed=0))
    for c in range(2):
        block = ds.features[ds.labels == c]
        np.testing.assert_array_equal(block, np.tile(means[c], (4, 1)))


def test_basis_means_requires_room():
    with pytest.raises(InputError):
        basis_means(5, 3, 1.0)


def test_split_validation_sizes_and_conservation():
    ds = generate_mixture(MixtureSpec(basis_means(2, 2, 3.0), 0.5, 50, seed=3))
    train, val = split_validation(ds, 0.05, seed=9)
    assert len(val) == 5 and len(train) == 95
    merged = np.concatenate([train.features, val.features])
    assert sorted(map(tuple, merged)) == sorted(map(tuple, ds.features))
    train2, val2 = split_validation(ds, 0.05, seed=9)
    np.testing.assert_array_equal(val.features, val2.features)


def test_split_validation_minimal_and_errors():
    ds = Dataset(np.zeros((2, 1)), np.array([0, 1]))
    train, val = split_validation(ds, 0.5, seed=0)
    assert len(train) == 1 and len(val) == 1
    with pytest.raises(SplitError):
        split_validation(ds, 1.5, seed=0)
    with pytest.raises(SplitError):
        split_validation(Dataset(np.zeros((1, 1))), 0.5, seed=0)


def test_jsonl_round_trip(tmp_path):
    ds = generate_mixture(MixtureSpec(basis_means(2, 3, 2.0), 0.7, 5, seed=8))
    path = tmp_path / "ds.jsonl"
    save_jsonl(ds, path)
    back = load_jsonl(path)
    np.testing.assert_array_equal(ds.features, back.features)
    np.testing.assert_array_equal(ds.labels, back.labels)
    assert back.provenance == ds.provenance


def test_jsonl_unlabeled_round_trip(tmp_path):
    ds = Dataset(np.array([[0.25, -1.5], [3.0, 0.0]]), texts=["a b", "c"],
                 provenance="manual")
    path = tmp_path / "ds.jsonl"
    save_jsonl(ds, path)
    back = load_jsonl(path)
    assert back.labels is None
    assert back.texts == ["a b", "c"]
    np.testing.assert_array_equal(ds.features, back.features)


def test_jsonl_parse_error_names_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"features": [1.0]}\nnot json\n')
    with pytest.raises(DatasetFormatError, match="line 2"):
        load_jsonl(path)


def test_jsonl_dim_mismatch(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"features": [1.0, 2.0]}\n{"features": [1.0]}\n')
    with pytest.raises(DatasetFormatError, match="line 2"):
        load_jsonl(path)


def test_jsonl_mixed_labels_rejected(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"features": [1.0], "label": 0}\n{"features": [2.0]}\n')
    with pytest.raises(DatasetFormatError, match="line 2"):
        load_jsonl(path)


def test_jsonl_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(DatasetFormatError):
        load_jsonl(path)


def test_dataset_subset_and_strip():
    ds = Dataset(np.arange(6, dtype=float).reshape(3, 2), np.array([0, 1, 0]))
    sub = ds.subset([2, 0])
    np.testing.assert_array_equal(sub.features, [[4.0, 5.0], [0.0, 1.0]])
    np.testing.assert_array_equal(sub.labels, [0, 0])
    assert ds.without_labels().labels is None


def test_tag_space_layout():
    space = TagSpace(("LOC", "PER"), (("PER",), ("LOC",)))
    assert space.global_tags == ("O", "B-LOC", "I-LOC", "B-PER", "I-PER")
    assert space.teacher_tags(0) == ("O", "B-PER", "I-PER")
    assert space.teacher_global_indices(0) == (0, 3, 4)
    assert space.teacher_global_indices(1) == (0, 1, 2)


def test_tag_space_rejects_overlap():
    with pytest.raises(PartitionError):
        TagSpace(("LOC", "PER"), (("PER",), ("PER", "LOC")))
    with pytest.raises(PartitionError):
        TagSpace(("LOC", "PER"), (("PER", "LOC"), ()))


def test_tag_mixture_is_bio_consistent_and_deterministic():
    spec = TagMixtureSpec(("LOC", "PER"), n_sentences=20, feature_dim=8,
                          separation=4.0, spread=0.5, seed=5)
    ds = generate_tag_mixture(spec)
    assert len(ds) == 20
    for sent, tags in zip(ds.sentences, ds.tags):
        assert len(sent) == len(tags)
        prev = "O"
        for tag in tags:
            if tag.startswith("I-"):
                assert prev in (f"B-{tag[2:]}", tag)
            prev = tag
    again = generate_tag_mixture(spec)
    for a, b in zip(ds.sentences, again.sentences):
        np.testing.assert_array_equal(a, b)
    assert ds.tags == again.tags


def test_tag_split_conserves_sentences():
    ds = generate_tag_mixture(TagMixtureSpec(("X", "Y"), 10, 8, 4.0, 0.5, seed=2))
    train, val = split_tag_dataset(ds, 0.2, seed=1)
    assert len(train) == 8 and len(val) == 2
    with pytest.raises(SplitError):
        split_tag_dataset(ds, 0.0, seed=1)
