import numpy as np
import pytest

from kimerge.core import RngStream, entropy
from kimerge.data import MixtureSpec, basis_means, generate_mixture, partition_label_space
from kimerge.errors import CoverageError, InputError
from kimerge.teacher import (
    TeacherConfig,
    TeacherModel,
    mc_predict,
    predict,
    predict_logits,
    teacher_training_view,
    train_teacher,
)


@pytest.fixture(scope="module")
def setup():
    space = partition_label_space([f"class_{i:02d}" for i in range(4)], 2)
    ds = generate_mixture(MixtureSpec(basis_means(4, 8, 5.0), 0.6, 120, seed=17))
    config = TeacherConfig(hidden_dims=(32,), epochs=12, seed=17)
    teachers = [train_teacher(ds, space, i, config) for i in range(2)]
    return space, ds, teachers


def test_training_view_filters_and_remaps(setup):
    space, ds, _ = setup
    view = teacher_training_view(ds, space, 1)
    assert len(view) == 240
    assert set(view.labels.tolist()) == {0, 1}
    # subset 1 owns global labels 2 and 3
    np.testing.assert_array_equal(ds.labels[np.isin(ds.labels, (2, 3))] - 2, view.labels)


def test_training_views_are_disjoint(setup):
    space, ds, _ = setup
    a = teacher_training_view(ds, space, 0)
    b = teacher_training_view(ds, space, 1)
    rows_a = set(map(tuple, a.features))
    rows_b = set(map(tuple, b.features))
    assert not rows_a & rows_b
    assert len(rows_a) + len(rows_b) == len(ds)


def test_missing_class_raises(setup):
    space, ds, _ = setup
    drop = ds.subset(np.flatnonzero(ds.labels != 3))
    with pytest.raises(CoverageError, match="class_03"):
        teacher_training_view(drop, space, 1)


def test_teacher_fits_own_subset(setup):
    space, ds, teachers = setup
    for i, teacher in enumerate(teachers):
        view = teacher_training_view(ds, space, i)
        logits = predict_logits(teacher, view.features)
        acc = float(np.mean(logits.argmax(axis=1) == view.labels))
        assert acc >= 0.95


def test_teacher_is_frozen(setup):
    _, _, teachers = setup
    with pytest.raises(ValueError):
        teachers[0].model.weights[0][0, 0] = 0.0


def test_predict_is_pure_local_distribution(setup):
    space, ds, teachers = setup
    x = ds.features[0]
    d = predict(teachers[0], x)
    assert len(d) == 2
    assert d.span == space.subsets[0]
    assert float(d.probs.sum()) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_array_equal(d.probs, predict(teachers[0], x).probs)


def test_mc_predict_determinism_and_degenerate_case(setup):
    space, ds, teachers = setup
    x = ds.features[5]
    rng = RngStream(99).child(5)
    a = mc_predict(teachers[0], x, 16, rng)
    b = mc_predict(teachers[0], x, 16, rng)
    np.testing.assert_array_equal(a.probs, b.probs)
    c = mc_predict(teachers[0], x, 16, RngStream(100).child(5))
    assert not np.array_equal(a.probs, c.probs)
    assert float(a.probs.sum()) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(InputError):
        mc_predict(teachers[0], x, 0, rng)


def test_mc_predict_k1_rate0_equals_predict(setup):
    space, ds, _ = setup
    config = TeacherConfig(hidden_dims=(16,), dropout_rate=0.0, epochs=3, seed=4)
    teacher = train_teacher(ds, space, 0, config)
    x = ds.features[7]
    det = predict(teacher, x)
    mc = mc_predict(teacher, x, 1, RngStream(0))
    np.testing.assert_array_equal(det.probs, mc.probs)


def test_entropy_of_mean_exceeds_mean_entropy(setup):
    # concavity of entropy over the K individual passes
    space, ds, teachers = setup
    teacher = teachers[0]
    gen = RngStream(1234).generator()
    for trial in range(20):
        x = ds.features[int(gen.integers(len(ds)))]
        singles = [
            mc_predict(teacher, x, 1, RngStream(55).child(trial, k)) for k in range(8)
        ]
        mean_probs = np.mean([d.probs for d in singles], axis=0)
        h_mean = entropy(np.asarray(mean_probs))
        mean_h = float(np.mean([entropy(d) for d in singles]))
        assert h_mean >= mean_h - 1e-12


def test_uncertainty_separates_in_and_out_of_subset(setup):
    space, ds, teachers = setup
    teacher = teachers[0]
    in_idx = np.flatnonzero(np.isin(ds.labels, space.subsets[0]))
    out_idx = np.flatnonzero(~np.isin(ds.labels, space.subsets[0]))
    rng = RngStream(7)

    def mean_entropy(indices):
        vals = [
            entropy(mc_predict(teacher, ds.features[j], 16, rng.child(int(j))))
            for j in indices[:80]
        ]
        return float(np.mean(vals))

    assert mean_entropy(in_idx) < mean_entropy(out_idx)


def test_teacher_model_width_check(setup):
    space, _, teachers = setup
    with pytest.raises(InputError):
        TeacherModel(teachers[0].model, 0, partition_label_space(
            [f"c{i}" for i in range(6)], 2))
