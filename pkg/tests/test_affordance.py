from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artimanip.affordance import (
    FEATURE_DIM,
    AffordanceDataset,
    AffordanceEntry,
    AffordanceMap,
    AnnotationError,
    DatasetFormatError,
    Hyper,
    SurfaceSpec,
    TrainingError,
    annotate_part,
    bce_loss,
    confusion,
    extract_features,
    f1_score,
    generate_part_library,
    load_model,
    loss_and_grads,
    model_from_bytes,
    model_to_bytes,
    predict_affordance,
    read_dataset,
    refined_center,
    save_model,
    train_affordance,
    write_dataset,
)
from artimanip.affordance.library import format_entry, parse_entry
from artimanip.geometry import Pose, axis_angle_matrix
from artimanip.kernels import backends

# --- annotation --------------------------------------------------------------


def test_refined_center_example():
    # centroid (1, 0, 0); bbox centre (1.5, 0, 0)
    pts = np.array([[0, 0, 0]] * 4 + [[3, 0, 0]] * 2 + [[0, 0, 0], [2, 0, 0]], dtype=float)
    assert np.allclose(pts.mean(axis=0), [1.0, 0, 0])
    assert np.allclose(refined_center(pts), [1.25, 0, 0])


def test_refined_center_needs_points():
    with pytest.raises(AnnotationError):
        refined_center(np.zeros((3, 3)))


def _annotate_brute(pts, radius_factor=0.5, tol=1e-3):
    top = max(p[2] for p in pts)
    lo = [min(p[i] for p in pts) for i in range(3)]
    hi = [max(p[i] for p in pts) for i in range(3)]
    cen = [(sum(p[i] for p in pts) / len(pts) + (lo[i] + hi[i]) / 2) / 2 for i in range(3)]
    r = radius_factor * min((hi[0] - lo[0]) / 2, (hi[1] - lo[1]) / 2)
    out = []
    for p in pts:
        on = abs(p[2] - top) <= tol
        near = ((p[0] - cen[0]) ** 2 + (p[1] - cen[1]) ** 2) ** 0.5 <= r
        out.append(int(on and near))
    return np.array(out)


def _box_cloud(rng, n=400):
    pts = rng.uniform(-1, 1, size=(n, 3)) * [0.05, 0.03, 0.02]
    top = rng.uniform(size=n) < 0.4
    pts[top, 2] = 0.02
    return pts


@pytest.mark.parametrize("seed", range(5))
def test_annotation_matches_brute_force(seed):
    pts = _box_cloud(np.random.default_rng(seed))
    assert np.array_equal(annotate_part(pts), _annotate_brute(pts.tolist()))


@given(st.integers(0, 10_000), st.floats(-np.pi, np.pi), st.tuples(*[st.floats(-1, 1)] * 3))
def test_annotation_invariant_under_rigid_motion(seed, angle, t):
    pts = _box_cloud(np.random.default_rng(seed))
    pose = Pose(axis_angle_matrix((0.3, -0.5, 0.8), angle), np.asarray(t))
    base = annotate_part(pts)
    moved = annotate_part(pose.apply(pts), SurfaceSpec().moved(pose))
    assert np.array_equal(base, moved)


def test_annotation_other_faces():
    pts = _box_cloud(np.random.default_rng(1))
    flipped = pts * [1, 1, -1]
    assert np.array_equal(annotate_part(flipped, SurfaceSpec("-z")), annotate_part(pts))


def test_annotation_failures():
    flat = np.random.default_rng(0).uniform(size=(20, 3))
    flat[:, 2] = 0.0
    with pytest.raises(ValueError):
        annotate_part(flat, radius_factor=0.0)
    with pytest.raises(ValueError):
        SurfaceSpec("+w")
    # a face with a single point far from the centre has no labelled point
    pts = np.array([[x, y, 0.0] for x in (-1, 1) for y in (-1, 1)] * 3 + [[1.0, 1.0, 0.5]])
    with pytest.raises(AnnotationError):
        annotate_part(pts)


# --- features ----------------------------------------------------------------


def test_feature_shape_and_ranges():
    pts = _box_cloud(np.random.default_rng(2))
    F = extract_features(pts)
    assert F.shape == (len(pts), FEATURE_DIM)
    assert np.all(F[:, :3] >= 0) and np.all(F[:, :3] <= 1)
    assert np.all((F[:, 4:7] >= 0) & (F[:, 4:7] <= 1 + 1e-12))
    assert np.allclose(np.linalg.norm(F[:, 7:10], axis=1), 1.0)
    assert np.all(F[:, 10:] >= 0) and np.all(F[:, 10:] < 1)


def test_normals_face_the_viewer():
    pts = _box_cloud(np.random.default_rng(3))
    view = np.array([0.2, 0.1, -1.0])
    F = extract_features(pts, view_dir=view)
    assert np.all(F[:, 7:10] @ view <= 1e-9)


@given(st.integers(0, 1000), st.floats(0.1, 10.0))
def test_features_invariant_to_translation_and_scale(seed, scale):
    pts = _box_cloud(np.random.default_rng(seed), n=80)
    a = extract_features(pts, k=8)
    b = extract_features(pts * scale + [3.0, -1.0, 2.0], k=8)
    assert np.allclose(a, b, atol=1e-6)


@pytest.mark.skipif(len(backends()) < 2, reason="compiled kernels not built")
def test_feature_backends_agree():
    pts = _box_cloud(np.random.default_rng(4))
    a = extract_features(pts, backend=backends()["python"])
    b = extract_features(pts, backend=backends()["cython"])
    assert np.allclose(a, b, atol=1e-9)


def test_feature_input_validation():
    with pytest.raises(ValueError):
        extract_features(np.zeros((10, 3)), k=16)


# --- loss and training -------------------------------------------------------


def test_bce_known_values():
    assert bce_loss([0.0], [1]) == pytest.approx(np.log(2))
    assert bce_loss([0.0, 0.0], [1, 0], pos_weight=3.0) == pytest.approx(2 * np.log(2))
    # stable for huge logits
    assert bce_loss([1000.0], [1]) == pytest.approx(0.0, abs=1e-12)
    assert bce_loss([1000.0], [0]) == pytest.approx(1000.0)


def test_zero_gradient_at_balanced_optimum():
    z = np.zeros((4, FEATURE_DIM))
    y = np.array([1.0, 0.0, 1.0, 0.0])
    params = [np.zeros((FEATURE_DIM, 3)), np.zeros(3), np.zeros(3), np.zeros(1)]
    loss, grads = loss_and_grads(params, z, y, 1.0)
    assert loss == pytest.approx(np.log(2))
    assert all(np.allclose(g, 0.0) for g in grads)


def _separable(rng, n=400):
    X = rng.normal(size=(n, FEATURE_DIM))
    y = (X[:, 0] > 0.3).astype(float)
    return X, y


def test_training_separates_separable_data():
    X, y = _separable(np.random.default_rng(0))
    model, report = train_affordance(None, Hyper(epochs=60, batch=64, lr=0.1), seed=0, features=(X, y))
    assert report.final_loss < report.initial_loss / 4
    assert f1_score(model.scores(X) >= 0.5, y) > 0.95


def test_training_flipped_labels_flip_scores():
    X, y = _separable(np.random.default_rng(1))
    m1, _ = train_affordance(None, Hyper(epochs=40, batch=64, lr=0.1), seed=0, features=(X, y))
    m2, _ = train_affordance(None, Hyper(epochs=40, batch=64, lr=0.1), seed=0, features=(X, 1 - y))
    assert np.mean((m1.scores(X) >= 0.5) != (m2.scores(X) >= 0.5)) > 0.95


def test_zero_epochs_returns_initialization():
    X, y = _separable(np.random.default_rng(2))
    model, report = train_affordance(None, Hyper(epochs=0), seed=5, features=(X, y))
    assert report.epoch_losses == [] and report.final_loss == report.initial_loss
    assert model.b2 == 0.0 and np.all(model.b1 == 0.0)


def test_training_errors():
    X = np.zeros((5, FEATURE_DIM))
    with pytest.raises(TrainingError):
        train_affordance(None, Hyper(epochs=1), features=(X, np.ones(5)))
    with pytest.raises(TrainingError):
        train_affordance([], Hyper(epochs=1))
    with pytest.raises(ValueError):
        Hyper(momentum=1.0)


def test_scores_stay_inside_unit_interval():
    X, y = _separable(np.random.default_rng(3))
    model, _ = train_affordance(None, Hyper(epochs=2), seed=0, features=(X, y))
    s = model.scores(X * 1e6)
    assert np.all((s > 0.0) & (s < 1.0))


def test_model_persistence(tmp_path):
    X, y = _separable(np.random.default_rng(4))
    model, _ = train_affordance(None, Hyper(epochs=2, hidden=5), seed=1, features=(X, y))
    save_model(model, tmp_path / "m.affm")
    back = load_model(tmp_path / "m.affm")
    assert model_to_bytes(back) == model_to_bytes(model)
    assert np.array_equal(back.scores(X), model.scores(X))
    blob = model_to_bytes(model)
    with pytest.raises(ValueError, match="magic"):
        model_from_bytes(b"XXXX" + blob[4:])
    with pytest.raises(ValueError):
        model_from_bytes(blob[:-8])


def test_predict_affordance_on_cloud():
    data = generate_part_library(["cap"], 6, seed=0, n_points=256)
    model, _ = train_affordance(data, Hyper(epochs=5, batch=256), seed=0)
    amap = predict_affordance(model, data[0].points)
    assert isinstance(amap, AffordanceMap) and len(amap) == len(data[0].points)
    assert set(np.unique(amap.labels(0.5))) <= {0, 1}
    with pytest.raises(ValueError):
        predict_affordance(model, data[0].points[:10])


def test_affordance_map_validation():
    with pytest.raises(ValueError):
        AffordanceMap(np.array([0.5, 1.5]))
    with pytest.raises(ValueError):
        AffordanceMap(np.array([np.nan]))


# --- library -----------------------------------------------------------------


def test_library_is_deterministic_and_interleaved():
    a = generate_part_library(["cap", "knob", "button", "lever"], 3, seed=4, n_points=200)
    b = generate_part_library(["cap", "knob", "button", "lever"], 3, seed=4, n_points=200)
    assert list(a) == list(b)
    assert [e.archetype for e in a[:4]] == ["cap", "knob", "button", "lever"]
    assert a.statistics()["lever"] == 3
    assert a.statistics_table().splitlines()[0] == "cap: 3"
    for e in a:
        assert e.labels.any() and abs(len(e.points) - 200) <= 12


def test_library_rejects_bad_arguments():
    with pytest.raises(ValueError):
        generate_part_library(["spoon"], 1, 0)
    with pytest.raises(ValueError):
        generate_part_library(["cap"], 0, 0)


def test_dataset_round_trip(tmp_path):
    data = generate_part_library(["button", "handle-bar"], 2, seed=1, n_points=128)
    path = tmp_path / "parts.txt"
    write_dataset(data, path)
    assert list(read_dataset(path)) == list(data)


def test_dataset_parse_errors_name_the_line(tmp_path):
    e = AffordanceEntry(np.zeros((2, 3)), [0, 1], "bottle", "cap")
    line = format_entry(e)
    assert parse_entry(line, 1) == e
    with pytest.raises(DatasetFormatError, match="line 7"):
        parse_entry(line.replace("\t2\t", "\t3\t"), 7)
    path = tmp_path / "bad.txt"
    path.write_text(line + "\n\nbottle\tcap\n")
    with pytest.raises(DatasetFormatError, match="line 3"):
        read_dataset(path)
    with pytest.raises(DatasetFormatError):
        parse_entry("bottle\tcap\t1\t0 0 0\t2", 1)


def test_split_keeps_order():
    data = AffordanceDataset(generate_part_library(["cap"], 4, seed=0, n_points=64))
    tr, te = data.split(3)
    assert list(tr) + list(te) == list(data)


# --- metrics -----------------------------------------------------------------


def test_f1_examples():
    assert f1_score([1, 1, 0, 0], [1, 0, 1, 0]) == pytest.approx(0.5)
    assert f1_score([0, 0], [0, 0]) == 0.0
    assert f1_score([1, 1], [1, 1]) == 1.0
    assert confusion([1, 1, 0, 0], [1, 0, 1, 0]) == (1, 1, 1, 1)


def test_f1_validation():
    with pytest.raises(ValueError):
        f1_score([1, 0], [1])
    with pytest.raises(ValueError):
        f1_score([2, 0], [1, 0])


@given(st.lists(st.tuples(st.booleans(), st.booleans()), max_size=50))
def test_f1_symmetric_and_bounded(pairs):
    p = [a for a, _ in pairs]
    t = [b for _, b in pairs]
    f = f1_score(p, t)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(f1_score(t, p))
