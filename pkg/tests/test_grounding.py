from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stub_server import json_endpoint

from artimanip.geometry import Pose, look_at
from artimanip.grounding import (
    BBox,
    GroundingError,
    ImageRef,
    Mask,
    OfflineGrounder,
    OfflineSegmenter,
    PerturbedSegmenter,
    ProviderConfig,
    Providers,
    RemoteClient,
    backproject,
    backproject_pixels,
    describe_template,
    dilate_box,
    dominant_part,
    ground_part,
    gt_mask,
    image_ref,
    limit_sentences,
    make_providers,
    mask_from_pbm,
    mask_iou,
    mask_to_pbm,
    read_pbm,
    tight_box,
    write_pbm,
)
from artimanip.grounding.remote import decode_mask, encode_mask
from artimanip.scene import (
    BACKGROUND,
    CATEGORIES,
    ArticulatedObject,
    CameraModel,
    ObservationFrame,
    Part,
    PartShape,
    build_object,
    default_camera,
    render_observation,
)
from artimanip.scene.shapes import surface_distance


def synthetic_image(ids: np.ndarray, actionable=(1,), target=1, depth: float = 1.0) -> ImageRef:
    h, w = ids.shape
    cam = CameraModel(100.0, 100.0, (w - 1) / 2, (h - 1) / 2, w, h)
    d = np.where(ids != BACKGROUND, depth, 0.0).astype(np.float32)
    frame = ObservationFrame(d, ids.astype(np.uint16), cam)
    meta = {"category": "bottle", "target": target, "part_name": "cap", "archetype": "cap", "actionable": tuple(actionable)}
    return ImageRef(frame, meta)


def scene_image(category="bottle", seed=0):
    obj = build_object(category, seed)
    frame = render_observation(obj, default_camera(obj))
    return obj, image_ref(frame, obj)


# --- boxes -------------------------------------------------------------------


def test_tight_box_example():
    m = np.zeros((10, 12), bool)
    m[2:5, 3:7] = True
    assert tight_box(m).as_tuple() == (3, 2, 7, 5)
    assert tight_box(np.zeros((3, 3), bool)) is None


def test_dilate_box_rounds_and_clamps():
    box = BBox(10, 10, 20, 14)  # 10 x 4
    assert dilate_box(box, 0.25, 100, 100).as_tuple() == (7, 9, 23, 15)
    assert dilate_box(box, 0.5, 22, 15).as_tuple() == (5, 8, 22, 15)
    assert dilate_box(box, 0.0, 100, 100) == box


@given(st.integers(0, 50), st.integers(0, 50), st.integers(1, 30), st.integers(1, 30), st.floats(0, 2))
def test_dilated_box_contains_original(x0, y0, w, h, f):
    box = BBox(x0, y0, x0 + w, y0 + h)
    big = dilate_box(box, f, 100, 100)
    assert big.x0 <= box.x0 and big.y0 <= box.y0 and big.x1 >= box.x1 and big.y1 >= box.y1
    assert big.x1 <= 100 and big.y1 <= 100


def test_bbox_validation():
    with pytest.raises(ValueError):
        BBox(5, 0, 5, 3)
    with pytest.raises(ValueError):
        BBox(-1, 0, 2, 2)
    with pytest.raises(ValueError):
        BBox(0, 0, 10, 10).check_fits(5, 20)


def test_dominant_part_tie_goes_to_smaller_id():
    ids = np.array([[3, 3, 2, 2, BACKGROUND]])
    assert dominant_part(ids, [2, 3]) == 2
    assert dominant_part(ids, [7]) is None
    assert dominant_part(ids, []) is None


# --- providers ---------------------------------------------------------------


def _two_part_ids():
    ids = np.full((20, 30), BACKGROUND, dtype=np.uint16)
    ids[2:18, 2:28] = 0  # body
    ids[6:12, 10:20] = 1  # actionable target
    return ids


def test_offline_grounder_and_segmenter():
    img = synthetic_image(_two_part_ids())
    box = OfflineGrounder()(img, "the cap")
    assert box.as_tuple() == (10, 6, 20, 12)
    mask = OfflineSegmenter()(img, BBox(0, 0, 30, 20))
    assert mask == gt_mask(img)


def test_offline_grounder_errors():
    img = synthetic_image(_two_part_ids(), target=5)
    with pytest.raises(GroundingError, match="not visible"):
        OfflineGrounder()(img, "the cap")
    with pytest.raises(GroundingError, match="empty description"):
        OfflineGrounder()(img, "  ")


def test_offline_segmenter_requires_actionable_pixels():
    img = synthetic_image(_two_part_ids())
    with pytest.raises(GroundingError) as exc:
        OfflineSegmenter()(img, BBox(0, 0, 5, 5))
    assert exc.value.stage == "segment"


def test_perturbed_segmenter_picks_dominant_visible_part():
    img = synthetic_image(_two_part_ids())
    # the whole image: body pixels outnumber target pixels
    mask = PerturbedSegmenter(erosion=0)(img, BBox(0, 0, 30, 20))
    assert mask == Mask(img.part_ids == 0)
    eroded = PerturbedSegmenter(erosion=1)(img, BBox(10, 6, 20, 12))
    inner = np.zeros((20, 30), bool)
    inner[7:11, 11:19] = True
    assert eroded == Mask(inner)


def test_describe_template_mentions_part_and_category():
    text = describe_template(synthetic_image(_two_part_ids()))
    assert "cap" in text and "bottle" in text
    assert len(limit_sentences(text + " One. Two. Three.")) < len(text + " One. Two. Three.")


def test_limit_sentences():
    assert limit_sentences("A. B! C? D.", 3) == "A. B! C?"
    assert limit_sentences("Only one", 3) == "Only one"


@pytest.mark.parametrize("category", CATEGORIES)
def test_gt_chain_recovers_exact_mask(category):
    obj, img = scene_image(category, 4)
    res = ground_part(make_providers(), img, "open it")
    assert mask_iou(res.mask, gt_mask(img)) == 1.0
    assert res.cloud.frame == "world"
    # every back-projected point lies on the target part surface
    local = obj.part_pose(obj.target).inverse().apply(res.cloud.points)
    assert np.max(surface_distance(obj.parts[obj.target].shape, local)) < 1e-5


def test_chain_attributes_failures_to_stages():
    _, img = scene_image()

    def broken(*_):
        raise RuntimeError("boom")

    base = make_providers()
    for stage in ("describe", "ground", "segment"):
        parts = {"describe": base.describe, "ground": base.ground, "segment": base.segment, stage: broken}
        with pytest.raises(GroundingError) as exc:
            ground_part(Providers(**parts), img, "open")
        assert exc.value.stage == stage and "boom" in str(exc.value)


def test_chain_backproject_failure():
    img = synthetic_image(_two_part_ids())
    tiny = Mask(np.zeros((20, 30), bool))
    tiny.data[0, 0] = True
    providers = Providers(lambda *_: "x", lambda *_: BBox(0, 0, 1, 1), lambda *_: tiny)
    with pytest.raises(GroundingError) as exc:
        ground_part(providers, img, "open")
    assert exc.value.stage == "backproject"


def test_provider_config_validation():
    with pytest.raises(ValueError):
        ProviderConfig(ground="psychic")
    with pytest.raises(ValueError):
        ProviderConfig(segment="remote")
    with pytest.raises(ValueError):
        ProviderConfig(dilation=-0.1)
    p = ProviderConfig.perturbed(0.25)
    assert p.ground == p.segment == "perturbed" and p.dilation == 0.25


# --- back-projection ---------------------------------------------------------


def test_backproject_plane_oracle():
    # camera at z = 2 looking down on a box whose top face sits at z = 0.5
    eye = np.array([0.0, 0.0, 2.0])
    cam = CameraModel(60, 60, 20, 15, 41, 31, Pose(look_at(eye, np.zeros(3), up=(0, 1, 0)), eye))
    scene = ArticulatedObject("probe", 0, [Part(0, "slab", PartShape("box", (2.0, 2.0, 1.0)))])
    frame = render_observation(scene, cam)
    pts, u, v = backproject_pixels(np.ones(frame.shape, bool), frame)
    assert len(pts) == 41 * 31
    assert np.allclose(pts[:, 2], 0.5, atol=1e-6)
    # pixel offsets scale by depth / f
    i = np.flatnonzero((u == 30) & (v == 15))[0]
    assert np.allclose(pts[i], [10 * 1.5 / 60, 0.0, 0.5], atol=1e-6)


def test_backproject_skips_missing_depth():
    ids = _two_part_ids()
    img = synthetic_image(ids)
    mask = np.ones(ids.shape, bool)
    pts, _, _ = backproject_pixels(mask, img.frame)
    assert len(pts) == np.count_nonzero(ids != BACKGROUND)
    with pytest.raises(ValueError):
        backproject_pixels(np.ones((3, 3), bool), img.frame)
    cloud = backproject(Mask(ids == 1), img.frame)
    assert len(cloud) == 60


# --- IoU and bitmaps ---------------------------------------------------------


def test_iou_examples():
    a = np.array([[1, 1, 0, 0]], bool)
    b = np.array([[0, 1, 1, 0]], bool)
    assert mask_iou(a, b) == pytest.approx(1 / 3)
    assert mask_iou(np.zeros((2, 2)), np.zeros((2, 2))) == 1.0
    with pytest.raises(ValueError):
        mask_iou(np.zeros((2, 2)), np.zeros((2, 3)))


masks = arrays(bool, st.tuples(st.integers(1, 8), st.integers(1, 8)))


@given(masks, st.data())
def test_iou_properties(a, data):
    b = data.draw(arrays(bool, a.shape))
    v = mask_iou(a, b)
    assert 0.0 <= v <= 1.0
    assert v == mask_iou(b, a)
    assert mask_iou(a, a) == 1.0


@given(masks)
def test_pbm_round_trip(m):
    assert mask_from_pbm(mask_to_pbm(m)) == Mask(m)
    assert decode_mask(encode_mask(Mask(m))) == Mask(m)


def test_pbm_file_and_errors(tmp_path):
    m = Mask(np.eye(3, dtype=bool))
    write_pbm(tmp_path / "m.pbm", m)
    assert read_pbm(tmp_path / "m.pbm") == m
    assert mask_from_pbm("P1\n# comment\n2 1\n1 0\n") == Mask(np.array([[True, False]]))
    with pytest.raises(ValueError):
        mask_from_pbm("P4\n1 1\n0")
    with pytest.raises(ValueError):
        mask_from_pbm("P1\n2 2\n1 0 1")


# --- remote adapters ---------------------------------------------------------


def _remote_responder(img):
    gt = gt_mask(img)
    box = tight_box(gt.data)

    def respond(req):
        assert req["version"] == 1
        if req["stage"] == "describe":
            return {"version": 1, "text": "The cap moves. The body is fixed. Extra. More."}
        if req["stage"] == "ground":
            return {"version": 1, "boxes": [
                {"box": [0, 0, 2, 2], "score": 0.1},
                {"box": list(box.as_tuple()), "score": 0.9},
            ]}
        return {"version": 1, "mask": encode_mask(gt)}

    return respond


def test_remote_chain_matches_offline():
    _, img = scene_image("pen", 2)
    with json_endpoint(_remote_responder(img)) as (url, log):
        cfg = ProviderConfig(describe="remote", ground="remote", segment="remote", endpoint=url)
        res = ground_part(make_providers(cfg), img, "open the pen")
    assert res.mask == gt_mask(img)
    assert res.description.count(".") == 3
    assert [r["stage"] for r in log] == ["describe", "ground", "segment"]
    assert log[2]["box"] == list(res.box.as_tuple())
    assert "Ignore the robot arm" in log[0]["prompt"]


def test_remote_retries_then_succeeds():
    _, img = scene_image()
    with json_endpoint(_remote_responder(img), fail_first=2) as (url, _):
        client = RemoteClient(url, timeout=5, retries=2)
        assert client.describer()(img, "open")
        assert client.attempts == 3


def test_remote_gives_up_after_retries():
    _, img = scene_image()
    with json_endpoint(_remote_responder(img), fail_first=10) as (url, _):
        client = RemoteClient(url, timeout=5, retries=1)
        with pytest.raises(GroundingError) as exc:
            client.grounder()(img, "the cap")
    assert exc.value.stage == "ground" and "2 attempts" in str(exc.value)
    assert client.attempts == 2


def test_remote_malformed_replies():
    _, img = scene_image()
    with json_endpoint(lambda req: {"version": 1, "boxes": []}) as (url, _):
        with pytest.raises(GroundingError, match="not visible"):
            RemoteClient(url).grounder()(img, "the cap")
    with json_endpoint(lambda req: {"version": 1, "mask": {"width": 2, "height": 2, "data": ""}}) as (url, _):
        with pytest.raises(GroundingError, match="malformed"):
            RemoteClient(url).segmenter()(img, BBox(0, 0, 5, 5))
    with json_endpoint(lambda req: {"version": 1}) as (url, _):
        with pytest.raises(GroundingError, match="no text"):
            RemoteClient(url).describer()(img, "open")
