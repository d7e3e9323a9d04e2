import numpy as np
import pytest

from refpipe.curation import (BUILTIN_ADAPTERS, QaPair, SourceAnnotation,
                              apply_adapter, build_qa, clip_crop,
                              compose_caption, curate_annotation,
                              export_dataset, load_dataset, mask_to_bbox)
from refpipe.geometry import Box, TrackedBox, TrackingList
from refpipe.prompts import TemplateLibrary


def annotation(duration=30.0, fps=1.0, frames=range(0, 30, 5), caption="a person walks"):
    boxes = {t: Box(t % 5, 1, t % 5 + 2, 3) for t in frames}
    return SourceAnnotation(video_id="vid1", duration=duration, fps=fps,
                            boxes=boxes, caption=caption)


class TestClipCrop:
    def test_even_spacing_sixty_seconds(self):
        ann = annotation(duration=60.0)
        assert clip_crop(ann, 10.0, 3) == [(0.0, 10.0), (25.0, 35.0), (50.0, 60.0)]

    def test_exact_fit_single_interval(self):
        ann = annotation(duration=10.0, frames=[0])
        assert clip_crop(ann, 10.0, 3) == [(0.0, 10.0)]

    def test_too_short_rejected(self):
        ann = annotation(duration=9.0, frames=[0])
        with pytest.raises(ValueError):
            clip_crop(ann, 10.0, 3)

    def test_count_shrinks_when_overlapping(self):
        ann = annotation(duration=25.0)
        intervals = clip_crop(ann, 10.0, 3)
        assert intervals == [(0.0, 10.0), (15.0, 25.0)]

    def test_never_overlaps_or_overruns(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            duration = float(rng.uniform(10, 120))
            seg = float(rng.uniform(1, 10))
            count = int(rng.integers(1, 6))
            ann = annotation(duration=duration)
            intervals = clip_crop(ann, seg, count)
            for (s1, e1), (s2, e2) in zip(intervals, intervals[1:]):
                assert e1 <= s2 + 1e-9
            for s, e in intervals:
                assert -1e-9 <= s and e <= duration + 1e-9
                assert e - s == pytest.approx(seg)


class TestMaskToBbox:
    def test_single_cell(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[5, 3] = True  # (x=3, y=5)
        assert mask_to_bbox(mask) == Box(3, 5, 4, 6)

    def test_full_grid(self):
        assert mask_to_bbox(np.ones((4, 7))) == Box(0, 0, 7, 4)

    def test_l_shape(self):
        mask = np.zeros((8, 8), dtype=bool)
        for x, y in [(1, 1), (1, 4), (6, 1)]:
            mask[y, x] = True
        assert mask_to_bbox(mask) == Box(1, 1, 7, 5)

    def test_tightness_random(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            mask = rng.random((10, 12)) < 0.2
            if not mask.any():
                continue
            box = mask_to_bbox(mask)
            ys, xs = np.nonzero(mask)
            assert box.x1 == xs.min() and box.x2 == xs.max() + 1
            assert box.y1 == ys.min() and box.y2 == ys.max() + 1

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            mask_to_bbox(np.zeros((3, 3)))


class TestComposeCaption:
    def test_reference_example(self):
        assert compose_caption("bear", "slowly", "walking") == "bear is slowly walking."

    def test_empty_adverb_elided(self):
        assert compose_caption("car", "", "turning") == "car is turning."

    def test_multiword_adverb(self):
        assert compose_caption("dog", "very quickly", "running") == \
            "dog is very quickly running."

    def test_missing_parts_rejected(self):
        with pytest.raises(ValueError):
            compose_caption("", "slowly", "walking")
        with pytest.raises(ValueError):
            compose_caption("bear", "slowly", " ")


class TestBuildQa:
    def test_single_annotated_frame_is_seed(self):
        ann = annotation(frames=[7])
        qa = build_qa(ann, (0.0, 30.0), seed=0, lib=TemplateLibrary())
        assert qa.seed_box.t == 7

    def test_deterministic_under_seed(self):
        ann = annotation()
        a = build_qa(ann, (0.0, 30.0), seed=5, lib=TemplateLibrary())
        b = build_qa(ann, (0.0, 30.0), seed=5, lib=TemplateLibrary())
        assert a.to_dict() == b.to_dict()

    def test_different_seed_can_pick_other_frame(self):
        ann = annotation()
        seeds = {build_qa(ann, (0.0, 30.0), seed=s, lib=TemplateLibrary()).seed_box.t
                 for s in range(12)}
        assert len(seeds) > 1

    def test_question_keeps_region_markers(self):
        ann = annotation()
        qa = build_qa(ann, (0.0, 30.0), seed=1, lib=TemplateLibrary())
        assert "<region>" in qa.question
        assert qa.answer == "a person walks"

    def test_tracker_extension_bounded(self):
        # sparse 3-frame annotation extended by an external 20-entry list;
        # with tau=0 nothing is excluded, so the merged list keeps all 20
        ann = annotation(duration=20.0, frames=[0, 10, 19])
        external = TrackingList(
            TrackedBox(t, Box(t % 5, 1, t % 5 + 2, 3)) for t in range(20))
        qa = build_qa(ann, (0.0, 20.0), seed=0, lib=TemplateLibrary(),
                      track_source=external, tau=0.0)
        assert 3 <= len(qa.tracking_list) <= 20
        assert len(qa.tracking_list) == 20

    def test_tracking_list_restricted_to_clip(self):
        ann = annotation(duration=30.0, frames=range(0, 30, 2))
        external = TrackingList(
            TrackedBox(t, Box(t % 5, 1, t % 5 + 2, 3)) for t in range(30))
        qa = build_qa(ann, (10.0, 20.0), seed=0, lib=TemplateLibrary(),
                      track_source=external, tau=0.0)
        assert all(10 <= e.t < 20 for e in qa.tracking_list)
        assert 10.0 <= qa.seed_box.t < 20.0

    def test_no_annotated_frames_rejected(self):
        ann = annotation(frames=[25])
        with pytest.raises(ValueError):
            build_qa(ann, (0.0, 10.0), seed=0, lib=TemplateLibrary())


class TestDatasetIo:
    def make_pairs(self, n):
        ann = annotation()
        return [build_qa(ann, (0.0, 30.0), seed=s, lib=TemplateLibrary())
                for s in range(n)]

    def test_empty_export(self, tmp_path):
        path = tmp_path / "qa.jsonl"
        export_dataset([], path)
        assert path.read_text() == ""
        assert load_dataset(path) == []

    def test_roundtrip(self, tmp_path):
        pairs = self.make_pairs(3)
        path = tmp_path / "qa.jsonl"
        export_dataset(pairs, path)
        loaded = load_dataset(path)
        assert [p.to_dict() for p in loaded] == [p.to_dict() for p in pairs]

    def test_line_count(self, tmp_path):
        pairs = self.make_pairs(4)
        path = tmp_path / "qa.jsonl"
        export_dataset(pairs, path)
        assert len(path.read_text().splitlines()) == 4


class TestAdapters:
    def test_xywh_conversion(self):
        raw = {"video": "v7", "duration": 12.0, "fps": 2.0,
               "boxes": {"0": [1, 1, 2, 3]}, "sentence": "a cat jumps"}
        ann = apply_adapter(raw, BUILTIN_ADAPTERS["a2d"])
        assert ann.boxes[0] == Box(1, 1, 3, 4)
        assert ann.caption == "a cat jumps"

    def test_mask_adapter(self):
        mask = [[0, 0, 0], [0, 1, 1], [0, 0, 0]]
        raw = {"video": "m1", "duration": 5.0, "fps": 1.0,
               "masks": {"2": mask}, "caption": "thing moves"}
        ann = apply_adapter(raw, BUILTIN_ADAPTERS["mevis"])
        assert ann.boxes[2] == Box(1, 1, 3, 2)

    def test_caption_parts_adapter(self):
        raw = {"video": "g1", "duration": 8.0, "fps": 1.0,
               "boxes": [{"t": 0, "box": [0, 0, 2, 2]}],
               "category": "bear", "adverb": "slowly", "action": "walking"}
        ann = apply_adapter(raw, BUILTIN_ADAPTERS["got10k"])
        assert ann.caption == "bear is slowly walking."

    def test_interval_policy(self):
        raw = {"video": "mg", "duration": 40.0, "fps": 1.0,
               "boxes": {str(t): [1, 1, 3, 3] for t in range(40)},
               "intervals": [[0.0, 10.0, "runs"], [20.0, 30.0, "sits"]]}
        ann = apply_adapter(raw, BUILTIN_ADAPTERS["mgit"])
        pairs = curate_annotation(ann, BUILTIN_ADAPTERS["mgit"], seed=0,
                                  lib=TemplateLibrary())
        assert [p.answer for p in pairs] == ["runs", "sits"]
        assert pairs[0].clip == (0.0, 10.0)

    def test_crop_policy(self):
        raw = {"video": "ls", "duration": 60.0, "fps": 1.0,
               "boxes": {str(t): [1, 1, 3, 3] for t in range(60)},
               "caption": "a drone flies"}
        ann = apply_adapter(raw, BUILTIN_ADAPTERS["lasot"])
        pairs = curate_annotation(ann, BUILTIN_ADAPTERS["lasot"], seed=0,
                                  lib=TemplateLibrary())
        assert len(pairs) == 3
        assert pairs[0].clip == (0.0, 10.0)
        assert pairs[2].clip == (50.0, 60.0)
