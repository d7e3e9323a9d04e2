import numpy as np
import pytest

from refpipe.feature_store import FrameFeatureSequence
from refpipe.geometry import Box, TrackedBox, TrackingList, iou
from refpipe.synthetic import moving_square, static_square
from refpipe.tracking import (AnnotationSet, CorrelationTracker, reconcile,
                              sample_track, track_with_dual_references)


def box(x1, y1, x2, y2):
    return Box(x1, y1, x2, y2)


class TestCorrelationTracker:
    def test_static_target_returns_seed_everywhere(self):
        seq, gt = static_square(t_count=12, grid_w=16, grid_h=16, origin=(4, 4),
                                size=3.0)
        seed = gt[0]
        track = CorrelationTracker(search_radius=2, min_similarity=0.5).track(seq, seed)
        assert track.frames() == list(range(12))
        for entry in track:
            assert entry.box == seed.box

    def test_translating_square_recovered(self):
        seq, gt = moving_square(t_count=20, grid_w=30, grid_h=8, start=(1, 1),
                                velocity=(1, 0), size=2.0)
        seed = gt[0]
        track = CorrelationTracker(search_radius=2, min_similarity=0.5).track(seq, seed)
        gt_boxes = gt.by_frame()
        assert track.frames() == list(range(20))
        for entry in track:
            assert iou(entry.box, gt_boxes[entry.t]) >= 0.7

    def test_backward_tracking_from_late_seed(self):
        seq, gt = moving_square(t_count=10, grid_w=20, grid_h=8)
        seed = gt[9]
        track = CorrelationTracker(search_radius=2, min_similarity=0.5).track(seq, seed)
        gt_boxes = gt.by_frame()
        assert track.frames() == list(range(10))
        for entry in track:
            assert iou(entry.box, gt_boxes[entry.t]) >= 0.7

    def test_occlusion_dropout(self):
        # target present only in frame 0; a high floor drops every other frame
        seq, gt = moving_square(t_count=6, grid_w=12, grid_h=8, velocity=(0, 0))
        data = seq.data.copy()
        data[1:] = 0.0
        seq = FrameFeatureSequence(data)
        track = CorrelationTracker(search_radius=2, min_similarity=0.9).track(seq, gt[0])
        assert track.frames() == [0]

    def test_seed_frame_out_of_range(self):
        seq, _ = static_square(t_count=3)
        with pytest.raises(IndexError):
            CorrelationTracker().track(seq, TrackedBox(5, box(1, 1, 3, 3)))

    def test_param_validation(self):
        seq, gt = static_square(t_count=2)
        with pytest.raises(ValueError):
            CorrelationTracker(search_radius=0).track(seq, gt[0])
        with pytest.raises(ValueError):
            CorrelationTracker(min_similarity=2.0).track(seq, gt[0])


class TestReconcile:
    def test_identity_when_lists_match_annotations(self):
        entries = [TrackedBox(t, box(t, 0, t + 2, 2)) for t in range(5)]
        track = TrackingList(entries)
        gt = AnnotationSet({e.t: e.box for e in entries})
        out = reconcile(track, TrackingList(), gt, tau=0.5)
        assert out == track

    def test_low_iou_frame_excluded(self):
        # frame 1 proposal overlaps ground truth with IoU 1/3 < 0.5
        proposals = TrackingList([TrackedBox(0, box(0, 0, 2, 2)),
                                  TrackedBox(1, box(1, 0, 3, 2))])
        gt = AnnotationSet({0: box(0, 0, 2, 2), 1: box(0, 0, 2, 2)})
        out = reconcile(proposals, TrackingList(), gt, tau=0.5)
        assert out.frames() == [0]

    def test_tau_zero_keeps_everything(self):
        proposals = TrackingList([TrackedBox(0, box(0, 0, 2, 2)),
                                  TrackedBox(1, box(5, 5, 7, 7))])
        gt = AnnotationSet({0: box(0, 0, 2, 2), 1: box(0, 0, 2, 2)})
        out = reconcile(proposals, TrackingList(), gt, tau=0.0)
        assert out.frames() == [0, 1]

    def test_higher_iou_wins_on_annotated_frames(self):
        good = TrackingList([TrackedBox(0, box(0, 0, 2, 2))])
        bad = TrackingList([TrackedBox(0, box(0.5, 0, 2.5, 2))])
        gt = AnnotationSet({0: box(0, 0, 2, 2)})
        assert reconcile(bad, good, gt, 0.3)[0].box == box(0, 0, 2, 2)
        assert reconcile(good, bad, gt, 0.3)[0].box == box(0, 0, 2, 2)

    def test_list_a_preferred_on_unannotated_frames(self):
        a = TrackingList([TrackedBox(3, box(0, 0, 1, 1))])
        b = TrackingList([TrackedBox(3, box(5, 5, 6, 6)), TrackedBox(4, box(7, 7, 8, 8))])
        out = reconcile(a, b, AnnotationSet(), tau=0.5)
        assert out.by_frame()[3] == box(0, 0, 1, 1)
        assert out.by_frame()[4] == box(7, 7, 8, 8)

    def test_postcondition_audit_randomized(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 12))
            gt_boxes, a_entries, b_entries = {}, [], []
            for t in range(n):
                gx, gy = rng.uniform(0, 8, size=2)
                g = box(gx, gy, gx + 2, gy + 2)
                if rng.random() < 0.7:
                    gt_boxes[t] = g
                for entries in (a_entries, b_entries):
                    if rng.random() < 0.8:
                        dx, dy = rng.uniform(-2.5, 2.5, size=2)
                        entries.append(TrackedBox(t, box(gx + dx, gy + dy,
                                                         gx + dx + 2, gy + dy + 2)))
            tau = float(rng.uniform(0, 1))
            gt = AnnotationSet(gt_boxes)
            out = reconcile(TrackingList(a_entries), TrackingList(b_entries), gt, tau)
            for entry in out:
                if entry.t in gt:
                    assert iou(entry.box, gt_boxes[entry.t]) >= tau

    def test_tau_validation(self):
        with pytest.raises(ValueError):
            reconcile(TrackingList(), TrackingList(), AnnotationSet(), tau=1.5)


class TestSampleTrack:
    def make(self, n):
        return TrackingList([TrackedBox(t, box(t, 0, t + 1, 1)) for t in range(n)])

    def test_identity_when_len_equals_n(self):
        track = self.make(8)
        assert sample_track(track, 8) == track

    def test_single_entry(self):
        track = self.make(1)
        assert sample_track(track, 5) == track

    def test_even_indices(self):
        out = sample_track(self.make(5), 3)
        assert out.frames() == [0, 2, 4]

    def test_preserves_endpoints(self):
        for n in range(2, 7):
            out = sample_track(self.make(9), n)
            assert out.frames()[0] == 0
            assert out.frames()[-1] == 8
            assert len(out) == n

    def test_empty_and_bad_n(self):
        with pytest.raises(ValueError):
            sample_track(TrackingList(), 3)
        with pytest.raises(ValueError):
            sample_track(self.make(3), 0)


def test_dual_reference_tracking_filters_against_annotations():
    seq, gt_track = moving_square(t_count=16, grid_w=24, grid_h=8)
    gt = AnnotationSet({e.t: e.box for e in gt_track if e.t % 3 == 0})
    tracker = CorrelationTracker(search_radius=2, min_similarity=0.5)
    merged = track_with_dual_references(seq, gt, tracker, tau=0.5)
    boxes = gt_track.by_frame()
    assert len(merged) >= len(gt)
    for entry in merged:
        assert iou(entry.box, boxes[entry.t]) >= 0.7
