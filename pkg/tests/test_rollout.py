import numpy as np
import pytest

from conftest import make_det, make_frame

from adptrack.appearance import QualityVector
from adptrack.assignment import WeightMatrix
from adptrack.base_tracker import Track, TrackerParams, TrackerState, run as run_base, step
from adptrack.core import FeatureVec, iou
from adptrack.motion import kf_predict, kf_update, state_to_bbox
from adptrack.rollout import (
    AdpConfig,
    TentativeTrack,
    Variant,
    adp_step,
    candidate_filter,
    combine_costs,
    crowd_check,
    run as run_adp,
    score_f1,
    score_f2,
    score_f3,
    score_main,
    simulate_tentative,
)
from adptrack.synthworld import ScenarioConfig, generate

PARAMS = TrackerParams()
NO_FILTERS = AdpConfig(enable_candidate_filter=False, enable_crowd_heuristic=False)

E1 = (1.0, 0.0)
E2 = (0.0, 1.0)


def _track_with_features(features, qualities=None):
    """Track whose matched history carries the given features, in order."""
    track = Track(1, 1, make_det(1, 0, 0, feature=features[0]))
    for i, feat in enumerate(features[1:], start=2):
        det = make_det(i, 0, 0, feature=feat)
        track.history.append((i, det))
        track.quality.append(0.9)
    if qualities is not None:
        track.quality = QualityVector(qualities)
    return track


def _tentative(features, start_frame=3, left=0.0):
    entries = tuple(
        (start_frame + i, make_det(start_frame + i, left, 0, feature=f)) for i, f in enumerate(features)
    )
    return TentativeTrack(origin_det=0, entries=entries)


def _converged_track(positions, start=1):
    """Track stepped through the given x positions (constant box size)."""
    track = Track(1, start, make_det(start, positions[0], 0))
    for i, x in enumerate(positions[1:], start=start + 1):
        det = make_det(i, x, 0)
        track.kalman = kf_update(kf_predict(track.kalman), det.bbox)
        track.history.append((i, det))
        track.quality.append(1.0)
    return track


def test_simulate_tentative_stationary():
    frames = [
        make_frame(5, [make_det(5, 0, 0), make_det(5, 30, 0, feature=E2)]),
        make_frame(6, [make_det(6, 0, 0), make_det(6, 30, 0, feature=E2)]),
    ]
    tents = simulate_tentative(frames, PARAMS)
    assert [t.origin_det for t in tents] == [0, 1]
    assert all(len(t.entries) == 2 for t in tents)
    assert all(t.entries[0][0] == 5 for t in tents)


def test_simulate_tentative_empty_frame():
    assert simulate_tentative([make_frame(5, [])], PARAMS) == []


def test_simulate_tentative_truncates():
    frames = [make_frame(i, [make_det(i, 4.0 * (i - 5), 0)]) for i in range(5, 9)]
    tents = simulate_tentative(frames, PARAMS)
    assert len(tents) == 1
    assert len(tents[0].entries) <= 4
    frames_read = [f for f, _ in tents[0].entries]
    assert min(frames_read) >= 5 and max(frames_read) <= 8


def test_simulate_tentative_rejects_empty_window():
    with pytest.raises(ValueError):
        simulate_tentative([], PARAMS)


def test_score_main_examples():
    cfg = AdpConfig(window=2, enable_candidate_filter=False)
    track = _track_with_features([E1, E1])
    assert score_main(track, _tentative([E1, E1]), cfg) == pytest.approx(1.0)

    track = _track_with_features([E1, E1])
    assert score_main(track, _tentative([E2]), cfg) == pytest.approx(0.0)

    track = _track_with_features([E1, E2])
    assert score_main(track, _tentative([E1]), cfg) == pytest.approx(0.5)


def test_score_main_filter_disabled_equals_all_pairs_mean():
    rng = np.random.default_rng(0)
    cfg = AdpConfig(window=3, enable_candidate_filter=False)
    feats = [tuple(rng.normal(size=4)) for _ in range(3)]
    track = _track_with_features(feats)
    tent_feats = [tuple(rng.normal(size=4)) for _ in range(4)]
    tent = _tentative(tent_feats, start_frame=4)
    got = score_main(track, tent, cfg)
    wf = [FeatureVec(f).values for f in feats]
    tf = [FeatureVec(f).values for f in tent_feats]
    expected = np.mean([np.dot(a, b) for a in wf for b in tf])
    assert got == pytest.approx(expected, abs=1e-12)


def test_score_f1_follows_converged_extrapolation():
    track = _converged_track([0, 4, 8, 12, 16])
    tent = TentativeTrack(
        origin_det=0,
        entries=tuple((6 + i, make_det(6 + i, 20 + 4 * i, 0)) for i in range(4)),
    )
    assert score_f1(track, tent) > 0.99


def test_score_f1_disjoint_is_zero():
    track = _converged_track([0, 4])
    tent = _tentative([E1, E1], start_frame=3, left=900.0)
    assert score_f1(track, tent) == 0.0


def test_score_f1_single_entry_is_one_step_iou():
    track = _converged_track([0, 4, 8])
    box = make_det(4, 14, 0)
    tent = TentativeTrack(origin_det=0, entries=((4, box),))
    expected = iou(state_to_bbox(kf_predict(track.kalman)), box.bbox)
    assert score_f1(track, tent) == pytest.approx(expected, abs=1e-12)


def test_score_f2_examples():
    cfg = AdpConfig(window=2)
    track = _track_with_features([E1, E1])
    assert score_f2(track, make_det(3, 0, 0, feature=E1), cfg) == pytest.approx(1.0)
    assert score_f2(track, make_det(3, 0, 0, feature=E2), cfg) == pytest.approx(0.0)

    track = _track_with_features([E1, (1.0, 1.0)])
    got = score_f2(track, make_det(3, 0, 0, feature=E1), cfg)
    assert got == pytest.approx(0.8535533905932737, abs=1e-6)


def test_score_f3_perfect_and_orthogonal():
    track = _converged_track([0, 0, 0])
    tent = _tentative([E1, E1], start_frame=4)
    assert score_f3(track, tent) == pytest.approx(1.0, abs=1e-6)
    tent = _tentative([E2, E2], start_frame=4)
    assert score_f3(track, tent) == pytest.approx(0.0)


def test_score_f3_matches_scripted_walk():
    # independent recomputation of the min(iou, cos) walk
    track = _converged_track([0, 3, 6])
    feats = [(0.7, np.sqrt(1 - 0.49)), (0.9, np.sqrt(1 - 0.81))]
    tent = TentativeTrack(
        origin_det=0,
        entries=tuple((4 + i, make_det(4 + i, 9 + 3 * i + i, 0, feature=f)) for i, f in enumerate(feats)),
    )
    state = track.kalman
    expected = []
    for _, det in tent.entries:
        state = kf_predict(state)
        overlap = iou(state_to_bbox(state), det.bbox)
        cos = float(np.dot(track.rep_feature.values, det.feature.values))
        expected.append(min(overlap, max(cos, 0.0)))
        state = kf_update(state, det.bbox)
    assert score_f3(track, tent) == pytest.approx(np.mean(expected), abs=1e-12)


def test_score_f3_cosine_caps_score():
    # geometry is perfect, so the constant cosine is the score
    track = _converged_track([0, 0, 0])
    cos = 0.7
    tent = _tentative([(cos, np.sqrt(1 - cos**2))] * 2, start_frame=4)
    assert score_f3(track, tent) == pytest.approx(cos, abs=1e-6)


def test_candidate_filter_examples():
    cfg = AdpConfig()
    track = _converged_track([0, 0, 0])
    tent = _tentative([E1, E1], start_frame=4)
    assert candidate_filter(track, tent, cfg) == list(tent.entries)

    impossible = AdpConfig(cand_iou=1.1)
    assert candidate_filter(track, tent, impossible) == []
    assert score_main(track, tent, impossible) == 0.0

    near = make_det(4, 0, 0)
    far = make_det(5, 500, 0)
    tent = TentativeTrack(origin_det=0, entries=((4, near), (5, far)))
    kept = candidate_filter(track, tent, cfg)
    assert kept == [(4, near)]


def test_crowd_check_rules():
    cfg = AdpConfig(crowd_ratio=0.5, crowd_min_age=10, beta=0.15)
    track = _track_with_features([E1] * 6, qualities=[0.9] * 6)
    track.age = 20
    assert crowd_check(track, cfg) is False

    track = _track_with_features([E1] * 6, qualities=[0.01] * 6)
    track.age = 20
    assert crowd_check(track, cfg) is True

    track = _track_with_features([E1] * 6, qualities=[0.01, 0.01, 0.01, 0.9, 0.9, 0.9])
    track.age = 20
    assert crowd_check(track, cfg) is True  # 3 of 6 below beta, inclusive boundary

    young = _track_with_features([E1] * 6, qualities=[0.01] * 6)
    young.age = 5
    assert crowd_check(young, cfg) is False


def test_combine_costs_endpoints_and_blend():
    w = WeightMatrix([[0.4, 0.2], [0.1, 0.9]])
    z = WeightMatrix([[0.8, 0.6], [0.5, 0.3]])
    assert np.array_equal(combine_costs(w, z, 0.0).array, w.array)
    assert np.array_equal(combine_costs(w, z, 1.0).array, z.array)
    blended = combine_costs(w, z, 0.25)
    assert blended.array[0, 0] == pytest.approx(0.5)
    crowd = combine_costs(w, z, 0.25, crowd_rows=[1])
    assert np.array_equal(crowd.array[1], w.array[1])
    with pytest.raises(ValueError):
        combine_costs(w, WeightMatrix([[1.0]]), 0.5)


def _crossing_frames(seed=21, frames=24):
    sc = generate(
        ScenarioConfig(
            seed=seed,
            frames=frames,
            identities=4,
            crossings=1,
            det_noise_px=0.4,
            feature_noise=0.1,
            drop_prob_occluded=0.7,
        )
    )
    return list(sc.det_frames)


def test_adp_step_alpha_zero_matches_base_step():
    frames = _crossing_frames()
    cfg = AdpConfig(alpha=0.0, horizon=4, enable_candidate_filter=False, enable_crowd_heuristic=False)
    state_a = TrackerState(PARAMS, frame_cursor=0)
    state_b = TrackerState(PARAMS, frame_cursor=0)
    step(state_a, frames[0])
    step(state_b, frames[0])
    for i in range(1, len(frames)):
        _, m_base = step(state_a, frames[i])
        _, m_adp = adp_step(state_b, frames[i : i + cfg.horizon + 1], cfg)
        assert m_base == m_adp


def test_adp_step_truncated_window_still_matches():
    frames = _crossing_frames(frames=6)
    state = TrackerState(PARAMS, frame_cursor=0)
    step(state, frames[0])
    cfg = AdpConfig(horizon=15)
    _, matching = adp_step(state, frames[1:], cfg)  # only 5 future frames exist
    assert isinstance(matching.pairs, tuple)
    assert state.frame_cursor == frames[1].index


def test_adp_step_rejects_empty_window():
    state = TrackerState(PARAMS, frame_cursor=0)
    with pytest.raises(ValueError):
        adp_step(state, [], AdpConfig())


def test_run_single_frame_spawns_without_matching():
    frames = [make_frame(1, [make_det(1, 0, 0), make_det(1, 40, 0)])]
    rows = run_adp(frames, PARAMS, AdpConfig())
    assert [(f, tid) for f, tid, _ in rows] == [(1, 1), (1, 2)]


def test_run_alpha_zero_equals_base_run():
    frames = _crossing_frames(seed=33, frames=30)
    cfg = AdpConfig(alpha=0.0, horizon=5, enable_candidate_filter=False, enable_crowd_heuristic=False)
    assert run_adp(frames, PARAMS, cfg) == run_base(frames, PARAMS)


def test_run_deterministic():
    frames = _crossing_frames(seed=34, frames=25)
    cfg = AdpConfig(horizon=5)
    assert run_adp(frames, PARAMS, cfg) == run_adp(frames, PARAMS, cfg)


def test_variant_scores_stay_in_range():
    rng = np.random.default_rng(8)
    cfg_main = AdpConfig(enable_candidate_filter=False)
    for _ in range(20):
        feats = [tuple(rng.normal(size=6)) for _ in range(4)]
        track = _track_with_features(feats, qualities=list(rng.uniform(-1, 1, size=4)))
        tent = _tentative([tuple(rng.normal(size=6)) for _ in range(3)], start_frame=6)
        assert -1.0 <= score_main(track, tent, cfg_main) <= 1.0
        assert -1.0 <= score_f2(track, tent.entries[0][1], cfg_main) <= 1.0
        assert 0.0 <= score_f1(track, tent) <= 1.0
        assert 0.0 <= score_f3(track, tent) <= 1.0


def test_all_variants_run_end_to_end():
    frames = _crossing_frames(seed=40, frames=18)
    for variant in Variant:
        cfg = AdpConfig(horizon=3, variant=variant)
        rows = run_adp(frames, PARAMS, cfg)
        assert rows, variant
