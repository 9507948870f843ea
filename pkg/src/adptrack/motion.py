"""Constant-velocity Kalman filter over (cx, cy, w, h) box states.

State layout is the usual tracker convention: four box components followed
by their per-frame velocities. All noise magnitudes scale with the current
box height. The initial velocity variance is deliberately enormous (a flat
prior): with exact constant-velocity input the filter then locks onto the
true velocity within two updates instead of dragging a damped transient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoundingBox, from_center, to_center

__all__ = ["MotionNoise", "KalmanState", "kf_init", "kf_predict", "kf_update", "state_to_bbox"]

_MIN_SIZE = 1e-3

_F = np.eye(8)
for _i in range(4):
    _F[_i, _i + 4] = 1.0  # dt = 1 frame
_H = np.eye(4, 8)


@dataclass(frozen=True)
class MotionNoise:
    """Noise std multipliers, each applied to the current box height.

    The init multipliers are huge on purpose: a freshly spawned track starts
    from a flat prior, so its state is pinned by the first two measurements
    instead of being dragged toward the spawn box and a zero velocity.
    """

    pos: float = 1.0 / 20.0
    vel: float = 1.0 / 160.0
    meas: float = 1.0 / 20.0
    init_pos: float = 1e4
    init_vel: float = 1e4

    def __post_init__(self):
        if min(self.pos, self.vel, self.meas, self.init_pos, self.init_vel) <= 0:
            raise ValueError("noise multipliers must be positive")


DEFAULT_NOISE = MotionNoise()


class KalmanState:
    """Immutable filter state: 8-vector mean and 8x8 covariance."""

    __slots__ = ("mean", "covariance")

    def __init__(self, mean, covariance):
        mean = np.asarray(mean, dtype=np.float64)
        covariance = np.asarray(covariance, dtype=np.float64)
        if mean.shape != (8,) or covariance.shape != (8, 8):
            raise ValueError("state needs an 8-vector mean and an 8x8 covariance")
        mean = mean.copy()
        covariance = covariance.copy()
        mean.flags.writeable = False
        covariance.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", covariance)

    def __setattr__(self, name, value):
        raise AttributeError("KalmanState is immutable")


def _scale_height(mean: np.ndarray) -> float:
    return max(abs(float(mean[3])), _MIN_SIZE)


def kf_init(b: BoundingBox, noise: MotionNoise = DEFAULT_NOISE) -> KalmanState:
    """Start a filter at a measured box with zero velocity and a flat velocity prior."""
    cx, cy, w, h = to_center(b)
    mean = np.array([cx, cy, w, h, 0.0, 0.0, 0.0, 0.0])
    pos_std = noise.init_pos * h
    vel_std = noise.init_vel * h
    covariance = np.diag([pos_std**2] * 4 + [vel_std**2] * 4)
    return KalmanState(mean, covariance)


def kf_predict(s: KalmanState, noise: MotionNoise = DEFAULT_NOISE) -> KalmanState:
    """Advance the state one frame under constant velocity, inflating uncertainty."""
    h = _scale_height(s.mean)
    q = np.diag([(noise.pos * h) ** 2] * 4 + [(noise.vel * h) ** 2] * 4)
    mean = _F @ s.mean
    covariance = _F @ s.covariance @ _F.T + q
    covariance = (covariance + covariance.T) / 2.0
    return KalmanState(mean, covariance)


def kf_update(s: KalmanState, measurement: BoundingBox, noise: MotionNoise = DEFAULT_NOISE) -> KalmanState:
    """Correct the state against a measured box (Joseph-form covariance update)."""
    z = np.array(to_center(measurement))
    h = _scale_height(s.mean)
    r = np.diag([(noise.meas * h) ** 2] * 4)
    innovation = z - _H @ s.mean
    s_mat = _H @ s.covariance @ _H.T + r
    gain = s.covariance @ _H.T @ np.linalg.inv(s_mat)
    mean = s.mean + gain @ innovation
    ikh = np.eye(8) - gain @ _H
    covariance = ikh @ s.covariance @ ikh.T + gain @ r @ gain.T
    covariance = (covariance + covariance.T) / 2.0
    return KalmanState(mean, covariance)


def state_to_bbox(s: KalmanState) -> BoundingBox:
    """Mean state as a box; degenerate sizes clamp to a tiny positive floor."""
    cx, cy, w, h = s.mean[:4]
    return from_center(cx, cy, max(float(w), _MIN_SIZE), max(float(h), _MIN_SIZE))
