import numpy as np

from adptrack.core import BoundingBox, Detection, FeatureVec, FrameData
from adptrack.metrics import LabeledBox


def make_det(frame, left, top, width=10.0, height=10.0, feature=(1.0, 0.0), conf=0.9):
    return Detection(
        frame=frame,
        bbox=BoundingBox(left, top, width, height),
        feature=FeatureVec(feature),
        confidence=conf,
    )


def make_frame(index, dets):
    return FrameData(index=index, detections=tuple(dets))


def unit_feature(dim, axis):
    v = np.zeros(dim)
    v[axis] = 1.0
    return FeatureVec(v)


def rows_to_boxes(rows):
    return [LabeledBox(frame=f, id=tid, bbox=det.bbox) for f, tid, det in rows]
