import numpy as np
import pytest


def make_road_image(size=316, road=200, patch=40, patch_rect=(120, 120, 60, 60)):
    """Synthetic road with a dark square patch; rect is (x, y, w, h) aligned
    to the downsampling factor so detection cells stay pure."""
    img = np.full((size, size), road, dtype=np.uint8)
    x, y, w, h = patch_rect
    img[y:y + h, x:x + w] = patch
    truth = np.zeros((size, size), dtype=np.uint8)
    truth[y:y + h, x:x + w] = 255
    return img, truth


def pixel_f1(mask, truth):
    pred = mask == 255
    actual = truth == 255
    tp = (pred & actual).sum()
    fp = (pred & ~actual).sum()
    fn = (~pred & actual).sum()
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


@pytest.fixture
def road_image():
    return make_road_image()
