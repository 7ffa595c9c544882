import numpy as np
import pytest

from vidtok import _backend


@pytest.fixture(params=sorted(_backend.AVAILABLE))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_video(rng, T, N, D):
    from vidtok import VideoTokens

    return VideoTokens(rng.standard_normal((T, N, D)))


def mask_lists(masks):
    return [np.flatnonzero(m).tolist() for m in masks]
