import numpy as np

from vidtok import _backend
from vidtok.bench import attention_pass, bench_video, compare_backends, run_bench


def test_attention_pass_shape_and_rows():
    x = np.random.default_rng(0).standard_normal((7, 4))
    out = attention_pass(x)
    assert out.shape == (7, 4) and out.dtype == np.float32
    assert attention_pass(np.zeros((0, 4))).shape == (0, 4)
    # identical tokens attend uniformly and reproduce themselves
    same = np.ones((5, 3))
    assert np.allclose(attention_pass(same), same)


def test_run_bench_levels():
    v = bench_video(8, 28, 8)
    levels = run_bench(v, (1.0, 0.5), repeats=3)
    assert [lv.tokens for lv in levels] == [224, 112]
    assert levels[0].modeled_cost == 224.0**2
    for lv in levels:
        assert lv.total_ms_mean >= lv.compress_ms_mean > 0
        assert lv.as_dict()["retention"] == lv.retention


def test_compare_backends_reports_each():
    res = compare_backends(bench_video(4, 28, 8), repeats=2)
    for name in _backend.AVAILABLE:
        assert res[name]["compress_ms_mean"] > 0
    assert res["masks_agree"]
    assert ("speedup" in res) == ("cython" in _backend.AVAILABLE)
