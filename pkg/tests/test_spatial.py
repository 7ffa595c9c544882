import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidtok.errors import BudgetError, ConfigurationError, DimensionError
from vidtok.spatial import (
    SelectionMask,
    SpatialMemory,
    activation_map,
    make_partition,
    memory_update,
    patch_apportion,
    patch_scores,
    redundancy,
    select_frame,
    select_topk_per_patch,
    token_scores,
)


def test_partition_tail_patch():
    p = make_partition(30, 14)
    assert p.bounds.tolist() == [0, 14, 28, 30]
    assert p.capacities.tolist() == [14, 14, 2]
    assert make_partition(28, 14).count == 2
    with pytest.raises(ConfigurationError):
        make_partition(10, 0)


def test_activation_map(backend):
    f = np.array([[1.0, -1.0], [0.0, 0.0], [3.0, 1.0]])
    assert activation_map(f, backend).tolist() == [0.5, 0.0, 1.0]
    assert activation_map(np.ones((3, 2)), backend).tolist() == [0.5] * 3


def test_patch_scores_are_means():
    part = make_partition(5, 2)
    assert patch_scores([1.0, 0.0, 0.5, 0.5, 0.2], part).tolist() == pytest.approx([0.5, 0.5, 0.2])
    with pytest.raises(DimensionError):
        patch_scores([1.0], part)


def test_patch_apportion_capacity():
    assert patch_apportion([0.9, 0.1], 10, [5, 5]).tolist() == [5, 5]
    assert patch_apportion([0.9, 0.1], 4, [14, 14]).tolist() == [4, 0]
    with pytest.raises(BudgetError):
        patch_apportion([0.5, 0.5], 11, [5, 5])


def test_topk_examples(backend):
    part = make_partition(3, 3)
    m = select_topk_per_patch([0.9, 0.1, 0.5], part, [2], backend)
    assert m.indices.tolist() == [0, 2]
    m = select_topk_per_patch([0.3, 0.3, 0.3], part, [2], backend)
    assert m.indices.tolist() == [0, 1]


def test_topk_rejects_bad_counts():
    part = make_partition(4, 2)
    with pytest.raises(BudgetError):
        select_topk_per_patch(np.zeros(4), part, [3, 0])
    with pytest.raises(DimensionError):
        select_topk_per_patch(np.zeros(4), part, [1])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["python", "cython"]))
def test_topk_matches_sort_oracle(seed, name):
    from vidtok import _backend

    if name not in _backend.AVAILABLE:
        name = "python"
    rng = np.random.default_rng(seed)
    part = make_partition(56, 14)
    scores = np.round(rng.standard_normal(56), 1)  # coarse rounding forces ties
    n = rng.integers(0, 15, size=4)
    got = select_topk_per_patch(scores, part, n, name).indices.tolist()
    want = []
    for i in range(4):
        a, b = 14 * i, 14 * i + 14
        want += sorted(sorted(range(a, b), key=lambda j: (-scores[j], j))[: n[i]])
    assert got == sorted(want)


def test_token_scores():
    assert token_scores([1.0, 0.5], [1.0, 0.0], 0.1).tolist() == [0.9, 0.5]
    assert token_scores([1.0, 0.5], [1.0, 0.0], 0.0).tolist() == [1.0, 0.5]
    with pytest.raises(ConfigurationError):
        token_scores([1.0], [0.0], -1.0)


def test_redundancy_untouched_is_zero(backend):
    mem = SpatialMemory(3, 2, 0.9)
    f = np.ones((3, 2))
    assert redundancy(f, mem, backend).tolist() == [0.0, 0.0, 0.0]
    memory_update(mem, f, SelectionMask(np.array([True, False, False])), backend)
    r = redundancy(f, mem, backend)
    assert r[0] == pytest.approx(1.0) and r[1] == 0.0


def test_memory_update_examples(backend):
    mem = SpatialMemory(2, 2, 0.9)
    v = np.array([[1.0, 2.0], [3.0, 4.0]])
    memory_update(mem, v, SelectionMask(np.array([False, True])), backend)
    assert mem.m_s[0].tolist() == [0.0, 0.0]
    assert mem.m_s[1].tolist() == pytest.approx([2.7, 3.6])
    assert mem.touched.tolist() == [False, True]
    before = mem.m_s.copy()
    memory_update(mem, v, SelectionMask(np.zeros(2, dtype=bool)), backend)
    assert np.array_equal(before, mem.m_s)
    with pytest.raises(DimensionError):
        memory_update(mem, np.zeros((3, 2)), SelectionMask(np.zeros(3, dtype=bool)))


def test_memory_replay_matches_sequential_ema(backend, rng):
    alpha = 0.9
    mem = SpatialMemory(6, 3, alpha)
    ref = np.zeros((6, 3))
    for _ in range(3):
        f = rng.standard_normal((6, 3))
        m = rng.random(6) < 0.5
        memory_update(mem, f, SelectionMask(m), backend)
        for i in range(6):
            if m[i]:
                ref[i] = (1 - alpha) * ref[i] + alpha * f[i]
    assert np.abs(mem.m_s - ref).max() <= 1e-12


def test_select_frame_cardinality_and_locality(backend, rng):
    part = make_partition(40, 14)
    mem = SpatialMemory(40, 5, 0.9)
    for budget in [0, 1, 7, 40, 13]:
        sel = select_frame(rng.standard_normal((40, 5)), budget, mem, part, 0.1, backend)
        assert sel.mask.selected_count == budget
        assert sel.patch_budgets.sum() == budget
    never = ~mem.touched
    assert (mem.m_s[never] == 0).all()


def test_shift_invariance_of_selection(rng):
    part = make_partition(30, 7)
    A = rng.random(30)
    n = np.array([2, 3, 1, 0, 1])
    a = select_topk_per_patch(A, part, n).mask
    b = select_topk_per_patch(A + 3.25, part, n).mask
    assert np.array_equal(a, b)


def test_single_patch_zero_beta_is_global_topk(rng):
    f = rng.standard_normal((20, 4))
    part = make_partition(20, 20)
    sel = select_frame(f, 6, SpatialMemory(20, 4, 0.9), part, 0.0)
    A = activation_map(f)
    assert sel.mask.indices.tolist() == sorted(np.argsort(-A, kind="stable")[:6].tolist())


def test_repeated_frame_suppression():
    # position 0 is the most active, position 1 runs close behind (gap 0.05)
    f = np.array([[1.0, 1.0, 1.0], [0.95, 0.95, 0.95], [1 / 3, 1 / 3, 1 / 3], [0.0, 0.0, 0.0]])
    part = make_partition(4, 4)
    for beta, second in [(0.1, [1]), (0.04, [0]), (0.0, [0])]:
        mem = SpatialMemory(4, 3, 0.9)
        s1 = select_frame(f, 1, mem, part, beta)
        s2 = select_frame(f, 1, mem, part, beta)
        assert s1.mask.indices.tolist() == [0]
        assert s2.mask.indices.tolist() == second
