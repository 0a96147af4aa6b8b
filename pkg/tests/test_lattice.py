import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dhls.kernel import build_kernel, dhls_value
from dhls.lattice import (DegenerateInputError, Field, LatticeBox, Mode, ProblemParams,
                          check_embedding, epsilon, gap, lp_norm, normalize, recenter)


def params(n, r, s, alpha, mode=Mode.TRUNCATED):
    return ProblemParams(n, r, s, alpha, mode)


@pytest.mark.parametrize("n, r, s, alpha, expected", [
    (1, 1.25, 1.25, 0.5, 0.1),
    (1, 2, 2, 0, 0.0),
    (2, 2, 2, 1, -0.5),
])
def test_gap_examples(n, r, s, alpha, expected):
    assert gap(params(n, r, s, alpha)) == pytest.approx(expected, abs=1e-15)


def test_epsilon_examples():
    assert epsilon(ProblemParams(1, 1.25, 1.25, 0.5)) == pytest.approx(0.125, abs=1e-15)
    assert epsilon(ProblemParams(1, 1.25, 2, 0.25)) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(ValueError):
        epsilon(ProblemParams(1, 2, 2, 0, Mode.CRITICAL_BENCHMARK))


@pytest.mark.parametrize("kwargs, message", [
    (dict(dim=1, r=1.0, s=2.0, alpha=0.5), "r > 1"),
    (dict(dim=1, r=2, s=2, alpha=0), "gap <= 0"),
    (dict(dim=1, r=1.25, s=1.25, alpha=0), "alpha = 0"),
    (dict(dim=1, r=1.25, s=1.25, alpha=1.0), "alpha must lie"),
    (dict(dim=2, r=2, s=2, alpha=1), "gap <= 0"),
    (dict(dim=1, r=1.25, s=1.25, alpha=0.5, mode="critical"), "gap != 0"),
    (dict(dim=0, r=2, s=2, alpha=0), "positive integer"),
])
def test_params_rejected(kwargs, message):
    with pytest.raises(ValueError, match=message):
        ProblemParams(**kwargs)


@settings(max_examples=300, deadline=None)
@given(n=st.integers(1, 4), a=st.floats(0.01, 0.99), b=st.floats(0.01, 0.99),
       c=st.floats(0.0, 1.0))
def test_epsilon_in_unit_interval(n, a, b, c):
    # 1/r = a, 1/s = b; pick alpha in the supercritical range alpha < n (a + b - 1)
    top = n * (a + b - 1)
    if top <= 1e-9:
        return
    alpha = min(max(c * min(top, n), 1e-9), top * (1 - 1e-9))
    if not (0 < alpha < n):
        return
    p = ProblemParams(n, 1 / a, 1 / b, alpha)
    assert 0 < epsilon(p) < 1


def test_box_enumeration_bijection():
    box = LatticeBox((-1, 0, 2), (1, 2, 3))
    assert box.count == 3 * 3 * 2
    seen = [box.index(k) for k in range(box.count)]
    assert seen == list(box.indices())
    assert [box.offset(i) for i in seen] == list(range(box.count))
    assert [tuple(p) for p in box.points] == seen


def test_box_shapes():
    assert LatticeBox.cube(2, 3).shape == (7, 7)
    assert LatticeBox.interval(1, 5).count == 5
    with pytest.raises(ValueError):
        LatticeBox((2,), (1,))


def test_lp_norm_examples():
    box = LatticeBox.interval(0, 1)
    f = Field(box, [3, 4])
    assert lp_norm(f, 2) == 5.0
    assert lp_norm(f, 1) == 7.0
    assert lp_norm(Field(box, [0, 0]), 3) == 0.0


@settings(max_examples=200, deadline=None)
@given(v=st.lists(st.floats(0, 1e6), min_size=1, max_size=40), c=st.floats(1e-6, 1e6),
       p=st.floats(1, 10))
def test_lp_norm_homogeneous(v, c, p):
    v = np.array(v)
    assert lp_norm(c * v, p) == pytest.approx(c * lp_norm(v, p), rel=1e-12)


def test_normalized_flag_enforced():
    box = LatticeBox.interval(0, 2)
    Field(box, normalize(np.array([1.0, 2.0, 3.0]), 1.5), 1.5, normalized=True)
    with pytest.raises(ValueError):
        Field(box, [1.0, 2.0, 3.0], 1.5, normalized=True)


def test_field_rejects_negative():
    with pytest.raises(ValueError):
        Field(LatticeBox.interval(0, 1), [1.0, -1e-3])


def test_embedding_examples():
    assert check_embedding(np.array([3.0, 4.0]), 1, 2)
    spike = np.array([1.0, 0.0, 0.0])
    for p, q in [(1, 1), (1, 3), (2, 7.5)]:
        assert check_embedding(spike, p, q)
        assert lp_norm(spike, p) == lp_norm(spike, q)
    with pytest.raises(ValueError):
        check_embedding(spike, 3, 2)


def test_embedding_randomized():
    rng = np.random.default_rng(2024)
    violations = 0
    for _ in range(1000):
        v = rng.random(rng.integers(1, 60)) ** rng.uniform(0.2, 8)
        p = rng.uniform(1, 8)
        q = rng.uniform(p, 8)
        violations += not check_embedding(v, p, q)
    assert violations == 0


@settings(max_examples=300, deadline=None)
@given(v=st.lists(st.floats(0, 1e3), min_size=1, max_size=30), p=st.floats(1, 8),
       dq=st.floats(0, 8))
def test_embedding_property(v, p, dq):
    assert check_embedding(np.array(v), p, p + dq)


def test_recenter_single_shift():
    box = LatticeBox.cube(1, 1)
    f = Field(box, [0.1, 0.3, 0.9])
    g = Field(box, [0.5, 0.5, 0.5])
    fb, gb, shift = recenter(f, g)
    assert shift == (-1,)
    assert fb.argmax() == (0,)
    np.testing.assert_array_equal(fb.on_box(box).values, [0.3, 0.9, 0.0])
    assert sorted(fb.flat) == sorted(f.flat)
    assert sorted(gb.flat) == sorted(g.flat)


def test_recenter_identity_and_ties():
    box = LatticeBox.cube(1, 1)
    f = Field(box, [0.2, 0.9, 0.1])
    fb, _, shift = recenter(f, f)
    assert shift == (0,)
    np.testing.assert_array_equal(fb.values, f.values)
    tie = Field(box, [0.7, 0.1, 0.7])
    assert recenter(tie, tie)[2] == (1,)  # index -1 is moved to the origin


def test_recenter_zero_field():
    box = LatticeBox.cube(1, 1)
    z = Field(box, [0, 0, 0])
    with pytest.raises(DegenerateInputError):
        recenter(z, z)


def test_recenter_preserves_J_on_common_box():
    rng = np.random.default_rng(5)
    box = LatticeBox.cube(2, 3)
    p = ProblemParams(2, 1.25, 1.25, 1.0)
    f = Field(box, rng.random(box.shape))
    g = Field(box, rng.random(box.shape))
    fb, gb, _ = recenter(f, g)
    big = box.union(fb.box)
    k = build_kernel(p, big)
    before = dhls_value(k, f.on_box(big), g.on_box(big))
    after = dhls_value(k, fb.on_box(big), gb.on_box(big))
    assert after == pytest.approx(before, rel=1e-12)
    assert math.isclose(before, dhls_value(build_kernel(p, box), f, g), rel_tol=1e-12)
