import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microtactics.fuzzy import DEFAULT_X, DEFAULT_Y, KernelBank, TriParams, fuzzify, tri_membership

ALL_TRIANGLES = DEFAULT_X + DEFAULT_Y


def interp_oracle(x, p):
    """Piecewise-linear interpolation through (a, 0), (b, 1), (c, 0)."""
    lo, hi = sorted((p.a, p.c))
    return float(np.interp(x, [lo, p.b, hi], [0.0, 1.0, 0.0], left=0.0, right=0.0))


def test_table_values():
    assert DEFAULT_X == ((98, 94, 72), (94, 72, 47), (72, 47, 22), (47, 22, 0), (22, 0, -4))
    assert DEFAULT_Y == ((-2, 0, 17), (0, 17, 33), (17, 33, 50), (33, 50, 51), (50, 51, 60))


def test_worked_examples():
    p = TriParams(98, 94, 72)
    assert tri_membership(94, p) == 1.0
    assert tri_membership(98, p) == 0.0
    assert tri_membership(85, p) == pytest.approx(13 / 22, abs=1e-12)
    assert tri_membership(85, p) == pytest.approx(0.590909, abs=1e-6)


@pytest.mark.parametrize("p", ALL_TRIANGLES)
def test_peak_and_feet(p):
    assert tri_membership(p.b, p) == 1.0
    assert tri_membership(p.a, p) == 0.0
    assert tri_membership(p.c, p) == 0.0


@pytest.mark.parametrize("p", ALL_TRIANGLES)
def test_matches_interpolation_oracle(p):
    lo, hi = sorted((p.a, p.c))
    xs = np.linspace(lo - 5, hi + 5, 301)
    got = tri_membership(xs, p)
    want = [interp_oracle(x, p) for x in xs]
    np.testing.assert_allclose(got, want, atol=1e-12)


@given(st.floats(-1e6, 1e6), st.sampled_from(ALL_TRIANGLES))
def test_range_and_symmetry(x, p):
    v = tri_membership(x, p)
    assert 0.0 <= v <= 1.0
    assert v == tri_membership(x, TriParams(p.c, p.b, p.a))


@pytest.mark.parametrize("x", [np.inf, -np.inf, 1e300, -1e300])
def test_extreme_inputs_clamped(x):
    for p in ALL_TRIANGLES:
        assert tri_membership(x, p) == 0.0


@pytest.mark.parametrize("p", ALL_TRIANGLES)
def test_piecewise_linear_on_rising_edge(p):
    lo = min(p.a, p.c)
    eps = 1e-3 * (p.b - lo)
    xs = np.linspace(lo + eps, p.b - eps, 20)
    slopes = np.diff(tri_membership(xs, p)) / np.diff(xs)
    assert np.ptp(slopes) < 1e-9


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        TriParams(0, 5, 3).check()
    with pytest.raises(ValueError):
        KernelBank(x_params=DEFAULT_X[:4])


def test_fuzzify_shape_and_order(rng):
    x = rng.uniform(-10, 100, size=(22, 25))
    out = fuzzify(x)
    assert out.shape == (110, 25)
    for ch in range(22):
        params = DEFAULT_X if ch % 2 == 0 else DEFAULT_Y
        for r, p in enumerate(params):
            np.testing.assert_array_equal(out[5 * ch + r], tri_membership(x[ch], p))


def test_fuzzify_constant_ball_x_at_94():
    x = np.full((22, 25), 30.0)
    x[0] = 94.0
    out = fuzzify(x)
    assert np.all(out[0] == 1.0)  # region A
    assert np.all(out[2:5] == 0.0)  # regions C-E


def test_fuzzify_outside_all_supports():
    x = np.full((22, 25), 25.0)
    x[4, 7] = -10.0
    out = fuzzify(x)
    assert np.all(out[20:25, 7] == 0.0)


def test_fuzzify_locality(rng):
    x = rng.uniform(0, 94, size=(22, 25))
    base = fuzzify(x)
    y = x.copy()
    y[7, 11] += 3.3
    diff = np.argwhere(fuzzify(y) != base)
    assert set(map(tuple, diff)) <= {(5 * 7 + r, 11) for r in range(5)}


def test_fuzzify_batch_and_channel_check(rng):
    x = rng.uniform(0, 94, size=(4, 22, 25))
    out = fuzzify(x)
    assert out.shape == (4, 110, 25)
    np.testing.assert_array_equal(out[2], fuzzify(x[2]))
    with pytest.raises(ValueError):
        fuzzify(np.zeros((21, 25)))


def test_kernel_csv_roundtrip():
    bank = KernelBank()
    buf = io.StringIO()
    bank.to_csv(buf)
    buf.seek(0)
    assert KernelBank.from_csv(buf) == bank


def test_kernel_override_changes_features():
    text = "axis,region,a,b,c\n" + "".join(f"x,{r},0,10,20\n" for r in "ABCDE") + "".join(
        f"y,{r},0,10,20\n" for r in "MNOPQ"
    )
    bank = KernelBank.from_csv(io.StringIO(text))
    out = fuzzify(np.full((22, 3), 5.0), bank)
    assert np.allclose(out, 0.5)


def test_fraction_exactness_hand_values():
    # spot check that float evaluation equals exact rational arithmetic
    p = TriParams(94, 72, 47)
    x = Fraction(60)
    exact = max(min((x - p.a) / Fraction(p.b - p.a), (p.c - x) / Fraction(p.c - p.b)), 0)
    assert tri_membership(60, p) == pytest.approx(float(exact), abs=1e-15)
