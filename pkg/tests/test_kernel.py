import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aruba.errors import ConfigError
from aruba.kernel import amplify, make_kernel
from oracles import gaussian_taps_mp, naive_amplify

counts = st.lists(st.integers(0, 10_000), min_size=1, max_size=300)
windows = st.sampled_from([1, 3, 5, 7, 11, 21])
sigmas = st.sampled_from([0.5, 1.0, 2.0, 4.0])


def test_identity_kernel():
    assert make_kernel(1, 3.0).taps.tolist() == [1.0]


def test_window_five_sigma_two():
    # exp(-i^2/8) at 50 digits, frozen
    expected = [0.60653065971263342360, 0.88249690258459540286, 1.0,
                0.88249690258459540286, 0.60653065971263342360]
    assert make_kernel(5, 2).taps == pytest.approx(expected, rel=1e-15)


def test_default_kernel_shape():
    k = make_kernel(11, 2)
    assert len(k.taps) == 11
    assert k.taps[5] == 1.0
    assert np.array_equal(k.taps, k.taps[::-1])
    assert k.offsets.tolist() == list(range(-5, 6))


@pytest.mark.parametrize("window", [0, -3, 2, 10])
def test_bad_window(window):
    with pytest.raises(ConfigError):
        make_kernel(window, 1.0)


@pytest.mark.parametrize("sigma", [0.0, -1.0, float("nan")])
def test_bad_sigma(sigma):
    with pytest.raises(ConfigError):
        make_kernel(3, sigma)


@given(windows, sigmas)
def test_taps_match_high_precision(w, s):
    taps = make_kernel(w, s).taps
    ref = [float(t) for t in gaussian_taps_mp(w, s)]
    assert taps == pytest.approx(ref, rel=1e-12)
    half = (w - 1) // 2
    assert np.all(np.diff(taps[half:]) < 0)
    assert np.all(taps > 0)


def test_amplify_center_spike():
    out = amplify([0, 4, 0], make_kernel(3, 2))
    assert out.tolist() == pytest.approx([3.52998761033838, 4.0, 3.52998761033838], rel=1e-13)


def test_amplify_single_bin_zero_padded():
    assert amplify([5], make_kernel(11, 2)).tolist() == [5.0]


@given(counts)
def test_identity_window(c):
    assert amplify(c, make_kernel(1, 2.0)).tolist() == [float(v) for v in c]


@given(counts, windows, sigmas)
def test_matches_naive(c, w, s):
    k = make_kernel(w, s)
    np.testing.assert_allclose(amplify(c, k), naive_amplify(c, k.taps.tolist()), rtol=1e-12)


@given(counts, windows, sigmas)
def test_never_attenuates(c, w, s):
    assert np.all(amplify(c, make_kernel(w, s)) >= np.asarray(c))


@given(counts, windows, sigmas)
def test_reversal_symmetry(c, w, s):
    k = make_kernel(w, s)
    np.testing.assert_allclose(amplify(c[::-1], k), amplify(c, k)[::-1], rtol=1e-12)


@given(st.integers(1, 200), st.floats(0, 100), windows, st.integers(0, 2**32 - 1))
def test_linearity(m, a, w, seed):
    rng = np.random.default_rng(seed)
    h1, h2 = rng.random(m) * 50, rng.random(m) * 50
    k = make_kernel(w, 2.0)
    np.testing.assert_allclose(amplify(a * h1 + h2, k), a * amplify(h1, k) + amplify(h2, k),
                               rtol=1e-10, atol=1e-9)
