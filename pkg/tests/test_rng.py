import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dividend_barrier.rng import inv_norm, path_stream, raw_stream, step_uniforms, to_open_unit

u64 = st.integers(min_value=0, max_value=(1 << 64) - 1)


@settings(max_examples=25, deadline=None)
@given(seed=u64, path=u64)
def test_stream_matches_numpy_philox(seed, path):
    words = raw_stream(seed, path, 8).ravel()
    ref = np.random.Philox(key=(path << 64) | seed).random_raw(32)
    assert np.array_equal(words, ref)


def test_path_stream_is_the_same_generator():
    g = path_stream(5, 9)
    assert np.array_equal(g.bit_generator.random_raw(8), raw_stream(5, 9, 2).ravel())


def test_step_access_is_random_access():
    words = raw_stream(123, 4, 50)
    u = step_uniforms(np.uint64(123), np.uint64(4), 37)
    assert u[0] == to_open_unit(words[37, 0])
    assert u[3] == to_open_unit(words[37, 3])


def test_open_unit_interval():
    assert to_open_unit(np.uint64(0)) == 2.0**-53
    assert to_open_unit(np.uint64((1 << 64) - 1)) == 1.0 - 2.0**-53


def test_uniformity_and_normals():
    w = raw_stream(7, 0, 20000).ravel()
    u = np.array([to_open_unit(v) for v in w[:40000]])
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / u.size)
    z = np.array([inv_norm(v) for v in u[:20000]])
    assert abs(z.mean()) < 4 / np.sqrt(z.size)
    assert abs(z.var() - 1.0) < 4 * np.sqrt(2 / z.size)


def test_distinct_paths_and_seeds_differ():
    a, b, c = raw_stream(1, 0, 4), raw_stream(1, 1, 4), raw_stream(2, 0, 4)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.parametrize("u, z", [(0.5, 0.0), (0.975, 1.959963984540054), (0.025, -1.959963984540054)])
def test_inverse_normal(u, z):
    assert inv_norm(u) == pytest.approx(z, abs=1e-14)
