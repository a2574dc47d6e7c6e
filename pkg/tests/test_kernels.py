import os
import subprocess
import sys

import numpy as np
import pytest

from fracperc import _cover_py, kernels
from fracperc.geometry import Box
from fracperc.raster import _axes_for, grid_dims


def make_axes(window, h):
    dims = grid_dims(window, h)
    return dims, _axes_for(window, dims, h)


def test_compiled_extension_present():
    if os.environ.get("FRACPERC_PURE"):
        pytest.skip("pure mode forced by environment")
    assert kernels.HAVE_COMPILED


@pytest.mark.parametrize("dim", [2, 3])
def test_compiled_matches_pure_on_random_balls(dim):
    if not kernels.HAVE_COMPILED:
        pytest.skip("no compiled extension")
    rng = np.random.default_rng(100 + dim)
    window = Box((0.0,) * dim, (1.0,) * dim)
    h = 1 / 64 if dim == 2 else 1 / 24
    dims, axes = make_axes(window, h)
    for _ in range(10):
        n = int(rng.integers(0, 40))
        # centers straddle the window edge so clipped stamps get exercised
        centers = rng.uniform(-0.3, 1.3, (n, dim))
        radii = rng.uniform(0.001, 0.4, n)
        a = np.zeros(dims, dtype=bool)
        b = np.zeros(dims, dtype=bool)
        kernels.cover_balls(a, axes, centers, radii)
        _cover_py.cover_balls(b, axes, centers, radii)
        assert np.array_equal(a, b)


def test_compiled_matches_pure_incremental():
    if not kernels.HAVE_COMPILED:
        pytest.skip("no compiled extension")
    rng = np.random.default_rng(55)
    window = Box((-1.0, 2.0), (1.0, 3.0))
    dims, axes = make_axes(window, 0.01)
    a = np.zeros(dims, dtype=bool)
    b = np.zeros(dims, dtype=bool)
    for _ in range(5):
        centers = rng.uniform((-1.2, 1.8), (1.2, 3.2), (20, 2))
        radii = rng.uniform(0.005, 0.2, 20)
        kernels.cover_balls(a, axes, centers, radii)
        _cover_py.cover_balls(b, axes, centers, radii)
        assert np.array_equal(a, b)


def test_cover_balls_against_bruteforce():
    rng = np.random.default_rng(7)
    window = Box((0.0, 0.0), (1.0, 1.0))
    dims, axes = make_axes(window, 1 / 32)
    centers = rng.uniform(-0.2, 1.2, (15, 2))
    radii = rng.uniform(0.01, 0.3, 15)
    got = np.zeros(dims, dtype=bool)
    kernels.cover_balls(got, axes, centers, radii)
    xs, ys = np.meshgrid(axes[0], axes[1], indexing="ij")
    want = np.zeros(dims, dtype=bool)
    for c, r in zip(centers, radii):
        want |= (xs - c[0]) ** 2 + (ys - c[1]) ** 2 <= r * r
    assert np.array_equal(got, want)


def test_cover_cubes_against_bruteforce():
    rng = np.random.default_rng(8)
    window = Box((0.0, 0.0), (1.0, 1.0))
    dims, axes = make_axes(window, 1 / 32)
    centers = rng.uniform(-0.2, 1.2, (15, 2))
    halves = rng.uniform(0.01, 0.3, 15)
    got = np.zeros(dims, dtype=bool)
    kernels.cover_cubes(got, axes, centers, halves)
    xs, ys = np.meshgrid(axes[0], axes[1], indexing="ij")
    want = np.zeros(dims, dtype=bool)
    for c, hs in zip(centers, halves):
        want |= (np.abs(xs - c[0]) <= hs) & (np.abs(ys - c[1]) <= hs)
    assert np.array_equal(got, want)


def test_empty_input_is_noop():
    dims, axes = make_axes(Box((0.0, 0.0), (1.0, 1.0)), 0.25)
    a = np.zeros(dims, dtype=bool)
    kernels.cover_balls(a, axes, np.empty((0, 2)), np.empty(0))
    kernels.cover_cubes(a, axes, np.empty((0, 2)), np.empty(0))
    assert not a.any()


def test_pure_env_var_disables_extension():
    code = (
        "import fracperc.kernels as k; "
        "print(k.HAVE_COMPILED)"
    )
    env = dict(os.environ, FRACPERC_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "False"
