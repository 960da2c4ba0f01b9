import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riverbed.forward import BoundaryTrace, SolverConfig, read_trace_csv, write_trace_csv
from riverbed.measurement import (
    NoiseSpec, generate_measured_data, noise_factors, noisy_initial_guess, resample_trace, rng_stream)


@pytest.fixture(scope="module")
def small_cfg(case_a):
    return SolverConfig(1, 20, case_a.final_time)


def test_zero_noise_is_clean(case_a, small_cfg):
    noisy, clean = generate_measured_data(case_a, small_cfg, NoiseSpec(0.0, 0.0, 5), return_clean=True)
    assert np.array_equal(noisy.left, clean.left) and np.array_equal(noisy.right, clean.right)


def test_noise_factor_bounds(case_a, small_cfg):
    noisy, clean = generate_measured_data(case_a, small_cfg, NoiseSpec(0.1, 0.25, 1), return_clean=True)
    nz = clean.as_array()[:, 1:] != 0
    ratio = noisy.as_array()[:, 1:][nz] / clean.as_array()[:, 1:][nz]
    assert ratio.min() >= 0.95 - 1e-15 and ratio.max() <= 1.05 + 1e-15
    assert ratio.std() > 0.01  # entries are independently perturbed


def test_noise_deterministic(case_a, small_cfg, tmp_path):
    a = generate_measured_data(case_a, small_cfg, NoiseSpec(0.1, 0.25, 42))
    b = generate_measured_data(case_a, small_cfg, NoiseSpec(0.1, 0.25, 42))
    c = generate_measured_data(case_a, small_cfg, NoiseSpec(0.1, 0.25, 43))
    write_trace_csv(tmp_path / "a.csv", a)
    write_trace_csv(tmp_path / "b.csv", b)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert not np.array_equal(a.left, c.left)
    back = read_trace_csv(tmp_path / "a.csv")
    assert np.array_equal(back.left, a.left) and np.array_equal(back.times, a.times)
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "t,h_x0,hu_x0,h_xL,hu_xL"


def test_initial_guess_noise():
    t = np.linspace(0, 0.05, 1000)
    exact = noisy_initial_guess(lambda s: 1 + s, t, NoiseSpec(0.1, 0.0, 0))
    assert np.array_equal(exact.values, 1 + t)
    g = noisy_initial_guess(lambda s: 0 * s + 1, t, NoiseSpec(0.1, 0.25, 0))
    assert g.values.min() >= 0.875 and g.values.max() <= 1.125
    assert np.array_equal(g.values, noisy_initial_guess(lambda s: 0 * s + 1, t, NoiseSpec(0.3, 0.25, 0)).values)


def test_streams_independent():
    a = rng_stream(9, 0).uniform(size=5)
    b = rng_stream(9, 1).uniform(size=5)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, rng_stream(9, 0).uniform(size=5))
    assert np.all(noise_factors(0.0, (3, 2), rng_stream(0, 0)) == 1.0)


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(eta_meas=2.0)
    with pytest.raises(ValueError):
        NoiseSpec(eta_p=-0.1)


def _affine_trace(t):
    left = np.column_stack([1 + 2 * t, -3 * t])
    right = np.column_stack([0.5 - t, 4 + 0 * t])
    return BoundaryTrace(t, left, right)


def test_resample_identity_and_extrapolation():
    t = np.linspace(0, 1, 11)
    tr = _affine_trace(t)
    same = resample_trace(tr, t)
    assert np.array_equal(same.left, tr.left) and np.array_equal(same.right, tr.right)
    with pytest.raises(ValueError):
        resample_trace(tr, np.linspace(0, 1.1, 5))
    with pytest.raises(ValueError):
        resample_trace(tr, np.linspace(-0.1, 1, 5))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
def test_resample_exact_on_affine(points):
    src = np.concatenate([[0.0], np.sort(np.random.default_rng(len(points)).uniform(0, 1, 7)), [1.0]])
    target = np.sort(np.array(points))
    out = resample_trace(_affine_trace(src), target)
    ref = _affine_trace(target)
    np.testing.assert_allclose(out.left, ref.left, atol=1e-13)
    np.testing.assert_allclose(out.right, ref.right, atol=1e-13)
