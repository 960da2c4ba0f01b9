import numpy as np
import pytest

from riverbed.adjoint import (
    AdjointState, MisfitTrace, adjoint_boundary_values, adjoint_coefficients, adjoint_rhs, solve_adjoint,
    write_adjoint_csv)
from riverbed.errors import SingularBoundaryError
from riverbed.forward import GRAVITY, BottomTopography, SolverConfig, SWEState, Trajectory
from riverbed.measurement import resample_trace
from riverbed.mesh import Mesh1D, PiecewiseField, l1_error, project

G = GRAVITY
FLAT = BottomTopography(*(4 * [lambda x: 0 * x]))


def test_coefficients_rest_state():
    AT, ST, CT = adjoint_coefficients(1.0, 0.0, 0.0, G)
    np.testing.assert_array_equal(AT, [[0, 9.812], [1, 0]])
    np.testing.assert_array_equal(ST, np.zeros((2, 2)))
    np.testing.assert_array_equal(CT, np.zeros((2, 2)))


def test_coefficients_source_and_dry():
    _, ST, _ = adjoint_coefficients(2.0, 1.0, 0.5, G)
    assert ST[0, 1] == -0.5 * G
    with pytest.raises(Exception):
        adjoint_coefficients(0.0, 1.0, 0.0)


def test_determinant_symbolic():
    sp = pytest.importorskip("sympy")
    h, u, g = sp.symbols("h u g", positive=True)
    AT = sp.Matrix([[0, g * h - u**2], [1, 2 * u]])
    assert sp.simplify(AT.det() - (u**2 - g * h)) == 0


def test_determinant_numeric(rng):
    for _ in range(20):
        h, hu = rng.uniform(0.5, 10), rng.uniform(-5, 5)
        AT, _, _ = adjoint_coefficients(h, hu, 0.0)
        assert np.linalg.det(AT) == pytest.approx((hu / h) ** 2 - G * h, rel=1e-12)


def test_boundary_values_example():
    v = adjoint_boundary_values(np.array([1.0, 0.0]), (1.0, 0.0), G, "left")
    np.testing.assert_allclose(v, [0.0, -1.0 / 9.812], atol=1e-16)
    # hand inverse of A^T
    M = np.array([[0, 1], [1 / 9.812, 0]])
    AT, _, _ = adjoint_coefficients(1.0, 0.0, 0.0)
    np.testing.assert_allclose(M @ AT, np.eye(2), atol=1e-15)


def test_boundary_values_zero_and_sign(rng):
    assert np.all(adjoint_boundary_values(np.zeros(2), (3.0, 1.0), G, "left") == 0)
    E = rng.normal(size=2)
    left = adjoint_boundary_values(E, (3.0, 1.0), G, "left")
    right = adjoint_boundary_values(E, (3.0, 1.0), G, "right")
    np.testing.assert_array_equal(left, -right)


def test_boundary_values_critical_flow():
    h = 2.0
    hu = h * np.sqrt(G * h)
    with pytest.raises(SingularBoundaryError):
        adjoint_boundary_values(np.ones(2), (h, hu), G, "right", time=0.3)


def _const_state(mesh, k, h, hu):
    return SWEState(mesh, np.stack([project(lambda x: h + 0 * x, mesh, k).coeffs,
                                    project(lambda x: hu + 0 * x, mesh, k).coeffs]))


def test_rhs_zero_sigma():
    mesh = Mesh1D(0, 1, 6)
    z = PiecewiseField(mesh, np.zeros((6, 2)))
    fw = SWEState.project(lambda x: 3 + np.sin(2 * np.pi * x), lambda x: np.cos(2 * np.pi * x), mesh, 1)
    r = adjoint_rhs(AdjointState(z, z), fw, z)
    assert np.all(r.sigma1.coeffs == 0) and np.all(r.sigma2.coeffs == 0)


def test_rhs_constant_everything():
    mesh = Mesh1D(0, 1, 8)
    c = project(lambda x: 0.7 + 0 * x, mesh, 2)
    d = project(lambda x: -1.3 + 0 * x, mesh, 2)
    zero = project(lambda x: 0 * x, mesh, 2)
    r = adjoint_rhs(AdjointState(c, d), _const_state(mesh, 2, 4.0, 1.5), zero,
                    boundary_values=(np.array([0.7, -1.3]), np.array([0.7, -1.3])))
    # each term is of size g h / dx before cancelling
    tol = 1e-14 * G * 4.0 * 8
    assert np.abs(r.sigma1.coeffs).max() < tol and np.abs(r.sigma2.coeffs).max() < tol


def _frozen_trajectory(mesh, k, h, hu, T, n_levels=3):
    st = _const_state(mesh, k, h, hu)
    alpha = abs(hu / h) + np.sqrt(G * h)
    times = np.linspace(0, T, n_levels)
    return Trajectory(mesh, times, np.repeat(st.coeffs[None], n_levels, axis=0), np.full(n_levels, alpha))


def _zero_misfit(T):
    return MisfitTrace(np.array([0.0, T]), np.zeros((2, 2)), np.zeros((2, 2)))


@pytest.mark.parametrize("k", [1, 2])
def test_manufactured_frozen_coefficients_converge(k):
    """Constant forward state, flat bottom: sigma_t + A^T sigma_x = 0, solved exactly by characteristics."""
    h, hu, T = 2.0, 1.0, 0.05
    u, c = hu / h, np.sqrt(G * h)
    AT = np.array([[0, G * h - u * u], [1, 2 * u]])
    lam, R = np.linalg.eig(AT)
    L = np.linalg.inv(R)
    s0 = lambda x: np.stack([np.sin(2 * np.pi * x), 0.5 * np.cos(2 * np.pi * x)])  # noqa: E731

    def exact(x, t):
        # w_i(x, t) = w_i0(x - lam_i (t - T)); sigma = R w
        w = np.stack([np.tensordot(L, s0(x - lam[i] * (t - T)), axes=1)[i] for i in range(2)])
        return np.tensordot(R, w, axes=1)

    errs = []
    for n in (10, 20, 40):
        mesh = Mesh1D(0, 1, n)
        fin = AdjointState(project(lambda x: s0(x)[0], mesh, k), project(lambda x: s0(x)[1], mesh, k))
        traj = _frozen_trajectory(Mesh1D(0, 1, 5), 0, h, hu, T)
        adj = solve_adjoint(traj, _zero_misfit(T), SolverConfig(k, n, T), FLAT, lambda t: 1.0, final_state=fin)
        s1 = adj.state(0).sigma1
        errs.append(l1_error(s1, lambda x: exact(x, 0.0)[0]))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > k + 0.8), rates


@pytest.fixture(scope="module")
def adjoint_setup(case_a, coarse_run, clean_data_a):
    cfg, traj, tr = coarse_run
    meas = resample_trace(clean_data_a, tr.times)
    E = MisfitTrace.from_traces(tr, meas)
    acfg = SolverConfig(1, 25, cfg.final_time)
    run = lambda m: solve_adjoint(traj, m, acfg, case_a.bottom, case_a.p_initial)  # noqa: E731
    return E, run, traj


def test_zero_misfit_gives_zero_sigma(adjoint_setup):
    E, run, _ = adjoint_setup
    adj = run(E.scaled(0.0))
    assert np.all(adj.coeffs == 0.0)


def test_linearity_and_superposition(adjoint_setup, rng):
    E, run, _ = adjoint_setup
    base = run(E).coeffs
    scale = np.abs(base).max()
    assert scale > 0
    assert np.abs(run(E.scaled(-3.7)).coeffs + 3.7 * base).max() <= 1e-10 * 3.7 * scale
    E2 = MisfitTrace(E.times, rng.normal(size=E.left.shape) * 0.01, rng.normal(size=E.right.shape) * 0.01)
    both = run(E + E2).coeffs
    sep = base + run(E2).coeffs
    assert np.abs(both - sep).max() <= 1e-10 * np.abs(both).max()


def test_backward_stability(adjoint_setup):
    E, run, _ = adjoint_setup
    adj = run(E)
    norms = np.sqrt((adj.coeffs**2).sum(axis=(1, 2, 3)))
    prev, nxt = norms[1:], norms[:-1]  # march goes from the end of the array to the start
    grow = nxt[prev > 1e-8 * norms.max()] / prev[prev > 1e-8 * norms.max()]
    assert grow.max() < 10.0
    assert adj.times[0] == 0.0 and adj.times[-1] == traj_T(adjoint_setup)


def traj_T(setup):
    return setup[2].times[-1]


def test_zero_final_time(case_a):
    mesh = Mesh1D(0, 1, 5)
    traj = _frozen_trajectory(mesh, 1, 3.0, 0.5, 0.0, n_levels=1)
    tr = MisfitTrace(np.array([0.0]), np.ones((1, 2)), np.ones((1, 2)))
    adj = solve_adjoint(traj, tr, SolverConfig(1, 5, 0.0), case_a.bottom, lambda t: 1.0)
    assert len(adj.times) == 1 and np.all(adj.coeffs == 0)


def test_unknown_closure(adjoint_setup, case_a, coarse_run):
    E, _, traj = adjoint_setup
    with pytest.raises(ValueError):
        solve_adjoint(traj, E, SolverConfig(1, 25, 0.05), case_a.bottom, case_a.p_initial, closure="open")


def test_adjoint_csv(tmp_path, adjoint_setup):
    E, run, _ = adjoint_setup
    adj = run(E)
    write_adjoint_csv(tmp_path / "adj.csv", adj)
    lines = (tmp_path / "adj.csv").read_text().splitlines()
    assert lines[0].startswith("t,sigma1_0") and len(lines) == len(adj.times) + 1
