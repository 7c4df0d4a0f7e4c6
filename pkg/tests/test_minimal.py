import numpy as np
import pytest

from stringphase import dynamics as dyn
from stringphase import minimal
from stringphase.carter_geometry import SheetGeometry


def test_catenoid_oracle_functions():
    c = minimal.catenoid_neck(0.5)
    assert c * np.cosh(0.5 / c) == pytest.approx(1.0, abs=1e-12)
    assert minimal.goldschmidt_limit() == pytest.approx(0.6627, abs=1e-3)
    with pytest.raises(ValueError):
        minimal.catenoid_neck(0.8)


def test_polyhedral_area_of_flat_square():
    x = np.zeros((3, 3, 3))
    x[..., 0], x[..., 1] = np.meshgrid([0, 0.5, 1], [0, 0.5, 1], indexing="ij")
    area, G, _ = minimal.polyhedral_area(x, False)
    assert area == pytest.approx(1.0)
    # interior node gradient vanishes on a flat regular grid
    np.testing.assert_allclose(G[1, 1], 0.0, atol=1e-14)


def test_area_gradient_matches_finite_differences(rng):
    st = minimal.SolverState(n_z=9, n_u=12)
    x = st.x + 0.01 * rng.normal(size=st.x.shape)
    _, G, _ = minimal.polyhedral_area(x, True)
    h = 1e-6
    for idx in [(3, 4, 0), (5, 7, 2), (1, 0, 1)]:
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        fd = (minimal.polyhedral_area(xp, True)[0] - minimal.polyhedral_area(xm, True)[0]) / (2 * h)
        assert G[idx] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_coarse_catenoid_relaxation():
    st = minimal.SolverState(half_separation=0.5, n_z=17, n_u=32, grad_tol=1e-4)
    sh = minimal.relax_multilevel(st)
    assert st.status == "converged"
    area = minimal.polyhedral_area(st.x, True)[0]
    assert area == pytest.approx(minimal.catenoid_area(0.5), rel=2e-2)
    assert minimal.neck_radius(st.x) == pytest.approx(minimal.catenoid_neck(0.5), rel=1e-2)
    # boundary circles never move
    ref = minimal.SolverState(half_separation=0.5, n_z=17, n_u=32).x
    np.testing.assert_array_equal(st.x[[0, -1]], ref[[0, -1]])
    # line-search steps decrease the area at every accepted iterate
    areas = np.array([h[1] for h in st.history])
    assert np.all(np.diff(areas) <= 1e-12 * areas[0])
    K = dyn.residual_norm(sh, dyn.dng_residual(SheetGeometry(sh, analytic=False)))
    assert K < 0.1


def test_planar_disk_is_flat():
    st = minimal.SolverState(topology="disk", n_z=9, grad_tol=1e-6)
    sh = minimal.relax_minimal(st)
    assert np.max(np.abs(st.x[..., 2])) < 1e-8
    assert st.status == "converged"
    assert sh.shape == st.x.shape[:2]


def test_beyond_goldschmidt_limit_is_reported():
    st = minimal.SolverState(half_separation=0.8, n_z=17, n_u=24, max_iter=3000)
    with pytest.raises(minimal.SolverDivergenceError):
        minimal.relax_minimal(st)
    assert st.status in ("neck_collapse", "not_converged")
    assert st.history


def test_unknown_topology():
    with pytest.raises(ValueError):
        minimal.SolverState(topology="torus")
