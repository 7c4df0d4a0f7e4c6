"""Two-dimensional imbedded surfaces: catalog, jets, induced metric, integration.

A sheet lives on a rectangular (tau, sigma) grid. Either direction may be
periodic; a periodic direction may carry a constant coordinate shift so
that e.g. ``x = (tau, sigma, 0, 0)`` with ``sigma ~ sigma + 2 pi`` is
allowed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import sympy as sp

from .background import BackgroundMetric

TAU, SIG = sp.symbols("tau sigma", real=True)


class DegenerateSurfaceError(ValueError):
    pass


class SliceError(ValueError):
    pass


class BoundaryStencilError(ValueError):
    pass


# ---------------------------------------------------------------- differencing

def grid_diff(f: np.ndarray, axis: int, h: float, periodic: bool,
              shift: np.ndarray | None = None) -> np.ndarray:
    """Second-order derivative along grid axis 0 or 1.

    Periodic axes use centred differences with wrap-around (adding
    ``shift`` across the seam); open axes use one-sided second-order
    stencils at the ends.
    """
    if periodic:
        fp = np.roll(f, -1, axis=axis)
        fm = np.roll(f, 1, axis=axis)
        if shift is not None and np.any(shift):
            idx_last = [slice(None)] * f.ndim
            idx_last[axis] = -1
            idx_first = [slice(None)] * f.ndim
            idx_first[axis] = 0
            fp[tuple(idx_last)] = fp[tuple(idx_last)] + shift
            fm[tuple(idx_first)] = fm[tuple(idx_first)] - shift
        return (fp - fm) / (2.0 * h)
    if f.shape[axis] < 3:
        raise BoundaryStencilError("open direction needs at least 3 nodes")
    return np.gradient(f, h, axis=axis, edge_order=2)


# --------------------------------------------------------------- analytic maps

class AnalyticMap:
    """Symbolic embedding x^mu(tau, sigma) with exact first and second partials."""

    def __init__(self, exprs):
        self.exprs = [sp.sympify(e) for e in exprs]
        syms = (TAU, SIG)
        d1 = [[sp.diff(e, s) for e in self.exprs] for s in syms]
        d2 = [[[sp.diff(e, s, r) for e in self.exprs] for r in syms] for s in syms]
        self._x = sp.lambdify(syms, self.exprs, "numpy")
        self._d1 = sp.lambdify(syms, d1, "numpy")
        self._d2 = sp.lambdify(syms, d2, "numpy")

    @staticmethod
    def _stack(vals, shape):
        return np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in vals],
                        axis=-1)

    def x(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        return self._stack(self._x(t, s), t.shape)

    def d1(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        out = self._d1(t, s)
        return np.stack([self._stack(row, t.shape) for row in out], axis=-2)

    def d2(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        out = self._d2(t, s)
        return np.stack([np.stack([self._stack(c, t.shape) for c in row], axis=-2)
                         for row in out], axis=-3)


# ----------------------------------------------------------------------- sheets

@dataclass(frozen=True)
class EmbeddingJet:
    x: np.ndarray    # (..., n)
    dx: np.ndarray   # (..., 2, n)
    ddx: np.ndarray  # (..., 2, 2, n)


@dataclass(frozen=True)
class InducedMetric:
    gamma: np.ndarray
    gamma_inv: np.ndarray
    dens: np.ndarray


@dataclass(frozen=True, eq=False)
class EmbeddingSheet:
    name: str
    bg: BackgroundMetric
    tau_range: tuple[float, float]
    sig_range: tuple[float, float]
    shape: tuple[int, int]
    periodic: tuple[bool, bool]
    x: np.ndarray
    analytic: AnalyticMap | None = None
    shifts: tuple = (None, None)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.x)):
            raise ValueError(f"sheet {self.name}: non-finite node values")
        if self.x.shape != self.shape + (self.bg.dim,):
            raise ValueError(f"sheet {self.name}: grid shape {self.x.shape} mismatch")

    # grid geometry
    @staticmethod
    def axis_nodes(rng, n, periodic):
        a, b = rng
        if periodic:
            return a + (b - a) * np.arange(n) / n
        return np.linspace(a, b, n)

    @cached_property
    def tau(self) -> np.ndarray:
        return self.axis_nodes(self.tau_range, self.shape[0], self.periodic[0])

    @cached_property
    def sig(self) -> np.ndarray:
        return self.axis_nodes(self.sig_range, self.shape[1], self.periodic[1])

    @cached_property
    def mesh(self):
        return np.meshgrid(self.tau, self.sig, indexing="ij")

    @property
    def h(self) -> tuple[float, float]:
        return (self.tau[1] - self.tau[0], self.sig[1] - self.sig[0])

    @property
    def dim(self) -> int:
        return self.bg.dim

    @property
    def lorentzian(self) -> bool:
        return self.bg.lorentzian

    def diff(self, f: np.ndarray, axis: int, coordinate: bool = False) -> np.ndarray:
        shift = self.shifts[axis] if coordinate else None
        return grid_diff(f, axis, self.h[axis], self.periodic[axis], shift)

    def interior_mask(self, margin: int = 1) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        for axis in (0, 1):
            if not self.periodic[axis] and margin:
                idx = [slice(None), slice(None)]
                idx[axis] = slice(0, margin)
                mask[tuple(idx)] = False
                idx[axis] = slice(-margin, None)
                mask[tuple(idx)] = False
        return mask

    def region_mask(self, frac: float = 0.1) -> np.ndarray:
        """Nodes at least ``frac`` of the parameter length away from open edges.

        Unlike ``interior_mask`` this selects the same physical region at
        every resolution, which is what convergence orders need.
        """
        masks = []
        for axis, coords in ((0, self.tau), (1, self.sig)):
            if self.periodic[axis]:
                masks.append(np.ones(coords.size, dtype=bool))
                continue
            a, b = (self.tau_range, self.sig_range)[axis]
            pad = frac * (b - a)
            masks.append((coords >= a + pad - 1e-12) & (coords <= b - pad + 1e-12))
        return np.outer(masks[0], masks[1])

    def quadrature_weights(self) -> np.ndarray:
        w = []
        for axis in (0, 1):
            n = self.shape[axis]
            wa = np.full(n, self.h[axis])
            if not self.periodic[axis]:
                wa[0] *= 0.5
                wa[-1] *= 0.5
            w.append(wa)
        return np.outer(w[0], w[1])

    def deformed(self, xi: np.ndarray, eps: float, name: str | None = None) -> EmbeddingSheet:
        """Grid sheet with nodes moved to ``x + eps * xi``."""
        return replace(self, x=self.x + eps * np.asarray(xi), analytic=None,
                       name=name or self.name)

    def as_grid(self) -> EmbeddingSheet:
        return replace(self, analytic=None)

    def metric_nodes(self) -> np.ndarray:
        return self.bg.metric_array(self.x)


def _make_sheet(name, bg, tau_range, sig_range, shape, periodic, exprs, shifts=(None, None),
                params=None) -> EmbeddingSheet:
    amap = AnalyticMap(exprs)
    t = EmbeddingSheet.axis_nodes(tau_range, shape[0], periodic[0])
    s = EmbeddingSheet.axis_nodes(sig_range, shape[1], periodic[1])
    T, S = np.meshgrid(t, s, indexing="ij")
    x = amap.x(T, S)
    shifts = tuple(None if sh is None else np.asarray(sh, float) for sh in shifts)
    return EmbeddingSheet(name, bg, tuple(tau_range), tuple(sig_range), tuple(shape),
                          tuple(periodic), x, amap, shifts, dict(params or {}))


# ---------------------------------------------------------------------- catalog

TWO_PI = 2.0 * np.pi
SPHERE_CUT = 0.2


def plane(n: int = 32, dim: int = 3, side: float = 1.0, lorentzian: bool = False):
    bg = BackgroundMetric(dim, "minkowski" if lorentzian else "euclidean")
    exprs = [TAU, SIG] + [0] * (dim - 2)
    return _make_sheet("plane", bg, (0.0, side), (0.0, side), (n, n), (False, False), exprs)


def static_string(n: int = 64, t_max: float = 2.0):
    bg = BackgroundMetric(4, "minkowski")
    return _make_sheet("static_string", bg, (0.0, t_max), (0.0, TWO_PI), (n, n),
                       (False, True), [TAU, SIG, 0, 0], shifts=(None, [0, TWO_PI, 0, 0]))


def rotating_string(n: int = 64, t_max: float = 1.0, cut: float = 0.4):
    bg = BackgroundMetric(4, "minkowski")
    exprs = [TAU, sp.cos(SIG) * sp.cos(TAU), sp.cos(SIG) * sp.sin(TAU), 0]
    return _make_sheet("rotating_string", bg, (0.0, t_max), (cut, np.pi - cut), (n, n),
                       (False, False), exprs)


def _sphere_exprs(chart: str, radial=None):
    st, ct = sp.sin(TAU), sp.cos(TAU)
    sf, cf = sp.sin(SIG), sp.cos(SIG)
    if chart == "A":
        unit = [st * cf, st * sf, ct]
    else:
        unit = [ct, st * cf, st * sf]
    if radial is None:
        return unit
    r = radial(*unit)
    return [r * u for u in unit]


def sphere(n: int = 64, chart: str = "A", dim: int = 3, deformation=None):
    """Unit sphere chart; chart "B" has its poles on the x axis.

    ``deformation`` is an optional ``SphereDeformation`` giving radius
    ``1 + amp * f(X, Y, Z)`` in Cartesian unit-vector variables.
    """
    bg = BackgroundMetric(dim, "euclidean")
    radial = deformation.radial if deformation is not None else None
    exprs = _sphere_exprs(chart, radial) + [0] * (dim - 3)
    name = f"sphere{chart}" if deformation is None else f"sphere{chart}_deformed"
    return _make_sheet(name, bg, (SPHERE_CUT, np.pi - SPHERE_CUT), (0.0, TWO_PI), (n, n),
                       (False, True), exprs, params={"chart": chart})


@dataclass(frozen=True)
class SphereDeformation:
    amp: float
    seed: int

    def coefficients(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        c = rng.normal(size=9)
        return c / np.max(np.abs(c))

    def radial(self, X, Y, Z):
        c = self.coefficients()
        basis = [X, Y, Z, X * Y, Y * Z, Z * X, X ** 2 - Y ** 2, X * Y * Z, Z ** 3]
        return 1 + self.amp * sum(float(ci) * b for ci, b in zip(c, basis))


def catenoid(n: int = 64, v_max: float = 1.0):
    bg = BackgroundMetric(3, "euclidean")
    exprs = [sp.cosh(TAU) * sp.cos(SIG), sp.cosh(TAU) * sp.sin(SIG), TAU]
    return _make_sheet("catenoid", bg, (-v_max, v_max), (0.0, TWO_PI), (n, n),
                       (False, True), exprs)


def flat_torus(n: int = 64):
    bg = BackgroundMetric(4, "euclidean")
    exprs = [sp.cos(TAU), sp.sin(TAU), sp.cos(SIG), sp.sin(SIG)]
    return _make_sheet("flat_torus", bg, (0.0, TWO_PI), (0.0, TWO_PI), (n, n),
                       (True, True), exprs)


def graph_surface(n: int = 64, amp: float = 0.3, seed: int = 0):
    """Doubly periodic graph (tau, sigma, amp f1, amp f2) in Euclidean 4-space."""
    bg = BackgroundMetric(4, "euclidean")
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(2, 6))
    c /= np.max(np.abs(c))
    modes = [sp.cos(TAU), sp.sin(SIG), sp.cos(TAU + SIG), sp.sin(TAU - SIG),
             sp.cos(2 * SIG), sp.sin(2 * TAU)]
    f = [sum(float(ci) * m for ci, m in zip(row, modes)) for row in c]
    exprs = [TAU, SIG, amp * f[0], amp * f[1]]
    return _make_sheet("graph_surface", bg, (0.0, TWO_PI), (0.0, TWO_PI), (n, n),
                       (True, True), exprs, shifts=([TWO_PI, 0, 0, 0], [0, TWO_PI, 0, 0]),
                       params={"amp": amp, "seed": seed})


CATALOG = {
    "plane": plane,
    "static_string": static_string,
    "rotating_string": rotating_string,
    "sphere": sphere,
    "catenoid": catenoid,
    "flat_torus": flat_torus,
    "graph_surface": graph_surface,
}


def make_sheet(name: str, n: int, **params) -> EmbeddingSheet:
    try:
        builder = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown sheet {name!r}; known: {sorted(CATALOG)}") from None
    return builder(n, **params)


def load_grid_csv(path, bg: BackgroundMetric, tau_range, sig_range, periodic=(False, False),
                  name: str = "grid") -> EmbeddingSheet:
    """Read node coordinates from a CSV with header ``i, j, x0..x{n-1}``."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no rows")
    n = bg.dim
    ii = np.array([int(r["i"]) for r in rows])
    jj = np.array([int(r["j"]) for r in rows])
    shape = (ii.max() + 1, jj.max() + 1)
    x = np.full(shape + (n,), np.nan)
    for r, i, j in zip(rows, ii, jj):
        x[i, j] = [float(r[f"x{k}"]) for k in range(n)]
    return EmbeddingSheet(name, bg, tuple(tau_range), tuple(sig_range), shape,
                          tuple(periodic), x)


# ------------------------------------------------------------- jets and metric

def jets(sheet: EmbeddingSheet, analytic: bool | None = None) -> EmbeddingJet:
    """Jets at every node; exact for analytic sheets unless ``analytic=False``."""
    use_analytic = sheet.analytic is not None if analytic is None else analytic
    if use_analytic:
        if sheet.analytic is None:
            raise ValueError(f"sheet {sheet.name} has no analytic map")
        T, S = sheet.mesh
        return EmbeddingJet(sheet.x, sheet.analytic.d1(T, S), sheet.analytic.d2(T, S))
    dx = np.stack([sheet.diff(sheet.x, a, coordinate=True) for a in (0, 1)], axis=-2)
    ddx = np.stack([np.stack([sheet.diff(dx[..., b, :], a) for b in (0, 1)], axis=-2)
                    for a in (0, 1)], axis=-3)
    ddx = 0.5 * (ddx + np.swapaxes(ddx, -2, -3))
    return EmbeddingJet(sheet.x, dx, ddx)


def jet_at(sheet: EmbeddingSheet, node: tuple[int, int],
           analytic: bool | None = None) -> EmbeddingJet:
    i, j = node
    if not (0 <= i < sheet.shape[0] and 0 <= j < sheet.shape[1]):
        raise BoundaryStencilError(f"node {node} outside grid {sheet.shape}")
    full = jets(sheet, analytic)
    return EmbeddingJet(full.x[i, j], full.dx[i, j], full.ddx[i, j])


def induced_metric(jet: EmbeddingJet, g: np.ndarray) -> InducedMetric:
    """gamma_ab = g_mn d_a x^m d_b x^n, works node-wise or on whole grids."""
    g = np.asarray(g)
    gamma = np.einsum("...am,...mn,...bn->...ab", jet.dx, g, jet.dx)
    det = gamma[..., 0, 0] * gamma[..., 1, 1] - gamma[..., 0, 1] * gamma[..., 1, 0]
    if np.any(np.abs(det) < 1e-14):
        raise DegenerateSurfaceError(f"|det gamma| below 1e-14 (min {np.min(np.abs(det)):.2e})")
    inv = np.empty_like(gamma)
    inv[..., 0, 0] = gamma[..., 1, 1] / det
    inv[..., 1, 1] = gamma[..., 0, 0] / det
    inv[..., 0, 1] = -gamma[..., 0, 1] / det
    inv[..., 1, 0] = -gamma[..., 1, 0] / det
    return InducedMetric(gamma, inv, np.sqrt(np.abs(det)))


# ------------------------------------------------------------------ integration

def sheet_measure(sheet: EmbeddingSheet, analytic: bool | None = None) -> np.ndarray:
    jet = jets(sheet, analytic)
    return induced_metric(jet, sheet.metric_nodes()).dens


def surface_integral(sheet: EmbeddingSheet, f, dens: np.ndarray | None = None) -> float:
    """Trapezoid (periodic-rectangle) rule for the integral of f dens dtau dsigma."""
    f = np.broadcast_to(np.asarray(f, dtype=float), sheet.shape)
    if not np.all(np.isfinite(f)):
        raise ValueError("integrand must be finite on all nodes")
    if dens is None:
        dens = sheet_measure(sheet)
    return float(np.sum(f * dens * sheet.quadrature_weights()))


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    a, b = _bump(t), _bump(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def sphere_chart_weights(sheet: EmbeddingSheet) -> np.ndarray:
    """Partition-of-unity weight of this chart on the sphere atlas.

    Weights are functions of the chart parameters, so a deformed sheet
    keeps the weights of its reference sphere. Chart A is used only where
    |z| < 0.95 and chart B only where |x| < 0.95; the wide transition keeps
    the trapezoid rule accurate at modest resolution.
    """
    T, S = sheet.mesh
    chart = sheet.params.get("chart", "A")
    # unit vector A: (sT cS, sT sS, cT); B: (cT, sT cS, sT sS)
    if chart == "A":
        z, x = np.cos(T), np.sin(T) * np.cos(S)
    else:
        z, x = np.sin(T) * np.sin(S), np.cos(T)
    ua = 1.0 - smooth_step((np.abs(z) - 0.2) / 0.75)
    ub = 1.0 - smooth_step((np.abs(x) - 0.2) / 0.75)
    own = ua if chart == "A" else ub
    return own ** 2 / (ua ** 2 + ub ** 2)


@dataclass(frozen=True)
class CauchySlice:
    """The cut tau = tau[index] with its measure element dSigma_mu per node.

    ``dsigma[j]`` is the covector ``e^tau_mu * dsigma_weight``; it is
    tangent to the sheet by construction.
    """

    index: int
    tau: float
    dsigma: np.ndarray


def cauchy_slice(sheet: EmbeddingSheet, index: int, analytic: bool | None = None) -> CauchySlice:
    if not 0 <= index < sheet.shape[0]:
        raise SliceError(f"slice index {index} outside 0..{sheet.shape[0] - 1}")
    jet = jets(sheet, analytic)
    g = sheet.metric_nodes()
    im = induced_metric(jet, g)
    # e^a_mu = gamma^ab g_mn d_b x^n
    e = np.einsum("...ab,...mn,...bn->...am", im.gamma_inv, g, jet.dx)
    wsig = np.full(sheet.shape[1], sheet.h[1]) if sheet.periodic[1] else _open_weights(sheet)
    dsig = e[index, :, 0, :] * (im.dens[index] * wsig)[:, None]
    return CauchySlice(index, float(sheet.tau[index]), dsig)


def _open_weights(sheet):
    w = np.full(sheet.shape[1], sheet.h[1])
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def slice_integral(sheet: EmbeddingSheet, sl: CauchySlice, w: np.ndarray) -> float:
    """Integral of dens * w^mu dSigma_mu along a tau = const slice.

    The density sqrt|gamma| is already folded into ``sl.dsigma``; the
    normal part of ``w`` is annihilated by the tangent covector.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (sheet.shape[1], sheet.dim):
        raise SliceError(f"slice field must have shape {(sheet.shape[1], sheet.dim)}")
    return float(np.sum(np.einsum("jm,jm->j", w, sl.dsigma)))
