"""DNG action, equations of motion, deformations and the variational identities.

A deformation is a node field ``xi`` (a background vector per node),
optionally accompanied by a frame rotation field; variations are
comoving: the sheet is moved to ``x + eps xi``, everything is rebuilt
with the same deterministic frame rule, and node values are differenced.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .carter_geometry import SheetGeometry
from .config import TOL
from .worldsheet import EmbeddingSheet, sphere_chart_weights, surface_integral


class VariationError(RuntimeError):
    pass


class NonTangentDeformationError(ValueError):
    pass


# ---------------------------------------------------------------- deformations

@dataclass(frozen=True, eq=False)
class DeformationField:
    """Phase-space tangent candidate: xi^mu per node plus an optional frame rotation.

    ``frame_angle`` generates an internal frame rotation (boost on
    Lorentzian sheets) and ``normal_angle`` a rotation of the normal legs;
    both are pure gauge and leave the embedding alone.
    """

    xi: np.ndarray
    label: str = "xi"
    frame_angle: np.ndarray | float | None = None
    normal_angle: np.ndarray | float | None = None
    tangent: bool | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.xi)):
            raise ValueError(f"deformation {self.label}: non-finite values")

    def scaled(self, a: float) -> DeformationField:
        fa = None if self.frame_angle is None else a * np.asarray(self.frame_angle)
        na = None if self.normal_angle is None else a * np.asarray(self.normal_angle)
        return DeformationField(a * self.xi, f"{a}*{self.label}", fa, na, self.tangent)

    def __add__(self, other: DeformationField) -> DeformationField:
        def add(p, q):
            if p is None and q is None:
                return None
            return (0 if p is None else np.asarray(p)) + (0 if q is None else np.asarray(q))
        return DeformationField(self.xi + other.xi, f"{self.label}+{other.label}",
                                add(self.frame_angle, other.frame_angle),
                                add(self.normal_angle, other.normal_angle))


def zero_deformation(sheet: EmbeddingSheet) -> DeformationField:
    return DeformationField(np.zeros_like(sheet.x), "zero", tangent=True)


def translation(sheet: EmbeddingSheet, vec) -> DeformationField:
    xi = np.broadcast_to(np.asarray(vec, float), sheet.x.shape).copy()
    return DeformationField(xi, "translation", tangent=True)


def transverse_wave(sheet: EmbeddingSheet, amp: float = 1.0, k: int = 1, mover: int = 1,
                    axis: int = 2, phase: float = 0.0) -> DeformationField:
    """xi^axis = amp cos(k (sigma - mover tau) + phase) on a flat string."""
    T, S = sheet.mesh
    xi = np.zeros_like(sheet.x)
    xi[..., axis] = amp * np.cos(k * (S - mover * T) + phase)
    return DeformationField(xi, f"wave(k={k},{'+' if mover > 0 else '-'},ax={axis})")


def static_bump(sheet: EmbeddingSheet, amp: float = 1.0, k: int = 1, axis: int = 2) -> DeformationField:
    """A tau-independent transverse profile; solves nothing, used as a negative control."""
    T, S = sheet.mesh
    xi = np.zeros_like(sheet.x)
    xi[..., axis] = amp * np.cos(k * S) * (1.0 + 0.5 * np.sin(S))
    return DeformationField(xi, "static_bump")


def radial(sheet: EmbeddingSheet, xi0: float = 1.0) -> DeformationField:
    r = np.linalg.norm(sheet.x[..., :3], axis=-1, keepdims=True)
    xi = np.zeros_like(sheet.x)
    xi[..., :3] = xi0 * sheet.x[..., :3] / r
    return DeformationField(xi, "radial")


def ambient_smooth(sheet: EmbeddingSheet, seed: int, amp: float = 1.0, order: int = 2,
                   components: Sequence[int] | None = None) -> DeformationField:
    """Seeded low-order Fourier field of the ambient position, chart independent.

    Wave numbers are half-integers, except along ambient axes in which a
    periodic sheet closes up with a 2 pi shift; there they are integers so
    the field stays periodic across the seam.
    """
    rng = np.random.default_rng(seed)
    n = sheet.dim
    comps = list(range(n)) if components is None else list(components)
    scale = np.full(n, 0.5)
    for shift in sheet.shifts:
        if shift is not None:
            scale[np.abs(np.asarray(shift)) > 0] = 1.0
    xi = np.zeros_like(sheet.x)
    for m in comps:
        for _ in range(order + 1):
            kvec = rng.integers(-order, order + 1, size=n) * scale
            a, b = rng.normal(size=2)
            ph = sheet.x @ kvec
            xi[..., m] += a * np.cos(ph) + b * np.sin(ph)
    xi *= amp / max(np.max(np.abs(xi)), 1e-300)
    return DeformationField(xi, f"ambient(seed={seed})", meta={"seed": seed})


def compact_bump(sheet: EmbeddingSheet, center=(0.5, 0.5), width: float = 0.3, axis: int = -1,
                 amp: float = 1.0) -> DeformationField:
    """Smooth bump in parameter space vanishing identically near the edges."""
    from .worldsheet import smooth_step
    T, S = sheet.mesh
    t0 = sheet.tau_range[0] + center[0] * (sheet.tau_range[1] - sheet.tau_range[0])
    s0 = sheet.sig_range[0] + center[1] * (sheet.sig_range[1] - sheet.sig_range[0])
    Lt = sheet.tau_range[1] - sheet.tau_range[0]
    Ls = sheet.sig_range[1] - sheet.sig_range[0]
    r = np.sqrt(((T - t0) / Lt) ** 2 + ((S - s0) / Ls) ** 2) / width
    prof = 1.0 - smooth_step(r)
    xi = np.zeros_like(sheet.x)
    xi[..., axis] = amp * prof
    return DeformationField(xi, "compact_bump")


def killing_motion(sheet: EmbeddingSheet, generator) -> DeformationField:
    """xi^mu = M^mu_nu x^nu for an eta-antisymmetric M (Lorentz rotation or boost)."""
    M = np.asarray(generator, float)
    eta = np.diag([-1.0] + [1.0] * (sheet.dim - 1))
    if np.max(np.abs(eta @ M + (eta @ M).T)) > 1e-14:
        raise ValueError("generator must be antisymmetric once lowered with eta")
    return DeformationField(sheet.x @ M.T, "killing", tangent=True)


def lorentz_generator(dim: int, i: int, j: int) -> np.ndarray:
    """Rotation in the (i, j) plane, or a boost if one index is time."""
    M = np.zeros((dim, dim))
    M[i, j], M[j, i] = 1.0, (1.0 if 0 in (i, j) else -1.0)
    return M


def rotating_family_tangent(sheet: EmbeddingSheet) -> DeformationField:
    """Derivative along a of x = (tau, a cos(s/a) cos(t/a), a cos(s/a) sin(t/a), 0) at a = 1."""
    T, S = sheet.mesh
    xi = np.zeros_like(sheet.x)
    cs, ss, ct, st = np.cos(S), np.sin(S), np.cos(T), np.sin(T)
    xi[..., 1] = cs * ct + S * ss * ct + T * cs * st
    xi[..., 2] = cs * st + S * ss * st - T * cs * ct
    return DeformationField(xi, "rotating_family", tangent=True)


def pullback_lie(sheet: EmbeddingSheet, xi: DeformationField, analytic: bool = False) -> np.ndarray:
    """First-order change of gamma_ab: the pullback of L_xi g along the sheet."""
    geom = SheetGeometry(sheet, analytic=analytic)
    dxi = np.stack([sheet.diff(xi.xi, a, coordinate=True) for a in (0, 1)], axis=-2)
    dg = sheet.bg.metric_derivative_array(sheet.x)
    e = geom.dx
    out = np.einsum("...am,...mn,...bn->...ab", dxi, geom.g, e)
    out = out + np.swapaxes(out, -1, -2)
    return out + np.einsum("...r,...rmn,...am,...bn->...ab", xi.xi, dg, e, e)


def gauge_rotation(sheet: EmbeddingSheet, angle) -> DeformationField:
    """Pure internal-frame rotation by ``angle`` (constant or node field)."""
    return DeformationField(np.zeros_like(sheet.x), "gauge", frame_angle=angle, tangent=True)


def normal_gauge_rotation(sheet: EmbeddingSheet, angle) -> DeformationField:
    return DeformationField(np.zeros_like(sheet.x), "normal_gauge", normal_angle=angle,
                            tangent=True)


# -------------------------------------------------------------- variation core

@dataclass(frozen=True)
class Variation:
    value: np.ndarray | float
    error: float

    def __float__(self):
        return float(self.value)


def geometry(sheet: EmbeddingSheet, xi: DeformationField | None = None, t: float = 0.0,
             **geom_kw) -> SheetGeometry:
    """Grid geometry of ``x + t xi`` with frame rotations advanced by ``t``."""
    kw = dict(geom_kw)
    if xi is None or t == 0.0:
        return SheetGeometry(sheet.as_grid() if t == 0.0 else sheet, analytic=False, **kw)
    rot = kw.pop("rotation", None)
    nrot = kw.pop("normal_rotation", None)
    if xi.frame_angle is not None:
        rot = (0.0 if rot is None else rot) + t * np.asarray(xi.frame_angle)
    if xi.normal_angle is not None:
        nrot = (0.0 if nrot is None else nrot) + t * np.asarray(xi.normal_angle)
    moved = sheet.deformed(xi.xi, t) if np.any(xi.xi) else sheet.as_grid()
    return SheetGeometry(moved, analytic=False, rotation=rot, normal_rotation=nrot, **kw)


@dataclass(frozen=True)
class VariationEngine:
    """Central-difference directional derivative d/deps F[x + eps xi] at eps = 0.

    With ``richardson`` the steps ``eps`` and ``eps/2`` are combined to
    cancel the O(eps^2) term; the reported error is the step-halving
    discrepancy plus a round-off floor.
    """

    step: float = TOL.variation_step
    richardson: bool = True

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("variation step must be positive")

    def central(self, F: Callable[[float], np.ndarray], eps: float):
        try:
            fp, fm = np.asarray(F(eps), float), np.asarray(F(-eps), float)
        except Exception as exc:  # noqa: BLE001 - surfaced with context
            raise VariationError(f"functional failed on deformed sheet: {exc}") from exc
        return (fp - fm) / (2.0 * eps), max(np.max(np.abs(fp)), np.max(np.abs(fm)))

    def derivative(self, F: Callable[[float], np.ndarray]) -> Variation:
        d1, scale = self.central(F, self.step)
        roundoff = 4e-16 * max(scale, 1e-300) / self.step
        if not self.richardson:
            return Variation(_scalarize(d1), float(roundoff))
        d2, _ = self.central(F, 0.5 * self.step)
        value = (4.0 * d2 - d1) / 3.0
        err = np.max(np.abs(d2 - d1)) / 3.0 + 2.0 * roundoff
        return Variation(_scalarize(value), float(err))


def _scalarize(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def vary(engine: VariationEngine, F: Callable, sheet, xi, **geom_kw) -> Variation:
    """Directional derivative of ``F(geometry)`` along ``xi``.

    ``sheet`` may be a single sheet or a list of atlas charts, in which
    case ``xi`` is a matching list and ``F`` receives a list of geometries.
    """
    if isinstance(sheet, (list, tuple)):
        def G(t):
            return F([geometry(s, x, t, **geom_kw) for s, x in zip(sheet, xi)])
    else:
        def G(t):
            return F(geometry(sheet, xi, t, **geom_kw))
    return engine.derivative(G)


# ------------------------------------------------------------------- functionals

def _integrate(geoms, integrand: Callable[[SheetGeometry], np.ndarray]) -> float:
    if isinstance(geoms, SheetGeometry):
        return surface_integral(geoms.sheet, integrand(geoms), dens=geoms.metric.dens)
    total = 0.0
    for g in geoms:
        w = sphere_chart_weights(g.sheet) if len(geoms) > 1 else 1.0
        total += surface_integral(g.sheet, w * integrand(g), dens=g.metric.dens)
    return total


def area(geoms) -> float:
    return _integrate(geoms, lambda g: np.ones(g.sheet.shape))


def dng_action(sheet_or_geoms, sigma0: float = 1.0) -> float:
    """S0 = sigma0 * integral of sqrt|gamma| over the sheet (or atlas)."""
    geoms = _as_geoms(sheet_or_geoms)
    return sigma0 * area(geoms)


def chi(geoms, sigma1: float = 1.0) -> float:
    """Hilbert term sigma1 * integral of sqrt|gamma| R."""
    return sigma1 * _integrate(geoms, lambda g: g.curvature.R)


def chi_prime(geoms, sigma2: float = 1.0) -> float:
    """Outer topological term sigma2 * integral of sqrt|gamma| Omega (4D only)."""
    return sigma2 * _integrate(geoms, lambda g: g.curvature.Omega)


def _as_geoms(obj):
    if isinstance(obj, SheetGeometry):
        return obj
    if isinstance(obj, EmbeddingSheet):
        return SheetGeometry(obj)
    if isinstance(obj, (list, tuple)):
        return [_as_geoms(o) for o in obj]
    raise TypeError(f"cannot build geometry from {type(obj).__name__}")


def dng_residual(sheet_or_geom) -> np.ndarray:
    """K^nu = nabla-bar_mu n^{mu nu} per node (grid stencils).

    Depends only on the embedding: no topological coupling enters.
    """
    geom = sheet_or_geom if isinstance(sheet_or_geom, SheetGeometry) \
        else SheetGeometry(sheet_or_geom, analytic=False)
    return geom.mean_curvature


def equations_of_motion(sheet, couplings=None) -> np.ndarray:
    """Field equation of sigma0 S0 + sigma1 chi + sigma2 chi'.

    The two topological terms vary into pure divergences, so the
    couplings are accepted and deliberately not used.
    """
    del couplings
    return dng_residual(sheet)


def residual_norm(sheet: EmbeddingSheet, K: np.ndarray, frac: float = 0.1) -> float:
    mask = sheet.region_mask(frac)
    return float(np.max(np.abs(K[mask])))


# ------------------------------------------------------- first variation split

def boundary_flux(geom: SheetGeometry, V: np.ndarray) -> float:
    """Outward flux of dens * V^a through the open edges of the parameter rectangle.

    Equals the integral of dens * div-bar V for tangent V (Stokes);
    periodic directions contribute nothing.
    """
    sheet = geom.sheet
    Va = np.einsum("...am,...m->...a", geom.e_low, V) * geom.metric.dens[..., None]
    total = 0.0
    for axis in (0, 1):
        if sheet.periodic[axis]:
            continue
        other = 1 - axis
        n_other = sheet.shape[other]
        w = np.full(n_other, sheet.h[other])
        if not sheet.periodic[other]:
            w[0] *= 0.5
            w[-1] *= 0.5
        comp = Va[..., axis]
        hi = comp[-1, :] if axis == 0 else comp[:, -1]
        lo = comp[0, :] if axis == 0 else comp[:, 0]
        total += float(np.sum((hi - lo) * w))
    return total


@dataclass(frozen=True)
class FirstVariation:
    bulk: float
    boundary: float
    total: float
    total_error: float


def first_variation_decomposition(sheet: EmbeddingSheet, xi: DeformationField, sigma0: float = 1.0,
                                  engine: VariationEngine | None = None) -> FirstVariation:
    """Split dS0 into -sigma0 int xi.K (bulk) and sigma0 int div(n xi) (boundary)."""
    engine = engine or VariationEngine()
    geom = SheetGeometry(sheet.as_grid(), analytic=False)
    K = geom.mean_curvature
    xi_low = geom.lower(xi.xi)
    bulk = -sigma0 * surface_integral(sheet, np.einsum("...m,...m->...", xi_low, K),
                                      dens=geom.metric.dens)
    nxi = np.einsum("...mn,...n->...m", geom.projectors.n, xi.xi)
    boundary = sigma0 * boundary_flux(geom, nxi)
    tot = vary(engine, lambda g: dng_action(g, sigma0), sheet, xi)
    return FirstVariation(bulk, boundary, float(tot.value), tot.error)


def linearized_residual(sheet: EmbeddingSheet, xi: DeformationField,
                        engine: VariationEngine | None = None) -> Variation:
    """delta K along xi; small iff xi is tangent to the space of solutions."""
    engine = engine or VariationEngine()
    return vary(engine, lambda g: g.mean_curvature, sheet, xi)


def is_tangent(sheet: EmbeddingSheet, xi: DeformationField, rel_tol: float = 0.3,
               frac: float = 0.1) -> tuple[bool, float]:
    """Linearised-residual test; returns (passes, relative residual)."""
    if xi.tangent is not None:
        return xi.tangent, 0.0
    lr = linearized_residual(sheet, xi)
    scale = max(np.max(np.abs(xi.xi)), 1e-300)
    rel = residual_norm(sheet, lr.value, frac) / scale
    return rel < rel_tol, rel


def require_tangent(sheet, xi, rel_tol: float = 0.3):
    ok, rel = is_tangent(sheet, xi, rel_tol)
    if not ok:
        raise NonTangentDeformationError(
            f"{xi.label} is not tangent to the solution space (relative linearised "
            f"residual {rel:.3e} >= {rel_tol})")


# ----------------------------------------------------- connection variations

def delta_rho_cov(sheet: EmbeddingSheet, xi: DeformationField, engine: VariationEngine | None = None,
                  **geom_kw) -> Variation:
    """Comoving variation of the rotation covector, pushed forward to a background covector.

    The worldsheet components rho_b = d_b x^lambda rho_lambda are varied at
    fixed (tau, sigma) and mapped back with the unperturbed dual frame.
    """
    engine = engine or VariationEngine()
    var = vary(engine, lambda g: g.rho_ws, sheet, xi, **geom_kw)
    base = geometry(sheet, **geom_kw)
    val = np.einsum("...bl,...b->...l", base.e_low, var.value)
    return Variation(val, var.error)


def delta_twist_cov(sheet: EmbeddingSheet, xi: DeformationField, engine: VariationEngine | None = None,
                    **geom_kw) -> Variation:
    engine = engine or VariationEngine()
    var = vary(engine, lambda g: np.einsum("...bl,...l->...b", g.dx, g.connections.omega_cov),
               sheet, xi, **geom_kw)
    base = geometry(sheet, **geom_kw)
    return Variation(np.einsum("...bl,...b->...l", base.e_low, var.value), var.error)


def delta_rho_tensor(sheet: EmbeddingSheet, xi: DeformationField,
                     engine: VariationEngine | None = None, **geom_kw) -> Variation:
    """Connection part of the comoving variation of rho_lambda^mu_nu.

    The mixed worldsheet components rho_c^a_b are varied; the part along
    the internal rotation generator E^a_b is kept (the remainder is the
    variation of E itself, which is not a connection variation) and the
    result is pushed forward with the unperturbed frame.
    """
    engine = engine or VariationEngine()
    base = geometry(sheet, **geom_kw)
    E_ws = _ws_E(base)
    eta0 = base.frame.eta0

    def coeff(g):
        X = g.ws_components(g.connections.rho)  # rho_c^a_b
        return -eta0 * np.einsum("...cab,...ba->...c", X, E_ws)

    var = vary(engine, coeff, sheet, xi, **geom_kw)
    d_rho = np.einsum("...cl,...c->...l", base.e_low, var.value)
    tensor = 0.5 * np.einsum("...mn,...l->...lmn", base.E_mixed, d_rho)
    return Variation(tensor, var.error)


def _ws_E(geom: SheetGeometry) -> np.ndarray:
    """E^a_b on the worldsheet."""
    return np.einsum("...am,...mn,...bn->...ab", geom.e_low, geom.E_mixed, geom.dx)


def psi_from_delta_rho(geom: SheetGeometry, d_rho: np.ndarray) -> np.ndarray:
    """psi^mu = n^{ab} d_rho_a^mu_b - n^a_b n^{mu tau} d_rho_a^b_tau."""
    n_up = geom.n_up
    n_mix = geom.projectors.n
    first = np.einsum("...ab,...amb->...m", n_up, d_rho)
    second = np.einsum("...ab,...mt,...abt->...m", n_mix, n_up, d_rho)
    return first - second


# -------------------------------------------------------------- Hilbert term

@dataclass(frozen=True)
class HilbertVariation:
    dynamic_term: float
    divergence_term: float
    total: float
    total_error: float


def hilbert_variation(sheets, xis, sigma1: float = 1.0,
                      engine: VariationEngine | None = None) -> HilbertVariation:
    """Split d chi into the (1/2 R n - R^{mu nu}) dg part and the psi divergence part."""
    engine = engine or VariationEngine()
    single = not isinstance(sheets, (list, tuple))
    sheets_l = [sheets] if single else list(sheets)
    xis_l = [xis] if single else list(xis)
    dyn = div = 0.0
    for s, x in zip(sheets_l, xis_l):
        base = geometry(s)
        w = sphere_chart_weights(s) if len(sheets_l) > 1 else np.ones(s.shape)
        dgam = vary(engine, lambda g: g.metric.gamma, s, x).value
        cb = base.curvature
        gi = base.metric.gamma_inv
        ric_up = np.einsum("...ac,...cd,...db->...ab", gi, cb.ricci_ws, gi)
        integrand = np.einsum("...ab,...ab->...", 0.5 * cb.R[..., None, None] * gi - ric_up, dgam)
        dyn += sigma1 * surface_integral(s, w * integrand, dens=base.metric.dens)
        psi = psi_from_delta_rho(base, delta_rho_tensor(s, x, engine).value)
        if len(sheets_l) > 1:
            div += sigma1 * surface_integral(s, w * base.div_bar(psi), dens=base.metric.dens)
        else:
            div += sigma1 * (boundary_flux(base, psi) if not all(s.periodic)
                             else surface_integral(s, base.div_bar(psi), dens=base.metric.dens))
    tot = vary(engine, lambda gs: chi(gs if not single else gs, sigma1),
               sheets if not single else sheets, xis if not single else xis)
    return HilbertVariation(dyn, div, float(tot.value), tot.error)


def palatini_identity_check(sheet: EmbeddingSheet, xi: DeformationField,
                            engine: VariationEngine | None = None, frac: float = 0.1,
                            **geom_kw):
    """Max-norm of n^{mu nu} delta R_{mu nu} - div-bar psi on a fixed interior region.

    The left side contracts the comoving variation of the worldsheet Ricci
    components (built from the full curvature formula) with the unperturbed
    inverse induced metric; ``psi`` comes from the connection variation.
    """
    engine = engine or VariationEngine()
    base = geometry(sheet, **geom_kw)
    d_ric = vary(engine, lambda g: g.curvature.ricci_ws, sheet, xi, **geom_kw)
    lhs = np.einsum("...ab,...ab->...", base.metric.gamma_inv, d_ric.value)
    psi = psi_from_delta_rho(base, delta_rho_tensor(sheet, xi, engine, **geom_kw).value)
    rhs = base.div_bar(psi)
    mask = sheet.region_mask(frac)
    return float(np.max(np.abs(lhs - rhs)[mask])), lhs, rhs
