"""Carter's objects for a p=2 sheet: projectors, frames, rotation connections,
internal and outer curvature, and the pure-divergence identities.

Everything is evaluated on the whole node grid at once. Background tensors
carry their background indices last, after the two grid axes; worldsheet
tensors use indices ``a, b, c, d`` in {tau, sigma}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import TOL
from .tensor_core import levi_civita_symbol
from .worldsheet import (EmbeddingJet, EmbeddingSheet, induced_metric, jets, smooth_step,
                         sphere_chart_weights, surface_integral)


class FrameDegeneracyError(ValueError):
    pass


class FrameContinuityError(ValueError):
    pass


# Sign of rho fixed so that the unit sphere has R = +2.
RHO_SIGN = -1.0
SEED_THRESHOLD = 0.35


@dataclass(frozen=True)
class ProjectorPair:
    n: np.ndarray     # n^mu_nu
    perp: np.ndarray  # perp^mu_nu


@dataclass(frozen=True)
class AdaptedFrame:
    iota: np.ndarray     # (..., 2, n) tangent legs
    normals: np.ndarray  # (..., n-2, n) normal legs
    eta0: float          # g(iota_0, iota_0): -1 Lorentzian, +1 Euclidean
    E: np.ndarray        # E^{mu nu}


@dataclass(frozen=True)
class RotationConnection:
    rho: np.ndarray           # rho_lambda^mu_nu
    rho_cov: np.ndarray       # rho_lambda
    omega: np.ndarray | None  # omega_lambda^mu_nu
    omega_cov: np.ndarray | None


@dataclass(frozen=True)
class CurvatureBundle:
    riemann_ws: np.ndarray      # R_cd^a_b in worldsheet components
    ricci_ws: np.ndarray        # R_ab
    R: np.ndarray
    adjusted_ws: np.ndarray     # R~_ab
    outer_ws: np.ndarray | None  # Omega_cd^A_B
    Omega: np.ndarray | None


def fundamental_tensors(jet: EmbeddingJet, g: np.ndarray) -> ProjectorPair:
    """n^mu_nu = gamma^ab d_a x^mu d_b x_nu and its complement."""
    im = induced_metric(jet, g)
    dx = jet.dx
    dx_low = np.einsum("...mn,...an->...am", g, dx)
    n = np.einsum("...ab,...am,...bn->...mn", im.gamma_inv, dx, dx_low)
    dim = g.shape[-1]
    return ProjectorPair(n, np.eye(dim) - n)


class SheetGeometry:
    """Lazily evaluated Carter geometry on every node of a sheet.

    ``rotation`` is an optional internal frame rotation angle field (boost
    rapidity for Lorentzian sheets); ``normal_rotation`` rotates the first
    two normal legs. ``seeds`` overrides the ambient seed order used for
    the normal legs, ``tangent_order`` may be ``"sigma_first"`` on
    Euclidean sheets.
    """

    def __init__(self, sheet: EmbeddingSheet, analytic: bool | None = None,
                 rotation=None, normal_rotation=None, seeds=None,
                 tangent_order: str = "tau_first"):
        self.sheet = sheet
        self.jet = jets(sheet, analytic)
        self.g = sheet.bg.metric_array(sheet.x)
        self.g_inv = sheet.bg.inverse_metric_array(sheet.x)
        self.christoffel = sheet.bg.christoffel_array(sheet.x)
        self.metric = induced_metric(self.jet, self.g)
        self.rotation = rotation
        self.normal_rotation = normal_rotation
        self.seeds = seeds
        self.tangent_order = tangent_order

    # ------------------------------------------------------------- basics
    @property
    def dim(self) -> int:
        return self.sheet.dim

    @property
    def dx(self) -> np.ndarray:
        return self.jet.dx

    @cached_property
    def e_low(self) -> np.ndarray:
        """e^a_mu = gamma^ab g_mn d_b x^n, the dual tangent covectors."""
        return np.einsum("...ab,...mn,...bn->...am", self.metric.gamma_inv, self.g, self.dx)

    @cached_property
    def e_up(self) -> np.ndarray:
        """e^{a mu} = gamma^ab d_b x^mu."""
        return np.einsum("...ab,...bm->...am", self.metric.gamma_inv, self.dx)

    @cached_property
    def projectors(self) -> ProjectorPair:
        n = np.einsum("...am,...an->...mn", self.dx, self.e_low)
        return ProjectorPair(n, np.eye(self.dim) - n)

    @cached_property
    def n_up(self) -> np.ndarray:
        return np.einsum("...ab,...am,...bn->...mn", self.metric.gamma_inv, self.dx, self.dx)

    def lower(self, v: np.ndarray) -> np.ndarray:
        return np.einsum("...mn,...n->...m", self.g, v)

    def raise_(self, w: np.ndarray) -> np.ndarray:
        return np.einsum("...mn,...n->...m", self.g_inv, w)

    def dot(self, u, v):
        return np.einsum("...m,...mn,...n->...", u, self.g, v)

    # ------------------------------------------------- sheet differentiation
    def D(self, T: np.ndarray, variance: str) -> np.ndarray:
        """Derivative along the sheet, d_c x^rho nabla_rho T; returns (..., 2, *T)."""
        grid = self.sheet.shape
        tail = T.shape[2:]
        if len(tail) != len(variance):
            raise ValueError("variance string must match the tensor rank")
        parts = [self.sheet.diff(T, a) for a in (0, 1)]
        out = np.stack(parts, axis=2)
        if self.sheet.bg.is_flat or not variance:
            return out
        # Gamma^m_{rho a} d_c x^rho
        gdx = np.einsum("...mra,...cr->...cma", self.christoffel, self.dx)
        for slot, var in enumerate(variance):
            moved = np.moveaxis(T, 2 + slot, -1)  # (..., rest, a)
            if var == "u":
                corr = np.einsum("ijcma,ij...a->ijc...m", gdx, moved)
            else:
                corr = -np.einsum("ijcam,ij...a->ijc...m", gdx, moved)
            out = out + np.moveaxis(corr, -1, 3 + slot)
        assert out.shape == grid + (2,) + tail
        return out

    def grad_bar(self, T: np.ndarray, variance: str) -> np.ndarray:
        """Tangential covariant derivative; background index first after the grid."""
        return _grad_bar(self.e_low, self.D(T, variance))

    def div_bar(self, V: np.ndarray) -> np.ndarray:
        """nabla-bar_mu V^mu for a background vector field."""
        DV = self.D(V, "u")
        return np.einsum("ijcm,ijcm->ij", self.e_low, DV)

    def div_bar_intrinsic(self, V: np.ndarray) -> np.ndarray:
        """(1/dens) d_a(dens V^a) using the tangential part of V."""
        Va = np.einsum("...am,...m->...a", self.e_low, V)
        flux = self.metric.dens[..., None] * Va
        return sum(self.sheet.diff(flux[..., a], a) for a in (0, 1)) / self.metric.dens

    # ------------------------------------------------------ extrinsic curvature
    @cached_property
    def mean_curvature(self) -> np.ndarray:
        """K^nu = nabla-bar_mu n^{mu nu}."""
        Dn = self.D(self.n_up, "uu")
        return np.einsum("ijcm,ijcmn->ijn", self.e_low, Dn)

    @cached_property
    def second_fundamental(self) -> np.ndarray:
        """K_{mu nu}^rho = n^lambda_nu nabla-bar_mu n^rho_lambda, axes (mu, nu, rho)."""
        gb = self.grad_bar(self.projectors.n, "ud")  # (..., mu, rho, lambda)
        return np.einsum("...ln,...mrl->...mnr", self.projectors.n, gb)

    # ------------------------------------------------------------------ frames
    @cached_property
    def frame(self) -> AdaptedFrame:
        dx = self.dx
        order = (0, 1) if self.tangent_order == "tau_first" else (1, 0)
        if self.tangent_order != "tau_first" and self.sheet.lorentzian:
            raise ValueError("Lorentzian sheets must start from the timelike tau tangent")
        v0 = dx[..., order[0], :]
        n0 = self.dot(v0, v0)
        eta0 = float(np.sign(np.mean(n0)))
        if np.any(np.sign(n0) != eta0):
            raise FrameDegeneracyError("first tangent changes causal character")
        i0 = v0 / np.sqrt(np.abs(n0))[..., None]
        v1 = dx[..., order[1], :]
        v1 = v1 - eta0 * self.dot(v1, i0)[..., None] * i0
        i1 = v1 / np.sqrt(np.abs(self.dot(v1, v1)))[..., None]
        if self.rotation is not None:
            lam = np.broadcast_to(self.rotation, self.sheet.shape)[..., None]
            if eta0 < 0:
                i0, i1 = np.cosh(lam) * i0 + np.sinh(lam) * i1, np.sinh(lam) * i0 + np.cosh(lam) * i1
            else:
                i0, i1 = np.cos(lam) * i0 + np.sin(lam) * i1, -np.sin(lam) * i0 + np.cos(lam) * i1
        iota = np.stack([i0, i1], axis=-2)
        normals = self._normal_legs()
        E = np.einsum("...m,...n->...mn", i0, i1)
        E = E - np.swapaxes(E, -1, -2)
        return AdaptedFrame(iota, normals, eta0, E)

    def _normal_legs(self) -> np.ndarray:
        n = self.dim
        perp = self.projectors.perp
        seeds = list(self.seeds) if self.seeds is not None else list(range(n - 1, -1, -1))
        legs = []
        for _ in range(n - 2):
            chosen = np.full(self.sheet.shape, -1)
            leg = np.zeros(self.sheet.shape + (n,))
            for s in seeds:
                v = perp[..., :, s].copy()
                for prev in legs:
                    v = v - (self.dot(v, prev) / self.dot(prev, prev))[..., None] * prev
                norm = np.sqrt(np.abs(self.dot(v, v)))
                take = (chosen < 0) & (norm > SEED_THRESHOLD)
                leg[take] = v[take] / norm[take][:, None]
                chosen[take] = s
            if np.any(chosen < 0):
                raise FrameDegeneracyError("no ambient seed gives a usable normal leg")
            legs.append(self._align(leg))
        if not legs:
            return np.zeros(self.sheet.shape + (0, n))
        out = np.stack(legs, axis=-2)
        if self.normal_rotation is not None and n - 2 >= 2:
            lam = np.broadcast_to(self.normal_rotation, self.sheet.shape)[..., None]
            a, b = out[..., 0, :].copy(), out[..., 1, :].copy()
            out[..., 0, :] = np.cos(lam) * a + np.sin(lam) * b
            out[..., 1, :] = -np.sin(lam) * a + np.cos(lam) * b
        return out

    def _align(self, leg: np.ndarray) -> np.ndarray:
        """Sign-align a unit leg field with its neighbours (sequential sweep)."""
        leg = leg.copy()
        g = self.g
        nt, ns = self.sheet.shape

        def dot(a, b, gg):
            return np.einsum("...m,...mn,...n->...", a, gg, b)

        for i in range(1, nt):
            if dot(leg[i, 0], leg[i - 1, 0], g[i, 0]) < 0:
                leg[i, 0] *= -1
        for j in range(1, ns):
            flip = dot(leg[:, j], leg[:, j - 1], g[:, j]) < 0
            leg[flip, j] *= -1
        c_t = dot(leg[1:], leg[:-1], g[1:])
        c_s = dot(leg[:, 1:], leg[:, :-1], g[:, 1:])
        if np.any(c_t < 0) or np.any(c_s < 0):
            raise FrameContinuityError("normal frame flips between neighbouring nodes")
        return leg

    @cached_property
    def E_mixed(self) -> np.ndarray:
        """E^mu_nu."""
        return np.einsum("...mk,...kn->...mn", self.frame.E, self.g)

    # ------------------------------------------------------------- connections
    def _leg_connection(self, legs: np.ndarray, proj: np.ndarray) -> np.ndarray:
        """Antisymmetrised sum_A leg^A_mu proj(nabla-bar_lambda leg_A)_nu, as X_lambda^mu_nu."""
        total = 0.0
        for A in range(legs.shape[-2]):
            leg = legs[..., A, :]
            sign = np.sign(self.dot(leg, leg))[..., None, None, None]
            gb = _grad_bar(self.e_low, self.D(leg, "u"))       # (..., lambda, nu-up)
            gb_low = np.einsum("...ln,...nk->...lk", gb, self.g)
            gb_low = np.einsum("...lk,...kn->...ln", gb_low, proj)  # project nu
            total = total + sign * np.einsum("...m,...ln->...lmn", self.lower(leg), gb_low)
        low = 0.5 * (total - np.swapaxes(total, -1, -2))      # rho_{lambda mu nu}
        return np.einsum("...mk,...lkn->...lmn", self.g_inv, low)

    @cached_property
    def connections(self) -> RotationConnection:
        fr = self.frame
        pp = self.projectors
        rho = RHO_SIGN * self._leg_connection(fr.iota, pp.n)
        # rho_lambda = -eta0 rho_lambda^mu_nu E^nu_mu, so that rho = (1/2) E rho_lambda
        rho_cov = -fr.eta0 * np.einsum("...lmn,...nm->...l", rho, self.E_mixed)
        omega = omega_cov = None
        if self.dim == 4:
            omega = self._leg_connection(fr.normals, pp.perp)
            omega_cov = self._twist(omega)
        return RotationConnection(rho, rho_cov, omega, omega_cov)

    @cached_property
    def eps_low(self) -> np.ndarray:
        det = np.linalg.det(self.g)
        return np.sqrt(np.abs(det))[..., None, None, None, None] * levi_civita_symbol(4)

    @cached_property
    def eps_up(self) -> np.ndarray:
        det = np.linalg.det(self.g)
        return (np.sign(det) / np.sqrt(np.abs(det)))[..., None, None, None, None] \
            * levi_civita_symbol(4)

    def _twist(self, omega: np.ndarray) -> np.ndarray:
        """omega_nu = 1/2 omega_nu^{mu lambda} eps_{mu lambda rho sigma} E^{rho sigma}.

        The (mu, lambda) order on eps and the sign(det g) factor are the ones
        for which Omega = nabla-bar_mu (E^{mu nu} omega_nu) holds in both signatures.
        """
        om_up = np.einsum("...nmk,...kl->...nml", omega, self.g_inv)
        sgn = np.sign(np.linalg.det(self.g))[..., None]
        return 0.5 * sgn * np.einsum("...nml,...mlrs,...rs->...n", om_up, self.eps_low,
                                     self.frame.E)

    def ws_components(self, X: np.ndarray) -> np.ndarray:
        """Pull back X_lambda^mu_nu to worldsheet X_c^a_b."""
        return np.einsum("...cl,...am,...bn,...lmn->...cab", self.dx, self.e_low, self.dx, X)

    @cached_property
    def rho_ws(self) -> np.ndarray:
        """rho_b = d_b x^lambda rho_lambda."""
        return np.einsum("...bl,...l->...b", self.dx, self.connections.rho_cov)

    # --------------------------------------------------------------- curvature
    @cached_property
    def curvature(self) -> CurvatureBundle:
        rc = self.connections
        gam = self.metric.gamma
        gam_inv = self.metric.gamma_inv
        # internal: frame slots projected onto the sheet
        left = self.e_low            # e^a_sigma
        right = self.dx              # d_b x^tau
        Drho = self.D(rc.rho, "udd")          # (..., c, pi, sigma, tau)
        T = np.einsum("...dp,...as,...bt,...cpst->...cdab", self.dx, left, right, Drho)
        rws = self.ws_components(rc.rho)      # rho_c^a_b
        comm = np.einsum("...cae,...deb->...cdab", rws, rws)
        riem = (T - np.swapaxes(T, -3, -4)) + (comm - np.swapaxes(comm, -3, -4))
        riem_low = np.einsum("...af,...cdfb->...cdab", gam, riem)  # R_{cdab}
        ricci = np.einsum("...acbd,...dc->...ab", riem_low, gam_inv)
        R = np.einsum("...ab,...ab->...", gam_inv, ricci)
        adjusted = ricci - 0.5 * R[..., None, None] * gam
        outer_ws = Omega = None
        if rc.omega is not None:
            nl = self.frame.normals
            nl_dual = np.einsum("...Am,...mn->...An", nl, self.g)
            signs = np.sign(np.einsum("...Am,...Am->...A", nl, nl_dual))
            nl_dual = nl_dual * signs[..., None]
            Dom = self.D(rc.omega, "udd")
            U = np.einsum("...dp,...As,...Bt,...cpst->...cdAB", self.dx, nl_dual, nl, Dom)
            ows = np.einsum("...cl,...Am,...Bn,...lmn->...cAB", self.dx, nl_dual, nl, rc.omega)
            comm = np.einsum("...cAC,...dCB->...cdAB", ows, ows)
            outer_ws = (U - np.swapaxes(U, -3, -4)) + (comm - np.swapaxes(comm, -3, -4))
            Omega = self._outer_scalar(outer_ws)
        return CurvatureBundle(riem, ricci, R, adjusted, outer_ws, Omega)

    def _outer_scalar(self, outer_ws: np.ndarray) -> np.ndarray:
        """Omega = 1/2 Omega_{lambda mu nu rho} eps^{lambda mu nu rho}."""
        nl = self.frame.normals
        nl_low = np.einsum("...Am,...mn->...An", nl, self.g)
        signs = np.sign(np.einsum("...Am,...Am->...A", nl, nl_low))
        nl_dual = nl_low * signs[..., None]
        # Omega_{kappa lambda mu nu} = e^c_kappa e^d_lambda (leg_A)_mu (dual^B)_nu Omega_cd^A_B
        z = np.einsum("...klmn,...ck,...dl,...Am,...Bn->...cdAB",
                      self.eps_up, self.e_low, self.e_low, nl_low, nl_dual)
        return 0.5 * np.einsum("...cdAB,...cdAB->...", outer_ws, z)

    def background_riemann(self) -> np.ndarray:
        """Push R_cd^a_b forward to R_{kappa lambda}^mu_nu (memory heavy for n=4)."""
        return np.einsum("...ck,...dl,...am,...bn,...cdab->...klmn",
                         self.e_low, self.e_low, self.dx, self.e_low, self.curvature.riemann_ws)

    def background_ricci(self) -> np.ndarray:
        return np.einsum("...am,...bn,...ab->...mn", self.e_low, self.e_low,
                         self.curvature.ricci_ws)

    def background_outer(self) -> np.ndarray:
        nl = self.frame.normals
        nl_low = np.einsum("...Am,...mn->...An", nl, self.g)
        signs = np.sign(np.einsum("...Am,...Am->...A", nl, nl_low))
        return np.einsum("...ck,...dl,...Am,...Bn,...cdAB->...klmn", self.e_low, self.e_low,
                         nl, nl_low * signs[..., None], self.curvature.outer_ws)

    # --------------------------------------------------------- divergence forms
    @cached_property
    def R_divergence(self) -> np.ndarray:
        """nabla-bar_mu (E^{mu nu} rho_nu)."""
        V = np.einsum("...mn,...n->...m", self.frame.E, self.connections.rho_cov)
        return self.div_bar(V)

    @cached_property
    def Omega_divergence(self) -> np.ndarray:
        V = np.einsum("...mn,...n->...m", self.frame.E, self.connections.omega_cov)
        return self.div_bar(V)


def _grad_bar(e_low: np.ndarray, DT: np.ndarray) -> np.ndarray:
    return np.einsum("ijcl,ijc...->ijl...", e_low, DT)


# ------------------------------------------------------------ point-level ops

def tangential_derivative(geom: SheetGeometry, field: np.ndarray, variance: str) -> np.ndarray:
    """nabla-bar_mu of a node field; perp^mu_nu nabla-bar_mu f vanishes by construction."""
    return geom.grad_bar(field, variance)


def second_fundamental(geom: SheetGeometry):
    return geom.second_fundamental, geom.mean_curvature


def adapted_frame(geom: SheetGeometry) -> AdaptedFrame:
    return geom.frame


def rotation_connections(geom: SheetGeometry) -> RotationConnection:
    return geom.connections


def internal_curvature(geom: SheetGeometry) -> CurvatureBundle:
    return geom.curvature


def adjusted_ricci(geom: SheetGeometry, p: int = 2) -> np.ndarray:
    """R~_ab = R_ab - R gamma_ab / (2(p-1)) in worldsheet components."""
    if p < 2:
        raise ValueError("adjusted Ricci needs p >= 2")
    cb = geom.curvature
    return cb.ricci_ws - cb.R[..., None, None] * geom.metric.gamma / (2.0 * (p - 1))


def outer_curvature(geom: SheetGeometry):
    if geom.dim != 4:
        raise ValueError("the outer curvature scalar needs a 4-dimensional background")
    cb = geom.curvature
    return cb.outer_ws, cb.Omega


def divergence_form_check(geom: SheetGeometry, frac: float = 0.1):
    """Max-norm residuals of R - div(E rho) and Omega - div(E omega) on a fixed interior region."""
    mask = geom.sheet.region_mask(frac)
    res_R = float(np.max(np.abs(geom.curvature.R - geom.R_divergence)[mask]))
    res_O = None
    if geom.dim == 4:
        res_O = float(np.max(np.abs(geom.curvature.Omega - geom.Omega_divergence)[mask]))
    return res_R, res_O


def projector_residuals(geom: SheetGeometry) -> dict:
    pp = geom.projectors
    dim = geom.dim
    eye = np.eye(dim)
    return {
        "n_plus_perp": float(np.max(np.abs(pp.n + pp.perp - eye))),
        "n_perp": float(np.max(np.abs(np.einsum("...mk,...kn->...mn", pp.n, pp.perp)))),
        "idempotent": float(np.max(np.abs(np.einsum("...mk,...kn->...mn", pp.n, pp.n) - pp.n))),
        "rank": float(np.max(np.abs(np.trace(pp.n, axis1=-2, axis2=-1) - 2.0))),
    }


# --------------------------------------------------------------- integrals

def sphere_total(chart_fields) -> float:
    """Combine per-chart integrands over the two-chart sphere atlas."""
    total = 0.0
    for geom, f in chart_fields:
        w = sphere_chart_weights(geom.sheet)
        total += surface_integral(geom.sheet, w * f, dens=geom.metric.dens)
    return total


def gauss_bonnet(geoms) -> float:
    """Integral of R dens over a closed sheet given as one chart or a sphere atlas."""
    if len(geoms) == 1:
        g = geoms[0]
        return surface_integral(g.sheet, g.curvature.R, dens=g.metric.dens)
    return sphere_total([(g, g.curvature.R) for g in geoms])


__all__ = [
    "SheetGeometry", "ProjectorPair", "AdaptedFrame", "RotationConnection", "CurvatureBundle",
    "fundamental_tensors", "tangential_derivative", "second_fundamental", "adapted_frame",
    "rotation_connections", "internal_curvature", "adjusted_ricci", "outer_curvature",
    "divergence_form_check", "projector_residuals", "gauss_bonnet", "smooth_step", "TOL",
]
