"""Symplectic potentials, currents and the two-form on the string phase space.

Potentials are background vector densities (the sqrt|gamma| weight is
included). Currents are antisymmetrised bi-variations of a potential,
so they are exactly antisymmetric by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .carter_geometry import SheetGeometry
from .config import TOL
from .dynamics import (
    DeformationField, NonTangentDeformationError, Variation, VariationEngine, delta_rho_cov,
    delta_rho_tensor, delta_twist_cov, geometry, is_tangent, psi_from_delta_rho,
)
from .worldsheet import EmbeddingSheet, cauchy_slice, slice_integral

KINDS = ("dng", "inner_top", "inner_top_2d", "outer_top", "combined")


@dataclass(frozen=True)
class PotentialDensity:
    values: np.ndarray  # (..., n) including the density weight
    kind: str
    error: float = 0.0


@dataclass(frozen=True)
class CurrentDensity:
    values: np.ndarray  # sqrt|gamma| J^mu
    kind: str
    pair: tuple[str, str]
    error: float = 0.0


@dataclass(frozen=True)
class Couplings:
    sigma0: float = 1.0
    sigma1: float = 0.0
    sigma2: float = 0.0


# ------------------------------------------------------------------ potentials

def theta_dng(sheet: EmbeddingSheet, xi: DeformationField, sigma0: float = 1.0,
              **geom_kw) -> PotentialDensity:
    """-sigma0 sqrt|gamma| n^mu_alpha xi^alpha."""
    geom = geometry(sheet, **geom_kw)
    val = -sigma0 * geom.metric.dens[..., None] * np.einsum(
        "...ma,...a->...m", geom.projectors.n, xi.xi)
    return PotentialDensity(val, "dng")


def psi_top_inner(sheet: EmbeddingSheet, xi: DeformationField, sigma1: float = 1.0,
                  engine: VariationEngine | None = None, **geom_kw) -> PotentialDensity:
    geom = geometry(sheet, **geom_kw)
    d_rho = delta_rho_tensor(sheet, xi, engine, **geom_kw)
    psi = psi_from_delta_rho(geom, d_rho.value)
    return PotentialDensity(sigma1 * geom.metric.dens[..., None] * psi, "inner_top",
                            abs(sigma1) * d_rho.error)


def psi_top_inner_2d(sheet: EmbeddingSheet, xi: DeformationField, sigma1: float = 1.0,
                     engine: VariationEngine | None = None, **geom_kw) -> PotentialDensity:
    """sigma1 sqrt|gamma| E^{mu nu} delta rho_nu."""
    geom = geometry(sheet, **geom_kw)
    d_rho = delta_rho_cov(sheet, xi, engine, **geom_kw)
    val = np.einsum("...mn,...n->...m", geom.frame.E, d_rho.value)
    return PotentialDensity(sigma1 * geom.metric.dens[..., None] * val, "inner_top_2d",
                            abs(sigma1) * d_rho.error)


def psi_top_outer(sheet: EmbeddingSheet, xi: DeformationField, sigma2: float = 1.0,
                  engine: VariationEngine | None = None, **geom_kw) -> PotentialDensity:
    """sigma2 sqrt|gamma| E^{mu nu} delta omega_nu (four-dimensional backgrounds)."""
    if sheet.dim != 4:
        raise ValueError(f"the outer potential needs a 4-dimensional background, got {sheet.dim}")
    geom = geometry(sheet, **geom_kw)
    d_om = delta_twist_cov(sheet, xi, engine, **geom_kw)
    val = np.einsum("...mn,...n->...m", geom.frame.E, d_om.value)
    return PotentialDensity(sigma2 * geom.metric.dens[..., None] * val, "outer_top",
                            abs(sigma2) * d_om.error)


def potential(kind: str, sheet: EmbeddingSheet, xi: DeformationField, couplings: Couplings,
              engine: VariationEngine | None = None, **geom_kw) -> PotentialDensity:
    if kind not in KINDS:
        raise ValueError(f"unknown potential kind {kind!r}; choose from {KINDS}")
    c = couplings
    if kind == "dng":
        return theta_dng(sheet, xi, c.sigma0, **geom_kw)
    if kind == "inner_top":
        return psi_top_inner(sheet, xi, c.sigma1, engine, **geom_kw)
    if kind == "inner_top_2d":
        return psi_top_inner_2d(sheet, xi, c.sigma1, engine, **geom_kw)
    if kind == "outer_top":
        return psi_top_outer(sheet, xi, c.sigma2, engine, **geom_kw)
    # combined: the DNG piece always, the topological ones when switched on
    parts = [theta_dng(sheet, xi, c.sigma0, **geom_kw)]
    if c.sigma1:
        parts.append(psi_top_inner(sheet, xi, c.sigma1, engine, **geom_kw))
    if c.sigma2 and sheet.dim == 4:
        parts.append(psi_top_outer(sheet, xi, c.sigma2, engine, **geom_kw))
    return PotentialDensity(sum(p.values for p in parts), "combined", sum(p.error for p in parts))


# -------------------------------------------------------------------- currents

def _transported_kw(xi: DeformationField, t: float) -> dict:
    kw = {}
    if xi.frame_angle is not None:
        kw["rotation"] = t * np.asarray(xi.frame_angle)
    if xi.normal_angle is not None:
        kw["normal_rotation"] = t * np.asarray(xi.normal_angle)
    return kw


def vary_potential(kind: str, sheet: EmbeddingSheet, along: DeformationField,
                   xi: DeformationField, couplings: Couplings,
                   engine: VariationEngine | None = None, inner: VariationEngine | None = None):
    """Variation along ``along`` of the potential generated by the fixed field ``xi``.

    The worldsheet components e^a_mu theta^mu are varied and pushed forward
    with the unperturbed tangents, so the result is tangent to the sheet.
    """
    engine = engine or VariationEngine()
    inner = inner or engine

    def F(t):
        moved = sheet.deformed(along.xi, t) if t else sheet.as_grid()
        kw = _transported_kw(along, t)
        vals = potential(kind, moved, xi, couplings, inner, **kw).values
        return np.einsum("...am,...m->...a", geometry(moved, **kw).e_low, vals)

    var = engine.derivative(F)
    base = geometry(sheet)
    return Variation(np.einsum("...am,...a->...m", base.dx, var.value), var.error)


def symplectic_current(kind: str, sheet: EmbeddingSheet, xi1: DeformationField,
                       xi2: DeformationField, couplings: Couplings | None = None,
                       engine: VariationEngine | None = None, check_tangent: bool = True,
                       tangent_tol: float = 0.3) -> CurrentDensity:
    """sqrt|gamma| J(xi1, xi2) = delta_1 theta(xi2) - delta_2 theta(xi1).

    Both fields must be tangent to the solution space unless
    ``check_tangent`` is switched off (negative controls do that).
    """
    couplings = couplings or Couplings()
    if check_tangent:
        for xi in (xi1, xi2):
            ok, rel = is_tangent(sheet, xi, tangent_tol)
            if not ok:
                raise NonTangentDeformationError(
                    f"{xi.label}: relative linearised residual {rel:.3e} >= {tangent_tol}; "
                    "currents are only conserved for on-shell perturbations")
    if xi1 is xi2:
        return CurrentDensity(np.zeros_like(sheet.x), kind, (xi1.label, xi2.label))
    a = vary_potential(kind, sheet, xi1, xi2, couplings, engine)
    b = vary_potential(kind, sheet, xi2, xi1, couplings, engine)
    return CurrentDensity(a.value - b.value, kind, (xi1.label, xi2.label), a.error + b.error)


def conservation_check(current: CurrentDensity, sheet: EmbeddingSheet, frac: float = 0.1) -> float:
    """Max-norm of div-bar J over a fixed interior region."""
    geom = geometry(sheet)
    J = current.values / geom.metric.dens[..., None]
    div = geom.div_bar(J)
    return float(np.max(np.abs(div[sheet.region_mask(frac)])))


def slice_value(sheet: EmbeddingSheet, current: CurrentDensity, index: int) -> float:
    geom = geometry(sheet)
    sl = cauchy_slice(geom.sheet, index, analytic=False)
    J = current.values[index] / geom.metric.dens[index][:, None]
    return slice_integral(sheet, sl, J)


def omega_eval(sheet: EmbeddingSheet, xi1: DeformationField, xi2: DeformationField,
               slice_index: int | Sequence[int], couplings: Couplings | None = None,
               engine: VariationEngine | None = None, check_tangent: bool = True):
    """Slice integral of the combined current; a list of indices gives one value per slice."""
    cur = symplectic_current("combined", sheet, xi1, xi2, couplings, engine, check_tangent)
    if isinstance(slice_index, (int, np.integer)):
        return slice_value(sheet, cur, int(slice_index))
    return [slice_value(sheet, cur, int(i)) for i in slice_index]


def slice_independence(values: Sequence[float], floor: float = TOL.slice_floor) -> float:
    vals = np.asarray(values, float)
    return float((vals.max() - vals.min()) / max(np.max(np.abs(vals)), floor))


# ----------------------------------------------------------- graded forms

class DegreeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseSpaceForm:
    """k-form on the phase space, evaluated on k field-independent tangents.

    ``evaluator(sheet, tangents)`` returns a real number or a
    ``Variation`` carrying an error estimate.
    """

    degree: int
    evaluator: Callable[[EmbeddingSheet, Sequence[DeformationField]], object]
    name: str = "form"


def _as_variation(v) -> Variation:
    if isinstance(v, Variation):
        return Variation(float(v.value), v.error)
    return Variation(float(v), 0.0)


def form_eval_with_error(form: PhaseSpaceForm, sheet: EmbeddingSheet,
                         tangents: Sequence[DeformationField]) -> Variation:
    if len(tangents) != form.degree:
        raise DegreeMismatchError(
            f"{form.name} has degree {form.degree}, got {len(tangents)} tangents")
    return _as_variation(form.evaluator(sheet, list(tangents)))


def form_eval(form: PhaseSpaceForm, sheet: EmbeddingSheet,
              tangents: Sequence[DeformationField]) -> float:
    return float(form_eval_with_error(form, sheet, tangents).value)


def form_derivative(form: PhaseSpaceForm, engine: VariationEngine | None = None) -> PhaseSpaceForm:
    """(dF)(xi_0..xi_k) = sum_i (-1)^i delta_{xi_i} F(xi_0..^i..xi_k), for field-independent xi.

    The result is alternating whenever ``form`` is. Its error estimate
    adds the step-halving error of each outer variation to the error of
    the inner evaluation pushed through the outer stencil, whose absolute
    weights sum to 3/step with Richardson and 1/step without.
    """
    engine = engine or VariationEngine()
    gain = (3.0 if engine.richardson else 1.0) / engine.step

    def ev(sheet, tangents):
        total, err = 0.0, 0.0
        for i, xi in enumerate(tangents):
            if xi.frame_angle is not None or xi.normal_angle is not None:
                raise ValueError("form derivatives act on embedding deformations only")
            rest = tangents[:i] + tangents[i + 1:]

            def F(t, xi=xi, rest=rest):
                moved = sheet.deformed(xi.xi, t) if t else sheet.as_grid()
                return _as_variation(form.evaluator(moved, rest)).value

            d = engine.derivative(F)
            inner = _as_variation(form.evaluator(sheet.as_grid(), rest)).error
            total += (-1) ** i * float(d.value)
            err += d.error + gain * inner
        return Variation(total, err)

    return PhaseSpaceForm(form.degree + 1, ev, f"d({form.name})")


def functional_form(F: Callable, name: str = "F", **geom_kw) -> PhaseSpaceForm:
    """Degree-0 form from a functional of a ``SheetGeometry``."""
    return PhaseSpaceForm(0, lambda sheet, _t: float(F(geometry(sheet, **geom_kw))), name)


def theta_form(slice_index: int, sigma0: float = 1.0) -> PhaseSpaceForm:
    """The one-form xi -> slice integral of theta_dng(xi)."""
    def ev(sheet, tangents):
        th = theta_dng(sheet, tangents[0], sigma0).values
        geom = geometry(sheet)
        sl = cauchy_slice(geom.sheet, slice_index, analytic=False)
        return slice_integral(sheet, sl, th[slice_index] / geom.metric.dens[slice_index][:, None])
    return PhaseSpaceForm(1, ev, "theta")


def nilpotency_check(F: Callable, sheet: EmbeddingSheet, xi1: DeformationField,
                     xi2: DeformationField, outer: VariationEngine | None = None,
                     inner: VariationEngine | None = None) -> Variation:
    """d(dF)(xi1, xi2) with distinct outer and inner steps, so the check is not a stencil identity."""
    outer = outer or VariationEngine(1e-3)
    inner = inner or VariationEngine(7e-4)
    ddf = form_derivative(form_derivative(functional_form(F), inner), outer)
    return form_eval_with_error(ddf, sheet, [xi1, xi2])


def closure_check(sheet: EmbeddingSheet, tangents: Sequence[DeformationField], slice_index: int,
                  sigma0: float = 1.0, outer: VariationEngine | None = None,
                  inner: VariationEngine | None = None) -> Variation:
    """Fully antisymmetrised triple variation of the theta slice integral."""
    outer = outer or VariationEngine(1e-3)
    inner = inner or VariationEngine(7e-4)
    dd = form_derivative(form_derivative(theta_form(slice_index, sigma0), inner), outer)
    return form_eval_with_error(dd, sheet, list(tangents))


# ------------------------------------------------------------ frame-rule probe

def frame_rule_dependence(sheet: EmbeddingSheet, xi: DeformationField, kind: str = "inner_top_2d",
                          alt: dict | None = None, engine: VariationEngine | None = None,
                          frac: float = 0.1) -> dict:
    """Difference of a topological potential under two deterministic frame rules.

    Reported, not asserted: nothing fixes how the potential should move
    when the frame rule changes. The divergence difference is also given,
    since a pure gauge change should leave div-bar psi untouched.
    """
    if alt is None:
        alt = {"tangent_order": "sigma_first"} if not sheet.lorentzian else {"seeds": tuple(range(sheet.dim))}
    c = Couplings(1.0, 1.0, 1.0)
    p0 = potential(kind, sheet, xi, c, engine)
    p1 = potential(kind, sheet, xi, c, engine, **alt)
    geom = geometry(sheet)
    mask = sheet.region_mask(frac)
    d = p1.values - p0.values
    div0 = geom.div_bar(p0.values / geom.metric.dens[..., None])
    div1 = geom.div_bar(p1.values / geom.metric.dens[..., None])
    scale = max(float(np.max(np.abs(p0.values[mask]))), 1e-300)
    return {
        "potential_diff": float(np.max(np.abs(d[mask]))),
        "potential_scale": scale,
        "divergence_diff": float(np.max(np.abs((div1 - div0)[mask]))),
        "alt_rule": {k: list(v) if isinstance(v, tuple) else v for k, v in alt.items()},
    }
