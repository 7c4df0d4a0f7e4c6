"""Analytic background spacetimes and covariant differentiation of sampled fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_core import MetricValue, TensorError, TensorValue


class InvalidConformalFactorError(ValueError):
    pass


class StencilWidthError(ValueError):
    pass


KINDS = ("euclidean", "minkowski", "conformal")


@dataclass(frozen=True)
class BackgroundMetric:
    """Flat or conformally flat metric ``Omega(x)^2 * base``.

    ``base`` is ``"minkowski"`` or ``"euclidean"``; ``q`` sets
    ``Omega = 1 + q |x|^2`` for the conformal kind.
    """

    dim: int
    kind: str = "euclidean"
    q: float = 0.0
    base: str = "minkowski"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown background kind {self.kind!r}")
        if self.dim not in (2, 3, 4):
            raise ValueError(f"background dim must be 2..4, got {self.dim}")
        if self.kind != "conformal":
            object.__setattr__(self, "base", self.kind)

    @property
    def eta(self) -> np.ndarray:
        diag = np.ones(self.dim)
        if self.base == "minkowski":
            diag[0] = -1.0
        return np.diag(diag)

    @property
    def is_flat(self) -> bool:
        return self.kind != "conformal" or self.q == 0.0

    @property
    def lorentzian(self) -> bool:
        return self.base == "minkowski"

    def omega(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind != "conformal":
            return np.ones(x.shape[:-1])
        om = 1.0 + self.q * np.sum(x * x, axis=-1)
        if np.any(om <= 0):
            raise InvalidConformalFactorError("conformal factor must stay positive")
        return om

    def metric_array(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        om = self.omega(x)
        return (om ** 2)[..., None, None] * self.eta

    def inverse_metric_array(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        om = self.omega(x)
        return (om ** -2)[..., None, None] * np.linalg.inv(self.eta)

    def christoffel_array(self, x) -> np.ndarray:
        """Gamma^mu_{lambda nu} with axes (..., mu, lambda, nu)."""
        x = np.asarray(x, dtype=float)
        n = self.dim
        if self.is_flat:
            return np.zeros(x.shape[:-1] + (n, n, n))
        om = self.omega(x)
        dlog = (2.0 * self.q * x) / om[..., None]  # d_nu ln Omega
        delta = np.eye(n)
        eta = self.eta
        up = dlog @ np.linalg.inv(eta)  # eta^{mu a} d_a ln Omega
        gam = (np.einsum("ml,...n->...mln", delta, dlog)
               + np.einsum("mn,...l->...mln", delta, dlog)
               - np.einsum("ln,...m->...mln", eta, up))
        return gam

    def metric_derivative_array(self, x) -> np.ndarray:
        """Closed-form d_rho g_{mu nu}, axes (..., rho, mu, nu)."""
        x = np.asarray(x, dtype=float)
        if self.is_flat:
            return np.zeros(x.shape[:-1] + (self.dim,) * 3)
        om = self.omega(x)
        d_om2 = 2.0 * om[..., None] * (2.0 * self.q * x)
        return d_om2[..., :, None, None] * self.eta


def metric_at(bg: BackgroundMetric, x) -> MetricValue:
    x = np.asarray(x, dtype=float)
    if x.shape != (bg.dim,) or not np.all(np.isfinite(x)):
        raise ValueError(f"point must be a finite {bg.dim}-vector")
    return MetricValue.from_matrix(bg.metric_array(x))


def christoffel_at(bg: BackgroundMetric, x) -> TensorValue:
    x = np.asarray(x, dtype=float)
    if x.shape != (bg.dim,) or not np.all(np.isfinite(x)):
        raise ValueError(f"point must be a finite {bg.dim}-vector")
    return TensorValue(bg.christoffel_array(x), ("u", "d", "d"), bg.dim)


@dataclass(frozen=True)
class FieldSample:
    """Centre value plus +-h samples along every coordinate axis.

    ``stencil[k, 0]`` is the field at ``x - h e_k`` and ``stencil[k, 1]``
    at ``x + h e_k``.
    """

    point: np.ndarray
    center: np.ndarray
    stencil: np.ndarray
    h: float
    variance: tuple[str, ...]

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("stencil spacing must be positive")

    @classmethod
    def from_function(cls, func, point, h: float, variance) -> FieldSample:
        point = np.asarray(point, dtype=float)
        n = point.size
        center = np.asarray(func(point), dtype=float)
        stencil = np.empty((n, 2) + center.shape)
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            stencil[k, 0] = func(point - e)
            stencil[k, 1] = func(point + e)
        return cls(point, center, stencil, h, tuple(variance))


def covariant_derivative(bg: BackgroundMetric, f: FieldSample) -> TensorValue:
    """nabla_rho f with second-order central differences and Gamma corrections.

    The derivative slot is prepended as a covariant index.
    """
    n = bg.dim
    rank = len(f.variance)
    if rank > 3:
        raise TensorError("covariant_derivative supports rank <= 3")
    if f.stencil.shape[:2] != (n, 2) or f.stencil.shape[2:] != f.center.shape:
        raise StencilWidthError(
            f"need a (dim, 2, ...) stencil, got {f.stencil.shape}")
    partial = (f.stencil[:, 1] - f.stencil[:, 0]) / (2.0 * f.h)
    gam = bg.christoffel_array(f.point)
    out = partial.copy()
    t = f.center
    for slot, var in enumerate(f.variance):
        moved = np.moveaxis(t, slot, 0)  # (a, ...rest)
        if var == "u":
            # + Gamma^m_{rho a} T^{..a..}
            corr = np.einsum("mra,a...->rm...", gam, moved)
        else:
            # - Gamma^a_{rho m} T_{..a..}
            corr = -np.einsum("arm,a...->rm...", gam, moved)
        out = out + np.moveaxis(corr, 1, slot + 1)
    return TensorValue(out, ("d",) + tuple(f.variance), n)
