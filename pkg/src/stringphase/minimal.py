"""Minimal surfaces spanning fixed circles, by minimising the polyhedral area.

The surface is a node grid whose boundary rows are pinned; each grid quad
contributes the mean of its two triangulations, which keeps the discrete
area symmetric under reflection of the grid. Minimisation uses scipy's
L-BFGS with the exact polyhedral gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .background import BackgroundMetric
from .worldsheet import EmbeddingSheet

TWO_PI = 2.0 * np.pi


class SolverDivergenceError(RuntimeError):
    pass


@dataclass
class SolverState:
    """Mutable relaxation state; ``history`` collects (iteration, area, grad_norm, neck)."""

    topology: str = "annulus"      # "annulus": two coaxial unit circles; "disk": one circle
    half_separation: float = 0.5
    radius: float = 1.0
    n_z: int = 33
    n_u: int = 64
    max_iter: int = 5000
    grad_tol: float = 1e-4
    collapse_radius: float = 0.05
    x: np.ndarray | None = None
    history: list = field(default_factory=list)
    status: str = "pending"
    message: str = ""

    def __post_init__(self):
        if self.topology not in ("annulus", "disk"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.x is None:
            self.x = self.initial_guess()

    def initial_guess(self) -> np.ndarray:
        if self.topology == "annulus":
            z = np.linspace(-self.half_separation, self.half_separation, self.n_z)
            u = TWO_PI * np.arange(self.n_u) / self.n_u
            Z, U = np.meshgrid(z, u, indexing="ij")
            r = self.radius * np.ones_like(Z)
            return np.stack([r * np.cos(U), r * np.sin(U), Z], axis=-1)
        s = np.linspace(-1.0, 1.0, self.n_z)
        A, B = np.meshgrid(s, s, indexing="ij")
        X = A * np.sqrt(1.0 - 0.5 * B ** 2)
        Y = B * np.sqrt(1.0 - 0.5 * A ** 2)
        Z = 0.2 * (1.0 - A ** 2) * (1.0 - B ** 2)  # off-plane start
        return self.radius * np.stack([X, Y, Z], axis=-1)

    @property
    def periodic(self) -> tuple[bool, bool]:
        return (False, self.topology == "annulus")

    def free_mask(self) -> np.ndarray:
        mask = np.ones(self.x.shape[:2], dtype=bool)
        mask[0, :] = mask[-1, :] = False
        if self.topology == "disk":
            mask[:, 0] = mask[:, -1] = False
        return mask


def _quads(x: np.ndarray, periodic_u: bool):
    a = x[:-1, :]
    b = x[1:, :]
    if periodic_u:
        c, d = np.roll(b, -1, axis=1), np.roll(a, -1, axis=1)
    else:
        a, b = a[:, :-1], b[:, :-1]
        c, d = x[1:, 1:], x[:-1, 1:]
    return a, b, c, d


def _tri(p, q, r):
    n = np.cross(q - p, r - p)
    norm = np.linalg.norm(n, axis=-1)
    u = n / np.maximum(norm, 1e-300)[..., None]
    area = 0.5 * norm
    gp = 0.5 * np.cross(q - r, u)
    gq = 0.5 * np.cross(r - p, u)
    gr = 0.5 * np.cross(p - q, u)
    return area, gp, gq, gr, norm


def polyhedral_area(x: np.ndarray, periodic_u: bool, with_grad: bool = True):
    """Area (mean of both quad triangulations) and its gradient wrt every node."""
    a, b, c, d = _quads(x, periodic_u)
    grads = [np.zeros_like(a) for _ in range(4)]
    total = 0.0
    min_norm = np.inf
    for tri in ((0, 1, 2), (0, 2, 3), (0, 1, 3), (1, 2, 3)):
        pts = [(a, b, c, d)[k] for k in tri]
        area, *g, norm = _tri(*pts)
        total += 0.5 * float(np.sum(area))
        min_norm = min(min_norm, float(np.min(norm)))
        for k, gk in zip(tri, g):
            grads[k] += 0.5 * gk
    if not with_grad:
        return total, None, min_norm
    G = np.zeros_like(x)
    if periodic_u:
        G[:-1] += grads[0]
        G[1:] += grads[1]
        G[1:] += np.roll(grads[2], 1, axis=1)
        G[:-1] += np.roll(grads[3], 1, axis=1)
    else:
        G[:-1, :-1] += grads[0]
        G[1:, :-1] += grads[1]
        G[1:, 1:] += grads[2]
        G[:-1, 1:] += grads[3]
    return total, G, min_norm


def _node_area(state: SolverState) -> float:
    h0 = 2.0 * (state.half_separation if state.topology == "annulus" else state.radius) / (state.n_z - 1)
    h1 = TWO_PI * state.radius / state.n_u if state.topology == "annulus" else h0
    return h0 * h1


def neck_radius(x: np.ndarray) -> float:
    return float(np.min(np.linalg.norm(x[..., :2], axis=-1).mean(axis=1)))


def relax_minimal(state: SolverState) -> EmbeddingSheet:
    """Relax ``state.x`` to a discrete minimal surface with the boundary pinned.

    Non-convergence and neck collapse are recorded on ``state`` and raised
    as ``SolverDivergenceError``; the history is kept either way.
    """
    mask = state.free_mask()
    periodic_u = state.periodic[1]
    x0 = state.x.copy()
    scale = _node_area(state)

    def unpack(v):
        x = x0.copy()
        x[mask] = v.reshape(-1, 3)
        return x

    def fun(v):
        x = unpack(v)
        area, G, min_norm = polyhedral_area(x, periodic_u)
        if min_norm < 1e-14:
            return np.inf, np.zeros_like(v)  # degenerate step: the line search backs off
        return area, G[mask].ravel()

    class Collapse(Exception):
        pass

    def callback(intermediate):
        v = intermediate.x if hasattr(intermediate, "x") else intermediate
        x = unpack(v)
        area, G, _ = polyhedral_area(x, periodic_u)
        gnorm = float(np.max(np.abs(G[mask]))) / scale
        neck = neck_radius(x) if state.topology == "annulus" else float("nan")
        state.history.append((len(state.history) + 1, area, gnorm, neck))
        state.x = x
        if state.topology == "annulus" and neck < state.collapse_radius:
            raise Collapse

    area0, G0, _ = polyhedral_area(x0, periodic_u)
    state.history.append((0, area0, float(np.max(np.abs(G0[mask]))) / scale,
                          neck_radius(x0) if state.topology == "annulus" else float("nan")))
    try:
        res = minimize(fun, x0[mask].ravel(), jac=True, method="L-BFGS-B", callback=callback,
                       options={"maxiter": state.max_iter, "gtol": state.grad_tol * scale * 1e-2,
                                "ftol": 1e-15, "maxcor": 20})
        state.x = unpack(res.x)
        state.message = str(res.message)
    except Collapse:
        state.status = "neck_collapse"
        state.message = (f"neck radius fell below {state.collapse_radius} after "
                         f"{len(state.history) - 1} iterations")
        raise SolverDivergenceError(state.message)

    area, G, _ = polyhedral_area(state.x, periodic_u)
    gnorm = float(np.max(np.abs(G[mask]))) / scale
    shrinking = _monotone_neck_shrink(state.history)
    if gnorm >= state.grad_tol or shrinking:
        state.status = "not_converged"
        state.message = (f"area-gradient max-norm {gnorm:.3e} (tolerance {state.grad_tol:.1e}) "
                         f"after {len(state.history) - 1} iterations"
                         + ("; neck still shrinking" if shrinking else ""))
        raise SolverDivergenceError(state.message)
    state.status = "converged"
    state.message = f"area {area:.10f}, gradient {gnorm:.2e}"
    return to_sheet(state)


def prolong(x: np.ndarray, shape: tuple[int, int], periodic_u: bool) -> np.ndarray:
    """Bilinear transfer of a node grid to ``shape`` (warm start for a finer relaxation)."""
    from scipy.interpolate import RegularGridInterpolator
    n0, n1 = x.shape[:2]
    s0 = np.linspace(0.0, 1.0, n0)
    if periodic_u:
        s1 = np.arange(n1 + 1) / n1
        data = np.concatenate([x, x[:, :1]], axis=1)
        t1 = np.arange(shape[1]) / shape[1]
    else:
        s1 = np.linspace(0.0, 1.0, n1)
        data = x
        t1 = np.linspace(0.0, 1.0, shape[1])
    interp = RegularGridInterpolator((s0, s1), data)
    T0, T1 = np.meshgrid(np.linspace(0.0, 1.0, shape[0]), t1, indexing="ij")
    return interp(np.stack([T0, T1], axis=-1))


def relax_multilevel(state: SolverState, levels: int = 3) -> EmbeddingSheet:
    """Relax on successively halved grids first and prolong each result upward.

    Boundary rows of the fine grid are reset to the exact circles after
    each transfer; ``state.history`` keeps only the finest level. A failed
    coarse level is dropped rather than propagated.
    """
    from dataclasses import replace
    shapes = [(state.n_z, state.n_u)]
    for _ in range(levels - 1):
        nz, nu = shapes[-1]
        if (nz - 1) % 2 or nu % 2 or nz < 9:
            break
        shapes.append(((nz - 1) // 2 + 1, nu // 2 if state.topology == "annulus" else nz // 2 + 1))
    x = None
    for nz, nu in reversed(shapes[1:]):
        sub = replace(state, n_z=nz, n_u=nu if state.topology == "annulus" else nz,
                      x=None if x is None else _with_exact_boundary(state, x, nz, nu), history=[])
        try:
            relax_minimal(sub)
            x = sub.x
        except SolverDivergenceError:
            x = None  # coarse grids can fail near the existence limit; start cold

    if x is not None:
        state.x = _with_exact_boundary(state, x, state.n_z, state.n_u)
    return relax_minimal(state)


def _with_exact_boundary(state: SolverState, x: np.ndarray, nz: int, nu: int) -> np.ndarray:
    from dataclasses import replace
    nu = nu if state.topology == "annulus" else nz
    fine = prolong(x, (nz, nu), state.periodic[1])
    ref = replace(state, n_z=nz, n_u=nu, x=None).initial_guess()
    keep = ~replace(state, n_z=nz, n_u=nu, x=ref).free_mask()
    fine[keep] = ref[keep]
    return fine


def _monotone_neck_shrink(history, window: int = 50) -> bool:
    necks = [h[3] for h in history[-window:] if np.isfinite(h[3])]
    return len(necks) == window and all(b < a for a, b in zip(necks, necks[1:])) \
        and necks[-1] < 0.5 * necks[0]


def to_sheet(state: SolverState) -> EmbeddingSheet:
    bg = BackgroundMetric(3, "euclidean")
    if state.topology == "annulus":
        a = state.half_separation
        return EmbeddingSheet("relaxed_catenoid", bg, (-a, a), (0.0, TWO_PI), state.x.shape[:2],
                              (False, True), state.x.copy())
    return EmbeddingSheet("relaxed_disk", bg, (-1.0, 1.0), (-1.0, 1.0), state.x.shape[:2],
                          (False, False), state.x.copy())


# ------------------------------------------------------------ catenoid oracle

def catenoid_neck(half_separation: float, radius: float = 1.0, stable: bool = True) -> float:
    """Neck parameter c with c cosh(a/c) = R; raises beyond the Goldschmidt limit."""
    a, R = half_separation, radius
    f = lambda c: c * np.cosh(a / c) - R  # noqa: E731
    # c cosh(a/c) has a single minimum in c; locate it on a log grid
    cs = np.geomspace(0.05 * a, 10 * R, 4000)
    vals = f(cs)
    k = int(np.argmin(vals))
    if vals[k] > 0:
        raise ValueError(f"no catenoid spans circles at half-separation {a} (Goldschmidt limit)")
    if stable:
        return brentq(f, cs[k], 10 * R)
    return brentq(f, 0.05 * a, cs[k])


def catenoid_area(half_separation: float, radius: float = 1.0) -> float:
    c = catenoid_neck(half_separation, radius)
    a = half_separation
    return float(np.pi * c * (2.0 * a + c * np.sinh(2.0 * a / c)))


def goldschmidt_limit(radius: float = 1.0) -> float:
    """Largest half-separation for which a catenoid spans two coaxial circles."""
    return float(brentq(lambda a: _min_ccosh(a) - radius, 0.1 * radius, 2.0 * radius))


def _min_ccosh(a: float) -> float:
    cs = np.geomspace(0.05 * a, 10.0, 20000)
    return float(np.min(cs * np.cosh(a / cs)))
