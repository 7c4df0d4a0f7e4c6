"""Yang-Mills, linearised gravity and scalar fixtures on small periodic lattices.

Grids may be "reduced": a lattice with fewer grid axes than index
dimensions treats the remaining coordinates as directions of exact
symmetry (all derivatives along them vanish). That is how transverse
waves live on a 1+1 grid while keeping four field components.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .tensor_core import levi_civita_symbol, permutation_sign


# ------------------------------------------------------------------ lattice

@dataclass(frozen=True)
class LatticeField:
    """Node lattice: ``shape`` grid points over ``extent`` per grid axis, Minkowski index space."""

    shape: tuple[int, ...]
    extent: tuple[float, ...] | None = None
    periodic: tuple[bool, ...] | None = None
    origin: tuple[float, ...] | None = None
    index_dim: int = 4

    def __post_init__(self):
        k = len(self.shape)
        if k == 0 or k > self.index_dim:
            raise ValueError(f"need 1..{self.index_dim} grid axes, got {k}")
        if any(n < 4 for n in self.shape):
            raise ValueError("every grid axis needs at least 4 nodes")
        if self.extent is None:
            object.__setattr__(self, "extent", (2.0 * np.pi,) * k)
        if self.periodic is None:
            object.__setattr__(self, "periodic", (True,) * k)
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * k)

    @property
    def grid_dim(self) -> int:
        return len(self.shape)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / (n if p else n - 1)
                     for L, n, p in zip(self.extent, self.shape, self.periodic))

    @property
    def eta(self) -> np.ndarray:
        return np.diag([-1.0] + [1.0] * (self.index_dim - 1))

    def coords(self) -> list[np.ndarray]:
        axes = [o + h * np.arange(n) for o, h, n in zip(self.origin, self.h, self.shape)]
        return list(np.meshgrid(*axes, indexing="ij"))

    def d(self, f: np.ndarray, mu: int) -> np.ndarray:
        """Second-order central derivative along coordinate ``mu`` (grid axes lead ``f``)."""
        if mu >= self.grid_dim:
            return np.zeros_like(f)
        h = self.h[mu]
        if self.periodic[mu]:
            return (np.roll(f, -1, axis=mu) - np.roll(f, 1, axis=mu)) / (2.0 * h)
        return np.gradient(f, h, axis=mu, edge_order=2)

    def d2(self, f: np.ndarray, mu: int) -> np.ndarray:
        """Compact three-point second derivative."""
        if mu >= self.grid_dim:
            return np.zeros_like(f)
        if not self.periodic[mu]:
            return self.d(self.d(f, mu), mu)
        h = self.h[mu]
        return (np.roll(f, -1, axis=mu) - 2.0 * f + np.roll(f, 1, axis=mu)) / h ** 2

    def interior(self, margin: int = 2) -> tuple:
        return tuple(slice(None) if p else slice(margin, -margin) for p in self.periodic)


def _max(f, lat: LatticeField) -> float:
    return float(np.max(np.abs(f[lat.interior()])))


# ----------------------------------------------------------------- Yang-Mills

def su2_basis() -> np.ndarray:
    """Anti-hermitian generators T_a = -(i/2) sigma_a."""
    s = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
    return -0.5j * s


@dataclass(frozen=True)
class GaugeConfig:
    """A_mu per node, shape (*grid, n, m, m); u(1) uses real 1x1 blocks with Tr = identity."""

    lattice: LatticeField
    A: np.ndarray
    group: str = "u1"

    def __post_init__(self):
        lat = self.lattice
        m = 1 if self.group == "u1" else 2
        if self.group not in ("u1", "su2"):
            raise ValueError(f"unknown gauge group {self.group!r}")
        want = lat.shape + (lat.index_dim, m, m)
        if self.A.shape != want:
            raise ValueError(f"gauge field shape {self.A.shape} != {want}")
        if not np.all(np.isfinite(self.A)):
            raise ValueError("gauge field must be finite")
        if self.group == "su2":
            herm = self.A + np.conj(np.swapaxes(self.A, -1, -2))
            if np.max(np.abs(herm)) > 1e-12:
                raise ValueError("su(2) components must be anti-hermitian")
            if np.max(np.abs(np.trace(self.A, axis1=-2, axis2=-1))) > 1e-12:
                raise ValueError("su(2) components must be traceless")

    @classmethod
    def from_components(cls, lat: LatticeField, comps: np.ndarray, group: str = "su2"):
        """Build from real algebra components (*grid, n, 3) (su2) or (*grid, n) (u1)."""
        if group == "u1":
            return cls(lat, np.asarray(comps, float)[..., None, None], "u1")
        A = np.einsum("...a,aij->...ij", np.asarray(comps, float), su2_basis())
        return cls(lat, A, "su2")

    def with_field(self, A: np.ndarray) -> GaugeConfig:
        return GaugeConfig(self.lattice, A, self.group)


def _comm(X, Y):
    return X @ Y - Y @ X


def _tr(X):
    return np.real(np.trace(X, axis1=-2, axis2=-1))


def ym_curvature(cfg: GaugeConfig) -> np.ndarray:
    """F_{mu nu} with axes (*grid, mu, nu, m, m); exactly antisymmetric."""
    lat, A = cfg.lattice, cfg.A
    n = lat.index_dim
    F = np.zeros(lat.shape + (n, n) + A.shape[-2:], dtype=A.dtype)
    for mu in range(n):
        for nu in range(mu + 1, n):
            f = lat.d(A[..., nu, :, :], mu) - lat.d(A[..., mu, :, :], nu)
            if cfg.group != "u1":
                f = f + _comm(A[..., mu, :, :], A[..., nu, :, :])
            F[..., mu, nu, :, :] = f
            F[..., nu, mu, :, :] = -f
    return F


def raise_pair(F: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """F^{mu nu} from F_{mu nu} with a diagonal metric (axes ..., mu, nu, m, m)."""
    d = np.diag(np.linalg.inv(eta))
    return F * d[:, None, None, None] * d[None, :, None, None]


def _divergence(lat, Fup, A, group):
    """d_mu X^{mu nu} + [A_mu, X^{mu nu}]."""
    n = lat.index_dim
    out = np.zeros(lat.shape + (n,) + Fup.shape[-2:], dtype=Fup.dtype)
    for nu in range(n):
        for mu in range(n):
            out[..., nu, :, :] += lat.d(Fup[..., mu, nu, :, :], mu)
            if group != "u1" and A is not None:
                out[..., nu, :, :] += _comm(A[..., mu, :, :], Fup[..., mu, nu, :, :])
    return out


def ym_eom_residual(cfg: GaugeConfig, theta: float = 0.0) -> np.ndarray:
    """d_mu F^{mu nu} + [A_mu, F^{mu nu}] (+ the theta-term shift), per node and nu."""
    lat = cfg.lattice
    F = ym_curvature(cfg)
    res = _divergence(lat, raise_pair(F, lat.eta), cfg.A, cfg.group)
    if theta:
        res = res + theta_eom_shift(cfg, theta, F)
    return res


def ym_delta_curvature(cfg: GaugeConfig, dA: np.ndarray) -> np.ndarray:
    lat, A = cfg.lattice, cfg.A
    n = lat.index_dim
    dF = np.zeros(lat.shape + (n, n) + A.shape[-2:], dtype=np.result_type(A, dA))
    for mu in range(n):
        for nu in range(mu + 1, n):
            f = lat.d(dA[..., nu, :, :], mu) - lat.d(dA[..., mu, :, :], nu)
            if cfg.group != "u1":
                f = f + _comm(dA[..., mu, :, :], A[..., nu, :, :]) \
                    + _comm(A[..., mu, :, :], dA[..., nu, :, :])
            dF[..., mu, nu, :, :] = f
            dF[..., nu, mu, :, :] = -f
    return dF


def ym_linearized_residual(cfg: GaugeConfig, dA: np.ndarray) -> np.ndarray:
    """Linearisation of the field equation around ``cfg`` along ``dA``."""
    lat = cfg.lattice
    Fup = raise_pair(ym_curvature(cfg), lat.eta)
    dFup = raise_pair(ym_delta_curvature(cfg, dA), lat.eta)
    res = _divergence(lat, dFup, cfg.A, cfg.group)
    if cfg.group != "u1":
        for nu in range(lat.index_dim):
            for mu in range(lat.index_dim):
                res[..., nu, :, :] += _comm(dA[..., mu, :, :], Fup[..., mu, nu, :, :])
    return res


def ym_potential(dA: np.ndarray, F: np.ndarray, eta: np.ndarray | None = None) -> np.ndarray:
    """Psi^mu = -Tr[dA_nu F^{mu nu}], from lower-index F."""
    n = F.shape[-3]
    eta = np.diag([-1.0] + [1.0] * (n - 1)) if eta is None else eta
    Fup = raise_pair(F, eta)
    return -_tr(np.einsum("...nij,...mnjk->...mik", dA, Fup))


def ym_current(cfg: GaugeConfig, dA1: np.ndarray, dA2: np.ndarray):
    """J^mu = Tr[dA1_nu dF2^{mu nu}] - (1 <-> 2) and the max-norm of d_mu J^mu."""
    lat = cfg.lattice
    if dA1 is dA2:
        J = np.zeros(lat.shape + (lat.index_dim,))
    else:
        dF1 = raise_pair(ym_delta_curvature(cfg, dA1), lat.eta)
        dF2 = raise_pair(ym_delta_curvature(cfg, dA2), lat.eta)
        J = _tr(np.einsum("...nij,...mnjk->...mik", dA1, dF2)) \
            - _tr(np.einsum("...nij,...mnjk->...mik", dA2, dF1))
    div = sum(lat.d(J[..., mu], mu) for mu in range(lat.index_dim))
    return J, _max(div, lat)


# theta term -------------------------------------------------------------

def _eps_terms(n: int = 4):
    return [(p, permutation_sign(p)) for p in permutations(range(n))]


def theta_density(cfg: GaugeConfig, F: np.ndarray | None = None) -> np.ndarray:
    """eps^{mu nu sigma rho} Tr(F_{mu nu} F_{sigma rho})."""
    if cfg.lattice.index_dim != 4:
        raise ValueError("the theta term needs four index dimensions")
    F = ym_curvature(cfg) if F is None else F
    out = np.zeros(cfg.lattice.shape)
    for (a, b, c, d), s in _eps_terms():
        out += s * _tr(F[..., a, b, :, :] @ F[..., c, d, :, :])
    return out


def chern_simons_current(cfg: GaugeConfig) -> np.ndarray:
    """K^mu = 4 eps^{mu nu sigma rho} Tr(A_nu d_sigma A_rho + (2/3) A_nu A_sigma A_rho)."""
    lat, A = cfg.lattice, cfg.A
    if lat.index_dim != 4:
        raise ValueError("the Chern-Simons current needs four index dimensions")
    dA = [lat.d(A, s) for s in range(4)]  # dA[s][..., rho, :, :]
    K = np.zeros(lat.shape + (4,))
    for (m, a, b, c), s in _eps_terms():
        term = A[..., a, :, :] @ dA[b][..., c, :, :]
        if cfg.group != "u1":
            term = term + (2.0 / 3.0) * A[..., a, :, :] @ A[..., b, :, :] @ A[..., c, :, :]
        K[..., m] += 4.0 * s * _tr(term)
    return K


def theta_term_check(cfg: GaugeConfig):
    """(eps Tr FF, d_mu K^mu, max-norm of the difference on the interior)."""
    lhs = theta_density(cfg)
    K = chern_simons_current(cfg)
    rhs = sum(cfg.lattice.d(K[..., mu], mu) for mu in range(4))
    return lhs, rhs, _max(lhs - rhs, cfg.lattice)


def theta_eom_shift(cfg: GaugeConfig, theta: float, F: np.ndarray | None = None) -> np.ndarray:
    """Change of the field equation from theta eps Tr(FF): -2 theta eps^{mu nu s r} D_mu F_{s r}.

    Vanishes by the Bianchi identity; on the lattice it is a pure
    discretisation error.
    """
    lat, A = cfg.lattice, cfg.A
    if lat.index_dim != 4:
        raise ValueError("the theta term needs four index dimensions")
    F = ym_curvature(cfg) if F is None else F
    out = np.zeros(lat.shape + (4,) + A.shape[-2:], dtype=F.dtype)
    for (m, nu, a, b), s in _eps_terms():
        DF = lat.d(F[..., a, b, :, :], m)
        if cfg.group != "u1":
            DF = DF + _comm(A[..., m, :, :], F[..., a, b, :, :])
        out[..., nu, :, :] += -2.0 * theta * s * DF
    return out


def theta_potential_shift(dA: np.ndarray, F: np.ndarray, theta: float) -> np.ndarray:
    """Extra potential 2 theta eps^{mu nu s r} Tr(dA_nu F_{s r})."""
    out = np.zeros(F.shape[:-4] + (4,))
    for (m, nu, a, b), s in _eps_terms():
        out[..., m] += 2.0 * theta * s * _tr(dA[..., nu, :, :] @ F[..., a, b, :, :])
    return out


def u1_plane_wave(lat: LatticeField, amp: float = 1.0, k: int = 1, pol: int = 2,
                  mover: int = 1, phase: float = 0.0) -> np.ndarray:
    """A_pol = amp cos(k (x^1 - mover x^0) + phase), transverse to the grid."""
    X = lat.coords()
    A = np.zeros(lat.shape + (lat.index_dim, 1, 1))
    A[..., pol, 0, 0] = amp * np.cos(k * (X[1] - mover * X[0]) + phase)
    return A


# ---------------------------------------------------------- linearised gravity

@dataclass(frozen=True)
class MetricPerturbation:
    lattice: LatticeField
    h: np.ndarray  # (*grid, n, n)

    def __post_init__(self):
        n = self.lattice.index_dim
        if self.h.shape != self.lattice.shape + (n, n):
            raise ValueError(f"perturbation shape {self.h.shape} is not grid + ({n}, {n})")
        if np.max(np.abs(self.h - np.swapaxes(self.h, -1, -2))) > 0:
            raise ValueError("metric perturbation must be exactly symmetric")


def delta_christoffel(pert: MetricPerturbation) -> np.ndarray:
    """dGamma_{mu nu}^gamma = (1/2) eta^{gamma a}(d_mu h_{a nu} + d_nu h_{a mu} - d_a h_{mu nu}).

    Axes (*grid, mu, nu, gamma).
    """
    lat, h = pert.lattice, pert.h
    dh = np.stack([lat.d(h, a) for a in range(lat.index_dim)], axis=-3)  # (..., a, mu, nu)
    low = 0.5 * (dh + np.einsum("...nam->...man", dh)
                 - np.einsum("...amn->...man", dh))
    eta_inv = np.linalg.inv(lat.eta)
    return np.einsum("ga,...man->...mng", eta_inv, low)


def christoffel_numeric(lat: LatticeField, g: np.ndarray) -> np.ndarray:
    """Gamma_{mu nu}^gamma of a full metric field by finite differences (oracle)."""
    gi = np.linalg.inv(g)
    dg = np.stack([lat.d(g, a) for a in range(lat.index_dim)], axis=-3)
    low = 0.5 * (dg + np.einsum("...nam->...man", dg) - np.einsum("...amn->...man", dg))
    return np.einsum("...ga,...man->...mng", gi, low)


def ricci_numeric(lat: LatticeField, g: np.ndarray) -> np.ndarray:
    G = christoffel_numeric(lat, g)
    n = lat.index_dim
    dG = np.stack([lat.d(G, a) for a in range(n)], axis=-4)  # (..., a, mu, nu, gamma)
    R = np.einsum("...gmng->...mn", dG) - np.einsum("...nmgg->...mn", dG)
    R += np.einsum("...glg,...mnl->...mn", G, G) - np.einsum("...nlg,...mgl->...mn", G, G)
    return R


def gr_palatini(pert: MetricPerturbation) -> np.ndarray:
    """dR_{mu nu} = d_gamma dGamma_{mu nu}^gamma - d_nu dGamma_{mu gamma}^gamma, symmetrised."""
    lat = pert.lattice
    dG = delta_christoffel(pert)
    n = lat.index_dim
    first = sum(lat.d(dG[..., g], g) for g in range(n))
    trace = np.einsum("...mgg->...m", dG)
    second = np.stack([lat.d(trace, nu) for nu in range(n)], axis=-1)  # (..., mu, nu)
    dR = first - second
    return 0.5 * (dR + np.swapaxes(dR, -1, -2))


def linearized_einstein(pert: MetricPerturbation) -> np.ndarray:
    """dR_{mu nu} - (1/2) eta_{mu nu} eta^{ab} dR_ab (flat background)."""
    eta = pert.lattice.eta
    dR = gr_palatini(pert)
    tr = np.einsum("ab,...ab->...", np.linalg.inv(eta), dR)
    return dR - 0.5 * eta * tr[..., None, None]


def gr_potential(pert: MetricPerturbation) -> np.ndarray:
    """Psi^gamma = sqrt(-g)[g^{mu nu} dGamma_{nu mu}^gamma - g^{mu gamma} dGamma_{mu a}^a] at g = eta."""
    eta_inv = np.linalg.inv(pert.lattice.eta)
    dG = delta_christoffel(pert)
    return np.einsum("mn,...nmg->...g", eta_inv, dG) - np.einsum(
        "mg,...maa->...g", eta_inv, dG)


def _bracket(pert: MetricPerturbation) -> np.ndarray:
    """dg^{mu nu} + (1/2) g^{mu nu} d ln|det g| at g = eta."""
    eta_inv = np.linalg.inv(pert.lattice.eta)
    dg_up = -np.einsum("ma,nb,...ab->...mn", eta_inv, eta_inv, pert.h)
    dln = np.einsum("ab,...ab->...", eta_inv, pert.h)
    return dg_up + 0.5 * eta_inv * dln[..., None, None]


def gr_current(p1: MetricPerturbation, p2: MetricPerturbation):
    """j^gamma antisymmetrised over the pair, and the max-norm of d_gamma j^gamma."""
    lat = p1.lattice
    if p1 is p2:
        j = np.zeros(lat.shape + (lat.index_dim,))
    else:
        j = _j_one(p1, p2) - _j_one(p2, p1)
    div = sum(lat.d(j[..., g], g) for g in range(lat.index_dim))
    return j, _max(div, lat)


def _j_one(a: MetricPerturbation, b: MetricPerturbation) -> np.ndarray:
    dG = delta_christoffel(a)
    B = _bracket(b)
    return np.einsum("...nmg,...mn->...g", dG, B) - np.einsum("...mnn,...gm->...g", dG, B)


def tt_wave(lat: LatticeField, amp: float = 1.0, k: int = 1, mover: int = 1,
            phase: float = 0.0, polarization: str = "cross") -> MetricPerturbation:
    """Transverse-traceless wave moving along x^1 (cross: h_23; plus: h_22 = -h_33)."""
    X = lat.coords()
    w = amp * np.cos(k * (X[1] - mover * X[0]) + phase)
    h = np.zeros(lat.shape + (lat.index_dim,) * 2)
    if polarization == "cross":
        h[..., 2, 3] = h[..., 3, 2] = w
    else:
        h[..., 2, 2], h[..., 3, 3] = w, -w
    return MetricPerturbation(lat, h)


def gauge_perturbation(lat: LatticeField, zeta: np.ndarray) -> MetricPerturbation:
    """h_{mu nu} = d_mu zeta_nu + d_nu zeta_mu for a covector field zeta (*grid, n)."""
    n = lat.index_dim
    dz = np.stack([lat.d(zeta, m) for m in range(n)], axis=-2)  # (..., mu, nu)
    return MetricPerturbation(lat, dz + np.swapaxes(dz, -1, -2))


# ------------------------------------------------------------- scalar fields

@dataclass(frozen=True)
class ScalarFixture:
    """V = m^2 phi^2 / 2 (free) or additionally + lam phi^4 / 4 (quartic)."""

    potential: str = "free"
    mass: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if self.potential not in ("free", "quartic"):
            raise ValueError(f"unknown scalar potential {self.potential!r}")

    def V(self, phi):
        return 0.5 * self.mass ** 2 * phi ** 2 + (0.25 * self.lam * phi ** 4 if self.potential == "quartic" else 0)

    def dV(self, phi):
        return self.mass ** 2 * phi + (self.lam * phi ** 3 if self.potential == "quartic" else 0)

    def ddV(self, phi):
        return self.mass ** 2 + (3.0 * self.lam * phi ** 2 if self.potential == "quartic" else 0)


def box(lat: LatticeField, f: np.ndarray) -> np.ndarray:
    eta_inv = np.diag(np.linalg.inv(lat.eta))
    return sum(eta_inv[m] * lat.d2(f, m) for m in range(lat.grid_dim))


def scalar_fixtures(fix: ScalarFixture):
    """Evaluators for the field equation and its linearisation on a lattice."""
    def eom(lat, phi):
        return box(lat, phi) - fix.dV(phi)

    def linearized(lat, phi, dphi):
        return box(lat, dphi) - fix.ddV(phi) * dphi

    return eom, linearized


def scalar_plane_wave(lat: LatticeField, mass: float, amp: float = 1.0, k: int = 1,
                      phase: float = 0.0):
    """amp cos(k x - w t) with w^2 = k^2 + m^2 (t = x^0 non-periodic unless it closes)."""
    T, X = lat.coords()[:2]
    w = np.sqrt(k ** 2 + mass ** 2)
    return amp * np.cos(k * X - w * T + phase)


def scalar_current(lat: LatticeField, d1: np.ndarray, d2: np.ndarray):
    """J^mu = d1 d^mu d2 - d2 d^mu d1 and the max-norm of its divergence."""
    eta_inv = np.diag(np.linalg.inv(lat.eta))
    J = np.stack([eta_inv[m] * (d1 * lat.d(d2, m) - d2 * lat.d(d1, m))
                  for m in range(lat.grid_dim)], axis=-1)
    div = sum(lat.d(J[..., m], m) for m in range(lat.grid_dim))
    return J, _max(div, lat)


@dataclass(frozen=True)
class ScalarState:
    """Phase-space point for the scalar field, usable with the graded-form helpers."""

    lattice: LatticeField
    phi: np.ndarray
    fixture: ScalarFixture = ScalarFixture()

    def deformed(self, dphi: np.ndarray, t: float) -> ScalarState:
        return ScalarState(self.lattice, self.phi + t * dphi, self.fixture)

    def as_grid(self) -> ScalarState:
        return self

    def action(self) -> float:
        lat = self.lattice
        eta_inv = np.diag(np.linalg.inv(lat.eta))
        kin = sum(eta_inv[m] * lat.d(self.phi, m) ** 2 for m in range(lat.grid_dim))
        dens = -0.5 * kin - self.fixture.V(self.phi)
        return float(np.sum(dens) * np.prod(lat.h))


__all__ = [
    "LatticeField", "GaugeConfig", "MetricPerturbation", "ScalarFixture", "ScalarState",
    "su2_basis", "ym_curvature", "ym_eom_residual", "ym_delta_curvature", "ym_linearized_residual",
    "ym_potential", "ym_current", "theta_density", "chern_simons_current", "theta_term_check",
    "theta_eom_shift", "theta_potential_shift", "u1_plane_wave", "delta_christoffel",
    "christoffel_numeric", "ricci_numeric", "gr_palatini", "linearized_einstein", "gr_potential",
    "gr_current", "tt_wave", "gauge_perturbation", "scalar_fixtures", "scalar_plane_wave",
    "scalar_current", "box", "raise_pair", "levi_civita_symbol",
]
