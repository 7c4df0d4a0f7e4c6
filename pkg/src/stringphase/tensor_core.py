"""Dense small-tensor algebra over index spaces of dimension at most 4.

Tensors carry one variance flag per slot, ``"u"`` (contravariant) or
``"d"`` (covariant), in the order the indices are printed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .config import TOL

MAX_DIM = 4
MAX_RANK = 4


class TensorError(ValueError):
    pass


class ContractVarianceError(TensorError):
    pass


class DimensionMismatchError(TensorError):
    pass


class DegenerateMetricError(TensorError):
    pass


@dataclass(frozen=True)
class TensorValue:
    components: np.ndarray
    variance: tuple[str, ...]
    dim: int = field(default=0)

    def __post_init__(self):
        comps = np.array(self.components, dtype=float)
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)
        variance = tuple(self.variance)
        object.__setattr__(self, "variance", variance)
        dim = self.dim or (comps.shape[0] if comps.ndim else 1)
        object.__setattr__(self, "dim", dim)
        if any(v not in ("u", "d") for v in variance):
            raise TensorError(f"variance flags must be 'u' or 'd', got {variance}")
        if len(variance) != comps.ndim:
            raise TensorError(
                f"variance length {len(variance)} != rank {comps.ndim}")
        if comps.shape != (dim,) * comps.ndim:
            raise TensorError(f"shape {comps.shape} is not dim^rank for dim={dim}")
        if comps.ndim > MAX_RANK or dim > MAX_DIM:
            raise TensorError("rank and dim are capped at 4")

    @property
    def rank(self) -> int:
        return len(self.variance)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype)

    def __add__(self, other: TensorValue) -> TensorValue:
        _check_same_type(self, other)
        return TensorValue(self.components + other.components, self.variance, self.dim)

    def __sub__(self, other: TensorValue) -> TensorValue:
        _check_same_type(self, other)
        return TensorValue(self.components - other.components, self.variance, self.dim)

    def __mul__(self, scalar: float) -> TensorValue:
        return TensorValue(self.components * scalar, self.variance, self.dim)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0


def _check_same_type(a: TensorValue, b: TensorValue):
    if a.variance != b.variance or a.dim != b.dim:
        raise DimensionMismatchError(
            f"incompatible tensors {a.variance}/{a.dim} and {b.variance}/{b.dim}")


@dataclass(frozen=True)
class MetricValue:
    g: TensorValue
    g_inv: TensorValue
    signature: tuple[int, ...]

    @classmethod
    def from_matrix(cls, matrix) -> MetricValue:
        mat = np.asarray(matrix, dtype=float)
        mat = 0.5 * (mat + mat.T)
        det = np.linalg.det(mat)
        if abs(det) < TOL.degenerate:
            raise DegenerateMetricError(f"|det g| = {abs(det):.3e}")
        inv = np.linalg.inv(mat)
        inv = 0.5 * (inv + inv.T)
        eig = np.linalg.eigvalsh(mat)
        signature = tuple(int(s) for s in np.sign(eig))
        dim = mat.shape[0]
        return cls(TensorValue(mat, ("d", "d"), dim), TensorValue(inv, ("u", "u"), dim),
                   signature)

    @property
    def dim(self) -> int:
        return self.g.dim

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.g.components))


@dataclass(frozen=True)
class AlternatingTensor:
    eps: TensorValue

    @property
    def dim(self) -> int:
        return self.eps.dim


def tensor_product(a: TensorValue, b: TensorValue) -> TensorValue:
    if a.dim != b.dim:
        raise DimensionMismatchError("tensor product of different dims")
    return TensorValue(np.multiply.outer(a.components, b.components),
                       a.variance + b.variance, a.dim)


def contract(t: TensorValue, slot_a: int, slot_b: int) -> TensorValue:
    """Sum over a pair of slots with opposite variance."""
    if slot_a == slot_b or not (0 <= slot_a < t.rank and 0 <= slot_b < t.rank):
        raise TensorError(f"invalid contraction slots ({slot_a}, {slot_b}) for rank {t.rank}")
    if t.variance[slot_a] == t.variance[slot_b]:
        raise ContractVarianceError(
            f"slots {slot_a} and {slot_b} are both '{t.variance[slot_a]}'")
    comps = np.trace(t.components, axis1=slot_a, axis2=slot_b)
    variance = tuple(v for i, v in enumerate(t.variance) if i not in (slot_a, slot_b))
    return TensorValue(comps, variance, t.dim)


def contract_pair(a: TensorValue, slot_a: int, b: TensorValue, slot_b: int) -> TensorValue:
    """Contract slot ``slot_a`` of ``a`` against slot ``slot_b`` of ``b``."""
    return contract(tensor_product(a, b), slot_a, a.rank + slot_b)


def raise_lower(t: TensorValue, m: MetricValue, slot: int) -> TensorValue:
    """Flip the variance of one slot with ``g`` or its inverse."""
    if t.dim != m.dim:
        raise DimensionMismatchError(f"tensor dim {t.dim} != metric dim {m.dim}")
    if not 0 <= slot < t.rank:
        raise TensorError(f"slot {slot} out of range for rank {t.rank}")
    mat = m.g.components if t.variance[slot] == "u" else m.g_inv.components
    moved = np.moveaxis(t.components, slot, -1) @ mat
    comps = np.moveaxis(moved, -1, slot)
    variance = list(t.variance)
    variance[slot] = "d" if t.variance[slot] == "u" else "u"
    return TensorValue(comps, tuple(variance), t.dim)


def permutation_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def levi_civita_symbol(dim: int) -> np.ndarray:
    eps = np.zeros((dim,) * dim)
    for perm in itertools.permutations(range(dim)):
        eps[perm] = permutation_sign(perm)
    return eps


def levi_civita(m: MetricValue) -> AlternatingTensor:
    """Covariant volume tensor, eps_{01..} = sqrt|det g|."""
    det = m.det
    if abs(det) < TOL.degenerate:
        raise DegenerateMetricError(f"|det g| = {abs(det):.3e}")
    comps = np.sqrt(abs(det)) * levi_civita_symbol(m.dim)
    return AlternatingTensor(TensorValue(comps, ("d",) * m.dim, m.dim))


def antisymmetrize(t: TensorValue, slot_a: int, slot_b: int) -> TensorValue:
    comps = 0.5 * (t.components - np.swapaxes(t.components, slot_a, slot_b))
    return TensorValue(comps, t.variance, t.dim)


def symmetrize(t: TensorValue, slot_a: int, slot_b: int) -> TensorValue:
    comps = 0.5 * (t.components + np.swapaxes(t.components, slot_a, slot_b))
    return TensorValue(comps, t.variance, t.dim)


def identity(dim: int) -> TensorValue:
    return TensorValue(np.eye(dim), ("u", "d"), dim)
