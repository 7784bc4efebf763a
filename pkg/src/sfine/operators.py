"""Finite-rank Clifford operators and paravector operators with commuting components.

A right-linear operator on the free module R_n^d is a d x d matrix whose
entries are multivectors acting from the left; composition is the matrix
product over the (noncommutative) scalar ring.  Paravector operators are
built from a shared real eigenbasis so that their components commute and the
S-spectrum is known exactly.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .clifford import (
    DIM,
    NMAX,
    RCOND_MIN,
    Multivector,
    Paravector,
    as_mv,
    blades_of,
    gp,
    inverse_array,
    left_matrix,
    rcond_1norm,
)
from .errors import (
    InvalidConstruction,
    RankMismatch,
    SingularBasis,
    SingularMultivector,
    SingularOperator,
)

D_MAX = 16
COMMUTE_TOL = 1e-12


class CliffordOperator:
    """d x d matrix of multivectors; immutable."""

    __slots__ = ("_c", "n")

    def __init__(self, coeffs: np.ndarray, n: int = NMAX):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 3 or c.shape[0] != c.shape[1] or c.shape[2] != DIM:
            raise ValueError(f"expected shape (d, d, {DIM}), got {c.shape}")
        if np.any(c[..., ~blades_of(n)] != 0.0):
            raise ValueError(f"entries outside R_{n}")
        c.setflags(write=False)
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "n", n)

    def __setattr__(self, name, value):
        raise AttributeError("CliffordOperator is immutable")

    # constructors -----------------------------------------------------------
    @classmethod
    def zeros(cls, d: int, n: int = NMAX) -> CliffordOperator:
        return cls(np.zeros((d, d, DIM)), n)

    @classmethod
    def identity(cls, d: int, n: int = NMAX) -> CliffordOperator:
        c = np.zeros((d, d, DIM))
        c[np.arange(d), np.arange(d), 0] = 1.0
        return cls(c, n)

    @classmethod
    def from_real(cls, m: np.ndarray, n: int = NMAX) -> CliffordOperator:
        m = np.asarray(m, dtype=float)
        c = np.zeros(m.shape + (DIM,))
        c[..., 0] = m
        return cls(c, n)

    @classmethod
    def scalar(cls, a, d: int, n: int | None = None) -> CliffordOperator:
        """a * I for a multivector a."""
        a = as_mv(a)
        c = np.zeros((d, d, DIM))
        c[np.arange(d), np.arange(d)] = a.coeffs
        return cls(c, a.n if n is None else max(n, a.n))

    @classmethod
    def from_components(cls, comps: np.ndarray, n: int = NMAX) -> CliffordOperator:
        """T0 + e1 T1 + ... from a (6, d, d) stack of real matrices."""
        comps = np.asarray(comps, dtype=float)
        c = np.zeros(comps.shape[1:] + (DIM,))
        c[..., : NMAX + 1] = np.moveaxis(comps, 0, -1)
        return cls(c, n)

    # basic structure --------------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def d(self) -> int:
        return self._c.shape[0]

    def entry(self, i: int, j: int) -> Multivector:
        return Multivector(self._c[i, j], self.n)

    def is_diagonal(self) -> bool:
        off = self._c.copy()
        off[np.arange(self.d), np.arange(self.d)] = 0.0
        return not off.any()

    def norm(self) -> float:
        """Frobenius norm over all 32 d^2 real coefficients."""
        return float(np.linalg.norm(self._c))

    def lift(self) -> np.ndarray:
        """32d x 32d real matrix: block (i, j) is the left-regular matrix of entry (i, j)."""
        d = self.d
        blocks = left_matrix(self._c)  # (d, d, 32, 32)
        return blocks.transpose(0, 2, 1, 3).reshape(DIM * d, DIM * d)

    @classmethod
    def unlift(cls, m: np.ndarray, n: int = NMAX) -> CliffordOperator:
        """Read an operator back from the blade-1 column of each block."""
        d = m.shape[0] // DIM
        cols = m.reshape(d, DIM, d, DIM)[:, :, :, 0]  # (i, k, j)
        return cls(cols.transpose(0, 2, 1), n)

    # arithmetic -------------------------------------------------------------
    def _check(self, other: CliffordOperator) -> None:
        if self.d != other.d:
            raise RankMismatch(f"rank {self.d} vs {other.d}")

    def __add__(self, other):
        if not isinstance(other, CliffordOperator):
            return NotImplemented
        self._check(other)
        return CliffordOperator(self._c + other._c, max(self.n, other.n))

    def __sub__(self, other):
        if not isinstance(other, CliffordOperator):
            return NotImplemented
        self._check(other)
        return CliffordOperator(self._c - other._c, max(self.n, other.n))

    def __neg__(self):
        return CliffordOperator(-self._c, self.n)

    def __mul__(self, other):
        """Real scalars scale; multivectors / paravectors act from the right."""
        if isinstance(other, (int, float, np.floating, np.integer)):
            return CliffordOperator(self._c * float(other), self.n)
        if isinstance(other, CliffordOperator):
            return op_mul(self, other)
        return self.rscale(other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return CliffordOperator(self._c * float(other), self.n)
        return self.lscale(other)

    def __matmul__(self, other):
        return op_mul(self, other)

    def __truediv__(self, x: float):
        return CliffordOperator(self._c / float(x), self.n)

    def lscale(self, a) -> CliffordOperator:
        """a A: every entry multiplied by a on the left."""
        a = as_mv(a)
        return CliffordOperator(gp(a.coeffs, self._c), max(self.n, a.n))

    def rscale(self, a) -> CliffordOperator:
        """A a: every entry multiplied by a on the right."""
        a = as_mv(a)
        return CliffordOperator(gp(self._c, a.coeffs), max(self.n, a.n))

    def inverse(self) -> CliffordOperator:
        return op_inverse(self)

    def commutator_norm(self, other: CliffordOperator) -> float:
        return (op_mul(self, other) - op_mul(other, self)).norm()

    def __repr__(self):
        return f"CliffordOperator(d={self.d}, n={self.n}, norm={self.norm():.4g})"


def op_mul(a: CliffordOperator, b: CliffordOperator) -> CliffordOperator:
    a._check(b)
    d = a.d
    cols = b.coeffs.transpose(0, 2, 1).reshape(DIM * d, d)  # rows (j, blade), cols k
    out = (a.lift() @ cols).reshape(d, DIM, d).transpose(0, 2, 1)
    return CliffordOperator(out, max(a.n, b.n))


def op_add(a: CliffordOperator, b: CliffordOperator) -> CliffordOperator:
    return a + b


def op_scale(a: CliffordOperator, m, side: str = "left") -> CliffordOperator:
    if side == "left":
        return a.lscale(m)
    if side == "right":
        return a.rscale(m)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def op_inverse(a: CliffordOperator, rcond_min: float = RCOND_MIN) -> CliffordOperator:
    """Two-sided inverse; diagonal operators are inverted entrywise."""
    if a.is_diagonal():
        diag = a.coeffs[np.arange(a.d), np.arange(a.d)]
        try:
            inv = inverse_array(diag, rcond_min)
        except SingularMultivector as exc:
            raise SingularOperator(f"diagonal entry not invertible: {exc}") from exc
        c = np.zeros_like(a.coeffs)
        c[np.arange(a.d), np.arange(a.d)] = inv
        return CliffordOperator(c, a.n)
    return op_inverse_lifted(a, rcond_min)


def op_inverse_lifted(a: CliffordOperator, rcond_min: float = RCOND_MIN) -> CliffordOperator:
    """Inverse through the 32d x 32d real lift (no fast path)."""
    m = a.lift()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    anorm = np.abs(m).sum(axis=0).max()
    rc = 0.0 if anorm == 0 else float(scipy.linalg.lapack.dgecon(lu, anorm, norm="1")[0])
    if rc < rcond_min:
        raise SingularOperator(f"operator is singular (rcond={rc:.3e})", rcond=rc)
    d = a.d
    rhs = np.zeros((DIM * d, d))
    rhs[np.arange(d) * DIM, np.arange(d)] = 1.0
    cols = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    out = cols.reshape(d, DIM, d).transpose(0, 2, 1)
    return CliffordOperator(out, a.n)


# ---------------------------------------------------------------------------
# paravector operators

@dataclass(frozen=True)
class SpectralSphere:
    center: float
    radius: float
    multiplicity: int = 1

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("sphere radius must be non-negative")

    def distance(self, s: Paravector) -> float:
        """Distance from s to the sphere, measured in the (Re, |Im|) half-plane."""
        return float(np.hypot(s.x0 - self.center, s.vector_norm - self.radius))


@dataclass(frozen=True, eq=False)
class ParavectorOperator:
    """T = T0 + e1 T1 + ... + e5 T5 with commuting real components.

    ``eigs`` holds one row (t0, t1, ..., t5) per basis vector of ``basis``;
    component k equals ``basis @ diag(eigs[:, k]) @ inv(basis)``.
    """

    components: np.ndarray  # (6, d, d)
    basis: np.ndarray  # (d, d)
    eigs: np.ndarray  # (d, 6)
    n: int = NMAX

    @property
    def d(self) -> int:
        return self.components.shape[1]

    @property
    def op(self) -> CliffordOperator:
        return CliffordOperator.from_components(self.components, self.n)

    @property
    def vector_part(self) -> CliffordOperator:
        comps = self.components.copy()
        comps[0] = 0.0
        return CliffordOperator.from_components(comps, self.n)

    @property
    def scalar_part(self) -> np.ndarray:
        return self.components[0]

    def conj(self) -> ParavectorOperator:
        return conj_operator(self)

    def similar(self, basis: np.ndarray) -> ParavectorOperator:
        """Same joint eigenvalues in another eigenbasis."""
        return make_commuting_operator(self.eigs, basis, self.n)

    def spectral_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.eigs, axis=1)))


def make_commuting_operator(
    eigs: Sequence[Sequence[float]],
    V: np.ndarray | None = None,
    n: int = NMAX,
    allow_t0: bool = True,
) -> ParavectorOperator:
    """Build T with prescribed joint eigenvalues (t0, t1..t5) in the basis V.

    T0 may be nonzero only if one of T1..Tn is the zero operator.
    """
    e = np.zeros((len(eigs), NMAX + 1))
    for k, row in enumerate(eigs):
        row = np.asarray(row, dtype=float).ravel()
        if row.size > NMAX + 1:
            raise InvalidConstruction("eigenvalue rows have at most 6 entries")
        e[k, : row.size] = row
    d = e.shape[0]
    if not 1 <= d <= D_MAX:
        raise InvalidConstruction(f"module rank must be in 1..{D_MAX}, got {d}")
    if not np.all(np.isfinite(e)):
        raise InvalidConstruction("eigenvalues must be finite reals")
    if np.any(e[:, n + 1 :] != 0.0):
        raise InvalidConstruction(f"components beyond e{n} must vanish in R_{n}")
    if np.any(e[:, 0] != 0.0):
        zero_component = np.any(np.all(e[:, 1 : n + 1] == 0.0, axis=0))
        if not allow_t0 or not zero_component:
            raise InvalidConstruction("T0 != 0 requires one of T1..Tn to be the zero operator")
    if V is None:
        V = np.eye(d)
    V = np.asarray(V, dtype=float)
    if V.shape != (d, d):
        raise InvalidConstruction(f"basis must be {d}x{d}")
    rc = rcond_1norm(V)
    if rc < RCOND_MIN:
        raise SingularBasis(f"eigenbasis is singular (rcond={rc:.3e})")
    Vinv = np.linalg.inv(V)
    comps = np.stack([V @ np.diag(e[:, k]) @ Vinv for k in range(NMAX + 1)])
    T = ParavectorOperator(comps, V, e, n)
    worst = max(
        np.linalg.norm(comps[i] @ comps[j] - comps[j] @ comps[i])
        for i in range(NMAX + 1)
        for j in range(i + 1, NMAX + 1)
    )
    scale = max(1.0, float(np.max(np.abs(comps))) ** 2)
    if worst > COMMUTE_TOL * scale * max(1.0, np.linalg.cond(V)):
        raise InvalidConstruction(f"components fail to commute ({worst:.2e})")
    return T


def conj_operator(T: ParavectorOperator) -> ParavectorOperator:
    """T0 - e1 T1 - ... - e5 T5."""
    comps = T.components.copy()
    comps[1:] *= -1.0
    e = T.eigs.copy()
    e[:, 1:] *= -1.0
    return ParavectorOperator(comps, T.basis, e, T.n)


def s_spectrum(T: ParavectorOperator, tol: float = 1e-12) -> list[SpectralSphere]:
    """Spheres (center t0, radius |t_vec|) of the joint eigenvalues, with multiplicity."""
    spheres: list[list[float]] = []
    for row in T.eigs:
        c, r = float(row[0]), float(np.linalg.norm(row[1:]))
        for sp in spheres:
            if abs(sp[0] - c) <= tol * max(1.0, abs(c)) and abs(sp[1] - r) <= tol * max(1.0, r):
                sp[2] += 1
                break
        else:
            spheres.append([c, r, 1])
    spheres.sort(key=lambda sp: (sp[0], sp[1]))
    return [SpectralSphere(c, r, int(m)) for c, r, m in spheres]


def spectrum_distance(s: Paravector, spheres: Sequence[SpectralSphere]) -> float:
    return min(sp.distance(s) for sp in spheres)


def random_basis(rng: np.random.Generator, d: int, max_cond: float = 50.0) -> np.ndarray:
    """Random real basis with bounded condition number."""
    while True:
        V = np.eye(d) + 0.5 * rng.standard_normal((d, d))
        if np.linalg.cond(V) < max_cond:
            return V


def pseudo_q(s: Paravector, T: ParavectorOperator) -> CliffordOperator:
    """s^2 I - s (T + T_bar) + T T_bar, built verbatim from Clifford operator products."""
    Top, Tb = T.op, conj_operator(T).op
    d = T.d
    s_mv = s.mv
    return CliffordOperator.scalar(s_mv * s_mv, d, T.n) - (Top + Tb).lscale(s_mv) + op_mul(Top, Tb)


def s_q(s: Paravector, T: ParavectorOperator) -> CliffordOperator:
    """T^2 - 2 Re(s) T + |s|^2, the operator whose invertibility defines sigma_S."""
    Top = T.op
    return op_mul(Top, Top) - Top * (2.0 * s.re) + CliffordOperator.identity(T.d, T.n) * (s.modulus ** 2)


def is_invertible(a: CliffordOperator, rcond_min: float = 1e-10) -> bool:
    m = a.lift()
    return rcond_1norm(m) >= rcond_min
