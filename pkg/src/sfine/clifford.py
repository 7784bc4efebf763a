"""Dense arithmetic in the real Clifford algebra R_n, n <= 5.

Every element is stored as 32 float64 blade coefficients in graded
lexicographic order (1, e1, ..., e5, e12, e13, ..., e12345).  Algebras with
n < 5 live inside R_5 as the span of blades built from e1..en; the ``n``
attribute records which units a value may touch.

Two layers are exposed:

* array kernels (``gp``, ``left_matrix``, ``inverse_array``) that act on
  ``(..., 32)`` arrays and broadcast, used by the operator and stencil code;
* small immutable value types (:class:`Multivector`, :class:`Paravector`,
  :class:`UnitImaginary`) for readable scalar-level code and tests.
"""
from __future__ import annotations

import warnings
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import SingularMultivector, ZeroParavector

NMAX = 5
DIM = 2 ** NMAX

BLADES: tuple[tuple[int, ...], ...] = tuple(
    blade for grade in range(NMAX + 1) for blade in combinations(range(1, NMAX + 1), grade)
)
BLADE_INDEX: dict[tuple[int, ...], int] = {b: i for i, b in enumerate(BLADES)}
GRADES = np.array([len(b) for b in BLADES])

# reciprocal condition threshold for algebra / operator inversion
RCOND_MIN = 1e-12


def _blade_product(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign and blade of e_a e_b using e_i e_j = -e_j e_i and e_i^2 = -1."""
    word = list(a) + list(b)
    sign = 1
    # bubble sort, one sign flip per transposition of distinct units
    for i in range(len(word)):
        for j in range(len(word) - 1 - i):
            if word[j] > word[j + 1]:
                word[j], word[j + 1] = word[j + 1], word[j]
                sign = -sign
    out: list[int] = []
    for u in word:
        if out and out[-1] == u:
            out.pop()
            sign = -sign
        else:
            out.append(u)
    return sign, tuple(out)


def _build_tables():
    index = np.zeros((DIM, DIM), dtype=np.intp)
    sign = np.zeros((DIM, DIM))
    for i, a in enumerate(BLADES):
        for j, b in enumerate(BLADES):
            s, c = _blade_product(a, b)
            index[i, j] = BLADE_INDEX[c]
            sign[i, j] = s
    tensor = np.zeros((DIM, DIM, DIM))
    ii, jj = np.meshgrid(np.arange(DIM), np.arange(DIM), indexing="ij")
    tensor[ii, jj, index] = sign
    for t in (index, sign, tensor):
        t.setflags(write=False)
    return index, sign, tensor


MUL_INDEX, MUL_SIGN, MUL_TENSOR = _build_tables()
# MUL_TENSOR[i, j, k]: coefficient of blade k in e_i e_j


def blades_of(n: int) -> np.ndarray:
    """Boolean mask of the blades that exist in R_n."""
    return np.array([all(u <= n for u in b) for b in BLADES])


# ---------------------------------------------------------------------------
# array kernels

def gp(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Geometric product of coefficient arrays, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    out = np.zeros(shape + (DIM,))
    for i in range(DIM):
        ai = a[..., i : i + 1]
        if not ai.any():
            continue
        # for fixed i, j -> MUL_INDEX[i, j] is a permutation
        out[..., MUL_INDEX[i]] += ai * MUL_SIGN[i] * b
    return out


def left_matrix(a: np.ndarray) -> np.ndarray:
    """Matrix of x -> a x in the blade basis; shape (..., 32, 32)."""
    return np.einsum("...i,ijk->...kj", np.asarray(a, dtype=float), MUL_TENSOR)


def right_matrix(a: np.ndarray) -> np.ndarray:
    """Matrix of x -> x a in the blade basis; shape (..., 32, 32)."""
    return np.einsum("...j,ijk->...ki", np.asarray(a, dtype=float), MUL_TENSOR)


def unit_array(shape: tuple[int, ...] = ()) -> np.ndarray:
    out = np.zeros(shape + (DIM,))
    out[..., 0] = 1.0
    return out


def rcond_1norm(m: np.ndarray) -> float:
    """LAPACK reciprocal 1-norm condition estimate of a square real matrix."""
    with warnings.catch_warnings():
        # singular input is expected here; the rcond value reports it
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    anorm = np.abs(m).sum(axis=0).max()
    if anorm == 0.0:
        return 0.0
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    return float(rcond)


def inverse_array(a: np.ndarray, rcond_min: float = RCOND_MIN) -> np.ndarray:
    """Batched algebra inverse through the left-regular representation."""
    a = np.asarray(a, dtype=float)
    rho = left_matrix(a)
    flat = rho.reshape((-1, DIM, DIM))
    # cheap batched screen; the exact LAPACK estimate runs only on suspects
    with np.errstate(all="ignore"):
        conds = np.linalg.cond(flat, 1)
    bad = ~np.isfinite(conds) | (1.0 / conds < 10 * rcond_min)
    for k in np.flatnonzero(bad):
        rc = rcond_1norm(flat[k])
        if rc < rcond_min:
            raise SingularMultivector(f"multivector is singular (rcond={rc:.3e})")
    rhs = np.zeros(flat.shape[:1] + (DIM, 1))
    rhs[:, 0, 0] = 1.0
    sol = np.linalg.solve(flat, rhs)[..., 0]
    return sol.reshape(a.shape)


# ---------------------------------------------------------------------------
# value types

class Multivector:
    """Immutable element of R_n with n <= 5."""

    __slots__ = ("_c", "n")

    def __init__(self, coeffs: Iterable[float] | np.ndarray, n: int = NMAX):
        c = np.array(coeffs, dtype=float).reshape(DIM)
        if not 1 <= n <= NMAX:
            raise ValueError(f"algebra dimension must be in 1..{NMAX}, got {n}")
        if np.any(c[~blades_of(n)] != 0.0):
            raise ValueError(f"coefficients outside R_{n}")
        c.setflags(write=False)
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "n", n)

    def __setattr__(self, name, value):
        raise AttributeError("Multivector is immutable")

    @classmethod
    def scalar(cls, x: float, n: int = NMAX) -> Multivector:
        c = np.zeros(DIM)
        c[0] = x
        return cls(c, n)

    @classmethod
    def blade(cls, *units: int, n: int = NMAX, coeff: float = 1.0) -> Multivector:
        """Product e_{u1} e_{u2} ... of the given units (any order, repeats allowed)."""
        sign, b = _blade_product((), tuple(units))
        c = np.zeros(DIM)
        c[BLADE_INDEX[b]] = sign * coeff
        return cls(c, n)

    @classmethod
    def from_dict(cls, terms: dict[tuple[int, ...], float], n: int = NMAX) -> Multivector:
        c = np.zeros(DIM)
        for b, v in terms.items():
            c[BLADE_INDEX[tuple(b)]] += v
        return cls(c, n)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    def __getitem__(self, blade: tuple[int, ...] | int) -> float:
        if isinstance(blade, tuple):
            return float(self._c[BLADE_INDEX[blade]])
        return float(self._c[blade])

    def _coerce(self, other) -> Multivector | None:
        if isinstance(other, Multivector):
            return other
        if isinstance(other, (Paravector, UnitImaginary)):
            return other.mv
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Multivector.scalar(float(other), self.n)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Multivector(self._c + o._c, max(self.n, o.n))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Multivector(self._c - o._c, max(self.n, o.n))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Multivector(-self._c, self.n)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Multivector(self._c * float(other), self.n)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return mul(self, o)

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Multivector(self._c * float(other), self.n)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return mul(o, self)

    def __truediv__(self, x: float):
        return Multivector(self._c / float(x), self.n)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return bool(np.array_equal(self._c, o._c))

    def __hash__(self):
        return hash(self._c.tobytes())

    def norm(self) -> float:
        """Euclidean norm of the coefficient vector."""
        return float(np.linalg.norm(self._c))

    def inverse(self) -> Multivector:
        return mv_inverse(self)

    def is_close(self, other, atol: float = 1e-12) -> bool:
        o = self._coerce(other)
        return bool(np.max(np.abs(self._c - o._c)) <= atol)

    def __repr__(self):
        terms = []
        for b, v in zip(BLADES, self._c):
            if v != 0.0:
                name = "e" + "".join(map(str, b)) if b else ""
                terms.append(f"{v:+.6g}{name}")
        return f"Multivector({' '.join(terms) or '0'})"


class Paravector:
    """x0 + x1 e1 + ... + x5 e5, identified with a point of R^6."""

    __slots__ = ("x0", "xv", "n")

    def __init__(self, x0: float, xv: Sequence[float] = (0.0,) * NMAX, n: int = NMAX):
        v = np.zeros(NMAX)
        xv = np.asarray(xv, dtype=float).ravel()
        if xv.size > NMAX:
            raise ValueError("at most 5 vector components")
        v[: xv.size] = xv
        if np.any(v[n:] != 0.0):
            raise ValueError(f"vector part outside R_{n}")
        v.setflags(write=False)
        object.__setattr__(self, "x0", float(x0))
        object.__setattr__(self, "xv", v)
        object.__setattr__(self, "n", n)

    def __setattr__(self, name, value):
        raise AttributeError("Paravector is immutable")

    @classmethod
    def from_point(cls, point: Sequence[float], n: int = NMAX) -> Paravector:
        point = np.asarray(point, dtype=float)
        return cls(point[0], point[1:], n)

    @classmethod
    def from_slice(cls, u: float, v: float, J: UnitImaginary) -> Paravector:
        """u + J v."""
        return cls(u, v * J.direction, J.n)

    @property
    def mv(self) -> Multivector:
        c = np.zeros(DIM)
        c[0] = self.x0
        c[1 : NMAX + 1] = self.xv
        return Multivector(c, self.n)

    @property
    def point(self) -> np.ndarray:
        return np.concatenate([[self.x0], self.xv])

    @property
    def re(self) -> float:
        return self.x0

    @property
    def vector_norm(self) -> float:
        return float(np.linalg.norm(self.xv))

    @property
    def modulus(self) -> float:
        return float(np.hypot(self.x0, np.linalg.norm(self.xv)))

    def conj(self) -> Paravector:
        return conj(self)

    def inverse(self) -> Paravector:
        return pv_inverse(self)

    def __neg__(self):
        return Paravector(-self.x0, -self.xv, self.n)

    def __add__(self, other):
        if isinstance(other, Paravector):
            return Paravector(self.x0 + other.x0, self.xv + other.xv, max(self.n, other.n))
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Paravector(self.x0 + other, self.xv, self.n)
        return self.mv + other

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Paravector):
            return Paravector(self.x0 - other.x0, self.xv - other.xv, max(self.n, other.n))
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Paravector(self.x0 - other, self.xv, self.n)
        return self.mv - other

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Paravector(self.x0 * other, self.xv * other, self.n)
        return self.mv * other

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Paravector(self.x0 * other, self.xv * other, self.n)
        return other * self.mv

    def __eq__(self, other):
        if not isinstance(other, Paravector):
            return NotImplemented
        return self.x0 == other.x0 and bool(np.array_equal(self.xv, other.xv))

    def __hash__(self):
        return hash((self.x0, self.xv.tobytes()))

    def __repr__(self):
        return f"Paravector({self.x0:.6g}, [{', '.join(f'{v:.6g}' for v in self.xv[: self.n])}])"


class UnitImaginary:
    """Unit 1-vector J = sum_j d_j e_j, so that J^2 = -1."""

    __slots__ = ("direction", "n")

    def __init__(self, direction: Sequence[float], n: int = NMAX):
        d = np.zeros(NMAX)
        direction = np.asarray(direction, dtype=float).ravel()
        d[: direction.size] = direction
        if np.any(d[n:] != 0.0):
            raise ValueError(f"direction outside R_{n}")
        norm = np.linalg.norm(d)
        if norm == 0.0:
            raise ValueError("zero direction")
        d = d / norm
        d.setflags(write=False)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "n", n)

    def __setattr__(self, name, value):
        raise AttributeError("UnitImaginary is immutable")

    @classmethod
    def axis(cls, k: int, n: int = NMAX) -> UnitImaginary:
        d = np.zeros(NMAX)
        d[k - 1] = 1.0
        return cls(d, n)

    @classmethod
    def random(cls, rng: np.random.Generator, n: int = NMAX) -> UnitImaginary:
        d = np.zeros(NMAX)
        d[:n] = rng.standard_normal(n)
        return cls(d, n)

    @property
    def mv(self) -> Multivector:
        c = np.zeros(DIM)
        c[1 : NMAX + 1] = self.direction
        return Multivector(c, self.n)

    def __repr__(self):
        return f"UnitImaginary([{', '.join(f'{v:.6g}' for v in self.direction[: self.n])}])"


def as_mv(x) -> Multivector:
    if isinstance(x, Multivector):
        return x
    if isinstance(x, (Paravector, UnitImaginary)):
        return x.mv
    return Multivector.scalar(float(x))


def mul(a, b) -> Multivector:
    a, b = as_mv(a), as_mv(b)
    return Multivector(gp(a.coeffs, b.coeffs), max(a.n, b.n))


def conj(x: Paravector) -> Paravector:
    """Paravector conjugate x0 - x_vec."""
    return Paravector(x.x0, -x.xv, x.n)


def pv_inverse(x: Paravector) -> Paravector:
    m2 = x.x0 ** 2 + float(x.xv @ x.xv)
    if m2 == 0.0:
        raise ZeroParavector("paravector has zero modulus")
    return Paravector(x.x0 / m2, -x.xv / m2, x.n)


def regular_rep(a) -> np.ndarray:
    """32x32 real matrix of left multiplication by ``a``."""
    return left_matrix(as_mv(a).coeffs)


def mv_inverse(a) -> Multivector:
    """Two-sided inverse through the left-regular representation.

    Raises :class:`SingularMultivector` when the LAPACK reciprocal condition
    estimate of the regular matrix falls below ``RCOND_MIN``.
    """
    a = as_mv(a)
    rho = left_matrix(a.coeffs)
    rc = rcond_1norm(rho)
    if rc < RCOND_MIN:
        raise SingularMultivector(f"multivector is singular (rcond={rc:.3e})")
    rhs = np.zeros(DIM)
    rhs[0] = 1.0
    return Multivector(scipy.linalg.solve(rho, rhs), a.n)


def random_multivector(rng: np.random.Generator, n: int = NMAX, scale: float = 1.0) -> Multivector:
    c = np.zeros(DIM)
    mask = blades_of(n)
    c[mask] = scale * rng.standard_normal(mask.sum())
    return Multivector(c, n)


def random_paravector(rng: np.random.Generator, n: int = NMAX, scale: float = 1.0) -> Paravector:
    return Paravector(scale * rng.standard_normal(), scale * rng.standard_normal(n), n)
