"""Slice hyperholomorphic polynomials, their axial form and the slice Cauchy kernels."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .clifford import (
    DIM,
    NMAX,
    Multivector,
    Paravector,
    UnitImaginary,
    as_mv,
    gp,
    inverse_array,
    mul,
    mv_inverse,
)
from .contour import ContourLike, as_boundary, boundary_encloses
from .errors import OnSpectrumSphere

Side = Literal["left", "right"]
Form = Literal["I", "II"]


@dataclass(frozen=True, eq=False)
class StemPolynomial:
    """sum_k x^k a_k (left) or sum_k a_k x^k (right) with multivector coefficients."""

    coeffs: tuple[Multivector, ...]
    side: Side = "left"

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")
        object.__setattr__(self, "coeffs", tuple(as_mv(a) for a in self.coeffs) or (Multivector.scalar(0.0),))

    @classmethod
    def monomial(cls, k: int, coeff=1.0, side: Side = "left") -> StemPolynomial:
        zero = Multivector.scalar(0.0)
        return cls(tuple([zero] * k + [as_mv(coeff)]), side)

    @classmethod
    def real(cls, coeffs: Sequence[float], side: Side = "left") -> StemPolynomial:
        return cls(tuple(Multivector.scalar(float(c)) for c in coeffs), side)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def intrinsic(self) -> bool:
        """True iff every coefficient is a real scalar."""
        return all(not np.any(a.coeffs[1:]) for a in self.coeffs)

    @property
    def coeff_array(self) -> np.ndarray:
        return np.stack([a.coeffs for a in self.coeffs])

    def __call__(self, x) -> Multivector:
        return eval_stem(self, x)

    def eval_array(self, xs: np.ndarray) -> np.ndarray:
        """Evaluate at a (..., 32) array of points by Horner's rule."""
        xs = np.asarray(xs, dtype=float)
        acc = np.broadcast_to(self.coeffs[-1].coeffs, xs.shape).copy()
        for a in reversed(self.coeffs[:-1]):
            acc = (gp(xs, acc) if self.side == "left" else gp(acc, xs)) + a.coeffs
        return acc

    def star(self, other: StemPolynomial) -> StemPolynomial:
        """Slice product: coefficients convolve as sum x^(i+j) a_i b_j.

        For an intrinsic left factor this is the pointwise product.
        """
        if self.side != other.side:
            raise ValueError("cannot multiply stems of different sides")
        out = [np.zeros(DIM) for _ in range(self.degree + other.degree + 1)]
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + (mul(a, b) if self.side == "left" else mul(b, a)).coeffs
        return StemPolynomial(tuple(Multivector(c) for c in out), self.side)

    def __mul__(self, other):
        if isinstance(other, StemPolynomial):
            return self.star(other)
        return NotImplemented

    def __repr__(self):
        terms = " + ".join(f"{a!r} z^{k}" for k, a in enumerate(self.coeffs) if a.norm())
        return f"StemPolynomial[{self.side}]({terms or '0'})"


@dataclass(frozen=True)
class AxialDecomposition:
    A: Multivector
    B: Multivector

    def reconstruct(self, omega) -> Multivector:
        return self.A + mul(omega, self.B)

    def reconstruct_right(self, omega) -> Multivector:
        return self.A + mul(self.B, omega)


def eval_stem(f: StemPolynomial, x) -> Multivector:
    """f(x) = sum x^k a_k (left) or sum a_k x^k (right)."""
    xm = as_mv(x)
    acc = f.coeffs[-1]
    for a in reversed(f.coeffs[:-1]):
        acc = (mul(xm, acc) if f.side == "left" else mul(acc, xm)) + a
    return acc


def axial_parts(f: StemPolynomial, x0: float, r: float, J: UnitImaginary) -> AxialDecomposition:
    """A and B with f(x0 + J r) = A + J B (left) or A + B J (right)."""
    plus = eval_stem(f, Paravector.from_slice(x0, r, J))
    minus = eval_stem(f, Paravector.from_slice(x0, -r, J))
    A = (plus + minus) / 2.0
    diff = (plus - minus) / 2.0
    Jm = J.mv
    B = -mul(Jm, diff) if f.side == "left" else -mul(diff, Jm)
    return AxialDecomposition(A, B)


# ---------------------------------------------------------------------------
# sphere tolerance and Q_s(p)

def sphere_gap(x: Paravector, s: Paravector) -> float:
    return float(np.hypot(x.x0 - s.x0, x.vector_norm - s.vector_norm))


def on_sphere(x: Paravector, s: Paravector) -> bool:
    """Whether x lies in [s] up to 1e-9 (1 + |s|)."""
    return sphere_gap(x, s) < 1e-9 * (1.0 + s.modulus)


def _ensure_off_sphere(x: Paravector, s: Paravector) -> None:
    if on_sphere(x, s):
        raise OnSpectrumSphere(f"{x!r} lies on the sphere of {s!r}")


def q_poly(s: Paravector, p) -> Multivector:
    """Q_s(p) = p^2 - 2 s0 p + |s|^2."""
    pm = as_mv(p)
    return mul(pm, pm) - pm * (2.0 * s.x0) + s.modulus ** 2


def q_poly_inv(s: Paravector, p: Paravector) -> Multivector:
    _ensure_off_sphere(p, s)
    return mv_inverse(q_poly(s, p))


def cauchy_kernel_left(s: Paravector, x: Paravector, form: Form = "II") -> Multivector:
    _ensure_off_sphere(x, s)
    xm, sm = x.mv, s.mv
    if form == "I":
        q = mul(xm, xm) - xm * (2.0 * s.re) + s.modulus ** 2
        return -mul(mv_inverse(q), xm - s.conj().mv)
    if form == "II":
        q = mul(sm, sm) - sm * (2.0 * x.re) + x.modulus ** 2
        return mul(sm - x.conj().mv, mv_inverse(q))
    raise ValueError(f"form must be 'I' or 'II', got {form!r}")


def cauchy_kernel_right(s: Paravector, x: Paravector, form: Form = "II") -> Multivector:
    _ensure_off_sphere(x, s)
    xm, sm = x.mv, s.mv
    if form == "I":
        q = mul(xm, xm) - xm * (2.0 * s.re) + s.modulus ** 2
        return -mul(xm - s.conj().mv, mv_inverse(q))
    if form == "II":
        q = mul(sm, sm) - sm * (2.0 * x.re) + x.modulus ** 2
        return mul(mv_inverse(q), sm - x.conj().mv)
    raise ValueError(f"form must be 'I' or 'II', got {form!r}")


def _conj_array(xs: np.ndarray) -> np.ndarray:
    out = np.array(xs, dtype=float)
    out[..., 1 : NMAX + 1] *= -1.0
    return out


def pseudo_q_array(s: Paravector, xs: np.ndarray) -> np.ndarray:
    """s^2 - 2 Re(x) s + |x|^2 at a (..., 32) array of paravector points."""
    xs = np.asarray(xs, dtype=float)
    sm = s.mv.coeffs
    x0 = xs[..., 0:1]
    mod2 = np.sum(xs[..., : NMAX + 1] ** 2, axis=-1, keepdims=True)
    out = gp(sm, sm) - 2.0 * x0 * sm
    out = np.broadcast_to(out, xs.shape).copy()
    out[..., 0] += mod2[..., 0]
    return out


def kernel_left_array(s: Paravector, xs: np.ndarray) -> np.ndarray:
    """Form II left kernel (s - x_bar)(s^2 - 2 Re(x) s + |x|^2)^{-1}, batched over x."""
    return gp(s.mv.coeffs - _conj_array(xs), inverse_array(pseudo_q_array(s, xs)))


def kernel_right_array(s: Paravector, xs: np.ndarray) -> np.ndarray:
    """Form II right kernel (s^2 - 2 Re(x) s + |x|^2)^{-1}(s - x_bar), batched over x."""
    return gp(inverse_array(pseudo_q_array(s, xs)), s.mv.coeffs - _conj_array(xs))


# ---------------------------------------------------------------------------
# Cauchy formula by quadrature

def scalar_cauchy_reproduce(f: StemPolynomial, x: Paravector, contour: ContourLike) -> Multivector:
    """(1/2pi) sum of S_L^{-1}(s,x) ds_J f(s) (left) or f(s) ds_J S_R^{-1}(s,x) (right)."""
    boundary = as_boundary(contour)
    if not boundary_encloses(boundary, x.x0, x.vector_norm):
        raise ValueError("contour does not enclose the sphere of x")
    total = np.zeros(DIM)
    for c in boundary:
        fs = f.eval_array(c.node_array)
        if f.side == "left":
            ker = _kernel_at_nodes(x, c, "left")
            total += gp(gp(ker, c.weight_array), fs).sum(axis=0)
        else:
            ker = _kernel_at_nodes(x, c, "right")
            total += gp(gp(fs, c.weight_array), ker).sum(axis=0)
    return Multivector(total / (2.0 * np.pi), max(x.n, max(a.n for a in f.coeffs)))


def _kernel_at_nodes(x: Paravector, c, side: Side) -> np.ndarray:
    """Kernel S^{-1}(s_k, x) for every node s_k, Form II in the node variable."""
    nodes = c.node_array
    for k, sk in enumerate(nodes):
        if np.hypot(sk[0] - x.x0, np.linalg.norm(sk[1 : NMAX + 1]) - x.vector_norm) < 1e-9 * (
            1.0 + np.linalg.norm(sk[: NMAX + 1])
        ):
            raise OnSpectrumSphere(f"node {k} lies on the sphere of {x!r}")
    xbar = x.conj().mv.coeffs
    q = gp(nodes, nodes) - 2.0 * x.x0 * nodes
    q[:, 0] += x.modulus ** 2
    qinv = inverse_array(q)
    if side == "left":
        return gp(nodes - xbar, qinv)
    return gp(qinv, nodes - xbar)
