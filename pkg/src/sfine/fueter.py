"""Finite-difference Dirac and Laplace operators on R^6 for kernel and Fueter-Sce checks.

Stencils are stored as sparse maps from integer offsets to multivector
coefficients and composed symbolically, so a chain such as D Delta^2 is
evaluated only on the cross-shaped neighbourhood of each probe point instead
of on a full six-dimensional grid.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .clifford import DIM, NMAX, Paravector, gp, inverse_array, left_matrix, right_matrix
from .errors import AxisTooClose, GridTooSmall, OnSpectrumSphere
from .slice import StemPolynomial, kernel_left_array, kernel_right_array, pseudo_q_array

AXES = NMAX + 1
EPS = np.finfo(float).eps
H_SEQUENCE = (0.02, 0.01, 0.005)
CHAIN_H_SEQUENCE = (2.0**-5, 2.0**-6, 2.0**-7)
BOX_CENTER = (2.0, 1.0, 0.0, 0.0, 0.0, 0.0)
BOX_HALF_WIDTH = 0.5
N_PROBES = 100

Sampler = Callable[[np.ndarray], np.ndarray]  # (..., 32) paravector points -> (..., 32) values


# ---------------------------------------------------------------------------
# stencils

@dataclass(frozen=True)
class Stencil:
    """sum_o c_o g(x + h o) / h^order with multivector c_o acting from the left."""

    terms: dict  # offset tuple -> (32,) coefficient
    order: int = 0

    @property
    def reach(self) -> int:
        return max((max(abs(v) for v in o) for o in self.terms), default=0)

    @property
    def size(self) -> int:
        return len(self.terms)

    def compose(self, inner: Stencil, side: str = "left") -> Stencil:
        """self o inner, i.e. apply inner first; ``side`` is where the coefficients act."""
        out: dict = {}
        for o1, c1 in self.terms.items():
            m1 = left_matrix(c1) if side == "left" else right_matrix(c1)
            for o2, c2 in inner.terms.items():
                o = tuple(a + b for a, b in zip(o1, o2))
                c = m1 @ c2
                out[o] = out[o] + c if o in out else c
        out = {o: c for o, c in out.items() if np.any(c)}
        return Stencil(out, self.order + inner.order)

    def offsets(self) -> np.ndarray:
        return np.array(sorted(self.terms), dtype=float).reshape(-1, AXES)

    def coefficients(self) -> np.ndarray:
        return np.array([self.terms[o] for o in sorted(self.terms)]).reshape(-1, DIM)

    def abs_weight(self) -> float:
        return float(sum(np.abs(c).sum() for c in self.terms.values()))


def _unit(k: int, step: int = 1) -> tuple:
    o = [0] * AXES
    o[k] = step
    return tuple(o)


def _blade_coeff(k: int, value: float) -> np.ndarray:
    c = np.zeros(DIM)
    c[k] = value  # k = 0 is the scalar, k = 1..5 are the units e_k
    return c


IDENTITY_STENCIL = Stencil({(0,) * AXES: _blade_coeff(0, 1.0)}, 0)


def dirac_stencil(conjugate: bool = False) -> Stencil:
    """Central differences for d/dx0 + sum e_k d/dx_k (minus sign on the e_k for D_bar)."""
    terms = {}
    for k in range(AXES):
        sign = -1.0 if conjugate and k > 0 else 1.0
        terms[_unit(k, 1)] = _blade_coeff(k, 0.5 * sign)
        terms[_unit(k, -1)] = _blade_coeff(k, -0.5 * sign)
    return Stencil(terms, 1)


def laplacian_stencil() -> Stencil:
    """13-point second-difference Laplacian on R^6."""
    terms = {(0,) * AXES: _blade_coeff(0, -2.0 * AXES)}
    for k in range(AXES):
        terms[_unit(k, 1)] = _blade_coeff(0, 1.0)
        terms[_unit(k, -1)] = _blade_coeff(0, 1.0)
    return Stencil(terms, 2)


# ---------------------------------------------------------------------------
# grid functions

@dataclass(frozen=True)
class Box:
    center: np.ndarray
    half_width: np.ndarray

    @classmethod
    def cube(cls, center: Sequence[float] = BOX_CENTER, half_width: float = BOX_HALF_WIDTH) -> Box:
        c = np.asarray(center, dtype=float)
        return cls(c, np.full(AXES, float(half_width)))

    def contains_sphere_point(self, s: Paravector) -> bool:
        """Whether the box meets the sphere [s] = {s0 + r w : |w| = 1}."""
        lo, hi = self.center - self.half_width, self.center + self.half_width
        if not lo[0] <= s.x0 <= hi[0]:
            return False
        vec_lo, vec_hi = lo[1:], hi[1:]
        nearest = np.clip(0.0, vec_lo, vec_hi)
        farthest = np.where(np.abs(vec_lo) > np.abs(vec_hi), vec_lo, vec_hi)
        return bool(np.linalg.norm(nearest) <= s.vector_norm <= np.linalg.norm(farthest))

    def axis_distance(self) -> float:
        """Smallest |x_vec| over the box."""
        lo, hi = self.center[1:] - self.half_width[1:], self.center[1:] + self.half_width[1:]
        return float(np.linalg.norm(np.clip(0.0, lo, hi)))


def _embed(points: np.ndarray) -> np.ndarray:
    out = np.zeros(points.shape[:-1] + (DIM,))
    out[..., :AXES] = points
    return out


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Lazily sampled function on the uniform grid center + h Z^6 inside a box.

    ``stencil`` is the difference operator applied so far; values are only
    computed at requested interior points.  ``side = "right"`` lets the
    Clifford units of the difference operators act from the right, as for
    right slice functions.
    """

    sampler: Sampler
    box: Box
    h: float
    stencil: Stencil = IDENTITY_STENCIL
    provenance: str = ""
    side: str = "left"

    @property
    def margin(self) -> int:
        """Cells still available between the interior and the box boundary."""
        return int(np.floor(np.min(self.box.half_width) / self.h + 1e-9)) - self.stencil.reach

    def _with(self, op: Stencil, label: str) -> GridFunction:
        new = op.compose(self.stencil, self.side)
        if int(np.floor(np.min(self.box.half_width) / self.h + 1e-9)) - new.reach < 1:
            raise GridTooSmall(f"box too small for {label} at h={self.h}")
        return replace(self, stencil=new, provenance=f"{label}({self.provenance})")

    def values_at(self, points: np.ndarray, with_bound: bool = False):
        """Stencil applied at arbitrary (M, 6) points; the sampler is called on the cross neighbourhoods.

        With ``with_bound`` also returns a rough bound on the floating-point
        error of the stencil sum.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        offs = self.stencil.offsets() * self.h
        coeffs = self.stencil.coefficients()
        samples = self.sampler(_embed(points[:, None, :] + offs[None, :, :]))  # (M, K, 32)
        mats = left_matrix(coeffs) if self.side == "left" else right_matrix(coeffs)  # (K, 32, 32)
        acc = np.einsum("kij,mkj->mi", mats, samples) / self.h ** self.stencil.order
        if not with_bound:
            return acc
        mag = max(float(np.abs(samples).max()), 1.0)
        bound = 64.0 * EPS * self.stencil.abs_weight() * mag / self.h ** self.stencil.order
        return acc, bound

    def grid_points(self, rng: np.random.Generator, count: int = N_PROBES, coarse_h: float | None = None) -> np.ndarray:
        """Random grid nodes at least ``margin`` cells inside the box.

        Nodes are snapped to the ``coarse_h`` lattice so they remain grid
        nodes after halving h.
        """
        step = coarse_h or self.h
        room = np.floor((self.box.half_width - self.stencil.reach * self.h) / step + 1e-9).astype(int)
        if np.any(room < 0):
            raise GridTooSmall("no interior grid nodes")
        idx = rng.integers(-room, room + 1, size=(count, AXES))
        return self.box.center + step * idx



def grid_function(sampler: Sampler, box: Box, h: float, provenance: str = "", side: str = "left") -> GridFunction:
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if np.min(box.half_width) < h:
        raise GridTooSmall("box must be at least one cell wide")
    return GridFunction(sampler, box, h, IDENTITY_STENCIL, provenance, side)


def apply_dirac(g: GridFunction, conjugate: bool = False) -> GridFunction:
    return g._with(dirac_stencil(conjugate), "Dbar" if conjugate else "D")


def apply_laplacian(g: GridFunction, power: int = 1) -> GridFunction:
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    out = g
    for _ in range(power):
        out = out._with(laplacian_stencil(), "Lap")
    return out


def stem_sampler(f: StemPolynomial) -> Sampler:
    return f.eval_array


# ---------------------------------------------------------------------------
# convergence bookkeeping

def order_estimates(hs: Sequence[float], residuals: Sequence[float]) -> list[float]:
    """log(r_i / r_{i+1}) / log(h_i / h_{i+1}) for consecutive pairs."""
    out = []
    for (h1, r1), (h2, r2) in zip(zip(hs, residuals), zip(hs[1:], residuals[1:])):
        if r1 <= 0 or r2 <= 0:
            out.append(float("nan"))
        else:
            out.append(float(np.log(r1 / r2) / np.log(h1 / h2)))
    return out


def richardson_order(hs: Sequence[float], residuals: Sequence[float]) -> float:
    """Least-squares slope of log r against log h over the whole sequence."""
    r = np.asarray(residuals, dtype=float)
    if np.any(r <= 0):
        return float("nan")
    return float(np.polyfit(np.log(hs), np.log(r), 1)[0])


@dataclass
class ResidualCurve:
    identity: str
    hs: list[float]
    residuals: list[float]
    extrapolated: float = float("nan")
    control: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def orders(self) -> list[float]:
        return order_estimates(self.hs, self.residuals)

    @property
    def order(self) -> float:
        return richardson_order(self.hs, self.residuals)

    def rows(self) -> list[tuple]:
        ords = [float("nan")] + self.orders
        return [(h, self.identity, r, o) for h, r, o in zip(self.hs, self.residuals, ords)]


def curves_to_csv(curves: Sequence[ResidualCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "identity", "max_residual", "order_estimate"])
    for c in curves:
        for h, name, r, o in c.rows():
            w.writerow([repr(float(h)), name, repr(float(r)), repr(float(o))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# kernel identities

def _check_box(s: Paravector, box: Box) -> None:
    if box.contains_sphere_point(s):
        raise OnSpectrumSphere(f"box meets the sphere of {s!r}")


def _kernel_curve(
    name: str,
    s: Paravector,
    box: Box,
    hs: Sequence[float],
    side: str,
    build: Callable[[GridFunction], GridFunction],
    target: Callable[[np.ndarray], np.ndarray],
    n_probes: int,
    seed: int,
    control: bool = False,
) -> ResidualCurve:
    _check_box(s, box)
    kernel = kernel_left_array if side == "left" else kernel_right_array
    sampler = lambda xs: kernel(s, xs)  # noqa: E731
    rng = np.random.default_rng(seed)
    coarse = max(hs)
    probes = build(grid_function(sampler, box, coarse, side=side)).grid_points(rng, n_probes)
    tgt = target(_embed(probes))
    scale = np.linalg.norm(tgt, axis=-1)
    residuals, values = [], []
    for h in hs:
        v = build(grid_function(sampler, box, h, f"{side} kernel", side)).values_at(probes)
        values.append(v)
        residuals.append(float(np.max(np.linalg.norm(v - tgt, axis=-1) / scale)))
    extrap = float("nan")
    if len(hs) >= 2:
        ratio = (hs[-2] / hs[-1]) ** 2
        v_star = (ratio * values[-1] - values[-2]) / (ratio - 1.0)
        extrap = float(np.max(np.linalg.norm(v_star - tgt, axis=-1) / scale))
    return ResidualCurve(name, list(hs), residuals, extrap, control, {"side": side, "values": values})


def check_kernel_identity_D(
    s: Paravector,
    box: Box | None = None,
    hs: Sequence[float] = H_SEQUENCE,
    side: str = "left",
    constant: float = -4.0,
    n_probes: int = N_PROBES,
    seed: int = 0,
) -> ResidualCurve:
    """Relative residual of D S^{-1}(s, .) against constant * Q_{c,s}^{-1}(x) per step size."""
    box = box or Box.cube()
    target = lambda xs: constant * inverse_array(pseudo_q_array(s, xs))  # noqa: E731
    return _kernel_curve(
        f"D kernel ({side})", s, box, hs, side, apply_dirac, target, n_probes, seed, control=constant != -4.0
    )


def check_kernel_identity_DDelta(
    s: Paravector,
    box: Box | None = None,
    hs: Sequence[float] = H_SEQUENCE,
    side: str = "left",
    constant: float = 16.0,
    n_probes: int = N_PROBES,
    seed: int = 0,
) -> ResidualCurve:
    """Relative residual of D Lap S^{-1}(s, .) against constant * Q_{c,s}^{-2}(x) per step size."""
    box = box or Box.cube()

    def target(xs):
        q = inverse_array(pseudo_q_array(s, xs))
        return constant * gp(q, q)

    build = lambda g: apply_dirac(apply_laplacian(g, 1))  # noqa: E731
    return _kernel_curve(
        f"D Lap kernel ({side})", s, box, hs, side, build, target, n_probes, seed, control=constant != 16.0
    )


# ---------------------------------------------------------------------------
# Fueter-Sce chain

CHAIN = {
    "D Lap^2 f": lambda g: apply_dirac(apply_laplacian(g, 2)),
    "Lap (D Lap f)": lambda g: apply_laplacian(apply_dirac(apply_laplacian(g, 1)), 1),
    "Lap^2 (D f)": lambda g: apply_laplacian(apply_dirac(g), 2),
    "D (Lap^2 f)": lambda g: apply_dirac(apply_laplacian(g, 2)),
}


@dataclass
class ChainReport:
    curves: list[ResidualCurve]
    rounding: dict  # identity -> floating-point error bound over the h sequence

    def curve(self, identity: str) -> ResidualCurve:
        return next(c for c in self.curves if c.identity == identity)

    def exact(self, identity: str) -> bool:
        """Stencil sum vanished identically at every probe and step."""
        return max(self.curve(identity).residuals) == 0.0

    def within_rounding(self, identity: str) -> bool:
        return max(self.curve(identity).residuals) <= self.rounding[identity]

    @property
    def all_exact(self) -> bool:
        return all(self.exact(c.identity) for c in self.curves)


def check_fine_structure_chain(
    f: StemPolynomial,
    box: Box | None = None,
    hs: Sequence[float] = CHAIN_H_SEQUENCE,
    n_probes: int = N_PROBES,
    seed: int = 0,
) -> ChainReport:
    """Max absolute residual of each Fueter-Sce chain expression (all vanish exactly) per step size.

    The default steps are powers of two so that grid coordinates, and the
    stencil sums of low-degree polynomials on them, are exact in floating point.
    """
    box = box or Box.cube()
    sampler = stem_sampler(f)
    curves, rounding = [], {}
    for name, build in CHAIN.items():
        rng = np.random.default_rng(seed)
        probes = build(grid_function(sampler, box, max(hs))).grid_points(rng, n_probes)
        res = []
        bound = 0.0
        for h in hs:
            vals, err = build(grid_function(sampler, box, h, repr(f))).values_at(probes, with_bound=True)
            res.append(float(np.max(np.linalg.norm(vals, axis=-1))))
            bound = max(bound, err)
        curves.append(ResidualCurve(name, list(hs), res))
        rounding[name] = bound
    return ChainReport(curves, rounding)


# ---------------------------------------------------------------------------
# axial form

def _rotate_direction(rng: np.random.Generator, count: int) -> np.ndarray:
    w = rng.standard_normal((count, NMAX))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def check_axiality(
    g: GridFunction,
    n_probes: int = N_PROBES,
    seed: int = 0,
    min_axis_distance: float = 0.1,
) -> float:
    """Max relative deviation of g from A(x0, r) + w B(x0, r) across directions w.

    A and B are fitted from the values at w and -w; the prediction is compared
    with g at a second random direction with the same (x0, r).
    """
    if g.box.axis_distance() < min_axis_distance:
        raise AxisTooClose(f"box comes within {g.box.axis_distance():.3g} of the real axis")
    rng = np.random.default_rng(seed)
    probes = g.grid_points(rng, n_probes)
    x0 = probes[:, 0]
    r = np.linalg.norm(probes[:, 1:], axis=1)
    w1 = probes[:, 1:] / r[:, None]
    w2 = _rotate_direction(rng, n_probes)

    def at(w):
        return g.values_at(np.column_stack([x0, r[:, None] * w]))

    fp, fm, f2 = at(w1), at(-w1), at(w2)
    W1, W2 = _embed(np.column_stack([np.zeros(n_probes), w1])), _embed(np.column_stack([np.zeros(n_probes), w2]))
    A = 0.5 * (fp + fm)
    B = -gp(W1, 0.5 * (fp - fm))
    pred = A + gp(W2, B)
    scale = np.maximum(np.linalg.norm(fp, axis=-1), 1.0)
    return float(np.max(np.linalg.norm(pred - f2, axis=-1) / scale))
