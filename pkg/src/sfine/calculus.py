"""Contour-quadrature functional calculi (S, D, Delta, DDelta), product rules and projectors."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .clifford import DIM, gp, left_matrix
from .contour import Contour, ContourLike, as_boundary, boundary_encloses
from .errors import ContourTouchesSpectrum, NotIntrinsic, SideMismatch, SpectrumNotSplit
from .operators import CliffordOperator, ParavectorOperator, conj_operator, op_mul, s_spectrum
from .resolvents import IdentityResidual, ResolventKind, digest, residual_of
from .slice import StemPolynomial

ADMISSIBLE_MARGIN = 0.1  # node-to-spectrum distance, times the contour radius
ADAPTIVE_TOL = 1e-10
ADAPTIVE_MAX_NODES = 4096
NESTED_FACTOR = 1.5


class CalculusKind(Enum):
    S = "S"
    D = "D"
    Delta = "Delta"
    DDelta = "DDelta"

    def resolvent(self, side: str) -> ResolventKind:
        K = ResolventKind
        table = {
            (CalculusKind.S, "left"): K.S_LEFT,
            (CalculusKind.S, "right"): K.S_RIGHT,
            (CalculusKind.D, "left"): K.D_LEFT,
            (CalculusKind.D, "right"): K.D_RIGHT,
            (CalculusKind.Delta, "left"): K.DELTA_LEFT,
            (CalculusKind.Delta, "right"): K.DELTA_RIGHT,
            (CalculusKind.DDelta, "left"): K.DDELTA_LEFT,
            (CalculusKind.DDelta, "right"): K.DDELTA_RIGHT,
        }
        return table[(self, side)]


# ---------------------------------------------------------------------------
# node resolvents

_CACHE_SIZE = 64
_node_cache: OrderedDict[tuple, np.ndarray] = OrderedDict()


def clear_cache() -> None:
    _node_cache.clear()


def node_resolvents(T: ParavectorOperator, contour: Contour, kind: ResolventKind) -> np.ndarray:
    """(N, d, d, 32) stack of resolvent(kind, s_k, T) over the nodes, cached per (T, contour)."""
    key = (digest(T), T.n, contour.key(), kind)
    hit = _node_cache.get(key)
    if hit is not None:
        _node_cache.move_to_end(key)
        return hit
    out = batched_resolvents(T, contour.node_array, kind)
    out.setflags(write=False)
    _node_cache[key] = out
    if len(_node_cache) > _CACHE_SIZE:
        _node_cache.popitem(last=False)
    return out


def _bmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched operator product over a leading node axis: (N, d, d, 32) x (N, d, d, 32)."""
    N, d = a.shape[0], a.shape[1]
    lift = left_matrix(a).transpose(0, 1, 3, 2, 4).reshape(N, DIM * d, DIM * d)
    cols = b.transpose(0, 1, 3, 2).reshape(N, DIM * d, d)
    return (lift @ cols).reshape(N, d, DIM, d).transpose(0, 1, 3, 2)


def batched_q_inverse(T: ParavectorOperator, nodes: np.ndarray) -> np.ndarray:
    """Q_{c,s}^{-1}(T) for every node s, from one batched solve of the real lifts."""
    N, d = nodes.shape[0], T.d
    Top, Tb = T.op.coeffs, conj_operator(T).op.coeffs
    TTb = op_mul(T.op, conj_operator(T).op).coeffs
    eye = np.eye(d)[None, :, :, None]
    s2 = gp(nodes, nodes)
    ssum = gp(nodes[:, None, None, :], (Top + Tb)[None])
    Q = eye * s2[:, None, None, :] - ssum + TTb[None]
    lift = left_matrix(Q).transpose(0, 1, 3, 2, 4).reshape(N, DIM * d, DIM * d)
    rhs = np.zeros((DIM * d, d))
    rhs[np.arange(d) * DIM, np.arange(d)] = 1.0
    cols = np.linalg.solve(lift, np.broadcast_to(rhs, (N, DIM * d, d)))
    return cols.reshape(N, d, DIM, d).transpose(0, 1, 3, 2)


def batched_resolvents(T: ParavectorOperator, nodes: np.ndarray, kind: ResolventKind) -> np.ndarray:
    """(N, d, d, 32) resolvent of the given kind at every node; same formulas as :class:`Resolvents`."""
    K = ResolventKind
    q1 = batched_q_inverse(T, nodes)
    if kind in (K.D_LEFT, K.D_RIGHT):
        return -4.0 * q1
    if kind in (K.DDELTA_LEFT, K.DDELTA_RIGHT):
        return 16.0 * _bmul(q1, q1)
    if kind is K.PSEUDO_Q:
        return q1
    d = T.d
    smt = np.eye(d)[None, :, :, None] * nodes[:, None, None, :] - conj_operator(T).op.coeffs[None]
    if kind is K.S_LEFT:
        return _bmul(smt, q1)
    if kind is K.S_RIGHT:
        return _bmul(q1, smt)
    if kind is K.DELTA_LEFT:
        return -8.0 * _bmul(_bmul(smt, q1), q1)
    if kind is K.DELTA_RIGHT:
        return -8.0 * _bmul(q1, _bmul(q1, smt))
    if kind in (K.F_LEFT, K.F_RIGHT):
        q2 = _bmul(q1, q1)
        return 64.0 * (_bmul(_bmul(smt, q1), q2) if kind is K.F_LEFT else _bmul(q2, _bmul(q1, smt)))
    raise ValueError(f"unsupported resolvent kind {kind}")


def _spheres_halfplane(T: ParavectorOperator) -> np.ndarray:
    return np.array([(sp.center, sp.radius) for sp in s_spectrum(T)])


def check_nodes(T: ParavectorOperator, boundary: list[Contour], margin: float = ADMISSIBLE_MARGIN) -> None:
    """Every node keeps a distance >= margin * radius from sigma_S(T)."""
    sph = _spheres_halfplane(T)
    for c in boundary:
        hp = c.half_plane_nodes()
        dist = np.hypot(hp[:, None, 0] - sph[None, :, 0], hp[:, None, 1] - sph[None, :, 1]).min()
        if dist < margin * c.radius:
            raise ContourTouchesSpectrum(
                f"contour (center {c.center}, radius {c.radius}) passes within {dist:.3e} of the S-spectrum"
            )


def check_admissible(T: ParavectorOperator, contour: ContourLike, margin: float = ADMISSIBLE_MARGIN) -> list[Contour]:
    """The boundary must enclose every sphere of sigma_S(T) and stay clear of it."""
    boundary = as_boundary(contour)
    check_nodes(T, boundary, margin)
    for c0, r0 in _spheres_halfplane(T):
        if not boundary_encloses(boundary, c0, r0):
            raise ContourTouchesSpectrum(f"sphere (center {c0}, radius {r0}) is not enclosed by the contour")
    return boundary


# ---------------------------------------------------------------------------
# quadrature

def _quadrature(
    kind: CalculusKind, f: StemPolynomial, T: ParavectorOperator, boundary: list[Contour], side: str
) -> CliffordOperator:
    total = np.zeros((T.d, T.d, DIM))
    rkind = kind.resolvent(side)
    for c in boundary:
        R = node_resolvents(T, c, rkind)
        fw = f.eval_array(c.node_array)
        if side == "left":
            m = gp(c.weight_array, fw)  # w_k f(s_k)
            terms = gp(R, m[:, None, None, :])
        else:
            m = gp(fw, c.weight_array)  # f(s_k) w_k
            terms = gp(m[:, None, None, :], R)
        # fixed summation order over the node index
        for t in terms:
            total += t
    return CliffordOperator(total / (2.0 * np.pi), T.n)


def apply(
    kind: CalculusKind, f: StemPolynomial, T: ParavectorOperator, contour: ContourLike, side: str | None = None
) -> CliffordOperator:
    """f_kind(T) by trapezoidal quadrature of the slice Cauchy integral on ``contour``.

    Left stems use (1/2pi) sum R_L(s_k) w_k f(s_k); right stems use
    (1/2pi) sum f(s_k) w_k R_R(s_k).
    """
    side = side or f.side
    if side != f.side:
        raise SideMismatch(f"{f.side} function used with the {side} calculus")
    boundary = check_admissible(T, contour)
    return _quadrature(kind, f, T, boundary, side)


@dataclass(frozen=True)
class AdaptiveResult:
    value: CliffordOperator
    nodes: int
    change: float
    converged: bool


def apply_adaptive(
    kind: CalculusKind,
    f: StemPolynomial,
    T: ParavectorOperator,
    contour: Contour,
    tol: float = ADAPTIVE_TOL,
    max_nodes: int = ADAPTIVE_MAX_NODES,
) -> AdaptiveResult:
    """Double the node count until successive values differ by < tol (flagged at max_nodes)."""
    prev = apply(kind, f, T, contour)
    n = contour.nodes
    change = np.inf
    while n < max_nodes:
        n *= 2
        cur = apply(kind, f, T, contour.with_nodes(n))
        change = (cur - prev).norm()
        prev = cur
        if change < tol:
            return AdaptiveResult(cur, n, change, True)
    return AdaptiveResult(prev, n, change, False)


def default_contour(T: ParavectorOperator, J=None, nodes: int = 256, factor: float = 2.0) -> Contour:
    """Circle centred at 0 with radius ``factor`` times the spectral scale."""
    from .clifford import UnitImaginary

    sph = _spheres_halfplane(T)
    rho = max(1.0, float(np.max(np.hypot(sph[:, 0], sph[:, 1]))))
    return Contour(0.0, factor * rho, J or UnitImaginary.axis(1, T.n), nodes)


# ---------------------------------------------------------------------------
# product rules

def _nested(contour: Contour) -> tuple[Contour, Contour]:
    return contour, contour.scaled(NESTED_FACTOR)


def _require_intrinsic(f: StemPolynomial) -> None:
    if not f.intrinsic:
        raise NotIntrinsic("the first factor must have real coefficients")


def _require_left(g: StemPolynomial) -> None:
    if g.side != "left":
        raise SideMismatch("the second factor must be a left stem")


def product_rule_check_biharmonic(
    f: StemPolynomial, g: StemPolynomial, T: ParavectorOperator, contour: Contour, tol: float = 1e-7
) -> tuple[IdentityResidual, IdentityResidual]:
    """Residuals of (fg)_D(T) against f_D(T) g(T) + f(Tb) g_D(T) and against f_D(T) g(Tb) + f(T) g_D(T)."""
    _require_intrinsic(f)
    _require_left(g)
    G1, G2 = _nested(contour)
    Tb = conj_operator(T)
    S, D = CalculusKind.S, CalculusKind.D
    fg = apply(D, f * g, T, G2)
    fD = apply(D, f, T, G1)
    gD = apply(D, g, T, G2)
    rhs1 = fD @ apply(S, g, T, G2) + apply(S, f, Tb, G1) @ gD
    rhs2 = fD @ apply(S, g, Tb, G2) + apply(S, f, T, G1) @ gD
    key = digest(T, repr(f), repr(g), G1.key())
    return (
        residual_of("biharmonic product rule", "D prod. rule", key, fg, rhs1, tol),
        residual_of("biharmonic product rule, equivalent form", "D prod. rule", key, fg, rhs2, tol),
    )


def product_rule_check_harmonic(
    f: StemPolynomial, g: StemPolynomial, T: ParavectorOperator, contour: Contour, tol: float = 1e-7
) -> tuple[IdentityResidual, IdentityResidual]:
    """Residuals of both harmonic product-rule variants (T_bar in g, or in the Delta factors)."""
    _require_intrinsic(f)
    _require_left(g)
    G1, G2 = _nested(contour)
    Tb = conj_operator(T)
    K = CalculusKind
    fg = apply(K.DDelta, f * g, T, G2)
    fD, fDD = apply(K.D, f, T, G1), apply(K.DDelta, f, T, G1)
    gD, gDD = apply(K.D, g, T, G2), apply(K.DDelta, g, T, G2)
    rhs1 = (
        apply(K.S, f, Tb, G1) @ gDD
        + fDD @ apply(K.S, g, Tb, G2)
        + (fD @ apply(K.Delta, g, T, G2)) * 0.5
        + (apply(K.Delta, f, T, G1) @ gD) * 0.5
    )
    rhs2 = (
        apply(K.S, f, T, G1) @ gDD
        + fDD @ apply(K.S, g, T, G2)
        + (fD @ apply(K.Delta, g, Tb, G2)) * 0.5
        + (apply(K.Delta, f, Tb, G1) @ gD) * 0.5
    )
    key = digest(T, repr(f), repr(g), G1.key())
    return (
        residual_of("harmonic product rule", "DDelta prod. rule", key, fg, rhs1, tol),
        residual_of("harmonic product rule, second form", "DDelta prod. rule", key, fg, rhs2, tol),
    )


# ---------------------------------------------------------------------------
# projectors

@dataclass(frozen=True)
class ProjectorPair:
    inner: CliffordOperator  # evaluated on G1
    outer: CliffordOperator  # evaluated on G2

    @property
    def agreement(self) -> float:
        return (self.inner - self.outer).norm() / max(self.inner.norm(), 1.0)

    def idempotency(self, which: str = "inner") -> float:
        P = self.inner if which == "inner" else self.outer
        return (P @ P - P).norm() / max(P.norm(), 1.0)


_PROJECTOR = {
    # kind: (constant, power of p)
    CalculusKind.D: (1.0 / (32.0 * np.pi), 1),
    CalculusKind.DDelta: (1.0 / (8.0 * np.pi), 3),
}


def _split_check(T: ParavectorOperator, G1: Contour, G2: Contour) -> None:
    sph = _spheres_halfplane(T)
    inside1 = np.array([G1.encloses(c, r) for c, r in sph])
    inside2 = np.array([G2.encloses(c, r) for c, r in sph])
    if np.any(inside1 != inside2):
        raise SpectrumNotSplit("G1 and G2 must enclose the same part of the S-spectrum")
    if G2.radius < G1.radius or abs(G2.center - G1.center) + G1.radius > G2.radius:
        raise SpectrumNotSplit("the closure of G1 must lie inside G2")


def riesz_projector(kind: CalculusKind, T: ParavectorOperator, G1: Contour, G2: Contour) -> ProjectorPair:
    """c * sum R(p_k) w_k p_k^m on G1 and c * sum s_k^m w_k R(s_k) on G2.

    (c, m) = (1/(32 pi), 1) for D and (1/(8 pi), 3) for DDelta.
    """
    if kind not in _PROJECTOR:
        raise ValueError(f"projectors are defined for D and DDelta, not {kind}")
    const, power = _PROJECTOR[kind]
    check_nodes(T, [G1])
    check_nodes(T, [G2])
    _split_check(T, G1, G2)
    f = StemPolynomial.monomial(power)
    scale = 2.0 * np.pi * const
    inner = _quadrature(kind, f, T, [G1], "left") * scale
    outer = _quadrature(kind, StemPolynomial.monomial(power, side="right"), T, [G2], "right") * scale
    return ProjectorPair(inner, outer)


__all__ = [
    "ADMISSIBLE_MARGIN",
    "AdaptiveResult",
    "CalculusKind",
    "ProjectorPair",
    "apply",
    "apply_adaptive",
    "check_admissible",
    "clear_cache",
    "default_contour",
    "node_resolvents",
    "product_rule_check_biharmonic",
    "product_rule_check_harmonic",
    "riesz_projector",
]

