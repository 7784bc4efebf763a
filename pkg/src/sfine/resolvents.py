"""Resolvent operators of the S-, D-, Delta-, F- and DDelta-calculi and an
identity checker that evaluates both sides of each resolvent relation.

Both sides of every identity are assembled literally from operator products,
left/right Clifford scalings and the scalar factor Q_s(p)^{-1}; nothing is
simplified, so a mistake on one side cannot cancel against the other.
"""
from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np

from .clifford import Multivector, Paravector, UnitImaginary, as_mv
from .errors import NonCommutingB, OnSpectrum, SamplerExhausted, SphereCollision
from .operators import (
    CliffordOperator,
    ParavectorOperator,
    conj_operator,
    op_inverse,
    op_mul,
    pseudo_q,
    s_spectrum,
    spectrum_distance,
)
from .slice import on_sphere, q_poly, q_poly_inv

DEFAULT_TOL = 1e-9


class ResolventKind(Enum):
    PSEUDO_Q = "PseudoQ"
    S_LEFT = "SLeft"
    S_RIGHT = "SRight"
    D_LEFT = "DLeft"
    D_RIGHT = "DRight"
    DELTA_LEFT = "DeltaLeft"
    DELTA_RIGHT = "DeltaRight"
    F_LEFT = "FLeft"
    F_RIGHT = "FRight"
    DDELTA_LEFT = "DDeltaLeft"
    DDELTA_RIGHT = "DDeltaRight"


class Resolvents:
    """Lazily computed resolvent family of one operator at one point.

    All pieces derive from a single inversion of Q_{c,s}(T).
    """

    def __init__(self, T: ParavectorOperator, s: Paravector, check: bool = True):
        if check:
            ensure_off_spectrum(T, s)
        self.T = T
        self.s = s
        self.d = T.d

    @cached_property
    def Tb(self) -> ParavectorOperator:
        return conj_operator(self.T)

    @cached_property
    def s_minus_Tbar(self) -> CliffordOperator:
        return CliffordOperator.scalar(self.s, self.d, self.T.n) - self.Tb.op

    @cached_property
    def q1(self) -> CliffordOperator:
        return op_inverse(pseudo_q(self.s, self.T))

    @cached_property
    def q2(self) -> CliffordOperator:
        return op_mul(self.q1, self.q1)

    def q(self, m: int) -> CliffordOperator:
        if m == 1:
            return self.q1
        if m == 2:
            return self.q2
        out = self.q1
        for _ in range(m - 1):
            out = op_mul(out, self.q1)
        return out

    @cached_property
    def s_left(self) -> CliffordOperator:
        return op_mul(self.s_minus_Tbar, self.q1)

    @cached_property
    def s_right(self) -> CliffordOperator:
        return op_mul(self.q1, self.s_minus_Tbar)

    @cached_property
    def d_res(self) -> CliffordOperator:
        return self.q1 * -4.0

    @cached_property
    def delta_left(self) -> CliffordOperator:
        return op_mul(self.s_left, self.q1) * -8.0

    @cached_property
    def delta_right(self) -> CliffordOperator:
        return op_mul(self.q1, self.s_right) * -8.0

    @cached_property
    def f_left(self) -> CliffordOperator:
        return op_mul(self.s_left, self.q2) * 64.0

    @cached_property
    def f_right(self) -> CliffordOperator:
        return op_mul(self.q2, self.s_right) * 64.0

    @cached_property
    def ddelta(self) -> CliffordOperator:
        return self.q2 * 16.0

    def get(self, kind: ResolventKind, m: int = 1) -> CliffordOperator:
        K = ResolventKind
        table = {
            K.S_LEFT: "s_left",
            K.S_RIGHT: "s_right",
            K.D_LEFT: "d_res",
            K.D_RIGHT: "d_res",
            K.DELTA_LEFT: "delta_left",
            K.DELTA_RIGHT: "delta_right",
            K.F_LEFT: "f_left",
            K.F_RIGHT: "f_right",
            K.DDELTA_LEFT: "ddelta",
            K.DDELTA_RIGHT: "ddelta",
        }
        if kind is K.PSEUDO_Q:
            return self.q(m)
        return getattr(self, table[kind])


def spectrum_tolerance(s: Paravector) -> float:
    return 1e-9 * (1.0 + s.modulus)


def ensure_off_spectrum(T: ParavectorOperator, s: Paravector) -> None:
    dist = spectrum_distance(s, s_spectrum(T))
    if dist < spectrum_tolerance(s):
        raise OnSpectrum(f"{s!r} lies on the S-spectrum (distance {dist:.2e})")


def resolvent(kind: ResolventKind, s: Paravector, T: ParavectorOperator, m: int = 1) -> CliffordOperator:
    """Resolvent operator of the given kind at s; ``m`` is the power for PSEUDO_Q."""
    return Resolvents(T, s).get(kind, m)


# ---------------------------------------------------------------------------
# identity catalog

@dataclass(frozen=True)
class _Entry:
    anchor: str
    arity: str  # "s", "sp" or "spB"
    description: str


class IdentityId(Enum):
    LEFT_S_EQ = _Entry("sl", "s", "S_L(s,T) s - T S_L(s,T) = I")
    RIGHT_S_EQ = _Entry("sr", "s", "s S_R(s,T) - S_R(s,T) T = I")
    GEN_S_RES = _Entry("Breseq", "spB", "generalized S-resolvent equation with B commuting with T")
    DELTA_LEFT_EQ = _Entry("rK1", "s", "S_Delta,L(s,T) s - T S_Delta,L(s,T) = -8 Q_{c,s}^{-1}(T)")
    DELTA_RIGHT_EQ = _Entry("rK2", "s", "s S_Delta,R(s,T) - S_Delta,R(s,T) T = -8 Q_{c,s}^{-1}(T)")
    QPOLY_COMMUTE_1 = _Entry("Lemmastep0", "sp", "Q_s(p)^{-1} Q_{c,p}^{-1}(T) = Q_{c,p}^{-1}(T) Q_s(p)^{-1}")
    QPOLY_COMMUTE_2 = _Entry("Lemmastep0", "sp", "Q_s(p)^{-1} Q_{c,p}^{-2}(T) = Q_{c,p}^{-2}(T) Q_s(p)^{-1}")
    DSTEP3 = _Entry("D-step 3", "sp", "S_R(s,T) Q_{c,p}^{-1}(T) expansion")
    DSTEP6 = _Entry("D-step 6", "sp", "Q_{c,s}^{-1}(T) S_L(p,T) expansion")
    DSTEP8 = _Entry("D-step 8", "sp", "Q_{c,s}^{-1}(T) T Q_{c,p}^{-1}(T) expansion")
    DSTEP81 = _Entry("D-step 81", "sp", "Q_{c,s}^{-1}(T) T_bar Q_{c,p}^{-1}(T) expansion")
    PRERES = _Entry("preres", "sp", "pre-resolvent equation with the vector part of T")
    BIHARM_RES = _Entry("corol D-resolent", "sp", "biharmonic resolvent equation")
    F_LEFT_EQ = _Entry("rf1", "s", "F_L(s,T) s - T F_L(s,T) = 64 Q_{c,s}^{-2}(T)")
    F_RIGHT_EQ = _Entry("rf2", "s", "s F_R(s,T) - F_R(s,T) T = 64 Q_{c,s}^{-2}(T)")
    HARM_C3 = _Entry("c3", "sp", "S_R(s,T) Q_{c,p}^{-2} + Q_{c,s}^{-2} S_L(p,T) expansion")
    HARM_C10 = _Entry("c10", "sp", "seven-term harmonic pre-resolvent equation")
    HARM_RES_A = _Entry("DDelta-resolvent eq.", "sp", "harmonic resolvent equation, T_bar in the S-factors")
    HARM_RES_B = _Entry("DDelta-resolvent eq1", "sp", "harmonic resolvent equation, T_bar in the mixed factors")

    @property
    def anchor(self) -> str:
        return self.value.anchor

    @property
    def arity(self) -> str:
        return self.value.arity

    @property
    def description(self) -> str:
        return self.value.description


def catalog() -> list[dict]:
    """Machine-readable listing of the identity catalog."""
    return [
        {"name": i.name, "anchor": i.anchor, "arity": i.arity, "description": i.description}
        for i in IdentityId
    ]


@dataclass(frozen=True)
class IdentityResidual:
    identity: str
    anchor: str
    inputs: str
    residual: float
    scale: float
    tol: float = DEFAULT_TOL

    @property
    def relative(self) -> float:
        return self.residual / self.scale

    @property
    def passed(self) -> bool:
        return self.relative < self.tol


def residual_of(
    name: str, anchor: str, inputs: str, lhs: CliffordOperator, rhs: CliffordOperator, tol: float = DEFAULT_TOL
) -> IdentityResidual:
    res = (lhs - rhs).norm()
    scale = max(lhs.norm(), rhs.norm(), 1.0)
    return IdentityResidual(name, anchor, inputs, res, scale, tol)


def digest(T: ParavectorOperator, *parts) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(T.components).tobytes())
    for part in parts:
        if part is None:
            h.update(b"-")
        elif isinstance(part, Paravector):
            h.update(part.point.tobytes())
        elif isinstance(part, CliffordOperator):
            h.update(np.ascontiguousarray(part.coeffs).tobytes())
        else:
            h.update(repr(part).encode())
    return h.hexdigest()[:16]


def _commutes(B: CliffordOperator, T: CliffordOperator) -> bool:
    gap = B.commutator_norm(T)
    return gap <= 1e-10 * max(1.0, B.norm() * T.norm())


def _sides(id: IdentityId, T: ParavectorOperator, s: Paravector, p: Paravector | None, B):
    """Left- and right-hand side of one identity, transcribed term by term."""
    d, n = T.d, T.n
    I = CliffordOperator.identity(d, n)
    Top = T.op
    Tb = conj_operator(T)
    Tvec = T.vector_part
    rs = Resolvents(T, s, check=False)
    s_mv = s.mv
    sbar = s.conj().mv

    K = IdentityId
    if id is K.LEFT_S_EQ:
        return rs.s_left * s_mv - Top @ rs.s_left, I
    if id is K.RIGHT_S_EQ:
        return s_mv * rs.s_right - rs.s_right @ Top, I
    if id is K.DELTA_LEFT_EQ:
        return rs.delta_left * s_mv - Top @ rs.delta_left, rs.q1 * -8.0
    if id is K.DELTA_RIGHT_EQ:
        return s_mv * rs.delta_right - rs.delta_right @ Top, rs.q1 * -8.0
    if id is K.F_LEFT_EQ:
        return rs.f_left * s_mv - Top @ rs.f_left, rs.q2 * 64.0
    if id is K.F_RIGHT_EQ:
        return s_mv * rs.f_right - rs.f_right @ Top, rs.q2 * 64.0

    rp = Resolvents(T, p, check=False)
    p_mv = p.mv
    qinv = q_poly_inv(s, p)

    def bracket(Y: CliffordOperator) -> CliffordOperator:
        # [Y p - s_bar Y] Q_s(p)^{-1}
        return (Y * p_mv - sbar * Y) * qinv

    Qs, Qp, Qs2, Qp2 = rs.q1, rp.q1, rs.q2, rp.q2
    SRs, SLp = rs.s_right, rp.s_left

    if id is K.QPOLY_COMMUTE_1:
        return qinv * Qp, Qp * qinv
    if id is K.QPOLY_COMMUTE_2:
        return qinv * Qp2, Qp2 * qinv
    if id is K.GEN_S_RES:
        Y = SRs @ B - B @ SLp
        return SRs @ B @ SLp, bracket(Y)
    if id is K.DSTEP3:
        Y = (SRs @ Qp) * p_mv - SRs @ Top @ Qp - Qp
        return SRs @ Qp, bracket(Y)
    if id is K.DSTEP6:
        Y = Qs - s_mv * (Qs @ SLp) + Qs @ Top @ SLp
        return Qs @ SLp, bracket(Y)
    if id is K.DSTEP8:
        Y = Qs @ Top @ SLp - SRs @ Top @ Qp
        return Qs @ Top @ Qp, bracket(Y)
    if id is K.DSTEP81:
        Y = (SRs @ Qp) * p_mv - s_mv * (Qs @ SLp)
        return Qs @ Tb.op @ Qp, -bracket(Y)
    if id is K.PRERES:
        lhs = SRs @ Qp + Qs @ SLp - (Qs @ Tvec @ Qp) * 2.0
        return lhs, bracket(Qs - Qp)
    if id is K.BIHARM_RES:
        SR_s_Tbar = Resolvents(Tb, s, check=False).s_right
        lhs = rs.d_res @ SLp + SR_s_Tbar @ rp.d_res
        return lhs, bracket(rs.d_res - rp.d_res)
    if id is K.HARM_C3:
        Y = Qs2 @ Top @ SLp - s_mv * (Qs2 @ SLp) + (SRs @ Qp2) * p_mv - SRs @ Top @ Qp2
        return SRs @ Qp2 + Qs2 @ SLp, bracket(Qs2 - Qp2) + bracket(Y)
    if id is K.HARM_C10:
        mixed = Qs @ SRs @ SLp @ Qp
        lhs = (
            SRs @ Qp2
            + Qs2 @ SLp
            - (Qs @ SRs @ Top @ SLp @ Qp) * 2.0
            + mixed * p_mv
            + s_mv * mixed
            - (Qs2 @ Tvec @ Qp) * 2.0
            - (Qs @ Tvec @ Qp2) * 2.0
        )
        return lhs, bracket(Qs2 - Qp2)
    if id in (K.HARM_RES_A, K.HARM_RES_B):
        rs_b = Resolvents(Tb, s, check=False)
        rp_b = Resolvents(Tb, p, check=False)
        rhs = bracket(rs.ddelta - rp.ddelta)
        if id is K.HARM_RES_A:
            lhs = (
                rs_b.s_right @ rp.ddelta
                + rs.ddelta @ rp_b.s_left
                + (rs.d_res @ rp.delta_left) * 0.5
                + (rs.delta_right @ rp.d_res) * 0.5
            )
        else:
            lhs = (
                SRs @ rp.ddelta
                + rs.ddelta @ SLp
                + (rs.d_res @ rp_b.delta_left) * 0.5
                + (rs_b.delta_right @ rp.d_res) * 0.5
            )
        return lhs, rhs
    raise ValueError(f"unknown identity {id}")


def check_identity(
    id: IdentityId,
    T: ParavectorOperator,
    s: Paravector,
    p: Paravector | None = None,
    B: CliffordOperator | None = None,
    tol: float = DEFAULT_TOL,
) -> IdentityResidual:
    """Evaluate both sides of ``id`` at (T, s, p[, B]) and return the scaled residual."""
    ensure_off_spectrum(T, s)
    if id.arity != "s":
        if p is None:
            raise ValueError(f"{id.name} needs a second point p")
        ensure_off_spectrum(T, p)
        if on_sphere(s, p):
            raise SphereCollision(f"s={s!r} lies on the sphere of p={p!r}")
    if id.arity == "spB":
        if B is None:
            B = CliffordOperator.identity(T.d, T.n)
        if not _commutes(B, T.op):
            raise NonCommutingB("B does not commute with T")
    lhs, rhs = _sides(id, T, s, p, B)
    return residual_of(id.name, id.anchor, digest(T, s, p, B), lhs, rhs, tol)


# ---------------------------------------------------------------------------
# B operators commuting with T

def commuting_b(T: ParavectorOperator, rng: np.random.Generator, degree: int = 2) -> CliffordOperator:
    """Random operator commuting with T.

    Sum of: real-coefficient polynomial in T and T_bar, a real matrix polynomial
    in the components T1..Tn, and (for odd n) the same real polynomial times the
    central pseudoscalar e_1...e_n.
    """
    d, n = T.d, T.n
    Top, Tb = T.op, conj_operator(T).op
    B = CliffordOperator.identity(d, n) * rng.standard_normal()
    power = CliffordOperator.identity(d, n)
    for _ in range(degree):
        power = power @ Top
        B = B + power * rng.standard_normal()
    B = B + (Top @ Tb) * rng.standard_normal() + Tb * rng.standard_normal()
    real = np.zeros((d, d))
    for k in range(1, n + 1):
        real += rng.standard_normal() * T.components[k]
    real += 0.5 * rng.standard_normal() * T.components[1] @ T.components[n]
    R = CliffordOperator.from_real(real, n)
    B = B + R
    if n % 2 == 1:
        B = B + R.lscale(Multivector.blade(*range(1, n + 1), n=n))
    return B


# ---------------------------------------------------------------------------
# seeded sampler and sweeps

@dataclass
class SamplerConfig:
    n_samples: int = 50
    seed: int = 0
    spectrum_margin: float = 0.1  # times the spectral scale
    pair_margin: float = 0.05  # times the spectral scale
    box_factor: float = 2.0
    max_rejections: int = 1000


class PointSampler:
    """Draws admissible (s, p) pairs around the S-spectrum of T by rejection."""

    def __init__(self, T: ParavectorOperator, config: SamplerConfig):
        self.T = T
        self.cfg = config
        self.spheres = s_spectrum(T)
        self.scale = max(1.0, max(np.hypot(sp.center, sp.radius) for sp in self.spheres))
        self.rng = np.random.default_rng(config.seed)

    def _point(self) -> Paravector:
        r = self.cfg.box_factor * self.scale
        s0 = self.rng.uniform(-r, r)
        rad = self.rng.uniform(0.0, r)
        J = UnitImaginary.random(self.rng, self.T.n)
        return Paravector.from_slice(s0, rad, J)

    def _admissible(self, x: Paravector) -> bool:
        return spectrum_distance(x, self.spheres) >= self.cfg.spectrum_margin * self.scale

    def draw(self) -> tuple[Paravector, Paravector]:
        misses = 0
        while True:
            s, p = self._point(), self._point()
            gap = np.hypot(s.x0 - p.x0, s.vector_norm - p.vector_norm)
            if self._admissible(s) and self._admissible(p) and gap >= self.cfg.pair_margin * self.scale:
                return s, p
            misses += 1
            if misses >= self.cfg.max_rejections:
                raise SamplerExhausted(f"{misses} consecutive rejections")


def sweep(
    id: IdentityId,
    T: ParavectorOperator,
    config: SamplerConfig | None = None,
    tol: float = DEFAULT_TOL,
    parallel: bool = False,
    b_factory: Callable[[ParavectorOperator, np.random.Generator], CliffordOperator] = commuting_b,
) -> list[IdentityResidual]:
    """Residuals of ``id`` over seeded random admissible points, ordered by sample index."""
    config = config or SamplerConfig()
    sampler = PointSampler(T, config)
    b_rng = np.random.default_rng([config.seed, 1])
    jobs = []
    for _ in range(config.n_samples):
        s, p = sampler.draw()
        B = b_factory(T, b_rng) if id.arity == "spB" else None
        jobs.append((s, p, B))

    def run(job):
        s, p, B = job
        return check_identity(id, T, s, p if id.arity != "s" else None, B, tol)

    if parallel and len(jobs) > 1:
        with ThreadPoolExecutor() as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def random_operator(
    rng: np.random.Generator, d: int, n: int = 5, scale: float = 1.0, similar: bool = True
) -> ParavectorOperator:
    """Random T with T0 = 0, real joint eigenvalues and (optionally) a non-trivial eigenbasis."""
    from .operators import make_commuting_operator, random_basis

    eigs = np.zeros((d, 6))
    eigs[:, 1 : n + 1] = scale * rng.standard_normal((d, n))
    V = random_basis(rng, d) if similar else None
    return make_commuting_operator(eigs, V, n)
