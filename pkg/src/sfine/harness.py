"""Batch verification harness: configuration, suites, reports and serialization."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterable

import numpy as np

from . import __version__
from .calculus import (
    CalculusKind,
    apply,
    default_contour,
    product_rule_check_biharmonic,
    product_rule_check_harmonic,
    riesz_projector,
)
from .clifford import Multivector, Paravector, UnitImaginary
from .contour import Contour
from .errors import ConfigInvalid, SfineError
from .fueter import (
    Box,
    check_fine_structure_chain,
    check_kernel_identity_D,
    check_kernel_identity_DDelta,
)
from .operators import CliffordOperator, ParavectorOperator, make_commuting_operator
from .resolvents import IdentityId, SamplerConfig, _sides, digest, random_operator, residual_of, sweep
from .slice import StemPolynomial

SUITES = ("identities", "calculus", "kernels")
ORDER_MIN = 1.8


# ---------------------------------------------------------------------------
# configuration

@dataclass
class HarnessConfig:
    n: int = 5
    d: list = field(default_factory=lambda: [2])
    seed: int = 0
    eigs: list | None = None  # explicit eigenvalue table (d rows of up to 6 reals)
    samples: int = 50
    radius_factor: float = 2.0
    nodes: int = 256
    tol_identities: float = 1e-9
    tol_calculus: float = 1e-7
    tol_kernels: float = ORDER_MIN  # minimum empirical order
    kernel_probes: int = 100
    suites: list = field(default_factory=lambda: list(SUITES))
    negative_controls: bool = False
    parallel: bool = False
    timings: bool = False
    output: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> HarnessConfig:
        if not isinstance(data, dict):
            raise ConfigInvalid("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> HarnessConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def validate(self) -> None:
        if isinstance(self.d, int):
            self.d = [self.d]
        checks = [
            (self.n in (1, 2, 3, 4, 5), "n must be in 1..5"),
            (all(isinstance(k, int) and 1 <= k <= 16 for k in self.d) and self.d, "d must be ranks in 1..16"),
            (isinstance(self.seed, int) and self.seed >= 0, "seed must be a non-negative integer"),
            (isinstance(self.samples, int) and self.samples >= 1, "samples must be >= 1"),
            (self.radius_factor > 1.0, "radius_factor must exceed 1"),
            (isinstance(self.nodes, int) and self.nodes >= 8 and self.nodes % 2 == 0, "nodes must be even and >= 8"),
            (self.tol_identities > 0 and self.tol_calculus > 0 and self.tol_kernels > 0, "tolerances must be positive"),
            (isinstance(self.kernel_probes, int) and self.kernel_probes >= 1, "kernel_probes must be >= 1"),
            (all(s in SUITES for s in self.suites), f"suites must be drawn from {SUITES}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigInvalid(msg)
        if self.eigs is not None:
            try:
                T = make_commuting_operator(self.eigs, None, self.n)
            except (SfineError, TypeError) as exc:
                raise ConfigInvalid(f"eigenvalue table rejected: {exc}") from exc
            self.d = [T.d]

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("output")
        return out


# ---------------------------------------------------------------------------
# records and reports

@dataclass
class Record:
    suite: str
    name: str
    anchor: str
    inputs: str
    residual: float
    tolerance: float
    passed: bool
    control: bool = False
    detail: str = ""
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        """Passing check, or a control that failed as intended."""
        return (not self.passed) if self.control else self.passed


@dataclass
class Report:
    config: dict
    records: list[Record] = field(default_factory=list)
    version: str = __version__

    @property
    def summary(self) -> dict:
        checks = [r for r in self.records if not r.control]
        controls = [r for r in self.records if r.control]
        return {
            "total": len(self.records),
            "passed": sum(r.passed for r in checks),
            "failed": sum(not r.passed for r in checks),
            "controls": len(controls),
            "controls_rejected": sum(not r.passed for r in controls),
        }

    @property
    def exit_code(self) -> int:
        return 0 if all(r.passed for r in self.records if not r.control) else 1


def _timed(fn: Callable[[], Record | list[Record]], suite: str, name: str, anchor: str, control: bool = False):
    """Run one check; any exception becomes a failed record carrying the reason."""
    t0 = time.perf_counter()
    try:
        out = fn()
    except Exception as exc:  # record-and-continue
        out = Record(suite, name, anchor, "", math.nan, math.nan, False, control, f"{type(exc).__name__}: {exc}")
    dt = time.perf_counter() - t0
    recs = out if isinstance(out, list) else [out]
    for r in recs:
        r.wall_time = dt / len(recs)
    return recs


def _run_all(jobs: list[Callable[[], list[Record]]], parallel: bool) -> list[Record]:
    if parallel and len(jobs) > 1:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda j: j(), jobs))
    else:
        results = [j() for j in jobs]
    return [r for group in results for r in group]


# ---------------------------------------------------------------------------
# suites

def _operator(cfg: HarnessConfig, d: int, salt: int = 0) -> ParavectorOperator:
    if cfg.eigs is not None:
        return make_commuting_operator(cfg.eigs, None, cfg.n)
    rng = np.random.default_rng([cfg.seed, d, salt])
    return random_operator(rng, d, cfg.n)


def identity_jobs(cfg: HarnessConfig) -> list[Callable[[], list[Record]]]:
    jobs = []
    for d in cfg.d:
        for ident in IdentityId:
            def job(ident=ident, d=d):
                def check():
                    T = _operator(cfg, d)
                    res = sweep(ident, T, SamplerConfig(n_samples=cfg.samples, seed=cfg.seed), cfg.tol_identities)
                    worst = max(r.relative for r in res)
                    return Record(
                        "identities", f"{ident.name} d={d}", ident.anchor, digest(T, cfg.seed, cfg.samples),
                        worst, cfg.tol_identities, worst < cfg.tol_identities,
                        detail=f"{len(res)} samples",
                    )
                return _timed(check, "identities", f"{ident.name} d={d}", ident.anchor)
            jobs.append(job)
            if cfg.negative_controls and ident is IdentityId.DELTA_LEFT_EQ:
                jobs.append(lambda d=d: _timed(lambda: _identity_control(cfg, d), "identities",
                                               f"control DELTA_LEFT_EQ d={d}", "rK1", True))
    return jobs


def _identity_control(cfg: HarnessConfig, d: int) -> Record:
    """DELTA_LEFT_EQ with the constant -8 replaced by -4 on the right-hand side."""
    T = _operator(cfg, d)
    s = Paravector.from_slice(0.5, 2.0 * max(1.0, T.spectral_radius()), UnitImaginary.axis(1, T.n))
    lhs, rhs = _sides(IdentityId.DELTA_LEFT_EQ, T, s, None, None)
    res = residual_of("control", "rK1", digest(T, s), lhs, rhs * 0.5, cfg.tol_identities)
    return Record("identities", f"control DELTA_LEFT_EQ d={d}", "rK1", res.inputs, res.relative,
                  cfg.tol_identities, res.passed, True, "right-hand constant -4 instead of -8")


def two_sphere_operator(n: int = 5, radii=(1.0, 3.0)) -> ParavectorOperator:
    """Diagonal operator with eigenvalue spheres of the given radii centred at 0."""
    eigs = np.zeros((len(radii), 6))
    for k, r in enumerate(radii):
        eigs[k, 1 + (k % n)] = r
    return make_commuting_operator(eigs, None, n)


def _rel(a: CliffordOperator, b: CliffordOperator) -> float:
    return (a - b).norm() / max(b.norm(), 1.0)


def calculus_jobs(cfg: HarnessConfig) -> list[Callable[[], list[Record]]]:
    tol = cfg.tol_calculus
    T = two_sphere_operator(cfg.n)
    contour = default_contour(T, nodes=cfg.nodes, factor=cfg.radius_factor)
    key = digest(T, contour.key())
    jobs = []

    def poly(m):
        def check():
            P = CliffordOperator.identity(T.d, T.n)
            for _ in range(m):
                P = P @ T.op
            err = _rel(apply(CalculusKind.S, StemPolynomial.monomial(m), T, contour), P)
            return Record("calculus", f"S reproduction z^{m}", "Sfun", key,
                          err, tol, err < tol)
        return lambda: _timed(check, "calculus", f"S reproduction z^{m}", "Sfun")

    jobs += [poly(m) for m in range(5)]

    def independence():
        rng = np.random.default_rng(cfg.seed)
        f = StemPolynomial.real([1.0, -0.5, 0.25, 0.0, 0.1])
        base = apply(CalculusKind.D, f, T, contour)
        worst = 0.0
        for _ in range(5):
            J = UnitImaginary.random(rng, T.n)
            worst = max(worst, _rel(apply(CalculusKind.D, f, T, contour.with_J(J)), base))
        worst = max(worst, _rel(apply(CalculusKind.D, f, T, contour.scaled(1.3)), base))
        return Record("calculus", "slice and contour independence", "Sfun", key, worst, 1e-9, worst < 1e-9)

    jobs.append(lambda: _timed(independence, "calculus", "slice and contour independence", "Sfun"))

    def constant_D():
        val = apply(CalculusKind.D, StemPolynomial.real([1.0]), T, contour).norm()
        return Record("calculus", "D calculus annihilates constants", "bih", key, val, 1e-10, val < 1e-10)

    jobs.append(lambda: _timed(constant_D, "calculus", "D calculus annihilates constants", "bih"))

    def rules(trial):
        def check():
            rng = np.random.default_rng([cfg.seed, 7, trial])
            Tt = _operator(cfg, 2, salt=100 + trial)
            c = default_contour(Tt, nodes=cfg.nodes, factor=cfg.radius_factor)
            f, g = random_stem_pair(rng, Tt.n)
            out = []
            for label, anchor, pair in (
                ("biharmonic product rule", "D prod. rule", product_rule_check_biharmonic(f, g, Tt, c, tol)),
                ("harmonic product rule", "DDelta prod. rule", product_rule_check_harmonic(f, g, Tt, c, tol)),
            ):
                anchors = ("one", "second") if anchor == "DDelta prod. rule" else (anchor, anchor)
                for variant, a, r in zip(("a", "b"), anchors, pair):
                    out.append(Record("calculus", f"{label} {variant} #{trial}", a, r.inputs,
                                      r.relative, tol, r.passed))
            return out
        return lambda: _timed(check, "calculus", f"product rules #{trial}", "D prod. rule")

    jobs += [rules(k) for k in range(4)]

    def projector(kind, anchor):
        def check():
            Tp = two_sphere_operator(cfg.n)
            J = UnitImaginary.axis(1, cfg.n)
            pair = riesz_projector(kind, Tp, Contour(0.0, 2.0, J, cfg.nodes), Contour(0.0, 2.5, J, cfg.nodes))
            idem = pair.idempotency()
            return [
                Record("calculus", f"{kind.value} projector idempotency", anchor, digest(Tp), idem, tol, idem < tol),
                Record("calculus", f"{kind.value} projector G1/G2 agreement", anchor, digest(Tp),
                       pair.agreement, tol, pair.agreement < tol),
            ]
        return lambda: _timed(check, "calculus", f"{kind.value} projector", anchor)

    jobs.append(projector(CalculusKind.D, "D-Riesz projectors"))
    jobs.append(projector(CalculusKind.DDelta, "DDelta-Riesz projectors"))

    if cfg.negative_controls:
        def control():
            val = apply(CalculusKind.D, StemPolynomial.monomial(1), T, contour)
            err = _rel(val, CliffordOperator.identity(T.d, T.n) * -3.0)
            return Record("calculus", "control D(z) = -3", "bih", key, err, tol, err < tol, True,
                          "D of the identity function compared with -3 instead of -4")
        jobs.append(lambda: _timed(control, "calculus", "control D(z) = -3", "bih", True))
    return jobs


def random_stem_pair(rng: np.random.Generator, n: int = 5, max_degree: int = 4):
    """Intrinsic f and Clifford-coefficient left g, degrees <= max_degree."""
    df, dg = rng.integers(0, max_degree + 1, size=2)
    f = StemPolynomial.real(rng.standard_normal(df + 1))
    g_coeffs = []
    for _ in range(dg + 1):
        c = np.zeros(32)
        c[0] = rng.standard_normal()
        c[1 : n + 1] = rng.standard_normal(n) * 0.5
        g_coeffs.append(Multivector(c, n))
    return f, StemPolynomial(tuple(g_coeffs))


DEFAULT_KERNEL_POINT = Paravector(0.3, [0.5, 0.2, 0.0, 0.0, 0.0])


def kernel_jobs(cfg: HarnessConfig) -> list[Callable[[], list[Record]]]:
    s = DEFAULT_KERNEL_POINT
    box = Box.cube()
    order_min = cfg.tol_kernels
    jobs = []

    def curve_record(name, anchor, curve, control=False):
        order = curve.order
        finest = curve.residuals[-1]
        extrap_ok = curve.extrapolated <= 0.1 * finest
        passed = bool(order >= order_min and extrap_ok)
        detail = f"order={order:.3f} extrapolated={curve.extrapolated:.3e} residuals={curve.residuals}"
        return Record("kernels", name, anchor, f"s={s.point.tolist()} seed={cfg.seed}", finest, order_min,
                      passed, control, detail)

    for side in ("left", "right"):
        jobs.append(lambda side=side: _timed(
            lambda: curve_record(f"D kernel identity ({side})", "eq",
                                 check_kernel_identity_D(s, box, side=side, n_probes=cfg.kernel_probes, seed=cfg.seed)),
            "kernels", f"D kernel identity ({side})", "eq"))
        jobs.append(lambda side=side: _timed(
            lambda: curve_record(f"D Lap kernel identity ({side})", "H2",
                                 check_kernel_identity_DDelta(s, box, side=side, n_probes=cfg.kernel_probes,
                                                              seed=cfg.seed)),
            "kernels", f"D Lap kernel identity ({side})", "H2"))

    def chain(label, f, expect_exact):
        def check():
            rep = check_fine_structure_chain(f, box, n_probes=cfg.kernel_probes, seed=cfg.seed)
            out = []
            for c in rep.curves:
                if expect_exact:
                    passed = rep.exact(c.identity)
                    detail = f"exact={passed} residuals={c.residuals}"
                else:
                    passed = bool(c.order >= order_min)
                    detail = f"order={c.order:.3f} residuals={c.residuals}"
                out.append(Record("kernels", f"chain {c.identity} f={label}", "FSconsequence",
                                  f"seed={cfg.seed}", max(c.residuals), order_min if not expect_exact else 0.0,
                                  passed, False, detail))
            return out
        return lambda: _timed(check, "kernels", f"chain f={label}", "FSconsequence")

    jobs.append(chain("z^4", StemPolynomial.monomial(4), False))
    jobs.append(chain("1", StemPolynomial.real([1.0]), True))
    jobs.append(chain("z", StemPolynomial.monomial(1), True))

    if cfg.negative_controls:
        def control():
            curve = check_kernel_identity_D(s, box, constant=-3.0, n_probes=cfg.kernel_probes, seed=cfg.seed)
            return curve_record("control D kernel constant -3", "eq", curve, True)
        jobs.append(lambda: _timed(control, "kernels", "control D kernel constant -3", "eq", True))
    return jobs


SUITE_JOBS = {"identities": identity_jobs, "calculus": calculus_jobs, "kernels": kernel_jobs}


def run(config: HarnessConfig) -> Report:
    """Execute the selected suites; individual failures never abort the batch."""
    config.validate()
    report = Report(config.echo())
    for suite in SUITES:
        if suite in config.suites:
            report.records += _run_all(SUITE_JOBS[suite](config), config.parallel)
    return report


# ---------------------------------------------------------------------------
# serialization

RECORD_FIELDS = [f.name for f in fields(Record)]


def _num(x: float) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _dump(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, int, float, np.floating, np.integer)):
        return _num(obj.item() if hasattr(obj, "item") else obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_dump(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{_dump(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def record_dict(r: Record, timings: bool) -> dict:
    out = {k: getattr(r, k) for k in RECORD_FIELDS}
    if not timings:
        out.pop("wall_time")
    return out


def emit(report: Report, fmt: str = "json") -> bytes:
    """Serialize a report as canonical JSON (17 significant digits), CSV or a text table."""
    timings = bool(report.config.get("timings", False))
    if fmt == "json":
        doc = {
            "version": report.version,
            "config": report.config,
            "records": [record_dict(r, timings) for r in report.records],
            "summary": report.summary,
        }
        return (_dump(doc) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        cols = RECORD_FIELDS if timings else [c for c in RECORD_FIELDS if c != "wall_time"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in report.records:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in (getattr(r, c) for c in cols)])
        return buf.getvalue().encode()
    if fmt == "text":
        lines = [f"{'status':<8} {'suite':<11} {'residual':>12} {'tol':>10}  name"]
        for r in report.records:
            status = ("REJECTED" if not r.passed else "ACCEPTED") if r.control else ("PASS" if r.passed else "FAIL")
            lines.append(f"{status:<8} {r.suite:<11} {r.residual:>12.3e} {r.tolerance:>10.2e}  {r.name}")
        s = report.summary
        lines.append(
            f"{s['passed']} passed, {s['failed']} failed, {s['controls_rejected']}/{s['controls']} controls rejected"
        )
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def _undump(x):
    if isinstance(x, str) and x in ("nan", "inf", "-inf"):
        return float(x)
    return x


def parse_report(data: bytes | str) -> Report:
    """Inverse of emit(report, 'json')."""
    doc = json.loads(data)
    records = []
    for r in doc["records"]:
        vals = {k: _undump(v) for k, v in r.items()}
        records.append(Record(**vals))
    return Report(doc["config"], records, doc["version"])


def filter_records(records: Iterable[Record], suite: str) -> list[Record]:
    return [r for r in records if r.suite == suite]
