"""Inequality audits: evaluate every Robin/Dirichlet shape inequality on a polygon.

Each inequality becomes an :class:`AuditEntry` holding both sides, the signed
slack in the claimed direction (``margin``) and an error budget propagated
from the finite-element estimates. A failed inequality is data, not an error.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import jn_zeros

from .errors import BadParameter, NonPositiveInput
from .fem import RobinSpectralResult, dirichlet_torsion, robin_eigenvalue, robin_torsion
from .geometry import ConvexPolygon, InnerParallelProfile, ShapeMetrics, distance_moments, metrics, parallel_profile
from .onedim import nu1

__all__ = [
    "PASS",
    "PASS_WITHIN_BUDGET",
    "FAIL",
    "Constants",
    "constants",
    "AuditEntry",
    "InequalityAuditRecord",
    "FunctionalReport",
    "audit",
    "dirichlet_audit",
    "geometry_entries",
    "status_of",
]

PASS = "PASS"
PASS_WITHIN_BUDGET = "PASS_WITHIN_BUDGET"
FAIL = "FAIL"

# relative floor on every budget; covers round-off in the exact geometry
GEOM_RTOL = 1e-10
# conservative factor on first-order error propagation
BUDGET_SAFETY = 2.0
PROFILE_SAMPLES = 101

J01 = float(jn_zeros(0, 1)[0])


@dataclass(frozen=True)
class Constants:
    n: int
    beta: float
    r: float
    C1: float
    C2: float
    C3: float
    K1: float
    K2: float
    K2_p4: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("n", "beta", "r", "C1", "C2", "C3", "K1", "K2", "K2_p4")}


def _k2_base(n: int, beta: float, r: float) -> float:
    return (math.pi**2 / 4.0) / (1.0 + math.pi**2 * n / (4.0 * beta * r))


def constants(n: int, beta: float, r: float) -> Constants:
    """Explicit constants of the quantitative inequalities (K2 with exponent 2 and 4)."""
    if int(n) != n or n < 2:
        raise BadParameter(f"dimension must be an integer >= 2, got {n!r}")
    if not (beta > 0) or not (r > 0):
        raise BadParameter(f"beta and r must be positive, got beta={beta!r}, r={r!r}")
    n = int(n)
    c1 = (n + 1) / (3.0 * n * (2 * n - 1))
    c2 = 1.0 / (2**3 * 3**4 * n**3)
    c3 = 1.0 / (2 * 3**4 * math.pi * (2 * n - 1) * n**3)
    k1 = (math.pi**2 / 2.0) * math.sqrt(1.0 + (4.0 * beta**2 / math.pi**2) * (r**2 + math.pi**2 / (4.0 * beta) * r))
    base = _k2_base(n, beta, r)
    return Constants(n, beta, r, c1, c2, c3, k1, c3 * base**2, c3 * base**4)


def status_of(margin: float, budget: float) -> str:
    if margin >= 0:
        return PASS
    if margin >= -budget:
        return PASS_WITHIN_BUDGET
    return FAIL


@dataclass(frozen=True)
class AuditEntry:
    id: str
    lhs: float
    rhs: float
    relation: str
    margin: float
    budget: float
    status: str
    gating: bool = True
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "relation": self.relation,
            "margin": self.margin,
            "budget": self.budget,
            "status": self.status,
            "gating": self.gating,
            "note": self.note,
        }


CSV_COLUMNS = ("id", "lhs", "rhs", "margin", "budget", "status")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


@dataclass(frozen=True)
class InequalityAuditRecord:
    entries: tuple[AuditEntry, ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, key: str) -> AuditEntry:
        for e in self.entries:
            if e.id == key:
                return e
        raise KeyError(key)

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def failures(self, include_secondary: bool = False) -> list[AuditEntry]:
        return [e for e in self.entries if e.status == FAIL and (e.gating or include_secondary)]

    @property
    def ok(self) -> bool:
        return not self.failures()

    def merged(self, other: "InequalityAuditRecord") -> "InequalityAuditRecord":
        return InequalityAuditRecord(self.entries + other.entries)

    def rows(self) -> list[list[str]]:
        return [[e.id, fmt(e.lhs), fmt(e.rhs), fmt(e.margin), fmt(e.budget), e.status] for e in self.entries]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            w.writerows(self.rows())


def _fem_summary(res: RobinSpectralResult | None) -> dict | None:
    return None if res is None else res.as_dict()


@dataclass(frozen=True)
class FunctionalReport:
    beta: float
    metrics: ShapeMetrics
    profile: dict
    T_robin: RobinSpectralResult
    lambda_robin: RobinSpectralResult
    T_dirichlet: RobinSpectralResult
    M_dirichlet: RobinSpectralResult
    s0: float
    t0: float
    nu1_at_s0: float
    nu1_at_t0: float
    makai: float
    polya_T: float
    polya_L: float
    constants: Constants
    vertices: tuple = field(default=())

    @property
    def q(self) -> float:
        """Common Robin normalisation 1/3 + 1/(r beta)."""
        return 1.0 / 3.0 + 1.0 / (self.metrics.inradius * self.beta)

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "vertices": [list(v) for v in self.vertices],
            "metrics": self.metrics.as_dict(),
            "profile": self.profile,
            "T_robin": _fem_summary(self.T_robin),
            "lambda_robin": _fem_summary(self.lambda_robin),
            "T_dirichlet": _fem_summary(self.T_dirichlet),
            "M_dirichlet": _fem_summary(self.M_dirichlet),
            "s0": self.s0,
            "t0": self.t0,
            "nu1_at_s0": self.nu1_at_s0,
            "nu1_at_t0": self.nu1_at_t0,
            "makai": self.makai,
            "polya_T": self.polya_T,
            "polya_L": self.polya_L,
            "constants": self.constants.as_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# entry construction


def _margin(lhs: float, rhs: float, relation: str) -> float:
    return rhs - lhs if relation == "<=" else lhs - rhs


def _entry(id_, lhs, rhs, relation, budget=0.0, gating=True, note="") -> AuditEntry:
    lhs, rhs = float(lhs), float(rhs)
    m = _margin(lhs, rhs, relation)
    b = float(budget) + GEOM_RTOL * (abs(lhs) + abs(rhs))
    return AuditEntry(id_, lhs, rhs, relation, m, b, status_of(m, b), gating, note)


def _fem_entry(id_, sides: Callable[[dict], tuple[float, float]], relation, values, budgets, gating=True, note=""):
    """Entry whose sides depend on FEM values; budget by linearised sensitivity."""
    lhs, rhs = sides(values)
    total = 0.0
    for key, b in budgets.items():
        if not b > 0:
            continue
        step = min(b, 0.5 * abs(values[key]))
        up = dict(values, **{key: values[key] + step})
        dn = dict(values, **{key: values[key] - step})
        slope = abs(_margin(*sides(up), relation) - _margin(*sides(dn), relation)) / (2.0 * step)
        total += slope * b
    return _entry(id_, lhs, rhs, relation, BUDGET_SAFETY * total, gating, note)


def geometry_entries(m: ShapeMetrics, prof: InnerParallelProfile) -> list[AuditEntry]:
    """Inequalities that involve only the exact geometry."""
    n = m.dimension_n
    a, P, r, R = m.area, m.perimeter, m.inradius, m.remainder_R
    out = [
        _entry("convex_lower", P * r / a, 1.0, ">="),
        _entry("convex_upper", P * r / a, float(n), "<="),
        _entry("perdiam", P, math.pi * m.diameter, "<="),
        _entry("width_upper", r, m.min_width / 2.0, "<="),
        _entry("width_lower", r, m.min_width * math.sqrt(n + 2) / (2 * n + 2), ">="),
    ]
    tb = a / P
    out.append(_entry("q1", float(prof.mu(tb)), R / (6 * n) * a, ">="))
    out.append(_entry("q2", float(prof.perimeter_at(tb)), P / (1.0 + R / n), "<="))
    out.append(
        _entry("asym_R_over_A", R / m.remainder_A, 0.0, ">=", note="R >= K(n) A; K(n) not given, ratio recorded")
    )

    # sampled profile inequalities: strictly inside (0, r), plus every interval midpoint
    ev = prof.event_times
    ts = np.concatenate([r * np.arange(1, PROFILE_SAMPLES + 1) / (PROFILE_SAMPLES + 1), 0.5 * (ev[:-1] + ev[1:])])
    ts.sort()
    mu = np.asarray(prof.mu(ts), dtype=float)
    pt = np.asarray(prof.perimeter_at(ts), dtype=float)
    dp = np.asarray(prof.perimeter_slope(ts), dtype=float)

    def worst(id_, lhs, rhs, relation, note=""):
        marg = rhs - lhs if relation == "<=" else lhs - rhs
        k = int(np.argmin(marg))
        return _entry(id_, lhs[k], rhs[k], relation, note=note + f"worst at t={ts[k]:.6g}")

    out.append(worst("steiner", mu, a - P * ts, ">="))
    out.append(worst("profile_mu_upper", mu, pt * (r - ts), "<="))
    out.append(worst("measure_estimate1", mu, P * (r - ts) + (r - ts) ** 2 / (2 * (n - 1)) * dp, "<="))

    # concavity of P(t) (n=2): slopes must not increase across events
    slopes = prof.perimeter_coeffs[:, 1]
    jump = float(np.max(np.diff(slopes))) if len(slopes) > 1 else 0.0
    scale = float(np.max(np.abs(slopes)))
    out.append(_entry("perimeter_concavity", jump, 0.0, "<=", budget=1e-9 * scale, note="max slope jump"))
    return out


def _check_beta(beta):
    if not (beta > 0) or math.isnan(beta):
        raise NonPositiveInput(f"beta must be positive, got {beta!r}")


def audit(
    poly: ConvexPolygon,
    beta: float,
    fem_levels: int = 3,
    *,
    dirichlet: tuple[RobinSpectralResult, RobinSpectralResult] | None = None,
    base_h: float | None = None,
) -> tuple[FunctionalReport, InequalityAuditRecord]:
    """Audit every Robin inequality on ``poly``.

    ``dirichlet`` may carry a precomputed ``(T, M)`` pair so that sweeps over
    beta reuse one Dirichlet solve per shape.
    """
    _check_beta(beta)
    m = metrics(poly)
    prof = parallel_profile(poly)
    m1, m2 = distance_moments(prof)
    n = m.dimension_n
    a, P, r, R, A = m.area, m.perimeter, m.inradius, m.remainder_R, m.remainder_A
    c = constants(n, beta, r)

    tr = robin_torsion(poly, beta, fem_levels, base_h)
    ev = robin_eigenvalue(poly, beta, fem_levels, base_h)
    td, md = dirichlet if dirichlet is not None else dirichlet_torsion(poly, fem_levels, base_h)

    vals = {"T": tr.value, "lam": ev.value, "TD": td.value, "M": md.value}
    buds = {"T": tr.budget(), "lam": ev.budget(), "TD": td.budget(), "M": md.budget()}
    q = 1.0 / 3.0 + 1.0 / (r * beta)
    s0 = a / P
    nu_s0 = nu1(beta, s0).nu1
    pol = (math.pi**2 / 4.0) / (1.0 + 2.0 / (r * beta))

    def t0_of(v):
        return math.sqrt(2.0 * v["M"])

    def eig_deficit(v):
        return (nu_s0 - v["lam"]) * s0**2

    def explicit_deficit(v):
        return pol - v["lam"] * s0**2

    def makai_deficit(v):
        return q - v["T"] / (r**2 * a)

    def polya_deficit(v):
        return v["T"] * P**2 / a**3 - q

    def fe(id_, sides, relation, **kw):
        return _fem_entry(id_, sides, relation, vals, buds, **kw)

    entries = [
        fe("dist_upper", lambda v: (v["T"], m2 + 2.0 * m1 / beta), "<="),
        fe("makai_upper", lambda v: (v["T"] / (r**2 * a), q), "<="),
        fe("polya_lower", lambda v: (v["T"] * P**2 / a**3, q), ">="),
        fe("profile_lower", lambda v: (v["T"], prof.J + a**2 / (beta * P)), ">="),
        fe("makai_sandwich_upper", lambda v: (makai_deficit(v), 2.0 * q * R), "<="),
        fe("makai_sandwich_lower", lambda v: (makai_deficit(v), c.C1 * R), ">="),
        fe("polya_sandwich_upper", lambda v: (polya_deficit(v), (n + 1) * q * R), "<="),
        fe("polya_sandwich_lower", lambda v: (polya_deficit(v), c.C2 * R**3), ">="),
        fe("eigen_upper", lambda v: (v["lam"], nu_s0), "<="),
        fe("eigen_lower_t0", lambda v: (v["lam"], nu1(beta, t0_of(v)).nu1), ">="),
        fe("eigen_sandwich_upper", lambda v: (eig_deficit(v), c.K1 * R), "<="),
        fe("eigen_sandwich_lower", lambda v: (eig_deficit(v), c.K2 * R**4), ">="),
        fe(
            "eigen_sandwich_lower_p4",
            lambda v: (eig_deficit(v), c.K2_p4 * R**4),
            ">=",
            gating=False,
            note="secondary: exponent 4 on the bracketed factor",
        ),
        fe("eigen_polya", lambda v: (explicit_deficit(v), c.C3 * _k2_base(n, beta, r) ** 2 * R**4), ">="),
        fe("eigen_explicit", lambda v: (v["lam"], pol * P**2 / a**2), "<="),
        fe("hersch_protter_robin", lambda v: (v["lam"], (math.pi / 2) ** 2 / (r + math.pi / (2 * beta)) ** 2), ">="),
        fe("ilaria_chain_upper", lambda v: (2.0 * v["M"], 3.0 * v["TD"] / a), ">="),
        fe("ilaria_chain_lower", lambda v: (3.0 * v["TD"] / a, a**2 / P**2), ">="),
        fe("asym_polya_T", lambda v: (polya_deficit(v) / A, 0.0), ">=", note="deficit/A ratio recorded"),
        fe("asym_polya_L", lambda v: (explicit_deficit(v) / A, 0.0), ">=", note="deficit/A ratio recorded"),
    ]
    entries.extend(geometry_entries(m, prof))

    t0 = t0_of(vals)
    report = FunctionalReport(
        beta=float(beta),
        metrics=m,
        profile=prof.summary(),
        T_robin=tr,
        lambda_robin=ev,
        T_dirichlet=td,
        M_dirichlet=md,
        s0=s0,
        t0=t0,
        nu1_at_s0=nu_s0,
        nu1_at_t0=nu1(beta, t0).nu1,
        makai=tr.value / (r**2 * a),
        polya_T=tr.value * P**2 / a**3,
        polya_L=ev.value * s0**2,
        constants=c,
        vertices=tuple(map(tuple, poly.vertices.tolist())),
    )
    return report, InequalityAuditRecord(tuple(entries))


def dirichlet_audit(
    poly: ConvexPolygon,
    fem_levels: int = 3,
    *,
    dirichlet: tuple[RobinSpectralResult, RobinSpectralResult] | None = None,
    eigen: RobinSpectralResult | None = None,
    base_h: float | None = None,
) -> InequalityAuditRecord:
    """The four classical Dirichlet functionals (I)-(IV), both sides each."""
    m = metrics(poly)
    n = m.dimension_n
    a, P, r = m.area, m.perimeter, m.inradius
    td, _ = dirichlet if dirichlet is not None else dirichlet_torsion(poly, fem_levels, base_h)
    lam = eigen if eigen is not None else robin_eigenvalue(poly, math.inf, fem_levels, base_h)
    vals = {"TD": td.value, "lamD": lam.value}
    buds = {"TD": td.budget(), "lamD": lam.budget()}

    def fe(id_, sides, relation):
        return _fem_entry(id_, sides, relation, vals, buds)

    def polya(v):
        return v["TD"] * P**2 / a**3

    def eig(v):
        return v["lamD"] * a**2 / P**2

    def mak(v):
        return v["TD"] / (r**2 * a)

    def hp(v):
        return v["lamD"] * r**2

    return InequalityAuditRecord(
        (
            fe("dirichlet_I_lower", lambda v: (polya(v), 1.0 / 3.0), ">="),
            fe("dirichlet_I_upper", lambda v: (polya(v), 2.0 / 3.0), "<="),
            fe("dirichlet_II_lower", lambda v: (eig(v), math.pi**2 / (4 * n**2)), ">="),
            fe("dirichlet_II_upper", lambda v: (eig(v), math.pi**2 / 4), "<="),
            fe("dirichlet_III_lower", lambda v: (mak(v), 1.0 / (n * (n + 2))), ">="),
            fe("dirichlet_III_upper", lambda v: (mak(v), 1.0 / 3.0), "<="),
            fe("dirichlet_IV_lower", lambda v: (hp(v), math.pi**2 / 4), ">="),
            fe("dirichlet_IV_upper", lambda v: (hp(v), J01**2), "<="),
        )
    )
