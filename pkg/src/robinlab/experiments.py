"""Shape families, thinning sweeps and mesh-convergence studies.

All writers use fixed float formatting (17 significant digits) and a fixed
row order so that repeated runs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0, j1, jn_zeros

from .audit import FunctionalReport, InequalityAuditRecord, audit, dirichlet_audit, fmt
from .errors import BadParameter
from .fem import dirichlet_torsion, robin_eigenvalue, robin_torsion
from .geometry import ConvexPolygon, random_convex_polygon, read_polygon, rectangle, regular_polygon

__all__ = [
    "FAMILIES",
    "SweepConfig",
    "SweepRow",
    "SweepReport",
    "family_members",
    "battery",
    "disk_robin_eigenvalue",
    "run_audit",
    "run_sweep",
    "run_convergence",
    "convergence_table",
    "TREND_COLUMNS",
]

FAMILIES = ("rectangles", "slabs", "regular_polygons", "random")
EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


@dataclass(frozen=True)
class SweepConfig:
    family: str
    betas: tuple[float, ...]
    params: dict = field(default_factory=dict)
    levels: int = 3
    out: str = "sweep_out"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise BadParameter(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not self.betas or any(not (b > 0) for b in self.betas):
            raise BadParameter("betas must be a nonempty list of positive numbers")
        if int(self.levels) != self.levels or self.levels < 3:
            raise BadParameter("levels must be an integer >= 3")
        widths = self.params.get("widths")
        if widths is not None:
            if not widths:
                raise BadParameter("widths must be nonempty")
            if any(b >= a for a, b in zip(widths, widths[1:])):
                raise BadParameter("widths must be strictly decreasing")
        # touching the members validates the remaining parameters early
        family_members(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {"family", "betas", "params", "levels", "out"}
        extra = set(d) - known
        if extra:
            raise BadParameter(f"unknown config keys: {sorted(extra)}")
        if "family" not in d or "betas" not in d:
            raise BadParameter("config needs 'family' and 'betas'")
        return cls(
            family=d["family"],
            betas=tuple(float(b) for b in d["betas"]),
            params=dict(d.get("params", {})),
            levels=int(d.get("levels", 3)),
            out=str(d.get("out", "sweep_out")),
        )

    @classmethod
    def load(cls, path) -> "SweepConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def family_members(cfg: SweepConfig) -> list[tuple[float, ConvexPolygon]]:
    """(parameter, polygon) pairs, parameter descending."""
    p = cfg.params
    if cfg.family == "rectangles":
        b = float(p.get("height", 1.0))
        members = [(float(a), rectangle(float(a), b)) for a in p.get("widths", [0.5, 0.25, 0.125, 0.0625])]
    elif cfg.family == "slabs":
        # truncation of a slab of fixed thickness; the parameter is thickness/length
        d = float(p.get("thickness", 1.0))
        members = [(float(e), rectangle(d, d / float(e))) for e in p.get("widths", [0.5, 0.25, 0.125, 0.0625])]
    elif cfg.family == "regular_polygons":
        area = float(p.get("area", 1.0))
        ks = [int(k) for k in p.get("ks", [8, 16, 32, 64])]
        if any(k < 3 for k in ks):
            raise BadParameter("regular polygons need k >= 3")
        members = [(float(k), regular_polygon(k, area=area)) for k in ks]
    else:
        seeds = [int(s) for s in p.get("seeds", list(range(10)))]
        m = int(p.get("vertex_count", 8))
        asp = float(p.get("aspect", 0.5))
        members = [(float(s), random_convex_polygon(s, m, asp)) for s in seeds]
    if not members:
        raise BadParameter("family has no members")
    return sorted(members, key=lambda x: -x[0])


def battery(count: int = 50) -> list[ConvexPolygon]:
    """The seeded random-polygon battery used by the acceptance suite."""
    out = []
    for seed in range(count):
        m = 3 + seed % 10
        aspect = 0.15 + 0.85 * ((seed * 0.6180339887498949) % 1.0)
        out.append(random_convex_polygon(seed, m, aspect))
    return out


def disk_robin_eigenvalue(beta: float, radius: float) -> float:
    """First Robin eigenvalue of a disk: x J1(x) / J0(x) = beta * radius, lambda = (x/radius)^2."""
    if not (beta > 0 and radius > 0):
        raise BadParameter("beta and radius must be positive")
    top = float(jn_zeros(0, 1)[0])
    target = beta * radius
    x = brentq(lambda x: x * j1(x) / j0(x) - target, 1e-12, top * (1 - 1e-15), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return (x / radius) ** 2


# ---------------------------------------------------------------------------
# sweeps

TREND_COLUMNS = (
    "family",
    "param",
    "beta",
    "R",
    "A",
    "T_robin",
    "lambda_robin",
    "makai",
    "polya_T",
    "polya_L",
    "ratio1",
    "ratio2",
    "ratio_floor",
    "makai_deficit",
    "makai_deficit_over_R",
    "polya_deficit",
    "polya_deficit_over_R",
    "polya_deficit_over_R3",
    "eigen_deficit",
    "eigen_deficit_over_R",
    "eigen_deficit_over_R4",
    "explicit_deficit",
    "polya_deficit_over_A",
    "explicit_deficit_over_A",
    "disk_lambda",
    "n_fail",
)


@dataclass(frozen=True)
class SweepRow:
    family: str
    param: float
    beta: float
    report: FunctionalReport
    record: InequalityAuditRecord
    disk_lambda: float = math.nan

    def trend(self) -> dict:
        rep = self.report
        m = rep.metrics
        R, A, q = m.remainder_R, m.remainder_A, rep.q
        makai_def = q - rep.makai
        polya_def = rep.polya_T - q
        eig_def = (rep.nu1_at_s0 - rep.lambda_robin.value) * rep.s0**2
        expl_def = (math.pi**2 / 4.0) / (1.0 + 2.0 / (m.inradius * rep.beta)) - rep.polya_L
        return {
            "family": self.family,
            "param": self.param,
            "beta": rep.beta,
            "R": R,
            "A": A,
            "T_robin": rep.T_robin.value,
            "lambda_robin": rep.lambda_robin.value,
            "makai": rep.makai,
            "polya_T": rep.polya_T,
            "polya_L": rep.polya_L,
            "ratio1": rep.makai / q,
            "ratio2": rep.polya_T / q,
            "ratio_floor": 1.0 / (1.0 + R) ** 2,
            "makai_deficit": makai_def,
            "makai_deficit_over_R": makai_def / R,
            "polya_deficit": polya_def,
            "polya_deficit_over_R": polya_def / R,
            "polya_deficit_over_R3": polya_def / R**3,
            "eigen_deficit": eig_def,
            "eigen_deficit_over_R": eig_def / R,
            "eigen_deficit_over_R4": eig_def / R**4,
            "explicit_deficit": expl_def,
            "polya_deficit_over_A": polya_def / A,
            "explicit_deficit_over_A": expl_def / A,
            "disk_lambda": self.disk_lambda,
            "n_fail": len(self.record.failures()),
        }


@dataclass(frozen=True)
class SweepReport:
    config: SweepConfig
    rows: tuple[SweepRow, ...]

    def trends(self) -> list[dict]:
        return [r.trend() for r in self.rows]

    def failures(self) -> list[tuple[SweepRow, object]]:
        return [(r, e) for r in self.rows for e in r.record.failures()]

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"trend": out / "trend.csv", "audit": out / "audit.csv", "reports": out / "reports.json"}
        with open(paths["trend"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TREND_COLUMNS)
            for t in self.trends():
                w.writerow([fmt(t[c]) for c in TREND_COLUMNS])
        with open(paths["audit"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("family", "param", "beta", "id", "lhs", "rhs", "margin", "budget", "status"))
            for r in self.rows:
                for row in r.record.rows():
                    w.writerow([r.family, fmt(r.param), fmt(r.beta)] + row)
        meta = {
            "family": self.config.family,
            "params": self.config.params,
            "betas": list(self.config.betas),
            "levels": self.config.levels,
            "note": "slabs and rectangles are bounded rectangle truncations of unbounded slabs"
            if self.config.family in ("rectangles", "slabs")
            else "",
            "rows": [
                {"param": r.param, "beta": r.beta, "report": r.report.as_dict(), "audit": [e.as_dict() for e in r.record]}
                for r in self.rows
            ],
        }
        with open(paths["reports"], "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return paths


def sweep(cfg: SweepConfig) -> SweepReport:
    rows = []
    for param, poly in family_members(cfg):
        dirichlet = dirichlet_torsion(poly, cfg.levels)
        for beta in cfg.betas:
            rep, rec = audit(poly, beta, cfg.levels, dirichlet=dirichlet)
            disk = math.nan
            if cfg.family == "regular_polygons":
                disk = disk_robin_eigenvalue(beta, math.sqrt(rep.metrics.area / math.pi))
            rows.append(SweepRow(cfg.family, param, beta, rep, rec, disk))
    return SweepReport(cfg, tuple(rows))


def run_sweep(config_file, out: str | None = None, levels: int | None = None) -> tuple[SweepReport, dict]:
    cfg = SweepConfig.load(config_file)
    if levels is not None or out is not None:
        cfg = SweepConfig(cfg.family, cfg.betas, cfg.params, levels or cfg.levels, out or cfg.out)
    rep = sweep(cfg)
    return rep, rep.write(cfg.out)


# ---------------------------------------------------------------------------
# single-shape audit


def run_audit(polygon_file, beta: float, levels: int = 3, out: str = "audit_out") -> tuple[int, dict]:
    """Audit one polygon; returns (exit code, written paths). Exit 2 on any FAIL."""
    poly = read_polygon(polygon_file)
    rep, rec = audit(poly, beta, levels)
    drec = dirichlet_audit(poly, levels, dirichlet=(rep.T_dirichlet, rep.M_dirichlet))
    full = rec.merged(drec)
    outp = Path(out)
    outp.mkdir(parents=True, exist_ok=True)
    paths = {"report": outp / "report.json", "audit": outp / "audit.csv"}
    with open(paths["report"], "w") as fh:
        fh.write(rep.to_json())
        fh.write("\n")
    full.write_csv(paths["audit"])
    return (EXIT_FAIL if full.failures() else EXIT_OK), paths


# ---------------------------------------------------------------------------
# convergence

CONVERGENCE_COLUMNS = ("quantity", "level", "h", "value", "observed_order", "extrapolated")


def _orders(vals) -> list[float]:
    out = [math.nan, math.nan]
    for v1, v2, v3 in zip(vals, vals[1:], vals[2:]):
        d1, d2 = v1 - v2, v2 - v3
        out.append(math.log2(d1 / d2) if d1 * d2 > 0 else math.nan)
    return out


def _extrap(vals, orders) -> list[float]:
    out = [math.nan, math.nan]
    for k in range(2, len(vals)):
        p = orders[k]
        out.append(vals[k] + (vals[k] - vals[k - 1]) / (2**p - 1) if math.isfinite(p) and p > 0 else math.nan)
    return out


def convergence_table(poly: ConvexPolygon, beta: float, max_level: int) -> list[dict]:
    if int(max_level) != max_level or max_level < 3:
        raise BadParameter("max_level must be an integer >= 3")
    rows = []
    for name, res in (
        ("T_robin", robin_torsion(poly, beta, max_level)),
        ("lambda_robin", robin_eigenvalue(poly, beta, max_level)),
    ):
        vals = list(res.level_values)
        orders = _orders(vals)
        ext = _extrap(vals, orders)
        for k, (h, v) in enumerate(zip(res.level_h, vals)):
            rows.append({"quantity": name, "level": k, "h": h, "value": v, "observed_order": orders[k], "extrapolated": ext[k]})
    return rows


def run_convergence(polygon_file, beta: float, max_level: int = 4, out: str = "converge_out") -> tuple[list[dict], Path]:
    poly = read_polygon(polygon_file)
    rows = convergence_table(poly, beta, max_level)
    outp = Path(out)
    outp.mkdir(parents=True, exist_ok=True)
    path = outp / "convergence.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONVERGENCE_COLUMNS)
        for r in rows:
            w.writerow([r["quantity"], str(r["level"])] + [fmt(r[c]) for c in CONVERGENCE_COLUMNS[2:]])
    return rows, path
