"""Planar convex polygons: exact metrics and inner parallel bodies.

A polygon is stored counterclockwise with collinear vertices removed and the
lexicographically smallest vertex first, so two polygons describing the same
region compare equal.

The inner parallel set ``Omega_t`` is the set of points at distance more than
``t`` from the boundary.  For a convex polygon it is again a convex polygon,
obtained by pushing every edge inward by ``t`` and intersecting the resulting
half-planes.  Between two consecutive instants at which an edge disappears the
area ``mu(t)`` of ``Omega_t`` is a quadratic polynomial and its perimeter
``P(t)`` is affine, which is what :func:`parallel_profile` exploits.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull

from .errors import (
    BadParameter,
    Degenerate,
    NegativeOffset,
    NonUnitDirection,
    NotConvex,
    TooFewVertices,
)

__all__ = [
    "ConvexPolygon",
    "ShapeMetrics",
    "InnerParallelProfile",
    "validate_polygon",
    "metrics",
    "support_width",
    "inner_parallel",
    "parallel_profile",
    "distance_moments",
    "random_convex_polygon",
    "rectangle",
    "regular_polygon",
    "polygon_from_json",
    "polygon_to_json",
    "read_polygon",
    "write_polygon",
    "distance_to_boundary",
    "sample_uniform",
]

COLLINEAR_TOL = 1e-12
DEGENERATE_TOL = 1e-14
EVENT_RTOL = 1e-12
MIN_INTERVAL = 1e-9
_EDGE_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Canonical convex polygon; build it with :func:`validate_polygon`."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __eq__(self, other):
        if not isinstance(other, ConvexPolygon):
            return NotImplemented
        return self.vertices.shape == other.vertices.shape and bool(
            np.array_equal(self.vertices, other.vertices)
        )

    def __hash__(self):
        return hash(self.vertices.tobytes())

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"ConvexPolygon({self.vertices.tolist()!r})"

    @property
    def scale(self) -> float:
        """Length of the bounding-box diagonal."""
        ext = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(math.hypot(*ext))

    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def half_planes(self) -> tuple[np.ndarray, np.ndarray]:
        """Outward unit normals ``n_i`` and offsets ``c_i`` with Omega = {n_i.x < c_i}."""
        e = self.edges()
        lengths = np.hypot(e[:, 0], e[:, 1])
        normals = np.column_stack([e[:, 1], -e[:, 0]]) / lengths[:, None]
        offsets = np.einsum("ij,ij->i", normals, self.vertices)
        return normals, offsets

    def scaled(self, factor: float) -> "ConvexPolygon":
        return validate_polygon(self.vertices * factor)

    def translated(self, shift) -> "ConvexPolygon":
        return validate_polygon(self.vertices + np.asarray(shift, dtype=float))


@dataclass(frozen=True)
class ShapeMetrics:
    area: float
    perimeter: float
    inradius: float
    incenter: tuple[float, float]
    diameter: float
    min_width: float
    remainder_R: float
    remainder_A: float
    dimension_n: int = 2

    def as_dict(self) -> dict:
        return {
            "area": self.area,
            "perimeter": self.perimeter,
            "inradius": self.inradius,
            "incenter": list(self.incenter),
            "diameter": self.diameter,
            "min_width": self.min_width,
            "remainder_R": self.remainder_R,
            "remainder_A": self.remainder_A,
            "dimension_n": self.dimension_n,
        }


@dataclass(frozen=True)
class InnerParallelProfile:
    """Area and perimeter of the inner parallel sets as piecewise polynomials.

    On ``[event_times[j], event_times[j+1]]``, with ``u = t - event_times[j]``,
    ``mu_coeffs[j] = (a, b, c)`` gives ``mu(t) = a + b u + c u**2`` and
    ``perimeter_coeffs[j] = (p, q)`` gives ``P(t) = p + q u``. Local
    coordinates keep short intervals far from 0 well conditioned.
    """

    event_times: np.ndarray
    mu_coeffs: np.ndarray
    perimeter_coeffs: np.ndarray
    area: float
    perimeter: float
    inradius: float
    I0: float
    I1: float
    J: float
    t_bar: float
    s_bar: float
    fit_residual: float = field(default=0.0)

    @property
    def n_intervals(self) -> int:
        return len(self.event_times) - 1

    def _interval(self, t: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.event_times, t, side="right") - 1
        return np.clip(idx, 0, self.n_intervals - 1)

    def mu(self, t):
        """Area of the inner parallel set at distance ``t`` (0 beyond the inradius)."""
        t = np.asarray(t, dtype=float)
        j = self._interval(t)
        a, b, c = self.mu_coeffs[j].T
        u = t - self.event_times[j]
        val = a + u * (b + c * u)
        val = np.where(t >= self.inradius, 0.0, val)
        return val if val.ndim else float(val)

    def perimeter_at(self, t):
        """Perimeter of the inner parallel set at distance ``t``."""
        t = np.asarray(t, dtype=float)
        j = self._interval(t)
        p, q = self.perimeter_coeffs[j].T
        val = p + q * (t - self.event_times[j])
        val = np.where(t > self.inradius, 0.0, val)
        return val if val.ndim else float(val)

    def perimeter_slope(self, t):
        """Right derivative of ``P`` (piecewise constant)."""
        t = np.asarray(t, dtype=float)
        val = self.perimeter_coeffs[self._interval(t), 1]
        return val if val.ndim else float(val)

    def summary(self) -> dict:
        return {
            "I0": self.I0,
            "I1": self.I1,
            "J": self.J,
            "t_bar": self.t_bar,
            "s_bar": self.s_bar,
            "event_times": self.event_times.tolist(),
        }


# ---------------------------------------------------------------------------
# construction and validation


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _shoelace(v: np.ndarray) -> float:
    w = np.roll(v, -1, axis=0)
    return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))


def _perimeter(v: np.ndarray) -> float:
    e = np.roll(v, -1, axis=0) - v
    return float(np.sum(np.hypot(e[:, 0], e[:, 1])))


def validate_polygon(points) -> ConvexPolygon:
    """Canonicalize ``points`` into a strictly convex counterclockwise polygon.

    Raises TooFewVertices, NotConvex or Degenerate.
    """
    v = np.asarray(points, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise BadParameter("points must be an (m, 2) array")
    if not np.all(np.isfinite(v)):
        raise BadParameter("points must be finite")
    if len(v) < 3:
        raise TooFewVertices(f"need at least 3 vertices, got {len(v)}")

    ext = v.max(axis=0) - v.min(axis=0)
    scale = float(math.hypot(*ext))
    if scale == 0.0:
        raise Degenerate("all points coincide")
    tol = COLLINEAR_TOL * scale * scale

    # drop repeated points (including a closing copy of the first one)
    keep = np.hypot(*(np.roll(v, -1, axis=0) - v).T) > _EDGE_TOL * scale
    v = v[keep]
    if len(v) < 3:
        raise Degenerate("fewer than 3 distinct points")

    e = np.roll(v, -1, axis=0) - v
    cr = _cross(e, np.roll(e, -1, axis=0))
    if np.any(cr > tol) and np.any(cr < -tol):
        raise NotConvex("polygon has a reflex vertex")
    if not np.any(np.abs(cr) > tol):
        raise Degenerate("all points are collinear")
    if np.all(cr <= tol):
        v = v[::-1]

    # remove collinear vertices until every turn is strictly left
    while True:
        e = np.roll(v, -1, axis=0) - v
        cr = _cross(np.roll(e, 1, axis=0), e)  # turn at vertex i
        flat = np.abs(cr) <= tol
        if not flat.any():
            break
        v = v[~flat]
        if len(v) < 3:
            raise Degenerate("fewer than 3 non-collinear vertices")
    if np.any(cr < 0):
        raise NotConvex("polygon has a reflex vertex")

    e = np.roll(v, -1, axis=0) - v
    turning = np.arctan2(_cross(e, np.roll(e, -1, axis=0)), np.einsum("ij,ij->i", e, np.roll(e, -1, axis=0)))
    if abs(turning.sum() - 2 * math.pi) > 1e-6:
        raise NotConvex("polygon winds more than once (self-intersecting)")

    area = _shoelace(v)
    if area < DEGENERATE_TOL * scale * scale:
        raise Degenerate(f"area {area:g} is negligible at scale {scale:g}")

    start = np.lexsort((v[:, 1], v[:, 0]))[0]
    v = np.roll(v, -start, axis=0)
    return ConvexPolygon(v)


def rectangle(a: float, b: float, origin=(0.0, 0.0)) -> ConvexPolygon:
    """Axis-aligned ``a`` x ``b`` rectangle with lower-left corner at ``origin``."""
    x0, y0 = origin
    return validate_polygon([(x0, y0), (x0 + a, y0), (x0 + a, y0 + b), (x0, y0 + b)])


def regular_polygon(k: int, circumradius: float = 1.0, area: float | None = None) -> ConvexPolygon:
    """Regular ``k``-gon centred at the origin; ``area`` overrides ``circumradius``."""
    if k < 3:
        raise BadParameter("a regular polygon needs k >= 3")
    if area is not None:
        circumradius = math.sqrt(2.0 * area / (k * math.sin(2 * math.pi / k)))
    th = 2 * math.pi * np.arange(k) / k
    return validate_polygon(np.column_stack([np.cos(th), np.sin(th)]) * circumradius)


def random_convex_polygon(seed: int, vertex_count: int, aspect: float) -> ConvexPolygon:
    """Seeded random convex polygon inscribed in the ellipse x^2 + (y/aspect)^2 = 1.

    Angles are jittered inside equal sectors so that no two vertices nearly
    coincide; the same arguments always produce the same polygon.
    """
    if int(vertex_count) != vertex_count or vertex_count < 3:
        raise BadParameter("vertex_count must be an integer >= 3")
    if not (0.0 < aspect <= 1.0):
        raise BadParameter("aspect must lie in (0, 1]")
    m = int(vertex_count)
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2 * math.pi)
    jitter = rng.uniform(0.1, 0.9, size=m)
    theta = phase + 2 * math.pi * (np.arange(m) + jitter) / m
    pts = np.column_stack([np.cos(theta), aspect * np.sin(theta)])
    hull = ConvexHull(pts)
    return validate_polygon(pts[hull.vertices])


# ---------------------------------------------------------------------------
# metrics


def _chebyshev_center(poly: ConvexPolygon) -> tuple[float, np.ndarray]:
    normals, offsets = poly.half_planes()
    m = len(normals)
    triples = np.array(list(itertools.combinations(range(m), 3)))
    # unknowns (x, y, rho): n_i . x + rho = c_i for the three active edges
    mats = np.empty((len(triples), 3, 3))
    mats[:, :, :2] = normals[triples]
    mats[:, :, 2] = 1.0
    rhs = offsets[triples]
    det = np.linalg.det(mats)
    ok = np.abs(det) > 1e-12
    sol = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
    centers, rho = sol[:, :2], sol[:, 2]
    slack = offsets[None, :] - centers @ normals.T
    tol = 1e-10 * poly.scale
    feasible = np.all(slack >= rho[:, None] - tol, axis=1) & (rho > 0)
    centers, rho = centers[feasible], rho[feasible]
    if len(rho) == 0:
        raise Degenerate("no inscribed disk found")
    best = rho.max()
    tied = rho >= best - 1e-12 * poly.scale
    cand = centers[tied]
    order = np.lexsort((cand[:, 1], cand[:, 0]))
    return float(best), cand[order[0]]


def _min_width(poly: ConvexPolygon) -> float:
    normals, offsets = poly.half_planes()
    depth = offsets[:, None] - normals @ poly.vertices.T
    return float(depth.max(axis=1).min())


def _diameter(v: np.ndarray) -> float:
    d = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((d * d).sum(-1)).max())


def metrics(poly: ConvexPolygon) -> ShapeMetrics:
    v = poly.vertices
    area = _shoelace(v)
    if area < DEGENERATE_TOL * poly.scale**2:
        raise Degenerate("negligible area")
    perimeter = _perimeter(v)
    r, c = _chebyshev_center(poly)
    diam = _diameter(v)
    w = _min_width(poly)
    return ShapeMetrics(
        area=area,
        perimeter=perimeter,
        inradius=r,
        incenter=(float(c[0]), float(c[1])),
        diameter=diam,
        min_width=w,
        remainder_R=perimeter * r / area - 1.0,
        remainder_A=w / diam,
    )


def support_width(poly: ConvexPolygon, direction) -> float:
    """Width of ``poly`` in the unit direction ``direction``: h(y) + h(-y)."""
    y = np.asarray(direction, dtype=float)
    if y.shape != (2,) or abs(float(np.hypot(*y)) - 1.0) > 1e-12:
        raise NonUnitDirection(f"direction {direction!r} is not a unit vector")
    proj = poly.vertices @ y
    return float(proj.max() - proj.min())


def distance_to_boundary(poly: ConvexPolygon, x) -> np.ndarray:
    """d(x, boundary) for points inside the polygon (negative outside)."""
    normals, offsets = poly.half_planes()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return (offsets[None, :] - x @ normals.T).min(axis=1)


def sample_uniform(poly: ConvexPolygon, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniformly distributed in the polygon (fan of triangles)."""
    v = poly.vertices
    a, b, c = v[0], v[1:-1], v[2:]
    w = 0.5 * _cross(b - a, c - a)
    tri = rng.choice(len(w), size=n, p=w / w.sum())
    u = rng.random((n, 2))
    flip = u.sum(axis=1) > 1
    u[flip] = 1 - u[flip]
    return a + u[:, :1] * (b[tri] - a) + u[:, 1:] * (c[tri] - a)


# ---------------------------------------------------------------------------
# inner parallel sets


def _clip(v: np.ndarray, n: np.ndarray, c: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon by {x : n.x <= c}."""
    if len(v) == 0:
        return v
    s = v @ n - c
    inside = s <= 0
    if inside.all():
        return v
    if not inside.any():
        return v[:0]
    out = []
    m = len(v)
    for i in range(m):
        j = (i + 1) % m
        if inside[i]:
            out.append(v[i])
        if inside[i] != inside[j]:
            lam = s[i] / (s[i] - s[j])
            out.append(v[i] + lam * (v[j] - v[i]))
    return np.array(out)


def _offset_raw(poly: ConvexPolygon, normals, offsets, t: float) -> np.ndarray:
    v = poly.vertices
    for n, c in zip(normals, offsets):
        v = _clip(v, n, c - t)
        if len(v) == 0:
            break
    if len(v) >= 2:
        keep = np.hypot(*(np.roll(v, -1, axis=0) - v).T) > _EDGE_TOL * poly.scale
        v = v[keep]
    return v


def inner_parallel(poly: ConvexPolygon, t: float, inradius: float | None = None) -> ConvexPolygon | None:
    """Inner parallel set at distance ``t``; ``None`` when it is empty."""
    if t < 0:
        raise NegativeOffset(f"offset must be non-negative, got {t}")
    if t == 0:
        return poly
    if inradius is None:
        inradius = _chebyshev_center(poly)[0]
    if t >= inradius * (1 - 1e-12):
        return None
    normals, offsets = poly.half_planes()
    v = _offset_raw(poly, normals, offsets, t)
    if len(v) < 3 or _shoelace(v) < DEGENERATE_TOL * _shoelace(poly.vertices):
        return None
    try:
        return validate_polygon(v)
    except (Degenerate, NotConvex, TooFewVertices):
        return None


def _gauss_legendre_adaptive(f, a: float, b: float, rtol: float = 1e-11, atol: float = 0.0, depth: int = 0) -> float:
    x, w = _GL16

    def gl(lo, hi):
        half = 0.5 * (hi - lo)
        return half * float(np.dot(w, f(lo + half * (x + 1.0))))

    whole = gl(a, b)
    mid = 0.5 * (a + b)
    split = gl(a, mid) + gl(mid, b)
    # atol keeps near-empty intervals from recursing on round-off
    if abs(split - whole) <= max(rtol * abs(split), atol) or depth >= MAX_GL_DEPTH:
        return split
    return (_gauss_legendre_adaptive(f, a, mid, rtol, atol, depth + 1)
            + _gauss_legendre_adaptive(f, mid, b, rtol, atol, depth + 1))


_GL16 = np.polynomial.legendre.leggauss(16)
MAX_GL_DEPTH = 20


def parallel_profile(poly: ConvexPolygon) -> InnerParallelProfile:
    """Piecewise-exact area/perimeter profile of the inner parallel sets."""
    normals, offsets = poly.half_planes()
    r = _chebyshev_center(poly)[0]
    area = _shoelace(poly.vertices)
    perim = _perimeter(poly.vertices)

    def count(t):
        return len(_offset_raw(poly, normals, offsets, t))

    # event times: first instant after which fewer edges survive
    events = [0.0]
    t_hi = r * (1 - 1e-10)
    lo, c = 0.0, count(0.0)
    while count(t_hi) < c:
        a, b = lo, t_hi
        while b - a > EVENT_RTOL * r:
            mid = 0.5 * (a + b)
            if count(mid) < c:
                b = mid
            else:
                a = mid
        events.append(0.5 * (a + b))
        lo, c = b, count(b)
    events.append(r)
    # intervals shorter than MIN_INTERVAL * r cannot be fitted from samples; fold them into a neighbour
    kept = [events[0]]
    for t in events[1:-1]:
        if t - kept[-1] > MIN_INTERVAL * r and r - t > MIN_INTERVAL * r:
            kept.append(t)
    kept.append(r)
    events = np.array(kept)

    mu_coeffs = np.empty((len(events) - 1, 3))
    p_coeffs = np.empty((len(events) - 1, 2))
    residual = 0.0
    for j, (ta, tb) in enumerate(zip(events[:-1], events[1:])):
        h = tb - ta
        u = np.array([0.25, 0.5, 0.75])
        ts = ta + u * h
        polys = [_offset_raw(poly, normals, offsets, t) for t in ts]
        mus = np.array([_shoelace(p) if len(p) >= 3 else 0.0 for p in polys])
        ps = np.array([_perimeter(p) if len(p) >= 2 else 0.0 for p in polys])
        # quadratic through three samples, affine by least squares, both in u / h
        mu_coeffs[j] = np.linalg.solve(np.vander(u, 3, increasing=True), mus) / np.array([1.0, h, h * h])
        lsq = np.linalg.lstsq(np.vander(u, 2, increasing=True), ps, rcond=None)[0]
        p_coeffs[j] = lsq / np.array([1.0, h])
        residual = max(residual, float(np.abs(np.vander(u, 2, increasing=True) @ lsq - ps).max()) / perim)

    def poly_int(coef, ta, tb, shift):
        # integral of t**shift * mu(t) over [ta, tb]; t = ta + u
        h = tb - ta
        m0 = sum(ck * h ** (k + 1) / (k + 1) for k, ck in enumerate(coef))
        if shift == 0:
            return m0
        return ta * m0 + sum(ck * h ** (k + 2) / (k + 2) for k, ck in enumerate(coef))

    I0 = sum(poly_int(mu_coeffs[j], events[j], events[j + 1], 0) for j in range(len(mu_coeffs)))
    I1 = sum(poly_int(mu_coeffs[j], events[j], events[j + 1], 1) for j in range(len(mu_coeffs)))

    def ratio(j):
        a_, b_, c_ = mu_coeffs[j]
        p_, q_ = p_coeffs[j]
        ta = events[j]
        return lambda t: (a_ + (t - ta) * (b_ + c_ * (t - ta))) ** 2 / (p_ + q_ * (t - ta))

    # J <= area**2 * r / perim, which sets the absolute scale
    atol = 1e-15 * area**2 * r / perim
    J = sum(_gauss_legendre_adaptive(ratio(j), events[j], events[j + 1], 1e-11, atol) for j in range(len(mu_coeffs)))

    profile = InnerParallelProfile(
        event_times=events,
        mu_coeffs=mu_coeffs,
        perimeter_coeffs=p_coeffs,
        area=area,
        perimeter=perim,
        inradius=r,
        I0=float(I0),
        I1=float(I1),
        J=float(J),
        t_bar=area / perim,
        s_bar=0.0,
        fit_residual=residual,
    )
    return replace(profile, s_bar=float(profile.mu(profile.t_bar)) / perim)


def distance_moments(profile: InnerParallelProfile) -> tuple[float, float]:
    """Return (integral of d, integral of d**2) over the polygon."""
    return profile.I0, 2.0 * profile.I1


# ---------------------------------------------------------------------------
# JSON interchange


def polygon_from_json(obj) -> ConvexPolygon:
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "vertices" not in obj:
        raise BadParameter('polygon JSON must be an object with a "vertices" list')
    return validate_polygon(obj["vertices"])


def polygon_to_json(poly: ConvexPolygon) -> str:
    return json.dumps({"vertices": poly.vertices.tolist()})


def read_polygon(path) -> ConvexPolygon:
    return polygon_from_json(Path(path).read_text())


def write_polygon(poly: ConvexPolygon, path) -> None:
    Path(path).write_text(polygon_to_json(poly) + "\n")
