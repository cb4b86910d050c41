"""P1 finite elements for the Robin torsion, the first Robin eigenvalue and the
Dirichlet torsion of a convex polygon.

Every solver works on a nested family of meshes (a coarse Delaunay mesh
followed by uniform midpoint refinements), so consecutive levels have mesh
sizes h, h/2, h/4, ... and the last three values feed a Richardson
extrapolation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.spatial import Delaunay

from .errors import MeshError, MeshTooFine, NoConvergence, NonMonotoneSequence, NonPositiveInput
from .geometry import ConvexPolygon, distance_to_boundary, metrics

__all__ = [
    "DIRICHLET",
    "TriangleMesh",
    "RobinSystem",
    "RobinSpectralResult",
    "triangulate",
    "refine",
    "mesh_hierarchy",
    "assemble",
    "robin_torsion",
    "robin_eigenvalue",
    "dirichlet_torsion",
    "richardson",
    "default_base_h",
    "write_field_csv",
]

DIRICHLET = math.inf
NODE_CAP = 2_000_000
SOLVER_RTOL = 1e-11
EIG_RTOL = 1e-11
EIG_MAXITER = 500
REFINE_STEPS = 3


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_segments: np.ndarray
    level: int = 0
    # for refined meshes: the two parent nodes of every node added by refinement
    parent_pairs: np.ndarray | None = None
    n_parent_nodes: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def triangle_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def h(self) -> float:
        """Longest edge."""
        e = self.edges()
        d = self.nodes[e[:, 1]] - self.nodes[e[:, 0]]
        return float(np.hypot(d[:, 0], d[:, 1]).max())

    def aspect_ratios(self) -> np.ndarray:
        """Longest edge over shortest altitude, per triangle (2/sqrt(3) for equilateral)."""
        p = self.nodes[self.triangles]
        lens = np.stack([np.hypot(*(p[:, (i + 1) % 3] - p[:, i]).T) for i in range(3)], axis=1)
        longest = lens.max(axis=1)
        return longest**2 / (2.0 * self.triangle_areas())

    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_segments)

    def prolongation(self) -> sp.csr_matrix:
        """Interpolation from the parent mesh to this one (P1 functions)."""
        if self.parent_pairs is None:
            raise MeshError("mesh has no parent")
        n_old = self.n_parent_nodes
        n_new = len(self.parent_pairs)
        rows = np.concatenate([np.arange(n_old), np.repeat(np.arange(n_old, n_old + n_new), 2)])
        cols = np.concatenate([np.arange(n_old), self.parent_pairs.ravel()])
        vals = np.concatenate([np.ones(n_old), np.full(2 * n_new, 0.5)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_nodes, n_old))


def _hex_lattice(lo: np.ndarray, hi: np.ndarray, s: float) -> np.ndarray:
    dy = s * math.sqrt(3.0) / 2.0
    ys = np.arange(lo[1], hi[1] + dy, dy)
    xs = np.arange(lo[0] - s, hi[0] + s, s)
    rows = [np.column_stack([xs + (0.5 * s if j % 2 else 0.0), np.full(len(xs), y)]) for j, y in enumerate(ys)]
    return np.concatenate(rows)


def _coarse_mesh(poly: ConvexPolygon, s: float) -> TriangleMesh:
    v = poly.vertices
    m = len(v)
    bpts = []
    for i in range(m):
        a, b = v[i], v[(i + 1) % m]
        k = max(1, math.ceil(np.hypot(*(b - a)) / s - 1e-9))
        frac = np.arange(k)[:, None] / k
        bpts.append(a + frac * (b - a))
    bpts = np.concatenate(bpts)
    lat = _hex_lattice(v.min(axis=0), v.max(axis=0), s)
    # shift the lattice so it is centred on the incenter of the polygon
    c = np.asarray(metrics(poly).incenter)
    lat = lat + (c - lat[np.argmin(np.hypot(*(lat - c).T))])
    inner = lat[distance_to_boundary(poly, lat) >= 0.55 * s]
    nodes = np.concatenate([bpts, inner])
    tri = Delaunay(nodes)
    if len(tri.coplanar):
        raise MeshError("Delaunay dropped nodes")
    t = _flip_slivers(nodes, tri.simplices.astype(np.int64), 1e-10 * s * s)
    nb = len(bpts)
    segs = np.column_stack([np.arange(nb), (np.arange(nb) + 1) % nb])
    mesh = TriangleMesh(nodes=nodes, triangles=t, boundary_segments=segs, level=0)
    return _orient(mesh)


def _flip_slivers(nodes: np.ndarray, t: np.ndarray, tol: float) -> np.ndarray:
    """Remove flat triangles made of three collinear boundary nodes.

    Qhull may return such slivers along a polygon edge.  A sliver whose long
    edge lies on the hull is dropped; otherwise it is merged with its
    neighbour across the long edge and the pair is re-split through the
    middle node.
    """
    t = t.copy()

    def areas():
        p = nodes[t]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    flat = set(np.flatnonzero(areas() <= tol).tolist())
    while flat:
        for k in sorted(flat):
            tri = t[k]
            lens = [np.hypot(*(nodes[tri[(i + 1) % 3]] - nodes[tri[i]])) for i in range(3)]
            i = int(np.argmax(lens))
            a, c, b = tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]
            share = np.flatnonzero(np.any(t == a, axis=1) & np.any(t == c, axis=1))
            share = [j for j in share if j != k]
            if not share:
                # the long edge is on the hull: the sliver only fills a rounding gap
                t = np.delete(t, k, axis=0)
                flat = {f - (f > k) for f in flat if f != k}
                break
            if len(share) != 1:
                raise MeshError("sliver edge shared by more than two triangles")
            j = share[0]
            if j in flat:
                continue  # stacked slivers: resolve the one next to the interior first
            x = [v for v in t[j] if v != a and v != c][0]
            t[k] = (a, b, x)
            t[j] = (b, c, x)
            flat.discard(k)
            break
        else:
            raise MeshError("could not remove flat triangles")
    return t


def _orient(mesh: TriangleMesh) -> TriangleMesh:
    a = mesh.triangle_areas()
    t = mesh.triangles.copy()
    neg = a < 0
    t[neg] = t[neg][:, [0, 2, 1]]
    out = TriangleMesh(mesh.nodes, t, mesh.boundary_segments, mesh.level, mesh.parent_pairs, mesh.n_parent_nodes)
    if np.any(np.abs(a) <= 1e-14 * out.h**2):
        raise MeshError("degenerate triangle in mesh")
    return out


def refine(mesh: TriangleMesh) -> TriangleMesh:
    """Uniform 4-way refinement by edge midpoints."""
    t = mesh.triangles
    n = mesh.n_nodes
    all_e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    edges, inv = np.unique(all_e, axis=0, return_inverse=True)
    inv = inv.ravel()
    if n + len(edges) > NODE_CAP:
        raise MeshTooFine(f"refinement would exceed {NODE_CAP} nodes")
    nt = len(t)
    m01, m12, m20 = (n + inv[:nt], n + inv[nt:2 * nt], n + inv[2 * nt:])
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    tris = np.concatenate([
        np.column_stack([a, m01, m20]),
        np.column_stack([m01, b, m12]),
        np.column_stack([m20, m12, c]),
        np.column_stack([m01, m12, m20]),
    ])
    nodes = np.concatenate([mesh.nodes, 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])])
    # boundary segments split at their midpoints, preserving orientation
    bs = mesh.boundary_segments
    key = np.sort(bs, axis=1)
    idx = np.searchsorted(edges[:, 0] * (n + 1) + edges[:, 1], key[:, 0] * (n + 1) + key[:, 1])
    mid = n + idx
    segs = np.empty((2 * len(bs), 2), dtype=np.int64)
    segs[0::2] = np.column_stack([bs[:, 0], mid])
    segs[1::2] = np.column_stack([mid, bs[:, 1]])
    return TriangleMesh(nodes, tris, segs, mesh.level + 1, parent_pairs=edges, n_parent_nodes=n)


def triangulate(poly: ConvexPolygon, target_h: float) -> TriangleMesh:
    """Mesh of ``poly`` with every edge no longer than ``target_h``.

    A coarse Delaunay mesh with spacing comparable to the inradius is refined
    uniformly until the longest edge drops below ``target_h``; boundary nodes
    always lie exactly on the polygon edges.
    """
    if not target_h > 0:
        raise NonPositiveInput("target_h must be positive")
    r = metrics(poly).inradius
    s = min(r, target_h)
    mesh = _coarse_mesh(poly, s)
    while mesh.h > target_h:
        est = mesh.n_nodes * 4
        if est > NODE_CAP:
            raise MeshTooFine(f"mesh for h={target_h} would exceed {NODE_CAP} nodes")
        mesh = refine(mesh)
    return TriangleMesh(mesh.nodes, mesh.triangles, mesh.boundary_segments, 0)


def default_base_h(poly: ConvexPolygon) -> float:
    return metrics(poly).inradius / 4.0


@lru_cache(maxsize=32)
def mesh_hierarchy(poly: ConvexPolygon, base_h: float, levels: int) -> tuple[TriangleMesh, ...]:
    """``levels`` nested meshes, the coarsest with longest edge at most ``base_h``."""
    meshes = [triangulate(poly, base_h)]
    for _ in range(levels - 1):
        meshes.append(refine(meshes[-1]))
    return tuple(meshes)


# ---------------------------------------------------------------------------
# assembly


@dataclass(frozen=True, eq=False)
class RobinSystem:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    boundary_mass: sp.csr_matrix
    load: np.ndarray
    beta: float
    boundary_nodes: np.ndarray

    @property
    def dirichlet(self) -> bool:
        return math.isinf(self.beta)

    def free_dofs(self) -> np.ndarray:
        n = len(self.load)
        if not self.dirichlet:
            return np.arange(n)
        mask = np.ones(n, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    def operator(self) -> tuple[sp.csc_matrix, sp.csr_matrix, np.ndarray, np.ndarray]:
        """(K, M, f, dofs): the SPD system on the free degrees of freedom."""
        dofs = self.free_dofs()
        if self.dirichlet:
            K = self.stiffness[dofs][:, dofs]
            return K.tocsc(), self.mass[dofs][:, dofs].tocsr(), self.load[dofs], dofs
        K = self.stiffness + self.beta * self.boundary_mass
        return K.tocsc(), self.mass, self.load, dofs


_MASS_LOCAL = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
_BMASS_LOCAL = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


def assemble(mesh: TriangleMesh, beta: float) -> RobinSystem:
    """Exact P1 stiffness, mass, boundary mass and load vector.

    ``beta=DIRICHLET`` (infinity) marks the boundary nodes for elimination
    instead of adding a penalty.
    """
    if not beta > 0:
        raise NonPositiveInput(f"beta must be positive, got {beta!r}")
    n = mesh.n_nodes
    t = mesh.triangles
    p = mesh.nodes[t]
    area = mesh.triangle_areas()
    # gradient of the hat functions times 2*area
    b = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1)
    c = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1)
    kloc = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4.0 * area[:, None, None])
    mloc = area[:, None, None] * _MASS_LOCAL
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    A = sp.csr_matrix((kloc.ravel(), (rows, cols)), shape=(n, n))
    M = sp.csr_matrix((mloc.ravel(), (rows, cols)), shape=(n, n))

    s = mesh.boundary_segments
    L = np.hypot(*(mesh.nodes[s[:, 1]] - mesh.nodes[s[:, 0]]).T)
    bloc = L[:, None, None] * _BMASS_LOCAL
    B = sp.csr_matrix(
        (bloc.ravel(), (np.repeat(s, 2, axis=1).ravel(), np.tile(s, (1, 2)).ravel())), shape=(n, n)
    )
    f = np.bincount(t.ravel(), weights=np.repeat(area / 3.0, 3), minlength=n)
    return RobinSystem(A, M, B, f, float(beta), mesh.boundary_nodes())


# ---------------------------------------------------------------------------
# solvers and extrapolation


@dataclass(frozen=True, eq=False)
class RobinSpectralResult:
    value: float
    field: np.ndarray
    level: int
    error_estimate: float
    observed_order: float
    kind: str
    level_values: tuple = ()
    level_h: tuple = ()
    nodes: np.ndarray | None = None
    flags: tuple = field(default=())

    @property
    def finest(self) -> float:
        return self.level_values[-1]

    def budget(self) -> float:
        """Error budget used by the audits."""
        return max(self.error_estimate, 10.0 * SOLVER_RTOL * abs(self.value))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "error_estimate": self.error_estimate,
            "observed_order": self.observed_order,
            "level": self.level,
            "level_values": list(self.level_values),
            "level_h": list(self.level_h),
            "flags": list(self.flags),
        }


def richardson(values) -> tuple[float, float]:
    """Extrapolate three values computed at h, h/2, h/4.

    Returns (extrapolated, order).  Raises NonMonotoneSequence when the
    successive differences do not share a strict sign.
    """
    v1, v2, v3 = (float(x) for x in values)
    d1, d2 = v1 - v2, v2 - v3
    if d1 == 0.0 or d2 == 0.0 or (d1 > 0) != (d2 > 0):
        raise NonMonotoneSequence(f"sequence {v1!r}, {v2!r}, {v3!r} is not strictly monotone")
    order = math.log2(d1 / d2)
    return v3 + (v3 - v2) / (2.0**order - 1.0), order


def _extrapolate(vals: list[float]) -> tuple[float, float, float, tuple]:
    """(value, error_estimate, order, flags) from per-level values."""
    if len(vals) < 3:
        return vals[-1], abs(vals[-1] - vals[-2]) if len(vals) > 1 else math.inf, math.nan, ("too_few_levels",)
    try:
        ext, order = richardson(vals[-3:])
    except NonMonotoneSequence:
        return vals[-1], abs(vals[-1] - vals[-2]), math.nan, ("non_monotone",)
    if not 0.5 <= order <= 6.0:
        return vals[-1], abs(vals[-1] - vals[-2]), order, ("order_out_of_range",)
    return ext, abs(ext - vals[-1]), order, ()


def _check_levels(levels: int):
    if int(levels) != levels or levels < 1:
        raise NonPositiveInput("levels must be a positive integer")


def _factor(K):
    # K is SPD, so symmetric mode with diagonal pivots keeps the MMD ordering intact
    return splu(K.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True})


def _solve(K, rhs, lu=None):
    lu = lu if lu is not None else _factor(K)
    x = lu.solve(rhs)
    # normwise backward error ||r|| / (||K|| ||x|| + ||b||), all in the max norm;
    # ||r|| / ||b|| alone has a floor of about eps * cond(K) on thin meshes
    knorm = float(abs(K).sum(axis=1).max())

    def backward_error(x):
        r = np.abs(K @ x - rhs).max()
        return r / max(knorm * np.abs(x).max() + np.abs(rhs).max(), 1e-300)

    res = backward_error(x)
    for _ in range(REFINE_STEPS):
        if res <= SOLVER_RTOL:
            break
        x = x + lu.solve(rhs - K @ x)
        res = backward_error(x)
    if not res <= SOLVER_RTOL:
        raise NoConvergence(f"linear solve backward error {res:.3e} exceeds {SOLVER_RTOL}")
    return x, lu


def _full_field(x, dofs, n):
    u = np.zeros(n)
    u[dofs] = x
    return u


def _setup(poly, levels, base_h):
    _check_levels(levels)
    if base_h is None:
        base_h = default_base_h(poly)
    return mesh_hierarchy(poly, float(base_h), int(levels))


def _torsion_levels(poly, beta, levels, base_h):
    meshes = _setup(poly, levels, base_h)
    out = []
    for mesh in meshes:
        K, _, f, dofs = assemble(mesh, beta).operator()
        x, _ = _solve(K, f)
        out.append((mesh, float(f @ x), _full_field(x, dofs, mesh.n_nodes)))
    return out


def robin_torsion(poly: ConvexPolygon, beta: float, levels: int = 3, base_h: float | None = None) -> RobinSpectralResult:
    """Robin torsion T_beta: integral of the solution of -Lap u = 1, du/dn + beta u = 0."""
    if not beta > 0 or math.isinf(beta):
        raise NonPositiveInput(f"beta must be positive and finite, got {beta!r}")
    runs = _torsion_levels(poly, beta, levels, base_h)
    vals = [v for _, v, _ in runs]
    value, err, order, flags = _extrapolate(vals)
    mesh, _, u = runs[-1]
    return RobinSpectralResult(
        value, u, mesh.level, err, order, "robin_torsion",
        tuple(vals), tuple(m.h for m, _, _ in runs), mesh.nodes, flags,
    )


def dirichlet_torsion(poly: ConvexPolygon, levels: int = 3, base_h: float | None = None):
    """Dirichlet torsion T and the maximum M of the torsion function."""
    runs = _torsion_levels(poly, DIRICHLET, levels, base_h)
    tv = [v for _, v, _ in runs]
    mv = [float(u.max()) for _, _, u in runs]
    mesh, _, u = runs[-1]
    hs = tuple(m.h for m, _, _ in runs)
    t_val, t_err, t_ord, t_flags = _extrapolate(tv)
    m_val, m_err, m_ord, m_flags = _extrapolate(mv)
    T = RobinSpectralResult(t_val, u, mesh.level, t_err, t_ord, "dirichlet_torsion", tuple(tv), hs, mesh.nodes, t_flags)
    M = RobinSpectralResult(m_val, u, mesh.level, m_err, m_ord, "dirichlet_max", tuple(mv), hs, mesh.nodes, m_flags)
    return T, M


def _inverse_iteration(K, M, x0, lu):
    x = x0 / math.sqrt(x0 @ (M @ x0))
    lam = (x @ (K @ x))
    for _ in range(EIG_MAXITER):
        y = lu.solve(M @ x)
        y /= math.sqrt(y @ (M @ y))
        new = y @ (K @ y)
        x = y
        if abs(new - lam) <= EIG_RTOL * abs(new):
            return new, x
        lam = new
    raise NoConvergence(f"inverse iteration did not converge in {EIG_MAXITER} steps")


def robin_eigenvalue(poly: ConvexPolygon, beta: float, levels: int = 3, base_h: float | None = None) -> RobinSpectralResult:
    """First eigenvalue of the Laplacian with Robin (or, for beta=inf, Dirichlet) conditions."""
    if not beta > 0:
        raise NonPositiveInput(f"beta must be positive, got {beta!r}")
    meshes = _setup(poly, levels, base_h)
    vals, x_prev, field_ = [], None, None
    for mesh in meshes:
        K, M, _, dofs = assemble(mesh, beta).operator()
        lu = _factor(K)
        if x_prev is None:
            x0 = np.ones(len(dofs))
        else:
            x0 = (mesh.prolongation() @ x_prev)[dofs]
        lam, x = _inverse_iteration(K, M, x0, lu)
        if x.sum() < 0:
            x = -x
        field_ = _full_field(x, dofs, mesh.n_nodes)
        x_prev = field_
        vals.append(float(lam))
    value, err, order, flags = _extrapolate(vals)
    if len(vals) >= 2 and any(b > a for a, b in zip(vals, vals[1:])):
        flags = flags + ("approach_from_below",)
    return RobinSpectralResult(
        value, field_, meshes[-1].level, err, order, "robin_eigenvalue" if math.isfinite(beta) else "dirichlet_eigenvalue",
        tuple(vals), tuple(m.h for m in meshes), meshes[-1].nodes, flags,
    )


def write_field_csv(result: RobinSpectralResult, path) -> None:
    """Dump the finest-level nodal field as ``x,y,u`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "u"])
        for (x, y), u in zip(result.nodes, result.field):
            w.writerow([format(x, ".17g"), format(y, ".17g"), format(u, ".17g")])
