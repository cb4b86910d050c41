"""Robin torsion and first Robin eigenvalue of convex polygons, with inequality audits."""

from .audit import (
    FAIL,
    PASS,
    PASS_WITHIN_BUDGET,
    AuditEntry,
    Constants,
    FunctionalReport,
    InequalityAuditRecord,
    audit,
    constants,
    dirichlet_audit,
)
from .errors import (
    BadParameter,
    Degenerate,
    MeshError,
    MeshTooFine,
    NegativeOffset,
    NoConvergence,
    NonMonotoneSequence,
    NonPositiveInput,
    NonUnitDirection,
    NotConvex,
    OutOfDomain,
    RobinLabError,
    TooFewVertices,
)
from .experiments import SweepConfig, SweepReport, disk_robin_eigenvalue, run_audit, run_convergence, run_sweep
from .fem import (
    DIRICHLET,
    RobinSpectralResult,
    RobinSystem,
    TriangleMesh,
    assemble,
    dirichlet_torsion,
    richardson,
    robin_eigenvalue,
    robin_torsion,
    triangulate,
)
from .geometry import (
    ConvexPolygon,
    InnerParallelProfile,
    ShapeMetrics,
    distance_moments,
    inner_parallel,
    metrics,
    parallel_profile,
    random_convex_polygon,
    read_polygon,
    rectangle,
    regular_polygon,
    support_width,
    validate_polygon,
    write_polygon,
)
from .onedim import OneDimEigen, eigenfunction_1d, nu1, nu1_bounds, torsion_1d

__version__ = "0.1.0"
