"""Tables whose periodic sets break the planar picture: torus skew maps
with prescribed fixed sets, and spherical bigon billiards with open sets
of periodic points."""

from .sphere import (
    BulgeSpec,
    CertificateReport,
    SphereBigonTable,
    UnfoldRecord,
    make_sphere_table,
    nonconvex_variant,
    open_set_certificate,
    sphere_geodesic_step,
    sphere_unfold,
)
from .torus import (
    CircleFunction,
    TorusFixReport,
    TorusSkewMap,
    torus_fixed_points,
)

__all__ = [
    "BulgeSpec",
    "CertificateReport",
    "CircleFunction",
    "SphereBigonTable",
    "TorusFixReport",
    "TorusSkewMap",
    "UnfoldRecord",
    "make_sphere_table",
    "nonconvex_variant",
    "open_set_certificate",
    "sphere_geodesic_step",
    "sphere_unfold",
    "torus_fixed_points",
]
