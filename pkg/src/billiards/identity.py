"""The two-arc chord identity that characterizes circles.

For points s0, s1 on two boundary arcs with radii of curvature rho and
chord attributes (l, alpha0, alpha1), the relation

    rho(s0) sin(alpha0) + rho(s1) sin(alpha1) = (1 + c) l(s0, s1)

holds identically with c = 0 precisely on arcs of a circle, and can
hold for no c != 0 at all; in particular the c = 1 version is
impossible on any pair of C^3 arcs. This module evaluates the residual
pointwise and on dense grids, and checks the differentiated identities
that drive the impossibility argument.

Numerics only corroborate: the scan reports residual statistics, it
never concludes "is a circle" by itself. Before any verdict the radius
of curvature is cross-checked against an independent finite-difference
curvature.
"""

import numpy as np
from dataclasses import dataclass

from .boundary import chord_arrays
from .errors import CurvatureConsistencyError, FlatEndpointError

FLAT_TOL = 1e-12
CURVATURE_AGREEMENT_TOL = 1e-7


def _rho(curve, s, validate=True):
    k = np.asarray(curve.curvature(s), dtype=float)
    if validate and np.any(np.abs(k) < FLAT_TOL):
        raise FlatEndpointError("radius of curvature is infinite on a flat point")
    with np.errstate(divide="ignore"):
        return 1.0 / k


def residual_R(curve, s0, s1, c=0.0):
    """rho(s0) sin(a0) + rho(s1) sin(a1) - (1 + c) l for one chord."""
    l, a0, a1 = chord_arrays(curve, s0, s1)
    r0 = _rho(curve, s0)
    r1 = _rho(curve, s1)
    return float(r0 * np.sin(a0) + r1 * np.sin(a1) - (1.0 + c) * l)


def check_curvature_consistency(curve, samples, tol=CURVATURE_AGREEMENT_TOL):
    """Analytic curvature vs finite differences of the tangent angle."""
    k_a = np.asarray(curve.curvature(samples), dtype=float)
    k_fd = np.asarray(curve.curvature_fd(samples), dtype=float)
    err = np.abs(k_a - k_fd) / np.maximum(1.0, np.abs(k_a))
    worst = float(err.max())
    if worst > tol:
        raise CurvatureConsistencyError(
            f"curvature disagreement {worst:.2e} exceeds {tol:.0e}")
    return worst


@dataclass
class IdentityScanReport:
    c: float
    max_abs: float
    min_abs: float
    argmax: tuple
    grid0: np.ndarray
    grid1: np.ndarray
    residuals: np.ndarray
    curvature_agreement: float


def identity_scan(curve, window0, window1, c=0.0, grid=64):
    """Dense residual scan over two arclength windows.

    windows are (s_lo, s_hi) intervals that must avoid corners and flat
    points; near-coincident parameter pairs (degenerate chords) are
    masked out of the statistics. The curvature cross-check runs first
    and gates the verdict.
    """
    L = curve.total_length
    g0 = np.linspace(window0[0], window0[1], grid)
    g1 = np.linspace(window1[0], window1[1], grid)
    agreement = check_curvature_consistency(
        curve, np.concatenate([g0, g1]) % L)
    S0, S1 = np.meshgrid(g0, g1, indexing="ij")
    l, a0, a1 = chord_arrays(curve, S0, S1)
    r0 = _rho(curve, S0)
    r1 = _rho(curve, S1)
    res = r0 * np.sin(a0) + r1 * np.sin(a1) - (1.0 + c) * l
    gap = np.abs((S0 - S1) % L)
    gap = np.minimum(gap, L - gap)
    ok = gap > 1e-6 * L
    res = np.where(ok, res, np.nan)
    finite = np.abs(res[ok])
    flat_idx = np.nanargmax(np.abs(res))
    return IdentityScanReport(
        c=c,
        max_abs=float(finite.max()),
        min_abs=float(finite.min()),
        argmax=(float(S0.ravel()[flat_idx]), float(S1.ravel()[flat_idx])),
        grid0=g0,
        grid1=g1,
        residuals=res,
        curvature_agreement=agreement,
    )


def differential_identity_check(curve, s0, s1, c=0.0):
    """Residuals of the three differentiated forms of the identity.

    Differentiating rho0 sin(a0) + rho1 sin(a1) = (1 + c) l along s0,
    along s1, and mixing, gives three relations that all vanish on a
    circle with c = 0:

      e0: rho'(s0) + cos(a0)/l rho0 - cos(a1)/l rho1 + c cot(a0)
      e1: rho'(s1) - cos(a1)/l rho1 + cos(a0)/l rho0 - c cot(a1)
      e2: rho'(s1) - [ -cos(a0-a1)/(l cos a1) rho0
                        + cos(2 a1)/(l cos a1) rho1
                        + tan(a1) (1 - c/sin^2 a0) ]
    """
    l, a0, a1 = chord_arrays(curve, s0, s1)
    l, a0, a1 = float(l), float(a0), float(a1)
    r0 = float(_rho(curve, s0))
    r1 = float(_rho(curve, s1))
    k0p = float(curve.curvature_derivative(s0))
    k1p = float(curve.curvature_derivative(s1))
    k0 = float(curve.curvature(s0))
    k1 = float(curve.curvature(s1))
    rp0 = -k0p / k0 ** 2
    rp1 = -k1p / k1 ** 2
    e0 = rp0 + np.cos(a0) / l * r0 - np.cos(a1) / l * r1 + c / np.tan(a0)
    e1 = rp1 - np.cos(a1) / l * r1 + np.cos(a0) / l * r0 - c / np.tan(a1)
    rhs2 = (-np.cos(a0 - a1) / (l * np.cos(a1)) * r0
            + np.cos(2.0 * a1) / (l * np.cos(a1)) * r1
            + np.tan(a1) * (1.0 - c / np.sin(a0) ** 2))
    e2 = rp1 - rhs2
    return {"e0": float(e0), "e1": float(e1), "e2": float(e2)}
