"""Beam focusing along billiard orbits as projective-line dynamics.

An infinitesimal beam around a ray is described by one number: the
signed distance x from the footpoint to the focusing point, positive in
the direction of travel, with x = infinity meaning a parallel beam. One
reflection acts on x by the mirror equation

    1/a + 1/b = 2 kappa / sin(alpha),

a fractional-linear (Moebius) map of the projective line. All
arithmetic here is homogeneous in (u : v) pairs so poles and parallel
beams are ordinary values, never exceptions.

The bridge to the phase-space differential: a tangent vector (ds, da)
at (s, alpha) deforms the ray into a pencil focusing at

    x = sin(alpha) ds / (kappa ds + da),

and conjugating the 2x2 Jacobian of the billiard map by this
identification reproduces the mirror-equation step map exactly (tested
to machine precision).
"""

import numpy as np
from dataclasses import dataclass

from .boundary import Chord, chord_arrays
from .errors import PoleAtSampleError
from .phasemap import OrbitTrace, jacobian_from_chord

LINEAR_TOL = 1e-10
_INF_TOL = 1e-14


def as_homogeneous(x):
    """Represent x in R u {inf} as a normalized (u, v) pair with x = u/v."""
    if np.isinf(x):
        return 1.0, 0.0
    u, v = float(x), 1.0
    n = np.hypot(u, v)
    return u / n, v / n


def from_homogeneous(u, v):
    n = np.hypot(u, v)
    if n == 0.0:
        raise ZeroDivisionError("(0, 0) is not a projective point")
    u, v = u / n, v / n
    if abs(v) <= _INF_TOL * abs(u):
        return np.inf
    return u / v


class ProjectiveMap:
    """Fractional-linear map x -> (a x + b)/(c x + d), stored homogeneously.

    The matrix is kept at unit Frobenius norm; it is only defined up to
    scale. ``is_linear`` is the affine predicate |c| ~ 0.
    """

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        norm = np.sqrt((m ** 2).sum())
        if norm == 0.0:
            raise ZeroDivisionError("zero matrix is not a projective map")
        m = m / norm
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) < 1e-12:
            raise ZeroDivisionError(f"projective map is degenerate (det {det:.2e})")
        self.m = m

    @classmethod
    def identity(cls):
        return cls(np.eye(2))

    @classmethod
    def mirror_step(cls, lam, l):
        """Map from the focus before a chord of length l to the focus after
        the reflection at its far end, where lam is the one-bounce
        focusing distance there. lam = inf is a flat wall."""
        if np.isinf(lam):
            return cls([[1.0, -l], [0.0, 1.0]])
        return cls([[-lam, lam * l], [-1.0, l - lam]])

    @property
    def a(self):
        return self.m[0, 0]

    @property
    def b(self):
        return self.m[0, 1]

    @property
    def c(self):
        return self.m[1, 0]

    @property
    def d(self):
        return self.m[1, 1]

    def det(self):
        return self.a * self.d - self.b * self.c

    def is_linear(self, tol=LINEAR_TOL):
        return abs(self.c) <= tol

    def apply_h(self, u, v):
        w = self.m @ np.array([u, v], dtype=float)
        n = np.hypot(w[0], w[1])
        return w[0] / n, w[1] / n

    def apply(self, x):
        u, v = self.apply_h(*as_homogeneous(x))
        return from_homogeneous(u, v)

    def compose(self, other):
        """self after other: (self.compose(other))(x) = self(other(x))."""
        return ProjectiveMap(self.m @ other.m)

    def inverse(self):
        return ProjectiveMap([[self.d, -self.b], [-self.c, self.a]])

    def derivative(self, x):
        """d/dx of the map at finite x away from the pole."""
        denom = self.c * x + self.d
        if abs(denom) < 1e-300:
            raise PoleAtSampleError(f"derivative at the pole x={x}")
        return self.det() / denom ** 2

    def __repr__(self):
        return f"ProjectiveMap([[{self.a:.6g}, {self.b:.6g}], [{self.c:.6g}, {self.d:.6g}]])"


def projective_distance(p, q):
    """Frobenius distance between unit-norm representatives, mod sign."""
    return min(np.sqrt(((p.m - q.m) ** 2).sum()), np.sqrt(((p.m + q.m) ** 2).sum()))


@dataclass
class BeamState:
    """A phase point together with a homogeneous focusing coordinate."""

    phase: tuple
    u: float
    v: float

    def __post_init__(self):
        n = np.hypot(self.u, self.v)
        if n == 0.0:
            raise ZeroDivisionError("(0, 0) beam coordinate")
        self.u, self.v = self.u / n, self.v / n

    @property
    def x(self):
        return from_homogeneous(self.u, self.v)


def mirror_reflect(kappa, alpha, a):
    """Solve 1/a + 1/b = 2 kappa / sin(alpha) for b, projectively.

    a may be inf (parallel beam in); the result may be inf (parallel
    beam out). A flat wall (kappa = 0) returns b = -a.
    """
    sa = np.sin(alpha)
    if sa <= 0.0:
        raise ZeroDivisionError(f"sin(alpha) must be positive, got alpha={alpha}")
    u, v = as_homogeneous(a)
    # b = lam * a / (a - lam) with lam = sa / (2 kappa); in homogeneous
    # form this avoids special-casing a = inf or a = lam.
    two_k = 2.0 * kappa / sa
    w_u, w_v = u, two_k * u - v
    return from_homogeneous(w_u, w_v)


def step_map(trace: OrbitTrace, i):
    """Mirror map B_{i+1} sending the focus x_i to x_{i+1} along the trace."""
    if not (0 <= i < len(trace)):
        raise IndexError(f"trace has {len(trace)} chords, no step {i}")
    lam_next = trace.lams[i + 1]
    return ProjectiveMap.mirror_step(lam_next, trace.lengths[i])


def focusing_maps(trace: OrbitTrace, k=None):
    """Cumulative maps A_i = B_i ... B_1 for i = 1..k."""
    if k is None:
        k = len(trace)
    maps = []
    acc = ProjectiveMap.identity()
    for i in range(k):
        acc = step_map(trace, i).compose(acc)
        maps.append(acc)
    return maps


def propagate(trace: OrbitTrace, x0, k=None):
    """Focusing coordinates x_0..x_k along the trace, poles included."""
    if k is None:
        k = len(trace)
    u, v = as_homogeneous(x0)
    xs = [from_homogeneous(u, v)]
    for i in range(k):
        u, v = step_map(trace, i).apply_h(u, v)
        xs.append(from_homogeneous(u, v))
    return xs


def beam_states(trace: OrbitTrace, x0, k=None):
    if k is None:
        k = len(trace)
    u, v = as_homogeneous(x0)
    states = [BeamState(trace.points[0], u, v)]
    for i in range(k):
        u, v = step_map(trace, i).apply_h(u, v)
        states.append(BeamState(trace.points[i + 1], u, v))
    return states


def linearity_profile(trace: OrbitTrace, k=None):
    """Booleans: is the cumulative focusing map A_i affine, i = 1..k."""
    return [m.is_linear() for m in focusing_maps(trace, k)]


def lift_matrix(curve, p):
    """Homogeneous matrix sending (x : 1) to the tangent vector (ds, da)
    of a deformation focusing at x."""
    kappa = float(curve.curvature(p.s))
    return np.array([[1.0, 0.0], [-kappa, np.sin(p.alpha)]])


def project_matrix(curve, p):
    """Inverse identification: tangent vector (ds, da) to homogeneous focus."""
    kappa = float(curve.curvature(p.s))
    return np.array([[np.sin(p.alpha), 0.0], [kappa, 1.0]])


def projectivized_jacobian(curve, p, q=None, jac=None):
    """The billiard-map differential at p acting on focusing coordinates.

    Conjugates DF by the tangent-vector/focus identification at both
    ends. Must agree with :func:`step_map` built from the same chord.
    """
    from .phasemap import PhasePoint, step

    if q is None:
        q = step(curve, p)
    if jac is None:
        l, a0, a1 = chord_arrays(curve, p.s, q.s)
        jac = jacobian_from_chord(curve, Chord(p.s, q.s, float(l), float(a0), float(a1)))
    q = PhasePoint(float(q.s), float(q.alpha))
    return ProjectiveMap(project_matrix(curve, q) @ jac @ lift_matrix(curve, p))


@dataclass
class DerivativeResult:
    value: float
    chart: str  # "x" for the plain product, else which chart was used
    factors: np.ndarray | None = None


def derivative_product(trace: OrbitTrace, x0, k):
    """dx_k/dx_0 as the product of one-step factors (x_i - lam_i)^2 / lam_i^2.

    Requires the propagated foci x_1..x_k; when the whole chain is
    finite the product formula applies directly (flat vertices
    contribute a limiting factor of 1). If a pole appears anywhere the
    derivative is computed from the composed map in an appropriate
    chart and flagged.
    """
    if not (1 <= k <= len(trace)):
        raise IndexError(f"k={k} outside 1..{len(trace)}")
    xs = np.array(propagate(trace, x0, k))
    lams = trace.lams[1:k + 1]
    finite = np.all(np.isfinite(xs))
    if finite:
        flat = np.isinf(lams)
        factors = np.ones(k)
        factors[~flat] = (xs[1:][~flat] - lams[~flat]) ** 2 / lams[~flat] ** 2
        return DerivativeResult(float(np.prod(factors)), "x", factors)

    comp = focusing_maps(trace, k)[-1]
    a, b, c, d = comp.a, comp.b, comp.c, comp.d
    det = comp.det()
    if np.isinf(xs[0]):
        # chart w = 1/x at the source: x_k as a function of w_0 near 0
        return DerivativeResult(float(-det / c ** 2) if c != 0 else np.inf, "w0", None)
    if np.isinf(xs[k]):
        # chart w = 1/x at the target: d(1/x_k)/dx_0
        return DerivativeResult(float(-det / (a * xs[0] + b) ** 2), "wk", None)
    # pole strictly inside the chain; the composed map is still smooth
    return DerivativeResult(float(comp.derivative(xs[0])), "composed", None)
