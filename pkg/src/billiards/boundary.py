"""Billiard tables as arclength-parametrized closed plane curves.

A table is a positively oriented, piecewise-smooth closed curve. Every
query is in terms of the arclength coordinate ``s`` measured along the
curve; ``position``, ``tangent`` and ``curvature`` accept scalars or
arrays. The inward normal is the tangent rotated by +90 degrees, so a
direction making an angle ``alpha`` in (0, pi) with the tangent points
into the domain.

Chords carry the two angles ``alpha0``, ``alpha1`` between the directed
chord and the tangents at its endpoints, measured so that a specular
reflection at a point means "incoming chord angle equals outgoing chord
angle". The closed-form partial derivatives of (l, alpha0, alpha1) with
respect to the endpoint arclengths are provided by
:func:`chord_differentials`; everything downstream (billiard-map
Jacobians, perimeter gradients) is assembled from them.
"""

import numpy as np
from dataclasses import dataclass
from scipy.special import ellipe, ellipeinc

from .errors import (
    CornerChordError,
    DegenerateChordError,
    InvalidSpecError,
    TangentialChordError,
)

TANGENTIAL_TOL = 1e-8
CORNER_TOL = 1e-8


def rot90(v):
    """Rotate planar vectors by +90 degrees: (x, y) -> (-y, x)."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def dot2(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]


# ---------------------------------------------------------------------------
# segments


class _Segment:
    """One smooth arc, parametrized by local arclength u in [0, length]."""

    length = 0.0

    def point(self, u):
        raise NotImplementedError

    def tangent(self, u):
        raise NotImplementedError

    def curvature(self, u):
        raise NotImplementedError

    def curvature_derivative(self, u):
        # default: smoothed five-point stencil on the curvature
        u = np.atleast_1d(np.asarray(u, dtype=float))
        h = 1e-4 * max(self.length, 1.0)
        h = min(h, self.length / 8.0)
        stencil = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
        uu = np.clip(u[:, None] + h * np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), 0.0, self.length)
        return (self.curvature(uu.ravel()).reshape(uu.shape) * stencil).sum(axis=1)


class ArcSegment(_Segment):
    """Circular arc; ``turn`` is the signed subtended angle (+ for CCW)."""

    def __init__(self, center, radius, start_angle, turn):
        if radius <= 0:
            raise InvalidSpecError(f"arc radius must be positive, got {radius}")
        if turn == 0:
            raise InvalidSpecError("arc with zero turn")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.start_angle = float(start_angle)
        self.turn = float(turn)
        self.sign = 1.0 if turn > 0 else -1.0
        self.length = self.radius * abs(self.turn)

    def _phi(self, u):
        return self.start_angle + self.sign * np.asarray(u, dtype=float) / self.radius

    def point(self, u):
        phi = self._phi(u)
        return self.center + self.radius * np.stack([np.cos(phi), np.sin(phi)], axis=-1)

    def tangent(self, u):
        phi = self._phi(u)
        return self.sign * np.stack([-np.sin(phi), np.cos(phi)], axis=-1)

    def curvature(self, u):
        return np.full(np.shape(np.asarray(u)), self.sign / self.radius)

    def curvature_derivative(self, u):
        return np.zeros(np.shape(np.asarray(u)))


class LineSegment(_Segment):
    def __init__(self, p0, p1):
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        d = self.p1 - self.p0
        self.length = float(np.hypot(*d))
        if self.length <= 0:
            raise InvalidSpecError("zero-length line segment")
        self.dir = d / self.length

    def point(self, u):
        u = np.asarray(u, dtype=float)
        return self.p0 + u[..., None] * self.dir

    def tangent(self, u):
        return np.broadcast_to(self.dir, np.shape(np.asarray(u)) + (2,)).copy()

    def curvature(self, u):
        return np.zeros(np.shape(np.asarray(u)))

    def curvature_derivative(self, u):
        return np.zeros(np.shape(np.asarray(u)))


class EllipseSegment(_Segment):
    """Full ellipse x = a cos t, y = b sin t, reparametrized by arclength.

    The arclength function is evaluated through incomplete elliptic
    integrals of the second kind, exact to machine precision; inversion
    uses a dense interpolation seed refined by Newton on the exact
    arclength (speed is bounded away from zero).
    """

    _GRID = 4096

    def __init__(self, a, b):
        if a <= 0 or b <= 0:
            raise InvalidSpecError(f"degenerate ellipse axes a={a}, b={b}")
        self.a = float(a)
        self.b = float(b)
        if self.a >= self.b:
            self._m = 1.0 - (self.b / self.a) ** 2
        else:
            self._m = 1.0 - (self.a / self.b) ** 2
        self.length = float(self._arc(2.0 * np.pi))
        t = np.linspace(0.0, 2.0 * np.pi, self._GRID + 1)
        self._t_grid = t
        self._s_grid = self._arc(t)

    def _speed(self, t):
        return np.sqrt((self.a * np.sin(t)) ** 2 + (self.b * np.cos(t)) ** 2)

    def _arc(self, t):
        t = np.asarray(t, dtype=float)
        if self.a >= self.b:
            # integrand a*sqrt(1 - m cos^2 t)
            return self.a * (ellipeinc(t - np.pi / 2.0, self._m) + ellipe(self._m))
        return self.b * ellipeinc(t, self._m)

    def _t_of_s(self, u):
        u = np.asarray(u, dtype=float)
        t = np.interp(u, self._s_grid, self._t_grid)
        for _ in range(3):
            t = t - (self._arc(t) - u) / self._speed(t)
        return t

    def point(self, u):
        t = self._t_of_s(u)
        return np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=-1)

    def tangent(self, u):
        t = self._t_of_s(u)
        v = self._speed(t)
        return np.stack([-self.a * np.sin(t) / v, self.b * np.cos(t) / v], axis=-1)

    def curvature(self, u):
        t = self._t_of_s(u)
        return self.a * self.b / self._speed(t) ** 3

    def curvature_derivative(self, u):
        t = self._t_of_s(u)
        v = self._speed(t)
        dk_dt = -3.0 * self.a * self.b * (self.a ** 2 - self.b ** 2) * np.sin(t) * np.cos(t) / v ** 5
        return dk_dt / v


class SupportSegment(_Segment):
    """Smooth convex curve given by a trigonometric support function.

    h(theta) = base + sum_k (c_k cos k theta + s_k sin k theta); the
    boundary point with outer normal angle theta is
    h*(cos, sin) + h'*(-sin, cos), the radius of curvature is h + h''
    (required positive), and ds = (h + h'') dtheta, which integrates in
    closed form.
    """

    _GRID = 4096

    def __init__(self, base, cos_coefs=(), sin_coefs=()):
        self.base = float(base)
        self.c = np.asarray(cos_coefs, dtype=float)
        self.s = np.asarray(sin_coefs, dtype=float)
        nc, ns = len(self.c), len(self.s)
        self._kc = np.arange(1, nc + 1, dtype=float)
        self._ks = np.arange(1, ns + 1, dtype=float)
        theta = np.linspace(0.0, 2.0 * np.pi, self._GRID + 1)
        rho = self._rho(theta)
        if np.min(rho) <= 0:
            raise InvalidSpecError(
                "support function h + h'' must stay positive (non-convex polar_graph spec)")
        self.length = float(self._arc(2.0 * np.pi))
        self._theta_grid = theta
        self._s_grid = self._arc(theta)

    def _h(self, theta):
        theta = np.asarray(theta, dtype=float)[..., None]
        out = np.full(theta.shape[:-1], self.base)
        if len(self.c):
            out = out + (self.c * np.cos(self._kc * theta)).sum(axis=-1)
        if len(self.s):
            out = out + (self.s * np.sin(self._ks * theta)).sum(axis=-1)
        return out

    def _dh(self, theta, order):
        """order-th derivative of the oscillatory part of h."""
        theta = np.asarray(theta, dtype=float)[..., None]
        out = np.zeros(theta.shape[:-1])
        # d/dtheta cos(k t) cycles through -k sin, -k^2 cos, k^3 sin, k^4 cos
        sign_c = [None, -1, -1, 1, 1][order]
        fn_c = [None, np.sin, np.cos, np.sin, np.cos][order]
        sign_s = [None, 1, -1, -1, 1][order]
        fn_s = [None, np.cos, np.sin, np.cos, np.sin][order]
        if len(self.c):
            out = out + sign_c * (self.c * self._kc ** order * fn_c(self._kc * theta)).sum(axis=-1)
        if len(self.s):
            out = out + sign_s * (self.s * self._ks ** order * fn_s(self._ks * theta)).sum(axis=-1)
        return out

    def _rho(self, theta):
        return self._h(theta) + self._dh(theta, 2)

    def _arc(self, theta):
        # integral of rho = h + h'': base*theta + int(osc) + h'(theta) - h'(0)
        theta = np.asarray(theta, dtype=float)
        out = self.base * theta + self._dh(theta, 1) - self._dh(0.0, 1)
        th = theta[..., None]
        if len(self.c):
            out = out + (self.c / self._kc * np.sin(self._kc * th)).sum(axis=-1)
        if len(self.s):
            out = out - (self.s / self._ks * (np.cos(self._ks * th) - 1.0)).sum(axis=-1)
        return out

    def _theta_of_s(self, u):
        u = np.asarray(u, dtype=float)
        theta = np.interp(u, self._s_grid, self._theta_grid)
        for _ in range(3):
            theta = theta - (self._arc(theta) - u) / self._rho(theta)
        return theta

    def point(self, u):
        theta = self._theta_of_s(u)
        ct, st = np.cos(theta), np.sin(theta)
        h = self._h(theta)
        dh = self._dh(theta, 1)
        return np.stack([h * ct - dh * st, h * st + dh * ct], axis=-1)

    def tangent(self, u):
        theta = self._theta_of_s(u)
        return np.stack([-np.sin(theta), np.cos(theta)], axis=-1)

    def curvature(self, u):
        return 1.0 / self._rho(self._theta_of_s(u))

    def curvature_derivative(self, u):
        theta = self._theta_of_s(u)
        rho = self._rho(theta)
        drho = self._dh(theta, 1) + self._dh(theta, 3)
        return -drho / rho ** 3


# ---------------------------------------------------------------------------
# the table


@dataclass(frozen=True)
class Chord:
    """A directed chord from boundary point s0 to s1.

    ``l`` is the euclidean length, ``alpha0``/``alpha1`` the angles in
    (0, pi) between the chord direction and the tangents at the two
    endpoints (outgoing convention at s0, reflected-outgoing at s1).
    """

    s0: float
    s1: float
    l: float
    alpha0: float
    alpha1: float


class BoundaryCurve:
    """Closed, positively oriented, piecewise-smooth billiard boundary."""

    def __init__(self, segments, convexity_unknown=False):
        if not segments:
            raise InvalidSpecError("empty segment list")
        self.segments = list(segments)
        lengths = np.array([seg.length for seg in self.segments])
        if np.any(lengths <= 0):
            raise InvalidSpecError("zero-length segment")
        self._cum = np.concatenate([[0.0], np.cumsum(lengths)])
        self.total_length = float(self._cum[-1])
        self._check_chain()
        self.corners = self._find_corners()
        self._dense = self._make_dense_samples()
        if not self._is_simple():
            raise InvalidSpecError("boundary is self-intersecting")
        self.convex_flag = False if convexity_unknown else self._check_convex()

    # -- construction checks ------------------------------------------------

    def _check_chain(self):
        for i, seg in enumerate(self.segments):
            nxt = self.segments[(i + 1) % len(self.segments)]
            gap = np.linalg.norm(seg.point(seg.length) - nxt.point(0.0))
            if gap > 1e-9 * max(1.0, self.total_length):
                raise InvalidSpecError(
                    f"segment chain not closed at junction {i} (gap {gap:.2e})")

    def _find_corners(self):
        if len(self.segments) == 1:
            t0 = self.segments[0].tangent(0.0)
            t1 = self.segments[0].tangent(self.segments[0].length)
            return [] if np.linalg.norm(t1 - t0) < 1e-9 else [0.0]
        corners = []
        for i, seg in enumerate(self.segments):
            nxt = self.segments[(i + 1) % len(self.segments)]
            if np.linalg.norm(seg.tangent(seg.length) - nxt.tangent(0.0)) > 1e-9:
                corners.append(self._cum[i + 1] % self.total_length)
        return sorted(corners)

    def _make_dense_samples(self, per_unit=64, min_per_seg=48):
        # samples sit at an irrational offset inside each cell so that
        # symmetric chords (diameters, axes) do not land exactly on a
        # sample, which would defeat sign-change bracketing
        off = 0.5 * (np.sqrt(5.0) - 1.0)
        ss = []
        for i, seg in enumerate(self.segments):
            n = max(min_per_seg, int(per_unit * seg.length))
            ss.append(self._cum[i] + (np.arange(n) + off) * seg.length / n)
        s = np.concatenate(ss)
        return s, self.position(s)

    def _is_simple(self, k=256):
        s = np.linspace(0.0, self.total_length, k, endpoint=False)
        p = self.position(s)
        a = p
        b = np.roll(p, -1, axis=0)
        # segment i vs segment j, skipping neighbors (cyclic)
        d1 = b - a
        i_idx, j_idx = np.triu_indices(k, 2)
        keep = ~((i_idx == 0) & (j_idx == k - 1))
        i_idx, j_idx = i_idx[keep], j_idx[keep]
        p1, d1i = a[i_idx], d1[i_idx]
        p2, d2j = a[j_idx], d1[j_idx]
        denom = cross2(d1i, d2j)
        rel = p2 - p1
        with np.errstate(divide="ignore", invalid="ignore"):
            t = cross2(rel, d2j) / denom
            u = cross2(rel, d1i) / denom
        hit = (np.abs(denom) > 1e-14) & (t > 0) & (t < 1) & (u > 0) & (u < 1)
        return not bool(hit.any())

    def _check_convex(self, k=2048):
        s = np.linspace(0.0, self.total_length, k, endpoint=False)
        if np.min(self.curvature(s)) < -1e-12:
            return False
        for i, seg in enumerate(self.segments):
            nxt = self.segments[(i + 1) % len(self.segments)]
            t_in = seg.tangent(seg.length)
            t_out = nxt.tangent(0.0)
            if cross2(t_in, t_out) < -1e-12:
                return False
        return True

    # -- evaluation ----------------------------------------------------------

    def _dispatch(self, s, attr):
        s_in = np.asarray(s, dtype=float)
        scalar = s_in.ndim == 0
        s_mod = np.atleast_1d(s_in) % self.total_length
        idx = np.clip(np.searchsorted(self._cum, s_mod, side="right") - 1,
                      0, len(self.segments) - 1)
        probe = getattr(self.segments[0], attr)(np.zeros(1))
        out = np.empty(s_mod.shape + probe.shape[1:], dtype=float)
        for k, seg in enumerate(self.segments):
            m = idx == k
            if m.any():
                out[m] = getattr(seg, attr)(s_mod[m] - self._cum[k])
        return out[0] if scalar else out

    def position(self, s):
        return self._dispatch(s, "point")

    def tangent(self, s):
        return self._dispatch(s, "tangent")

    def normal(self, s):
        """Inward normal (tangent rotated by +90 degrees)."""
        return rot90(self.tangent(s))

    def curvature(self, s):
        return self._dispatch(s, "curvature")

    def curvature_derivative(self, s):
        return self._dispatch(s, "curvature_derivative")

    def curvature_fd(self, s, h=None):
        """Curvature from finite differences of the tangent angle.

        Independent of the segments' analytic curvature; used as a
        cross-check before identity verdicts.
        """
        if h is None:
            h = 1e-6 * self.total_length
        t_plus = self.tangent(np.asarray(s) + h)
        t_minus = np.asarray(self.tangent(np.asarray(s) - h))
        dphi = np.arctan2(cross2(t_minus, t_plus), dot2(t_minus, t_plus))
        return dphi / (2.0 * h)

    def near_corner(self, s, tol=CORNER_TOL):
        if not self.corners:
            return np.zeros(np.shape(np.asarray(s)), dtype=bool)
        s = np.asarray(s, dtype=float) % self.total_length
        d = np.abs(s[..., None] - np.asarray(self.corners))
        d = np.minimum(d, self.total_length - d)
        return d.min(axis=-1) <= tol

    def diameter(self):
        p = self._dense[1]
        step = max(1, len(p) // 512)
        q = p[::step]
        d2 = ((q[:, None, :] - q[None, :, :]) ** 2).sum(axis=-1)
        return float(np.sqrt(d2.max()))

    def dense_samples(self):
        """Cached (s, position) samples along the boundary, for ray seeding."""
        return self._dense

    def flat_flags(self, s):
        return np.abs(self.curvature(s)) < 1e-14


# ---------------------------------------------------------------------------
# constructors


def circle(radius=1.0):
    if radius <= 0:
        raise InvalidSpecError(f"circle radius must be positive, got {radius}")
    return BoundaryCurve([ArcSegment((0.0, 0.0), radius, 0.0, 2.0 * np.pi)])


def ellipse(a, b):
    if a <= 0 or b <= 0:
        raise InvalidSpecError(f"degenerate ellipse axes a={a}, b={b}")
    return BoundaryCurve([EllipseSegment(a, b)])


def polar_graph(base, cos_coefs=(), sin_coefs=()):
    return BoundaryCurve([SupportSegment(base, cos_coefs, sin_coefs)])


def piecewise(segment_specs):
    segs = []
    for spec in segment_specs:
        kind = spec.get("kind")
        if kind == "arc":
            turn = spec.get("turn")
            if turn is None:
                turn = spec["end_angle"] - spec["start_angle"]
            segs.append(ArcSegment(spec["center"], spec["radius"],
                                   spec["start_angle"], turn))
        elif kind == "line":
            segs.append(LineSegment(spec["start"], spec["end"]))
        else:
            raise InvalidSpecError(f"unknown segment kind {kind!r}")
    return BoundaryCurve(segs)


def make_table(spec):
    """Build a BoundaryCurve from a table-spec dict (see README schema)."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise InvalidSpecError("table spec must be a dict with a 'type' key")
    kind = spec["type"]
    if kind == "circle":
        return circle(spec.get("radius", 1.0))
    if kind == "ellipse":
        return ellipse(spec["a"], spec["b"])
    if kind == "polar_graph":
        return polar_graph(spec.get("base", 1.0), spec.get("cos", ()), spec.get("sin", ()))
    if kind == "piecewise":
        return piecewise(spec["segments"])
    raise InvalidSpecError(f"unknown table type {kind!r}")


# ---------------------------------------------------------------------------
# chords


def chord_arrays(curve, s0, s1):
    """Vectorized (l, alpha0, alpha1) for chords s0 -> s1, no validation.

    Angles come from atan2 and live in (-pi, pi]; interior chords have
    both angles in (0, pi). Used by the perimeter machinery, which only
    needs smoothness.
    """
    s0 = np.asarray(s0, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    p0 = curve.position(s0)
    p1 = curve.position(s1)
    v = p1 - p0
    l = np.sqrt((v ** 2).sum(axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        d = v / l[..., None]
    t0 = curve.tangent(s0)
    t1 = curve.tangent(s1)
    n0 = rot90(t0)
    n1 = rot90(t1)
    alpha0 = np.arctan2(dot2(d, n0), dot2(d, t0))
    alpha1 = np.arctan2(-dot2(d, n1), dot2(d, t1))
    return l, alpha0, alpha1


def chord(curve, s0, s1):
    """Validated chord between two boundary points."""
    L = curve.total_length
    gap = abs((s0 - s1) % L)
    gap = min(gap, L - gap)
    if gap <= 1e-9 * L:
        raise DegenerateChordError(f"s0={s0} and s1={s1} coincide modulo L")
    if bool(curve.near_corner(s0)) or bool(curve.near_corner(s1)):
        raise CornerChordError("chord endpoint within corner exclusion zone")
    l, a0, a1 = chord_arrays(curve, s0, s1)
    for a in (float(a0), float(a1)):
        if min(abs(a), abs(np.pi - a)) < TANGENTIAL_TOL or not (0.0 < a < np.pi):
            raise TangentialChordError(f"chord angle {a} outside (0, pi)")
    return Chord(float(s0 % L), float(s1 % L), float(l), float(a0), float(a1))


def chord_differentials(curve, c):
    """Closed-form partials of (l, alpha0, alpha1) w.r.t. (s0, s1).

    Returns a (3, 2) array; rows are (l, alpha0, alpha1), columns
    (d/ds0, d/ds1):

        dl      = -cos(a0) ds0 + cos(a1) ds1
        dalpha0 = (sin(a0)/l - k0) ds0 + (sin(a1)/l) ds1
        dalpha1 = (-sin(a0)/l) ds0 + (-sin(a1)/l + k1) ds1
    """
    if min(abs(c.alpha0), abs(np.pi - c.alpha0),
           abs(c.alpha1), abs(np.pi - c.alpha1)) < TANGENTIAL_TOL:
        raise TangentialChordError("differentials undefined for tangential chord")
    k0 = float(curve.curvature(c.s0))
    k1 = float(curve.curvature(c.s1))
    sa0, sa1 = np.sin(c.alpha0), np.sin(c.alpha1)
    return np.array([
        [-np.cos(c.alpha0), np.cos(c.alpha1)],
        [sa0 / c.l - k0, sa1 / c.l],
        [-sa0 / c.l, -sa1 / c.l + k1],
    ])
