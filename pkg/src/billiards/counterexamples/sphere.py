"""Geodesic billiards in capped spherical lunes with open sets of periodic points.

The table lives on the unit sphere: two meridian walls through the
poles meet at angle p*pi/q (p < q coprime), and the polar corners are
cut off by small-circle arcs tangent to both walls at latitudes
+-theta. Every phase point close enough to the equatorial bounce orbit
is periodic: unfolding the reflections tiles a fan of lune copies whose
chain closes after 2q reflections while the unfolded great circle winds
p times around, so the orbit closes with minimal period 2q and total
geodesic length 2*p*pi. (The equatorial center point itself is the lone
exception: it retraces one chord and is 2-periodic.)

Nothing here depends on the caps beyond "orbits never reach them", so
replacing a cap by any outward bulge that leaves the walls alone -
convexity lost - certifies the same open set.
"""

import math

import numpy as np
from dataclasses import dataclass

from ..errors import InvalidSpecError, TangentialHitError, WallExitError

_RETURN_TOL = 1e-9


def _unit(v):
    return v / np.linalg.norm(v)


def latitude(p):
    return math.asin(max(-1.0, min(1.0, p[2])))


def longitude(p):
    return math.atan2(p[1], p[0])


@dataclass
class CapArc:
    """Small-circle arc tangent to both meridian walls at latitude theta.

    The supporting circle is {P . axis = h}; the arc is the piece
    between the tangency points passing nearest the pole. ``frame``
    spans the circle's plane, so points are center + r*(cos u e1 +
    sin u e2) with u in [0, u_span].
    """

    axis: np.ndarray
    h: float
    e1: np.ndarray
    e2: np.ndarray
    u0: float
    u_span: float
    length: float
    pole: int  # +1 upper cap, -1 lower
    bulge: object = None  # optional latitude offset, see BulgeSpec

    @property
    def radius(self):
        return math.sqrt(max(0.0, 1.0 - self.h * self.h))

    def point(self, arc_s):
        u = self.u0 + self.u_span * arc_s / self.length
        return self.h * self.axis + self.radius * (np.cos(u) * self.e1 + np.sin(u) * self.e2)

    def tangent(self, arc_s):
        u = self.u0 + self.u_span * arc_s / self.length
        t = self.radius * (-np.sin(u) * self.e1 + np.cos(u) * self.e2)
        return _unit(t) * np.sign(self.u_span)


@dataclass
class BulgeSpec:
    """Latitude offset added to a cap, vanishing to second order at the walls.

    amplitude > 0 pushes the cap toward its pole (a bigger, generally
    nonconvex table); amplitude < 0 intrudes toward the equator.
    """

    cap: str  # "upper" | "lower"
    amplitude: float
    power: int = 2

    def __post_init__(self):
        if self.cap not in ("upper", "lower"):
            raise InvalidSpecError(f"bulge cap must be 'upper' or 'lower', got {self.cap!r}")
        if self.power < 2:
            raise InvalidSpecError(
                "bulge-touches-meridian: bump must vanish to second order at the walls")

    def offset(self, frac):
        """Latitude offset at relative longitude frac in [0, 1]."""
        frac = np.asarray(frac, dtype=float)
        return self.amplitude * (4.0 * frac * (1.0 - frac)) ** self.power


class SphereBigonTable:
    """Capped lune billiard table on the unit sphere."""

    def __init__(self, p, q, theta=1.0, bulges=()):
        if p < 1 or q <= p:
            raise InvalidSpecError(f"need 1 <= p < q, got p={p}, q={q}")
        if math.gcd(p, q) != 1:
            raise InvalidSpecError(f"p={p} and q={q} must be coprime")
        if not (0.0 < theta < math.pi / 2):
            raise InvalidSpecError("tangency latitude must lie in (0, pi/2)")
        self.p = int(p)
        self.q = int(q)
        self.phi_b = p * math.pi / q
        phi_m = 0.5 * self.phi_b
        if theta <= phi_m:
            raise InvalidSpecError(
                f"tangency latitude {theta:.3f} too low for bigon angle "
                f"{self.phi_b:.3f}; caps would cross the equator")
        self.theta = float(theta)
        # wall planes: alpha is {y = 0} with the lune on y >= 0, beta the
        # meridian plane at longitude phi_b
        self.n_alpha = np.array([0.0, 1.0, 0.0])
        self.n_beta = np.array([-math.sin(self.phi_b), math.cos(self.phi_b), 0.0])
        self.caps = {
            "upper": self._make_cap(+1, theta),
            "lower": self._make_cap(-1, theta),
        }
        for spec in bulges:
            self._apply_bulge(spec)
        self._build_arclength()

    # -- construction -------------------------------------------------------

    def _make_cap(self, pole, theta):
        phi_m = 0.5 * self.phi_b
        lat = pole * theta
        axis = _unit(np.array([
            math.cos(phi_m),
            math.sin(phi_m),
            math.cos(phi_m) * math.tan(lat),
        ]))
        a_pt = np.array([math.cos(lat), 0.0, math.sin(lat)])  # tangency on alpha
        h = float(a_pt @ axis)
        if not (0.0 < h < 1.0):
            raise InvalidSpecError("cap circle degenerate; adjust tangency latitude")
        center = h * axis
        r = math.sqrt(1.0 - h * h)
        e1 = _unit(a_pt - center)
        e2 = np.cross(axis, e1)
        b_pt = self._reflect_to_beta(a_pt)
        w = b_pt - center
        u_b = math.atan2(float(w @ e2), float(w @ e1))
        top = self._plane_top(center, r, pole)
        u_top = math.atan2(float((top - center) @ e2), float((top - center) @ e1))
        # take the arc from the alpha tangency to the beta tangency that
        # passes the point nearest the pole (the other arc dips toward
        # the equator and would make the table nonconvex)
        span = u_b % (2.0 * math.pi)
        if not (0.0 < u_top % (2.0 * math.pi) < span):
            span = span - 2.0 * math.pi
        if pole * latitude(top) >= math.pi / 2 - 1e-9:
            raise InvalidSpecError("cap reaches the pole")
        if pole * latitude(top) <= 0.0:
            raise InvalidSpecError("cap crosses the equator")
        length = abs(span) * r
        return CapArc(axis=axis, h=h, e1=e1, e2=e2, u0=0.0,
                      u_span=span, length=length, pole=pole)

    @staticmethod
    def _plane_top(center, r, pole):
        """Point of the small circle closest to the pole (max |latitude|)."""
        axis = _unit(center)
        z = np.array([0.0, 0.0, float(pole)])
        w = z - (z @ axis) * axis
        if np.linalg.norm(w) < 1e-15:
            w = np.array([1.0, 0.0, 0.0])
        return center + r * _unit(w)

    def _reflect_to_beta(self, pt):
        """Mirror a point on wall alpha to the symmetric point on beta."""
        n = _unit(np.array([-math.sin(0.5 * self.phi_b), math.cos(0.5 * self.phi_b), 0.0]))
        return pt - 2.0 * float(pt @ n) * n

    def _apply_bulge(self, spec):
        cap = self.caps[spec.cap]
        cap.bulge = spec
        fr = np.linspace(0.0, 1.0, 257)
        lats = np.array([latitude(self._bulged_cap_point(cap, f)) for f in fr])
        if np.abs(lats).max() >= math.pi / 2 - 1e-9:
            cap.bulge = None
            raise InvalidSpecError("bulge pushes the cap past the pole")

    def _build_arclength(self):
        th = self.theta
        wall_len = 2.0 * th
        self._seg_order = ["alpha", "upper", "beta", "lower"]
        self._cap_len_cache = {w: self._cap_length(self.caps[w]) for w in ("upper", "lower")}
        lengths = [wall_len, self._cap_len_cache["upper"],
                   wall_len, self._cap_len_cache["lower"]]
        self._cum = np.concatenate([[0.0], np.cumsum(lengths)])
        self.total_length = float(self._cum[-1])
        # equator crossing of wall alpha: wall runs from -theta up to +theta
        self.s_equator_alpha = th
        self._clearance = None

    def _cap_length(self, cap):
        if cap.bulge is None:
            return cap.length
        # bulged caps are latitude graphs over longitude; integrate numerically
        fr = np.linspace(0.0, 1.0, 513)
        pts = np.array([self._bulged_cap_point(cap, f) for f in fr])
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())

    def _bulged_cap_point(self, cap, frac):
        base = cap.point(frac * cap.length)
        lat = latitude(base) + float(cap.bulge.offset(frac))
        lon = longitude(base)
        return np.array([math.cos(lat) * math.cos(lon),
                         math.cos(lat) * math.sin(lon),
                         math.sin(lat)])

    # -- geometry queries ----------------------------------------------------

    def cap_min_abs_latitude(self, which, bulged=True):
        cap = self.caps[which]
        if cap.bulge is None or not bulged:
            return self.theta  # tangency points are the arc's lowest latitudes
        fr = np.linspace(0.0, 1.0, 257)
        lats = [abs(latitude(self._bulged_cap_point(cap, f))) for f in fr]
        return float(min(lats))

    def clearance_latitude(self):
        """Orbits staying strictly below this |latitude| never meet a cap."""
        if self._clearance is None:
            self._clearance = min(self.cap_min_abs_latitude("upper"),
                                  self.cap_min_abs_latitude("lower"),
                                  self.theta)
        return self._clearance

    def wall_point(self, wall, lat):
        p = np.array([math.cos(lat), 0.0, math.sin(lat)])
        if wall == "beta":
            rot = self._rot_z(self.phi_b)
            return rot @ p
        return p

    @staticmethod
    def _rot_z(angle):
        c, s = math.cos(angle), math.sin(angle)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def boundary_point(self, s):
        seg, local = self._locate(s)
        if seg == "alpha":
            return self.wall_point("alpha", -self.theta + local)
        if seg == "beta":
            return self.wall_point("beta", self.theta - local)
        cap = self.caps[seg]
        seg_len = self._cap_len_cache[seg]
        # caps were built from the alpha tangency to the beta tangency;
        # the boundary traverses the lower cap the other way (beta back
        # to alpha)
        frac = local / seg_len if seg == "upper" else 1.0 - local / seg_len
        if cap.bulge is None:
            return cap.point(frac * cap.length)
        return self._bulged_cap_point(cap, frac)

    def _locate(self, s):
        s = s % self.total_length
        idx = int(np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, 3))
        return self._seg_order[idx], s - self._cum[idx]

    def wall_arclength(self, wall, lat):
        """Boundary coordinate of the point at the given latitude on a wall."""
        if abs(lat) > self.theta:
            raise WallExitError(f"latitude {lat:.4f} beyond tangency {self.theta:.4f}")
        if wall == "alpha":
            return self._cum[0] + (lat + self.theta)
        return self._cum[2] + (self.theta - lat)

    def boundary_tangent(self, s):
        seg, local = self._locate(s)
        if seg == "alpha":
            lat = -self.theta + local
            return np.array([-math.sin(lat), 0.0, math.cos(lat)])
        if seg == "beta":
            lat = self.theta - local
            d = np.array([math.sin(lat), 0.0, -math.cos(lat)])
            return self._rot_z(self.phi_b) @ d
        cap = self.caps[seg]
        seg_len = self._cap_len_cache[seg]
        frac = local / seg_len if seg == "upper" else 1.0 - local / seg_len
        sgn = 1.0 if seg == "upper" else -1.0
        if cap.bulge is None:
            return sgn * cap.tangent(frac * cap.length)
        eps = 1e-6
        a = self._bulged_cap_point(cap, max(0.0, frac - eps))
        b = self._bulged_cap_point(cap, min(1.0, frac + eps))
        return sgn * _unit(b - a)

    def inward_normal(self, s):
        p = self.boundary_point(s)
        t = self.boundary_tangent(s)
        return np.cross(t, p)


def make_sphere_table(p, q, theta=1.0, bulges=()):
    return SphereBigonTable(p, q, theta=theta, bulges=bulges)


# ---------------------------------------------------------------------------
# the geodesic billiard step


def _wall_hits(table, wall, pos, vel):
    """Intersection parameters of the geodesic with one meridian wall."""
    n = table.n_alpha if wall == "alpha" else table.n_beta
    a = float(pos @ n)
    b = float(vel @ n)
    if a == 0.0 and b == 0.0:
        return []
    t0 = math.atan2(-a, b) % math.pi
    out = []
    for t in (t0, t0 + math.pi):
        pt = math.cos(t) * pos + math.sin(t) * vel
        lon = longitude(pt)
        ref_lon = 0.0 if wall == "alpha" else table.phi_b
        if abs((lon - ref_lon + math.pi) % (2.0 * math.pi) - math.pi) < 1e-9:
            lat = latitude(pt)
            if abs(lat) <= table.theta + 1e-12:
                out.append((t % (2.0 * math.pi), wall, pt))
    return out


def _cap_hits(table, which, pos, vel):
    cap = table.caps[which]
    if cap.bulge is not None:
        return _bulged_cap_hits(table, which, pos, vel)
    a = float(pos @ cap.axis)
    b = float(vel @ cap.axis)
    r = math.hypot(a, b)
    if r < abs(cap.h):
        return []
    phase = math.atan2(b, a)
    dt = math.acos(max(-1.0, min(1.0, cap.h / r)))
    out = []
    for t in (phase + dt, phase - dt):
        t = t % (2.0 * math.pi)
        pt = math.cos(t) * pos + math.sin(t) * vel
        w = pt - cap.h * cap.axis
        u = math.atan2(float(w @ cap.e2), float(w @ cap.e1))
        frac = (u - cap.u0) / cap.u_span
        if -1e-9 <= frac <= 1.0 + 1e-9:
            out.append((t, which, pt))
    return out


def _bulged_cap_hits(table, which, pos, vel, samples=256):
    """Sampled bracketing of geodesic-vs-bulged-cap crossings."""
    cap = table.caps[which]
    pole = cap.pole

    def gap(t):
        pt = math.cos(t) * pos + math.sin(t) * vel
        lon = longitude(pt) % (2.0 * math.pi)
        if not (0.0 <= lon <= table.phi_b):
            return None
        frac = lon / table.phi_b
        base = cap.point(frac * cap.length)
        cap_lat = latitude(base) + float(cap.bulge.offset(frac))
        return pole * (cap_lat - latitude(pt))

    ts = np.linspace(0.0, 2.0 * math.pi, samples + 1)
    vals = [gap(t) for t in ts]
    out = []
    for i in range(samples):
        g0, g1 = vals[i], vals[i + 1]
        if g0 is None or g1 is None or g0 * g1 > 0:
            continue
        lo, hi = ts[i], ts[i + 1]
        glo = g0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            gm = gap(mid)
            if gm is None:
                break
            if gm * glo > 0:
                lo, glo = mid, gm
            else:
                hi = mid
        t = 0.5 * (lo + hi)
        pt = math.cos(t) * pos + math.sin(t) * vel
        out.append((t, which, pt))
    return out


def sphere_geodesic_step(table, s, alpha, min_t=1e-9):
    """One bounce of the geodesic billiard; returns (s1, alpha1, segment, length).

    Follows the great circle leaving the boundary point at angle alpha
    from the boundary tangent to its first boundary crossing, and
    reflects the direction in the boundary tangent there.
    """
    pos = table.boundary_point(s)
    t_b = table.boundary_tangent(s)
    nu = table.inward_normal(s)
    vel = math.cos(alpha) * t_b + math.sin(alpha) * nu
    vel = _unit(vel - (vel @ pos) * pos)

    hits = []
    for wall in ("alpha", "beta"):
        hits.extend(_wall_hits(table, wall, pos, vel))
    # a great circle with normal n reaches |latitude| asin(hypot(nx, ny));
    # below the cap clearance the caps cannot be hit at all
    n = np.cross(pos, vel)
    max_lat = math.asin(min(1.0, math.hypot(n[0], n[1]) / np.linalg.norm(n)))
    if max_lat + 1e-9 >= table.clearance_latitude():
        for which in ("upper", "lower"):
            hits.extend(_cap_hits(table, which, pos, vel))
    hits = [h for h in hits if h[0] > min_t]
    if not hits:
        raise WallExitError("geodesic found no boundary crossing")
    t, seg, pt = min(hits, key=lambda h: h[0])

    d_in = _unit(-math.sin(t) * pos + math.cos(t) * vel)
    if seg in ("alpha", "beta"):
        s1 = table.wall_arclength(seg, latitude(pt))
    else:
        raise WallExitError(f"orbit hit the {seg} cap")
    t1 = table.boundary_tangent(s1)
    nu1 = table.inward_normal(s1)
    if abs(float(d_in @ nu1)) < 1e-12:
        raise TangentialHitError("grazing incidence at the wall")
    d_out = 2.0 * float(d_in @ t1) * t1 - d_in
    alpha1 = math.atan2(float(d_out @ nu1), float(d_out @ t1))
    return float(s1), float(alpha1), seg, float(t)


# ---------------------------------------------------------------------------
# unfolding


@dataclass
class UnfoldRecord:
    isometries: list
    wall_sequence: list
    closure_index: int | None
    geodesic_normal: np.ndarray
    max_geodesic_deviation: float
    footpoints: list
    segment_lengths: list


def sphere_unfold(table, s, alpha, steps):
    """Unfold a billiard orbit into a single great circle.

    Tracks the accumulated reflection isometries; consecutive lune
    copies differ by one geodesic reflection by construction, and the
    record reports the first index at which the chain of copies returns
    to the identity (2q for wall-bouncing orbits) plus the worst
    off-great-circle deviation of all unfolded footpoints.
    """
    pos = table.boundary_point(s)
    t_b = table.boundary_tangent(s)
    nu = table.inward_normal(s)
    vel = _unit(math.cos(alpha) * t_b + math.sin(alpha) * nu)
    normal = _unit(np.cross(pos, vel))

    iso = np.eye(3)
    isometries = [iso.copy()]
    walls = []
    footpoints = [pos.copy()]
    seg_lengths = []
    closure = None
    cur_s, cur_a = float(s), float(alpha)
    deviation = 0.0
    for k in range(1, steps + 1):
        s1, a1, seg, t = sphere_geodesic_step(table, cur_s, cur_a)
        if seg not in ("alpha", "beta"):
            raise WallExitError(f"unfolding broken by a {seg}-cap hit at step {k}")
        hit = table.boundary_point(s1)
        unfolded_hit = isometries[-1] @ hit
        deviation = max(deviation, abs(float(unfolded_hit @ normal)))
        n = table.n_alpha if seg == "alpha" else table.n_beta
        refl = np.eye(3) - 2.0 * np.outer(n, n)
        iso = isometries[-1] @ refl
        isometries.append(iso.copy())
        walls.append(seg)
        footpoints.append(hit)
        seg_lengths.append(t)
        if closure is None and np.abs(iso - np.eye(3)).max() <= 1e-9:
            closure = k
        cur_s, cur_a = s1, a1
    return UnfoldRecord(
        isometries=isometries,
        wall_sequence=walls,
        closure_index=closure,
        geodesic_normal=normal,
        max_geodesic_deviation=deviation,
        footpoints=footpoints,
        segment_lengths=seg_lengths,
    )


# ---------------------------------------------------------------------------
# the open-set certificate


@dataclass
class CertificateReport:
    p: int
    q: int
    eps: float
    certified: bool
    n_samples: int
    n_failures: int
    min_period_histogram: dict
    length_min: float
    length_max: float
    expected_period: int
    expected_length: float
    center_period: int
    rect: tuple

    def to_json_obj(self):
        return {
            "p": self.p,
            "q": self.q,
            "eps": self.eps,
            "certified": self.certified,
            "samples": self.n_samples,
            "failures": self.n_failures,
            "min_period_histogram": {str(k): v for k, v in sorted(self.min_period_histogram.items())},
            "length_stats": {"min": self.length_min, "max": self.length_max,
                             "expected": self.expected_length},
            "expected_period": self.expected_period,
            "center_period": self.center_period,
            "rect": list(self.rect),
        }


def _follow_to_return(table, s0, a0, max_steps):
    """Iterate until the phase point returns; (period, total_length)."""
    s, a = s0, a0
    total = 0.0
    for k in range(1, max_steps + 1):
        s, a, seg, t = sphere_geodesic_step(table, s, a)
        total += t
        if abs(s - s0) <= _RETURN_TOL and abs(a - a0) <= _RETURN_TOL:
            return k, total
    raise WallExitError(f"no return within {max_steps} bounces")


def _certificate_pass(table, s0, eps, samples, rng, length_tol, early_stop):
    expected_period = 2 * table.q
    expected_length = 2.0 * table.p * math.pi
    hist = {}
    lmin, lmax = math.inf, -math.inf
    failures = 0
    ss = s0 + rng.uniform(-eps, eps, samples)
    aa = math.pi / 2 + rng.uniform(-eps, eps, samples)
    for s, a in zip(ss, aa):
        if abs(s - s0) < 1e-12 and abs(a - math.pi / 2) < 1e-12:
            continue  # the center bounce is the 2-periodic exception
        try:
            k, total = _follow_to_return(table, float(s), float(a), expected_period)
        except WallExitError:
            failures += 1
            if early_stop:
                return False, hist, lmin, lmax, failures
            continue
        hist[k] = hist.get(k, 0) + 1
        lmin = min(lmin, total)
        lmax = max(lmax, total)
        if k != expected_period or abs(total - expected_length) > length_tol:
            failures += 1
            if early_stop:
                return False, hist, lmin, lmax, failures
    return failures == 0, hist, lmin, lmax, failures


def open_set_certificate(table, eps=1e-2, samples=10000, rng=None, adapt=True,
                         length_tol=1e-6):
    """Verify a phase-space rectangle of periodic points around the equator bounce.

    Samples (s, alpha) in [s0 +- eps] x [pi/2 +- eps] around the
    equator crossing of the first wall. Every sample must close up with
    minimal period 2q and geodesic length 2*p*pi; the center point
    itself is the 2-periodic exception and is skipped. With
    ``adapt=True`` any failure halves the rectangle and restarts, so
    the reported eps is certified by the run itself; with
    ``adapt=False`` the requested rectangle is verified once and
    failures are counted through.
    """
    if rng is None:
        rng = np.random.default_rng(2)
    p, q = table.p, table.q
    s0 = table.wall_arclength("alpha", 0.0)

    while True:
        ok, hist, lmin, lmax, failures = _certificate_pass(
            table, s0, eps, samples, rng, length_tol, early_stop=adapt)
        if ok or not adapt:
            break
        eps *= 0.5
        if eps < 1e-8:
            raise WallExitError("certificate rectangle shrank to nothing")

    center_period, _ = _follow_to_return(table, s0, math.pi / 2, 2 * q)
    return CertificateReport(
        p=p,
        q=q,
        eps=eps,
        certified=bool(ok),
        n_samples=samples,
        n_failures=failures,
        min_period_histogram=hist,
        length_min=lmin,
        length_max=lmax,
        expected_period=2 * q,
        expected_length=2.0 * p * math.pi,
        center_period=center_period,
        rect=(s0 - eps, s0 + eps, math.pi / 2 - eps, math.pi / 2 + eps),
    )


def nonconvex_variant(table, bulge, eps=1e-2, samples=10000, rng=None, adapt=True):
    """Rebuild the table with a bulged cap and re-run the certificate.

    The bulge leaves both meridian wall segments untouched, so orbits
    of the certified neighborhood never notice the change; an intruding
    (negative) bulge that reaches the orbit tube surfaces as wall-exit
    failures instead (run with adapt=False to count them).
    """
    if isinstance(bulge, dict):
        bulge = BulgeSpec(**bulge)
    variant = SphereBigonTable(table.p, table.q, theta=table.theta, bulges=(bulge,))
    cert = open_set_certificate(variant, eps=eps, samples=samples, rng=rng, adapt=adapt)
    return variant, cert
