"""The billiard map on phase space, its differential, and iteration.

Phase points are pairs (s, alpha): footpoint arclength on the boundary
and direction angle in (0, pi) measured from the tangent, so the ray
direction is cos(alpha) * tangent + sin(alpha) * inward_normal. One step
follows the ray to its first boundary intersection and reflects
specularly; the chord angle at the hit point, measured in the
reflected-outgoing convention, is already the new alpha.

The differential ``jacobian`` is assembled analytically from the chord
differentials (finite differences of ``step`` are kept as a test oracle
only). With this orientation convention det(DF) = sin(alpha0)/sin(alpha1)
at every phase point, which is exactly the transport identity of the
invariant measure sin(alpha) ds dalpha.
"""

import numpy as np
from dataclasses import dataclass
from typing import NamedTuple

from .boundary import Chord, chord_arrays, cross2, dot2, rot90
from .errors import CornerHitError, NoIntersectionError, TangentialHitError

_STATUS_OK = 0
_STATUS_NO_HIT = 1
_STATUS_TANGENTIAL = 2
_STATUS_CORNER = 3

TANGENTIAL_TOL = 1e-8
CORNER_TOL = 1e-8


class PhasePoint(NamedTuple):
    s: float
    alpha: float


def ray_direction(curve, s, alpha):
    s = np.asarray(s, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    t = curve.tangent(s)
    n = rot90(t)
    return np.cos(alpha)[..., None] * t + np.sin(alpha)[..., None] * n


def _first_intersection(curve, s0, d):
    """First boundary hit of rays leaving position(s0) in direction d.

    Vectorized over a batch of rays: brackets sign changes of the
    cross-product distance h(u) = d x (position(u) - p0) on a dense
    boundary grid, keeps the bracket with the smallest positive travel
    parameter, and refines it by bisection plus a Newton polish.
    Returns (s_hit, status).
    """
    L = curve.total_length
    s_grid, p_grid = curve.dense_samples()
    k = len(s_grid)
    p0 = curve.position(s0)
    m = len(s0)

    rel = p_grid[None, :, :] - p0[:, None, :]            # (m, k, 2)
    h = d[:, None, 0] * rel[:, :, 1] - d[:, None, 1] * rel[:, :, 0]
    t = d[:, None, 0] * rel[:, :, 0] + d[:, None, 1] * rel[:, :, 1]

    h_next = np.roll(h, -1, axis=1)
    t_next = np.roll(t, -1, axis=1)
    # zero-aware sign change: a root exactly on a sample is a valid bracket
    bracket = (h * h_next < 0.0) | ((h == 0.0) & (h_next != 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(h == h_next, 0.0, h / (h - h_next))
    t_root = t + frac * (t_next - t)
    t_root = np.where(bracket, t_root, np.inf)
    t_root = np.where(t_root > 1e-9 * L, t_root, np.inf)
    # the ray's own footpoint is a root of h; mask out its grid cell
    # (and the neighbor when the footpoint sits on a cell edge)
    j0 = (np.searchsorted(s_grid, s0, side="right") - 1) % k
    rows = np.arange(m)
    t_root[rows, j0] = np.inf
    edge = np.abs(s0 - s_grid[j0]) < 1e-9 * L
    t_root[rows[edge], (j0[edge] - 1) % k] = np.inf
    near_next = np.abs(s_grid[(j0 + 1) % k] - s0) < 1e-9 * L
    t_root[rows[near_next], (j0[near_next] + 1) % k] = np.inf

    j = np.argmin(t_root, axis=1)
    ok = np.isfinite(t_root[rows, j])
    status = np.where(ok, _STATUS_OK, _STATUS_NO_HIT)

    lo = s_grid[j]
    hi = lo + (np.roll(s_grid, -1) - s_grid)[j] % L
    hi = np.where(hi > lo, hi, lo + L / k)  # wraparound cell
    h_lo = h[rows, j]

    def h_of(u):
        q = curve.position(u % L)
        rq = q - p0
        return d[:, 0] * rq[:, 1] - d[:, 1] * rq[:, 0]

    for _ in range(46):
        mid = 0.5 * (lo + hi)
        h_mid = h_of(mid)
        take_lo = h_mid * h_lo > 0.0
        lo = np.where(take_lo, mid, lo)
        h_lo = np.where(take_lo, h_mid, h_lo)
        hi = np.where(take_lo, hi, mid)
    u = 0.5 * (lo + hi)
    for _ in range(3):
        tau = curve.tangent(u % L)
        dh = d[:, 0] * tau[:, 1] - d[:, 1] * tau[:, 0]
        safe = np.abs(dh) > 1e-14
        u = np.where(safe, u - h_of(u) / np.where(safe, dh, 1.0), u)
    u = u % L

    status = np.where(ok & curve.near_corner(u, CORNER_TOL), _STATUS_CORNER, status)
    return u, status


def step_many(curve, s, alpha):
    """Vectorized billiard map. Returns (s1, alpha1, status) arrays."""
    s = np.atleast_1d(np.asarray(s, dtype=float)) % curve.total_length
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    d = ray_direction(curve, s, alpha)
    s1, status = _first_intersection(curve, s, d)

    t1 = curve.tangent(s1)
    n1 = rot90(t1)
    alpha1 = np.arctan2(-dot2(d, n1), dot2(d, t1))
    grazing = np.minimum(np.abs(alpha1), np.abs(np.pi - alpha1)) < TANGENTIAL_TOL
    bad_side = ~((alpha1 > 0.0) & (alpha1 < np.pi))
    status = np.where((status == _STATUS_OK) & (grazing | bad_side),
                      _STATUS_TANGENTIAL, status)
    return s1, alpha1, status


def _raise_status(status, context=""):
    if status == _STATUS_NO_HIT:
        raise NoIntersectionError(context)
    if status == _STATUS_TANGENTIAL:
        raise TangentialHitError(context)
    if status == _STATUS_CORNER:
        raise CornerHitError(context)


def step(curve, p):
    """One application of the billiard map to a phase point."""
    if not (0.0 < p.alpha < np.pi) or min(p.alpha, np.pi - p.alpha) < TANGENTIAL_TOL:
        raise TangentialHitError(f"alpha={p.alpha} outside the open phase space")
    s1, a1, status = step_many(curve, [p.s], [p.alpha])
    _raise_status(int(status[0]), f"at s={p.s:.6g}, alpha={p.alpha:.6g}")
    return PhasePoint(float(s1[0]), float(a1[0]))


def step_back(curve, p):
    """Inverse billiard map via the time-reversal involution (s, a) -> (s, pi - a)."""
    q = step(curve, PhasePoint(p.s, np.pi - p.alpha))
    return PhasePoint(q.s, np.pi - q.alpha)


def jacobian_from_chord(curve, c: Chord):
    """DF at (s0, alpha0) given the realized chord, in (s, alpha) coordinates."""
    k0 = float(curve.curvature(c.s0))
    k1 = float(curve.curvature(c.s1))
    sa0, sa1 = np.sin(c.alpha0), np.sin(c.alpha1)
    a = sa0 / c.l - k0
    b = sa1 / c.l
    cc = -sa0 / c.l
    dd = -sa1 / c.l + k1
    return np.array([
        [-a / b, 1.0 / b],
        [cc - dd * a / b, dd / b],
    ])


def jacobian(curve, p):
    """Differential of the billiard map at p; det = sin(a0)/sin(a1)."""
    q = step(curve, p)
    l, a0, a1 = chord_arrays(curve, p.s, q.s)
    c = Chord(p.s, q.s, float(l), float(a0), float(a1))
    return jacobian_from_chord(curve, c)


@dataclass
class OrbitTrace:
    """A finite orbit with its chord geometry.

    points[i] are the phase points, chords[i] joins footpoints i and
    i+1, lengths[i] = |chord i|, and lams[i] = sin(alpha_i)/(2 k_i) is
    the one-bounce focusing distance at vertex i (infinite on flat
    boundary pieces).
    """

    curve: object
    points: list
    chords: list
    lengths: np.ndarray
    lams: np.ndarray

    def __len__(self):
        return len(self.chords)


def lam_values(curve, s, alpha):
    k = np.asarray(curve.curvature(s), dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(np.abs(k) < 1e-14, np.inf, np.sin(alpha) / (2.0 * k))


def iterate(curve, p, k):
    """Run k billiard steps from p, collecting chords and focusing data."""
    points = [PhasePoint(float(p.s), float(p.alpha))]
    chords = []
    for i in range(k):
        cur = points[-1]
        try:
            nxt = step(curve, cur)
        except Exception as exc:
            exc.args = (f"step {i}: {exc.args[0] if exc.args else ''}",)
            raise
        l, a0, a1 = chord_arrays(curve, cur.s, nxt.s)
        chords.append(Chord(cur.s, nxt.s, float(l), float(a0), float(a1)))
        points.append(nxt)
    s_arr = np.array([q.s for q in points])
    a_arr = np.array([q.alpha for q in points])
    return OrbitTrace(
        curve=curve,
        points=points,
        chords=chords,
        lengths=np.array([c.l for c in chords]),
        lams=lam_values(curve, s_arr, a_arr),
    )


@dataclass
class MeasureDriftReport:
    mu_region: float
    mu_estimate: float
    rel_drift: float
    sigma_rel: float
    n_samples: int
    n_failed: int


def sample_phase_measure(curve, n, rng):
    """Draw n points distributed by the invariant measure sin(a) ds da."""
    s = rng.uniform(0.0, curve.total_length, n)
    alpha = np.arccos(1.0 - 2.0 * rng.uniform(0.0, 1.0, n))
    return s, alpha


def invariant_measure_check(curve, region, k, samples, rng=None):
    """Monte-Carlo drift of the measure of a phase rectangle under k steps.

    ``region`` is (s_lo, s_hi, a_lo, a_hi). The measure of the k-th
    image is estimated by sampling the whole phase space from the
    invariant density and counting backward iterates landing in the
    region; the exact measure of the rectangle is closed form.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    s_lo, s_hi, a_lo, a_hi = region
    L = curve.total_length
    mu_region = (s_hi - s_lo) * (np.cos(a_lo) - np.cos(a_hi))
    mu_total = 2.0 * L

    s, alpha = sample_phase_measure(curve, samples, rng)
    alive = np.ones(samples, dtype=bool)
    # backward step = conjugate forward step by the reversal (s, a) -> (s, pi - a)
    for _ in range(k):
        s1, a1, status = step_many(curve, s[alive], np.pi - alpha[alive])
        good = status == _STATUS_OK
        idx = np.flatnonzero(alive)
        s[idx[good]] = s1[good]
        alpha[idx[good]] = np.pi - a1[good]
        alive[idx[~good]] = False

    inside = alive & (s % L >= s_lo) & (s % L <= s_hi) & (alpha >= a_lo) & (alpha <= a_hi)
    count = int(inside.sum())
    estimate = mu_total * count / samples
    if mu_region == 0.0:
        drift = 0.0 if count == 0 else np.inf
        sigma = 0.0
    else:
        drift = abs(estimate - mu_region) / mu_region
        p_hat = max(count, 1) / samples
        sigma = np.sqrt(p_hat * (1.0 - p_hat) / samples) * mu_total / mu_region
    return MeasureDriftReport(
        mu_region=float(mu_region),
        mu_estimate=float(estimate),
        rel_drift=float(drift),
        sigma_rel=float(sigma),
        n_samples=samples,
        n_failed=int((~alive).sum()),
    )
