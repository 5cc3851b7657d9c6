"""Periodic billiard orbits via the perimeter functional.

An n-tuple of boundary points is a (possibly non-minimal) periodic
orbit exactly when it is a critical point of the inscribed-polygon
perimeter p(s_0..s_{n-1}) = sum of chord lengths, with no repeated
consecutive corners. The gradient entry at a corner is the difference
of the chord-angle cosines there, so criticality is the equal-angles
(specular reflection) condition; gradient and cyclic-tridiagonal
Hessian are closed-form.

Critical points are located by a batched Levenberg-Marquardt iteration
on the gradient system (critical-point search, not ascent: rotation
number p/q orbits with q > 1 include saddles, and integrable tables
carry one-parameter families along which the Hessian is singular).
Every candidate is then verified against the billiard map directly.

Degeneracy of an orbit (monodromy equal to plus or minus the identity)
is detected three independent ways: spectrally from the monodromy
matrix, geometrically from the per-edge identity l_i = lam_i +
lam_{i+1} plus the alternating product of the lam's, and through the
focusing product over propagated beam coordinates.
"""

import numpy as np
from dataclasses import dataclass, field
from fractions import Fraction

from .boundary import Chord, chord_arrays
from .errors import DegenerateStringError, PoleAtSampleError
from .phasemap import (
    OrbitTrace,
    PhasePoint,
    jacobian_from_chord,
    lam_values,
    step,
    step_many,
)

GRAD_ZERO_TOL = 1e-10
CLOSURE_TOL = 1e-9
DEGENERACY_TOL = 1e-8
TRACE_TOL = 1e-6
FROBENIUS_DEG_TOL = 1e-6


# ---------------------------------------------------------------------------
# configurations and the perimeter functional


@dataclass
class TorusConfiguration:
    """An n-tuple of corner arclengths, one point of the n-torus."""

    n: int
    s: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        if self.s.shape != (self.n,):
            raise ValueError(f"expected {self.n} corners, got shape {self.s.shape}")


def _cyclic_gaps(s, L):
    return (np.roll(s, -1, axis=-1) - s) % L


def _min_consecutive_gap(s, L):
    g = _cyclic_gaps(s, L)
    return np.minimum(g, L - g).min(axis=-1)


def _require_nondegenerate(curve, cfg):
    if _min_consecutive_gap(cfg.s, curve.total_length) <= 1e-9 * curve.total_length:
        raise DegenerateStringError("consecutive corners coincide")


def _edges(curve, S):
    """Chord data for all edges of configurations S (batch, n)."""
    S1 = np.roll(S, -1, axis=-1)
    l, a0, a1 = chord_arrays(curve, S, S1)
    return l, a0, a1


def perimeter(curve, cfg):
    _require_nondegenerate(curve, cfg)
    l, _, _ = _edges(curve, cfg.s[None, :])
    return float(l.sum())


def perimeter_gradient(curve, cfg):
    _require_nondegenerate(curve, cfg)
    return _gradient_batch(curve, cfg.s[None, :])[0]


def _gradient_batch(curve, S):
    _, a0, a1 = _edges(curve, S)
    # vertex i: incoming edge i-1 contributes +cos(a1), outgoing edge i -cos(a0)
    return np.roll(np.cos(a1), 1, axis=-1) - np.cos(a0)


def perimeter_hessian(curve, cfg):
    _require_nondegenerate(curve, cfg)
    return _hessian_batch(curve, cfg.s[None, :])[0]


def _hessian_batch(curve, S):
    m, n = S.shape
    l, a0, a1 = _edges(curve, S)
    k_start = curve.curvature(S)
    k_end = np.roll(k_start, -1, axis=-1)
    sa0, sa1 = np.sin(a0), np.sin(a1)
    p00 = sa0 / l - k_start
    p01 = sa1 / l
    p10 = -sa0 / l
    p11 = -sa1 / l + k_end

    H = np.zeros((m, n, n))
    idx = np.arange(n)
    prev = (idx - 1) % n
    nxt = (idx + 1) % n
    # d grad_i / ds_j assembled edge by edge; separate += statements keep
    # the n = 2 case (prev == nxt) accumulating correctly
    H[:, idx, prev] += -sa1[:, prev] * p10[:, prev]
    H[:, idx, idx] += -sa1[:, prev] * p11[:, prev] + sa0[:, idx] * p00[:, idx]
    H[:, idx, nxt] += sa0[:, idx] * p01[:, idx]
    return H


def refine_configurations(curve, S, max_iter=90, tol=1e-12):
    """Batched Levenberg-Marquardt on the perimeter gradient.

    Returns (S_refined, grad_inf_norm). Works through singular Hessians
    (orbit families) by regularization; each configuration converges to
    a nearby critical point or stalls with a large residual.
    """
    S = np.array(S, dtype=float)
    m, n = S.shape
    mu = np.full(m, 1e-3)
    g = _gradient_batch(curve, S)
    gn = np.abs(g).max(axis=1)
    eye = np.eye(n)
    for _ in range(max_iter):
        active = gn > tol
        if not active.any():
            break
        Sa = S[active]
        ga = _gradient_batch(curve, Sa)
        Ha = _hessian_batch(curve, Sa)
        A = Ha @ Ha + mu[active][:, None, None] * eye
        rhs = -np.einsum("bij,bj->bi", Ha, ga)
        try:
            delta = np.linalg.solve(A, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            delta = np.stack([np.linalg.lstsq(Ab, rb, rcond=None)[0]
                              for Ab, rb in zip(A, rhs)])
        trial = Sa + delta
        gt = _gradient_batch(curve, trial)
        gtn = np.abs(gt).max(axis=1)
        better = gtn < gn[active]
        idx = np.flatnonzero(active)
        S[idx[better]] = trial[better]
        gn[idx[better]] = gtn[better]
        mu[idx[better]] = np.maximum(mu[idx[better]] * 0.33, 1e-14)
        mu[idx[~better]] = np.minimum(mu[idx[~better]] * 8.0, 1e8)
    return S % curve.total_length, gn


# ---------------------------------------------------------------------------
# orbits


@dataclass
class PeriodicOrbit:
    n: int
    points: list
    footpoints: np.ndarray
    chords: list
    monodromy: np.ndarray
    trace: float
    classification: str
    rotation_number: Fraction
    minimal_period: int
    perimeter: float
    closure_residual: float


def classify_monodromy(M, trace_tol=TRACE_TOL, frob_tol=FROBENIUS_DEG_TOL):
    tr = float(np.trace(M))
    eye = np.eye(2)
    if np.sqrt(((M - eye) ** 2).sum()) <= frob_tol:
        return "degenerate_plus"
    if np.sqrt(((M + eye) ** 2).sum()) <= frob_tol:
        return "degenerate_minus"
    if abs(abs(tr) - 2.0) <= trace_tol:
        return "parabolic"
    return "hyperbolic" if abs(tr) > 2.0 else "elliptic"


def classify(curve, orbit, trace_tol=TRACE_TOL, frob_tol=FROBENIUS_DEG_TOL):
    """Spectral type of a verified orbit from its monodromy matrix."""
    return classify_monodromy(orbit.monodromy, trace_tol, frob_tol)


def _orbit_chords(curve, s_tuple):
    l, a0, a1 = _edges(curve, s_tuple[None, :])
    return l[0], a0[0], a1[0]


def closure_residual(curve, s_tuple):
    """Deviation of the configuration from a true billiard orbit.

    Launches the phase point of the first edge and follows the billiard
    map n steps; returns the max footpoint/angle mismatch (inf when the
    orbit escapes through a corner or tangency).
    """
    L = curve.total_length
    n = len(s_tuple)
    _, a0, _ = _orbit_chords(curve, s_tuple)
    if not np.all((a0 > 0) & (a0 < np.pi)):
        return np.inf
    s, alpha = float(s_tuple[0]), float(a0[0])
    worst = 0.0
    for i in range(n):
        try:
            s, alpha = step(curve, PhasePoint(s, alpha))
        except Exception:
            return np.inf
        target_s = s_tuple[(i + 1) % n]
        ds = abs((s - target_s) % L)
        ds = min(ds, L - ds)
        worst = max(worst, ds)
    worst = max(worst, abs(alpha - a0[0]))
    return worst


def orbit_from_configuration(curve, s_tuple, closure_tol=CLOSURE_TOL):
    """Build a verified PeriodicOrbit from a critical configuration."""
    L = curve.total_length
    s_tuple = np.asarray(s_tuple, dtype=float) % L
    n = len(s_tuple)
    cfg = TorusConfiguration(n, s_tuple)
    _require_nondegenerate(curve, cfg)
    res = closure_residual(curve, s_tuple)
    if not (res <= closure_tol):
        raise DegenerateStringError(
            f"configuration is not an orbit (closure residual {res:.2e})")
    l, a0, a1 = _orbit_chords(curve, s_tuple)
    chords = [Chord(float(s_tuple[i]), float(s_tuple[(i + 1) % n]),
                    float(l[i]), float(a0[i]), float(a1[i])) for i in range(n)]
    M = np.eye(2)
    for c in chords:
        M = jacobian_from_chord(curve, c) @ M
    points = [PhasePoint(float(s_tuple[i]), float(a0[i])) for i in range(n)]
    gaps = _cyclic_gaps(s_tuple, L)
    winding = int(round(gaps.sum() / L))
    minimal = n
    for d in range(1, n):
        if n % d == 0:
            shift = np.abs((np.roll(s_tuple, -d) - s_tuple) % L)
            shift = np.minimum(shift, L - shift)
            if shift.max() <= 1e-8 * L:
                minimal = d
                break
    return PeriodicOrbit(
        n=n,
        points=points,
        footpoints=s_tuple,
        chords=chords,
        monodromy=M,
        trace=float(np.trace(M)),
        classification=classify_monodromy(M),
        rotation_number=Fraction(winding, n),
        minimal_period=minimal,
        perimeter=float(l.sum()),
        closure_residual=float(res),
    )


def orbit_trace(curve, orbit, start=0, periods=1):
    """OrbitTrace of a periodic orbit, cyclically unrolled from ``start``."""
    n = orbit.n
    idx = [(start + i) % n for i in range(n * periods + 1)]
    points = [orbit.points[i] for i in idx]
    chords = [orbit.chords[i] for i in idx[:-1]]
    s_arr = np.array([p.s for p in points])
    a_arr = np.array([p.alpha for p in points])
    return OrbitTrace(
        curve=curve,
        points=points,
        chords=chords,
        lengths=np.array([c.l for c in chords]),
        lams=lam_values(curve, s_arr, a_arr),
    )


def _footpoint_distance(sa, sb, L):
    d = np.abs(sa[:, None] - sb[None, :]) % L
    d = np.minimum(d, L - d)
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def _dedupe(curve, orbits, symmetry=None, tol_factor=1e-7):
    L = curve.total_length
    kept = []
    for orb in orbits:
        dup = False
        for other in kept:
            if other.n != orb.n:
                continue
            if symmetry == "rotation":
                # reversal flips the winding p -> n - p
                rot_a = min(orb.rotation_number, 1 - orb.rotation_number)
                rot_b = min(other.rotation_number, 1 - other.rotation_number)
                if (rot_a == rot_b
                        and abs(other.perimeter - orb.perimeter) <= 1e-7 * max(1.0, L)):
                    dup = True
                    break
            if _footpoint_distance(orb.footpoints, other.footpoints, L) <= tol_factor * L:
                dup = True
                break
        if not dup:
            kept.append(orb)
    return kept


def birkhoff_seeds(curve, n, offsets=6):
    """Evenly wound n-tuples for every winding number, several phases each."""
    L = curve.total_length
    seeds = []
    for p in range(1, n):
        for off in np.linspace(0.0, L / n, offsets, endpoint=False):
            seeds.append((off + np.arange(n) * p * L / n) % L)
    return np.array(seeds)


def find_periodic(curve, n, seeds="birkhoff", rng=None, symmetry=None,
                  closure_tol=CLOSURE_TOL, grad_tol=GRAD_ZERO_TOL):
    """Locate period-n orbits by multistart critical-point search.

    ``seeds`` is either the string "birkhoff" (stratified by winding
    number), an integer count of random configurations, or an explicit
    (m, n) array. Each refined configuration is kept only if its
    perimeter gradient vanishes, the polygon is nondegenerate, and the
    billiard map itself closes up on it.
    """
    if n < 2:
        raise ValueError("period must be at least 2")
    L = curve.total_length
    if isinstance(seeds, str) and seeds == "birkhoff":
        S0 = birkhoff_seeds(curve, n)
    elif isinstance(seeds, (int, np.integer)):
        if rng is None:
            rng = np.random.default_rng(0)
        S0 = rng.uniform(0.0, L, (int(seeds), n))
    else:
        S0 = np.asarray(seeds, dtype=float)
    S, gn = refine_configurations(curve, S0)
    found = []
    for row, g in zip(S, gn):
        if g > grad_tol:
            continue
        if _min_consecutive_gap(row, L) <= 1e-6 * L:
            continue
        try:
            found.append(orbit_from_configuration(curve, row, closure_tol))
        except DegenerateStringError:
            continue
    found.sort(key=lambda o: (-o.perimeter, o.rotation_number))
    return _dedupe(curve, found, symmetry=symmetry)


# ---------------------------------------------------------------------------
# degeneracy detectors


@dataclass
class GeometricDegeneracyReport:
    even_n: bool
    edge_residuals: np.ndarray
    product_residual_rel: float
    degenerate: bool
    edge_scale: float
    margins: dict


def degeneracy_geometric(curve, orbit, tol=DEGENERACY_TOL):
    """Edge identity l_i = lam_i + lam_{i+1} plus the alternating product.

    Both must hold (and the period must be even) for the orbit to be
    degenerate; residuals and their margins over the thresholds are
    reported either way.
    """
    lams = lam_values(curve, orbit.footpoints,
                      np.array([p.alpha for p in orbit.points]))
    l = np.array([c.l for c in orbit.chords])
    edge_res = l - lams - np.roll(lams, -1)
    even = orbit.n % 2 == 0
    if even:
        prod_even = np.prod(lams[0::2])
        prod_odd = np.prod(lams[1::2])
        denom = max(abs(prod_even), abs(prod_odd), 1e-300)
        prod_res = abs(prod_even - prod_odd) / denom
    else:
        prod_res = np.inf
    scale = tol * curve.diameter()
    degenerate = bool(even and np.abs(edge_res).max() <= scale and prod_res <= tol)
    return GeometricDegeneracyReport(
        even_n=even,
        edge_residuals=edge_res,
        product_residual_rel=float(prod_res),
        degenerate=degenerate,
        edge_scale=float(scale),
        margins={
            "edge": float(np.abs(edge_res).max() / scale),
            "product": float(prod_res / tol) if np.isfinite(prod_res) else np.inf,
        },
    )


@dataclass
class FocusingDegeneracyReport:
    degenerate: bool
    max_residual_rel: float
    sign: int
    n_samples: int
    n_resampled: int


def degeneracy_focusing(curve, orbit, x0_samples=None, rng=None,
                        tol=DEGENERACY_TOL, max_resample=64):
    """Focusing-product test over all cyclic starting points.

    Propagates beam coordinates around the orbit and compares
    prod(x_i - lam_i) with +-prod(lam_i); the sign alternates with the
    parity of n/2. Degenerate only if the residual vanishes for every
    sample and every starting point. Samples landing on a pole are
    skipped and redrawn.
    """
    from .beam import propagate

    if rng is None:
        rng = np.random.default_rng(7)
    diam = curve.diameter()
    if x0_samples is None:
        x0_samples = list(rng.uniform(-1.5 * diam, 1.5 * diam, 6))
    n = orbit.n
    sign = 1 if n % 4 == 0 else -1
    worst = 0.0
    resampled = 0
    used = 0
    for start in range(n):
        tr = orbit_trace(curve, orbit, start=start)
        lams = tr.lams[:n]
        target = sign * np.prod(lams)
        for x0 in x0_samples:
            x = float(x0)
            for _ in range(max_resample):
                xs = np.array(propagate(tr, x, n))
                vals = xs[:n] - lams
                if np.all(np.isfinite(vals)) and np.abs(vals).max() < 1e8 * diam:
                    break
                x = float(rng.uniform(-1.5 * diam, 1.5 * diam))
                resampled += 1
            else:
                raise PoleAtSampleError("could not find a pole-free beam sample")
            prod = np.prod(vals)
            denom = max(abs(prod), abs(target), 1e-300)
            worst = max(worst, abs(prod - target) / denom)
            used += 1
    return FocusingDegeneracyReport(
        degenerate=bool(n % 2 == 0 and worst <= tol),
        max_residual_rel=float(worst),
        sign=sign,
        n_samples=used,
        n_resampled=resampled,
    )


# ---------------------------------------------------------------------------
# phase-space atlas


@dataclass
class AtlasEntry:
    n: int
    cell: tuple
    s: float
    alpha: float
    classification: str
    trace: float
    perimeter: float


@dataclass
class PhaseAtlas:
    grid: tuple
    n_range: tuple
    entries: list
    masks: dict
    fraction_periodic: float
    meta: dict = field(default_factory=dict)

    def mask_any(self):
        out = np.zeros(self.grid, dtype=bool)
        for m in self.masks.values():
            out |= m
        return out

    def to_json_obj(self):
        return {
            "grid": list(self.grid),
            "n_range": list(self.n_range),
            "fraction_periodic": self.fraction_periodic,
            "entries": [
                {
                    "n": e.n,
                    "cell": list(e.cell),
                    "s": e.s,
                    "alpha": e.alpha,
                    "classification": e.classification,
                    "trace": e.trace,
                    "perimeter": e.perimeter,
                }
                for e in self.entries
            ],
            **self.meta,
        }


def has_thick_cluster(mask):
    """True if some 2x2 block of cells is fully marked (s-axis wraps)."""
    m = np.concatenate([mask, mask[:1]], axis=0)
    blocks = m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]
    return bool(blocks.any())


def _batch_monodromy(curve, S):
    m, n = S.shape
    l, a0, a1 = _edges(curve, S)
    k_start = curve.curvature(S)
    k_end = np.roll(k_start, -1, axis=-1)
    sa0, sa1 = np.sin(a0), np.sin(a1)
    A = sa0 / l - k_start
    B = sa1 / l
    C = -sa0 / l
    D = -sa1 / l + k_end
    M = np.broadcast_to(np.eye(2), (m, 2, 2)).copy()
    for i in range(n):
        DF = np.empty((m, 2, 2))
        DF[:, 0, 0] = -A[:, i] / B[:, i]
        DF[:, 0, 1] = 1.0 / B[:, i]
        DF[:, 1, 0] = C[:, i] - D[:, i] * A[:, i] / B[:, i]
        DF[:, 1, 1] = D[:, i] / B[:, i]
        M = DF @ M
    return M


def scan_phase_space(curve, n_max, grid=(200, 200), n_min=2, chunk=8192,
                     grad_tol=GRAD_ZERO_TOL):
    """Newton-refine every grid cell toward nearby period-n orbits.

    For each cell center the configuration seeded by n billiard steps
    is driven to a critical point of the perimeter; the cell is marked
    for period n when the refined orbit's phase point lands back inside
    the cell. The result is an empirical atlas of the located periodic
    set (points and curve samples), with per-period masks and the
    fraction of marked cells.
    """
    L = curve.total_length
    ns, na = grid
    s_centers = (np.arange(ns) + 0.5) * L / ns
    a_centers = (np.arange(na) + 0.5) * np.pi / na
    SS, AA = np.meshgrid(s_centers, a_centers, indexing="ij")
    cell_s = SS.ravel()
    cell_a = AA.ravel()
    half_s = 0.5 * L / ns
    half_a = 0.5 * np.pi / na

    entries = []
    masks = {}
    for n in range(n_min, n_max + 1):
        mask = np.zeros(grid, dtype=bool)
        for lo in range(0, len(cell_s), chunk):
            hi = min(lo + chunk, len(cell_s))
            cs = cell_s[lo:hi]
            ca = cell_a[lo:hi]
            m = len(cs)
            S = np.empty((m, n))
            S[:, 0] = cs
            s_cur, a_cur = cs.copy(), ca.copy()
            ok = np.ones(m, dtype=bool)
            for i in range(1, n):
                s_cur, a_cur, status = step_many(curve, s_cur, a_cur)
                ok &= status == 0
                S[:, i] = s_cur
            S = S[ok]
            if len(S) == 0:
                continue
            rows = np.flatnonzero(ok) + lo
            S_ref, gn = refine_configurations(curve, S)
            good = gn <= grad_tol
            good &= _min_consecutive_gap(S_ref, L) > 1e-6 * L
            if not good.any():
                continue
            S_ref = S_ref[good]
            rows = rows[good]
            l, a0, a1 = _edges(curve, S_ref)
            s0 = S_ref[:, 0] % L
            alpha0 = a0[:, 0]
            ds = np.abs((s0 - cell_s[rows]) % L)
            ds = np.minimum(ds, L - ds)
            inside = (ds <= half_s) & (np.abs(alpha0 - cell_a[rows]) <= half_a)
            inside &= (alpha0 > 0) & (alpha0 < np.pi)
            if not inside.any():
                continue
            S_in = S_ref[inside]
            rows_in = rows[inside]
            M = _batch_monodromy(curve, S_in)
            tr = np.trace(M, axis1=1, axis2=2)
            perim = l[inside].sum(axis=1)
            for b, row in enumerate(rows_in):
                ij = (int(row // na), int(row % na))
                mask[ij] = True
                entries.append(AtlasEntry(
                    n=n,
                    cell=ij,
                    s=float(S_in[b, 0] % L),
                    alpha=float(a0[inside][b]),
                    classification=classify_monodromy(M[b]),
                    trace=float(tr[b]),
                    perimeter=float(perim[b]),
                ))
        masks[n] = mask
    atlas = PhaseAtlas(
        grid=grid,
        n_range=(n_min, n_max),
        entries=entries,
        masks=masks,
        fraction_periodic=0.0,
        meta={"total_length": L},
    )
    atlas.fraction_periodic = float(atlas.mask_any().mean())
    return atlas
