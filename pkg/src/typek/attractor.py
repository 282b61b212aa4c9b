"""Global attractor of a planar type-K map on C minus the origin.

The attractor splits into three monotone pieces: the unstable manifolds of
the axial saddles Q1 and Q2 (sigma_H, sigma_V) and a curve sigma_0 joining
the extreme interior fixed points p0 <= p1.  Curves are carried forward as
polylines.  When an image gap exceeds the arc resolution, a midpoint is
inserted in the preimage polyline and mapped forward.  Transversal
contraction removes the chord error over the following iterations.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .cones import LL_LEVEL, LT_LEVEL, order_levels, vec
from .errors import EvaluationError, HypothesisViolation, NotInImageError, ResolutionError
from .fixed_points import FixedPointCatalog, FixedPointRecord, find_fixed_points
from .hypotheses import check_A1_signs
from .model import KolmogorovMap
from .orbits import invert_T, polish_fixed_point

__all__ = [
    "basin_convexity_spot_check",
    "ManifoldPolyline",
    "Sigma0Curve",
    "AttractorDecomposition",
    "BasinVerdict",
    "trace_unstable_manifold",
    "build_sigma0",
    "assemble_decomposition",
    "basin_of_repulsion_test",
    "basin_boundary_on_ray",
    "distance_to_polyline",
    "resample_polyline",
    "hausdorff_distance",
]

log = logging.getLogger(__name__)

SEED_OFFSET = 1e-6
STALL_TOL = 1e-10
STALL_PATIENCE = 20
ORDER_TOL = 1e-12
SIGMA0_ARC_TOL = 1e-8


def _default_arc_resolution(m: KolmogorovMap) -> float:
    return 1e-3 * float(np.max(m.r))


def _refine_and_map(m: KolmogorovMap, pre: np.ndarray, arc_res: float,
                    max_rounds: int = 60) -> np.ndarray:
    """Image of the polyline ``pre`` with gaps of at most ``arc_res``.

    Overlong image gaps are split by inserting the preimage midpoint.
    Dense stretches are then thinned by dropping every other point whose
    neighbours are closer than ``arc_res / 2``.
    """
    img = m.T(pre)
    for _ in range(max_rounds):
        gaps = np.linalg.norm(np.diff(img, axis=0), axis=1)
        bad = np.flatnonzero(gaps > arc_res)
        if bad.size == 0:
            break
        mids = 0.5 * (pre[bad] + pre[bad + 1])
        pre = np.insert(pre, bad + 1, mids, axis=0)
        img = np.insert(img, bad + 1, m.T(mids), axis=0)
    if len(img) > 2:
        skip = np.linalg.norm(img[2:] - img[:-2], axis=1) < 0.5 * arc_res
        j = np.flatnonzero(skip) + 1
        j = j[j % 2 == 1]
        if j.size:
            img = np.delete(img, j, axis=0)
    return img


def _outside_box(m: KolmogorovMap, pts: np.ndarray) -> bool:
    slack = 1e-9 * (1.0 + m.r)
    return bool(np.any(pts < -slack) or np.any(pts > m.r + slack))


@dataclass
class ManifoldPolyline:
    anchor: FixedPointRecord
    points: np.ndarray
    terminal: np.ndarray
    arc_resolution: float
    iterations: int = 0
    stalled: bool = True

    @property
    def max_gap(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).max())

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor.location.tolist(),
            "terminal": self.terminal.tolist(),
            "arc_resolution": self.arc_resolution,
            "iterations": self.iterations,
            "stalled": self.stalled,
            "points": self.points.tolist(),
        }


def trace_unstable_manifold(m: KolmogorovMap, saddle: FixedPointRecord,
                            seed_offset: float = SEED_OFFSET, max_points: int = 200_000,
                            arc_resolution: float | None = None, side: int = 1,
                            max_iterations: int = 100_000) -> ManifoldPolyline:
    """One branch of the unstable manifold of ``saddle``.

    The seed segment runs from ``Q + seed_offset * side * v`` to its image,
    with Q prepended.  The whole polyline is mapped forward until its
    leading edge moves less than 1e-10 for 20 consecutive iterations.
    """
    if saddle.classification != "saddle" or saddle.unstable_direction is None:
        raise ValueError(f"anchor {saddle.location.tolist()} is not a saddle")
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    arc_res = _default_arc_resolution(m) if arc_resolution is None else float(arc_resolution)
    if arc_res <= 0 or seed_offset <= 0:
        raise ValueError("arc_resolution and seed_offset must be positive")
    q = saddle.location
    start = q + side * seed_offset * saddle.unstable_direction
    pts = np.vstack([q, start, m.T(start)])
    if _outside_box(m, pts):
        raise HypothesisViolation("unstable manifold seed leaves [0, r]")
    run = 0
    stalled = False
    it = 0
    for it in range(1, max_iterations + 1):
        new = _refine_and_map(m, pts, arc_res)
        new[0] = q
        if _outside_box(m, new):
            raise HypothesisViolation(
                f"unstable manifold of {q.tolist()} leaves [0, r] near {new[-1].tolist()}")
        run = run + 1 if np.abs(new[-1] - pts[-1]).max() < STALL_TOL else 0
        pts = new
        if run >= STALL_PATIENCE:
            stalled = True
            break
        if len(pts) > max_points:
            log.warning("unstable manifold trace hit max_points=%d", max_points)
            break
    terminal = polish_fixed_point(m, pts[-1]) if stalled else pts[-1].copy()
    pts = pts.copy()
    pts[-1] = terminal
    return ManifoldPolyline(saddle, pts, terminal, arc_res, it, stalled)


@dataclass
class Sigma0Curve:
    points: np.ndarray
    max_width: float
    iterations: int
    line_weights: np.ndarray | None = None

    @property
    def is_point(self) -> bool:
        return len(self.points) == 1

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "max_width": self.max_width,
            "iterations": self.iterations,
        }


def _line_crossings(poly: np.ndarray, w: np.ndarray, s: np.ndarray):
    """Crossing points of a polyline, monotone in ``x . w``, with each line
    ``x . w = s``.  Returns None if the polyline is not monotone."""
    h = poly @ w
    if np.any(np.diff(h) <= 0):
        return None
    j = np.clip(np.searchsorted(h, s) - 1, 0, len(h) - 2)
    t = ((s - h[j]) / (h[j + 1] - h[j]))[:, None]
    return poly[j] + t * (poly[j + 1] - poly[j])


def build_sigma0(m: KolmogorovMap, p0: FixedPointRecord, p1: FixedPointRecord,
                 n_iterations: int = 2000, boundary_res: int = 2001, n_lines: int = 1001,
                 arc_tol: float = SIGMA0_ARC_TOL, arc_resolution: float | None = None,
                 axial=None) -> Sigma0Curve:
    """Limit of the nested images of the order interval [p0, p1].

    Both boundary arcs of the interval (through its lower-right and
    upper-left corners) are mapped forward.  On each transversal line
    ``x1/q1 + x2/q2 = s`` the two images bound the image of the interval;
    their midpoint is ``c(s)`` and their distance is the width.  Iteration
    stops once the width is below ``arc_tol`` everywhere.  If it is still
    above ``100 * arc_tol`` after ``n_iterations``, ResolutionError is
    raised.
    """
    a, b = p0.location, p1.location
    if np.abs(b - a).max() <= 1e-12:
        return Sigma0Curve(a.reshape(1, -1).copy(), 0.0, 0)
    if not np.all(b > a):
        raise ValueError("p0 must be strongly below p1")
    arc_res = 1e-4 * float(np.max(m.r)) if arc_resolution is None else float(arc_resolution)
    if boundary_res < 3 or n_lines < 3:
        raise ValueError("boundary_res and n_lines must be at least 3")
    w = 1.0 / np.asarray(axial, dtype=float) if axial is not None else np.ones(2)

    half = boundary_res // 2 + 1
    t = np.linspace(0.0, 1.0, half)[:, None]
    lower = np.vstack([a + t * np.array([b[0] - a[0], 0.0]),
                       np.array([b[0], a[1]]) + t[1:] * np.array([0.0, b[1] - a[1]])])
    upper = np.vstack([a + t * np.array([0.0, b[1] - a[1]]),
                       np.array([a[0], b[1]]) + t[1:] * np.array([b[0] - a[0], 0.0])])
    s = np.linspace(a @ w, b @ w, n_lines)[1:-1]
    width = np.inf
    mid = None
    it = 0
    for it in range(1, n_iterations + 1):
        lower = _refine_and_map(m, lower, arc_res)
        upper = _refine_and_map(m, upper, arc_res)
        lower[0] = upper[0] = a
        lower[-1] = upper[-1] = b
        if it % 10 and it != n_iterations:
            continue
        lo = _line_crossings(lower, w, s)
        hi = _line_crossings(upper, w, s)
        if lo is None or hi is None:
            continue
        width = float(np.linalg.norm(hi - lo, axis=1).max())
        mid = 0.5 * (lo + hi)
        if width <= arc_tol:
            break
    if mid is None or width > 100 * arc_tol:
        raise ResolutionError(
            f"sigma_0 transversal width {width:.3g} after {it} iterations exceeds "
            f"{100 * arc_tol:.3g} (arc resolution {arc_res:.3g}, {len(lower)}+{len(upper)} points)")
    pts = np.vstack([a, mid, b])
    return Sigma0Curve(pts, width, it, w)


def _is_chain(points: np.ndarray, strong: bool, tol: float = ORDER_TOL) -> bool:
    """Consecutive points increase in the C-order (``<`` or ``<<``).  By
    transitivity this covers every pair."""
    if len(points) < 2:
        return True
    level, sign = order_levels(np.diff(points, axis=0), tol)
    need = LL_LEVEL if strong else LT_LEVEL
    return bool(np.all((level >= need) & (sign > 0)))


def _k_related(x: np.ndarray, y: np.ndarray, signs: np.ndarray, strong: bool,
               tol: float = ORDER_TOL) -> np.ndarray:
    """Pairs with ``x <<_K y`` or ``y <<_K x`` (``<_K`` when not strong)."""
    level, sign = order_levels((y - x) * signs, tol)
    need = LL_LEVEL if strong else LT_LEVEL
    return (level >= need) & (sign != 0)


def distance_to_polyline(points, poly: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to a polyline."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.atleast_2d(poly)
    if len(poly) == 1:
        return np.linalg.norm(p - poly[0], axis=1)
    a, b = poly[:-1], poly[1:]
    ab = b - a
    den = np.einsum("ij,ij->i", ab, ab)
    den = np.where(den == 0, 1.0, den)
    best = np.full(len(p), np.inf)
    for start in range(0, len(p), 256):
        chunk = p[start:start + 256, None, :]
        t = np.clip(np.einsum("pij,ij->pi", chunk - a, ab) / den, 0.0, 1.0)
        d = np.linalg.norm(chunk - (a + t[..., None] * ab), axis=2)
        best[start:start + 256] = d.min(axis=1)
    return best


def resample_polyline(poly: np.ndarray, spacing: float) -> np.ndarray:
    poly = np.atleast_2d(poly)
    if len(poly) == 1:
        return poly.copy()
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(2, int(np.ceil(cum[-1] / spacing)) + 1)
    u = np.linspace(0.0, cum[-1], n)
    return np.column_stack([np.interp(u, cum, poly[:, i]) for i in range(poly.shape[1])])


def hausdorff_distance(p: np.ndarray, q: np.ndarray, spacing: float = 1e-4) -> float:
    """Hausdorff distance between two polylines, by dense resampling of each."""
    d1 = distance_to_polyline(resample_polyline(p, spacing), q).max()
    d2 = distance_to_polyline(resample_polyline(q, spacing), p).max()
    return float(max(d1, d2))


@dataclass
class AttractorDecomposition:
    sigma_H: ManifoldPolyline
    sigma_V: ManifoldPolyline
    sigma_0: Sigma0Curve
    p0: FixedPointRecord
    p1: FixedPointRecord
    Q1: FixedPointRecord
    Q2: FixedPointRecord
    monotone_flags: dict
    unordered_flags: dict
    closure: dict
    catalog: FixedPointCatalog | None = None
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (all(self.monotone_flags[k] for k in ("sigma_H", "sigma_V", "sigma_0"))
                and all(self.unordered_flags[k] for k in ("H0", "V0"))
                and self.closure["ok"])

    def curves(self) -> dict:
        return {"sigma_H": self.sigma_H.points, "sigma_0": self.sigma_0.points,
                "sigma_V": self.sigma_V.points}

    def markers(self) -> list[dict]:
        out = [{"label": "O", "location": [0.0, 0.0], "classification": "repeller"},
               {"label": "Q1", "location": self.Q1.location.tolist(),
                "classification": self.Q1.classification},
               {"label": "Q2", "location": self.Q2.location.tolist(),
                "classification": self.Q2.classification}]
        interior = self.catalog.interior if self.catalog else [self.p0, self.p1]
        for i, rec in enumerate(interior):
            if i == 0:
                label = "p0"
            elif i == len(interior) - 1:
                label = "p1"
            else:
                label = f"m{i}"
            out.append({"label": label, "location": rec.location.tolist(),
                        "classification": rec.classification})
        return out

    def to_dict(self) -> dict:
        curves = []
        for name, pts in self.curves().items():
            curves.append({
                "name": name,
                "n_points": int(len(pts)),
                "start": pts[0].tolist(),
                "end": pts[-1].tolist(),
                "points": pts.tolist(),
            })
        return {
            "curves": curves,
            "markers": self.markers(),
            "sigma_H": {k: v for k, v in self.sigma_H.to_dict().items() if k != "points"},
            "sigma_V": {k: v for k, v in self.sigma_V.to_dict().items() if k != "points"},
            "sigma_0": {k: v for k, v in self.sigma_0.to_dict().items() if k != "points"},
            "monotone_flags": self.monotone_flags,
            "unordered_flags": self.unordered_flags,
            "closure": self.closure,
            "passed": self.passed,
            "warnings": list(self.warnings),
        }


def assemble_decomposition(m: KolmogorovMap, catalog: FixedPointCatalog | None = None,
                           arc_resolution: float | None = None, n_pairs: int = 10_000,
                           seed: int = 0, sigma0_kwargs: dict | None = None,
                           manifold_kwargs: dict | None = None) -> AttractorDecomposition:
    """Trace sigma_H, sigma_V and sigma_0 and verify their order structure."""
    if catalog is None:
        catalog = find_fixed_points(m)
    if not catalog.interior:
        raise HypothesisViolation("no interior fixed point; the decomposition needs p0")
    Q1, Q2, p0, p1 = catalog.Q1, catalog.Q2, catalog.p0, catalog.p1
    for q in (Q1, Q2):
        if q.classification != "saddle":
            raise HypothesisViolation(
                f"axial fixed point {q.location.tolist()} is {q.classification}, not a saddle")
    mk = dict(manifold_kwargs or {})
    mk.setdefault("arc_resolution", arc_resolution)
    sigma_H = trace_unstable_manifold(m, Q1, **mk)
    sigma_V = trace_unstable_manifold(m, Q2, **mk)
    sk = dict(sigma0_kwargs or {})
    sk.setdefault("axial", (Q1.location[0], Q2.location[1]))
    sigma_0 = build_sigma0(m, p0, p1, **sk)

    strict = bool(check_A1_signs(m).details.get("cross_strictly_positive", False))
    monotone = {
        "strength": "LL" if strict else "LT",
        "sigma_H": _is_chain(sigma_H.points, strict),
        "sigma_V": _is_chain(sigma_V.points, strict),
        "sigma_0": _is_chain(sigma_0.points, True),
    }

    rng = np.random.default_rng(seed)
    signs = m.split.signs
    unordered = {"n_pairs": int(n_pairs), "strength": "LT_K" if strict else "LL_K"}
    for key, piece in (("H0", sigma_H.points), ("V0", sigma_V.points)):
        pool = np.vstack([piece, sigma_0.points])
        i = rng.integers(0, len(pool), n_pairs)
        j = rng.integers(0, len(pool), n_pairs)
        related = _k_related(pool[i], pool[j], signs, strong=not strict)
        unordered[key] = not bool(related.any())
        unordered[key + "_violations"] = int(related.sum())

    d_H = float(np.abs(sigma_H.terminal - p0.location).max())
    d_V = float(np.abs(sigma_V.terminal - p0.location).max())
    ends = max(float(np.abs(sigma_0.points[0] - p0.location).max()),
               float(np.abs(sigma_0.points[-1] - p1.location).max()))
    closure = {
        "sigma_H_terminal_to_p0": d_H,
        "sigma_V_terminal_to_p0": d_V,
        "sigma_0_endpoint_error": ends,
        "ok": d_H <= 1e-6 and d_V <= 1e-6 and ends <= 1e-8,
    }
    warnings = []
    for name, man in (("sigma_H", sigma_H), ("sigma_V", sigma_V)):
        if not man.stalled:
            warnings.append(f"{name} trace stopped before its leading edge stalled")
    return AttractorDecomposition(sigma_H, sigma_V, sigma_0, p0, p1, Q1, Q2,
                                  monotone, unordered, closure, catalog, warnings)


class BasinVerdict(str, enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNDECIDED = "boundary-undecided"


def basin_of_repulsion_test(m: KolmogorovMap, x, max_steps: int = 5000,
                            tol: float = 1e-8) -> BasinVerdict:
    """Does the backward orbit of ``x`` tend to the origin?

    ``inside`` once an iterate enters the sup-norm ball of radius ``tol``,
    ``outside`` when an iterate leaves [0, r] or the orbit stalls farther
    than ``100 * tol`` from 0, ``boundary-undecided`` otherwise.
    """
    x = vec(x, m.n)
    slack = 1e-12 * (1.0 + m.r)
    run = 0
    for _ in range(max_steps):
        if np.abs(x).max() < tol:
            return BasinVerdict.INSIDE
        try:
            nxt = invert_T(m, x, x)
        except (NotInImageError, EvaluationError):
            return BasinVerdict.UNDECIDED
        if np.any(nxt < -slack) or np.any(nxt > m.r + slack):
            return BasinVerdict.OUTSIDE
        run = run + 1 if np.abs(nxt - x).max() < 1e-3 * tol else 0
        x = nxt
        if run >= 10 and np.abs(x).max() > 100 * tol:
            return BasinVerdict.OUTSIDE
    return BasinVerdict.UNDECIDED


def basin_boundary_on_ray(m: KolmogorovMap, direction, t_max: float, xtol: float = 1e-4,
                          max_steps: int = 5000) -> tuple[float, float]:
    """Bracket ``[t_in, t_out]`` for the exit of the ray ``t * direction``
    from the basin of repulsion, by bisection on the basin verdict."""
    d = vec(direction, m.n)
    lo, hi = 0.0, float(t_max)
    if basin_of_repulsion_test(m, hi * d, max_steps) is BasinVerdict.INSIDE:
        raise ValueError("far end of the ray lies inside the basin")
    lo = 1e-3 * hi
    if basin_of_repulsion_test(m, lo * d, max_steps) is not BasinVerdict.INSIDE:
        raise ValueError("near end of the ray is not inside the basin")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        verdict = basin_of_repulsion_test(m, mid * d, max_steps)
        if verdict is BasinVerdict.INSIDE:
            lo = mid
        elif verdict is BasinVerdict.OUTSIDE:
            hi = mid
        else:
            break
    return lo, hi


def basin_convexity_spot_check(m: KolmogorovMap, n_points: int = 60, n_along: int = 5,
                               max_pairs: int = 10, seed: int = 0, box_fraction: float = 0.35,
                               max_steps: int = 5000) -> dict:
    """Sample the basin of repulsion in [0, box_fraction * r] and test
    interior points of segments between K-related inside points.  Counts
    are reported, not judged."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, box_fraction, (n_points, m.n)) * m.r
    verdicts = [basin_of_repulsion_test(m, x, max_steps) for x in pts]
    inside = pts[[v is BasinVerdict.INSIDE for v in verdicts]]
    signs = m.split.signs
    pairs = [(i, j) for i in range(len(inside)) for j in range(len(inside))
             if i != j and np.all((inside[j] - inside[i]) * signs >= 0)]
    pairs = pairs[:max_pairs]
    counts = {v.value: 0 for v in BasinVerdict}
    ts = np.linspace(0.0, 1.0, n_along + 2)[1:-1]
    witness = None
    for i, j in pairs:
        for t in ts:
            z = (1 - t) * inside[i] + t * inside[j]
            v = basin_of_repulsion_test(m, z, max_steps)
            counts[v.value] += 1
            if v is BasinVerdict.OUTSIDE and witness is None:
                witness = {"x": inside[i].tolist(), "y": inside[j].tolist(), "z": z.tolist()}
    return {"n_sampled": int(n_points), "n_inside": int(len(inside)), "n_pairs": len(pairs),
            "segment_verdicts": counts, "first_outside": witness}
