"""Fixed points of planar Kolmogorov maps.

The origin is always fixed.  On the x_i-axis a fixed point solves
``f_i(t e_i) = 1``; interior fixed points are the crossings of the
nullclines ``l1 = {f1 = 1}`` and ``l2 = {f2 = 1}``.  Under the type-K sign
structure l1 is the graph of a nondecreasing function x1 = g1(x2) (and l2
of x2 = g2(x1)), so both can be traced by 1-D bisection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .cones import order_levels, LL_LEVEL
from .errors import DegenerateNullclinesError, HypothesisViolation, UnsupportedDimensionError
from .model import KolmogorovMap

__all__ = [
    "FixedPointRecord",
    "NullclinePolyline",
    "FixedPointCatalog",
    "classify_eigenvalues",
    "make_record",
    "find_axial_fixed_points",
    "trace_nullcline",
    "find_interior_fixed_points",
    "find_fixed_points",
]

log = logging.getLogger(__name__)

HYPERBOLIC_MARGIN = 1e-9
DEDUP_RADIUS = 1e-8
DEGENERATE_CLUSTER = 10


@dataclass
class FixedPointRecord:
    location: np.ndarray
    residual: float
    kind: str  # "origin", "axial-1", "axial-2" or "interior"
    eigenvalues: np.ndarray
    classification: str  # "repeller", "attractor", "saddle" or "nonhyperbolic"
    unstable_direction: np.ndarray | None = None
    precision: str = "polished"

    @property
    def margin(self) -> float:
        """Smallest distance of an eigenvalue modulus from 1."""
        return float(np.min(np.abs(np.abs(self.eigenvalues) - 1.0)))

    def to_dict(self) -> dict:
        return {
            "location": self.location.tolist(),
            "residual": self.residual,
            "kind": self.kind,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "classification": self.classification,
            "unstable_direction": (None if self.unstable_direction is None
                                   else self.unstable_direction.tolist()),
            "precision": self.precision,
        }


def classify_eigenvalues(eigs, margin: float = HYPERBOLIC_MARGIN) -> str:
    mods = np.abs(np.asarray(eigs))
    inside = mods < 1.0 - margin
    outside = mods > 1.0 + margin
    if inside.all():
        return "attractor"
    if outside.all():
        return "repeller"
    if (inside | outside).all():
        return "saddle"
    return "nonhyperbolic"


def make_record(m: KolmogorovMap, x, kind: str, precision: str = "polished") -> FixedPointRecord:
    x = np.array(x, dtype=float)
    x.setflags(write=False)
    residual = float(np.abs(m.T(x) - x).max())
    eigs, vecs = np.linalg.eig(m.DT(x))
    order = np.lexsort((eigs.imag, eigs.real))
    eigs, vecs = eigs[order], vecs[:, order]
    cls = classify_eigenvalues(eigs)
    direction = None
    if cls == "saddle":
        j = int(np.argmax(np.abs(eigs)))
        v = np.real(vecs[:, j])
        v = v / np.linalg.norm(v)
        if kind.startswith("axial"):
            # orient into the interior: the transverse coordinate must grow
            zero = np.flatnonzero(x == 0.0)
            flip = v[zero[0]] < 0 if zero.size else False
        else:
            flip = v[np.flatnonzero(np.abs(v) > 1e-14)[0]] < 0
        direction = -v if flip else v
    return FixedPointRecord(x, residual, kind, eigs, cls, direction, precision)


def _require_planar(m: KolmogorovMap) -> None:
    if m.n != 2:
        raise UnsupportedDimensionError("fixed-point location is implemented for planar maps")


def _bisect_decreasing(phi, lo, hi, xtol: float = 1e-14, max_iter: int = 200):
    """Vectorised bisection for ``phi(lo) >= 0 >= phi(hi)`` (or the reverse)."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    s_lo = np.sign(phi(lo))
    for _ in range(max_iter):
        if np.all(hi - lo <= xtol):
            break
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        s_mid = np.sign(phi(mid))
        go_right = s_mid == s_lo
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


def find_axial_fixed_points(m: KolmogorovMap, xtol: float = 1e-14) -> list[FixedPointRecord]:
    """Q1 = (q1, 0) and Q2 = (0, q2) from ``f_i(t e_i) = 1`` by bisection on [0, r_i]."""
    _require_planar(m)
    out = []
    for i in range(2):
        def phi(t, i=i):
            pts = np.zeros(np.shape(t) + (2,))
            pts[..., i] = t
            return m.f(pts)[..., i] - 1.0

        f_lo, f_hi = float(phi(0.0)), float(phi(m.r[i]))
        if not (f_lo > 0.0 > f_hi):
            raise HypothesisViolation(
                f"no sign change of f{i + 1} - 1 on the x{i + 1}-axis over [0, {m.r[i]!r}] "
                f"(values {f_lo!r}, {f_hi!r})")
        q = float(_bisect_decreasing(phi, 0.0, m.r[i], xtol))
        loc = np.zeros(2)
        loc[i] = q
        out.append(make_record(m, loc, f"axial-{i + 1}"))
    return out


@dataclass
class NullclinePolyline:
    which: int  # 1 for {f1 = 1}, 2 for {f2 = 1}
    samples: np.ndarray  # (m, 2), ordered by the graph variable
    param_index: np.ndarray  # grid index of the graph variable for each sample
    n_omitted: int = 0

    @property
    def graph_variable(self) -> int:
        """0-based index of the coordinate that parameterises the curve."""
        return 1 if self.which == 1 else 0


def trace_nullcline(m: KolmogorovMap, which: int, n_samples: int = 257) -> NullclinePolyline:
    """Sample ``{f_which = 1}`` over [0, r].

    For l1 the graph variable is x2: for each grid value of x2, f1(., x2) = 1
    is solved for x1 in [0, r1] by bisection.  Grid values with no root in
    the box are omitted.
    """
    _require_planar(m)
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    fi = which - 1
    solve, param = (0, 1) if which == 1 else (1, 0)
    p = np.linspace(0.0, m.r[param], n_samples)

    def phi(s):
        pts = np.empty(s.shape + (2,))
        pts[..., solve] = s
        pts[..., param] = p_active
        return m.f(pts)[..., fi] - 1.0

    p_active = p
    lo_val = phi(np.zeros_like(p))
    hi_val = phi(np.full_like(p, m.r[solve]))
    has_root = (lo_val * hi_val <= 0) & ~((lo_val == 0) & (hi_val == 0))
    p_active = p[has_root]
    roots = _bisect_decreasing(phi, np.zeros_like(p_active), np.full_like(p_active, m.r[solve]))
    samples = np.empty((p_active.size, 2))
    samples[:, solve] = roots
    samples[:, param] = p_active
    return NullclinePolyline(which, samples, np.flatnonzero(has_root), int((~has_root).sum()))


def _newton_interior(m: KolmogorovMap, x0, tol: float = 1e-13, max_iter: int = 50):
    x = np.array(x0, dtype=float)
    F = m.f(x) - 1.0
    for _ in range(max_iter):
        if np.abs(F).max() <= tol:
            return x
        try:
            step = np.linalg.solve(m.Df(x), -F)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        res = np.abs(F).max()
        for _ in range(30):
            xn = x + lam * step
            if np.all(xn > 0):
                Fn = m.f(xn) - 1.0
                if np.abs(Fn).max() < res:
                    break
            lam *= 0.5
        else:
            return None
        x, F = xn, Fn
    return x if np.abs(F).max() <= tol else None


def _bisect_along_l1(m: KolmogorovMap, p_lo: float, p_hi: float):
    """Crossing of l1 and l2 with x2 in [p_lo, p_hi], by nested bisection."""
    def g1(x2):
        x2 = np.atleast_1d(x2)

        def phi(s):
            return m.f(np.stack([s, x2], axis=-1))[..., 0] - 1.0
        return _bisect_decreasing(phi, np.zeros_like(x2), np.full_like(x2, m.r[0]), 1e-15)

    def h(x2):
        x2 = np.atleast_1d(x2)
        return m.f(np.stack([g1(x2), x2], axis=-1))[..., 1] - 1.0

    if h(p_lo)[0] * h(p_hi)[0] > 0:
        return None
    x2 = float(_bisect_decreasing(h, np.array([p_lo]), np.array([p_hi]), 1e-15)[0])
    return np.array([float(g1(x2)[0]), x2])


def find_interior_fixed_points(m: KolmogorovMap, n_samples: int = 257) -> list[FixedPointRecord]:
    """Crossings of l1 with l2, found as sign changes of f2 - 1 along l1,
    refined by 2-D Newton on f - 1, deduplicated, and sorted so that the
    first record is p0 and the last is p1."""
    _require_planar(m)
    l1 = trace_nullcline(m, 1, n_samples)
    pts = l1.samples
    if len(pts) < 2:
        return []
    h = m.f(pts)[:, 1] - 1.0
    near = np.abs(h) <= 1e-10
    run = best = 0
    for flag in near:
        run = run + 1 if flag else 0
        best = max(best, run)
    if best > DEGENERATE_CLUSTER:
        raise DegenerateNullclinesError(
            f"nullclines coincide along an arc ({best} consecutive samples of l1 lie on l2)")

    adjacent = np.diff(l1.param_index) == 1
    crossings = []
    for i in range(len(pts) - 1):
        if not adjacent[i]:
            continue
        if h[i] == 0.0 or h[i] * h[i + 1] < 0:
            t = 0.0 if h[i] == 0.0 else h[i] / (h[i] - h[i + 1])
            crossings.append((i, pts[i] + t * (pts[i + 1] - pts[i])))
    if h[-1] == 0.0:
        crossings.append((len(pts) - 2, pts[-1]))
    if len(crossings) > DEGENERATE_CLUSTER:
        raise DegenerateNullclinesError(f"{len(crossings)} nullcline crossings detected")

    found: list[tuple[np.ndarray, str]] = []
    for i, guess in crossings:
        x = _newton_interior(m, guess)
        precision = "polished"
        if x is None:
            x = _bisect_along_l1(m, pts[i, 1], pts[i + 1, 1])
            precision = "bisection"
            if x is None:
                x, precision = guess, "coarse"
            log.warning("Newton polish failed near %s; kept %s root", guess.tolist(), precision)
        if np.any(x <= 0) or np.any(x >= m.r):
            continue
        if any(np.abs(x - y).max() <= DEDUP_RADIUS for y, _ in found):
            continue
        found.append((x, precision))
    found.sort(key=lambda item: (item[0][0], item[0][1]))
    records = [make_record(m, x, "interior", prec) for x, prec in found]
    for a, b in zip(records, records[1:]):
        level, sign = order_levels(b.location - a.location)
        if not (level == LL_LEVEL and sign > 0):
            log.warning("interior fixed points %s and %s are not strongly ordered",
                        a.location.tolist(), b.location.tolist())
    return records


@dataclass
class FixedPointCatalog:
    origin: FixedPointRecord
    axial: list[FixedPointRecord]
    interior: list[FixedPointRecord]
    warnings: list[str] = field(default_factory=list)

    @property
    def records(self) -> list[FixedPointRecord]:
        return [self.origin, *self.axial, *self.interior]

    @property
    def Q1(self) -> FixedPointRecord:
        return self.axial[0]

    @property
    def Q2(self) -> FixedPointRecord:
        return self.axial[1]

    @property
    def p0(self) -> FixedPointRecord:
        return self.interior[0]

    @property
    def p1(self) -> FixedPointRecord:
        return self.interior[-1]

    def to_dict(self) -> dict:
        return {"fixed_points": [r.to_dict() for r in self.records], "warnings": list(self.warnings)}


def find_fixed_points(m: KolmogorovMap, n_samples: int = 257) -> FixedPointCatalog:
    """Origin, both axial fixed points and all interior fixed points."""
    _require_planar(m)
    origin = make_record(m, np.zeros(2), "origin")
    axial = find_axial_fixed_points(m)
    interior = find_interior_fixed_points(m, n_samples)
    warnings = []
    if not interior:
        warnings.append("no interior fixed point found")
    return FixedPointCatalog(origin, axial, interior, warnings)
