"""Forward and backward orbits, region tags and the retrotone sampler.

Backward orbits need T^{-1}.  On [0, r] the map is a homeomorphism onto
its image whenever rho(M) < 1 there, and DT = diag(f)(I - M) is then
invertible, so damped Newton on ``T(x) - y`` is the inversion method.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .cones import (EQ_LEVEL, LT_LEVEL, LL_LEVEL, Comparison, OrderRel, order_levels, vec)
from .errors import EvaluationError, NotInImageError, UnsupportedDimensionError
from .model import KolmogorovMap

__all__ = [
    "Verdict",
    "OrbitTrace",
    "RegionTag",
    "Monotonicity",
    "RetrotoneResult",
    "polish_fixed_point",
    "iterate_forward",
    "invert_T",
    "iterate_backward",
    "classify_region",
    "detect_eventual_monotonicity",
    "sample_retrotone",
]

TAG_TOL = 1e-12


class Verdict(str, enum.Enum):
    CONVERGED = "converged"
    CYCLE_SUSPECTED = "cycle_suspected"
    BUDGET_EXHAUSTED = "budget_exhausted"
    ESCAPED_BOX = "escaped_box"


@dataclass
class OrbitTrace:
    """Iterates ``points[0], points[1], ...`` of a forward or backward orbit.

    Step tags classify ``points[m] -> points[m+1]`` in the C- and K-orders
    with a ``tag_tol`` margin.
    """

    points: np.ndarray
    verdict: Verdict
    steps_used: int
    split: object
    limit: np.ndarray | None = None
    backward: bool = False
    tag_tol: float = TAG_TOL
    levels: tuple = field(init=False, repr=False)

    def __post_init__(self):
        d = np.diff(self.points, axis=0)
        c_level, c_sign = order_levels(d, self.tag_tol)
        k_level, k_sign = order_levels(d * self.split.signs, self.tag_tol)
        self.levels = (c_level, c_sign, k_level, k_sign)

    @property
    def direction_tags(self) -> list[Comparison]:
        c_rel = {EQ_LEVEL: OrderRel.LEQ, LT_LEVEL: OrderRel.LT, LL_LEVEL: OrderRel.LL}
        k_rel = {EQ_LEVEL: OrderRel.LEQ_K, LT_LEVEL: OrderRel.LT_K, LL_LEVEL: OrderRel.LL_K}
        return [Comparison(c_rel.get(int(a), OrderRel.NONE), int(b),
                           k_rel.get(int(c), OrderRel.NONE), int(d))
                for a, b, c, d in zip(*self.levels)]

    def tag_labels(self) -> list[str]:
        return [t.label() for t in self.direction_tags]

    def summary(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "limit": None if self.limit is None else self.limit.tolist(),
            "steps_used": self.steps_used,
            "start": self.points[0].tolist(),
            "end": self.points[-1].tolist(),
            "backward": self.backward,
        }


def polish_fixed_point(m: KolmogorovMap, x, max_iter: int = 50) -> np.ndarray:
    """Newton on ``T(x) - x`` from ``x``; returns the best iterate found."""
    x = np.array(x, dtype=float)
    res = np.abs(m.T(x) - x).max()
    eye = np.eye(m.n)
    for _ in range(max_iter):
        if res <= 4.0 * np.finfo(float).eps * max(1.0, np.abs(x).max()):
            break
        try:
            step = np.linalg.solve(m.DT(x) - eye, -(m.T(x) - x))
        except np.linalg.LinAlgError:
            break
        xn = x + step
        xn[x == 0.0] = 0.0
        try:
            rn = np.abs(m.T(xn) - xn).max()
        except EvaluationError:
            break
        if not rn < res:
            break
        x, res = xn, rn
    # fixed points of a Kolmogorov map lie in C
    x[(x < 0) & (x > -1e-12)] = 0.0
    return x


def iterate_forward(m: KolmogorovMap, x0, max_steps: int = 100_000, conv_tol: float = 1e-12,
                    patience: int = 10, escape_factor: float = 10.0,
                    tag_tol: float = TAG_TOL) -> OrbitTrace:
    """Iterate T from ``x0`` until ``patience`` consecutive steps are below
    ``conv_tol`` (sup-norm), the budget runs out, or the orbit leaves
    [0, escape_factor * r]."""
    x = vec(x0, m.n)
    if np.any(x < 0):
        raise ValueError("starting point must lie in the nonnegative orthant")
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    ceiling = escape_factor * m.r
    pts = [x]
    run = 0
    verdict = Verdict.BUDGET_EXHAUSTED
    limit = None
    prev = x
    for step in range(1, max_steps + 1):
        try:
            nxt = m.T(prev)
        except EvaluationError:
            verdict = Verdict.ESCAPED_BOX
            break
        pts.append(nxt)
        if np.any(nxt > ceiling) or np.any(nxt < 0):
            verdict = Verdict.ESCAPED_BOX
            break
        run = run + 1 if np.abs(nxt - prev).max() < conv_tol else 0
        prev = nxt
        if run >= patience:
            verdict = Verdict.CONVERGED
            limit = polish_fixed_point(m, nxt)
            break
    points = np.array(pts)
    if verdict is Verdict.BUDGET_EXHAUSTED and _looks_periodic(points, conv_tol):
        verdict = Verdict.CYCLE_SUSPECTED
    return OrbitTrace(points, verdict, len(points) - 1, m.split, limit, False, tag_tol)


def _looks_periodic(points: np.ndarray, tol: float, max_period: int = 50) -> bool:
    last = points[-1]
    for p in range(2, min(max_period, len(points) - 1) + 1):
        if np.abs(points[-1 - p] - last).max() < max(10 * tol, 1e-9):
            return True
    return False


def _newton_preimage(m: KolmogorovMap, y, x0, tol, max_iter, max_halvings):
    zero = y == 0.0
    x = np.array(x0, dtype=float)
    x[zero] = 0.0
    try:
        F = m.T(x) - y
    except EvaluationError:
        return None
    res = np.abs(F).max()
    extra = 0
    for _ in range(max_iter):
        if res <= tol:
            # a few extra steps buy full precision for tiny targets
            extra += 1
            if extra > 3 or res == 0.0:
                break
        try:
            step = np.linalg.solve(m.DT(x), -F)
        except (np.linalg.LinAlgError, EvaluationError):
            break
        lam = 1.0
        for _ in range(max_halvings + 1):
            xn = x + lam * step
            xn[zero] = 0.0
            try:
                Fn = m.T(xn) - y
                rn = np.abs(Fn).max()
            except EvaluationError:
                rn = np.inf
            if rn < res:
                break
            lam *= 0.5
        else:
            break
        x, F, res = xn, Fn, rn
    return x if res <= tol else None


def invert_T(m: KolmogorovMap, y, x_guess=None, tol: float = 1e-12, max_iter: int = 100,
             max_halvings: int = 40) -> np.ndarray:
    """Solve ``T(x) = y`` by damped Newton, falling back to a grid of starts.

    Among converged starts, preimages inside [0, r] win, then proximity to
    ``x_guess``.  Raises :class:`NotInImageError` when no start converges.
    """
    y = vec(y, m.n)
    guess = y / m.f(y) if x_guess is None else vec(x_guess, m.n)
    x = _newton_preimage(m, y, guess, tol, max_iter, max_halvings)
    if x is not None and m.box.contains(np.clip(x, 0, None)):
        return x
    candidates = [] if x is None else [x]
    res = 9 if m.n <= 2 else 5
    for start in m.box.grid(res):
        c = _newton_preimage(m, y, start, tol, max_iter, max_halvings)
        if c is not None:
            candidates.append(c)
            if m.box.contains(np.clip(c, 0, None)) and np.all(c >= 0):
                break
    if not candidates:
        raise NotInImageError(y)
    inside = [c for c in candidates if np.all(c >= 0) and m.box.contains(c)]
    pool = inside or candidates
    return min(pool, key=lambda c: float(np.abs(c - guess).max()))


def iterate_backward(m: KolmogorovMap, x0, max_steps: int = 10_000, tol: float = 1e-12,
                     patience: int = 10, tag_tol: float = TAG_TOL) -> OrbitTrace:
    """Backward orbit by repeated Newton inversion, warm-started from the
    previous iterate.  Stops with ``escaped_box`` as soon as a preimage
    falls outside [0, r]."""
    x = vec(x0, m.n)
    slack = 1e-12 * (1.0 + m.r)
    pts = [x]
    run = 0
    verdict = Verdict.BUDGET_EXHAUSTED
    limit = None
    prev = x
    for _ in range(max_steps):
        try:
            nxt = invert_T(m, prev, prev, tol)
        except NotInImageError as exc:
            exc.trace = OrbitTrace(np.array(pts), Verdict.ESCAPED_BOX, len(pts) - 1,
                                   m.split, None, True, tag_tol)
            raise
        pts.append(nxt)
        if np.any(nxt < -slack) or np.any(nxt > m.r + slack):
            verdict = Verdict.ESCAPED_BOX
            break
        run = run + 1 if np.abs(nxt - prev).max() < tol else 0
        prev = nxt
        if run >= patience:
            verdict = Verdict.CONVERGED
            limit = polish_fixed_point(m, nxt)
            break
    return OrbitTrace(np.array(pts), verdict, len(pts) - 1, m.split, limit, True, tag_tol)


class RegionTag(str, enum.Enum):
    R1 = "R1"  # f >> 1
    R2 = "R2"  # f << 1
    R3 = "R3"  # f <<_K 1
    R4 = "R4"  # f >>_K 1
    OTHER = "OTHER"


def classify_region(m: KolmogorovMap, x, tol: float = 1e-12) -> RegionTag:
    """Planar region cut out by the nullclines f1 = 1 and f2 = 1."""
    if m.n != 2:
        raise UnsupportedDimensionError("regions R1-R4 are defined for planar maps")
    g = m.f(vec(x, 2)) - 1.0
    up, down = g > tol, g < -tol
    if up.all():
        return RegionTag.R1
    if down.all():
        return RegionTag.R2
    if down[0] and up[1]:
        return RegionTag.R3
    if up[0] and down[1]:
        return RegionTag.R4
    return RegionTag.OTHER


@dataclass(frozen=True)
class Monotonicity:
    cone: str  # "C-up", "C-down", "K-up" or "K-down"
    onset: int


def detect_eventual_monotonicity(trace: OrbitTrace, window: int = 10) -> Monotonicity | None:
    """Earliest step after which every step is strictly monotone in one cone.

    Trailing steps that are ties at the trace's tag tolerance (the
    converged tail) are ignored; the remaining monotone suffix must span at
    least ``window`` steps.
    """
    c_level, c_sign, k_level, k_sign = trace.levels
    n = len(c_level)
    moving = c_level != EQ_LEVEL
    end = n
    while end > 0 and not moving[end - 1]:
        end -= 1
    if end == 0:
        return None
    strict_c = c_level[:end] >= LT_LEVEL
    strict_k = k_level[:end] >= LT_LEVEL
    cones = {
        "C-up": strict_c & (c_sign[:end] > 0),
        "C-down": strict_c & (c_sign[:end] < 0),
        "K-up": strict_k & (k_sign[:end] > 0),
        "K-down": strict_k & (k_sign[:end] < 0),
    }
    best = None
    for name, ok in cones.items():
        bad = np.flatnonzero(~ok)
        onset = int(bad[-1]) + 1 if bad.size else 0
        if end - onset >= window and (best is None or onset < best.onset):
            best = Monotonicity(name, onset)
    return best


@dataclass
class RetrotoneResult:
    status: str  # "pass", "fail" or "inconclusive"
    weak: bool
    n_pairs: int
    n_filtered: int
    counterexample: dict | None = None

    @property
    def acceptance_ratio(self) -> float:
        return self.n_filtered / self.n_pairs if self.n_pairs else 0.0

    def to_dict(self) -> dict:
        return {"status": self.status, "weak": self.weak, "n_pairs": self.n_pairs,
                "n_filtered": self.n_filtered, "acceptance_ratio": self.acceptance_ratio,
                "counterexample": self.counterexample}


def sample_retrotone(m: KolmogorovMap, n_pairs: int = 100_000, seed: int = 0, weak: bool = True,
                     min_filtered: int = 10) -> RetrotoneResult:
    """Search uniform random pairs of [0, r] for a counterexample to the
    (weak) type-K retrotone property.

    Pairs with ``T(x) <_K T(y)`` must satisfy ``x <_K y`` plus, per
    coordinate, either the weak clauses (a strict change of T_i forces a
    strict change of x_i in the same K-direction) or the strong clauses
    (x_i < y_i for i in H whenever y_i != 0, x_j > y_j for j in V whenever
    x_j != 0).  Zero tests are exact.
    """
    rng = np.random.default_rng(seed)
    X = m.box.uniform(rng, n_pairs)
    Y = m.box.uniform(rng, n_pairs)
    TX, TY = m.T(X), m.T(Y)
    s = m.split.signs
    dT = (TY - TX) * s
    dX = (Y - X) * s
    filt = np.all(dT >= 0, axis=1) & np.any(dT > 0, axis=1)
    ordered = np.all(dX >= 0, axis=1) & np.any(dX > 0, axis=1)
    if weak:
        clauses = np.all(~(dT > 0) | (dX > 0), axis=1)
    else:
        k = m.split.k
        h_ok = np.all((Y[:, :k] == 0) | (X[:, :k] < Y[:, :k]), axis=1)
        v_ok = np.all((X[:, k:] == 0) | (X[:, k:] > Y[:, k:]), axis=1)
        clauses = h_ok & v_ok
    bad = filt & ~(ordered & clauses)
    n_filtered = int(filt.sum())
    if bad.any():
        i = int(np.argmax(bad))
        cex = {"x": X[i].tolist(), "y": Y[i].tolist(), "Tx": TX[i].tolist(), "Ty": TY[i].tolist(),
               "index": i}
        return RetrotoneResult("fail", weak, n_pairs, n_filtered, cex)
    status = "pass" if n_filtered >= min_filtered else "inconclusive"
    return RetrotoneResult(status, weak, n_pairs, n_filtered)
