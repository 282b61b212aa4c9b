"""Sampling certificates for the standing assumptions on a map.

Every check evaluates the map on a uniform grid over the working box
[0, r] (plus any caller-supplied extra points) and reports the worst
margin together with a concrete witness when it fails.  These are
certificates at grid resolution only, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cones import vec
from .errors import NumericalError, UnsupportedDimensionError
from .model import KolmogorovMap

__all__ = [
    "Check",
    "HypothesisReport",
    "Ray",
    "DEFAULT_T_GRID",
    "default_grid_res",
    "check_A1_signs",
    "check_A2_origin",
    "check_forward_invariance",
    "check_dissipativity_E3",
    "check_rho_M",
    "check_criterion12",
    "criterion12_holds",
    "spectral_radius",
    "spectral_radius_2x2",
    "check_hypotheses",
]

DEFAULT_T_GRID = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0)
A2_TOL = 1e-12


def default_grid_res(n: int) -> int:
    if n <= 2:
        return 65
    if n <= 4:
        return 17
    return 9


@dataclass
class Check:
    passed: bool
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "witness": self.witness, **self.details}


def _sample_points(m: KolmogorovMap, grid_res, extra_points) -> np.ndarray:
    res = grid_res or default_grid_res(m.n)
    pts = m.box.grid(res)
    if extra_points is not None and len(extra_points):
        pts = np.vstack([pts, np.asarray(extra_points, dtype=float).reshape(-1, m.n)])
    return pts


def check_A1_signs(m: KolmogorovMap, grid_res: int | None = None, extra_points=None) -> Check:
    """Type-K sign structure of Df on the grid.

    Within the H and V blocks every entry must be <= 0 with a strictly
    negative diagonal; the cross blocks must be >= 0.
    """
    pts = _sample_points(m, grid_res, extra_points)
    jac = m.Df(pts)
    n = m.n
    group = np.arange(n) < m.split.k
    same = group[:, None] == group[None, :]
    diag = np.eye(n, dtype=bool)
    # positive "excess" means a violation
    excess = np.where(diag, jac, np.where(same, jac, -jac))
    bad = np.where(diag, excess >= 0, excess > 0)
    cross = jac[:, ~same]
    details = {
        "n_points": int(len(pts)),
        "n_violations": int(bad.any(axis=(1, 2)).sum()),
        "worst_excess": float(excess.max()),
        "cross_strictly_positive": bool(cross.size == 0 or np.all(cross > 0)),
    }
    witness = None
    if bad.any():
        p, i, j = np.argwhere(bad)[0]
        witness = {"x": pts[p].tolist(), "entry": [int(i) + 1, int(j) + 1], "value": float(jac[p, i, j])}
    return Check(witness is None, witness, details)


def check_A2_origin(m: KolmogorovMap, tol: float = A2_TOL) -> Check:
    """Repelling origin: f(0) >> 1 with margin ``tol``."""
    f0 = m.f(np.zeros(m.n))
    passed = bool(np.all(f0 > 1.0 + tol))
    witness = None
    if not passed:
        i = int(np.argmin(f0))
        witness = {"x": [0.0] * m.n, "component": i + 1, "value": float(f0[i])}
    return Check(passed, witness, {"f0": f0.tolist()})


def check_forward_invariance(m: KolmogorovMap, grid_res: int | None = None, extra_points=None) -> Check:
    """T maps the grid of [0, r] into [0, r) (strict on the upper side)."""
    pts = _sample_points(m, grid_res, extra_points)
    tx = m.T(pts)
    r = m.r
    ratio = (tx / r).max(axis=1)
    p = int(np.argmax(ratio))
    bad = np.any(tx < 0, axis=1) | np.any(tx >= r, axis=1)
    witness = None
    if bad.any():
        q = int(np.argmax(bad))
        witness = {"x": pts[q].tolist(), "T": tx[q].tolist()}
    details = {"n_points": int(len(pts)), "max_ratio": float(ratio[p]), "argmax": pts[p].tolist()}
    return Check(witness is None, witness, details)


@dataclass(frozen=True)
class Ray:
    """Increasing family ``u(t) = base + t * direction`` with direction >> 0."""

    base: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", vec(self.base))
        object.__setattr__(self, "direction", vec(self.direction, self.base.size))
        if np.any(self.direction <= 0) or np.any(self.base <= 0):
            raise ValueError("ray needs base >> 0 and direction >> 0")

    def __call__(self, t: float) -> np.ndarray:
        return self.base + t * self.direction


def _golden_max(func, lo: float, hi: float, iters: int = 80) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = func(c), func(d)
    for _ in range(iters):
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = func(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = func(d)
    return (c, fc) if fc > fd else (d, fd)


def check_dissipativity_E3(m: KolmogorovMap, u_family=None, t_grid=DEFAULT_T_GRID,
                           s_res: int = 200) -> Check:
    """Section condition for dissipativity along an increasing family u(t).

    For each t, each i in H and j in V::

        max_{s in [0, u_i]} T_i(s e_i + u_V) < u_i
        max_{s in [0, u_j]} T_j(s e_j + u_H) < u_j

    The maximum is sampled at ``s_res`` points and refined by golden-section
    search around the best sample.
    """
    u_family = u_family or Ray(m.r, np.ones(m.n))
    k = m.split.k
    sections = []
    witness = None
    worst = math.inf
    for t in t_grid:
        u = np.asarray(u_family(t), dtype=float)
        for i in range(m.n):
            other = np.zeros(m.n)
            if i < k:
                other[k:] = u[k:]
            else:
                other[:k] = u[:k]

            def Ti(s, i=i, other=other):
                p = other.copy()
                p[i] = s
                return float(m.T(p)[i])

            s = np.linspace(0.0, u[i], s_res)
            pts = np.repeat(other[None, :], s_res, axis=0)
            pts[:, i] = s
            vals = m.T(pts)[:, i]
            j = int(np.argmax(vals))
            best_s, best = float(s[j]), float(vals[j])
            lo, hi = s[max(j - 1, 0)], s[min(j + 1, s_res - 1)]
            if hi > lo:
                rs, rv = _golden_max(Ti, float(lo), float(hi))
                if rv > best:
                    best_s, best = rs, rv
            margin = float(u[i] - best)
            worst = min(worst, margin)
            sections.append({"t": float(t), "component": i + 1, "u": float(u[i]),
                             "max_T": best, "argmax_s": best_s, "margin": margin})
            if margin <= 0 and witness is None:
                witness = {"t": float(t), "component": i + 1, "s": best_s, "T": best, "u": float(u[i])}
    details = {"t_grid": [float(t) for t in t_grid], "s_res": s_res, "worst_margin": worst,
               "sections": sections}
    return Check(witness is None, witness, details)


def spectral_radius_2x2(mats: np.ndarray) -> np.ndarray:
    """Closed-form spectral radius from ``2 rho = tr +- sqrt(tr^2 - 4 det)``."""
    tr = mats[..., 0, 0] + mats[..., 1, 1]
    det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    disc = tr * tr - 4.0 * det
    root = np.sqrt(np.abs(disc))
    real = np.maximum(np.abs(tr + root), np.abs(tr - root)) / 2.0
    cplx = np.sqrt(np.abs(det))
    return np.where(disc >= 0, real, cplx)


def _irreducible_blocks(a: np.ndarray) -> list[np.ndarray]:
    """Index sets of the strongly connected components of the graph of ``a``."""
    n = a.shape[0]
    reach = (a != 0) | np.eye(n, dtype=bool)
    for _ in range(max(1, int(math.ceil(math.log2(n))))):
        reach = (reach.astype(int) @ reach.astype(int)) > 0
    mutual = reach & reach.T
    blocks, seen = [], np.zeros(n, dtype=bool)
    for i in range(n):
        if not seen[i]:
            idx = np.flatnonzero(mutual[i])
            seen[idx] = True
            blocks.append(idx)
    return blocks


def _perron_radius(a: np.ndarray, tol: float = 1e-10, max_steps: int = 10_000) -> float:
    """Spectral radius of a nonnegative matrix.

    The Perron root of a reducible matrix is the largest Perron root of its
    irreducible diagonal blocks.  On each block, power iteration runs on
    block + I, which is primitive; the Collatz-Wielandt ratios bracket the
    root and their gap is the stopping test.
    """
    best = 0.0
    for idx in _irreducible_blocks(a):
        blk = a[np.ix_(idx, idx)]
        if len(idx) == 1:
            best = max(best, float(blk[0, 0]))
            continue
        b = blk + np.eye(len(idx))
        v = np.full(len(idx), 1.0 / len(idx))
        for _ in range(max_steps):
            w = b @ v
            ratios = w / v
            lo, hi = ratios.min(), ratios.max()
            if hi - lo < tol:
                break
            v = w / w.max()
        else:
            raise NumericalError(f"power iteration did not converge in {max_steps} steps")
        best = max(best, float((lo + hi) / 2.0 - 1.0))
    return best


def spectral_radius(mat) -> float:
    """rho(M) for n == 2 in closed form; otherwise rho(|M|).

    Under the type-K sign pattern |M| = S M S with S = diag(+1 on H, -1 on V),
    so rho(|M|) equals rho(M).  Without it, rho(|M|) is still an upper bound.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.shape == (2, 2):
        return float(spectral_radius_2x2(mat))
    return _perron_radius(np.abs(mat))


def criterion12_holds(mats: np.ndarray) -> np.ndarray:
    tr = mats[..., 0, 0] + mats[..., 1, 1]
    det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    return tr < np.minimum(2.0, 1.0 + det)


def check_criterion12(m: KolmogorovMap, x) -> bool:
    """``tr M(x) < min(2, 1 + det M(x))``.

    Equivalent to rho(M(x)) < 1 when tr M > 0 and tr^2 - 4 det > 0, which
    holds for x != 0 under the type-K sign structure.
    """
    if m.n != 2:
        raise UnsupportedDimensionError("the trace-determinant criterion is planar only")
    return bool(criterion12_holds(m.M(vec(x, 2))))


def check_rho_M(m: KolmogorovMap, grid_res: int | None = None, extra_points=None,
                tol: float = 1e-10) -> tuple[Check, Check | None]:
    """rho(M(x)) < 1 on the grid; for planar maps also the trace-determinant criterion and
    its agreement with the closed-form radius."""
    pts = _sample_points(m, grid_res, extra_points)
    mats = m.M(pts)
    if m.n == 2:
        rho = spectral_radius_2x2(mats)
    else:
        rho = np.array([_perron_radius(np.abs(a), tol) for a in mats])
    p = int(np.argmax(rho))
    norm_inf = np.abs(mats).sum(axis=-1).max(axis=-1)
    witness = None
    if rho[p] >= 1.0:
        witness = {"x": pts[p].tolist(), "rho": float(rho[p])}
    rho_check = Check(witness is None, witness, {
        "n_points": int(len(pts)),
        "max_rho": float(rho[p]),
        "argmax": pts[p].tolist(),
        "max_norm_inf": float(norm_inf.max()),
    })
    if m.n != 2:
        return rho_check, None

    nonzero = np.any(pts != 0, axis=1)
    tr = mats[..., 0, 0] + mats[..., 1, 1]
    det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    crit = criterion12_holds(mats)
    regime = nonzero & (tr > 0) & (tr * tr - 4.0 * det > 0)
    side_bad = nonzero & ~regime
    mismatch = regime & (crit != (rho < 1.0))
    crit_fail = nonzero & ~crit
    witness12 = None
    if crit_fail.any():
        q = int(np.argmax(crit_fail))
        witness12 = {"x": pts[q].tolist(), "trace": float(tr[q]), "det": float(det[q])}
    elif mismatch.any():
        q = int(np.argmax(mismatch))
        witness12 = {"x": pts[q].tolist(), "trace": float(tr[q]), "det": float(det[q]),
                     "rho": float(rho[q]), "mismatch": True}
    crit_check = Check(witness12 is None, witness12, {
        "n_points": int(nonzero.sum()),
        "n_mismatches": int(mismatch.sum()),
        "n_side_condition_violations": int(side_bad.sum()),
        "side_condition_examples": [pts[q].tolist() for q in np.flatnonzero(side_bad)[:5]],
    })
    return rho_check, crit_check


@dataclass
class HypothesisReport:
    a1: Check
    a2: Check
    invariance: Check
    dissipative: Check
    rho: Check
    criterion12: Check | None
    norm_bound: dict | None
    grid_spec: dict

    @property
    def passed(self) -> bool:
        checks = [self.a1, self.a2, self.invariance, self.dissipative, self.rho]
        if self.criterion12 is not None:
            checks.append(self.criterion12)
        return all(c.passed for c in checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "a1": self.a1.to_dict(),
            "a2": self.a2.to_dict(),
            "invariance": self.invariance.to_dict(),
            "dissipative": self.dissipative.to_dict(),
            "rho": self.rho.to_dict(),
            "criterion12": None if self.criterion12 is None else self.criterion12.to_dict(),
            "norm_bound": self.norm_bound,
            "grid_spec": self.grid_spec,
        }


def check_hypotheses(m: KolmogorovMap, grid_res: int | None = None, t_grid=DEFAULT_T_GRID,
                     s_res: int = 200, u_family=None, extra_points=None) -> HypothesisReport:
    res = grid_res or default_grid_res(m.n)
    rho, crit = check_rho_M(m, res, extra_points)
    norm = None
    if "norm_bound" in m.info:
        bound = float(m.info["norm_bound"])
        norm = {"bound": bound, "max_norm_inf": rho.details["max_norm_inf"],
                "holds": bool(rho.details["max_rho"] <= rho.details["max_norm_inf"] <= bound)}
    return HypothesisReport(
        a1=check_A1_signs(m, res, extra_points),
        a2=check_A2_origin(m),
        invariance=check_forward_invariance(m, res, extra_points),
        dissipative=check_dissipativity_E3(m, u_family, t_grid, s_res),
        rho=rho,
        criterion12=crit,
        norm_bound=norm,
        grid_spec={"grid_res": res, "t_grid": [float(t) for t in t_grid], "s_res": s_res},
    )
