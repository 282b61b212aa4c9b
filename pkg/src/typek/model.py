"""Kolmogorov maps ``T_i(x) = x_i f_i(x)`` and their derivatives.

A :class:`KolmogorovMap` carries the growth vector ``f`` and its exact
Jacobian ``Df``.  Everything else is derived:

    M(x)  = -(x_i / f_i(x)) * dfi/dxj
    DT(x) = diag(f(x)) (I - M(x))

All evaluators accept a single point of shape ``(n,)`` or a stack of
points of shape ``(..., n)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .cones import Box, ConeSplit, vec
from .errors import (DimensionError, DomainError, EvaluationError,
                     MapDefinitionError, MapSyntaxError, UnknownIdentifierError)
from .expr import Expr, diff, parse_expr, simplify, _line_col

__all__ = [
    "KolmogorovMap",
    "eval_f",
    "eval_T",
    "eval_Df",
    "eval_M",
    "eval_DT",
    "builtin_example1",
    "example1_condition",
    "example1_norm_bound",
    "diagonal_map_g",
    "parse_map",
    "load_map",
    "gradient_deviation",
    "BUILTINS",
]


@dataclass(frozen=True, eq=False)
class KolmogorovMap:
    name: str
    split: ConeSplit
    growth: Callable[[np.ndarray], np.ndarray]
    growth_jacobian: Callable[[np.ndarray], np.ndarray]
    box: Box
    params: Mapping[str, float] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()
    info: Mapping[str, object] = field(default_factory=dict)
    expressions: tuple[Expr, ...] | None = None

    def __post_init__(self):
        if self.box.n != self.split.n:
            raise DimensionError("domain box and split disagree on dimension")

    @property
    def n(self) -> int:
        return self.split.n

    @property
    def r(self) -> np.ndarray:
        return self.box.hi

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.n,):
            raise DimensionError(f"expected trailing dimension {self.n}, got shape {x.shape}")
        return x

    def f(self, x) -> np.ndarray:
        x = self._points(x)
        val = np.asarray(self.growth(x), dtype=float)
        if not np.all(np.isfinite(val)):
            bad = np.argwhere(~np.isfinite(val.reshape(-1, self.n)))[0]
            where = x.reshape(-1, self.n)[bad[0]].tolist()
            raise EvaluationError(f"f{bad[1] + 1} is not finite at x={where}")
        return val

    def T(self, x) -> np.ndarray:
        x = self._points(x)
        return x * self.f(x)

    def Df(self, x) -> np.ndarray:
        x = self._points(x)
        jac = np.asarray(self.growth_jacobian(x), dtype=float)
        if not np.all(np.isfinite(jac)):
            raise EvaluationError("growth Jacobian is not finite")
        return jac

    def M(self, x) -> np.ndarray:
        x = self._points(x)
        fx = self.f(x)
        if np.any(fx <= 0):
            bad = np.argwhere((fx <= 0).reshape(-1, self.n))[0]
            where = x.reshape(-1, self.n)[bad[0]].tolist()
            raise DomainError(f"f{bad[1] + 1} <= 0 at x={where}")
        return -(x / fx)[..., :, None] * self.Df(x)

    def DT(self, x) -> np.ndarray:
        x = self._points(x)
        fx = self.f(x)
        return fx[..., :, None] * (np.eye(self.n) - self.M(x))

    def describe(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "k": self.split.k,
            "r": self.r.tolist(),
            "params": dict(sorted(self.params.items())),
            "warnings": list(self.warnings),
        }


def eval_f(m: KolmogorovMap, x) -> np.ndarray:
    return m.f(x)


def eval_T(m: KolmogorovMap, x) -> np.ndarray:
    return m.T(x)


def eval_Df(m: KolmogorovMap, x) -> np.ndarray:
    return m.Df(x)


def eval_M(m: KolmogorovMap, x) -> np.ndarray:
    return m.M(x)


def eval_DT(m: KolmogorovMap, x) -> np.ndarray:
    return m.DT(x)


# -- built-in example1 family --------------------------------------------------

def example1_condition(a: float, b: float) -> tuple[bool, float]:
    """Parameter gate ``0 < b < min(a/pi, 1/(8 + 2a + atan(2 + a)))``."""
    bound = min(a / math.pi, 1.0 / (8.0 + 2.0 * a + math.atan(2.0 + a)))
    return (0.0 < b < bound), bound


def example1_norm_bound(a: float, b: float) -> float:
    """Row-sum bound ``2(a+4)b / (1 - b atan(2+a))`` on M over [0, (2,2)]."""
    return 2.0 * (a + 4.0) * b / (1.0 - b * math.atan(2.0 + a))


def builtin_example1(a: float, b: float, r=(2.0, 2.0)) -> KolmogorovMap:
    """The planar type-K map

        f1 = 1 + b atan(x2 - 1 - a(x1 - 1) - (x1 - 1)^3),   f2(x1, x2) = f1(x2, x1)

    with hand-coded gradients.  Violating the parameter gate only adds a
    warning.
    """
    if not (a > 0 and b > 0):
        raise ValueError("example1 needs a > 0 and b > 0")
    a, b = float(a), float(b)

    def growth(x):
        if x.ndim == 1:
            w1, w2 = x[0] - 1.0, x[1] - 1.0
            return np.array([1.0 + b * math.atan(w2 - a * w1 - w1 ** 3),
                             1.0 + b * math.atan(w1 - a * w2 - w2 ** 3)])
        w = x - 1.0
        z1 = w[..., 1] - a * w[..., 0] - w[..., 0] ** 3
        z2 = w[..., 0] - a * w[..., 1] - w[..., 1] ** 3
        return np.stack([1.0 + b * np.arctan(z1), 1.0 + b * np.arctan(z2)], axis=-1)

    def jacobian(x):
        w = x - 1.0
        w1, w2 = w[..., 0], w[..., 1]
        c1 = b / (1.0 + (w2 - a * w1 - w1 ** 3) ** 2)
        c2 = b / (1.0 + (w1 - a * w2 - w2 ** 3) ** 2)
        row1 = np.stack([-c1 * (a + 3.0 * w1 ** 2), c1], axis=-1)
        row2 = np.stack([c2, -c2 * (a + 3.0 * w2 ** 2)], axis=-1)
        return np.stack([row1, row2], axis=-2)

    ok, bound = example1_condition(a, b)
    warnings = ()
    if not ok:
        warnings = (f"parameter gate violated: b={b!r} is not below {bound!r}",)
    return KolmogorovMap(
        name="example1",
        split=ConeSplit(2, 1),
        growth=growth,
        growth_jacobian=jacobian,
        box=Box.from_upper(r),
        params={"a": a, "b": b},
        warnings=warnings,
        info={"parameter_gate": ok, "parameter_gate_bound": bound,
              "norm_bound": example1_norm_bound(a, b)},
    )


BUILTINS = {"example1": builtin_example1}


def diagonal_map_g(m: KolmogorovMap, u):
    """Restriction of the example1 family to its invariant diagonal,
    ``g(u) = u (1 + b atan((u - 1)(1 - a - (u - 1)^2)))``."""
    if m.name != "example1":
        raise ValueError("diagonal_map_g is defined for the example1 builtin only")
    a, b = m.params["a"], m.params["b"]
    u = np.asarray(u, dtype=float)
    w = u - 1.0
    return u * (1.0 + b * np.arctan(w * (1.0 - a - w ** 2)))


def gradient_deviation(m: KolmogorovMap, n_points: int = 100, seed: int = 0,
                       target: str = "f") -> float:
    """Largest deviation between the exact Jacobian of ``f`` (or ``T``) and
    central differences, over random points of the domain box.

    Deviations are relative with a unit floor: ``|exact - fd| / max(|exact|, 1)``.
    """
    rng = np.random.default_rng(seed)
    pts = m.box.uniform(rng, n_points)
    func, jac = (m.f, m.Df) if target == "f" else (m.T, m.DT)
    worst = 0.0
    for x in pts:
        exact = jac(x)
        fd = np.empty_like(exact)
        for j in range(m.n):
            h = 1e-6 * (1.0 + abs(x[j]))
            e = np.zeros(m.n)
            e[j] = h
            fd[:, j] = (func(x + e) - func(x - e)) / (2.0 * h)
        dev = np.abs(exact - fd) / np.maximum(np.abs(exact), 1.0)
        worst = max(worst, float(dev.max()))
    return worst


# -- map definition files ------------------------------------------------------

_IDENT = r"[A-Za-z_][A-Za-z_0-9]*"
_REAL = r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?"
_STMT_PATTERNS = [
    ("dim", re.compile(r"dim\s*=\s*(\d+)\s*$")),
    ("split_k", re.compile(r"split_k\s*=\s*(\d+)\s*$")),
    ("r", re.compile(r"r\s*=\s*\((.*)\)\s*$")),
    ("param", re.compile(rf"param\s+({_IDENT})\s*=\s*({_REAL})\s*$")),
    ("f", re.compile(r"f(\d+)\s*=")),
]


def _statements(source: str):
    """Yield ``(offset, text)`` for each statement; ``;`` and newlines separate."""
    for m in re.finditer(r"[^;\n]+", source):
        text = m.group()
        hash_at = text.find("#")
        if hash_at >= 0:
            text = text[:hash_at]
        stripped = text.strip()
        if stripped:
            yield m.start() + (len(text) - len(text.lstrip())), stripped


def parse_map(source: str, params: Mapping[str, float] | None = None,
              name: str = "custom", probe_res: int | None = None) -> KolmogorovMap:
    """Build a map from the line-oriented definition language.

    ``params`` override ``param`` lines of the same name.  Gradients are
    obtained by symbolic differentiation.  The growth functions are probed
    on a grid over [0, r]; any non-finite or non-positive value is an error.
    """
    dim = split_k = None
    r_vals = None
    file_params: dict[str, float] = {}
    f_src: dict[int, tuple[int, str]] = {}

    for offset, text in _statements(source):
        for kind, pattern in _STMT_PATTERNS:
            m = pattern.match(text)
            if m:
                break
        else:
            line, col = _line_col(source, offset)
            raise MapSyntaxError(f"unrecognised statement {text!r}", line, col)
        if kind == "dim":
            dim = int(m.group(1))
        elif kind == "split_k":
            split_k = int(m.group(1))
        elif kind == "r":
            parts = [p.strip() for p in m.group(1).split(",")]
            try:
                r_vals = [float(p) for p in parts]
            except ValueError:
                line, col = _line_col(source, offset)
                raise MapSyntaxError(f"r must be a tuple of reals, got {text!r}", line, col) from None
        elif kind == "param":
            file_params[m.group(1)] = float(m.group(2))
        else:
            idx = int(m.group(1))
            if idx in f_src:
                line, col = _line_col(source, offset)
                raise MapDefinitionError(f"f{idx} defined twice (line {line})")
            f_src[idx] = (offset + m.end(), offset + len(text))

    # syntax first, so malformed expressions are reported before anything else
    for idx, (start, end) in sorted(f_src.items()):
        parse_expr(source, None, start, end)

    if dim is None:
        raise MapDefinitionError("missing 'dim = <n>' declaration")
    if split_k is None:
        raise MapDefinitionError("missing 'split_k = <k>' declaration")
    if r_vals is None:
        raise MapDefinitionError("missing 'r = (...)' declaration")
    if len(r_vals) != dim:
        raise DimensionError(f"r has {len(r_vals)} components but dim = {dim}")
    if sorted(f_src) != list(range(1, dim + 1)):
        raise DimensionError(f"expected f1..f{dim}, found {['f%d' % i for i in sorted(f_src)]}")
    if any(v <= 0 for v in r_vals):
        raise MapDefinitionError("r must be strictly positive")
    split = ConeSplit(dim, split_k)

    bound = dict(file_params)
    bound.update(params or {})
    variables = [f"x{i}" for i in range(1, dim + 1)]
    known = set(bound) | set(variables)
    exprs = [parse_expr(source, known, *f_src[i]) for i in range(1, dim + 1)]
    grads = [[simplify(diff(e, v)) for v in variables] for e in exprs]
    const = {k: float(v) for k, v in bound.items()}

    def env_for(x):
        env = dict(const)
        for j, v in enumerate(variables):
            env[v] = x[..., j]
        return env

    def growth(x):
        env = env_for(x)
        shape = x.shape[:-1]
        cols = [np.broadcast_to(np.asarray(e.evaluate(env), dtype=float), shape) for e in exprs]
        return np.stack(cols, axis=-1)

    def jacobian(x):
        env = env_for(x)
        shape = x.shape[:-1]
        rows = [np.stack([np.broadcast_to(np.asarray(g.evaluate(env), dtype=float), shape)
                          for g in row], axis=-1) for row in grads]
        return np.stack(rows, axis=-2)

    m = KolmogorovMap(
        name=name,
        split=split,
        growth=growth,
        growth_jacobian=jacobian,
        box=Box.from_upper(r_vals),
        params={k: const[k] for k in sorted(const)},
        expressions=tuple(exprs),
    )
    _probe_positive(m, probe_res)
    return m


def _probe_positive(m: KolmogorovMap, res: int | None) -> None:
    if res is None:
        res = {1: 33, 2: 17, 3: 9}.get(m.n, 5)
    pts = m.box.grid(res)
    with np.errstate(all="ignore"):
        vals = np.asarray(m.growth(pts), dtype=float)
    bad = ~np.isfinite(vals) | (vals <= 0)
    if np.any(bad):
        p, i = np.argwhere(bad)[0]
        raise DomainError(f"f{i + 1} is not positive and finite at probe point x={pts[p].tolist()} "
                          f"(value {vals[p, i]!r})")


def load_map(path, params: Mapping[str, float] | None = None) -> KolmogorovMap:
    with open(path, encoding="utf-8") as fh:
        source = fh.read()
    return parse_map(source, params, name=str(path))
