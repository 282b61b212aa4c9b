"""Command-line front end.

Exit codes: 0 success, 2 a check failed, 3 evaluation error, 4 bad or
unreadable map/config, 5 degenerate nullclines, 6 insufficient resolution,
7 hypothesis violation, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attractor import assemble_decomposition
from .errors import (DegenerateNullclinesError, DimensionError, EvaluationError, HypothesisViolation,
                     MapDefinitionError, MapSyntaxError, NotInImageError, ResolutionError)
from .fixed_points import find_fixed_points, trace_nullcline
from .hypotheses import check_A1_signs, check_hypotheses
from .model import BUILTINS, KolmogorovMap, load_map
from .orbits import detect_eventual_monotonicity, iterate_backward, iterate_forward, sample_retrotone
from .serialize import atomic_write, write_csv, write_json
from .svg import render_decomposition

log = logging.getLogger("typek")

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_EVALUATION = 3
EXIT_BAD_INPUT = 4
EXIT_DEGENERATE = 5
EXIT_RESOLUTION = 6
EXIT_HYPOTHESIS = 7
EXIT_USAGE = 64


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    builtin: str | None = None
    map_path: str | None = None
    params: dict = field(default_factory=dict)
    grid: int | None = None
    tol: float = 1e-12
    seed: int = 0
    out: str = "."
    max_steps: int = 100_000
    n_random: int = 0
    x0: list = field(default_factory=list)
    backward: bool = False
    n_pairs: int = 100_000
    n_seeds: int = 1
    force: bool = False

    def validate(self) -> None:
        if (self.builtin is None) == (self.map_path is None):
            raise UsageError("give exactly one of --builtin or --map")
        if self.builtin is not None and self.builtin not in BUILTINS:
            raise UsageError(f"unknown builtin {self.builtin!r}; known: {sorted(BUILTINS)}")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.grid is not None and self.grid < 3:
            raise UsageError("--grid must be at least 3")
        if not -2**63 <= self.seed < 2**64:
            raise UsageError("--seed must fit in 64 bits")
        if self.max_steps < 1 or self.n_random < 0 or self.n_pairs < 1 or self.n_seeds < 1:
            raise UsageError("step, pair and sample counts must be positive")

    def load(self) -> KolmogorovMap:
        if self.builtin is not None:
            allowed = {"a", "b"}
            unknown = set(self.params) - allowed
            if unknown:
                raise UsageError(f"unknown parameters for {self.builtin}: {sorted(unknown)}")
            return BUILTINS[self.builtin](self.params.get("a", 1.0), self.params.get("b", 0.05))
        return load_map(self.map_path, self.params)

    @property
    def out_dir(self) -> Path:
        return Path(self.out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _param(text: str):
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=REAL, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a real number: {value!r}") from None


def _point(text: str):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--builtin", metavar="NAME", help="built-in map (example1)")
    src.add_argument("--map", dest="map_path", metavar="FILE", help="map definition file")
    common.add_argument("-p", "--param", dest="params", action="append", type=_param, default=None,
                        metavar="NAME=REAL", help="parameter value (repeatable)")
    common.add_argument("--config", metavar="JSON", help="run configuration file; flags override it")
    common.add_argument("--grid", type=int, help="sampling grid resolution per axis")
    common.add_argument("--tol", type=float, help="convergence tolerance for orbits")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--max-steps", type=int, help="orbit step budget")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="typek", description="Analyse planar and n-dimensional type-K "
                     "competitive Kolmogorov maps.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("check", parents=[common], help="verify the standing hypotheses")
    sub.add_parser("fixed-points", parents=[common], help="locate and classify fixed points")
    p = sub.add_parser("attractor", parents=[common], help="build the attractor decomposition")
    p.add_argument("--force", action="store_true", default=None,
                   help="run even if the hypothesis check fails")
    p = sub.add_parser("orbit", parents=[common], help="forward or backward orbits")
    p.add_argument("--x0", action="append", type=_point, metavar="X1,X2,...",
                   help="starting point (repeatable)")
    p.add_argument("--n-random", type=int, help="number of seeded random interior starts")
    p.add_argument("--backward", action="store_true", default=None)
    p = sub.add_parser("retrotone", parents=[common], help="sample the retrotone property")
    p.add_argument("--n-pairs", type=int, help="pairs per seed")
    p.add_argument("--n-seeds", type=int, help="number of consecutive seeds")
    p = sub.add_parser("all", parents=[common], help="check, fixed points, attractor, orbits")
    p.add_argument("--n-random", type=int, help="number of seeded random interior starts")
    p.add_argument("--force", action="store_true", default=None)
    return parser


_CONFIG_KEYS = {"builtin", "map", "params", "grid", "tol", "seed", "out", "max_steps", "n_random",
                "x0", "backward", "n_pairs", "n_seeds", "force"}


def make_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "command", None) == "all":
        cfg.n_random = 20
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise MapDefinitionError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise MapDefinitionError("config must be a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise MapDefinitionError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            setattr(cfg, "map_path" if key == "map" else key, value)
        cfg.params = {k: float(v) for k, v in cfg.params.items()}
    if args.builtin or args.map_path:
        cfg.builtin, cfg.map_path = args.builtin, args.map_path
    if args.params:
        cfg.params = {**cfg.params, **dict(args.params)}
    for key in ("grid", "tol", "seed", "out", "max_steps", "n_random", "x0", "backward",
                "n_pairs", "n_seeds", "force"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def cmd_check(cfg: RunConfig, m: KolmogorovMap) -> int:
    report = check_hypotheses(m, cfg.grid)
    for w in m.warnings:
        log.warning("%s", w)
    write_json(cfg.out_dir / "report.json", {"map": m.describe(), "report": report.to_dict()})
    for name in ("a1", "a2", "invariance", "dissipative", "rho", "criterion12"):
        chk = getattr(report, name)
        if chk is not None:
            print(f"{name:12s} {'pass' if chk.passed else 'FAIL'}")
    print(f"hypotheses {'passed' if report.passed else 'FAILED'}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _fixed_point_rows(catalog):
    for rec in catalog.records:
        e = rec.eigenvalues
        yield [rec.kind, *rec.location, rec.residual, e[0].real, e[0].imag, e[1].real, e[1].imag,
               rec.classification, rec.precision]


def cmd_fixed_points(cfg: RunConfig, m: KolmogorovMap):
    catalog = find_fixed_points(m)
    header = ["kind", "x1", "x2", "residual", "eig1_re", "eig1_im", "eig2_re", "eig2_im",
              "classification", "precision"]
    rows = list(_fixed_point_rows(catalog))
    write_csv(cfg.out_dir / "fixed_points.csv", header, rows)
    write_json(cfg.out_dir / "fixed_points.json", {"map": m.describe(), **catalog.to_dict()})
    for rec in catalog.records:
        loc = ", ".join(f"{v:.10g}" for v in rec.location)
        print(f"{rec.kind:9s} ({loc})  {rec.classification}")
    return EXIT_OK, catalog


def cmd_attractor(cfg: RunConfig, m: KolmogorovMap, catalog=None) -> int:
    if not cfg.force:
        report = check_hypotheses(m, cfg.grid)
        if not report.passed:
            write_json(cfg.out_dir / "report.json", {"map": m.describe(), "report": report.to_dict()})
            print("hypotheses FAILED; rerun with --force to build the decomposition anyway")
            return EXIT_CHECK_FAILED
    if catalog is None:
        _, catalog = cmd_fixed_points(cfg, m)
    dec = assemble_decomposition(m, catalog, seed=cfg.seed)
    nullclines = {f"nullcline-{i}": trace_nullcline(m, i, 129).samples for i in (1, 2)}
    data = {"map": m.describe(), **dec.to_dict()}
    svg = render_decomposition(m.r, dec.curves(), dec.markers(), nullclines,
                               title=f"{m.name} {m.describe()['params']}")
    write_json(cfg.out_dir / "attractor.json", data)
    atomic_write(cfg.out_dir / "attractor.svg", svg)
    print(f"sigma_H: {len(dec.sigma_H.points)} points, terminal {dec.sigma_H.terminal.tolist()}")
    print(f"sigma_V: {len(dec.sigma_V.points)} points, terminal {dec.sigma_V.terminal.tolist()}")
    print(f"sigma_0: {len(dec.sigma_0.points)} points, width {dec.sigma_0.max_width:.3g}")
    print(f"decomposition {'verified' if dec.passed else 'FAILED verification'}")
    return EXIT_OK if dec.passed else EXIT_CHECK_FAILED


def _starts(cfg: RunConfig, m: KolmogorovMap) -> list[np.ndarray]:
    starts = [np.asarray(x, dtype=float) for x in cfg.x0]
    for x in starts:
        if x.shape != (m.n,):
            raise UsageError(f"starting point {x.tolist()} does not have {m.n} components")
    if cfg.n_random:
        rng = np.random.default_rng(cfg.seed)
        starts += list(rng.uniform(0.0, 1.0, (cfg.n_random, m.n)) * m.r)
    if not starts:
        raise UsageError("no starting points: use --x0 or --n-random")
    return starts


def cmd_orbit(cfg: RunConfig, m: KolmogorovMap) -> int:
    summaries = []
    header = ["step", *[f"x{i + 1}" for i in range(m.n)], "tag"]
    for idx, x0 in enumerate(_starts(cfg, m)):
        if cfg.backward:
            try:
                trace = iterate_backward(m, x0, cfg.max_steps, cfg.tol)
            except NotInImageError as exc:
                trace = exc.trace
        else:
            trace = iterate_forward(m, x0, cfg.max_steps, cfg.tol)
        tags = trace.tag_labels() + [""]
        rows = [[i, *p, t] for i, (p, t) in enumerate(zip(trace.points, tags))]
        write_csv(cfg.out_dir / f"orbit_{idx}.csv", header, rows)
        mono = detect_eventual_monotonicity(trace)
        summary = {"index": idx, **trace.summary(),
                   "eventual_monotonicity": None if mono is None else
                   {"cone": mono.cone, "onset": mono.onset}}
        write_json(cfg.out_dir / f"orbit_{idx}.json", summary)
        summaries.append(summary)
    write_json(cfg.out_dir / "orbits.json", {"map": m.describe(), "orbits": summaries})
    counts: dict = {}
    for s in summaries:
        counts[s["verdict"]] = counts.get(s["verdict"], 0) + 1
    print(", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))
    return EXIT_OK


def cmd_retrotone(cfg: RunConfig, m: KolmogorovMap) -> int:
    strict = bool(check_A1_signs(m, cfg.grid).details.get("cross_strictly_positive", False))
    results = []
    ok = True
    for seed in range(cfg.seed, cfg.seed + cfg.n_seeds):
        weak = sample_retrotone(m, cfg.n_pairs, seed, weak=True)
        strong = sample_retrotone(m, cfg.n_pairs, seed, weak=False)
        ok &= weak.status != "fail" and (strong.status != "fail" or not strict)
        results.append({"seed": seed, "weak": weak.to_dict(), "strong": strong.to_dict()})
    write_json(cfg.out_dir / "retrotone.json", {"map": m.describe(), "strong_claimed": strict,
                                                "passed": ok, "runs": results})
    n_fail = sum(r["weak"]["status"] == "fail" for r in results)
    print(f"retrotone {'pass' if ok else 'FAIL'} ({n_fail} weak counterexample seeds "
          f"of {len(results)})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_all(cfg: RunConfig, m: KolmogorovMap) -> int:
    code = cmd_check(cfg, m)
    if code != EXIT_OK and not cfg.force:
        return code
    _, catalog = cmd_fixed_points(cfg, m)
    cfg.force = True
    code = cmd_attractor(cfg, m, catalog)
    if code != EXIT_OK:
        return code
    if cfg.n_random or cfg.x0:
        code = cmd_orbit(cfg, m)
    return code


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = make_config(args)
        m = cfg.load()
        if args.command == "check":
            return cmd_check(cfg, m)
        if args.command == "fixed-points":
            return cmd_fixed_points(cfg, m)[0]
        if args.command == "attractor":
            return cmd_attractor(cfg, m)
        if args.command == "orbit":
            return cmd_orbit(cfg, m)
        if args.command == "retrotone":
            return cmd_retrotone(cfg, m)
        return cmd_all(cfg, m)
    except UsageError as exc:
        print(f"typek: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MapSyntaxError, MapDefinitionError, DimensionError, OSError) as exc:
        print(f"typek: bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except DegenerateNullclinesError as exc:
        print(f"typek: degenerate nullclines: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ResolutionError as exc:
        print(f"typek: insufficient resolution: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except HypothesisViolation as exc:
        print(f"typek: hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except EvaluationError as exc:
        print(f"typek: evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
