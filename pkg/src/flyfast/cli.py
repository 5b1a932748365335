"""Command-line front end.

    flyfast check --spec epidemic.pop --formula "P<=0.5[true U<=30 i]" --mode meanfield
    flyfast check --spec epidemic.pop --formulas epidemic.pctl --sweep k=0..70
    flyfast trajectory --spec epidemic.pop --T 70
    flyfast simulate --spec epidemic.pop --T 30 --R 100 --N 1000 --seed 1

Exit status: 0 ok, 1 parse/model/usage error, 2 safety incidents under
``--strict-safety``, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import re
import sys
from dataclasses import dataclass, field, replace
from importlib.resources import files
from pathlib import Path

from .checker import DEFAULT_SAFETY_EPSILON, Checker
from .exact import ExactModel, scale_counts, simulate
from .lang import (
    FlyFastError, ModelError, SpecError, parse_formula, parse_formula_file,
    parse_system_spec, resolve_atoms, validate,
)
from .lang.ast import Prob, SystemSpec, Until
from .meanfield import MeanFieldModel, mf_trajectory

EXIT_OK, EXIT_ERROR, EXIT_UNSAFE, EXIT_INTERNAL = 0, 1, 2, 3
MODES = ("exact", "meanfield", "simulate", "trajectory")


class UsageError(FlyFastError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".12g")


@dataclass
class Sweep:
    variable: str  # "k" or "t0"
    start: int
    stop: int

    @classmethod
    def parse(cls, text: str) -> "Sweep":
        m = re.fullmatch(r"\s*(k|t0)\s*=\s*(\d+)\s*\.\.\s*(\d+)\s*", text)
        if not m:
            raise UsageError(f"bad sweep {text!r}; expected k=A..B or t0=A..B with 0 <= A <= B")
        var, a, b = m.group(1), int(m.group(2)), int(m.group(3))
        if a > b:
            raise UsageError(f"empty sweep range {a}..{b}")
        return cls(var, a, b)

    def values(self):
        return range(self.start, self.stop + 1)


@dataclass
class RunConfig:
    mode: str
    spec_path: str
    formulas: list[str] = field(default_factory=list)
    formula_file: str | None = None
    N: int | None = None
    t0: int = 0
    sweep: Sweep | None = None
    safety_epsilon: float = DEFAULT_SAFETY_EPSILON
    strict_safety: bool = False
    seed: int = 0
    T: int = 0
    R: int = 1
    mu0: tuple[float, ...] | None = None
    output: str | None = None
    memoize: bool = True

    def validate(self) -> None:
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.N is not None and self.N < 1:
            raise UsageError("population must be >= 1")
        if self.t0 < 0 or self.T < 0:
            raise UsageError("times must be non-negative")
        if self.mode in ("exact", "meanfield") and not (self.formulas or self.formula_file):
            raise UsageError("no formula given (use --formula or --formulas)")
        if self.mode == "exact" and (self.t0 or (self.sweep and self.sweep.variable == "t0")):
            raise UsageError("an initial time offset is only supported in meanfield mode")
        if self.mode == "simulate" and self.R < 1:
            raise UsageError("need at least one run")
        if self.safety_epsilon < 0:
            raise UsageError("safety epsilon must be >= 0")


def resolve_spec_path(path: str) -> Path:
    """A filesystem path, or the name of a bundled model such as ``epidemic.pop``."""
    p = Path(path)
    if p.exists():
        return p
    bundled = files("flyfast") / "models" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise UsageError(f"spec file {path} not found")


def load_spec(cfg: RunConfig, err) -> SystemSpec:
    text = resolve_spec_path(cfg.spec_path).read_bytes()
    spec = parse_system_spec(text)
    for d in validate(spec):
        if d.severity == "warning":
            print(f"{cfg.spec_path}:{d}", file=err)
    if cfg.N is not None:
        spec = spec.with_counts(scale_counts(spec.counts, cfg.N, keep=spec.first_state))
    return spec


def load_formulas(cfg: RunConfig, spec: SystemSpec):
    out = []
    if cfg.formula_file:
        text = resolve_spec_path(cfg.formula_file).read_bytes()
        out.extend(parse_formula_file(text))
    for i, src in enumerate(cfg.formulas, 1):
        out.append((f"f{i}", parse_formula(src)))
    for _, phi in out:
        resolve_atoms(phi, spec)
    return out


def with_horizon(phi, k: int):
    if not (isinstance(phi, Prob) and isinstance(phi.path, Until)):
        raise UsageError("a k sweep needs formulas of the form P~p [ a U<=k b ]")
    return replace(phi, path=replace(phi.path, k=k))


def run_check(cfg: RunConfig, spec: SystemSpec, out, err) -> int:
    formulas = load_formulas(cfg, spec)
    if cfg.mode == "exact":
        model = ExactModel(spec)
        start = lambda t0: model.initial_state()  # noqa: E731
    else:
        model = MeanFieldModel(spec, cfg.mu0)
        start = model.initial_state
    checker = Checker(model, safety_epsilon=cfg.safety_epsilon, memoize=cfg.memoize)

    var = cfg.sweep.variable if cfg.sweep else "k"
    points = list(cfg.sweep.values()) if cfg.sweep else [None]
    rows, incidents = [], 0
    for point in points:
        for name, phi in formulas:
            t0 = cfg.t0
            if cfg.sweep and var == "k":
                phi = with_horizon(phi, point)
            elif cfg.sweep:
                t0 = point
            res = checker.check(start(t0), phi)
            incidents += len(res.safety)
            for inc in res.safety:
                where = name if point is None else f"{name} at {var}={point}"
                print(f"safety: {where}: path probability {fmt(inc.probability)} "
                      f"within {fmt(inc.gap)} of bound {fmt(inc.threshold)} in state "
                      f"{model.describe_key(inc.state)}",
                      file=err)
            if point is None:
                label = phi.path.k if isinstance(phi, Prob) and isinstance(phi.path, Until) else ""
            else:
                label = point
            prob = "" if res.probability is None else fmt(res.probability)
            rows.append((label, name, prob, "true" if res.value else "false", len(res.safety)))
    write_csv(out, [var, "formula", "probability", "verdict", "safety_incidents"], rows)
    if incidents and cfg.strict_safety:
        return EXIT_UNSAFE
    return EXIT_OK


def run_trajectory(cfg: RunConfig, spec: SystemSpec, out) -> int:
    traj = mf_trajectory(spec, cfg.mu0, cfg.T)
    rows = [(t, *map(fmt, mu)) for t, mu in enumerate(traj)]
    write_csv(out, ["t", *spec.state_names], rows)
    return EXIT_OK


def run_simulate(cfg: RunConfig, spec: SystemSpec, out) -> int:
    mean = simulate(spec, cfg.T, cfg.R, cfg.seed)
    rows = [(t, *map(fmt, mu)) for t, mu in enumerate(mean)]
    write_csv(out, ["t", *spec.state_names], rows)
    return EXIT_OK


def write_csv(out, header, rows) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def run(cfg: RunConfig, out=None, err=None) -> int:
    """Execute one configuration; returns the process exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        cfg.validate()
        spec = load_spec(cfg, err)
        buf = io.StringIO()
        if cfg.mode in ("exact", "meanfield"):
            code = run_check(cfg, spec, buf, err)
        elif cfg.mode == "trajectory":
            code = run_trajectory(cfg, spec, buf)
        else:
            code = run_simulate(cfg, spec, buf)
        if cfg.output:
            Path(cfg.output).write_text(buf.getvalue(), encoding="utf-8", newline="")
        else:
            out.write(buf.getvalue())
        return code
    except (SpecError, ModelError, UsageError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR
    except (OSError, ValueError, NotImplementedError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INTERNAL


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _sweep(text: str) -> Sweep:
    try:
        return Sweep.parse(text)
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    env_eps = os.environ.get("FLYFAST_SAFETY_EPS")
    default_eps = float(env_eps) if env_eps else DEFAULT_SAFETY_EPSILON

    ap = argparse.ArgumentParser(prog="flyfast", description="Bounded PCTL checking of population models.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="system spec (.pop) or bundled model name")
        p.add_argument("--N", type=int, help="rescale the initial population to N objects")
        p.add_argument("--output", "-o", help="write CSV here instead of stdout")

    c = sub.add_parser("check", help="check formulas against the tagged object")
    common(c)
    c.add_argument("--formula", action="append", default=[], help="inline formula (repeatable)")
    c.add_argument("--formulas", dest="formula_file", help=".pctl file, one formula per line")
    c.add_argument("--mode", choices=("exact", "meanfield"), default="meanfield")
    c.add_argument("--t0", type=int, default=0, help="initial time offset (meanfield)")
    c.add_argument("--sweep", type=_sweep, help="k=A..B or t0=A..B")
    c.add_argument("--safety-epsilon", type=float, default=default_eps)
    c.add_argument("--strict-safety", action="store_true", help="exit 2 when safety incidents occur")
    c.add_argument("--mu0", type=_floats, help="override the initial occupancy (meanfield)")
    c.add_argument("--no-memo", dest="memoize", action="store_false")

    t = sub.add_parser("trajectory", help="mean-field occupancy trajectory")
    common(t)
    t.add_argument("--T", type=int, required=True)
    t.add_argument("--mu0", type=_floats)

    s = sub.add_parser("simulate", help="mean occupancy over simulated runs")
    common(s)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--R", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    mode = ns.mode if ns.command == "check" else ns.command
    kwargs = dict(mode=mode, spec_path=ns.spec, N=ns.N, output=ns.output)
    if ns.command == "check":
        kwargs.update(formulas=ns.formula, formula_file=ns.formula_file, t0=ns.t0, sweep=ns.sweep,
                      safety_epsilon=ns.safety_epsilon, strict_safety=ns.strict_safety,
                      mu0=ns.mu0, memoize=ns.memoize)
    elif ns.command == "trajectory":
        kwargs.update(T=ns.T, mu0=ns.mu0)
    else:
        kwargs.update(T=ns.T, R=ns.R, seed=ns.seed)
    return RunConfig(**kwargs)


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
