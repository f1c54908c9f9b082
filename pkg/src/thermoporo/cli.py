"""Command-line front end: convergence tables, timing benchmark, field runs, checks.

Configuration is a flat key=value text file; named presets bake in every
published table, and positional KEY=VALUE arguments override both.  Exit
codes: 0 success, 1 usage/config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .analysis import benchmark, convergence_study, error_report
from .checks import run_all
from .discretization import build_spaces
from .mesh import build_uniform_rect
from .model import (
    InitialData,
    ModelParams,
    SPD2,
    SourceSet,
    example1_exact,
    example2_scenario,
    initial_data_from_exact,
    initial_state,
    make_traction,
    manufacture_sources,
)
from .steppers import ALGORITHMS, Stepper
from .vtkio import vertex_values, write_vtk


class ConfigError(ValueError):
    """Invalid configuration or usage; maps to exit code 1."""


# --------------------------------------------------------------------- config

KNOWN_KEYS = {
    "scenario",
    "algorithm",
    "k",
    "l",
    "n",
    "dt",
    "tau",
    "schedule",
    "nu",
    "E",
    "alpha",
    "beta",
    "a0",
    "b0",
    "c0",
    "K",
    "Theta",
    "workers",
    "strict",
    "reps",
    "dump_coeffs",
}

EXAMPLE1_PARAM_DEFAULTS = {
    "E": "1",
    "nu": "0.3",
    "alpha": "0.1",
    "beta": "0.1",
    "a0": "0.2",
    "b0": "0.1",
    "c0": "0.2",
    "K": "1",
    "Theta": "1",
}

EXAMPLE2_PARAM_DEFAULTS = {
    "E": "24",
    "nu": "0.499",
    "alpha": "0.25",
    "beta": "0.001",
    "a0": "0.1",
    "b0": "3e-5",
    "c0": "1e-3",
    "K": "1e-6",
    "Theta": "2.6",
}

# Published convergence tables as presets: (description, config overrides).
TABLE_PRESETS = {
    "T1": (
        "temporal refinement at fixed mesh, k=3, l=2; runs h=1/32 instead of "
        "the published h=1/100 to stay desk-scale (the claim under test is "
        "the temporal rate, not the absolute error)",
        {"k": "3", "l": "2", "schedule": "32:1/4,32:1/8,32:1/16,32:1/32"},
    ),
    "T2": (
        "simultaneous space-time refinement, k=2, l=1",
        {"k": "2", "l": "1", "schedule": "4:1/4,8:1/16,16:1/64,32:1/256"},
    ),
    "T3": (
        "near-incompressible variant (nu=0.499) of the k=2 refinement",
        {
            "k": "2",
            "l": "1",
            "nu": "0.499",
            "schedule": "4:1/4,8:1/16,16:1/64,32:1/256",
        },
    ),
    "T4": (
        "vanishing-diffusion variant (K=Theta=1e-9) of the k=2 refinement",
        {
            "k": "2",
            "l": "1",
            "K": "1e-9",
            "Theta": "1e-9",
            "schedule": "4:1/4,8:1/16,16:1/64,32:1/256",
        },
    ),
    "T5": (
        "degenerate-storage variant (a0=b0=c0=0, permissive mode) of the "
        "k=2 refinement",
        {
            "k": "2",
            "l": "1",
            "a0": "0",
            "b0": "0",
            "c0": "0",
            "strict": "false",
            "schedule": "4:1/4,8:1/16,16:1/64,32:1/256",
        },
    ),
    "T6": (
        "higher-order refinement, k=3, l=2, through h=1/16; the h=1/32, "
        "dt=1/2048 row is omitted by default (long-running) and can be "
        "restored via the schedule key",
        {"k": "3", "l": "2", "schedule": "4:1/4,8:1/32,16:1/256"},
    ),
}

BENCH_DEFAULTS = {
    "n": "40",
    "dt": "1/16",
    "k": "2",
    "l": "1",
    "tau": "1",
    "reps": "3",
    "workers": "2",
}

RUN_DEFAULTS = {
    "example1": {"n": "16", "dt": "1/16", "tau": "1", "k": "2", "l": "1",
                 "algorithm": "coupled", "workers": "1"},
    "example2": {"n": "50", "dt": "0.01", "tau": "1", "k": "2", "l": "1",
                 "algorithm": "alg3", "workers": "2"},
    "custom": {"n": "16", "dt": "1/16", "tau": "1", "k": "2", "l": "1",
               "algorithm": "coupled", "workers": "1"},
}


def _number(token: str) -> float:
    """Float parser accepting fractions like 1/256."""
    token = token.strip()
    try:
        if "/" in token:
            num, den = token.split("/", 1)
            return float(num) / float(den)
        return float(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse number {token!r}") from exc


def load_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def parse_overrides(pairs: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form KEY=VALUE")
        key, val = pair.split("=", 1)
        out[key.strip()] = val.strip()
    return out


class Config:
    """Merged key=value configuration with typed, defaulted accessors."""

    def __init__(self, *layers: dict[str, str]):
        self.data: dict[str, str] = {}
        for layer in layers:
            self.data.update(layer)
        unknown = sorted(set(self.data) - KNOWN_KEYS)
        if unknown:
            raise ConfigError(
                f"unknown config keys: {', '.join(unknown)} "
                f"(known: {', '.join(sorted(KNOWN_KEYS))})"
            )

    def get(self, key: str, default: str | None = None) -> str:
        val = self.data.get(key, default)
        if val is None:
            raise ConfigError(f"missing required config key {key!r}")
        return val

    def number(self, key: str, default: str | None = None) -> float:
        return _number(self.get(key, default))

    def integer(self, key: str, default: str | None = None) -> int:
        val = self.get(key, default)
        try:
            return int(val)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r} needs an integer, got {val!r}") from exc

    def flag(self, key: str, default: str | None = None) -> bool:
        val = self.get(key, default).lower()
        if val in ("true", "yes", "1", "on"):
            return True
        if val in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"config key {key!r} needs a boolean, got {val!r}")


def resolve_config(args, *presets: dict[str, str]) -> Config:
    layers = list(presets)
    if getattr(args, "config", None):
        layers.append(load_config_file(args.config))
    layers.append(parse_overrides(getattr(args, "overrides", []) or []))
    flags: dict[str, str] = {}
    if getattr(args, "workers", None) is not None:
        flags["workers"] = str(args.workers)
    if getattr(args, "strict", False):
        flags["strict"] = "true"
    layers.append(flags)
    return Config(*layers)


def make_params(cfg: Config, defaults: dict[str, str]) -> ModelParams:
    def num(key: str) -> float:
        return cfg.number(key, defaults[key])

    return ModelParams.from_young_poisson(
        E=num("E"),
        nu=num("nu"),
        alpha=num("alpha"),
        beta=num("beta"),
        a0=num("a0"),
        b0=num("b0"),
        c0=num("c0"),
        K=SPD2.isotropic(num("K")),
        Theta=SPD2.isotropic(num("Theta")),
    )


def parse_schedule(text: str) -> list[tuple[int, float]]:
    """Parse 'n:dt,n:dt,...' with dt accepting fractions."""
    schedule = []
    for item in text.split(","):
        item = item.strip()
        if ":" not in item:
            raise ConfigError(f"schedule entry {item!r} is not of the form n:dt")
        n_str, dt_str = item.split(":", 1)
        try:
            n = int(n_str)
        except ValueError as exc:
            raise ConfigError(f"schedule mesh count {n_str!r} is not an integer") from exc
        dt = _number(dt_str)
        if n < 1 or dt <= 0.0:
            raise ConfigError(f"schedule entry {item!r} needs n >= 1 and dt > 0")
        schedule.append((n, dt))
    if not schedule:
        raise ConfigError("empty refinement schedule")
    return schedule


# ------------------------------------------------------------------- csv out

ERR_FMT = "{:.5e}"
FULL_FMT = "{:.17g}"


def _write_csv(path: str, header: list[str], rows: list[list[str]]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_convergence_csv(path: str, blocks) -> None:
    """One block of rows per algorithm; first-row rates are left empty."""
    header = [
        "algorithm",
        "h",
        "dt",
        "err_u_H1",
        "rate_u",
        "err_xi_L2",
        "rate_xi",
        "err_p_H1",
        "rate_p",
        "err_T_H1",
        "rate_T",
        "err_u_H1_full",
        "err_xi_L2_full",
        "err_p_H1_full",
        "err_T_H1_full",
    ]
    rows = []
    for block in blocks:
        for i, row in enumerate(block):
            errs = row.errors.as_tuple()
            cells = [row.algorithm, FULL_FMT.format(row.h), FULL_FMT.format(row.dt)]
            for err, rate in zip(errs, row.rates):
                cells.append(ERR_FMT.format(err))
                cells.append("" if i == 0 else f"{rate:.2f}")
            cells.extend(FULL_FMT.format(err) for err in errs)
            rows.append(cells)
    _write_csv(path, header, rows)


def write_bench_csv(path: str, reports) -> None:
    header = [
        "algorithm",
        "h",
        "dt",
        "err_u_H1",
        "err_xi_L2",
        "err_p_H1",
        "err_T_H1",
        "seconds",
        "err_u_H1_full",
        "err_xi_L2_full",
        "err_p_H1_full",
        "err_T_H1_full",
    ]
    rows = []
    for rep, (h, dt) in reports:
        errs = rep.errors.as_tuple()
        rows.append(
            [rep.algorithm, FULL_FMT.format(h), FULL_FMT.format(dt)]
            + [ERR_FMT.format(e) for e in errs]
            + [f"{rep.seconds:.3f}"]
            + [FULL_FMT.format(e) for e in errs]
        )
    _write_csv(path, header, rows)


# ------------------------------------------------------------------ commands


def cmd_convergence(args) -> int:
    if args.table not in TABLE_PRESETS:
        raise ConfigError(
            f"unknown table {args.table!r}; available: {', '.join(TABLE_PRESETS)}"
        )
    description, preset = TABLE_PRESETS[args.table]
    cfg = resolve_config(args, preset)
    scenario = cfg.get("scenario", "example1")
    if scenario != "example1":
        raise ConfigError("convergence tables are defined for the example1 scenario")
    params = make_params(cfg, EXAMPLE1_PARAM_DEFAULTS)
    exact = example1_exact(params)
    schedule = parse_schedule(cfg.get("schedule"))
    k = cfg.integer("k")
    l = cfg.integer("l", str(k - 1))
    tau = cfg.number("tau", "1")
    workers = cfg.integer("workers", "1")
    strict = cfg.flag("strict", "true")
    algorithms = [args.algo] if args.algo else ["alg1", "alg2", "alg3"]

    print(f"{args.table}: {description}")
    blocks = []
    for algorithm in algorithms:
        rows = convergence_study(
            schedule, algorithm, k, params, exact, l=l, tau=tau,
            workers=workers, strict=strict,
        )
        blocks.append(rows)
        for i, row in enumerate(rows):
            rates = "" if i == 0 else "  rates " + " ".join(f"{r:5.2f}" for r in row.rates)
            errs = " ".join(ERR_FMT.format(e) for e in row.errors.as_tuple())
            print(f"{algorithm}  h=1/{row.n:<3d} dt={row.dt:<12.6g} {errs}{rates}")
    out = args.out or f"{args.table}.csv"
    write_convergence_csv(out, blocks)
    print(f"wrote {out}")
    return 0


def cmd_bench(args) -> int:
    cfg = resolve_config(args, BENCH_DEFAULTS)
    params = make_params(cfg, EXAMPLE1_PARAM_DEFAULTS)
    exact = example1_exact(params)
    n = cfg.integer("n")
    dt = cfg.number("dt")
    k = cfg.integer("k")
    l = cfg.integer("l", str(k - 1))
    tau = cfg.number("tau", "1")
    reps = cfg.integer("reps")
    if reps < 1:
        raise ConfigError("bench needs reps >= 1")
    workers = cfg.integer("workers")
    reports = benchmark(
        n, dt, k, params, exact, l=l, tau=tau, reps=reps, workers=workers
    )
    baseline = next(r.seconds for r in reports if r.algorithm == "coupled")
    for rep in reports:
        print(
            f"{rep.algorithm:8s} {rep.seconds:8.2f} s  "
            f"({rep.seconds / baseline:.2f}x coupled)"
        )
    out = args.out or "bench.csv"
    write_bench_csv(out, [(rep, (1.0 / n, dt)) for rep in reports])
    print(f"wrote {out}")
    return 0


def _zero_sources() -> SourceSet:
    def scalar(x, y, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    def vector(x, y, t):
        z = np.zeros_like(np.asarray(x, dtype=float))
        return np.stack([z, z])

    return SourceSet(f=vector, g=scalar, Hs=scalar)


def _zero_init() -> InitialData:
    def scalar(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    return InitialData(
        u0=lambda x, y: np.stack([scalar(x, y), scalar(x, y)]),
        p0=scalar,
        T0=scalar,
        xi0=scalar,
    )


def build_problem(cfg: Config):
    """Assemble the pieces of a field run for the configured scenario."""
    scenario = cfg.get("scenario", "example2")
    if scenario not in RUN_DEFAULTS:
        raise ConfigError(
            f"unknown scenario {scenario!r}; available: {', '.join(RUN_DEFAULTS)}"
        )
    defaults = RUN_DEFAULTS[scenario]
    n = cfg.integer("n", defaults["n"])
    dt = cfg.number("dt", defaults["dt"])
    tau = cfg.number("tau", defaults["tau"])
    k = cfg.integer("k", defaults["k"])
    l = cfg.integer("l", str(k - 1))
    algorithm = cfg.get("algorithm", defaults["algorithm"])
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; available: {', '.join(ALGORITHMS)}")
    workers = cfg.integer("workers", defaults["workers"])
    strict = cfg.flag("strict", "true")

    exact = None
    traction = None
    if scenario == "example1":
        params = make_params(cfg, EXAMPLE1_PARAM_DEFAULTS)
        exact = example1_exact(params)
        sources = manufacture_sources(exact, params)
        traction = make_traction(exact, params)
        init = initial_data_from_exact(exact)
        mesh = build_uniform_rect(n, n)
    elif scenario == "example2":
        base = example2_scenario()
        params = make_params(cfg, EXAMPLE2_PARAM_DEFAULTS)
        sources = base.sources
        T0 = 100.0

        def temp0(x, y):
            return np.full_like(np.asarray(x, dtype=float), T0)

        init = InitialData(
            u0=base.init.u0,
            p0=base.init.p0,
            T0=temp0,
            xi0=lambda x, y: params.beta * temp0(x, y),
        )
        mesh = build_uniform_rect(
            n, n, base.corner_lo, base.corner_hi, tag_rule=base.tag_rule
        )
    else:  # custom: homogeneous problem with configured coefficients
        params = make_params(cfg, EXAMPLE1_PARAM_DEFAULTS)
        sources = _zero_sources()
        init = _zero_init()
        mesh = build_uniform_rect(n, n)

    spaces = build_spaces(mesh, k, l)
    stepper = Stepper(
        mesh, spaces, params, sources, dt, traction=traction, strict=strict
    )
    state0 = initial_state(mesh, spaces, init, params)
    return {
        "scenario": scenario,
        "mesh": mesh,
        "spaces": spaces,
        "stepper": stepper,
        "state0": state0,
        "exact": exact,
        "algorithm": algorithm,
        "workers": workers,
        "n": n,
        "dt": dt,
        "tau": tau,
    }


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    if args.algo:
        cfg.data["algorithm"] = args.algo
    problem = build_problem(cfg)
    outdir = Path(args.out or "out")
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {outdir}: {exc}") from exc

    stepper = problem["stepper"]
    result = stepper.run(
        problem["algorithm"],
        problem["state0"],
        problem["tau"],
        workers=problem["workers"],
    )
    state = result.state
    for field in ("u", "xi", "p", "T"):
        if not np.isfinite(getattr(state, field)).all():
            raise RuntimeError(f"field {field} contains non-finite values at tau")

    mesh, spaces = problem["mesh"], problem["spaces"]
    fields = {
        "u": vertex_values(spaces.V, state.u),
        "xi": vertex_values(spaces.Q, state.xi),
        "p": vertex_values(spaces.W, state.p),
        "T": vertex_values(spaces.W, state.T),
    }
    for name, values in fields.items():
        write_vtk(outdir / f"{name}.vtk", mesh, name, values)

    lines = [
        f"scenario: {problem['scenario']}",
        f"algorithm: {problem['algorithm']} (workers={problem['workers']})",
        f"mesh: {problem['n']} x {problem['n']} cells, h = {mesh.h:.6g}",
        f"degrees: k={spaces.k}, l={spaces.l}",
        f"dofs: u={spaces.V.ndof}, xi={spaces.Q.ndof}, p={spaces.W.ndof}, "
        f"T={spaces.W.ndof}",
        f"steps: {result.steps}, dt = {problem['dt']:.6g}, tau = {problem['tau']:.6g}",
        "timings (s): "
        + ", ".join(f"{k}={v:.3f}" for k, v in result.timings.items()),
    ]
    ux, uy = fields["u"][:, 0], fields["u"][:, 1]
    lines.append(f"u extrema: ux [{ux.min():.6g}, {ux.max():.6g}], "
                 f"uy [{uy.min():.6g}, {uy.max():.6g}]")
    for name in ("xi", "p", "T"):
        vals = fields[name]
        lines.append(f"{name} extrema: [{vals.min():.6g}, {vals.max():.6g}]")
    if stepper.warnings:
        lines.append("assumption warnings: " + "; ".join(stepper.warnings))
    if problem["exact"] is not None:
        errs = error_report(state, problem["exact"], mesh, spaces)
        lines.append(
            "errors vs manufactured solution: "
            f"u_H1={ERR_FMT.format(errs.u_H1)}, xi_L2={ERR_FMT.format(errs.xi_L2)}, "
            f"p_H1={ERR_FMT.format(errs.p_H1)}, T_H1={ERR_FMT.format(errs.T_H1)}"
        )
    summary = "\n".join(lines) + "\n"
    (outdir / "summary.txt").write_text(summary)
    if cfg.flag("dump_coeffs", "false"):
        np.savez(
            outdir / "coefficients.npz",
            t=state.t, u=state.u, xi=state.xi, p=state.p, T=state.T,
        )
    sys.stdout.write(summary)
    print(f"wrote {outdir}/{{u,xi,p,T}}.vtk and {outdir}/summary.txt")
    return 0


def cmd_validate(args) -> int:
    results = run_all()
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.status:4s} {r.name:{width}s}  {r.detail}")
    fails = sum(r.status == "FAIL" for r in results)
    warns = sum(r.status == "WARN" for r in results)
    print(f"{len(results) - fails - warns} passed, {warns} warnings, {fails} failures")
    return 2 if fails else 0


# ----------------------------------------------------------------- interface


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are exit code 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="thermoporo",
        description=(
            "Four-field thermo-poroelasticity solver: monolithic and "
            "semi-decoupled backward-Euler stepping"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, algo=True):
        p.add_argument("--config", help="flat key=value configuration file")
        if algo:
            p.add_argument("--algo", choices=ALGORITHMS, help="restrict to one algorithm")
        p.add_argument("--out", help="output path (CSV file or directory)")
        p.add_argument("--workers", type=int, help="worker count for the parallel algorithm")
        p.add_argument(
            "--strict",
            action="store_true",
            help="force strict assumption checking regardless of config",
        )
        p.add_argument(
            "overrides",
            nargs="*",
            metavar="KEY=VALUE",
            help="config overrides applied after the config file",
        )

    p_conv = sub.add_parser("convergence", help="reproduce a published convergence table")
    p_conv.add_argument(
        "--table",
        required=True,
        help="preset name: " + ", ".join(TABLE_PRESETS),
    )
    common(p_conv)
    p_conv.set_defaults(func=cmd_convergence)

    p_bench = sub.add_parser("bench", help="time all four algorithms on one configuration")
    common(p_bench, algo=False)
    p_bench.set_defaults(func=cmd_bench)

    p_run = sub.add_parser("run", help="run one scenario and write field snapshots")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="run the self-verification battery")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:  # ConfigError, AssumptionError, bad preconditions
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:  # LinearSolveError, failed steps, non-finite fields
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
