"""Experiment runner: every verification as a reproducible subcommand.

Config is a flat plain-text file of `key = value` lines (`#` comments);
command-line flags override file keys. Every output starts with a comment
block echoing the full configuration, so a CSV is self-describing. Exit
codes: 0 success, 2 validation error, 3 solver warning or degenerate field.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path

import numpy as np

from . import io as fio
from .energy import SmoothingSchedule, total_energy
from .mesh import Grid, GridFunction, ProblemParams
from .monotonicity import (
    DegenerateFieldError,
    almgren_frequency,
    default_radii,
    scaled_dirichlet,
    weiss_energy,
)
from .blowup import extract_free_boundaries, homogeneity_exponent, nondegeneracy_fit
from .solver import BoundaryData, SolverError, default_schedule, minimize, solve_aharmonic
from .spherical import ArcDomain, solve_spectrum
from .symmetrize import barrier_energy, steiner_symmetrize


class CliError(Exception):
    """Configuration or input problem; maps to exit code 2."""


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

_CONFIG_KEYS = {
    "a": float,
    "lambda": float,
    "lambda_plus": float,
    "lambda_minus": float,
    "grid_n": int,
    "bc": str,
    "eps_start": float,
    "eps_factor": float,
    "cg_tol": float,
    "descent_tol": float,
    "radii": str,
    "seed": int,
    "out": str,
    "tau": float,
}


@dataclass
class ExperimentConfig:
    a: float = 0.0
    lambda_plus: float = 1.0
    lambda_minus: float = 1.0
    grid_n: int = 129
    bc: str = "linear"
    eps_start: float = 0.5
    eps_factor: float = 0.5
    cg_tol: float = 1e-10
    descent_tol: float = 1e-8
    radii: str = ""
    seed: int = 0
    out: str = ""
    tau: float = -1.0

    def validate(self):
        if not -1.0 < self.a < 1.0:
            raise CliError(f"key 'a': {self.a} outside (-1, 1)")
        if abs(self.a) > 0.9:
            raise CliError(f"key 'a': |a|={abs(self.a)} > 0.9 is refused here (conditioning); use the library directly")
        if self.lambda_plus < 0 or self.lambda_minus < 0:
            raise CliError("keys 'lambda_plus'/'lambda_minus' must be nonnegative")
        if self.grid_n < 5 or self.grid_n % 2 == 0:
            raise CliError(f"key 'grid_n': {self.grid_n} must be odd and >= 5")
        if not 0 < self.eps_factor < 1:
            raise CliError(f"key 'eps_factor': {self.eps_factor} outside (0, 1)")
        if self.eps_start <= 0:
            raise CliError(f"key 'eps_start': {self.eps_start} must be positive")
        return self

    def params(self) -> ProblemParams:
        return ProblemParams(self.a, self.lambda_plus, self.lambda_minus)

    def grid(self) -> Grid:
        return Grid.square(self.grid_n)

    def schedule(self, grid: Grid) -> SmoothingSchedule:
        return SmoothingSchedule(
            eps_start=max(self.eps_start, grid.h), eps_end=grid.h, factor=self.eps_factor
        )

    def boundary(self) -> BoundaryData:
        spec = self.bc
        if spec == "linear":
            return BoundaryData.linear_x1()
        if spec.startswith("const:"):
            try:
                return BoundaryData.constant(float(spec[6:]))
            except ValueError as exc:
                raise CliError(f"key 'bc': bad constant in {spec!r}") from exc
        if spec.startswith("profile:"):
            try:
                return BoundaryData.homogeneous_profile(float(spec[8:]))
            except ValueError as exc:
                raise CliError(f"key 'bc': bad profile degree in {spec!r}") from exc
        if spec.startswith("file:"):
            path = Path(spec[5:])
            if not path.exists():
                raise CliError(f"key 'bc': field file {path} not found")
            u, _ = fio.load_gridfunction(path)
            return BoundaryData.from_gridfunction(u)
        raise CliError(f"key 'bc': unknown preset {spec!r}")

    def radii_array(self, grid: Grid) -> np.ndarray:
        if not self.radii:
            return default_radii(grid)
        try:
            lo, hi, num = self.radii.split(":")
            return np.geomspace(float(lo), float(hi), int(num))
        except ValueError as exc:
            raise CliError(f"key 'radii': expected rmin:rmax:count, got {self.radii!r}") from exc

    def out_dir(self) -> Path:
        root = self.out or os.environ.get("FBXLAB_OUT", ".")
        path = Path(root)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def comment_lines(self) -> list[str]:
        items = [(f.name, getattr(self, f.name)) for f in dc_fields(self)]
        return ["config " + " ".join(f"{k}={v}" for k, v in items)]


def parse_config_file(path) -> dict:
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise CliError(f"{path}:{lineno}: unknown config key {key!r}")
            raw[key] = value
    return raw


def build_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    raw = parse_config_file(args.config) if getattr(args, "config", None) else {}
    if "lambda" in raw:
        raw.setdefault("lambda_plus", raw["lambda"])
        raw.setdefault("lambda_minus", raw["lambda"])
        del raw["lambda"]
    for key, value in raw.items():
        try:
            setattr(cfg, key, _CONFIG_KEYS[key](value))
        except ValueError as exc:
            raise CliError(f"key {key!r}: cannot parse {value!r}") from exc
    for key in _CONFIG_KEYS:
        if key == "lambda":
            val = getattr(args, "lam", None)
            if val is not None:
                cfg.lambda_plus = cfg.lambda_minus = val
            continue
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    return cfg.validate()


def _add_common(sub):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--a", type=float, dest="a")
    sub.add_argument("--lambda", type=float, dest="lam", help="sets both phase penalties")
    sub.add_argument("--lambda-plus", type=float, dest="lambda_plus")
    sub.add_argument("--lambda-minus", type=float, dest="lambda_minus")
    sub.add_argument("--grid", type=int, dest="grid_n")
    sub.add_argument("--bc", dest="bc")
    sub.add_argument("--eps-start", type=float, dest="eps_start")
    sub.add_argument("--eps-factor", type=float, dest="eps_factor")
    sub.add_argument("--cg-tol", type=float, dest="cg_tol")
    sub.add_argument("--descent-tol", type=float, dest="descent_tol")
    sub.add_argument("--radii", dest="radii")
    sub.add_argument("--seed", type=int, dest="seed")
    sub.add_argument("--out", dest="out")
    sub.add_argument("--tau", type=float, dest="tau")


def cmd_solve(args) -> int:
    cfg = build_config(args)
    out = cfg.out_dir()
    grid = cfg.grid()
    result = minimize(cfg.params(), cfg.boundary(), grid, cfg.schedule(grid), cfg.descent_tol)
    fio.save_gridfunction(out / "field.txt", result.u, cfg.a)
    fio.write_breakdown_csv(out / "energy.csv", result.energy, cfg.comment_lines())
    print(f"wrote {out / 'field.txt'} and {out / 'energy.csv'}; J = {result.energy.total:.6g}")
    return EXIT_SOLVER if result.warning else EXIT_OK


def cmd_aharmonic(args) -> int:
    cfg = build_config(args)
    out = cfg.out_dir()
    u = solve_aharmonic(cfg.grid(), cfg.a, cfg.boundary(), cg_tol=cfg.cg_tol)
    fio.save_gridfunction(out / "field.txt", u, cfg.a)
    fio.write_breakdown_csv(out / "energy.csv", total_energy(u, cfg.params()), cfg.comment_lines())
    print(f"wrote {out / 'field.txt'} and {out / 'energy.csv'}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    cfg = build_config(args)
    out = cfg.out_dir()
    path = Path(args.field)
    if not path.exists():
        raise CliError(f"field file {path} not found")
    u, a_file = fio.load_gridfunction(path)
    cfg.a = a_file
    cfg.grid_n = u.grid.nx
    cfg.validate()
    p = cfg.params()
    grid = u.grid
    radii = cfg.radii_array(grid)
    x0 = (args.x0, 0.0)
    comments = cfg.comment_lines()
    curve = almgren_frequency(u, x0, radii, cfg.a)
    fio.write_curve_csv(out / "almgren.csv", curve, comments)
    fio.write_curve_csv(out / "weiss.csv", weiss_energy(u, x0, p, radii), comments)
    fio.write_curve_csv(out / "scaled.csv", scaled_dirichlet(u, x0, radii, cfg.a), comments)
    tau = None if cfg.tau < 0 else cfg.tau
    phases = extract_free_boundaries(u, p, tau)
    fio.write_phases_csv(out / "phases.csv", phases, comments)
    fit_radii = np.geomspace(max(8 * grid.h, radii[0]), radii[-1], 9)
    fio.write_fit_csv(out / "homogeneity.csv", homogeneity_exponent(u, x0, fit_radii), comments)
    if phases.gamma_plus.size:
        fit = nondegeneracy_fit(u, (phases.gamma_plus[0], 0.0), +1, fit_radii, p)
        fio.write_fit_csv(out / "nondegeneracy.csv", fit, comments)
    print(f"wrote diagnostics to {out}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = build_config(args)
    out = cfg.out_dir()
    domains = {"full": ArcDomain.full_circle(), "upper": ArcDomain.upper_semicircle(), "slit": ArcDomain.slit_circle()}
    if args.domain not in domains:
        raise CliError(f"unknown domain {args.domain!r}; pick from {sorted(domains)}")
    spec = solve_spectrum(domains[args.domain], cfg.a, k=args.k, m=args.m)
    fio.write_spectrum_csv(out / "spectrum.csv", spec, cfg.comment_lines())
    fio.write_eigenfunction(out / "eigenfunction0.csv", spec, 0)
    print(f"wrote {out / 'spectrum.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    out = cfg.out_dir()
    key, _, values = args.param.partition("=")
    if key not in ("lambda", "a", "grid_n") or not values:
        raise CliError(f"--param expects lambda=|a=|grid_n= followed by a comma list, got {args.param!r}")
    try:
        vals = [float(v) for v in values.split(",")]
    except ValueError as exc:
        raise CliError(f"--param values unparsable in {args.param!r}") from exc

    def run_one(v):
        import copy

        c = copy.deepcopy(cfg)
        if key == "lambda":
            c.lambda_plus = c.lambda_minus = v
        elif key == "a":
            c.a = v
        else:
            c.grid_n = int(v)
        try:
            c.validate()
            grid = c.grid()
            result = minimize(c.params(), c.boundary(), grid, c.schedule(grid), c.descent_tol)
            tau = None if c.tau < 0 else c.tau
            phases = extract_free_boundaries(result.u, c.params(), tau)
            status = "warning" if result.warning else "ok"
            return (v, result.energy.total, phases.separation, status)
        except Exception as exc:  # per-entry failures go to the status column
            return (v, np.nan, np.nan, f"error:{type(exc).__name__}")

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(run_one, vals))
    else:
        rows = [run_one(v) for v in vals]
    rows.sort(key=lambda r: vals.index(r[0]))
    with open(out / "sweep.csv", "w") as fh:
        for c in cfg.comment_lines():
            fh.write(f"# {c}\n")
        fh.write(f"# sweep {args.param}\n")
        fh.write(f"{key},total_energy,separation,status\n")
        for v, J, sep, status in rows:
            fh.write(f"{v:.17g},{J:.17g},{sep:.17g},{status}\n")
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_barrier(args) -> int:
    cfg = build_config(args)
    out = cfg.out_dir()
    try:
        eps_list = [float(e) for e in args.eps.split(",")]
    except ValueError as exc:
        raise CliError(f"--eps expects a comma list, got {args.eps!r}") from exc
    grid = cfg.grid()
    p = cfg.params()
    with open(out / "barrier.csv", "w") as fh:
        for c in cfg.comment_lines():
            fh.write(f"# {c}\n")
        fh.write("eps,energy\n")
        for e in eps_list:
            fh.write(f"{e:.17g},{barrier_energy(e, p, grid):.17g}\n")
    print(f"wrote {out / 'barrier.csv'}")
    return EXIT_OK


def cmd_symmetrize(args) -> int:
    cfg = build_config(args)
    out = cfg.out_dir()
    path = Path(args.field)
    if not path.exists():
        raise CliError(f"field file {path} not found")
    u, a_file = fio.load_gridfunction(path)
    res, report = steiner_symmetrize(u, args.M, a_file)
    fio.save_gridfunction(out / "symmetrized.txt", res, a_file)
    fio.write_report_csv(out / "symmetrize.csv", report, cfg.comment_lines())
    print(f"wrote {out / 'symmetrize.csv'}; energy {report.energy_before:.6g} -> {report.energy_after:.6g}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .fields import linear_x1
    from .mesh import weight_cell_integral
    from .solver import lattice_combine

    checks = []
    grid = Grid.square(65)

    val = weight_cell_integral(0.0, 1.0, -0.5)
    checks.append(("weight integral closed form", abs(val - 2.0) < 1e-14))

    from .mesh import assemble_stiffness

    K = assemble_stiffness(grid, 0.5)
    checks.append(("stiffness symmetric", abs(K - K.T).max() < 1e-13))
    x, _ = grid.node_coords()
    r = K @ x
    interior = ~grid.boundary_mask()
    checks.append(("linear field residual", np.abs(r[interior]).max() < 1e-12))

    u = linear_x1(grid).to_grid()
    p = ProblemParams(0.0, 1.0, 1.0)
    w = GridFunction(grid, u.values + 0.5)
    _, _, defect = lattice_combine(u, w, p)
    checks.append(("lattice identity", defect < 1e-10))

    spec = solve_spectrum(ArcDomain.full_circle(), 0.0, k=5, m=512)
    deg = spec.degrees
    checks.append(("circle spectrum degrees", np.allclose(deg, [0, 1, 1, 2, 2], atol=5e-3)))

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed
    return EXIT_OK if ok else EXIT_SOLVER


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fbxlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (
        ("solve", cmd_solve),
        ("aharmonic", cmd_aharmonic),
        ("diagnose", cmd_diagnose),
        ("spectrum", cmd_spectrum),
        ("sweep", cmd_sweep),
        ("barrier", cmd_barrier),
        ("symmetrize", cmd_symmetrize),
        ("selftest", cmd_selftest),
    ):
        sp_ = sub.add_parser(name)
        _add_common(sp_)
        sp_.set_defaults(handler=fn)
        if name == "diagnose":
            sp_.add_argument("--field", required=True)
            sp_.add_argument("--x0", type=float, default=0.0)
        elif name == "spectrum":
            sp_.add_argument("--domain", default="full")
            sp_.add_argument("--k", type=int, default=5)
            sp_.add_argument("--m", type=int, default=1024)
        elif name == "sweep":
            sp_.add_argument("--param", required=True)
            sp_.add_argument("--jobs", type=int, default=1)
        elif name == "barrier":
            sp_.add_argument("--eps", required=True)
        elif name == "symmetrize":
            sp_.add_argument("--field", required=True)
            sp_.add_argument("--M", type=float, required=True)

    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, DegenerateFieldError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
