"""Batch driver: single solves, N-sweeps and eps-sweeps written as CSV.

Example::

    shellfem --mode n_sweep --mesh shishkin1 --n 4..1024 --eps 1e-2 --out n_sweep.csv
    shellfem --mode eps_sweep --n 16 --eps e^0..e^-10:10
"""

import argparse
import math
import os
import re
import sys
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import __version__
from .analysis import (
    analytic_clamped_solution,
    error_norms,
    estimate_orders,
    manufactured_bc,
    manufactured_solution,
    roundoff_report,
)
from .mesh import MeshKind, build_mesh
from .system import ProblemConfig, SingularSystemError, solve_bvp

COLUMNS = (
    "N", "eps", "tau", "dofs",
    "err_u_L2", "err_u_dd", "err_v_L2", "err_v_dd", "balanced", "energy_standard",
    "residual", "cond_est",
)
ERROR_COLUMNS = COLUMNS[4:10]
MODES = ("single", "n_sweep", "eps_sweep")
# orders are fitted only where the error exceeds this multiple of the round-off probe
ROUNDOFF_FACTOR = 100.0

EXIT_OK, EXIT_SPEC, EXIT_NUMERIC = 0, 2, 3


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class Problem:
    """Which load to solve for; every choice has an exact reference."""

    kind: str = "manufactured"
    poly: Tuple[float, ...] = ()
    exp_coeff: float = 0.0

    def exact(self, eps):
        if self.kind == "manufactured":
            return manufactured_solution(eps)
        return analytic_clamped_solution(eps, self.poly or (0.0,), self.exp_coeff)

    def bc(self, exact):
        if self.kind == "manufactured":
            return manufactured_bc(exact)
        return (0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class StudySpec:
    mode: str = "single"
    mesh_kind: str = "shishkin1"
    p: int = 3
    sigma: float = 4.0
    lam: float = 3.0
    eps_list: Tuple[float, ...] = (1e-2,)
    N_list: Tuple[int, ...] = (16,)
    problem: Problem = field(default_factory=Problem)
    output_path: Optional[str] = None
    plot_data: Optional[str] = None
    quad_extra: int = 0
    seed: int = 0

    def validate(self):
        if self.mode not in MODES:
            raise SpecError(f"unknown mode {self.mode!r}")
        MeshKind(self.mesh_kind)
        if self.p < 3:
            raise SpecError("degree must be >= 3")
        if self.sigma <= 0:
            raise SpecError("sigma must be positive")
        if self.lam < 3:
            raise SpecError("lambda must be >= 3")
        if not self.eps_list or not self.N_list:
            raise SpecError("eps and N lists must be non-empty")
        if any(not 0 < e <= 1 for e in self.eps_list):
            raise SpecError("every eps must lie in (0, 1]")
        div = {"uniform": 1, "shishkin1": 2, "shishkin2": 4}[self.mesh_kind]
        for n in self.N_list:
            if n < div or n % div:
                raise SpecError(f"mesh {self.mesh_kind} needs N divisible by {div}, got {n}")
        if self.mode == "single" and (len(self.N_list) != 1 or len(self.eps_list) != 1):
            raise SpecError("single mode takes exactly one N and one eps")
        if self.mode == "n_sweep" and len(self.eps_list) != 1:
            raise SpecError("n_sweep takes exactly one eps")
        if self.mode == "eps_sweep" and len(self.N_list) != 1:
            raise SpecError("eps_sweep takes exactly one N")
        if self.quad_extra < 0:
            raise SpecError("quad-extra must be non-negative")
        return self

    def cases(self):
        return [(n, e) for e in self.eps_list for n in self.N_list]


def parse_n_list(text):
    """``4,8,16`` or a dyadic range ``4..1024``."""
    m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo < 1 or hi < lo:
            raise SpecError(f"malformed N range {text!r}")
        out = []
        n = lo
        while n <= hi:
            out.append(n)
            n *= 2
        return tuple(out)
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError:
        raise SpecError(f"malformed N list {text!r}") from None


_EXP = r"e\^\s*([+-]?\d+(?:\.\d*)?)"


def parse_eps_list(text):
    """Comma list of floats, or ``e^a..e^b:k`` for k+1 log-spaced values."""
    m = re.fullmatch(rf"\s*{_EXP}\s*\.\.\s*{_EXP}\s*:\s*(\d+)\s*", text)
    if m:
        a, b, k = float(m.group(1)), float(m.group(2)), int(m.group(3))
        if k < 1:
            raise SpecError(f"eps range needs k >= 1, got {text!r}")
        step = (b - a) / k
        return tuple(math.exp(a + i * step) for i in range(k + 1))
    try:
        return tuple(float(s) for s in text.split(","))
    except ValueError:
        raise SpecError(f"malformed eps list {text!r}") from None


def parse_problem(text, poly, exp_coeff):
    if text == "manufactured":
        return Problem("manufactured")
    m = re.fullmatch(r"constant_load(?:\(([^)]*)\))?", text)
    if m:
        c = float(m.group(1)) if m.group(1) else 4.0
        return Problem("constant_load", (c,), 0.0)
    if text == "custom":
        coeffs = tuple(float(s) for s in poly.split(",")) if poly else (0.0,)
        if len(coeffs) > 4:
            raise SpecError("custom load polynomial must have degree <= 3")
        return Problem("custom", coeffs, exp_coeff)
    raise SpecError(f"unknown problem {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_SPEC, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="shellfem", description=__doc__.splitlines()[0])
    parser.add_argument("--mode", choices=MODES, default="single")
    parser.add_argument("--mesh", choices=[k.value for k in MeshKind], default="shishkin1")
    parser.add_argument("--p", type=int, default=3, help="polynomial degree (>= 3)")
    parser.add_argument("--sigma", type=float, default=4.0)
    parser.add_argument("--lambda", dest="lam", type=float, default=3.0)
    parser.add_argument("--eps", default="1e-2", help="comma list or e^a..e^b:k")
    parser.add_argument("--n", default="16", help="comma list or dyadic range a..b")
    parser.add_argument(
        "--problem", default="manufactured",
        help="manufactured | constant_load(c) | custom",
    )
    parser.add_argument("--load-poly", default="", help="custom load: ascending cubic coefficients")
    parser.add_argument("--load-exp", type=float, default=0.0, help="custom load: coefficient of e^x")
    parser.add_argument("--out", default=None, help="CSV path (default stdout)")
    parser.add_argument("--plot-data", default=None, metavar="DIR")
    parser.add_argument("--quad-extra", type=int, default=0, help="extra Gauss points for the load")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = StudySpec(
            mode=args.mode,
            mesh_kind=args.mesh,
            p=args.p,
            sigma=args.sigma,
            lam=args.lam,
            eps_list=parse_eps_list(args.eps),
            N_list=parse_n_list(args.n),
            problem=parse_problem(args.problem, args.load_poly, args.load_exp),
            output_path=args.out,
            plot_data=args.plot_data,
            quad_extra=args.quad_extra,
            seed=args.seed,
        ).validate()
    except (SpecError, ValueError) as exc:
        parser.error(str(exc))
    return spec


def fmt(value):
    """Shortest decimal that round-trips to the same binary64."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def header_lines(spec):
    return [
        f"# shellfem v1, mesh={spec.mesh_kind}, p={spec.p}, "
        f"sigma={fmt(spec.sigma)}, lambda={fmt(spec.lam)}",
        ",".join(COLUMNS),
    ]


def run_case(spec, N, eps):
    """Solve one (N, eps) case; returns (row dict, round-off report)."""
    mesh = build_mesh(spec.mesh_kind, N, spec.sigma, eps)
    exact = spec.problem.exact(eps)
    config = ProblemConfig(
        eps=eps,
        mesh=mesh,
        load=exact.f,
        lam=spec.lam,
        degree=spec.p,
        bc=spec.problem.bc(exact),
        load_quad=spec.p + 6 + spec.quad_extra,
    )
    sol = solve_bvp(config)
    report = error_norms(sol, exact)
    row = {"N": N, "eps": eps, "tau": mesh.tau, "dofs": sol.n_dofs}
    row.update(report.as_dict())
    row.update(residual=sol.residual, cond_est=sol.cond_est)
    if not all(math.isfinite(row[c]) for c in ERROR_COLUMNS):
        raise FloatingPointError(f"non-finite error norms for N={N}, eps={eps}")
    return row, roundoff_report(sol)


def fit_orders(rows, floors, col, model="NlogN"):
    """Orders of one error column, skipping points within ROUNDOFF_FACTOR of
    the round-off probe."""
    kept = [
        (r["N"], r[col]) for r, f in zip(rows, floors) if r[col] >= ROUNDOFF_FACTOR * f[col]
    ]
    return estimate_orders(kept, model=model)


def order_lines(rows, floors):
    """Order-summary comment block for an N-sweep."""
    lines = []
    for model in ("NlogN", "N"):
        lines.append(f"# orders(model={model}):")
        for col in ERROR_COLUMNS:
            try:
                est = fit_orders(rows, floors, col, model)
            except ValueError as exc:
                lines.append(f"# {col}: n/a ({exc})")
                continue
            steps = " ".join(f"{s:.4f}" for s in est.steps)
            lines.append(
                f"# {col}: steps=[{steps}] lsq={est.least_squares:.4f} N={est.N[0]}..{est.N[-1]}"
            )
    return lines


def write_plot_data(spec, rows, directory):
    os.makedirs(directory, exist_ok=True)
    for col in ERROR_COLUMNS:
        path = os.path.join(directory, f"{col}.dat")
        with open(path, "w") as fh:
            if spec.mode == "eps_sweep":
                fh.write("# inv_eps " + col + "  (semi-log: log abscissa)\n")
                for r in rows:
                    fh.write(f"{fmt(1.0 / r['eps'])} {fmt(r[col])}\n")
            else:
                fh.write("# N " + col + "  (log-log)\n")
                for r in rows:
                    fh.write(f"{fmt(r['N'])} {fmt(r[col])}\n")


def run_study(spec, stream=None):
    """Run every case of ``spec`` and write the CSV; returns the exit code."""
    try:
        spec.validate()
    except (SpecError, ValueError) as exc:
        print(f"shellfem: error: {exc}", file=sys.stderr)
        return EXIT_SPEC

    own = stream is None and spec.output_path not in (None, "-")
    out = open(spec.output_path, "w", newline="") if own else (stream or sys.stdout)
    rows, floors = [], []
    code = EXIT_OK
    try:
        for line in header_lines(spec):
            out.write(line + "\n")
        for N, eps in spec.cases():
            try:
                row, floor = run_case(spec, N, eps)
            except (SingularSystemError, np.linalg.LinAlgError, FloatingPointError) as exc:
                out.write(f"# FAILED N={N}, eps={fmt(eps)}: {exc}\n")
                out.flush()
                print(f"shellfem: numerical failure: {exc}", file=sys.stderr)
                code = EXIT_NUMERIC
                break
            rows.append(row)
            floors.append(floor.as_dict())
            out.write(",".join(fmt(row[c]) for c in COLUMNS) + "\n")
        if code == EXIT_OK and spec.mode == "n_sweep":
            for line in order_lines(rows, floors):
                out.write(line + "\n")
        out.flush()
    finally:
        if own:
            out.close()
    if spec.plot_data and rows:
        write_plot_data(spec, rows, spec.plot_data)
    return code


def read_csv(text):
    """Parse a CSV produced by ``run_study`` into a list of row dicts."""
    rows = []
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        return rows
    cols = lines[0].split(",")
    for ln in lines[1:]:
        vals = ln.split(",")
        rows.append({c: (int(v) if c in ("N", "dofs") else float(v)) for c, v in zip(cols, vals)})
    return rows


def main(argv=None):
    spec = parse_args(argv)
    return run_study(spec)


if __name__ == "__main__":
    sys.exit(main())
