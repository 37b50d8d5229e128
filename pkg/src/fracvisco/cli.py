"""Experiment harness: convergence ladders, benchmarks, and SOE tables.

Subcommands:
  convergence-space   spatial ladder with dt = h^2/2 (error vs mesh size)
  convergence-time    temporal ladder at fixed mesh (error vs step size)
  bench               fast-vs-direct wall time / memory sweep over step counts
  soe-table           build, certify, and print an exponential-sum table
  single-run          one solve; prints the final-time error and timings

Exit codes: 0 success, 1 usage/config error, 2 numerical failure.
Config files are flat INI ([material] / [run] sections); CLI flags override
file values.  CSV output is UTF-8, comma-separated, scientific notation with
6 significant digits; timing columns are excluded from determinism claims.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import FracViscoError
from .fem import Material, build_dof_map
from .mesh import MeshKind, build_mesh
from .problems import conv_factor_grid, exact_error, get_problem, precompute_loads
from .soe import build_soe, certify_soe, write_table
from .stepper import RunResult, Scheme, run

SPATIAL_LADDER = (4, 8, 16, 32, 64)
TEMPORAL_LADDER = (5, 10, 20, 40, 80)


@dataclass(frozen=True)
class RunConfig:
    """Experiment configuration; defaults reproduce the reference tables."""

    problem: str = "ex61"
    mesh_kind: MeshKind = MeshKind.QUADRILATERAL
    alphas: tuple[float, ...] = (0.5,)
    spatial_ns: tuple[int, ...] = SPATIAL_LADDER
    n_steps_list: tuple[int, ...] = TEMPORAL_LADDER
    mesh_n: int = 64                  # fixed mesh for temporal/bench runs
    scheme: str = "fast"              # fast | direct | both
    q: float = 10.0
    eps_rule: str = "dt-over-10"      # or "fixed:<value>"
    final_time: float = 1.0
    rho: float = 1.0
    tau_sigma: float = 0.5
    tau_eps: float = 1.0
    mu_c: float = 1.0
    lambda_c: float = 1.0
    mu_d: float = 1.0
    lambda_d: float = 2.0
    out_dir: Path = field(default_factory=lambda: Path("out"))

    def material(self, alpha: float) -> Material:
        return Material(rho=self.rho, tau_sigma=self.tau_sigma,
                        tau_eps=self.tau_eps, alpha=alpha, mu_c=self.mu_c,
                        lambda_c=self.lambda_c, mu_d=self.mu_d,
                        lambda_d=self.lambda_d)

    def eps_for(self, dt: float) -> float:
        if self.eps_rule == "dt-over-10":
            return dt / 10.0
        if self.eps_rule.startswith("fixed:"):
            return float(self.eps_rule.split(":", 1)[1])
        raise ValueError(f"unknown eps rule {self.eps_rule!r}")


@dataclass
class ConvergenceRow:
    level: int
    resolution: float     # h/sqrt(2) for spatial, dt for temporal
    error: float
    order: float | None


@dataclass
class ConvergenceReport:
    label: str
    rows: list[ConvergenceRow]

    def format(self) -> str:
        lines = [self.label, f"{'level':>5} {'h or dt':>12} {'error':>12} {'order':>7}"]
        for r in self.rows:
            order = f"{r.order:7.2f}" if r.order is not None else "     --"
            lines.append(f"{r.level:5d} {r.resolution:12.5e} {r.error:12.5e} {order}")
        return "\n".join(lines)


def _orders(errors: list[float]) -> list[float | None]:
    out: list[float | None] = [None]
    for prev, cur in zip(errors, errors[1:]):
        out.append(math.log2(prev / cur))
    return out


def _fmt(x: float) -> str:
    return f"{x:.5e}"


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# minimal self-contained SVG log-log plots

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _svg_loglog(path: Path, title: str, xlabel: str, ylabel: str,
                series: list[tuple[str, np.ndarray, np.ndarray]]) -> None:
    width, height, margin = 640, 480, 70
    xs = np.concatenate([s[1] for s in series]).astype(float)
    ys = np.concatenate([s[2] for s in series]).astype(float)
    lx0, lx1 = math.log10(xs.min()), math.log10(xs.max())
    ly0, ly1 = math.log10(ys.min()), math.log10(ys.max())
    lx1 += 1e-9 if lx1 == lx0 else 0.0
    ly1 += 1e-9 if ly1 == ly0 else 0.0

    def px(v: float) -> float:
        return margin + (math.log10(v) - lx0) / (lx1 - lx0) * (width - 2 * margin)

    def py(v: float) -> float:
        return height - margin - (math.log10(v) - ly0) / (ly1 - ly0) * (height - 2 * margin)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width/2}" y="25" text-anchor="middle" font-size="16">{title}</text>',
             f'<text x="{width/2}" y="{height-15}" text-anchor="middle" font-size="13">{xlabel} (log)</text>',
             f'<text x="20" y="{height/2}" text-anchor="middle" font-size="13" '
             f'transform="rotate(-90 20 {height/2})">{ylabel} (log)</text>',
             f'<rect x="{margin}" y="{margin}" width="{width-2*margin}" '
             f'height="{height-2*margin}" fill="none" stroke="black"/>']
    for d in range(math.floor(lx0), math.ceil(lx1) + 1):
        if lx0 <= d <= lx1:
            x = px(10.0 ** d)
            parts.append(f'<line x1="{x:.1f}" y1="{margin}" x2="{x:.1f}" '
                         f'y2="{height-margin}" stroke="#ddd"/>')
            parts.append(f'<text x="{x:.1f}" y="{height-margin+18}" '
                         f'text-anchor="middle" font-size="11">1e{d}</text>')
    for d in range(math.floor(ly0), math.ceil(ly1) + 1):
        if ly0 <= d <= ly1:
            y = py(10.0 ** d)
            parts.append(f'<line x1="{margin}" y1="{y:.1f}" x2="{width-margin}" '
                         f'y2="{y:.1f}" stroke="#ddd"/>')
            parts.append(f'<text x="{margin-8}" y="{y:.1f}" text-anchor="end" '
                         f'font-size="11">1e{d}</text>')
    for i, (name, sx, sy) in enumerate(series):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(sx, sy))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="2"/>')
        for a, b in zip(sx, sy):
            parts.append(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="3" '
                         f'fill="{color}"/>')
        parts.append(f'<text x="{width-margin-10}" y="{margin+18+16*i}" '
                     f'text-anchor="end" font-size="12" fill="{color}">{name}</text>')
    parts.append("</svg>")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts), encoding="utf-8")


# ---------------------------------------------------------------------------
# subcommands

def _ladder_run(cfg: RunConfig, alpha: float, mesh, dofs, n_steps: int,
                scheme: Scheme, pre=None, conv=None) -> RunResult:
    mat = cfg.material(alpha)
    problem = get_problem(cfg.problem, mat, final_time=cfg.final_time)
    dt = cfg.final_time / n_steps
    return run(problem, mesh, scheme, n_steps, dofs=dofs,
               eps=cfg.eps_for(dt), q=cfg.q, pre=pre, conv_values=conv)


def cmd_convergence_space(cfg: RunConfig) -> list[ConvergenceReport]:
    reports = []
    rows_csv: list[list[str]] = []
    scheme = Scheme.DIRECT if cfg.scheme == "direct" else Scheme.FAST
    for alpha in cfg.alphas:
        mat = cfg.material(alpha)
        problem = get_problem(cfg.problem, mat, final_time=cfg.final_time)
        errors: list[float] = []
        for n in cfg.spatial_ns:
            mesh = build_mesh(cfg.mesh_kind, n)
            dofs = build_dof_map(mesh)
            n_steps = max(1, round(cfg.final_time * n * n))   # dt = h^2/2
            res = run(problem, mesh, scheme, n_steps, dofs=dofs,
                      eps=cfg.eps_for(cfg.final_time / n_steps), q=cfg.q)
            errors.append(exact_error(mesh, dofs, res.coeffs, problem,
                                      cfg.final_time))
        orders = _orders(errors)
        rows = [ConvergenceRow(level=i + 1, resolution=1.0 / n, error=e, order=o)
                for i, (n, e, o) in enumerate(zip(cfg.spatial_ns, errors, orders))]
        reports.append(ConvergenceReport(
            label=f"spatial {cfg.problem} {cfg.mesh_kind.value} alpha={alpha}",
            rows=rows))
        for n, e, o in zip(cfg.spatial_ns, errors, orders):
            rows_csv.append([cfg.mesh_kind.value, _fmt(alpha), str(n),
                             _fmt(1.0 / n), _fmt(1.0 / (n * n)), _fmt(e),
                             _fmt(o) if o is not None else ""])
    _write_csv(cfg.out_dir / "convergence_space.csv",
               ["mesh_kind", "alpha", "n", "h_over_sqrt2", "dt", "error", "order"],
               rows_csv)
    return reports


def cmd_convergence_time(cfg: RunConfig) -> list[ConvergenceReport]:
    reports = []
    rows_csv: list[list[str]] = []
    scheme = Scheme.DIRECT if cfg.scheme == "direct" else Scheme.FAST
    mesh = build_mesh(cfg.mesh_kind, cfg.mesh_n)
    dofs = build_dof_map(mesh)
    for alpha in cfg.alphas:
        mat = cfg.material(alpha)
        problem = get_problem(cfg.problem, mat, final_time=cfg.final_time)
        pre = precompute_loads(mesh, dofs, problem)
        errors = []
        for n_steps in cfg.n_steps_list:
            res = run(problem, mesh, scheme, n_steps, dofs=dofs,
                      eps=cfg.eps_for(cfg.final_time / n_steps), q=cfg.q,
                      pre=pre)
            errors.append(exact_error(mesh, dofs, res.coeffs, problem,
                                      cfg.final_time))
        orders = _orders(errors)
        rows = [ConvergenceRow(level=i + 1,
                               resolution=cfg.final_time / ns, error=e, order=o)
                for i, (ns, e, o) in enumerate(zip(cfg.n_steps_list, errors, orders))]
        reports.append(ConvergenceReport(
            label=f"temporal {cfg.problem} {cfg.mesh_kind.value} alpha={alpha}",
            rows=rows))
        for ns, e, o in zip(cfg.n_steps_list, errors, orders):
            rows_csv.append([cfg.mesh_kind.value, _fmt(alpha), str(cfg.mesh_n),
                             str(ns), _fmt(cfg.final_time / ns), _fmt(e),
                             _fmt(o) if o is not None else ""])
    _write_csv(cfg.out_dir / "convergence_time.csv",
               ["mesh_kind", "alpha", "n", "n_steps", "dt", "error", "order"],
               rows_csv)
    return reports


def cmd_bench(cfg: RunConfig) -> list[dict]:
    """Fast-vs-direct sweep at fixed mesh; serial, one discarded warmup."""
    alpha = cfg.alphas[0]
    mat = cfg.material(alpha)
    problem = get_problem(cfg.problem, mat, final_time=cfg.final_time)
    mesh = build_mesh(cfg.mesh_kind, cfg.mesh_n)
    dofs = build_dof_map(mesh)
    pre = precompute_loads(mesh, dofs, problem)
    schemes = {"fast": [Scheme.FAST], "direct": [Scheme.DIRECT],
               "both": [Scheme.FAST, Scheme.DIRECT]}[cfg.scheme]

    warm_steps = min(cfg.n_steps_list)
    _ladder_run(cfg, alpha, mesh, dofs, warm_steps, schemes[0], pre=pre)

    records = []
    for n_steps in cfg.n_steps_list:
        dt = cfg.final_time / n_steps
        conv = conv_factor_grid(mat.alpha, mat.tau_sigma,
                                dt * np.arange(1, n_steps + 1))
        for scheme in schemes:
            res = run(problem, mesh, scheme, n_steps, dofs=dofs,
                      eps=cfg.eps_for(dt), q=cfg.q, pre=pre, conv_values=conv)
            err = exact_error(mesh, dofs, res.coeffs, problem, cfg.final_time)
            records.append({
                "scheme": scheme.value, "n": cfg.mesh_n, "n_steps": n_steps,
                "alpha": alpha, "error": err,
                "wall_total": res.timings.wall_total,
                "wall_history": res.timings.wall_history,
                "wall_solve": res.timings.wall_solve,
                "peak_history_bytes": res.peak_history_bytes,
                "n_exp": res.n_exp})
    _write_csv(cfg.out_dir / "bench.csv",
               ["scheme", "n", "n_steps", "alpha", "error", "wall_total",
                "wall_history", "wall_solve", "peak_history_bytes", "n_exp"],
               [[r["scheme"], str(r["n"]), str(r["n_steps"]), _fmt(r["alpha"]),
                 _fmt(r["error"]), _fmt(r["wall_total"]), _fmt(r["wall_history"]),
                 _fmt(r["wall_solve"]), str(r["peak_history_bytes"]),
                 str(r["n_exp"])] for r in records])
    for quantity, fname, ylab in (("wall_history", "bench_time.svg", "history wall time [s]"),
                                  ("peak_history_bytes", "bench_memory.svg", "history memory [bytes]")):
        series = []
        for scheme in schemes:
            pts = [(r["n_steps"], r[quantity]) for r in records
                   if r["scheme"] == scheme.value and r[quantity] > 0]
            if pts:
                series.append((scheme.value, np.array([p[0] for p in pts]),
                               np.array([p[1] for p in pts])))
        if series:
            _svg_loglog(cfg.out_dir / fname,
                        f"history cost vs step count ({quantity})",
                        "number of time steps", ylab, series)
    return records


def cmd_soe_table(alpha: float, eps: float, q: float, t_min: float,
                  t_max: float, out_dir: Path) -> str:
    soe = build_soe(alpha, eps, q, t_min=t_min, t_max=t_max)
    certify_soe(soe, t_min, t_max)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / f"soe_alpha{alpha}_eps{eps:.0e}.txt"
    write_table(soe, table_path)
    report = (f"alpha={alpha} q={q} target={eps:.3e} range=[{t_min:.3e},"
              f" {t_max:.3e}] N_exp={soe.n_exp} "
              f"certified <= {soe.eps_certified:.3e}")
    (out_dir / "soe_report.txt").write_text(report + "\n", encoding="utf-8")
    return report


def cmd_single_run(cfg: RunConfig, n: int, n_steps: int) -> dict:
    alpha = cfg.alphas[0]
    mat = cfg.material(alpha)
    problem = get_problem(cfg.problem, mat, final_time=cfg.final_time)
    mesh = build_mesh(cfg.mesh_kind, n)
    dofs = build_dof_map(mesh)
    scheme = Scheme.DIRECT if cfg.scheme == "direct" else Scheme.FAST
    t0 = time.perf_counter()
    res = run(problem, mesh, scheme, n_steps, dofs=dofs,
              eps=cfg.eps_for(cfg.final_time / max(n_steps, 1)), q=cfg.q)
    wall = time.perf_counter() - t0
    err = exact_error(mesh, dofs, res.coeffs, problem, cfg.final_time)
    return {"scheme": scheme.value, "n": n, "n_steps": n_steps, "alpha": alpha,
            "error": err, "wall_total": wall,
            "wall_history": res.timings.wall_history,
            "peak_history_bytes": res.peak_history_bytes, "n_exp": res.n_exp}


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 1 on usage errors
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_config(path: Path) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file {path} not found or unreadable")
    values: dict = {}
    if parser.has_section("material"):
        for key in ("rho", "tau_sigma", "tau_eps", "mu_c", "lambda_c",
                    "mu_d", "lambda_d"):
            if parser.has_option("material", key):
                values[key] = parser.getfloat("material", key)
    if parser.has_section("run"):
        sec = parser["run"]
        if "problem" in sec:
            values["problem"] = sec["problem"]
        if "mesh" in sec:
            values["mesh_kind"] = MeshKind(sec["mesh"])
        if "alphas" in sec:
            values["alphas"] = tuple(float(a) for a in sec["alphas"].split(","))
        if "spatial_ns" in sec:
            values["spatial_ns"] = tuple(int(a) for a in sec["spatial_ns"].split(","))
        if "n_steps" in sec:
            values["n_steps_list"] = tuple(int(a) for a in sec["n_steps"].split(","))
        if "mesh_n" in sec:
            values["mesh_n"] = sec.getint("mesh_n")
        if "scheme" in sec:
            values["scheme"] = sec["scheme"]
        if "q" in sec:
            values["q"] = sec.getfloat("q")
        if "eps_rule" in sec:
            values["eps_rule"] = sec["eps_rule"]
        if "final_time" in sec:
            values["final_time"] = sec.getfloat("final_time")
        if "out" in sec:
            values["out_dir"] = Path(sec["out"])
    return values


def _build_parser() -> _Parser:
    p = _Parser(prog="fracvisco",
                description="fractional viscoelastic wave solver harness")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, default=None)
        sp.add_argument("--problem", choices=("ex61", "ex62"), default=None)
        sp.add_argument("--mesh", choices=("tri", "quad"), default=None)
        sp.add_argument("--alpha", type=float, action="append", default=None)
        sp.add_argument("--out", type=Path, default=None)
        sp.add_argument("--scheme", choices=("fast", "direct", "both"),
                        default=None)
        sp.add_argument("--eps-rule", default=None,
                        help="dt-over-10 or fixed:<value>")
        sp.add_argument("--mesh-n", type=int, default=None)
        sp.add_argument("--steps", type=str, default=None,
                        help="comma-separated step counts")

    for name in ("convergence-space", "convergence-time", "bench"):
        common(sub.add_parser(name))

    soe_p = sub.add_parser("soe-table")
    soe_p.add_argument("--alpha", type=float, required=True)
    soe_p.add_argument("--eps", type=float, required=True)
    soe_p.add_argument("--q", type=float, default=10.0)
    soe_p.add_argument("--t-min", type=float, default=1e-4)
    soe_p.add_argument("--t-max", type=float, default=2.0)
    soe_p.add_argument("--out", type=Path, default=Path("out"))

    run_p = sub.add_parser("single-run")
    common(run_p)
    run_p.add_argument("--n", type=int, default=16)
    run_p.add_argument("--n-steps", type=int, default=64)
    return p


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config is not None:
        values.update(_load_config(args.config))
    if args.problem is not None:
        values["problem"] = args.problem
    if args.mesh is not None:
        values["mesh_kind"] = MeshKind(args.mesh)
    if args.alpha:
        values["alphas"] = tuple(args.alpha)
    if args.out is not None:
        values["out_dir"] = args.out
    if args.scheme is not None:
        values["scheme"] = args.scheme
    if args.eps_rule is not None:
        values["eps_rule"] = args.eps_rule
    if getattr(args, "mesh_n", None) is not None:
        values["mesh_n"] = args.mesh_n
    if getattr(args, "steps", None):
        values["n_steps_list"] = tuple(int(s) for s in args.steps.split(","))
    cfg = RunConfig(**values)
    cfg.eps_for(1.0)   # validate the eps rule early
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "soe-table":
            if not 0.0 < args.alpha < 1.0:
                print("error: alpha must lie in (0, 1)", file=sys.stderr)
                return 1
            print(cmd_soe_table(args.alpha, args.eps, args.q, args.t_min,
                                args.t_max, args.out))
            return 0
        cfg = _config_from_args(args)
        if args.command == "convergence-space":
            for report in cmd_convergence_space(cfg):
                print(report.format())
        elif args.command == "convergence-time":
            for report in cmd_convergence_time(cfg):
                print(report.format())
        elif args.command == "bench":
            for rec in cmd_bench(cfg):
                print(f"{rec['scheme']:6s} N={rec['n_steps']:6d} "
                      f"err={rec['error']:.5e} hist={rec['wall_history']:.3f}s "
                      f"mem={rec['peak_history_bytes']}B n_exp={rec['n_exp']}")
        elif args.command == "single-run":
            rec = cmd_single_run(cfg, args.n, args.n_steps)
            print(f"{rec['scheme']} n={rec['n']} N={rec['n_steps']} "
                  f"alpha={rec['alpha']} error={rec['error']:.5e} "
                  f"wall={rec['wall_total']:.3f}s n_exp={rec['n_exp']}")
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FracViscoError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
