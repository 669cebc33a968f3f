"""Command-line front end: `run` integrates a flow, `verify` runs the suites.

Exit codes: 0 on success (converged or horizon), 1 on usage, validation or
I/O errors, 2 when the integrator underflows its minimum step.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import flow, metric as metric_mod, suites, torus
from .flow import FlowConfig

METRIC_KINDS = ("flat", "cigar", "random", "file")
# which metric parameters belong to which kind; exactly that set must be given
_KIND_PARAMS = {
    "flat": ("alpha",),
    "cigar": ("mass",),
    "random": ("spread", "seed"),
    "file": ("path",),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; 2 is reserved for step
    # underflow here, so route usage problems through UsageError instead
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunSpec:
    n: int
    m: int
    x_choice: str = "standard"
    metric_kind: str = "flat"
    alpha: float | None = None
    mass: float | None = None
    spread: float | None = None
    seed: int = 0
    path: str | None = None
    config: FlowConfig = field(default_factory=FlowConfig)
    density_mode: bool = False
    out_dir: str = "out"
    out_format: str = "both"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fuzzyricci", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="integrate one flow and write trace + manifest")
    run_p.add_argument("--n", type=int, required=True)
    run_p.add_argument("--m", type=int, required=True)
    run_p.add_argument("--x-choice", default="standard",
                       help="standard | mod-n | file:<path to Hermitian matrix JSON>")
    run_p.add_argument("--metric", dest="metric_kind", required=True, choices=METRIC_KINDS)
    run_p.add_argument("--alpha", type=float, help="flat level (metric flat)")
    run_p.add_argument("--mass", type=float, help="cigar mass (metric cigar)")
    run_p.add_argument("--spread", type=float, help="random metric spread")
    run_p.add_argument("--seed", type=int, default=0, help="random metric seed")
    run_p.add_argument("--path", help="metric file (metric file)")
    defaults = FlowConfig()
    run_p.add_argument("--t0", type=float, default=defaults.t0)
    run_p.add_argument("--t-max", type=float, default=defaults.t_max)
    run_p.add_argument("--h-init", type=float, default=None)
    run_p.add_argument("--atol", type=float, default=defaults.atol)
    run_p.add_argument("--conv-tol", type=float, default=defaults.conv_tol)
    run_p.add_argument("--h-min", type=float, default=defaults.h_min)
    run_p.add_argument("--h-max", type=float, default=defaults.h_max)
    run_p.add_argument("--guard", type=float, default=defaults.guard)
    run_p.add_argument("--density-mode", action="store_true",
                       help="normalize the initial metric to unit trace before flowing")
    run_p.add_argument("--out", dest="out_dir", default="out")
    run_p.add_argument("--format", dest="out_format", default="both",
                       choices=("csv", "json", "both"))

    ver_p = sub.add_parser("verify", help="run the property suites")
    ver_p.add_argument("--n", default="2..8",
                       help="dimension(s): single (5), range (2..8) or list (2,3,5)")
    ver_p.add_argument("--m", type=int, default=None,
                       help="restrict to one twist (default: every coprime m)")
    ver_p.add_argument("--seeds", type=int, default=50)
    ver_p.add_argument("--superop", action="store_true",
                       help="include the dense superoperator kernel checks")
    ver_p.add_argument("--x-choice", default="standard", choices=("standard", "mod-n"))
    return parser


def parse_args(argv) -> RunSpec | argparse.Namespace:
    """Parse and validate; returns a RunSpec for `run`, the namespace for `verify`."""
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        return args
    supplied = {p for p in ("alpha", "mass", "spread", "path") if getattr(args, p) is not None}
    needed = {p for p in _KIND_PARAMS[args.metric_kind] if p != "seed"}
    if supplied != needed:
        raise UsageError(
            f"--metric {args.metric_kind} takes exactly {sorted(needed)}, got {sorted(supplied)}"
        )
    try:
        config = FlowConfig(
            t0=args.t0, t_max=args.t_max, h_init=args.h_init, atol=args.atol,
            conv_tol=args.conv_tol, h_min=args.h_min, h_max=args.h_max, guard=args.guard,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return RunSpec(
        n=args.n, m=args.m, x_choice=args.x_choice, metric_kind=args.metric_kind,
        alpha=args.alpha, mass=args.mass, spread=args.spread, seed=args.seed,
        path=args.path, config=config, density_mode=args.density_mode,
        out_dir=args.out_dir, out_format=args.out_format,
    )


def _build_torus(spec: RunSpec) -> torus.FuzzyTorus:
    choice = spec.x_choice
    if choice.startswith("file:"):
        custom = metric_mod.read_hermitian(choice[len("file:"):])
        return torus.build_torus(spec.n, spec.m, x_choice="custom", custom_x=custom)
    return torus.build_torus(spec.n, spec.m, x_choice=choice)


def _build_metric(spec: RunSpec, t: torus.FuzzyTorus) -> metric_mod.Metric:
    if spec.metric_kind == "flat":
        return metric_mod.flat(spec.n, spec.alpha)
    if spec.metric_kind == "cigar":
        return metric_mod.cigar(t, spec.mass)
    if spec.metric_kind == "random":
        return metric_mod.random_metric(spec.n, spec.spread, spec.seed)
    return metric_mod.read_metric(spec.path)


_CSV_HEADER = "t,trace,log_det,entropy,dist_flat,curvature_norm,lambda_min,lambda_max,step_used"


def trace_csv_text(trace: flow.FlowTrace) -> str:
    lines = [_CSV_HEADER]
    for t, rec in trace.rows:
        vals = (t, rec.trace_c, rec.log_det_c, rec.entropy, rec.dist_flat,
                rec.curvature_norm, rec.lambda_min, rec.lambda_max, rec.step_used)
        lines.append(",".join(format(v, ".17g") for v in vals))
    return "\n".join(lines) + "\n"


def manifest_dict(spec: RunSpec, trace: flow.FlowTrace, kappa: float | None,
                  wall_time: float) -> dict:
    cfg = trace.config
    final = trace.final_state
    return {
        "params": {"n": spec.n, "m": spec.m, "x_choice": spec.x_choice},
        "metric": {
            "kind": spec.metric_kind, "alpha": spec.alpha, "mass": spec.mass,
            "spread": spec.spread,
            "seed": spec.seed if spec.metric_kind == "random" else None,
            "path": spec.path,
        },
        "config": {
            "t0": cfg.t0, "t_max": cfg.t_max, "h_init": cfg.h_init, "atol": cfg.atol,
            "conv_tol": cfg.conv_tol, "h_min": cfg.h_min, "h_max": cfg.h_max,
            "guard": cfg.guard,
        },
        "density_mode": spec.density_mode,
        "kappa": kappa,
        "termination": trace.termination,
        "c_infinity": trace.c_infinity,
        "violations": dict(trace.violations),
        "accepted_steps": trace.accepted_steps,
        "rejected_steps": trace.rejected_steps,
        "final_t": final.t,
        "final_dist_flat": final.diag.dist_flat,
        "worst_curvature_pairing": trace.worst_curvature_pairing,
        "final_metric": metric_mod.matrix_to_jsonable(final.metric.mat),
        # volatile fields, excluded from determinism comparisons
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "wall_time_s": wall_time,
    }


def run(spec: RunSpec) -> int:
    started = time.perf_counter()
    t = _build_torus(spec)
    c0 = _build_metric(spec, t)
    kappa = None
    if spec.density_mode:
        c0, kappa = metric_mod.normalize_density(c0)
    trace = flow.integrate(t, c0, spec.config)
    wall = time.perf_counter() - started

    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if spec.out_format in ("csv", "both"):
        (out_dir / "trace.csv").write_text(trace_csv_text(trace), encoding="utf-8")
    if spec.out_format in ("json", "both"):
        manifest = manifest_dict(spec, trace, kappa, wall)
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    v = trace.violations
    print(
        f"{trace.termination}: t={trace.final_state.t:.6g} "
        f"dist_flat={trace.final_state.diag.dist_flat:.3e} "
        f"violations(log_det={v['log_det']},entropy={v['entropy']},"
        f"dist_flat={v['dist_flat']}) -> {out_dir}"
    )
    return 2 if trace.termination == "step-underflow" else 0


def _parse_n_list(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    if "," in text:
        return [int(p) for p in text.split(",") if p.strip()]
    return [int(text)]


def verify(args) -> int:
    ns = _parse_n_list(args.n)
    results = suites.run_verify(
        ns, m_filter=args.m, seeds=args.seeds, superop=args.superop,
        x_choice=args.x_choice,
    )
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed "
          f"(n in {ns}, {args.seeds} seeds)")
    return 1 if failed else 0


def main(argv=None) -> int:
    try:
        spec = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if isinstance(spec, RunSpec):
            return run(spec)
        return verify(spec)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def app() -> None:
    sys.exit(main())


if __name__ == "__main__":
    app()
