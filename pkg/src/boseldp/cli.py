"""Command-line interface.

Every subcommand writes CSV (default) or JSON.  CSV output starts with
``#`` comment lines holding the resolved configuration as JSON, followed
by a header row.  Exit codes: 0 success, 1 verification failure, 2
domain or configuration error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import replace

import numpy as np

from . import __version__, kernels, sim, specfun, thermo, verify
from . import minimize as mz
from .errors import DomainError, NonConvergenceError, SizeError
from .extended import dumps, format_number
from .model import Model, ModelParams, TailSums

EXIT_OK, EXIT_VERIFY, EXIT_DOMAIN, EXIT_NONCONV = 0, 1, 2, 3
SWEEP_COLUMNS = ["mu_eff", "pressure", "dp_dmu", "condensate", "regime",
                 "model", "d", "beta", "a", "b"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_DOMAIN)


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=[m.value for m in Model], default="ideal")
    g.add_argument("--d", type=int, default=3, help="spatial dimension")
    g.add_argument("--beta", type=float, default=None, help="inverse temperature (default 1)")
    g.add_argument("--beta-norm", action="store_true",
                   help="set beta = 1/(4 pi), so that (4 pi beta)^(d/2) = 1")
    g.add_argument("--mu", type=float, default=0.0)
    g.add_argument("--alpha", type=float, default=0.0)
    g.add_argument("--a", type=float, default=0.0)
    g.add_argument("--b", type=float, default=0.0)
    o = p.add_argument_group("numerics and output")
    o.add_argument("--kmax", type=int, default=None,
                   help="explicit cycle lengths (zero output, simulation truncation)")
    o.add_argument("--tol", type=float, default=1e-10, help="HYL tie tolerance")
    o.add_argument("--format", choices=["csv", "json"], default="csv")
    o.add_argument("--out", default="-", help="output path, '-' for standard output")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--threads", type=int, default=1)
    o.add_argument("--convention", choices=["empty", "periodic"], default="empty",
                   help="boundary convention for the ideal condensate at mu + alpha = 0")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boseldp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("zero", help="minimiser of the rate function")
    _common(p)
    p = sub.add_parser("pressure", help="pressure and its mu-derivative")
    _common(p)
    p = sub.add_parser("condensate", help="condensate density")
    _common(p)
    p = sub.add_parser("sweep", help="thermodynamics along a mu grid")
    _common(p)
    p.add_argument("--mu-start", type=float, required=True)
    p.add_argument("--mu-stop", type=float, required=True)
    p.add_argument("--mu-count", type=int, required=True)
    p = sub.add_parser("free-energy", help="free energy at given densities")
    _common(p)
    p.add_argument("--rho", type=float, nargs="+", required=True)
    p = sub.add_parser("simulate", help="Monte Carlo estimate of the cycle counts")
    _common(p)
    p.add_argument("--volume", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--verify-zero", action="store_true",
                   help="add z-scores against the truncated zero")
    p = sub.add_parser("verify", help="run the acceptance checks")
    _common(p)
    p.add_argument("--only", nargs="+", choices=list(verify.CHECKS), default=None)
    p = sub.add_parser("specfun", help="evaluate a special function")
    _common(p)
    p.add_argument("--fn", choices=["lambert_w", "bose_g", "zeta"], required=True)
    p.add_argument("--x", type=float, required=True,
                   help="argument (alpha for bose_g, s for zeta)")
    p.add_argument("--n", type=float, default=1.5, help="order of bose_g")
    p.add_argument("--branch", type=int, choices=[0, -1], default=0)
    return parser


def resolve_params(args) -> ModelParams:
    if args.beta_norm and args.beta is not None:
        raise DomainError("--beta and --beta-norm are mutually exclusive")
    beta = 1.0 / (4.0 * math.pi) if args.beta_norm else (1.0 if args.beta is None else args.beta)
    return ModelParams(Model(args.model), args.d, beta, mu=args.mu, alpha=args.alpha,
                       a=args.a, b=args.b)


def resolved_config(args, params: ModelParams) -> dict:
    cfg = {"command": args.command, "params": params.as_dict(),
           "reduction": "mu <- mu + alpha", "kmax": args.kmax, "tol": args.tol,
           "format": args.format, "seed": args.seed, "threads": args.threads,
           "convention": args.convention, "backend": kernels.BACKEND,
           "version": __version__}
    for key in ("mu_start", "mu_stop", "mu_count", "rho", "volume", "samples", "burn_in",
                "chains", "verify_zero", "only", "fn", "x", "n", "branch"):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    return cfg


def _hyl_cfg(args) -> mz.HylSolverConfig:
    return mz.HylSolverConfig(tol=args.tol)


class Output:
    """Collects one table (CSV) or one document (JSON)."""

    def __init__(self, args, config: dict):
        self.fmt = args.format
        self.config = config
        self.meta: dict = {}
        self.columns: list = []
        self.rows: list = []
        self.doc: dict = {}

    def text(self) -> str:
        if self.fmt == "json":
            body = {"config": self.config, **self.meta, **self.doc}
            if self.columns:
                body["columns"] = self.columns
                body["rows"] = [dict(zip(self.columns, r)) for r in self.rows]
            return dumps(body) + "\n"
        buf = io.StringIO()
        buf.write("# config: " + dumps(self.config, indent=None) + "\n")
        for k, v in self.meta.items():
            buf.write(f"# {k}: " + dumps(v, indent=None) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([v if isinstance(v, str) else format_number(v) for v in r])
        return buf.getvalue()


def _tail_descriptor(xi, shown: int) -> dict:
    tail = xi.tail
    desc = {"kind": type(tail).__name__, "starts_after": shown}
    for attr in ("eta", "scale", "bbeta"):
        if hasattr(tail, attr):
            desc[attr] = getattr(tail, attr)
    if shown >= xi.k_max:
        sums = tail.sums(shown)
    else:
        ks = np.arange(shown + 1, xi.k_max + 1, dtype=np.float64)
        v = xi.values[shown:]
        rest = tail.sums(xi.k_max)
        sums = TailSums(math.fsum(v) + rest.mass, math.fsum(ks * v) + rest.density,
                        0.0, math.fsum((ks * v) ** 2) + rest.square)
    desc["mass"] = sums.mass
    desc["density"] = sums.density
    return desc


def _solution_meta(sol) -> dict:
    info = {}
    for k, v in sol.info.items():
        if k == "candidates":
            info[k] = [{"chi": list(c), "delta_star": d, "objective": o} for c, d, o in v]
        else:
            info[k] = v
    return {"objective": sol.objective, "delta_star": sol.delta_star,
            "density": sol.density, "chi": list(sol.chi), "unique": sol.unique,
            "unique_stationary_point": sol.info.get("n_solutions", 1) == 1,
            "fixed_point_residual": mz.fixed_point_residual(sol), "info": info}


def cmd_zero(args, params, out: Output) -> int:
    kmax = args.kmax or 20
    sol = mz.zero(params, hyl_config=_hyl_cfg(args))
    xs = sol.xi.full(kmax)
    out.meta["solution"] = _solution_meta(sol)
    out.meta["tail"] = _tail_descriptor(sol.xi, kmax)
    if params.model is Model.HYL:
        fams = mz.hyl_solutions(params, _hyl_cfg(args))
        out.meta["families"] = [{"chi": list(s.chi), "delta_star": s.delta_star,
                                 "objective": s.objective} for s in fams]
    out.columns = ["k", "xi"]
    out.rows = [[k, float(x)] for k, x in enumerate(xs, start=1)]
    return EXIT_OK


def _point_row(pt: thermo.ThermoPoint) -> list:
    p = pt.params
    return [p.mu_eff, pt.pressure, pt.dp_dmu, pt.condensate, pt.regime.value,
            p.model.value, p.d, p.beta, p.a, p.b]


def cmd_pressure(args, params, out: Output) -> int:
    pt = thermo.thermo_point(params, args.convention, _hyl_cfg(args))
    out.columns = list(SWEEP_COLUMNS)
    out.rows = [_point_row(pt)]
    out.meta["critical_density"] = thermo.critical_density(params)
    return EXIT_OK


def cmd_condensate(args, params, out: Output) -> int:
    out.columns = ["mu_eff", "condensate", "critical_density", "convention", "model"]
    out.rows = [[params.mu_eff, thermo.condensate(params, args.convention, _hyl_cfg(args)),
                 thermo.critical_density(params), args.convention, params.model.value]]
    return EXIT_OK


def cmd_sweep(args, params, out: Output) -> int:
    if args.mu_count < 2:
        raise DomainError("--mu-count must be at least 2")
    mus = np.linspace(args.mu_start, args.mu_stop, args.mu_count)
    out.columns = list(SWEEP_COLUMNS)
    errors = []
    if params.model is Model.HYL:
        res = thermo.sweep(params, mus, args.convention, _hyl_cfg(args))
        out.rows = [_point_row(pt) for pt in res.points]
        out.meta["sweep"] = res.meta
        return EXIT_OK
    for m in mus:
        try:
            pt = thermo.thermo_point(replace(params, mu=float(m)), args.convention)
            out.rows.append(_point_row(pt))
        except (DomainError, NonConvergenceError) as exc:
            errors.append({"mu": float(m), "error": str(exc)})
            out.rows.append([float(m) + params.alpha, math.nan, math.nan, math.nan, "Error",
                             params.model.value, params.d, params.beta, params.a, params.b])
    if errors:
        out.meta["row_errors"] = errors
    if len(errors) == len(mus):
        print("sweep: every row failed", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_free_energy(args, params, out: Output) -> int:
    out.columns = ["rho", "f", "alpha_star", "saturated", "model", "d", "beta", "a"]
    for r in args.rho:
        fe = thermo.free_energy(params, r)
        out.rows.append([fe.rho, fe.f, 0.0 if fe.alpha_star is None else fe.alpha_star,
                         "true" if fe.saturated else "false", params.model.value,
                         params.d, params.beta, params.a])
    return EXIT_OK


def cmd_simulate(args, params, out: Output) -> int:
    kmax = args.kmax or 5
    cfg = sim.SimConfig(params, args.volume, kmax, args.samples, burn_in=args.burn_in,
                        seed=args.seed, chains=args.chains)
    est = sim.simulate(cfg, threads=args.threads)
    target = None
    if args.verify_zero:
        target = sim.truncated_minimizer(params, kmax) if params.model is not Model.HYL else None
        if target is None:
            raise DomainError("--verify-zero needs an ideal, CMF or PMF model")
    out.meta["diagnostics"] = {"acceptance_rate": est.acceptance_rate, "backend": est.backend,
                               "tail_bound": est.tail_bound, "seed": args.seed,
                               **{k: v for k, v in est.info.items() if k != "batch_means"}}
    out.columns = ["k", "mean", "stderr", "variance", "ess"]
    if target is not None:
        out.columns += ["target", "z"]
        z = est.z_scores(target)
    for i in range(kmax):
        row = [i + 1, est.mean[i], est.stderr[i], est.variance[i], est.ess[i]]
        if target is not None:
            row += [float(target[i]), float(z[i])]
        out.rows.append(row)
    return EXIT_OK


def cmd_verify(args, params, out: Output) -> int:
    results = verify.run(args.only)
    for r in results:
        print(r.line(), file=sys.stderr)
    out.columns = ["name", "group", "passed", "anchor", "measured"]
    out.rows = [[r.name, r.group, "true" if r.passed else "false", r.anchor,
                 dumps(r.measured, indent=None)] for r in results]
    if args.format == "json":
        out.columns, out.rows = [], []
        out.doc["checks"] = [r.as_dict() for r in results]
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_specfun(args, params, out: Output) -> int:
    if args.fn == "lambert_w":
        value = specfun.lambert_w(args.x, args.branch)
        label = f"W{args.branch}({args.x!r})"
    elif args.fn == "bose_g":
        value = specfun.bose_g(args.n, args.x)
        label = f"g({args.n!r},{args.x!r})"
    else:
        value = specfun.zeta_continued(args.x) if args.x <= 1.0 else specfun.zeta(args.x)
        label = f"zeta({args.x!r})"
    out.columns = ["fn", "args", "value"]
    out.rows = [[args.fn, label, value]]
    return EXIT_OK


COMMANDS = {"zero": cmd_zero, "pressure": cmd_pressure, "condensate": cmd_condensate,
            "sweep": cmd_sweep, "free-energy": cmd_free_energy, "simulate": cmd_simulate,
            "verify": cmd_verify, "specfun": cmd_specfun}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        params = resolve_params(args)
        out = Output(args, resolved_config(args, params))
        code = COMMANDS[args.command](args, params, out)
    except (DomainError, SizeError) as exc:
        print(f"boseldp: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NonConvergenceError as exc:
        print(f"boseldp: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    text = out.text()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
