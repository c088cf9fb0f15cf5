"""Command-line entry point.

Exit status: 0 success, 2 invalid input (including usage errors), 3 a solver
or oracle did not converge.  Every run writes ``manifest.json`` in
``--out-dir`` listing each output with its SHA-256.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from . import continuum, ensemble, meanfield, sampler
from .artifacts import ArtifactWriter, RunManifest
from .exceptions import ConvergenceError, PointVortexError, ValidationError
from .geometry import CoarseGrid, Domain
from .quadrature import exact_free_energy_oracle


def _int_list(text: str) -> list[int]:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _sweep(text: str) -> list[float]:
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:count, got {text!r}") from None
    if count < 1:
        raise argparse.ArgumentTypeError("sweep count must be >= 1")
    return np.linspace(start, stop, count).tolist()


def _map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _check(problems):
    if problems:
        raise ValidationError("; ".join(problems))


# -- subcommands ---------------------------------------------------------------


def cmd_sample(args, out: ArtifactWriter):
    if args.seed is None:
        raise ValidationError("sampling requires --seed")
    domain = Domain(args.side)
    if args.replicates == 1:
        seeds = [args.seed]
    else:
        seeds = [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(args.seed).spawn(args.replicates)]
    out.manifest.seeds = seeds
    if args.n >= 2:
        sampler.check_admissible(args.beta, args.lam, args.n, args.beta_min)

    def run(seed):
        cfg = sampler.SamplerConfig(
            beta=args.beta, steps=args.steps, seed=seed, step_size=args.step_size,
            thin=args.thin, burn_in=args.burn_in, beta_min_scaled=args.beta_min, tune=args.tune,
        )
        return sampler.sample_canonical(sampler.initial_uniform(args.n, seed, args.lam, domain), cfg)

    chains = _map(run, seeds, args.threads)
    summary = []
    for r, chain in enumerate(chains):
        name = args.out if args.replicates == 1 else f"{_stem(args.out)}_{r}.jsonl"
        out.chain(name, chain)
        radius = sampler.clustering_radius_series(chain)
        summary.append({
            "file": name,
            "seed": chain.seed,
            "acceptance_rate": chain.acceptance_rate,
            "clustering_radius": float(radius.mean()),
            "clustering_radius_error": sampler.batch_means_error(radius) if len(radius) >= 20 else None,
            "final_step_size": chain.final_step_size,
        })
    out.json("sample_summary.json", {"beta": args.beta, "lambda": args.lam, "N": args.n, "chains": summary})


def _stem(name: str) -> str:
    return name[: -len(".jsonl")] if name.endswith(".jsonl") else name


def cmd_bounds(args, out: ArtifactWriter):
    if args.beta is None and args.beta_sweep is None:
        raise ValidationError("bounds needs --beta or --beta-sweep")
    domain = Domain(args.side)
    grid = CoarseGrid.with_box_count(domain, args.m)
    betas = args.beta_sweep if args.beta_sweep is not None else [args.beta]
    want_exact = args.exact and args.n <= 3

    def run(beta):
        F_exact = None
        if want_exact:
            F_exact = exact_free_energy_oracle(args.n, domain, beta, args.lam, beta_min_scaled=args.beta_min).F
        elif args.n >= 2:
            sampler.check_admissible(beta, args.lam, args.n, args.beta_min)
        return ensemble.f_var(args.n, grid, beta, args.lam, mode=args.mode, F_exact=F_exact)

    reports = _map(run, betas, args.threads)
    if args.beta_sweep is None:
        out.json(args.out, reports[0].to_dict())
    else:
        out.json(args.out, [r.to_dict() for r in reports])
        out.table("bounds_sweep.csv", [r.to_dict() for r in reports])


def _finite_solver_kw(args):
    return dict(tol=args.tol, max_iter=args.max_iter, damping=args.damping, beta_min_scaled=args.beta_min)


def cmd_solve_finite(args, out: ArtifactWriter):
    grid = CoarseGrid.with_box_count(Domain(args.side), args.m)
    sol = meanfield.occupation_fixed_point(grid, args.n, meanfield.raw_beta(args.beta, args.n), **_finite_solver_kw(args))
    lim = meanfield.scaling_limits(sol)
    E1 = np.abs(lim.E1)
    bound = meanfield.self_energy_bound(sol)
    report = sol.to_dict() | {
        "beta_scaled": args.beta,
        "stationarity_residual": meanfield.stationarity_residual(sol),
        "d": lim.d,
        "max_abs_E1": float(E1.max()),
        "self_energy_bound_holds": bool(np.all(E1 <= bound)),
    }
    out.json("solution.json", report)
    shape = (grid.ny, grid.nx)
    out.field("xi.csv", lim.xi.reshape(shape))
    out.field("e0.csv", lim.E0.reshape(shape))
    out.field("e1.csv", lim.E1.reshape(shape))


def cmd_solve_pde(args, out: ArtifactWriter):
    mf = continuum.solve_continuum(
        args.beta, args.mesh, tol=args.tol, max_iter=args.max_iter,
        include_E1=args.finite_n is not None, N_for_E1=args.finite_n,
        side=args.side, damping=args.damping, beta_min_scaled=args.beta_min,
    )
    fit = continuum.stationarity_fit(mf)
    header = mf.header() | {
        "poisson_residual_interior": continuum.poisson_residual(mf),
        "stationarity_slope": fit.slope,
        "stationarity_r_squared": fit.r_squared,
    }
    out.json("meanfield.json", header)
    out.field("xi.csv", mf.xi)
    out.field("e0.csv", mf.E0)
    out.field("psi.csv", mf.psi)
    if mf.N_for_E1 is not None:
        out.field("e1.csv", mf.E1)


def cmd_sinh_poisson(args, out: ArtifactWriter):
    sp = continuum.solve_sinh_poisson(
        args.beta, args.mesh, tol=args.tol, max_iter=args.max_iter, side=args.side,
        damping=args.damping, seed_amplitude=args.seed_amplitude, swap_species=args.swap_species,
    )
    fit = continuum.sinh_fit(sp)
    out.json("sinh_poisson.json", sp.header() | {"sinh_amplitude": fit.amplitude, "sinh_shift": fit.shift, "sinh_fit_rms": fit.rms})
    out.field("omega.csv", sp.omega)
    out.field("xi_plus.csv", sp.xi_plus)
    out.field("xi_minus.csv", sp.xi_minus)
    out.field("e0.csv", sp.E0)
    out.field("psi.csv", sp.psi)


def cmd_converge(args, out: ArtifactWriter):
    rows = meanfield.finite_vs_continuum(
        args.n_list, args.beta, mesh_resolution=args.mesh, domain=Domain(args.side),
        continuum_kw={"beta_min_scaled": args.beta_min}, **_finite_solver_kw(args),
    )
    table = [{"N": r.N, "M": r.M, "l1_distance": r.l1_distance} for r in rows]
    out.table("converge.csv", table)
    out.json("converge.json", {
        "beta_scaled": args.beta,
        "rows": table,
        "decreasing": meanfield.is_strictly_decreasing(r.l1_distance for r in rows),
    })


def cmd_decay(args, out: ArtifactWriter):
    def run(N):
        return meanfield.self_energy_decay_study([N], args.beta, domain=Domain(args.side), **_finite_solver_kw(args))[0]

    rows = _map(run, args.n_list, args.threads)
    table = [asdict(r) for r in rows]
    out.table("decay.csv", table)
    out.json("decay.json", {
        "beta_scaled": args.beta,
        "rows": table,
        "decreasing": meanfield.is_strictly_decreasing(r.max_abs_E1 for r in rows),
        "bound_holds": all(r.bound_holds for r in rows),
    })


# -- parser --------------------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--out-dir", default=".", help="directory for outputs and manifest.json")
    g.add_argument("--seed", type=int, default=None, help="root seed (required for sampling)")
    g.add_argument("--threads", type=_positive_int, default=1, help="workers for independent cells")
    g.add_argument("--beta-min", type=float, default=sampler.DEFAULT_BETA_MIN_SCALED, help="admissibility limit on beta*lam^2*N")
    g.add_argument("--side", type=float, default=1.0, help="side of the square domain")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tol", type=float, default=1e-12)
    solver.add_argument("--max-iter", type=_positive_int, default=10_000)
    solver.add_argument("--damping", type=float, default=0.5)

    p = argparse.ArgumentParser(prog="pointvortex", description="Point-vortex equilibrium statistics and mean-field solvers.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", parents=[common], help="Metropolis chain at inverse temperature beta")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--beta", type=float, required=True, help="inverse temperature (unscaled)")
    s.add_argument("--lam", type=float, default=1.0, help="vortex strength")
    s.add_argument("--steps", type=int, required=True, help="single-vortex moves")
    s.add_argument("--step-size", type=float, default=None)
    s.add_argument("--thin", type=int, default=1)
    s.add_argument("--burn-in", type=int, default=0)
    s.add_argument("--tune", action="store_true", help="adapt the step size during burn-in")
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--out", default="chain.jsonl")
    s.set_defaults(func=cmd_sample)

    b = sub.add_parser("bounds", parents=[common], help="variational free energy report")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--m", type=int, required=True, help="number of boxes")
    b.add_argument("--beta", type=float, default=None, help="inverse temperature (unscaled)")
    b.add_argument("--beta-sweep", type=_sweep, default=None, metavar="START:STOP:COUNT")
    b.add_argument("--lam", type=float, default=1.0)
    b.add_argument("--mode", choices=["full", "landau"], default="full")
    b.add_argument("--no-exact", dest="exact", action="store_false", help="skip the quadrature oracle (N <= 3)")
    b.add_argument("--out", default="report.json")
    b.set_defaults(func=cmd_bounds)

    f = sub.add_parser("solve-finite", parents=[common, solver], help="finite-N occupation fixed point")
    f.add_argument("--n", type=int, required=True)
    f.add_argument("--m", type=int, required=True)
    f.add_argument("--beta", type=float, required=True, help="scaled inverse temperature beta*lam^2*N, lam = 1/N")
    f.set_defaults(func=cmd_solve_finite)

    d = sub.add_parser("solve-pde", parents=[common], help="continuum mean-field density")
    d.add_argument("--beta", type=float, required=True, help="scaled inverse temperature")
    d.add_argument("--mesh", type=int, default=64)
    which = d.add_mutually_exclusive_group()
    which.add_argument("--limit", action="store_true", help="infinite-N equation (default)")
    which.add_argument("--finite-n", type=int, default=None, help="include the self-energy of N vortices")
    d.add_argument("--tol", type=float, default=1e-11)
    d.add_argument("--max-iter", type=_positive_int, default=5000)
    d.add_argument("--damping", type=float, default=0.5)
    d.set_defaults(func=cmd_solve_pde)

    h = sub.add_parser("sinh-poisson", parents=[common], help="two-species mean-field equation")
    h.add_argument("--beta", type=float, required=True)
    h.add_argument("--mesh", type=int, default=64)
    h.add_argument("--seed-amplitude", type=float, default=0.5)
    h.add_argument("--swap-species", action="store_true")
    h.add_argument("--tol", type=float, default=1e-11)
    h.add_argument("--max-iter", type=_positive_int, default=20_000)
    h.add_argument("--damping", type=float, default=0.5)
    h.set_defaults(func=cmd_sinh_poisson)

    c = sub.add_parser("converge", parents=[common, solver], help="finite-N versus continuum distance")
    c.add_argument("--n-list", type=_int_list, required=True)
    c.add_argument("--beta", type=float, required=True, help="scaled inverse temperature")
    c.add_argument("--mesh", type=int, default=None)
    c.set_defaults(func=cmd_converge)

    y = sub.add_parser("decay", parents=[common, solver], help="self-energy decay with M = N")
    y.add_argument("--n-list", type=_int_list, required=True)
    y.add_argument("--beta", type=float, required=True, help="scaled inverse temperature")
    y.set_defaults(func=cmd_decay)
    return p


def _problems(args) -> list[str]:
    """Every invalid numeric flag, so one run reports them all."""
    out = []
    for name, value in sorted(vars(args).items()):
        flag = "--" + name.replace("_", "-")
        if isinstance(value, float) and not math.isfinite(value):
            out.append(f"{flag} must be finite, got {value}")
    if args.side <= 0:
        out.append(f"--side must be positive, got {args.side}")
    for name in ("n", "m"):
        if getattr(args, name, 1) < 1:
            out.append(f"--{name} must be >= 1, got {getattr(args, name)}")
    if getattr(args, "mesh", None) is not None and args.mesh < 16:
        out.append(f"--mesh must be >= 16, got {args.mesh}")
    if getattr(args, "finite_n", None) is not None and args.finite_n < 2:
        out.append(f"--finite-n must be >= 2, got {args.finite_n}")
    if not 0 < getattr(args, "damping", 0.5) <= 1:
        out.append(f"--damping must be in (0, 1], got {args.damping}")
    if getattr(args, "tol", 1.0) <= 0:
        out.append(f"--tol must be positive, got {args.tol}")
    if args.command == "sample":
        if args.replicates < 1:
            out.append(f"--replicates must be >= 1, got {args.replicates}")
        try:
            sampler.SamplerConfig(
                beta=args.beta, steps=args.steps, seed=args.seed or 0, step_size=args.step_size,
                thin=args.thin, burn_in=args.burn_in,
            )
        except ValidationError as e:
            out.extend(p for p in str(e).split("; ") if not p.startswith("beta must be finite"))
    return out


def _parameters(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help and 2 for usage errors
        return 0 if not e.code else 2
    out = ArtifactWriter(args.out_dir, RunManifest(args.command, _parameters(args), [] if args.seed is None else [args.seed]))
    try:
        _check(_problems(args))
        args.func(args, out)
    except ValidationError as e:
        out.finish("validation_error", str(e))
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ConvergenceError as e:
        out.finish("not_converged", str(e))
        print(f"not converged: {e}", file=sys.stderr)
        return 3
    except PointVortexError as e:
        out.finish("error", str(e))
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    out.finish()
    return 0


if __name__ == "__main__":
    sys.exit(main())
