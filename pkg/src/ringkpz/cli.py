"""Command-line interface, table I/O and comparison harness.

Every subcommand writes a table (CSV or JSON) whose metadata echoes the fully
resolved configuration and the library version.  Exit codes: 0 success,
1 comparison failure, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bethe import ModelParams, solve_bethe_roots, substitute_z
from .errors import DomainError, NumericalError, RingKPZError
from .exactdist import (
    ExactHeightDistribution,
    QuadratureSpec,
    height_scale,
    lemma32_check,
    nxn_vs_fredholm_sides,
    scaling_map,
)
from .limitdist import (
    BR_TAUS,
    DEFAULT_LIMIT_QUAD,
    GAUSS_TAUS,
    LimitEvaluator,
    ScalingParams,
    baik_rains_scan,
    fb_bernoulli,
    gaussian_scan,
)
from .parallel import ENV_THREADS, set_threads, threads

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
META_PREFIX = "# meta: "


# ---------------------------------------------------------------------------
# tables


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _parse(s: str):
    if s == "-0":  # keep the sign of a negative float zero
        return -0.0
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def _plain(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


@dataclass
class DistTable:
    """Rows of a distribution-like table plus its metadata.

    ``meta["value_column"]`` and ``meta["err_column"]`` (optional) name the
    columns that hold the values and per-row error estimates; the first
    column holds the abscissae.
    """

    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = [[_plain(v) for v in r] for r in self.rows]
        for r in self.rows:
            if len(r) != len(self.columns):
                raise DomainError("row length does not match the header")

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    @property
    def abscissae(self) -> np.ndarray:
        return self.column(self.columns[0]).astype(float)

    @property
    def values(self) -> np.ndarray:
        return self.column(self.meta["value_column"]).astype(float)

    @property
    def err(self) -> np.ndarray:
        name = self.meta.get("err_column")
        return self.column(name).astype(float) if name else np.zeros(len(self.rows))

    def validate(self, slack: float = 1e-12) -> None:
        a = self.abscissae
        if len(a) > 1 and not np.all(np.diff(a) > 0):
            raise DomainError("abscissae must be strictly increasing")
        if "value_column" in self.meta:
            v, e = self.values, self.err
            if np.any(v < -e - slack) or np.any(v > 1 + e + slack):
                raise DomainError("values leave [0, 1] by more than their error")

    # -- serialisation
    def to_csv(self) -> str:
        lines = [META_PREFIX + json.dumps(self.meta, sort_keys=True), ",".join(self.columns)]
        lines += [",".join(_fmt(v) for v in r) for r in self.rows]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({"meta": self.meta, "columns": self.columns, "rows": self.rows},
                          sort_keys=True) + "\n"

    def dumps(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()

    @classmethod
    def from_csv(cls, text: str) -> "DistTable":
        lines = text.splitlines()
        if not lines or not lines[0].startswith(META_PREFIX):
            raise DomainError("missing metadata line")
        meta = json.loads(lines[0][len(META_PREFIX):])
        cols = lines[1].split(",")
        rows = [[_parse(c) for c in ln.split(",")] for ln in lines[2:] if ln]
        return cls(cols, rows, meta)

    @classmethod
    def from_json(cls, text: str) -> "DistTable":
        obj = json.loads(text)
        return cls(list(obj["columns"]), [list(r) for r in obj["rows"]], obj["meta"])

    @classmethod
    def loads(cls, text: str) -> "DistTable":
        return cls.from_json(text) if text.lstrip().startswith("{") else cls.from_csv(text)

    @classmethod
    def read(cls, path) -> "DistTable":
        return cls.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# comparison


@dataclass
class CompareReport:
    max_deviation: float
    failing: list[tuple[float, float, float]]  # (abscissa, value, reference)
    rows: int
    passed: bool

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.passed else EXIT_FAIL


def compare(exact: DistTable, reference: DistTable, mode: str = "abs", tol: float = 1e-6,
            min_fraction: float = 1.0, interpolate: bool = False) -> CompareReport:
    """Compare ``exact`` against ``reference`` row by row.

    ``abs``: a row passes when ``|value - reference| <= tol``.  ``ci``: it
    passes when the value lies in the reference interval
    ``[ci_low, ci_high]``.  The comparison passes when the passing fraction
    is at least ``min_fraction``.  With ``interpolate`` the reference is
    linearly interpolated to the abscissae of ``exact`` (for comparisons on
    a continuous scale); otherwise abscissae must coincide.
    """
    if mode not in ("abs", "ci"):
        raise DomainError(f"unknown comparison mode {mode!r}")
    xa, va = exact.abscissae, exact.values
    xr = reference.abscissae
    if mode == "ci":
        if not {"ci_low", "ci_high"} <= set(reference.columns):
            raise DomainError("reference table has no confidence interval columns")
        lo, hi = reference.column("ci_low").astype(float), reference.column("ci_high").astype(float)
        ref = reference.values
    else:
        ref = reference.values
    if interpolate:
        if xa.min() < xr.min() or xa.max() > xr.max():
            raise DomainError("abscissae outside the reference range")
        ref = np.interp(xa, xr, ref)
        if mode == "ci":
            lo, hi = np.interp(xa, xr, lo), np.interp(xa, xr, hi)
    elif len(xa) != len(xr) or not np.array_equal(xa, xr):
        raise DomainError("abscissa mismatch between tables")
    dev = np.abs(va - ref)
    ok = dev <= tol if mode == "abs" else (lo <= va) & (va <= hi)
    failing = [(float(x), float(v), float(r)) for x, v, r, g in zip(xa, va, ref, ok) if not g]
    frac = float(ok.mean()) if len(ok) else 1.0
    return CompareReport(float(dev.max()) if len(dev) else 0.0, failing, len(ok), frac >= min_fraction)


# ---------------------------------------------------------------------------
# finite-to-limit convergence


@dataclass
class ConvergenceRow:
    L: int
    distance: float
    x_at_max: float
    points: int  # grid levels evaluated by contour integration
    bounded: int  # tail levels covered by a monotone bound instead
    runtime: float
    cdf_lo: float  # finite CDF at the lowest grid level (upper bound when bounded)
    cdf_hi: float  # finite CDF at the highest grid level (lower bound when bounded)
    limit_lo: float
    limit_hi: float


TAIL_CUT = 1e-4


def convergence_scan(rho: float, tau: float, gamma: float, L_list, x_grid=(-10.0, 10.0, 0.25),
                     quad: QuadratureSpec | None = None, limit_quad: QuadratureSpec | None = None,
                     tail_cut: float = TAIL_CUT):
    """Sup-distance between the finite-ring CDF and ``F_U`` for each ``L``.

    The finite CDF ``P(X <= x) = P(h >= b)`` is evaluated at the fluctuation
    levels realised by the admissible ``b`` closest to the grid points, and
    the limit ``F_U(tau^(1/3) x; tau, gamma)`` at the same realised levels.
    Levels are visited from the centre outwards.  Once the finite CDF is
    within ``tail_cut`` of 0 (or 1), the remaining levels on that side are
    covered by monotonicity: the finite value lies in ``[0, p]`` (or
    ``[p, 1]``) and the distance there is bounded accordingly.  Such bounds
    enter the reported sup-distance.
    """
    L_list = [int(L) for L in L_list]
    if L_list != sorted(L_list):
        raise DomainError("L_list must be ascending")
    xs = _grid_points(x_grid)
    w = gamma / (2 * tau ** (2 / 3))
    ev = LimitEvaluator(tau, limit_quad)
    lim = lambda sq: ev.fu(tau ** (1 / 3) * sq.x_realized, sq.gamma_realized)[0]
    out = []
    for L in L_list:
        N = rho * L
        if abs(N - round(N)) > 1e-9:
            raise DomainError(f"rho*L must be an integer (L={L})")
        N = int(round(N))
        t0 = time.perf_counter()
        levels = {}
        for x in xs:
            sq = scaling_map(L, N, tau, w, float(x))
            levels.setdefault(sq.query.b, sq)
        ordered = sorted(levels.values(), key=lambda sq: sq.x_realized)
        q0 = ordered[0].query
        dist = ExactHeightDistribution(q0.params, q0.t, q0.ell, quad)
        centre = int(np.argmin([abs(sq.x_realized) for sq in ordered]))
        best, at, evaluated, bounded = 0.0, math.nan, 0, 0
        ends = {}
        for side, idx in ((-1, range(centre, -1, -1)), (1, range(centre + 1, len(ordered)))):
            bound = None  # finite CDF known to lie in [0, bound] (side -1) or [bound, 1]
            for i in idx:
                sq = ordered[i]
                f = lim(sq)
                if bound is None:
                    p = dist.probability(sq.query.b).probability
                    d = abs(p - f)
                    evaluated += 1
                    if (p if side < 0 else 1.0 - p) < tail_cut:
                        bound = p
                    ends[i] = p
                else:
                    d = max(bound - f, f) if side < 0 else max(f - bound, 1.0 - f)
                    bounded += 1
                    ends[i] = bound
                if d > best:
                    best, at = d, sq.x_realized
        out.append(ConvergenceRow(L, best, at, evaluated, bounded, time.perf_counter() - t0,
                                  ends[0], ends[len(ordered) - 1], lim(ordered[0]), lim(ordered[-1])))
    return out


# ---------------------------------------------------------------------------
# argument helpers


def _grid(s: str):
    try:
        lo, hi, step = (float(v) for v in s.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must be lo:hi:step") from None
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("grid needs lo <= hi and step > 0")
    return lo, hi, step


def _grid_points(g):
    lo, hi, step = g
    return np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)


def _meta(args, **extra) -> dict:
    def plain(v):
        if isinstance(v, complex):
            return [v.real, v.imag]
        if isinstance(v, (tuple, list)):
            return [plain(u) for u in v]
        return v

    cfg = {k: plain(v) for k, v in vars(args).items() if k != "func" and not callable(v)}
    cfg["threads"] = threads()
    meta = {"library": "ringkpz", "version": __version__, "subcommand": args.command, "config": cfg}
    meta.update(extra)
    return meta


def _emit(table: DistTable, args) -> None:
    text = table.dumps(args.format)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _quad(args, default: QuadratureSpec) -> QuadratureSpec:
    return QuadratureSpec(args.radius if args.radius is not None else default.radius,
                          args.nodes if args.nodes is not None else default.nodes)


# ---------------------------------------------------------------------------
# subcommands


def cmd_roots(args) -> int:
    params = ModelParams(args.l, args.n)
    if args.zbold is not None:
        zb = complex(args.zbold)
    else:
        zb = substitute_z(params, complex(args.z), args.rotation)
    roots = solve_bethe_roots(params, zb)
    res = roots.residuals()
    rows = []
    nl = len(roots.left)
    for i, w in enumerate(roots.all):
        rows.append([float(w.real), float(w.imag), "left" if i < nl else "right", float(res[i])])
    _emit(DistTable(["re", "im", "side", "residual"], rows,
                    _meta(args, zbold=[zb.real, zb.imag])), args)
    return EXIT_OK


def _x_of(params: ModelParams, t: float, ell: int, b: int) -> float:
    if t <= 0:
        return math.nan
    centre, width = height_scale(params.rho, t)
    return (centre + (1 - 2 * params.rho) * ell - b) / width


def cmd_exact(args) -> int:
    quad = _quad(args, QuadratureSpec())
    if args.x is not None:
        if args.tau is None:
            raise DomainError("--x requires --tau (and optionally --w)")
        sqs = [scaling_map(args.l, args.n, args.tau, args.w, x) for x in args.x]
        q0 = sqs[0].query
        params, t, ell = q0.params, q0.t, q0.ell
        bs = sorted({sq.query.b for sq in sqs})
    else:
        if args.t is None or args.ell is None:
            raise DomainError("give --t and --ell with --b, or --tau with --x")
        params, t, ell = ModelParams(args.l, args.n), args.t, args.ell
        if args.b is not None:
            bs = sorted(set(args.b))
        elif args.b_from is not None:
            bs = sorted({int(b) for b in DistTable.read(args.b_from).abscissae})
        elif args.b_range is not None:
            lo, hi = args.b_range
            bs = [b for b in range(lo, hi + 1) if (b - ell) % 2 == 0]
        else:
            raise DomainError("give --b, --b-range, --b-from or --x")
    dist = ExactHeightDistribution(params, t, ell, quad)
    rows = []
    for b in bs:
        r = dist.probability(b)
        rows.append([int(b), _x_of(params, t, ell, b), r.probability, r.imag_residue, r.nodes_used])
    extra = {"resolved": {"L": params.L, "N": params.N, "t": t, "ell": ell},
             "value_column": "probability"}
    if args.check_identities:
        extra["identities"] = _check_identities(params, t, ell, quad)
    _emit(DistTable(["b", "x_realized", "probability", "imag_residue", "nodes_used"], rows,
                    _meta(args, **extra)), args)
    if args.check_identities and max(extra["identities"].values()) > 1e-8:
        return EXIT_NUMERICAL
    return EXIT_OK


def _check_identities(params, t, ell, quad, nz: int = 4) -> dict:
    worst33, worst32 = 0.0, 0.0
    for j in range(nz):
        z = quad.radius * np.exp(2j * math.pi * (j + 0.5) / nz)
        roots = solve_bethe_roots(params, substitute_z(params, z))
        for k in (0, 1):
            lhs, rhs = nxn_vs_fredholm_sides(roots, k, ell, t)
            worst33 = max(worst33, abs(lhs - rhs) / max(abs(rhs), 1e-300))
        if math.comb(params.L, params.N) <= 1000:
            worst32 = max(worst32, lemma32_check(params, roots.right, roots.zbold))
    return {"nxn_vs_kernel": worst33, "summation_identity": worst32}


def cmd_limit(args) -> int:
    quad = _quad(args, DEFAULT_LIMIT_QUAD)
    xs = _grid_points(args.x_grid)
    rows = []
    if args.dist == "fb":
        for x in xs:
            v = fb_bernoulli(ScalingParams(args.tau, args.gamma, float(x)), quad)
            rows.append([float(x), v, math.nan])
    else:
        ev = LimitEvaluator(args.tau, quad, truncation=args.truncation)
        f = ev.f2 if args.dist == "f2" else ev.fu
        for x in xs:
            v, e = f(float(x), args.gamma)
            rows.append([float(x), v, e])
    _emit(DistTable(["x", "value", "err_estimate"], rows,
                    _meta(args, value_column="value", err_column="err_estimate")), args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .sim.montecarlo import SimEnsemble, mc_height_cdf, mean_height, run_ensemble

    ens = SimEnsemble(args.seed, args.replicas, args.ic)
    n = args.n if args.n is not None else 0
    run = run_ensemble(args.l, n, args.t, ens)
    cdf = mc_height_cdf(args.l, n, args.t, args.ell, ens, run=run)
    rows = [[int(b), p, lo, hi] for b, p, lo, hi in zip(cdf.b, cdf.p_hat, cdf.ci_low, cdf.ci_high)]
    mean, se = mean_height(run, args.ell)
    counts = run.particle_counts
    extra = {"rng": ens.config(), "backend": run.backend, "value_column": "p_hat",
             "mean_height": mean, "mean_height_se": se,
             "particles": {"min": int(counts.min()), "max": int(counts.max()), "mean": float(counts.mean())}}
    _emit(DistTable(["b", "p_hat", "ci_low", "ci_high"], rows, _meta(args, **extra)), args)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .sim.oracle import ctmc_oracle

    res = ctmc_oracle(args.l, args.n, args.t, args.ell, kmax=args.kmax)
    rows = [[int(b), float(p), float(res.trunc_err)] for b, p in zip(res.b, res.p_ge)]
    _emit(DistTable(["b", "p_exact", "trunc_err"], rows,
                    _meta(args, value_column="p_exact", err_column="trunc_err")), args)
    return EXIT_OK


def cmd_compare(args) -> int:
    a, b = DistTable.read(args.table), DistTable.read(args.reference)
    rep = compare(a, b, args.mode, args.tol, args.min_fraction, args.interpolate)
    rows = [[x, v, r, abs(v - r)] for x, v, r in rep.failing]
    meta = _meta(args, max_deviation=rep.max_deviation, rows_compared=rep.rows,
                 rows_failing=len(rep.failing), passed=rep.passed)
    _emit(DistTable(["abscissa", "value", "reference", "deviation"], rows, meta), args)
    for x, v, r in rep.failing:
        print(f"row {x:g}: value {v:.17g} reference {r:.17g}", file=sys.stderr)
    print(f"max deviation {rep.max_deviation:.3e}; {len(rep.failing)}/{rep.rows} rows failing; "
          f"{'PASS' if rep.passed else 'FAIL'}", file=sys.stderr)
    return rep.exit_code


def cmd_convergence(args) -> int:
    rows = convergence_scan(args.rho, args.tau, args.gamma, args.L, args.x_grid)
    cols = ["L", "distance", "x_at_max", "points", "bounded", "runtime_s",
            "cdf_lo", "cdf_hi", "limit_lo", "limit_hi"]
    table = [[getattr(r, c if c != "runtime_s" else "runtime") for c in cols] for r in rows]
    _emit(DistTable(cols, table, _meta(args)), args)
    return EXIT_OK


def limit_scans(kind: str, tau_list=None, grid=(-4.0, 4.0, 0.1), w: float = 0.0,
                quad: QuadratureSpec | None = None, meta: dict | None = None) -> DistTable:
    """Scan table of ``F_U`` in one of the two crossover parameterisations.

    ``baikrains``: ``F_U(tau^(1/3) x; tau, 2 w tau^(2/3))``; ``gaussian``:
    ``F_U(-tau + (pi^(1/4)/sqrt 2) x tau^(1/2); tau, 0)``.  Each ``tau`` gets
    a CDF column, its error column and a finite-difference density column.
    """
    xs = _grid_points(grid)
    if kind == "baikrains":
        taus = BR_TAUS if tau_list is None else tuple(tau_list)
        scan = lambda tau: baik_rains_scan(tau, xs, w, quad)
    elif kind == "gaussian":
        taus = GAUSS_TAUS if tau_list is None else tuple(tau_list)
        scan = lambda tau: gaussian_scan(tau, xs, quad)
    else:
        raise DomainError(f"unknown scan kind {kind!r}")
    cols, data = ["x"], [xs]
    for tau in taus:
        v, e = scan(tau)
        cols += [f"cdf_tau_{tau:g}", f"err_tau_{tau:g}", f"density_tau_{tau:g}"]
        data += [v, e, np.gradient(v, xs)]
    rows = [list(r) for r in zip(*data)]
    return DistTable(cols, rows, {**(meta or {}), "scan": kind, "taus": list(taus), "w": w})


def cmd_figures(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, kind in (("figure1_baik_rains", "baikrains"), ("figure2_gaussian", "gaussian")):
        table = limit_scans(kind, grid=args.x_grid, w=args.w, meta=_meta(args, figure=name))
        (out / f"{name}.{args.format}").write_text(table.dumps(args.format))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, help=f"worker cap (also {ENV_THREADS})")

    quad = argparse.ArgumentParser(add_help=False)
    quad.add_argument("--radius", type=float)
    quad.add_argument("--nodes", type=int)

    p = argparse.ArgumentParser(prog="ringkpz", description="Height fluctuations of TASEP on a ring.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("roots", parents=[common], help="Bethe roots at one contour point")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--z", type=complex, help="contour variable, 0 < |z| < 1")
    g.add_argument("--zbold", type=complex, help="substituted variable directly")
    s.add_argument("--rotation", type=int, default=0)
    s.set_defaults(func=cmd_roots)

    s = sub.add_parser("exact", parents=[common, quad], help="exact finite-ring height CDF")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=float)
    s.add_argument("--ell", type=int)
    s.add_argument("--b", type=int, nargs="+")
    s.add_argument("--b-range", type=int, nargs=2, metavar=("LO", "HI"))
    s.add_argument("--b-from", metavar="TABLE", help="evaluate at the b values of another table")
    s.add_argument("--tau", type=float, help="relaxation-scale time (with --x)")
    s.add_argument("--w", type=float, default=0.0)
    s.add_argument("--x", type=float, nargs="+")
    s.add_argument("--check-identities", action="store_true")
    s.set_defaults(func=cmd_exact)

    s = sub.add_parser("limit", parents=[common, quad], help="limiting distributions")
    s.add_argument("--dist", choices=("f2", "fu", "fb"), default="fu")
    s.add_argument("--tau", type=float, required=True)
    s.add_argument("--gamma", type=float, default=0.0)
    s.add_argument("--x-grid", type=_grid, default=(-6.0, 6.0, 0.5), metavar="LO:HI:STEP")
    s.add_argument("--truncation", type=float, help="log-weight cut for kernel nodes")
    s.set_defaults(func=cmd_limit)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo height CDF")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--n", type=int, help="particle number (uniform initial condition)")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--ell", type=int, default=0)
    s.add_argument("--replicas", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--ic", default="uniform", help="uniform | bernoulli:p")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("oracle", parents=[common], help="exact CTMC oracle at tiny L")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--ell", type=int, default=0)
    s.add_argument("--kmax", type=int)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("compare", parents=[common], help="compare two tables")
    s.add_argument("table")
    s.add_argument("reference")
    s.add_argument("--mode", choices=("abs", "ci"), default="abs")
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--min-fraction", type=float, default=1.0)
    s.add_argument("--interpolate", action="store_true")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("convergence", parents=[common], help="finite-to-limit distance scan")
    s.add_argument("--rho", type=float, default=0.5)
    s.add_argument("--tau", type=float, default=1.0)
    s.add_argument("--gamma", type=float, default=0.0)
    s.add_argument("--L", type=int, nargs="+", default=[32, 64, 128])
    s.add_argument("--x-grid", type=_grid, default=(-10.0, 10.0, 0.25), metavar="LO:HI:STEP")
    s.set_defaults(func=cmd_convergence)

    s = sub.add_parser("figures", parents=[common], help="figure scan tables")
    s.add_argument("--out-dir", default=".")
    s.add_argument("--w", type=float, default=0.0)
    s.add_argument("--x-grid", type=_grid, default=(-4.0, 4.0, 0.1), metavar="LO:HI:STEP")
    s.set_defaults(func=cmd_figures)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse exits 2 on usage errors, 0 on --help
        return int(e.code or 0)
    try:
        if args.threads is not None:
            set_threads(args.threads)
        return args.func(args)
    except (DomainError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, RingKPZError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        set_threads(None)


if __name__ == "__main__":
    sys.exit(main())
