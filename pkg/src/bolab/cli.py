"""Command-line driver: ``bolab <subcommand> [flags]``.

Exit codes: 0 success, 2 unknown flag or bad syntax, 3 parameter out of
range, 4 output path not writable, 5 unreadable or malformed input file,
6 numerical blow-up.

Flags may also come from a JSON file given with ``--config`` (keys are the
flag names without dashes, with ``-`` written as ``_``); flags on the command
line win.  The base seed defaults to 0 and may be overridden by the
``BOM_SEED`` environment variable; ``--seed`` wins over both.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import energies as E
from . import gaussian as G
from . import gstar as GS
from . import identities as ID
from . import series as SR
from .flow import FlowBlowUp, FlowConfig, energy_drift, evolve
from .spectral import SpectralField, field_to_dict, project_low, read_field, sobolev_norm_sq

EXIT_USAGE = 2
EXIT_RANGE = 3
EXIT_OUTPUT = 4
EXIT_INPUT = 5
EXIT_NUMERIC = 6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _range_error(flag: str, message: str) -> CliError:
    return CliError(EXIT_RANGE, f"{flag}: {message}")


def _need(cond: bool, flag: str, message: str) -> None:
    if not cond:
        raise _range_error(flag, message)


def int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(EXIT_USAGE, f"{self.prog}: {message}")


# I/O helpers -------------------------------------------------------------------

def _stamp(command: str) -> str:
    return f"# bolab {command} generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}"


def _writable(path: Path, flag: str = "--out") -> Path:
    path = Path(path)
    parent = path.parent if path.parent != Path("") else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK) or (path.exists() and not os.access(path, os.W_OK)):
        raise CliError(EXIT_OUTPUT, f"{flag}: cannot write to {path}")
    return path


def _write_text(path: Path, text: str, flag: str = "--out") -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(EXIT_OUTPUT, f"{flag}: cannot write to {path}: {exc.strerror}") from None


def _csv_text(command: str, header, rows) -> str:
    buf = io.StringIO()
    buf.write(_stamp(command) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _json_text(command: str, payload) -> str:
    return json.dumps({"generated": _stamp(command)[2:], "data": payload}, indent=1) + "\n"


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def builtin_field_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("bolab").joinpath("data").iterdir() if p.name.endswith(".json"))


def load_field(spec: str, flag: str) -> SpectralField:
    """A path to a field JSON file or the name of a shipped field (e.g. ``cos1``).

    A missing path whose file name is a shipped field (``examples/cos1.json``)
    resolves to that field.
    """
    path = Path(spec)
    if not path.exists():
        name = path.stem if path.suffix == ".json" else spec
        candidate = resources.files("bolab").joinpath("data", f"{name}.json")
        if not candidate.is_file():
            raise CliError(EXIT_INPUT, f"{flag}: no such file or built-in field {spec!r} "
                                       f"(built-ins: {', '.join(builtin_field_names())})")
        path = Path(str(candidate))
    try:
        return read_field(path)
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"{flag}: cannot read field from {path}: {exc}") from None


def _seed(args) -> int:
    seed = args.seed
    if seed is None:
        env = os.environ.get("BOM_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise _range_error("BOM_SEED", f"expected an integer, got {env!r}") from None
        else:
            seed = 0
    _need(0 <= seed < 2 ** 64, "--seed", "must be in [0, 2^64)")
    return seed


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# subcommands -----------------------------------------------------------------

def cmd_sample(args) -> int:
    seed = _seed(args)
    _need(args.k >= 0, "--k", "must be >= 0")
    _need(args.N >= 1, "--N", "must be >= 1")
    _need(args.samples >= 1, "--samples", "must be >= 1")
    out = Path(args.out)
    if not out.is_dir():
        try:
            out.mkdir(parents=True)
        except OSError:
            raise CliError(EXIT_OUTPUT, f"--out: cannot create directory {out}") from None
    if not os.access(out, os.W_OK):
        raise CliError(EXIT_OUTPUT, f"--out: cannot write to {out}")
    e = G.GaussianEnsemble(args.k / 2, args.N, seed=seed)
    rows = []
    for i in range(args.samples):
        u = G.sample_field(e, i)
        _write_text(out / f"sample_{i:05d}.json", json.dumps(field_to_dict(u), indent=1) + "\n")
        h = float(G.h_statistic(u, args.N, (args.k - 1) / 2)) if args.k >= 1 else float("nan")
        rows.append([seed, args.samples, i, args.k, args.N, float(np.sqrt(sobolev_norm_sq(u, 0))), h])
    _write_text(out / "summary.csv", _csv_text("sample", ["seed", "samples", "index", "k", "n_max", "l2", "h"], rows))
    print(f"wrote {args.samples} field(s) to {out}")
    return 0


def _energy_spec(args):
    if getattr(args, "energy", None):
        try:
            return E.read_energy(args.energy)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise CliError(EXIT_INPUT, f"--energy: cannot read energy spec: {exc}") from None
    _need(0 <= args.k <= 4, "--k", "built-in conservation laws exist for k = 0..4")
    return E.builtin_energy(args.k)


def cmd_energy(args) -> int:
    spec = _energy_spec(args)
    if args.field is None and args.u0 is None:
        raise _range_error("--field", "a field is required (--field PATH or --u0 NAME)")
    u = load_field(args.field, "--field") if args.field else load_field(args.u0, "--u0")
    if args.N is not None:
        _need(args.N >= 1, "--N", "must be >= 1")
        u = project_low(u, args.N)
    value = float(E.energy_value(spec, u))
    if args.out:
        path = _writable(args.out)
        _write_text(path, _json_text("energy", {"s": spec.s, "value": value, "field": field_to_dict(u)}))
    print(f"{value:.15g}")
    return 0


def cmd_evolve(args) -> int:
    _need(args.N >= 1, "--N", "must be >= 1")
    _need(args.t >= 0, "--t", "must be >= 0")
    _need(args.dt is None or args.dt > 0, "--dt", "must be > 0")
    _need(args.record_every >= 1, "--record-every", "must be >= 1")
    if args.out:
        _writable(args.out)
    if args.snapshots:
        _writable(args.snapshots, "--snapshots")
    u0 = load_field(args.u0, "--u0")
    cfg = FlowConfig(args.N, args.t, args.dt, args.record_every)
    try:
        traj = evolve(u0, cfg)
    except FlowBlowUp as exc:
        raise CliError(EXIT_NUMERIC, f"evolve: {exc}") from None
    diag = traj.diagnostics()
    if args.out:
        header = ["time", *diag]
        rows = [[t] + [diag[k][i] for k in diag] for i, t in enumerate(traj.times)]
        _write_text(args.out, _csv_text("evolve", header, rows))
    if args.snapshots:
        traj.write_snapshots(args.snapshots)
    print(f"t_end = {traj.times[-1]:.15g}, steps = {cfg.steps}, dt = {cfg.step:.6g}")
    print(f"L2 drift = {np.max(np.abs(diag['l2'] - diag['l2'][0])):.3e}")
    modes = np.flatnonzero(u0.coeffs)
    if len(modes) == 1 and args.N < 2 * (modes[0] + 1):
        # a lone mode n with N < 2n never feels the truncated nonlinearity
        n = modes[0] + 1
        x = np.linspace(0, 2 * np.pi, 256, endpoint=False)
        t = traj.times[-1]
        c = u0.coeffs[modes[0]]
        exact = 2 * np.real(c * np.exp(1j * (n * x - n * n * t)))
        err = float(np.max(np.abs(traj.final(x) - exact)))
        print(f"max error vs exact single-mode solution = {err:.3e}")
    return 0


def cmd_gstar_check(args) -> int:
    seed = _seed(args)
    ks = [args.k] if args.k is not None else [1, 2, 3, 4]
    for k in ks:
        _need(1 <= k <= 4, "--k", "must be in 1..4")
    _need(args.N >= 1, "--N", "must be >= 1")
    _need(args.samples >= 1, "--samples", "must be >= 1")
    dt = args.dt if args.dt is not None else 5e-5
    _need(dt > 0, "--dt", "must be > 0")
    t_end = args.t if args.t is not None else 20 * dt
    _need(t_end >= 2 * dt, "--t", "must cover at least two steps")
    if args.out:
        _writable(args.out)
    e = G.GaussianEnsemble(args.s, args.N, seed=seed)
    u = G.sample_batch(e, range(args.samples))
    try:
        traj = evolve(u, FlowConfig(args.N, t_end, dt))
    except FlowBlowUp as exc:
        raise CliError(EXIT_NUMERIC, f"gstar-check: {exc}") from None
    tol = max(1e-6, 10 * traj.times[1] ** 2)
    rows, worst = [], 0.0
    for k in ks:
        spec = E.builtin_energy(k)
        g = GS.g_value(GS.DriftSpec(spec, args.N), traj.stacked())
        d = energy_drift(traj, spec)
        for j, i in enumerate(d.index):
            for s in range(args.samples):
                diff = abs(d.rate[j][s] - g[i][s])
                worst = max(worst, diff)
                rows.append([seed, args.samples, s, k, args.N, traj.times[1], traj.times[i], g[i][s], d.rate[j][s], diff])
    if args.out:
        header = ["seed", "samples", "sample", "k", "N", "dt", "time", "g", "fd", "absdiff"]
        _write_text(args.out, _csv_text("gstar-check", header, rows))
    print(f"max |g - FD| = {worst:.3e} (tolerance {tol:.1e}) -> {'PASS' if worst <= tol else 'FAIL'}")
    return 0


def _decay_worker(job):
    fam_kw, N, q, samples, seed = job
    fam = GS.make_family(**fam_kw)
    return GS.pstar_decay_experiment(fam, [N], q, samples, seed)[0]


def cmd_gstar_decay(args) -> int:
    seed = _seed(args)
    _need(args.q >= 1, "--q", "must be >= 1")
    _need(args.samples >= 2, "--samples", "must be >= 2")
    grid = args.N_grid
    _need(len(grid) > 0 and min(grid) >= 1, "--N-grid", "needs positive entries")
    _need(max(grid) <= GS.MAX_MAJORANT_N, "--N-grid", f"entries must be <= {GS.MAX_MAJORANT_N}")
    fam_kw = {"kind": args.family, "m": args.m, "alphas": args.alphas}
    if args.family == "p3sing":
        fam_kw["variant"] = args.variant
    try:
        GS.make_family(**fam_kw)
    except ValueError as exc:
        flag = "--m" if args.family == "p3sing" else "--alphas"
        raise _range_error(flag, str(exc)) from None
    if args.out:
        _writable(args.out)
    rows = _map(_decay_worker, [(fam_kw, N, args.q, args.samples, seed) for N in grid], args.workers)
    text = _csv_text("gstar-decay", GS.DecayRow.FIELDS, [r.as_list() for r in rows])
    if args.out:
        _write_text(args.out, text)
    sys.stdout.write(text.split("\n", 1)[1])
    return 0


def cmd_identities(args) -> int:
    seed = _seed(args)
    _need(args.N >= 1, "--N", "must be >= 1")
    ms = [args.m] if args.m is not None else [1, 2, 3]
    for m in ms:
        _need(m >= 1, "--m", "must be >= 1")
    _need(args.samples >= max(ms) + 2, "--samples", f"must be >= m + 2 = {max(ms) + 2}")
    if args.out:
        _writable(args.out)
    rows = ID.verification_report([args.N], ms, samples=args.samples, seed=seed, basis=args.basis)
    for r in rows:
        r["seed"] = seed
        r["samples"] = args.samples
    if args.out:
        _write_text(args.out, _json_text("identities", rows))
    for r in rows:
        extra = f" stability={r['stability']:.1e}" if "stability" in r else ""
        print(f"{r['identity']:<20} m={r['m']} N={r['N']} residual={r['residual']:.2e}{extra}")
    return 0


def cmd_series(args) -> int:
    grid = args.N_grid if args.N_grid else ([args.N] if args.N is not None else None)
    if grid is None:
        raise _range_error("--N", "give --N or --N-grid")
    flag = "--N-grid" if args.N_grid else "--N"
    _need(min(grid) >= 1, flag, "must be >= 1")
    if args.sum == "orthspa":
        _need(max(grid) <= SR.MAX_ORTHSPA_N, flag, f"orthspa is limited to N <= {SR.MAX_ORTHSPA_N}")
    if args.out:
        _writable(args.out)
    fn = SR.SUMS[args.sum]
    rows = [[N, fn(N), SR.normalized(fn(N), N)] for N in grid]
    if args.out:
        _write_text(args.out, _csv_text("series", ["N", "value", "value_N_over_lnN"], rows))
    for N, v, _ in rows:
        print(f"{v:.15g}" if len(rows) == 1 else f"{N} {v:.15g}")
    return 0


def _cauchy_worker(job):
    k, N, R, qs, samples, seed, batch = job
    e = G.GaussianEnsemble(k / 2, 2 * N, seed=seed)
    cut = E.CutoffSpec(R)
    diffs, hs, sup = [], [], []
    for u in G.iter_batches(e, samples, batch):
        a = E.density_factors(k, N, cut, u)
        b = E.density_factors(k, 2 * N, cut, u)
        diffs.append(np.abs(a["density"] - b["density"]))
        hs.append(a["h"])
        sup.append(a["density"] > 0)
    d, h, s = np.concatenate(diffs), np.concatenate(hs), np.concatenate(sup)
    p99 = float(np.percentile(np.abs(h[s]), 99)) if s.any() else float("nan")
    out = []
    for q in qs:
        est, se = G.mc_mean(d ** q)
        out.append([k, N, 2 * N, q, R, samples, seed, est, se, float(s.mean()), p99])
    return out


CAUCHY_FIELDS = ["k", "N", "N2", "q", "R", "samples", "seed", "estimate", "stderr", "support_fraction", "h_p99"]


def measure_cauchy(ks, grid, qs, R, samples, seed, workers=1, batch=1000) -> list[list]:
    """Rows of ``E|F_{k,N,R} - F_{k,2N,R}|^q`` with support fraction and ``|h_N|`` 99th percentile."""
    jobs = [(k, N, R, qs, samples, seed, batch) for k in ks for N in grid]
    return [row for rows in _map(_cauchy_worker, jobs, workers) for row in rows]


def cmd_measure_cauchy(args) -> int:
    seed = _seed(args)
    ks = [args.k] if args.k is not None else [2, 3, 4]
    for k in ks:
        _need(2 <= k <= 4, "--k", "must be in 2..4")
    qs = [args.q] if args.q is not None else [1.0, 2.0]
    for q in qs:
        _need(q >= 1, "--q", "must be >= 1")
    _need(args.R > 0, "--R", "must be > 0")
    _need(args.samples >= 2, "--samples", "must be >= 2")
    _need(len(args.N_grid) > 0 and min(args.N_grid) >= 1, "--N-grid", "needs positive entries")
    if args.out:
        _writable(args.out)
    rows = measure_cauchy(ks, args.N_grid, qs, args.R, args.samples, seed, args.workers)
    text = _csv_text("measure-cauchy", CAUCHY_FIELDS, rows)
    if args.out:
        _write_text(args.out, text)
    sys.stdout.write(text.split("\n", 1)[1])
    return 0


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bolab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--config", help="JSON file with default flag values")
        return sp

    sp = add("sample", cmd_sample, "draw fields from mu_{k/2} and write them as JSON")
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--N", type=int, default=16, help="number of stored modes")
    sp.add_argument("--samples", type=int, default=1)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", default="samples", help="output directory")

    sp = add("energy", cmd_energy, "evaluate E_{k/2} on a field")
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--field", help="field JSON file")
    sp.add_argument("--u0", help="built-in field name or path (alternative to --field)")
    sp.add_argument("--energy", help="energy spec JSON file (overrides --k)")
    sp.add_argument("--N", type=int, help="project onto modes <= N first")
    sp.add_argument("--out")

    sp = add("evolve", cmd_evolve, "integrate the truncated flow")
    sp.add_argument("--N", type=int, default=16)
    sp.add_argument("--u0", default="cos1")
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--record-every", type=int, default=1)
    sp.add_argument("--out", help="diagnostics CSV")
    sp.add_argument("--snapshots", help="field snapshots JSON")

    sp = add("gstar-check", cmd_gstar_check, "compare G with finite differences of E along the flow")
    sp.add_argument("--k", type=int, help="1..4 (default: all)")
    sp.add_argument("--N", type=int, default=8)
    sp.add_argument("--s", type=float, default=2.0, help="regularity of the initial-data ensemble")
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--t", type=float)
    sp.add_argument("--out")

    sp = add("gstar-decay", cmd_gstar_decay, "Monte Carlo L^q norm of the star-substituted term versus N")
    sp.add_argument("--family", choices=["p3sing", "p3", "quartic", "multi"], default="p3sing")
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--alphas", type=int_list, default=None, help="derivative orders, e.g. 1,2,2")
    sp.add_argument("--variant", choices=["plain", "hilbert_middle", "hilbert_last"], default="hilbert_middle")
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--N-grid", dest="N_grid", type=int_list, default=[8, 16, 32, 64])
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")

    sp = add("identities", cmd_identities, "verify the cancellation identities")
    sp.add_argument("--N", type=int, default=8)
    sp.add_argument("--m", type=int, help="default: 1, 2 and 3")
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--basis", choices=["printed", "extended"], default="printed")
    sp.add_argument("--out")

    sp = add("series", cmd_series, "evaluate the constrained lattice sums")
    sp.add_argument("--sum", choices=sorted(SR.SUMS), default="prod")
    sp.add_argument("--N", type=int)
    sp.add_argument("--N-grid", dest="N_grid", type=int_list)
    sp.add_argument("--out")

    sp = add("measure-cauchy", cmd_measure_cauchy, "Monte Carlo E|F_N - F_2N|^q for the cutoff density")
    sp.add_argument("--k", type=int, help="2..4 (default: all)")
    sp.add_argument("--q", type=float, help="default: 1 and 2")
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--samples", type=int, default=32000)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--N-grid", dest="N_grid", type=int_list, default=[8, 16, 32, 64])
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")
    return p


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_INPUT, f"--config: cannot read {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError(EXIT_INPUT, "--config: expected a JSON object")
    known = set(vars(args)) - {"func", "command", "config"}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise CliError(EXIT_USAGE, f"--config: unknown flag(s) {', '.join('--' + k.replace('_', '-') for k in unknown)}")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
