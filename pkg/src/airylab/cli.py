"""Command-line interface: ``airylab <command> [flags]``.

Exit codes: 0 success, 1 failed acceptance checks, 2 usage error, 3 numeric
failure (with a JSON diagnostic on stderr).
"""
import argparse
import concurrent.futures
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__, acceptance, kernels, lpp, scaling, stats, walks
from ._accel import backend
from .environments import EnvKind, sample_line_field, sample_point_field, sample_weight_grids
from .errors import AirylabError, ArgumentError, NumericError

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("simulate", "walks", "arctic", "kernel", "twcdf", "compare", "verify", "plotdata")
SIMULATE_MODELS = ("geometric", "exponential", "sj", "poisson_lines", "brownian")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: str = None
    n: int = None
    beta: float = None
    m: float = None
    k: int = None
    horizon: int = None
    samples: int = None
    seed: int = None
    mesh: str = None
    workers: int = 1
    out: str = None
    format: str = "csv"
    kind: str = None
    suite: str = None
    shear: bool = False
    order: int = None

    def to_dict(self):
        return asdict(self)


# --- parsing -------------------------------------------------------------------------

def parse_mesh(text):
    """``a:b:step`` as an inclusive float grid."""
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except (ValueError, AttributeError):
        raise UsageError("--mesh must look like a:b:step") from None
    if not (step > 0 and b >= a and math.isfinite(a) and math.isfinite(b)):
        raise UsageError("--mesh needs step > 0 and a <= b")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    if count > 100000:
        raise UsageError("--mesh has too many points")
    return np.round(a + step * np.arange(count), 12)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model")
    common.add_argument("--n", type=int)
    common.add_argument("--beta", type=float)
    common.add_argument("--m", type=float)
    common.add_argument("--k", type=int)
    common.add_argument("--horizon", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--mesh")
    common.add_argument("--workers", type=int)
    common.add_argument("--out")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    p = argparse.ArgumentParser(prog="airylab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version="airylab " + __version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="grids, passage profiles, rescaled lines")
    w = sub.add_parser("walks", parents=[common], help="nonintersecting walk ensembles")
    w.add_argument("--shear", action="store_true", help="shear geometric walks to Bernoulli")
    sub.add_parser("arctic", parents=[common], help="arctic curve and derivatives")
    kp = sub.add_parser("kernel", parents=[common], help="kernel values on a query grid")
    kp.add_argument("--kind", choices=("prelimit", "conjugated", "airy"), default="airy")
    kp.add_argument("--s", type=float, default=0.0)
    kp.add_argument("--t", type=float, default=0.0)
    tp = sub.add_parser("twcdf", parents=[common], help="Tracy-Widom GUE CDF table")
    tp.add_argument("--order", type=int, default=40)
    sub.add_parser("compare", parents=[common], help="edge sample against Tracy-Widom")
    vp = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    vp.add_argument("--suite", choices=("small", "full"), default="full")
    sub.add_parser("plotdata", parents=[common], help="trajectories plus arctic overlay")
    return p


def _join_negative_values(argv):
    """``--mesh -1:1:0.5`` would read the value as a flag; glue it on with ``=``."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in ("--mesh", "--s", "--t") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(a + "=" + argv[i + 1])
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _config(ns):
    d = {k: getattr(ns, k, None) for k in RunConfig.__dataclass_fields__}
    d["command"] = ns.command
    d["shear"] = bool(getattr(ns, "shear", False))
    workers = ns.workers
    if workers is None:
        env = os.environ.get("AIRYLAB_WORKERS")
        try:
            workers = int(env) if env else 1
        except ValueError:
            raise UsageError("AIRYLAB_WORKERS must be an integer") from None
    d["workers"] = workers
    cfg = RunConfig(**d)
    if cfg.workers < 1:
        raise UsageError("--workers must be positive")
    for name in ("n", "k", "horizon", "samples"):
        v = getattr(cfg, name)
        if v is not None and v < 1:
            raise UsageError("--%s must be positive" % name)
    for name in ("beta", "m"):
        v = getattr(cfg, name)
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise UsageError("--%s must be positive" % name)
    return cfg


def _need(cfg, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageError("%s requires %s" % (cfg.command, ", ".join("--" + n for n in missing)))


# --- output --------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    return str(v)


def table_text(header, rows, fmt):
    if fmt == "json":
        return json.dumps([dict(zip(header, [_py(v) for v in r])) for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _py(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def _emit(text, cfg, stdout):
    if cfg.out:
        with open(cfg.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def manifest(cfg, outputs):
    return {"airylab_version": __version__, "backend": backend(), "config": cfg.to_dict(),
            "outputs": outputs}


def _write_manifest(cfg, outputs, stderr):
    text = json.dumps(manifest(cfg, outputs), sort_keys=True)
    if cfg.out:
        with open(cfg.out + ".manifest.json", "w", newline="\n") as fh:
            fh.write(text + "\n")
    else:
        stderr.write(text + "\n")


# --- replica-parallel map -----------------------------------------------------------------

def _blocks(total, workers):
    size = max(1, math.ceil(total / (workers * 4)))
    return [(s, min(size, total - s)) for s in range(0, total, size)]


def parallel_map(fn, blocks, workers):
    """Apply ``fn(start, count)`` to every block; results come back in block order."""
    if workers <= 1 or len(blocks) <= 1:
        return [fn(*b) for b in blocks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*blocks)))


# --- simulate -------------------------------------------------------------------------------

def _discrete_env(model, beta):
    if model == "geometric":
        return EnvKind.geometric(beta)
    if model == "sj":
        return EnvKind.bernoulli_sj(beta)
    return EnvKind.exponential()


def _line_rows(r, obj, params, t_mesh):
    """``(replica, line, time, value)`` rows, rescaled when ``params`` is given."""
    if params is not None:
        res = scaling.rescale_ensemble(obj, params, np.array(t_mesh))
        times, vals = res.t, res.lines
    elif isinstance(obj, walks.WalkEnsemble):
        times, vals = obj.times, obj.paths
    else:
        times, vals = obj.coords, obj.differences()
    return [(r, j + 1, _py(times[i]), _py(vals[j, i])) for j in range(vals.shape[0])
            for i in range(len(times))]


@dataclass(frozen=True)
class _SimJob:
    model: str
    n: int
    cols: int
    k: int
    seed: int
    beta: float
    t_mesh: tuple = ()
    m_ref: float = None

    def __call__(self, start, count):
        params = None
        if self.t_mesh:
            params = scaling.scaling_params(self.model, self.n, self.beta, self.m_ref)
        out = []
        for r in range(start, start + count):
            out.extend(_line_rows(r, self._sample(r), params, self.t_mesh))
        return out

    def _sample(self, r):
        mesh = np.arange(0, self.cols + 1, dtype=float)
        if self.model in ("geometric", "exponential", "sj"):
            env = _discrete_env(self.model, self.beta)
            W = sample_weight_grids(env, self.n, self.cols, self.seed, 1, r)[0]
            if self.model == "sj":
                return walks.sj_walks(W, self.k)
            return lpp.passage_profile_rsk(W, self.k)
        if self.model == "poisson_lines":
            f = sample_point_field(EnvKind.poisson_lines(), (0.0, float(self.cols)), self.seed,
                                   n_lines=self.n, replica=r)
        else:
            f = sample_line_field(EnvKind.brownian_lines(), self.n, float(self.cols), 1.0 / 16,
                                  self.seed, replica=r)
        return lpp.passage_profile_continuous(f, self.k, mesh)


def _rescale_span(cfg, model, beta):
    """Mesh and number of time steps needed to rescale around ``--m``."""
    t_mesh = tuple(float(t) for t in parse_mesh(cfg.mesh))
    if cfg.m != int(cfg.m):
        raise UsageError("--m must be an integer time when rescaling")
    p = scaling.scaling_params(model, cfg.n, beta, cfg.m)
    if cfg.m + math.floor(p.tau * min(t_mesh)) < 0:
        raise UsageError("--mesh reaches before time 0")
    return t_mesh, int(cfg.m + math.floor(p.tau * max(t_mesh)))


def _collect(job, cfg):
    blocks = parallel_map(job, _blocks(cfg.samples, cfg.workers), cfg.workers)
    return [row for block in blocks for row in block]


def cmd_simulate(cfg, stdout, stderr):
    _need(cfg, "model", "n", "m", "samples", "seed")
    model = cfg.model.lower()
    if model not in SIMULATE_MODELS:
        raise UsageError("simulate supports models %s" % ", ".join(SIMULATE_MODELS))
    beta = cfg.beta if cfg.beta is not None else 1.0
    k = cfg.k or 1
    if k > cfg.n:
        raise UsageError("--k cannot exceed --n")
    t_mesh, cols = (), int(cfg.m)
    if cfg.mesh:
        t_mesh, cols = _rescale_span(cfg, model, beta)
    if cols < 1:
        raise UsageError("need at least one time step")
    rows = _collect(_SimJob(model, cfg.n, cols, k, cfg.seed, beta, t_mesh, cfg.m), cfg)
    header = ["replica", "line", "t" if t_mesh else "time", "value"]
    _emit(table_text(header, rows, cfg.format), cfg, stdout)
    return {"rows": len(rows)}


# --- walks ----------------------------------------------------------------------------------

@dataclass(frozen=True)
class _WalkJob:
    model: str
    n: int
    beta: float
    horizon: int
    seed: int
    t_mesh: tuple = ()
    m_ref: float = None

    def __call__(self, start, count):
        params = None
        if self.t_mesh:
            params = scaling.scaling_params(self.model, self.n, self.beta, self.m_ref)
        # sheared walks need n extra geometric steps to reach the horizon
        extra = self.n if self.model == "bernoulli" else 0
        P = walks.ni_geometric_batch(self.n, self.beta, self.horizon + extra, self.seed,
                                     count, start)
        rows = []
        for i, paths in enumerate(P):
            ens = walks.WalkEnsemble("geometric", self.beta, np.arange(len(paths[0])), paths,
                                     self.seed)
            if self.model == "bernoulli":
                s, X = walks.shear_paths(paths)
                keep = s <= self.horizon
                ens = walks.WalkEnsemble("bernoulli", self.beta, s[keep], X[:, keep], self.seed)
            rows.extend(_line_rows(start + i, ens, params, self.t_mesh))
        return rows


def cmd_walks(cfg, stdout, stderr):
    _need(cfg, "n", "samples", "seed")
    model = "bernoulli" if cfg.shear else (cfg.model or "geometric").lower()
    if model not in ("geometric", "bernoulli"):
        raise UsageError("walks supports models geometric and bernoulli")
    beta = cfg.beta if cfg.beta is not None else 1.0
    t_mesh, horizon = (), cfg.horizon
    if cfg.mesh:
        _need(cfg, "m")
        t_mesh, horizon = _rescale_span(cfg, model, beta)
    if horizon is None or horizon < 1:
        raise UsageError("walks requires --horizon or --m with --mesh")
    rows = _collect(_WalkJob(model, cfg.n, beta, horizon, cfg.seed, t_mesh, cfg.m), cfg)
    header = ["replica", "walk_index", "t" if t_mesh else "time", "value"]
    _emit(table_text(header, rows, cfg.format), cfg, stdout)
    return {"rows": len(rows)}


# --- arctic ----------------------------------------------------------------------------------

def arctic_rows(model, n, beta, ms):
    rows = []
    for m in ms:
        g, g1, g2 = scaling.arctic_curve(model, n, beta, m)
        rows.append((m, g, g1, g2))
    return rows


def cmd_arctic(cfg, stdout, stderr):
    _need(cfg, "model", "n")
    if cfg.m is None and cfg.mesh is None:
        raise UsageError("arctic requires --m or --mesh")
    beta = cfg.beta if cfg.beta is not None else 1.0
    ms = parse_mesh(cfg.mesh) if cfg.mesh else [cfg.m]
    if any(m <= 0 for m in ms):
        raise UsageError("arctic times must be positive")
    rows = arctic_rows(cfg.model, cfg.n, beta, ms)
    _emit(table_text(["m", "g", "g1", "g2"], rows, cfg.format), cfg, stdout)
    return {"rows": len(rows)}


# --- kernel --------------------------------------------------------------------------------

def cmd_kernel(cfg, stdout, stderr, s=0.0, t=0.0, kind="airy"):
    grid = parse_mesh(cfg.mesh) if cfg.mesh else np.array([0.0])
    records = []
    if kind == "airy":
        for x in grid:
            for y in grid:
                v, err = kernels.airy_kernel(x, s, y, t, with_error=True)
                records.append({"query": {"x": x, "s": s, "y": y, "t": t}, "value": v,
                                "error_estimate": err, "quadrature_config": {"contour": "airy"}})
    else:
        _need(cfg, "n", "m")
        beta = cfg.beta if cfg.beta is not None else 1.0
        if kind == "prelimit":
            sym = kernels.LatticeSymbols(cfg.n, beta)
            quad = kernels.QuadConfig(mode="circle")
            for x in grid:
                for y in grid:
                    if x != int(x) or y != int(y):
                        raise UsageError("prelimit queries need integer --mesh points")
                    q = kernels.KernelQuery(int(x), int(cfg.m + s), int(y), int(cfg.m + t))
                    kv = kernels.prelimit_kernel(sym, q, quad)
                    records.append({"query": q.to_dict(), "value": kv.value.real,
                                    "error_estimate": kv.error,
                                    "quadrature_config": quad.to_dict()})
        else:
            if cfg.m != int(cfg.m):
                raise UsageError("--m must be an integer time")
            p = scaling.scaling_params("bernoulli", cfg.n, beta, cfg.m)
            sym = kernels.symbols_for(p)
            quad = kernels.QuadConfig(eta=kernels.kernel_eta(sym, p))
            for x in grid:
                for y in grid:
                    q = kernels.KernelQuery.from_limit(p, x, s, y, t)
                    v, err = kernels.conjugated_kernel(sym, p, q, quad)
                    records.append({"query": q.to_dict(), "value": v, "error_estimate": err,
                                    "quadrature_config": quad.to_dict()})
    if cfg.format == "json":
        text = json.dumps(records, indent=1, default=_py) + "\n"
    else:
        cols = [c for c in ("xn", "sn", "yn", "tn", "x", "s", "y", "t")
                if records and records[0]["query"].get(c) is not None]
        rows = [[r["query"][c] for c in cols] + [r["value"], r["error_estimate"]]
                for r in records]
        text = table_text(cols + ["value", "error_estimate"], rows, "csv")
    _emit(text, cfg, stdout)
    return {"rows": len(records)}


# --- twcdf, compare ---------------------------------------------------------------------------

def cmd_twcdf(cfg, stdout, stderr, order=40):
    grid = parse_mesh(cfg.mesh) if cfg.mesh else parse_mesh("-6:4:0.5")
    fc = stats.FredholmConfig(order=order)
    rows = [(s, stats.tracy_widom_cdf(float(s), fc)) for s in grid]
    _emit(table_text(["s", "F2"], rows, cfg.format), cfg, stdout)
    return {"rows": len(rows)}


def cmd_compare(cfg, stdout, stderr):
    _need(cfg, "n", "samples", "seed")
    model = (cfg.model or "geometric").lower()
    if model not in ("geometric", "exponential"):
        raise UsageError("compare supports models geometric and exponential")
    if cfg.samples < 100:
        raise UsageError("compare needs at least 100 samples")
    beta = cfg.beta if cfg.beta is not None else 1.0
    law = stats.lpp_edge_sample(model, cfg.n, cfg.seed, cfg.samples, beta=beta)
    res = stats.empirical_compare(law, stats.tracy_widom())
    threshold = 0.1
    text = stats.report("ks_vs_tracy_widom", res["ks"], threshold, res["ks"] <= threshold,
                        cvm=res["cvm"], model=model, n=cfg.n, samples=cfg.samples,
                        mean=law.mean(), var=law.var()) + "\n"
    _emit(text, cfg, stdout)
    return {"ks": res["ks"]}


# --- verify ------------------------------------------------------------------------------------

def cmd_verify(cfg, stdout, stderr, suite="full"):
    checks = acceptance.run(small=(suite == "small"), echo=lambda s: stdout.write(s + "\n"))
    if cfg.out:
        with open(cfg.out, "w", newline="\n") as fh:
            json.dump([c.to_dict() for c in checks], fh, indent=1, sort_keys=True)
            fh.write("\n")
    failed = [c.number for c in checks if not c.passed]
    return {"failed": failed}


# --- plot data -------------------------------------------------------------------------------

def emit_plotdata(ensemble, overlay_model, n, beta, times):
    """Trajectory rows and arctic overlay rows on a shared time axis.

    ``ensemble`` is a :class:`~airylab.walks.WalkEnsemble` or None. Returns
    ``(trajectory_csv, overlay_csv)``; the trajectory table is empty (header
    only) when there is no ensemble.
    """
    kind = {"geometric": "geometric", "bernoulli": "bernoulli"}.get(overlay_model)
    if kind is None:
        raise ArgumentError("overlay model must be geometric or bernoulli")
    times = np.asarray(times)
    traj = []
    if ensemble is not None:
        if ensemble.model != kind:
            raise ArgumentError("ensemble model %s does not match overlay %s"
                                    % (ensemble.model, kind))
        if not np.array_equal(np.asarray(ensemble.times), times):
            raise ArgumentError("ensemble and overlay use different time axes")
        for j in range(ensemble.n):
            for i, t in enumerate(times):
                traj.append((int(t), j + 1, int(ensemble.paths[j, i])))
    # the curve is defined for positive times only
    over = arctic_rows(kind, n, beta, [int(t) for t in times if t > 0])
    return (table_text(["time", "walk_index", "value"], traj, "csv"),
            table_text(["time", "g", "g1", "g2"], over, "csv"))


def cmd_plotdata(cfg, stdout, stderr):
    _need(cfg, "n", "horizon", "seed", "out")
    model = (cfg.model or "geometric").lower()
    if model not in ("geometric", "bernoulli"):
        raise UsageError("plotdata supports models geometric and bernoulli")
    beta = cfg.beta if cfg.beta is not None else 1.0
    if model == "geometric":
        ens = walks.sample_ni_geometric(cfg.n, beta, cfg.horizon, cfg.seed)
    else:
        P = walks.ni_geometric_batch(cfg.n, beta, cfg.horizon + cfg.n, cfg.seed, 1)[0]
        s, X = walks.shear_paths(P)
        keep = s <= cfg.horizon
        ens = walks.WalkEnsemble("bernoulli", beta, s[keep], X[:, keep], cfg.seed)
    traj, over = emit_plotdata(ens, model, cfg.n, beta, ens.times)
    os.makedirs(cfg.out, exist_ok=True)
    paths = [os.path.join(cfg.out, "trajectories.csv"), os.path.join(cfg.out, "arctic.csv")]
    for p, text in zip(paths, (traj, over)):
        with open(p, "w", newline="\n") as fh:
            fh.write(text)
    return {"files": paths}


# --- entry point --------------------------------------------------------------------------------

def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = _config(ns)
        if ns.command == "kernel":
            cfg.kind = ns.kind
            info = cmd_kernel(cfg, stdout, stderr, ns.s, ns.t, ns.kind)
        elif ns.command == "twcdf":
            cfg.order = ns.order
            info = cmd_twcdf(cfg, stdout, stderr, ns.order)
        elif ns.command == "verify":
            cfg.suite = ns.suite
            info = cmd_verify(cfg, stdout, stderr, ns.suite)
        else:
            info = globals()["cmd_" + ns.command](cfg, stdout, stderr)
    except UsageError as exc:
        stderr.write("airylab: usage error: %s\n" % exc)
        return EXIT_USAGE
    except NumericError as exc:
        stderr.write(json.dumps({"error": "numeric", "message": str(exc),
                                 "estimate": exc.estimate}) + "\n")
        return EXIT_NUMERIC
    except AirylabError as exc:
        stderr.write("airylab: usage error: %s: %s\n" % (type(exc).__name__, exc))
        return EXIT_USAGE
    _write_manifest(cfg, info, stderr)
    if ns.command == "verify" and info["failed"]:
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
