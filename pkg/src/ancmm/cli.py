"""Command-line front end.

Exit codes: 0 on success, 1 on a usage or input error, 2 when a numerical
routine fails to converge (any partial result is still written).

Every subcommand accepts ``--config FILE`` holding ``key=value`` lines whose
keys are long flag names (``max-iter`` and ``max_iter`` both work); flags
given on the command line override the file.
"""

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data_io
from .clustering import AncmmConfig, run
from .evaluation import evaluate, kmeans, knn_gaussian_affinity, spectral_baseline
from .exceptions import AncmmError, ConfigError, InvalidOmega, NonConvergence
from .marcus import (
    check_total_support,
    count_flops_per_iteration,
    degree_normalize_iterate,
    marcus_map,
)
from .ot_bridge import entropic_plan, plan_symmetry_check

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGENCE = 0, 1, 2
NO_SUPPORT = "no total support: no diagonal scaling makes this matrix doubly stochastic"
METHODS = ("ancmm", "can", "kmeans", "sc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for non-convergence here
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


@dataclass
class CliConfig:
    command: str
    options: dict = field(default_factory=dict)


def read_config(path):
    """Parse a flat ``key=value`` file; blank lines and ``#`` comments are skipped."""
    values = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        values[key.replace("-", "_")] = value
    return values


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _sizes(text):
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not sizes or min(sizes) < 2:
        raise argparse.ArgumentTypeError("sizes must be integers >= 2")
    return sizes


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="key=value file of defaults for this subcommand's flags")
    common.add_argument("-v", "--verbose", action="store_true", help="log per-iteration progress")

    parser = _Parser(prog="ancmm", description="Doubly stochastic adaptive-neighbours clustering.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cluster", parents=[common], help="cluster a CSV table",
                       description="Cluster a CSV table and export the graph, labels and traces.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", metavar="CSV", help="numeric CSV with a header row")
    src.add_argument("--dataset", choices=sorted(data_io.BUILTIN), help="bundled benchmark table")
    p.add_argument("--clusters", type=_positive_int, required=True, help="number of clusters c")
    p.add_argument("--method", choices=METHODS, default="ancmm", help="clustering method (default ancmm)")
    p.add_argument("--k", type=_positive_int, default=5, help="neighbours per row (default 5)")
    p.add_argument("--lambda0", type=_positive_float, default=None,
                   help="initial rank penalty (default: the selected alpha)")
    p.add_argument("--max-outer", type=_positive_int, default=50, help="outer iteration cap (default 50)")
    p.add_argument("--preprocess", choices=("zscore", "minmax", "none"), default="zscore",
                   help="per-feature scaling (default zscore)")
    p.add_argument("--label-column", default=None,
                   help="ground-truth column name or index (default: a column named class or label)")
    p.add_argument("--no-header", action="store_true", help="the CSV has no header row")
    p.add_argument("--knn", type=_positive_int, default=10, help="neighbours for the sc baseline (default 10)")
    p.add_argument("--restarts", type=_positive_int, default=30,
                   help="k-means restarts for kmeans and sc (default 30)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", metavar="PREFIX", default=None,
                   help="output prefix (default: the input path without suffix plus .METHOD)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("normalize", parents=[common], help="balance a symmetric matrix",
                       description="Scale a symmetric nonnegative matrix to doubly stochastic.")
    p.add_argument("--matrix", metavar="CSV", required=True, help="headerless square matrix")
    p.add_argument("--algo", choices=("marcus", "degree"), default="marcus",
                   help="marcus scaling or iterated degree normalisation (default marcus)")
    p.add_argument("--tol", type=_positive_float, default=1e-10, help="balance tolerance (default 1e-10)")
    p.add_argument("--max-iter", type=_positive_int, default=10_000, help="iteration cap (default 10000)")
    p.add_argument("--out", metavar="CSV", default=None,
                   help="output path (default: MATRIX stem plus .ALGO.csv)")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("compare-ot", parents=[common], help="compare with entropic transport",
                       description="Compare marcus scaling with the entropic transport plan.")
    p.add_argument("--matrix", metavar="CSV", required=True, help="headerless square matrix")
    p.add_argument("--omega", type=float, default=1.0, help="kernel exponent, must be > 0 (default 1.0)")
    p.add_argument("--tol", type=_positive_float, default=1e-10, help="solver tolerance (default 1e-10)")
    p.add_argument("--max-iter", type=_positive_int, default=10_000, help="iteration cap (default 10000)")
    p.set_defaults(func=cmd_compare_ot)

    p = sub.add_parser("toy", parents=[common], help="two-moons comparison",
                       description="Two-moons run of ancmm and can with a metric table.")
    p.add_argument("--n", type=int, default=200, help="number of points, even (default 200)")
    p.add_argument("--noise", type=float, default=0.13, help="noise standard deviation (default 0.13)")
    p.add_argument("--seed", type=int, default=1, help="generator seed (default 1)")
    p.add_argument("--k", type=_positive_int, default=5, help="neighbours per row (default 5)")
    p.add_argument("--out", metavar="PREFIX", default="toy", help="output prefix (default toy)")
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("bench", parents=[common], help="time the two balancing iterations",
                       description="Time marcus scaling against degree normalisation.")
    p.add_argument("--sizes", type=_sizes, default=[100, 200, 400, 800],
                   help="comma-separated matrix sizes (default 100,200,400,800)")
    p.add_argument("--repeats", type=_positive_int, default=5, help="timed runs per size (default 5)")
    p.add_argument("--seed", type=int, default=0, help="seed for the random test matrices (default 0)")
    p.add_argument("--out", metavar="CSV", default=None, help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_bench)
    return parser


def _apply_config(parser, argv):
    """Re-parse ``argv`` with defaults taken from its ``--config`` file, if any."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    args, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    if not args.config or args.command not in choices:
        return parser.parse_args(argv)
    try:
        values = read_config(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    sub = choices[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, text in values.items():
        action = actions.get(key)
        if action is None:
            raise ConfigError(f"{args.config}: unknown key {key!r} for {args.command}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = text.lower() in ("1", "true", "yes", "on")
            continue
        try:
            value = action.type(text) if action.type else text
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"{args.config}: bad value for {key}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise ConfigError(f"{args.config}: {key} must be one of {sorted(action.choices)}")
        defaults[key] = value
        action.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def parse_args(argv):
    parser = build_parser()
    args = _apply_config(parser, argv)
    return CliConfig(command=args.command, options=vars(args))


# ---------------------------------------------------------------- cluster


def _load_table(opts):
    if opts["dataset"]:
        return data_io.load_builtin(opts["dataset"])
    if not opts["input"]:
        raise UsageError("cluster: one of --input or --dataset is required")
    path = Path(opts["input"])
    label = opts["label_column"]
    has_header = not opts["no_header"]
    if label is None and has_header:
        with open(path, encoding="utf-8") as fh:
            header = [h.strip() for h in fh.readline().split(",")]
        label = next((h for h in header if h.lower() in ("class", "label")), None)
    return data_io.load_csv(path, has_header=has_header, label_column=label)


def _default_prefix(opts, suffix):
    if opts["dataset"]:
        return f"{opts['dataset']}.{suffix}"
    return str(Path(opts["input"]).with_suffix("")) + f".{suffix}"


def cmd_cluster(opts):
    data = data_io.preprocess(_load_table(opts), opts["preprocess"])
    c, method = opts["clusters"], opts["method"]
    if not 1 <= c < data.n:
        raise ConfigError(f"--clusters must satisfy 1 <= c < n (c={c}, n={data.n})")
    prefix = opts["out"] or _default_prefix(opts, method)
    config = {
        "method": method, "clusters": c, "preprocess": opts["preprocess"], "seed": opts["seed"],
        "source": data.provenance, "n": data.n, "d": data.d,
    }
    record = data_io.RunRecord(config=config)
    graph, labels, code, status = None, None, EXIT_OK, "converged"
    t0 = time.perf_counter()

    if method in ("ancmm", "can"):
        cfg = AncmmConfig(c=c, k=opts["k"], lambda0=opts["lambda0"], max_outer=opts["max_outer"],
                          seed=opts["seed"])
        cfg.validate(data.n)
        config.update(cfg.as_dict())
        try:
            result = run(data.X, cfg, doubly_stochastic=(method == "ancmm"))
        except NonConvergence as exc:
            print(f"error: {exc}", file=sys.stderr)
            config["status"] = f"failed: {exc}"
            data_io.export_results(record, None, prefix)
            return EXIT_NONCONVERGENCE
        st = result.state
        graph, labels = result.graph, result.labels.labels
        record.objective_trace = st.objective_trace
        record.epsilon_trace = st.epsilon_trace
        record.component_counts = st.component_counts
        config.update(iterations=result.iterations, alpha=st.alpha, final_lambda=st.lam)
        status = result.message
        if not (result.converged and result.rank_satisfied):
            code = EXIT_NONCONVERGENCE
    elif method == "kmeans":
        labels = kmeans(data.X, c, restarts=opts["restarts"], seed=opts["seed"])
    else:
        labels = spectral_baseline(data.X, c, knn=opts["knn"], seed=opts["seed"],
                                   restarts=opts["restarts"])
        graph = knn_gaussian_affinity(data.X, opts["knn"])
        config["knn"] = opts["knn"]
    elapsed = time.perf_counter() - t0

    config["status"] = status
    components = len(np.unique(labels))
    config["components"] = components
    if data.labels is not None:
        record.metrics = evaluate(labels, data.labels).as_dict()
    paths = data_io.export_results(record, graph, prefix, labels=labels)

    print(f"method={method} components={components} status={status} time={elapsed:.3f}s")
    if record.metrics:
        m = record.metrics
        print(f"ACC={m['acc']:.4f} NMI={m['nmi']:.4f} PUR={m['pur']:.4f}")
    for kind in sorted(paths):
        print(f"wrote {kind}: {paths[kind]}")
    return code


# -------------------------------------------------------------- normalize


def _load_square(path):
    S = data_io.load_matrix(path)
    if S.shape[0] != S.shape[1]:
        raise ConfigError(f"{path}: matrix must be square, got {S.shape[0]}x{S.shape[1]}")
    return S


def cmd_normalize(opts):
    S = _load_square(opts["matrix"])
    if np.all(S >= 0) and not check_total_support(S):
        print(f"error: {NO_SUPPORT}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    try:
        if opts["algo"] == "marcus":
            M, _, report = marcus_map(S, tol=opts["tol"], max_iter=opts["max_iter"])
        else:
            M, report = degree_normalize_iterate(S, tol=opts["tol"], max_iter=opts["max_iter"])
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    out = opts["out"] or str(Path(opts["matrix"]).with_suffix("")) + f".{opts['algo']}.csv"
    data_io.atomic_write_text(out, data_io.matrix_to_csv(M))
    print(f"algo={opts['algo']} iterations={report.iterations} residual={report.residual:.3e}")
    print(f"wrote {out}")
    return EXIT_OK


# ------------------------------------------------------------- compare-ot


def cmd_compare_ot(opts):
    omega = opts["omega"]
    if not (np.isfinite(omega) and omega > 0):
        raise InvalidOmega(f"--omega must be positive, got {omega}")
    S = _load_square(opts["matrix"])
    try:
        t0 = time.perf_counter()
        M, _, mrep = marcus_map(S, tol=opts["tol"], max_iter=opts["max_iter"])
        t_marcus = time.perf_counter() - t0
        t0 = time.perf_counter()
        plan = entropic_plan(S, omega=omega, tol=opts["tol"], max_iter=opts["max_iter"])
        t_ot = time.perf_counter() - t0
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        if not check_total_support(S):
            print(f"error: {NO_SUPPORT}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    diff = float(np.max(np.abs(M - plan.P)))
    print(f"omega={omega:g} max_abs_diff={diff:.3e}")
    print(f"marcus: iterations={mrep.iterations} time={t_marcus:.6f}s")
    print(f"ot:     iterations={plan.iterations} time={t_ot:.6f}s "
          f"symmetry={plan_symmetry_check(plan):.3e}")
    return EXIT_OK


# -------------------------------------------------------------------- toy


def cmd_toy(opts):
    if opts["n"] < 2 or opts["n"] % 2:
        raise ConfigError(f"--n must be even and >= 2, got {opts['n']}")
    if opts["noise"] < 0:
        raise ConfigError("--noise must be >= 0")
    data = data_io.two_moons(opts["n"], opts["noise"], opts["seed"])
    prefix = opts["out"]
    cfg = AncmmConfig(c=2, k=opts["k"])
    cfg.validate(data.n)
    data_io.atomic_write_text(prefix + ".points.csv", "x,y,label\n" + "".join(
        f"{data_io.FLOAT_FMT % x},{data_io.FLOAT_FMT % y},{int(t)}\n"
        for (x, y), t in zip(data.X, data.labels)))
    rows = ["method,ACC,NMI,PUR,components,iterations"]
    code = EXIT_OK
    for method in ("can", "ancmm"):
        try:
            result = run(data.X, cfg, doubly_stochastic=(method == "ancmm"))
        except NonConvergence as exc:
            print(f"error: {method}: {exc}", file=sys.stderr)
            code = EXIT_NONCONVERGENCE
            continue
        st = result.state
        rep = evaluate(result.labels.labels, data.labels)
        record = data_io.RunRecord(
            config={**cfg.as_dict(), "method": method, "status": result.message,
                    "source": data.provenance},
            metrics=rep.as_dict(), objective_trace=st.objective_trace,
            epsilon_trace=st.epsilon_trace, component_counts=st.component_counts)
        data_io.export_results(record, result.graph, f"{prefix}.{method}",
                               labels=result.labels.labels)
        rows.append(f"{method},{rep.acc:.4f},{rep.nmi:.4f},{rep.pur:.4f},"
                    f"{result.labels.count},{result.iterations}")
        if not result.converged:
            code = EXIT_NONCONVERGENCE
    table = "\n".join(rows) + "\n"
    data_io.atomic_write_text(prefix + ".table.csv", table)
    print(table, end="")
    return code


# ------------------------------------------------------------------ bench


def _bench_matrix(n, rng):
    A = rng.random((n, n))
    return A + A.T


def cmd_bench(opts):
    rng = np.random.default_rng(opts["seed"])
    lines = ["algo,n,add,mul,div,sqrt,mul_ratio,iterations,sec_per_iter_mean,sec_per_iter_std"]
    for n in opts["sizes"]:
        S = _bench_matrix(n, rng)
        f_marcus, f_degree = count_flops_per_iteration(n)
        ratio = f_degree.mul / f_marcus.mul
        for name, fn, flops in (
            ("marcus", lambda: marcus_map(S)[2], f_marcus),
            ("degree", lambda: degree_normalize_iterate(S)[1], f_degree),
        ):
            per_iter = []
            iterations = 0
            for _ in range(opts["repeats"]):
                t0 = time.perf_counter()
                report = fn()
                per_iter.append((time.perf_counter() - t0) / max(report.iterations, 1))
                iterations = report.iterations
            lines.append(
                f"{name},{n},{flops.add},{flops.mul},{flops.div},{flops.sqrt},"
                f"{ratio if name == 'degree' else 1.0:.1f},{iterations},"
                f"{np.mean(per_iter):.6e},{np.std(per_iter):.6e}"
            )
    text = "\n".join(lines) + "\n"
    if opts["out"]:
        data_io.atomic_write_text(opts["out"], text)
        print(f"wrote {opts['out']}")
    else:
        print(text, end="")
    return EXIT_OK


# ------------------------------------------------------------------- main


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cli = parse_args(argv)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    opts = cli.options
    logging.basicConfig(level=logging.DEBUG if opts.get("verbose") else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return opts["func"](opts)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (AncmmError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
