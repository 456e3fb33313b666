"""Command-line front end: ``sublog generate|build|query|bench|report``.

Exit status is 0 on success, 1 on a runtime failure and 2 on a usage error
(bad flags, unknown method, unparsable distribution spec).
"""
import argparse
import sys

from . import bench
from .core import binary_search_rank, read_real_file, write_real_file
from .distributions import parse_dist, pdf_bound, sample_sorted
from .errors import SpecParseError, SublogError
from .instrument import OpContext
from .pca import build_pca, load_pca, save_pca
from .rda import load_rda, rda_build, save_rda
from .rds import rds_search

INDEXED = ("pca", "rda")
QUERYABLE = ("pca", "rds", "rda", "binary")


class UsageError(Exception):
    pass


def _csv(kind):
    def parse(text):
        try:
            return tuple(kind(x) for x in text.split(",") if x.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _n_list(text):
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok.startswith("2^"):
            vals.append(1 << int(tok[2:]))
        elif tok:
            vals.append(int(float(tok)))
    return tuple(vals)


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _truthy(v):
    return str(v).strip().lower() in {"1", "true", "yes", "on"}


def _parser():
    p = argparse.ArgumentParser(prog="sublog", description="Learned rank indexes and their benchmark harness.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a sorted array and write it as a real-key file")
    g.add_argument("--dist", default="uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    b = sub.add_parser("build", help="build an index over a real-key file and save it")
    b.add_argument("--method", choices=INDEXED, required=True)
    b.add_argument("--data", required=True)
    b.add_argument("--eps", type=float, default=0.1)
    b.add_argument("--rho", type=float)
    b.add_argument("--ratio", type=float, default=1.0)
    b.add_argument("--dist", help="model used to pick rho when --rho is absent")
    b.add_argument("--out", required=True)

    q = sub.add_parser("query", help="answer one rank query and report its cost")
    q.add_argument("q", type=float)
    q.add_argument("--data", required=True)
    q.add_argument("--method", choices=QUERYABLE, default="binary")
    q.add_argument("--index", help="saved pca/rda index; built on the fly when absent")
    q.add_argument("--dist", default="uniform", help="model for rds")
    q.add_argument("--eps", type=float, default=0.1)
    q.add_argument("--rho", type=float, default=1.0)
    q.add_argument("--ratio", type=float, default=1.0)

    r = sub.add_parser("bench", help="run an experiment sweep and write CSV")
    r.add_argument("--config")
    r.add_argument("--method", type=_csv(str))
    r.add_argument("--dist", type=_csv(str), help="comma list of distribution specs")
    r.add_argument("--data", help="u64 key file; replaces --dist")
    r.add_argument("--n", type=_n_list)
    r.add_argument("--eps", type=float)
    r.add_argument("--rho", type=float)
    r.add_argument("--ratio", type=float)
    r.add_argument("--queries", type=int)
    r.add_argument("--arrays", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--no-verify", dest="verify", action="store_false", default=None)
    r.add_argument("--timing", action="store_true", default=None)

    rp = sub.add_parser("report", help="print a bench CSV as a table")
    rp.add_argument("csv")
    return p


def _split_dists(items):
    """Rejoin ``gauss:mu=0.5,sigma=0.1`` pieces split on the list comma."""
    out = []
    for tok in items:
        if out and "=" in tok and ":" not in tok:
            out[-1] += "," + tok
        else:
            out.append(tok)
    return tuple(out)


def bench_config(args):
    conf = read_config(args.config) if args.config else {}
    conv = {
        "method": _csv(str), "dist": _csv(str), "n": _n_list, "eps": float, "rho": float,
        "ratio": float, "queries": int, "arrays": int, "seed": int, "out": str, "data": str,
        "verify": _truthy, "timing": _truthy,
    }
    merged = {}
    for key, value in conf.items():
        if key not in conv:
            raise UsageError(f"unknown config key {key!r}")
        try:
            merged[key] = conv[key](value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"bad value for {key}: {value!r}") from exc
    for key in conv:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    methods = merged.get("method", ("binary",))
    bad = [m for m in methods if m not in bench.METHODS]
    if bad:
        raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(bench.METHODS)}")
    dists = _split_dists(merged.get("dist", ("uniform",)))
    for d in dists:
        if not merged.get("data"):
            parse_dist(d)
    kw = dict(methods=methods, dists=dists, ns=merged.get("n", (1 << 12,)), data=merged.get("data"),
              eps=merged.get("eps", 0.1), rho=merged.get("rho"), ratio=merged.get("ratio"),
              queries=merged.get("queries", 1000), arrays=merged.get("arrays", 100),
              seed=merged.get("seed", 0), verify=merged.get("verify", True),
              timing=merged.get("timing", False))
    try:
        return bench.ExperimentConfig(**kw), merged.get("out", "bench.csv")
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_generate(args):
    m = parse_dist(args.dist)
    write_real_file(args.out, sample_sorted(m, args.n, args.seed))
    print(f"wrote {args.n} keys to {args.out}")


def cmd_build(args):
    a = read_real_file(args.data)
    if args.method == "pca":
        rho = args.rho
        if rho is None:
            rho = pdf_bound(parse_dist(args.dist))[1] if args.dist else 1.0
        idx = build_pca(a, args.eps, rho)
        save_pca(args.out, idx)
        print(f"pca: k={idx.model.k} delta={idx.model.max_err} size_ints={idx.size_ints}")
    else:
        idx = rda_build(a, args.ratio)
        save_rda(args.out, idx)
        print(f"rda: nodes={idx.node_count} height={idx.height()} size_ints={idx.size_ints}")


def cmd_query(args):
    a = read_real_file(args.data)
    ctx = OpContext()
    m = args.method
    if args.index and m not in INDEXED:
        raise UsageError("--index needs --method pca or rda")
    if m == "binary":
        r = binary_search_rank(a, args.q, 1, a.n, ctx) if a.n else 0
    elif m == "rds":
        r = rds_search(a, args.q, parse_dist(args.dist), ctx)
    elif m == "pca":
        idx = load_pca(args.index, a) if args.index else build_pca(a, args.eps, args.rho)
        r = idx.rank(args.q, ctx)
    else:
        idx = load_rda(args.index, a) if args.index else rda_build(a, args.ratio)
        r = idx.rank(args.q, ctx)
    print(f"rank={r} ops={ctx.mem_ops}")


def cmd_bench(args):
    cfg, out = bench_config(args)
    rows = bench.run_experiment(cfg)
    bench.write_csv(rows, out)
    print(bench.format_table(rows))
    print(f"wrote {len(rows)} rows to {out}")


def cmd_report(args):
    print(bench.format_table(bench.read_csv(args.csv)))


COMMANDS = {"generate": cmd_generate, "build": cmd_build, "query": cmd_query,
            "bench": cmd_bench, "report": cmd_report}


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (UsageError, SpecParseError) as exc:
        print(f"sublog: error: {exc}", file=sys.stderr)
        return 2
    except (SublogError, OSError, ValueError, AssertionError) as exc:
        print(f"sublog: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
