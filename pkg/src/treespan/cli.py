"""Command line front end.

Five subcommands: certify a host's expansion, decompose a tree and
report which structural branch it takes, embed a tree into a host,
cover a window with fixed-length paths, and run a batch experiment
from a config file.  All outputs are plain text or JSON on stdout;
exit code 0 means the requested check or construction succeeded.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import (
    NotRegular,
    PreconditionViolated,
    SizeLimitExceeded,
    TreespanError,
)
from .experiment import ExperimentConfig, run_experiment
from .graphs import VertexSet, read_edge_list
from .hosts import generate_host
from .path_cover import path_cover, verify_path_cover
from .pipeline import DESK, STRICT, PipelineParams, _induced_tree, embed_spanning_tree
from .spectral import (
    check_expands_into_exact,
    eigen_expander_certificate,
    falsify_expansion_sampled,
)
from .trees import decompose_levels, leaf_or_barepath, read_parent_array, star_or_caterpillar

EXACT_BUDGET = 200_000


def _host_from_args(args, seed):
    if args.host:
        return read_edge_list(args.host)
    if args.gnp:
        n, p = args.gnp
        return generate_host({"kind": "gnp", "n": int(n), "p": float(p)}, seed)
    if args.regular:
        n, d = args.regular
        return generate_host({"kind": "regular", "n": int(n), "d": int(d)}, seed)
    raise TreespanError("no host given; use --host, --gnp or --regular")


def _cmd_certify(args):
    g = _host_from_args(args, args.seed)
    w = VertexSet.from_iter(g.n, range(g.n))
    d = args.d if args.d is not None else 5.0 * args.gamma * g.n
    print(f"host: n={g.n} edges={g.edge_total}")
    try:
        cert = eigen_expander_certificate(g)
        if cert:
            p = cert.params
            print(f"eigen: lambda={p['lambda']:.6f} d1={p['d1']:.4f} m={p['m']}")
        else:
            print(f"eigen: rejected ({cert.reason})")
    except NotRegular:
        print("eigen: skipped (host not regular)")
    if args.mode == STRICT:
        try:
            res = check_expands_into_exact(g, w, d, budget=args.budget)
        except SizeLimitExceeded as exc:
            print(f"exact: infeasible ({exc})")
            return 1
        print(f"exact: ok={res.ok} d={d:g}" + ("" if res.ok else f" witness={res.witness}"))
        return 0 if res.ok else 1
    res = falsify_expansion_sampled(g, w, d, args.trials, seed=args.seed)
    line = f"sampled: ok={res.ok} d={d:g} trials={args.trials} seed={args.seed}"
    print(line if res.ok else line + f" witness={res.witness}")
    return 0 if res.ok else 1


def _cmd_decompose(args):
    t = read_parent_array(args.tree)
    params = PipelineParams(n=t.n, delta=max(2, t.max_degree()))
    h = args.levels if args.levels is not None else params.derived_h()
    k = args.k if args.k is not None else params.derived_k()
    dec = decompose_levels(t, h)
    print(f"tree: n={t.n} delta={t.max_degree()}")
    print(f"levels (h={h}): sizes={list(dec.sizes)} depth={dec.depth()}")
    h_eff = min(h, dec.depth())
    while h_eff > 2 and dec.sizes[h_eff] < 2:
        h_eff -= 1
    core, _ = _induced_tree(t, dec.levels[h_eff])
    print(f"core at depth {h_eff}: {core.n} vertices")
    lb = leaf_or_barepath(core, k)
    sc = star_or_caterpillar(t, k)
    print(f"leaf_or_barepath on core (k={k}): branch={lb.branch} count={lb.count()} threshold={lb.threshold:g}")
    print(f"star_or_caterpillar (k={k}): branch={sc.branch} count={sc.count()} threshold={sc.threshold:g}")
    return 0


def _cmd_embed(args):
    g = read_edge_list(args.host)
    t = read_parent_array(args.tree)
    params = PipelineParams(
        n=g.n, delta=max(2, t.max_degree()), mode=args.mode,
        theorem=args.theorem, seed=args.seed,
    )
    try:
        res = embed_spanning_tree(g, t, params)
    except PreconditionViolated as exc:
        print(f"refused: {exc.name} ({exc.lhs!r} vs {exc.rhs!r})")
        return 1
    except TreespanError as exc:
        print(f"failed: {exc}")
        return 1
    print(f"case={res.case} seed={res.seed} verified={res.verified} phases={len(res.phases)}")
    if args.out:
        from pathlib import Path

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        text = json.dumps(res.to_record(), sort_keys=True, indent=2) + "\n"
        (out / "embedding.json").write_text(text)
        print(f"wrote {out / 'embedding.json'}")
    return 0 if res.verified else 1


def _parse_pairs(text):
    pairs = []
    for chunk in text.split(","):
        a, b = chunk.split(":")
        pairs.append((int(a), int(b)))
    return tuple(pairs)


def _cmd_cover(args):
    g = read_edge_list(args.host)
    pairs = _parse_pairs(args.pairs)
    if args.window:
        members = sorted(int(x) for x in args.window.split(","))
    else:
        ends = {v for pr in pairs for v in pr}
        members = [v for v in range(g.n) if v not in ends]
    w = VertexSet.from_iter(g.n, members)
    try:
        paths = path_cover(g, w, pairs, args.ell, seed=args.seed)
    except TreespanError as exc:
        print(f"cover failed: {exc}")
        return 1
    check = verify_path_cover(g, w, pairs, args.ell, paths)
    for p in paths:
        print(" ".join(str(v) for v in p))
    print(f"verified={check.ok}")
    return 0 if check.ok else 1


def _cmd_experiment(args):
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out = args.out
    if args.mode is not None:
        config.mode = args.mode
    report = run_experiment(config)
    sys.stdout.write(report.to_json_text())
    return 0 if report.ok else 1


def _add_host_flags(p):
    p.add_argument("--host", help="edge list file")
    p.add_argument("--gnp", nargs=2, metavar=("N", "P"), help="binomial host")
    p.add_argument("--regular", nargs=2, metavar=("N", "D"), help="random regular host")


def build_parser():
    top = argparse.ArgumentParser(prog="treespan")
    sub = top.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="certify a host graph's expansion")
    _add_host_flags(c)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--mode", choices=(DESK, STRICT), default=DESK)
    c.add_argument("--d", type=float, default=None, help="expansion target")
    c.add_argument("--gamma", type=float, default=1.0 / 128.0)
    c.add_argument("--trials", type=int, default=200)
    c.add_argument("--budget", type=int, default=EXACT_BUDGET)
    c.set_defaults(run=_cmd_certify)

    d = sub.add_parser("decompose", help="strip a tree and classify it")
    d.add_argument("--tree", required=True, help="parent array file")
    d.add_argument("--levels", type=int, default=None)
    d.add_argument("--k", type=int, default=None)
    d.set_defaults(run=_cmd_decompose)

    e = sub.add_parser("embed", help="embed a spanning tree into a host")
    e.add_argument("--host", required=True)
    e.add_argument("--tree", required=True)
    e.add_argument("--mode", choices=(DESK, STRICT), default=DESK)
    e.add_argument("--theorem", choices=("th1", "th2"), default="th1")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default=None)
    e.set_defaults(run=_cmd_embed)

    v = sub.add_parser("cover", help="cover a window with fixed-length paths")
    v.add_argument("--host", required=True)
    v.add_argument("--pairs", required=True, help="endpoint pairs a:b,c:d")
    v.add_argument("--ell", type=int, required=True)
    v.add_argument("--window", default=None, help="window vertex ids, comma separated")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(run=_cmd_cover)

    x = sub.add_parser("experiment", help="run a batch experiment")
    x.add_argument("--config", required=True)
    x.add_argument("--seed", type=int, default=None)
    x.add_argument("--out", default=None)
    x.add_argument("--mode", choices=(DESK, STRICT), default=None)
    x.set_defaults(run=_cmd_experiment)
    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except TreespanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
