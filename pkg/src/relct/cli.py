"""Command-line interface.

    relct gen --preset imdb-like --scale 0.1 --seed 7 --out data/
    relct run --schema data/schema.txt --data data/ --strategy hybrid \
              --ess 1 --max-parents 4 --max-chain 3 --budget-s 60 --report out.json
    relct compare a.json b.json c.json
    relct dump-ct --schema data/schema.txt --data data/ \
                  --family "RA.salary(P,S) <- RA(P,S)" --out ct.csv

Exit codes: 0 success, 2 bad input, 3 budget exhausted (partial report).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench, gen, store
from .bench import BenchParams, StrategyReport
from .schema import SchemaError, dump_schema, load_schema
from .score import FamilySpec
from .store import DataError


def _load_db(schema_path: str, data_dir: str) -> store.Database:
    schema = load_schema(Path(schema_path).read_text())
    files = {
        name: Path(data_dir, f"{name}.csv").read_text() for name in schema.table_names
    }
    return store.load_database(schema, files)


def _cmd_gen(args) -> int:
    if args.config:
        config = gen.GenConfig.from_json(Path(args.config).read_text())
        if args.seed is not None:
            config = gen.GenConfig(args.seed, config.entities, config.relationships, config.preset)
    elif args.preset:
        config = gen.preset(args.preset, scale=args.scale, seed=args.seed or 0)
    else:
        print("gen: need --preset or --config", file=sys.stderr)
        return 2
    db = gen.generate(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "schema.txt").write_text(dump_schema(db.schema))
    (out / "gen_config.json").write_text(config.to_json())
    for name, text in store.dump_database(db).items():
        (out / f"{name}.csv").write_text(text)
    print(f"wrote {len(db.tables)} tables ({db.total_rows} rows) to {out}")
    return 0


def _params(args) -> BenchParams:
    return BenchParams(
        ess=args.ess,
        structure_prior_log=args.structure_prior,
        max_parents=args.max_parents,
        max_chain_length=args.max_chain,
        budget_s=args.budget_s,
        max_ct_rows=args.max_ct_rows,
        seed=args.seed,
    )


def _cmd_run(args) -> int:
    from .schema import build_lattice
    from .search import learn_and_join
    from .strategy import make_provider

    db = _load_db(args.schema, args.data)
    params = _params(args)
    report = bench.run_benchmark(db, args.strategy, params, db_label=args.label)
    text = report.to_json()
    if args.report:
        Path(args.report).write_text(text)
    print(text, end="")
    if not report.partial and (args.dump_model or args.dump_trace):
        # re-run the (deterministic) search to materialize model and trace
        lattice = build_lattice(db.schema, params.max_chain_length)
        provider = make_provider(args.strategy, db, lattice)
        provider.prepare()
        state, trace = learn_and_join(db, lattice, provider, params.search_params())
        if args.dump_model:
            Path(args.dump_model).write_text(state.dump())
        if args.dump_trace:
            Path(args.dump_trace).write_text(trace.dump_jsonl())
    return 3 if report.partial else 0


def _cmd_compare(args) -> int:
    reports = [StrategyReport.from_json(Path(p).read_text()) for p in args.reports]
    result = bench.compare(reports)
    print(result.table, end="")
    return 0


def _split_variable_list(text: str) -> list[str]:
    """Split on commas outside parentheses; variable names like RA(P,S)
    contain commas of their own."""
    parts, depth, current = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        current.append(ch)
    tail = "".join(current).strip()
    if tail:
        parts.append(tail)
    return [p for p in parts if p]


def _cmd_dump_ct(args) -> int:
    db = _load_db(args.schema, args.data)
    if args.family:
        head, _, tail = args.family.partition("<-")
        child = db.schema.variable(head.strip())
        parents = tuple(db.schema.variable(p) for p in _split_variable_list(tail))
        target = FamilySpec(child, parents)
    elif args.point:
        from .schema import RelBinding

        bindings = []
        for name in args.point.split(","):
            rel = db.schema.relationship(name.strip())
            bindings.append(RelBinding(rel.name, rel.labels))
        target = db.schema.make_point(bindings)
    else:
        print("dump-ct: need --family or --point", file=sys.stderr)
        return 2
    text = bench.dump_ct(db, target, args.strategy, _params(args))
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def _add_run_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", choices=["precount", "ondemand", "hybrid"], default="hybrid")
    p.add_argument("--ess", type=float, default=1.0)
    p.add_argument("--structure-prior", type=float, default=0.0)
    p.add_argument("--max-parents", type=int, default=4)
    p.add_argument("--max-chain", type=int, default=3)
    p.add_argument("--budget-s", type=float, default=bench.DEFAULT_BUDGET_S)
    p.add_argument("--max-ct-rows", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic database")
    p.add_argument("--preset", help="named shape, e.g. imdb-like")
    p.add_argument("--config", help="GenConfig JSON file")
    p.add_argument("--scale", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="run one strategy end to end")
    p.add_argument("--schema", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label", default="")
    p.add_argument("--report")
    p.add_argument("--dump-model", help="write the learned edge list here")
    p.add_argument("--dump-trace", help="write the family-request JSONL here")
    _add_run_opts(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="align reports from the same database")
    p.add_argument("reports", nargs="+")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("dump-ct", help="dump a complete contingency table as CSV")
    p.add_argument("--schema", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--family", help='e.g. "RA.salary(P,S) <- RA(P,S)"')
    p.add_argument("--point", help="comma-separated relationship names")
    p.add_argument("--out")
    _add_run_opts(p)
    p.set_defaults(func=_cmd_dump_ct)
    return parser


def main(argv: list[str] | None = None) -> int:
    from .schema import NoCoveringPointError
    from .strategy import StrategyStateError

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        SchemaError,
        DataError,
        ValueError,
        FileNotFoundError,
        NoCoveringPointError,
        StrategyStateError,
    ) as exc:
        print(f"relct: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
