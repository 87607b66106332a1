"""Command line entry point: ``ranklab {verify,losses,batch,online,vc} [flags]``.

Values come from defaults, then the ``--config`` JSON file, then flags.
Exit codes: 0 success, 1 a requested verification failed, 2 bad
configuration, 3 a budget or cap was exceeded.
"""

from __future__ import annotations

import argparse
import sys

from .errors import BudgetError, ConfigError, RanklabError
from .harness import ExperimentConfig, load_config, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--out", help="output prefix; writes PREFIX.csv and PREFIX.json")
    p.add_argument("--K", type=int, help="number of labels")
    p.add_argument("--B", type=int, help="relevance bound (scores in 0..B)")
    p.add_argument("--p", type=int, help="cutoff")
    p.add_argument("--seed", type=int)
    p.add_argument("--loss", help="loss spec, e.g. sum@2, prec@1, ap, auc, rr, pl, dcg@3")
    p.add_argument("--family", help="loss family, e.g. sum@2 or prec@1")
    p.add_argument("--cap", type=int, help="enumeration or expert-pool cap")
    p.add_argument("--trials", type=int)
    p.add_argument("--quiet", action="store_true", help="do not print the summary")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ranklab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="exhaustive lemma and vote-soundness checks")
    _common(p)
    p.add_argument("--lemma", help="E1, E2, E3, E4, votes or all")
    p.add_argument("--c", type=float, help="override the constant c = M/a (negative controls)")

    p = sub.add_parser("losses", help="loss-family membership and extrema")
    _common(p)
    p.add_argument("--check", help="loss to test for membership in --family")

    p = sub.add_parser("batch", help="batch learner trials (algorithm 1 or 4) with exact population risk")
    _common(p)
    p.add_argument("--algorithm", type=int, choices=(1, 4))
    p.add_argument("--n-u", dest="n_u", type=int, help="unlabelled sample size")
    p.add_argument("--n-l", dest="n_l", type=int, help="labelled sample size")
    p.add_argument("--noise", type=float)
    p.add_argument("--mode", choices=("realizable", "agnostic"))
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--n-hypotheses", dest="n_hypotheses", type=int)
    p.add_argument("--i", type=int, help="label for the threshold class")
    p.add_argument("--j", type=int, help="cutoff for the threshold class")
    p.add_argument("--timing", action="store_true", default=None, help="fill the wall_ms column")

    p = sub.add_parser("online", help="agnostic online learner Q and the necessity learner")
    _common(p)
    p.add_argument("--T", type=int, help="stream length")
    p.add_argument("--beta", type=float, help="update probability exponent, in (0, 1)")
    p.add_argument("--variant", choices=("learner", "necessity"))
    p.add_argument("--mode", choices=("realizable", "agnostic"))
    p.add_argument("--noise", type=float)
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--n-hypotheses", dest="n_hypotheses", type=int)
    p.add_argument("--i", type=int)
    p.add_argument("--j", type=int)

    p = sub.add_parser("vc", help="shattering search on sampled linear rankers")
    _common(p)
    p.add_argument("--d", type=int, help="feature dimension")
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--n-matrices", dest="n_matrices", type=int)
    p.add_argument("--max-m", dest="max_m", type=int)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    doc = load_config(args.config) if args.config else {}
    if doc.get("kind", args.kind) != args.kind:
        raise ConfigError(f"config kind {doc['kind']!r} does not match subcommand {args.kind!r}")
    doc["kind"] = args.kind
    cfg = ExperimentConfig.from_dict(doc)
    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "kind", "quiet")}
    return cfg.merged(overrides).validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        code, result = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (RanklabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.quiet:
        _print_summary(result)
    return code


def _print_summary(result) -> None:
    print(f"{result.kind}: {'ok' if result.passed else 'FAILED'}")
    if result.kind == "verify":
        for line in result.summary["text"]:
            print("  " + line)
    else:
        for key, val in result.summary.items():
            print(f"  {key}: {val}")


if __name__ == "__main__":
    sys.exit(main())

