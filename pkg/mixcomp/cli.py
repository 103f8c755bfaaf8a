"""Command-line interface: `mixcomp analyze | simulate | diagnose | gen`.

Results go to standard output, log messages to standard error. Exit codes:

| code | meaning                                                |
|------|--------------------------------------------------------|
| 0    | success                                                |
| 1    | internal consistency failure or failed diagnostic      |
| 2    | the input file or a flag could not be parsed           |
| 3    | the input violates an invariant                        |
| 4    | the request exceeds a size cap                         |
| 5    | a file could not be read or written                    |
"""

import argparse
import csv
import json
import logging
import re
import sys

from mixcomp import compression, ensembles, reports, tolerance
from mixcomp import decomposition as kidecomp
from mixcomp.utils import (
    ConsistencyError,
    ParseError,
    ResourceCapError,
    ValidationError,
)

__all__ = ["main", "load_ensemble", "parse_block_spec"]

log = logging.getLogger(__name__)

CSV_HEADER = ["N", "rate", "code_dim", "avg_fidelity", "mode", "samples", "seed"]
_PAIR = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)")


def load_ensemble(path):
    """Reads an ensemble file (see `docs/file-format.md`)."""
    with open(path, encoding="utf-8") as f:
        try:
            config = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path} is not valid JSON: {e}.") from e
    if not isinstance(config, dict):
        raise ParseError(f"{path} must contain a JSON object.")
    return ensembles.Ensemble.from_config(config)


def _write_json(path, config):
    with open(path, "w", encoding="utf-8") as f:
        f.write(reports.to_json(config))
        f.write("\n")


def parse_block_spec(text):
    """Parses `"(2,2),(1,3)"` into `[(2, 2), (1, 3)]`."""
    pairs, position = [], 0
    text = text.strip()
    while position < len(text):
        match = _PAIR.match(text, position)
        if match is None:
            raise ParseError(f"Cannot parse block spec {text!r} at position {position}.")
        pairs.append((int(match.group(1)), int(match.group(2))))
        position = match.end()
        separator = re.compile(r"\s*,\s*").match(text, position)
        if separator is not None and separator.end() < len(text):
            position = separator.end()
        elif position < len(text):
            raise ParseError(f"Unexpected trailing input in block spec {text!r}.")
    if not pairs:
        raise ParseError("Block spec is empty.")
    return pairs


def _parse_list(text, cast, name):
    try:
        values = [cast(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ParseError(f"Cannot parse {name} {text!r}: {e}.") from e
    if not values:
        raise ParseError(f"{name} is empty.")
    return values


def cmd_analyze(args):
    report = reports.AnalysisReport.analyze(load_ensemble(args.path), args.tol)
    print(reports.render(report, args.format))
    return 0


def cmd_simulate(args):
    ensemble = load_ensemble(args.path)
    rows = compression.rate_sweep(
        ensemble,
        _parse_list(args.N_list, int, "N list"),
        _parse_list(args.rates, float, "rates"),
        mode=args.mode,
        samples=args.samples,
        seed=args.seed,
    )
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv_row())
    return 0


def cmd_diagnose(args):
    ensemble = load_ensemble(args.path)
    reduced = kidecomp.strip(kidecomp.ki_decompose(ensemble), ensemble)
    builder = compression.get_scheme(args.scheme)
    scheme = builder(reduced, args.N, rate=args.rate)
    report = compression.converse_diagnostic(scheme, reduced)
    print(reports.render(report, args.format))
    if not report.passed:
        log.error(f"Converse diagnostic failed for scheme {scheme.name!r}.")
    return 0 if report.passed else 1


def cmd_gen(args):
    ensemble, oracle = kidecomp.gen_planted(
        parse_block_spec(args.spec), args.signals, args.seed, args.ambient_dim
    )
    reduced = kidecomp.strip(oracle, ensemble)
    oracle_config = oracle.get_config()
    oracle_config["q"] = oracle.q.tolist()
    oracle_config["I_R"] = ensembles.von_neumann_entropy(ensembles.total_state(reduced))
    _write_json(args.out, ensemble.get_config())
    _write_json(f"{args.out}.oracle.json", oracle_config)
    log.info(f"Wrote {args.out} and {args.out}.oracle.json.")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--tol", type=float, default=None, help="Structural tolerance (overrides KI_TOL)"
    )
    common.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")

    parser = argparse.ArgumentParser(
        prog="mixcomp",
        description="Blind compression of mixed-state quantum ensembles.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", parents=[common], help="Report S, I_LH and I_R")
    analyze.add_argument("path", help="Ensemble file")
    analyze.add_argument("--format", choices=reports.FORMATS, default="json")
    analyze.set_defaults(func=cmd_analyze)

    simulate = commands.add_parser(
        "simulate", parents=[common], help="Average fidelity of the typical codec (CSV)"
    )
    simulate.add_argument("path", help="Ensemble file")
    simulate.add_argument("--N-list", dest="N_list", required=True, help="e.g. 1,2,3")
    simulate.add_argument("--rates", required=True, help="e.g. 0.5,1.0")
    simulate.add_argument("--mode", choices=compression.MODES, default="exact")
    simulate.add_argument("--samples", type=int, default=None, help="Monte Carlo samples")
    simulate.add_argument("--seed", type=int, default=None, help="Monte Carlo seed")
    simulate.set_defaults(func=cmd_simulate)

    diagnose = commands.add_parser(
        "diagnose", parents=[common], help="Converse diagnostics of a scheme"
    )
    diagnose.add_argument("path", help="Ensemble file")
    diagnose.add_argument("--N", dest="N", type=int, required=True, help="Block length")
    diagnose.add_argument("--rate", type=float, default=None, help="Rate of the typical scheme")
    diagnose.add_argument(
        "--scheme", choices=sorted(compression._SCHEMES), default="typical"
    )
    diagnose.add_argument("--format", choices=reports.FORMATS, default="json")
    diagnose.set_defaults(func=cmd_diagnose)

    gen = commands.add_parser("gen", parents=[common], help="Draw a planted ensemble")
    gen.add_argument("--spec", required=True, help='Blocks as "(dJ,dK),(dJ,dK)"')
    gen.add_argument("--signals", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True, help="Ensemble file to write")
    gen.add_argument("--ambient-dim", dest="ambient_dim", type=int, default=None)
    gen.set_defaults(func=cmd_gen)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        with tolerance.scope(args.tol):
            return args.func(args)
    except ParseError as e:
        log.error(str(e))
        return 2
    except ResourceCapError as e:
        log.error(str(e))
        return 4
    except ValidationError as e:
        log.error(str(e))
        return 3
    except ConsistencyError as e:
        log.error(str(e))
        return 1
    except OSError as e:
        log.error(str(e))
        return 5


if __name__ == "__main__":
    sys.exit(main())
