"""Command-line interface: ``wmmtree validate|estimate|jags|render``.

Exit codes: 0 success, 2 validation or usage error, 3 estimation failure,
4 I/O failure.  Every failure prints a single ``error:<kind>: ...`` line to
standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from collections import defaultdict

from . import __version__
from .errors import (
    CodegenError,
    EstimationError,
    SamplingError,
    TreeDataError,
)
from .estimate import (
    DEFAULT_SAMPLES,
    dump_samples,
    load_report,
    two_stage_estimate,
    wmm_estimate,
)
from .intervals import INTERVAL_TYPES
from .jags import ROOT_PRIORS, generate_model
from .render import FORMATS, MODES, RenderSpec, render_tree
from .sampling import DEFAULT_MAX_ATTEMPTS
from .tree import build_tree, read_edge_table

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ESTIMATION = 3
EXIT_IO = 4

SEED_ENV = "WMMTREE_SEED"


class CLIError(Exception):
    def __init__(self, kind, message, code):
        super().__init__(message)
        self.kind = kind
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError("usage", message, EXIT_VALIDATION)


def _one_line(text):
    return " ".join(str(text).split())


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".wmmtree-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


def _load_tree(path):
    try:
        records = read_edge_table(path)
    except OSError as exc:
        raise CLIError("io", f"cannot read {path}: {exc.strerror or exc}", EXIT_IO)
    except (TreeDataError, UnicodeDecodeError) as exc:
        raise CLIError("validation", f"{path}: {exc}", EXIT_VALIDATION)
    try:
        return build_tree(records)
    except TreeDataError as exc:
        raise CLIError("validation", f"{path}: {exc}", EXIT_VALIDATION)


def read_alternate_sources(path):
    """Read ``from,to,Estimate,Total`` rows; repeated edges list alternatives."""
    sources = defaultdict(list)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = {"from", "to", "Estimate", "Total"} - set(reader.fieldnames or ())
            if missing:
                raise CLIError(
                    "validation",
                    f"{path}: missing columns {', '.join(sorted(missing))}",
                    EXIT_VALIDATION,
                )
            for i, row in enumerate(reader, start=1):
                try:
                    pair = (int(row["Estimate"]), int(row["Total"]))
                except (TypeError, ValueError):
                    raise CLIError(
                        "validation",
                        f"{path}: row {i}: Estimate and Total must be integers",
                        EXIT_VALIDATION,
                    )
                sources[(row["from"].strip(), row["to"].strip())].append(pair)
    except OSError as exc:
        raise CLIError("io", f"cannot read {path}: {exc.strerror or exc}", EXIT_IO)
    return dict(sources)


def cmd_validate(args):
    tree = _load_tree(args.input)
    inform = tree.informative_leaves
    print(
        f"{len(tree.edges)} edges, {len(tree.nodes)} nodes, informative leaves: "
        f"{', '.join(inform) if inform else '(none)'}"
    )
    print(f"root: {tree.root}")
    print(f"leaves: {', '.join(tree.leaves)}")
    return EXIT_OK


def cmd_estimate(args):
    tree = _load_tree(args.input)
    try:
        if args.alt_sources:
            sources = read_alternate_sources(args.alt_sources)
            report = two_stage_estimate(
                tree,
                sources,
                sample_length=args.samples,
                interval_type=args.interval,
                seed=args.seed,
                alpha=args.alpha,
                max_attempts=args.max_attempts,
            )
        else:
            report = wmm_estimate(
                tree,
                sample_length=args.samples,
                interval_type=args.interval,
                seed=args.seed,
                alpha=args.alpha,
                max_attempts=args.max_attempts,
            )
    except KeyError as exc:
        raise CLIError("validation", f"unknown edge in alternate sources: {exc}",
                       EXIT_VALIDATION)
    except EstimationError as exc:
        raise CLIError("estimation", str(exc), EXIT_ESTIMATION)
    except SamplingError as exc:
        raise CLIError("sampling", str(exc), EXIT_ESTIMATION)
    try:
        _emit(report.to_json(include_samples=not args.no_samples), args.output)
        if args.dump_samples:
            buf = io.StringIO()
            dump_samples(report, buf)
            write_atomic(args.dump_samples, buf.getvalue())
    except OSError as exc:
        raise CLIError("io", f"cannot write output: {exc.strerror or exc}", EXIT_IO)
    return EXIT_OK


def cmd_jags(args):
    tree = _load_tree(args.input)
    try:
        text = generate_model(tree, args.prior).text
    except CodegenError as exc:
        raise CLIError("validation", str(exc), EXIT_VALIDATION)
    try:
        _emit(text, args.output)
    except OSError as exc:
        raise CLIError("io", f"cannot write {args.output}: {exc.strerror or exc}",
                       EXIT_IO)
    return EXIT_OK


def cmd_render(args):
    if args.mode in ("count", "est") and not args.report:
        raise CLIError("usage", f"--mode {args.mode} requires --report",
                       EXIT_VALIDATION)
    if args.mode == "draw" and args.report:
        raise CLIError("usage", "--report is only used with --mode count or est",
                       EXIT_VALIDATION)
    tree = _load_tree(args.input)
    report = None
    if args.report:
        try:
            with open(args.report, encoding="utf-8") as fh:
                report = load_report(fh.read())
        except OSError as exc:
            raise CLIError("io", f"cannot read {args.report}: {exc.strerror or exc}",
                           EXIT_IO)
        except ValueError as exc:
            raise CLIError("validation", f"{args.report}: {exc}", EXIT_VALIDATION)
    spec = RenderSpec(args.mode, args.format, args.probs, args.desc)
    text = render_tree(tree, spec, report)
    try:
        _emit(text, args.output)
    except OSError as exc:
        raise CLIError("io", f"cannot write {args.output}: {exc.strerror or exc}",
                       EXIT_IO)
    return EXIT_OK


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _samples(text):
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("needs at least 2 samples")
    return value


def _alpha(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


def _seed(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be nonnegative")
    return value


def build_parser():
    parser = _Parser(
        prog="wmmtree",
        description="Population size estimation on trees with the weighted "
        "multiplier method, and JAGS model generation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check an edge table")
    p.add_argument("input", nargs="?")
    p.add_argument("-i", "--input", dest="input_opt")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("estimate", help="run WMM estimation")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", help="report path (default: stdout)")
    p.add_argument("--samples", type=_samples, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=_seed, default=None,
                   help=f"random seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--interval", choices=INTERVAL_TYPES, default="percentile")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--max-attempts", type=_positive_int, default=DEFAULT_MAX_ATTEMPTS)
    p.add_argument("--alt-sources", help="CSV of alternate (Estimate, Total) "
                   "sources per edge; enables two-stage estimation")
    p.add_argument("--dump-samples", metavar="PATH",
                   help="write the raw sample matrix as CSV")
    p.add_argument("--no-samples", action="store_true",
                   help="omit per-sample arrays from the report")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("jags", help="generate a JAGS model")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--prior", choices=ROOT_PRIORS, default="lognormal")
    p.add_argument("-o", "--output", help="model path (default: stdout)")
    p.set_defaults(func=cmd_jags)

    p = sub.add_parser("render", help="render the tree as DOT or ASCII")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--mode", choices=MODES, default="draw")
    p.add_argument("--format", choices=FORMATS, default="dot")
    p.add_argument("--probs", action="store_true", help="label edges with ratios")
    p.add_argument("--desc", action="store_true", help="use node descriptions")
    p.add_argument("--report", help="report JSON written by 'estimate'")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command == "validate":
            args.input = args.input or args.input_opt
            if not args.input:
                raise CLIError("usage", "an input table is required", EXIT_VALIDATION)
        if getattr(args, "seed", 0) is None:
            env = os.environ.get(SEED_ENV)
            try:
                args.seed = _seed(env) if env else 0
            except (ValueError, argparse.ArgumentTypeError):
                raise CLIError("usage", f"${SEED_ENV} must be a nonnegative integer",
                               EXIT_VALIDATION)
        return args.func(args)
    except CLIError as exc:
        print(f"error:{exc.kind}: {_one_line(exc)}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
