"""Command line interface.

Subcommands::

    sdmce parameterize --input mesh.obj --output flat.obj --report r.json
    sdmce check mesh.obj
    sdmce metrics --input flat.obj [--uv uv.csv] --report r.json

Exit codes: 0 success, 1 bad input (parse, topology, arguments),
2 solver failure, 3 folding left after repair, 4 I/O failure.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import hashlib
import json
import logging
import os
import platform
import sys

import numpy as np
import scipy

from . import __version__
from .adaptive_mu import parse_init
from .disk_energy import POLYGON_AREA, TRUE_AREA
from .errors import (
    DegenerateFaceError, EscalationOverflow, IoError, ParseError, SingularInteriorError,
    SingularUpdateError, TopologyError,
)
from .laplacian import build_system
from .mesh_io import diagnose, load_mesh, load_uv_csv, load_uv_obj, read_raw, write_parameterized
from .metrics import build_report, corners_csv, faces_csv
from .optimizer import NcgConfig
from .pipeline import Parameterizer
from .svg import render_svg

logger = logging.getLogger("sdmce")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_FOLDING, EXIT_IO = 0, 1, 2, 3, 4
VARIANTS = {"pi": TRUE_AREA, "area": POLYGON_AREA}


@dataclass
class RunConfig:
    input: str
    output: str = None
    report: str = None
    svg: str = None
    trace: str = None
    mu: object = "auto"
    variant: str = "pi"
    init: str = "equal"
    seed: int = 0
    tau: float = 1e-4
    schur: str = "explicit"
    repair: bool = True
    ncg: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mu != "auto":
            self.mu = float(self.mu)
            if self.mu < 0:
                raise ValueError("--mu must be nonnegative or 'auto'")
        if self.variant not in VARIANTS:
            raise ValueError(f"--variant must be one of {sorted(VARIANTS)}")
        if self.tau <= 0:
            raise ValueError("--tau must be positive")
        # validates rho > 0 and the init syntax
        parse_init(self.init, 3, self.seed)


class _Parser(argparse.ArgumentParser):
    # usage errors count as bad input, keeping exit code 2 for the solver
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _mu_arg(text):
    if text == "auto":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a number") from None
    if value < 0:
        raise argparse.ArgumentTypeError("mu must be nonnegative")
    return value


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest(config):
    cfg = asdict(config)
    cfg["input"] = os.path.basename(config.input)
    for key in ("output", "report", "svg", "trace"):
        cfg.pop(key)
    return {
        "config": cfg,
        "input_sha256": _sha256(config.input),
        "versions": {
            "sdmce": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _output_format(path):
    return "csv" if str(path).lower().endswith(".csv") else "obj"


def run_parameterize(config):
    """Run the pipeline for one input; returns the exit status."""
    try:
        mesh = load_mesh(config.input)
        manifest = _manifest(config)
        init = parse_init(config.init, len(mesh.boundary_loop), config.seed)
        solver = Parameterizer(mesh, variant=VARIANTS[config.variant],
                               ncg=NcgConfig(**config.ncg), schur=config.schur)
        result = solver.run(mu=config.mu, init=init, tau=config.tau, repair=config.repair)
        result.report.manifest = manifest

        if config.output:
            write_parameterized(mesh, result.embedding, config.output,
                                format=_output_format(config.output))
        if config.report:
            _write_text(config.report, result.report.to_json(indent=1))
        if config.svg:
            _write_text(config.svg, render_svg(mesh, result.embedding))
        if config.trace:
            os.makedirs(config.trace, exist_ok=True)
            if result.tune is not None:
                _write_text(os.path.join(config.trace, "mu_history.csv"),
                            result.tune.history_csv())
            for k, trace in enumerate(result.traces):
                _write_text(os.path.join(config.trace, f"solve_{k:03d}.csv"), trace.to_csv())
    except (ParseError, TopologyError, DegenerateFaceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EscalationOverflow, SingularInteriorError, SingularUpdateError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO

    rep = result.report
    print(f"{os.path.basename(config.input)}: mu={rep.mu:g} E_Cd={rep.E_Cd:.6e} "
          f"eps_A={rep.eps_A_signed:.6e} eps_theta={rep.angle_error_mean:.6e} "
          f"folded={rep.folding['totals']['triangles']}+{rep.folding['totals']['boundary_vertices']}")
    if result.stalled or not _is_clean(rep):
        return EXIT_FOLDING
    return EXIT_OK


def _is_clean(report):
    totals = report.folding["totals"]
    return totals["triangles"] == 0 and totals["boundary_vertices"] == 0


def _derived_path(base, stem, suffix):
    # with several inputs, output options name directories
    if base is None:
        return None
    os.makedirs(base, exist_ok=True)
    return os.path.join(base, stem + suffix)


def cmd_parameterize(args):
    ncg = {}
    if args.max_iterations is not None:
        ncg["max_iterations"] = args.max_iterations
    if args.gradient_tolerance is not None:
        ncg["gradient_tolerance"] = args.gradient_tolerance
    configs = []
    try:
        for path in args.input:
            common = dict(mu=args.mu, variant=args.variant, init=args.init, seed=args.seed,
                          tau=args.tau, schur=args.schur, repair=not args.no_repair, ncg=ncg)
            if len(args.input) == 1:
                configs.append(RunConfig(path, args.output, args.report, args.svg,
                                         args.trace, **common))
            else:
                stem = os.path.splitext(os.path.basename(path))[0]
                configs.append(RunConfig(
                    path,
                    _derived_path(args.output, stem, ".obj"),
                    _derived_path(args.report, stem, ".json"),
                    _derived_path(args.svg, stem, ".svg"),
                    _derived_path(args.trace, stem, ""),
                    **common,
                ))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(run_parameterize, configs))
    else:
        codes = [run_parameterize(c) for c in configs]
    return max(codes)


def cmd_check(args):
    try:
        vertices, faces = read_raw(args.input)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    diag = diagnose(vertices, faces)
    print(json.dumps(diag.to_dict(), indent=1))
    return EXIT_OK if diag.is_disk else EXIT_INPUT


def cmd_metrics(args):
    try:
        if args.uv is None:
            mesh, uv = load_uv_obj(args.input)
        else:
            mesh = load_mesh(args.input)
            if args.uv.lower().endswith(".csv"):
                uv = load_uv_csv(args.uv, mesh.n_vertices)
            else:
                uv_mesh, uv = load_uv_obj(args.uv)
                if uv_mesh.n_vertices != mesh.n_vertices:
                    raise ParseError("uv mesh has a different vertex count")
        system = build_system(mesh, args.schur)
        report = build_report(mesh, uv, system)
        text = report.to_json(indent=1)
        if args.report:
            _write_text(args.report, text)
        else:
            print(text)
        if args.corners_csv:
            _write_text(args.corners_csv, corners_csv(mesh, report))
        if args.faces_csv:
            _write_text(args.faces_csv, faces_csv(report))
        if args.svg:
            _write_text(args.svg, render_svg(mesh, uv))
    except (ParseError, TopologyError, DegenerateFaceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SingularInteriorError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="sdmce", description="Conformal disk parameterization of open meshes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("parameterize", help="flatten a mesh onto the unit disk")
    p.add_argument("--input", required=True, nargs="+",
                   help="OBJ or OFF mesh(es); with several, output options name directories")
    p.add_argument("--output", help="parameterized mesh (.obj with vt, or .csv)")
    p.add_argument("--report", help="JSON quality report")
    p.add_argument("--svg", help="SVG drawing of the embedding")
    p.add_argument("--trace", help="directory for mu history and per-solve CSV traces")
    p.add_argument("--mu", type=_mu_arg, default="auto", help="'auto' (default) or a fixed value")
    p.add_argument("--variant", choices=sorted(VARIANTS), default="pi",
                   help="subtract pi (default) or the polygon area")
    p.add_argument("--init", default="equal", help="equal | arc:RHO | random[:SEED]")
    p.add_argument("--seed", type=int, default=0, help="seed for --init random")
    p.add_argument("--tau", type=float, default=1e-4)
    p.add_argument("--schur", choices=("explicit", "implicit"), default="explicit")
    p.add_argument("--no-repair", action="store_true", help="skip the folding repair")
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--gradient-tolerance", type=float)
    p.add_argument("--jobs", type=int, default=1, help="parallel processes over inputs")
    p.set_defaults(func=cmd_parameterize)

    c = sub.add_parser("check", help="report mesh topology diagnostics")
    c.add_argument("input")
    c.set_defaults(func=cmd_check)

    m = sub.add_parser("metrics", help="audit an existing parameterization")
    m.add_argument("--input", required=True, help="mesh; its vt records are used without --uv")
    m.add_argument("--uv", help="UV coordinates as index,u,v CSV or OBJ with vt")
    m.add_argument("--report", help="JSON output (stdout when omitted)")
    m.add_argument("--corners-csv", help="per-corner angle errors")
    m.add_argument("--faces-csv", help="per-face Beltrami moduli")
    m.add_argument("--svg")
    m.add_argument("--schur", choices=("explicit", "implicit"), default="explicit")
    m.set_defaults(func=cmd_metrics)
    return parser


def _configure_logging():
    level = os.environ.get("SDMCE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
