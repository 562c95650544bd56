"""Command line driver.

Exit codes: 0 success, 1 verification failure, 2 parameter violation,
3 construction or input failure.  MTV_LOG sets the log level.
"""

import argparse
import json
import logging
import os
import sys as _sys

import numpy as np

from . import pipeline
from .errors import MtvError, NotAdmissible, ParameterViolation


def _setup_logging():
    level = os.environ.get("MTV_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _config_from_args(args):
    if args.config:
        cfg = pipeline.PipelineConfig.load(args.config)
    else:
        cfg = pipeline.PipelineConfig()
    if args.system:
        cfg.system = args.system
    if args.mode:
        cfg.mode = args.mode
    if args.zero_center:
        cfg.mode = "zero-center"
        cfg.system = "cat2"
    if args.out:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.horizon is not None:
        cfg.horizon = args.horizon
    if args.samples is not None:
        cfg.samples = args.samples
        cfg.markov_samples = args.samples
    if args.tolerance is not None:
        cfg.tolerance = args.tolerance
    if args.epsilon is not None:
        cfg.epsilon = args.epsilon
    if args.delta is not None:
        cfg.delta = args.delta
    return cfg


def _common_flags(p):
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--system", help="builtin name (cat2, catid3, skew3) or JSON path")
    p.add_argument("--mode", choices=["product", "lattice", "zero-center"])
    p.add_argument("--zero-center", action="store_true",
                   help="degenerate planar mode on cat2")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)


def main(argv=None):
    _setup_logging()
    ap = argparse.ArgumentParser(prog="mtv", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_build = sub.add_parser("build", help="construct the transversal family")
    _common_flags(p_build)

    p_verify = sub.add_parser("verify", help="run all verification suites")
    _common_flags(p_verify)
    p_verify.add_argument("--partition", help="partition.json path")

    p_code = sub.add_parser("code", help="evaluate the coding maps on a string")
    _common_flags(p_code)
    p_code.add_argument("--partition", help="partition.json path")
    p_code.add_argument("string", help="comma-separated rectangle indices, odd length")

    p_export = sub.add_parser("export", help="re-export graphs and pictures")
    _common_flags(p_export)
    p_export.add_argument("--partition", help="partition.json path")

    args = ap.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read configuration: {e}", file=_sys.stderr)
        return 3

    try:
        if args.cmd == "build":
            mf, S, paths = pipeline.build(cfg)
            print(f"built {mf.s} rectangles on {mf.family.n} transversal "
                  f"components ({mf.mode} mode)")
            for k, p in paths.items():
                print(f"  {k}: {p}")
            return 0

        partition = getattr(args, "partition", None) or \
            os.path.join(cfg.out, "partition.json")

        if args.cmd == "verify":
            report, ok = pipeline.verify(cfg, partition)
            text = pipeline.report_text(report)
            print(text)
            pipeline._write(os.path.join(cfg.out, "report.json"),
                            json.dumps(report, indent=2, default=str))
            pipeline._write(os.path.join(cfg.out, "report.txt"), text)
            return 0 if ok else 1

        if args.cmd == "code":
            string = [int(v) for v in args.string.split(",")]
            result = pipeline.code(cfg, partition, string)
            print(json.dumps(result, indent=2))
            return 0

        if args.cmd == "export":
            mf, S, doc = pipeline.load_partition(partition)
            cfg.out = cfg.out or os.path.dirname(partition)
            params = {"delta": mf.family.delta, "rho": 0.0, "nu": 0.0,
                      "violations": []}
            paths = pipeline.export_artifacts(mf, S, cfg, params)
            for k, p in paths.items():
                print(f"  {k}: {p}")
            return 0
    except ParameterViolation as e:
        print(f"parameter violation: {e}", file=_sys.stderr)
        return 2
    except NotAdmissible as e:
        print(f"not admissible: {e}", file=_sys.stderr)
        return 3
    except (MtvError, OSError, json.JSONDecodeError, ValueError) as e:
        print(f"error [{args.cmd}]: {e}", file=_sys.stderr)
        return 3
    return 3


if __name__ == "__main__":
    raise SystemExit(main())
