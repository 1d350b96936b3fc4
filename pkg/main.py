# main.py
"""
CavityBell command-line entrypoint.

    python main.py bell   --config configs/reference.json
    python main.py ghz    --config configs/reference.json --n 3
    python main.py verify --config configs/reference.json
    python main.py sweep  --config configs/reference.json --kind success
"""

import argparse
import sys
from typing import List, Optional

from cli.commands import cmd_bell, cmd_ghz, cmd_sweep, cmd_verify, guarded
from utils.log import configure

DEFAULT_CONFIG = "configs/reference.json"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=DEFAULT_CONFIG, help="Run configuration (JSON).")
    common.add_argument("--out", default=None, help="Output file (default: under output.dir).")
    common.add_argument(
        "--seedless",
        action="store_true",
        help="Accepted for scripting; every computation is deterministic.",
    )
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("--verbose", action="store_true", help="Debug logging.")
    noise.add_argument("--quiet", action="store_true", help="Warnings and errors only.")

    ap = argparse.ArgumentParser(
        prog="cavitybell",
        description="Two-stage cavity-QED generation of complete sets of entangled photon states.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("bell", parents=[common], help="Two-atom Bell-set protocol.")
    ghz = sub.add_parser("ghz", parents=[common], help="N-atom GHZ-class protocol.")
    ghz.add_argument("--n", type=int, required=True, help="Number of atoms (2-4).")
    sub.add_parser("verify", parents=[common], help="Full-vs-effective Hamiltonian checks.")
    sweep = sub.add_parser("sweep", parents=[common], help="Parameter sweeps to CSV.")
    sweep.add_argument("--kind", choices=["success", "stagger"], required=True)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure("DEBUG" if args.verbose else "WARNING" if args.quiet else None)

    if args.command == "bell":
        return guarded(cmd_bell, args.config, out=args.out)
    if args.command == "ghz":
        return guarded(cmd_ghz, args.config, args.n, out=args.out)
    if args.command == "verify":
        return guarded(cmd_verify, args.config, out=args.out, quiet=args.quiet)
    return guarded(cmd_sweep, args.config, args.kind, out=args.out, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
