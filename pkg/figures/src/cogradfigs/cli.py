"""Entry point: render one or more figure-spec JSON files.

A spec file holds {"layout": ..., "inputs": [...], "output": ...} with an
optional "schema_version".  Exit status 0 on success, 2 on a spec or
schema error.
"""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cogradfigs",
        description="render run-log CSVs into figure layouts")
    parser.add_argument("specs", nargs="+", help="figure-spec JSON files")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    for spec_path in args.specs:
        try:
            spec = FigureSpec.from_file(spec_path)
            out = render(spec)
        except (SchemaError, ValueError, OSError, KeyError) as e:
            print(f"error in {spec_path}: {e}", file=sys.stderr)
            return 2
        if not args.quiet:
            print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
