"""hmlab-plot: render one figure from a JSON spec."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, plot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hmlab-plot",
        description="Render figures from hmlab CSV/JSON artifacts")
    parser.add_argument("--spec", required=True,
                        help="JSON figure specification")
    args = parser.parse_args(argv)
    result = plot(FigureSpec.from_json(args.spec))
    print(f"wrote {result['output']}")
    for key, val in result.items():
        if key != "output":
            print(f"  {key}: {val}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
