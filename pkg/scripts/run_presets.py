"""Run shipped presets in sequence, one output directory each."""

import argparse
import sys
from pathlib import Path

from noisesync.cli import main as cli_main
from noisesync.experiments import PRESETS


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("presets", nargs="*", default=["fig7", "fig9", "fig10", "fig5"],
                    help=f"any of: {', '.join(PRESETS)}")
    ap.add_argument("--out-root", default="out")
    ap.add_argument("--workers", type=int, default=None)
    a = ap.parse_args(argv)
    status = 0
    for name in a.presets:
        args = ["run", "--preset", name, "--out", str(Path(a.out_root) / name)]
        if a.workers:
            args += ["--workers", str(a.workers)]
        code = cli_main(args)
        print(f"{name}: exit {code}")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
