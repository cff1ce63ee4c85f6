"""Regenerate the pinned golden weight-file digest for the determinism check.

Runs ``aruba synth --seed 0`` then ``aruba weights`` with default settings in a
scratch directory (relative paths, so the embedded header is location free)
and writes the sha256 of ``weights.json`` to tests/data/golden_weights.sha256.
Pass ``--keep DIR`` to keep the generated files.
"""

import argparse
import hashlib
import os
import shutil
import tempfile
from pathlib import Path

from aruba.cli import main

DEST = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden_weights.sha256"


def build(workdir: Path) -> str:
    cwd = os.getcwd()
    os.chdir(workdir)
    try:
        if main(["synth", "--seed", "0", "--out", "synth"]) != 0:
            raise SystemExit("synth failed")
        if main(["weights", "synth/dataset.json", "--format", "dump", "--out", "run1"]) != 0:
            raise SystemExit("weights failed")
        return hashlib.sha256((workdir / "run1" / "weights.json").read_bytes()).hexdigest()
    finally:
        os.chdir(cwd)


def cli() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--keep", type=Path, help="directory to copy the generated files into")
    parser.add_argument("--check", action="store_true", help="compare instead of overwrite")
    args = parser.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        digest = build(Path(tmp))
        if args.keep:
            shutil.copytree(tmp, args.keep, dirs_exist_ok=True)
    if args.check:
        pinned = DEST.read_text().split()[0]
        print("match" if pinned == digest else f"MISMATCH pinned {pinned} got {digest}")
        raise SystemExit(pinned != digest)
    DEST.write_text(f"{digest}  weights.json\n")
    print(f"{digest} -> {DEST}")


if __name__ == "__main__":
    cli()
