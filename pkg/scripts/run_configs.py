"""Run ``canonme measures`` on every config in scripts/configs.

Writes <name>.csv and <name>.json into the output directory and prints a
one-line summary per model.
"""
import argparse
import json
from pathlib import Path

from canonme.cli import main as cli

HERE = Path(__file__).resolve().parent


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default=str(HERE.parent / "results"))
    args = p.parse_args(argv)
    out = Path(args.out)
    for cfg in sorted((HERE / "configs").glob("*.json")):
        if "kind" not in json.loads(cfg.read_text()):
            continue  # map data, referenced by a config
        code = cli(["measures", "--config", str(cfg), "--output", str(out / cfg.stem)])
        summary = json.loads((out / f"{cfg.stem}.json").read_text())
        print(f"{cfg.stem:16s} exit={code} F_sum={summary['F_sum']:+.6f} "
              f"nm_index_max={summary['nm_index_max']} singular={len(summary['singular_times'])}")


if __name__ == "__main__":
    main()
