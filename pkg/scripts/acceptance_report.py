#!/usr/bin/env python3
"""Run the acceptance suite on the reference configuration and print one line per criterion.

    python scripts/acceptance_report.py [config.json] [--out-dir DIR]
"""

import argparse

from resonia.acceptance import exit_code, run_all, summary_line
from resonia.config import RunConfig, config_hash, parse_config
from resonia.io import write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", nargs="?")
    ap.add_argument("--out-dir")
    a = ap.parse_args()
    cfg = parse_config(a.config) if a.config else RunConfig()
    entries = run_all(cfg)
    for e in entries:
        print(summary_line(e))
    code = exit_code(entries)
    if a.out_dir:
        write_json(f"{a.out_dir}/report.json", {"criteria": entries, "exit_code": code}, config_hash(cfg))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
