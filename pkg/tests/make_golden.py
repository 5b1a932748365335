"""Regenerate the frozen CSV files under tests/golden.

    python3 tests/make_golden.py

Only rerun after an intentional semantic change; the diff of the golden
files is the review artifact.
"""

import io
import sys
from pathlib import Path

from flyfast.cli import main

GOLDEN = Path(__file__).parent / "golden"

RUNS = {
    "trajectory_T70.csv": ["trajectory", "--spec", "epidemic.pop", "--T", "70"],
    "meanfield_sweep_k.csv": ["check", "--spec", "epidemic.pop", "--formulas", "epidemic.pctl",
                              "--sweep", "k=0..70"],
    "exact_N8_sweep_k.csv": ["check", "--mode", "exact", "--spec", "epidemic.pop",
                             "--formulas", "epidemic.pctl", "--sweep", "k=0..70"],
    "meanfield_P3_sweep_t0.csv": ["check", "--spec", "epidemic.pop", "--formula",
                                  "P<=0.5 [ true U<=3 (!e & !i & P>0.3 [ true U<=5 i ]) ]",
                                  "--sweep", "t0=0..10"],
}


def p1_gap_rows(exact_csv: str, mf_csv: str, k: int = 10):
    def pick(text):
        for line in text.splitlines()[1:]:
            kk, name, prob, *_ = line.split(",")
            if kk == str(k) and name == "P1":
                return float(prob)
        raise KeyError(k)

    e, m = pick(exact_csv), pick(mf_csv)
    return f"quantity,value\nexact_N8,{e:.12g}\nmeanfield,{m:.12g}\ndifference,{m - e:.12g}\n"


def generate() -> dict[str, str]:
    out = {}
    for name, argv in RUNS.items():
        buf = io.StringIO()
        old, sys.stdout = sys.stdout, buf
        try:
            code = main(argv)
        finally:
            sys.stdout = old
        if code != 0:
            raise SystemExit(f"{name}: exit {code}")
        out[name] = buf.getvalue()
    out["p1_k10_exact_vs_meanfield.csv"] = p1_gap_rows(out["exact_N8_sweep_k.csv"],
                                                      out["meanfield_sweep_k.csv"])
    return out


if __name__ == "__main__":
    GOLDEN.mkdir(exist_ok=True)
    for name, text in generate().items():
        (GOLDEN / name).write_text(text, encoding="utf-8", newline="")
        print("wrote", name)
