#!/usr/bin/env python3
"""Regenerate the synthetic price fixtures under data/.

Two sectors of per-ticker daily CSVs driven by a sector factor, plus a
two-asset wide CSV whose second column has exactly twice the daily return of
the first. Uses only the stdlib RNG so the output is stable across platforms.
"""

import argparse
import datetime as dt
import math
import random
from pathlib import Path

SECTORS = {
    "Industrials": ["ANVIL", "BOLT", "CRANE", "DYNAMO", "GEAR"],
    "Utilities": ["HYDRO", "PYLON", "SOLAR", "WIND"],
}
START = dt.date(2019, 7, 1)
END = dt.date(2023, 6, 30)


def weekdays(start, end):
    d = start
    while d <= end:
        if d.weekday() < 5:
            yield d
        d += dt.timedelta(days=1)


def write_sector(out, rng, tickers, drift, factor_vol):
    dates = list(weekdays(START, END))
    prices = {t: 100.0 * (1 + rng.random()) for t in tickers}
    idio = {t: 0.006 + 0.01 * rng.random() for t in tickers}
    beta = {t: 0.5 + rng.random() for t in tickers}
    rows = {t: [] for t in tickers}
    for d in dates:
        f = rng.gauss(0.0, factor_vol)
        for t in tickers:
            r = drift + beta[t] * f + rng.gauss(0.0, idio[t])
            prices[t] *= math.exp(r)
            close = round(prices[t], 4)
            volume = int(1e5 + 1e5 * rng.random())
            rows[t].append(f"{d.isoformat()},{close},{close},{close},{close},{volume}")
    for t in tickers:
        lines = ["Date,Open,High,Low,Close,Volume"] + rows[t]
        (out / f"{t}.csv").write_text("\n".join(lines) + "\n")


def write_pair(path):
    lines = ["Date,A,B"]
    a = b = 100.0
    for i, d in enumerate(weekdays(dt.date(2021, 1, 1), dt.date(2022, 12, 30))):
        if i:
            r = 0.01 if i % 2 else -0.008
            a *= 1 + r
            b *= 1 + 2 * r
        lines.append(f"{d.isoformat()},{a!r},{b!r}")
    path.write_text("\n".join(lines) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--seed", type=int, default=2019)
    args = ap.parse_args()
    out = Path(args.out)
    rng = random.Random(args.seed)
    synthetic = out / "synthetic"
    synthetic.mkdir(parents=True, exist_ok=True)
    write_sector(synthetic, rng, SECTORS["Industrials"], 0.0004, 0.011)
    write_sector(synthetic, rng, SECTORS["Utilities"], 0.0002, 0.007)
    write_pair(out / "hrp_pair.csv")


if __name__ == "__main__":
    main()
