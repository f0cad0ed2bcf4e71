#!/usr/bin/env python3
"""Line plots from qsw CSV output.

    plot_csv.py data.csv --x p --y value --group theta --where kind=rt --where t=5 -o out.svg

Rows with value "nan" are dropped. One line per distinct value of --group.
"""

import argparse
import math
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def parse_args(argv):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("csv")
    ap.add_argument("--x", required=True)
    ap.add_argument("--y", default="value")
    ap.add_argument("--yerr", help="column with error bars")
    ap.add_argument("--group", action="append", default=[], help="column(s) distinguishing lines")
    ap.add_argument("--where", action="append", default=[], help="COLUMN=VALUE filter, repeatable")
    ap.add_argument("--x-in-pi", action="store_true", help="divide the x column by pi")
    ap.add_argument("--title", default="")
    ap.add_argument("-o", "--out", required=True, help="output file (.svg, .pdf, .png)")
    return ap.parse_args(argv)


def apply_filters(df, filters):
    for f in filters:
        col, _, val = f.partition("=")
        if col not in df.columns:
            sys.exit(f"unknown column in --where: {col}")
        series = df[col]
        try:
            df = df[abs(series.astype(float) - float(val)) <= 1e-9 * max(1.0, abs(float(val)))]
        except ValueError:
            df = df[series.astype(str) == val]
    return df


def label_for(keys, values):
    if not keys:
        return None
    if not isinstance(values, tuple):
        values = (values,)
    parts = []
    for k, v in zip(keys, values):
        if k == "theta" and isinstance(v, float):
            parts.append(f"theta={v / math.pi:.4g}pi")
        else:
            parts.append(f"{k}={v}")
    return ", ".join(parts)


def main(argv=None):
    args = parse_args(argv)
    df = pd.read_csv(args.csv, na_values=["nan"], keep_default_na=False)
    df = apply_filters(df, args.where)
    for col in [args.x, args.y] + args.group + ([args.yerr] if args.yerr else []):
        if col not in df.columns:
            sys.exit(f"unknown column: {col}")
    df = df.dropna(subset=[args.x, args.y])
    if df.empty:
        sys.exit("no rows left after filtering")

    fig, ax = plt.subplots(figsize=(6, 4))
    groups = df.groupby(args.group, sort=True) if args.group else [(None, df)]
    for key, sub in groups:
        sub = sub.sort_values(args.x)
        x = sub[args.x] / math.pi if args.x_in_pi else sub[args.x]
        if args.yerr:
            ax.errorbar(x, sub[args.y], yerr=sub[args.yerr], marker=".", capsize=2, label=label_for(args.group, key))
        else:
            ax.plot(x, sub[args.y], marker=".", label=label_for(args.group, key))
    ax.set_xlabel(f"{args.x} / pi" if args.x_in_pi else args.x)
    ax.set_ylabel(args.y)
    if args.title:
        ax.set_title(args.title)
    if args.group:
        ax.legend(fontsize="small")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
