"""Plot accuracy curves from a sweep's plot_long.csv (needs matplotlib).

    python scripts/plot_sweep.py results/zout/plot_long.csv --out zout.png
"""

import argparse
import csv
from collections import defaultdict


def main():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("csv")
    p.add_argument("--metric", default="accuracy", choices=("accuracy", "modularity"))
    p.add_argument("--out", default="sweep.png")
    args = p.parse_args()

    curves = defaultdict(list)
    with open(args.csv) as fh:
        for r in csv.DictReader(fh):
            if r["metric"] == args.metric:
                curves[(r["series_name"], r["series"], r["method"], r["x_name"])].append((float(r["x"]), float(r["mean"]), float(r["se"])))
    series = sorted({k[:2] for k in curves})
    fig, axes = plt.subplots(1, len(series), figsize=(4.5 * len(series), 3.5), squeeze=False)
    for ax, (sname, sval) in zip(axes[0], series):
        for (n, v, method, x_name), pts in sorted(curves.items()):
            if (n, v) != (sname, sval):
                continue
            pts.sort()
            xs, ys, es = zip(*pts)
            ax.errorbar(xs, ys, yerr=es, marker="o", ms=3, capsize=2, label=method)
            ax.set_xlabel(x_name)
        ax.set_title(f"{sname} = {sval}")
        ax.set_ylabel(args.metric)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
