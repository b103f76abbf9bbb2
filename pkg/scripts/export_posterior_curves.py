#!/usr/bin/env python3
"""Export posterior-over-noise-variance curves for plotting.

For noisy copies of dataset rows at each timestep, averages the exact
posterior and the k-NN approximation over the dataset and writes both
curves as CSV (t, sigma2, prob). Feed the output to any plotting tool
to compare the two estimators.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dtpm.data import cap_rows, load_csv, split_semi_supervised  # noqa: E402
from dtpm.neighbors import build_index  # noqa: E402
from dtpm.posterior import analytic_posterior, nonparametric_posterior  # noqa: E402
from dtpm.schedule import build_schedule, noising_sample  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", required=True, help="CSV with a 'label' column")
    parser.add_argument("--out-prefix", required=True,
                        help="writes <prefix>_analytic.csv and <prefix>_nonparam.csv")
    parser.add_argument("--timesteps", type=int, default=300)
    parser.add_argument("--beta-hi", type=float, default=0.01)
    parser.add_argument("--k", type=int, default=32)
    parser.add_argument("--samples", type=int, default=50,
                        help="rows to average each curve over")
    parser.add_argument("--noise-t", type=int, default=0,
                        help="timestep used to noise the query rows")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    ds = cap_rows(load_csv(args.data))
    split = split_semi_supervised(ds, args.seed)
    sched = build_schedule(args.timesteps, args.beta_hi)
    index = build_index(split.train)
    rng = np.random.default_rng(args.seed)

    n = min(args.samples, split.test.shape[0])
    rows = split.test[rng.choice(split.test.shape[0], n, replace=False)]
    analytic_avg = np.zeros(sched.T)
    nonparam_avg = np.zeros(sched.T)
    for row in rows:
        x_s = noising_sample(sched, row, args.noise_t, rng)
        analytic_avg += analytic_posterior(x_s, split.train, sched).probs
        nonparam_avg += nonparametric_posterior(x_s, index, args.k, sched).probs
    analytic_avg /= n
    nonparam_avg /= n

    for suffix, probs in (("analytic", analytic_avg), ("nonparam", nonparam_avg)):
        path = f"{args.out_prefix}_{suffix}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "sigma2", "prob"])
            for t, (s2, p) in enumerate(zip(sched.sigma2, probs)):
                writer.writerow([t, repr(float(s2)), repr(float(p))])
        print(f"wrote {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
