"""Regenerate the synthetic fixtures and their expected values.

The expected-value files are computed here with numpy, independently of the
Rust implementation, and act as the spreadsheet-style oracle in the tests.
"""
import math
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent


def months(y0, m0, n):
    out, y, m = [], y0, m0
    for _ in range(n):
        out.append(f"{y:04d}-{m:02d}")
        m += 1
        if m == 13:
            y, m = y + 1, 1
    return out


def write(name, header, rows):
    with open(HERE / name, "w") as f:
        f.write(",".join(header) + "\n")
        for r in rows:
            f.write(",".join(x if isinstance(x, str) else repr(float(x)) for x in r) + "\n")


def real_adjust(p, e, cpi, basis):
    f = cpi[basis] / cpi
    return p * f, e * f


# 130 months with a linear earnings ramp and wiggling price and CPI.
k = np.arange(130)
dates = months(2000, 1, 130)
price = 100.0 + k + 3.0 * np.sin(k / 7.0)
earn = 1.0 + 0.05 * k
cpi = 100.0 * (1.0 + 0.002 * k + 0.01 * np.sin(k / 5.0))
write("synthetic_130.csv", ["Date", "P", "E", "CPI"], zip(dates, price, earn, cpi))
rp, re = real_adjust(price, earn, cpi, len(k) - 1)
window = 120
# earnings window: the `window` months preceding t
cape = [rp[t] / np.mean(re[t - window : t]) for t in range(window, len(k))]
write("synthetic_130_expected_cape.csv", ["Date", "CAPE"], zip(dates[window:], cape))

# five rows, varying CPI; real values at the latest-month basis
d5 = months(1990, 1, 5)
p5 = np.array([50.0, 52.5, 51.0, 55.0, 60.0])
e5 = np.array([2.0, 2.1, 2.2, 2.0, 2.5])
c5 = np.array([80.0, 82.0, 85.0, 90.0, 100.0])
write("real_adjust_5.csv", ["Date", "P", "E", "CPI"], zip(d5, p5, e5, c5))
rp5, re5 = real_adjust(p5, e5, c5, 4)
write("real_adjust_5_expected.csv", ["Date", "P", "E"], zip(d5, rp5, re5))

# constant inputs: CAPE is price / earnings for any window
d24 = months(2001, 1, 24)
write("constant.csv", ["Date", "P", "E", "CPI"], [(d, 100.0, 10.0, 100.0) for d in d24])

# CAPE values symmetric around their mean: deviations are exactly -1, +1
write("symmetric.csv", ["Date", "CAPE"], zip(months(2005, 1, 4), [19.0, 21.0, 19.0, 21.0]))
