"""Regenerate the bundled synthetic month (30 days, hourly) and price day.

Run from this directory: python3 generate.py
"""

import math
import random

DAYS = 30
STATES = 24
rng = random.Random(20240601)


def clip(x, lo=0.0, hi=1.0):
    return max(lo, min(hi, x))


def spv_day():
    clear = rng.uniform(0.55, 1.0)
    row = []
    for h in range(STATES):
        t = h + 0.5
        if 6.0 <= t <= 19.0:
            shape = math.sin(math.pi * (t - 6.0) / 13.0) ** 1.5
            row.append(clip(clear * shape * rng.uniform(0.85, 1.05)))
        else:
            row.append(0.0)
    return row


def wt_day():
    level = rng.uniform(0.3, 0.6)
    row = []
    for h in range(STATES):
        diurnal = 0.15 * math.cos(2.0 * math.pi * (h - 2) / 24.0)
        row.append(clip(level + diurnal + rng.gauss(0.0, 0.06)))
    return row


LOAD_SHAPE = [
    0.52, 0.48, 0.46, 0.45, 0.45, 0.48, 0.55, 0.63, 0.70, 0.74, 0.76, 0.78,
    0.79, 0.78, 0.77, 0.77, 0.80, 0.86, 0.93, 0.98, 1.00, 0.94, 0.80, 0.64,
]


def load_day():
    level = rng.uniform(0.92, 1.0)
    return [clip(level * s * rng.uniform(0.97, 1.03)) for s in LOAD_SHAPE]


def write(name, rows):
    with open(name, "w") as f:
        f.write(",".join(f"h{h:02d}" for h in range(STATES)) + "\n")
        for row in rows:
            f.write(",".join(f"{v:.4f}" for v in row) + "\n")


write("spv.csv", [spv_day() for _ in range(DAYS)])
write("wt.csv", [wt_day() for _ in range(DAYS)])
write("load.csv", [load_day() for _ in range(DAYS)])

# Single evening peak; cheapest hours 01-06; above the daily mean from 09 to 22.
PRICES = [
    0.036, 0.031, 0.029, 0.028, 0.028, 0.030, 0.033, 0.039, 0.046, 0.057, 0.059, 0.060,
    0.061, 0.062, 0.063, 0.066, 0.071, 0.079, 0.088, 0.095, 0.091, 0.077, 0.059, 0.043,
]
mean = sum(PRICES) / len(PRICES)
assert all((p > mean) == (9 <= h <= 22) for h, p in enumerate(PRICES)), mean
with open("prices.csv", "w") as f:
    f.write("state,grid_price\n")
    for h, p in enumerate(PRICES):
        f.write(f"{h},{p:.3f}\n")
