#!/usr/bin/env python3
"""Long-time behaviour: the accuracy curve oscillates with twice the period
of the center-of-landscape fidelity.

Trains on the standard sweep (T up to 10), then labels a much longer sweep
(T up to ~50) and compares the dominant periods.
"""

import numpy as np

from mctime import center_fidelity_curve
from mctime.config import smoke_profile
from mctime.landscapes import time_sweep
from mctime import pipeline

cfg = smoke_profile().with_overrides(members=("190x40", "190x20"))
dataset = pipeline.run_generate(cfg)
ensemble = pipeline.run_train(cfg, dataset, log=print)

row = pipeline.run_longtime_from(cfg, dataset, ensemble, t_end_long=49.9,
                                 log=print)
print(f"\naccuracy period tau      = {row.comparison.tau_accuracy:.3f}")
print(f"2 x fidelity period      = {row.comparison.two_tau_fidelity:.3f}")
print(f"ratio                    = {row.comparison.ratio:.3f}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the figure")
else:
    times = time_sweep(cfg.t_start, 49.9, cfg.t_step)
    fid = center_fidelity_curve(dataset.problem, times)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True,
                                   constrained_layout=True)
    ax1.plot(row.mean_curve.t_aux, row.mean_curve.accuracy, lw=0.8)
    ax1.set_ylabel("ensemble accuracy")
    ax2.plot(times, fid, lw=0.8, color="tab:orange")
    ax2.set_ylabel("center fidelity")
    ax2.set_xlabel("total time T")
    fig.savefig("demo_long_time.png", dpi=120)
    print("wrote demo_long_time.png")
