#!/usr/bin/env python3
"""End-to-end minimum-control-time estimation at a reduced profile.

Runs the whole unsupervised chain on the two-level model: landscape sweep,
autoencoder ensemble, k-means with the elbow check, confusion-style boundary
sweep, and the accuracy-peak readout of the critical time. Uses the smoke
profile (50x50 mesh, four ensemble members) so it finishes in well under a
minute; the full production profile is the package default configuration.
"""

import numpy as np

from mctime import analytic_mct
from mctime.config import smoke_profile
from mctime import pipeline

cfg = smoke_profile()
print("profile:", dict(mesh=cfg.mesh_axes[0][2], t_step=cfg.t_step,
                       members=len(cfg.members), epochs=cfg.epochs))

dataset = pipeline.run_generate(cfg)
print(f"dataset: {len(dataset)} landscapes x {dataset.mesh.pixel_count} pixels")

ensemble = pipeline.run_train(cfg, dataset, log=print)
outcome = pipeline.run_predict(cfg, dataset, ensemble, log=print)

print("\nelbow-selected k:", outcome.elbow_k_star)
print("normalized mean inertia:", np.round(outcome.elbow_mean_curve, 3))
print(f"\npredicted minimum control time T' = {outcome.prediction.t_prime:.3f}")
print(f"analytic reference pi/delta      = {analytic_mct(cfg.delta):.3f}")
print(f"search window: {outcome.prediction.window}")

curve = outcome.mean_curve
print("\naccuracy curve (coarse view):")
for lo in np.arange(0.5, 10.0, 1.0):
    sel = (curve.t_aux >= lo) & (curve.t_aux < lo + 1.0)
    bar = "#" * int(40 * (curve.accuracy[sel].mean() - 0.5) * 2)
    print(f"  [{lo:4.1f}, {lo + 1:4.1f})  {curve.accuracy[sel].mean():.3f}  {bar}")
