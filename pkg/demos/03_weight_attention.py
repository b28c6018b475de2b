#!/usr/bin/env python3
"""Which landscape pixels do the trained networks attend to?

Trains a small ensemble, builds the first-layer importance map, thresholds
it into a pixel mask, and overlays the mask on the T = 4 landscape, where
the central maximum has split into two symmetric structures.
"""

import numpy as np

from mctime import generate_landscape, select_pixels, weight_importance
from mctime.config import smoke_profile
from mctime.introspection import mask_rotation_overlap
from mctime import pipeline

cfg = smoke_profile()
dataset = pipeline.run_generate(cfg)
ensemble = pipeline.run_train(cfg, dataset, log=print)

importance = weight_importance(ensemble.params_list())
print("\nimportance map: min %.3f, mean %.3f, max %.3f"
      % (importance.mean_map.min(), importance.mean_map.mean(),
         importance.mean_map.max()))

threshold = cfg.resolved_threshold
mask = select_pixels(importance, threshold)
overlap = mask_rotation_overlap(mask, dataset.mesh.shape)
print(f"threshold {threshold}: {int(mask.sum())} of {mask.size} pixels selected")
print(f"Jaccard overlap with the 180-degree rotated mask: {overlap:.3f}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the figure")
else:
    land = generate_landscape(dataset.problem, 4.0, dataset.mesh)
    grid = land.as_grid()
    sel = mask.reshape(dataset.mesh.shape)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.2),
                                   constrained_layout=True)
    ax1.imshow(importance.mean_map.reshape(dataset.mesh.shape),
               origin="lower", extent=[-5, 5, -5, 5], cmap="magma")
    ax1.set_title("mean first-layer importance")
    shaded = np.ma.masked_where(~sel, np.ones_like(grid))
    ax2.imshow(grid, origin="lower", extent=[-5, 5, -5, 5], cmap="viridis")
    ax2.imshow(shaded, origin="lower", extent=[-5, 5, -5, 5], cmap="gray",
               vmin=0, vmax=1, alpha=0.9)
    ax2.set_title(f"T = 4 landscape, selected pixels (>= {threshold})")
    for ax in (ax1, ax2):
        ax.set_xlabel(r"$\epsilon_2$")
        ax.set_ylabel(r"$\epsilon_1$")
    fig.savefig("demo_weight_attention.png", dpi=120)
    print("wrote demo_weight_attention.png")
