"""Unsupervised minimum-control-time estimation from control landscapes.

The package chains four stages: exact piecewise-constant propagation of a
small driven quantum system (dynamics), fidelity-landscape dataset
construction over a sweep of total evolution times (landscapes), a
from-scratch dense autoencoder plus k-means to group the landscapes without
labels (autoencoder, clustering), and a confusion-style boundary sweep
whose accuracy peak predicts the minimum control time (confusion). The
introspection module analyzes what the trained networks attend to.
"""

from .autoencoder import (ArchitectureSpec, NetworkParams, TrainConfig,
                          TrainReport, ensemble_specs, extract_features,
                          forward, gradient, init_network, load_network,
                          loss, save_network, train)
from .clustering import (ClusterModel, ElbowResult, averaged_elbow,
                         elbow_scan, kmeans_assign, kmeans_fit)
from .config import ExperimentConfig, load_config, save_config, smoke_profile
from .confusion import (AccuracyCurve, MctPrediction, auxiliary_labels,
                        ensemble_average, permuted_accuracy, predict_mct,
                        sweep)
from .dynamics import (ControlProblem, ModelId, Protocol, analytic_mct,
                       build_problem, fidelity, propagate, rabi_oracle,
                       segment_propagator)
from .errors import (AnalysisError, FormatError, NumericError, ParameterError,
                     ShapeError, TrainingDivergedError)
from .introspection import (ImportanceMap, PeriodEstimate, center_fidelity_curve,
                            cluster_boundary, compare_periods, estimate_period,
                            feature_trajectories, overlay_mask, select_pixels,
                            weight_importance)
from .landscapes import (FourWaySplit, Landscape, LandscapeDataset, MeshAxis,
                         MeshSpec, empirical_mct, generate_dataset,
                         generate_landscape, load_dataset, load_split,
                         save_dataset, save_split, split_dataset)

__version__ = "0.1.0"
