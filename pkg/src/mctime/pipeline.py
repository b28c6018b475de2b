"""Stage orchestration: generate, train, predict, weights, longtime.

Each stage is a plain function usable from Python; the CLI wraps these with
file I/O, manifests, and exit codes. Per-member seeds are derived from the
master seed by documented mixing (see seeds.derive_seed), so a single
integer reproduces the whole experiment.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import autoencoder as ae
from . import clustering, confusion, introspection
from .config import ExperimentConfig, config_hash
from .dynamics import (ControlProblem, ModelId, Protocol, analytic_mct,
                       build_problem, fidelity, propagate, rabi_oracle)
from .errors import NumericError, ParameterError, TrainingDivergedError
from .landscapes import (FourWaySplit, LandscapeDataset, MeshAxis, MeshSpec,
                         empirical_mct, generate_dataset, generate_landscape,
                         save_split, split_dataset, time_sweep)
from .reporting import write_csv, write_json
from .seeds import derive_seed


def problem_from_config(cfg: ExperimentConfig) -> ControlProblem:
    return build_problem(
        ModelId(cfg.model_id), cfg.delta, cfg.delta_a, cfg.delta_b,
        initial_state=None if cfg.initial_state is None
        else np.array([complex(re, im) for re, im in cfg.initial_state]),
        target_state=None if cfg.target_state is None
        else np.array([complex(re, im) for re, im in cfg.target_state]),
    )


def mesh_from_config(cfg: ExperimentConfig) -> MeshSpec:
    return MeshSpec(tuple(MeshAxis(float(lo), float(hi), int(n))
                          for lo, hi, n in cfg.mesh_axes))


@dataclass
class MemberPlan:
    index: int  # position in the full ensemble grid; fixes the seed
    label: str
    spec: ae.ArchitectureSpec
    seed: int


def member_plans(cfg: ExperimentConfig, input_dim: int) -> list[MemberPlan]:
    """Ensemble members in grid order, optionally filtered by label.

    Seeds are tied to the position in the *full* grid, so a filtered run
    trains bit-identical networks to the corresponding members of a full
    run.
    """
    wanted = None if cfg.members is None else set(cfg.members)
    plans = []
    for index, label in enumerate(cfg.member_labels()):
        if wanted is not None and label not in wanted:
            continue
        nh, nf = (int(x) for x in label.split("x"))
        plans.append(MemberPlan(
            index, label, ae.ArchitectureSpec(input_dim, nh, nf),
            derive_seed(cfg.master_seed, "train", index),
        ))
    if wanted is not None and len(plans) != len(wanted):
        known = set(cfg.member_labels())
        raise ParameterError(f"unknown member labels: {sorted(wanted - known)}")
    return plans


def split_for(cfg: ExperimentConfig, n: int) -> FourWaySplit:
    return split_dataset(n, derive_seed(cfg.master_seed, "split"))


def run_generate(cfg: ExperimentConfig) -> LandscapeDataset:
    problem = problem_from_config(cfg)
    mesh = mesh_from_config(cfg)
    return generate_dataset(problem, cfg.t_start, cfg.t_end, cfg.t_step, mesh,
                            seed=cfg.master_seed)


@dataclass
class TrainedMember:
    plan: MemberPlan
    params: ae.NetworkParams
    report: ae.TrainReport

    @property
    def label(self) -> str:
        return self.plan.label


@dataclass
class EnsembleResult:
    members: list[TrainedMember]
    failed: list[dict]
    split: FourWaySplit

    def params_list(self) -> list[ae.NetworkParams]:
        return [m.params for m in self.members]


def train_config_for(cfg: ExperimentConfig, plan: MemberPlan) -> ae.TrainConfig:
    return ae.TrainConfig(
        epochs=cfg.epochs, batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate, l2_alpha=cfg.l2_alpha,
        adam_beta1=cfg.adam_beta1, adam_beta2=cfg.adam_beta2,
        adam_eps=cfg.adam_eps, seed=plan.seed,
    )


def run_train(cfg: ExperimentConfig, dataset: LandscapeDataset,
              out_dir=None, log=None) -> EnsembleResult:
    """Train the ensemble on the autoencoder split of the dataset.

    A diverged member is recorded and skipped; the stage only fails if every
    member diverges. With out_dir set, each network is saved as an MCTN file
    alongside its per-epoch loss report and the split manifest.
    """
    split = split_for(cfg, len(dataset))
    x_train = dataset.pixel_rows(split.ae_train)
    x_val = dataset.pixel_rows(split.ae_val)
    plans = member_plans(cfg, dataset.mesh.pixel_count)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        save_split(split, os.path.join(out_dir, "split.txt"))

    members, failed = [], []
    for plan in plans:
        tc = train_config_for(cfg, plan)
        try:
            params, report = ae.train(x_train, x_val, plan.spec, tc)
        except TrainingDivergedError as exc:
            failed.append({"label": plan.label, "index": plan.index,
                           "epoch": exc.epoch, "batch": exc.batch})
            if log:
                log(f"member {plan.label} diverged: {exc}")
            continue
        members.append(TrainedMember(plan, params, report))
        if log:
            log(f"member {plan.label}: train_loss={report.train_loss[-1]:.4e} "
                f"val_loss={report.val_loss[-1]:.4e}")
        if out_dir is not None:
            final_mse = ae.loss(params, x_train, 0.0)
            ae.save_network(
                params,
                os.path.join(out_dir, f"member{plan.index:02d}_{plan.label}.mctn"),
                config=tc,
                extra={
                    "member_index": plan.index,
                    "label": plan.label,
                    "final_train_loss": report.train_loss[-1],
                    "final_val_loss": report.val_loss[-1],
                    "final_train_mse": final_mse,
                },
            )
            write_csv(
                os.path.join(out_dir, f"train_report_{plan.label}.csv"),
                ["epoch", "train_loss", "val_loss"],
                [(e + 1, tl, vl) for e, (tl, vl) in
                 enumerate(zip(report.train_loss, report.val_loss))],
            )
    if not members:
        raise NumericError("all ensemble members diverged")
    return EnsembleResult(members, failed, split)


def load_ensemble(networks_dir, split_path=None) -> EnsembleResult:
    """Rebuild an EnsembleResult from a directory of MCTN files."""
    from .errors import FormatError
    from .landscapes import load_split

    paths = sorted(
        os.path.join(networks_dir, p) for p in os.listdir(networks_dir)
        if p.endswith(".mctn")
    )
    if not paths:
        raise FormatError(f"no .mctn files in {networks_dir}")
    loaded = []
    for path in paths:
        params, meta = ae.load_network(path)
        index = int(meta.get("member_index", len(loaded)))
        label = meta.get("label", params.spec.label)
        seed = meta.get("config", {}).get("seed", 0)
        plan = MemberPlan(index, label, params.spec, seed)
        epochs = meta.get("config", {}).get("epochs", 0)
        report = ae.TrainReport(np.full(max(epochs, 1), np.nan),
                                np.full(max(epochs, 1), np.nan))
        loaded.append(TrainedMember(plan, params, report))
    loaded.sort(key=lambda m: m.plan.index)
    split = None
    if split_path is None and os.path.exists(os.path.join(networks_dir, "split.txt")):
        split_path = os.path.join(networks_dir, "split.txt")
    if split_path is not None:
        split = load_split(split_path)
    return EnsembleResult(loaded, [], split)


def extract_dataset_features(params: ae.NetworkParams, dataset: LandscapeDataset,
                             indices, chunk: int = 256) -> np.ndarray:
    """Encoder features for the selected landscapes, in index order."""
    indices = np.asarray(indices, dtype=np.int64)
    out = np.empty((indices.size, params.w2.shape[1]))
    for start in range(0, indices.size, chunk):
        sel = indices[start:start + chunk]
        out[start:start + chunk] = ae.extract_features(
            params, dataset.pixel_rows(sel))
    return out


@dataclass
class MemberPrediction:
    label: str
    model: clustering.ClusterModel
    curve: confusion.AccuracyCurve
    trajectories: introspection.FeatureTrajectories | None = None


@dataclass
class PredictionOutcome:
    k: int
    elbow_ks: np.ndarray
    elbow_mean_curve: np.ndarray
    elbow_k_star: int | None
    member_predictions: list[MemberPrediction]
    mean_curve: confusion.AccuracyCurve
    prediction: confusion.MctPrediction
    reference: dict = field(default_factory=dict)


def run_predict(cfg: ExperimentConfig, dataset: LandscapeDataset,
                ensemble: EnsembleResult, out_dir=None, log=None,
                with_trajectories: bool = True) -> PredictionOutcome:
    """Cluster features, sweep the confusion boundary, locate the peak.

    k-means is fit per member on the km_train features of the *given*
    dataset, so an ensemble trained elsewhere can be pointed at a new
    dataset (transfer) without retraining the autoencoders. Accuracy is
    evaluated on the perf split against the dataset's full time grid.
    """
    split = split_for(cfg, len(dataset))
    times = dataset.times

    # elbow over km_train features, averaged across members
    elbow_results = []
    km_feats = {}
    for m in ensemble.members:
        feats = extract_dataset_features(m.params, dataset, split.km_train)
        km_feats[m.label] = feats
        elbow_results.append(clustering.elbow_scan(
            feats, cfg.k_min, cfg.k_max,
            seed=derive_seed(cfg.master_seed, "elbow", m.plan.index)))
    mean_elbow, k_star = clustering.averaged_elbow(elbow_results)
    k = int(cfg.k_override) if cfg.k_override is not None else int(k_star)
    if log:
        log(f"elbow: k*={k_star}" + ("" if cfg.k_override is None
            else f" (overridden to k={k})"))

    member_predictions = []
    for m in ensemble.members:
        model = clustering.kmeans_fit(
            km_feats[m.label], k,
            seed=derive_seed(cfg.master_seed, "kmeans", m.plan.index))
        perf_feats = extract_dataset_features(m.params, dataset, split.perf)
        labels = clustering.kmeans_assign(model, perf_feats)
        curve = confusion.sweep(labels, times[split.perf], t_aux_grid=times)
        traj = None
        if with_trajectories:
            traj = introspection.feature_trajectories(m.params, model, dataset)
        member_predictions.append(MemberPrediction(m.label, model, curve, traj))

    mean_curve = confusion.ensemble_average([p.curve for p in member_predictions])
    if cfg.smoothing_window > 1:
        mean_curve = confusion.moving_average(mean_curve, cfg.smoothing_window)
    prediction = confusion.predict_mct(mean_curve, trim_fraction=cfg.trim_fraction)

    reference = {}
    if cfg.model_id == "LZ":
        reference["analytic_mct"] = analytic_mct(cfg.delta)
    else:
        reference["empirical_mct"] = empirical_mct(dataset)
    outcome = PredictionOutcome(k, elbow_results[0].ks, mean_elbow,
                                int(k_star), member_predictions, mean_curve,
                                prediction, reference)
    if out_dir is not None:
        _export_prediction(cfg, outcome, out_dir)
    if log:
        ref = ", ".join(f"{k_}={v:.4f}" for k_, v in reference.items())
        log(f"T' = {prediction.t_prime:.4f} ({ref})")
    return outcome


def _export_prediction(cfg: ExperimentConfig, outcome: PredictionOutcome,
                       out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    def _path(name):
        p = os.path.join(out_dir, name)
        paths.append(p)
        return p

    mean = outcome.mean_curve
    write_csv(_path("accuracy_curve.csv"),
              ["t_aux", "accuracy_mean", "accuracy_std", "n_members"],
              [(t, a, s, mean.n_members) for t, a, s in
               zip(mean.t_aux, mean.accuracy,
                   np.zeros_like(mean.accuracy) if mean.std is None else mean.std)])
    write_csv(_path("elbow.csv"), ["k", "mean_normalized_inertia"],
              list(zip(outcome.elbow_ks, outcome.elbow_mean_curve)))
    write_json(_path("prediction.json"), {
        "t_prime": outcome.prediction.t_prime,
        "window": list(outcome.prediction.window),
        "grid_step": cfg.t_step,
        "k": outcome.k,
        "elbow_k_star": outcome.elbow_k_star,
        "n_members": len(outcome.member_predictions),
        "master_seed": cfg.master_seed,
        "config_hash": config_hash(cfg),
        "reference": outcome.reference,
    })
    write_json(_path("clusters.json"), {
        p.label: {
            "k": p.model.k,
            "centroids": [list(map(float, c)) for c in p.model.centroids],
            "inertia": p.model.inertia,
            "seed": p.model.seed,
        }
        for p in outcome.member_predictions
    })
    for p in outcome.member_predictions:
        if p.trajectories is None:
            continue
        traj = p.trajectories
        nfeat = traj.features.shape[1]
        write_csv(
            _path(f"features_T_{p.label}.csv"),
            ["T"] + [f"f{i + 1}" for i in range(nfeat)] + ["cluster"],
            [(t, *feats, int(c)) for t, feats, c in
             zip(traj.times, traj.features, traj.clusters)],
        )
    return paths


@dataclass
class WeightsOutcome:
    importance: introspection.ImportanceMap
    mask: np.ndarray
    threshold: float
    rotation_overlap: float | None


def run_weights(cfg: ExperimentConfig, ensemble: EnsembleResult,
                dataset: LandscapeDataset, threshold: float | None = None,
                overlay_times=(4.0,), out_dir=None) -> WeightsOutcome:
    """First-layer importance map, pixel selection, and overlay exports."""
    threshold = cfg.resolved_threshold if threshold is None else float(threshold)
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError("threshold must lie in [0, 1]")
    importance = introspection.weight_importance(ensemble.params_list())
    mask = introspection.select_pixels(importance, threshold)
    overlap = None
    if dataset.mesh.n_axes == 2:
        overlap = introspection.mask_rotation_overlap(mask, dataset.mesh.shape)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        coords = dataset.mesh.pixel_coordinates()
        header = (["pixel_index"]
                  + [f"eps{i + 1}" for i in range(dataset.mesh.n_axes)]
                  + ["importance"])
        write_csv(os.path.join(out_dir, "weights_map.csv"), header,
                  [(j, *coords[j], importance.mean_map[j])
                   for j in range(coords.shape[0])])
        for t_want in overlay_times:
            i = int(np.argmin(np.abs(dataset.times - t_want)))
            land = dataset.landscapes[i]
            introspection.overlay_mask(
                land, mask,
                path=os.path.join(out_dir, f"overlay_T{land.total_time:g}.csv"))
    return WeightsOutcome(importance, mask, threshold, overlap)


@dataclass
class LongtimeRow:
    delta: float
    comparison: introspection.PeriodComparison
    mean_curve: confusion.AccuracyCurve
    fidelity_curve: np.ndarray


def run_longtime_from(cfg: ExperimentConfig, dataset_short: LandscapeDataset,
                      ensemble: EnsembleResult, t_end_long: float = 49.9,
                      out_dir=None, log=None) -> LongtimeRow:
    """Long-time prediction from an already trained ensemble.

    k-means is fit on the short (training) dataset's km_train features; the
    long dataset is then labeled in full and swept over its own time grid.
    """
    split = ensemble.split if ensemble.split is not None \
        else split_for(cfg, len(dataset_short))
    problem = dataset_short.problem
    mesh = dataset_short.mesh
    long_times = time_sweep(cfg.t_start, t_end_long, cfg.t_step)
    dataset_long = generate_dataset(problem, cfg.t_start, t_end_long,
                                    cfg.t_step, mesh, seed=cfg.master_seed)

    k = int(cfg.k_override) if cfg.k_override is not None else 2
    curves = []
    all_idx = np.arange(len(dataset_long))
    for m in ensemble.members:
        km_feats = extract_dataset_features(m.params, dataset_short,
                                            split.km_train)
        model = clustering.kmeans_fit(
            km_feats, k, seed=derive_seed(cfg.master_seed, "kmeans", m.plan.index))
        long_feats = extract_dataset_features(m.params, dataset_long, all_idx)
        labels = clustering.kmeans_assign(model, long_feats)
        curves.append(confusion.sweep(labels, long_times, t_aux_grid=long_times))
    mean_curve = confusion.ensemble_average(curves)
    fid_curve = introspection.center_fidelity_curve(problem, long_times)
    comparison = introspection.compare_periods(problem, mean_curve)
    if log:
        log(f"delta={cfg.delta}: tau_acc={comparison.tau_accuracy:.3f} "
            f"2*tau_fid={comparison.two_tau_fidelity:.3f} "
            f"ratio={comparison.ratio:.3f}")

    row = LongtimeRow(cfg.delta, comparison, mean_curve, fid_curve)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        tag = f"{cfg.delta:g}"
        write_csv(os.path.join(out_dir, f"longtime_accuracy_delta{tag}.csv"),
                  ["t_aux", "accuracy_mean", "accuracy_std", "n_members"],
                  [(t, a, s, mean_curve.n_members) for t, a, s in
                   zip(mean_curve.t_aux, mean_curve.accuracy, mean_curve.std)])
        write_csv(os.path.join(out_dir, f"longtime_fidelity_delta{tag}.csv"),
                  ["T", "center_fidelity"],
                  list(zip(long_times, fid_curve)))
    return row


def run_longtime(cfg: ExperimentConfig, deltas, t_end_long: float = 49.9,
                 out_dir=None, log=None) -> list[LongtimeRow]:
    """Full long-time study: per delta, train on the short sweep and predict
    over the extended one; writes longtime_periods.csv when out_dir is set."""
    rows = []
    for delta in deltas:
        cfg_d = cfg.with_overrides(delta=float(delta))
        if log:
            log(f"longtime: training delta={delta}")
        dataset_short = run_generate(cfg_d)
        ensemble = run_train(cfg_d, dataset_short, log=log)
        rows.append(run_longtime_from(cfg_d, dataset_short, ensemble,
                                      t_end_long, out_dir=out_dir, log=log))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(os.path.join(out_dir, "longtime_periods.csv"),
                  ["delta", "tau_accuracy", "two_tau_fidelity", "ratio"],
                  [(r.delta, r.comparison.tau_accuracy,
                    r.comparison.two_tau_fidelity, r.comparison.ratio)
                   for r in rows])
    return rows


def run_oracle_check(seed: int = 0, n_draws: int = 1000) -> list[tuple[str, bool, str]]:
    """Fast self-check of the propagator against independent closed forms."""
    rng = np.random.default_rng(seed)
    checks = []

    worst_u = 0.0
    problem = build_problem(ModelId.LZ, 1.0)
    for _ in range(n_draws):
        eps = rng.uniform(-5, 5, size=2)
        t = rng.uniform(0.05, 12.0)
        u = propagate(problem, Protocol(eps, t))
        worst_u = max(worst_u, float(np.max(np.abs(u.conj().T @ u - np.eye(2)))))
    checks.append(("unitarity", worst_u < 1e-12, f"max |U+U - I| = {worst_u:.2e}"))

    worst_r = 0.0
    for _ in range(n_draws):
        delta = rng.uniform(0.2, 3.0)
        eps = rng.uniform(-5, 5)
        t = rng.uniform(0.05, 12.0)
        prob = build_problem(ModelId.LZ, delta)
        f = fidelity(prob, Protocol(np.full(2, eps), t))
        worst_r = max(worst_r, abs(f - rabi_oracle(delta, eps, t)))
    checks.append(("rabi_oracle", worst_r < 1e-10,
                   f"max |F - oracle| = {worst_r:.2e}"))

    worst_z = 0.0
    for _ in range(200):
        delta = rng.uniform(0.2, 3.0)
        t = rng.uniform(0.05, 12.0)
        n_ts = int(rng.integers(1, 6))
        prob = build_problem(ModelId.LZ, delta)
        f = fidelity(prob, Protocol(np.zeros(n_ts), t))
        worst_z = max(worst_z, abs(f - np.sin(0.5 * delta * t) ** 2))
    checks.append(("zero_control", worst_z < 1e-10,
                   f"max |F - sin^2| = {worst_z:.2e}"))

    mesh = MeshSpec.uniform(2, -5.0, 5.0, 100)
    grid = generate_landscape(problem, 4.0, mesh).as_grid()
    sym_t = float(np.max(np.abs(grid - grid.T)))
    sym_r = float(np.max(np.abs(grid - grid[::-1, ::-1])))
    checks.append(("landscape_symmetry", max(sym_t, sym_r) < 1e-10,
                   f"transpose {sym_t:.2e}, rotation {sym_r:.2e}"))
    return checks
