"""Control-landscape datasets: build, flatten, split, persist, scan.

A landscape is the fidelity evaluated on a uniform mesh over the control
amplitudes at a fixed total time T; a dataset is one landscape per T over a
time sweep. Pixels are flattened with the last mesh axis varying fastest,
and that order is preserved end to end (network inputs, weight maps, CSV
exports).
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .dynamics import ControlProblem, ModelId, build_problem, control_propagators
from .errors import FormatError, NumericError, ParameterError, ShapeError
from .seeds import shuffled_indices

_MAGIC = b"MCTL"
_VERSION = 1


@dataclass(frozen=True)
class MeshAxis:
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ParameterError("mesh axis needs at least 2 points")
        if not self.stop > self.start:
            raise ParameterError("mesh axis must have stop > start")

    def points(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class MeshSpec:
    axes: tuple[MeshAxis, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if len(self.axes) < 1:
            raise ParameterError("mesh needs at least one axis")

    @classmethod
    def uniform(cls, n_axes: int, start: float = -5.0, stop: float = 5.0,
                count: int = 100) -> "MeshSpec":
        return cls(tuple(MeshAxis(start, stop, count) for _ in range(n_axes)))

    @property
    def n_axes(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.count for ax in self.axes)

    @property
    def pixel_count(self) -> int:
        return int(np.prod(self.shape))

    def axis_points(self) -> list[np.ndarray]:
        return [ax.points() for ax in self.axes]

    def pixel_coordinates(self) -> np.ndarray:
        """(pixel_count, n_axes) array of amplitudes in flattening order."""
        grids = np.meshgrid(*self.axis_points(), indexing="ij")
        return np.stack([g.ravel(order="C") for g in grids], axis=1)


@dataclass(frozen=True)
class Landscape:
    total_time: float
    mesh: MeshSpec
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        if px.shape != (self.mesh.pixel_count,):
            raise ShapeError("pixel vector does not match the mesh")

    def as_grid(self) -> np.ndarray:
        return self.pixels.reshape(self.mesh.shape, order="C")


@dataclass(frozen=True)
class LandscapeDataset:
    problem: ControlProblem
    times: np.ndarray
    landscapes: tuple[Landscape, ...]
    seed: int = 0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "landscapes", tuple(self.landscapes))
        if len(self.landscapes) != times.size:
            raise ShapeError("one landscape per time required")
        if times.size and np.any(np.diff(times) <= 0):
            raise ParameterError("times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    @property
    def mesh(self) -> MeshSpec:
        return self.landscapes[0].mesh

    def pixel_rows(self, indices) -> np.ndarray:
        """Stack the selected landscapes into an (n, pixel_count) matrix."""
        return np.stack([self.landscapes[i].pixels for i in indices])


@dataclass(frozen=True)
class FourWaySplit:
    """Disjoint index sets: autoencoder/k-means training, validation, performance."""

    ae_train: np.ndarray
    km_train: np.ndarray
    ae_val: np.ndarray
    perf: np.ndarray
    seed: int

    def parts(self):
        return (self.ae_train, self.km_train, self.ae_val, self.perf)


def generate_landscape(problem: ControlProblem, total_time: float,
                       mesh: MeshSpec) -> Landscape:
    """Fidelity at every mesh point for one total time.

    Pixel j equals fidelity(problem, Protocol(mesh point j, T)). Segment
    propagators are shared across the mesh: each axis only contributes
    `count` distinct matrices, so the full grid reduces to a couple of
    batched tensor contractions.
    """
    if not total_time > 0:
        raise ParameterError("total_time must be positive")
    n_axes = mesh.n_axes
    dt = total_time / n_axes
    props = [control_propagators(problem, pts, dt) for pts in mesh.axis_points()]

    state = problem.initial_state
    for u in props[:-1]:
        state = np.einsum("mab,...b->...ma", u, state)
    bra_rows = np.einsum("a,mab->mb", problem.target_state.conj(), props[-1])
    amp = np.einsum("mb,...b->...m", bra_rows, state)

    pixels = np.abs(amp) ** 2
    bad = (pixels < -1e-12) | (pixels > 1.0 + 1e-12)
    if np.any(bad):
        coord = np.unravel_index(int(np.argmax(bad)), mesh.shape)
        raise NumericError(
            f"fidelity outside [0,1] beyond round-off at pixel {coord}, T={total_time}"
        )
    np.clip(pixels, 0.0, 1.0, out=pixels)
    return Landscape(float(total_time), mesh, pixels.ravel(order="C"))


def time_sweep(t_start: float, t_end: float, t_step: float) -> np.ndarray:
    """Uniform time grid t_start, t_start+t_step, ... <= t_end + t_step/2."""
    if not (t_start > 0 and t_end >= t_start and t_step > 0):
        raise ParameterError("need 0 < t_start <= t_end and t_step > 0")
    n = math.floor((t_end - t_start) / t_step + 0.5) + 1
    return t_start + np.arange(n) * t_step


def generate_dataset(problem: ControlProblem, t_start: float, t_end: float,
                     t_step: float, mesh: MeshSpec, seed: int = 0) -> LandscapeDataset:
    """One landscape per time-sweep point; deterministic."""
    times = time_sweep(t_start, t_end, t_step)
    landscapes = tuple(generate_landscape(problem, float(t), mesh) for t in times)
    return LandscapeDataset(problem, times, landscapes, seed=int(seed))


def split_dataset(n: int, seed: int) -> FourWaySplit:
    """Shuffled four-way split: 35/35/15/15 percent, remainders forward.

    The 70% training block is halved into autoencoder and k-means training
    sets (odd remainder to ae_train); the 30% holdout is halved into
    autoencoder validation and performance sets (odd remainder to ae_val).
    Shuffling is splitmix64 Fisher-Yates, so the partition is identical on
    every platform for a given seed.
    """
    if n < 4:
        raise ParameterError("need at least 4 items to split four ways")
    order = shuffled_indices(n, seed)
    train_sz = -(-7 * n // 10)  # ceil(0.7 n) in exact integer arithmetic
    ae_sz = (train_sz + 1) // 2
    holdout = n - train_sz
    val_sz = (holdout + 1) // 2
    cuts = np.cumsum([ae_sz, train_sz - ae_sz, val_sz])
    ae_train, km_train, ae_val, perf = np.split(order, cuts)
    return FourWaySplit(
        np.sort(ae_train), np.sort(km_train), np.sort(ae_val), np.sort(perf),
        seed=int(seed),
    )


def empirical_mct(dataset: LandscapeDataset) -> float:
    """Total time of the landscape holding the dataset-wide maximum pixel.

    Ties go to the smallest T.
    """
    if len(dataset) == 0:
        raise ParameterError("dataset is empty")
    best_t = None
    best_f = -np.inf
    for t, land in zip(dataset.times, dataset.landscapes):
        peak = float(land.pixels.max())
        if peak > best_f:
            best_f = peak
            best_t = float(t)
    return best_t


# ---------------------------------------------------------------------------
# Persistence. Dataset file: magic "MCTL", u32 version, u64 metadata length,
# UTF-8 JSON metadata, then per-landscape float64 pixel blobs in time order.
# Everything little-endian.
# ---------------------------------------------------------------------------


def _state_to_json(v: np.ndarray) -> list:
    return [[float(c.real), float(c.imag)] for c in v]


def _state_from_json(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)


def save_dataset(dataset: LandscapeDataset, path) -> None:
    meta = {
        "model_id": dataset.problem.model_id.value,
        "delta": dataset.problem.delta,
        "delta_a": dataset.problem.delta_a,
        "delta_b": dataset.problem.delta_b,
        "initial_state": _state_to_json(dataset.problem.initial_state),
        "target_state": _state_to_json(dataset.problem.target_state),
        "n_ts": dataset.mesh.n_axes,
        "mesh_axes": [[ax.start, ax.stop, ax.count] for ax in dataset.mesh.axes],
        "times": [float(t) for t in dataset.times],
        "seed": dataset.seed,
        "flattening": "last-fastest",
    }
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for land in dataset.landscapes:
            fh.write(land.pixels.astype("<f8", copy=False).tobytes())


def load_dataset(path) -> LandscapeDataset:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise FormatError("bad magic at offset 0")
    if len(raw) < 16:
        raise FormatError(f"truncated header at offset {len(raw)}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != _VERSION:
        raise FormatError(f"unsupported version {version} at offset 4")
    (meta_len,) = struct.unpack_from("<Q", raw, 8)
    off = 16
    if len(raw) < off + meta_len:
        raise FormatError(f"truncated metadata at offset {len(raw)}")
    try:
        meta = json.loads(raw[off:off + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable metadata at offset {off}: {exc}") from None
    off += meta_len

    problem = build_problem(
        ModelId(meta["model_id"]),
        meta["delta"],
        meta.get("delta_a", 0.0),
        meta.get("delta_b", 0.0),
        initial_state=_state_from_json(meta["initial_state"]),
        target_state=_state_from_json(meta["target_state"]),
    )
    mesh = MeshSpec(tuple(MeshAxis(a, b, int(c)) for a, b, c in meta["mesh_axes"]))
    times = np.asarray(meta["times"], dtype=np.float64)
    npix = mesh.pixel_count
    landscapes = []
    for t in times:
        end = off + 8 * npix
        if len(raw) < end:
            raise FormatError(f"truncated pixel data at offset {len(raw)}")
        pixels = np.frombuffer(raw, dtype="<f8", count=npix, offset=off)
        landscapes.append(Landscape(float(t), mesh, pixels))
        off = end
    if off != len(raw):
        raise FormatError(f"trailing data at offset {off}")
    return LandscapeDataset(problem, times, tuple(landscapes), seed=int(meta["seed"]))


def save_split(split: FourWaySplit, path) -> None:
    """Plain-text split manifest: seed plus the four index lists."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"seed {split.seed}\n")
        for name, idx in zip(("ae_train", "km_train", "ae_val", "perf"),
                             split.parts()):
            fh.write(name + " " + " ".join(str(int(i)) for i in idx) + "\n")


def load_split(path) -> FourWaySplit:
    fields = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            fields[parts[0]] = parts[1:]
    try:
        seed = int(fields["seed"][0])
        lists = [np.asarray([int(i) for i in fields[k]], dtype=np.int64)
                 for k in ("ae_train", "km_train", "ae_val", "perf")]
    except (KeyError, IndexError, ValueError) as exc:
        raise FormatError(f"malformed split manifest: {exc}") from None
    return FourWaySplit(*lists, seed=seed)
