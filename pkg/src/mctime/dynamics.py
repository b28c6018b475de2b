"""Exact time evolution of small driven quantum systems.

Two state-transfer models are built in: a two-level avoided crossing driven
through sigma_z (drift (delta/2) sigma_x), and its three-level
generalization with two avoided crossings and a diagonal control. Controls
are piecewise constant: the total evolution time T is divided into equal
segments and each segment contributes exp(-i (H0 + eps_k Hc) dt) to the
propagator. Natural units, hbar = 1; delta carries the energy scale, so
times are in units of 1/delta.

All functions here are pure and operate on immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NumericError, ParameterError, ShapeError

HERMITIAN_TOL = 1e-10
FIDELITY_SLACK = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)


class ModelId(str, Enum):
    LZ = "LZ"
    GENERALIZED_LZ3 = "GENERALIZED_LZ3"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def _hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


@dataclass(frozen=True)
class ControlProblem:
    """Drift/control Hamiltonians plus the transfer states |i> -> |f>."""

    model_id: ModelId
    h0: np.ndarray
    hc: np.ndarray
    initial_state: np.ndarray
    target_state: np.ndarray
    delta: float
    delta_a: float = 0.0
    delta_b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "h0", _readonly(self.h0))
        object.__setattr__(self, "hc", _readonly(self.hc))
        object.__setattr__(self, "initial_state", _readonly(self.initial_state))
        object.__setattr__(self, "target_state", _readonly(self.target_state))
        if self.h0.shape != self.hc.shape or self.h0.shape[0] != self.h0.shape[1]:
            raise ShapeError("h0 and hc must be square matrices of equal size")
        for name, m in (("h0", self.h0), ("hc", self.hc)):
            if _hermiticity_defect(m) > 1e-12:
                raise ParameterError(f"{name} is not Hermitian")
        for name, v in (
            ("initial_state", self.initial_state),
            ("target_state", self.target_state),
        ):
            if v.shape != (self.h0.shape[0],):
                raise ShapeError(f"{name} has wrong dimension")
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ParameterError(f"{name} is not unit-norm")

    @property
    def dim(self) -> int:
        return self.h0.shape[0]


@dataclass(frozen=True)
class Protocol:
    """Piecewise-constant control: amplitudes per segment and total time.

    The segment length T / N_ts is implied, never stored.
    """

    amplitudes: np.ndarray
    total_time: float

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.float64)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if amps.ndim != 1 or amps.size < 1:
            raise ParameterError("amplitudes must be a non-empty 1-D vector")
        if not self.total_time > 0:
            raise ParameterError("total_time must be positive")

    @property
    def n_segments(self) -> int:
        return self.amplitudes.size

    @property
    def segment_duration(self) -> float:
        return self.total_time / self.n_segments


def build_problem(
    model_id: ModelId | str,
    delta: float,
    delta_a: float = 0.0,
    delta_b: float = 0.0,
    initial_state=None,
    target_state=None,
) -> ControlProblem:
    """Assemble the Hamiltonians and transfer states for a model.

    For the three-level generalization the transfer states are not uniquely
    fixed by the physics; |0> -> |2> is the default and both can be
    overridden.
    """
    model_id = ModelId(model_id)
    if not delta > 0:
        raise ParameterError("delta must be positive")
    if model_id is ModelId.LZ:
        h0 = 0.5 * delta * SIGMA_X
        hc = SIGMA_Z.copy()
        default_i = np.array([1.0, 0.0], dtype=np.complex128)
        default_f = np.array([0.0, 1.0], dtype=np.complex128)
    else:
        h0 = 0.5 * np.array(
            [
                [0.0, delta_a, 0.0],
                [delta_a, 0.0, delta_b],
                [0.0, delta_b, -2.0 * delta],
            ],
            dtype=np.complex128,
        )
        hc = np.diag([1.0, 0.0, 1.0]).astype(np.complex128)
        default_i = np.array([1.0, 0.0, 0.0], dtype=np.complex128)
        default_f = np.array([0.0, 0.0, 1.0], dtype=np.complex128)
    psi_i = default_i if initial_state is None else np.asarray(initial_state, np.complex128)
    psi_f = default_f if target_state is None else np.asarray(target_state, np.complex128)
    return ControlProblem(model_id, h0, hc, psi_i, psi_f, delta, delta_a, delta_b)


def segment_propagator(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) for Hermitian h, via eigendecomposition.

    Exact to round-off for the 2x2 and 3x3 matrices used here; the result
    is unitary to ~1e-15.
    """
    h = np.asarray(h, dtype=np.complex128)
    if dt < 0:
        raise ParameterError("dt must be non-negative")
    if _hermiticity_defect(h) > HERMITIAN_TOL:
        raise NumericError("matrix is not Hermitian within 1e-10")
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * w * dt)
    return (v * phase[None, :]) @ v.conj().T


def control_propagators(problem: ControlProblem, amplitudes, dt: float) -> np.ndarray:
    """Stack of exp(-i (H0 + eps Hc) dt) over an array of amplitudes.

    One batched eigendecomposition for a whole mesh axis; this is what makes
    landscape generation cheap.
    """
    eps = np.atleast_1d(np.asarray(amplitudes, dtype=np.float64))
    h = problem.h0[None, :, :] + eps[:, None, None] * problem.hc[None, :, :]
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * w * dt)
    return (v * phase[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def propagate(problem: ControlProblem, protocol: Protocol) -> np.ndarray:
    """Total propagator of a piecewise-constant protocol (segment 1 first)."""
    dt = protocol.segment_duration
    u = np.eye(problem.dim, dtype=np.complex128)
    for eps in protocol.amplitudes:
        u = segment_propagator(problem.h0 + eps * problem.hc, dt) @ u
    return u


def fidelity(problem: ControlProblem, protocol: Protocol) -> float:
    """State-transfer fidelity |<f| U |i>|^2 in [0, 1].

    Round-off excursions up to 1e-12 outside [0, 1] are clamped; anything
    larger indicates a broken propagator and raises.
    """
    u = propagate(problem, protocol)
    amp = np.vdot(problem.target_state, u @ problem.initial_state)
    f = float(np.abs(amp) ** 2)
    if f < -FIDELITY_SLACK or f > 1.0 + FIDELITY_SLACK:
        raise NumericError(f"fidelity {f} outside [0,1] beyond round-off")
    return min(max(f, 0.0), 1.0)


def rabi_oracle(delta: float, eps: float, total_time: float) -> float:
    """Closed-form fidelity of a constant-amplitude two-level protocol.

    The constant Hamiltonian (delta/2) sigma_x + eps sigma_z is a rotation
    about the axis (delta, 0, 2 eps), giving the transition probability
    (delta^2 / Omega^2) sin^2(Omega T / 2) with Omega = sqrt(delta^2 +
    4 eps^2). Used as an independent cross-check of the propagator path.
    """
    if not delta > 0:
        raise ParameterError("delta must be positive")
    omega = np.sqrt(delta**2 + 4.0 * eps**2)
    return float((delta / omega) ** 2 * np.sin(0.5 * omega * total_time) ** 2)


def analytic_mct(delta: float) -> float:
    """Minimum control time pi/delta of the two-level transfer."""
    if not delta > 0:
        raise ParameterError("delta must be positive")
    return float(np.pi / delta)
