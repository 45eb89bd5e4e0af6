"""Learning Kraus operators by gradient descent constrained to the Stiefel manifold.

The M * mu operators of a model are stacked into one tall complex matrix
with orthonormal columns; each update moves along the manifold with a
Cayley-style retraction, so the completeness constraint holds after every
accepted step. Per-sequence loss terms within a batch are independent and
reduced in dataset order, so results are deterministic for a fixed seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (GradientUndefinedError, InputError, StepFailureError,
                     TrainingError)
from .hmm import _as_symbols
from .qhmm import (UNDERFLOW_PROB, DensityMatrix, KrausModel, _dagger,
                   _raw_log_likelihood)

STIEFEL_TOL = 1e-8
MAX_STEP_HALVINGS = 30


def orthonormality_residual(matrix) -> float:
    """Max-norm of (matrix^dagger matrix - identity)."""
    m = np.asarray(matrix)
    gram = m.conj().T @ m
    return float(np.max(np.abs(gram - np.eye(m.shape[1]))))


@dataclass
class StiefelPoint:
    """A tall complex matrix with orthonormal columns (stacked Kraus operators)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] < m.shape[1] or m.shape[1] < 1:
            raise InputError("expected a tall 2-D matrix (rows >= cols >= 1)")
        res = orthonormality_residual(m)
        if res > STIEFEL_TOL:
            raise InputError(f"columns are not orthonormal (residual {res:.3e})")
        m.setflags(write=False)
        self.matrix = m

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def residual(self) -> float:
        return orthonormality_residual(self.matrix)


def _draw_stiefel(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    z = (rng.standard_normal((rows, cols))
         + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    # fix the QR phase ambiguity so the draw is a deterministic function of z
    d = np.diagonal(r).copy()
    d[d == 0] = 1.0
    return q * (d / np.abs(d)).conj()


def random_stiefel(rows: int, cols: int, seed) -> StiefelPoint:
    """Orthonormalization of an i.i.d. standard complex Gaussian matrix."""
    if cols < 1 or rows < cols:
        raise InputError("need rows >= cols >= 1")
    return StiefelPoint(_draw_stiefel(np.random.default_rng(seed), rows, cols))


def _as_kappa(kappa) -> np.ndarray:
    if isinstance(kappa, StiefelPoint):
        return kappa.matrix
    arr = np.asarray(kappa, dtype=complex)
    if arr.ndim != 2:
        raise InputError("kappa must be a 2-D complex matrix")
    return arr


def _as_state(pi0) -> np.ndarray:
    return pi0.matrix if isinstance(pi0, DensityMatrix) else np.asarray(pi0, dtype=complex)


def _partition(arr: np.ndarray, alphabet_size: int, multiplicity: int) -> np.ndarray:
    k = arr.shape[1]
    if arr.shape[0] != alphabet_size * multiplicity * k:
        raise InputError(
            f"kappa has {arr.shape[0]} rows, expected "
            f"{alphabet_size * multiplicity * k} (= M * mu * K)")
    return arr.reshape(alphabet_size, multiplicity, k, k)


def nll_loss(kappa, batch, pi0, alphabet_size: int, multiplicity: int = 1) -> float:
    """Mean negative log-likelihood of a batch under the stacked operators.

    A sequence with zero (or underflowed) probability makes the whole
    batch loss +inf. Off-manifold matrices are accepted, which keeps the
    loss differentiable for finite-difference probes. Equal-length batches
    propagate all belief states at once (stacked matmuls); mixed lengths
    fall back to a per-sequence loop.
    """
    arr = _as_kappa(kappa)
    ops = _partition(arr, alphabet_size, multiplicity)
    rho0 = _as_state(pi0)
    seqs = [_as_symbols(seq, alphabet_size) for seq in batch]
    if not seqs:
        raise InputError("batch must be nonempty")
    if len(seqs) > 1 and len({len(s) for s in seqs}) == 1:
        return _nll_loss_equal_length(ops, rho0, np.stack(seqs))
    total = 0.0
    for seq in seqs:
        ll = _raw_log_likelihood(ops, rho0, seq)
        if ll == float("-inf"):
            return math.inf
        total += ll
    return -total / len(seqs)


def _nll_loss_equal_length(ops: np.ndarray, rho0: np.ndarray,
                           seqs: np.ndarray) -> float:
    batch_size, length = seqs.shape
    dim = rho0.shape[0]
    beliefs = np.broadcast_to(rho0, (batch_size, dim, dim)).copy()
    log_prob = np.zeros(batch_size)
    for t in range(length):
        symbols = seqs[:, t]
        updated = np.empty_like(beliefs)
        for x in np.unique(symbols):
            rows = np.nonzero(symbols == x)[0]
            sym_ops = ops[x]
            updated[rows] = (sym_ops[None] @ beliefs[rows][:, None]
                             @ _dagger(sym_ops)[None]).sum(axis=1)
        probs = np.trace(updated, axis1=1, axis2=2).real
        if probs.min() <= UNDERFLOW_PROB:
            return math.inf
        log_prob += np.log(probs)
        updated = (updated + updated.conj().transpose(0, 2, 1)) / 2.0
        beliefs = updated / probs[:, None, None]
    return float(-log_prob.mean())


def nll_gradient(kappa, batch, pi0, alphabet_size: int, multiplicity: int = 1) -> np.ndarray:
    """Gradient of :func:`nll_loss` with respect to the conjugated kappa.

    Wirtinger convention: for the real-valued loss l, the returned G holds
    dl/d(conj(kappa)), so -G is the steepest-descent direction and central
    finite differences on the real/imaginary parts of kappa recover
    2*Re(G) and 2*Im(G).

    Raises
    ------
    GradientUndefinedError
        If the loss is not finite on the batch.
    """
    arr = _as_kappa(kappa)
    ops = _partition(arr, alphabet_size, multiplicity)
    rho0 = _as_state(pi0)
    batch = list(batch)
    if not batch:
        raise InputError("batch must be nonempty")
    k = arr.shape[1]
    grad_ops = np.zeros_like(ops)
    for raw_seq in batch:
        seq = _as_symbols(raw_seq, alphabet_size)
        states = [rho0]
        probs = []
        rho = rho0
        for x in seq:
            sym_ops = ops[x]
            updated = (sym_ops @ rho @ _dagger(sym_ops)).sum(axis=0)
            prob = float(updated.trace().real)
            if prob <= UNDERFLOW_PROB:
                raise GradientUndefinedError("loss is not finite on this batch")
            rho = (updated + updated.conj().T) / (2.0 * prob)
            states.append(rho)
            probs.append(prob)
        # adjoint pass: accumulate one term per position, then pull the
        # dual matrix back through that position's operators
        dual = np.eye(k, dtype=complex)
        for t in range(len(seq) - 1, -1, -1):
            x = seq[t]
            grad_ops[x] -= (dual @ ops[x] @ states[t]) / probs[t]
            dual = (_dagger(ops[x]) @ dual @ ops[x]).sum(axis=0) / probs[t]
    return (grad_ops / len(batch)).reshape(arr.shape)


def finite_difference_gradient(kappa, batch, pi0, alphabet_size: int,
                               multiplicity: int = 1, step: float = 1e-6) -> np.ndarray:
    """Central-difference estimate of :func:`nll_gradient` (slow; the checking oracle)."""
    arr = _as_kappa(kappa).copy()
    grad = np.zeros_like(arr)
    for i in range(arr.shape[0]):
        for j in range(arr.shape[1]):
            parts = []
            for unit in (1.0, 1j):
                plus = arr.copy()
                plus[i, j] += step * unit
                minus = arr.copy()
                minus[i, j] -= step * unit
                hi = nll_loss(plus, batch, pi0, alphabet_size, multiplicity)
                lo = nll_loss(minus, batch, pi0, alphabet_size, multiplicity)
                if not (math.isfinite(hi) and math.isfinite(lo)):
                    raise GradientUndefinedError("loss is not finite near this point")
                parts.append((hi - lo) / (2.0 * step))
            grad[i, j] = 0.5 * (parts[0] + 1j * parts[1])
    return grad


def cayley_step(kappa, gradient, tau: float) -> StiefelPoint:
    """One descent step along the manifold.

    Computes ``kappa - tau * U (I + (tau/2) V^dagger U)^-1 V^dagger kappa``
    with U = [G | kappa], V = [kappa | -G]; the result has orthonormal
    columns for any G. ``tau = 0`` returns kappa unchanged.

    Raises
    ------
    StepFailureError
        If the inner solve is singular or orthonormality is lost to
        roundoff; callers halve tau and retry.
    """
    arr = _as_kappa(kappa)
    grad = np.asarray(gradient, dtype=complex)
    if grad.shape != arr.shape:
        raise InputError("gradient shape must match kappa")
    if tau < 0:
        raise InputError("tau must be >= 0")
    if tau == 0.0:
        return kappa if isinstance(kappa, StiefelPoint) else StiefelPoint(arr)
    u = np.concatenate([grad, arr], axis=1)
    v = np.concatenate([arr, -grad], axis=1)
    lhs = np.eye(2 * arr.shape[1], dtype=complex) + (tau / 2.0) * (v.conj().T @ u)
    try:
        y = np.linalg.solve(lhs, v.conj().T @ arr)
    except np.linalg.LinAlgError as exc:
        raise StepFailureError("inner solve is singular") from exc
    new = arr - tau * (u @ y)
    if not np.all(np.isfinite(new)):
        raise StepFailureError("step produced non-finite entries")
    try:
        return StiefelPoint(new)
    except InputError as exc:
        raise StepFailureError(str(exc)) from exc


@dataclass
class TrainConfig:
    """Hyper-parameters for :func:`train_qhmm`.

    The defaults are desk-scale tunables, not recommendations from theory:
    learning_rate is the initial step size, multiplied by ``decay`` after
    every epoch; each epoch shuffles the dataset (seeded) and splits it
    into ``num_batches`` contiguous batches with one manifold step each.
    ``epochs = 0`` returns the seeded random initialization untouched.
    """

    dim: int
    learning_rate: float = 0.05
    decay: float = 0.95
    num_batches: int = 5
    epochs: int = 100
    multiplicity: int = 1
    seed: int = 0
    gradient_mode: str = "analytic"

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("dim must be >= 1")
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be positive")
        if not 0.0 < self.decay <= 1.0:
            raise InputError("decay must lie in (0, 1]")
        if self.num_batches < 1:
            raise InputError("num_batches must be >= 1")
        if self.epochs < 0:
            raise InputError("epochs must be >= 0")
        if self.multiplicity < 1:
            raise InputError("multiplicity must be >= 1")
        if self.gradient_mode not in ("analytic", "finite_difference"):
            raise InputError("gradient_mode must be 'analytic' or 'finite_difference'")

    def to_dict(self) -> dict:
        return {"dim": self.dim, "learning_rate": self.learning_rate,
                "decay": self.decay, "num_batches": self.num_batches,
                "epochs": self.epochs, "multiplicity": self.multiplicity,
                "seed": self.seed, "gradient_mode": self.gradient_mode}

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainConfig":
        """Build a config from a JSON-style mapping (unknown keys rejected)."""
        known = {"dim", "learning_rate", "decay", "num_batches", "epochs",
                 "multiplicity", "seed", "gradient_mode"}
        unknown = set(payload) - known
        if unknown:
            raise InputError(f"unknown config fields {sorted(unknown)}")
        if "dim" not in payload:
            raise InputError("config requires the 'dim' field")
        return cls(**payload)


@dataclass(frozen=True)
class TrainRecord:
    """One mini-batch step: loss at the pre-step iterate and the tau used."""

    epoch: int
    batch: int
    loss: float
    tau: float


def train_qhmm(dataset, config: TrainConfig, alphabet_size: int,
               initial_state: Optional[DensityMatrix] = None):
    """Fit Kraus operators to a dataset of symbol sequences.

    Returns ``(model, records)``: the trained model (stacked operators
    repartitioned, fixed initial state) and one :class:`TrainRecord` per
    processed batch. The initial state defaults to maximally mixed and is
    not learned. A step whose solve fails or whose post-step batch loss is
    not finite is retried with tau halved, up to 30 times, before training
    aborts with a :class:`TrainingError`.
    """
    dataset = list(dataset)
    if not dataset:
        raise InputError("dataset must contain at least one sequence")
    seqs = [_as_symbols(s, alphabet_size) for s in dataset]
    k, mu = config.dim, config.multiplicity
    if initial_state is None:
        initial_state = DensityMatrix.maximally_mixed(k)
    if initial_state.dim != k:
        raise InputError("initial state dimension disagrees with config.dim")

    rng = np.random.default_rng(config.seed)
    kappa = StiefelPoint(_draw_stiefel(rng, alphabet_size * mu * k, k))
    gradient = nll_gradient if config.gradient_mode == "analytic" \
        else finite_difference_gradient

    records = []
    tau = config.learning_rate
    for epoch in range(config.epochs):
        order = rng.permutation(len(seqs))
        for index, chunk in enumerate(np.array_split(order, config.num_batches)):
            if chunk.size == 0:
                continue
            batch = [seqs[i] for i in chunk]
            loss = nll_loss(kappa, batch, initial_state, alphabet_size, mu)
            if not math.isfinite(loss):
                raise TrainingError(
                    f"batch loss is not finite at epoch {epoch} batch {index}")
            grad = gradient(kappa, batch, initial_state, alphabet_size, mu)
            step_tau = tau
            for _ in range(1 + MAX_STEP_HALVINGS):
                try:
                    candidate = cayley_step(kappa, grad, step_tau)
                except StepFailureError:
                    step_tau /= 2.0
                    continue
                if math.isfinite(nll_loss(candidate, batch, initial_state,
                                          alphabet_size, mu)):
                    break
                step_tau /= 2.0
            else:
                raise TrainingError(
                    f"step failed after {MAX_STEP_HALVINGS} halvings at "
                    f"epoch {epoch} batch {index} (loss {loss:.6g}, tau {tau:.3g})")
            records.append(TrainRecord(epoch, index, loss, step_tau))
            kappa = candidate
        tau *= config.decay
    model = KrausModel.from_stiefel(kappa.matrix, alphabet_size, mu, initial_state)
    return model, records


def write_training_log(path, records) -> None:
    """Write the per-batch loss trace as CSV with header epoch,batch,loss,tau."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "batch", "loss", "tau"])
        for rec in records:
            writer.writerow([rec.epoch, rec.batch, repr(rec.loss), repr(rec.tau)])
