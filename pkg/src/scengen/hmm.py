"""Categorical hidden Markov models.

Likelihoods are computed with per-step scaled forward/backward recursions
so that long sequences stay inside the float range; the log-likelihood is
accumulated from the per-step normalizers. A sequence the model cannot
produce is reported with a ``-inf`` log-likelihood instead of an error.

Models are immutable after construction and every operation here is a
pure function, so concurrent use across threads is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError, PosteriorUndefinedError, TrainingError

ROW_SUM_TOL = 1e-9
_ENTRY_TOL = 1e-12


def _check_rows(name: str, arr: np.ndarray) -> None:
    if np.any(arr < -_ENTRY_TOL) or np.any(arr > 1.0 + _ENTRY_TOL):
        raise InputError(f"{name} entries must lie in [0, 1]")
    dev = np.max(np.abs(arr.sum(axis=-1) - 1.0))
    if dev > ROW_SUM_TOL:
        raise InputError(f"every row of {name} must sum to 1 (deviation {dev:.3e})")


def _as_symbols(sequence, alphabet_size: int) -> np.ndarray:
    seq = np.asarray(sequence)
    if seq.ndim != 1 or seq.size == 0:
        raise InputError("sequence must be a nonempty 1-D list of symbol indices")
    if seq.dtype.kind not in "iu":
        if not np.all(np.mod(seq, 1) == 0):
            raise InputError("symbols must be integers")
    seq = seq.astype(np.int64)
    if np.any(seq < 0) or np.any(seq >= alphabet_size):
        raise InputError(f"symbol out of range for alphabet of size {alphabet_size}")
    return seq


@dataclass
class CategoricalHmm:
    """Hidden Markov chain emitting symbols from a finite alphabet.

    Parameters
    ----------
    transition : (K, K) array-like
        Row-stochastic matrix; entry (k, l) is the probability of moving
        from hidden state k to hidden state l.
    emission : (K, M) array-like
        Row k is the emission distribution of hidden state k.
    start : (K,) array-like
        Distribution of the first hidden state (the chain emits from the
        state it starts in, then alternates transition/emission).
    """

    transition: np.ndarray
    emission: np.ndarray
    start: np.ndarray

    def __post_init__(self):
        self.transition = np.array(self.transition, dtype=float)
        self.emission = np.array(self.emission, dtype=float)
        self.start = np.array(self.start, dtype=float)
        if self.transition.ndim != 2 or self.transition.shape[0] != self.transition.shape[1]:
            raise InputError("transition must be a square matrix")
        k = self.transition.shape[0]
        if self.emission.ndim != 2 or self.emission.shape[0] != k:
            raise InputError("emission must have one row per hidden state")
        if self.start.shape != (k,):
            raise InputError("start must be a length-K vector")
        _check_rows("transition", self.transition)
        _check_rows("emission", self.emission)
        _check_rows("start", self.start[None, :])
        for arr in (self.transition, self.emission, self.start):
            arr.setflags(write=False)

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def alphabet_size(self) -> int:
        return self.emission.shape[1]

    def to_dict(self) -> dict:
        return {
            "type": "hmm",
            "K": self.num_states,
            "M": self.alphabet_size,
            "transition": self.transition.tolist(),
            "emission": self.emission.tolist(),
            "start": self.start.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CategoricalHmm":
        if payload.get("type") != "hmm":
            raise InputError("payload does not describe a categorical HMM")
        model = cls(payload["transition"], payload["emission"], payload["start"])
        if model.num_states != payload.get("K") or model.alphabet_size != payload.get("M"):
            raise InputError("K/M fields disagree with the array shapes")
        return model


@dataclass
class TrellisResult:
    """Scaled forward/backward trellis for one observation sequence.

    ``forward[t]`` sums to 1 at every position reached with positive
    probability; ``scaling`` holds the per-step normalizers whose log-sum
    is ``log_likelihood``. ``backward[t]`` is the backward vector divided
    by the normalizers of positions t+1..L, so ``forward * backward`` rows
    are exactly the smoothing posteriors.
    """

    log_likelihood: float
    forward: np.ndarray
    scaling: np.ndarray
    backward: Optional[np.ndarray] = None


def hmm_forward(model: CategoricalHmm, sequence) -> TrellisResult:
    """Run the scaled forward recursion.

    Returns
    -------
    TrellisResult
        ``log_likelihood`` is the natural log of the exact probability of
        the sequence (the sum over all hidden paths). If the model cannot
        produce the sequence it is ``-inf`` and trellis rows past the
        extinction point stay zero.
    """
    seq = _as_symbols(sequence, model.alphabet_size)
    length, k = len(seq), model.num_states
    forward = np.zeros((length, k))
    scaling = np.zeros(length)
    vec = model.start * model.emission[:, seq[0]]
    for t in range(length):
        if t > 0:
            vec = (forward[t - 1] @ model.transition) * model.emission[:, seq[t]]
        total = vec.sum()
        scaling[t] = total
        if total <= 0.0:
            return TrellisResult(float("-inf"), forward, scaling)
        forward[t] = vec / total
    return TrellisResult(float(np.log(scaling).sum()), forward, scaling)


def hmm_backward(model: CategoricalHmm, sequence) -> TrellisResult:
    """Run the scaled backward recursion (the forward pass supplies the normalizers).

    For a sequence with positive probability, the identity
    ``P(X) = sum_l start[l] * emission[l, x_1] * b_l(1)`` recovers the same
    probability as :func:`hmm_forward`.
    """
    seq = _as_symbols(sequence, model.alphabet_size)
    res = hmm_forward(model, seq)
    length, k = len(seq), model.num_states
    backward = np.zeros((length, k))
    if not np.isfinite(res.log_likelihood):
        return TrellisResult(res.log_likelihood, res.forward, res.scaling, backward)
    backward[length - 1] = 1.0
    for t in range(length - 2, -1, -1):
        backward[t] = (
            model.transition @ (model.emission[:, seq[t + 1]] * backward[t + 1])
        ) / res.scaling[t + 1]
    return TrellisResult(res.log_likelihood, res.forward, res.scaling, backward)


def hmm_posterior(model: CategoricalHmm, sequence, position: int) -> np.ndarray:
    """Posterior distribution of the hidden state at a position.

    Parameters
    ----------
    position : int
        1-based position in the sequence (1 <= position <= L).

    Raises
    ------
    PosteriorUndefinedError
        If the sequence has zero probability under the model.
    """
    seq = _as_symbols(sequence, model.alphabet_size)
    if not 1 <= position <= len(seq):
        raise InputError(f"position {position} outside 1..{len(seq)}")
    res = hmm_backward(model, seq)
    if not np.isfinite(res.log_likelihood):
        raise PosteriorUndefinedError("sequence has zero probability under the model")
    gamma = res.forward[position - 1] * res.backward[position - 1]
    return gamma / gamma.sum()


def _rows_or_uniform(numerators: np.ndarray) -> np.ndarray:
    # rows with no expected mass fall back to uniform instead of NaN
    sums = numerators.sum(axis=1, keepdims=True)
    out = np.where(sums > 0.0, numerators / np.where(sums > 0.0, sums, 1.0),
                   1.0 / numerators.shape[1])
    return out / out.sum(axis=1, keepdims=True)


@dataclass
class BaumWelchResult:
    """Fitted model plus the total training log-likelihood per EM iteration."""

    model: CategoricalHmm
    log_likelihoods: list = field(default_factory=list)


def baum_welch_fit(dataset, num_states: int, *, alphabet_size: Optional[int] = None,
                   max_iters: int = 100, tol: float = 1e-6, seed: int = 0) -> BaumWelchResult:
    """Fit a :class:`CategoricalHmm` by expectation-maximization.

    Rows are initialized from flat Dirichlet draws seeded by ``seed``. The
    per-iteration total log-likelihood (evaluated before each update) is
    recorded in the result; it is non-decreasing up to float roundoff.
    Iteration stops when the improvement drops below ``tol`` or after
    ``max_iters`` iterations.

    Parameters
    ----------
    dataset : list of sequences
        Nonempty list of integer symbol sequences (lengths may differ).
    num_states : int
        Number of hidden states K of the fitted model.
    alphabet_size : int, optional
        Inferred as ``1 + max symbol`` when omitted.
    """
    dataset = list(dataset)
    if not dataset:
        raise InputError("dataset must contain at least one sequence")
    if num_states < 1:
        raise InputError("num_states must be >= 1")
    if alphabet_size is None:
        alphabet_size = 1 + max(int(np.max(np.asarray(s))) for s in dataset)
    seqs = [_as_symbols(s, alphabet_size) for s in dataset]

    rng = np.random.default_rng(seed)
    k, m = num_states, alphabet_size
    model = CategoricalHmm(
        rng.dirichlet(np.ones(k), size=k),
        rng.dirichlet(np.ones(m), size=k),
        rng.dirichlet(np.ones(k)),
    )

    history: list = []
    for _ in range(max_iters):
        start_acc = np.zeros(k)
        trans_acc = np.zeros((k, k))
        emit_acc = np.zeros((k, m))
        total_ll = 0.0
        for seq in seqs:
            res = hmm_backward(model, seq)
            if not np.isfinite(res.log_likelihood):
                raise TrainingError("a training sequence has zero probability "
                                    "under the current parameters")
            total_ll += res.log_likelihood
            gamma = res.forward * res.backward
            start_acc += gamma[0]
            for t in range(len(seq) - 1):
                trans_acc += (
                    res.forward[t][:, None] * model.transition
                    * (model.emission[:, seq[t + 1]] * res.backward[t + 1])[None, :]
                ) / res.scaling[t + 1]
            np.add.at(emit_acc.T, seq, gamma)
        history.append(float(total_ll))
        if len(history) > 1 and history[-1] - history[-2] < tol:
            break
        model = CategoricalHmm(
            _rows_or_uniform(trans_acc),
            _rows_or_uniform(emit_acc),
            _rows_or_uniform(start_acc[None, :])[0],
        )
    return BaumWelchResult(model, history)


def hmm_sample(model: CategoricalHmm, length: int, rng_seed, *, prefix=()) -> list:
    """Draw a symbol sequence of the given length, deterministic per seed.

    ``rng_seed`` may be an int or a ``numpy.random.Generator``. With a
    nonempty ``prefix`` the hidden-state distribution is first filtered
    through those symbols and the returned sequence continues them (the
    prefix itself is not included in the output).
    """
    if length < 1:
        raise InputError("length must be >= 1")
    rng = np.random.default_rng(rng_seed)
    k, m = model.num_states, model.alphabet_size
    symbols = []
    if len(prefix) > 0:
        res = hmm_forward(model, prefix)
        if not np.isfinite(res.log_likelihood):
            raise InputError("prefix has zero probability under the model")
        weights = res.forward[-1]
        state = int(rng.choice(k, p=weights / weights.sum()))
    else:
        state = int(rng.choice(k, p=model.start / model.start.sum()))
        symbols.append(int(rng.choice(m, p=model.emission[state] / model.emission[state].sum())))
    while len(symbols) < length:
        row = model.transition[state]
        state = int(rng.choice(k, p=row / row.sum()))
        erow = model.emission[state]
        symbols.append(int(rng.choice(m, p=erow / erow.sum())))
    return symbols
