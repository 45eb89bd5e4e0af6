"""Density-matrix sequence models driven by Kraus operators.

The belief state is a Hermitian, positive semidefinite, unit-trace complex
matrix; observing a symbol applies that symbol's operators and renormalizes
by the observation probability. Models are immutable after construction and
all operations return new objects, so concurrent evaluation across
sequences is safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InputError
from .hmm import CategoricalHmm, _as_symbols

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
COMPLETENESS_TOL = 1e-8
UNDERFLOW_PROB = 1e-300


def hermiticity_residual(matrix: np.ndarray) -> float:
    """Largest absolute deviation from matrix == matrix^dagger."""
    m = np.asarray(matrix)
    return float(np.max(np.abs(m - m.conj().T)))


def min_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of a (near-Hermitian) matrix."""
    m = np.asarray(matrix, dtype=complex)
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2.0)[0])


def _dagger(ops: np.ndarray) -> np.ndarray:
    return ops.conj().transpose(0, 2, 1)


class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace belief state."""

    def __init__(self, matrix, *, validate: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError("density matrix must be square")
        if validate:
            res = hermiticity_residual(m)
            if res > HERMITICITY_TOL:
                raise InputError(f"matrix is not Hermitian (residual {res:.3e})")
            tr = m.trace()
            if abs(tr - 1.0) > TRACE_TOL:
                raise InputError(f"trace must be 1 (got {tr})")
            lo = min_eigenvalue(m)
            if lo < -PSD_TOL:
                raise InputError(f"matrix is not positive semidefinite (min eig {lo:.3e})")
        m.setflags(write=False)
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        """Identity / dim: the symmetric full-rank default belief."""
        if dim < 1:
            raise InputError("dim must be >= 1")
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def pure(cls, dim: int, index: int = 0) -> "DensityMatrix":
        """Rank-one belief concentrated on one basis state."""
        if not 0 <= index < dim:
            raise InputError("index must lie in [0, dim)")
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return cls(m)

    @classmethod
    def from_diagonal(cls, probabilities) -> "DensityMatrix":
        p = np.asarray(probabilities, dtype=float)
        return cls(np.diag(p).astype(complex))


class KrausModel:
    """Sequence model over M symbols with mu Kraus operators per symbol.

    Construction checks shapes only; use :func:`validate_kraus` to measure
    how far a model is from the completeness and initial-state constraints.
    """

    def __init__(self, operators, initial_state: DensityMatrix):
        ops = np.array(operators, dtype=complex)
        if ops.ndim != 4 or ops.shape[2] != ops.shape[3]:
            raise InputError("operators must have shape (M, mu, K, K)")
        if not isinstance(initial_state, DensityMatrix):
            initial_state = DensityMatrix(initial_state)
        if initial_state.dim != ops.shape[2]:
            raise InputError("initial state dimension disagrees with the operators")
        ops.setflags(write=False)
        self.operators = ops
        self.initial_state = initial_state

    @property
    def dim(self) -> int:
        return self.operators.shape[2]

    @property
    def alphabet_size(self) -> int:
        return self.operators.shape[0]

    @property
    def multiplicity(self) -> int:
        return self.operators.shape[1]

    @classmethod
    def from_stiefel(cls, matrix, alphabet_size: int, multiplicity: int,
                     initial_state: DensityMatrix) -> "KrausModel":
        """Partition a stacked (M*mu*K, K) matrix into the (M, mu, K, K) operators."""
        arr = np.asarray(matrix, dtype=complex)
        if arr.ndim != 2:
            raise InputError("expected a 2-D stacked operator matrix")
        k = arr.shape[1]
        if arr.shape[0] != alphabet_size * multiplicity * k:
            raise InputError(
                f"stacked matrix has {arr.shape[0]} rows, expected "
                f"{alphabet_size * multiplicity * k} (= M * mu * K)")
        return cls(arr.reshape(alphabet_size, multiplicity, k, k), initial_state)

    def to_stiefel(self) -> np.ndarray:
        """Stack the operators back into one (M*mu*K, K) matrix."""
        return self.operators.reshape(-1, self.dim)

    def to_dict(self) -> dict:
        return {
            "type": "qhmm",
            "K": self.dim,
            "M": self.alphabet_size,
            "mu": self.multiplicity,
            "kraus_re": self.operators.real.tolist(),
            "kraus_im": self.operators.imag.tolist(),
            "pi0_re": self.initial_state.matrix.real.tolist(),
            "pi0_im": self.initial_state.matrix.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "KrausModel":
        if payload.get("type") != "qhmm":
            raise InputError("payload does not describe a Kraus-operator model")
        ops = np.asarray(payload["kraus_re"], dtype=float) \
            + 1j * np.asarray(payload["kraus_im"], dtype=float)
        pi0 = np.asarray(payload["pi0_re"], dtype=float) \
            + 1j * np.asarray(payload["pi0_im"], dtype=float)
        model = cls(ops, DensityMatrix(pi0))
        shape = (payload.get("M"), payload.get("mu"), payload.get("K"), payload.get("K"))
        if model.operators.shape != shape:
            raise InputError("K/M/mu fields disagree with the array shapes")
        return model


def _check_symbol(symbol, alphabet_size: int) -> int:
    s = int(symbol)
    if not 0 <= s < alphabet_size:
        raise InputError(f"symbol {s} out of range for alphabet of size {alphabet_size}")
    return s


def _apply_symbol(operators: np.ndarray, rho: np.ndarray, symbol: int):
    """Unnormalized post-observation state and its trace (the probability)."""
    ops = operators[symbol]
    updated = (ops @ rho @ _dagger(ops)).sum(axis=0)
    return updated, float(updated.trace().real)


def _raw_log_likelihood(operators: np.ndarray, rho0: np.ndarray, seq) -> float:
    rho = rho0
    ll = 0.0
    for x in seq:
        updated, prob = _apply_symbol(operators, rho, int(x))
        if prob <= UNDERFLOW_PROB:
            return float("-inf")
        ll += np.log(prob)
        rho = (updated + updated.conj().T) / (2.0 * prob)
    return float(ll)


def belief_update(rho, model: KrausModel, symbol) -> Tuple[Optional[DensityMatrix], float]:
    """Condition a belief state on one observed symbol.

    Returns
    -------
    (next_belief, probability)
        ``probability`` is the trace of the unnormalized update, clamped
        to [0, 1]. When it falls at or below the underflow threshold the
        belief cannot be renormalized and ``next_belief`` is None.
    """
    x = _check_symbol(symbol, model.alphabet_size)
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    updated, prob = _apply_symbol(model.operators, mat, x)
    if prob <= UNDERFLOW_PROB:
        return None, max(prob, 0.0)
    nxt = DensityMatrix((updated + updated.conj().T) / (2.0 * prob))
    return nxt, min(max(prob, 0.0), 1.0)


def qhmm_log_likelihood(model: KrausModel, sequence) -> float:
    """Natural-log probability of a symbol sequence.

    Equals the trace of the nested unnormalized operator applications
    starting from the initial state; computed stably as the running sum of
    per-step observation log-probabilities. Returns ``-inf`` once a step
    underflows.
    """
    seq = _as_symbols(sequence, model.alphabet_size)
    return _raw_log_likelihood(model.operators, model.initial_state.matrix, seq)


def next_symbol_distribution(model: KrausModel, rho) -> np.ndarray:
    """Probability of each symbol being observed next from the given belief."""
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    probs = np.empty(model.alphabet_size)
    for x in range(model.alphabet_size):
        _, probs[x] = _apply_symbol(model.operators, mat, x)
    return np.clip(probs, 0.0, None)


def qhmm_sample(model: KrausModel, length: int, rng_seed, *, prefix=()) -> list:
    """Draw a symbol sequence of the given length, deterministic per seed.

    At each step the per-symbol distribution (which sums to 1 for a
    complete model) is computed from the current belief, a symbol is
    drawn, and the belief advances. A nonempty ``prefix`` first filters
    the belief through those symbols; the output continues the prefix
    without including it.
    """
    if length < 1:
        raise InputError("length must be >= 1")
    rng = np.random.default_rng(rng_seed)
    rho = model.initial_state.matrix
    for x in prefix:
        updated, prob = _apply_symbol(model.operators, rho,
                                      _check_symbol(x, model.alphabet_size))
        if prob <= UNDERFLOW_PROB:
            raise InputError("prefix has zero probability under the model")
        rho = (updated + updated.conj().T) / (2.0 * prob)
    symbols = []
    for _ in range(length):
        probs = next_symbol_distribution(model, rho)
        if abs(probs.sum() - 1.0) > 1e-9:
            raise InputError("per-symbol probabilities do not sum to 1; "
                             "the operators are not complete")
        x = int(rng.choice(model.alphabet_size, p=probs / probs.sum()))
        symbols.append(x)
        updated, prob = _apply_symbol(model.operators, rho, x)
        rho = (updated + updated.conj().T) / (2.0 * prob)
    return symbols


def embed_hmm(hmm: CategoricalHmm) -> KrausModel:
    """Lift a categorical HMM into a Kraus-operator model with identical likelihoods.

    Operator (x, l) drains hidden state l: its only nonzero column is l,
    with entries ``sqrt(transition[l, k] * emission[l, x])``, and the
    initial state is ``diag(start)``. The resulting model assigns every
    sequence the same probability as :func:`scengen.hmm.hmm_forward`, and
    the operators satisfy the completeness constraint exactly.
    """
    k, m = hmm.num_states, hmm.alphabet_size
    ops = np.zeros((m, k, k, k), dtype=complex)
    for x in range(m):
        for l in range(k):
            ops[x, l, :, l] = np.sqrt(hmm.transition[l] * hmm.emission[l, x])
    return KrausModel(ops, DensityMatrix.from_diagonal(hmm.start))


@dataclass(frozen=True)
class KrausValidationReport:
    """Residuals of the model constraints; ``passes`` applies the type tolerances."""

    completeness_residual: float
    state_hermiticity_residual: float
    state_trace_residual: float
    state_min_eigenvalue: float
    passes: bool


def validate_kraus(model: KrausModel) -> KrausValidationReport:
    """Measure the completeness residual and the initial-state invariants.

    Report-only: never raises. ``passes`` is true iff the summed
    ``op^dagger op`` matrix is the identity within 1e-8 (max norm) and the
    initial state is Hermitian/unit-trace within 1e-10 with smallest
    eigenvalue >= -1e-9.
    """
    flat = model.operators.reshape(-1, model.dim, model.dim)
    gram = np.einsum("nij,nik->jk", flat.conj(), flat)
    completeness = float(np.max(np.abs(gram - np.eye(model.dim))))
    state = model.initial_state.matrix
    herm = hermiticity_residual(state)
    trace = float(abs(state.trace() - 1.0))
    lo = min_eigenvalue(state)
    passes = (completeness <= COMPLETENESS_TOL and herm <= HERMITICITY_TOL
              and trace <= TRACE_TOL and lo >= -PSD_TOL)
    return KrausValidationReport(completeness, herm, trace, lo, passes)
