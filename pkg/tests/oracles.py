"""Independent brute-force oracles the tests check the library against.

Everything here is deliberately written from first principles (explicit
path enumeration, breadth-first search, central differences) and stays
independent of the library's recursions.
"""

import itertools
from collections import deque

import numpy as np


def all_sequences(alphabet_size, length):
    """Every symbol sequence of exactly this length."""
    return itertools.product(range(alphabet_size), repeat=length)


def path_sum_probability(model, sequence):
    """P(sequence) as the explicit sum over all hidden state paths.

    Uses the convention pinned by the backward termination identity
    P(X) = sum_l start[l] * emission[l, x1] * b_l(1): the chain emits from
    the state it starts in, then alternates transition and emission.
    """
    seq = list(sequence)
    k = model.num_states
    total = 0.0
    for path in itertools.product(range(k), repeat=len(seq)):
        term = model.start[path[0]] * model.emission[path[0], seq[0]]
        for t in range(1, len(seq)):
            term *= model.transition[path[t - 1], path[t]] * model.emission[path[t], seq[t]]
        total += term
    return total


def posterior_by_enumeration(model, sequence, position):
    """P(Q_position = k | sequence) by enumerating all hidden paths (1-based)."""
    seq = list(sequence)
    k = model.num_states
    mass = np.zeros(k)
    for path in itertools.product(range(k), repeat=len(seq)):
        term = model.start[path[0]] * model.emission[path[0], seq[0]]
        for t in range(1, len(seq)):
            term *= model.transition[path[t - 1], path[t]] * model.emission[path[t], seq[t]]
        mass[path[position - 1]] += term
    return mass / mass.sum()


def kraus_path_probability(model, sequence):
    """P(sequence) by enumerating every Kraus-index path.

    Expands the nested operator applications into mu^L explicit terms
    tr(B rho0 B^dagger) with B the ordered operator product, so it shares
    no code with the sequential belief propagation.
    """
    seq = list(sequence)
    mu = model.multiplicity
    rho0 = model.initial_state.matrix
    total = 0.0
    for choice in itertools.product(range(mu), repeat=len(seq)):
        product = np.eye(model.dim, dtype=complex)
        for x, m in zip(seq, choice):
            product = model.operators[x, m] @ product
        total += float((product @ rho0 @ product.conj().T).trace().real)
    return total


def bfs_scenarios(system, initial_state=0, max_len=4):
    """Breadth-first enumeration of severe-terminated walks.

    Returns a list of (steps, probability) pairs; walks end the first time
    they enter a severe state and are never extended past one.
    """
    severe_masks = system.severe_masks
    results = []
    queue = deque([(initial_state, (), 1.0)])
    while queue:
        state, steps, prob = queue.popleft()
        if len(steps) >= max_len:
            continue
        for idx, event in enumerate(system.events):
            down = bool(state >> idx & 1)
            action = "repair" if down else "fail"
            next_prob = prob * (event.p_repair if down else event.p_down)
            next_state = state ^ (1 << idx)
            next_steps = steps + ((idx, action),)
            if any((next_state & mask) == mask for mask in severe_masks):
                results.append((next_steps, next_prob))
            else:
                queue.append((next_state, next_steps, next_prob))
    return results


def central_difference_gradient(loss, kappa, step=1e-6):
    """Wirtinger-convention gradient of a real loss by central differences.

    For each entry, differentiates along the real and imaginary axes and
    combines them as 0.5 * (d/dRe + 1j * d/dIm).
    """
    kappa = np.asarray(kappa, dtype=complex)
    grad = np.zeros_like(kappa)
    for i in range(kappa.shape[0]):
        for j in range(kappa.shape[1]):
            parts = []
            for unit in (1.0, 1j):
                plus = kappa.copy()
                plus[i, j] += step * unit
                minus = kappa.copy()
                minus[i, j] -= step * unit
                parts.append((loss(plus) - loss(minus)) / (2.0 * step))
            grad[i, j] = 0.5 * (parts[0] + 1j * parts[1])
    return grad


def random_hmm(rng, num_states, alphabet_size):
    """Random stochastic parameters via flat Dirichlet rows."""
    from scengen import CategoricalHmm

    return CategoricalHmm(
        rng.dirichlet(np.ones(num_states), size=num_states),
        rng.dirichlet(np.ones(alphabet_size), size=num_states),
        rng.dirichlet(np.ones(num_states)),
    )


def random_kraus_model(rng, dim, alphabet_size, multiplicity=1):
    """Random complete Kraus model from an orthonormalized Gaussian stack."""
    from scengen import DensityMatrix, KrausModel

    rows = alphabet_size * multiplicity * dim
    z = rng.standard_normal((rows, dim)) + 1j * rng.standard_normal((rows, dim))
    q, _ = np.linalg.qr(z)
    return KrausModel.from_stiefel(q, alphabet_size, multiplicity,
                                   DensityMatrix.maximally_mixed(dim))
