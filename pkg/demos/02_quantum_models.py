#!/usr/bin/env python3
"""Kraus-operator sequence models: beliefs, updates, and the classical embedding."""

import itertools

import numpy as np

from scengen import (CategoricalHmm, DensityMatrix, KrausModel, belief_update,
                     embed_hmm, hmm_forward, next_symbol_distribution,
                     qhmm_log_likelihood, qhmm_sample, validate_kraus)

# A projective measurement model: observing symbol x collapses the belief
# onto basis state x.
ops = np.zeros((2, 1, 2, 2), dtype=complex)
ops[0, 0] = np.diag([1.0, 0.0])
ops[1, 0] = np.diag([0.0, 1.0])
model = KrausModel(ops, DensityMatrix.maximally_mixed(2))

report = validate_kraus(model)
print("completeness residual:", report.completeness_residual, "passes:", report.passes)

rho, prob = belief_update(model.initial_state, model, 0)
print("\nP(first symbol = 0) from the maximally mixed state:", prob)
print("collapsed belief:\n", rho.matrix.real)
print("next-symbol distribution after collapse:",
      next_symbol_distribution(model, rho))

print("log P([0,0]) =", qhmm_log_likelihood(model, [0, 0]), "(= ln 0.5)")
print("samples:", qhmm_sample(model, 8, 1), qhmm_sample(model, 8, 2))

# Any categorical HMM embeds as a Kraus model with identical sequence
# probabilities: operator (x, l) drains hidden state l with weight
# sqrt(transition[l, k] * emission[l, x]).
hmm = CategoricalHmm(
    transition=[[0.7, 0.3], [0.4, 0.6]],
    emission=[[0.9, 0.1], [0.2, 0.8]],
    start=[0.6, 0.4],
)
lifted = embed_hmm(hmm)
print("\nembedded model: dim", lifted.dim, "operators per symbol",
      lifted.multiplicity)
print("embedding completeness residual:",
      validate_kraus(lifted).completeness_residual)

worst = 0.0
for length in range(1, 6):
    for seq in itertools.product(range(2), repeat=length):
        classical = hmm_forward(hmm, list(seq)).log_likelihood
        quantum = qhmm_log_likelihood(lifted, list(seq))
        worst = max(worst, abs(classical - quantum))
print("worst |log-likelihood difference| over all sequences up to length 5:",
      worst)
