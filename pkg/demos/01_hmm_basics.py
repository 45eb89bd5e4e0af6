#!/usr/bin/env python3
"""Classical HMM walkthrough: exact likelihoods, smoothing, fitting, sampling."""

import numpy as np

from scengen import (CategoricalHmm, baum_welch_fit, hmm_backward, hmm_forward,
                     hmm_posterior, hmm_sample)

# A two-state chain over a binary alphabet. State 0 mostly emits symbol 0,
# state 1 mostly emits symbol 1, and the chain is sticky.
model = CategoricalHmm(
    transition=[[0.7, 0.3], [0.4, 0.6]],
    emission=[[0.9, 0.1], [0.2, 0.8]],
    start=[0.6, 0.4],
)

sequence = [0, 1, 1]
trellis = hmm_forward(model, sequence)
print("log P([0,1,1]) =", trellis.log_likelihood)
print("P([0,1,1])     =", np.exp(trellis.log_likelihood))

# The scaled forward rows are proper distributions at every position, and
# the per-step normalizers carry the likelihood.
print("\nscaled forward rows:\n", trellis.forward)
print("per-step normalizers:", trellis.scaling)

# The backward pass recovers the same probability from the other end.
back = hmm_backward(model, sequence)
head = (model.start * model.emission[:, sequence[0]] * back.backward[0]).sum()
recovered = np.log(head) + np.log(back.scaling[1:]).sum()
print("\nbackward-reconstructed log P:", recovered)

# Smoothing: where was the chain at position 2, given the whole sequence?
print("posterior at position 2:", hmm_posterior(model, sequence, 2))

# Fit a fresh model to sampled data and watch the EM objective climb.
dataset = [hmm_sample(model, 40, seed) for seed in range(20)]
result = baum_welch_fit(dataset, num_states=2, alphabet_size=2,
                        max_iters=50, seed=7)
print("\nBaum-Welch log-likelihood trace (every 5th iteration):")
print(np.round(result.log_likelihoods[::5], 3))
print("fitted transition matrix:\n", np.round(result.model.transition, 3))
print("fitted emission matrix:\n", np.round(result.model.emission, 3))

# Likelihood of the data under truth vs fit (fit can only be >= at optimum
# of this dataset, not of the generating process).
truth_ll = sum(hmm_forward(model, s).log_likelihood for s in dataset)
fit_ll = sum(hmm_forward(result.model, s).log_likelihood for s in dataset)
print(f"\ntraining log-likelihood: truth {truth_ll:.2f}, fitted {fit_ll:.2f}")
