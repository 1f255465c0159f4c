"""Discrete hidden Markov model: log-space forward and Viterbi recursions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from procscore.errors import InvalidDistribution

ROW_TOLERANCE = 1e-12


def _check_stochastic(name: str, arr: np.ndarray) -> None:
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidDistribution(f"{name} has negative or non-finite entries")
    sums = arr.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > ROW_TOLERANCE):
        raise InvalidDistribution(f"{name} rows must sum to 1 (got {np.round(sums, 15).tolist()})")


@dataclass(frozen=True)
class DiscreteHMM:
    initial: np.ndarray      # (S,)
    transition: np.ndarray   # (S, S), row = from-state
    emission: np.ndarray     # (S, V), row = state

    def __post_init__(self):
        pi = np.asarray(self.initial, dtype=float)
        a = np.asarray(self.transition, dtype=float)
        b = np.asarray(self.emission, dtype=float)
        s = pi.shape[0]
        if a.shape != (s, s) or b.ndim != 2 or b.shape[0] != s:
            raise InvalidDistribution(f"inconsistent shapes {pi.shape}, {a.shape}, {b.shape}")
        _check_stochastic("initial", pi)
        _check_stochastic("transition", a)
        _check_stochastic("emission", b)
        object.__setattr__(self, "initial", pi)
        object.__setattr__(self, "transition", a)
        object.__setattr__(self, "emission", b)

    @property
    def n_states(self) -> int:
        return self.initial.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.emission.shape[1]


def _log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


def _check_obs(hmm: DiscreteHMM, observations: Sequence[int]) -> np.ndarray:
    obs = np.asarray(observations, dtype=int)
    if obs.ndim != 1 or obs.size == 0:
        raise InvalidDistribution("observations must be a non-empty 1-D sequence")
    if obs.min() < 0 or obs.max() >= hmm.n_symbols:
        raise InvalidDistribution("observation index outside the emission alphabet")
    return obs


def hmm_forward(hmm: DiscreteHMM, observations: Sequence[int]) -> float:
    """log P(observations), summed over all state paths."""
    obs = _check_obs(hmm, observations)
    log_a = _log(hmm.transition)
    log_b = _log(hmm.emission)
    alpha = _log(hmm.initial) + log_b[:, obs[0]]
    for o in obs[1:]:
        alpha = logsumexp(alpha[:, None] + log_a, axis=0) + log_b[:, o]
    return float(logsumexp(alpha))


def hmm_viterbi(hmm: DiscreteHMM, observations: Sequence[int]) -> list[int]:
    """Most probable state path; ties go to the lowest state index."""
    obs = _check_obs(hmm, observations)
    log_a = _log(hmm.transition)
    log_b = _log(hmm.emission)
    delta = _log(hmm.initial) + log_b[:, obs[0]]
    back = []
    for o in obs[1:]:
        scores = delta[:, None] + log_a
        ptr = np.argmax(scores, axis=0)
        back.append(ptr)
        delta = scores[ptr, np.arange(hmm.n_states)] + log_b[:, o]
    path = [int(np.argmax(delta))]
    for ptr in reversed(back):
        path.append(int(ptr[path[-1]]))
    path.reverse()
    return path


def fit_hmm_supervised(
    state_sequences: Sequence[Sequence[int]],
    observation_sequences: Sequence[Sequence[int]],
    n_states: int,
    n_symbols: int,
    pseudocount: float = 1.0,
) -> DiscreteHMM:
    """Count-based estimate from labeled state/observation sequences."""
    pi = np.full(n_states, pseudocount)
    a = np.full((n_states, n_states), pseudocount)
    b = np.full((n_states, n_symbols), pseudocount)
    for states, obs in zip(state_sequences, observation_sequences):
        if len(states) != len(obs) or not states:
            raise InvalidDistribution("state and observation sequences must be equal and non-empty")
        pi[states[0]] += 1
        for s, o in zip(states, obs):
            b[s, o] += 1
        for s, t in zip(states, states[1:]):
            a[s, t] += 1
    return DiscreteHMM(pi / pi.sum(), a / a.sum(axis=1, keepdims=True), b / b.sum(axis=1, keepdims=True))
