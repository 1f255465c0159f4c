"""Synthetic data generators with known ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from procscore.classification.features import CommitChain
from procscore.classification.labels import ACTIVITIES


@dataclass(frozen=True)
class ChainProcess:
    """Markov labels over A, C, P with Gaussian class-conditional features."""

    initial: np.ndarray          # (3,)
    transition: np.ndarray       # (3, 3)
    means: np.ndarray            # (3, n_features)
    sd: float = 1.0
    # per-class mean of log1p(sojourn seconds); None disables sojourns
    sojourn_log_means: np.ndarray | None = None
    sojourn_log_sd: float = 1.0

    def sample_chains(self, n_chains: int, length: int, seed: int) -> list[CommitChain]:
        rng = np.random.default_rng(seed)
        chains = []
        p = self.means.shape[1]
        for i in range(n_chains):
            states = [rng.choice(3, p=self.initial)]
            for _ in range(length - 1):
                states.append(rng.choice(3, p=self.transition[states[-1]]))
            states = np.asarray(states)
            feats = self.means[states] + self.sd * rng.standard_normal((length, p))
            if self.sojourn_log_means is None:
                soj = np.full(length, np.nan)
            else:
                logs = self.sojourn_log_means[states] + self.sojourn_log_sd * rng.standard_normal(length)
                soj = np.expm1(np.maximum(logs, 0.0))
                soj[0] = np.nan
            labels = tuple(ACTIVITIES[s] for s in states)
            ids = tuple(f"s{seed}-c{i}-{t}" for t in range(length))
            chains.append(CommitChain(feats, soj, labels, ids))
        return chains


def transition_dominated_process(n_features: int = 2) -> ChainProcess:
    """Strong cyclic transitions, weakly separated features (means 0.5 sd apart)."""
    transition = np.array([
        [0.10, 0.75, 0.15],
        [0.15, 0.10, 0.75],
        [0.75, 0.15, 0.10],
    ])
    means = np.zeros((3, n_features))
    means[:, 0] = [0.0, 0.5, 1.0]
    return ChainProcess(np.full(3, 1 / 3), transition, means)


def skill_process() -> ChainProcess:
    """Moderately informative features plus informative transitions and sojourns."""
    transition = np.array([
        [0.20, 0.60, 0.20],
        [0.20, 0.20, 0.60],
        [0.60, 0.20, 0.20],
    ])
    means = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.5],
        [0.0, 1.0, -0.5],
    ])
    return ChainProcess(np.array([0.3, 0.3, 0.4]), transition, means,
                        sojourn_log_means=np.array([9.0, 7.0, 8.0]), sojourn_log_sd=1.0)


def linear_projects(n: int, sigma: float, seed: int, n_noise_features: int = 0):
    """Severity targets ``5 + 1.5 x1 - 1.0 x2 + N(0, sigma^2)`` from standard-normal features."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 2 + n_noise_features))
    y = 5.0 + 1.5 * x[:, 0] - 1.0 * x[:, 1] + sigma * rng.standard_normal(n)
    return x, y


def example_process_model(seed: int = 7):
    """Requirements curve front-loaded like a slack-then-rush project, plus flat dev/desc curves."""
    from procscore.activity import Event, ProcessModel, build_curve

    rng = np.random.default_rng(seed)
    req = build_curve([Event(t, w) for t, w in zip(rng.beta(2, 5, 40), 0.2 + rng.random(40))])
    dev = build_curve([Event(t) for t in rng.beta(4, 2, 40)])
    desc = build_curve([Event(t) for t in rng.random(15)])
    return ProcessModel({"req": req, "dev": dev, "desc": desc}, (1.0,))
