"""Noise channels for physical spin readouts.

Two observation models:

* i.i.d. symmetric flips: each off-diagonal pair of the spin matrix is
  independently negated with probability epsilon;
* AWGN: each physical spin z_i is observed as y_i = amplitude * z_i + n_i
  with n_i ~ Normal(0, sigma^2), one shared draw per symmetric pair.

For the AWGN channel the half log-likelihood ratio of an observation is
theta_i = beta * y_i with channel reliability beta = 2*amplitude/sigma^2,
and the hard decision sign[y_i] errs with probability
1 / (1 + exp(|theta_i|)).

All operations are pure given (inputs, seed), so trials parallelize
safely with per-trial seed streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .code import ParityCode, validate_spin_matrix, vector_to_matrix


@dataclass(frozen=True)
class AwgnParams:
    """Signal amplitude and noise level of the Gaussian readout channel."""

    amplitude: float
    sigma: float

    def __post_init__(self):
        if not (self.amplitude > 0):
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if not (self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def beta(self) -> float:
        """Channel reliability factor 2*amplitude/sigma^2."""
        return 2.0 * self.amplitude / (self.sigma * self.sigma)


def as_generator(seed) -> np.random.Generator:
    """Accept an int seed, a SeedSequence, a Generator, or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(master_seed: int, n: int) -> list[np.random.SeedSequence]:
    """n independent child streams of one master seed (one per trial)."""
    return np.random.SeedSequence(master_seed).spawn(n)


def trial_seed(*key: int) -> np.random.SeedSequence:
    """Deterministic stream keyed by a tuple of non-negative integers."""
    return np.random.SeedSequence([int(k) for k in key])


def sample_iid_errors(code: ParityCode, epsilon: float, seed) -> np.ndarray:
    """Random error matrix: each pair independently -1 with probability
    epsilon. Deterministic given the seed."""
    if not (0.0 <= epsilon < 1.0):
        raise ValueError(f"epsilon must be in [0, 1), got {epsilon}")
    rng = as_generator(seed)
    flips = rng.random(code.n_vars) < epsilon
    v = np.where(flips, -1, 1).astype(np.int8)
    return vector_to_matrix(code, v)


def awgn_observe(z: np.ndarray, params: AwgnParams, seed) -> np.ndarray:
    """Noisy real-valued readout of a spin matrix, as an edge vector of
    length C(K,2); symmetric pairs share one Gaussian draw."""
    z = validate_spin_matrix(z)
    K = z.shape[0]
    rng = as_generator(seed)
    zf = z[np.triu_indices(K, 1)].astype(np.float64)
    noise = rng.normal(0.0, params.sigma, size=zf.shape)
    return params.amplitude * zf + noise


def llr(y: np.ndarray, params: AwgnParams) -> np.ndarray:
    """Half log-likelihood ratios theta_i = beta * y_i."""
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("observation contains non-finite entries")
    return params.beta * y


def hard_decision_error_prob(theta: np.ndarray) -> np.ndarray:
    """Error probability of the hard decision sign[theta]:
    1 / (1 + exp(|theta|)). theta = 0 gives 1/2."""
    t = np.abs(np.asarray(theta, dtype=np.float64))
    return np.exp(-t) / (1.0 + np.exp(-t))


def hard_decide(y: np.ndarray, code: ParityCode | None = None) -> np.ndarray:
    """Componentwise sign of an edge-vector observation, as a spin
    matrix. Zero maps to +1 (fixed policy; a probability-zero event for
    Gaussian noise)."""
    y = np.asarray(y).ravel()
    if code is None:
        K = _k_from_edge_count(len(y))
    else:
        K = code.K
        if len(y) != code.n_vars:
            raise ValueError(f"observation length {len(y)} != n_vars {code.n_vars}")
    v = np.where(y >= 0, 1, -1).astype(np.int8)
    m = np.ones((K, K), dtype=np.int8)
    iu = np.triu_indices(K, 1)
    m[iu] = v
    m[(iu[1], iu[0])] = v
    return m


def _k_from_edge_count(n: int) -> int:
    K = int(round((1 + math.sqrt(1 + 8 * n)) / 2))
    if K * (K - 1) // 2 != n:
        raise ValueError(f"length {n} is not a pair count C(K,2)")
    return K


# ---------------------------------------------------------------------------
# Crosstalk quantities for weighted majority voting. With a common
# per-spin flip rate gamma0 (valid for 0 < gamma0 < 1/2) the decision
# weight and all check weights coincide, which is what the plain
# majority-vote decoder assumes.

def reliability_weight(gamma0: float) -> float:
    """log((1-gamma0)/gamma0), the weight of the channel hard decision."""
    if not (0.0 < gamma0 < 0.5):
        raise ValueError(f"flip probability must be in (0, 0.5), got {gamma0}")
    return math.log((1.0 - gamma0) / gamma0)


def pair_error_prob(gamma_a: float, gamma_b: float) -> float:
    """Probability that a two-spin parity product is wrong when its
    members flip independently with rates gamma_a, gamma_b."""
    return 0.5 * (1.0 - (1.0 - 2.0 * gamma_a) * (1.0 - 2.0 * gamma_b))


def check_weight(p: float) -> float:
    """log((1-p)/p), the weight of a parity check erring with rate p."""
    if not (0.0 < p < 0.5):
        raise ValueError(f"check error probability must be in (0, 0.5), got {p}")
    return math.log((1.0 - p) / p)
