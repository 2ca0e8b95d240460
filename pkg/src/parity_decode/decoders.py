"""Post-readout decoders for parity-encoded spin states.

* Parallel bit-flip (BF): every pair is updated simultaneously by the
  majority vote of {+1} U {adjacent triangle checks}; in matrix form one
  sweep is sign[X(X - I)].
* Inversion functions: the per-spin scores of the BF / weighted-BF /
  gradient-descent-BF / sampling decoders. Flipping spin k changes the
  decoder's energy by exactly twice the score.
* Belief propagation (BP): sum-product message passing on the triangle
  check graph (girth 6), flooding schedule, messages clipped at +-30.
* Minimum-weight decoding (MWD): exact small-scale oracle; finds the
  nearest state whose plaquette syndrome matches the input's.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .code import (
    ParityCode,
    all_one_matrix,
    is_codeword,
    matrix_to_vector,
    validate_spin_matrix,
    vector_to_matrix,
    _syndrome_flat,
)

MSG_CLIP = 30.0  # BP message magnitude cap


class CapacityError(ValueError):
    """Problem size exceeds what an exhaustive routine will attempt."""


class TiePolicy(Enum):
    """What a BF sweep does when a majority vote is exactly zero.

    KEEP: keep the current sign and count the tie.
    FAIL: count the tie and mark the decode as failed (benchmark mode).
    COIN: flip the spin with probability 1/2 (seeded rng required).

    Ties require an even vote set, which happens only for odd K.
    """

    KEEP = "keep"
    FAIL = "fail"
    COIN = "coin"


@dataclass
class DecodeResult:
    """Outcome of an iterative decode.

    converged means a fixed point was reached: one further sweep leaves
    `final` unchanged. success is final == target when a target was
    given, else final being a codeword.
    """

    final: np.ndarray
    converged: bool
    success: bool
    iterations: int
    ties: int = 0
    tie_failure: bool = False
    trajectory: list | None = None
    posteriors: list | None = None


@dataclass(frozen=True)
class InversionWeights:
    """Weights of the inversion-function family.

    w0: weight of the channel hard decision (weighted-BF).
    wk: per-check weights, scalar or a vector over the check family.
    beta: channel reliability / correlation-strength factor.
    gamma: penalty strength (sampling decoder only).
    lam: constraint multiplier of minimum-weight decoding; documentary,
        the exhaustive search realizes its infinite limit.
    """

    w0: float = 1.0
    wk: float | np.ndarray = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    lam: float = math.inf

    def __post_init__(self):
        if self.w0 < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("weights must be nonnegative")
        if np.any(np.asarray(self.wk) < 0):
            raise ValueError("check weights must be nonnegative")
        if not self.lam > 0:
            raise ValueError("lam must be positive")


def uniform_weights(epsilon: float) -> InversionWeights:
    """Weights induced by a common flip rate: the hard-decision weight
    log((1-eps)/eps) and one shared check weight log((1-p)/p) with
    p = (1 - (1-2*eps)^2) / 2."""
    from .channels import check_weight, pair_error_prob, reliability_weight

    w0 = reliability_weight(epsilon)
    wk = check_weight(pair_error_prob(epsilon, epsilon))
    return InversionWeights(w0=w0, wk=wk)


# ---------------------------------------------------------------------------
# Parallel bit-flip decoding

def bf_step(
    code: ParityCode,
    x: np.ndarray,
    tie_policy: TiePolicy = TiePolicy.KEEP,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, int]:
    """One parallel BF sweep: sign[X(X - I)] with the tie policy applied
    where the argument is zero. Returns (new matrix, tie count).

    Per pair {i,j} the sweep realizes the majority vote
    sign(1 + sum_k s_ijk) deciding whether to keep or negate x_ij; all
    C(K,2) pairs update simultaneously. Codewords are fixed points.
    """
    x = validate_spin_matrix(x, code.K)
    m = x.astype(np.int16)
    vote = m @ m - m  # off-diagonal entry: x_ij * (1 + sum_k s_ijk)
    new = np.where(vote > 0, 1, -1).astype(np.int8)
    tie_mask = vote == 0
    np.fill_diagonal(tie_mask, False)
    n_ties = int(np.count_nonzero(tie_mask)) // 2
    if n_ties:
        if tie_policy is TiePolicy.KEEP or tie_policy is TiePolicy.FAIL:
            new[tie_mask] = x[tie_mask]
        elif tie_policy is TiePolicy.COIN:
            if rng is None:
                raise ValueError("COIN tie policy needs an rng")
            iu = np.triu_indices(code.K, 1)
            upper_ties = tie_mask[iu]
            signs = np.ones(code.n_vars, dtype=np.int8)
            coin = rng.integers(0, 2, size=int(upper_ties.sum())) * 2 - 1
            signs[upper_ties] = coin.astype(np.int8)
            flat = matrix_to_vector(code, x) * signs
            tied = vector_to_matrix(code, flat)
            new[tie_mask] = tied[tie_mask]
    np.fill_diagonal(new, 1)
    return new, n_ties


def bf_decode(
    code: ParityCode,
    x: np.ndarray,
    max_iters: int = 5,
    tie_policy: TiePolicy = TiePolicy.KEEP,
    target: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    record_trajectory: bool = False,
) -> DecodeResult:
    """Iterate BF sweeps until the target (or any codeword) is reached,
    a fixed point occurs, or max_iters sweeps are spent.

    Deterministic for KEEP/FAIL policies: identical inputs give the
    identical result.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    x = validate_spin_matrix(x, code.K)
    if target is not None:
        target = validate_spin_matrix(target, code.K)

    traj = [x.copy()] if record_trajectory else None
    ties_total = 0
    cur = x
    for n in range(max_iters + 1):
        done = (
            np.array_equal(cur, target) if target is not None else is_codeword(code, cur)
        )
        if done:
            return DecodeResult(
                final=cur, converged=True, success=True, iterations=n,
                ties=ties_total, trajectory=traj,
            )
        if n == max_iters:
            break
        nxt, n_ties = bf_step(code, cur, tie_policy, rng)
        ties_total += n_ties
        if n_ties and tie_policy is TiePolicy.FAIL:
            if traj is not None:
                traj.append(nxt.copy())
            return DecodeResult(
                final=nxt, converged=False, success=False, iterations=n + 1,
                ties=ties_total, tie_failure=True, trajectory=traj,
            )
        if np.array_equal(nxt, cur):
            return DecodeResult(
                final=cur, converged=True, success=False, iterations=n,
                ties=ties_total, trajectory=traj,
            )
        if traj is not None:
            traj.append(nxt.copy())
        cur = nxt
    return DecodeResult(
        final=cur, converged=False, success=False, iterations=max_iters,
        ties=ties_total, trajectory=traj,
    )


def bf_sweep_batch(stack: np.ndarray, iters: int) -> np.ndarray:
    """Apply `iters` BF sweeps to a stack of spin matrices (B, K, K),
    keeping current signs on ties. Codewords pass through unchanged."""
    m = stack.astype(np.int16)
    for _ in range(iters):
        vote = np.matmul(m, m) - m
        nxt = np.where(vote > 0, 1, np.where(vote < 0, -1, m)).astype(np.int16)
        m = nxt
    out = m.astype(np.int8)
    idx = np.arange(stack.shape[-1])
    out[:, idx, idx] = 1
    return out


def count_errors(x: np.ndarray, z: np.ndarray) -> int:
    """Number of off-diagonal unordered pairs where x and z differ."""
    x = np.asarray(x)
    z = np.asarray(z)
    if x.shape != z.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {z.shape}")
    iu = np.triu_indices(x.shape[0], 1)
    return int(np.count_nonzero(x[iu] != z[iu]))


# ---------------------------------------------------------------------------
# Inversion functions and their energies

_KINDS = ("bf", "wbf", "gdbf", "mcmc")


def _check_weight_vector(code: ParityCode, weights: InversionWeights, family: str) -> np.ndarray:
    n = code.n_checks3 if family == "w3" else code.n_checks4
    wk = np.asarray(weights.wk, dtype=np.float64)
    if wk.ndim == 0:
        return np.full(n, float(wk))
    if len(wk) != n:
        raise ValueError(f"wk length {len(wk)} != {n} checks of family {family!r}")
    return wk


def _adjacent_sum(code: ParityCode, s: np.ndarray, family: str, per_check: np.ndarray | None = None):
    """Per-variable sums of (optionally weighted) adjacent check values."""
    vals = s.astype(np.float64) if per_check is None else s * per_check
    if family == "w3":
        if code.n_checks3 == 0:
            return np.zeros(code.n_vars)
        return vals[code.checks3_of_var].sum(axis=1)
    idx = code.checks4_of_var
    picked = np.where(idx >= 0, vals[idx], 0.0)
    return picked.sum(axis=1)


def inversion_profile(
    kind: str,
    code: ParityCode,
    x: np.ndarray,
    J: np.ndarray | None = None,
    weights: InversionWeights | None = None,
    family: str = "w3",
) -> np.ndarray:
    """Scores of all C(K,2) spins at once; see inversion_function."""
    if kind not in _KINDS:
        raise ValueError(f"unknown inversion kind {kind!r}")
    x = validate_spin_matrix(x, code.K)
    xf = matrix_to_vector(code, x).astype(np.int64)
    w = weights or InversionWeights()
    if kind != "bf" and J is None:
        raise ValueError(f"{kind} inversion needs couplings J")
    if J is not None:
        J = np.asarray(J, dtype=np.float64).ravel()
        if len(J) != code.n_vars:
            raise ValueError(f"J length {len(J)} != n_vars {code.n_vars}")

    fam = "w3" if kind == "bf" else family
    s = _syndrome_flat(code, xf, fam)
    if kind == "bf":
        return 1.0 + _adjacent_sum(code, s, fam)
    if kind == "wbf":
        wk = _check_weight_vector(code, w, fam)
        return w.beta * np.abs(J) + _adjacent_sum(code, s, fam, wk)
    if kind == "gdbf":
        return J * xf + _adjacent_sum(code, s, fam)
    # sampling decoder
    return w.beta * J * xf + 0.5 * w.gamma * _adjacent_sum(code, s, fam)


def inversion_function(
    kind: str,
    code: ParityCode,
    x: np.ndarray,
    k: int,
    J: np.ndarray | None = None,
    weights: InversionWeights | None = None,
    family: str = "w3",
) -> float:
    """Per-spin flip score of decoder `kind` at variable node k.

    With adjacent check values s_i, current spins x, couplings J and
    weights (w0, wk, beta, gamma):

        bf:    1 + sum_i s_i                  (triangle checks always)
        wbf:   beta*|J_k| + sum_i wk_i s_i
        gdbf:  J_k x_k + sum_i s_i
        mcmc:  beta J_k x_k + (gamma/2) sum_i s_i

    A negative score means flipping spin k lowers the matching decoder
    energy; the energy change equals exactly twice the score.
    """
    if not (0 <= k < code.n_vars):
        raise ValueError(f"variable index k={k} out of range [0, {code.n_vars})")
    return float(inversion_profile(kind, code, x, J, weights, family)[k])


def decoder_energy(
    kind: str,
    code: ParityCode,
    x: np.ndarray,
    J: np.ndarray | None = None,
    weights: InversionWeights | None = None,
    family: str = "w3",
    reference: np.ndarray | None = None,
) -> float:
    """Energy whose single-flip increase is twice the inversion score.

        bf:    - sum_i x_i r_i          - sum_c s_c(x)
        wbf:   - beta sum_i |J_i| x_i r_i - sum_c wk_c s_c(x)
        gdbf:  - sum_i J_i x_i          - sum_c s_c(x)
        mcmc:  - beta sum_i J_i x_i     + gamma sum_c (1 - s_c(x))/2

    For bf/wbf the linear term scores agreement with a reference
    decision r (default all +1); the flip identity
    E(flip_k x) - E(x) = 2 * score_k(x) holds with r set to the pre-flip
    state, which is how the decoders use it. gdbf/mcmc carry the
    couplings directly and need no reference.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown inversion kind {kind!r}")
    x = validate_spin_matrix(x, code.K)
    xf = matrix_to_vector(code, x).astype(np.float64)
    w = weights or InversionWeights()
    fam = "w3" if kind == "bf" else family
    s = _syndrome_flat(code, matrix_to_vector(code, x).astype(np.int64), fam).astype(np.float64)
    if kind != "bf" and J is None:
        raise ValueError(f"{kind} energy needs couplings J")
    if J is not None:
        J = np.asarray(J, dtype=np.float64).ravel()

    if kind in ("bf", "wbf"):
        ref = all_one_matrix(code.K) if reference is None else validate_spin_matrix(reference, code.K)
        rf = matrix_to_vector(code, ref).astype(np.float64)
        if kind == "bf":
            return float(-(xf * rf).sum() - s.sum())
        wk = _check_weight_vector(code, w, fam)
        return float(-w.beta * (np.abs(J) * xf * rf).sum() - (wk * s).sum())
    if kind == "gdbf":
        return float(-(J * xf).sum() - s.sum())
    return float(-w.beta * (J * xf).sum() + w.gamma * 0.5 * (1.0 - s).sum())


def flip_spin(code: ParityCode, x: np.ndarray, k: int) -> np.ndarray:
    """Copy of x with variable node k (one symmetric pair) negated."""
    i, j = code.edges[k]
    out = np.array(x, dtype=np.int8, copy=True)
    out[i, j] *= -1
    out[j, i] *= -1
    return out


# ---------------------------------------------------------------------------
# Belief propagation on the triangle-check graph

def bp_decode(
    code: ParityCode,
    channel_llr: np.ndarray | None = None,
    x: np.ndarray | None = None,
    epsilon: float | None = None,
    max_iters: int = 5,
    target: np.ndarray | None = None,
    record: bool = False,
) -> DecodeResult:
    """Sum-product decoding with a flooding schedule.

    Channel information is either an explicit edge-vector of half-LLRs
    (`channel_llr`, e.g. beta*y for the Gaussian channel) or a hard
    matrix `x` plus a uniform flip rate `epsilon` in (0, 1/2), giving
    log((1-eps)/eps) * x_ij per pair. One iteration updates all
    check-to-variable then all variable-to-check messages; messages are
    clipped at +-30; the hard decision is the posterior sign with 0
    mapping to +1. Stops early when the hard decision reaches the
    target (or any codeword when no target is given).
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if channel_llr is None:
        if x is None or epsilon is None:
            raise ValueError("need either channel_llr or (x, epsilon)")
        if not (0.0 < epsilon < 0.5):
            raise ValueError(f"epsilon must be in (0, 0.5), got {epsilon}")
        x = validate_spin_matrix(x, code.K)
        lam = math.log((1.0 - epsilon) / epsilon) * matrix_to_vector(code, x).astype(np.float64)
    else:
        lam = np.asarray(channel_llr, dtype=np.float64).ravel()
        if len(lam) != code.n_vars:
            raise ValueError(f"channel_llr length {len(lam)} != n_vars {code.n_vars}")
        if not np.all(np.isfinite(lam)):
            raise ValueError("channel_llr contains non-finite entries")
    if target is not None:
        target = validate_spin_matrix(target, code.K)

    lam = np.clip(lam, -MSG_CLIP, MSG_CLIP)
    cnv = code.checks3_vars  # (n_checks, 3) variable indices per check
    n_checks = code.n_checks3

    posteriors = [lam.copy()] if record else None

    def decide(post: np.ndarray) -> np.ndarray:
        return vector_to_matrix(code, np.where(post >= 0, 1, -1).astype(np.int8))

    def reached(m: np.ndarray) -> bool:
        if target is not None:
            return np.array_equal(m, target)
        return is_codeword(code, m)

    hard = decide(lam)
    if n_checks == 0 or reached(hard):
        return DecodeResult(
            final=hard, converged=True, success=reached(hard), iterations=0,
            trajectory=None, posteriors=posteriors,
        )

    # Messages live on graph edges arranged as (n_checks, 3); variable
    # degree is K-2, check degree exactly 3.
    msg_vc = lam[cnv]  # variable -> check
    flat_vn = cnv.ravel()
    final_post = lam
    iters_done = max_iters
    for it in range(1, max_iters + 1):
        # Check -> variable: pairwise tanh products exclude the receiver.
        t = np.tanh(0.5 * msg_vc)
        prod = np.empty_like(t)
        prod[:, 0] = t[:, 1] * t[:, 2]
        prod[:, 1] = t[:, 0] * t[:, 2]
        prod[:, 2] = t[:, 0] * t[:, 1]
        np.clip(prod, -0.9999999999999998, 0.9999999999999998, out=prod)
        msg_cv = 2.0 * np.arctanh(prod)
        np.clip(msg_cv, -MSG_CLIP, MSG_CLIP, out=msg_cv)

        # Variable -> check: channel + all incoming except the receiver.
        sums = np.bincount(flat_vn, weights=msg_cv.ravel(), minlength=code.n_vars)
        post = lam + sums
        msg_vc = post[cnv] - msg_cv
        np.clip(msg_vc, -MSG_CLIP, MSG_CLIP, out=msg_vc)

        final_post = post
        if posteriors is not None:
            posteriors.append(post.copy())
        hard = decide(post)
        if reached(hard):
            iters_done = it
            return DecodeResult(
                final=hard, converged=True, success=True, iterations=iters_done,
                posteriors=posteriors,
            )
    hard = decide(final_post)
    return DecodeResult(
        final=hard, converged=False, success=reached(hard), iterations=max_iters,
        posteriors=posteriors,
    )


# ---------------------------------------------------------------------------
# Minimum-weight decoding (exhaustive oracle)

MWD_MAX_K = 8


def mwd_bruteforce(code: ParityCode, x: np.ndarray, lam: float | None = None) -> np.ndarray:
    """Nearest plaquette-consistent state: x o e* where e* has the same
    plaquette syndrome as x and the fewest -1 entries; ties break to the
    lexicographically smallest e* (-1 sorting before +1).

    Enumerates error patterns by increasing Hamming weight, which
    realizes the infinite-constraint-strength limit without picking a
    finite multiplier (`lam` is accepted for interface fidelity only).
    Exhaustive: refuses K > 8.
    """
    if code.K > MWD_MAX_K:
        raise CapacityError(f"minimum-weight search is exhaustive; K={code.K} exceeds {MWD_MAX_K}")
    if lam is not None and not lam > 0:
        raise ValueError("lam must be positive")
    x = validate_spin_matrix(x, code.K)
    xf = matrix_to_vector(code, x).astype(np.int64)
    target = _syndrome_flat(code, xf, "w4")
    n = code.n_vars

    # violations[c] = number of -1 members a candidate needs in check c
    # to reproduce the target parity, mod 2.
    want_odd = target == -1  # (n_checks4,)
    member = np.zeros((code.n_checks4, n), dtype=np.int64)
    for c, row in enumerate(code.checks4_vars):
        for v in row:
            if v >= 0:
                member[c, v] = 1

    chunk = 65536
    for weight in range(n + 1):
        it = itertools.combinations(range(n), weight)
        while True:
            combos = list(itertools.islice(it, chunk))
            if not combos:
                break
            ind = np.zeros((len(combos), n), dtype=np.int64)
            for r, c in enumerate(combos):
                ind[r, list(c)] = 1
            parity_odd = (ind @ member.T) % 2 == 1
            ok = np.all(parity_odd == want_odd[None, :], axis=1)
            hit = np.flatnonzero(ok)
            if len(hit):
                e = np.where(ind[hit[0]] == 1, -1, 1).astype(np.int8)
                return vector_to_matrix(code, matrix_to_vector(code, x) * e)
    raise RuntimeError("unreachable: weight-n pattern always matches its own syndrome")
