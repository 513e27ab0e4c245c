"""Brute-force oracles and the ALTER-style baseline.

The oracles enumerate their full search space and refuse oversized ones
rather than silently grinding for hours.  ALTER is reconstructed from its
one-line description (alternately optimizing each beamformer entry under
perfect CSI); initialization and scan order are this repo's choices, so
its outputs are labeled "alter-style".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .multicast import (
    BeamformerDesign,
    SubArrayLayout,
    assemble_beamformer,
    estimated_channels,
    min_snr_objective,
    snap_phases,
    subarray_weight,
)

__all__ = [
    "SearchSpaceError",
    "OracleResult",
    "exhaustive_factor_oracle",
    "exhaustive_beamformer_oracle",
    "alter_baseline",
    "matched_filter_bound",
]

FACTOR_SPACE_LIMIT = 2**24
ENTRY_SPACE_LIMIT = 2**26


class SearchSpaceError(ValueError):
    """Raised when an exhaustive search space exceeds the desk-scale guard."""


@dataclass
class OracleResult:
    """Best min-SNR found, the argmax configuration, and the number of
    candidates evaluated (always the full search-space size)."""

    best_value: float
    best_config: tuple[int, ...]
    evaluations: int


def _combo_block(t_size: int, n_factors: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start..stop`` of the lexicographic T^n_factors index table
    (first factor most significant)."""
    idx = np.arange(start, stop)
    combos = np.empty((len(idx), n_factors), dtype=int)
    for pos in range(n_factors - 1, -1, -1):
        combos[:, pos] = idx % t_size
        idx = idx // t_size
    return combos


def exhaustive_factor_oracle(
    users,
    layout: SubArrayLayout,
    t_set: np.ndarray,
    power: float = 1.0,
    channels: np.ndarray | None = None,
    noise_vars=None,
    entry_set: np.ndarray | None = None,
    quantize: bool = False,
) -> OracleResult:
    """Joint optimum over all T^(G-1) phase-factor tuples.

    By default scores each tuple against the estimated LoS-only channels,
    matching the sequential optimizer's objective.  Passing ``channels``
    (with ``noise_vars``) scores assembled designs against those channels
    instead, optionally snapped to ``entry_set`` when ``quantize`` is set.
    Ties go to the lexicographically smallest tuple.
    """
    users = list(users)
    g = layout.n_subarrays
    n_factors = g - 1
    t_size = len(t_set)
    space = t_size**n_factors
    if space > FACTOR_SPACE_LIMIT:
        raise SearchSpaceError(
            f"factor search space {t_size}^{n_factors} exceeds {FACTOR_SPACE_LIMIT}"
        )
    if noise_vars is None:
        noise_vars = np.array([u.noise_std**2 for u in users], dtype=float)

    if channels is not None or quantize:
        eval_channels = (
            np.asarray(channels)
            if channels is not None
            else estimated_channels(users, layout.n_antennas)
        )
        best_val, best_cfg = -np.inf, (0,) * n_factors
        for flat in range(space):
            combo = tuple(_combo_block(t_size, n_factors, flat, flat + 1)[0])
            design = assemble_beamformer(
                layout, users, t_set[list(combo)], entry_set, quantize=quantize
            )
            r = min_snr_objective(eval_channels, design.f_rf, power, noise_vars)
            if r > best_val:
                best_val, best_cfg = r, combo
        return OracleResult(best_val, best_cfg, space)

    # Unquantized, estimated-channel objective: vectorized over tuples.
    h = estimated_channels(users, layout.n_antennas)
    v = np.empty((len(users), g), dtype=complex)
    for i, (size, aod, off) in enumerate(
        zip(layout.sizes, layout.aods, layout.offsets())
    ):
        w = subarray_weight(size, aod, layout.n_antennas)
        v[:, i] = h[:, off : off + size].conj() @ w
    noise_vars = np.asarray(noise_vars, dtype=float) * np.ones(len(users))

    best_val, best_cfg = -np.inf, (0,) * max(n_factors, 0)
    chunk = 1 << 16
    for start in range(0, space, chunk):
        stop = min(start + chunk, space)
        combos = _combo_block(t_size, n_factors, start, stop)
        phasors = np.exp(1j * t_set[combos])  # (B, n_factors)
        totals = v[:, 0][:, None] + v[:, 1:] @ phasors.T  # (K, B)
        r = np.min(power * np.abs(totals) ** 2 / noise_vars[:, None], axis=0)
        m = int(np.argmax(r))
        if r[m] > best_val:
            best_val = float(r[m])
            best_cfg = tuple(int(c) for c in combos[m])
    return OracleResult(best_val, best_cfg, space)


def _half_sums(h_rows: np.ndarray, entries, phasors: np.ndarray) -> np.ndarray:
    """Partial sums sum_i conj(h[k, i]) * phasor[s_i] / sqrt(N) over all
    phase-index assignments of ``entries``, lexicographic (first entry
    most significant).  Shape (K, |S|^len(entries))."""
    k, n = h_rows.shape
    scale = 1.0 / np.sqrt(n)
    sums = np.zeros((k, 1), dtype=complex)
    for i in entries:
        contrib = np.outer(h_rows[:, i].conj() * scale, phasors)  # (K, S)
        sums = (sums[:, :, None] + contrib[:, None, :]).reshape(k, -1)
    return sums


def exhaustive_beamformer_oracle(
    channels: np.ndarray,
    entry_set: np.ndarray,
    power: float = 1.0,
    noise_vars=1.0,
) -> OracleResult:
    """Global optimum over all constant-modulus vectors with phases in S.

    Meet-in-the-middle enumeration: partial sums over the two array
    halves are combined in chunks, so N=8 with B=3 (16.7M candidates)
    stays fast.  Ties go to the lexicographically smallest phase-index
    vector; evaluations always equals |S|^N.
    """
    h = np.asarray(channels)
    if h.ndim == 1:
        h = h[None, :]
    k, n = h.shape
    s_size = len(entry_set)
    space = s_size**n
    if space > ENTRY_SPACE_LIMIT:
        raise SearchSpaceError(
            f"entry search space {s_size}^{n} exceeds {ENTRY_SPACE_LIMIT}"
        )
    noise_vars = np.asarray(noise_vars, dtype=float) * np.ones(k)
    phasors = np.exp(1j * entry_set)

    n_a = n // 2
    # Pre-scaling by sqrt(P/sigma_k^2) folds the SNR weights into the sums.
    weights = np.sqrt(power / noise_vars)[:, None]
    pa = _half_sums(h, range(n_a), phasors) * weights  # (K, S^n_a)
    pb = _half_sums(h, range(n_a, n), phasors) * weights  # (K, S^(n-n_a))
    nb = pb.shape[1]

    best_val, best_flat = -np.inf, 0
    chunk = max(1, (1 << 21) // max(nb, 1))
    for start in range(0, pa.shape[1], chunk):
        stop = min(start + chunk, pa.shape[1])
        r = None
        for u in range(k):
            re = np.add.outer(pa[u, start:stop].real, pb[u].real)
            im = np.add.outer(pa[u, start:stop].imag, pb[u].imag)
            g = re * re + im * im
            r = g if r is None else np.minimum(r, g, out=r)
        m = int(np.argmax(r))
        val = float(r.flat[m])
        if val > best_val:
            best_val = val
            best_flat = (start + m // nb) * nb + (m % nb)

    digits = _combo_block(s_size, n, best_flat, best_flat + 1)[0]
    return OracleResult(best_val, tuple(int(d) for d in digits), space)


def _entry_ascent(h, f, entry_set, power, noise_vars, n_iter):
    """Entry-wise coordinate ascent rounds from one starting vector.

    Returns (f, min-SNR, evaluation count).  Stops early once a full
    round changes no entry.
    """
    k, n = h.shape
    phasors = np.exp(1j * entry_set) / np.sqrt(n)
    y = h.conj() @ f  # (K,)
    evals = 0
    r_best = float(np.min(power * np.abs(y) ** 2 / noise_vars))
    for _round in range(n_iter):
        changed = False
        for i in range(n):
            rest = y - h[:, i].conj() * f[i]
            cand = rest[:, None] + np.outer(h[:, i].conj(), phasors)
            r_cand = np.min(
                power * np.abs(cand) ** 2 / noise_vars[:, None], axis=0
            )
            evals += len(entry_set)
            m = int(np.argmax(r_cand))
            new_entry = phasors[m]
            if new_entry != f[i]:
                changed = True
            f[i] = new_entry
            y = cand[:, m]
            r_best = float(r_cand[m])
        if not changed:
            break
    return f, r_best, evals


def alter_baseline(
    channels: np.ndarray,
    entry_set: np.ndarray,
    power: float = 1.0,
    noise_vars=1.0,
    n_iter: int = 5,
    init: np.ndarray | None = None,
) -> BeamformerDesign:
    """ALTER-style coordinate ascent over individual entry phases.

    Each round scans entries 1..N and sets each phase to the member of S
    maximizing the min-SNR with the others fixed (ties to the smallest
    angle); rounds stop early once a full round changes nothing.  With no
    ``init``, one ascent is run from each user's quantized matched filter
    and the best result kept (the per-user restarts are what make the
    bookkeeping come out at |S| * N * K * rounds, the advertised ALTER
    cost); with ``init`` given, a single ascent starts there.
    eval_count totals the candidate evaluations across starts.
    """
    if not 1 <= n_iter <= 20:
        raise ValueError("n_iter must be in [1, 20]")
    h = np.asarray(channels)
    if h.ndim == 1:
        h = h[None, :]
    k, n = h.shape
    noise_vars = np.asarray(noise_vars, dtype=float) * np.ones(k)

    if init is not None:
        starts = [np.asarray(init, dtype=complex).copy()]
    else:
        order = np.argsort(
            -power * (np.abs(h) ** 2).sum(axis=1) / noise_vars, kind="stable"
        )
        starts = [
            snap_phases(np.exp(1j * np.angle(h[u])) / np.sqrt(n), entry_set)
            for u in order
        ]

    best_f, best_r, total_evals = None, -np.inf, 0
    for f0 in starts:
        f, r, evals = _entry_ascent(
            h, f0, entry_set, power, noise_vars, n_iter
        )
        total_evals += evals
        if r > best_r:
            best_f, best_r = f, r
    return BeamformerDesign(best_f, None, None, True, total_evals)


def matched_filter_bound(
    channels_or_users,
    power: float = 1.0,
    noise_vars=1.0,
    n_antennas: int | None = None,
) -> float:
    """Cauchy-Schwarz ceiling min_k P ||h_k||^2 / sigma_k^2.

    No unit-norm beamformer can exceed it.  Accepts true channel rows or
    UserEstimate objects (scored via their LoS-only estimates, with their
    own noise levels).
    """
    if not isinstance(channels_or_users, np.ndarray):
        items = list(channels_or_users)
        if items and hasattr(items[0], "est_gain"):
            if n_antennas is None:
                raise ValueError("n_antennas required with UserEstimate input")
            h = estimated_channels(items, n_antennas)
            noise_vars = np.array([u.noise_std**2 for u in items])
        else:
            h = np.asarray(items)
    else:
        h = channels_or_users
    if h.ndim == 1:
        h = h[None, :]
    noise_vars = np.asarray(noise_vars, dtype=float) * np.ones(h.shape[0])
    norms = (np.abs(h) ** 2).sum(axis=1)
    return float(np.min(power * norms / noise_vars))
