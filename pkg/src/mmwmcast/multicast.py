"""Max-min-fair multicast beamforming via sub-arrays and phase factors.

The N-antenna array is split into contiguous sub-arrays, one per user
(users sharing an estimated AoD share a sub-array), sized so that the
estimated per-user SNRs equalize.  Each sub-array steers a phase ramp at
its user; a quantized phase factor per sub-array (beyond the first) is
then optimized coordinate-wise to maximize the minimum SNR.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import steering_vector

__all__ = [
    "DegenerateUserError",
    "UserEstimate",
    "SubArrayLayout",
    "PhaseFactors",
    "BeamformerDesign",
    "DesignConfig",
    "quantized_angle_set",
    "allocate_subarrays",
    "subarray_weight",
    "assemble_beamformer",
    "estimated_channels",
    "min_snr_objective",
    "optimize_phase_factors",
    "run_algorithm2",
    "equal_snr_diagnostic",
    "snap_phases",
]


class DegenerateUserError(ValueError):
    """Raised when a user's estimated gain is zero (allocation divides by it)."""


@dataclass
class UserEstimate:
    """Estimated gain |alpha_hat| >= 0, estimated AoD, and noise std sigma."""

    est_gain: float
    est_aod: float
    noise_std: float = 1.0

    def __post_init__(self):
        if self.est_gain < 0:
            raise ValueError("est_gain must be >= 0")
        if self.noise_std <= 0:
            raise ValueError("noise_std must be > 0")


@dataclass
class SubArrayLayout:
    """Sub-array split of the full array, in ascending estimated-AoD order.

    order:  user indices sorted by est_aod (ties by input position)
    sizes:  antennas per sub-array after merging, summing to n_antennas
    merges: per sub-array, the tuple of user indices it serves
    aods:   per sub-array steering AoD (the group's shared estimate)
    """

    n_antennas: int
    order: tuple[int, ...]
    sizes: tuple[int, ...]
    merges: tuple[tuple[int, ...], ...]
    aods: tuple[float, ...]

    @property
    def n_subarrays(self) -> int:
        return len(self.sizes)

    def offsets(self) -> tuple[int, ...]:
        """Starting antenna index of each sub-array."""
        return tuple(int(x) for x in np.concatenate(([0], np.cumsum(self.sizes)[:-1])))

    def size_serving(self, user: int) -> int:
        """Size of the sub-array serving a given (original-index) user."""
        for size, group in zip(self.sizes, self.merges):
            if user in group:
                return size
        raise ValueError(f"user {user} not in layout")


@dataclass
class PhaseFactors:
    """Per-sub-array phase offsets (first sub-array implicitly at 0) and
    the best min-SNR objective reached, with per-sweep history."""

    thetas: tuple[float, ...]
    objective: float
    eval_count: int = 0
    sweep_objectives: tuple[float, ...] = ()


@dataclass
class BeamformerDesign:
    """Assembled constant-modulus beamformer and its provenance."""

    f_rf: np.ndarray
    layout: SubArrayLayout | None = None
    phases: PhaseFactors | None = None
    quantized: bool = False
    eval_count: int = 0


@dataclass
class DesignConfig:
    """Knobs for the end-to-end multicast design."""

    n_antennas: int = 64
    entry_bits: int = 6
    factor_bits: int = 4
    i_max: int = 30
    power: float = 1.0
    quantize: bool = True


def quantized_angle_set(bits: int) -> np.ndarray:
    """The 2^bits angles pi*(-1 + (2m-1)/2^bits), m = 1..2^bits."""
    if not 1 <= bits <= 16:
        raise ValueError(f"bits must be in [1, 16], got {bits}")
    m = np.arange(1, 2**bits + 1)
    return np.pi * (-1.0 + (2.0 * m - 1.0) / 2**bits)


def allocate_subarrays(users, n_antennas: int) -> SubArrayLayout:
    """Size the sub-arrays so estimated SNRs equalize.

    Users are sorted by ascending est_aod; sizes for the first K-1 come
    from round(sigma_k*N / (|a_k| * sum_l sigma_l/|a_l|)), the last from
    the remainder.  Any size below 1 is clamped to 1 with the deficit
    taken from the largest sub-array.  Users with identical est_aod are
    merged into one sub-array whose size is the sum of their shares.
    """
    users = list(users)
    k = len(users)
    if k < 1:
        raise ValueError("need at least one user")
    if k > n_antennas:
        raise ValueError(f"cannot serve {k} users with {n_antennas} antennas")
    for u in users:
        if u.est_gain == 0:
            raise DegenerateUserError("user has zero estimated gain")

    order = tuple(sorted(range(k), key=lambda i: (users[i].est_aod, i)))
    weights = np.array([users[i].noise_std / users[i].est_gain for i in order])
    total = weights.sum()

    sizes = np.empty(k, dtype=int)
    ideal = n_antennas * weights / total
    sizes[: k - 1] = np.round(ideal[: k - 1]).astype(int)
    sizes[k - 1] = n_antennas - sizes[: k - 1].sum()

    # Clamp: every sub-array keeps at least one antenna; shave the largest.
    sizes = np.maximum(sizes, 1)
    while sizes.sum() > n_antennas:
        sizes[int(np.argmax(sizes))] -= 1

    merged_sizes: list[int] = []
    merges: list[tuple[int, ...]] = []
    aods: list[float] = []
    for pos, user_idx in enumerate(order):
        aod = users[user_idx].est_aod
        if merges and aod == aods[-1]:
            merged_sizes[-1] += int(sizes[pos])
            merges[-1] = merges[-1] + (user_idx,)
        else:
            merged_sizes.append(int(sizes[pos]))
            merges.append((user_idx,))
            aods.append(aod)
    return SubArrayLayout(
        n_antennas, order, tuple(merged_sizes), tuple(merges), tuple(aods)
    )


def subarray_weight(size: int, est_aod: float, n_antennas: int) -> np.ndarray:
    """w[i] = exp(j*i*pi*est_aod)/sqrt(N_BS), i = 0..size-1.

    Normalization uses the full array size so the concatenated beamformer
    has unit norm.
    """
    if not 1 <= size <= n_antennas:
        raise ValueError(f"size must be in [1, {n_antennas}], got {size}")
    return steering_vector(size, est_aod) * np.sqrt(size / n_antennas)


def snap_phases(f: np.ndarray, angle_set: np.ndarray) -> np.ndarray:
    """Snap each entry's phase to the nearest member of the angle set.

    Circular distance decides; exact ties go to the smaller angle.
    Moduli are preserved.
    """
    phases = np.angle(f)
    diff = phases[:, None] - angle_set[None, :]
    dist = np.abs((diff + np.pi) % (2.0 * np.pi) - np.pi)
    idx = np.argmin(dist, axis=1)
    return np.abs(f) * np.exp(1j * angle_set[idx])


def assemble_beamformer(
    layout: SubArrayLayout,
    users,
    thetas,
    entry_set: np.ndarray | None = None,
    quantize: bool = False,
) -> BeamformerDesign:
    """f_RF = [w_1; e^{j th_1} w_2; ...; e^{j th_{G-1}} w_G] in AoD order.

    With ``quantize`` set, each entry's phase is snapped to the nearest
    member of the entry angle set (ties to the smaller angle); entry
    moduli stay at 1/sqrt(N).
    """
    phases = thetas if isinstance(thetas, PhaseFactors) else None
    theta_vals = np.asarray(
        phases.thetas if phases is not None else thetas, dtype=float
    )
    g = layout.n_subarrays
    if theta_vals.shape != (g - 1,):
        raise ValueError(
            f"expected {g - 1} phase factors for {g} sub-arrays, "
            f"got {theta_vals.shape}"
        )
    blocks = []
    for i, (size, aod) in enumerate(zip(layout.sizes, layout.aods)):
        w = subarray_weight(size, aod, layout.n_antennas)
        if i > 0:
            w = w * np.exp(1j * theta_vals[i - 1])
        blocks.append(w)
    f_rf = np.concatenate(blocks)
    if quantize:
        if entry_set is None:
            raise ValueError("entry_set required when quantize is set")
        f_rf = snap_phases(f_rf, entry_set)
    if phases is None:
        phases = PhaseFactors(tuple(float(t) for t in theta_vals), float("nan"))
    return BeamformerDesign(f_rf, layout, phases, bool(quantize))


def estimated_channels(users, n_antennas: int) -> np.ndarray:
    """LoS-only channel estimates h_hat_k = |a_k| u(N, aod_k), rows per user."""
    return np.stack(
        [u.est_gain * steering_vector(n_antennas, u.est_aod) for u in users]
    )


def min_snr_objective(channels, f_rf: np.ndarray, power: float, noise_vars) -> float:
    """r = min_k P |h_k^H f|^2 / sigma_k^2.

    ``channels`` is a (K, N) array of channel rows: true channels for
    evaluation or estimated LoS-only channels for design.  ``noise_vars``
    may be scalar or per-user.
    """
    h = np.asarray(channels)
    f = np.asarray(f_rf)
    if h.ndim == 1:
        h = h[None, :]
    if h.shape[1] != f.shape[0]:
        raise ValueError(
            f"channel length {h.shape[1]} does not match beamformer {f.shape[0]}"
        )
    gains = np.abs(h.conj() @ f) ** 2
    return float(np.min(power * gains / np.asarray(noise_vars, dtype=float)))


def _subarray_gain_matrix(users, layout: SubArrayLayout) -> np.ndarray:
    """V[k, g] = h_hat_k^H (sub-array g's block embedded in the full array)."""
    h = estimated_channels(users, layout.n_antennas)
    v = np.empty((len(users), layout.n_subarrays), dtype=complex)
    for g, (size, aod, off) in enumerate(
        zip(layout.sizes, layout.aods, layout.offsets())
    ):
        w = subarray_weight(size, aod, layout.n_antennas)
        v[:, g] = h[:, off : off + size].conj() @ w
    return v


def optimize_phase_factors(
    users,
    layout: SubArrayLayout,
    t_set: np.ndarray,
    i_max: int,
    power: float = 1.0,
) -> PhaseFactors:
    """Sequential (coordinate-wise) search of the phase factors over T.

    All factors start at 0.  Each sweep sets every factor in turn to the
    angle maximizing the min-SNR against the estimated channels (ties to
    the smallest angle); sweeping stops when a full sweep no longer
    improves the best value, or after ``i_max`` sweeps.
    """
    if i_max < 1:
        raise ValueError("i_max must be >= 1")
    noise_vars = np.array([u.noise_std**2 for u in users], dtype=float)
    v = _subarray_gain_matrix(users, layout)
    g = layout.n_subarrays
    if g == 1:
        gamma = float(np.min(power * np.abs(v[:, 0]) ** 2 / noise_vars))
        return PhaseFactors((), gamma, 0, (gamma,))

    phasors = np.exp(1j * t_set)
    thetas = np.zeros(g - 1)
    total = v[:, 0] + (v[:, 1:] * np.exp(1j * thetas)[None, :]).sum(axis=1)
    gamma = 0.0
    evals = 0
    history: list[float] = []
    for _sweep in range(i_max):
        r_sweep = gamma
        for n in range(g - 1):
            rest = total - np.exp(1j * thetas[n]) * v[:, n + 1]
            cand = rest[:, None] + np.outer(v[:, n + 1], phasors)
            r_cand = np.min(
                power * np.abs(cand) ** 2 / noise_vars[:, None], axis=0
            )
            evals += len(t_set)
            m = int(np.argmax(r_cand))
            thetas[n] = t_set[m]
            total = cand[:, m]
            r_sweep = float(r_cand[m])
        history.append(r_sweep)
        if r_sweep > gamma:
            gamma = r_sweep
        else:
            break
    return PhaseFactors(
        tuple(float(t) for t in thetas), gamma, evals, tuple(history)
    )


def run_algorithm2(gains, aods, noise_stds, config: DesignConfig) -> BeamformerDesign:
    """Allocate sub-arrays, optimize phase factors, assemble the beamformer.

    ``gains``/``aods`` are the per-user estimates (Algorithm 1's output
    feeds in here); the returned design carries the objective-evaluation
    count of the factor search.
    """
    users = [
        UserEstimate(float(g), float(a), float(s))
        for g, a, s in zip(gains, aods, noise_stds, strict=True)
    ]
    layout = allocate_subarrays(users, config.n_antennas)
    t_set = quantized_angle_set(config.factor_bits)
    factors = optimize_phase_factors(
        users, layout, t_set, config.i_max, config.power
    )
    entry_set = quantized_angle_set(config.entry_bits) if config.quantize else None
    design = assemble_beamformer(
        layout, users, factors, entry_set, quantize=config.quantize
    )
    design.eval_count = factors.eval_count
    return design


def equal_snr_diagnostic(users, layout: SubArrayLayout) -> np.ndarray:
    """Per-user |a_k| N_k / sigma_k, where N_k is the serving sub-array size.

    Allocation aims to equalize these values; rounding perturbs each
    member by at most its rounding slack.
    """
    users = list(users)
    return np.array(
        [
            u.est_gain * layout.size_serving(i) / u.noise_std
            for i, u in enumerate(users)
        ]
    )
