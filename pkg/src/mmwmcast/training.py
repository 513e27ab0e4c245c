"""DFT codebook, beam sweeping, and composite-beam channel gain estimation.

The estimator sweeps a codebook of N DFT beams, keeps the winning codeword's
sample, then measures the two neighboring codewords.  The three samples are
combined with two phase offsets (eta1, eta2), chosen off-line so that the
composite beam gain is nearly flat over the winner's coverage, and divided
by the composite beam's mean magnitude Z to read off the channel gain.

The (eta1, eta2, Z) calibration depends only on the array size, the number
of coverage samples Q, and the variance mode, so results are memoized in
process and can be persisted to a small on-disk table.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .channel import (
    LinkParams,
    MultipathChannel,
    channel_vector,
    crandn,
    received_symbol,
    steering_vector,
)

__all__ = [
    "Codebook",
    "SweepOutcome",
    "TrainingTriple",
    "CompositeCalibration",
    "CalibrationTable",
    "build_codebook",
    "beam_sweep",
    "neighbor_training",
    "composite_gain",
    "calibration_objective",
    "calibrate_composite",
    "compute_z",
    "coverage_grid",
    "ripple_bound",
    "estimate_gain",
    "run_algorithm1",
]

VARIANCE_MODES = ("complex", "magnitude")


@dataclass
class Codebook:
    """DFT training codebook: row n-1 of ``codewords`` is codeword n.

    Codeword n = u(N, -1 + (2n-1)/N) covers the spatial-frequency band
    [-1 + 2(n-1)/N, -1 + 2n/N]; centers are strictly ascending.
    """

    n_antennas: int
    codewords: np.ndarray
    centers: np.ndarray


@dataclass
class SweepOutcome:
    """Result of one beam sweep: 1-based winner index J, its retained
    received sample, and the AoD estimate -1 + (2J-1)/N."""

    best_index: int
    y_center: complex
    est_aod: float


@dataclass
class TrainingTriple:
    """Raw received samples for the center, left, and right codewords."""

    y_center: complex
    y_left: complex
    y_right: complex


@dataclass
class CompositeCalibration:
    """Off-line composite-beam calibration keyed by (N, Q, variance mode)."""

    n_antennas: int
    q_samples: int
    variance_mode: str
    eta1: float
    eta2: float
    z_norm: float


def build_codebook(n_antennas: int) -> Codebook:
    """Construct the N-codeword DFT sweep codebook for an N-antenna ULA."""
    if n_antennas < 2:
        raise ValueError(f"n_antennas must be >= 2, got {n_antennas}")
    n = n_antennas
    centers = -1.0 + (2.0 * np.arange(1, n + 1) - 1.0) / n
    codewords = np.stack([steering_vector(n, c) for c in centers])
    return Codebook(n, codewords, centers)


def beam_sweep(
    ch: MultipathChannel,
    cb: Codebook,
    link: LinkParams,
    rng: np.random.Generator | None = None,
) -> SweepOutcome:
    """Test every codeword with fresh noise and keep the strongest sample.

    J = argmax_i |sqrt(P) h^H f_i s + n_i| with one independent noise draw
    per test; ties go to the lowest index.  The winning sample itself is
    retained as y_center (no re-measurement).
    """
    if cb.n_antennas != ch.n_antennas:
        raise ValueError("codebook size does not match channel antennas")
    h = channel_vector(ch)
    y = np.sqrt(link.power) * (cb.codewords @ h.conj()) * link.pilot
    if link.noise_var > 0:
        if rng is None:
            raise ValueError("rng required when noise_var > 0")
        y = y + crandn(rng, cb.n_antennas, link.noise_var)
    j0 = int(np.argmax(np.abs(y)))
    return SweepOutcome(j0 + 1, complex(y[j0]), float(cb.centers[j0]))


def neighbor_training(
    ch: MultipathChannel,
    est_aod: float,
    link: LinkParams,
    rng: np.random.Generator | None = None,
    y_center: complex | None = None,
) -> TrainingTriple:
    """Measure the left/right neighbors u(N, est_aod -+ 2/N) of a codeword.

    Neighbor centers wrap modulo 2 at the band edges.  When ``y_center``
    is provided (the sample retained by the sweep) it is reused;
    otherwise the center codeword is measured afresh first.  All noises
    are independent.
    """
    n = ch.n_antennas
    h = channel_vector(ch)
    if y_center is None:
        y_center = received_symbol(h, steering_vector(n, est_aod), link, rng)
    f_left = steering_vector(n, est_aod - 2.0 / n)
    f_right = steering_vector(n, est_aod + 2.0 / n)
    y_left = received_symbol(h, f_left, link, rng)
    y_right = received_symbol(h, f_right, link, rng)
    return TrainingTriple(complex(y_center), y_left, y_right)


def _dirichlet(x: np.ndarray, n: int) -> np.ndarray:
    """(1/sqrt(N)) * sum_{i=0}^{N-1} exp(j*pi*i*x), vectorized over x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ph = np.exp(1j * np.pi * np.outer(x, np.arange(n)))
    return ph.sum(axis=1) / np.sqrt(n)


def composite_gain(aod, eta1: float, eta2: float, center_aod: float, n_antennas: int):
    """Composite beam gain sqrt(N) u(N,aod)^H (f_C + e^{j eta1} f_L + e^{j eta2} f_R).

    f_C is the codeword at ``center_aod``; f_L/f_R sit 2/N to either side.
    Accepts a scalar or array ``aod``.
    """
    n = n_antennas
    a = np.atleast_1d(np.asarray(aod, dtype=float))
    g = (
        _dirichlet(center_aod - a, n)
        + np.exp(1j * eta1) * _dirichlet(center_aod - 2.0 / n - a, n)
        + np.exp(1j * eta2) * _dirichlet(center_aod + 2.0 / n - a, n)
    )
    return g if np.ndim(aod) else complex(g[0])


def coverage_grid(n_antennas: int, q_samples: int) -> np.ndarray:
    """The Q sample points -1 + 1/N + 4q/(NQ), q = 1..Q, spanning the
    composite coverage around the reference center -1 + 3/N."""
    n, q = n_antennas, q_samples
    return -1.0 + 1.0 / n + 4.0 * np.arange(1, q + 1) / (n * q)


def _coverage_gains(n_antennas: int, q_samples: int):
    """Per-codeword gains (center, left, right) on the coverage grid."""
    n = n_antennas
    center = -1.0 + 3.0 / n
    grid = coverage_grid(n, q_samples)
    gc = _dirichlet(center - grid, n)
    gl = _dirichlet(center - 2.0 / n - grid, n)
    gr = _dirichlet(center + 2.0 / n - grid, n)
    return gc, gl, gr


def calibration_objective(
    n_antennas: int,
    eta1: float,
    eta2: float,
    q_samples: int,
    variance_mode: str = "complex",
) -> float:
    """Sample variance of the composite gain over the coverage grid.

    Mode "complex" is var of the complex values g (the literal objective);
    mode "magnitude" is var of |g|.
    """
    gc, gl, gr = _coverage_gains(n_antennas, q_samples)
    g = gc + np.exp(1j * eta1) * gl + np.exp(1j * eta2) * gr
    if variance_mode == "complex":
        return float(np.var(g))
    if variance_mode == "magnitude":
        return float(np.var(np.abs(g)))
    raise ValueError(f"unknown variance_mode {variance_mode!r}")


def _objective_rows(gc, gl, gr, eta1: float, eta2s: np.ndarray, variance_mode: str):
    """Objective for one eta1 against a whole row of eta2 candidates."""
    g = gc[None, :] + np.exp(1j * eta1) * gl[None, :]
    g = g + np.exp(1j * eta2s)[:, None] * gr[None, :]
    if variance_mode == "complex":
        return np.var(g, axis=1)
    return np.var(np.abs(g), axis=1)


_CALIBRATION_MEMO: dict[tuple, CompositeCalibration] = {}


def calibrate_composite(
    n_antennas: int,
    q_samples: int = 4000,
    grid_size: int = 256,
    variance_mode: str = "complex",
) -> CompositeCalibration:
    """Find (eta1, eta2) minimizing the coverage variance, then compute Z.

    Exhaustive 2-D grid search over (-pi, pi]^2 with ``grid_size`` points
    per axis, followed by one refinement pass at 10x resolution around the
    best cell.  Deterministic; memoized per (N, Q, mode, grid_size).
    """
    if q_samples < 100:
        raise ValueError("q_samples must be >= 100")
    if grid_size < 16:
        raise ValueError("grid_size must be >= 16")
    if variance_mode not in VARIANCE_MODES:
        raise ValueError(f"unknown variance_mode {variance_mode!r}")
    key = (n_antennas, q_samples, variance_mode, grid_size)
    hit = _CALIBRATION_MEMO.get(key)
    if hit is not None:
        return hit

    gc, gl, gr = _coverage_gains(n_antennas, q_samples)
    etas = -np.pi + 2.0 * np.pi * np.arange(1, grid_size + 1) / grid_size
    best = (np.inf, 0.0, 0.0)
    for e1 in etas:
        row = _objective_rows(gc, gl, gr, e1, etas, variance_mode)
        m = int(np.argmin(row))
        if row[m] < best[0]:
            best = (float(row[m]), float(e1), float(etas[m]))

    # Refinement at 10x resolution over one coarse cell around the best point.
    step = 2.0 * np.pi / grid_size
    fine1 = best[1] + np.linspace(-step, step, 21)
    fine2 = best[2] + np.linspace(-step, step, 21)
    for e1 in fine1:
        row = _objective_rows(gc, gl, gr, e1, fine2, variance_mode)
        m = int(np.argmin(row))
        if row[m] < best[0]:
            best = (float(row[m]), float(e1), float(fine2[m]))

    eta1 = float(((best[1] + np.pi) % (2.0 * np.pi)) - np.pi)
    eta2 = float(((best[2] + np.pi) % (2.0 * np.pi)) - np.pi)
    # Map the open endpoint -pi back to pi so etas stay in (-pi, pi].
    if eta1 == -np.pi:
        eta1 = np.pi
    if eta2 == -np.pi:
        eta2 = np.pi
    z = compute_z(n_antennas, eta1, eta2, q_samples)
    calib = CompositeCalibration(
        n_antennas, q_samples, variance_mode, eta1, eta2, z
    )
    _CALIBRATION_MEMO[key] = calib
    return calib


def compute_z(n_antennas: int, eta1: float, eta2: float, q_samples: int) -> float:
    """Z = (1/Q) sum_q |g(-1 + 1/N + 4q/(NQ), eta1, eta2)|."""
    gc, gl, gr = _coverage_gains(n_antennas, q_samples)
    g = gc + np.exp(1j * eta1) * gl + np.exp(1j * eta2) * gr
    return float(np.mean(np.abs(g)))


def ripple_bound(calib: CompositeCalibration, n_grid: int = 8001) -> float:
    """r_max = max | |g|/Z - 1 | over a dense grid on the coverage.

    Bounds the relative gain-estimation error for noiseless LoS channels
    whose AoD falls inside the winning codeword's coverage.
    """
    n = calib.n_antennas
    center = -1.0 + 3.0 / n
    grid = np.linspace(center - 2.0 / n, center + 2.0 / n, n_grid)
    g = composite_gain(grid, calib.eta1, calib.eta2, center, n)
    return float(np.max(np.abs(np.abs(g) / calib.z_norm - 1.0)))


def estimate_gain(
    triple: TrainingTriple, calib: CompositeCalibration, link: LinkParams
) -> float:
    """|alpha_hat| = |(y_C + e^{j eta1} y_L + e^{j eta2} y_R) / (s Z sqrt(P))|."""
    if link.power <= 0:
        raise ValueError("power must be > 0 for gain estimation")
    y = (
        triple.y_center
        + np.exp(1j * calib.eta1) * triple.y_left
        + np.exp(1j * calib.eta2) * triple.y_right
    )
    return float(abs(y / (link.pilot * calib.z_norm * np.sqrt(link.power))))


def run_algorithm1(
    ch: MultipathChannel,
    cb: Codebook,
    link: LinkParams,
    calib: CompositeCalibration,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Sweep, estimate the AoD, train the neighbors, estimate the gain.

    Returns (est_gain, est_aod).  Equivalent to chaining beam_sweep ->
    neighbor_training (reusing the retained center sample) -> estimate_gain
    on the same random stream.
    """
    if calib.n_antennas != ch.n_antennas:
        raise ValueError("calibration does not match channel antennas")
    sweep = beam_sweep(ch, cb, link, rng)
    triple = neighbor_training(ch, sweep.est_aod, link, rng, y_center=sweep.y_center)
    return estimate_gain(triple, calib, link), sweep.est_aod


class CalibrationTable:
    """On-disk cache of composite calibrations, one JSON record per line.

    Records carry {n_antennas, q_samples, mode, eta1, eta2, z_norm}.
    Writes are atomic (temp file + rename) so concurrent readers never
    see a partial table; the file is regenerated on demand if absent.
    """

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self._records: dict[tuple, CompositeCalibration] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        for line in self.path.read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            calib = CompositeCalibration(
                n_antennas=int(raw["n_antennas"]),
                q_samples=int(raw["q_samples"]),
                variance_mode=str(raw["mode"]),
                eta1=float(raw["eta1"]),
                eta2=float(raw["eta2"]),
                z_norm=float(raw["z_norm"]),
            )
            self._records[self._key(calib)] = calib

    @staticmethod
    def _key(calib: CompositeCalibration) -> tuple:
        return (calib.n_antennas, calib.q_samples, calib.variance_mode)

    def get(
        self, n_antennas: int, q_samples: int, variance_mode: str = "complex"
    ) -> CompositeCalibration | None:
        return self._records.get((n_antennas, q_samples, variance_mode))

    def put(self, calib: CompositeCalibration) -> None:
        self._records[self._key(calib)] = calib
        self._flush()

    def get_or_compute(
        self,
        n_antennas: int,
        q_samples: int = 4000,
        variance_mode: str = "complex",
        grid_size: int = 256,
    ) -> CompositeCalibration:
        hit = self.get(n_antennas, q_samples, variance_mode)
        if hit is not None:
            return hit
        calib = calibrate_composite(n_antennas, q_samples, grid_size, variance_mode)
        self.put(calib)
        return calib

    def _flush(self) -> None:
        lines = []
        for key in sorted(self._records):
            c = self._records[key]
            rec = asdict(c)
            rec["mode"] = rec.pop("variance_mode")
            lines.append(json.dumps(rec, sort_keys=True))
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text("\n".join(lines) + "\n")
        os.replace(tmp, self.path)
