"""mmWave multipath channel model for a half-wavelength ULA.

Channels follow the Saleh-Valenzuela form: one LoS path plus L weaker NLoS
paths, each described by a complex coefficient and an angle of departure
(AoD).  AoDs are encoded as spatial frequencies in [-1, 1] (the sine of the
physical angle under half-wavelength element spacing); they wrap modulo 2.

All randomized operations take an explicit ``numpy.random.Generator`` so
that trials can run in parallel with independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelPath",
    "MultipathChannel",
    "ChannelStats",
    "LinkParams",
    "steering_vector",
    "sample_channel",
    "channel_vector",
    "received_symbol",
    "beam_gain",
    "crandn",
]


def wrap_aod(aod):
    """Reduce a spatial frequency modulo 2 into [-1, 1)."""
    return ((np.asarray(aod, dtype=float) + 1.0) % 2.0) - 1.0


def crandn(rng: np.random.Generator, shape=None, var: float = 1.0):
    """Circularly-symmetric complex Gaussian CN(0, var) samples.

    Real and imaginary parts are independent N(0, var/2); the real parts
    are drawn before the imaginary parts so the stream layout is fixed.
    """
    size = () if shape is None else shape
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return np.sqrt(var / 2.0) * (re + 1j * im)


def steering_vector(n_antennas: int, aod: float) -> np.ndarray:
    """ULA response u(N, phi), entry i = exp(j*i*pi*phi)/sqrt(N).

    Unit Euclidean norm by construction; ``aod`` is reduced modulo 2
    before use, so u(N, phi) == u(N, phi + 2).
    """
    if n_antennas < 1:
        raise ValueError(f"n_antennas must be >= 1, got {n_antennas}")
    phi = float(wrap_aod(aod))
    idx = np.arange(n_antennas)
    return np.exp(1j * np.pi * phi * idx) / np.sqrt(n_antennas)


@dataclass
class ChannelPath:
    """One propagation path: complex coefficient and AoD (spatial freq)."""

    coeff: complex
    aod: float


@dataclass
class MultipathChannel:
    """One user's LoS path plus a tuple of NLoS paths."""

    n_antennas: int
    los: ChannelPath
    nlos: tuple[ChannelPath, ...] = ()

    def __post_init__(self):
        if self.n_antennas < 1:
            raise ValueError("n_antennas must be >= 1")
        self.nlos = tuple(self.nlos)


@dataclass
class ChannelStats:
    """Path-coefficient variances for channel sampling.

    AoDs are always drawn independently and uniformly on [-1, 1]; the
    coefficient of each path is CN(0, variance).
    """

    los_variance: float = 1.0
    nlos_variances: tuple[float, ...] = (0.01, 0.01)

    def __post_init__(self):
        if self.los_variance < 0 or not np.isfinite(self.los_variance):
            raise ValueError("los_variance must be finite and >= 0")
        self.nlos_variances = tuple(float(v) for v in self.nlos_variances)
        if any(v < 0 or not np.isfinite(v) for v in self.nlos_variances):
            raise ValueError("nlos_variances must be finite and >= 0")


@dataclass
class LinkParams:
    """Transmit power P, per-user noise variance, and the pilot symbol s.

    The pilot is fixed to a unit-modulus symbol (default 1).  noise_var
    may be 0 for noiseless oracle evaluations.
    """

    power: float
    noise_var: float = 1.0
    pilot: complex = field(default=1.0 + 0.0j)

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("power must be >= 0")
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")
        if abs(abs(complex(self.pilot)) - 1.0) > 1e-9:
            raise ValueError("pilot must have unit modulus")


def sample_channel(
    stats: ChannelStats,
    n_antennas: int,
    n_paths: int,
    rng: np.random.Generator,
) -> MultipathChannel:
    """Draw a random channel: 1 LoS path plus ``n_paths`` NLoS paths.

    Coefficients are CN(0, var) per ``stats``; AoDs are uniform on
    [-1, 1].  Draw order is fixed (LoS coeff, NLoS coeffs, then all
    AoDs) so identical seeds give identical channels.
    """
    if n_paths < 0:
        raise ValueError("n_paths must be >= 0")
    if n_paths > len(stats.nlos_variances):
        raise ValueError(
            f"stats provides {len(stats.nlos_variances)} NLoS variances, "
            f"need {n_paths}"
        )
    los_coeff = complex(crandn(rng, var=stats.los_variance))
    nlos_vars = np.asarray(stats.nlos_variances[:n_paths])
    nlos_coeffs = crandn(rng, n_paths) * np.sqrt(nlos_vars) if n_paths else []
    aods = rng.uniform(-1.0, 1.0, size=n_paths + 1)
    los = ChannelPath(los_coeff, float(aods[0]))
    nlos = tuple(
        ChannelPath(complex(c), float(a)) for c, a in zip(nlos_coeffs, aods[1:])
    )
    return MultipathChannel(n_antennas, los, nlos)


def channel_vector(ch: MultipathChannel) -> np.ndarray:
    """h = sqrt(N) * (alpha*u(N, phi) + sum_l alpha_l*u(N, phi_l))."""
    n = ch.n_antennas
    h = ch.los.coeff * steering_vector(n, ch.los.aod)
    for path in ch.nlos:
        h = h + path.coeff * steering_vector(n, path.aod)
    return np.sqrt(n) * h


def received_symbol(
    h: np.ndarray,
    f: np.ndarray,
    link: LinkParams,
    rng: np.random.Generator | None = None,
) -> complex:
    """y = sqrt(P) * h^H f * s + n with n ~ CN(0, noise_var).

    With noise_var == 0 no random draw is made (rng may be None), which
    gives the exact noiseless value for oracle checks.
    """
    h = np.asarray(h)
    f = np.asarray(f)
    if h.shape != f.shape:
        raise ValueError(f"length mismatch: h has {h.shape}, f has {f.shape}")
    y = np.sqrt(link.power) * np.vdot(h, f) * link.pilot
    if link.noise_var > 0:
        if rng is None:
            raise ValueError("rng required when noise_var > 0")
        y = y + crandn(rng, var=link.noise_var)
    return complex(y)


def beam_gain(aod: float, f: np.ndarray) -> complex:
    """Beam gain sqrt(N) * u(N, aod)^H f of a beamformer toward an AoD."""
    f = np.asarray(f)
    n = f.shape[0]
    return complex(np.sqrt(n) * np.vdot(steering_vector(n, aod), f))
