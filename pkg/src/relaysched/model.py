"""Network description and fading-channel generation.

The system is a two-hop decode-and-forward uplink: M users reach a base
station only through N half-duplex relays.  A user spends ``alpha * P0`` on
the first hop, the selected relay spends the remaining power on the second
hop, and a hop decodes iff its received SNR clears the threshold.  Channel
power gains are exponentially distributed (Rayleigh fading) with per-link
means, either drawn independently per slot or evolved as a Gauss-Markov
process for time-correlated studies.
"""

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence
from scipy.signal import lfilter
from scipy.special import j0 as _scipy_j0

# Defaults shared by the config layer and the canned experiment setups.
DEFAULT_NOISE_POWER = 1.0
DEFAULT_SNR_THRESHOLD = 3.0
DEFAULT_ALPHA = 0.5
DEFAULT_SLOT_DURATION = 0.002  # seconds
DEFAULT_DOPPLER_HZ = 15.0

# Beyond this argument a float64 power series loses accuracy to cancellation.
_J0_SERIES_LIMIT = 12.0


def bessel_j0(x):
    """Bessel function of the first kind, order zero.

    Evaluated with the alternating power series sum_k (-1)^k (x^2/4)^k / (k!)^2
    for |x| <= 12 (absolute error well below 1e-9 there); larger arguments
    defer to scipy's implementation, where the series would lose float64
    precision to cancellation.
    """
    x = float(x)
    if abs(x) > _J0_SERIES_LIMIT:
        return float(_scipy_j0(x))
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    for k in range(1, 80):
        term *= -q / (k * k)
        total += term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total


def doppler_to_rho(doppler_hz, slot_duration):
    """Slot-to-slot fading correlation for the Jakes/Clarke spectrum.

    rho = J0(2 * pi * f_d * delta) for Doppler f_d and slot duration delta.
    The value lies in (-1, 1]; combinations past the first Bessel zero
    (argument ~2.4048) yield non-positive correlation, which the Gauss-Markov
    process rejects.
    """
    if doppler_hz < 0:
        raise ValueError(f"doppler_hz must be >= 0, got {doppler_hz}")
    if slot_duration <= 0:
        raise ValueError(f"slot_duration must be > 0, got {slot_duration}")
    return bessel_j0(2.0 * np.pi * doppler_hz * slot_duration)


def _as_mean_matrix(value, shape, name):
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(shape, float(arr))
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError(f"{name} entries must be finite and > 0")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NetworkConfig:
    """Fixed parameters of one network instance.

    mean_gain_ur is the M x N matrix of mean user->relay channel power gains,
    mean_gain_rb the length-N vector of mean relay->base-station gains.
    Scalars broadcast to the full shape.  total_power is the per-slot budget
    P0 split as p_user = alpha * P0 on the first hop and p_relay = P0 - p_user
    on the second (the subtraction keeps p_user + p_relay == total_power exact
    in floating point).
    """

    num_users: int
    num_relays: int
    mean_gain_ur: np.ndarray
    mean_gain_rb: np.ndarray
    total_power: float = 1.0
    alpha: float = DEFAULT_ALPHA
    noise_power: float = DEFAULT_NOISE_POWER
    snr_threshold: float = DEFAULT_SNR_THRESHOLD
    slot_duration: float = DEFAULT_SLOT_DURATION

    def __post_init__(self):
        if self.num_users < 1:
            raise ValueError(f"num_users must be >= 1, got {self.num_users}")
        if self.num_relays < 1:
            raise ValueError(f"num_relays must be >= 1, got {self.num_relays}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in the open interval (0, 1), got {self.alpha}")
        for name in ("total_power", "noise_power", "snr_threshold", "slot_duration"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {v}")
        object.__setattr__(
            self,
            "mean_gain_ur",
            _as_mean_matrix(self.mean_gain_ur, (self.num_users, self.num_relays), "mean_gain_ur"),
        )
        object.__setattr__(
            self,
            "mean_gain_rb",
            _as_mean_matrix(self.mean_gain_rb, (self.num_relays,), "mean_gain_rb"),
        )

    @classmethod
    def symmetric(cls, num_users, num_relays, mean_gain=1.0, **kwargs):
        """All-links-equal network, handy for closed-form cross-checks."""
        return cls(num_users, num_relays, mean_gain, mean_gain, **kwargs)

    @property
    def p_user(self):
        return self.alpha * self.total_power

    @property
    def p_relay(self):
        return self.total_power - self.p_user

    @property
    def eta(self):
        """Transmit SNR P0 / N0 (linear)."""
        return self.total_power / self.noise_power

    @property
    def decode_threshold(self):
        """Received-power threshold tau * N0 a hop must meet to decode."""
        return self.snr_threshold * self.noise_power


@dataclass(frozen=True)
class ChannelRealization:
    """One slot's channel power gains: gain_ur is (M, N), gain_rb is (N,)."""

    gain_ur: np.ndarray
    gain_rb: np.ndarray


class FadingProcess:
    """Seeded generator of per-slot channel gains for one network.

    Every link owns an independent PCG64 stream spawned from the root seed
    by link identity, so enlarging the network does not perturb the draws of
    existing links.  Two modes:

    - "iid": gains drawn independently every slot, Exp(mean).
    - "gauss_markov": complex coefficients follow the first-order recursion
      a[t+1] = rho * a[t] + sqrt(1 - rho^2) * w[t] with CN(0, mean)
      innovations, so |a|^2 stays Exp(mean) marginally while consecutive
      slots correlate with coefficient rho (rho_rb for relay->base links).

    Draw sequences are deterministic given the seed and are invariant to how
    they are chunked into blocks.
    """

    def __init__(self, config, seed, mode="iid", rho=None, rho_rb=None):
        if mode not in ("iid", "gauss_markov"):
            raise ValueError(f"mode must be 'iid' or 'gauss_markov', got {mode!r}")
        self.config = config
        self.mode = mode
        root = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
        self._root = root
        if mode == "gauss_markov":
            if rho is None:
                rho = doppler_to_rho(DEFAULT_DOPPLER_HZ, config.slot_duration)
            if rho_rb is None:
                rho_rb = rho
            for name, r in (("rho", rho), ("rho_rb", rho_rb)):
                if not 0.0 <= r < 1.0:
                    raise ValueError(
                        f"{name} must lie in [0, 1); got {r} "
                        "(Doppler/slot-duration combinations past the first "
                        "Bessel zero are not representable)"
                    )
        self.rho = rho
        self.rho_rb = rho_rb

        M, N = config.num_users, config.num_relays
        base_key = tuple(root.spawn_key)
        entropy = root.entropy

        def link_gen(kind, i, r):
            ss = SeedSequence(entropy=entropy, spawn_key=base_key + (kind, i, r))
            return Generator(PCG64(ss))

        self._gen_ur = [[link_gen(0, u, r) for r in range(N)] for u in range(M)]
        self._gen_rb = [link_gen(1, 0, r) for r in range(N)]

        if mode == "gauss_markov":
            self._state_ur = np.empty((M, N), dtype=np.complex128)
            for u in range(M):
                for r in range(N):
                    self._state_ur[u, r] = self._init_coeff(
                        self._gen_ur[u][r], config.mean_gain_ur[u, r]
                    )
            self._state_rb = np.empty(N, dtype=np.complex128)
            for r in range(N):
                self._state_rb[r] = self._init_coeff(self._gen_rb[r], config.mean_gain_rb[r])

    @staticmethod
    def _init_coeff(gen, mean):
        z = gen.standard_normal(2)
        return np.sqrt(mean / 2.0) * complex(z[0], z[1])

    @staticmethod
    def _evolve(gen, mean, rho, state, n):
        """Advance one link n steps; returns (coefficients, new state)."""
        z = gen.standard_normal((n, 2))
        w = np.sqrt(mean / 2.0) * (z[:, 0] + 1j * z[:, 1])
        coeff, zf = lfilter(
            [np.sqrt(1.0 - rho * rho)], [1.0, -rho], w, zi=np.array([rho * state])
        )
        return coeff, coeff[-1]

    def _draw_coeff_block(self, n):
        if self.mode != "gauss_markov":
            raise ValueError("complex coefficients exist only in gauss_markov mode")
        cfg = self.config
        M, N = cfg.num_users, cfg.num_relays
        c_ur = np.empty((n, M, N), dtype=np.complex128)
        c_rb = np.empty((n, N), dtype=np.complex128)
        for u in range(M):
            for r in range(N):
                coeff, self._state_ur[u, r] = self._evolve(
                    self._gen_ur[u][r], cfg.mean_gain_ur[u, r], self.rho, self._state_ur[u, r], n
                )
                c_ur[:, u, r] = coeff
        for r in range(N):
            coeff, self._state_rb[r] = self._evolve(
                self._gen_rb[r], cfg.mean_gain_rb[r], self.rho_rb, self._state_rb[r], n
            )
            c_rb[:, r] = coeff
        return c_ur, c_rb

    def draw_block(self, n):
        """Draw n consecutive slots of gains: arrays (n, M, N) and (n, N)."""
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        cfg = self.config
        M, N = cfg.num_users, cfg.num_relays
        if self.mode == "iid":
            gain_ur = np.empty((n, M, N))
            gain_rb = np.empty((n, N))
            for u in range(M):
                for r in range(N):
                    gain_ur[:, u, r] = cfg.mean_gain_ur[u, r] * self._gen_ur[u][
                        r
                    ].standard_exponential(n)
            for r in range(N):
                gain_rb[:, r] = cfg.mean_gain_rb[r] * self._gen_rb[r].standard_exponential(n)
            return gain_ur, gain_rb
        c_ur, c_rb = self._draw_coeff_block(n)
        return (
            c_ur.real**2 + c_ur.imag**2,
            c_rb.real**2 + c_rb.imag**2,
        )

    def draw_realization(self):
        """Draw the next slot's gains, advancing the process state."""
        gain_ur, gain_rb = self.draw_block(1)
        return ChannelRealization(gain_ur=gain_ur[0], gain_rb=gain_rb[0])
