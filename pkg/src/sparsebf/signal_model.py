"""Narrowband far-field model for a half-wavelength uniform linear array."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import HermitianMatrix, ValidationError


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


def linear_to_db(x: float) -> float:
    return float(10.0 * np.log10(x))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator keyed by ``(seed, *stream)``.

    Streams derived from distinct keys are statistically independent, so a
    Monte Carlo trial seeded with ``(master_seed, trial)`` draws the same
    numbers whether trials run serially or in parallel.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, stream)])))


def complex_normal(rng: np.random.Generator, shape, power: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with ``E|z|^2 = power``."""
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class Scenario:
    """One signal of interest plus K uncorrelated interferers in white noise.

    Powers are linear. DOAs are degrees from broadside.
    """

    m: int
    soi_doa: float
    soi_power: float = 1.0
    interferers: tuple[tuple[float, float], ...] = field(default_factory=tuple)
    noise_power: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "interferers", tuple((float(d), float(p)) for d, p in self.interferers))
        if int(self.m) != self.m or self.m < 1:
            raise ValidationError(f"sensor count must be a positive integer, got {self.m}")
        if self.soi_power <= 0 or self.noise_power <= 0:
            raise ValidationError("powers must be positive")
        for doa in (self.soi_doa, *(d for d, _ in self.interferers)):
            if not -90.0 < doa < 90.0:
                raise ValidationError(f"DOA {doa} outside (-90, 90) degrees")
        if any(p <= 0 for _, p in self.interferers):
            raise ValidationError("interferer powers must be positive")

    @classmethod
    def from_db(cls, m, soi_doa, snr_db, interferer_doas=(), inr_db=0.0, noise_power=1.0):
        """Build a scenario from SNR/INR in dB relative to `noise_power`.

        `inr_db` is either a scalar shared by all interferers or one value
        per interferer.
        """
        doas = list(interferer_doas)
        inrs = np.broadcast_to(np.asarray(inr_db, dtype=float), (len(doas),))
        return cls(
            m=int(m),
            soi_doa=float(soi_doa),
            soi_power=noise_power * db_to_linear(snr_db),
            interferers=tuple((d, noise_power * db_to_linear(i)) for d, i in zip(doas, inrs)),
            noise_power=noise_power,
        )

    @property
    def k(self) -> int:
        return len(self.interferers)

    def with_m(self, m: int) -> "Scenario":
        return Scenario(m, self.soi_doa, self.soi_power, self.interferers, self.noise_power)

    def steering(self) -> np.ndarray:
        return steering_vector(self.soi_doa, self.m)


def steering_vector(theta: float, m: int) -> np.ndarray:
    """ULA response ``exp(-j*pi*n*sin(theta))`` for ``n = 0..m-1`` (theta in degrees)."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    n = np.arange(m)
    return np.exp(-1j * np.pi * n * np.sin(np.deg2rad(theta)))


def steering_matrix(thetas, m: int) -> np.ndarray:
    """Columns are steering vectors for each angle in `thetas`."""
    n = np.arange(m)[:, None]
    return np.exp(-1j * np.pi * n * np.sin(np.deg2rad(np.asarray(thetas, dtype=float)))[None, :])


def interference_noise_covariance(s: Scenario) -> HermitianMatrix:
    r = s.noise_power * np.eye(s.m, dtype=np.complex128)
    for doa, power in s.interferers:
        a = steering_vector(doa, s.m)
        r += power * np.outer(a, a.conj())
    return HermitianMatrix(r)


def data_covariance_true(s: Scenario) -> HermitianMatrix:
    a0 = s.steering()
    return HermitianMatrix(interference_noise_covariance(s).data + s.soi_power * np.outer(a0, a0.conj()))


@dataclass(frozen=True)
class SnapshotMatrix:
    """``M x T`` array of observations together with the seed that produced it."""

    columns: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        x = np.asarray(self.columns, dtype=np.complex128)
        if x.ndim != 2 or x.shape[1] < 1:
            raise ValidationError("snapshot matrix must be M x T with T >= 1")
        x.setflags(write=False)
        object.__setattr__(self, "columns", x)

    @property
    def t(self) -> int:
        return self.columns.shape[1]


def generate_snapshots(s: Scenario, t: int, seed: int, *stream: int) -> SnapshotMatrix:
    """Draw `t` snapshots with Gaussian SOI, interferer and noise waveforms.

    Extra `stream` integers select an independent substream of `seed`.
    """
    if t < 1:
        raise ValidationError("need at least one snapshot")
    rng = make_rng(seed, *stream)
    doas = [s.soi_doa] + [d for d, _ in s.interferers]
    powers = np.array([s.soi_power] + [p for _, p in s.interferers])
    waveforms = complex_normal(rng, (len(doas), t)) * np.sqrt(powers)[:, None]
    noise = complex_normal(rng, (s.m, t), s.noise_power)
    x = steering_matrix(doas, s.m) @ waveforms + noise
    return SnapshotMatrix(x, seed)


def sample_covariance(x) -> HermitianMatrix:
    """``(1/T) sum_t x(t) x(t)^H``."""
    cols = x.columns if isinstance(x, SnapshotMatrix) else np.asarray(x, dtype=np.complex128)
    if cols.ndim == 1:
        cols = cols[:, None]
    r = cols @ cols.conj().T / cols.shape[1]
    return HermitianMatrix(0.5 * (r + r.conj().T))
