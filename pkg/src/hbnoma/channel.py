"""Array responses and single-path mmWave channel synthesis.

Angle conventions: configurations use physical degrees; the normalized angle
is 2 * (D/lambda) * sin(physical), so with the default half-wavelength spacing
it lives in [-1, 1]. Misalignment offsets are drawn in physical degrees and
added before normalization. Channel gains are configured in dB with
|beta|^2 = 10^(dB/10) and phase 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, OutOfRange

SIN_EPS = 1e-9  # below this |sin(pi*delta/2)| the Fejer ratio is evaluated directly
ANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class UlaConfig:
    """Uniform linear array: element count and spacing in wavelengths."""

    n_elements: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.n_elements < 1:
            raise ConfigError(f"ULA needs at least one element, got {self.n_elements}")
        if not self.spacing_over_wavelength > 0:
            raise ConfigError(f"element spacing must be positive, got {self.spacing_over_wavelength}")


@dataclass(frozen=True)
class UserLink:
    """One user's physical link parameters.

    cluster and user are 1-based indices; phi_norm/theta_norm are the
    normalized departure/arrival angles actually used by the steering vectors.
    """

    cluster: int
    user: int
    beta: complex
    aod_deg: float
    aoa_deg: float
    phi_norm: float
    theta_norm: float


@dataclass(frozen=True)
class Scenario:
    """A fully realized draw: arrays, per-user links, power budget."""

    ula_bs: UlaConfig
    ula_ue: UlaConfig
    clusters: tuple[tuple[UserLink, ...], ...]
    n_rf: int
    total_power: float
    noise_var: float = 1.0

    def __post_init__(self):
        n = len(self.clusters)
        if n == 0:
            raise ConfigError("scenario needs at least one cluster")
        if any(len(c) == 0 for c in self.clusters):
            raise ConfigError("every cluster must contain at least one user")
        if n > self.n_rf:
            raise ConfigError(f"{n} clusters exceed {self.n_rf} RF chains")
        if not self.total_power > 0:
            raise ConfigError(f"total power must be positive, got {self.total_power}")

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @property
    def array_gain(self) -> float:
        """N_BS * N_U, the combined broadside array gain factor."""
        return float(self.ula_bs.n_elements * self.ula_ue.n_elements)

    def links(self):
        for cluster in self.clusters:
            yield from cluster


@dataclass(frozen=True)
class ClusterSpec:
    """Static description of one cluster: beam AoD and per-user gains in dB."""

    aod_deg: float
    gains_db: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    """Experiment-facing scenario description (angles in degrees, gains in dB)."""

    clusters: tuple[ClusterSpec, ...]
    n_bs: int = 32
    n_ue: int = 8
    n_rf: int | None = None
    spacing_over_wavelength: float = 0.5
    misalign_deg: float = 0.0
    snr_db: float = 10.0
    noise_var: float = 1.0

    @property
    def total_power(self) -> float:
        return self.noise_var * 10.0 ** (self.snr_db / 10.0)

    @property
    def n_rf_effective(self) -> int:
        return self.n_rf if self.n_rf is not None else len(self.clusters)


def normalized_angle(angle_deg: float, spacing_over_wavelength: float = 0.5) -> float:
    return 2.0 * spacing_over_wavelength * math.sin(math.radians(angle_deg))


def steering_vector(phi_norm: float, ula: UlaConfig) -> np.ndarray:
    """Unit-norm array response: entry k is exp(-j pi k phi) / sqrt(N)."""
    if abs(phi_norm) > 1.0 + ANGLE_SLACK:
        raise OutOfRange(f"normalized angle {phi_norm} outside [-1, 1]")
    n = ula.n_elements
    phases = -1j * math.pi * phi_norm * np.arange(n)
    return np.exp(phases) / math.sqrt(n)


def beam_collinearity(phi_a: float, phi_b: float, ula: UlaConfig) -> float:
    """|a^H(phi_a) a(phi_b)|^2 as the order-N Fejer kernel of delta = phi_b - phi_a.

    Near delta = 0 the ratio form is ill-conditioned, so the inner product is
    evaluated directly. The result lies in [0, 1].
    """
    for phi in (phi_a, phi_b):
        if abs(phi) > 1.0 + ANGLE_SLACK:
            raise OutOfRange(f"normalized angle {phi} outside [-1, 1]")
    n = ula.n_elements
    delta = phi_b - phi_a
    half = math.sin(math.pi * delta / 2.0)
    if abs(half) < SIN_EPS:
        inner = steering_vector(phi_a, ula).conj() @ steering_vector(phi_b, ula)
        return min(float(abs(inner) ** 2), 1.0)
    num = math.sin(n * math.pi * delta / 2.0)
    value = (num * num) / (n * n * half * half)
    return min(max(value, 0.0), 1.0)


def collinearity_sum(phi: float, anchor_phis, ula: UlaConfig) -> float:
    """Sum of Fejer-kernel collinearities of phi against a set of beam angles.

    This is the closed form of the squared effective-channel norm divided by
    the array gain and |beta|^2.
    """
    return float(sum(beam_collinearity(anchor, phi, ula) for anchor in anchor_phis))


def single_path_channel(link: UserLink, ula_bs: UlaConfig, ula_ue: UlaConfig) -> np.ndarray:
    """Rank-1 channel sqrt(N_BS N_U) beta a_U(theta) a_BS^H(phi), shape N_U x N_BS."""
    scale = math.sqrt(ula_bs.n_elements * ula_ue.n_elements) * link.beta
    a_ue = steering_vector(link.theta_norm, ula_ue)
    a_bs = steering_vector(link.phi_norm, ula_bs)
    return scale * np.outer(a_ue, a_bs.conj())


def gain_db_to_beta(gain_db: float) -> complex:
    """Linear channel gain with |beta|^2 = 10^(dB/10), phase 0."""
    return complex(10.0 ** (gain_db / 20.0), 0.0)


def pathloss_beta(distance: float, exponent: float, rng: np.random.Generator) -> complex:
    """Gain from the distance/pathloss form, |beta| = d^(-nu/2), uniform phase.

    Helper for custom scenarios; the figure presets configure gains in dB
    directly.
    """
    if not distance > 0:
        raise ConfigError(f"distance must be positive, got {distance}")
    phase = rng.uniform(0.0, 2.0 * math.pi)
    return distance ** (-exponent / 2.0) * complex(math.cos(phase), math.sin(phase))


def _user_stream(seed: int, trial: int, cluster: int, user: int) -> np.random.Generator:
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF, trial, cluster, user)
    return np.random.default_rng(np.random.SeedSequence(key))


def validate_config(cfg: ScenarioConfig) -> None:
    n = len(cfg.clusters)
    if n == 0:
        raise ConfigError("configuration has no clusters")
    if n > cfg.n_rf_effective:
        raise ConfigError(f"{n} clusters exceed {cfg.n_rf_effective} RF chains")
    if cfg.n_bs < 1 or cfg.n_ue < 1:
        raise ConfigError("antenna counts must be at least 1")
    if cfg.misalign_deg < 0:
        raise ConfigError(f"misalignment spread must be >= 0, got {cfg.misalign_deg}")
    if not cfg.noise_var > 0:
        raise ConfigError(f"noise variance must be positive, got {cfg.noise_var}")
    for idx, cluster in enumerate(cfg.clusters, start=1):
        if len(cluster.gains_db) == 0:
            raise ConfigError(f"cluster {idx} has no users")
        if abs(cluster.aod_deg) >= 90.0:
            raise ConfigError(f"cluster {idx} AoD {cluster.aod_deg} deg outside (-90, 90)")
        if not all(math.isfinite(g) for g in cluster.gains_db):
            raise ConfigError(f"cluster {idx} has non-finite gains")


def first_user_index(gains_db) -> int:
    """Index of the strongest user (largest gain, ties to the lowest index)."""
    best = 0
    for idx, gain in enumerate(gains_db):
        if gain > gains_db[best]:
            best = idx
    return best


def synthesize_scenario(cfg: ScenarioConfig, seed: int, trial: int = 0) -> Scenario:
    """Draw one scenario realization.

    The strongest user of each cluster keeps the configured cluster AoD
    exactly; every other user's AoD is the cluster AoD plus an offset drawn
    uniformly from [-b, b] degrees. AoAs are uniform in [-90, 90] degrees
    (they never affect rates). Draws come from a stream keyed by
    (seed, trial, cluster, user), so the result is bit-reproducible for a
    fixed configuration regardless of execution order.
    """
    validate_config(cfg)
    ula_bs = UlaConfig(cfg.n_bs, cfg.spacing_over_wavelength)
    ula_ue = UlaConfig(cfg.n_ue, cfg.spacing_over_wavelength)
    b = cfg.misalign_deg
    clusters = []
    for ci, cluster in enumerate(cfg.clusters):
        anchor = first_user_index(cluster.gains_db)
        users = []
        for ui, gain_db in enumerate(cluster.gains_db):
            rng = _user_stream(seed, trial, ci, ui)
            aoa = rng.uniform(-90.0, 90.0)
            if ui == anchor or b == 0.0:
                aod = cluster.aod_deg
            else:
                aod = cluster.aod_deg + rng.uniform(-b, b)
            users.append(
                UserLink(
                    cluster=ci + 1,
                    user=ui + 1,
                    beta=gain_db_to_beta(gain_db),
                    aod_deg=aod,
                    aoa_deg=aoa,
                    phi_norm=normalized_angle(aod, cfg.spacing_over_wavelength),
                    theta_norm=normalized_angle(aoa, cfg.spacing_over_wavelength),
                )
            )
        clusters.append(tuple(users))
    return Scenario(
        ula_bs=ula_bs,
        ula_ue=ula_ue,
        clusters=tuple(clusters),
        n_rf=cfg.n_rf_effective,
        total_power=cfg.total_power,
        noise_var=cfg.noise_var,
    )
