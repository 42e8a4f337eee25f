"""Zero-forcing over-the-air aggregation with threshold-based user selection.

Each round the server wants the mean of the selected users' update vectors.
Users transmit simultaneously; user k inverts its own effective channel so
the superimposed signal is the plain sum, scaled by a shared denoising
factor.  With per-entry transmit budget p_max and receiver noise power
sigma2:

* selection: user k participates iff its best-port gain reaches
  sigma2 / (tau * p_max), which caps the realized aggregation error at tau;
* denoising factor: eta = d * p_max * min selected gain, so the weakest
  participant transmits exactly at its power budget;
* per-user amplitude: |p_k| = sqrt(eta / gain_k), giving power
  (1/d)|p_k|^2 <= p_max with equality at the weakest user;
* realized error of the normalized sum estimate:
  mse = (sigma2/p_max) * max_k 1/gain_k = d * sigma2 / eta.

`ota_aggregate` returns the mean estimate (1/S) * (sum_k u_k + z/sqrt(eta))
with real Gaussian noise z ~ N(0, sigma2 I); its per-entry error variance is
sigma2 / (eta * S^2).
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .channel import EffectiveGains, RngLike, as_generator

__all__ = [
    "NoParticipantsError",
    "OtaConfig",
    "SelectionOutcome",
    "dbm_to_linear",
    "gain_threshold",
    "select_users",
    "zf_power_control",
    "select_and_scale",
    "mse_realization",
    "ota_aggregate",
]


class NoParticipantsError(Exception):
    """No user passed the participation threshold this round."""


def dbm_to_linear(dbm: float) -> float:
    """dBm -> watts: 10^((dbm - 30)/10)."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class OtaConfig:
    """Link parameters: per-entry power budget, noise power, error target.

    ``d`` is the length of the transmitted vectors (model dimension).
    """

    p_max: float
    sigma2: float
    tau: float
    d: int

    def __post_init__(self):
        for name in ("p_max", "sigma2", "tau"):
            v = getattr(self, name)
            if not (v > 0) or not np.isfinite(v):
                raise ValueError(f"{name} must be finite and > 0")
        if self.d < 1:
            raise ValueError("d must be >= 1")

    @classmethod
    def from_dbm(
        cls, p_max_dbm: float, sigma2_dbm: float, tau: float, d: int
    ) -> "OtaConfig":
        return cls(
            p_max=dbm_to_linear(p_max_dbm),
            sigma2=dbm_to_linear(sigma2_dbm),
            tau=tau,
            d=d,
        )


@dataclass(frozen=True)
class SelectionOutcome:
    """Participants plus the zero-forcing scaling for one round.

    selected: ascending user indices (0-based)
    eta: shared denoising factor
    scale: per-selected transmit amplitude sqrt(eta / gain_k)
    realized_mse: aggregation error of the round, d * sigma2 / eta
    """

    selected: np.ndarray
    eta: float
    scale: np.ndarray
    realized_mse: float


def gain_threshold(cfg: OtaConfig) -> float:
    """Minimum best-port gain required to participate."""
    return cfg.sigma2 / (cfg.tau * cfg.p_max)


def select_users(effective: EffectiveGains, cfg: OtaConfig) -> np.ndarray:
    """Indices (ascending) of users whose gain reaches the threshold."""
    return np.flatnonzero(effective.gain >= gain_threshold(cfg))


def zf_power_control(
    effective: EffectiveGains, selected: np.ndarray, cfg: OtaConfig
) -> SelectionOutcome:
    """Zero-forcing scaling for a given participant set.

    The denoising factor binds the power constraint at the weakest
    participant: eta = d * p_max * min gain.
    """
    selected = np.asarray(selected, dtype=int)
    if selected.size == 0:
        raise NoParticipantsError("no users passed the participation threshold")
    gains = effective.gain[selected]
    if np.any(gains <= 0) or not np.all(np.isfinite(gains)):
        raise ValueError("selected gains must be finite and > 0")
    g_min = float(gains.min())
    eta = cfg.d * cfg.p_max * g_min
    scale = np.sqrt(eta / gains)
    realized = cfg.sigma2 / (cfg.p_max * g_min)
    return SelectionOutcome(
        selected=selected, eta=eta, scale=scale, realized_mse=realized
    )


def select_and_scale(effective: EffectiveGains, cfg: OtaConfig) -> SelectionOutcome:
    """Threshold selection followed by zero-forcing power control."""
    return zf_power_control(effective, select_users(effective, cfg), cfg)


def mse_realization(
    effective: EffectiveGains,
    selected: np.ndarray,
    cfg: OtaConfig,
    normalized: bool = False,
) -> float:
    """Aggregation error for the round.

    Absolute form (sigma2/p_max) * max_k 1/gain_k, or with
    ``normalized=True`` the noise-independent score (1/p_max) * max 1/gain.
    """
    selected = np.asarray(selected, dtype=int)
    if selected.size == 0:
        raise NoParticipantsError("no users passed the participation threshold")
    gains = effective.gain[selected]
    if np.any(gains <= 0) or not np.all(np.isfinite(gains)):
        raise ValueError("selected gains must be finite and > 0")
    score = 1.0 / (cfg.p_max * float(gains.min()))
    return score if normalized else cfg.sigma2 * score


def ota_aggregate(
    updates: np.ndarray,
    outcome: SelectionOutcome,
    cfg: OtaConfig,
    rng: RngLike,
) -> np.ndarray:
    """Noisy mean of the participants' update vectors.

    ``updates`` is (S, d), row k the vector of selected user k.  Returns
    (1/S) * (sum_k u_k + z / sqrt(eta)) with z ~ N(0, sigma2 I) real.
    """
    u = np.asarray(updates, dtype=float)
    s = outcome.selected.size
    if u.ndim != 2 or u.shape[0] != s:
        raise ValueError("updates must be (n_selected, d)")
    if u.shape[1] != cfg.d:
        raise ValueError(f"update dimension {u.shape[1]} != configured d={cfg.d}")
    gen = as_generator(rng)
    noise = gen.standard_normal(cfg.d) * np.sqrt(cfg.sigma2)
    return (u.sum(axis=0) + noise / np.sqrt(outcome.eta)) / s
