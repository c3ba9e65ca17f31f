"""Urban pathloss, shadowing, rate tables and packet error model.

The aerial link budget is an ITU-style street model: a line-of-sight branch
built around the breakpoint distance, and a non-line-of-sight branch that adds
a log-distance diffraction term on top of free space. Defaults are calibrated
so the WiFi link dies a little past 40 m while LTE stays attached well beyond.
"""

from __future__ import annotations

import hashlib
import math
from bisect import bisect_right
from dataclasses import dataclass, replace

C_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class PathlossBreakdown:
    """Additive decomposition of a link budget in dB."""

    base_db: float         # breakpoint term (LoS) or free-space term (NLoS)
    excess_db: float       # distance term past the breakpoint, or diffraction
    wall_db: float = 0.0
    height_gain_db: float = 0.0
    shadow_db: float = 0.0

    @property
    def total_db(self) -> float:
        return self.base_db + self.excess_db + self.wall_db + self.height_gain_db + self.shadow_db


def breakpoint_distance_m(wavelength_m: float, h_bs_m: float, h_uav_m: float) -> float:
    if wavelength_m <= 0 or h_bs_m <= 0 or h_uav_m <= 0:
        raise ValueError("wavelength and antenna heights must be positive")
    return 4.0 * h_bs_m * h_uav_m / wavelength_m


def pathloss_los(d_m: float, wavelength_m: float, h_bs_m: float, h_uav_m: float,
                 c_offset_db: float = 0.0) -> PathlossBreakdown:
    """Line-of-sight lower-bound loss: breakpoint base plus a 20/40 dB-per-decade knee."""
    if d_m <= 0:
        raise ValueError("distance must be positive")
    r_bp = breakpoint_distance_m(wavelength_m, h_bs_m, h_uav_m)
    base = abs(20.0 * math.log10(wavelength_m ** 2 / (8.0 * math.pi * h_bs_m * h_uav_m)))
    ratio = d_m / r_bp
    slope = 20.0 if d_m <= r_bp else 40.0
    return PathlossBreakdown(base_db=base, excess_db=c_offset_db + slope * math.log10(ratio))


def free_space_db(d_m: float, freq_hz: float) -> float:
    if d_m <= 0 or freq_hz <= 0:
        raise ValueError("distance and frequency must be positive")
    return 20.0 * math.log10(d_m) + 20.0 * math.log10(freq_hz) - 147.55


def pathloss_nlos(d_m: float, freq_hz: float, diffraction_coeff_db: float = 0.0,
                  diffraction_floor_db: float = 0.0) -> PathlossBreakdown:
    """Non-line-of-sight loss: free space plus a calibrated log-distance diffraction term."""
    if diffraction_coeff_db < 0:
        raise ValueError("diffraction coefficient must be non-negative")
    diff = diffraction_floor_db + diffraction_coeff_db * math.log10(max(d_m, 1.0))
    return PathlossBreakdown(base_db=free_space_db(d_m, freq_hz), excess_db=diff)


# -- rate adaptation tables ---------------------------------------------

@dataclass(frozen=True)
class RateTable:
    """Sensitivity thresholds plus per-step rate descriptors for one radio."""

    name: str
    thresholds_db: tuple[float, ...]
    rates_bps: tuple[float, ...] = ()
    bits_per_symbol: tuple[int, ...] = ()
    efficiencies: tuple[float, ...] = ()

    def __post_init__(self):
        if list(self.thresholds_db) != sorted(self.thresholds_db):
            raise ValueError(f"{self.name}: thresholds must be non-decreasing")


# 802.11a at 20 MHz: OFDM steps with their receiver SNR requirements.
WIFI_80211A = RateTable(
    name="802.11a",
    thresholds_db=(12.0, 13.0, 15.0, 17.0, 20.0, 24.0, 28.0, 29.0),
    rates_bps=(6e6, 9e6, 12e6, 18e6, 24e6, 36e6, 48e6, 54e6),
    bits_per_symbol=(24, 36, 48, 72, 96, 144, 192, 216),
)

# LTE CQI 1..15 spectral efficiencies with commonly used SINR switch points.
LTE_CQI = RateTable(
    name="lte-cqi",
    thresholds_db=(-6.7, -4.7, -2.3, 0.2, 2.4, 4.3, 5.9, 8.1,
                   10.3, 11.7, 14.1, 16.3, 18.7, 21.0, 22.7),
    efficiencies=(0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
                  2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547),
)


@dataclass(frozen=True)
class LinkState:
    sinr_db: float
    connected: bool
    mcs: int              # index into the table, -1 when disconnected
    table: RateTable

    @property
    def threshold_db(self) -> float:
        return self.table.thresholds_db[self.mcs]


def link_state(sinr_db: float, table: RateTable) -> LinkState:
    """Pick the highest step whose threshold does not exceed the SINR (inclusive bound)."""
    idx = bisect_right(table.thresholds_db, sinr_db) - 1
    if idx < 0:
        return LinkState(sinr_db=sinr_db, connected=False, mcs=-1, table=table)
    return LinkState(sinr_db=sinr_db, connected=True, mcs=idx, table=table)


def with_mcs(ls: LinkState, mcs: int) -> LinkState:
    """Same channel, different (possibly stale) rate step; used for delayed CQI reports."""
    return replace(ls, mcs=mcs)


def packet_error_prob(ls: LinkState, payload_bytes: int, softness_db: float = 1.0) -> float:
    """Error probability for one over-the-air unit: a linear ramp around the step threshold.

    payload_bytes is kept in the signature for callers that model size-dependent
    error floors; the ramp itself is size independent.
    """
    if payload_bytes <= 0:
        raise ValueError("payload must be positive")
    if not ls.connected:
        return 1.0
    thr = ls.threshold_db
    if ls.sinr_db <= thr - softness_db:
        return 1.0
    if ls.sinr_db >= thr + softness_db:
        return 0.0
    return (thr + softness_db - ls.sinr_db) / (2.0 * softness_db)


# -- channel model with per-cell shadowing ------------------------------

@dataclass(frozen=True)
class ChannelParams:
    regime: str = "nlos"                 # "los" or "nlos"
    c_offset_db: float = 0.0
    diffraction_coeff_db: float = 25.5
    diffraction_floor_db: float = -11.0
    l_ew_db: float = 0.0
    g_h_db_per_m: float = -0.1
    g_h_cap_db: float = -6.0
    shadow_sigma_db: float = 1.5
    softness_db: float = 1.0

    def __post_init__(self):
        if self.regime not in ("los", "nlos"):
            raise ValueError(f"unknown pathloss regime {self.regime!r}")
        if self.diffraction_coeff_db < 0:
            raise ValueError("diffraction coefficient must be non-negative")
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow sigma must be non-negative")


def _cell_normal(seed: int, key: str) -> float:
    """Unit normal tied to (seed, key), stable across runs and platforms."""
    digest = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    u1 = (int.from_bytes(digest[:8], "little") + 1) / (2 ** 64 + 2)
    u2 = int.from_bytes(digest[8:16], "little") / 2 ** 64
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


class ChannelModel:
    """Binds the loss model to run geometry and deterministic shadowing cells.

    Shadowing is log-normal, frozen per (link id, 1 m position cell of the
    subject node), so a hovering UAV sees a constant offset and a moving one
    sees a spatially correlated field.
    """

    def __init__(self, params: ChannelParams, seed: int):
        self.params = params
        self._seed = seed
        self._shadow: dict[tuple, float] = {}

    def shadow_db(self, link_id: str, pos: tuple[float, float, float]) -> float:
        if self.params.shadow_sigma_db == 0.0:
            return 0.0
        cell = (link_id, math.floor(pos[0]), math.floor(pos[1]), math.floor(pos[2]))
        val = self._shadow.get(cell)
        if val is None:
            val = self.params.shadow_sigma_db * _cell_normal(self._seed, f"shadow:{cell}")
            self._shadow[cell] = val
        return val

    def budget(self, link_id: str, node_pos: tuple[float, float, float],
               bs_pos: tuple[float, float, float], freq_hz: float) -> PathlossBreakdown:
        p = self.params
        d = max(math.dist(node_pos, bs_pos), 0.1)
        if p.regime == "los":
            part = pathloss_los(d, C_LIGHT / freq_hz, max(bs_pos[2], 0.1),
                                max(node_pos[2], 0.1), p.c_offset_db)
        else:
            part = pathloss_nlos(d, freq_hz, p.diffraction_coeff_db, p.diffraction_floor_db)
        dh = max(0.0, node_pos[2] - bs_pos[2])
        gain = max(p.g_h_cap_db, p.g_h_db_per_m * dh) if dh > 0 else 0.0
        return PathlossBreakdown(
            base_db=part.base_db,
            excess_db=part.excess_db,
            wall_db=p.l_ew_db,
            height_gain_db=gain,
            shadow_db=self.shadow_db(link_id, node_pos),
        )

    def sinr_db(self, link_id: str, node_pos, bs_pos, freq_hz: float,
                tx_power_dbm: float, noise_floor_dbm: float) -> float:
        loss = self.budget(link_id, node_pos, bs_pos, freq_hz).total_db
        return tx_power_dbm - loss - noise_floor_dbm
