"""Ground-truth simulator: synthetic datasets with a known generative model
and an exact per-term contribution ledger, used as the verification oracle
for recovery and calibration tests."""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field

import numpy as np

from . import transforms
from .dataset import DAILY, WEEKLY, MmmDataset, VariableRoles
from .evaluation import SCOPE_TOTAL, LiftStudy

DEFAULT_BURN_IN = 13
MIN_PERIODS = {WEEKLY: 104, DAILY: 180}
_START_DATE = dt.date(2019, 1, 7)  # a Monday


class SimulationError(ValueError):
    pass


@dataclass
class ChannelTruth:
    theta: float
    alpha: float
    gamma: float
    coef: float
    spend_scale: float
    inflection: float = 0.0

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "coef": self.coef,
            "spend_scale": self.spend_scale,
            "inflection": self.inflection,
        }


@dataclass
class SimulationTruth:
    seed: int
    frequency: str
    n_periods: int
    burn_in: int
    intercept: float
    trend_total: float
    season_amplitude: float
    noise_fraction: float
    channels: dict[str, ChannelTruth]
    noise_sd: float = 0.0
    roas: dict[str, float] = field(default_factory=dict)
    spend_shares: dict[str, float] = field(default_factory=dict)
    # Exact per-period per-channel contributions (the oracle ledger).
    ledger: dict[str, np.ndarray] = field(default_factory=dict)
    dates: list[dt.date] = field(default_factory=list)
    window_start: dt.date | None = None
    window_end: dt.date | None = None

    def lift(self, channels, start: dt.date, end: dt.date) -> float:
        """True incremental outcome of the named channels over [start, end]."""
        mask = np.array([start <= d <= end for d in self.dates], dtype=bool)
        total = 0.0
        for c in channels:
            if c not in self.ledger:
                raise SimulationError(f"unknown channel {c!r}")
            total += float(self.ledger[c][mask].sum())
        return total

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "frequency": self.frequency,
            "n_periods": self.n_periods,
            "burn_in": self.burn_in,
            "intercept": self.intercept,
            "trend_total": self.trend_total,
            "season_amplitude": self.season_amplitude,
            "noise_fraction": self.noise_fraction,
            "noise_sd": self.noise_sd,
            "channels": {c: t.to_dict() for c, t in self.channels.items()},
            "roas": self.roas,
            "spend_shares": self.spend_shares,
            "window": [self.window_start.isoformat(), self.window_end.isoformat()],
            "ledger": {c: [float(v) for v in arr] for c, arr in self.ledger.items()},
            "dates": [d.isoformat() for d in self.dates],
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def default_truth(
    seed: int,
    n_channels: int,
    frequency: str,
    noise_fraction: float = 0.05,
) -> SimulationTruth:
    """Distinct per-channel parameters inside the default search bounds."""
    rng = np.random.default_rng((seed, 7919))
    channels = {}
    for i in range(n_channels):
        channels[f"ch{i + 1}_S"] = ChannelTruth(
            theta=0.1 + 0.5 * i / max(n_channels - 1, 1) + rng.uniform(0, 0.05),
            alpha=0.8 + rng.uniform(0.0, 0.8),
            gamma=rng.uniform(0.4, 0.75),
            coef=3.0e5 * (1.0 + 0.5 * i) * rng.uniform(0.9, 1.1),
            spend_scale=1.0e4 * rng.uniform(0.8, 1.2),
        )
    return SimulationTruth(
        seed=seed,
        frequency=frequency,
        n_periods=0,
        burn_in=DEFAULT_BURN_IN,
        intercept=1.0e6,
        trend_total=1.0e5,
        season_amplitude=5.0e4,
        noise_fraction=noise_fraction,
        channels=channels,
    )


def simulate(
    n_periods: int = 208,
    frequency: str = WEEKLY,
    n_channels: int = 3,
    seed: int = 0,
    truth: SimulationTruth | None = None,
    noise_fraction: float | None = None,
) -> tuple[MmmDataset, SimulationTruth]:
    """Generate a dataset plus its ground truth.

    Spends are lognormal with seasonal modulation and sparse pulses;
    response = intercept + linear trend + yearly season
    + sum_c coef_c * Hill(adstock(spend_c)) + Gaussian noise with sd set to
    ``noise_fraction`` of the noiseless response sd over the window.
    """
    if frequency not in MIN_PERIODS:
        raise SimulationError(f"unknown frequency {frequency!r}")
    if n_periods < MIN_PERIODS[frequency]:
        raise SimulationError(
            f"need at least {MIN_PERIODS[frequency]} {frequency} periods"
        )
    if truth is None:
        truth = default_truth(seed, n_channels, frequency)
    if noise_fraction is not None:
        truth.noise_fraction = noise_fraction
    for name, ct in truth.channels.items():
        if not 0.0 <= ct.theta < 1.0:
            raise SimulationError(f"{name}: theta out of bounds")
        if not 0.5 <= ct.alpha <= 3.0 or not 0.3 <= ct.gamma <= 1.0:
            raise SimulationError(f"{name}: saturation parameters out of bounds")

    step = dt.timedelta(days=1 if frequency == DAILY else 7)
    dates = [_START_DATE + i * step for i in range(n_periods)]
    day_index = np.array([(d - dates[0]).days for d in dates], dtype=float)
    rng = np.random.default_rng((truth.seed, n_periods))

    window_lo = truth.burn_in
    window = np.zeros(n_periods, dtype=bool)
    window[window_lo:] = True

    columns: dict[str, np.ndarray] = {}
    ledger: dict[str, np.ndarray] = {}
    for i, (name, ct) in enumerate(truth.channels.items()):
        # A wide continuous spend distribution traces each response curve
        # over its whole range, which is what makes the curve identifiable.
        base = rng.lognormal(mean=0.0, sigma=0.9, size=n_periods)
        # Evenly spaced phases keep the channels' seasonal components
        # mutually decorrelated and off the response's own season term.
        phase = 2.0 * np.pi * (i + 0.5) / max(len(truth.channels), 1)
        seasonal = 1.0 + 0.2 * np.sin(2.0 * np.pi * day_index / 365.25 + phase)
        spend = ct.spend_scale * base * seasonal
        columns[name] = spend
        adstocked = transforms.adstock_geometric(spend, ct.theta)
        win_vals = adstocked[window]
        ct.inflection = float(
            win_vals.min() + ct.gamma * (win_vals.max() - win_vals.min())
        )
        ledger[name] = ct.coef * transforms.hill(adstocked, ct.alpha, ct.inflection)

    trend = truth.intercept + truth.trend_total * day_index / day_index.max()
    season = truth.season_amplitude * np.sin(2.0 * np.pi * day_index / 365.25)
    noiseless = trend + season + sum(ledger.values())
    truth.noise_sd = truth.noise_fraction * float(noiseless[window].std())
    noise = rng.normal(0.0, truth.noise_sd, size=n_periods) if truth.noise_sd > 0 else 0.0
    columns["revenue"] = noiseless + noise

    truth.n_periods = n_periods
    truth.ledger = ledger
    truth.dates = dates
    truth.window_start = dates[window_lo]
    truth.window_end = dates[-1]
    for name in truth.channels:
        spend_sum = float(columns[name][window].sum())
        truth.roas[name] = float(ledger[name][window].sum()) / spend_sum
    spend_total = sum(float(columns[c][window].sum()) for c in truth.channels)
    truth.spend_shares = {
        c: float(columns[c][window].sum()) / spend_total for c in truth.channels
    }

    roles = VariableRoles(
        dep_var="revenue",
        paid_media_spends=tuple(truth.channels),
        prophet_vars=("trend", "season"),
    )
    ds = MmmDataset(
        dates=dates,
        columns=columns,
        factor_values={},
        factor_levels={},
        frequency=frequency,
        date_column="DATE",
        roles=roles,
        window_start=truth.window_start,
        window_end=truth.window_end,
        column_order=["DATE", "revenue", *truth.channels],
    )
    return ds, truth


def cut_lift_studies(
    truth: SimulationTruth, n_studies: int = 3, study_periods: int = 8
) -> list[LiftStudy]:
    """Lift studies whose lift_abs is read exactly from the ledger, spread
    over the second half of the window, one channel each (round-robin)."""
    channels = list(truth.channels)
    in_window = [d for d in truth.dates if truth.window_start <= d <= truth.window_end]
    half = len(in_window) // 2
    usable = in_window[half:]
    if len(usable) < study_periods:
        raise SimulationError("window too short to cut lift studies")
    studies = []
    stride = max((len(usable) - study_periods) // max(n_studies, 1), 1)
    period = dt.timedelta(days=1 if truth.frequency == DAILY else 7)
    for k in range(n_studies):
        channel = channels[k % len(channels)]
        start = usable[min(k * stride, len(usable) - study_periods)]
        end = start + (study_periods - 1) * period
        lift = truth.lift([channel], start, end)
        studies.append(
            LiftStudy(
                channels=(channel,),
                lift_start=start,
                lift_end=end,
                lift_abs=lift,
                spend=0.0,
                confidence=0.9,
                metric="revenue",
                scope=SCOPE_TOTAL,
            )
        )
    return studies
