"""Deterministic surrogate for the public hourly air-quality CSV.

The real distribution cannot be redistributed with this package, so this
module synthesizes a file with the same layout and the same structural facts:
semicolon delimiters, comma decimal marks, the -200 missing sentinel, 9357
data rows, and exactly 827 rows that are complete across the four MOS inputs
and the four reference targets. The reference channel dies early (as in the
real recording), scattered reference outages and multi-hour device outages
are placed on top, and the value columns follow one common pollution factor
with per-gas noise so that cross-sensitivities and per-target difficulty
mimic the real data.

Point the pipeline at the genuine file instead whenever it is available; the
parsing code treats both identically.
"""
from __future__ import annotations

from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

DEFAULT_SEED = 20040310
DEFAULT_ROWS = 9357
DEFAULT_COMPLETE = 827

_HEADER = ("Date;Time;CO(GT);PT08.S1(CO);NMHC(GT);C6H6(GT);PT08.S2(NMHC);"
           "NOx(GT);PT08.S3(NOx);NO2(GT);PT08.S4(NO2);T;RH;AH;;")
_START = datetime(2004, 3, 10, 18, 0, 0)

# Rows 0..WINDOW-1 are the only ones where the NMHC reference may report,
# mirroring the early death of that analyzer in the real recording.
_WINDOW = 1000
_NMHC_DROPOUTS = 100  # scattered NMHC outages inside the window

MISSING = -200.0


def _pollution_factor(n: int, hours: np.ndarray, rng: np.random.Generator):
    """Common log-scale pollution level: twin diurnal peaks + AR(1) weather."""
    diurnal = (0.55 * np.sin(2 * np.pi * (hours - 9) / 24.0)
               + 0.25 * np.sin(4 * np.pi * (hours - 2) / 24.0))
    shocks = rng.normal(0.0, 0.15, size=n)
    s = np.empty(n)
    acc = 0.0
    for i in range(n):
        acc = 0.90 * acc + shocks[i]
        s[i] = acc
    logp = diurnal + s - 0.15
    return np.exp(np.clip(logp, -3.0, 2.5))


def _columns(n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    timestamps = [_START + timedelta(hours=i) for i in range(n)]
    hours = np.array([t.hour for t in timestamps], dtype=np.float64)
    doy = np.array([t.timetuple().tm_yday for t in timestamps], dtype=np.float64)
    p = _pollution_factor(n, hours, rng)

    def noisy(scale, power, sigma, lo, hi):
        v = scale * p ** power * np.exp(rng.normal(0.0, sigma, size=n))
        return np.clip(v, lo, hi)

    co = noisy(2.1, 1.05, 0.12, 0.1, 11.9)
    nmhc = noisy(165.0, 1.30, 0.50, 7.0, 1189.0)
    nox = noisy(165.0, 1.25, 0.22, 2.0, 1479.0)
    no2 = noisy(95.0, 0.80, 0.20, 2.0, 340.0)
    c6h6 = noisy(5.5, 1.10, 0.10, 0.1, 63.7)

    s1 = np.clip(650.0 + 760.0 * p ** 0.55
                 * np.exp(rng.normal(0.0, 0.05, size=n)), 647, 2040)
    s2 = np.clip(380.0 + 900.0 * p ** 0.65
                 * np.exp(rng.normal(0.0, 0.04, size=n)), 383, 2214)
    s3 = np.clip(320.0 + 1310.0 * (p + 0.15) ** -0.5
                 * np.exp(rng.normal(0.0, 0.05, size=n)), 322, 2683)
    s4 = np.clip(550.0 + 1060.0 * p ** 0.50
                 * np.exp(rng.normal(0.0, 0.05, size=n)), 551, 2775)

    t_air = (10.0 + 9.0 * np.sin(2 * np.pi * (doy - 110) / 365.0)
             + 4.5 * np.sin(2 * np.pi * (hours - 14) / 24.0)
             + rng.normal(0.0, 2.0, size=n))
    rh = np.clip(62.0 - 1.4 * (t_air - 10.0) + rng.normal(0.0, 8.0, size=n),
                 9.2, 88.7)
    # absolute humidity from temperature and relative humidity (scaled units)
    svp = 6.112 * np.exp(17.62 * t_air / (243.12 + t_air))
    ah = np.clip(rh / 100.0 * svp * 28.0 / (273.15 + t_air), 0.18, 2.23)

    return {
        "timestamps": timestamps,
        "CO(GT)": np.round(co, 1),
        "PT08.S1(CO)": np.round(s1),
        "NMHC(GT)": np.round(nmhc),
        "C6H6(GT)": np.round(c6h6, 1),
        "PT08.S2(NMHC)": np.round(s2),
        "NOx(GT)": np.round(nox),
        "PT08.S3(NOx)": np.round(s3),
        "NO2(GT)": np.round(no2),
        "PT08.S4(NO2)": np.round(s4),
        "T": np.round(t_air, 1),
        "RH": np.round(rh, 1),
        "AH": np.round(ah, 4),
    }


def _apply_outages(cols: dict[str, np.ndarray], n: int, n_complete: int,
                   rng: np.random.Generator) -> None:
    """Place -200 sentinels so exactly n_complete rows stay fully valid."""
    device = ("PT08.S1(CO)", "PT08.S2(NMHC)", "PT08.S3(NOx)", "PT08.S4(NO2)",
              "C6H6(GT)", "T", "RH", "AH")

    # reference NMHC reports only inside the early window, minus dropouts
    cols["NMHC(GT)"][_WINDOW:] = MISSING
    window = rng.permutation(_WINDOW)
    dropouts, pool = window[:_NMHC_DROPOUTS], window[_NMHC_DROPOUTS:]
    cols["NMHC(GT)"][dropouts] = MISSING

    if not 0 < n_complete <= pool.size:
        raise ValueError(f"n_complete must be in 1..{pool.size}")
    k = pool.size - n_complete  # rows inside the window to spoil
    n_dev = round(0.11 * k)
    n_no2 = round(0.07 * k)
    n_nox = round(0.27 * k)
    n_co = k - n_dev - n_no2 - n_nox
    spoil = pool[:k]
    cols["CO(GT)"][spoil[:n_co]] = MISSING
    cols["NOx(GT)"][spoil[n_co:n_co + n_nox]] = MISSING
    cols["NO2(GT)"][spoil[n_co + n_nox:n_co + n_nox + n_no2]] = MISSING
    for c in device:
        cols[c][spoil[k - n_dev:k]] = MISSING

    # C6H6 alone missing on two complete rows: completeness must not look at it
    complete = pool[k:]
    cols["C6H6(GT)"][complete[:2]] = MISSING

    # outside the window: reference analyzers drop out often, the multisensor
    # device goes down in multi-hour blocks, none of it affects completeness
    rest = np.arange(_WINDOW, n)
    for col, frac in (("CO(GT)", 0.18), ("NOx(GT)", 0.17), ("NO2(GT)", 0.17)):
        hit = rest[rng.random(rest.size) < frac]
        cols[col][hit] = MISSING
    starts = rng.choice(rest[:-20], size=30, replace=False)
    for start in starts:
        span = int(rng.integers(6, 19))
        for c in device:
            cols[c][start:start + span] = MISSING


def _fmt(value: float, decimals: int) -> str:
    if decimals == 0:
        return str(int(value))
    return f"{value:.{decimals}f}".replace(".", ",")


_DECIMALS = {
    "CO(GT)": 1, "PT08.S1(CO)": 0, "NMHC(GT)": 0, "C6H6(GT)": 1,
    "PT08.S2(NMHC)": 0, "NOx(GT)": 0, "PT08.S3(NOx)": 0, "NO2(GT)": 0,
    "PT08.S4(NO2)": 0, "T": 1, "RH": 1, "AH": 4,
}


def render_csv(seed: int = DEFAULT_SEED, n_rows: int = DEFAULT_ROWS,
               n_complete: int = DEFAULT_COMPLETE) -> str:
    """Render the whole surrogate file as one string."""
    rng = np.random.default_rng(seed)
    cols = _columns(n_rows, rng)
    _apply_outages(cols, n_rows, n_complete, rng)

    order = list(_DECIMALS)
    lines = [_HEADER]
    for i, ts in enumerate(cols["timestamps"]):
        fields = [ts.strftime("%d/%m/%Y"), ts.strftime("%H.%M.%S")]
        fields += [_fmt(cols[c][i], _DECIMALS[c]) for c in order]
        lines.append(";".join(fields) + ";;")
    return "\n".join(lines) + "\n"


def write_surrogate_csv(path, seed: int = DEFAULT_SEED,
                        n_rows: int = DEFAULT_ROWS,
                        n_complete: int = DEFAULT_COMPLETE) -> Path:
    """Write the surrogate CSV to path and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(render_csv(seed, n_rows, n_complete), encoding="utf-8")
    tmp.replace(path)
    return path
