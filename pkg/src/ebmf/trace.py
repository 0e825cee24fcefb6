"""Post-processing of tuning traces: moving-average smoothing and CSV export."""

from dataclasses import dataclass

import numpy as np

DEFAULT_WINDOW = 100


@dataclass
class SmoothedTrace:
    """Raw and trailing-mean-smoothed energies, aligned per iteration."""

    window: int
    iteration: np.ndarray
    raw: np.ndarray
    smoothed: np.ndarray


def smooth(trace, window=DEFAULT_WINDOW):
    """Trailing moving average of the trace energy.

    Row i averages the last ``window`` raw values up to and including i,
    truncated at the start of the trace; window = 1 reproduces the raw
    series.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    raw = np.asarray(trace.energy, dtype=np.float64)
    csum = np.concatenate(([0.0], np.cumsum(raw)))
    idx = np.arange(raw.size)
    lo = np.maximum(idx - window + 1, 0)
    smoothed = (csum[idx + 1] - csum[lo]) / (idx + 1 - lo)
    return SmoothedTrace(
        window=window,
        iteration=np.asarray(trace.iteration).copy(),
        raw=raw.copy(),
        smoothed=smoothed,
    )


def write_smoothed_csv(st, path):
    """Write ``iter,raw_energy,smoothed_energy`` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter,raw_energy,smoothed_energy\n")
        for i in range(st.iteration.size):
            fh.write(f"{int(st.iteration[i])},{st.raw[i]:.12g},{st.smoothed[i]:.12g}\n")
