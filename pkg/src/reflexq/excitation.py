"""Ground-acceleration records: loading, resampling, synthesis, CSV output."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, RecordFormatError
from .validation import check_positive

G_TO_MS2 = 9.80665

# spacing jitter larger than this (seconds) rejects a CSV record as non-uniform
SPACING_TOLERANCE_S = 1e-6


@dataclass(frozen=True)
class GroundMotion:
    """Uniformly sampled ground acceleration, m/s^2."""

    dt: float
    samples: np.ndarray
    name: str = ""
    source: str = "synthetic"   # csv | at2 | synthetic

    def __post_init__(self):
        object.__setattr__(self, "dt", check_positive("dt", self.dt))
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or len(arr) < 1:
            raise InvalidParameterError("samples must be a non-empty 1-d array")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("ground motion contains non-finite samples")
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self):
        return (len(self.samples) - 1) * self.dt

    @property
    def peak(self):
        """Peak ground acceleration, m/s^2."""
        return float(np.max(np.abs(self.samples)))


def load_csv(path) -> GroundMotion:
    """Load a two-column (time s, acceleration m/s^2) record.

    Lines starting with '#' are skipped.  Sample spacing must be uniform to
    within ``SPACING_TOLERANCE_S``.
    """
    times = []
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p for p in re.split(r"[,\s]+", line) if p]
            if len(parts) != 2:
                raise RecordFormatError(f"{path}: line {lineno}: expected two columns, got {raw!r}")
            try:
                times.append(float(parts[0]))
                values.append(float(parts[1]))
            except ValueError:
                raise RecordFormatError(f"{path}: line {lineno}: malformed number in {raw!r}") from None
    if not values:
        raise RecordFormatError(f"{path}: no data rows")
    if len(values) == 1:
        raise RecordFormatError(f"{path}: need at least two rows to infer the sample interval")
    dt = times[1] - times[0]
    if dt <= 0:
        raise RecordFormatError(f"{path}: non-increasing time column")
    diffs = np.diff(times)
    bad = np.nonzero(np.abs(diffs - dt) > SPACING_TOLERANCE_S)[0]
    if len(bad):
        raise RecordFormatError(
            f"{path}: non-uniform sample spacing at row {bad[0] + 2} "
            f"({diffs[bad[0]]} s vs {dt} s)"
        )
    import os
    return GroundMotion(dt=dt, samples=np.array(values), name=os.path.basename(str(path)), source="csv")


def load_at2(path) -> GroundMotion:
    """Load a PEER NGA .AT2 record (values in g, converted to m/s^2).

    Layout: three free-text header lines, a fourth line carrying NPTS and DT,
    then whitespace-separated acceleration values.
    """
    with open(path) as fh:
        lines = fh.readlines()
    if len(lines) < 5:
        raise RecordFormatError(f"{path}: too short for an AT2 record")
    header = lines[3]
    m_npts = re.search(r"NPTS\s*=\s*([0-9]+)", header, re.IGNORECASE)
    m_dt = re.search(r"DT\s*=\s*([0-9.eE+\-]+)", header, re.IGNORECASE)
    if not m_npts or not m_dt:
        raise RecordFormatError(f"{path}: could not parse NPTS/DT from {header.strip()!r}")
    npts = int(m_npts.group(1))
    try:
        dt = float(m_dt.group(1))
    except ValueError:
        raise RecordFormatError(f"{path}: unparseable DT in {header.strip()!r}") from None
    if dt <= 0:
        raise RecordFormatError(f"{path}: invalid sample interval DT={dt}")
    values = []
    for raw in lines[4:]:
        for token in raw.split():
            try:
                values.append(float(token))
            except ValueError:
                raise RecordFormatError(f"{path}: malformed value {token!r}") from None
    if len(values) != npts:
        raise RecordFormatError(f"{path}: NPTS={npts} but {len(values)} values present")
    import os
    samples = np.array(values) * G_TO_MS2
    return GroundMotion(dt=dt, samples=samples, name=os.path.basename(str(path)), source="at2")


def write_csv(motion: GroundMotion, path):
    """Write a record in the package's CSV layout (full double precision)."""
    with open(path, "w") as fh:
        fh.write(f"# ground motion: {motion.name}\n")
        fh.write(f"# source: {motion.source}\n")
        fh.write("# columns: time_s, acceleration_m_s2\n")
        for i, value in enumerate(motion.samples):
            fh.write(f"{i * motion.dt!r},{float(value)!r}\n")


def resample(motion: GroundMotion, target_dt: float) -> GroundMotion:
    """Linearly interpolate onto a uniform grid spanning the original duration."""
    check_positive("target_dt", target_dt)
    if abs(target_dt - motion.dt) <= 1e-15 * motion.dt:
        return GroundMotion(dt=motion.dt, samples=motion.samples.copy(),
                            name=motion.name, source=motion.source)
    t_old = np.arange(len(motion)) * motion.dt
    n_new = int(math.floor(motion.duration / target_dt)) + 1
    t_new = np.arange(n_new) * target_dt
    samples = np.interp(t_new, t_old, motion.samples)
    return GroundMotion(dt=target_dt, samples=samples, name=motion.name, source=motion.source)


def pad_or_trim(motion: GroundMotion, n_samples: int) -> GroundMotion:
    """Zero-pad or truncate to exactly n_samples."""
    if n_samples < 1:
        raise InvalidParameterError("n_samples must be >= 1")
    samples = motion.samples
    if len(samples) >= n_samples:
        samples = samples[:n_samples].copy()
    else:
        samples = np.concatenate([samples, np.zeros(n_samples - len(samples))])
    return GroundMotion(dt=motion.dt, samples=samples, name=motion.name, source=motion.source)


def synth(kind, duration, dt, amplitude, seed=0, f0=0.5, f1=20.0) -> GroundMotion:
    """Generate a synthetic record; deterministic for a given seed.

    kinds:
      sine        -- amplitude * sin(2*pi*f0*t)
      sweep       -- linear chirp from f0 to f1 over the duration
      white_noise -- zero-mean uniform noise scaled so its std is `amplitude`
    """
    check_positive("duration", duration)
    check_positive("dt", dt)
    check_positive("amplitude", amplitude)
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    if kind == "sine":
        samples = amplitude * np.sin(2.0 * np.pi * f0 * t)
    elif kind == "sweep":
        rate = (f1 - f0) / duration
        samples = amplitude * np.sin(2.0 * np.pi * (f0 * t + 0.5 * rate * t * t))
    elif kind == "white_noise":
        rng = np.random.default_rng(seed)
        half_width = amplitude * math.sqrt(3.0)   # uniform(-w, w) has std w/sqrt(3)
        samples = rng.uniform(-half_width, half_width, size=n)
    else:
        raise InvalidParameterError(f"unknown synthetic kind {kind!r}")
    name = f"synthetic-{kind}-{seed}"
    return GroundMotion(dt=dt, samples=samples, name=name, source="synthetic")
