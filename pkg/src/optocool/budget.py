"""Total true-motion and measurement budgets from quantum noise plus classical noise curves.

Noise curves are single-sided amplitude spectral densities per sqrt(Hz). Internal
PSDs are double-sided per rad/s: ``S_internal = ASD**2 / (4 pi)``.
"""

import io
import math
import os
import re
from dataclasses import dataclass

import numpy as np

from .qnoise import decompose_quantum_budget, measurement_metrics, motion_metrics
from .twophoton import ScalarResponse, SingularityError

__all__ = [
    "NoiseCurve",
    "NoiseFileError",
    "MotionBudget",
    "load_noise_curve",
    "parse_noise_curve",
    "evaluate",
    "total_motion_psd",
    "total_measurement_psd",
    "apparent_motion",
    "to_single_sided_hz",
    "from_single_sided_hz",
    "KINDS",
]

KINDS = ("force", "sensing")
_SPLIT = re.compile(r"[,\s]+")


class NoiseFileError(ValueError):
    def __init__(self, message, line=None, source=None):
        where = ""
        if source is not None:
            where += f"{source}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.source = source


def to_single_sided_hz(S):
    """Double-sided per rad/s -> single-sided per Hz."""
    return 4 * math.pi * S


def from_single_sided_hz(S):
    return S / (4 * math.pi)


@dataclass(frozen=True)
class NoiseCurve:
    kind: str
    freq: np.ndarray
    asd: np.ndarray
    name: str = "noise"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"noise kind must be one of {KINDS}, got {self.kind!r}")
        f = np.asarray(self.freq, dtype=float)
        a = np.asarray(self.asd, dtype=float)
        if f.ndim != 1 or f.shape != a.shape:
            raise ValueError("freq and asd must be 1-d arrays of equal length")
        if f.size < 2:
            raise ValueError("noise curve needs at least 2 rows")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(a))):
            raise ValueError("noise curve entries must be finite")
        if np.any(f <= 0) or np.any(np.diff(f) <= 0):
            raise ValueError("noise curve frequencies must be > 0 and strictly ascending")
        if np.any(a < 0):
            raise ValueError("noise curve ASD must be >= 0")
        object.__setattr__(self, "freq", f)
        object.__setattr__(self, "asd", a)

    def scaled(self, factor):
        return NoiseCurve(self.kind, self.freq, self.asd * factor, self.name)


def parse_noise_curve(text, kind, name="noise", source=None):
    freqs, vals, last = [], [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p for p in _SPLIT.split(line) if p]
        if len(parts) != 2:
            raise NoiseFileError(f"expected 2 columns, found {len(parts)}", lineno, source)
        try:
            f, v = float(parts[0]), float(parts[1])
        except ValueError:
            raise NoiseFileError(f"unparseable row {line!r}", lineno, source) from None
        if not (math.isfinite(f) and math.isfinite(v)):
            raise NoiseFileError("non-finite value", lineno, source)
        if f <= 0:
            raise NoiseFileError(f"frequency must be > 0, got {f!r}", lineno, source)
        if last is not None and f <= last:
            raise NoiseFileError("frequencies must be strictly ascending", lineno, source)
        if v < 0:
            raise NoiseFileError(f"negative ASD {v!r}", lineno, source)
        freqs.append(f)
        vals.append(v)
        last = f
    if len(freqs) < 2:
        raise NoiseFileError(f"need at least 2 data rows, found {len(freqs)}", None, source)
    return NoiseCurve(kind, np.array(freqs), np.array(vals), name)


def load_noise_curve(source, kind, name=None):
    """Read a two-column ``f ASD`` text file (or file-like); ``#`` starts a comment."""
    if isinstance(source, (str, os.PathLike)):
        label = os.fspath(source)
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise NoiseFileError(f"cannot read noise file: {e.strerror}", None, label) from None
        except UnicodeDecodeError:
            raise NoiseFileError("noise file is not valid UTF-8", None, label) from None
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        label = getattr(source, "name", None)
        text = source.read()
    else:
        raise TypeError("source must be a path or a readable file object")
    if name is None:
        name = os.path.splitext(os.path.basename(label))[0] if label else "noise"
    return parse_noise_curve(text, kind, name, label)


def evaluate(curve, grid):
    """Internal PSD of ``curve`` on ``grid``: log-log interpolation, flat ends."""
    f = grid.f
    if np.all(curve.asd > 0):
        asd = np.exp(np.interp(np.log(f), np.log(curve.freq), np.log(curve.asd)))
    else:
        # zeros have no logarithm; interpolate the ASD itself against log f
        asd = np.interp(np.log(f), np.log(curve.freq), curve.asd)
    return ScalarResponse(from_single_sided_hz(asd**2), grid)


@dataclass(frozen=True)
class MotionBudget:
    """Named PSD traces (double-sided per rad/s) and their pointwise sum."""

    traces: dict
    total: ScalarResponse
    target: str = "motion"

    def __getitem__(self, name):
        return self.traces[name]

    @property
    def grid(self):
        return self.total.grid


def _unique(name, used):
    base, i = name, 2
    while name in used:
        name = f"{base}_{i}"
        i += 1
    return name


def _assemble(quantum, classical, grid, target):
    traces = {}
    for k, v in quantum.traces.items():
        traces[f"quantum_{k}"] = v
    for label, tf, curves in classical:
        for c in curves:
            if c.kind != label:
                raise ValueError(f"curve {c.name!r} has kind {c.kind!r}; expected {label!r}")
            key = _unique(f"{label}_{c.name}", traces)
            traces[key] = ScalarResponse(np.abs(tf.values) ** 2 * evaluate(c, grid).real, grid)
    total = sum(t.real for t in traces.values())
    return MotionBudget(traces, ScalarResponse(total, grid), target)


def total_motion_psd(loop, sqz, forces=(), sensings=()):
    """S_xx = S_quant + |chi_eff|^2 S_FF + |X_eff|^2 S_sens, traces kept separate."""
    q = decompose_quantum_budget(motion_metrics(loop, sqz.phi_rms), sqz)
    return _assemble(q, [("force", loop.chi_eff, forces), ("sensing", loop.X_eff, sensings)],
                     loop.grid, "motion")


def total_measurement_psd(loop, sqz, forces=(), sensings=()):
    """S_yy = S_quant + |v Z_eff|^2 S_FF + |v Y_eff|^2 S_sens, in measurement units."""
    q = decompose_quantum_budget(measurement_metrics(loop, sqz.phi_rms), sqz)
    return _assemble(q, [("force", loop.v @ loop.Z_eff, forces),
                         ("sensing", loop.v @ loop.Y_eff, sensings)],
                     loop.grid, "measurement")


def apparent_motion(loop, S_yy):
    """Refer a measurement PSD to freerunning displacement: |chi0 / (v Z_om)|^2 S_yy."""
    plant = loop.plant
    sens = (loop.v @ plant.Z_om).values
    if np.any(sens == 0):
        idx = int(np.argmax(sens == 0))
        raise SingularityError("sensing function vanishes", float(loop.grid.omega[idx]))
    ratio = np.abs(plant.chi0.values / sens) ** 2
    if isinstance(S_yy, MotionBudget):
        traces = {k: ScalarResponse(ratio * v.real, v.grid) for k, v in S_yy.traces.items()}
        return MotionBudget(traces, ScalarResponse(ratio * S_yy.total.real, S_yy.grid), "apparent")
    return ScalarResponse(ratio * np.real(S_yy.values), S_yy.grid)
