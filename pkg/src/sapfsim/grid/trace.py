"""Recorded simulation channels and their CSV representation."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError


@dataclass
class SimulationTrace:
    dt: float
    channels: dict[str, np.ndarray]
    summary: dict = field(default_factory=dict)
    t0: float = 0.0

    def __post_init__(self) -> None:
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) > 1:
            raise ValueError(f"channels have unequal lengths {sorted(lengths)}")

    def __len__(self) -> int:
        return next((len(v) for v in self.channels.values()), 0)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def __contains__(self, name: str) -> bool:
        return name in self.channels

    @property
    def t(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    def phases(self, prefix: str) -> np.ndarray:
        """Stack ``prefix_a/b/c`` into an array of shape (3, N)."""
        return np.vstack([self.channels[f"{prefix}_{k}"] for k in "abc"])

    def index_of(self, t: float) -> int:
        return int(round((t - self.t0) / self.dt))

    def to_csv_text(self) -> str:
        names = list(self.channels)
        data = np.column_stack([self.t] + [self.channels[n] for n in names]) if names else self.t[:, None]
        buf = io.StringIO(newline="")
        buf.write(",".join(["t_s"] + names) + "\n")
        np.savetxt(buf, data, fmt="%.9g", delimiter=",", newline="\n")
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> Path:
        """Write atomically: a failed write never leaves a partial file behind."""
        path = Path(path)
        write_atomic(path, self.to_csv_text())
        return path

    @classmethod
    def read_csv(cls, path: str | Path) -> "SimulationTrace":
        path = Path(path)
        with path.open(newline="") as fh:
            header = next(csv.reader(fh), None)
        if not header or header[0] != "t_s":
            raise ConfigurationError(f"{path}: first column must be 't_s'", key="t_s")
        if len(set(header)) != len(header):
            raise ConfigurationError(f"{path}: duplicate channel names", key="header")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] < 2:
            raise ConfigurationError(f"{path}: need at least two samples", key="t_s")
        t = data[:, 0]
        dt = float((t[-1] - t[0]) / (len(t) - 1))
        channels = {name: data[:, k] for k, name in enumerate(header) if k > 0}
        return cls(dt, channels, t0=float(t[0]))


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        # mkstemp creates 0600 files; give the result the usual umask-derived mode
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
