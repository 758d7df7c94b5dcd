"""Sample container with statistics, credibility intervals and CSV/JSON export."""

from __future__ import annotations

import json
import os

import numpy as np

from .geometry import Geometry


class Samples:
    """Matrix of samples, one column per sample (``n_dim x n_samples``)."""

    def __init__(self, values, geometry: Geometry | None = None, meta: dict | None = None):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[1] < 1:
            raise ValueError("samples need shape (n_dim, n_samples) with n_samples >= 1")
        if geometry is not None and values.shape[0] != geometry.par_dim:
            raise ValueError(f"sample dimension {values.shape[0]} does not match geometry "
                             f"dimension {geometry.par_dim}")
        values.setflags(write=False)
        self.values = values
        self.geometry = geometry
        self.meta = dict(meta or {})

    @property
    def n_dim(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.n_samples

    def __getitem__(self, idx):
        """Sub-select samples (columns)."""
        v = self.values[:, idx]
        return Samples(v if v.ndim == 2 else v[:, None], self.geometry, self.meta)

    def mean(self):
        return self.values.mean(axis=1)

    def variance(self):
        if self.n_samples < 2:
            raise ValueError("variance needs at least 2 samples")
        return self.values.var(axis=1, ddof=1)

    def std(self):
        return np.sqrt(self.variance())

    def ci(self, percent=95.0):
        """Equal-tailed credibility interval ``(lower, upper, mean)``."""
        if not 0 < percent <= 100:
            raise ValueError("percent must be in (0, 100]")
        q = np.array([(1 - percent / 100) / 2, (1 + percent / 100) / 2])
        lo, hi = np.quantile(self.values, q, axis=1, method="linear")
        return lo, hi, self.mean()

    def ci_width(self, percent=95.0):
        lo, hi, _ = self.ci(percent)
        return hi - lo

    def funvals(self):
        """Samples mapped columnwise through ``geometry.par2fun``."""
        if self.geometry is None:
            raise ValueError("funvals needs an attached geometry")
        f = np.column_stack([self.geometry.par2fun(self.values[:, j]) for j in range(self.n_samples)])
        return Samples(f, self.geometry.fun_geometry, self.meta)

    def ess(self):
        """Effective sample size per dimension (initial positive sequence)."""
        return np.array([effective_sample_size(row) for row in self.values])

    def export(self, path, percent=95.0):
        export_samples(self, path, percent)

    def __repr__(self):
        return f"Samples(n_dim={self.n_dim}, n_samples={self.n_samples})"


def autocorrelation(chain):
    x = np.asarray(chain, dtype=np.float64) - np.mean(chain)
    n = x.size
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n]
    if acov[0] <= 0:
        return None
    return acov / acov[0]


def effective_sample_size(chain) -> float:
    """Geyer's initial positive sequence estimate; a constant chain gives 1."""
    n = len(chain)
    rho = autocorrelation(chain)
    if rho is None:
        return 1.0
    tau = -1.0
    for k in range(0, n - 1, 2):
        gamma = rho[k] + rho[k + 1]
        if gamma <= 0:
            break
        tau += 2.0 * gamma
    return float(n / max(tau, 1.0 / n))


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(x if isinstance(x, str) else repr(float(x)) for x in row) + "\n")


def stats_rows(s: Samples, percent=95.0):
    lo, hi, mean = s.ci(percent)
    var = s.variance() if s.n_samples > 1 else np.zeros(s.n_dim)
    ess = s.ess() if s.n_samples >= 10 else np.full(s.n_dim, np.nan)
    header = ["dim", "mean", "variance", f"ci{percent:g}_lower", f"ci{percent:g}_upper", "ess"]
    rows = [[f"x_{i + 1}", mean[i], var[i], lo[i], hi[i], ess[i]] for i in range(s.n_dim)]
    return header, rows


def export_samples(s: Samples, path, percent=95.0):
    """Write samples.csv, stats.csv and meta.json into directory ``path``."""
    try:
        os.makedirs(path, exist_ok=True)
        np.savetxt(os.path.join(path, "samples.csv"), s.values.T, fmt="%.17g", delimiter=",",
                   header=",".join(f"x_{i + 1}" for i in range(s.n_dim)), comments="")
        header, rows = stats_rows(s, percent)
        write_csv(os.path.join(path, "stats.csv"), header, rows)
        meta = dict(s.meta)
        meta.setdefault("n_dim", s.n_dim)
        meta.setdefault("n_samples", s.n_samples)
        if s.geometry is not None:
            meta["geometry"] = s.geometry.to_dict()
        with open(os.path.join(path, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=_json_default)
    except OSError as exc:
        raise OSError(f"cannot export samples to {path}: {exc}") from exc


def load_samples(path, geometry: Geometry | None = None) -> Samples:
    try:
        values = np.loadtxt(os.path.join(path, "samples.csv"), delimiter=",", skiprows=1,
                            ndmin=2, dtype=np.float64)
        meta = {}
        meta_path = os.path.join(path, "meta.json")
        if os.path.exists(meta_path):
            with open(meta_path, encoding="utf-8") as fh:
                meta = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot load samples from {path}: {exc}") from exc
    return Samples(values.T, geometry, meta)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
