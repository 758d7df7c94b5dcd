"""Adaptive Metropolis-type samplers: random-walk MH, component-wise MH and pCN.

All three adapt their proposal scale during burn-in in windows of 100
iterations, multiplying by ``exp((rate - target) / sqrt(window))``, and keep it
fixed afterwards. Random numbers come from numpy's PCG64 generator.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .samples import Samples

RNG_ALGORITHM = "numpy.PCG64"
WINDOW = 100
TARGETS = {"mh": 0.234, "cwmh": 0.23, "pcn": 0.30}


@dataclass
class ChainConfig:
    n_samples: int
    n_burn: int | None = None
    seed: int = 0
    x0: np.ndarray | None = None
    target_acceptance: float | None = None
    initial_scale: float | None = None
    callback: object = None
    callback_every: int = 1000

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be > 0")
        if self.n_burn is None:
            self.n_burn = self.n_samples // 5
        if self.n_burn < 0:
            raise ValueError("n_burn must be >= 0")
        if self.target_acceptance is not None and not 0 < self.target_acceptance < 1:
            raise ValueError("target_acceptance must be in (0, 1)")
        if self.initial_scale is not None and not self.initial_scale > 0:
            raise ValueError("initial_scale must be > 0")


@dataclass
class ChainResult:
    samples: Samples
    acceptance_rate: float
    window_acceptance: list
    final_scale: object
    seed: int
    sampler: str
    target_acceptance: float
    n_burn: int
    runtime: float
    component_acceptance: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        scale = self.final_scale
        d = {
            "sampler": self.sampler,
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "n_samples": self.samples.n_samples,
            "n_burn": self.n_burn,
            "acceptance_rate": self.acceptance_rate,
            "target_acceptance": self.target_acceptance,
            "final_scale": scale.tolist() if isinstance(scale, np.ndarray) else scale,
            "runtime_seconds": self.runtime,
        }
        if self.component_acceptance is not None:
            d["component_acceptance"] = self.component_acceptance.tolist()
        return d


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _start(posterior, config, fn):
    x = np.zeros(posterior.dim) if config.x0 is None else np.array(config.x0, dtype=np.float64)
    if x.shape != (posterior.dim,):
        raise ValueError(f"x0 must have length {posterior.dim}")
    val = fn(x)
    if not np.isfinite(val):
        raise ValueError("log-density is not finite at the initial point")
    return x, val


def _adapt_factor(rate, target, window_index):
    return math.exp((rate - target) / math.sqrt(window_index))


def _accept(rng, delta) -> bool:
    # delta may be -inf or nan for failed forward solves; both reject
    return bool(delta >= 0.0 or rng.random() < math.exp(delta)) if delta == delta else False


def _finish(name, posterior, config, chain, n_acc_kept, windows, scale, target, t0, comp=None):
    s = Samples(chain, posterior.geometry,
                {"sampler": name, "seed": config.seed, "rng": RNG_ALGORITHM})
    res = ChainResult(s, n_acc_kept / config.n_samples, windows, scale, config.seed, name, target,
                      config.n_burn, time.perf_counter() - t0, comp)
    s.meta.update({"acceptance_rate": res.acceptance_rate, "n_burn": config.n_burn})
    return res


def _progress(config, it, total, acc):
    if config.callback is not None and (it + 1) % config.callback_every == 0:
        config.callback(it + 1, total, acc)


def mh_sample(posterior, config: ChainConfig) -> ChainResult:
    """Gaussian random-walk Metropolis-Hastings with a scalar adapted step size."""
    t0 = time.perf_counter()
    target = config.target_acceptance or TARGETS["mh"]
    rng = make_rng(config.seed)
    x, lp = _start(posterior, config, posterior.logpdf)
    d = x.size
    s = config.initial_scale or 2.38 / math.sqrt(d)
    total = config.n_burn + config.n_samples
    chain = np.empty((d, config.n_samples))
    windows, w_acc, n_acc_kept, k = [], 0, 0, 0
    for it in range(total):
        xp = x + s * rng.standard_normal(d)
        lpp = posterior.logpdf(xp)
        if _accept(rng, lpp - lp):
            x, lp = xp, lpp
            w_acc += 1
            if it >= config.n_burn:
                n_acc_kept += 1
        if (it + 1) % WINDOW == 0:
            rate = w_acc / WINDOW
            windows.append(rate)
            if it < config.n_burn:
                s *= _adapt_factor(rate, target, len(windows))
            w_acc = 0
        if it >= config.n_burn:
            chain[:, k] = x
            k += 1
        _progress(config, it, total, w_acc)
    return _finish("mh", posterior, config, chain, n_acc_kept, windows, s, target, t0)


def cwmh_sample(posterior, config: ChainConfig) -> ChainResult:
    """Component-wise MH: one sweep updates each coordinate in turn and stores one sample."""
    t0 = time.perf_counter()
    target = config.target_acceptance or TARGETS["cwmh"]
    rng = make_rng(config.seed)
    x, lp = _start(posterior, config, posterior.logpdf)
    d = x.size
    s = np.full(d, config.initial_scale or 1.0)
    total = config.n_burn + config.n_samples
    chain = np.empty((d, config.n_samples))
    comp_acc = np.zeros(d, dtype=np.int64)
    comp_kept = np.zeros(d, dtype=np.int64)
    windows, n_acc_kept, k, n_windows = [], 0, 0, 0
    for it in range(total):
        xi = rng.standard_normal(d)
        for i in range(d):
            xp = x.copy()
            xp[i] += s[i] * xi[i]
            lpp = posterior.logpdf(xp)
            if _accept(rng, lpp - lp):
                x, lp = xp, lpp
                comp_acc[i] += 1
                if it >= config.n_burn:
                    comp_kept[i] += 1
        if (it + 1) % WINDOW == 0:
            rates = comp_acc / WINDOW
            windows.append(float(rates.mean()))
            n_windows += 1
            if it < config.n_burn:
                s *= np.exp((rates - target) / math.sqrt(n_windows))
            comp_acc[:] = 0
        if it >= config.n_burn:
            chain[:, k] = x
            k += 1
        _progress(config, it, total, None)
    comp_rate = comp_kept / config.n_samples
    n_acc_kept = comp_kept.sum() / d
    return _finish("cwmh", posterior, config, chain, n_acc_kept, windows, s, target, t0, comp_rate)


def pcn_sample(posterior, config: ChainConfig) -> ChainResult:
    """Preconditioned Crank-Nicolson; prior must be N(0, I)."""
    if not posterior.prior.is_standard:
        raise ValueError("pCN requires standard Gaussian prior N(0, I)")
    t0 = time.perf_counter()
    target = config.target_acceptance or TARGETS["pcn"]
    rng = make_rng(config.seed)
    x, ll = _start(posterior, config, posterior.loglike)
    d = x.size
    beta = min(config.initial_scale or 0.1, 1.0)
    total = config.n_burn + config.n_samples
    chain = np.empty((d, config.n_samples))
    windows, w_acc, n_acc_kept, k = [], 0, 0, 0
    for it in range(total):
        xp = math.sqrt(1.0 - beta * beta) * x + beta * rng.standard_normal(d)
        llp = posterior.loglike(xp)
        if _accept(rng, llp - ll):
            x, ll = xp, llp
            w_acc += 1
            if it >= config.n_burn:
                n_acc_kept += 1
        if (it + 1) % WINDOW == 0:
            rate = w_acc / WINDOW
            windows.append(rate)
            if it < config.n_burn:
                beta = min(1.0, beta * _adapt_factor(rate, target, len(windows)))
            w_acc = 0
        if it >= config.n_burn:
            chain[:, k] = x
            k += 1
        _progress(config, it, total, w_acc)
    return _finish("pcn", posterior, config, chain, n_acc_kept, windows, beta, target, t0)


SAMPLERS = {"mh": mh_sample, "cwmh": cwmh_sample, "pcn": pcn_sample}


def run_sampler(name: str, posterior, config: ChainConfig) -> ChainResult:
    try:
        fn = SAMPLERS[name]
    except KeyError:
        raise ValueError(f"unknown sampler {name!r}; supported: {sorted(SAMPLERS)}") from None
    return fn(posterior, config)
