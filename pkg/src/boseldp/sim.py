"""Monte Carlo and exact enumeration for truncated cycle-count vectors.

The reference process has independent counts ``N_k ~ Poisson(V q_k)`` for
``k <= k_max``.  Interacting models tilt it by ``exp(-beta V H(N / V))``
and are sampled with a single-coordinate Metropolis-Hastings chain.  At
tiny scale the tilted law is enumerated exactly and serves as an oracle.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import poisson

from . import kernels, specfun
from .errors import DomainError, SizeError
from .minimize import zero_pmf
from .model import Model, ModelParams

MODEL_CODES = {Model.IDEAL: 0, Model.CMF: 1, Model.PMF: 2, Model.HYL: 3}
BLOCK = 1 << 16
MAX_STATES = 10 ** 6


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``n_samples`` counts Poisson draws for the ideal sampler and chain
    steps (single-coordinate updates) for the MH sampler.
    """

    params: ModelParams
    volume: float
    k_max: int
    n_samples: int
    burn_in: int = 0
    seed: int = 0
    chains: int = 1
    n_batches: int = 32

    def __post_init__(self):
        if not (self.volume > 0.0 and math.isfinite(self.volume)):
            raise DomainError(f"volume must be finite and > 0, got {self.volume!r}")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise DomainError(f"k_max must be a positive integer, got {self.k_max!r}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise DomainError(f"n_samples must be >= 1, got {self.n_samples!r}")
        if self.burn_in < 0:
            raise DomainError("burn_in must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.chains < 1 or self.n_batches < 2:
            raise DomainError("need chains >= 1 and n_batches >= 2")

    def as_dict(self) -> dict:
        return {"volume": self.volume, "k_max": self.k_max, "n_samples": self.n_samples,
                "burn_in": self.burn_in, "seed": self.seed, "chains": self.chains,
                "n_batches": self.n_batches, "params": self.params.as_dict()}


@dataclass
class SimEstimate:
    """Per-``k`` estimates of the mean of ``lambda_k = N_k / V``.

    ``acceptance_rate`` is ``None`` for direct (non-Markov) sampling.
    ``tail_bound`` bounds the cycle and particle densities of the
    reference process carried by ``k > k_max``.
    """

    mean: np.ndarray
    stderr: np.ndarray
    variance: np.ndarray
    ess: np.ndarray
    acceptance_rate: float | None
    tail_bound: dict
    config: SimConfig
    backend: str = ""
    info: dict = field(default_factory=dict)

    def z_scores(self, target) -> np.ndarray:
        target = np.asarray(target, dtype=np.float64)[: len(self.mean)]
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.mean - target) / self.stderr

    def as_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "stderr": self.stderr.tolist(),
                "variance": self.variance.tolist(), "ess": self.ess.tolist(),
                "acceptance_rate": self.acceptance_rate, "tail_bound": self.tail_bound,
                "backend": self.backend, "config": self.config.as_dict(),
                "info": self.info}


def _rng(seed: int, chain: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chain])))


def reference_eta(params: ModelParams) -> float:
    """Tilt of the Poisson reference: ``mu + alpha`` for Ideal/CMF, 0 otherwise."""
    if params.model in (Model.IDEAL, Model.CMF):
        if params.mu_eff > 0.0:
            raise DomainError("reference measure needs mu + alpha <= 0")
        return params.mu_eff
    return 0.0


def reference_rates(params: ModelParams, volume: float, k_max: int) -> np.ndarray:
    """Poisson means ``V q_k`` of the reference counts, ``k = 1..k_max``."""
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    return volume * params.weights.q(ks, reference_eta(params))


def tail_bound(params: ModelParams, k_max: int) -> dict:
    """Reference cycle and particle densities carried by ``k > k_max``."""
    w = params.weights
    eta = reference_eta(params)
    lam = -params.beta * eta
    half = 0.5 * params.d
    cycles = specfun.bose_tail(1.0 + half, lam, k_max) / w.thermal
    particles = specfun.bose_tail(half, lam, k_max) / w.thermal
    return {"k_max": k_max, "cycle_density": cycles, "particle_density": particles}


def sample_ideal(cfg: SimConfig, chunk: int = 4096) -> SimEstimate:
    """Direct sampling of the reference counts.

    Raises
    ------
    DomainError
        If ``mu + alpha > 0``.
    """
    params = cfg.params
    if params.mu_eff > 0.0:
        raise DomainError("ideal sampling needs mu + alpha <= 0")
    ideal = replace(params, model=Model.IDEAL, a=0.0, b=0.0)
    rates = reference_rates(ideal, cfg.volume, cfg.k_max)
    rng = _rng(cfg.seed, 0)
    s1 = np.zeros(cfg.k_max)
    s2 = np.zeros(cfg.k_max)
    left = cfg.n_samples
    while left > 0:
        m = min(chunk, left)
        draws = rng.poisson(rates, size=(m, cfg.k_max)).astype(np.float64)
        s1 += draws.sum(axis=0)
        s2 += (draws * draws).sum(axis=0)
        left -= m
    n = cfg.n_samples
    mean_n = s1 / n
    var_n = np.maximum(s2 / n - mean_n ** 2, 0.0) * (n / (n - 1) if n > 1 else 0.0)
    V = cfg.volume
    return SimEstimate(mean=mean_n / V, stderr=np.sqrt(var_n / n) / V,
                       variance=var_n / V ** 2, ess=np.full(cfg.k_max, float(n)),
                       acceptance_rate=None, tail_bound=tail_bound(ideal, cfg.k_max),
                       config=cfg, backend="numpy")


def _run_chain(cfg: SimConfig, chain: int, mh_block):
    params = cfg.params
    rng = _rng(cfg.seed, chain)
    K = cfg.k_max
    rates = reference_rates(params, cfg.volume, K)
    log_rate = np.log(rates)
    counts = rng.poisson(rates).astype(np.int64)
    code = MODEL_CODES[params.model]
    args = (code, params.beta, params.mu_eff, params.a, params.b, float(cfg.volume))

    def advance(steps, sums, sumsq):
        acc = 0
        while steps > 0:
            m = min(BLOCK, steps)
            coord = rng.integers(0, K, size=m, dtype=np.int64)
            up = rng.integers(0, 2, size=m, dtype=np.uint8)
            logu = np.log(rng.random(m))
            acc += mh_block(counts, log_rate, coord, up, logu, *args, sums, sumsq)
            steps -= m
        return acc

    scratch = np.zeros(K)
    advance(cfg.burn_in, scratch, scratch.copy())
    nb = cfg.n_batches
    size = max(cfg.n_samples // nb, 1)
    batch_means = np.empty((nb, K))
    tot1 = np.zeros(K)
    tot2 = np.zeros(K)
    accepted = 0
    for j in range(nb):
        s1 = np.zeros(K)
        s2 = np.zeros(K)
        accepted += advance(size, s1, s2)
        batch_means[j] = s1 / size
        tot1 += s1
        tot2 += s2
    return batch_means, tot1, tot2, accepted, nb * size


def sample_tilted(cfg: SimConfig, threads: int = 1, backend: str | None = None) -> SimEstimate:
    """Metropolis-Hastings sampling of the tilted truncated law.

    Each step picks a coordinate uniformly and proposes ``N_k -> N_k + 1``
    or ``N_k - 1`` with equal probability (always ``+1`` from 0).  Chains
    run on independent streams derived from ``(seed, chain)``; results are
    pooled in chain order.  Standard errors use batch means.

    Parameters
    ----------
    threads : int
        Upper bound on concurrently running chains.
    backend : {"compiled", "python"}, optional
        Kernel implementation; defaults to the active one.
    """
    params = cfg.params
    if params.model is Model.IDEAL:
        raise DomainError("sample_tilted needs an interacting model")
    mods = kernels.backends()
    name = backend or kernels.BACKEND
    if name not in mods:
        raise DomainError(f"backend {name!r} is not available")
    mh = mods[name].mh_block
    runner = lambda c: _run_chain(cfg, c, mh)  # noqa: E731
    if threads > 1 and cfg.chains > 1:
        with ThreadPoolExecutor(max_workers=min(threads, cfg.chains)) as pool:
            results = list(pool.map(runner, range(cfg.chains)))
    else:
        results = [runner(c) for c in range(cfg.chains)]
    batches = np.concatenate([r[0] for r in results])
    steps = sum(r[4] for r in results)
    tot1 = sum(r[1] for r in results)
    tot2 = sum(r[2] for r in results)
    accepted = sum(r[3] for r in results)
    V = cfg.volume
    mean_n = tot1 / steps
    var_n = np.maximum(tot2 / steps - mean_n ** 2, 0.0)
    nb = batches.shape[0]
    size = steps // nb
    bm_var = batches.var(axis=0, ddof=1)
    stderr_n = np.sqrt(bm_var / nb)
    with np.errstate(divide="ignore", invalid="ignore"):
        ess = np.where(bm_var > 0.0, steps * var_n / (size * bm_var), float(steps))
    return SimEstimate(mean=mean_n / V, stderr=stderr_n / V, variance=var_n / V ** 2,
                       ess=ess, acceptance_rate=accepted / steps,
                       tail_bound=tail_bound(params, cfg.k_max), config=cfg,
                       backend=name, info={"steps": steps, "batch_size": size,
                                           "batch_means": (batches / V).tolist()})


def simulate(cfg: SimConfig, threads: int = 1) -> SimEstimate:
    """Direct sampling for the ideal gas, MH otherwise."""
    if cfg.params.model is Model.IDEAL:
        return sample_ideal(cfg)
    return sample_tilted(cfg, threads=threads)


def scaled_hamiltonian(params: ModelParams, counts: np.ndarray, volume: float) -> np.ndarray:
    """``V H(N / V)`` for a batch of count vectors (rows of ``counts``)."""
    counts = np.asarray(counts, dtype=np.float64)
    m = params.model
    if m is Model.IDEAL:
        return np.zeros(counts.shape[0])
    if m is Model.CMF:
        s0 = counts.sum(axis=1)
        return 0.5 * params.a * s0 * s0 / volume
    ks = np.arange(1, counts.shape[1] + 1, dtype=np.float64)
    s1 = counts @ ks
    out = -params.mu_eff * s1 + 0.5 * params.a * s1 * s1 / volume
    if m is Model.HYL:
        out -= 0.5 * params.b * ((counts * ks) ** 2).sum(axis=1) / volume
    return out


def _energy_floor(params: ModelParams) -> float:
    # lower bound on H, used for the certified truncation bound
    mu = max(params.mu_eff, 0.0)
    if params.model is Model.PMF:
        return -mu * mu / (2.0 * params.a)
    if params.model is Model.HYL:
        return -mu * mu / (2.0 * (params.a - params.b))
    return 0.0


@dataclass
class ExactTable:
    """Exact law of the tilted counts restricted to ``0 <= N_k <= n_cap``.

    ``probs`` is normalised over the enumerated states; ``tail_bound``
    bounds the mass of the full law outside them.  ``captured`` is the
    reference (untilted) mass of the enumerated box.
    """

    states: np.ndarray
    log_weights: np.ndarray
    probs: np.ndarray
    tail_bound: float
    captured: float
    volume: float
    params: ModelParams

    def marginal(self, k: int) -> np.ndarray:
        col = self.states[:, k - 1]
        return np.bincount(col, weights=self.probs, minlength=int(col.max()) + 1)

    def mode(self) -> tuple:
        return tuple(int(v) for v in self.states[int(np.argmax(self.probs))])

    def mean_density(self) -> np.ndarray:
        return self.probs @ self.states / self.volume

    def index(self) -> dict:
        return {tuple(int(v) for v in s): i for i, s in enumerate(self.states)}


def _enumerate(k_max: int, n_cap: int) -> np.ndarray:
    n_states = (n_cap + 1) ** k_max
    if n_states > MAX_STATES:
        raise SizeError(f"{n_states} states exceed the enumeration cap {MAX_STATES}")
    return np.array(list(itertools.product(range(n_cap + 1), repeat=k_max)),
                    dtype=np.int64).reshape(n_states, k_max)


def bruteforce_measure(params: ModelParams, volume: float, k_max: int,
                       n_cap: int) -> ExactTable:
    """Enumerate the tilted law over ``{0..n_cap}^k_max``.

    Raises
    ------
    SizeError
        If more than ``10**6`` states would be enumerated.
    """
    if k_max < 1 or n_cap < 0:
        raise DomainError("need k_max >= 1 and n_cap >= 0")
    states = _enumerate(k_max, n_cap)
    rates = reference_rates(params, volume, k_max)
    log_ref = (states * np.log(rates) - gammaln(states + 1.0)).sum(axis=1) - rates.sum()
    log_w = log_ref - params.beta * scaled_hamiltonian(params, states, volume)
    log_z = logsumexp(log_w)
    probs = np.exp(log_w - log_z)
    captured = float(np.exp(logsumexp(log_ref)))
    # reference mass outside the box, by a union bound over coordinates
    ref_out = min(1.0, float(np.sum(poisson.sf(n_cap, rates))))
    floor = _energy_floor(params)
    bound = ref_out * math.exp(-params.beta * volume * floor - log_z) if ref_out > 0 else 0.0
    return ExactTable(states, log_w, probs, min(bound, 1.0), captured, volume, params)


def _proposal_moves(n: int):
    """``(step, proposal probability given the coordinate)`` pairs."""
    if n == 0:
        return [(1, 1.0)]
    return [(1, 0.5), (-1, 0.5)]


def mh_transition_matrix(params: ModelParams, volume: float, k_max: int,
                         n_cap: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact MH transition matrix restricted to ``{0..n_cap}^k_max``.

    Moves leaving the box are folded into the holding probability, so rows
    sum to at most 1 among box states plus the escaping mass.  Returns
    ``(states, P)``.
    """
    states = _enumerate(k_max, n_cap)
    index = {tuple(s): i for i, s in enumerate(states.tolist())}
    log_rate = np.log(reference_rates(params, volume, k_max))
    vh = scaled_hamiltonian(params, states, volume)
    P = np.zeros((len(states), len(states)))
    for i, s in enumerate(states.tolist()):
        for c in range(k_max):
            n = s[c]
            for step, prop in _proposal_moves(n):
                t = list(s)
                t[c] = n + step
                back = 1.0 if n + step == 0 else 0.5
                if step == 1:
                    log_ref = log_rate[c] - math.log(n + 1)
                else:
                    log_ref = math.log(n) - log_rate[c]
                tn = np.array([t], dtype=np.float64)
                dvh = scaled_hamiltonian(params, tn, volume)[0] - vh[i]
                logr = log_ref - params.beta * dvh + math.log(back / prop)
                acc = 1.0 if logr >= 0.0 else math.exp(logr)
                j = index.get(tuple(t))
                if j is not None:
                    P[i, j] += prop * acc / k_max
        P[i, i] = 0.0
        P[i, i] = 1.0 - P[i].sum()
    return states, P


@dataclass
class RateEstimate:
    volume: float
    value: float
    log_prob: float
    empty: bool


def _ball_mask(states: np.ndarray, volume: float, center, radius: float) -> np.ndarray:
    x = states / volume
    return np.abs(x - np.asarray(center, dtype=np.float64)).sum(axis=1) <= radius + 1e-15


def empirical_rate(params: ModelParams, volumes, center, radius: float,
                   n_cap: int | None = None) -> list:
    """``-log P(||N/V - center||_1 <= radius) / V`` by exact enumeration.

    The dimension is ``len(center)``.  The enumeration box is
    ``{0..n_cap}^k`` (by default large enough to hold the ball and most
    of the reference mass).  A ball without lattice points or with zero
    probability gives ``inf`` and ``empty = True``.
    """
    center = np.asarray(center, dtype=np.float64)
    K = center.size
    out = []
    for V in volumes:
        V = float(V)
        cap = n_cap
        if cap is None:
            rates = reference_rates(params, V, K)
            cap = int(math.ceil(max(V * (center.max() + radius),
                                    rates.max() + 10.0 * math.sqrt(rates.max()) + 10.0)))
        table = bruteforce_measure(params, V, K, cap)
        mask = _ball_mask(table.states, V, center, radius)
        if not mask.any() or table.probs[mask].sum() == 0.0:
            out.append(RateEstimate(V, math.inf, -math.inf, True))
            continue
        logp = float(logsumexp(table.log_weights[mask]) - logsumexp(table.log_weights))
        out.append(RateEstimate(V, -logp / V, logp, False))
    return out


def truncated_rate(params: ModelParams, x, normalizer: float = 0.0) -> float:
    """Rate of the ``k <= len(x)`` counts: relative entropy against the
    reference plus ``beta H(x)``, minus ``normalizer``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0.0):
        return math.inf
    ks = np.arange(1, x.size + 1, dtype=np.float64)
    q = params.weights.q(ks, reference_eta(params))
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(x > 0.0, x * np.log(x / q), 0.0) - x + q
    h = scaled_hamiltonian(params, x[None, :], 1.0)[0]
    return float(ent.sum() + params.beta * h - normalizer)


def _golden(fn, lo, hi, iters=100):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = fn(d)
    return min(fc, fd)


def ball_infimum(params: ModelParams, center, radius: float, grid: int = 2001) -> float:
    """Infimum of :func:`truncated_rate` (normalised) over an ``l1`` ball.

    Valid for the convex cases (Ideal, CMF, PMF) in one or two
    dimensions: the infimum is 0 if the minimiser lies in the ball and is
    attained on the boundary otherwise.  Each boundary edge is scanned on
    a grid and refined by golden section.
    """
    if params.model is Model.HYL:
        raise DomainError("ball_infimum relies on convexity; HYL is not convex")
    center = np.asarray(center, dtype=np.float64)
    K = center.size
    if K not in (1, 2):
        raise DomainError("ball_infimum supports one or two coordinates")
    x0 = truncated_minimizer(params, K)
    norm = truncated_rate(params, x0)
    rate = lambda x: truncated_rate(params, x, norm)  # noqa: E731
    if np.abs(x0 - center).sum() <= radius:
        return 0.0
    if K == 1:
        return min(rate(center - radius), rate(center + radius))
    best = math.inf
    verts = [center + radius * np.array(v) for v in ((1, 0), (0, 1), (-1, 0), (0, -1))]
    for v0, v1 in zip(verts, verts[1:] + verts[:1]):
        ts = np.linspace(0.0, 1.0, grid)
        vals = np.array([rate(v0 + t * (v1 - v0)) for t in ts])
        i = int(np.argmin(vals))
        if not math.isfinite(vals[i]):
            continue
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, grid - 1)]
        ref = _golden(lambda t: rate(v0 + t * (v1 - v0)), lo, hi)
        best = min(best, vals[i], ref)
    return best


def truncated_minimizer(params: ModelParams, k_max: int) -> np.ndarray:
    """Zero of the truncated rate (coordinatewise fixed point)."""
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    w = params.weights
    m = params.model
    if m is Model.IDEAL:
        return w.q(ks, params.mu_eff)
    if m is Model.CMF:
        qb = float(w.q(ks, params.mu_eff).sum())
        K = params.a * params.beta * qb
        return w.q(ks, params.mu_eff) * (specfun.lambert_w(K, 0) / K if K > 0 else 1.0)
    if m is Model.PMF:
        sol = zero_pmf(params, k_max=k_max, truncated=True)
        return sol.xi.values[:k_max]
    raise DomainError("no truncated minimiser for HYL")
