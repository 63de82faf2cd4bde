'''
Numerical checks of the convergence conditions of the chaos expansion.

K_n^(p)(t,x) is the n-fold weighted L^p mass of the chain kernel f_n,

    K_n^(p)(t,x) = int_{0<t_1<...<t_n<t} int f_n(...,t,x)^p prod_k phi(x_k)^{alpha-p} dx dt,

and the expansion converges when the series

    sum_n (T^{(p/alpha-1)n} K_n^(p)(t,x))^{1/2} (sum_j Gamma_j^{-p/alpha})^{n/2}

(and its integrated counterpart) is finite. The closed-form bounds on K_n^(p)
are evaluated in log space since they involve Gamma(an+1) for n up to n_max.
'''

import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import List, Optional, Tuple
import numpy as np
from numpy.typing import NDArray, ArrayLike
from scipy import integrate, special
from .errors import DomainError, DivergenceError, SamplingError
from .stable_sampling import StableParams, WeightFn, AtomCloud, sample_cloud, sample_positions, gamma_power_sum, as_points
from .kernels import Kernel, KernelKind, WaveKernel, space_time_lp_mass, heat_moment_constant
from .chaos_expansion import chain_values, tail_reference
from .noise_field import additive_solution
from .parallel import parallel_map, chunk_ranges, tree_reduce

log = logging.getLogger(__name__)

RATIO_MARGIN = 0.05
FACTORIAL_MARGIN = 0.05
MIN_FIT_TERMS = 6
MC_CHUNKS = 16
MAX_BAD_FRACTION = 1e-3

class Verdict(Enum):
    CONVERGES = 'converges'
    DIVERGES = 'diverges'
    INCONCLUSIVE = 'inconclusive'

    # this is useful for argparse
    def __str__(self):
        return self.name

@dataclass
class ConvergenceReport:
    p: float
    terms: List[Tuple[int, float]]
    verdict: Verdict
    ratio_estimate: float
    notes: str = ''
    log_terms: List[float] = field(default_factory=list, repr=False)

    def to_text(self) -> str:
        lines = [f"p = {self.p:.17g}", "n,term,ratio"]
        previous = None
        for (n, value), log_value in zip(self.terms, self.log_terms):
            ratio = '' if previous is None else f"{math.exp(log_value - previous):.6g}"
            lines.append(f"{n},{value:.6e},{ratio}")
            previous = log_value
        if self.notes:
            lines.append(f"notes: {self.notes}")
        lines.append(f"verdict: {self.verdict.value} (ratio estimate {self.ratio_estimate:.6g})")
        return '\n'.join(lines) + '\n'

@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    @property
    def empty(self) -> bool:
        return not self.hi - self.lo > 1e-12

    @property
    def midpoint(self) -> float:
        if self.empty:
            raise ValueError("an empty interval has no midpoint")
        return (self.lo + self.hi) / 2

    def __contains__(self, p: float) -> bool:
        if self.empty:
            return False
        above = p >= self.lo if self.lo_closed else p > self.lo
        below = p <= self.hi if self.hi_closed else p < self.hi
        return above and below

    def __str__(self) -> str:
        if self.empty:
            return 'empty'
        return f"{'[' if self.lo_closed else '('}{self.lo:g}, {self.hi:g}{']' if self.hi_closed else ')'}"

EMPTY = Interval(0.0, 0.0)

def admissible_p_range(k: Kernel, alpha: float, delta: float) -> Interval:
    '''
    p values for which the K_n bounds give a convergent expansion.
    heat: alpha < p <= 2, p < 1 + 2/d and delta (p - alpha) < d (1-p) + 2
    wave: (alpha, 2] in d = 1, (alpha, 2) in d = 2
    '''
    if not k.hypothesis_holds(alpha):
        return EMPTY
    if k.kind == KernelKind.WAVE:
        return Interval(alpha, 2.0, hi_closed=(k.dim == 1))
    d = k.dim
    others = min(1 + 2 / d, (d + 2 + delta * alpha) / (delta + d))
    hi = min(2.0, others)
    interval = Interval(alpha, hi, hi_closed=(2.0 < others))
    return EMPTY if interval.empty else interval

def _check_p(k: Kernel, w: WeightFn, p: float) -> None:
    if not p > w.alpha:
        raise DivergenceError(f"p should exceed alpha = {w.alpha}, got {p}")
    k.check_p(p)

# K_n^(p) by Monte Carlo

class Proposal(Enum):
    '''how k_np_montecarlo draws chain positions'''
    WEIGHT = 'weight'
    KERNEL = 'kernel'

    def __str__(self):
        return self.name

def _unit_steps(k: Kernel, p: float, rng: np.random.Generator, count: int, n: int) -> NDArray:
    '''displacements over a unit time gap with density proportional to G_1^p'''
    if k.kind == KernelKind.HEAT:
        return rng.standard_normal((count, n, k.dim)) / math.sqrt(p)
    if k.dim == 1:
        return rng.uniform(-1.0, 1.0, (count, n, 1))
    # P(R > r) = (1 - r^2)^(1 - p/2) on the unit disc
    radius = np.sqrt(1.0 - rng.random((count, n))**(2.0 / (2.0 - p)))
    angle = 2 * math.pi * rng.random((count, n))
    return radius[..., None] * np.stack((np.cos(angle), np.sin(angle)), axis=-1)

def _chunk_stats(
        chunk: int,
        k: Kernel,
        w: WeightFn,
        n: int,
        p: float,
        t: float,
        x: NDArray,
        pairs: int,
        seed: int,
        proposal: Proposal
    ) -> Tuple[int, float, float, int]:
    '''(count, sum, sum of squares, rejected draws) of antithetic pair means'''
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))
    scale = t**n / math.factorial(n)

    def draw_weight(count):
        u = rng.random((count, n))
        positions = sample_positions(w, count * n, rng, rng, rng).reshape(count, n, k.dim)
        weight = np.prod(w(positions)**(-p), axis=1)
        values = []
        for uu in (u, 1.0 - u):
            times = t * np.sort(uu, axis=1)
            values.append(scale * chain_values(k, times, positions, t, x)**p * weight)
        return (values[0] + values[1]) / 2

    def draw_kernel(count):
        # walk back from (t, x): each step has density G_gap^p / int G_gap^p
        u = rng.random((count, n))
        steps = _unit_steps(k, p, rng, count, n)
        values = []
        for uu in (u, 1.0 - u):
            times = t * np.sort(uu, axis=1)
            gaps = np.diff(np.concatenate((times, np.full((count, 1), t)), axis=1), axis=1)
            reach = np.sqrt(gaps) if k.kind == KernelKind.HEAT else gaps
            moves = reach[..., None] * steps
            positions = x - np.flip(np.cumsum(np.flip(moves, axis=1), axis=1), axis=1)
            coef = k.coefficients(p)
            mass = coef.constant * coef.exponent * gaps**(coef.exponent - 1)
            values.append(scale * np.prod(mass, axis=1) * np.prod(w(positions)**(w.alpha - p), axis=1))
        return (values[0] + values[1]) / 2

    draw = draw_kernel if proposal == Proposal.KERNEL else draw_weight
    collected = np.empty(0)
    rejected = 0
    remaining = pairs
    while remaining > 0:
        with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
            batch = draw(remaining)
        good = np.isfinite(batch)
        rejected += int(np.count_nonzero(~good))
        if rejected > MAX_BAD_FRACTION * pairs + 1:
            break
        collected = np.concatenate((collected, batch[good]))
        remaining = pairs - collected.size
    return collected.size, math.fsum(collected), math.fsum(collected**2), rejected

def _merge_stats(a, b):
    return a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]

def k_np_montecarlo(
        k: Kernel,
        w: WeightFn,
        n: int,
        p: float,
        t: float,
        x: ArrayLike,
        samples: int = 100_000,
        seed: int = 0,
        num_workers: Optional[int] = None,
        proposal: Proposal = Proposal.WEIGHT
    ) -> Tuple[float, float]:
    '''
    estimate of K_n^(p)(t,x) and its standard error. Times are sorted
    uniforms on [0,t] with antithetic partners 1-U.

    With Proposal.WEIGHT positions are drawn from phi^alpha and each draw
    contributes (t^n/n!) f_n^p prod phi^{-p}. With Proposal.KERNEL the chain
    is walked back from (t,x), every step drawn from G_gap^p normalized by
    its mass m(gap), and a draw contributes (t^n/n!) prod m(gap) prod phi^{alpha-p}.
    The kernel walk stays inside the nested light cones of wave chains.

    The work is split into a fixed number of seeded chunks merged by a fixed
    tree, so the result does not depend on num_workers.
    '''
    if n < 1:
        raise ValueError(f"n should be >= 1, got {n}")
    if samples < 100:
        raise ValueError(f"samples should be >= 100, got {samples}")
    if not t > 0:
        raise DomainError(f"t should be positive, got {t}")
    proposal = Proposal(proposal)
    if proposal == Proposal.KERNEL:
        k.check_p(p)
    x = as_points(x, k.dim).reshape(k.dim)

    total_pairs = (samples + 1) // 2
    sizes = [len(r) for r in chunk_ranges(total_pairs, MC_CHUNKS)]
    work = [c for c in range(MC_CHUNKS) if sizes[c] > 0]
    func = partial(_sized_chunk, sizes=sizes, k=k, w=w, n=n, p=p, t=t, x=x, seed=seed, proposal=proposal)
    results = parallel_map(func, work, num_workers)
    count, total, total_sq, rejected = tree_reduce(results, _merge_stats)
    if rejected > MAX_BAD_FRACTION * total_pairs or count < total_pairs:
        raise SamplingError(f"{rejected} of {total_pairs} Monte Carlo draws were not finite")
    if rejected:
        log.warning("resampled %d non-finite K_n draws", rejected)

    mean = total / count
    var = max(total_sq - count * mean * mean, 0.0) / (count - 1)
    return mean, math.sqrt(var / count)

def _sized_chunk(chunk: int, sizes: List[int], **kwargs) -> Tuple[int, float, float, int]:
    return _chunk_stats(chunk, pairs=sizes[chunk], **kwargs)

# K_n^(p) closed-form bounds

def _log_sum(*logs: float) -> float:
    return float(np.logaddexp.reduce(np.array(logs, dtype=np.float64)))

def _log_pow(base: float, exponent: float) -> float:
    '''log(base^exponent) with 0^0 = 1 and 0^e = 0 for e > 0'''
    if exponent == 0:
        return 0.0
    if base == 0:
        return -math.inf
    return exponent * math.log(base)

def heat_bound_constant(p: float, alpha: float, delta: float, d: int) -> float:
    '''C_{eta,p,d} = 3 Kbar (2^{eta-1} v 1) d^eta [(2/p)^{eta/2} v 1] Gamma(e+1)'''
    eta = delta * (p - alpha)
    e = d * (1 - p) / 2
    kbar = (2 * math.pi)**e * p**(-d / 2)
    return (
        3 * kbar
        * max(2**(eta - 1), 1.0)
        * d**eta
        * max((2 / p)**(eta / 2), 1.0)
        * special.gamma(e + 1)
    )

def wave_bound_constant(p: float, alpha: float, delta: float, d: int) -> float:
    '''3 (2^{eta-1} v 1) C_p Gamma(a+1)'''
    eta = delta * (p - alpha)
    coef = WaveKernel(d).coefficients(p)
    return 3 * max(2**(eta - 1), 1.0) * coef.constant * special.gamma(coef.exponent + 1)

def log_k_np_bound(k: Kernel, w: WeightFn, n: int, p: float, t: float, x: ArrayLike) -> float:
    _check_p(k, w, p)
    if n < 1:
        raise ValueError(f"n should be >= 1, got {n}")
    if not t > 0:
        raise DomainError(f"t should be positive, got {t}")
    r = float(np.linalg.norm(as_points(x, k.dim)))
    eta = w.delta * (p - w.alpha)
    head = n * (p - w.alpha) * math.log(w.c0)

    if k.kind == KernelKind.HEAT:
        e1 = k.dim * (1 - p) / 2 + 1
        constant = heat_bound_constant(p, w.alpha, w.delta, k.dim)
        spatial = _log_sum(
            0.0,
            _log_pow(r, n * eta),
            n * eta / 2 * math.log(t) + special.gammaln((1 + n * eta) / 2)
        )
        return head + n * math.log(constant) + spatial + n * e1 * math.log(t) - special.gammaln(n * e1 + 1)

    a = k.coefficients(p).exponent
    constant = wave_bound_constant(p, w.alpha, w.delta, k.dim)
    spatial = _log_sum(0.0, _log_pow(r, n * eta), n * eta * math.log(t))
    return head + n * math.log(constant) + spatial + a * n * math.log(t) - special.gammaln(a * n + 1)

def k_np_bound(k: Kernel, w: WeightFn, n: int, p: float, t: float, x: ArrayLike) -> float:
    '''closed-form upper bound on K_n^(p)(t,x), eta = delta (p - alpha)'''
    return math.exp(log_k_np_bound(k, w, n, p, t, x))

# K_n^(p) by quadrature, wave d = 1

def k_np_quadrature(k: Kernel, w: WeightFn, n: int, p: float, t: float, x: ArrayLike) -> float:
    '''
    deterministic K_n^(p) for the wave kernel in d = 1 and n in {1, 2}.
    With q = alpha - p, phi^q has the closed antiderivatives F (odd) and
    H (even, H' = F), which reduce the inner space-time integrals to
    evaluations of F and H.
    '''
    if not (k.kind == KernelKind.WAVE and k.dim == 1):
        raise ValueError(f"k_np_quadrature handles the wave kernel in d = 1 only, got {k!r}")
    if n not in (1, 2):
        raise ValueError(f"k_np_quadrature handles n = 1 and n = 2, got {n}")
    x0 = float(as_points(x, 1).reshape(-1)[0])
    q = w.alpha - p
    beta = 1 - w.delta * q
    if beta == 0 or beta == -1:
        raise ValueError(f"delta (alpha - p) = {1 - beta} needs the logarithmic antiderivatives, not implemented")
    cq = w.c**q

    def F(y):
        s = math.copysign(1.0, y)
        y = abs(y)
        if y <= 1:
            return s * cq * y
        return s * cq * (1 + (y**beta - 1) / beta)

    def H(y):
        y = abs(y)
        if y <= 1:
            return cq * y * y / 2
        return cq * (0.5 + (1 - 1 / beta) * (y - 1) + (y**(beta + 1) - 1) / (beta * (beta + 1)))

    def phi_q(y):
        y = abs(y)
        return cq if y <= 1 else cq * y**(-w.delta * q)

    opts = dict(epsabs=0.0, epsrel=1e-10)
    if n == 1:
        value, _ = integrate.quad(lambda s: F(x0 + (t - s)) - F(x0 - (t - s)), 0, t, limit=200, **opts)
        return 2**(-p) * value

    value, _ = integrate.dblquad(
        lambda x2, t2: phi_q(x2) * (H(x2 + t2) + H(x2 - t2) - 2 * H(x2)),
        0, t,
        lambda t2: x0 - (t - t2),
        lambda t2: x0 + (t - t2),
        **opts
    )
    return 2**(-2 * p) * value

# series verdicts

def _fit_verdict(ns: NDArray, logs: NDArray) -> Tuple[Verdict, float, str]:
    '''
    decide the fate of sum_n exp(logs) from its tail. The log-terms are fit
    by b0 + b1 n + b2 ln n + b3 ln n!; a clearly negative b3 is factorial
    decay, a clearly positive one factorial growth, otherwise the geometric
    ratio e^{b1} decides.
    '''
    last_ratio = math.exp(logs[-1] - logs[-2])
    if ns.size < MIN_FIT_TERMS:
        if last_ratio < 1 - RATIO_MARGIN:
            return Verdict.CONVERGES, last_ratio, 'few terms, last ratio'
        if last_ratio > 1 + RATIO_MARGIN:
            return Verdict.DIVERGES, last_ratio, 'few terms, last ratio'
        return Verdict.INCONCLUSIVE, last_ratio, 'few terms, last ratio'

    window = max(MIN_FIT_TERMS, ns.size // 2)
    n_fit = ns[-window:].astype(np.float64)
    design = np.column_stack((np.ones_like(n_fit), n_fit, np.log(n_fit), special.gammaln(n_fit + 1)))
    coef, *_ = np.linalg.lstsq(design, logs[-window:], rcond=None)
    b1, b3 = coef[1], coef[3]
    notes = f"fit over n >= {int(n_fit[0])}: geometric ratio {math.exp(b1):.4g}, factorial exponent {b3:.4g}"
    if b3 < -FACTORIAL_MARGIN:
        return Verdict.CONVERGES, last_ratio, notes
    if b3 > FACTORIAL_MARGIN:
        return Verdict.DIVERGES, last_ratio, notes
    if math.exp(b1) < 1 - RATIO_MARGIN:
        return Verdict.CONVERGES, last_ratio, notes
    if math.exp(b1) > 1 + RATIO_MARGIN:
        return Verdict.DIVERGES, last_ratio, notes
    return Verdict.INCONCLUSIVE, last_ratio, notes

def _report(p: float, logs: List[float]) -> ConvergenceReport:
    ns = np.arange(1, len(logs) + 1)
    logs_arr = np.array(logs, dtype=np.float64)
    terms = [(int(n), math.exp(v)) for n, v in zip(ns, logs_arr)]
    if not np.all(np.isfinite(logs_arr)):
        return ConvergenceReport(p, terms, Verdict.INCONCLUSIVE, 0.0, 'non-finite terms', list(logs))
    verdict, ratio, notes = _fit_verdict(ns, logs_arr)
    return ConvergenceReport(p, terms, verdict, ratio, notes, list(logs))

def _check_report_args(k: Kernel, w: WeightFn, cloud: AtomCloud, p: float, n_max: int) -> None:
    if n_max < 2:
        raise ValueError(f"n_max should be >= 2, got {n_max}")
    if not p > w.alpha:
        raise DivergenceError(f"p should exceed alpha = {w.alpha}, got {p}")
    admissible = admissible_p_range(k, w.alpha, w.delta)
    if p not in admissible:
        raise DomainError(f"p = {p} lies outside the admissible range {admissible}")
    if cloud.params.alpha != w.alpha:
        raise ValueError("cloud and weight function have different alpha")

def assumption_a2_report(k: Kernel, w: WeightFn, cloud: AtomCloud, p: float, t: float, x: ArrayLike, n_max: int = 30) -> ConvergenceReport:
    '''
    terms (T^{(p/alpha-1)n} K_n)^{1/2} S^{n/2} with K_n replaced by
    k_np_bound and S = gamma_power_sum(cloud, p)
    '''
    _check_report_args(k, w, cloud, p, n_max)
    log_s = math.log(gamma_power_sum(cloud, p))
    log_horizon = math.log(cloud.params.horizon)
    logs = []
    for n in range(1, n_max + 1):
        inner = (p / w.alpha - 1) * n * log_horizon + log_k_np_bound(k, w, n, p, t, x)
        logs.append(inner / 2 + n / 2 * log_s)
    report = _report(p, logs)
    log.info("A2 report at p=%g: %s", p, report.verdict)
    return report

def assumption_a3_report(k: Kernel, w: WeightFn, cloud: AtomCloud, p: float, t: float, x: ArrayLike, n_max: int = 30) -> ConvergenceReport:
    '''
    terms (T^{(p/alpha-1)n} int_0^t int G^alpha_{t-s}(x-y) K_n(s,y) dy ds)^{min(alpha,1)/p} S^{n min(alpha,1)/p}.
    K_n(s,y) is bounded with s <= t, after which the space-time integral of
    G^alpha against the bound is closed form: the unit and time terms give
    space_time_lp_mass(alpha), the |y|^{n eta} term goes through
    heat_moment_bound (heat) or |y| <= |x| + t on the light cone (wave).
    '''
    _check_report_args(k, w, cloud, p, n_max)
    alpha = w.alpha
    exponent = min(alpha, 1.0) / p
    log_s = math.log(gamma_power_sum(cloud, p))
    log_horizon = math.log(cloud.params.horizon)
    r = float(np.linalg.norm(as_points(x, k.dim)))
    eta = w.delta * (p - alpha)
    log_mass = math.log(space_time_lp_mass(k, alpha, t))
    head = (p - alpha) * math.log(w.c0)

    logs = []
    for n in range(1, n_max + 1):
        g = n * eta
        if k.kind == KernelKind.HEAT:
            e1 = k.dim * (1 - p) / 2 + 1
            constant = heat_bound_constant(p, alpha, w.delta, k.dim)
            moment = heat_moment_constant(g, alpha, k.dim) / k.coefficients(alpha).constant
            inner = _log_sum(
                0.0,
                math.log(moment) + _log_sum(_log_pow(r, g), g / 2 * math.log(t)),
                special.gammaln((1 + g) / 2) + g / 2 * math.log(t)
            )
            time_part = n * e1 * math.log(t) - special.gammaln(n * e1 + 1)
        else:
            a = k.coefficients(p).exponent
            constant = wave_bound_constant(p, alpha, w.delta, k.dim)
            inner = _log_sum(
                0.0,
                max(g - 1, 0.0) * math.log(2) + _log_sum(_log_pow(r, g), g * math.log(t)),
                g * math.log(t)
            )
            time_part = a * n * math.log(t) - special.gammaln(a * n + 1)
        bracket = (
            n * head
            + n * math.log(constant)
            + (p / alpha - 1) * n * log_horizon
            + time_part
            + log_mass
            + inner
            + n * log_s
        )
        logs.append(exponent * bracket)
    report = _report(p, logs)
    log.info("A3 report at p=%g: %s", p, report.verdict)
    return report

def stirling_sandwich(a: float, b: float, n_max: int) -> Tuple[float, float]:
    '''
    smallest C_lower, C_upper >= 1 with
        C_lower^{-n} (n!)^a <= Gamma(an+1+b) <= C_upper^n (n!)^a,  n = 1..n_max
    '''
    if not a > 0:
        raise DomainError(f"a should be positive, got {a}")
    if n_max < 1:
        raise ValueError(f"n_max should be >= 1, got {n_max}")
    if not a + 1 + b > 0:
        raise DomainError(f"Gamma(an+1+b) needs a+1+b > 0, got a={a}, b={b}")
    n = np.arange(1, n_max + 1, dtype=np.float64)
    r = special.gammaln(a * n + 1 + b) - a * special.gammaln(n + 1)
    c_upper = math.exp(max(0.0, float(np.max(r / n))))
    c_lower = math.exp(max(0.0, float(np.max(-r / n))))
    return c_lower, c_upper

# tail of the first-order integral

@dataclass(frozen=True)
class TailCheck:
    lam: float
    empirical: float
    reference: float
    ratio: float
    passed: bool

def _first_order_sample(seed: int, params: StableParams, w: WeightFn, k: Kernel, t: float, x: NDArray, atoms: int) -> float:
    return additive_solution(sample_cloud(atoms, int(seed), params, w), k, t, x) - 1.0

def tail_diagnostic(
        params: StableParams,
        w: WeightFn,
        k: Kernel,
        t: float,
        x: ArrayLike,
        replications: int = 100_000,
        atoms: int = 2000,
        seed: int = 0,
        quantile: float = 0.999,
        num_workers: Optional[int] = None,
        progress: bool = False
    ) -> TailCheck:
    '''
    P(|I_1| > lambda) at the empirical quantile lambda of |I_1| against
    ||f_1||^alpha lambda^{-alpha}, with ||f_1||^alpha = space_time_lp_mass(alpha)
    '''
    x = as_points(x, k.dim).reshape(k.dim)
    seeds = np.random.SeedSequence(seed).generate_state(replications, dtype=np.uint64)
    func = partial(_first_order_sample, params=params, w=w, k=k, t=t, x=x, atoms=atoms)
    samples = np.abs(np.array(parallel_map(func, [int(s) for s in seeds], num_workers, progress, desc='I_1 replications')))
    lam = float(np.quantile(samples, quantile))
    empirical = float(np.mean(samples > lam))
    reference = tail_reference(1, params.alpha, space_time_lp_mass(k, params.alpha, t), lam)
    ratio = empirical / reference
    log.info("tail at lambda=%.4g: empirical %.4g reference %.4g", lam, empirical, reference)
    return TailCheck(lam=lam, empirical=empirical, reference=reference, ratio=ratio, passed=0.5 <= ratio <= 2.0)
