import math
import logging
from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Sequence, Tuple
import numpy as np
from numpy.typing import NDArray, ArrayLike
from .stable_sampling import StableParams, WeightFn, AtomCloud, sample_cloud, stable_constant, as_points
from .kernels import Kernel, require_hypothesis
from .parallel import parallel_map

log = logging.getLogger(__name__)

CF_FREQUENCIES = (0.5, 1.0, 2.0)
CF_BAND_FACTOR = 4.0

@dataclass(frozen=True)
class BoxRegion:
    '''
    half-open box [t_lo, t_hi) x prod [x_lo_k, x_hi_k) in [0,T] x R^d, so
    that adjacent boxes are disjoint and z_measure is additive over them
    '''
    t_lo: float
    t_hi: float
    x_lo: Tuple[float, ...]
    x_hi: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'x_lo', tuple(float(v) for v in np.atleast_1d(self.x_lo)))
        object.__setattr__(self, 'x_hi', tuple(float(v) for v in np.atleast_1d(self.x_hi)))
        if not self.t_lo <= self.t_hi:
            raise ValueError(f"t_lo should be <= t_hi, got [{self.t_lo}, {self.t_hi}]")
        if len(self.x_lo) != len(self.x_hi):
            raise ValueError("x_lo and x_hi should have the same dimension")
        if any(lo > hi for lo, hi in zip(self.x_lo, self.x_hi)):
            raise ValueError(f"x_lo should be componentwise <= x_hi, got {self.x_lo} and {self.x_hi}")

    @property
    def dim(self) -> int:
        return len(self.x_lo)

    @property
    def lebesgue(self) -> float:
        return (self.t_hi - self.t_lo) * math.prod(hi - lo for lo, hi in zip(self.x_lo, self.x_hi))

    def contains(self, times: ArrayLike, positions: ArrayLike) -> NDArray:
        times = np.asarray(times, dtype=np.float64)
        x = as_points(positions, self.dim)
        lo = np.asarray(self.x_lo)
        hi = np.asarray(self.x_hi)
        in_time = (times >= self.t_lo) & (times < self.t_hi)
        in_space = np.all((x >= lo) & (x < hi), axis=-1)
        return in_time & in_space

def z_measure(cloud: AtomCloud, B: BoxRegion) -> float:
    '''Z(B) = T^{1/alpha} sum_i eps_i Gamma_i^{-1/alpha} phi(X_i)^{-1} 1_B(T_i, X_i)'''
    if B.dim != cloud.params.dim:
        raise ValueError(f"box dimension {B.dim} does not match the cloud dimension {cloud.params.dim}")
    if len(cloud) == 0:
        return 0.0
    mask = B.contains(cloud.times, cloud.positions)
    return math.fsum(cloud.prefactors()[mask])

def empirical_cf(samples: ArrayLike, u: float) -> complex:
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if samples.size == 0:
        raise ValueError("empirical_cf needs at least one sample")
    return complex(np.mean(np.exp(1j * u * samples)))

def stable_cf_target(alpha: float, leb: float, u: float) -> float:
    '''E exp(iuZ(B)) = exp(-m(B)|u|^alpha) with m(B) = Leb(B)/C_alpha'''
    return math.exp(-leb * abs(u)**alpha / stable_constant(alpha))

def additive_solution(cloud: AtomCloud, k: Kernel, t: float, x: ArrayLike) -> float:
    '''
    1 + sum_i v_i G_{t-T_i}(x - X_i): the mild solution with additive noise.
    Atoms at or after t drop out through the kernel.
    '''
    require_hypothesis(k, cloud.params.alpha)
    if len(cloud) == 0:
        return 1.0
    x = as_points(x, cloud.params.dim)
    g = k.green(t - cloud.times, x - cloud.positions)
    return 1.0 + math.fsum(cloud.active_prefactors() * g)

def _z_sample(seed: int, params: StableParams, w: WeightFn, B: BoxRegion, atoms: int) -> float:
    return z_measure(sample_cloud(atoms, int(seed), params, w), B)

def replicate_z_measure(
        params: StableParams,
        w: WeightFn,
        B: BoxRegion,
        atoms: int,
        replications: int,
        seed: int,
        num_workers: Optional[int] = None,
        progress: bool = False
    ) -> NDArray:
    '''independent truncated samples of Z(B), one fresh cloud each'''
    seeds = np.random.SeedSequence(seed).generate_state(replications, dtype=np.uint64)
    func = partial(_z_sample, params=params, w=w, B=B, atoms=atoms)
    samples = parallel_map(func, [int(s) for s in seeds], num_workers, progress, desc='Z(B) replications')
    return np.array(samples, dtype=np.float64)

@dataclass(frozen=True)
class CFCheck:
    u: float
    empirical_re: float
    empirical_im: float
    target: float
    band: float
    passed: bool

def compare_cf(samples: ArrayLike, alpha: float, leb: float, us: Sequence[float] = CF_FREQUENCIES) -> List[CFCheck]:
    '''real part of the empirical CF against the stable target, band 4/sqrt(N)'''
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    band = CF_BAND_FACTOR / math.sqrt(samples.size)
    checks = []
    for u in us:
        cf = empirical_cf(samples, u)
        target = stable_cf_target(alpha, leb, u)
        checks.append(CFCheck(
            u=float(u),
            empirical_re=cf.real,
            empirical_im=cf.imag,
            target=target,
            band=band,
            passed=abs(cf.real - target) <= band
        ))
    return checks

def validate_cf(
        params: StableParams,
        w: WeightFn,
        B: BoxRegion,
        atoms: int,
        replications: int,
        seed: int,
        us: Sequence[float] = CF_FREQUENCIES,
        num_workers: Optional[int] = None,
        progress: bool = False
    ) -> List[CFCheck]:
    samples = replicate_z_measure(params, w, B, atoms, replications, seed, num_workers, progress)
    checks = compare_cf(samples, params.alpha, B.lebesgue, us)
    for c in checks:
        log.info("CF u=%g: empirical %.5f target %.5f band %.5f", c.u, c.empirical_re, c.target, c.band)
    return checks

def write_cf_csv(filename: str, rows: Sequence[CFCheck]) -> None:
    table = np.array([[r.u, r.empirical_re, r.empirical_im, r.target, r.band] for r in rows], dtype=np.float64).reshape(-1, 5)
    np.savetxt(filename, table, fmt='%.17g', delimiter=',', header='u,empirical_re,empirical_im,target,band', comments='')
