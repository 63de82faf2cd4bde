import math
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import numpy as np
from numpy.typing import NDArray, ArrayLike
from scipy import integrate, special
from .errors import DomainError, NormalizationError, DivergenceError

log = logging.getLogger(__name__)

# substream ids: every random quantity of a cloud has its own counter-based
# stream keyed by (seed, stream id), so asking for more atoms never changes
# the atoms already drawn
SIGN_STREAM = 0
GAP_STREAM = 1
TIME_STREAM = 2
MIXTURE_STREAM = 3
RADIUS_STREAM = 4
DIRECTION_STREAM = 5

ALPHA_ONE_TOL = 1e-6
CSV_FLOAT_FORMAT = '%.17g'

def substream(seed: int, stream: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed should be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))

def stable_constant(alpha: float) -> float:
    '''
    C_alpha = (int_0^inf sin(x) x^-alpha dx)^-1

    The integral equals Gamma(1-alpha) cos(pi alpha/2) on (0,2)\\{1}. Close
    to alpha = 1 it is evaluated as Gamma(2-alpha) (pi/2) sinc((1-alpha)/2),
    the same function written without the removable singularity.
    '''
    if not 0 < alpha < 2:
        raise DomainError(f"alpha should be in (0,2), got {alpha}")
    eps = 1.0 - alpha
    if abs(eps) < ALPHA_ONE_TOL:
        integral = special.gamma(1.0 + eps) * (math.pi / 2) * np.sinc(eps / 2)
    else:
        integral = special.gamma(1.0 - alpha) * math.cos(math.pi * alpha / 2)
    return 1.0 / float(integral)

def stable_constant_quadrature(alpha: float) -> float:
    '''
    quadrature oracle for stable_constant: [0,1] with an algebraic weight
    x^(1-alpha) on sin(x)/x, [1,inf) with the Fourier-weight routine
    '''
    if not 0 < alpha < 2:
        raise DomainError(f"alpha should be in (0,2), got {alpha}")
    head, _ = integrate.quad(
        lambda x: np.sinc(x / math.pi),
        0, 1,
        weight='alg', wvar=(1.0 - alpha, 0.0),
        epsabs=1e-14, epsrel=1e-13
    )
    tail, _ = integrate.quad(
        lambda x: x**(-alpha),
        1, np.inf,
        weight='sin', wvar=1.0,
        epsabs=1e-13, limlst=200
    )
    return 1.0 / (head + tail)

def unit_ball_volume(dim: int) -> float:
    return math.pi**(dim / 2) / special.gamma(dim / 2 + 1)

def unit_sphere_area(dim: int) -> float:
    return 2 * math.pi**(dim / 2) / special.gamma(dim / 2)

@dataclass(frozen=True)
class StableParams:
    alpha: float
    horizon: float = 1.0
    dim: int = 1

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 2:
            raise DomainError(f"alpha should be in (0,2), got {self.alpha}")
        if not self.horizon > 0:
            raise DomainError(f"horizon should be positive, got {self.horizon}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim should be an integer >= 1, got {self.dim}")

@dataclass(frozen=True)
class WeightFn:
    '''
    phi(x) = c (1_{|x|<=1} + |x|^-delta 1_{|x|>1}), normalized so that
    int phi^alpha = 1, and 1/phi(x) <= c0 (1+|x|^delta) with c0 = 1/c
    '''
    delta: float
    c: float
    c0: float
    alpha: float
    dim: int

    @property
    def tail_exponent(self) -> float:
        '''delta*alpha - dim, the radial decay exponent of the tail mass'''
        return self.delta * self.alpha - self.dim

    @property
    def inner_mass(self) -> float:
        '''probability that a position drawn from phi^alpha lies in the unit ball'''
        return self.c**self.alpha * unit_ball_volume(self.dim)

    def __call__(self, x: ArrayLike) -> NDArray:
        return phi_eval(self, x)

def make_weight(delta: float, params: StableParams) -> WeightFn:

    if not delta > params.dim / params.alpha:
        raise NormalizationError(
            f"delta should exceed dim/alpha = {params.dim / params.alpha} for phi^alpha to be integrable, got {delta}"
        )
    mass = unit_ball_volume(params.dim) + unit_sphere_area(params.dim) / (delta * params.alpha - params.dim)
    c = mass**(-1.0 / params.alpha)
    return WeightFn(delta=delta, c=c, c0=1.0 / c, alpha=params.alpha, dim=params.dim)

def as_points(x: ArrayLike, dim: int) -> NDArray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        if dim != 1:
            raise ValueError(f"a scalar position is only valid in dimension 1, got dim={dim}")
        x = x[None]
    if x.shape[-1] != dim:
        raise ValueError(f"positions should have a trailing axis of length {dim}, got shape {x.shape}")
    return x

def phi_eval(w: WeightFn, x: ArrayLike) -> NDArray:
    r = np.linalg.norm(as_points(x, w.dim), axis=-1)
    outside = r > 1
    r_safe = np.where(outside, r, 1.0)
    return w.c * np.where(outside, r_safe**(-w.delta), 1.0)

def weight_mass(w: WeightFn) -> float:
    '''
    int_{R^d} phi^alpha computed radially. The tail r > 1 is mapped to
    u = 1/r in (0, 1], where the integrand behaves like u^(delta alpha - d - 1)
    and goes into an algebraic quadrature weight.
    '''
    area = unit_sphere_area(w.dim)
    radial = lambda r: float(phi_eval(w, np.r_[r, np.zeros(w.dim - 1)]))**w.alpha * r**(w.dim - 1)
    inner, _ = integrate.quad(radial, 0, 1, epsabs=0, epsrel=1e-12)
    power = w.tail_exponent - 1

    def tail(u):
        if u <= 0:
            # phi(1/u)^alpha u^(-2-power) -> c^alpha as u -> 0
            return w.c**w.alpha
        return radial(1.0 / u) * u**(-2.0 - power)

    outer, _ = integrate.quad(
        tail,
        0, 1,
        weight='alg', wvar=(power, 0.0),
        epsabs=0, epsrel=1e-12
    )
    return area * (inner + outer)

def sample_directions(rng: np.random.Generator, count: int, dim: int) -> NDArray:
    if dim == 1:
        return np.where(rng.random(count) < 0.5, -1.0, 1.0)[:, None]
    g = rng.standard_normal(size=(count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)

def sample_positions(
        w: WeightFn,
        count: int,
        mixture_rng: np.random.Generator,
        radius_rng: np.random.Generator,
        direction_rng: np.random.Generator
    ) -> NDArray:
    '''
    exact draws from the density phi^alpha: uniform on the unit ball with
    probability c^alpha Vol(B_1), otherwise radius (1-U)^(-1/(delta alpha - d))
    with a uniform direction
    '''
    inside = mixture_rng.random(count) < w.inner_mass
    u = radius_rng.random(count)
    radius = np.where(
        inside,
        u**(1.0 / w.dim),
        (1.0 - u)**(-1.0 / w.tail_exponent)
    )
    return radius[:, None] * sample_directions(direction_rng, count, w.dim)

@dataclass(frozen=True)
class Atom:
    sign: int
    gamma: float
    time: float
    pos: Tuple[float, ...]

@dataclass(frozen=True)
class AtomCloud:
    '''
    truncated LePage atoms, primary order = ascending gamma. Arrays are
    read-only; a cloud can be shared between threads and processes.
    '''
    signs: NDArray
    gammas: NDArray
    times: NDArray
    positions: NDArray
    time_order: NDArray
    params: StableParams
    weight: WeightFn
    seed: int = 0
    _prefactors: NDArray = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return self.gammas.shape[0]

    @property
    def atoms(self) -> List[Atom]:
        return [
            Atom(int(s), float(g), float(t), tuple(float(v) for v in x))
            for s, g, t, x in zip(self.signs, self.gammas, self.times, self.positions)
        ]

    def prefactors(self) -> NDArray:
        '''v_i = T^{1/alpha} eps_i Gamma_i^{-1/alpha} / phi(X_i)'''
        return self._prefactors

    def active_prefactors(self) -> NDArray:
        '''v_i 1{T_i > 0}; chains start strictly after time 0'''
        return np.where(self.times > 0, self._prefactors, 0.0)

    def head(self, k: int) -> 'AtomCloud':
        if not 0 <= k <= len(self):
            raise ValueError(f"k should be between 0 and {len(self)}, got {k}")
        return make_cloud(
            self.signs[:k], self.gammas[:k], self.times[:k], self.positions[:k],
            self.params, self.weight, self.seed
        )

    def to_csv(self, filename: str) -> None:
        header = ','.join(['index', 'sign', 'gamma', 'time'] + [f'x{i+1}' for i in range(self.params.dim)])
        table = np.column_stack((
            np.arange(len(self), dtype=np.float64),
            self.signs.astype(np.float64),
            self.gammas,
            self.times,
            self.positions
        ))
        fmt = ['%d', '%d'] + [CSV_FLOAT_FORMAT] * (2 + self.params.dim)
        np.savetxt(filename, table, fmt=fmt, delimiter=',', header=header, comments='')

def _freeze(a: NDArray) -> NDArray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a

def make_cloud(
        signs: ArrayLike,
        gammas: ArrayLike,
        times: ArrayLike,
        positions: ArrayLike,
        params: StableParams,
        w: WeightFn,
        seed: int = 0
    ) -> AtomCloud:
    signs = np.asarray(signs, dtype=np.int8).reshape(-1)
    gammas = np.asarray(gammas, dtype=np.float64).reshape(-1)
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, params.dim)
    count = gammas.shape[0]

    if not (signs.shape[0] == times.shape[0] == positions.shape[0] == count):
        raise ValueError("signs, gammas, times and positions should have the same length")
    if not np.all(np.abs(signs) == 1):
        raise ValueError("signs should be +1 or -1")
    if count > 0 and not gammas[0] > 0:
        raise ValueError("gamma values should be positive")
    if not np.all(np.diff(gammas) > 0):
        raise ValueError("gamma values should be strictly increasing")
    if not np.all((times >= 0) & (times <= params.horizon)):
        raise ValueError(f"times should lie in [0, {params.horizon}]")

    # stable sort: atoms with equal times keep their gamma order
    time_order = np.argsort(times, kind='stable')
    prefactors = params.horizon**(1.0 / params.alpha) * signs * gammas**(-1.0 / params.alpha) / phi_eval(w, positions)

    return AtomCloud(
        signs=_freeze(signs),
        gammas=_freeze(gammas),
        times=_freeze(times),
        positions=_freeze(positions),
        time_order=_freeze(time_order),
        params=params,
        weight=w,
        seed=seed,
        _prefactors=_freeze(prefactors)
    )

def sample_cloud(count: int, seed: int, params: StableParams, w: WeightFn) -> AtomCloud:
    '''
    draw the first count atoms of the LePage series. Each stream is a
    deterministic function of (seed, stream id), so sample_cloud(k, seed)
    equals sample_cloud(n, seed).head(k) for k <= n.
    '''
    if count < 0:
        raise ValueError(f"count should be >= 0, got {count}")

    signs = np.where(substream(seed, SIGN_STREAM).random(count) < 0.5, -1, 1)
    gammas = np.cumsum(substream(seed, GAP_STREAM).standard_exponential(count))
    # T (1-U) lies in (0, T]: no atom sits exactly at time 0
    times = params.horizon * (1.0 - substream(seed, TIME_STREAM).random(count))
    positions = sample_positions(
        w, count,
        substream(seed, MIXTURE_STREAM),
        substream(seed, RADIUS_STREAM),
        substream(seed, DIRECTION_STREAM)
    )
    log.debug("sampled %d atoms with seed %d", count, seed)
    return make_cloud(signs, gammas, times, positions, params, w, seed)

def read_cloud_csv(filename: str, params: StableParams, w: WeightFn, seed: int = 0) -> AtomCloud:
    table = np.loadtxt(filename, delimiter=',', skiprows=1, ndmin=2)
    if table.shape[0] == 0:
        return make_cloud([], [], [], np.empty((0, params.dim)), params, w, seed)
    if table.shape[1] != 4 + params.dim:
        raise ValueError(f"{filename} should have {4 + params.dim} columns, got {table.shape[1]}")
    return make_cloud(table[:, 1], table[:, 2], table[:, 3], table[:, 4:], params, w, seed)

def gamma_power_sum(cloud: AtomCloud, p: float, tail: bool = True) -> float:
    '''
    sum_j Gamma_j^{-p/alpha} over the cloud, plus (optionally) the analytic
    tail int_{Gamma_J}^inf s^{-p/alpha} ds standing in for the missing atoms
    '''
    q = p / cloud.params.alpha
    if not q > 1:
        raise DivergenceError(f"p should exceed alpha = {cloud.params.alpha} for the series to converge, got {p}")
    if len(cloud) == 0:
        return 0.0
    total = math.fsum(cloud.gammas**(-q))
    if tail:
        total += cloud.gammas[-1]**(1.0 - q) / (q - 1.0)
    return total
