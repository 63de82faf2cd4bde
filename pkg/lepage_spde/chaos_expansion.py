import math
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import List, Optional, Sequence, Tuple
import numpy as np
from numpy.typing import NDArray, ArrayLike
from scipy import special
from .errors import EnumerationSizeError, DomainError
from .stable_sampling import AtomCloud, as_points
from .kernels import Kernel, require_hypothesis
from .noise_field import additive_solution
from .parallel import parallel_map

log = logging.getLogger(__name__)

MAX_ENUMERATION = 10**7
ENUMERATION_BATCH = 100_000

class ChaosMode(Enum):
    ADDITIVE = 'additive'
    MULTIPLICATIVE = 'multiplicative'

    # this is useful for argparse
    def __str__(self):
        return self.name

    @classmethod
    def parse(cls, value: str) -> 'ChaosMode':
        try:
            return cls[value.strip().upper()]
        except KeyError:
            raise ValueError(f"Valid modes are {', '.join(m.value for m in cls)}, got {value!r}")

@dataclass(frozen=True)
class ChaosConfig:
    '''max_order = None sums every order of the chaos expansion'''
    max_order: Optional[int] = None
    cloud_size: int = 1000
    mode: ChaosMode = ChaosMode.MULTIPLICATIVE

    def __post_init__(self) -> None:
        if self.max_order is not None and self.max_order < 0:
            raise ValueError(f"max_order should be >= 0, got {self.max_order}")
        if self.cloud_size < 0:
            raise ValueError(f"cloud_size should be >= 0, got {self.cloud_size}")

@dataclass(frozen=True)
class ChainWeights:
    '''
    atoms in time order with prefactors v_i and accumulated weights W_i.
    W_i only depends on atoms strictly earlier in time. orders[m, i] is the
    order m+1 part of W_i when the expansion is truncated.
    '''
    kernel: Kernel
    times: NDArray
    positions: NDArray
    prefactors: NDArray
    weights: NDArray
    orders: Optional[NDArray] = None
    max_order: Optional[int] = None

    def __len__(self) -> int:
        return self.times.shape[0]

def _freeze(a: Optional[NDArray]) -> Optional[NDArray]:
    if a is not None:
        a.setflags(write=False)
    return a

def kernel_chain(k: Kernel, points: Sequence[Tuple[float, ArrayLike]], t: float, x: ArrayLike) -> float:
    '''
    f_n(t_1,x_1,...,t_n,x_n,t,x) = G_{t-t_n}(x-x_n) ... G_{t_2-t_1}(x_2-x_1)
    times the indicator 0 < t_1 < ... < t_n < t
    '''
    if len(points) == 0:
        return 1.0
    times = np.array([p[0] for p in points], dtype=np.float64)
    positions = np.stack([as_points(p[1], k.dim).reshape(k.dim) for p in points])
    return float(chain_values(k, times[None, :], positions[None, :, :], t, x)[0])

def chain_values(k: Kernel, times: ArrayLike, positions: ArrayLike, t: float, x: ArrayLike) -> NDArray:
    '''kernel_chain for S chains at once: times (S, n), positions (S, n, d)'''
    times = np.asarray(times, dtype=np.float64)
    positions = np.asarray(positions, dtype=np.float64).reshape(times.shape + (k.dim,))
    if times.shape[1] == 0:
        return np.ones(times.shape[0])
    x = as_points(x, k.dim).reshape(k.dim)
    count = times.shape[0]
    t_all = np.concatenate((times, np.full((count, 1), float(t))), axis=1)
    x_all = np.concatenate((positions, np.broadcast_to(x, (count, 1, k.dim))), axis=1)
    ordered = (t_all[:, 0] > 0) & np.all(np.diff(t_all, axis=1) > 0, axis=1)
    factors = k.green(np.diff(t_all, axis=1), np.diff(x_all, axis=1))
    return np.where(ordered, np.prod(factors, axis=1), 0.0)

def multiple_integral_bruteforce(cloud: AtomCloud, k: Kernel, n: int, t: float, x: ArrayLike) -> float:
    '''
    order-n term of the expansion by enumerating all n-subsets of atoms.
    Only the time-sorted arrangement of a subset survives the ordering
    indicator, so every subset is evaluated once.
    '''
    if n < 1:
        raise ValueError(f"n should be >= 1, got {n}")
    count = len(cloud)
    if n > count:
        return 0.0
    subsets = math.comb(count, n)
    if subsets > MAX_ENUMERATION:
        raise EnumerationSizeError(f"C({count}, {n}) = {subsets} subsets exceeds the limit of {MAX_ENUMERATION}")

    order = np.asarray(cloud.time_order)
    times = cloud.times[order]
    positions = cloud.positions[order]
    v = cloud.prefactors()[order]

    terms = []
    combos = itertools.combinations(range(count), n)
    while True:
        batch = list(itertools.islice(combos, ENUMERATION_BATCH))
        if not batch:
            break
        idx = np.array(batch, dtype=np.intp)
        chains = chain_values(k, times[idx], positions[idx], t, x)
        terms.append(np.prod(v[idx], axis=1) * chains)
    return math.fsum(np.concatenate(terms))

def chain_weights(cloud: AtomCloud, k: Kernel, max_order: Optional[int] = None) -> ChainWeights:
    '''
    one O(J^2) pass in time order:
        A_i = v_i (1 + sum_{T_j < T_i} G_{T_i-T_j}(X_i-X_j) A_j)
    With a finite max_order N < J the orders are carried separately,
        A_i^(1) = v_i,  A_i^(m) = v_i sum_j G_ij A_j^(m-1)
    and W_i = sum_{m <= N} A_i^(m).
    '''
    order = np.asarray(cloud.time_order)
    times = np.array(cloud.times[order])
    positions = np.array(cloud.positions[order])
    v = np.array(cloud.active_prefactors()[order])
    count = times.shape[0]

    if max_order is not None and max_order < 0:
        raise ValueError(f"max_order should be >= 0, got {max_order}")
    # no chain is longer than the number of atoms
    resolved = max_order is not None and max_order < count

    if not resolved:
        weights = np.zeros(count)
        for i in range(count):
            g = k.green(times[i] - times[:i], positions[i] - positions[:i])
            weights[i] = v[i] * (1.0 + math.fsum(g * weights[:i]))
        orders = None
    else:
        orders = np.zeros((max_order, count))
        if max_order > 0:
            orders[0] = v
        for i in range(count):
            if max_order < 2:
                break
            g = k.green(times[i] - times[:i], positions[i] - positions[:i])
            for m in range(1, max_order):
                orders[m, i] = v[i] * math.fsum(g * orders[m - 1, :i])
        weights = np.array([math.fsum(orders[:, i]) for i in range(count)], dtype=np.float64)

    log.debug("chain weights for %d atoms, max_order=%s", count, max_order)
    return ChainWeights(
        kernel=k,
        times=_freeze(times),
        positions=_freeze(positions),
        prefactors=_freeze(v),
        weights=_freeze(weights),
        orders=_freeze(orders),
        max_order=max_order
    )

def evaluate(cw: ChainWeights, t: float, x: ArrayLike) -> float:
    '''u(t,x) = 1 + sum_{T_i < t} G_{t-T_i}(x-X_i) W_i'''
    if len(cw) == 0:
        return 1.0
    x = as_points(x, cw.kernel.dim).reshape(cw.kernel.dim)
    g = cw.kernel.green(t - cw.times, x - cw.positions)
    return 1.0 + math.fsum(g * cw.weights)

def order_terms(cw: ChainWeights, t: float, x: ArrayLike) -> NDArray:
    '''contribution of each chaos order m = 1..N to u(t,x)'''
    if cw.orders is None:
        raise ValueError("order_terms needs weights built with a finite max_order below the number of atoms")
    if len(cw) == 0:
        return np.zeros(cw.orders.shape[0])
    x = as_points(x, cw.kernel.dim).reshape(cw.kernel.dim)
    g = cw.kernel.green(t - cw.times, x - cw.positions)
    return np.array([math.fsum(g * row) for row in cw.orders], dtype=np.float64)

def solution_dp(cloud: AtomCloud, k: Kernel, cfg: ChaosConfig, t: float, x: ArrayLike) -> float:
    require_hypothesis(k, cloud.params.alpha)
    if cfg.mode == ChaosMode.ADDITIVE:
        return additive_solution(cloud, k, t, x)
    return evaluate(chain_weights(cloud, k, cfg.max_order), t, x)

def picard_iterate(cloud: AtomCloud, k: Kernel, n_iters: int, t: float, x: ArrayLike) -> List[float]:
    '''
    [u_0(t,x), ..., u_n(t,x)] with u_0 = 1 and
        u_{m+1}(t,x) = 1 + sum_i v_i G_{t-T_i}(x-X_i) u_m(T_i, X_i)
    u_m at the atom sites is kept level by level.
    '''
    if n_iters < 0:
        raise ValueError(f"n_iters should be >= 0, got {n_iters}")
    values = [1.0]
    if n_iters == 0 or len(cloud) == 0:
        return values * (n_iters + 1)

    times = cloud.times
    positions = cloud.positions
    v = cloud.active_prefactors()
    x = as_points(x, k.dim).reshape(k.dim)
    g_target = k.green(t - times, x - positions)
    # G between atom sites, zero unless T_j < T_i
    g_sites = k.green(times[:, None] - times[None, :], positions[:, None, :] - positions[None, :, :])

    level = np.ones(len(cloud))
    for m in range(n_iters):
        values.append(1.0 + math.fsum(g_target * v * level))
        if m + 1 < n_iters:
            weighted = v * level
            level = np.array([1.0 + math.fsum(row * weighted) for row in g_sites], dtype=np.float64)
    return values

def tail_reference(n: int, alpha: float, f_norm_alpha: float, lam: float) -> float:
    '''
    n (n!)^{alpha-2} alpha^{n-1} ||f||^alpha (ln lambda)^{n-1} lambda^{-alpha},
    the large-lambda behaviour of P(|I_n(f)| > lambda)
    '''
    if n < 1:
        raise ValueError(f"n should be >= 1, got {n}")
    if not lam > 1:
        raise DomainError(f"lambda should exceed 1, got {lam}")
    if not f_norm_alpha > 0:
        raise DomainError(f"f_norm_alpha should be positive, got {f_norm_alpha}")
    return (
        n
        * math.exp((alpha - 2) * special.gammaln(n + 1))
        * alpha**(n - 1)
        * f_norm_alpha
        * math.log(lam)**(n - 1)
        * lam**(-alpha)
    )

def grid_points(xs: ArrayLike, dim: int) -> NDArray:
    # in d = 2 the grid is the slice (x, 0)
    xs = np.asarray(xs, dtype=np.float64).reshape(-1, 1)
    return np.hstack((xs, np.zeros((xs.shape[0], dim - 1))))

def _additive_row(t: float, cloud: AtomCloud, k: Kernel, points: NDArray) -> NDArray:
    return np.array([additive_solution(cloud, k, t, p) for p in points])

def _chaos_row(t: float, cw: ChainWeights, points: NDArray) -> NDArray:
    return np.array([evaluate(cw, t, p) for p in points])

def evaluate_grid(
        cloud: AtomCloud,
        k: Kernel,
        cfg: ChaosConfig,
        ts: ArrayLike,
        xs: ArrayLike,
        num_workers: Optional[int] = None,
        progress: bool = False
    ) -> NDArray:
    require_hypothesis(k, cloud.params.alpha)
    points = grid_points(xs, k.dim)
    ts = [float(t) for t in np.asarray(ts, dtype=np.float64).reshape(-1)]
    if cfg.mode == ChaosMode.ADDITIVE:
        func = partial(_additive_row, cloud=cloud, k=k, points=points)
    else:
        func = partial(_chaos_row, cw=chain_weights(cloud, k, cfg.max_order), points=points)
    rows = parallel_map(func, ts, num_workers, progress, desc='grid rows')
    return np.vstack(rows) if rows else np.zeros((0, points.shape[0]))
