import math
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple
import numpy as np
from numpy.typing import NDArray, ArrayLike
from scipy import integrate, special
from .errors import HypothesisError, DomainError
from .stable_sampling import as_points, unit_sphere_area

log = logging.getLogger(__name__)

class KernelKind(Enum):
    HEAT = 'heat'
    WAVE = 'wave'

    # this is useful for argparse
    def __str__(self):
        return self.name

    @classmethod
    def parse(cls, value: str) -> 'KernelKind':
        try:
            return cls[value.strip().upper()]
        except KeyError:
            raise ValueError(f"Valid equations are {', '.join(k.value for k in cls)}, got {value!r}")

@dataclass(frozen=True)
class Coefficients:
    '''
    int_0^t int G_s^p = constant * t^exponent. For the heat kernel scale is
    Kbar_{p,d} (G_t^p = Kbar t^{d(1-p)/2} G_{t/p}); for the wave kernel it is 1.
    '''
    p: float
    constant: float
    exponent: float
    scale: float = 1.0

class Kernel(ABC):
    '''Green function of the heat or wave operator in dimension dim'''

    kind: KernelKind

    def __init__(self, dim: int) -> None:
        if int(dim) != dim or dim < 1:
            raise DomainError(f"dim should be an integer >= 1, got {dim}")
        self.dim = int(dim)
        self._cache: Dict[float, Coefficients] = {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Kernel) and other.kind == self.kind and other.dim == self.dim

    def __hash__(self) -> int:
        return hash((self.kind, self.dim))

    @abstractmethod
    def green(self, t: ArrayLike, x: ArrayLike) -> NDArray:
        pass

    @abstractmethod
    def p_upper(self) -> Tuple[float, bool]:
        '''upper end of the p range where int int G^p is finite, and whether it is included'''
        pass

    @abstractmethod
    def _coefficients(self, p: float) -> Coefficients:
        pass

    def hypothesis_holds(self, alpha: float) -> bool:
        upper, closed = self.p_upper()
        return alpha <= upper if closed else alpha < upper

    def check_p(self, p: float) -> None:
        upper, closed = self.p_upper()
        if not (p > 0 and (p <= upper if closed else p < upper)):
            bracket = ']' if closed else ')'
            raise HypothesisError(
                f"int int G^p is infinite for {self!r} unless p lies in (0, {upper:g}{bracket}, got p={p}"
            )

    def coefficients(self, p: float) -> Coefficients:
        p = float(p)
        if p not in self._cache:
            self.check_p(p)
            self._cache[p] = self._coefficients(p)
        return self._cache[p]

class HeatKernel(Kernel):
    '''fundamental solution of d/dt - Laplacian/2'''

    kind = KernelKind.HEAT

    def green(self, t: ArrayLike, x: ArrayLike) -> NDArray:
        r2 = np.sum(as_points(x, self.dim)**2, axis=-1)
        t = np.asarray(t, dtype=np.float64)
        positive = t > 0
        t_safe = np.where(positive, t, 1.0)
        value = (2 * math.pi * t_safe)**(-self.dim / 2) * np.exp(-r2 / (2 * t_safe))
        return np.where(positive, value, 0.0)

    def p_upper(self) -> Tuple[float, bool]:
        return 1 + 2 / self.dim, False

    def _coefficients(self, p: float) -> Coefficients:
        kbar = (2 * math.pi)**(self.dim * (1 - p) / 2) * p**(-self.dim / 2)
        exponent = self.dim * (1 - p) / 2 + 1
        return Coefficients(p=p, constant=kbar / exponent, exponent=exponent, scale=kbar)

class WaveKernel(Kernel):
    '''fundamental solution of the wave operator, d = 1 or 2'''

    kind = KernelKind.WAVE

    def __init__(self, dim: int) -> None:
        super().__init__(dim)
        if self.dim > 2:
            raise HypothesisError(f"the wave kernel is not a function in dimension {self.dim}, valid dimensions are 1 and 2")

    def green(self, t: ArrayLike, x: ArrayLike) -> NDArray:
        r = np.linalg.norm(as_points(x, self.dim), axis=-1)
        t = np.asarray(t, dtype=np.float64)
        # open light cone: |x| = t maps to 0
        inside = r < t
        if self.dim == 1:
            return np.where(inside, 0.5, 0.0)
        gap = np.where(inside, (t - r) * (t + r), 1.0)
        return np.where(inside, 1.0 / (2 * math.pi * np.sqrt(gap)), 0.0)

    def p_upper(self) -> Tuple[float, bool]:
        if self.dim == 1:
            return math.inf, False
        return 2.0, False

    def time_exponent(self, p: float) -> float:
        '''a = 2 for d = 1, 3 - p for d = 2'''
        return 2.0 if self.dim == 1 else 3.0 - p

    def _coefficients(self, p: float) -> Coefficients:
        if self.dim == 1:
            return Coefficients(p=p, constant=2.0**(-p), exponent=2.0)
        return Coefficients(
            p=p,
            constant=(2 * math.pi)**(1 - p) / ((2 - p) * (3 - p)),
            exponent=3.0 - p
        )

kernel_class = {
    KernelKind.HEAT: HeatKernel,
    KernelKind.WAVE: WaveKernel,
}

def make_kernel(kind: KernelKind, dim: int) -> Kernel:
    if isinstance(kind, str):
        kind = KernelKind.parse(kind)
    return kernel_class[kind](dim)

def green(k: Kernel, t: ArrayLike, x: ArrayLike) -> NDArray:
    '''G_t(x), vectorized over leading axes, 0 for t <= 0'''
    return k.green(t, x)

def hypothesis_holds(k: Kernel, alpha: float) -> bool:
    return k.hypothesis_holds(alpha)

def require_hypothesis(k: Kernel, alpha: float) -> None:
    if not k.hypothesis_holds(alpha):
        upper, _ = k.p_upper()
        raise HypothesisError(f"int int G^alpha is infinite for {k!r} at alpha={alpha}, need alpha < {upper:g}")

def heat_power_identity(p: float, d: int, t: float, x: Optional[ArrayLike] = None) -> Tuple[float, float]:
    '''
    G_t(x)^p = Kbar_{p,d} t^{d(1-p)/2} G_{t/p}(x). Returns (Kbar_{p,d}, t/p);
    the identity holds for every x so x is only validated.
    '''
    if not (p > 0 and t > 0):
        raise DomainError(f"p and t should be positive, got p={p}, t={t}")
    if x is not None:
        as_points(x, d)
    kbar = (2 * math.pi)**(d * (1 - p) / 2) * p**(-d / 2)
    return kbar, t / p

def space_time_lp_mass(k: Kernel, p: float, t: float) -> float:
    '''int_0^t int_{R^d} G_{t-s}(x-y)^p dy ds, independent of x'''
    if t < 0:
        raise DomainError(f"t should be >= 0, got {t}")
    coef = k.coefficients(p)
    return coef.constant * t**coef.exponent

def heat_moment_constant(gamma: float, p: float, d: int) -> float:
    '''C'_{gamma,p,d}'''
    normal_moment = 2**(gamma / 2) * special.gamma((gamma + d) / 2) / special.gamma(d / 2)
    return (
        HeatKernel(d).coefficients(p).constant
        * max(2**(gamma - 1), 1.0)
        * min(1.0, p)**(-gamma / 2)
        * (1 + normal_moment)
    )

def heat_moment_bound(gamma: float, p: float, d: int, t: float, x: ArrayLike) -> float:
    '''
    upper bound C'_{gamma,p,d} t^{d(1-p)/2+1} (|x|^gamma + t^{gamma/2}) on
    int_0^t int G_{t-s}(x-y)^p |y|^gamma dy ds
    '''
    if not gamma > 0:
        raise DomainError(f"gamma should be positive, got {gamma}")
    if not 0 < p < 1 + 2 / d:
        raise HypothesisError(f"p should lie in (0, {1 + 2 / d:g}), got {p}")
    if not t > 0:
        raise DomainError(f"t should be positive, got {t}")
    r = float(np.linalg.norm(as_points(x, d)))
    exponent = d * (1 - p) / 2 + 1
    return heat_moment_constant(gamma, p, d) * t**exponent * (r**gamma + t**(gamma / 2))

# quadrature oracles

QUAD_OPTS = dict(epsabs=0.0, epsrel=1e-11, limit=200)

def _radial_heat_power(k: Kernel, p: float, s: float) -> float:
    '''int_{R^d} G_s(y)^p dy by radial quadrature'''
    scale = math.sqrt(s)
    f = lambda r: r**(k.dim - 1) * float(k.green(s, np.r_[r, np.zeros(k.dim - 1)]))**p
    head, _ = integrate.quad(f, 0, 12 * scale, **QUAD_OPTS)
    tail, _ = integrate.quad(f, 12 * scale, np.inf, **QUAD_OPTS)
    return unit_sphere_area(k.dim) * (head + tail)

def _radial_wave_power(k: Kernel, p: float, s: float) -> float:
    if k.dim == 1:
        value, _ = integrate.quad(lambda y: float(k.green(s, y))**p, -s, s, **QUAD_OPTS)
        return value
    # r = s cos(phi); sqrt(s^2 - r^2) = s sin(phi) = s phi sinc(phi/pi), and phi^(1-p) is the weight
    f = lambda ph: (
        2 * math.pi * (2 * math.pi)**(-p) * s**(2 - p)
        * math.cos(ph) * float(np.sinc(ph / math.pi))**(1 - p)
    )
    value, _ = integrate.quad(f, 0, math.pi / 2, weight='alg', wvar=(1 - p, 0.0), **QUAD_OPTS)
    return value

def _rescaled_heat_power(k: Kernel, p: float, s: float) -> float:
    if s <= 0:
        # s^(-d(1-p)/2) int G_s^p does not depend on s
        s = 1.0
    return _radial_heat_power(k, p, s) * s**(-k.dim * (1 - p) / 2)

def space_time_lp_mass_quadrature(k: Kernel, p: float, t: float) -> float:
    '''nested adaptive quadrature oracle for space_time_lp_mass'''
    k.check_p(p)
    if t == 0:
        return 0.0
    if k.kind == KernelKind.HEAT:
        e = k.dim * (1 - p) / 2
        value, _ = integrate.quad(
            lambda s: _rescaled_heat_power(k, p, s),
            0, t,
            weight='alg', wvar=(e, 0.0),
            **QUAD_OPTS
        )
        return value
    value, _ = integrate.quad(lambda s: _radial_wave_power(k, p, s), 0, t, **QUAD_OPTS)
    return value

def heat_moment_quadrature(gamma: float, p: float, d: int, t: float, x: ArrayLike) -> float:
    '''
    int_0^t int_R G_s(x-y)^p |y|^gamma dy ds for d = 1, with y = x + sqrt(s) z
    so the s^{(1-p)/2} singularity at s = 0 goes into the quadrature weight
    '''
    if d != 1:
        raise ValueError(f"heat_moment_quadrature is implemented for d = 1 only, got d={d}")
    x0 = float(as_points(x, 1)[..., 0])

    def inner(s):
        f = lambda z: math.exp(-p * z * z / 2) * abs(x0 + math.sqrt(s) * z)**gamma
        value, _ = integrate.quad(f, -np.inf, np.inf, epsabs=0.0, epsrel=1e-10, limit=200)
        return (2 * math.pi)**(-p / 2) * value

    value, _ = integrate.quad(inner, 0, t, weight='alg', wvar=((1 - p) / 2, 0.0), epsabs=0.0, epsrel=1e-9)
    return value

def coefficient_table(k: Kernel, ps: Iterable[float]) -> List[Tuple[float, float, float]]:
    '''rows (p, constant, exponent) of int int G^p = constant t^exponent'''
    rows = []
    for p in ps:
        coef = k.coefficients(p)
        rows.append((coef.p, coef.constant, coef.exponent))
    return rows

def write_coefficient_table(filename: str, k: Kernel, ps: Iterable[float]) -> None:
    table = np.array(coefficient_table(k, ps), dtype=np.float64).reshape(-1, 3)
    np.savetxt(filename, table, fmt='%.17g', delimiter=',', header='p,constant,exponent', comments='')
    log.info("wrote %d coefficient rows for %r to %s", table.shape[0], k, filename)
