# All errors derive from builtins so callers can keep catching ValueError/RuntimeError.

class DomainError(ValueError):
    '''a parameter lies outside its mathematical domain'''

class HypothesisError(DomainError):
    '''the space-time integral of G^p is not finite for the requested kernel/power'''

class NormalizationError(DomainError):
    '''phi^alpha is not integrable (delta <= dim/alpha)'''

class DivergenceError(DomainError):
    '''the series sum_j Gamma_j^{-p/alpha} diverges (p <= alpha)'''

class EnumerationSizeError(ValueError):
    '''brute-force enumeration would exceed the combinatorial guard'''

class SamplingError(RuntimeError):
    '''Monte Carlo aborted because too many draws were not finite'''

class ConfigError(ValueError):

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key
