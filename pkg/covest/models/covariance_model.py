"""
Covariance Model Definitions for covest
Ground-truth covariance families and thresholding rules
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from covest.models.matrix_model import SymMatrix
from covest.services.error_handling_service import InvalidParameterError


@dataclass(frozen=True)
class ConstCorr:
    """(1 − c)·I + c·ones"""
    c: float

    kind = 'const_corr'

    def validate(self, p):
        lower = -1.0 / (p - 1) if p > 1 else -math.inf
        if not lower < self.c < 1.0:
            raise InvalidParameterError(f'ConstCorr needs c in ({lower:.4g}, 1) at p={p}, got {self.c}')

    def label(self):
        return f'const_corr({self.c:g})'


@dataclass(frozen=True)
class BandedToeplitz:
    """Symmetric Toeplitz matrix from `col`, zero beyond `bandwidth` diagonals"""
    col: tuple
    bandwidth: int

    kind = 'banded_toeplitz'

    def validate(self, p):
        if self.bandwidth < 1 or len(self.col) < 1:
            raise InvalidParameterError('BandedToeplitz needs a non-empty column and bandwidth >= 1')

    def label(self):
        return f"banded_toeplitz({','.join(f'{v:g}' for v in self.col)};w={self.bandwidth})"


@dataclass(frozen=True)
class SparseRandom:
    """Random member of the bounded sparse class: each row has at most s partners"""
    q: float
    s: int
    bound: float

    kind = 'sparse_random'

    def validate(self, p):
        if not 0.0 <= self.q < 1.0:
            raise InvalidParameterError(f'SparseRandom needs q in [0, 1), got {self.q}')
        if not 1 <= self.s < p:
            raise InvalidParameterError(f'SparseRandom needs 1 <= s < p, got s={self.s}, p={p}')
        if not self.bound > 0:
            raise InvalidParameterError(f'SparseRandom needs bound > 0, got {self.bound}')

    def label(self):
        return f'sparse_random(q={self.q:g};s={self.s};bound={self.bound:g})'


@dataclass(frozen=True)
class LowRankPlusRidge:
    """G Gᵀ / rank + ridge·I with Gaussian G"""
    rank: int
    ridge: float

    kind = 'low_rank'

    def validate(self, p):
        if not 1 <= self.rank <= p:
            raise InvalidParameterError(f'LowRankPlusRidge needs 1 <= rank <= p, got {self.rank}')
        if self.ridge < 0:
            raise InvalidParameterError(f'LowRankPlusRidge needs ridge >= 0, got {self.ridge}')

    def label(self):
        return f'low_rank(r={self.rank};ridge={self.ridge:g})'


@dataclass(frozen=True, eq=False)
class Explicit:
    matrix: SymMatrix

    kind = 'explicit'

    def validate(self, p):
        if self.matrix.dim != p:
            raise InvalidParameterError(f'explicit truth has dimension {self.matrix.dim}, expected {p}')

    def label(self):
        return f'explicit(p={self.matrix.dim})'


@dataclass(frozen=True)
class ScaledModel:
    """D Σ D with D = diag(scales) applied to a base model"""
    base: object
    scales: tuple

    kind = 'scaled'

    def validate(self, p):
        if len(self.scales) != p or any(s <= 0 for s in self.scales):
            raise InvalidParameterError(f'need {p} positive scales, got {self.scales}')
        self.base.validate(p)

    def label(self):
        return f"{self.base.label()}*diag({','.join(f'{s:g}' for s in self.scales)})"


COV_MODEL_TYPES = (ConstCorr, BandedToeplitz, SparseRandom, LowRankPlusRidge, Explicit, ScaledModel)


@dataclass(frozen=True)
class SparsityClassParams:
    """(q, s, M) of the (effectively) sparse classes"""
    q: float
    s: float
    bound: float

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise InvalidParameterError(f'q must lie in [0, 1), got {self.q}')
        if not self.s > 0:
            raise InvalidParameterError(f's must be positive, got {self.s}')
        if not self.bound > 0:
            raise InvalidParameterError(f'bound must be positive, got {self.bound}')

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Fixed:
    tau: float

    def __post_init__(self):
        if not self.tau >= 0:
            raise InvalidParameterError(f'threshold must be >= 0, got {self.tau}')

    def resolve(self, n, p):
        return float(self.tau)

    def constants(self):
        return {'rule': 'fixed', 'tau': self.tau}


@dataclass(frozen=True)
class BickelRule:
    """τ = M′·√(log p / n)"""
    mprime: float = 1.0

    def __post_init__(self):
        if not self.mprime > 0:
            raise InvalidParameterError(f"M' must be positive, got {self.mprime}")

    def resolve(self, n, p):
        return self.mprime * math.sqrt(math.log(p) / n)

    def constants(self):
        return {'rule': 'bickel', 'mprime': self.mprime}


@dataclass(frozen=True)
class ToeplitzRule:
    """τ = √(2c/(1−α))·max{C·K², √C·K}·√(log p/(n·p))"""
    C: float = 1.0
    K: float = 1.0
    c: float = 2.0
    alpha: float = 0.5

    def __post_init__(self):
        if not (self.C > 0 and self.K > 0):
            raise InvalidParameterError('C and K must be positive')
        if not self.c > 1:
            raise InvalidParameterError(f'c must exceed 1, got {self.c}')
        if not 0 < self.alpha < 1:
            raise InvalidParameterError(f'alpha must lie in (0, 1), got {self.alpha}')

    def resolve(self, n, p):
        scale = max(self.C * self.K ** 2, math.sqrt(self.C) * self.K)
        return math.sqrt(2.0 * self.c / (1.0 - self.alpha)) * scale * math.sqrt(math.log(p) / (n * p))

    def band_width(self, p):
        """⌊αp⌋, at least one diagonal"""
        return max(1, int(math.floor(self.alpha * p)))

    def constants(self):
        return {'rule': 'toeplitz', 'C': self.C, 'K': self.K, 'c': self.c, 'alpha': self.alpha}


THRESHOLD_RULE_TYPES = (Fixed, BickelRule, ToeplitzRule)


def realized_dim(model, default):
    """Dimension fixed by the model itself, if any"""
    if isinstance(model, Explicit):
        return model.matrix.dim
    if isinstance(model, ScaledModel):
        return len(model.scales)
    return default


def const_corr_matrix(c, p):
    return (1.0 - c) * np.eye(p) + c * np.ones((p, p))
