"""
MIMO Channel Models for covest
Uniform linear array, angular scattering functions, dictionaries and NNLS problems
"""

from dataclasses import dataclass, field

import numpy as np

from covest.services.error_handling_service import (
    DimensionMismatchError, InvalidParameterError, OutOfRangeError
)


@dataclass(frozen=True)
class UlaConfig:
    """Uniform linear array with M antennas and spacing d/λ"""
    M: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.M < 2:
            raise InvalidParameterError(f'array needs at least 2 antennas, got {self.M}')
        if not self.spacing_ratio > 0:
            raise InvalidParameterError(f'spacing ratio must be positive, got {self.spacing_ratio}')

    @property
    def periodic(self):
        """Half-wavelength arrays see ξ = −1 and ξ = +1 as the same direction"""
        return self.spacing_ratio == 0.5

    def to_dict(self):
        return {'M': self.M, 'spacing_ratio': self.spacing_ratio}


@dataclass(frozen=True)
class AsfSpec:
    """
    Angular scattering function on [−1, 1]: spikes carry total mass alpha, the
    rectangles and Gaussians share the remaining 1 − alpha after normalization.

    spikes: ((location, weight), ...); rects: ((center, width), ...);
    gaussians: ((mean, std), ...)
    """
    spikes: tuple = ()
    rects: tuple = ()
    gaussians: tuple = ()
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameterError(f'alpha must lie in [0, 1], got {self.alpha}')
        for location, weight in self.spikes:
            if not -1.0 <= location <= 1.0:
                raise OutOfRangeError(f'spike location {location} outside [-1, 1]')
            if not weight > 0:
                raise InvalidParameterError(f'spike weight must be positive, got {weight}')
        for _, width in self.rects:
            if not width > 0:
                raise InvalidParameterError(f'rectangle width must be positive, got {width}')
        for _, std in self.gaussians:
            if not std > 0:
                raise InvalidParameterError(f'gaussian std must be positive, got {std}')
        if self.spikes and not np.isclose(sum(w for _, w in self.spikes), self.alpha, atol=1e-12):
            raise InvalidParameterError('spike weights must sum to alpha')
        if self.alpha < 1.0 and not (self.rects or self.gaussians):
            raise InvalidParameterError('continuous mass 1 - alpha needs a rectangle or gaussian')

    @property
    def spike_locations(self):
        return np.array([loc for loc, _ in self.spikes], dtype=float)

    @property
    def spike_weights(self):
        return np.array([w for _, w in self.spikes], dtype=float)

    def to_dict(self):
        return {
            'spikes': [list(s) for s in self.spikes],
            'rects': [list(r) for r in self.rects],
            'gaussians': [list(g) for g in self.gaussians],
            'alpha': self.alpha
        }


@dataclass(frozen=True, eq=False)
class Dictionary:
    """First columns t_i of the Hermitian Toeplitz atoms S_i, one column per atom"""
    kind: str
    size: int
    atoms: np.ndarray
    locations: np.ndarray
    spike_count: int = 0

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=complex)
        if atoms.ndim != 2 or atoms.shape[1] != self.size + self.spike_count:
            raise InvalidParameterError('dictionary atom matrix does not match its size')
        atoms.setflags(write=False)
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'locations', np.array(self.locations, dtype=float))

    @property
    def M(self):
        return self.atoms.shape[0]

    @property
    def columns(self):
        return self.atoms.shape[1]

    def to_dict(self):
        return {'kind': self.kind, 'size': self.size, 'spikes': self.spike_count, 'M': self.M}

    def __repr__(self):
        return f'<Dictionary {self.kind} G={self.size} spikes={self.spike_count} M={self.M}>'


@dataclass(frozen=True, eq=False)
class NnlsProblem:
    """min_{u >= 0} ‖W(S̃u − σ̃)‖² with W = diag(√M, √(2(M−1)), …, √2)"""
    atoms: np.ndarray
    target: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=complex)
        target = np.array(self.target, dtype=complex)
        if atoms.ndim != 2 or target.shape != (atoms.shape[0],):
            raise DimensionMismatchError('NNLS atoms and target dimensions disagree')
        weights = NnlsProblem.averaging_weights(atoms.shape[0]) if self.weights is None \
            else np.array(self.weights, dtype=float)
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'target', target)
        object.__setattr__(self, 'weights', weights)

    @staticmethod
    def averaging_weights(m):
        """√M for the main diagonal, √(2(M − r)) for the r-th co-diagonal"""
        weights = np.sqrt(2.0 * (m - np.arange(m)))
        weights[0] = np.sqrt(m)
        return weights

    def real_lift(self):
        """Stack weighted real and imaginary parts into a real least-squares system"""
        weighted_atoms = self.weights[:, None] * self.atoms
        weighted_target = self.weights * self.target
        matrix = np.vstack([weighted_atoms.real, weighted_atoms.imag])
        rhs = np.concatenate([weighted_target.real, weighted_target.imag])
        return matrix, rhs


@dataclass(frozen=True, eq=False)
class NnlsResult:
    u: np.ndarray
    residual: float
    iterations: int
    converged: bool

    def to_dict(self):
        return {'residual': self.residual, 'iterations': self.iterations,
                'converged': self.converged, 'support': int(np.count_nonzero(self.u))}


@dataclass(frozen=True, eq=False)
class PilotBatch:
    """N pilot observations y(s) = h(s) + z(s) with the known noise power N0"""
    samples: object
    noise_power: float
    snr_db: float

    def __post_init__(self):
        if not self.noise_power >= 0:
            raise InvalidParameterError(f'noise power must be >= 0, got {self.noise_power}')

    @property
    def N(self):
        return self.samples.n

    @property
    def M(self):
        return self.samples.p

    def to_dict(self):
        return {'N': self.N, 'M': self.M, 'noise_power': self.noise_power, 'snr_db': self.snr_db}

    def __repr__(self):
        return f'<PilotBatch N={self.N} M={self.M} N0={self.noise_power:.4g}>'
