"""
Random Stream Model for covest
Counter-based (Philox) streams keyed by (seed, stream_id); normals by Box–Muller
"""

from dataclasses import dataclass, field

import numpy as np

from covest.services.error_handling_service import InvalidParameterError

_UINT64 = 2 ** 64


@dataclass(frozen=True)
class RngStream:
    """
    One reproducible random stream per Monte-Carlo trial.

    The Philox key is (seed, stream_id), so distinct stream ids never share a
    sequence. `lane` offsets the Philox counter and gives independent
    sub-streams (truth, samples, dithers, ...) inside a single trial.
    """
    seed: int
    stream_id: int = 0
    lane: int = 0
    _generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ('seed', 'stream_id', 'lane'):
            value = getattr(self, name)
            if not 0 <= int(value) < _UINT64:
                raise InvalidParameterError(f'{name} must be a 64-bit unsigned integer, got {value}')
        bit_generator = np.random.Philox(
            key=np.array([self.seed, self.stream_id], dtype=np.uint64),
            counter=np.array([0, 0, 0, self.lane], dtype=np.uint64)
        )
        object.__setattr__(self, '_generator', np.random.Generator(bit_generator))

    def substream(self, lane):
        """Fresh stream on the same key with a different counter lane"""
        return RngStream(self.seed, self.stream_id, lane)

    def uniform(self, low=0.0, high=1.0, size=None):
        return low + (high - low) * self._generator.random(size)

    def standard_normal(self, size):
        """Standard normals by the Box–Muller transform of Philox uniforms"""
        shape = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape))
        pairs = (count + 1) // 2
        u1 = 1.0 - self._generator.random(pairs)
        u2 = self._generator.random(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(2.0 * np.pi * u2)
        out[1::2] = radius * np.sin(2.0 * np.pi * u2)
        return out[:count].reshape(shape)

    def complex_normal(self, size):
        """Circularly-symmetric CN(0, 1) draws (variance 1/2 per real part)"""
        parts = self.standard_normal((2,) + ((size,) if np.isscalar(size) else tuple(size)))
        return (parts[0] + 1j * parts[1]) / np.sqrt(2.0)

    def signs(self, size):
        return np.where(self._generator.random(size) < 0.5, -1.0, 1.0)

    def permutation(self, n):
        return self._generator.permutation(n)

    def to_dict(self):
        return {'seed': self.seed, 'stream_id': self.stream_id, 'lane': self.lane}
