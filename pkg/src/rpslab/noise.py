"""Seeded, grid-keyed Brownian increments on a two-sided time axis.

Increment number ``n`` on the absolute grid covers ``[n*h, (n+1)*h]`` and is
drawn from a Philox counter-based generator keyed by ``(seed, stream)``, in
blocks of ``BLOCK`` increments whose counter is the block number.  Because
every draw is a pure function of ``(seed, stream, n)``, regenerating any
piece of the path reproduces the same bits and the Wiener shift by ``k``
steps is just ``n -> n + k``.
"""

import numpy as np

from .errors import AlignmentError, ConfigError
from .rates import as_multiple

BLOCK = 1024
_MASK = (1 << 64) - 1


def _block(seed, stream, j, dim):
    bg = np.random.Philox(key=np.array([seed & _MASK, stream & _MASK], dtype=np.uint64),
                          counter=np.array([0, 0, j & _MASK, 0], dtype=np.uint64))
    return np.random.Generator(bg).standard_normal((BLOCK, dim))


def _standard_normals(seed, stream, n0, n1, dim):
    """Standard normal draws for absolute indices n0 <= n < n1, shape (n1-n0, dim)."""
    if n1 <= n0:
        return np.empty((0, dim))
    j0, j1 = n0 // BLOCK, (n1 - 1) // BLOCK
    parts = [_block(seed, stream, j, dim) for j in range(j0, j1 + 1)]
    full = parts[0] if len(parts) == 1 else np.concatenate(parts)
    start = n0 - j0 * BLOCK
    return full[start:start + (n1 - n0)]


class NoiseGrid:
    """Brownian increments on ``origin + i*step`` for ``0 <= i < length``.

    ``stream`` is an int for a single path or a sequence of ints for an
    ensemble (one independent stream per member).  ``offset`` is the
    absolute index of relative increment 0; it equals ``origin/step`` until
    the grid is shifted.
    """

    def __init__(self, seed, stream, origin, step, length, dim, offset=None):
        if not step > 0:
            raise ConfigError([("step", f"must be positive, got {step!r}")])
        if length < 0:
            raise ConfigError([("length", "must be nonnegative")])
        k = as_multiple(origin, step)
        if k is None:
            raise AlignmentError(f"origin {origin!r} is not a multiple of step {step!r}")
        self.seed = int(seed)
        self.ensemble = not np.isscalar(stream)
        self.streams = tuple(int(s) for s in np.atleast_1d(stream))
        self.stream = self.streams if self.ensemble else self.streams[0]
        self.origin = float(origin)
        self.step = float(step)
        self.length = int(length)
        self.dim = int(dim)
        self.origin_index = k
        self.offset = k if offset is None else int(offset)

    def __repr__(self):
        s = f"{len(self.streams)} streams" if self.ensemble else f"stream={self.stream}"
        return (f"NoiseGrid(seed={self.seed}, {s}, origin={self.origin}, step={self.step}, "
                f"length={self.length}, dim={self.dim}, shift_steps={self.shift_steps})")

    @property
    def shift_steps(self):
        return self.offset - self.origin_index

    @property
    def n_paths(self):
        return len(self.streams) if self.ensemble else None

    @property
    def end(self):
        return self.origin + self.length * self.step

    def identity(self):
        """What the increments depend on; equal identities mean equal bits."""
        return (self.seed, self.streams, self.offset, self.step, self.length, self.dim)

    def index_of(self, t):
        """Relative index of grid time t."""
        i = as_multiple(t - self.origin, self.step)
        if i is None:
            raise AlignmentError(f"time {t!r} is not on the grid origin={self.origin!r}, "
                                 f"step={self.step!r}")
        return i

    def increments(self, i0=0, i1=None):
        """Increments for relative indices i0 <= i < i1.

        Shape ``(i1-i0, dim)`` for a single stream, ``(i1-i0, n_paths, dim)``
        for an ensemble.
        """
        i1 = self.length if i1 is None else i1
        if not 0 <= i0 <= i1 <= self.length:
            raise AlignmentError(f"increments [{i0}, {i1}) outside the grid of length {self.length}")
        n0, n1 = self.offset + i0, self.offset + i1
        scale = np.sqrt(self.step)
        draws = [_standard_normals(self.seed, s, n0, n1, self.dim) for s in self.streams]
        if not self.ensemble:
            return scale * draws[0]
        return scale * np.stack(draws, axis=1)

    def chunks(self, i0, i1):
        """Yield ``(i, dW)`` pieces covering [i0, i1), split on block boundaries."""
        i = i0
        while i < i1:
            n = self.offset + i
            nxt = min(i1, i + (BLOCK - n % BLOCK))
            yield i, self.increments(i, nxt)
            i = nxt

    def shifted(self, shift):
        """The Wiener shift: increment i of the result is increment i + shift/step here."""
        k = as_multiple(shift, self.step)
        if k is None:
            raise AlignmentError(f"shift {shift!r} is not a multiple of step {self.step!r}")
        return NoiseGrid(self.seed, self.stream, self.origin, self.step, self.length, self.dim,
                         offset=self.offset + k)

    def subset(self, members):
        """Ensemble restricted to the given member positions."""
        streams = [self.streams[i] for i in np.atleast_1d(members)]
        return NoiseGrid(self.seed, streams, self.origin, self.step, self.length, self.dim,
                         offset=self.offset)


def make_noise(seed, stream, origin, step, length, dim=1):
    return NoiseGrid(seed, stream, origin, step, length, dim)


def shift_noise(w, shift):
    return w.shifted(shift)


def ensemble_noise(seed, n, origin, step, length, dim=1, first_stream=0):
    """Noise for n ensemble members on streams first_stream .. first_stream+n-1."""
    return NoiseGrid(seed, list(range(first_stream, first_stream + n)), origin, step, length, dim)
