"""Concrete one-pass algorithms.

Baselines (zero, random unit), full-storage offline solvers, and the
random-projection separator that realizes the low-memory upper bound: keep a
uniform reservoir of projected, quantized points and separate them at the end
with a perceptron, lifting the result back through the projection transpose.

State layouts are explicit bit formats so the budget arithmetic is exact; see
each class docstring.  All layouts are big-endian bit-first except float
blocks, which use little-endian float64 throughout the package.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .config import DEFAULTS, RunConfig
from .errors import (
    BudgetViolation,
    DegenerateOutput,
    DimensionMismatch,
    NotSeparableInProjection,
    ValidationError,
)
from .linalg import Subspace, kernel_vector, orthonormalize
from .streaming import BitReader, BitState, BitWriter, OnePassAlgorithm, SharedRandomness


def _sample_vector(sample) -> np.ndarray:
    """The vector part of a sample: bare vectors, (x, label), (row, target)."""
    if isinstance(sample, (tuple, list)) and len(sample) == 2 and np.ndim(sample[1]) == 0:
        return np.asarray(sample[0], dtype=float)
    return np.asarray(sample, dtype=float)


class ZeroPredictor(OnePassAlgorithm):
    """Remembers only the ambient dimension; outputs the zero vector."""

    def update(self, i, sample, state, shared):
        d = _sample_vector(sample).shape[0]
        w = BitWriter()
        w.append_uint(d, 32)
        content, nbits = w.getvalue()
        return BitState.pack(state.capacity_bits, content, nbits)

    def finalize(self, state, shared):
        d = BitReader(state.payload).read_uint(32)
        return np.zeros(d)


class RandomUnitPredictor(OnePassAlgorithm):
    """Ignores the stream; outputs a fixed random unit vector from its seed."""

    def __init__(self, d: int, seed: int):
        if d < 1:
            raise ValidationError("need d >= 1")
        self.d = int(d)
        self.seed = int(seed)

    def update(self, i, sample, state, shared):
        return state

    def finalize(self, state, shared):
        rng = np.random.default_rng(self.seed)
        while True:
            g = rng.standard_normal(self.d)
            n = np.linalg.norm(g)
            if n > 0:
                return g / n


class OfflineKernelSolver(OnePassAlgorithm):
    """Stores every vector verbatim and finalizes with the exact kernel.

    State: [u32 count][u32 d][count * d little-endian float64].
    """

    def update(self, i, sample, state, shared):
        vec = _sample_vector(sample)
        d = vec.shape[0]
        r = BitReader(state.payload)
        count = r.read_uint(32)
        if count:
            if r.read_uint(32) != d:
                raise DimensionMismatch("sample dimension changed mid-stream")
            stored = r.read_floats(count * d)
        else:
            stored = np.zeros(0)
        w = BitWriter()
        w.append_uint(count + 1, 32)
        w.append_uint(d, 32)
        w.append_floats(np.concatenate([stored, vec]))
        content, nbits = w.getvalue()
        return BitState.pack(state.capacity_bits, content, nbits)

    def finalize(self, state, shared):
        r = BitReader(state.payload)
        count = r.read_uint(32)
        d = r.read_uint(32)
        vectors = r.read_floats(count * d).reshape(count, d)
        return kernel_vector(vectors)


def kernel_budget_bits(d: int) -> int:
    return 64 + 64 * d * (d - 1)


class OfflineLstsqSolver(OnePassAlgorithm):
    """Streams the normal equations of the system and solves them at the end.

    Accumulating the Gram matrix (upper triangle) and moment vector instead of
    raw rows keeps the state at 64*(d(d+1)/2 + d) + 64 bits, and the finalize
    output pinv(Gram) @ moment equals the minimum-norm least-squares solution
    of the streamed system.  The result is clipped to the unit ball.

    State: [u32 count][u32 d][d(d+1)/2 floats upper Gram][d floats moment].
    """

    @staticmethod
    def _tri(d):
        return d * (d + 1) // 2

    def update(self, i, sample, state, shared):
        if not (isinstance(sample, (tuple, list)) and len(sample) == 2):
            raise ValidationError("equation samples are (row, target) pairs")
        row = np.asarray(sample[0], dtype=float)
        target = float(sample[1])
        d = row.shape[0]
        iu = np.triu_indices(d)
        r = BitReader(state.payload)
        count = r.read_uint(32)
        if count:
            if r.read_uint(32) != d:
                raise DimensionMismatch("sample dimension changed mid-stream")
            gram = r.read_floats(self._tri(d))
            moment = r.read_floats(d)
        else:
            gram = np.zeros(self._tri(d))
            moment = np.zeros(d)
        gram = gram + np.outer(row, row)[iu]
        moment = moment + target * row
        w = BitWriter()
        w.append_uint(count + 1, 32)
        w.append_uint(d, 32)
        w.append_floats(gram)
        w.append_floats(moment)
        content, nbits = w.getvalue()
        return BitState.pack(state.capacity_bits, content, nbits)

    def finalize(self, state, shared):
        r = BitReader(state.payload)
        count = r.read_uint(32)
        if count == 0:
            raise DegenerateOutput("no equations seen")
        d = r.read_uint(32)
        gram_u = r.read_floats(self._tri(d))
        moment = r.read_floats(d)
        gram = np.zeros((d, d))
        gram[np.triu_indices(d)] = gram_u
        gram = gram + np.triu(gram, 1).T
        w = np.linalg.pinv(gram, hermitian=True) @ moment
        norm = np.linalg.norm(w)
        if norm > 1.0:
            w = w / norm
        return w


def lstsq_budget_bits(d: int) -> int:
    return 64 + 64 * (d * (d + 1) // 2 + d)


def perceptron_with_stats(points, max_passes: int) -> tuple[np.ndarray, int]:
    """Perceptron returning (unit separator, total update count)."""
    points = list(points)
    if not points:
        raise ValidationError("perceptron needs at least one point")
    xs = np.array([np.asarray(x, dtype=float) for x, _ in points])
    ys = np.array([float(y) for _, y in points])
    w = np.zeros(xs.shape[1])
    total = 0
    for _ in range(max_passes):
        mistakes = 0
        for x, y in zip(xs, ys):
            if (w @ x) * y <= 0:
                w = w + y * x
                mistakes += 1
        total += mistakes
        if mistakes == 0:
            return w / np.linalg.norm(w), total
    raise NotSeparableInProjection("no separator after %d passes" % max_passes)


def perceptron(points, max_passes: int) -> np.ndarray:
    """Classic mistake-driven separator with deterministic cycling order.

    Returns a unit vector scoring every point strictly positive, or raises
    NotSeparableInProjection once max_passes full cycles fail to converge.
    """
    return perceptron_with_stats(points, max_passes)[0]


class OfflineSeparatorSolver(OnePassAlgorithm):
    """Stores every labeled point and separates them offline by perceptron.

    State: [u32 count][u32 d][count * (d+1) floats, each row then its label].
    """

    def __init__(self, max_passes: int = 10**5):
        self.max_passes = max_passes

    def update(self, i, sample, state, shared):
        if not (isinstance(sample, (tuple, list)) and len(sample) == 2):
            raise ValidationError("labeled samples are (x, y) pairs")
        x = np.asarray(sample[0], dtype=float)
        y = float(sample[1])
        d = x.shape[0]
        r = BitReader(state.payload)
        count = r.read_uint(32)
        if count:
            if r.read_uint(32) != d:
                raise DimensionMismatch("sample dimension changed mid-stream")
            stored = r.read_floats(count * (d + 1))
        else:
            stored = np.zeros(0)
        w = BitWriter()
        w.append_uint(count + 1, 32)
        w.append_uint(d, 32)
        w.append_floats(np.concatenate([stored, x, [y]]))
        content, nbits = w.getvalue()
        return BitState.pack(state.capacity_bits, content, nbits)

    def finalize(self, state, shared):
        r = BitReader(state.payload)
        count = r.read_uint(32)
        if count == 0:
            raise DegenerateOutput("no points seen")
        d = r.read_uint(32)
        flat = r.read_floats(count * (d + 1)).reshape(count, d + 1)
        return perceptron([(row[:d], row[d]) for row in flat], self.max_passes)


def separator_budget_bits(d: int, n: int) -> int:
    return 64 + 64 * n * (d + 1)


@dataclass(frozen=True, eq=False)
class ProjectionSketch:
    """Decoded reservoir contents: the projection and the stored points."""

    proj: Subspace
    stored: list
    quant_bits: int
    quant_range: float


def _quantize(u: np.ndarray, qb: int, rng_half: float) -> np.ndarray:
    levels = (1 << qb) - 1
    clipped = np.clip(u, -rng_half, rng_half)
    return np.round((clipped + rng_half) / (2 * rng_half) * levels).astype(np.uint32)


def _dequantize(q: np.ndarray, qb: int, rng_half: float) -> np.ndarray:
    levels = (1 << qb) - 1
    return q.astype(float) / levels * (2 * rng_half) - rng_half


def proj_state_bits(dprime: int, subsample: int, quant_bits: int) -> int:
    """Declared accounting: bookkeeping header (count and ambient dimension),
    one label bit per slot, then the quantized coordinate blocks."""
    coord_bits = quant_bits if quant_bits else 64
    return 64 + subsample + subsample * dprime * coord_bits


class ProjectionSeparator(OnePassAlgorithm):
    """One-pass separator: project, quantize, reservoir-sample, then separate.

    The projection matrix is a pure function of the shared randomness and the
    constructor seed, so it is regenerated on demand (and cached on the
    instance, which carries no sample information) rather than stored; the
    state holds only the sampled points.

    State layout, bit-contiguous:
      [u32 seen-count][u32 ambient d][one label bit per slot][slot blocks],
    slot j's block holding dprime quantized coordinates of sqrt(d/d') P x,
    clipped to +-quant_range.  quant_bits = 0 stores raw float64 coordinates.
    """

    def __init__(
        self,
        dprime: int,
        subsample_size: int,
        quant_bits: int = 16,
        quant_range: float = 4.0,
        max_passes: int = 500,
        seed: int = 0,
        projection: Subspace | None = None,
    ):
        if dprime < 1 or subsample_size < 1:
            raise ValidationError("dprime and subsample_size must be positive")
        if quant_bits and not (1 <= quant_bits <= 32):
            raise ValidationError("quant_bits must be 0 (off) or 1..32")
        if quant_range <= 0:
            raise ValidationError("quant_range must be positive")
        self.dprime = int(dprime)
        self.subsample = int(subsample_size)
        self.quant_bits = int(quant_bits)
        self.quant_range = float(quant_range)
        self.max_passes = int(max_passes)
        self.seed = int(seed)
        self._fixed_projection = projection
        self._proj_cache = {}

    # -- projection ---------------------------------------------------------

    def projection_for(self, d: int, shared: SharedRandomness) -> Subspace:
        if self._fixed_projection is not None:
            if self._fixed_projection.ambient_dim != d:
                raise DimensionMismatch("fixed projection has wrong ambient dim")
            return self._fixed_projection
        if self.dprime > d:
            raise DimensionMismatch("dprime exceeds ambient dimension")
        key = (shared.seed, d)
        if key not in self._proj_cache:
            rng = shared.generator("proj-separator", self.seed, d)
            self._proj_cache[key] = orthonormalize(rng.standard_normal((self.dprime, d)))
        return self._proj_cache[key]

    # -- state codec --------------------------------------------------------

    @property
    def _coord_bits(self) -> int:
        return self.quant_bits if self.quant_bits else 64

    def _slot_bytes(self, u: np.ndarray) -> bytes:
        if self.quant_bits == 0:
            return np.asarray(u, dtype="<f8").tobytes()
        q = _quantize(u, self.quant_bits, self.quant_range)
        if self.quant_bits == 8:
            return q.astype(">u1").tobytes()
        if self.quant_bits == 16:
            return q.astype(">u2").tobytes()
        if self.quant_bits == 32:
            return q.astype(">u4").tobytes()
        bits = (q[:, None] >> np.arange(self.quant_bits - 1, -1, -1)[None, :]) & 1
        return np.packbits(bits.astype(np.uint8).ravel()).tobytes()

    def _decode_slot(self, raw: bytes) -> np.ndarray:
        if self.quant_bits == 0:
            return np.frombuffer(raw, dtype="<f8").copy()
        if self.quant_bits == 8:
            q = np.frombuffer(raw, dtype=">u1").astype(np.uint32)
        elif self.quant_bits == 16:
            q = np.frombuffer(raw, dtype=">u2").astype(np.uint32)
        elif self.quant_bits == 32:
            q = np.frombuffer(raw, dtype=">u4").astype(np.uint32)
        else:
            bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
            bits = bits[: self.dprime * self.quant_bits].reshape(self.dprime, self.quant_bits)
            weights = 1 << np.arange(self.quant_bits - 1, -1, -1, dtype=np.uint32)
            q = (bits.astype(np.uint32) * weights[None, :]).sum(axis=1)
        return _dequantize(q, self.quant_bits, self.quant_range)

    def _aligned(self) -> bool:
        return (64 + self.subsample) % 8 == 0 and (self._coord_bits * self.dprime) % 8 == 0

    def _total_bits(self) -> int:
        return proj_state_bits(self.dprime, self.subsample, self.quant_bits)

    def _coord_offset_bits(self, j: int) -> int:
        return 64 + self.subsample + j * self.dprime * self._coord_bits

    def _write_slot(self, buf: bytearray, j: int, u: np.ndarray, y: float):
        label_pos = 64 + j
        if y > 0:
            buf[label_pos // 8] |= 1 << (7 - label_pos % 8)
        else:
            buf[label_pos // 8] &= ~(1 << (7 - label_pos % 8)) & 0xFF
        raw = self._slot_bytes(u)
        off = self._coord_offset_bits(j)
        if self._aligned():
            start = off // 8
            buf[start : start + len(raw)] = raw
        else:
            bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
            nbits = self.dprime * self._coord_bits
            payload_bits = np.unpackbits(np.frombuffer(bytes(buf), dtype=np.uint8))
            payload_bits[off : off + nbits] = bits[:nbits]
            buf[:] = np.packbits(payload_bits).tobytes()

    def _read_slots(self, payload: bytes, upto: int):
        labels = []
        coords = []
        if self._aligned():
            base = (64 + self.subsample) // 8
            stride = self.dprime * self._coord_bits // 8
            for j in range(upto):
                pos = 64 + j
                labels.append(1.0 if payload[pos // 8] >> (7 - pos % 8) & 1 else -1.0)
                coords.append(self._decode_slot(payload[base + j * stride : base + (j + 1) * stride]))
        else:
            bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
            for j in range(upto):
                labels.append(1.0 if bits[64 + j] else -1.0)
                off = self._coord_offset_bits(j)
                nbits = self.dprime * self._coord_bits
                chunk = np.packbits(bits[off : off + nbits]).tobytes()
                coords.append(self._decode_slot(chunk))
        return labels, coords

    # -- streaming interface ------------------------------------------------

    def update(self, i, sample, state, shared):
        if not (isinstance(sample, (tuple, list)) and len(sample) == 2):
            raise ValidationError("labeled samples are (x, y) pairs")
        x = np.asarray(sample[0], dtype=float)
        y = float(sample[1])
        d = x.shape[0]
        total = self._total_bits()
        if total > state.capacity_bits:
            raise BudgetViolation(
                "separator state needs %d bits, budget is %d" % (total, state.capacity_bits)
            )
        proj = self.projection_for(d, shared)
        u = math.sqrt(d / self.dprime) * (proj.basis @ x)

        buf = bytearray(state.payload)
        count, dim = struct.unpack(">II", bytes(buf[:8]))
        if count and dim != d:
            raise DimensionMismatch("sample dimension changed mid-stream")
        count += 1
        buf[:8] = struct.pack(">II", count, d)
        if count <= self.subsample:
            self._write_slot(buf, count - 1, u, y)
        else:
            if shared.value(2 * i) < self.subsample / count:
                j = int(shared.value(2 * i + 1) * self.subsample)
                self._write_slot(buf, j, u, y)
        nbytes = (state.capacity_bits + 7) // 8
        return BitState(state.capacity_bits, bytes(buf[:nbytes]), used_bits=total)

    def sketch_from_state(self, state: BitState, shared: SharedRandomness) -> ProjectionSketch:
        count, d = struct.unpack(">II", state.payload[:8])
        upto = min(count, self.subsample)
        labels, coords = self._read_slots(state.payload, upto)
        return ProjectionSketch(
            proj=self.projection_for(d, shared),
            stored=list(zip(coords, labels)),
            quant_bits=self.quant_bits,
            quant_range=self.quant_range,
        )

    def finalize(self, state, shared):
        count, d = struct.unpack(">II", state.payload[:8])
        if count == 0:
            raise DegenerateOutput("no points seen")
        labels, coords = self._read_slots(state.payload, min(count, self.subsample))
        w_p = perceptron(list(zip(coords, labels)), self.max_passes)
        proj = self.projection_for(d, shared)
        w = proj.basis.T @ w_p
        return w / np.linalg.norm(w)


def build_algorithm(name: str, d: int, seed: int, config: RunConfig = DEFAULTS) -> OnePassAlgorithm:
    """Registry constructor for the CLI-addressable algorithms."""
    sep = config.separator
    builders = {
        "zero": lambda: ZeroPredictor(),
        "random-unit": lambda: RandomUnitPredictor(d, seed),
        "offline-kernel": lambda: OfflineKernelSolver(),
        "offline-lstsq": lambda: OfflineLstsqSolver(),
        "offline-separator": lambda: OfflineSeparatorSolver(),
        "proj-separator": lambda: ProjectionSeparator(
            dprime=min(sep.dprime, d),
            subsample_size=sep.subsample,
            quant_bits=sep.quant_bits,
            quant_range=sep.quant_range,
            max_passes=sep.max_passes,
            seed=seed,
        ),
    }
    if name not in builders:
        raise ValidationError(
            "unknown algorithm %r (have: %s)" % (name, ", ".join(sorted(builders)))
        )
    return builders[name]()


REGISTRY = ("zero", "random-unit", "offline-kernel", "offline-lstsq", "offline-separator", "proj-separator")
