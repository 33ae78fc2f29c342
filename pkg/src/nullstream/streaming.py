"""One-pass algorithms with enforced bit budgets, and their reduction to
one-way communication protocols.

The model: an algorithm sees samples one at a time and may carry exactly b
bits between steps.  The carrier is a BitState; the runner rebuilds each
step's input state from the previous state's payload bytes alone, so nothing
an implementation smuggles on the state object survives to the next step.
Transient working memory inside a single update call is unbounded (the model
places no limit on per-step computation), and is documented as such: memory
accounting here means the between-steps configuration only.

Randomness is shared and counter-addressable: both parties of a protocol (or
the update and finalize phases of a one-pass run) may read the same indexed
uniform values, or derive named bulk substreams, without any coordination.
"""

from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from numpy.random import Generator, Philox

from .errors import BudgetViolation, ValidationError

_U64 = (1 << 64) - 1


def _zero_pad(content: bytes, nbytes: int) -> bytes:
    if len(content) < nbytes:
        return content + bytes(nbytes - len(content))
    return content


def _check_trailing_zero(payload: bytes, nbits: int):
    r = nbits % 8
    if r and payload and payload[(nbits // 8)] & (0xFF >> r):
        raise ValidationError("bits beyond the declared length must be zero")


@dataclass(frozen=True)
class BitState:
    """A memory configuration: b bits, stored MSB-first in ceil(b/8) bytes.

    used_bits is accounting metadata recorded by pack(); the runner reads it
    for reporting and strips it when laundering states between steps.  It is
    never information available to the algorithm.
    """

    capacity_bits: int
    payload: bytes
    used_bits: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.capacity_bits < 1:
            raise ValidationError("capacity must be at least 1 bit")
        want = (self.capacity_bits + 7) // 8
        if len(self.payload) != want:
            raise ValidationError(
                "payload is %d bytes, capacity %d bits needs %d"
                % (len(self.payload), self.capacity_bits, want)
            )
        _check_trailing_zero(self.payload, self.capacity_bits)
        object.__setattr__(self, "payload", bytes(self.payload))

    @classmethod
    def zero(cls, capacity_bits: int) -> "BitState":
        return cls(capacity_bits, bytes((capacity_bits + 7) // 8), used_bits=0)

    @classmethod
    def pack(cls, capacity_bits: int, content: bytes, content_bits: int | None = None) -> "BitState":
        """Place content at the front of a capacity-sized state.

        Raises BudgetViolation when the content does not fit; this is how
        algorithms surface an insufficient budget.
        """
        if content_bits is None:
            content_bits = 8 * len(content)
        if content_bits > capacity_bits:
            raise BudgetViolation(
                "content needs %d bits, budget is %d" % (content_bits, capacity_bits)
            )
        payload = _zero_pad(bytes(content), (capacity_bits + 7) // 8)
        return cls(capacity_bits, payload, used_bits=content_bits)

    def hex(self) -> str:
        return self.payload.hex()


class SharedRandomness:
    """Counter-addressable uniform stream plus named bulk substreams.

    value(i) is a pure function of (seed, i): Philox keyed by the seed,
    advanced to position i.  generator(*tags) derives an independent numpy
    Generator keyed by (seed, tags) for bulk draws (projection matrices,
    inserted-equation positions, ...); distinct tags give independent streams.
    """

    __slots__ = ("seed",)

    def __init__(self, seed: int):
        self.seed = int(seed) & _U64

    def value(self, index: int) -> float:
        if index < 0:
            raise ValidationError("stream index must be nonnegative")
        bg = Philox(key=self.seed)
        bg.advance(int(index))
        return float(Generator(bg).random())

    def values(self, index: int, count: int) -> np.ndarray:
        return np.array([self.value(index + j) for j in range(count)])

    def generator(self, *tags) -> Generator:
        key = []
        for t in tags:
            if isinstance(t, (int, np.integer)):
                key.append(int(t) & _U64)
            elif isinstance(t, str):
                h = hashlib.sha256(t.encode("utf-8")).digest()
                key.append(int.from_bytes(h[:8], "big"))
            else:
                raise ValidationError("substream tags must be ints or strings")
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=tuple(key))
        return np.random.default_rng(ss)


class OnePassAlgorithm:
    """Behavioral interface for streaming algorithms.

    update(i, sample, state, shared) -> BitState with the same capacity;
    finalize(state, shared) -> output.  Step indices are 1-based.  Anything an
    implementation wants to remember between samples must live in the returned
    BitState; the runner discards everything else.  Caches that are pure
    functions of (shared randomness, configuration) are fine since they carry
    no sample information.
    """

    def update(self, i: int, sample, state: BitState, shared: SharedRandomness) -> BitState:
        raise NotImplementedError

    def finalize(self, state: BitState, shared: SharedRandomness):
        raise NotImplementedError


@dataclass
class RunStats:
    steps: int = 0
    max_used_bits: int | None = None

    def record(self, state: BitState):
        self.steps += 1
        if state.used_bits is not None:
            if self.max_used_bits is None or state.used_bits > self.max_used_bits:
                self.max_used_bits = state.used_bits


def _advance(alg, samples, state, shared, budget_bits, first_index, stats=None):
    for offset, z in enumerate(samples):
        new = alg.update(first_index + offset, z, state, shared)
        if not isinstance(new, BitState):
            raise BudgetViolation("update must return a BitState")
        if new.capacity_bits != budget_bits:
            raise BudgetViolation(
                "update changed state capacity: %d -> %d" % (budget_bits, new.capacity_bits)
            )
        if stats is not None:
            stats.record(new)
        # launder: only the payload bytes cross to the next step
        state = BitState(budget_bits, bytes(new.payload))
    return state


def run_one_pass(alg: OnePassAlgorithm, samples, budget_bits: int, seed: int):
    out, _ = run_one_pass_stats(alg, samples, budget_bits, seed)
    return out


def run_one_pass_stats(alg: OnePassAlgorithm, samples, budget_bits: int, seed: int):
    """Like run_one_pass but also returns RunStats (peak declared state bits)."""
    if budget_bits < 1:
        raise ValidationError("budget must be at least 1 bit")
    shared = SharedRandomness(seed)
    stats = RunStats()
    state = BitState.zero(budget_bits)
    state = _advance(alg, samples, state, shared, budget_bits, first_index=1, stats=stats)
    return alg.finalize(state, shared), stats


def shuffle(samples, seed: int) -> list:
    """Uniform random permutation, Fisher-Yates driven by the seeded stream."""
    out = list(samples)
    n = len(out)
    if n < 2:
        return out
    sr = SharedRandomness(seed)
    u = sr.values(0, n - 1)
    for i in range(n - 1, 0, -1):
        j = int(u[n - 1 - i] * (i + 1))
        out[i], out[j] = out[j], out[i]
    return out


@dataclass(frozen=True)
class Message:
    """One-way protocol message: nbits bits, MSB-first, trailing bits zero."""

    nbits: int
    payload: bytes

    def __post_init__(self):
        if self.nbits < 0:
            raise ValidationError("message length cannot be negative")
        if len(self.payload) != (self.nbits + 7) // 8:
            raise ValidationError("message payload length does not match nbits")
        _check_trailing_zero(self.payload, self.nbits)
        object.__setattr__(self, "payload", bytes(self.payload))


@dataclass(frozen=True)
class Protocol:
    """One-way protocol: party 1 compresses its input into a message, party 2
    produces the output from its own input, the message, and shared randomness.

    send(input1, budget_bits, shared) -> Message
    output(input2, message, budget_bits, shared) -> value
    """

    send: Callable[[Any, int, SharedRandomness], Message]
    output: Callable[[Any, Message, int, SharedRandomness], Any]


@dataclass(frozen=True)
class ProtocolTranscript:
    message: Message
    output: Any
    budget_bits: int

    def __post_init__(self):
        if self.message.nbits > self.budget_bits:
            raise BudgetViolation(
                "message is %d bits, budget %d" % (self.message.nbits, self.budget_bits)
            )


def run_protocol(p: Protocol, input1, input2, budget_bits: int, seed: int) -> ProtocolTranscript:
    if budget_bits < 1:
        raise ValidationError("budget must be at least 1 bit")
    shared = SharedRandomness(seed)
    msg = p.send(input1, budget_bits, shared)
    if msg.nbits > budget_bits:
        raise BudgetViolation("party 1 sent %d bits, budget %d" % (msg.nbits, budget_bits))
    out = p.output(input2, msg, budget_bits, shared)
    return ProtocolTranscript(message=msg, output=out, budget_bits=budget_bits)


def one_pass_to_protocol(alg: OnePassAlgorithm, split_index: int) -> Protocol:
    """The memory-to-communication simulation.

    Party 1 runs the one-pass algorithm over the first split_index samples and
    sends the final memory configuration (exactly the budget, by definition).
    Party 2 resumes from that configuration on the remaining samples and
    finalizes.  Each party runs a fresh copy of the algorithm object, so the
    only channel between them is the message plus shared randomness; for every
    honest algorithm the output equals run_one_pass on the concatenated
    stream, bit for bit.
    """
    if split_index < 0:
        raise ValidationError("split index cannot be negative")
    pristine = copy.deepcopy(alg)

    def send(input1, budget_bits, shared):
        if len(input1) != split_index:
            raise ValidationError(
                "party 1 holds %d samples, split index is %d" % (len(input1), split_index)
            )
        a = copy.deepcopy(pristine)
        state = BitState.zero(budget_bits)
        state = _advance(a, input1, state, shared, budget_bits, first_index=1)
        return Message(nbits=budget_bits, payload=state.payload)

    def output(input2, message, budget_bits, shared):
        if message.nbits != budget_bits:
            raise ValidationError("simulation expects a full-state message")
        a = copy.deepcopy(pristine)
        state = BitState(budget_bits, message.payload)
        state = _advance(a, input2, state, shared, budget_bits, first_index=split_index + 1)
        return a.finalize(state, shared)

    return Protocol(send=send, output=output)


class BitWriter:
    """MSB-first bit packer for state layouts with sub-byte fields."""

    def __init__(self):
        self._bytes = bytearray()
        self._nbits = 0

    @property
    def nbits(self) -> int:
        return self._nbits

    def append_uint(self, value: int, nbits: int):
        value = int(value)
        if value < 0 or (nbits < 64 and value >> nbits):
            raise ValidationError("value %d does not fit in %d bits" % (value, nbits))
        for k in range(nbits - 1, -1, -1):
            bit = (value >> k) & 1
            pos = self._nbits % 8
            if pos == 0:
                self._bytes.append(0)
            if bit:
                self._bytes[-1] |= 1 << (7 - pos)
            self._nbits += 1

    def append_bytes(self, data: bytes):
        if self._nbits % 8:
            raise ValidationError("byte append requires byte alignment")
        self._bytes.extend(data)
        self._nbits += 8 * len(data)

    def append_floats(self, arr):
        self.append_bytes(np.asarray(arr, dtype="<f8").tobytes())

    def getvalue(self) -> tuple[bytes, int]:
        return bytes(self._bytes), self._nbits


class BitReader:
    """Inverse of BitWriter over a payload buffer."""

    def __init__(self, payload: bytes):
        self._payload = payload
        self._pos = 0

    def read_uint(self, nbits: int) -> int:
        v = 0
        for _ in range(nbits):
            byte = self._payload[self._pos // 8]
            v = (v << 1) | ((byte >> (7 - self._pos % 8)) & 1)
            self._pos += 1
        return v

    def read_bytes(self, n: int) -> bytes:
        if self._pos % 8:
            raise ValidationError("byte read requires byte alignment")
        start = self._pos // 8
        self._pos += 8 * n
        return self._payload[start : start + n]

    def read_floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.read_bytes(8 * count), dtype="<f8").copy()
