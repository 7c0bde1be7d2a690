"""Shared domain types for threshold certification.

A threshold query asks whether a 0/1 property holds for at most a fraction
``theta`` of a samplable space, with slack ``eta`` and failure budget
``delta``.  Everything downstream (testers, strategies, robustness front
ends) speaks in these types.
"""

from __future__ import annotations

import math
import secrets
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

import numpy as np
from numpy.random import Generator, Philox, SeedSequence


class QuantCertError(Exception):
    """Base class for all package errors."""


class OutOfRangeError(QuantCertError):
    """A parameter fell outside its documented range."""


class DegenerateQueryError(QuantCertError):
    """theta + eta exceeds 1; the query admits no refutation region."""


class DomainError(QuantCertError):
    """A mathematical operation was called outside its domain."""


class DimensionMismatchError(QuantCertError):
    """Vector or model dimensions do not line up."""


# ---------------------------------------------------------------------------
# queries and verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdQuery:
    """Decide: does the property hold for at most ``theta`` of the space?

    ``eta`` is the indifference width: densities inside (theta, theta + eta]
    carry no guarantee.  ``delta`` bounds the probability of a wrong verdict
    outside that zone.
    """

    theta: float
    eta: float
    delta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= 1.0:
            raise OutOfRangeError(f"theta must sit in [0, 1], got {self.theta}")
        if not 0.0 < self.eta < 1.0:
            raise OutOfRangeError(f"eta must sit in (0, 1), got {self.eta}")
        if not 0.0 < self.delta <= 1.0:
            raise OutOfRangeError(f"delta must sit in (0, 1], got {self.delta}")
        if self.theta + self.eta > 1.0:
            raise DegenerateQueryError(
                f"theta + eta = {self.theta + self.eta} exceeds 1; "
                "nothing above the threshold band remains to refute"
            )

    @property
    def upper(self) -> float:
        """theta + eta, computed once per access from the stored fields.

        All comparisons against the band's upper edge must use this exact
        derived value, never a re-derived sum with different rounding.
        """
        return self.theta + self.eta


QueryLike = Union[ThresholdQuery, Sequence[float]]


def validate_query(raw: QueryLike) -> ThresholdQuery:
    """Coerce ``raw`` into a validated query.

    Accepts an existing ThresholdQuery (returned unchanged) or a
    (theta, eta, delta) triple.  Raises OutOfRangeError or
    DegenerateQueryError on bad parameters.
    """
    if isinstance(raw, ThresholdQuery):
        return raw
    theta, eta, delta = raw
    return ThresholdQuery(float(theta), float(eta), float(delta))


InconclusiveReason = Literal["budget-exhausted", "timeout"]


@dataclass(frozen=True)
class Verdict:
    """Outcome of a certification run: yes, no, or inconclusive."""

    kind: Literal["yes", "no", "inconclusive"]
    reason: Optional[InconclusiveReason] = None

    def __post_init__(self) -> None:
        if self.kind == "inconclusive":
            if self.reason not in ("budget-exhausted", "timeout"):
                raise OutOfRangeError(
                    "inconclusive verdicts need a reason: budget-exhausted or timeout"
                )
        elif self.reason is not None:
            raise OutOfRangeError("only inconclusive verdicts carry a reason")

    @classmethod
    def yes(cls) -> "Verdict":
        return cls("yes")

    @classmethod
    def no(cls) -> "Verdict":
        return cls("no")

    @classmethod
    def inconclusive(cls, reason: InconclusiveReason) -> "Verdict":
        return cls("inconclusive", reason)


@dataclass(frozen=True)
class SampleTally:
    """Immutable (trials, successes) pair; the rate is always derived."""

    trials: int
    successes: int

    def __post_init__(self) -> None:
        if self.trials < 0:
            raise OutOfRangeError(f"trials must be nonnegative, got {self.trials}")
        if not 0 <= self.successes <= self.trials:
            raise OutOfRangeError(
                f"successes {self.successes} outside [0, {self.trials}]"
            )

    @property
    def p_hat(self) -> float:
        """Empirical success rate; 0.0 for an empty tally."""
        if self.trials == 0:
            return 0.0
        return self.successes / self.trials


# ---------------------------------------------------------------------------
# tail bound
# ---------------------------------------------------------------------------


def chernoff_tail(mu: float, eta: float, n: int, side: str = "upper") -> float:
    """Additive Chernoff bound for the mean of n Bernoulli(mu) draws.

    upper: Pr[p_hat >= mu + eta] <= exp(-n eta^2 / (3 mu))
    lower: Pr[p_hat <= mu - eta] <= exp(-n eta^2 / (2 mu))

    The bound degenerates at mu = 0; callers must special-case p = 0
    themselves.  Raises DomainError on any precondition violation.
    """
    if mu <= 0.0:
        raise DomainError("tail bound undefined at mu <= 0; handle p = 0 separately")
    if mu > 1.0:
        raise DomainError(f"mu must sit in (0, 1], got {mu}")
    if eta <= 0.0:
        raise DomainError(f"eta must be positive, got {eta}")
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    if side == "upper":
        return math.exp(-n * eta * eta / (3.0 * mu))
    if side == "lower":
        return math.exp(-n * eta * eta / (2.0 * mu))
    raise DomainError(f"side must be 'upper' or 'lower', got {side!r}")


# ---------------------------------------------------------------------------
# deterministic randomness
# ---------------------------------------------------------------------------

# Unit-interval conversions from raw 64-bit words.  The half-open form is the
# usual 53-bit construction.  The open form keeps both endpoints excluded so
# inverse-CDF transforms stay finite: its largest value is 1 - 2^-53, which
# is exactly representable, and its smallest is 2^-53.
_HALF_OPEN_SCALE = 2.0 ** -53
_OPEN_SCALE = 2.0 ** -52


def to_unit(raw: np.ndarray) -> np.ndarray:
    """Map uint64 words to float64 in [0, 1)."""
    return (raw >> np.uint64(11)).astype(np.float64) * _HALF_OPEN_SCALE


def to_open_unit(raw: np.ndarray) -> np.ndarray:
    """Map uint64 words to float64 in (0, 1), endpoints excluded."""
    return ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * _OPEN_SCALE


@dataclass(frozen=True)
class SeedSpec:
    """Root seed plus the derivation rule for all per-call randomness.

    Every tester call gets its own counter-based stream, keyed by the call
    index.  Within a stream, trial i owns a fixed-width window of raw words,
    so trial i's randomness is a pure function of (root_seed, call_index, i).
    Batch size and thread count can never change what any trial sees.
    """

    root_seed: int

    DERIVATION = "philox4x64: spawn_key=(call_index,); trial i owns raw words [i*w, (i+1)*w)"

    def __post_init__(self) -> None:
        if not 0 <= self.root_seed < 2 ** 63:
            raise OutOfRangeError("root_seed must sit in [0, 2^63)")

    @classmethod
    def fresh(cls) -> "SeedSpec":
        """Draw a root seed from OS entropy (recorded, so runs stay replayable)."""
        return cls(secrets.randbits(62))

    def child(self, index: int) -> "SeedSpec":
        """Derive an independent child spec, for batches of related runs.

        Child keys use a two-element spawn key, so they can never collide
        with the single-element keys that address tester calls.
        """
        if index < 0:
            raise OutOfRangeError("child index must be nonnegative")
        ss = SeedSequence(self.root_seed, spawn_key=(index, 1))
        return SeedSpec(int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1)))

    def _stream(self, call_index: int) -> Generator:
        if call_index < 0:
            raise OutOfRangeError("call_index must be nonnegative")
        return Generator(Philox(SeedSequence(self.root_seed, spawn_key=(call_index,))))

    def raw_block(self, call_index: int, start: int, count: int, width: int) -> np.ndarray:
        """Raw words for trials [start, start + count), as a (count, width) array.

        Philox advances in counter blocks of four 64-bit outputs, so the
        stream is positioned at the enclosing block and the remainder is
        sliced off.  The result depends only on the addressed window.
        """
        if start < 0 or count < 0 or width < 1:
            raise OutOfRangeError("need start >= 0, count >= 0, width >= 1")
        if count == 0:
            return np.empty((0, width), dtype=np.uint64)
        gen = self._stream(call_index)
        first_raw = start * width
        blocks, offset = divmod(first_raw, 4)
        gen.bit_generator.advance(blocks)
        words = gen.bit_generator.random_raw(offset + count * width)
        return words[offset:].reshape(count, width)

    def uniforms(self, call_index: int, start: int, count: int, width: int = 1) -> np.ndarray:
        """Half-open [0, 1) uniforms, shaped (count, width)."""
        return to_unit(self.raw_block(call_index, start, count, width))
