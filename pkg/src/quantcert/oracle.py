"""Success oracles: stateless sources of 0/1 trial outcomes.

An oracle's draw(k, call_index, seed, start) must be a pure function of its
arguments: batch k trials however you like, the i-th trial of a given call
always sees the same randomness.  That contract is what lets testers batch,
thread, and replay without changing any verdict.
"""

from __future__ import annotations

import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Protocol, Sequence, Union, runtime_checkable

import numpy as np

from .core import (
    DimensionMismatchError,
    OutOfRangeError,
    QuantCertError,
    SampleTally,
    SeedSpec,
)

if TYPE_CHECKING:
    from .nn import Model


class OracleFailure(QuantCertError):
    """An oracle could not complete a draw; carries the partial tally."""

    def __init__(self, message: str, partial_tally: Optional[SampleTally] = None):
        super().__init__(message)
        self.partial_tally = partial_tally


class SpawnFailureError(OracleFailure):
    """The external oracle command could not be started."""


class ProtocolViolationError(OracleFailure):
    """The external oracle replied with something other than one label per line."""


class ChildExitError(OracleFailure):
    """The external oracle exited before answering a full batch."""


@runtime_checkable
class Oracle(Protocol):
    def draw(
        self, k: int, call_index: int, seed: SeedSpec, start: int = 0
    ) -> SampleTally:
        """Run trials [start, start + k) of the given call; return the tally."""
        ...


@runtime_checkable
class Sampler(Protocol):
    """Deterministic batch sampler over a d-dimensional input region."""

    dimension: int

    def batch(
        self, seed: SeedSpec, call_index: int, start: int, count: int
    ) -> np.ndarray:
        ...


@dataclass(frozen=True)
class BernoulliOracle:
    """Synthetic oracle with a known success rate, for calibration and tests."""

    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise OutOfRangeError(f"p must sit in [0, 1], got {self.p}")

    def draw(
        self, k: int, call_index: int, seed: SeedSpec, start: int = 0
    ) -> SampleTally:
        if k == 0:
            return SampleTally(0, 0)
        u = seed.uniforms(call_index, start, k, width=1)[:, 0]
        return SampleTally(trials=k, successes=int(np.count_nonzero(u < self.p)))


class PropertyOracle:
    """Sampler plus predicate: success means the property holds at the point."""

    def __init__(self, sampler: Sampler, predicate) -> None:
        self.sampler = sampler
        self.predicate = predicate

    def draw(
        self, k: int, call_index: int, seed: SeedSpec, start: int = 0
    ) -> SampleTally:
        if k == 0:
            return SampleTally(0, 0)
        points = self.sampler.batch(seed, call_index, start, k)
        batch = getattr(self.predicate, "batch", None)
        if batch is not None:
            hits = np.asarray(batch(points), dtype=bool)
        else:
            hits = np.fromiter(
                (bool(self.predicate(row)) for row in points), dtype=bool, count=k
            )
        return SampleTally(trials=k, successes=int(np.count_nonzero(hits)))


def compose(sampler: Sampler, model: "Model", predicate) -> PropertyOracle:
    """Wire a sampler and a predicate over the model into one oracle.

    The predicate is expected to close over the model already; the model is
    taken here so the sampler dimension can be checked against its input
    layer before any sampling happens.
    """
    if sampler.dimension != model.input_dim:
        raise DimensionMismatchError(
            f"sampler emits {sampler.dimension}-dim points but the model "
            f"expects {model.input_dim}"
        )
    return PropertyOracle(sampler, predicate)


class SubprocessOracle:
    """Bridge to an external classifier speaking a line protocol on stdio.

    Per trial the parent writes one line of comma-separated float
    coordinates; the child answers one line holding a nonnegative integer
    label.  Both sides flush per batch.  Closing the child's stdin tells it
    to shut down.  Success means the child's label differs from
    reference_label.
    """

    def __init__(
        self,
        command: Union[str, Sequence[str]],
        sampler: Sampler,
        reference_label: int,
    ) -> None:
        if reference_label < 0:
            raise OutOfRangeError("reference_label must be a nonnegative class index")
        self.sampler = sampler
        self.reference_label = int(reference_label)
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.command = argv
        self._lock = threading.Lock()
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise SpawnFailureError(f"could not start {argv!r}: {exc}") from exc

    def draw(
        self, k: int, call_index: int, seed: SeedSpec, start: int = 0
    ) -> SampleTally:
        if k == 0:
            return SampleTally(0, 0)
        points = self.sampler.batch(seed, call_index, start, k)
        payload = "".join(
            ",".join(repr(float(v)) for v in row) + "\n" for row in points
        )
        successes = 0
        answered = 0
        with self._lock:
            try:
                self._proc.stdin.write(payload)
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise ChildExitError(
                    f"oracle process died while receiving a batch: {exc}",
                    partial_tally=SampleTally(0, 0),
                ) from exc
            for _ in range(k):
                line = self._proc.stdout.readline()
                if line == "":
                    raise ChildExitError(
                        f"oracle process closed its output after {answered} of "
                        f"{k} replies",
                        partial_tally=SampleTally(answered, successes),
                    )
                text = line.strip()
                try:
                    label = int(text)
                except ValueError:
                    raise ProtocolViolationError(
                        f"expected an integer label, got {text!r}",
                        partial_tally=SampleTally(answered, successes),
                    ) from None
                if label < 0:
                    raise ProtocolViolationError(
                        f"labels must be nonnegative, got {label}",
                        partial_tally=SampleTally(answered, successes),
                    )
                answered += 1
                if label != self.reference_label:
                    successes += 1
        return SampleTally(trials=k, successes=successes)

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        if proc.stdin and not proc.stdin.closed:
            try:
                proc.stdin.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=5.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "SubprocessOracle":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def __del__(self) -> None:
        try:
            self.close()
        except Exception:
            pass
