"""Two-point threshold tester.

Distinguishes Bernoulli rates p <= theta1 from p >= theta2 with one-sided
failure probability delta_call each way.  The sample size comes from the
additive Chernoff bounds with the slack split so both tails bind at once:

    N    = ceil( (sqrt(3 theta1) + sqrt(2 theta2))^2 / (theta2 - theta1)^2
                 * ln(1/delta_call) )
    eta1 = (theta2 - theta1) * sqrt(3 theta1) / (sqrt(3 theta1) + sqrt(2 theta2))
    eta2 = (theta2 - theta1) - eta1

The verdict compares the empirical rate against the single boundary
t = theta1 + eta1; ties count as yes.  At theta1 = 0 this collapses to
N = ceil((2/theta2) ln(1/delta_call)) with t = 0, so yes requires a clean
sweep of zero successes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

from .core import OutOfRangeError, QuantCertError, SampleTally, SeedSpec
from .oracle import Oracle, OracleFailure


class InvalidIntervalError(QuantCertError):
    """Tester endpoints must satisfy 0 <= theta1 < theta2 <= 1."""


class InvalidConfidenceError(QuantCertError):
    """Per-call failure budget must sit strictly inside (0, 1)."""


@dataclass(frozen=True)
class TesterPlan:
    """Fully derived execution plan for one tester call.

    eta2 is defined by subtraction from the interval width and is never
    recomputed; t is theta1 + eta1 and doubles as theta2 - eta2 up to
    rounding.
    """

    theta1: float
    theta2: float
    delta_call: float
    n_samples: int
    eta1: float
    eta2: float
    t: float


@dataclass(frozen=True)
class TesterResult:
    plan: TesterPlan
    tally: SampleTally
    outcome: Literal["yes", "no"]


def plan_tester(theta1: float, theta2: float, delta_call: float) -> TesterPlan:
    """Derive the sample size and decision boundary for one call.

    Raises InvalidIntervalError unless 0 <= theta1 < theta2 <= 1, and
    InvalidConfidenceError unless 0 < delta_call < 1.
    """
    if not 0.0 < delta_call < 1.0:
        raise InvalidConfidenceError(
            f"delta_call must sit in (0, 1), got {delta_call}"
        )
    if not (0.0 <= theta1 < theta2 <= 1.0):
        raise InvalidIntervalError(
            f"need 0 <= theta1 < theta2 <= 1, got ({theta1}, {theta2})"
        )
    width = theta2 - theta1
    root1 = math.sqrt(3.0 * theta1)
    root2 = math.sqrt(2.0 * theta2)
    n = math.ceil((root1 + root2) ** 2 / (width * width) * math.log(1.0 / delta_call))
    eta1 = width * root1 / (root1 + root2)
    eta2 = width - eta1
    return TesterPlan(
        theta1=theta1,
        theta2=theta2,
        delta_call=delta_call,
        n_samples=int(n),
        eta1=eta1,
        eta2=eta2,
        t=theta1 + eta1,
    )


def run_tester(
    plan: TesterPlan,
    oracle: Oracle,
    seed: SeedSpec,
    call_index: int = 0,
    batch_size: int = 128,
    threads: int = 1,
) -> TesterResult:
    """Draw exactly plan.n_samples trials and decide against the boundary.

    Trials are fetched in batches of at most batch_size; the final batch is
    truncated.  With threads > 1 the batches run concurrently over disjoint
    trial ranges, and the integer success count makes the result independent
    of completion order.  Oracle failures propagate as OracleFailure with
    the tally accumulated so far attached.
    """
    if batch_size < 1:
        raise OutOfRangeError(f"batch_size must be at least 1, got {batch_size}")
    if threads < 1:
        raise OutOfRangeError(f"threads must be at least 1, got {threads}")

    n = plan.n_samples
    chunks = [(s, min(batch_size, n - s)) for s in range(0, n, batch_size)]
    successes = 0
    trials = 0

    if threads == 1 or len(chunks) <= 1:
        for s, k in chunks:
            try:
                tally = oracle.draw(k, call_index, seed, start=s)
            except OracleFailure as exc:
                part = exc.partial_tally or SampleTally(0, 0)
                raise OracleFailure(
                    str(exc),
                    partial_tally=SampleTally(
                        trials + part.trials, successes + part.successes
                    ),
                ) from exc
            successes += tally.successes
            trials += tally.trials
    else:
        def pull(chunk):
            s, k = chunk
            return oracle.draw(k, call_index, seed, start=s)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(pull, c) for c in chunks]
            failures = []
            for fut in futures:
                try:
                    tally = fut.result()
                except OracleFailure as exc:
                    failures.append(exc)
                    continue
                successes += tally.successes
                trials += tally.trials
            if failures:
                for exc in failures:
                    part = exc.partial_tally or SampleTally(0, 0)
                    trials += part.trials
                    successes += part.successes
                raise OracleFailure(
                    str(failures[0]),
                    partial_tally=SampleTally(trials, successes),
                ) from failures[0]

    tally = SampleTally(trials=trials, successes=successes)
    outcome: Literal["yes", "no"] = "yes" if tally.p_hat <= plan.t else "no"
    return TesterResult(plan=plan, tally=tally, outcome=outcome)
