import json

import numpy as np
import pytest

from quantcert import SeedSpec, load_model


class CountingOracle:
    """Wraps an oracle and records every draw window it serves."""

    def __init__(self, inner):
        self.inner = inner
        self.windows = []
        self.total_trials = 0

    def draw(self, k, call_index, seed, start=0):
        tally = self.inner.draw(k, call_index, seed, start=start)
        self.windows.append((call_index, start, k))
        self.total_trials += tally.trials
        return tally


class FixedSuccessOracle:
    """Returns a predetermined global success pattern, for boundary tests.

    successes_at holds the trial indices that count as successes; draws are
    stateless functions of (start, k) as the oracle contract requires.
    """

    def __init__(self, successes_at):
        self.successes_at = frozenset(successes_at)

    def draw(self, k, call_index, seed, start=0):
        from quantcert import SampleTally

        hits = sum(1 for i in range(start, start + k) if i in self.successes_at)
        return SampleTally(trials=k, successes=hits)


def linear_model_doc(boundary, input_dim=2, feature=0):
    """Two-class model whose logits are (0, x[feature] - boundary)."""
    weights = [0.0] * (2 * input_dim)
    weights[input_dim + feature] = 1.0
    return json.dumps(
        {
            "input_dim": input_dim,
            "layers": [
                {
                    "kind": "dense",
                    "rows": 2,
                    "cols": input_dim,
                    "weights": weights,
                    "bias": [0.0, -boundary],
                }
            ],
        }
    )


def linear_model(boundary, input_dim=2, feature=0):
    return load_model(linear_model_doc(boundary, input_dim, feature))


@pytest.fixture
def seed():
    return SeedSpec(20240817)


@pytest.fixture
def center2():
    return np.array([0.5, 0.5])
