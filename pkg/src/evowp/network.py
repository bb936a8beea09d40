"""Forward pass of the fully connected recurrent policy network.

Hidden and output layers each carry recurrent connections to every neuron
within their own layer, with a one-step delay on the recurrent signal.  tanh
at both levels keeps all activations in (-1, 1), so recurrent signals cannot
blow up.  Output interpretation (discrete argmax / box scaling) lives here
too since it is a property of the network envelope, not of any one task.
"""

from dataclasses import dataclass

import numpy as np


class EvaluationError(ValueError):
    """Raised when a network is driven with non-finite inputs."""


@dataclass(frozen=True)
class RnnParameters:
    """Decoded weight blocks, all stored row-major by destination neuron.

    w_in: (hidden, input), w_hh: (hidden, hidden), b_h: (hidden,),
    w_out: (output, hidden), w_oo: (output, output), b_o: (output,).
    """

    w_in: np.ndarray
    w_hh: np.ndarray
    b_h: np.ndarray
    w_out: np.ndarray
    w_oo: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        h, i = self.w_in.shape
        o = self.b_o.shape[0]
        if self.w_hh.shape != (h, h) or self.b_h.shape != (h,):
            raise ValueError("hidden block shapes inconsistent")
        if self.w_out.shape != (o, h) or self.w_oo.shape != (o, o):
            raise ValueError("output block shapes inconsistent")

    @property
    def input_size(self) -> int:
        return self.w_in.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.w_in.shape[0]

    @property
    def output_size(self) -> int:
        return self.b_o.shape[0]


@dataclass(frozen=True)
class RnnState:
    """Persistent activations; fresh episodes start from all zeros."""

    h: np.ndarray
    o: np.ndarray


def reset_state(topology) -> RnnState:
    return RnnState(np.zeros(topology.hidden_size), np.zeros(topology.output_size))


def pad_observation(obs, size: int = 6) -> np.ndarray:
    """Right-pad a shorter observation with zeros up to the input width."""
    x = np.asarray(obs, dtype=np.float64)
    if x.shape[0] > size:
        raise ValueError(f"observation of length {x.shape[0]} exceeds input width {size}")
    if x.shape[0] < size:
        x = np.concatenate([x, np.zeros(size - x.shape[0])])
    return x


def step(params: RnnParameters, state: RnnState, obs) -> tuple[np.ndarray, RnnState]:
    """One network step; returns (output, next_state).

    The output layer sees the freshly computed hidden activations and the
    previous output activations.
    """
    x = pad_observation(obs, params.input_size)
    if not np.isfinite(x).all():
        raise EvaluationError(f"non-finite network input: {x}")
    h = np.tanh(params.w_in @ x + params.w_hh @ state.h + params.b_h)
    o = np.tanh(params.w_out @ h + params.w_oo @ state.o + params.b_o)
    return o, RnnState(h, o)


def interpret_discrete(output, n: int) -> int:
    """Action index for an n-way discrete task: argmax over the first n
    outputs, ties broken toward the lowest index.  Trailing outputs are
    ignored (outputs are kept from the left)."""
    if not 1 <= n <= len(output):
        raise ValueError(f"discrete arity {n} out of range")
    return int(np.argmax(np.asarray(output)[:n]))


def interpret_box(output, bounds) -> np.ndarray:
    """Scale tanh outputs from (-1, 1) onto per-signal (low, high) ranges."""
    out = np.asarray(output, dtype=np.float64)
    scaled = np.empty(len(bounds))
    for k, (low, high) in enumerate(bounds):
        if not (np.isfinite(low) and np.isfinite(high) and low < high):
            raise ValueError(f"bad bounds for signal {k}: ({low}, {high})")
        scaled[k] = low + (out[k] + 1.0) * 0.5 * (high - low)
    return scaled
