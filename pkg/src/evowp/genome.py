"""Fixed-layout genome encoding and its decoding into network weights.

A genome is a flat vector of real weights plus a boolean connection mask of
the same length.  The node layout never changes (6 inputs, up to 6 hidden,
3 outputs); evolution only adds, removes and perturbs connections, so the
mapping from genotype to phenotype is direct.  Masked-off positions keep
their stored weight but decode to zero, which makes remove-then-re-add
mutations non-destructive.
"""

from dataclasses import dataclass, field

import numpy as np

from .network import RnnParameters


class GenomeFormatError(ValueError):
    """Raised when a serialized genome cannot be parsed."""


@dataclass(frozen=True)
class Topology:
    """Node counts of the policy network: 6 inputs, <=6 hidden, 3 outputs."""

    input_size: int = 6
    hidden_size: int = 6
    output_size: int = 3

    def __post_init__(self):
        if self.input_size != 6 or self.output_size != 3:
            raise ValueError("the task envelope requires 6 inputs and 3 outputs")
        if not 1 <= self.hidden_size <= 6:
            raise ValueError("hidden_size must be between 1 and 6")

    @property
    def parameter_count(self) -> int:
        i, h, o = self.input_size, self.hidden_size, self.output_size
        return i * h + h * h + h + h * o + o * o + o


class ParameterLayout:
    """Bijection between flat genome indices and (block, dest, src) coordinates.

    Block order: input->hidden, hidden->hidden, hidden bias, hidden->output,
    output->output, output bias.  Matrix blocks are stored row-major by
    destination neuron; bias blocks are indexed by destination only.
    """

    BLOCKS = ("in_hidden", "hidden_hidden", "hidden_bias", "hidden_out", "out_out", "out_bias")

    def __init__(self, topology: Topology):
        i, h, o = topology.input_size, topology.hidden_size, topology.output_size
        self.topology = topology
        # (rows=destinations, cols=sources); biases have no source axis
        self._shapes = {
            "in_hidden": (h, i),
            "hidden_hidden": (h, h),
            "hidden_bias": (h,),
            "hidden_out": (o, h),
            "out_out": (o, o),
            "out_bias": (o,),
        }
        self._offsets = {}
        start = 0
        for name in self.BLOCKS:
            size = int(np.prod(self._shapes[name]))
            self._offsets[name] = start
            start += size
        self.total = start

    def shape(self, block: str) -> tuple:
        return self._shapes[block]

    def block_slice(self, block: str) -> slice:
        start = self._offsets[block]
        return slice(start, start + int(np.prod(self._shapes[block])))

    def index(self, block: str, dest: int, src: int | None = None) -> int:
        shape = self._shapes[block]
        if len(shape) == 1:
            if src is not None:
                raise ValueError(f"{block} is a bias block and has no source axis")
            if not 0 <= dest < shape[0]:
                raise IndexError(f"dest {dest} out of range for {block}")
            return self._offsets[block] + dest
        if src is None:
            raise ValueError(f"{block} needs a source index")
        if not (0 <= dest < shape[0] and 0 <= src < shape[1]):
            raise IndexError(f"({dest}, {src}) out of range for {block}")
        return self._offsets[block] + dest * shape[1] + src

    def coords(self, flat: int) -> tuple:
        """Inverse of index(); returns (block, dest, src) with src None for biases."""
        if not 0 <= flat < self.total:
            raise IndexError(f"flat index {flat} out of range")
        for name in self.BLOCKS:
            shape = self._shapes[name]
            size = int(np.prod(shape))
            off = self._offsets[name]
            if flat < off + size:
                local = flat - off
                if len(shape) == 1:
                    return name, local, None
                return name, local // shape[1], local % shape[1]
        raise AssertionError("unreachable")


@dataclass(frozen=True)
class Genome:
    """Flat weight vector plus connection mask; immutable once built."""

    weights: np.ndarray
    mask: np.ndarray
    topology: Topology = field(default_factory=Topology)

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        m = np.ascontiguousarray(self.mask, dtype=bool)
        n = self.topology.parameter_count
        if w.shape != (n,) or m.shape != (n,):
            raise ValueError(
                f"genome length mismatch: weights {w.shape}, mask {m.shape}, expected ({n},)"
            )
        w.flags.writeable = False
        m.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "mask", m)


def parameter_count(topology: Topology) -> int:
    return topology.parameter_count


def connection_count(genome: Genome) -> int:
    """Number of enabled connections (true mask entries)."""
    return int(genome.mask.sum())


def random_genome(topology: Topology, init_fraction: float, rng: np.random.Generator) -> Genome:
    """Genome with round(init_fraction * parameter_count) active connections.

    Active positions are chosen uniformly without replacement and their
    weights drawn from a standard normal; everything else is masked off and
    stored as zero.
    """
    if not 0.0 <= init_fraction <= 1.0:
        raise ValueError("init_fraction must be in [0, 1]")
    n = topology.parameter_count
    k = int(round(init_fraction * n))
    weights = np.zeros(n)
    mask = np.zeros(n, dtype=bool)
    if k > 0:
        active = rng.choice(n, size=k, replace=False)
        mask[active] = True
        weights[active] = rng.standard_normal(k)
    return Genome(weights, mask, topology)


def decode(genome: Genome, topology: Topology | None = None) -> RnnParameters:
    """Split the masked weight vector into the network's weight blocks."""
    topology = topology or genome.topology
    if topology.parameter_count != genome.weights.shape[0]:
        raise ValueError(
            f"genome of length {genome.weights.shape[0]} does not fit topology "
            f"({topology.parameter_count} parameters)"
        )
    layout = ParameterLayout(topology)
    w = np.where(genome.mask, genome.weights, 0.0)
    blocks = {
        name: w[layout.block_slice(name)].reshape(layout.shape(name)) for name in layout.BLOCKS
    }
    return RnnParameters(
        w_in=blocks["in_hidden"],
        w_hh=blocks["hidden_hidden"],
        b_h=blocks["hidden_bias"],
        w_out=blocks["hidden_out"],
        w_oo=blocks["out_out"],
        b_o=blocks["out_bias"],
    )


def flatten_parameters(params: RnnParameters, topology: Topology) -> np.ndarray:
    """Inverse of decode(): re-flatten weight blocks into layout order."""
    return np.concatenate(
        [
            params.w_in.ravel(),
            params.w_hh.ravel(),
            params.b_h.ravel(),
            params.w_out.ravel(),
            params.w_oo.ravel(),
            params.b_o.ravel(),
        ]
    )


def serialize(genome: Genome) -> str:
    """Three-line text form: header, weights at full precision, mask flags."""
    t = genome.topology
    lines = [
        f"topology {t.input_size} {t.hidden_size} {t.output_size}",
        " ".join(repr(float(w)) for w in genome.weights),
        " ".join("1" if m else "0" for m in genome.mask),
    ]
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> Genome:
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) != 3:
        raise GenomeFormatError(f"expected 3 non-empty lines (header, weights, mask), got {len(lines)}")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "topology":
        raise GenomeFormatError(f"bad header line: {lines[0]!r}")
    try:
        topology = Topology(int(header[1]), int(header[2]), int(header[3]))
    except ValueError as exc:
        raise GenomeFormatError(f"bad topology header: {exc}") from exc
    try:
        weights = np.array([float(tok) for tok in lines[1].split()])
    except ValueError as exc:
        raise GenomeFormatError(f"bad weights line: {exc}") from exc
    mask_tokens = lines[2].split()
    bad = [tok for tok in mask_tokens if tok not in ("0", "1")]
    if bad:
        raise GenomeFormatError(f"bad mask line: flags must be 0 or 1, got {bad[0]!r}")
    mask = np.array([tok == "1" for tok in mask_tokens])
    n = topology.parameter_count
    if weights.shape[0] != n:
        raise GenomeFormatError(f"weights line has {weights.shape[0]} values, expected {n}")
    if mask.shape[0] != weights.shape[0]:
        raise GenomeFormatError(
            f"mask line has {mask.shape[0]} flags but weights line has {weights.shape[0]} values"
        )
    return Genome(weights, mask, topology)
