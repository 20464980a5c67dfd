"""Search space, genome codec, and the canonical architecture plan.

A candidate architecture is a pair of non-negative counts: how many
convolutional cells and how many dense cells are appended to a fixed base
network.  Candidates can be encoded as fixed-length bitstrings for the
genetic algorithm, and expanded into a full layer plan from which exact
parameter counts are computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CodecError, ConfigError

Genome = tuple[int, ...]


@dataclass(frozen=True)
class IntDomain:
    """An integer domain, either an explicit value list or an inclusive range."""

    name: str
    kind: str  # "enumerated" | "range"
    values: tuple[int, ...] = ()
    lo: int = 0
    hi: int = 0

    def __post_init__(self):
        if self.kind == "enumerated":
            if not self.values:
                raise ConfigError(f"domain {self.name!r}: enumerated value list is empty")
            if len(set(self.values)) != len(self.values):
                raise ConfigError(f"domain {self.name!r}: duplicate values {self.values}")
            if any(v < 0 for v in self.values):
                raise ConfigError(f"domain {self.name!r}: negative value in {self.values}")
        elif self.kind == "range":
            if self.lo < 0 or self.lo > self.hi:
                raise ConfigError(f"domain {self.name!r}: bad range [{self.lo}, {self.hi}]")
        else:
            raise ConfigError(f"domain {self.name!r}: unknown kind {self.kind!r}")

    @classmethod
    def enumerated(cls, name: str, values) -> "IntDomain":
        return cls(name=name, kind="enumerated", values=tuple(values))

    @classmethod
    def bounded(cls, name: str, lo: int, hi: int) -> "IntDomain":
        return cls(name=name, kind="range", lo=lo, hi=hi)

    @property
    def max_value(self) -> int:
        return max(self.values) if self.kind == "enumerated" else self.hi

    def contains(self, v: int) -> bool:
        if self.kind == "enumerated":
            return v in self.values
        return self.lo <= v <= self.hi


@dataclass(frozen=True)
class GenomeLayout:
    """Bit layout of a genome: conv field first, dense field second, MSB-first."""

    total_bits: int = 8
    conv_bits: int = 4
    dense_bits: int = 4

    def __post_init__(self):
        if self.conv_bits < 1 or self.dense_bits < 1:
            raise ConfigError("genome fields must be at least 1 bit wide")
        if self.conv_bits + self.dense_bits != self.total_bits:
            raise ConfigError(
                f"genome layout inconsistent: {self.conv_bits}+{self.dense_bits} != {self.total_bits}"
            )

    @property
    def conv_max(self) -> int:
        return (1 << self.conv_bits) - 1

    @property
    def dense_max(self) -> int:
        return (1 << self.dense_bits) - 1


@dataclass(frozen=True)
class CandidateArchitecture:
    """A point in the search space: counts of appended conv and dense cells."""

    conv_cells: int
    dense_cells: int

    def __post_init__(self):
        if self.conv_cells < 0 or self.dense_cells < 0:
            raise ConfigError(f"cell counts must be non-negative, got {self}")


@dataclass(frozen=True)
class SearchSpace:
    conv_domain: IntDomain
    dense_domain: IntDomain
    genome_layout: GenomeLayout = field(default_factory=GenomeLayout)

    def __post_init__(self):
        if self.conv_domain.max_value > self.genome_layout.conv_max:
            raise ConfigError(
                f"conv domain max {self.conv_domain.max_value} does not fit in "
                f"{self.genome_layout.conv_bits} bits"
            )
        if self.dense_domain.max_value > self.genome_layout.dense_max:
            raise ConfigError(
                f"dense domain max {self.dense_domain.max_value} does not fit in "
                f"{self.genome_layout.dense_bits} bits"
            )


def _bits_to_int(bits: Genome) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | b
    return value


def _int_to_bits(value: int, width: int) -> Genome:
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


def decode_genome(genome: Genome, layout: GenomeLayout) -> CandidateArchitecture:
    """Decode a bit vector into a candidate: conv field first, MSB-first."""
    if len(genome) != layout.total_bits:
        raise CodecError(f"genome length {len(genome)} != layout length {layout.total_bits}")
    if any(b not in (0, 1) for b in genome):
        raise CodecError(f"genome contains non-bit values: {genome}")
    conv = _bits_to_int(genome[: layout.conv_bits])
    dense = _bits_to_int(genome[layout.conv_bits :])
    return CandidateArchitecture(conv_cells=conv, dense_cells=dense)


def encode_architecture(arch: CandidateArchitecture, layout: GenomeLayout) -> Genome:
    """Inverse of decode_genome; rejects counts that do not fit their field."""
    if arch.conv_cells > layout.conv_max:
        raise CodecError(f"conv_cells {arch.conv_cells} exceeds {layout.conv_bits}-bit field")
    if arch.dense_cells > layout.dense_max:
        raise CodecError(f"dense_cells {arch.dense_cells} exceeds {layout.dense_bits}-bit field")
    return _int_to_bits(arch.conv_cells, layout.conv_bits) + _int_to_bits(
        arch.dense_cells, layout.dense_bits
    )


def genome_from_string(s: str, layout: GenomeLayout | None = None) -> Genome:
    """Parse a bitstring like "10100001" into a genome, validating the layout."""
    if any(c not in "01" for c in s):
        raise CodecError(f"genome string {s!r} contains characters other than 0/1")
    genome = tuple(int(c) for c in s)
    if layout is not None and len(genome) != layout.total_bits:
        raise CodecError(f"genome string length {len(genome)} != layout length {layout.total_bits}")
    return genome


def genome_to_string(genome: Genome) -> str:
    return "".join(str(b) for b in genome)


def plan_pooling(start_dim: int, n_cells: int) -> list[bool]:
    """Decide, cell by cell, whether a conv cell may halve the spatial dimension.

    Walking the cells in order with current dimension ``d``: a cell pools
    (flag True, ``d`` becomes ``d // 2``) iff ``d >= 2``; otherwise pooling is
    skipped and ``d`` is unchanged.  A dimension of exactly 2 still pools,
    down to 1.  This guard keeps the feature map from ever reaching size 0.
    """
    if start_dim < 1:
        raise ConfigError(f"start_dim must be >= 1, got {start_dim}")
    if n_cells < 0:
        raise ConfigError(f"n_cells must be >= 0, got {n_cells}")
    flags = []
    dim = start_dim
    for _ in range(n_cells):
        if dim >= 2:
            flags.append(True)
            dim //= 2
        else:
            flags.append(False)
    return flags


# Layer descriptors.  Frozen so plans are immutable and hashable.


@dataclass(frozen=True)
class ConvLayer:
    filters: int
    kernel: int
    in_channels: int


@dataclass(frozen=True)
class BatchNormLayer:
    channels: int


@dataclass(frozen=True)
class MaxPoolLayer:
    pass


@dataclass(frozen=True)
class DropoutLayer:
    rate: float


@dataclass(frozen=True)
class FlattenLayer:
    pass


@dataclass(frozen=True)
class DenseLayer:
    in_units: int
    out_units: int


Layer = ConvLayer | BatchNormLayer | MaxPoolLayer | DropoutLayer | FlattenLayer | DenseLayer


@dataclass(frozen=True)
class PlanConfig:
    """Fixed hyperparameters of the canonical architecture."""

    input_size: int = 32
    input_channels: int = 3
    num_classes: int = 10
    base_filters: int = 32
    cell_filters: int = 64
    kernel: int = 3
    dense_units: int = 512
    cell_dropout: float = 0.2
    head_dropout: float = 0.5


DEFAULT_PLAN_CONFIG = PlanConfig()


@dataclass(frozen=True)
class ArchitecturePlan:
    input_shape: tuple[int, int, int]
    num_classes: int
    layers: tuple[Layer, ...]
    pooling_flags: tuple[bool, ...]


def build_plan(
    arch: CandidateArchitecture, config: PlanConfig = DEFAULT_PLAN_CONFIG
) -> ArchitecturePlan:
    """Expand a candidate into the full layer list of the canonical network.

    Base block: conv(base_filters) + batchnorm + maxpool.  Then one cell per
    conv_cells count: conv(cell_filters) + batchnorm + maxpool (where the
    pooling guard allows) + dropout.  Head: flatten, one dense layer per
    dense_cells count, dropout, and the classifier.

    Convolutions preserve the spatial size; only max pooling halves it.
    """
    layers: list[Layer] = []
    dim = config.input_size
    channels = config.input_channels

    layers.append(ConvLayer(config.base_filters, config.kernel, channels))
    channels = config.base_filters
    layers.append(BatchNormLayer(channels))
    layers.append(MaxPoolLayer())
    dim //= 2

    flags = plan_pooling(dim, arch.conv_cells)
    for pooled in flags:
        layers.append(ConvLayer(config.cell_filters, config.kernel, channels))
        channels = config.cell_filters
        layers.append(BatchNormLayer(channels))
        if pooled:
            layers.append(MaxPoolLayer())
            dim //= 2
        layers.append(DropoutLayer(config.cell_dropout))

    layers.append(FlattenLayer())
    units = dim * dim * channels
    for _ in range(arch.dense_cells):
        layers.append(DenseLayer(units, config.dense_units))
        units = config.dense_units
    layers.append(DropoutLayer(config.head_dropout))
    layers.append(DenseLayer(units, config.num_classes))

    return ArchitecturePlan(
        input_shape=(config.input_size, config.input_size, config.input_channels),
        num_classes=config.num_classes,
        layers=tuple(layers),
        pooling_flags=tuple(flags),
    )


def count_params(plan: ArchitecturePlan) -> int:
    """Total parameter count of a plan.

    conv: k*k*c_in*c_out + c_out.  batchnorm: 4*c (scale, shift, and the two
    moving statistics, matching framework "total params" conventions).
    dense: in*out + out.  Pooling, dropout and flatten carry no parameters.
    """
    total = 0
    for layer in plan.layers:
        if isinstance(layer, ConvLayer):
            total += layer.kernel * layer.kernel * layer.in_channels * layer.filters + layer.filters
        elif isinstance(layer, BatchNormLayer):
            total += 4 * layer.channels
        elif isinstance(layer, DenseLayer):
            total += layer.in_units * layer.out_units + layer.out_units
    return total


def candidate_params(
    arch: CandidateArchitecture, config: PlanConfig = DEFAULT_PLAN_CONFIG
) -> int:
    return count_params(build_plan(arch, config))


def format_size_millions(n: int) -> str:
    """Render a parameter count in millions the way the result tables print it.

    The value is truncated, not rounded: counts of at least one million keep
    one decimal ("4.2M"), smaller counts keep two ("0.16M" for 169,738).
    """
    if n < 0:
        raise ConfigError(f"size must be non-negative, got {n}")
    if n >= 1_000_000:
        tenths = n // 100_000
        return f"{tenths // 10}.{tenths % 10}M"
    hundredths = n // 10_000
    return f"0.{hundredths:02d}M"
