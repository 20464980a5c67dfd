"""Cell-count CNN architecture search: grid, random, and genetic strategies
over (conv cells, dense cells) candidates, with pluggable evaluators and
reproducible, logged runs."""

__version__ = "0.1.0"

from .errors import (
    CellSearchError,
    CodecError,
    ConfigError,
    ContractError,
    RunAborted,
    TransportError,
)
from .space import (
    CandidateArchitecture,
    GenomeLayout,
    SearchSpace,
    build_plan,
    candidate_params,
    count_params,
    decode_genome,
    encode_architecture,
    format_size_millions,
)

__all__ = [
    "CandidateArchitecture",
    "CellSearchError",
    "CodecError",
    "ConfigError",
    "ContractError",
    "GenomeLayout",
    "RunAborted",
    "SearchSpace",
    "TransportError",
    "__version__",
    "build_plan",
    "candidate_params",
    "count_params",
    "decode_genome",
    "encode_architecture",
    "format_size_millions",
]
