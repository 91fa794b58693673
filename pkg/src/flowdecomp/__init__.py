"""Flow decompositions and decode-forward rate regions for all-cast relay networks."""
from .channel import (
    DEFAULT_EPS,
    ChannelError,
    DMChannel,
    InputDist,
    eval_region,
    load_channel,
    mutual_info,
    sample_boundary,
    verify_identity,
)
from .decomposition import (
    FlowDecomposition,
    LayeredPartition,
    MalformedDecomposition,
    NotCompleteError,
    active_sets,
    bifurcates,
    check_splitting,
    construct_complete,
    decode_vector_offsets,
    equivalent,
    is_complete,
    parse_partition,
)
from .flows import (
    INFINITE,
    ChannelRoles,
    Flow,
    FlowSet,
    FlowSpecError,
    covered_nodes,
    cumulative_delay,
    parse_flow_spec,
    validate_flow_set,
)
from .region import Constraint, MITerm, Region, df_region, outer_region
from .shift import CoverError, LemmaViolation, OutsideRegionError, cover, shift

__version__ = "0.1.0"
