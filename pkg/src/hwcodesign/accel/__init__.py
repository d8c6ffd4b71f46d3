from .space import (
    DEFAULT_CONFIG,
    FULL_SPACE,
    ONEHOT_SIZE,
    PARAM_NAMES,
    PARAM_RANGES,
    PARAM_SIZES,
    ConfigRangeError,
    HwConfig,
    HwSpace,
    Validity,
    decode_onehot,
    encode_onehot,
    encode_onehot_batch,
    enumerate_space,
    is_valid,
    valid_configs,
    valid_fraction,
    valid_mask,
)
from .costmodel import (
    InfeasibleWorkloadError,
    InvalidConfigError,
    LayerWorkload,
    PerfReport,
    TilingChoice,
    optimal_tiling,
    simulate,
)
