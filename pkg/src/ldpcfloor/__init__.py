"""Error-floor lower bounds and FER estimates for quantized LDPC decoders.

Workflow: describe a problematic sub-graph (absorbing set), enumerate the
channel patterns its message-passing decoder cannot correct under chosen
external-input schedules, and evaluate the resulting code-independent
failure probability lambda-hat and error-floor estimate N * lambda-hat at
any SNR; validate against full-graph Monte-Carlo simulation.
"""

from .absorbing import (
    AbsorbingSetError,
    AbsorbingSetGraph,
    Classification,
    DecoderGraphDA,
    aggregate_external,
    automorphisms,
    build_decoder_graph,
    fixture,
    fixture_text,
    is_fully_symmetric,
    validate,
)
from .bounds import (
    BoundCurve,
    BoundError,
    FailureSet,
    RowMatrix,
    bound_curve,
    build_w_inc,
    build_w_max,
    compute_failure_set,
    exact_failure_set,
    fer_estimate,
    lambda_hat,
    lambda_hat_from_vectors,
    rate_shift_db,
)
from .codes import (
    CodeError,
    ParityCheckMatrix,
    array_code,
    count_weight_w_codewords_array,
    find_weight_w_codewords,
    load_alist,
    store_alist,
)
from .decoder import (
    BatchDecoder,
    DecodeResult,
    DecoderConfig,
    DecoderError,
    TannerGraph,
    decode,
    hard_decision,
    msa_check_update,
    phi,
    spa_check_update,
    variable_update,
)
from .quantizer import (
    ChannelModel,
    Quantizer,
    QuantizerError,
    quantizer_from_config,
    quasi_uniform_quantizer,
    snr_to_sigma,
    uniform_quantizer,
)
from .simulate import FERPoint, SimulationError, SimulationPlan, clopper_pearson, simulate_point

__version__ = "0.1.0"
