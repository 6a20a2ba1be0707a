"""Multiple-access analog fountain codes: encoding, joint BP decoding and density evolution."""

__version__ = "0.1.0"

from .channel import (
    EquivalentCode,
    Scenario,
    UserLink,
    alpha_for_snr,
    equivalent_generator,
    received_powers,
    received_snr,
    scenario_from_config,
    sum_capacity,
    transmit,
)
from .codec import CodeSpec, GeneratorMatrix, bpsk_map, build_generator, encode, extend_generator, hard_decision
from .decoder import DecodeResult, DecoderConfig, decode, decode_batch
from .density import DeScenario, DeState, ber_transfer, de_run, de_step, predict_ber, q_inverse, s_function
from .harness import (
    ExperimentConfig,
    UserSetup,
    ber_curve,
    find_min_symbols,
    load_config,
    run_ber_point,
    sweep,
    sweep_snr,
)
from .weights import (
    AFC8_WEIGHTS,
    GaussFitSpec,
    WeightSet,
    avg_energy,
    coded_symbol_pmf,
    design_weights,
    gaussianity_residual,
    q_function,
)
