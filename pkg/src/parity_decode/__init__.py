"""Classical decoders and benchmarks for parity-encoded spin readouts."""

from .code import (
    MatrixFormatError,
    ParityCode,
    all_one_matrix,
    build_code,
    check_matrix,
    codewords,
    encode,
    error_matrix,
    generator_matrix,
    is_codeword,
    matrix_to_vector,
    random_spin_matrix,
    read_spin_matrix_csv,
    syndrome,
    validate_spin_matrix,
    vector_to_matrix,
    write_spin_matrix_csv,
)
from .channels import (
    AwgnParams,
    awgn_observe,
    hard_decide,
    hard_decision_error_prob,
    llr,
    sample_iid_errors,
    spawn_seeds,
    trial_seed,
)
from .decoders import (
    CapacityError,
    DecodeResult,
    InversionWeights,
    TiePolicy,
    bf_decode,
    bf_step,
    bp_decode,
    count_errors,
    decoder_energy,
    flip_spin,
    inversion_function,
    inversion_profile,
    mwd_bruteforce,
    uniform_weights,
)
from .mcmc import (
    HamiltonianParams,
    SampleRun,
    average_error_matrix,
    boltzmann_distribution,
    energy,
    hybrid_decode,
    linear_schedule,
    mcmc_decode,
    pack_state_hex,
    rejection_free_step,
    unpack_state_hex,
    visit_distribution,
)
from .experiments import (
    ProblemInstance,
    bench_iid,
    best_cell,
    brute_force_ground_state,
    efficiency_ratio,
    gen_instance,
    landscape,
    logical_energy,
    trajectory_demo,
    wilson_interval,
)
from .reports import BenchmarkReport, TrajectoryDump

__version__ = "0.1.0"
