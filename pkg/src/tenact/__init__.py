"""tenact: low-rank tensor completion of undersampled k-space with
committee-based active sampling of the next measurement lines."""

from .tensors import (
    ObservationSet,
    fft_forward,
    fft_inverse,
    fold,
    frobenius_norm,
    hadamard,
    mode_product,
    scatter_observed,
    unfold,
)
from .linalg import LeveragePair, SVDFactors, leverage_scores, soft_threshold, svd, svt
from .solver import (
    DivergenceError,
    IdentityTransform,
    ModeApproximations,
    ProblemSpec,
    SolverState,
    admm_sweep,
    bcd_sweep,
    init_state,
    mode_approximations,
    mode_weights,
    objective,
    solve,
)
from .sampling import (
    LemmaReport,
    Pattern,
    UtilityField,
    coherence_baseline,
    combine_utilities,
    lemma_decomposition,
    leverage_utility,
    pattern_utility,
    random_baseline,
    select_batch,
    variance_utility,
)
from .mri import (
    MaskSpec,
    PhantomSpec,
    acquire,
    enumerate_fiber_patterns,
    init_cartesian_mask,
    k_test,
    psnr,
    ser,
    synth_ground_truth,
)
from .tensorfile import TensorFileError, read_tensor, write_tensor
from .experiment import ExperimentConfig, MetricsRow, emit_csv, load_config, parse_config, run_experiment
from .plotting import aggregate_metric, emit_plot

__version__ = "0.1.0"
