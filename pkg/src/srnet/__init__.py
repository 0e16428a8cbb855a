"""Sampling-based weight initialization for single-hidden-layer networks.

Hidden parameters are drawn from a distribution proportional to the
magnitude of a data transform built from derivative-of-bump kernels; output
weights are then fitted by least squares.  Trained baselines (full-batch
quasi-Newton and adaptive-rate SGD) are included for comparison.
"""

from .data import (
    LabelCodebook,
    LabeledDataset,
    NormalizationSpec,
    build_digits_dataset,
    encode_labels,
    gen_boolean,
    gen_sine,
    gen_tsc,
    load_idx,
    make_codebook,
    normalize,
    save_dataset_csv,
    save_idx,
)
from .errors import SrnetError
from .experiments import (
    ExperimentConfig,
    compare_runs,
    read_config_file,
    run_experiment,
    timing_report,
)
from .fitting import (
    BatchOptConfig,
    RegressionConfig,
    SgdConfig,
    SrResult,
    draw_hidden,
    minimize_lbfgs,
    regress_output,
    sr_pipeline,
    train_batch,
    train_sgd,
    uniform_init,
)
from .kernels import (
    LogQuadEnvelope,
    MollifierKernel,
    SigmoidPair,
    build_kernel,
    default_order,
    fit_envelope,
    kernel_eval,
    mollifier_eval,
    sigmoid,
    sigmoid_pair_eval,
)
from .network import (
    NetGradients,
    SigmoidPairNetwork,
    SigmoidUnitNetwork,
    TraceRecord,
    TrainTrace,
    classification_error,
    design_matrix,
    expand_pairs,
    forward,
    gradient,
    load_model,
    loss,
    read_trace,
    save_model,
    write_trace,
)
from .samplers import (
    AnnealConfig,
    ArConfig,
    Box,
    SampleBatch,
    annealed_sample,
    ar_sample,
    ar_sample_transformed,
    draw_pair_distance,
    estimate_envelope,
)
from .transform import (
    EmpiricalTransform,
    SupportBox,
    channel_weights,
    from_alpha_beta,
    make_transform,
    mixture_weights,
    support_contains,
    to_alpha_beta,
    transform_eval,
)

__version__ = "0.1.0"
