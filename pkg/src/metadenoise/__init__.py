"""Few-shot denoising at desk scale: meta-training over synthetic noise
tasks, k-shot fine-tuning on held-out "real" noise, and benchmarking
against supervised and transfer baselines with PSNR/SNR metrics and paired
significance tests."""

from .ct import ProjectionGeometry, default_geometry, fbp_inverse, radon_forward
from .evaluation import (
    EvalReport,
    MetricResult,
    Problem,
    compare_methods,
    evaluate_on_test,
    initial_noise_result,
    kshot_sweep,
    psnr,
    snr,
)
from .nets import (
    DenoiserModel,
    LayerSpec,
    NetworkSpec,
    build_conv_denoiser,
    build_ecg_autoencoder,
    build_fc_denoiser,
    forward,
    forward_with_record,
    backward,
    get_params,
    gradient,
    init_params,
    set_params,
)
from .noise import (
    NoiseTask,
    apply_gaussian,
    apply_poisson_image,
    apply_poisson_sinogram,
    apply_task,
    sample_poisson,
)
from .optim import (
    InnerLoopConfig,
    OptimizerConfig,
    OptimizerState,
    adadelta_step,
    adam_step,
    run_inner_loop,
    sgd_step,
)
from .rng import RngStream
from .stats import TTestResult, paired_t_test_one_tailed, student_t_sf
from .tasks import (
    KShotSet,
    PairedSet,
    ParamPrior,
    RealSplit,
    TaskDistribution,
    TaskTemplate,
    build_kshot_set,
    patchify,
    sample_task,
    split_real,
    window_signal,
)
from .tensor import as_tensor, finite_diff_gradient, mse_loss
from .training import (
    MetaConfig,
    TrainLog,
    fine_tune,
    meta_train,
    reptile_outer_update,
    train_supervised,
    transfer_learn,
)

__version__ = "0.1.0"
