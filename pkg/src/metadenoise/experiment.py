"""Assembling runnable problems from a configuration: clean data (built-in
synthetic generators or files), the task distribution, the network, and the
held-out real-noise pairs."""

from __future__ import annotations

from .config import ExperimentConfig
from .datasets import load_image_dataset, load_signal_dataset
from .errors import ConfigError
from .evaluation import Problem
from .nets import NetworkSpec, build_conv_denoiser, build_fc_denoiser
from .optim import InnerLoopConfig, OptimizerConfig
from .rng import RngStream
from .tasks import (
    PairedSet,
    ParamPrior,
    TaskDistribution,
    TaskTemplate,
    generate_phantoms,
    generate_signals,
    make_real_pairs_ct,
    make_real_pairs_image,
    make_real_pairs_signal,
    patchify,
    window_signal,
)
from .training import MetaConfig

# Test windows/patches are tiled without overlap, and the test set is capped
# to keep evaluation time bounded at desk scale.
MAX_REAL_PAIRS = 200


def default_signal_distribution() -> TaskDistribution:
    """Gaussian 1-D tasks: mu ~ U(-0.1, 0.1), sigma ~ U(0, 0.3)."""
    return TaskDistribution(
        (
            TaskTemplate(
                "gaussian1d",
                priors={
                    "mu": ParamPrior.uniform(-0.1, 0.1),
                    "sigma": ParamPrior.uniform(0.0, 0.3),
                },
            ),
        )
    )


def default_image_distribution() -> TaskDistribution:
    """Equal-weight Gaussian (sigma on the 8-bit scale) and scaled-Poisson
    image tasks."""
    return TaskDistribution(
        (
            TaskTemplate(
                "gaussian2d",
                priors={
                    "mu": ParamPrior.fixed(0.0),
                    "sigma": ParamPrior.choice((15.0 / 255.0, 25.0 / 255.0, 50.0 / 255.0)),
                },
            ),
            TaskTemplate(
                "poisson_image",
                priors={"peak": ParamPrior.choice((30.0, 100.0, 300.0))},
            ),
        )
    )


def default_ct_distribution(n_angles: int) -> TaskDistribution:
    """Equal-weight sinogram-Poisson (one blank-scan factor per draw) and
    image-domain Gaussian (variance ~ U(0.001, 0.003)) tasks."""
    return TaskDistribution(
        (
            TaskTemplate(
                "poisson_sinogram",
                priors={
                    "blank_scan": ParamPrior.choice(
                        (1e4, 3e4, 5e4, 7e4, 1e5, 2e5, 3e5, 5e5)
                    ),
                    "readout_sigma": ParamPrior.fixed(0.0),
                    "n_angles": ParamPrior.fixed(float(n_angles)),
                },
            ),
            TaskTemplate(
                "gaussian2d",
                priors={
                    "mu": ParamPrior.fixed(0.0),
                    "variance": ParamPrior.uniform(0.001, 0.003),
                },
            ),
        )
    )


def _build_net(config: ExperimentConfig) -> NetworkSpec:
    if config.net_kind == "fc":
        dims = (config.window_size,) + tuple(config.net_widths) + (config.window_size,)
        return build_fc_denoiser(dims)
    return build_conv_denoiser(
        depth=config.net_depth, width=config.net_width, residual=config.net_residual
    )


def _inner_config(config: ExperimentConfig) -> InnerLoopConfig:
    return InnerLoopConfig(
        optimizer=OptimizerConfig(kind=config.inner_optimizer, learning_rate=config.inner_lr),
        epochs=config.inner_epochs,
        batch_size=config.inner_batch_size,
        shuffle_seed=config.base_seed,
    )


def _meta_config(config: ExperimentConfig) -> MetaConfig:
    return MetaConfig(
        n_tasks_per_iteration=config.meta_n_tasks,
        outer_iterations=config.meta_outer_iterations,
        epsilon=config.meta_epsilon,
        inner=_inner_config(config),
        k=config.k,
        base_seed=config.base_seed,
    )


def _cap_pairs(pairs, limit: int = MAX_REAL_PAIRS) -> PairedSet:
    if len(pairs) <= limit:
        return pairs
    return PairedSet(clean=pairs.clean[:limit], noisy=pairs.noisy[:limit])


def build_problem(config: ExperimentConfig) -> Problem:
    """Materialize the configured problem; synthetic data derive from
    base_seed, file data come from data.path."""
    stream = RngStream(config.base_seed, ("problem",))
    if config.templates:
        dist = config.task_distribution
    elif config.problem == "signal1d":
        dist = default_signal_distribution()
    elif config.problem == "image2d":
        dist = default_image_distribution()
    else:
        dist = default_ct_distribution(config.ct_angles)

    if config.problem == "signal1d":
        if config.data_source == "files":
            records = load_signal_dataset(config.data_path)
        else:
            records = generate_signals(config.data_count, config.data_signal_length, stream.child("clean"))
        n_train = max(1, int(round(len(records) * config.data_train_fraction)))
        if n_train >= len(records):
            n_train = len(records) - 1
        train_records, held_out = records[:n_train], records[n_train:]
        pool = []
        for record in train_records:
            pool.extend(window_signal(record, config.window_size, config.window_stride))
        real_pairs = make_real_pairs_signal(
            held_out, config.window_size, config.window_size, stream.child("real")
        )
        max_val = 1.0
    elif config.problem == "image2d":
        if config.data_source == "files":
            images = load_image_dataset(config.data_path)
        else:
            images = generate_phantoms(config.data_count, config.data_image_size, stream.child("clean"))
        n_train = max(1, int(round(len(images) * config.data_train_fraction)))
        if n_train >= len(images):
            n_train = len(images) - 1
        train_images, held_out = images[:n_train], images[n_train:]
        pool = []
        for image in train_images:
            pool.extend(patchify(image, config.patch_size, config.patch_stride))
        real_pairs = make_real_pairs_image(
            held_out, config.patch_size, config.patch_size, stream.child("real")
        )
        max_val = 1.0
    else:  # ct2d
        if config.data_source == "files":
            images = load_image_dataset(config.data_path)
        else:
            images = generate_phantoms(config.data_count, config.data_image_size, stream.child("clean"))
        n_train = max(1, int(round(len(images) * config.data_train_fraction)))
        if n_train >= len(images):
            n_train = len(images) - 1
        train_images, held_out = images[:n_train], images[n_train:]
        pool = list(train_images)
        real_pairs = make_real_pairs_ct(held_out, config.ct_angles, stream.child("real"))
        max_val = 1.0

    real_pairs = _cap_pairs(real_pairs)
    if len(real_pairs) < config.k + 1:
        raise ConfigError(
            f"only {len(real_pairs)} real pairs available but k={config.k} needs at least k+1"
        )
    net = _build_net(config)
    if config.problem == "signal1d" and net.input_size != config.window_size:
        raise ConfigError(
            f"net input extent {net.input_size} does not match window.size {config.window_size}"
        )
    return Problem(
        name=f"{config.problem}-desk",
        kind=config.problem,
        metric=config.metric,
        max_val=max_val,
        dist=dist,
        clean_pool=tuple(pool),
        real_pairs=real_pairs,
        net=net,
        meta=_meta_config(config),
        supervised_budget=config.effective_supervised_budget,
    )
