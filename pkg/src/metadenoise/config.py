"""Experiment configuration: a flat ``key = value`` UTF-8 file with ``#``
comments and dotted key namespaces.

Parsing is total: a well-formed file either loads fully into an
`ExperimentConfig` or fails with a diagnostic naming the offending key or
line. Unknown keys are rejected rather than ignored.

Task templates are numbered: ``task.1.kind = gaussian1d`` plus one entry
per parameter, where a parameter value is either a number (fixed), a
``uniform:low:high`` interval, or a ``choice:v1:v2:...`` set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .tasks import ParamPrior, TaskDistribution, TaskTemplate

PROBLEM_KINDS = ("signal1d", "image2d", "ct2d")
_TASK_PARAM_KEYS = {
    "gaussian1d": {"mu", "sigma", "variance"},
    "gaussian2d": {"mu", "sigma", "variance"},
    "poisson_image": {"peak"},
    "poisson_sinogram": {"blank_scan", "readout_sigma", "n_angles"},
}

_KNOWN_KEYS = {
    "problem",
    "metric",
    "out",
    "base_seed",
    "k",
    "seeds",
    "methods",
    "model.path",
    "data.source",
    "data.path",
    "data.count",
    "data.signal_length",
    "data.image_size",
    "data.train_fraction",
    "window.size",
    "window.stride",
    "patch.size",
    "patch.stride",
    "ct.angles",
    "net.kind",
    "net.widths",
    "net.depth",
    "net.width",
    "net.residual",
    "inner.optimizer",
    "inner.lr",
    "inner.epochs",
    "inner.batch_size",
    "meta.n_tasks",
    "meta.outer_iterations",
    "meta.epsilon",
    "supervised.budget",
    "sweep.ks",
    "sweep.method",
}


def parse_flat_config(text: str) -> dict[str, str]:
    """``key = value`` pairs; '#' starts a comment anywhere on a line."""
    entries: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {number}: empty key")
        if key in entries:
            raise ConfigError(f"line {number}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _parse_prior(key: str, text: str) -> ParamPrior:
    if text.startswith("uniform:"):
        fields = text.split(":")[1:]
        if len(fields) != 2:
            raise ConfigError(f"{key}: uniform prior needs 'uniform:low:high', got {text!r}")
        try:
            low, high = float(fields[0]), float(fields[1])
        except ValueError:
            raise ConfigError(f"{key}: non-numeric uniform bounds in {text!r}") from None
        if low > high:
            raise ConfigError(f"{key}: uniform prior needs low <= high, got {text!r}")
        return ParamPrior.uniform(low, high)
    if text.startswith("choice:"):
        fields = text.split(":")[1:]
        if not fields:
            raise ConfigError(f"{key}: choice prior needs at least one value")
        try:
            return ParamPrior.choice(float(f) for f in fields)
        except ValueError:
            raise ConfigError(f"{key}: non-numeric choice value in {text!r}") from None
    try:
        return ParamPrior.fixed(float(text))
    except ValueError:
        raise ConfigError(f"{key}: expected a number or uniform:/choice: prior, got {text!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    metric: str
    out: str
    base_seed: int
    k: int
    seeds: tuple[int, ...]
    methods: tuple[str, ...]
    model_path: str | None
    data_source: str
    data_path: str | None
    data_count: int
    data_signal_length: int
    data_image_size: int
    data_train_fraction: float
    window_size: int
    window_stride: int
    patch_size: int
    patch_stride: int
    ct_angles: int
    net_kind: str
    net_widths: tuple[int, ...]
    net_depth: int
    net_width: int
    net_residual: bool
    inner_optimizer: str
    inner_lr: float
    inner_epochs: int
    inner_batch_size: int
    meta_n_tasks: int
    meta_outer_iterations: int
    meta_epsilon: float
    supervised_budget: int  # 0 means "match meta-training"
    sweep_ks: tuple[int, ...]
    sweep_method: str
    templates: tuple[TaskTemplate, ...] = field(default_factory=tuple)

    @property
    def task_distribution(self) -> TaskDistribution:
        if not self.templates:
            raise ConfigError("no task templates configured (task.N.kind = ...)")
        return TaskDistribution(self.templates)

    @property
    def effective_supervised_budget(self) -> int:
        if self.supervised_budget > 0:
            return self.supervised_budget
        return self.meta_outer_iterations * self.meta_n_tasks * self.k


class _Fields:
    """Typed accessors with key-level diagnostics over the flat entries."""

    def __init__(self, entries: dict[str, str]):
        self.entries = entries
        self.used: set[str] = set()

    def raw(self, key: str, default: str | None) -> str | None:
        self.used.add(key)
        return self.entries.get(key, default)

    def string(self, key: str, default: str | None, allowed=None) -> str | None:
        value = self.raw(key, default)
        if value is not None and allowed is not None and value not in allowed:
            raise ConfigError(f"{key}: expected one of {sorted(allowed)}, got {value!r}")
        return value

    def integer(self, key: str, default: int, minimum: int | None = None) -> int:
        text = self.raw(key, None)
        if text is None:
            value = default
        else:
            try:
                value = int(text)
            except ValueError:
                raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
        if minimum is not None and value < minimum:
            raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
        return value

    def real(self, key: str, default: float, minimum: float | None = None) -> float:
        text = self.raw(key, None)
        if text is None:
            value = default
        else:
            try:
                value = float(text)
            except ValueError:
                raise ConfigError(f"{key}: expected a number, got {text!r}") from None
        if minimum is not None and value < minimum:
            raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
        return value

    def flag(self, key: str, default: bool) -> bool:
        text = self.raw(key, None)
        if text is None:
            return default
        if text in ("0", "false", "no"):
            return False
        if text in ("1", "true", "yes"):
            return True
        raise ConfigError(f"{key}: expected a boolean (0/1/true/false), got {text!r}")

    def int_list(self, key: str, default: tuple[int, ...]) -> tuple[int, ...]:
        text = self.raw(key, None)
        if text is None:
            return default
        try:
            values = tuple(int(f.strip()) for f in text.split(",") if f.strip())
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated integers, got {text!r}") from None
        if not values:
            raise ConfigError(f"{key}: empty list")
        return values


def _collect_templates(entries: dict[str, str], used: set[str]) -> tuple[TaskTemplate, ...]:
    groups: dict[int, dict[str, str]] = {}
    for key, value in entries.items():
        if not key.startswith("task."):
            continue
        used.add(key)
        fields = key.split(".")
        if len(fields) != 3:
            raise ConfigError(f"{key}: task keys look like task.<n>.<param>")
        try:
            index = int(fields[1])
        except ValueError:
            raise ConfigError(f"{key}: task index must be an integer") from None
        groups.setdefault(index, {})[fields[2]] = value
    templates: list[TaskTemplate] = []
    for index in sorted(groups):
        group = groups[index]
        kind = group.pop("kind", None)
        if kind is None:
            raise ConfigError(f"task.{index}: missing task.{index}.kind")
        if kind not in _TASK_PARAM_KEYS:
            raise ConfigError(f"task.{index}.kind: unknown noise kind {kind!r}")
        weight_text = group.pop("weight", "1")
        try:
            weight = float(weight_text)
        except ValueError:
            raise ConfigError(f"task.{index}.weight: expected a number, got {weight_text!r}") from None
        priors = {}
        for name, text in group.items():
            if name not in _TASK_PARAM_KEYS[kind]:
                raise ConfigError(
                    f"task.{index}.{name}: not a parameter of {kind} "
                    f"(expected {sorted(_TASK_PARAM_KEYS[kind])})"
                )
            priors[name] = _parse_prior(f"task.{index}.{name}", text)
        try:
            templates.append(TaskTemplate(kind=kind, priors=priors, weight=weight))
        except ValueError as exc:
            raise ConfigError(f"task.{index}: {exc}") from None
    return tuple(templates)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        entries = parse_flat_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    fields = _Fields(entries)
    problem = fields.string("problem", None, allowed=set(PROBLEM_KINDS))
    if problem is None:
        raise ConfigError(f"{path}: missing required key 'problem'")
    default_metric = "snr" if problem == "signal1d" else "psnr"
    default_net = "fc" if problem == "signal1d" else "conv"

    templates = _collect_templates(entries, fields.used)
    config = ExperimentConfig(
        problem=problem,
        metric=fields.string("metric", default_metric, allowed={"psnr", "snr"}),
        out=fields.string("out", "runs/out"),
        base_seed=fields.integer("base_seed", 0),
        k=fields.integer("k", 10, minimum=1),
        seeds=fields.int_list("seeds", (1, 2, 3, 4, 5)),
        methods=_check_methods(fields.raw("methods", "supervised,transfer,meta")),
        model_path=fields.raw("model.path", None),
        data_source=fields.string("data.source", "synthetic", allowed={"synthetic", "files"}),
        data_path=fields.raw("data.path", None),
        data_count=fields.integer("data.count", 24, minimum=2),
        data_signal_length=fields.integer("data.signal_length", 320, minimum=32),
        data_image_size=fields.integer("data.image_size", 32, minimum=8),
        data_train_fraction=fields.real("data.train_fraction", 0.75, minimum=0.1),
        window_size=fields.integer("window.size", 30, minimum=2),
        window_stride=fields.integer("window.stride", 1, minimum=1),
        patch_size=fields.integer("patch.size", 16, minimum=4),
        patch_stride=fields.integer("patch.stride", 16, minimum=1),
        ct_angles=fields.integer("ct.angles", 60, minimum=1),
        net_kind=fields.string("net.kind", default_net, allowed={"fc", "conv"}),
        net_widths=fields.int_list("net.widths", (40, 40, 40, 10, 40, 40, 40)),
        net_depth=fields.integer("net.depth", 5, minimum=2),
        net_width=fields.integer("net.width", 16, minimum=1),
        net_residual=fields.flag("net.residual", True),
        inner_optimizer=fields.string(
            "inner.optimizer", "sgd", allowed={"sgd", "adam", "adadelta"}
        ),
        inner_lr=fields.real("inner.lr", 0.05),
        inner_epochs=fields.integer("inner.epochs", 10, minimum=0),
        inner_batch_size=fields.integer("inner.batch_size", 10, minimum=1),
        meta_n_tasks=fields.integer("meta.n_tasks", 1, minimum=1),
        meta_outer_iterations=fields.integer("meta.outer_iterations", 100, minimum=0),
        meta_epsilon=fields.real("meta.epsilon", 1.0, minimum=0.0),
        supervised_budget=fields.integer("supervised.budget", 0, minimum=0),
        sweep_ks=fields.int_list("sweep.ks", (1, 3, 5, 7, 10)),
        sweep_method=fields.string("sweep.method", "meta", allowed={"supervised", "transfer", "meta"}),
        templates=templates,
    )
    if config.inner_lr <= 0:
        raise ConfigError(f"inner.lr: must be positive, got {config.inner_lr}")
    if config.data_train_fraction >= 1.0:
        raise ConfigError(
            f"data.train_fraction: must be < 1 to leave held-out data, got {config.data_train_fraction}"
        )
    unknown = set(entries) - fields.used
    if unknown:
        raise ConfigError(f"{path}: unknown keys: {', '.join(sorted(unknown))}")
    if config.data_source == "files":
        if not config.data_path:
            raise ConfigError("data.path: required when data.source = files")
        if not Path(config.data_path).exists():
            raise ConfigError(f"data.path: {config.data_path} does not exist")
    if config.model_path is not None and not Path(config.model_path).exists():
        raise ConfigError(f"model.path: {config.model_path} does not exist")
    for k in config.sweep_ks:
        if k < 1:
            raise ConfigError(f"sweep.ks: entries must be >= 1, got {k}")
    return config


def _check_methods(text: str) -> tuple[str, ...]:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    if not methods:
        raise ConfigError("methods: empty list")
    for m in methods:
        if m not in ("supervised", "transfer", "meta"):
            raise ConfigError(f"methods: unknown method {m!r}")
    return methods
