"""Flat key = value run configuration for the command-line front end."""

from dataclasses import dataclass, field

from .als import HyperParams
from .gridsearch import DEFAULT_GRID, GridSpec
from .sampler import ProposalConfig
from .trace import DEFAULT_WINDOW
from .tuner import SAConfig


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


MODES = ("fixed", "eb", "grid")

_DEFAULTS = {
    "format": "tab",
    "test_fraction": "0.2",
    "seed": "42",
    "output_dir": "out",
    "als_max_sweeps": "100",
    "als_loss_tol": "1e-6",
    "eb_a": "5e-5",
    "eb_tol": "1e-5",
    "eb_max_iters": "200000",
    "eb_alpha": "0.9",
    "eb_sigma1": "0.5",
    "eb_sigma2": "0.5",
    "eb_lambda1_init": "10",
    "eb_lambda2_init": "10",
    "smooth_window": str(DEFAULT_WINDOW),
    "grid_lambda1": ",".join(f"{v:g}" for v in DEFAULT_GRID),
    "grid_lambda2": ",".join(f"{v:g}" for v in DEFAULT_GRID),
}

_KNOWN_KEYS = set(_DEFAULTS) | {"dataset", "mode", "k", "lambda1", "lambda2", "k_values"}


@dataclass
class RunConfig:
    """Everything one command needs, already validated and typed."""

    dataset: str
    dataset_format: str
    mode: str
    k: int
    test_fraction: float
    seed: int
    output_dir: str
    als_max_sweeps: int
    als_loss_tol: float
    hyper: HyperParams = None          # fixed mode only
    sa: SAConfig = None                # eb mode only
    grid: GridSpec = None              # grid mode only
    smooth_window: int = DEFAULT_WINDOW
    k_values: list = field(default_factory=list)


def _parse_lines(text, source):
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{source}:{line_no}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{line_no}: duplicate key {key!r}")
        values[key] = value
    return values


def _as_float(values, key):
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {values[key]!r}") from None


def _as_int(values, key):
    try:
        return int(values[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {values[key]!r}") from None


def _as_float_list(values, key):
    raw = values[key].replace(",", " ").split()
    if not raw:
        raise ConfigError(f"{key} must list at least one value")
    try:
        return [float(v) for v in raw]
    except ValueError:
        raise ConfigError(f"{key} must be a list of numbers, got {values[key]!r}") from None


def parse_config(path, seed_override=None, output_dir_override=None):
    """Read and validate a config file.

    Exactly one tuning mode (fixed, eb, or grid) must be selected via the
    ``mode`` key; mode-specific settings fall back to their defaults.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None

    values = dict(_DEFAULTS)
    values.update(_parse_lines(text, str(path)))

    for required in ("dataset", "mode", "k"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r}")
    if values["mode"] not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {values['mode']!r}")
    if values["format"] not in ("tab", "csv"):
        raise ConfigError(f"format must be 'tab' or 'csv', got {values['format']!r}")

    seed = int(seed_override) if seed_override is not None else _as_int(values, "seed")
    out_dir = output_dir_override if output_dir_override is not None else values["output_dir"]

    k = _as_int(values, "k")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    test_fraction = _as_float(values, "test_fraction")
    if not (0.0 < test_fraction < 1.0):
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")

    cfg = RunConfig(
        dataset=values["dataset"],
        dataset_format=values["format"],
        mode=values["mode"],
        k=k,
        test_fraction=test_fraction,
        seed=seed,
        output_dir=out_dir,
        als_max_sweeps=_as_int(values, "als_max_sweeps"),
        als_loss_tol=_as_float(values, "als_loss_tol"),
        smooth_window=_as_int(values, "smooth_window"),
    )
    if cfg.als_max_sweeps < 1:
        raise ConfigError(f"als_max_sweeps must be >= 1, got {cfg.als_max_sweeps}")
    if cfg.smooth_window < 1:
        raise ConfigError(f"smooth_window must be >= 1, got {cfg.smooth_window}")

    try:
        if cfg.mode == "fixed":
            if "lambda1" not in values or "lambda2" not in values:
                raise ConfigError("fixed mode requires lambda1 and lambda2")
            cfg.hyper = HyperParams(_as_float(values, "lambda1"), _as_float(values, "lambda2"))
        elif cfg.mode == "eb":
            cfg.sa = SAConfig(
                a=_as_float(values, "eb_a"),
                tol=_as_float(values, "eb_tol"),
                max_iters=_as_int(values, "eb_max_iters"),
                proposal=ProposalConfig(
                    _as_float(values, "eb_alpha"),
                    _as_float(values, "eb_sigma1"),
                    _as_float(values, "eb_sigma2"),
                ),
                lambda0=HyperParams(
                    _as_float(values, "eb_lambda1_init"),
                    _as_float(values, "eb_lambda2_init"),
                ),
                seed=seed,
            )
        else:
            cfg.grid = GridSpec(
                _as_float_list(values, "grid_lambda1"),
                _as_float_list(values, "grid_lambda2"),
            )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

    if "k_values" in values:
        ks = [int(v) for v in values["k_values"].replace(",", " ").split()]
        if not ks or any(kk < 1 for kk in ks):
            raise ConfigError(f"k_values must be positive integers, got {values['k_values']!r}")
        if len(set(ks)) != len(ks):
            raise ConfigError(f"k_values contains duplicates: {values['k_values']!r}")
        cfg.k_values = ks

    return cfg
