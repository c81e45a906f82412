"""Run configuration: shipped defaults, strict schema and resolution.

A user config is a JSON object whose top-level keys replace the defaults of
the chosen experiment. Nested blocks (``simulator``, ``init``, ...) are
replaced wholesale, so a block that is given must be complete. Unknown keys
anywhere are errors.
"""

import hashlib
import json
from copy import deepcopy
from importlib import resources

from jsonschema import Draft202012Validator

from .errors import ConfigError, KmeError
from .kernels import KernelSpec

EXPERIMENTS = ("ttr", "sparse", "lfi", "equivalence-suite")


def _obj(props, required=None):
    return {"type": "object", "properties": props,
            "required": sorted(props) if required is None else required,
            "additionalProperties": False}


POS = {"type": "number", "exclusiveMinimum": 0}
POS_INT = {"type": "integer", "minimum": 1}
SEED = {"type": "integer", "minimum": 0}
KERNEL = _obj({
    "family": {"enum": ["gaussian", "linear", "polynomial"]},
    "lengthscales": {"type": "array", "items": POS, "minItems": 1},
    "signal_variance": POS,
    "degree": POS_INT,
}, required=["family"])
HYPER = _obj({"kernel_k": KERNEL, "kernel_l": KERNEL, "sigma2": POS})
PROBE = _obj({"low": {"type": "number"}, "high": {"type": "number"}, "size": POS_INT})
OPTIMIZER = _obj({"budget": {"type": "integer", "minimum": 0}, "restarts": POS_INT,
                  "log_bounds_halfwidth": POS})
NULLABLE_KERNEL = {"anyOf": [{"type": "null"}, KERNEL]}

SCHEMAS = {
    "ttr": _obj({
        "experiment": {"const": "ttr"}, "seed": SEED, "n": POS_INT, "m": POS_INT,
        "noise_sd": POS, "probe": PROBE, "init": HYPER, "optimizer": OPTIMIZER,
        "baseline_budget": {"type": "integer", "minimum": 0}, "band_sd": POS,
    }, required=["seed", "n", "m", "noise_sd", "probe", "init", "optimizer",
                 "baseline_budget", "band_sd"]),
    "sparse": _obj({
        "experiment": {"const": "sparse"}, "seed": SEED, "m": {"type": "integer", "minimum": 5},
        "n_inducing": POS_INT, "init_points": {"enum": ["random", "data"]}, "tie_kernels": {"type": "boolean"},
        "probe": PROBE,
        "init": HYPER, "true_hyper": HYPER, "optimizer": OPTIMIZER,
    }, required=["seed", "m", "n_inducing", "init_points", "tie_kernels", "probe", "init", "true_hyper",
                 "optimizer"]),
    "lfi": _obj({
        "experiment": {"const": "lfi"}, "seed": SEED,
        "simulator": _obj({"prior_shape": POS, "prior_rate": POS, "theta_true": POS,
                           "n_obs": POS_INT}),
        "n": POS_INT, "m": POS_INT, "S": POS_INT, "R": POS_INT,
        "grid_pad": {"type": "number", "minimum": 0},
        "lambda": POS, "delta": {"anyOf": [{"type": "null"}, POS]},
        "kernels": _obj({"k": NULLABLE_KERNEL, "l": NULLABLE_KERNEL, "lprime": NULLABLE_KERNEL}),
        "learn": _obj({
            "enabled": {"type": "boolean"},
            "params": {"type": "array", "items": {"enum": ["k", "l"]}, "minItems": 1,
                       "uniqueItems": True},
            "budget": {"type": "integer", "minimum": 0}, "restarts": POS_INT,
            "log_bounds_halfwidth": POS,
        }),
        "histogram_bins": POS_INT,
    }, required=["seed", "simulator", "n", "m", "S", "R", "grid_pad", "lambda", "delta",
                 "kernels", "learn", "histogram_bins"]),
    "equivalence-suite": _obj({
        "experiment": {"const": "equivalence-suite"}, "seed": SEED, "n_seeds": POS_INT,
        "perturb": {"type": "number"},
        "checks": {"anyOf": [{"type": "null"},
                             {"type": "array", "items": {"type": "string"}, "uniqueItems": True}]},
    }, required=["seed", "n_seeds", "perturb", "checks"]),
}


def load_defaults():
    text = resources.files("kme_decon").joinpath("defaults.json").read_text()
    return json.loads(text)


def _kernel_blocks(cfg):
    for block in ("init", "true_hyper"):
        if block in cfg:
            yield f"{block}.kernel_k", cfg[block]["kernel_k"]
            yield f"{block}.kernel_l", cfg[block]["kernel_l"]
    for name, spec in cfg.get("kernels", {}).items():
        if spec is not None:
            yield f"kernels.{name}", spec


def validate(experiment, cfg):
    """Raise :class:`ConfigError` listing every schema violation in ``cfg``."""
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    errors = sorted(Draft202012Validator(SCHEMAS[experiment]).iter_errors(cfg),
                    key=lambda e: list(e.path))
    if errors:
        lines = [f"{'.'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))
    for where, spec in _kernel_blocks(cfg):
        try:
            KernelSpec.from_dict(spec)
        except KmeError as exc:
            raise ConfigError(f"{where}: {exc}") from None


def resolve(experiment, user=None, seed=None):
    """Merge ``user`` over the shipped defaults for ``experiment`` and validate."""
    defaults = load_defaults()
    if experiment not in defaults:
        raise ConfigError(f"unknown experiment {experiment!r}")
    cfg = deepcopy(defaults[experiment])
    user = {} if user is None else user
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    given = user.get("experiment", experiment)
    if given != experiment:
        raise ConfigError(f"config is for experiment {given!r}, not {experiment!r}")
    cfg.update(deepcopy(user))
    cfg["experiment"] = experiment
    if seed is not None:
        cfg["seed"] = seed
    validate(experiment, cfg)
    return cfg


def load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None


def config_hash(cfg):
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
