"""Declarative experiment configuration.

One JSON file describes a full experiment: image geometry, forward
operator, corruption, prior, schedule, solver methods, seeds and output
location.  The schema rejects unknown keys so configs stay reproducible
artifacts; the CLI only selects the file and a few overrides.
"""

import copy
import hashlib
import json

import jsonschema
import numpy as np

from .budget import NoisePolicy
from .degradations import CorruptionSpec
from .exceptions import ConfigError
from .operators import (
    box_mask,
    build_block_downsample,
    build_channel_average,
    build_circular_blur,
    build_identity,
    build_mask,
    random_mask,
    uniform_kernel,
)
from .prior import prior_from_json, template_bank_prior
from .sampler import MasConfig, vp_schedule

_METHOD_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name"],
    "properties": {
        "name": {"enum": ["mas", "ddnm", "tmpd_scalar", "unconditional"]},
        "label": {"type": "string"},
        "eta1": {"type": "number"},
        "eta2": {"type": "number"},
        "unsafe_eta2": {"type": "boolean"},
        "rt2_mode": {"enum": ["ratio", "tweedie_scalar"]},
        "policy": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["noise_free", "known_gaussian", "unknown"]},
                "sigma_y": {"type": "number", "minimum": 0},
                "inflation": {"type": "number", "minimum": 1},
                "k": {"type": "number", "minimum": 0},
                "eta1_base": {"type": "number"},
            },
        },
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "image", "task", "prior", "schedule", "methods", "seeds"],
    "properties": {
        "name": {"type": "string"},
        "image": {
            "type": "object",
            "additionalProperties": False,
            "required": ["channels", "height", "width"],
            "properties": {
                "channels": {"type": "integer", "minimum": 1},
                "height": {"type": "integer", "minimum": 1},
                "width": {"type": "integer", "minimum": 1},
            },
        },
        "task": {
            "type": "object",
            "additionalProperties": False,
            "required": ["operator"],
            "properties": {
                "operator": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {
                            "enum": [
                                "identity",
                                "mask_random",
                                "mask_box",
                                "block_downsample",
                                "circular_blur",
                                "channel_average",
                            ]
                        },
                        "masked_fraction": {"type": "number", "minimum": 0, "maximum": 1},
                        "mask_seed": {"type": "integer", "minimum": 0},
                        "box": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["top", "left", "height", "width"],
                            "properties": {
                                "top": {"type": "integer", "minimum": 0},
                                "left": {"type": "integer", "minimum": 0},
                                "height": {"type": "integer", "minimum": 1},
                                "width": {"type": "integer", "minimum": 1},
                            },
                        },
                        "factor": {"type": "integer", "minimum": 1},
                        "kernel_size": {"type": "integer", "minimum": 1},
                        "kernel_values": {"type": "array", "items": {"type": "number"}},
                    },
                },
                "corruption": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {
                            "enum": [
                                "none",
                                "gaussian",
                                "salt_pepper",
                                "periodic",
                                "quantize",
                                "dct_quantize",
                            ]
                        },
                        "sigma_y": {"type": "number", "minimum": 0},
                        "fraction": {"type": "number", "minimum": 0, "maximum": 1},
                        "amplitude": {"type": "number", "minimum": 0},
                        "frequency": {"type": "number"},
                        "axis": {"enum": ["row", "col"]},
                        "bits": {"type": "integer", "minimum": 1},
                        "quality_proxy": {"type": "number", "minimum": 0},
                        "clip": {"type": "boolean"},
                    },
                },
            },
        },
        "prior": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["template_bank", "file", "inline"]},
                "components": {"type": "integer", "minimum": 1},
                "tau": {"type": "number", "exclusiveMinimum": 0},
                "path": {"type": "string"},
                "weights": {"type": "array", "items": {"type": "number"}},
                "means": {"type": "array"},
                "variances": {"type": "array", "items": {"type": "number"}},
            },
        },
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "required": ["steps"],
            "properties": {
                "steps": {"type": "integer", "minimum": 1},
                "variant": {"enum": ["simple_ancestral", "ddim"]},
                "ddim_eta": {"type": "number", "minimum": 0, "maximum": 1},
                "beta_min": {"type": "number", "exclusiveMinimum": 0},
                "beta_max": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "methods": {"type": "array", "minItems": 1, "items": _METHOD_SCHEMA},
        "seeds": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        "output_dir": {"type": "string"},
        "save_states": {"type": "boolean"},
    },
}


def validate_config(raw):
    """Schema-validate a raw dict, raising ConfigError with the JSON path."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"config error at {err.json_path}: {err.message}") from err
    return raw


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    return validate_config(raw)


def config_hash(raw):
    return hashlib.sha256(canonical_json(raw).encode()).hexdigest()


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2)


def build_operator(raw):
    """Instantiate the forward operator described by the config."""
    img = raw["image"]
    shape = (img["channels"], img["height"], img["width"])
    spec = raw["task"]["operator"]
    kind = spec["kind"]
    try:
        if kind == "identity":
            return build_identity(*shape)
        if kind == "mask_random":
            rng = np.random.default_rng(spec.get("mask_seed", 0))
            mask = random_mask(shape, spec["masked_fraction"], rng)
            return build_mask(shape, mask)
        if kind == "mask_box":
            box = spec["box"]
            mask = box_mask(shape, box["top"], box["left"], box["height"], box["width"])
            return build_mask(shape, mask)
        if kind == "block_downsample":
            return build_block_downsample(*shape, spec["factor"])
        if kind == "circular_blur":
            if "kernel_values" in spec:
                kernel = np.asarray(spec["kernel_values"], dtype=np.float64)
            else:
                kernel = uniform_kernel(spec.get("kernel_size", 9))
            return build_circular_blur(*shape, kernel)
        if kind == "channel_average":
            return build_channel_average(img["height"], img["width"], channels=shape[0])
    except KeyError as err:
        raise ConfigError(f"operator {kind!r} is missing parameter {err}") from err
    raise ConfigError(f"unknown operator kind {kind!r}")


def build_corruption(raw):
    spec = raw["task"].get("corruption", {"kind": "none"})
    kwargs = {k: v for k, v in spec.items()}
    return CorruptionSpec(**kwargs)


def build_prior(raw, base_dir=None):
    img = raw["image"]
    spec = raw["prior"]
    kind = spec["kind"]
    if kind == "template_bank":
        return template_bank_prior(
            img["channels"],
            img["height"],
            img["width"],
            n_components=spec.get("components", 8),
            tau=spec.get("tau", 0.05),
        )
    if kind == "file":
        return prior_from_json(spec["path"], base_dir=base_dir)
    if kind == "inline":
        return prior_from_json(
            {k: spec[k] for k in ("weights", "means", "variances")}, base_dir=base_dir
        )
    raise ConfigError(f"unknown prior kind {kind!r}")


def build_schedule(raw):
    spec = raw["schedule"]
    return vp_schedule(
        spec["steps"],
        beta_min=spec.get("beta_min", 0.1),
        beta_max=spec.get("beta_max", 20.0),
        variant=spec.get("variant", "simple_ancestral"),
        ddim_eta=spec.get("ddim_eta", 0.85),
    )


def build_method(entry):
    """Split a method entry into (label, MasConfig, NoisePolicy)."""
    mas_config = MasConfig(
        method=entry["name"],
        eta1=entry.get("eta1", 0.0),
        eta2=entry.get("eta2", 0.0),
        unsafe_eta2=entry.get("unsafe_eta2", False),
        rt2_mode=entry.get("rt2_mode", "ratio"),
    )
    pol = entry.get("policy", {"kind": "noise_free"})
    try:
        policy = NoisePolicy(
            kind=pol["kind"],
            sigma_y=pol.get("sigma_y", 0.0),
            inflation=pol.get("inflation", 1.2),
            k=pol.get("k", 0.0),
            eta1_base=pol.get("eta1_base", 0.0),
        )
    except ValueError as err:
        raise ConfigError(f"bad noise policy for method {entry['name']!r}: {err}") from err
    label = entry.get("label", entry["name"])
    return label, mas_config, policy


def with_method_param(raw, param, value):
    """Copy of the config with eta1/eta2/k overridden on every mas method."""
    if param not in ("eta1", "eta2", "k"):
        raise ConfigError(f"sweep parameter must be eta1, eta2 or k, got {param!r}")
    out = copy.deepcopy(raw)
    for entry in out["methods"]:
        if entry["name"] != "mas":
            continue
        if param == "k":
            entry.setdefault("policy", {"kind": "unknown"})["k"] = value
        else:
            entry[param] = value
            if value < 0 and param == "eta2":
                entry["unsafe_eta2"] = True
    return out
