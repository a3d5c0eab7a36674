"""Experiment configuration: a strict YAML key-tree that round-trips
losslessly.  Unknown keys are hard errors; every value is type-checked
before any computation starts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ValidationError
from .kernels import (
    KernelSpec,
    distance_kernel,
    gaussian_kernel,
    ht_kernel,
    smoothed_distance_kernel,
)
from .model import (
    GaussianComponent,
    MixtureModel,
    SampleSize,
    diagonal,
    figure1_model,
    fixed_count,
    fixed_per_component,
    full_cov,
    isotropic,
    poisson_count,
)

EXPERIMENTS = (
    "sample",
    "figure1",
    "gap-scan",
    "kpca-cluster",
    "cov-cluster",
    "gram-check",
    "diag-ch",
)

_NUM = (int, float)
_SECTION_SCHEMAS = {
    "model": {
        "kind": str,          # figure1 | two_gaussians | custom
        "n": int,
        "s": _NUM,
        "distance": _NUM,
        "variances": list,
        "components": list,
    },
    "sample": {
        "mode": str,          # fixed | poisson | per_component
        "size": _NUM,
        "counts": list,
    },
    "kernel": {
        "kind": str,          # gaussian | distance | smoothed_distance | ht
        "tau": _NUM,
        "tau_factor": _NUM,   # tau = tau_factor * sqrt(n)
        "t": _NUM,
        "r0": _NUM,
        "r0_factor": _NUM,    # r0 = r0_factor * sqrt(n)
    },
    "cluster": {
        "k": int,
        "c1": _NUM,
        "c2": _NUM,
        "threshold_mode": str,
        "restarts": int,
        "delta": (str, int, float),  # "model" | "plugin" | explicit value
    },
    "figure1": {
        "pairs": list,        # [[n, s], ...]
        "t": _NUM,
    },
    "gap_scan": {
        "n_values": list,
        "samples_per_dim": int,
        "count": int,
    },
    "diag_ch": {
        "n_values": list,
        "spherical": bool,
    },
}
_TOP_SCHEMA = {
    "experiment": str,
    "output_dir": str,
    "seeds": list,
    "threads": int,
    **{k: dict for k in _SECTION_SCHEMAS},
}
_REQUIRED_SECTIONS = {
    "sample": ("model", "sample"),
    "figure1": ("figure1",),
    "gap-scan": ("gap_scan",),
    "kpca-cluster": ("model", "sample", "kernel", "cluster"),
    "cov-cluster": ("model", "sample", "cluster"),
    "gram-check": ("model", "sample", "kernel"),
    "diag-ch": ("kernel", "diag_ch"),
}


def _check_keys(mapping, schema, where):
    for key, value in mapping.items():
        if key not in schema:
            raise ValidationError(f"unknown config key {where}{key!r}")
        expected = schema[key]
        if not isinstance(value, expected):
            raise ValidationError(
                f"config key {where}{key!r} must be {expected}, got {type(value).__name__}"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    output_dir: str = "out"
    seeds: tuple = (0,)
    threads: int = 1
    sections: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(
                f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}"
            )
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValidationError("seeds must not be empty")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")
        for name in _REQUIRED_SECTIONS[self.experiment]:
            if name not in self.sections:
                raise ValidationError(
                    f"experiment {self.experiment!r} needs a {name!r} section"
                )

    def section(self, name) -> dict:
        return self.sections.get(name, {})

    def to_dict(self) -> dict:
        out = {
            "experiment": self.experiment,
            "output_dir": self.output_dir,
            "seeds": list(self.seeds),
            "threads": self.threads,
        }
        for name, body in self.sections.items():
            out[name] = body
        return out


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ValidationError("config root must be a mapping")
    _check_keys(raw, _TOP_SCHEMA, "")
    if "experiment" not in raw:
        raise ValidationError("config needs an 'experiment' key")
    sections = {}
    for name, schema in _SECTION_SCHEMAS.items():
        if name in raw:
            _check_keys(raw[name], schema, f"{name}.")
            sections[name] = raw[name]
    return ExperimentConfig(
        experiment=raw["experiment"],
        output_dir=raw.get("output_dir", "out"),
        seeds=tuple(raw.get("seeds", [0])),
        threads=int(raw.get("threads", 1)),
        sections=sections,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    return config_from_dict(raw)


def save_config(cfg: ExperimentConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)


# --- builders -----------------------------------------------------------------


def _covariance_from_dict(spec: dict):
    kind = spec.get("kind")
    if kind == "isotropic":
        return isotropic(float(spec["variance"]))
    if kind == "diagonal":
        return diagonal(np.asarray(spec["eigenvalues"], dtype=float))
    if kind == "full":
        return full_cov(np.asarray(spec["matrix"], dtype=float))
    raise ValidationError(f"unknown covariance kind {kind!r}")


def build_model(section: dict) -> MixtureModel:
    kind = section.get("kind", "figure1")
    if kind == "figure1":
        return figure1_model(int(section["n"]), float(section["s"]))
    if kind == "two_gaussians":
        n = int(section["n"])
        d = float(section.get("distance", 0.0))
        variances = section.get("variances", [1.0, 1.0])
        if len(variances) != 2:
            raise ValidationError("two_gaussians needs exactly 2 variances")
        mu2 = np.zeros(n)
        mu2[0] = d
        return MixtureModel(
            (
                GaussianComponent(0.5, np.zeros(n), isotropic(float(variances[0]))),
                GaussianComponent(0.5, mu2, isotropic(float(variances[1]))),
            ),
            dim=n,
        )
    if kind == "custom":
        comps = []
        n = int(section["n"])
        for item in section["components"]:
            mean = item.get("mean", 0.0)
            mean = np.full(n, float(mean)) if np.isscalar(mean) else np.asarray(mean, dtype=float)
            comps.append(
                GaussianComponent(
                    float(item["weight"]), mean, _covariance_from_dict(item["covariance"])
                )
            )
        return MixtureModel(tuple(comps), dim=n)
    raise ValidationError(f"unknown model kind {kind!r}")


def build_size(section: dict) -> SampleSize:
    mode = section.get("mode", "fixed")
    if mode == "fixed":
        return fixed_count(int(section["size"]))
    if mode == "poisson":
        return poisson_count(float(section["size"]))
    if mode == "per_component":
        return fixed_per_component(section["counts"])
    raise ValidationError(f"unknown sample mode {mode!r}")


def build_kernel(section: dict, n: int) -> KernelSpec:
    kind = section.get("kind", "gaussian")
    rn = np.sqrt(n)
    if kind == "gaussian":
        tau = section.get("tau", section.get("tau_factor", 1.0) * rn)
        return gaussian_kernel(float(tau))
    if kind == "distance":
        return distance_kernel()
    if kind == "smoothed_distance":
        r0 = section.get("r0", section.get("r0_factor", 1.0) * rn)
        return smoothed_distance_kernel(float(r0))
    if kind == "ht":
        return ht_kernel(float(section["t"]), n)
    raise ValidationError(f"unknown kernel kind {kind!r}")
