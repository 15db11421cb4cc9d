"""Config loading, flag overrides, and the run manifest.

Configuration is a TOML file of nested tables deep-merged over shipped
defaults; any key a file (or a --set flag) names must already exist in
the defaults, which catches typos before they silently fall back.  The
manifest written next to every output records the fully resolved
configuration plus the invocation options, so a run can be replayed
bit-for-bit from the manifest alone.
"""
from __future__ import annotations

import copy
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .fields import SignalWaveform
from .model import KernelSpec, ModelParams
from .takacs import SolverConfig
from .workload_mc import SimConfig

TOOL_VERSION = "0.1.0"

DEFAULTS: dict = {
    "model": {"a": 1.0, "v_over_c": 0.75},
    "kernel": {"lambda": 1.5, "beta1": 0.6, "beta2": 0.3},
    "solver": {
        "dx": 0.025,
        "dt": 0.025 / 0.75,
        "x_min": -6.0,
        "x_max": 16.0,
        "t_end": 4.0,
        "snapshot_every": 30,
        "p_max": 1e6,
        "method": "recursion",
    },
    "sim": {"n_paths": 100_000, "seed": 0, "t_end": 10.0, "initial": 0.0},
    "green": {"dx": 0.05, "x_min": -10.0, "x_max": 10.0, "dt": 0.05, "t_max": 13.35},
    "metrics": {
        "tau_max": 5.0,
        "dtau": 0.1,
        "x_lo": -10.0,
        "x_hi": 10.0,
        "speed_autocorr": 0.75,
        "speed_kl": 1.0,
        "component": 1,
    },
    "clearing": {"s_lo": -1.0, "s_hi": 4.0, "n": 101},
    "initial": {
        "amp1": 1.0,
        "x01": 4.0,
        "sigma1": 0.5,
        "amp2": 0.5,
        "x02": 5.0,
        "sigma2": 0.7,
    },
}


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {here} must be a table")
            out[key] = _merge(base[key], val, here)
        else:
            out[key] = _coerce(here, base[key], val)
    return out


def _coerce(name: str, template, value):
    if isinstance(template, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"config key {name} must be a boolean")
        return value
    if isinstance(template, int) and not isinstance(template, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {name} must be a number")
        if float(value) != int(value):
            raise ConfigError(f"config key {name} must be an integer")
        return int(value)
    if isinstance(template, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {name} must be a number")
        return float(value)
    if isinstance(template, str):
        if not isinstance(value, str):
            raise ConfigError(f"config key {name} must be a string")
        return value
    raise ConfigError(f"config key {name} has unsupported type")


def load_config(path: str | None) -> dict:
    """Defaults overlaid with the TOML file at ``path`` (if any)."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config file {path}: {exc}")
    return _merge(DEFAULTS, data)


def apply_overrides(cfg: dict, pairs) -> dict:
    """Apply ``section.key=value`` override strings on top of ``cfg``."""
    out = copy.deepcopy(cfg)
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override must look like section.key=value: {pair}")
        dotted, text = pair.split("=", 1)
        parts = dotted.strip().split(".")
        node, tnode = out, DEFAULTS
        for p in parts[:-1]:
            if p not in tnode or not isinstance(tnode[p], dict):
                raise ConfigError(f"unknown config table: {dotted}")
            node, tnode = node[p], tnode[p]
        leaf = parts[-1]
        if leaf not in tnode or isinstance(tnode[leaf], dict):
            raise ConfigError(f"unknown config key: {dotted}")
        template = tnode[leaf]
        text = text.strip()
        if isinstance(template, bool):
            if text.lower() not in ("true", "false"):
                raise ConfigError(f"config key {dotted} must be true/false")
            value = text.lower() == "true"
        elif isinstance(template, str):
            value = text
        else:
            try:
                value = float(text) if "." in text or "e" in text.lower() else int(text)
            except ValueError:
                raise ConfigError(f"cannot parse number for {dotted}: {text}")
        node[leaf] = _coerce(dotted, template, value)
    return out


def params_from(cfg: dict) -> ModelParams:
    a = cfg["model"]["a"]
    v = cfg["model"]["v_over_c"]
    return ModelParams(a=a, v=v, c=1.0, nondimensional=(a == 1.0))


def kernel_from(cfg: dict) -> KernelSpec:
    k = cfg["kernel"]
    return KernelSpec(lam=k["lambda"], beta1=k["beta1"], beta2=k["beta2"])


def solver_from(cfg: dict) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(
        dx=s["dx"],
        dt=s["dt"],
        x_min=s["x_min"],
        x_max=s["x_max"],
        t_end=s["t_end"],
        snapshot_every=s["snapshot_every"],
        p_max=s["p_max"],
        method=s["method"],
    )


def sim_from(cfg: dict) -> SimConfig:
    s = cfg["sim"]
    return SimConfig(
        n_paths=s["n_paths"],
        t_end=s["t_end"],
        seed=s["seed"],
        initial=s["initial"],
        v=cfg["model"]["v_over_c"],
        a=cfg["model"]["a"],
        lam=cfg["kernel"]["lambda"],
        beta=cfg["kernel"]["beta1"],
    )


def uniform_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Inclusive uniform grid, snapped to exact multiples of ``step``."""
    n = int(round((hi - lo) / step))
    if n < 1 or abs(lo + n * step - hi) > 1e-9 * max(1.0, abs(hi)):
        raise ConfigError(f"step {step} does not tile [{lo}, {hi}]")
    return lo + step * np.arange(n + 1)


def initial_waveform(cfg: dict, x: np.ndarray) -> SignalWaveform:
    """The configured Gaussian pulse pair sampled on ``x``."""
    g = cfg["initial"]
    phi1 = g["amp1"] * np.exp(-0.5 * ((x - g["x01"]) / g["sigma1"]) ** 2)
    phi2 = g["amp2"] * np.exp(-0.5 * ((x - g["x02"]) / g["sigma2"]) ** 2)
    return SignalWaveform(x=x, phi1=phi1, phi2=phi2)


@dataclass
class RunManifest:
    """Everything needed to replay one CLI run bit-for-bit."""

    subcommand: str
    resolved_config: dict
    options: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    tool_version: str = TOOL_VERSION
    wall_clock_s: float = 0.0
    convergence: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "subcommand": self.subcommand,
                "resolved_config": self.resolved_config,
                "options": self.options,
                "inputs": self.inputs,
                "outputs": self.outputs,
                "tool_version": self.tool_version,
                "wall_clock_s": self.wall_clock_s,
                "convergence": self.convergence,
            },
            indent=2,
            sort_keys=True,
        )

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        return cls(
            subcommand=data["subcommand"],
            resolved_config=data["resolved_config"],
            options=data.get("options", {}),
            inputs=data.get("inputs", []),
            outputs=data.get("outputs", []),
            tool_version=data.get("tool_version", TOOL_VERSION),
            wall_clock_s=data.get("wall_clock_s", 0.0),
            convergence=data.get("convergence", {}),
        )

    @classmethod
    def read(cls, path: str) -> "RunManifest":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return cls.from_json(fh.read())
        except FileNotFoundError:
            raise ConfigError(f"manifest not found: {path}")
        except (json.JSONDecodeError, KeyError) as exc:
            raise ConfigError(f"malformed manifest {path}: {exc}")


class Stopwatch:
    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self._t0
        return False
