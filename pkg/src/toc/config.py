"""Run configuration: built-in defaults, JSON config files, and CLI
overrides, merged in that order and echoed into result.json.

Unknown keys are always rejected so typos fail loudly instead of
silently running with defaults.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .agents import AgentBackendConfig
from .reward import RewardWeights
from .search import SearchConfig

ENDPOINT_ENV = "TOC_LLM_ENDPOINT"
API_KEY_ENV = "TOC_LLM_API_KEY"


class RunConfigError(ValueError):
    pass


_SEARCH_KEYS = tuple(f.name for f in dataclasses.fields(SearchConfig))
_BACKEND_KEYS = tuple(f.name for f in dataclasses.fields(AgentBackendConfig))
_WEIGHT_KEYS = tuple(f.name for f in dataclasses.fields(RewardWeights))
_TOP_KEYS = ("search", "backend", "weights", "corpus", "out_dir", "port",
             "iteration_delay_secs", "seed")


@dataclass(frozen=True)
class RunConfig:
    search: SearchConfig
    backend: AgentBackendConfig
    weights: RewardWeights
    corpus: "str | None" = None
    out_dir: str = "out"
    port: int = 8765
    iteration_delay_secs: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.port <= 65535:
            raise RunConfigError(f"port {self.port} outside [0, 65535]")
        if self.iteration_delay_secs < 0:
            raise RunConfigError("iteration_delay_secs must be >= 0")

    def echo(self) -> dict:
        """Every effective value, for embedding into result.json."""
        search = dataclasses.asdict(self.search)
        search["sim_mode"] = self.search.sim_mode.value
        search["gating_policy"] = self.search.gating_policy.value
        backend = dataclasses.asdict(self.backend)
        backend["credential"] = "***" if self.backend.credential else None
        return {
            "search": search,
            "backend": backend,
            "weights": self.weights.to_dict(),
            "corpus": self.corpus,
            "out_dir": self.out_dir,
            "port": self.port,
            "iteration_delay_secs": self.iteration_delay_secs,
            "seed": self.seed,
        }


def _check_group(data: dict, allowed: "tuple[str, ...]", where: str) -> None:
    if not isinstance(data, dict):
        raise RunConfigError(f"{where} must be an object")
    for key in data:
        if key == "seed" and where in ("search", "backend"):
            raise RunConfigError(
                f"{where}.seed is not settable; use the top-level seed")
        if key not in allowed:
            raise RunConfigError(f"unknown key {key!r} in {where}")


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_run_config(path: "str | Path | None" = None,
                    overrides: "dict | None" = None,
                    env: "dict | None" = None) -> RunConfig:
    """Merge defaults, an optional JSON config file, and CLI overrides
    (highest precedence).  ``overrides`` uses the same nested shape as
    the file.  Remote credentials fall back to the environment."""
    data: dict = {"search": {}, "backend": {}, "weights": {}}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise RunConfigError(f"cannot read config file: {exc}") from exc
        try:
            file_data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RunConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(file_data, dict):
            raise RunConfigError("config file must hold a JSON object")
        for key in file_data:
            if key not in _TOP_KEYS:
                raise RunConfigError(f"unknown key {key!r} in config file")
        _check_group(file_data.get("search", {}), _SEARCH_KEYS, "search")
        _check_group(file_data.get("backend", {}), _BACKEND_KEYS, "backend")
        _check_group(file_data.get("weights", {}), _WEIGHT_KEYS, "weights")
        data = _merge(data, file_data)
    if overrides:
        for key in overrides:
            if key not in _TOP_KEYS:
                raise RunConfigError(f"unknown override {key!r}")
        _check_group(overrides.get("search", {}), _SEARCH_KEYS, "search")
        _check_group(overrides.get("backend", {}), _BACKEND_KEYS, "backend")
        _check_group(overrides.get("weights", {}), _WEIGHT_KEYS, "weights")
        data = _merge(data, overrides)

    environ = os.environ if env is None else env
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise RunConfigError("seed must be an integer")
    backend_data = dict(data["backend"])
    backend_data["seed"] = seed
    if backend_data.get("kind", "mock") == "remote":
        if not backend_data.get("endpoint") and environ.get(ENDPOINT_ENV):
            backend_data["endpoint"] = environ[ENDPOINT_ENV]
        if not backend_data.get("credential") and environ.get(API_KEY_ENV):
            backend_data["credential"] = environ[API_KEY_ENV]
    search_data = dict(data["search"])
    search_data["seed"] = seed
    try:
        search = SearchConfig(**search_data)
        backend = AgentBackendConfig(**backend_data)
        weights = RewardWeights(**data["weights"])
        return RunConfig(
            search=search,
            backend=backend,
            weights=weights,
            corpus=data.get("corpus"),
            out_dir=data.get("out_dir", "out"),
            port=data.get("port", 8765),
            iteration_delay_secs=data.get("iteration_delay_secs", 0.0),
            seed=seed,
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, RunConfigError):
            raise
        raise RunConfigError(str(exc)) from exc
