"""Run configuration.

A run is configured from a YAML file, all sections and keys optional:

```yaml
seed: 0
jobs: 1
window_size: 5
paths:
  schema: my_schema.yaml
  negative_lexicon: negative.txt
  positive_lexicon: positive.txt
  fewshot: change_fewshot.yaml
  summary_examples: summary_examples.yaml
  templates: my_templates/
backend:
  endpoint_url: http://localhost:11434/v1/chat/completions
  model_name: llama3
  max_retries: 3
tagger: {k: 25, min_match: 1, orders: [2, 3]}
tfidf: {min_df: 1}
ensemble: {n_trees: 100, max_depth: 8}
summarizer: {aggregation: sum}
miner: {batch_size: 10}
```

Unknown keys are rejected at every level. Values are resolved with the
precedence command-line flag, environment, config file, built-in default.
The seed and worker count of the ensemble come from the top-level `seed`
and `jobs`.
"""

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from mindtrace.ensemble.forest import TrainingConfig
from mindtrace.ensemble.tree import EnsembleException
from mindtrace.features.text import FeatureException
from mindtrace.features.tfidf import TfidfConfig
from mindtrace.llm.client import ENV_MODEL, ENV_URL, BackendConfig
from mindtrace.llm.prompts import CHANGE_WINDOW
from mindtrace.logger import logger
from mindtrace.miner.dynamics import MinerConfig, MinerException
from mindtrace.summarizer.template import SummarizerConfig, SummarizerException
from mindtrace.tagger.llr import TaggerException
from mindtrace.tagger.signatures import TaggerConfig
from mindtrace.util import canonical_json, sha256_hex


class ConfigException(Exception):
    """Raised for unreadable config files, unknown keys and invalid values."""


@dataclass(frozen=True)
class PathsConfig:
    """Optional replacements for bundled data files, `None` keeps the bundled one."""

    schema: str | None = None
    negative_lexicon: str | None = None
    positive_lexicon: str | None = None
    fewshot: str | None = None
    summary_examples: str | None = None
    templates: str | None = None


@dataclass(frozen=True)
class RunConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    tagger: TaggerConfig = field(default_factory=TaggerConfig)
    tfidf: TfidfConfig = field(default_factory=TfidfConfig)
    ensemble: TrainingConfig = field(default_factory=TrainingConfig)
    summarizer: SummarizerConfig = field(default_factory=SummarizerConfig)
    miner: MinerConfig = field(default_factory=MinerConfig)
    seed: int = 0
    jobs: int = 1
    window_size: int = CHANGE_WINDOW

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ConfigException(f"seed must not be negative, got {self.seed}")
        if self.jobs < 1:
            raise ConfigException(f"jobs must be at least 1, got {self.jobs}")
        if not 0 <= self.window_size <= CHANGE_WINDOW:
            raise ConfigException(f"window_size must be between 0 and {CHANGE_WINDOW}, got {self.window_size}")

    @property
    def training(self) -> TrainingConfig:
        """Ensemble settings with the run's seed and worker count."""
        return replace(self.ensemble, seed=self.seed, n_jobs=self.jobs)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["tagger"]["orders"] = list(self.tagger.orders)
        for name in _RUN_LEVEL:
            data["ensemble"].pop(name)
        return data


SECTIONS: dict[str, type] = {
    "paths": PathsConfig,
    "backend": BackendConfig,
    "tagger": TaggerConfig,
    "tfidf": TfidfConfig,
    "ensemble": TrainingConfig,
    "summarizer": SummarizerConfig,
    "miner": MinerConfig,
}

_RUN_LEVEL = ("seed", "n_jobs")
_SCALARS = ("seed", "jobs", "window_size")

_VALUE_ERRORS = (
    ValueError,
    TypeError,
    TaggerException,
    EnsembleException,
    FeatureException,
    SummarizerException,
    MinerException,
)


def _section(name: str, cls: type, data: Any) -> Any:
    if data is None:
        return cls()
    if not isinstance(data, Mapping):
        raise ConfigException(f"Config section '{name}' must be a mapping")

    allowed = {f.name for f in fields(cls)}
    if name == "ensemble":
        allowed -= set(_RUN_LEVEL)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigException(f"Unknown keys in config section '{name}': {', '.join(map(str, unknown))}")

    values = dict(data)
    if "orders" in values and isinstance(values["orders"], list):
        values["orders"] = tuple(values["orders"])
    try:
        return cls(**values)
    except _VALUE_ERRORS as e:
        raise ConfigException(f"Invalid value in config section '{name}': {e}") from e


def config_from_dict(data: Any) -> RunConfig:
    """Build a `RunConfig` from parsed YAML data.

    Raises:
        ConfigException: On unknown keys or invalid values.
    """
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigException("Config document must be a mapping")

    unknown = sorted(set(data) - set(SECTIONS) - set(_SCALARS))
    if unknown:
        raise ConfigException(f"Unknown config keys: {', '.join(map(str, unknown))}")

    sections = {name: _section(name, cls, data.get(name)) for name, cls in SECTIONS.items()}
    scalars = {name: data[name] for name in _SCALARS if name in data}
    for name, value in scalars.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigException(f"'{name}' must be an integer, got {value!r}")
    return RunConfig(**sections, **scalars)


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a YAML config file, or the defaults when `path` is `None`.

    Raises:
        ConfigException: If the file can't be read or parsed, or is invalid.
    """
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigException(f"Can't read config file {path}: {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigException(f"Config file {path} is not valid YAML: {e}") from e

    config = config_from_dict(data)
    logger.info(f"Loaded config from {path}")
    return config


def with_overrides(
    config: RunConfig,
    endpoint_url: str | None = None,
    model_name: str | None = None,
    seed: int | None = None,
    jobs: int | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    """Apply environment variables and then command-line values on top of `config`.

    Args:
        config: Config loaded from file or defaults.
        endpoint_url: `--llm-url` value, if given.
        model_name: `--llm-model` value, if given.
        seed: `--seed` value, if given.
        jobs: `--jobs` value, if given.
        environ: Environment to read, `os.environ` if `None`.
    """
    environ = os.environ if environ is None else environ

    backend = config.backend
    url = endpoint_url or environ.get(ENV_URL) or backend.endpoint_url
    model = model_name or environ.get(ENV_MODEL) or backend.model_name
    if (url, model) != (backend.endpoint_url, backend.model_name):
        backend = replace(backend, endpoint_url=url, model_name=model)

    try:
        return replace(
            config,
            backend=backend,
            seed=config.seed if seed is None else seed,
            jobs=config.jobs if jobs is None else jobs,
        )
    except ConfigException:
        raise
    except _VALUE_ERRORS as e:
        raise ConfigException(str(e)) from e


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the config's canonical JSON form."""
    return sha256_hex(canonical_json(config.to_dict()))
