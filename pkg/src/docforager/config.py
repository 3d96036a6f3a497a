"""Runtime configuration and wiring for the service and CLI.

Precedence, lowest to highest: built-in defaults, DOCFORAGER_* environment
variables, command-line flags, then the config file (a config file named on
the command line overrides other flags). Missing remote LLM credentials never
silently degrade to the mock backend: running mock requires the explicit flag.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .corpus import CollectionStore
from .errors import ConfigInvalid
from .gateway import HttpBackend, LlmGateway, MockBackend
from .index import IndexStore, LocalHashEmbedder, RemoteEmbedder
from .notebook import NotebookStore

ENV_PREFIX = "DOCFORAGER_"


@dataclass
class ApiConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    data_dir: Path = Path("./data")
    llm_base_url: str | None = None
    llm_api_key: str | None = None
    model_fast: str = "fast-default"
    model_strong: str = "strong-default"
    embed_provider: str = "local"  # local | remote
    embed_url: str | None = None
    embed_api_key: str | None = None
    fanout: int = 8
    retries: int = 1
    mock: bool = False
    mock_fixtures_dir: Path | None = None
    auto_suggest: bool = True


_FIELD_PARSERS = {
    "port": int,
    "fanout": int,
    "retries": int,
    "mock": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
    "auto_suggest": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
    "data_dir": Path,
    "mock_fixtures_dir": Path,
}


def _coerce(name: str, value):
    if value is None:
        return None
    parser = _FIELD_PARSERS.get(name)
    return parser(value) if parser else value


def load_config(
    flags: dict | None = None, config_file: str | Path | None = None, env: dict | None = None
) -> ApiConfig:
    env = os.environ if env is None else env
    config = ApiConfig()
    for f in dataclasses.fields(ApiConfig):
        env_key = ENV_PREFIX + f.name.upper()
        if env_key in env:
            setattr(config, f.name, _coerce(f.name, env[env_key]))
    for name, value in (flags or {}).items():
        if value is not None:
            setattr(config, name, _coerce(name, value))
    if config_file is not None:
        try:
            data = json.loads(Path(config_file).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigInvalid(f"config file {config_file}: {err}") from err
        for name, value in data.items():
            if not any(f.name == name for f in dataclasses.fields(ApiConfig)):
                raise ConfigInvalid(f"config file {config_file}: unknown field {name!r}")
            setattr(config, name, _coerce(name, value))
    return config


@dataclass
class Runtime:
    """Shared engine wiring: stores, embedding provider, LLM gateway."""

    config: ApiConfig
    collections: CollectionStore
    notebooks: NotebookStore
    indexes: IndexStore
    provider: object
    gateway: LlmGateway


def build_runtime(config: ApiConfig) -> Runtime:
    data_dir = Path(config.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)

    if config.embed_provider == "remote":
        if not config.embed_url:
            raise ConfigInvalid("embed_provider=remote requires embed_url")
        provider = RemoteEmbedder(config.embed_url, config.embed_api_key)
    elif config.embed_provider == "local":
        provider = LocalHashEmbedder()
    else:
        raise ConfigInvalid(f"unknown embed_provider {config.embed_provider!r}")

    if config.llm_base_url and config.llm_api_key:
        backend = HttpBackend(config.llm_base_url, config.llm_api_key)
        models = {"fast": config.model_fast, "strong": config.model_strong}
    elif config.mock:
        backend = MockBackend(fixtures_dir=config.mock_fixtures_dir)
        models = {"fast": "mock-fast", "strong": "mock-strong"}
    else:
        raise ConfigInvalid(
            "no LLM backend: set llm_base_url + llm_api_key, or pass the explicit "
            "mock flag to run against scripted fixtures"
        )

    return Runtime(
        config=config,
        collections=CollectionStore(data_dir),
        notebooks=NotebookStore(data_dir),
        indexes=IndexStore(data_dir),
        provider=provider,
        gateway=LlmGateway(backend, models, retries=config.retries),
    )
