"""Engine configuration and environment variable bootstrap."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .errors import BadConfig

ENV_LISTEN_ADDR = "CAAS_LISTEN_ADDR"
ENV_DATA_DIR = "CAAS_DATA_DIR"
ENV_CLOCK_MODE = "CAAS_CLOCK_MODE"

DEFAULT_LISTEN = "127.0.0.1:8470"


@dataclass
class EngineConfig:
    listen_address: str = DEFAULT_LISTEN
    data_directory: str | None = None
    clock_mode: str = "virtual"
    grace_cycles: int = 3
    strict_waiting: bool = False
    keyring_path: str | None = None
    extraction_rules_path: str | None = None
    taxonomy_path: str | None = None

    def validate(self) -> "EngineConfig":
        if self.clock_mode not in ("real", "virtual"):
            raise BadConfig(f"clock_mode must be 'real' or 'virtual', got {self.clock_mode!r}")
        if not isinstance(self.grace_cycles, int) or self.grace_cycles < 1:
            raise BadConfig(f"grace_cycles must be a positive integer, got {self.grace_cycles!r}")
        for label, path in (
            ("keyring_path", self.keyring_path),
            ("extraction_rules_path", self.extraction_rules_path),
            ("taxonomy_path", self.taxonomy_path),
        ):
            if path is not None and not Path(path).is_file():
                raise BadConfig(f"{label} {path!r} is not a readable file")
        host, _, port = self.listen_address.rpartition(":")
        if not host or not port.isdigit():
            raise BadConfig(f"listen_address must be host:port, got {self.listen_address!r}")
        return self

    @property
    def host(self) -> str:
        return self.listen_address.rpartition(":")[0]

    @property
    def port(self) -> int:
        return int(self.listen_address.rpartition(":")[2])

    @classmethod
    def from_env(cls, **overrides) -> "EngineConfig":
        values = {
            "listen_address": os.environ.get(ENV_LISTEN_ADDR, DEFAULT_LISTEN),
            "data_directory": os.environ.get(ENV_DATA_DIR),
            "clock_mode": os.environ.get(ENV_CLOCK_MODE, "virtual"),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values).validate()
