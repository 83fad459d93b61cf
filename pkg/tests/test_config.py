from __future__ import annotations

import socket

import pytest

from caas import Engine, EngineConfig
from caas.errors import BadConfig, PortInUse
from caas.gateway import serve


def test_defaults_validate():
    config = EngineConfig().validate()
    assert config.clock_mode == "virtual"
    assert config.grace_cycles == 3


def test_grace_must_be_positive():
    with pytest.raises(BadConfig):
        EngineConfig(grace_cycles=0).validate()


def test_clock_mode_checked():
    with pytest.raises(BadConfig):
        EngineConfig(clock_mode="sundial").validate()


def test_listen_address_checked():
    with pytest.raises(BadConfig):
        EngineConfig(listen_address="nonsense").validate()


def test_paths_must_exist(tmp_path):
    with pytest.raises(BadConfig):
        EngineConfig(taxonomy_path=str(tmp_path / "missing.json")).validate()


def test_env_bootstrap(monkeypatch, tmp_path):
    monkeypatch.setenv("CAAS_DATA_DIR", str(tmp_path / "state"))
    monkeypatch.setenv("CAAS_CLOCK_MODE", "virtual")
    monkeypatch.setenv("CAAS_LISTEN_ADDR", "127.0.0.1:9999")
    config = EngineConfig.from_env()
    assert config.data_directory == str(tmp_path / "state")
    assert config.port == 9999


def test_serve_reports_port_in_use():
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    port = blocker.getsockname()[1]
    try:
        engine = Engine(EngineConfig(listen_address=f"127.0.0.1:{port}"))
        with pytest.raises(PortInUse):
            serve(engine)
    finally:
        blocker.close()


def test_advance_rejected_in_real_clock_mode():
    engine = Engine(EngineConfig(clock_mode="real"))
    with pytest.raises(BadConfig):
        engine.run_cycle(advance_seconds=60)
