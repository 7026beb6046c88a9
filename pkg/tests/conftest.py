from typing import Iterator

import pytest

from mindtrace.llm.client import BackendConfig, InferenceClient
from mindtrace.llm.templater import clear_templater, reset_templater
from mock_server import MockChatServer


@pytest.fixture(autouse=True)
def reset_templater_fixture(request: pytest.FixtureRequest):
    if "templater_no_init" in request.keywords:
        clear_templater()
    else:
        reset_templater()
    yield
    # Just in case, reset once more after the test
    reset_templater()


@pytest.fixture(name="server")
def mock_chat_server() -> Iterator[MockChatServer]:
    server = MockChatServer().start()
    yield server
    server.stop()


@pytest.fixture(name="backend")
def backend_config(server) -> BackendConfig:
    return BackendConfig(endpoint_url=server.url, model_name="mock", max_retries=3, timeout=5.0)


@pytest.fixture(name="client")
def inference_client(backend) -> Iterator[InferenceClient]:
    with InferenceClient(backend) as client:
        yield client
