"""Chat-completion client for a locally hosted inference endpoint.

Requests are plain JSON POSTs:

```json
{"model": "...", "messages": [{"role": "system", "content": "..."},
                              {"role": "user", "content": "..."}],
 "temperature": 0.0, "stream": false}
```

The assistant text is read from the response at `BackendConfig.response_path`,
a dotted path where integer parts index into lists. The default matches the
OpenAI-compatible `choices[0].message.content` layout.

The client never retries on its own, retries on malformed output live in
`mindtrace.llm.validation`.
"""

import json
import threading
from dataclasses import dataclass
from typing import Any

import httpx

from mindtrace.logger import logger

DEFAULT_RESPONSE_PATH = "choices.0.message.content"
ENV_URL = "MINDTRACE_LLM_URL"
ENV_MODEL = "MINDTRACE_LLM_MODEL"


class TransportException(Exception):
    """Raised when the endpoint can't be reached or the connection fails."""


class BackendTimeoutException(TransportException):
    """Raised when a request exceeds the configured timeout."""


class EndpointException(TransportException):
    """Raised when the endpoint answers with an error or an unusable body.

    Attributes:
        status: HTTP status code of the response.
    """

    def __init__(self, message: str, status: int) -> None:
        super().__init__(f"{message} (HTTP {status})")
        self.status = status


@dataclass(frozen=True)
class BackendConfig:
    """Inference endpoint settings.

    Attributes:
        endpoint_url: Full URL requests are POSTed to.
        model_name: Model name sent with every request.
        temperature: Sampling temperature.
        max_retries: Extra attempts on malformed structured output.
        timeout: Request timeout in seconds.
        max_in_flight: Maximum concurrent requests per client.
        response_path: Dotted path to the assistant text in the response body.
    """

    endpoint_url: str = ""
    model_name: str = ""
    temperature: float = 0.0
    max_retries: int = 3
    timeout: float = 120.0
    max_in_flight: int = 4
    response_path: str = DEFAULT_RESPONSE_PATH

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError(f"temperature must not be negative, got {self.temperature}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must not be negative, got {self.max_retries}")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.max_in_flight < 1:
            raise ValueError(f"max_in_flight must be at least 1, got {self.max_in_flight}")
        if not self.response_path:
            raise ValueError("response_path must not be empty")

    @property
    def configured(self) -> bool:
        return bool(self.endpoint_url and self.model_name)


def extract_path(data: Any, path: str) -> Any:
    """Follow a dotted path through nested dicts and lists.

    Raises:
        KeyError: If any part of the path is missing.
    """
    current = data
    for part in path.split("."):
        if isinstance(current, list) and part.lstrip("-").isdigit():
            try:
                current = current[int(part)]
            except IndexError:
                raise KeyError(part) from None
        elif isinstance(current, dict) and part in current:
            current = current[part]
        else:
            raise KeyError(part)
    return current


def build_payload(config: BackendConfig, prompt: str, system: str | None = None) -> dict[str, Any]:
    messages = []
    if system:
        messages.append({"role": "system", "content": system})
    messages.append({"role": "user", "content": prompt})
    return {
        "model": config.model_name,
        "messages": messages,
        "temperature": config.temperature,
        "stream": False,
    }


class InferenceClient:
    """Synchronous, thread-safe client with a bound on concurrent requests.

    Attributes:
        config: The `BackendConfig` in use.
        calls: Number of requests sent so far.
    """

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None) -> None:
        if not config.configured:
            raise ValueError("Backend needs both an endpoint URL and a model name")

        self.config = config
        self.calls = 0
        self._lock = threading.Lock()
        self._in_flight = threading.BoundedSemaphore(config.max_in_flight)
        self._client = httpx.Client(timeout=config.timeout, transport=transport)

    def __enter__(self) -> "InferenceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        self._client.close()

    def complete(self, prompt: str, system: str | None = None) -> str:
        """Send one chat-completion request and return the assistant text.

        Raises:
            BackendTimeoutException: If the request times out.
            TransportException: On connection errors.
            EndpointException: On a non-2xx status or a body without the
                assistant text.
        """
        payload = build_payload(self.config, prompt, system)

        with self._lock:
            self.calls += 1
            call_no = self.calls
        logger.debug(f"[call {call_no}] POST {self.config.endpoint_url}, prompt of {len(prompt)} chars")

        with self._in_flight:
            try:
                response = self._client.post(self.config.endpoint_url, json=payload)
            except httpx.TimeoutException as e:
                raise BackendTimeoutException(
                    f"Request to {self.config.endpoint_url} timed out after {self.config.timeout}s"
                ) from e
            except httpx.TransportError as e:
                raise TransportException(f"Request to {self.config.endpoint_url} failed: {e}") from e

        if not response.is_success:
            raise EndpointException(f"Endpoint {self.config.endpoint_url} returned an error", response.status_code)

        try:
            text = extract_path(response.json(), self.config.response_path)
        except (json.JSONDecodeError, KeyError) as e:
            raise EndpointException(
                f"Response has no text at '{self.config.response_path}': {e}", response.status_code
            ) from e

        if not isinstance(text, str):
            raise EndpointException(f"Value at '{self.config.response_path}' isn't text", response.status_code)

        logger.debug(f"[call {call_no}] got {len(text)} chars")
        return text


def complete(config: BackendConfig, prompt: str, system: str | None = None) -> str:
    """One-shot `InferenceClient.complete()` with a throwaway client."""
    with InferenceClient(config) as client:
        return client.complete(prompt, system)
