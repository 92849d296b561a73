"""Client for the service: remote over HTTP or embedded in-process.

Without a URL the client mounts the application directly through the test
transport, so the CLI works standalone while exercising the exact same
request/response path a remote deployment uses.  Structured error bodies are
re-raised as the library's own exception types, preserving exit codes.
"""

from __future__ import annotations

import warnings

import httpx

from .errors import (
    ArchitectureMismatchError,
    ConfigurationError,
    DataFormatError,
    FilmthickError,
    GridMismatchError,
    InvalidParameterError,
    NumericFailureError,
    TrainingDivergedError,
)

_ERRORS_BY_KIND = {
    cls.__name__: cls
    for cls in (FilmthickError, ConfigurationError, InvalidParameterError,
                ArchitectureMismatchError, DataFormatError, GridMismatchError,
                NumericFailureError, TrainingDivergedError)
}


class ServiceError(FilmthickError):
    """Transport-level failure or a malformed service response."""


def raise_for_response(response: httpx.Response) -> dict:
    """Decode a service response; re-raise structured errors as library types."""
    try:
        payload = response.json()
    except ValueError:
        raise ServiceError(
            f"service returned non-JSON response (HTTP {response.status_code})")
    if isinstance(payload, dict) and "error" in payload:
        detail = payload["error"]
        cls = _ERRORS_BY_KIND.get(detail.get("kind", ""), FilmthickError)
        exc = cls(detail.get("message", "service error"))
        exc.exit_code = int(detail.get("exit_code", cls.exit_code))
        raise exc
    if response.status_code >= 400:
        raise ServiceError(f"HTTP {response.status_code}: {payload}")
    return payload


class ServiceClient:
    """Thin JSON client; `url=None` embeds the app in-process."""

    def __init__(self, url: str | None = None):
        if url:
            self._client = httpx.Client(base_url=url, timeout=None)
        else:
            # Embedded mode drives the app through starlette's test transport;
            # its import-time deprecation nag is not actionable for users.
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from starlette.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(),
                                      raise_server_exceptions=False)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _post(self, path: str, payload: dict) -> dict:
        body = {k: v for k, v in payload.items() if v is not None}
        return raise_for_response(self._client.post(path, json=body))

    def health(self) -> dict:
        return raise_for_response(self._client.get("/health"))

    def simulate(self, **payload) -> dict:
        return self._post("/simulate", payload)

    def pretrain(self, **payload) -> dict:
        return self._post("/pretrain", payload)

    def retrain(self, **payload) -> dict:
        return self._post("/retrain", payload)

    def direct(self, **payload) -> dict:
        return self._post("/direct", payload)

    def predict(self, **payload) -> dict:
        return self._post("/predict", payload)

    def evaluate(self, **payload) -> dict:
        return self._post("/evaluate", payload)

    def fit(self, **payload) -> dict:
        return self._post("/fit", payload)

    def activations(self, **payload) -> dict:
        return self._post("/activations", payload)
