"""Minimal HTTP client for a reference-conditioned generation backend.

The backend is an external service: it accepts one conditioning bundle per
request and replies with the id of the image it will produce. Everything
here is optional plumbing — the rest of the package never requires a live
backend, and an unreachable one surfaces as a typed error rather than a
crash.
"""

from __future__ import annotations

import json
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

from .conditioning import ConditioningBundle, bundle_to_json_dict
from .errors import BackendUnavailable, ParseError


@dataclass(frozen=True)
class GenerationClient:
    """POSTs bundles to ``<base_url>/generate`` with bounded retries."""

    base_url: str
    timeout_s: float = 10.0
    retries: int = 2
    retry_wait_s: float = 0.1

    def generate(self, bundle: ConditioningBundle) -> dict:
        """Submit one bundle; returns ``{"image_id": ..., "status": ...}``.

        Connection errors and timeouts are retried ``retries`` times; after
        that a :class:`BackendUnavailable` is raised. A 2xx response with a
        malformed body raises :class:`ParseError`.
        """
        url = self.base_url.rstrip("/") + "/generate"
        payload = json.dumps(bundle_to_json_dict(bundle)).encode("utf-8")
        request = urllib.request.Request(
            url, data=payload, headers={"Content-Type": "application/json"}, method="POST"
        )
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                with urllib.request.urlopen(request, timeout=self.timeout_s) as response:
                    body = response.read().decode("utf-8")
                return self._parse_response(url, body)
            except urllib.error.HTTPError as exc:
                # The server answered; an HTTP error status is not retryable.
                raise BackendUnavailable(f"{url}: backend returned HTTP {exc.code}") from exc
            except (urllib.error.URLError, TimeoutError, ConnectionError, OSError) as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(self.retry_wait_s)
        raise BackendUnavailable(
            f"{url}: unreachable after {self.retries + 1} attempts: {last_error}"
        ) from last_error

    @staticmethod
    def _parse_response(url: str, body: str) -> dict:
        try:
            data = json.loads(body)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{url}: response is not valid JSON: {exc}") from exc
        if not isinstance(data, dict) or "image_id" not in data or "status" not in data:
            raise ParseError(f"{url}: response must carry 'image_id' and 'status'")
        return {"image_id": data["image_id"], "status": data["status"]}


__all__ = ["GenerationClient"]
