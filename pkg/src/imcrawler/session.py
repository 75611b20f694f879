"""Authenticated crawl sessions: login, paced fetching, logout.

One Session maps to one logged-in account on the target endpoint. Fetches
within a session are sequential and politeness-paced: every fetch after
the first waits a uniform random delay in [min_delay_ms, max_delay_ms].
The clock, sleep function and RNG are injectable so tests can assert
pacing without real waiting.
"""

from __future__ import annotations

import logging
import random
import time

import requests

from .errors import AuthExpired, BadCredentials, EndpointUnreachable, FetchError

log = logging.getLogger(__name__)

LOGIN_TIMEOUT_S = 10.0
FETCH_TIMEOUT_S = 10.0


class Session:
    """A logged-in HTTP session with politeness pacing and a request log."""

    def __init__(
        self,
        endpoint: str,
        token: str,
        login_name: str,
        *,
        min_delay_ms: int = 0,
        max_delay_ms: int = 0,
        rng: random.Random | None = None,
        sleep=time.sleep,
        clock=time.monotonic,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.token = token
        self.login_name = login_name
        self.min_delay_ms = min_delay_ms
        self.max_delay_ms = max_delay_ms
        self._rng = rng or random.Random()
        self._sleep = sleep
        self._clock = clock
        self._http = requests.Session()
        self._http.headers["Authorization"] = f"Bearer {token}"
        self.request_log: list[tuple[str, float]] = []  # (url, clock time)
        self.closed = False

    # -- fetching --

    def _pace(self) -> None:
        if not self.request_log:
            return
        delay_ms = self._rng.uniform(self.min_delay_ms, self.max_delay_ms)
        if delay_ms > 0:
            self._sleep(delay_ms / 1000.0)

    def fetch(self, url: str) -> str:
        """GET a page as text. 401 raises AuthExpired, everything else
        non-200 (and transport failures) raises FetchError."""
        if self.closed:
            raise FetchError(url, "session already closed")
        self._pace()
        self.request_log.append((url, self._clock()))
        try:
            resp = self._http.get(url, timeout=FETCH_TIMEOUT_S)
        except requests.RequestException as exc:
            raise FetchError(url, f"transport: {exc.__class__.__name__}") from exc
        if resp.status_code == 401:
            raise AuthExpired(url)
        if resp.status_code != 200:
            raise FetchError(url, f"status {resp.status_code}", resp.status_code)
        return resp.text

    def requested_urls(self) -> list[str]:
        return [url for url, _ in self.request_log]

    # -- teardown --

    def close(self) -> None:
        """Log out server-side. Safe to call more than once."""
        if self.closed:
            return
        self.closed = True
        try:
            self._http.post(f"{self.endpoint}/logout", timeout=FETCH_TIMEOUT_S)
        except requests.RequestException:
            log.debug("logout delivery failed for %s", self.login_name)
        finally:
            self._http.close()

    def __enter__(self) -> "Session":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def login(
    login_name: str,
    secret: str,
    endpoint: str,
    *,
    min_delay_ms: int = 0,
    max_delay_ms: int = 0,
    rng: random.Random | None = None,
    sleep=time.sleep,
    clock=time.monotonic,
) -> Session:
    """POST credentials to the endpoint; returns an authenticated Session.

    Raises BadCredentials on a 401, EndpointUnreachable when the endpoint
    cannot be reached within the login timeout.
    """
    endpoint = endpoint.rstrip("/")
    try:
        resp = requests.post(
            f"{endpoint}/login",
            json={"login": login_name, "secret": secret},
            timeout=LOGIN_TIMEOUT_S,
        )
    except requests.RequestException as exc:
        raise EndpointUnreachable(endpoint, exc.__class__.__name__) from exc
    if resp.status_code == 401:
        raise BadCredentials(login_name)
    if resp.status_code != 200:
        raise FetchError(f"{endpoint}/login", f"status {resp.status_code}",
                         resp.status_code)
    token = resp.json().get("token", "")
    if not token:
        raise FetchError(f"{endpoint}/login", "no token in login response")
    log.debug("logged in as %s", login_name)
    return Session(
        endpoint, token, login_name,
        min_delay_ms=min_delay_ms, max_delay_ms=max_delay_ms,
        rng=rng, sleep=sleep, clock=clock,
    )
