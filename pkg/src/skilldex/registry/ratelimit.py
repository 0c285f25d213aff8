"""Fixed-window, in-memory request limiting per client and endpoint class."""

from __future__ import annotations

import threading
import time
from typing import Callable

LIMITS = {"search": 100, "install": 500, "default": 1000}
WINDOW_SECONDS = 60


class RateLimiter:
    def __init__(self, limits: dict[str, int] | None = None, window: int = WINDOW_SECONDS,
                 clock: Callable[[], float] = time.time) -> None:
        self.limits = dict(LIMITS if limits is None else limits)
        self.window = window
        self.clock = clock
        self._counts: dict[tuple[str, str, int], int] = {}
        self._lock = threading.Lock()

    def check(self, client_key: str, endpoint_class: str) -> tuple[bool, int]:
        """Count one request; returns ``(allowed, retry_after_seconds)``."""
        now = self.clock()
        window_id = int(now // self.window)
        key = (client_key, endpoint_class, window_id)
        limit = self.limits.get(endpoint_class, self.limits["default"])
        with self._lock:
            # drop counters from earlier windows
            for stale in [k for k in self._counts if k[2] != window_id]:
                del self._counts[stale]
            count = self._counts.get(key, 0) + 1
            self._counts[key] = count
        if count <= limit:
            return True, 0
        retry_after = max(1, int((window_id + 1) * self.window - now + 0.999))
        return False, retry_after
