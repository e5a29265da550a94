"""Shared parameter store for asynchronous workers.

Workers snapshot the global parameters, train privately, and push their
updated copies back; the global view is the elementwise mean of every
worker's latest contribution.  All operations copy under a lock, so readers
never observe a half-written array.
"""

from __future__ import annotations

import threading

import numpy as np


class GlobalParamStore:
    def __init__(self, initial: list[np.ndarray]):
        self._lock = threading.Lock()
        self._global = [p.copy() for p in initial]
        self._slots: dict[int, list[np.ndarray]] = {}

    def snapshot(self) -> list[np.ndarray]:
        with self._lock:
            return [p.copy() for p in self._global]

    def push(self, worker_id: int, params: list[np.ndarray]) -> None:
        """Record a worker's latest params and refresh the global average."""
        with self._lock:
            self._slots[worker_id] = [p.copy() for p in params]
            slots = list(self._slots.values())
            self._global = [np.mean([s[i] for s in slots], axis=0)
                            for i in range(len(self._global))]

    @property
    def n_contributors(self) -> int:
        with self._lock:
            return len(self._slots)
