"""Smooth compactly supported time windows for weak-in-time pairings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PolyWindow:
    """Polynomial bump (4 s (1-s))^q on [t0, t1], zero outside; q-1 derivatives vanish
    at the endpoints, so trapezoidal quadrature against it is high-order accurate."""

    t0: float
    t1: float
    q: int = 4

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        s = (t - self.t0) / (self.t1 - self.t0)
        inside = (s > 0.0) & (s < 1.0)
        w = np.zeros_like(s)
        w[inside] = (4.0 * s[inside] * (1.0 - s[inside])) ** self.q
        return w if w.ndim else float(w)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        s = (t - self.t0) / (self.t1 - self.t0)
        inside = (s > 0.0) & (s < 1.0)
        d = np.zeros_like(s)
        si = s[inside]
        d[inside] = (
            self.q
            * (4.0 * si * (1.0 - si)) ** (self.q - 1)
            * 4.0
            * (1.0 - 2.0 * si)
            / (self.t1 - self.t0)
        )
        return d if d.ndim else float(d)


def window_bank(t_end: float, count: int = 10, q: int = 4, overlap: float = 2.0):
    """Bank of overlapping bumps covering (0, t_end)."""
    centers = (np.arange(count) + 0.5) * t_end / count
    half = overlap * t_end / (2.0 * count)
    bank = []
    for c in centers:
        t0 = max(0.0, c - half)
        t1 = min(t_end, c + half)
        bank.append(PolyWindow(t0, t1, q))
    return bank
