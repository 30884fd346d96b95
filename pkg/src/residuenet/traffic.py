"""Traffic sources and the metric series they produce."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

CBR = "cbr"
PROBE = "probe"
DEFAULT_PROBE_SIZE = 98
DEFAULT_WINDOW = 1.0


@dataclass(frozen=True)
class FlowSpec:
    """A constant-bit-rate stream or a periodic echo probe.

    ``rate_pps`` is set for CBR flows and ``period`` for probes.
    """
    id: str
    kind: str
    src: str
    dst: str
    size: int
    start: float
    stop: float
    rate_pps: Optional[float] = None
    period: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (CBR, PROBE):
            raise ValueError(f"flow {self.id}: unknown kind {self.kind!r}")
        if not self.start < self.stop:
            raise ValueError(f"flow {self.id}: start must be before stop")
        if self.size <= 0:
            raise ValueError(f"flow {self.id}: packet size must be positive")
        if self.kind == CBR and not (self.rate_pps and self.rate_pps > 0):
            raise ValueError(f"flow {self.id}: CBR flow needs rate_pps > 0")
        if self.kind == PROBE and not (self.period and self.period > 0):
            raise ValueError(f"flow {self.id}: probe flow needs period > 0")

    @property
    def interval(self) -> float:
        return 1.0 / self.rate_pps if self.kind == CBR else self.period

    @property
    def offered_bps(self) -> float:
        return self.size * 8 / self.interval


def cbr_spec(id, src, dst, *, size, start, stop, rate_pps=None, rate_bps=None) -> FlowSpec:
    if (rate_pps is None) == (rate_bps is None):
        raise ValueError("give exactly one of rate_pps / rate_bps")
    if rate_pps is None:
        rate_pps = rate_bps / (size * 8)
    return FlowSpec(id, CBR, src, dst, size, start, stop, rate_pps=rate_pps)


def probe_spec(id, src, dst, *, period=1.0, size=DEFAULT_PROBE_SIZE, start=0.0, stop) -> FlowSpec:
    return FlowSpec(id, PROBE, src, dst, size, start, stop, period=period)


def emission_count(spec: FlowSpec) -> int:
    """Number of k >= 0 with start + k*interval < stop (engine's emission rule)."""
    iv = spec.interval
    n = max(0, math.ceil((spec.stop - spec.start) / iv))
    while n > 0 and not spec.start + (n - 1) * iv < spec.stop:
        n -= 1
    while spec.start + n * iv < spec.stop:
        n += 1
    return n


def emission_times(spec: FlowSpec) -> np.ndarray:
    """Send instants of every packet the source emits."""
    k = np.arange(emission_count(spec), dtype=np.float64)
    return spec.start + k * spec.interval


def cbr_generate(spec: FlowSpec) -> np.ndarray:
    if spec.kind != CBR:
        raise ValueError("cbr_generate needs a CBR flow")
    return emission_times(spec)


def probe_generate(spec: FlowSpec) -> np.ndarray:
    """Request send times; replies are produced by the destination on delivery."""
    if spec.kind != PROBE:
        raise ValueError("probe_generate needs a probe flow")
    return emission_times(spec)


def n_windows(duration: float, width: float = DEFAULT_WINDOW) -> int:
    return max(1, math.ceil(duration / width - 1e-12))


def window_throughput(deliveries: Iterable[tuple], width: float, duration: float,
                      flows: list[str]) -> list[tuple]:
    """Aggregate a delivery log of ``(time, flow, bits)`` into fixed windows.

    Returns ``(window_start, flow, bits_per_second)`` rows for every window
    and flow, windows aligned to t = 0.  Deliveries at exactly ``duration``
    fall in the last window.
    """
    nw = n_windows(duration, width)
    acc = {f: [0] * nw for f in flows}
    for t, flow, bits in deliveries:
        w = min(int(t / width), nw - 1)
        acc[flow][w] += bits
    return [(w * width, f, acc[f][w] / width) for w in range(nw) for f in flows]


@dataclass
class MetricSeries:
    throughput: list  # (window_start, flow, bits_per_s)
    rtt: list  # (send_time, flow, rtt)
    loss: list  # (interval_start, flow, cause, count)

    def total_bits(self, flow: str, width: float) -> float:
        return sum(b * width for _, f, b in self.throughput if f == flow)
