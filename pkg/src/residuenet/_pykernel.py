"""Pure-Python packet engine.

Same algorithm, event ordering and floating-point expression order as the
compiled ``_ckernel`` module; both must produce identical outputs.  Used when
the extension is not built or when ``RESIDUENET_BACKEND=python``.
"""
from heapq import heappop, heappush

from .errors import EventOverflow

HOST, EDGE, CORE = 0, 1, 2
DATA, PROBE_REQ, PROBE_REP = 0, 1, 2
ARRIVAL, DEQUEUE, EMIT, CONTROL = 0, 1, 2, 3
DROPTAIL, UNMATCHED, MISROUTE, PROBE_LOST = 0, 1, 2, 3
N_CAUSES = 4
# trace actions
FORWARD, DELIVER, DROP_DROPTAIL, DROP_UNMATCHED, DROP_MISROUTE, EMITTED = 0, 1, 2, 3, 4, 5

_DROP_ACTION = {DROPTAIL: DROP_DROPTAIL, UNMATCHED: DROP_UNMATCHED, MISROUTE: DROP_MISROUTE}


class Engine:
    backend = "python"

    def __init__(self, node_kind, node_modulus, port_base, port_count, port_queue,
                 q_src, q_dst, q_capacity, q_delay, q_buffer,
                 chan_flow, chan_src, chan_dst, chan_reply,
                 n_flows, n_windows, window, max_pending=10**8, trace=False):
        self.node_kind = list(node_kind)
        self.node_modulus = list(node_modulus)
        self.port_base = list(port_base)
        self.port_count = list(port_count)
        self.port_queue = list(port_queue)
        self.host_uplink = []
        for n, k in enumerate(self.node_kind):
            up = -1
            if k == HOST:
                b = self.port_base[n]
                for p in range(self.port_count[n]):
                    if self.port_queue[b + p] >= 0:
                        up = self.port_queue[b + p]
                        break
            self.host_uplink.append(up)

        self.q_src = list(q_src)
        self.q_dst = list(q_dst)
        self.q_capacity = [float(c) for c in q_capacity]
        self.q_delay = [float(d) for d in q_delay]
        self.q_buffer = list(q_buffer)
        nq = len(self.q_src)
        self.q_occ = [0] * nq
        self.q_busy = [0.0] * nq
        self.q_bytes_window = [0] * nq
        self.q_tx_bytes = [0] * nq
        self.q_tx_packets = [0] * nq

        self.c_flow = list(chan_flow)
        self.c_src = list(chan_src)
        self.c_dst = list(chan_dst)
        self.c_reply = list(chan_reply)
        nc = len(self.c_flow)
        self.src_on = [False] * nc
        self.src_edge = [-1] * nc
        self.src_route = [0] * nc
        self.src_queue = [-1] * nc
        self.restore = [[] for _ in range(nc)]  # [edge, route, queue, orig]
        self.c_bytes_window = [0] * nc
        self.c_pkts_window = [0] * nc

        self.g_chan, self.g_kind, self.g_interval = [], [], []
        self.g_size, self.g_start, self.g_stop, self.g_k = [], [], [], []

        self.n_flows = n_flows
        self.n_windows = n_windows
        self.window = float(window)
        self.deliv_bits = [0] * (n_windows * n_flows)
        self.loss = [0] * (n_windows * n_flows * N_CAUSES)
        self.f_attrib_drops = [0] * n_flows
        self.lat_count = [0] * n_flows
        self.lat_sum = [0.0] * n_flows
        self.lat_min = [float("inf")] * n_flows
        self.lat_max = [0.0] * n_flows
        self.rtt = []
        self.trace_on = bool(trace)
        self.trace = []

        self.p_chan, self.p_size, self.p_src, self.p_orig = [], [], [], []
        self.p_seq, self.p_created, self.p_kind, self.p_t0 = [], [], [], []
        self.free = []

        self.heap = []
        self.order = 0
        self.now = 0.0
        self.max_pending = max_pending
        self.generated = 0
        self.delivered = 0
        self.dropped = [0, 0, 0]
        self.in_flight = 0
        self.header_mismatch = 0
        self.events = 0
        self.node_mac = [0x020000000000 | n for n in range(len(self.node_kind))]

    # -- events ---------------------------------------------------------
    def _push(self, t, typ, a, b):
        if len(self.heap) >= self.max_pending:
            raise EventOverflow(f"more than {self.max_pending} pending events")
        heappush(self.heap, (t, self.order, typ, a, b))
        self.order += 1

    def schedule_control(self, t, cid):
        self._push(float(t), CONTROL, cid, 0)

    def pending(self):
        return len(self.heap)

    def pending_arrivals(self):
        return sum(1 for e in self.heap if e[2] == ARRIVAL)

    # -- configuration --------------------------------------------------
    def add_generator(self, chan, kind, interval, size, start, stop):
        g = len(self.g_chan)
        self.g_chan.append(chan)
        self.g_kind.append(kind)
        self.g_interval.append(float(interval))
        self.g_size.append(size)
        self.g_start.append(float(start))
        self.g_stop.append(float(stop))
        self.g_k.append(0)
        if float(start) < float(stop):
            self._push(float(start), EMIT, g, 0)
        return g

    def _resolve(self, node, port):
        if port < 0 or port >= self.port_count[node]:
            return -1
        return self.port_queue[self.port_base[node] + port]

    def set_source_rule(self, chan, edge, route, port):
        self.src_on[chan] = True
        self.src_edge[chan] = edge
        self.src_route[chan] = route
        self.src_queue[chan] = self._resolve(edge, port)

    def clear_source_rule(self, chan):
        self.src_on[chan] = False

    def add_restore_rule(self, chan, edge, route, port, orig):
        self.restore[chan].append([edge, route, self._resolve(edge, port), orig])

    def remove_restore_rule(self, chan, edge, route):
        rules = self.restore[chan]
        for i, r in enumerate(rules):
            if r[0] == edge and r[1] == route:
                del rules[i]
                return True
        return False

    # -- packets --------------------------------------------------------
    def _alloc(self, chan, size, kind, seq, created, t0):
        src = self.node_mac[self.c_src[chan]]
        if self.free:
            pid = self.free.pop()
            self.p_chan[pid] = chan
            self.p_size[pid] = size
            self.p_src[pid] = src
            self.p_orig[pid] = src
            self.p_seq[pid] = seq
            self.p_created[pid] = created
            self.p_kind[pid] = kind
            self.p_t0[pid] = t0
        else:
            pid = len(self.p_chan)
            self.p_chan.append(chan)
            self.p_size.append(size)
            self.p_src.append(src)
            self.p_orig.append(src)
            self.p_seq.append(seq)
            self.p_created.append(created)
            self.p_kind.append(kind)
            self.p_t0.append(t0)
        self.in_flight += 1
        self.generated += 1
        return pid

    def _release(self, pid):
        self.free.append(pid)
        self.in_flight -= 1

    def _widx(self):
        w = int(self.now / self.window)
        if w >= self.n_windows:
            w = self.n_windows - 1
        return w

    def _trace(self, node, in_q, pid, out_q, action):
        self.trace.append((self.now, node, in_q, self.p_chan[pid], self.p_seq[pid],
                           self.p_kind[pid], self.p_src[pid], out_q, action))

    def _drop(self, pid, cause, node, in_q):
        if self.trace_on:
            self._trace(node, in_q, pid, -1, _DROP_ACTION[cause])
        flow = self.c_flow[self.p_chan[pid]]
        base = (self._widx() * self.n_flows + flow) * N_CAUSES
        self.loss[base + cause] += 1
        if self.p_kind[pid] != DATA:
            self.loss[base + PROBE_LOST] += 1
        if cause != DROPTAIL:
            self.f_attrib_drops[flow] += 1
        self.dropped[cause] += 1
        self._release(pid)

    def _enqueue(self, pid, q, node, in_q):
        if q < 0:
            self._drop(pid, MISROUTE, node, in_q)
            return
        if self.q_occ[q] >= self.q_buffer[q]:
            self._drop(pid, DROPTAIL, node, in_q)
            return
        if self.trace_on:
            self._trace(node, in_q, pid, q, FORWARD)
        self.q_occ[q] += 1
        start = self.q_busy[q]
        if self.now > start:
            start = self.now
        size = self.p_size[pid]
        done = start + size * 8.0 / self.q_capacity[q]
        self.q_busy[q] = done
        self._push(done, DEQUEUE, q, size)
        self._push(done + self.q_delay[q], ARRIVAL, pid, q)

    def _emit(self, g):
        chan = self.g_chan[g]
        k = self.g_k[g]
        kind = PROBE_REQ if self.g_kind[g] == 1 else DATA
        pid = self._alloc(chan, self.g_size[g], kind, k, self.now, self.now)
        node = self.c_src[chan]
        if self.trace_on:
            self._trace(node, -1, pid, -1, EMITTED)
        self._enqueue(pid, self.host_uplink[node], node, -1)
        k += 1
        self.g_k[g] = k
        t = self.g_start[g] + k * self.g_interval[g]
        if t < self.g_stop[g]:
            self._push(t, EMIT, g, 0)

    def _arrive(self, pid, q):
        node = self.q_dst[q]
        kind = self.node_kind[node]
        chan = self.p_chan[pid]
        if kind == CORE:
            port = self.p_src[pid] % self.node_modulus[node]
            self._enqueue(pid, self._resolve(node, port), node, q)
        elif kind == EDGE:
            if self.node_kind[self.q_src[q]] == HOST:
                if not self.src_on[chan] or self.src_edge[chan] != node:
                    self._drop(pid, UNMATCHED, node, q)
                    return
                self.c_bytes_window[chan] += self.p_size[pid]
                self.c_pkts_window[chan] += 1
                out = self.src_queue[chan]
                if out >= 0 and self.node_kind[self.q_dst[out]] != HOST:
                    self.p_src[pid] = self.src_route[chan]
                self._enqueue(pid, out, node, q)
            else:
                route = self.p_src[pid]
                for r in self.restore[chan]:
                    if r[0] == node and r[1] == route:
                        self.p_src[pid] = r[3]
                        self._enqueue(pid, r[2], node, q)
                        return
                self._drop(pid, UNMATCHED, node, q)
        else:
            self._deliver(pid, node, q)

    def _deliver(self, pid, node, q):
        chan = self.p_chan[pid]
        if node != self.c_dst[chan]:
            self._drop(pid, MISROUTE, node, q)
            return
        if self.trace_on:
            self._trace(node, q, pid, -1, DELIVER)
        self.delivered += 1
        if self.p_src[pid] != self.p_orig[pid]:
            self.header_mismatch += 1
        flow = self.c_flow[chan]
        kind = self.p_kind[pid]
        if kind == PROBE_REP:
            t0 = self.p_t0[pid]
            self.rtt.append((t0, flow, self.now - t0))
        else:
            self.deliv_bits[self._widx() * self.n_flows + flow] += self.p_size[pid] * 8
            lat = self.now - self.p_created[pid]
            self.lat_count[flow] += 1
            self.lat_sum[flow] += lat
            if lat < self.lat_min[flow]:
                self.lat_min[flow] = lat
            if lat > self.lat_max[flow]:
                self.lat_max[flow] = lat
            if kind == PROBE_REQ:
                rc = self.c_reply[chan]
                if rc >= 0:
                    rid = self._alloc(rc, self.p_size[pid], PROBE_REP, self.p_seq[pid],
                                      self.now, self.p_created[pid])
                    if self.trace_on:
                        self._trace(node, -1, rid, -1, EMITTED)
                    self._enqueue(rid, self.host_uplink[node], node, -1)
        self._release(pid)

    def run(self, t_end):
        """Process events with time <= t_end.

        Returns a control id when a control event is popped (the caller
        handles it and calls ``run`` again), or -1 once drained up to t_end.
        """
        heap = self.heap
        while heap and heap[0][0] <= t_end:
            t, _, typ, a, b = heappop(heap)
            self.now = t
            self.events += 1
            if typ == ARRIVAL:
                self._arrive(a, b)
            elif typ == DEQUEUE:
                self.q_occ[a] -= 1
                self.q_bytes_window[a] += b
                self.q_tx_bytes[a] += b
                self.q_tx_packets[a] += 1
            elif typ == EMIT:
                self._emit(a)
            else:
                return a
        if t_end > self.now:
            self.now = t_end
        return -1

    # -- readout --------------------------------------------------------
    def take_link_bytes(self):
        out = list(self.q_bytes_window)
        self.q_bytes_window = [0] * len(out)
        return out

    def take_channel_counts(self):
        b, p = list(self.c_bytes_window), list(self.c_pkts_window)
        self.c_bytes_window = [0] * len(b)
        self.c_pkts_window = [0] * len(p)
        return b, p

    def queue_occupancy(self):
        return list(self.q_occ)

    def link_tx(self):
        return list(self.q_tx_bytes), list(self.q_tx_packets)

    def delivered_bits(self):
        return list(self.deliv_bits)

    def loss_counts(self):
        return list(self.loss)

    def attributable_drops(self):
        return list(self.f_attrib_drops)

    def rtt_samples(self):
        return list(self.rtt)

    def latency_stats(self):
        return (list(self.lat_count), list(self.lat_sum),
                list(self.lat_min), list(self.lat_max))

    def trace_records(self):
        return list(self.trace)

    def counters(self):
        return {
            "generated": self.generated,
            "delivered": self.delivered,
            "droptail": self.dropped[DROPTAIL],
            "unmatched": self.dropped[UNMATCHED],
            "misroute": self.dropped[MISROUTE],
            "in_flight": self.in_flight,
            "header_mismatch": self.header_mismatch,
            "events": self.events,
        }
