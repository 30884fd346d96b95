# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled packet engine.

Line-for-line port of ``_pykernel``: identical event ordering and float
expression order, so both backends emit byte-identical metrics.
"""
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memset
from libc.math cimport INFINITY

from residuenet.errors import EventOverflow


cdef enum:
    HOST = 0
    EDGE = 1
    CORE = 2
    DATA = 0
    PROBE_REQ = 1
    PROBE_REP = 2
    ARRIVAL = 0
    DEQUEUE = 1
    EMIT = 2
    CONTROL = 3
    DROPTAIL = 0
    UNMATCHED = 1
    MISROUTE = 2
    PROBE_LOST = 3
    N_CAUSES = 4
    FORWARD = 0
    DELIVER = 1
    EMITTED = 5
    MAX_RESTORE = 8

ctypedef unsigned long long u64
ctypedef long long i64

cdef struct Event:
    double t
    u64 order
    int typ
    int a
    i64 b

cdef struct Restore:
    int edge
    u64 route
    int queue
    u64 orig


cdef inline bint ev_less(Event* x, Event* y) nogil:
    if x.t < y.t:
        return True
    if x.t > y.t:
        return False
    return x.order < y.order


cdef void* _grow(void* ptr, size_t nbytes) except NULL:
    cdef void* p = realloc(ptr, nbytes)
    if p == NULL:
        raise MemoryError()
    return p


cdef void* _zalloc(size_t nbytes) except NULL:
    if nbytes == 0:
        nbytes = 1
    cdef void* p = malloc(nbytes)
    if p == NULL:
        raise MemoryError()
    memset(p, 0, nbytes)
    return p


cdef class Engine:
    cdef public str backend
    # topology
    cdef int n_nodes, n_queues, n_chan, n_ports
    cdef int* node_kind
    cdef i64* node_modulus
    cdef int* port_base
    cdef int* port_count
    cdef int* port_queue
    cdef int* host_uplink
    cdef int* q_src
    cdef int* q_dst
    cdef double* q_capacity
    cdef double* q_delay
    cdef i64* q_buffer
    cdef i64* q_occ
    cdef double* q_busy
    cdef i64* q_bytes_window
    cdef i64* q_tx_bytes
    cdef i64* q_tx_packets
    # channels and rules
    cdef int* c_flow
    cdef int* c_src
    cdef int* c_dst
    cdef int* c_reply
    cdef bint* src_on
    cdef int* src_edge
    cdef u64* src_route
    cdef int* src_queue
    cdef Restore* restore
    cdef int* n_restore
    cdef i64* c_bytes_window
    cdef i64* c_pkts_window
    # generators
    cdef int n_gen, cap_gen
    cdef int* g_chan
    cdef int* g_kind
    cdef double* g_interval
    cdef i64* g_size
    cdef double* g_start
    cdef double* g_stop
    cdef i64* g_k
    # metrics
    cdef int n_flows, n_windows
    cdef double window
    cdef i64* deliv_bits
    cdef i64* loss
    cdef i64* f_attrib_drops
    cdef i64* lat_count
    cdef double* lat_sum
    cdef double* lat_min
    cdef double* lat_max
    cdef list rtt
    cdef bint trace_on
    cdef list trace
    # packet pool
    cdef int p_cap, p_used, n_free
    cdef int* p_chan
    cdef i64* p_size
    cdef u64* p_src
    cdef u64* p_orig
    cdef i64* p_seq
    cdef double* p_created
    cdef int* p_kind
    cdef double* p_t0
    cdef int* free_list
    # heap
    cdef Event* heap
    cdef i64 heap_len, heap_cap
    cdef u64 order
    cdef public double now
    cdef i64 max_pending
    cdef i64 generated, delivered, in_flight, header_mismatch, events
    cdef i64 dropped[3]
    cdef u64* node_mac

    def __cinit__(self):
        self.heap = NULL
        self.heap_len = 0
        self.heap_cap = 0

    def __init__(self, node_kind, node_modulus, port_base, port_count, port_queue,
                 q_src, q_dst, q_capacity, q_delay, q_buffer,
                 chan_flow, chan_src, chan_dst, chan_reply,
                 n_flows, n_windows, window, max_pending=10**8, trace=False):
        cdef int i, n, p, b
        self.backend = "compiled"
        self.n_nodes = len(node_kind)
        self.n_ports = len(port_queue)
        self.n_queues = len(q_src)
        self.n_chan = len(chan_flow)
        self.node_kind = <int*>_zalloc(self.n_nodes * sizeof(int))
        self.node_modulus = <i64*>_zalloc(self.n_nodes * sizeof(i64))
        self.port_base = <int*>_zalloc(self.n_nodes * sizeof(int))
        self.port_count = <int*>_zalloc(self.n_nodes * sizeof(int))
        self.host_uplink = <int*>_zalloc(self.n_nodes * sizeof(int))
        self.node_mac = <u64*>_zalloc(self.n_nodes * sizeof(u64))
        self.port_queue = <int*>_zalloc(self.n_ports * sizeof(int))
        for i in range(self.n_nodes):
            self.node_kind[i] = node_kind[i]
            self.node_modulus[i] = node_modulus[i]
            self.port_base[i] = port_base[i]
            self.port_count[i] = port_count[i]
            self.node_mac[i] = <u64>0x020000000000 | <u64>i
        for i in range(self.n_ports):
            self.port_queue[i] = port_queue[i]
        for n in range(self.n_nodes):
            self.host_uplink[n] = -1
            if self.node_kind[n] == HOST:
                b = self.port_base[n]
                for p in range(self.port_count[n]):
                    if self.port_queue[b + p] >= 0:
                        self.host_uplink[n] = self.port_queue[b + p]
                        break

        self.q_src = <int*>_zalloc(self.n_queues * sizeof(int))
        self.q_dst = <int*>_zalloc(self.n_queues * sizeof(int))
        self.q_capacity = <double*>_zalloc(self.n_queues * sizeof(double))
        self.q_delay = <double*>_zalloc(self.n_queues * sizeof(double))
        self.q_buffer = <i64*>_zalloc(self.n_queues * sizeof(i64))
        self.q_occ = <i64*>_zalloc(self.n_queues * sizeof(i64))
        self.q_busy = <double*>_zalloc(self.n_queues * sizeof(double))
        self.q_bytes_window = <i64*>_zalloc(self.n_queues * sizeof(i64))
        self.q_tx_bytes = <i64*>_zalloc(self.n_queues * sizeof(i64))
        self.q_tx_packets = <i64*>_zalloc(self.n_queues * sizeof(i64))
        for i in range(self.n_queues):
            self.q_src[i] = q_src[i]
            self.q_dst[i] = q_dst[i]
            self.q_capacity[i] = float(q_capacity[i])
            self.q_delay[i] = float(q_delay[i])
            self.q_buffer[i] = q_buffer[i]

        n = self.n_chan
        self.c_flow = <int*>_zalloc(n * sizeof(int))
        self.c_src = <int*>_zalloc(n * sizeof(int))
        self.c_dst = <int*>_zalloc(n * sizeof(int))
        self.c_reply = <int*>_zalloc(n * sizeof(int))
        self.src_on = <bint*>_zalloc(n * sizeof(bint))
        self.src_edge = <int*>_zalloc(n * sizeof(int))
        self.src_route = <u64*>_zalloc(n * sizeof(u64))
        self.src_queue = <int*>_zalloc(n * sizeof(int))
        self.restore = <Restore*>_zalloc(n * MAX_RESTORE * sizeof(Restore))
        self.n_restore = <int*>_zalloc(n * sizeof(int))
        self.c_bytes_window = <i64*>_zalloc(n * sizeof(i64))
        self.c_pkts_window = <i64*>_zalloc(n * sizeof(i64))
        for i in range(n):
            self.c_flow[i] = chan_flow[i]
            self.c_src[i] = chan_src[i]
            self.c_dst[i] = chan_dst[i]
            self.c_reply[i] = chan_reply[i]
            self.src_edge[i] = -1
            self.src_queue[i] = -1

        self.n_gen = 0
        self.cap_gen = 0
        self.g_chan = NULL
        self.g_kind = NULL
        self.g_interval = NULL
        self.g_size = NULL
        self.g_start = NULL
        self.g_stop = NULL
        self.g_k = NULL

        self.n_flows = n_flows
        self.n_windows = n_windows
        self.window = float(window)
        self.deliv_bits = <i64*>_zalloc(n_windows * n_flows * sizeof(i64))
        self.loss = <i64*>_zalloc(n_windows * n_flows * N_CAUSES * sizeof(i64))
        self.f_attrib_drops = <i64*>_zalloc(n_flows * sizeof(i64))
        self.lat_count = <i64*>_zalloc(n_flows * sizeof(i64))
        self.lat_sum = <double*>_zalloc(n_flows * sizeof(double))
        self.lat_min = <double*>_zalloc(n_flows * sizeof(double))
        self.lat_max = <double*>_zalloc(n_flows * sizeof(double))
        for i in range(n_flows):
            self.lat_min[i] = INFINITY
        self.rtt = []
        self.trace_on = bool(trace)
        self.trace = []

        self.p_cap = 0
        self.p_used = 0
        self.n_free = 0
        self.p_chan = NULL
        self.p_size = NULL
        self.p_src = NULL
        self.p_orig = NULL
        self.p_seq = NULL
        self.p_created = NULL
        self.p_kind = NULL
        self.p_t0 = NULL
        self.free_list = NULL
        self._grow_pool(1024)

        self.heap_cap = 4096
        self.heap = <Event*>_grow(NULL, self.heap_cap * sizeof(Event))
        self.heap_len = 0
        self.order = 0
        self.now = 0.0
        self.max_pending = max_pending
        self.generated = 0
        self.delivered = 0
        self.in_flight = 0
        self.header_mismatch = 0
        self.events = 0
        self.dropped[0] = 0
        self.dropped[1] = 0
        self.dropped[2] = 0

    def __dealloc__(self):
        for ptr in (<size_t>self.node_kind, <size_t>self.node_modulus, <size_t>self.port_base,
                    <size_t>self.port_count, <size_t>self.host_uplink, <size_t>self.node_mac,
                    <size_t>self.port_queue, <size_t>self.q_src, <size_t>self.q_dst,
                    <size_t>self.q_capacity, <size_t>self.q_delay, <size_t>self.q_buffer,
                    <size_t>self.q_occ, <size_t>self.q_busy, <size_t>self.q_bytes_window,
                    <size_t>self.q_tx_bytes, <size_t>self.q_tx_packets, <size_t>self.c_flow,
                    <size_t>self.c_src, <size_t>self.c_dst, <size_t>self.c_reply,
                    <size_t>self.src_on, <size_t>self.src_edge, <size_t>self.src_route,
                    <size_t>self.src_queue, <size_t>self.restore, <size_t>self.n_restore,
                    <size_t>self.c_bytes_window, <size_t>self.c_pkts_window,
                    <size_t>self.g_chan, <size_t>self.g_kind, <size_t>self.g_interval,
                    <size_t>self.g_size, <size_t>self.g_start, <size_t>self.g_stop,
                    <size_t>self.g_k, <size_t>self.deliv_bits, <size_t>self.loss,
                    <size_t>self.f_attrib_drops, <size_t>self.lat_count, <size_t>self.lat_sum,
                    <size_t>self.lat_min, <size_t>self.lat_max, <size_t>self.p_chan,
                    <size_t>self.p_size, <size_t>self.p_src, <size_t>self.p_orig,
                    <size_t>self.p_seq, <size_t>self.p_created, <size_t>self.p_kind,
                    <size_t>self.p_t0, <size_t>self.free_list, <size_t>self.heap):
            free(<void*>ptr)

    # -- events ---------------------------------------------------------
    cdef int _push(self, double t, int typ, int a, i64 b) except -1:
        cdef i64 i, parent
        cdef Event ev
        if self.heap_len >= self.max_pending:
            raise EventOverflow(f"more than {self.max_pending} pending events")
        if self.heap_len == self.heap_cap:
            self.heap_cap *= 2
            self.heap = <Event*>_grow(self.heap, self.heap_cap * sizeof(Event))
        ev.t = t
        ev.order = self.order
        ev.typ = typ
        ev.a = a
        ev.b = b
        self.order += 1
        i = self.heap_len
        self.heap_len += 1
        while i > 0:
            parent = (i - 1) >> 1
            if ev_less(&ev, &self.heap[parent]):
                self.heap[i] = self.heap[parent]
                i = parent
            else:
                break
        self.heap[i] = ev
        return 0

    cdef Event _pop(self):
        cdef Event top = self.heap[0]
        cdef Event last
        cdef i64 i, child, n
        self.heap_len -= 1
        n = self.heap_len
        if n > 0:
            last = self.heap[n]
            i = 0
            while True:
                child = 2 * i + 1
                if child >= n:
                    break
                if child + 1 < n and ev_less(&self.heap[child + 1], &self.heap[child]):
                    child += 1
                if ev_less(&self.heap[child], &last):
                    self.heap[i] = self.heap[child]
                    i = child
                else:
                    break
            self.heap[i] = last
        return top

    def schedule_control(self, double t, int cid):
        self._push(t, CONTROL, cid, 0)

    def pending(self):
        return self.heap_len

    def pending_arrivals(self):
        cdef i64 i, n = 0
        for i in range(self.heap_len):
            if self.heap[i].typ == ARRIVAL:
                n += 1
        return n

    # -- configuration --------------------------------------------------
    def add_generator(self, int chan, int kind, double interval, i64 size,
                      double start, double stop):
        cdef int g = self.n_gen
        if self.n_gen == self.cap_gen:
            self.cap_gen = 8 if self.cap_gen == 0 else self.cap_gen * 2
            self.g_chan = <int*>_grow(self.g_chan, self.cap_gen * sizeof(int))
            self.g_kind = <int*>_grow(self.g_kind, self.cap_gen * sizeof(int))
            self.g_interval = <double*>_grow(self.g_interval, self.cap_gen * sizeof(double))
            self.g_size = <i64*>_grow(self.g_size, self.cap_gen * sizeof(i64))
            self.g_start = <double*>_grow(self.g_start, self.cap_gen * sizeof(double))
            self.g_stop = <double*>_grow(self.g_stop, self.cap_gen * sizeof(double))
            self.g_k = <i64*>_grow(self.g_k, self.cap_gen * sizeof(i64))
        self.g_chan[g] = chan
        self.g_kind[g] = kind
        self.g_interval[g] = interval
        self.g_size[g] = size
        self.g_start[g] = start
        self.g_stop[g] = stop
        self.g_k[g] = 0
        self.n_gen += 1
        if start < stop:
            self._push(start, EMIT, g, 0)
        return g

    cdef inline int _resolve(self, int node, i64 port):
        if port < 0 or port >= self.port_count[node]:
            return -1
        return self.port_queue[self.port_base[node] + port]

    def set_source_rule(self, int chan, int edge, u64 route, i64 port):
        self.src_on[chan] = True
        self.src_edge[chan] = edge
        self.src_route[chan] = route
        self.src_queue[chan] = self._resolve(edge, port)

    def clear_source_rule(self, int chan):
        self.src_on[chan] = False

    def add_restore_rule(self, int chan, int edge, u64 route, i64 port, u64 orig):
        cdef int k = self.n_restore[chan]
        if k >= MAX_RESTORE:
            raise RuntimeError("too many restore rules for one channel")
        cdef Restore* r = &self.restore[chan * MAX_RESTORE + k]
        r.edge = edge
        r.route = route
        r.queue = self._resolve(edge, port)
        r.orig = orig
        self.n_restore[chan] = k + 1

    def remove_restore_rule(self, int chan, int edge, u64 route):
        cdef int i, j, k = self.n_restore[chan]
        cdef Restore* rs = &self.restore[chan * MAX_RESTORE]
        for i in range(k):
            if rs[i].edge == edge and rs[i].route == route:
                for j in range(i, k - 1):
                    rs[j] = rs[j + 1]
                self.n_restore[chan] = k - 1
                return True
        return False

    # -- packets --------------------------------------------------------
    cdef int _grow_pool(self, int cap) except -1:
        self.p_chan = <int*>_grow(self.p_chan, cap * sizeof(int))
        self.p_size = <i64*>_grow(self.p_size, cap * sizeof(i64))
        self.p_src = <u64*>_grow(self.p_src, cap * sizeof(u64))
        self.p_orig = <u64*>_grow(self.p_orig, cap * sizeof(u64))
        self.p_seq = <i64*>_grow(self.p_seq, cap * sizeof(i64))
        self.p_created = <double*>_grow(self.p_created, cap * sizeof(double))
        self.p_kind = <int*>_grow(self.p_kind, cap * sizeof(int))
        self.p_t0 = <double*>_grow(self.p_t0, cap * sizeof(double))
        self.free_list = <int*>_grow(self.free_list, cap * sizeof(int))
        self.p_cap = cap
        return 0

    cdef int _alloc(self, int chan, i64 size, int kind, i64 seq, double created,
                    double t0) except -1:
        cdef int pid
        cdef u64 src = self.node_mac[self.c_src[chan]]
        if self.n_free > 0:
            self.n_free -= 1
            pid = self.free_list[self.n_free]
        else:
            if self.p_used == self.p_cap:
                self._grow_pool(self.p_cap * 2)
            pid = self.p_used
            self.p_used += 1
        self.p_chan[pid] = chan
        self.p_size[pid] = size
        self.p_src[pid] = src
        self.p_orig[pid] = src
        self.p_seq[pid] = seq
        self.p_created[pid] = created
        self.p_kind[pid] = kind
        self.p_t0[pid] = t0
        self.in_flight += 1
        self.generated += 1
        return pid

    cdef inline void _release(self, int pid):
        self.free_list[self.n_free] = pid
        self.n_free += 1
        self.in_flight -= 1

    cdef inline i64 _widx(self):
        cdef i64 w = <i64>(self.now / self.window)
        if w >= self.n_windows:
            w = self.n_windows - 1
        return w

    cdef void _trace(self, int node, int in_q, int pid, int out_q, int action):
        self.trace.append((self.now, node, in_q, self.p_chan[pid], self.p_seq[pid],
                           self.p_kind[pid], self.p_src[pid], out_q, action))

    cdef void _drop(self, int pid, int cause, int node, int in_q):
        cdef int flow
        cdef i64 base
        if self.trace_on:
            self._trace(node, in_q, pid, -1, cause + 2)
        flow = self.c_flow[self.p_chan[pid]]
        base = (self._widx() * self.n_flows + flow) * N_CAUSES
        self.loss[base + cause] += 1
        if self.p_kind[pid] != DATA:
            self.loss[base + PROBE_LOST] += 1
        if cause != DROPTAIL:
            self.f_attrib_drops[flow] += 1
        self.dropped[cause] += 1
        self._release(pid)

    cdef int _enqueue(self, int pid, int q, int node, int in_q) except -1:
        cdef double start, done
        cdef i64 size
        if q < 0:
            self._drop(pid, MISROUTE, node, in_q)
            return 0
        if self.q_occ[q] >= self.q_buffer[q]:
            self._drop(pid, DROPTAIL, node, in_q)
            return 0
        if self.trace_on:
            self._trace(node, in_q, pid, q, FORWARD)
        self.q_occ[q] += 1
        start = self.q_busy[q]
        if self.now > start:
            start = self.now
        size = self.p_size[pid]
        done = start + <double>size * 8.0 / self.q_capacity[q]
        self.q_busy[q] = done
        self._push(done, DEQUEUE, q, size)
        self._push(done + self.q_delay[q], ARRIVAL, pid, q)
        return 0

    cdef int _emit(self, int g) except -1:
        cdef int chan = self.g_chan[g]
        cdef i64 k = self.g_k[g]
        cdef int kind = PROBE_REQ if self.g_kind[g] == 1 else DATA
        cdef int pid = self._alloc(chan, self.g_size[g], kind, k, self.now, self.now)
        cdef int node = self.c_src[chan]
        cdef double t
        if self.trace_on:
            self._trace(node, -1, pid, -1, EMITTED)
        self._enqueue(pid, self.host_uplink[node], node, -1)
        k += 1
        self.g_k[g] = k
        t = self.g_start[g] + <double>k * self.g_interval[g]
        if t < self.g_stop[g]:
            self._push(t, EMIT, g, 0)
        return 0

    cdef int _arrive(self, int pid, int q) except -1:
        cdef int node = self.q_dst[q]
        cdef int kind = self.node_kind[node]
        cdef int chan = self.p_chan[pid]
        cdef int out, i, nr
        cdef u64 route
        cdef Restore* rs
        if kind == CORE:
            out = self._resolve(node, <i64>(self.p_src[pid] % <u64>self.node_modulus[node]))
            self._enqueue(pid, out, node, q)
        elif kind == EDGE:
            if self.node_kind[self.q_src[q]] == HOST:
                if not self.src_on[chan] or self.src_edge[chan] != node:
                    self._drop(pid, UNMATCHED, node, q)
                    return 0
                self.c_bytes_window[chan] += self.p_size[pid]
                self.c_pkts_window[chan] += 1
                out = self.src_queue[chan]
                if out >= 0 and self.node_kind[self.q_dst[out]] != HOST:
                    self.p_src[pid] = self.src_route[chan]
                self._enqueue(pid, out, node, q)
            else:
                route = self.p_src[pid]
                nr = self.n_restore[chan]
                rs = &self.restore[chan * MAX_RESTORE]
                for i in range(nr):
                    if rs[i].edge == node and rs[i].route == route:
                        self.p_src[pid] = rs[i].orig
                        self._enqueue(pid, rs[i].queue, node, q)
                        return 0
                self._drop(pid, UNMATCHED, node, q)
        else:
            self._deliver(pid, node, q)
        return 0

    cdef int _deliver(self, int pid, int node, int q) except -1:
        cdef int chan = self.p_chan[pid]
        cdef int flow, kind, rc, rid
        cdef double lat, t0
        if node != self.c_dst[chan]:
            self._drop(pid, MISROUTE, node, q)
            return 0
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
        return 0

    def run(self, double t_end):
        """Process events with time <= t_end; see the Python engine."""
        cdef Event ev
        while self.heap_len > 0 and self.heap[0].t <= t_end:
            ev = self._pop()
            self.now = ev.t
            self.events += 1
            if ev.typ == ARRIVAL:
                self._arrive(ev.a, <int>ev.b)
            elif ev.typ == DEQUEUE:
                self.q_occ[ev.a] -= 1
                self.q_bytes_window[ev.a] += ev.b
                self.q_tx_bytes[ev.a] += ev.b
                self.q_tx_packets[ev.a] += 1
            elif ev.typ == EMIT:
                self._emit(ev.a)
            else:
                return ev.a
        if t_end > self.now:
            self.now = t_end
        return -1

    # -- readout --------------------------------------------------------
    def take_link_bytes(self):
        out = [self.q_bytes_window[i] for i in range(self.n_queues)]
        memset(self.q_bytes_window, 0, self.n_queues * sizeof(i64))
        return out

    def take_channel_counts(self):
        b = [self.c_bytes_window[i] for i in range(self.n_chan)]
        p = [self.c_pkts_window[i] for i in range(self.n_chan)]
        memset(self.c_bytes_window, 0, self.n_chan * sizeof(i64))
        memset(self.c_pkts_window, 0, self.n_chan * sizeof(i64))
        return b, p

    def queue_occupancy(self):
        return [self.q_occ[i] for i in range(self.n_queues)]

    def link_tx(self):
        return ([self.q_tx_bytes[i] for i in range(self.n_queues)],
                [self.q_tx_packets[i] for i in range(self.n_queues)])

    def delivered_bits(self):
        return [self.deliv_bits[i] for i in range(self.n_windows * self.n_flows)]

    def loss_counts(self):
        return [self.loss[i] for i in range(self.n_windows * self.n_flows * N_CAUSES)]

    def attributable_drops(self):
        return [self.f_attrib_drops[i] for i in range(self.n_flows)]

    def rtt_samples(self):
        return list(self.rtt)

    def latency_stats(self):
        n = self.n_flows
        return ([self.lat_count[i] for i in range(n)], [self.lat_sum[i] for i in range(n)],
                [self.lat_min[i] for i in range(n)], [self.lat_max[i] for i in range(n)])

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
