"""Trace-driven model of a fully associative LRU fast memory.

Engines running on a Machine with a Tracer attached emit one event per word
access (addr*2 for a read, addr*2+1 for a write).  Freeing a buffer emits a
control pair (-1-base, -1-size); the simulator then drops those lines
without writing them back, since their contents are dead.

Accounting:
    read miss                -> one load
    write miss               -> no load (the line is allocated and marked dirty)
    evicting a dirty line    -> one writeback
    dirty lines at the end   -> one writeback each (final flush)
"""
import math
import logging
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:          # pragma: no cover - slow pure-python path
    def njit(*a, **k):
        if a and callable(a[0]):
            return a[0]
        return lambda f: f

from .counters import Machine, CostReport

log = logging.getLogger(__name__)

STREAM_LIMIT = 10 ** 7       # keep full traces only up to this many events
CHUNK = 1 << 20


@dataclass
class IoResult:
    loads: int
    writebacks: int
    M: int
    line: int = 1

    @property
    def total(self):
        return self.loads + self.writebacks

    def row(self):
        return {"M": self.M, "line": self.line, "loads": self.loads,
                "writebacks": self.writebacks, "total": self.total}


@njit(cache=True)
def _run(ev, line, cap, nxt, prv, present, dirty, stats):
    # node 0 is the list head; line l lives in node l + 1
    # stats: [count, loads, writebacks]
    n = ev.shape[0]
    k = 0
    while k < n:
        e = ev[k]
        if e < 0:
            base = -1 - e
            size = -1 - ev[k + 1]
            k += 2
            for l in range(base // line + 1, (base + size - 1) // line + 2):
                if present[l]:
                    p = prv[l]
                    q = nxt[l]
                    nxt[p] = q
                    prv[q] = p
                    present[l] = False
                    dirty[l] = False
                    stats[0] -= 1
            continue
        k += 1
        w = e & 1
        l = (e >> 1) // line + 1
        if present[l]:
            p = prv[l]
            q = nxt[l]
            nxt[p] = q
            prv[q] = p
            f = nxt[0]
            nxt[0] = l
            prv[l] = 0
            nxt[l] = f
            prv[f] = l
            if w == 1:
                dirty[l] = True
            continue
        if w == 0:
            stats[1] += 1
        if stats[0] >= cap:
            v = prv[0]
            p = prv[v]
            nxt[p] = 0
            prv[0] = p
            present[v] = False
            if dirty[v]:
                stats[2] += 1
                dirty[v] = False
            stats[0] -= 1
        f = nxt[0]
        nxt[0] = l
        prv[l] = 0
        nxt[l] = f
        prv[f] = l
        present[l] = True
        dirty[l] = w == 1
        stats[0] += 1


class LRU:
    """One fast memory of M words organised in lines of `line` words."""

    def __init__(self, M, line=1):
        if line < 1 or M < line:
            raise ValueError("need M >= line >= 1 (got M=%s, line=%s)" % (M, line))
        self.M = int(M)
        self.line = int(line)
        self.cap = self.M // self.line
        self.nxt = np.zeros(1025, dtype=np.int64)
        self.prv = np.zeros(1025, dtype=np.int64)
        self.present = np.zeros(1025, dtype=np.bool_)
        self.dirty = np.zeros(1025, dtype=np.bool_)
        self.stats = np.zeros(3, dtype=np.int64)

    def ensure(self, words):
        need = words // self.line + 2
        size = len(self.nxt)
        if need <= size:
            return
        size = max(need, 2 * size)
        for name in ("nxt", "prv", "present", "dirty"):
            old = getattr(self, name)
            arr = np.zeros(size, dtype=old.dtype)
            arr[:len(old)] = old
            setattr(self, name, arr)

    def feed(self, ev):
        _run(ev, self.line, self.cap, self.nxt, self.prv, self.present, self.dirty, self.stats)

    def result(self):
        flush = int(np.count_nonzero(self.dirty & self.present))
        return IoResult(int(self.stats[1]), int(self.stats[2]) + flush, self.M, self.line)


class AccessTrace:
    """Registry of buffers plus the event stream.

    Used directly (register / read / write) for hand-written traces, and by
    the Machine through register / free / emit.  `sims` are LRU instances fed
    as the trace grows; the events themselves are kept until the trace
    passes `limit` events.
    """

    def __init__(self, Ms=(), line=1, limit=STREAM_LIMIT, keep=True):
        self.line = int(line)
        self.sims = [LRU(M, line) for M in Ms]
        self.limit = limit
        self.keep = keep
        self.chunks = [] if keep else None
        self.pending = []
        self.n_pending = 0
        self.n_events = 0
        self.overflowed = False
        self.buffers = {}          # bid -> (base, size, name)
        self.top = 0
        self._free = {}            # size -> [bases]
        self._auto = 0

    # registry

    def register(self, bid, n, name=None):
        size = -(-int(n) // self.line) * self.line
        pool = self._free.get(size)
        if pool:
            base = pool.pop()
        else:
            base = self.top
            self.top += size
            for s in self.sims:
                s.ensure(self.top)
        self.buffers[bid] = (base, int(n), name)
        return base

    def new_buffer(self, n, name=None):
        """Register a buffer for a hand-written trace; returns its id."""
        bid = ("user", self._auto)
        self._auto += 1
        self.register(bid, n, name)
        return bid

    def free(self, bid):
        base, n, _ = self.buffers.pop(bid)
        size = -(-n // self.line) * self.line
        self._free.setdefault(size, []).append(base)
        self.emit(np.array([-1 - base, -1 - size], dtype=np.int64))

    def _addr(self, bid, off):
        if bid not in self.buffers:
            raise KeyError("unregistered buffer %r" % (bid,))
        base, n, _ = self.buffers[bid]
        if not 0 <= off < n:
            raise IndexError("offset %d outside buffer %r of %d words" % (off, bid, n))
        return base + off

    def read(self, bid, off=0):
        self.emit(np.array([self._addr(bid, off) * 2], dtype=np.int64))

    def write(self, bid, off=0):
        self.emit(np.array([self._addr(bid, off) * 2 + 1], dtype=np.int64))

    # events

    def emit(self, ev):
        self.pending.append(ev)
        self.n_pending += len(ev)
        if self.n_pending >= CHUNK:
            self.flush()

    def flush(self):
        if not self.pending:
            return
        ev = np.concatenate(self.pending)
        self.pending = []
        self.n_pending = 0
        self.n_events += len(ev)
        for s in self.sims:
            s.feed(ev)
        if self.chunks is not None:
            if self.n_events > self.limit:
                log.info("trace passed %d events; keeping only the streamed results", self.limit)
                self.chunks = None
                self.overflowed = True
            else:
                self.chunks.append(ev)

    def events(self):
        self.flush()
        if self.chunks is None:
            raise RuntimeError("trace was not retained (streamed past %d events)" % self.limit)
        if not self.chunks:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(self.chunks)

    def results(self):
        self.flush()
        return [s.result() for s in self.sims]


Tracer = AccessTrace


def simulate(trace, M, line=None):
    """Replay a retained trace through an LRU of M words."""
    line = trace.line if line is None else int(line)
    if line % trace.line:
        raise ValueError("line %d is not a multiple of the trace's alignment %d" % (line, trace.line))
    sim = LRU(M, line)
    sim.ensure(trace.top)
    sim.feed(trace.events())
    return sim.result()


# traced runs


def naive_traced(mach, A, B):
    """Textbook i, k, j loop (k the inner dimension) with C updated in slow memory."""
    a = mach.adopt(np.asarray(A).reshape((1,) + A.shape), "A")
    b = mach.adopt(np.asarray(B).reshape((1,) + B.shape), "B")
    c = mach.adopt(np.zeros((1, A.shape[0], B.shape[1]), dtype=np.asarray(A).dtype), "C")
    mach.mark_base()
    mach.classical(c, a, b, accumulate_c=True)
    return c.data[0]


def traced_run(engine, obj, A, B, Ms, line=1, M_engine=None, keep=True):
    """Run `engine` with tracing and simulate every M in Ms.

    obj is a BilinearAlgorithm (naive / recursive) or an AlgebraDecomposition
    (ac-family engines run on its transformed algorithm, no basis change).
    Returns (C, [IoResult], CostReport)."""
    from . import engines as E
    from .bilinear import recursive_multiply
    A = np.asarray(A)
    B = np.asarray(B)
    mode = "exact" if A.dtype == object else "float"
    tr = AccessTrace(Ms, line, keep=keep)
    mach = Machine(mode, tracer=tr)
    if engine == "naive":
        C = naive_traced(mach, A, B)
    elif engine == "recursive":
        C = recursive_multiply(obj, A, B, 1, mach)
    elif engine in ("bc", "dc", "cc"):
        C = E.run_engine(obj, A, B, engine, M=M_engine, machine=mach)
    else:
        raise ValueError("engine %r has no traced mode" % engine)
    res = tr.results()
    rep = mach.report()
    if len(res) == 1:
        rep.io_loads, rep.io_writebacks, rep.io_transfers = res[0].loads, res[0].writebacks, res[0].total
    return C, res, rep


def traced_instance(engine, d, S, T, Ms, line=1, M_engine=None):
    """Traced ac / bc / dc / cc on an (h, x)-instance; returns (out, [IoResult], report)."""
    from . import engines as E
    tr = AccessTrace(Ms, line, keep=False)
    first = np.asarray(S[0])
    mach = Machine("exact" if first.dtype == object else "float", tracer=tr)
    if engine == "ac":
        out = E.ac(d, S, T, mach)
    elif engine == "bc":
        out = E.bc(d, S, T, mach)
    elif engine == "dc":
        out = E.dc(d, S, T, mach)
    elif engine == "cc":
        out = E.cc(d, S, T, M_engine, mach)
    else:
        raise ValueError("engine %r has no traced instance mode" % engine)
    return out, tr.results(), mach.report()


def fit_exponent(sizes, totals):
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(totals, dtype=float))
    if len(sizes) < 3 or np.ptp(x) == 0:
        raise ValueError("need at least three distinct sizes for a fit")
    slope, icpt = np.polyfit(x, y, 1)
    return float(slope), float(icpt)


def io_scaling_probe(engine, alg, sizes, M, line=1, seed=0):
    """Fit log(total IO) against log(n).  Returns dict with the exponent and
    the coefficient of (n / sqrt(M))^omega0 * M for the recursive baseline."""
    rng = np.random.default_rng(seed)
    totals = []
    for n in sizes:
        A = rng.integers(-3, 4, size=(n, n)).astype(float)
        B = rng.integers(-3, 4, size=(n, n)).astype(float)
        _, res, _ = traced_run(engine, alg, A, B, [M], line, keep=False)
        totals.append(res[0].total)
    slope, _ = fit_exponent(sizes, totals)
    out = {"sizes": list(sizes), "totals": totals, "exponent": slope}
    if engine == "recursive":
        w0 = math.log(alg.t) / math.log(alg.n0)
        out["omega0"] = w0
        out["coefficient"] = totals[-1] / ((sizes[-1] / math.sqrt(M)) ** w0 * M)
    return out
