"""Instrumented execution: operation counters, an accounting allocator and
the hook through which engines emit access traces.

Engines never touch numpy arrays directly; they go through a Machine, which
keeps the arithmetic, the counts and the trace in one place so a run can be
checked against the closed forms in predict.py.
"""
import csv
import io
from dataclasses import dataclass, field, asdict

import numpy as np

from .linalg import zeros

CATEGORIES = ("A", "B", "C", "X")


@dataclass
class CostReport:
    additions: int = 0
    scalar_multiplications: int = 0
    element_multiplications: int = 0
    peak_words: int = 0
    peak_extra_words: int = 0
    io_loads: int = 0
    io_writebacks: int = 0
    io_transfers: int = 0
    components: dict = field(default_factory=dict)

    @property
    def linear_ops(self):
        return self.additions + self.scalar_multiplications

    @property
    def arithmetic(self):
        """Everything counted by the arithmetic-complexity formulas."""
        return self.additions + self.scalar_multiplications + self.element_multiplications

    def __add__(self, other):
        out = CostReport(
            self.additions + other.additions,
            self.scalar_multiplications + other.scalar_multiplications,
            self.element_multiplications + other.element_multiplications,
            max(self.peak_words, other.peak_words),
            max(self.peak_extra_words, other.peak_extra_words),
            self.io_loads + other.io_loads,
            self.io_writebacks + other.io_writebacks,
            self.io_transfers + other.io_transfers,
        )
        return out

    def row(self):
        d = asdict(self)
        d.pop("components")
        d["arithmetic"] = self.arithmetic
        return d


def reports_to_csv(rows, columns=None):
    """rows: list of dicts.  Returns CSV text."""
    if not rows:
        return ""
    columns = columns or list(rows[0].keys())
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def format_table(rows, columns=None):
    if not rows:
        return ""
    columns = columns or list(rows[0].keys())
    cells = [[str(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(c), *(len(x[i]) for x in cells)) for i, c in enumerate(columns)]
    line = "  ".join(c.rjust(w) for c, w in zip(columns, widths))
    out = [line, "  ".join("-" * w for w in widths)]
    for x in cells:
        out.append("  ".join(v.rjust(w) for v, w in zip(x, widths)))
    return "\n".join(out)


class Blk:
    """A view of engine storage: values plus (when tracing) word addresses."""

    __slots__ = ("data", "addr", "bid", "cat")

    def __init__(self, data, addr=None, bid=None, cat="X"):
        self.data = data
        self.addr = addr
        self.bid = bid
        self.cat = cat

    def __getitem__(self, idx):
        return Blk(self.data[idx], None if self.addr is None else self.addr[idx], None, self.cat)

    @property
    def size(self):
        return self.data.size

    @property
    def shape(self):
        return self.data.shape

    def __len__(self):
        return self.data.shape[0]

    def grid(self, m, n):
        """Cut the trailing matrix dims into an m x n grid; returns the m*n
        views, listed row-major.  Leading (vector) dims are kept."""
        R, C = self.data.shape[-2:]
        br, bc = R // m, C // n
        return [self[..., i * br:(i + 1) * br, j * bc:(j + 1) * bc]
                for i in range(m) for j in range(n)]

    def reshape(self, *shape):
        return Blk(self.data.reshape(shape), None if self.addr is None else self.addr.reshape(shape),
                   None, self.cat)

    def take(self, axis, i):
        return self[(slice(None),) * axis + (i,)]


class Machine:
    """Counts arithmetic, tracks live words and forwards accesses to a tracer."""

    def __init__(self, mode="exact", tracer=None):
        self.mode = mode
        self.tracer = tracer
        self.adds = 0
        self.smults = 0
        self.emults = 0
        self.live = 0
        self.peak = 0
        self.live_cat = dict.fromkeys(CATEGORIES, 0)
        self.peak_cat = dict.fromkeys(CATEGORIES, 0)
        self.base_words = 0
        self._bid = 0
        self._addr = 0
        self._sizes = {}
        self.ops_cat = dict.fromkeys(CATEGORIES, 0)

    # storage

    def _register(self, data, cat, name):
        bid = self._bid
        self._bid += 1
        n = data.size
        self._sizes[bid] = (n, cat)
        self.live += n
        self.live_cat[cat] += n
        if self.live > self.peak:
            self.peak = self.live
        if self.live_cat[cat] > self.peak_cat[cat]:
            self.peak_cat[cat] = self.live_cat[cat]
        addr = None
        if self.tracer is not None:
            base = self.tracer.register(bid, n, name or cat)
            addr = np.arange(base, base + n, dtype=np.int64).reshape(data.shape)
        return Blk(data, addr, bid, cat)

    def new(self, shape, cat="X", name=None):
        data = zeros(shape) if self.mode == "exact" else np.zeros(shape)
        return self._register(data, cat, name)

    def adopt(self, array, cat="X", name=None):
        """Place an existing array (an input) in storage."""
        return self._register(array, cat, name)

    def free(self, blk):
        n, cat = self._sizes.pop(blk.bid)
        self.live -= n
        self.live_cat[cat] -= n
        if self.tracer is not None:
            self.tracer.free(blk.bid)

    def mark_base(self):
        """Record the words held by inputs/outputs so extras can be reported."""
        self.base_words = self.live
        self.peak = self.live
        self.peak_cat = dict(self.live_cat)

    # arithmetic

    def lincomb(self, out, coeffs, srcs):
        """out = sum_i coeffs[i] * srcs[i]; out must be freshly allocated."""
        terms = [(c, s) for c, s in zip(coeffs, srcs) if c != 0]
        if not terms:
            return
        w = out.size
        na = (len(terms) - 1) * w
        nm = sum(1 for c, _ in terms if c != 1 and c != -1) * w
        self.adds += na
        self.smults += nm
        self.ops_cat[out.cat] += na + nm
        acc = None
        for c, s in terms:
            v = s.data if c == 1 else (-s.data if c == -1 else c * s.data)
            acc = v if acc is None else acc + v
        out.data[...] = acc
        if self.tracer is not None:
            k = len(terms)
            ev = np.empty((w, k + 1), dtype=np.int64)
            for i, (_, s) in enumerate(terms):
                ev[:, i] = s.addr.reshape(-1) * 2
            ev[:, k] = out.addr.reshape(-1) * 2 + 1
            self.tracer.emit(ev.reshape(-1))

    def accum(self, out, c, src, first):
        """out (+)= c * src; `first` means out still holds nothing."""
        if c == 0:
            return
        w = out.size
        v = src.data if c == 1 else (-src.data if c == -1 else c * src.data)
        if c != 1 and c != -1:
            self.smults += w
            self.ops_cat[out.cat] += w
        if first:
            out.data[...] = v
        else:
            self.adds += w
            self.ops_cat[out.cat] += w
            out.data[...] = out.data + v
        if self.tracer is not None:
            if first:
                ev = np.empty((w, 2), dtype=np.int64)
                ev[:, 0] = src.addr.reshape(-1) * 2
                ev[:, 1] = out.addr.reshape(-1) * 2 + 1
            else:
                ev = np.empty((w, 3), dtype=np.int64)
                ev[:, 0] = out.addr.reshape(-1) * 2
                ev[:, 1] = src.addr.reshape(-1) * 2
                ev[:, 2] = out.addr.reshape(-1) * 2 + 1
            self.tracer.emit(ev.reshape(-1))

    def hadamard(self, out, a, b):
        w = out.size
        self.emults += w
        out.data[...] = a.data * b.data
        if self.tracer is not None:
            ev = np.empty((w, 3), dtype=np.int64)
            ev[:, 0] = a.addr.reshape(-1) * 2
            ev[:, 1] = b.addr.reshape(-1) * 2
            ev[:, 2] = out.addr.reshape(-1) * 2 + 1
            self.tracer.emit(ev.reshape(-1))

    def classical(self, out, a, b, accumulate_c=False, order="irj"):
        """out[l] = a[l] @ b[l] for every block l, by the textbook triple loop.

        Counts n*k*(m-1) additions and n*m*k multiplications per block.  The
        trace follows the i, r, j order (r the inner dimension): a[l,i,r] is
        read once and row r of b is streamed against row i of out.  The
        first pass over row i writes it without reading; with accumulate_c
        every update reads C first (C += a*b with C already in slow memory).
        order="rij" puts r outermost instead (the outer-product form).
        """
        L, n, m = a.shape
        k = b.shape[2]
        if L == n == m == k == 1 and not accumulate_c:
            self.hadamard(out, a, b)
            return
        self.emults += L * n * m * k
        self.adds += L * n * k * (m - 1)
        if out.data.dtype == object:
            for l in range(L):
                out.data[l] = np.dot(a.data[l], b.data[l])
        else:
            out.data[...] = np.matmul(a.data, b.data)
        if self.tracer is not None:
            self.tracer.emit(_classical_trace(out, a, b, accumulate_c, order))

    # reporting

    def report(self):
        return CostReport(
            additions=self.adds,
            scalar_multiplications=self.smults,
            element_multiplications=self.emults,
            peak_words=self.peak,
            peak_extra_words=self.peak - self.base_words,
        )

    def extra_by_category(self):
        """Peak words per operand category above what inputs/outputs hold."""
        return dict(self.peak_cat)


def _classical_trace(out, a, b, accumulate_c, order):
    """Event stream of the triple loop: a[l,i,r] is read once per (i, r),
    then for each j: read b[l,r,j], read out[l,i,j], write out[l,i,j]."""
    L, n, m = a.shape
    k = b.shape[2]
    shape = (L, n, m, k)
    B = np.broadcast_to(b.addr[:, None, :, :], shape)
    Cw = np.broadcast_to(out.addr[:, :, None, :], shape)
    inner = np.stack([B * 2, Cw * 2, Cw * 2 + 1], axis=-1).reshape(L, n, m, 3 * k)
    ev = np.concatenate([a.addr[..., None] * 2, inner], axis=-1)
    keep = np.ones(ev.shape, dtype=bool)
    if not accumulate_c:
        keep[:, :, 0, 2::3] = False          # first update of out[l,i,j] does not read it
    if order == "rij":
        ev = np.swapaxes(ev, 1, 2)
        keep = np.swapaxes(keep, 1, 2)
    elif order != "irj":
        raise ValueError("unknown loop order %r" % order)
    return ev[keep] if not keep.all() else ev.reshape(-1)
