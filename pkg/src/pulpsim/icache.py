"""Set-associative instruction caches with LRU replacement.

One class serves both levels: per-core private L1 instances refill from a
shared L1.5 instance, which refills from L2 across the AXI bridge.  The
shared level serializes simultaneous refills with the same busy-stamp
scheme the memory banks use.  Lines carry real bytes, so a hit serves the
instruction word without touching anything upstream.
"""

from .component import Component, register, Request, STATUS_OK
from .errors import ConfigError


@register
class InstructionCache(Component):
    kind = "icache"
    PARAMS = {
        "size": (int, 512),
        "ways": (int, 2),
        "line_bytes": (int, 16),
        "hit_latency": (int, 0),
        "serialize_refills": (bool, False),
    }

    def build(self):
        size = self.params["size"]
        self.ways = self.params["ways"]
        self.line = self.params["line_bytes"]
        if self.line & (self.line - 1):
            raise ConfigError("%s: line_bytes must be a power of two" % self.path)
        if size % (self.ways * self.line):
            raise ConfigError("%s: size %d not divisible by ways*line" % (self.path, size))
        self.sets = size // (self.ways * self.line)
        self.hit_latency = self.params["hit_latency"]
        self.serialize = self.params["serialize_refills"]
        self.add_slave("in", self.handle)
        self.refill_port = self.add_master("refill")
        self._refill_req = Request()
        self._line_buf = bytearray(self.line)
        self._init_arrays()

    def _init_arrays(self):
        self.tags = [[None] * self.ways for _ in range(self.sets)]
        self.data = [[b""] * self.ways for _ in range(self.sets)]
        self.lru = [list(range(self.ways)) for _ in range(self.sets)]
        self.busy_until = -1
        self.hits = 0
        self.misses = 0
        self.refills = 0

    def reset(self):
        self._init_arrays()

    def _index(self, addr):
        lineno = addr // self.line
        return lineno % self.sets, lineno // self.sets

    def handle(self, req):
        addr = req.addr
        off = addr & (self.line - 1)
        if off + req.size > self.line:
            req.status = "error"    # fetch may not straddle a line
            return
        set_i, tag = self._index(addr)
        tags = self.tags[set_i]
        order = self.lru[set_i]
        for way in range(self.ways):
            if tags[way] == tag:
                order.remove(way)
                order.insert(0, way)
                req.latency += self.hit_latency
                self.hits += 1
                self._serve(req, set_i, way, off)
                return
        # miss: refill the whole line through the upstream port
        self.misses += 1
        req.cache_miss = True
        rr = self._refill_req
        rr.setup(addr - off, self.line, False, data=self._line_buf,
                 initiator=req.initiator)
        rr.latency = req.latency + self.hit_latency
        if self.serialize:
            at = self.domain.cycle + rr.latency
            wait = self.busy_until - at + 1
            if wait > 0:
                rr.latency += wait
                at += wait
            self.busy_until = at
        self.refill_port.send(rr)
        if rr.status != STATUS_OK:
            req.status = rr.status
            return
        self.refills += 1
        victim = order[-1]
        tags[victim] = tag
        self.data[set_i][victim] = bytes(self._line_buf)
        order.remove(victim)
        order.insert(0, victim)
        req.latency = rr.latency
        if rr.cache_miss:
            req.cache_miss = True
        self._serve(req, set_i, victim, off)

    def _serve(self, req, set_i, way, off):
        chunk = self.data[set_i][way][off:off + req.size]
        if req.data is None:
            req.value = int.from_bytes(chunk, "little")
        else:
            req.data[:req.size] = chunk

    def flush(self):
        for s in range(self.sets):
            for w in range(self.ways):
                self.tags[s][w] = None

    def flush_line(self, addr):
        set_i, tag = self._index(addr)
        for w in range(self.ways):
            if self.tags[set_i][w] == tag:
                self.tags[set_i][w] = None

    def counters(self):
        return {"hits": self.hits, "misses": self.misses, "refills": self.refills}
