"""Interconnect components: routers, interleavers and clock-domain crossings.

Routers decode addresses to output ports, charge a traversal latency and
model contention deterministically as bandwidth occupancy: each forwarded
request holds the router busy for size/bandwidth cycles and later requests
queue behind that stamp.  Interleavers fan core and DMA ports into memory
banks by address and add no latency of their own.
"""

from .component import Component, register, REQUIRED, STATUS_ERR
from .errors import ConfigError


def decode(mappings, addr):
    """Pure address lookup over (base, size, port) entries; None on miss."""
    for base, size, port in mappings:
        if base <= addr < base + size:
            return port
    return None


@register
class Router(Component):
    """Address-decoding crossbar with per-traversal latency and occupancy.

    `mappings` is a list of {"base", "size", "port"} dicts; output ports are
    created from it.  bandwidth_bytes_per_cycle = 0 disables occupancy
    modeling (a fully parallel crossbar).
    """

    kind = "router"
    PARAMS = {
        "latency": (int, 1),
        "bandwidth_bytes_per_cycle": (int, 0),
        "mappings": (list, REQUIRED),
    }

    def build(self):
        self.latency = self.params["latency"]
        self.bandwidth = self.params["bandwidth_bytes_per_cycle"]
        self.mappings = []
        seen = []
        for i, m in enumerate(self.params["mappings"]):
            base = m["base"] if isinstance(m["base"], int) else int(m["base"], 0)
            size = m["size"] if isinstance(m["size"], int) else int(m["size"], 0)
            port = m["port"]
            for b2, s2, p2 in seen:
                if base < b2 + s2 and b2 < base + size:
                    raise ConfigError(
                        "%s: mapping '%s' [0x%x,0x%x) overlaps '%s' [0x%x,0x%x)" % (
                            self.path, port, base, base + size, p2, b2, b2 + s2))
            seen.append((base, size, port))
            out = self.ports.get(port)
            if out is None:
                out = self.add_master(port)
            self.mappings.append((base, size, out))
        self.add_slave("in", self.handle)
        self.busy_until = -1
        self.forwarded = 0
        self.queued_cycles = 0

    def reset(self):
        self.busy_until = -1
        self.forwarded = 0
        self.queued_cycles = 0

    def handle(self, req):
        out = decode(self.mappings, req.addr)
        if out is None:
            req.status = STATUS_ERR     # bus error; no occupancy charged
            return
        at = self.domain.cycle + req.latency
        queuing = 0
        if self.bandwidth:
            queuing = self.busy_until - at
            if queuing < 0:
                queuing = 0
            self.busy_until = at + queuing + (-(-req.size // self.bandwidth))
            self.queued_cycles += queuing
        req.latency += self.latency + queuing
        self.forwarded += 1
        out.send(req)

    def counters(self):
        return {"forwarded": self.forwarded, "queued_cycles": self.queued_cycles}


@register
class Interleaver(Component):
    """Fan-in from cores/DMA to a banked memory; routes purely by address.

    The banked memory does its own per-bank accounting, so this component
    has a single output and exists to pin down the port topology (and the
    dedicated-port counts of DMA and accelerators).
    """

    kind = "interleaver"
    PARAMS = {
        "in_ports": (int, 1),
    }

    def build(self):
        self.add_slave("in", self.handle)
        self.out = self.add_master("out")

    def handle(self, req):
        self.out.send(req)


@register
class ClockCrossing(Component):
    """One-directional request bridge between two clock domains.

    The request's accumulated source-side latency fixes its global arrival
    time; service on the destination side starts at the next destination
    edge at or after it (plus an optional synchronizer penalty), and the
    response converts back the same way.  The component lives in the
    *destination* domain; `source_domain` names the other side.
    """

    kind = "clock-crossing"
    PARAMS = {
        "source_domain": (str, REQUIRED),
        "crossing_latency": (int, 0),   # extra destination cycles per crossing
    }

    def build(self):
        self.add_slave("in", self.handle)
        self.out = self.add_master("out")
        self.src = None                 # resolved in finalize

    def finalize(self):
        self.src = self.platform.domain(self.params["source_domain"])
        self.crossings = 0

    def reset(self):
        self.crossings = 0

    def handle(self, req):
        src = self.src
        dst = self.domain
        entry_ps = src.time_of_cycle(src.cycle + req.latency)
        dst_entry = dst.cycle_at_or_after(entry_ps) + self.params["crossing_latency"]
        src_latency = req.latency
        req.latency = dst_entry - dst.cycle     # arrival expressed in dst cycles
        self.out.send(req)
        done_ps = dst.time_of_cycle(dst.cycle + req.latency)
        req.latency = src.cycle_at_or_after(done_ps) - src.cycle
        if req.latency < src_latency:           # never lose already-paid cycles
            req.latency = src_latency
        self.crossings += 1

    def counters(self):
        return {"crossings": self.crossings}
