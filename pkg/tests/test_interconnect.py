"""Routers: decode, latency, bandwidth occupancy; clock crossing math."""

import pytest

from pulpsim.component import Request, bind, Component
from pulpsim.engine import TimeEngine, ClockDomain
from pulpsim.errors import ConfigError
from pulpsim.interconnect import Router, ClockCrossing, decode


class Sink(Component):
    kind = "test-sink"

    def build(self):
        self.add_slave("in", self.handle)
        self.seen = []

    def handle(self, req):
        self.seen.append(req.addr)


class FakePlatform:
    def __init__(self, domains):
        self.domains = domains

    def domain(self, name):
        return self.domains[name]


def make_router(latency=1, bandwidth=0):
    eng = TimeEngine()
    dom = ClockDomain("clk", 400_000_000)
    eng.add_domain(dom)
    plat = FakePlatform({"clk": dom})
    router = Router(plat, "rt", {
        "latency": latency, "bandwidth_bytes_per_cycle": bandwidth,
        "mappings": [
            {"base": 0x1000, "size": 0x1000, "port": "a"},
            {"base": 0x2000, "size": 0x1000, "port": "b"},
        ]}, dom)
    sink_a = Sink(plat, "a", {}, dom)
    sink_b = Sink(plat, "b", {}, dom)
    bind(router.ports["a"], sink_a.ports["in"])
    bind(router.ports["b"], sink_b.ports["in"])
    return router, sink_a, sink_b, dom


def test_decode_pure():
    maps = [(0x1000, 0x1000, "a"), (0x2000, 0x1000, "b")]
    assert decode(maps, 0x1000) == "a"
    assert decode(maps, 0x1FFF) == "a"
    assert decode(maps, 0x2000) == "b"
    assert decode(maps, 0x3000) is None


def test_route_adds_latency_and_forwards():
    router, sink_a, sink_b, _ = make_router(latency=1)
    req = Request().setup(0x1004, 4, False)
    router.handle(req)
    assert req.latency == 1
    assert sink_a.seen == [0x1004] and not sink_b.seen


def test_route_miss_is_bus_error_without_occupancy():
    router, *_ = make_router(latency=1, bandwidth=8)
    req = Request().setup(0x9000, 4, False)
    router.handle(req)
    assert req.status == "error"
    assert router.busy_until == -1


def test_bandwidth_queuing_back_to_back():
    router, *_ = make_router(latency=0, bandwidth=8)
    first = Request().setup(0x1000, 32, False, data=bytearray(32))
    second = Request().setup(0x1000, 32, False, data=bytearray(32))
    router.handle(first)
    router.handle(second)
    assert first.latency == 0
    assert second.latency == 4      # queued behind 32B/8Bpc occupancy


def test_occupancy_conservation_over_interval():
    router, sink_a, _, dom = make_router(latency=0, bandwidth=8)
    total = 0
    for i in range(50):
        req = Request().setup(0x1000, 64, False, data=bytearray(64))
        router.handle(req)
        total += 64
    # all 50 requests are issued at cycle 0; the last one completes no
    # earlier than bytes/bandwidth cycles later
    assert router.busy_until >= total // 8 - 1


def test_mapping_overlap_rejected():
    eng = TimeEngine()
    dom = ClockDomain("clk", 400_000_000)
    eng.add_domain(dom)
    with pytest.raises(ConfigError):
        Router(FakePlatform({"clk": dom}), "rt", {
            "latency": 1,
            "mappings": [
                {"base": 0x1000, "size": 0x1000, "port": "a"},
                {"base": 0x1800, "size": 0x1000, "port": "b"},
            ]}, dom)


def make_crossing(src_freq, dst_freq, crossing_latency=0):
    eng = TimeEngine()
    src = ClockDomain("src", src_freq)
    dst = ClockDomain("dst", dst_freq)
    eng.add_domain(src)
    eng.add_domain(dst)
    plat = FakePlatform({"src": src, "dst": dst})
    xing = ClockCrossing(plat, "xing", {
        "source_domain": "src", "crossing_latency": crossing_latency}, dst)
    sink = Sink(plat, "sink", {}, dst)
    bind(xing.ports["out"], sink.ports["in"])
    xing.finalize()
    return xing, src, dst, sink


def test_crossing_aligns_to_next_destination_edge():
    # 200 MHz -> 400 MHz: a request leaving at 50001 ps starts at dst cycle 21
    xing, src, dst, _ = make_crossing(200_000_000, 400_000_000)
    # place source at cycle 10 (50000 ps) and give the request 1 ps... the
    # source clock only has integral edges, so model it via accumulated
    # latency instead: at source cycle 9, latency 1 -> leaves at 50000 ps
    src.cycle = 10
    req = Request().setup(0x0, 4, False)
    xing.handle(req)
    # left at exactly 50000 ps; that is dst cycle 20 (exact edge)
    assert dst.cycle_at_or_after(50000) == 20

    # oracle for the 50001 ps case from the conversion helpers themselves
    assert dst.cycle_at_or_after(50001) == 21
    assert dst.time_of_cycle(21) == 52500


def test_crossing_roundtrip_latency_in_source_cycles():
    class Delay(Component):
        kind = "test-delay"

        def build(self):
            self.add_slave("in", self.handle)

        def handle(self, req):
            req.latency += 7    # destination-side cycles

    eng = TimeEngine()
    src = ClockDomain("src", 100_000_000)    # 10000 ps
    dst = ClockDomain("dst", 400_000_000)    # 2500 ps
    eng.add_domain(src)
    eng.add_domain(dst)
    plat = FakePlatform({"src": src, "dst": dst})
    xing = ClockCrossing(plat, "xing", {"source_domain": "src",
                                        "crossing_latency": 0}, dst)
    delay = Delay(plat, "d", {}, dst)
    bind(xing.ports["out"], delay.ports["in"])
    xing.finalize()

    req = Request().setup(0x0, 4, False)
    xing.handle(req)
    # 7 fast cycles = 17500 ps -> ceiling to source edges = 2 source cycles
    assert req.latency == 2
    # round-trip property: converting the final latency back to time covers
    # the destination-side completion
    assert src.time_of_cycle(src.cycle + req.latency) >= dst.time_of_cycle(7)
