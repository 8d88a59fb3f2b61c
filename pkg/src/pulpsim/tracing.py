"""System traces, VCD waveforms and the end-of-run statistics report.

Trace lines are `<ps>ps <domain>:<cycle> [<component path>] <message>`,
emitted only for paths matching an enabled glob; components cache the
enabled flag per path so disabled tracing costs nothing.  The VCD dump
covers activity-level signals (per-core pc and active flag, DMA and
accelerator busy flags) with a 1 ps timescale.
"""

import fnmatch
import re
import sys


class TraceSink:
    def __init__(self, patterns, stream=None):
        self.regexes = [re.compile(fnmatch.translate(p)) for p in patterns]
        self.stream = stream if stream is not None else sys.stderr
        self._cache = {}
        self.lines = 0

    def enabled(self, path):
        hit = self._cache.get(path)
        if hit is None:
            hit = any(r.match(path) for r in self.regexes)
            self._cache[path] = hit
        return hit

    def emit(self, time_ps, domain, path, message):
        self.stream.write("%dps %s:%d [%s] %s\n" % (
            time_ps, domain.name, domain.cycle, path, message))
        self.lines += 1

    def flush(self):
        self.stream.flush()


class VcdWriter:
    """Minimal VCD dump: header, initial values, timestamped changes."""

    def __init__(self, stream):
        self.stream = stream
        self.signals = []           # (name, width, sid)
        self.values = {}            # sid -> last value
        self._sid = {}              # signal name -> sid
        self.time = -1
        self.started = False

    def register(self, name, width):
        sid = self._make_id(len(self.signals))
        self.signals.append((name, width, sid))
        self._sid[name] = (sid, width)
        self.values[sid] = 0
        return sid

    @staticmethod
    def _make_id(n):
        chars = ""
        n += 1
        while n:
            n, r = divmod(n - 1, 94)
            chars = chr(33 + r) + chars
        return chars

    def start(self):
        w = self.stream.write
        w("$timescale 1ps $end\n")
        w("$scope module platform $end\n")
        for name, width, sid in self.signals:
            safe = name.replace("/", ".")
            if width > 1:
                safe = "%s[%d:0]" % (safe, width - 1)
            w("$var wire %d %s %s $end\n" % (width, sid, safe))
        w("$upscope $end\n$enddefinitions $end\n")
        w("#0\n$dumpvars\n")
        for name, width, sid in self.signals:
            self._write_value(sid, self.values[sid], width)
        w("$end\n")
        self.time = 0
        self.started = True

    def change(self, name, value, time_ps):
        sid, width = self._sid[name]
        if not self.started:
            self.values[sid] = value    # folded into the $dumpvars block
            return
        if self.values[sid] == value:
            return
        if time_ps > self.time:
            self.stream.write("#%d\n" % time_ps)
            self.time = time_ps
        self.values[sid] = value
        self._write_value(sid, value, width)

    def _write_value(self, sid, value, width):
        if width == 1:
            self.stream.write("%d%s\n" % (value & 1, sid))
        else:
            self.stream.write("b%s %s\n" % (bin(value)[2:], sid))

    def close(self, time_ps):
        if time_ps > self.time:
            self.stream.write("#%d\n" % time_ps)
        self.stream.flush()

    # -- platform-facing conveniences ---------------------------------

    def core_pc(self, core, pc):
        self.change(core.path + "/pc", pc, core.platform.engine.now_ps)

    def core_activity(self, core, active):
        self.change(core.path + "/active", int(active), core.platform.engine.now_ps)

    def flag(self, path, value):
        self.change(path + "/busy", int(value), self._platform.engine.now_ps)

    def attach(self, platform):
        """Register the standard signal set and hook into the platform."""
        self._platform = platform
        for comp in sorted(platform.components.values(), key=lambda c: c.path):
            if comp.kind == "riscv-core":
                self.register(comp.path + "/pc", 32)
                self.register(comp.path + "/active", 1)
            elif comp.kind in ("cluster-dma", "micro-dma", "conv-accel"):
                self.register(comp.path + "/busy", 1)
        platform.vcd = self


_SECTIONS = {
    "riscv-core": "cores",
    "banked-memory": "memories",
    "router": "routers",
    "icache": "caches",
    "cluster-dma": "dma",
    "micro-dma": "udma",
    "conv-accel": "accelerators",
    "event-unit": "event_units",
    "hyperram": "external_memory",
    "clock-crossing": "crossings",
}


def stats_report(platform, exit_status=None):
    """Collect every exported counter into one JSON-friendly document."""
    doc = {
        "exit_status": exit_status,
        "global_time_ps": platform.engine.now_ps,
        "wall_clock_s": platform.wall_seconds,
        "domains": {},
        "engine": platform.engine.stats(),
        "console": platform.console.decode("latin-1"),
    }
    for name, dom in platform.domains.items():
        doc["domains"][name] = {
            "frequency_hz": dom.frequency_hz,
            "cycles": dom.cycle,
            "events_executed": dom.events_executed,
        }
    total_instr = 0
    for comp in platform.components.values():
        counters = comp.counters()
        if not counters:
            continue
        section = _SECTIONS.get(comp.kind, "other")
        doc.setdefault(section, {})[comp.path] = counters
        if comp.kind == "riscv-core":
            total_instr += counters["instr_retired"]
    doc["instructions_total"] = total_instr
    wall = platform.wall_seconds
    doc["simulated_mips"] = (total_instr / wall / 1e6) if wall > 0 else 0.0
    return doc


# fields that vary run-to-run and are excluded from determinism comparisons
VOLATILE_STATS = ("wall_clock_s", "simulated_mips")


def stable_stats(doc):
    """Copy of a stats document without host-timing fields."""
    out = dict(doc)
    for key in VOLATILE_STATS:
        out.pop(key, None)
    return out
