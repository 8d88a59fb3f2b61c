"""Platform elaboration: turn a descriptor into a runnable component graph."""

import time

from .component import COMPONENT_KINDS, bind
from .engine import TimeEngine, ClockDomain
from .errors import ConfigError, StructuralError


class Platform:
    """A built platform: engine, clock domains and component instances.

    Composite components (the cluster) add their children and internal
    bindings while being constructed, so after build() the component map is
    fully elaborated.  Call reset() once (directly or via run()) after
    attaching tracing.
    """

    def __init__(self, descriptor):
        self.descriptor = descriptor
        self.engine = TimeEngine()
        self.domains = {}
        self.components = {}
        self.bindings = []          # (master Port, slave Port), for the dump
        self.port_aliases = {}      # "path.port" -> Port, for composites
        self.backing_stores = []    # (base, size, component) for peek/poke
        self.trace_sink = None
        self.vcd = None
        self.console = bytearray()
        self.diagnostics = []
        self.wall_seconds = 0.0
        self.was_reset = False

        for name, entry in descriptor.clock_domains.items():
            dom = ClockDomain(name, entry["frequency_hz"], entry["event_window"])
            self.engine.add_domain(dom)
            self.domains[name] = dom

        pending_auto = []
        for path, entry in descriptor.components.items():
            params = entry["params"]
            if entry["kind"] == "router":
                # resolve {"target": path} mappings against the descriptor and
                # queue the implied binding to the target's input port
                params = dict(params)
                resolved = []
                for m in params["mappings"]:
                    if "target" in m:
                        tp = descriptor.components[m["target"]]["params"]
                        port = m["target"].replace("/", "_")
                        resolved.append({"base": tp["base"], "size": tp["size"],
                                         "port": port})
                        pending_auto.append(("%s.%s" % (path, port),
                                             m["target"] + ".in"))
                    else:
                        resolved.append(m)
                params["mappings"] = resolved
            self.add_component(path, entry["kind"], params, entry["domain"])
        for master, slave in descriptor.bindings:
            self.bind_paths(master, slave)
        for master, slave in pending_auto:
            self.bind_paths(master, slave)

        self._check_bound()
        for comp in list(self.components.values()):
            comp.finalize()

    # -- construction helpers (also used by composite components) ---------

    def add_component(self, path, kind, params, domain_name):
        if path in self.components:
            raise ConfigError("duplicate component path '%s'" % path)
        if domain_name not in self.domains:
            raise ConfigError("components.%s: unknown clock domain %r" % (path, domain_name))
        cls = COMPONENT_KINDS[kind]
        comp = cls(self, path, params, self.domains[domain_name])
        self.components[path] = comp
        return comp

    def resolve_port(self, spec):
        path, sep, port = spec.rpartition(".")
        if not sep:
            raise ConfigError("'%s' is not of the form path.port" % spec)
        if spec in self.port_aliases:
            return self.port_aliases[spec]
        comp = self.components.get(path)
        if comp is None:
            raise ConfigError("binding endpoint '%s': no component '%s'" % (spec, path))
        if port not in comp.ports:
            raise ConfigError("binding endpoint '%s': %s has no port '%s'" % (
                spec, path, port))
        return comp.ports[port]

    def bind_paths(self, master_spec, slave_spec):
        m = self.resolve_port(master_spec)
        s = self.resolve_port(slave_spec)
        bind(m, s)
        self.bindings.append((m, s))

    def alias_port(self, spec, port):
        self.port_aliases[spec] = port

    def register_backing(self, base, size, comp):
        self.backing_stores.append((base, size, comp))

    def _check_bound(self):
        for comp in self.components.values():
            for port in comp.ports.values():
                if port.direction == "master" and port.binding is None:
                    raise ConfigError("unbound master port %s" % port.path)

    # -- lookups -----------------------------------------------------------

    def domain(self, name):
        try:
            return self.domains[name]
        except KeyError:
            raise ConfigError("unknown clock domain '%s'" % name) from None

    def lookup(self, path):
        try:
            return self.components[path]
        except KeyError:
            raise ConfigError("unknown component '%s'" % path) from None

    def cores(self):
        return [c for c in self.components.values() if c.kind == "riscv-core"]

    # -- untimed memory access (loader, tests) -----------------------------

    def backing_for(self, addr, size):
        for base, bsize, comp in self.backing_stores:
            if base <= addr and addr + size <= base + bsize:
                return comp
        return None

    def poke(self, addr, data):
        comp = self.backing_for(addr, len(data))
        if comp is None:
            raise ConfigError("poke at 0x%08x+%d hits no mapped memory" % (addr, len(data)))
        comp.poke(addr, data)

    def peek(self, addr, size):
        comp = self.backing_for(addr, size)
        if comp is None:
            raise ConfigError("peek at 0x%08x+%d hits no mapped memory" % (addr, size))
        return comp.peek(addr, size)

    def set_entry(self, pc):
        for core in self.cores():
            core.boot_pc = pc

    # -- tracing hooks ------------------------------------------------------

    def trace_enabled(self, path):
        return self.trace_sink is not None and self.trace_sink.enabled(path)

    def trace(self, path, domain, message):
        self.trace_sink.emit(self.engine.now_ps, domain, path, message)

    def putc(self, byte):
        self.console.append(byte)

    def diagnostic(self, message):
        self.diagnostics.append(message)

    # -- run ---------------------------------------------------------------

    def reset(self):
        for comp in self.components.values():
            comp.reset()
        self.console.clear()
        self.was_reset = True

    def run(self, max_cycles=None):
        """Execute until exit/idle/cap; returns the engine status."""
        if not self.was_reset:
            self.reset()
        if self.vcd is not None:
            self.vcd.start()
        t0 = time.perf_counter()
        status = self.engine.run(max_cycles)
        self.wall_seconds = time.perf_counter() - t0
        if self.trace_sink is not None:
            self.trace_sink.flush()
        if self.vcd is not None:
            self.vcd.close(self.engine.now_ps)
        return status

    # -- elaborated dump -----------------------------------------------------

    def dump(self):
        lines = []
        for path in sorted(self.components):
            comp = self.components[path]
            lines.append("%s kind=%s domain=%s params=%s" % (
                path, comp.kind, comp.domain.name, comp.dump_params()))
        for m, s in sorted(self.bindings, key=lambda b: (b[0].path, b[1].path)):
            lines.append("%s -> %s" % (m.path, s.path))
        return "\n".join(lines) + "\n"


def build(descriptor):
    """Elaborate a validated descriptor into a Platform."""
    return Platform(descriptor)
