"""Architecture description: parsing, validation and overrides.

A platform is one flat JSON file with three sections:

    clock_domains:  name -> {frequency_hz, event_window}
    components:     path -> {kind, domain, params}
    bindings:       [[master_path.port, slave_path.port], ...]

Router mappings may name a {"target": path} instead of explicit
base/size/port; the range is then taken from the target component's
base/size params and the binding is made automatically.  Every parameter
can be overridden from the command line as `path.key=value`, which is what
makes design-space sweeps possible without editing files.
"""

import copy
import json

from .component import COMPONENT_KINDS, REQUIRED
from .engine import PS_PER_SEC
from .errors import ConfigError


class ArchDescriptor:
    def __init__(self, name, clock_domains, components, bindings):
        self.name = name
        self.clock_domains = clock_domains
        self.components = components
        self.bindings = bindings

    def to_dict(self):
        return {
            "name": self.name,
            "clock_domains": copy.deepcopy(self.clock_domains),
            "components": copy.deepcopy(self.components),
            "bindings": [list(b) for b in self.bindings],
        }

    def __eq__(self, other):
        return isinstance(other, ArchDescriptor) and self.to_dict() == other.to_dict()


def _as_int(value, where):
    if isinstance(value, bool):
        raise ConfigError("%s: expected integer, got boolean" % where)
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 0)
        except ValueError:
            pass
    raise ConfigError("%s: expected integer, got %r" % (where, value))


def _fill_params(kind, path, given):
    """Merge declared defaults into `given`, checking names and types."""
    cls = COMPONENT_KINDS[kind]
    merged = {}
    given = dict(given or {})
    for name, (ptype, default) in cls.PARAMS.items():
        if name in given:
            value = given.pop(name)
            if ptype is int:
                value = _as_int(value, "%s.%s" % (path, name))
            elif ptype is dict and isinstance(value, dict) and isinstance(default, dict):
                base = copy.deepcopy(default)
                base.update(value)
                value = base
            if ptype is not None and not isinstance(value, ptype):
                raise ConfigError("components.%s.params.%s: expected %s, got %r" % (
                    path, name, ptype.__name__, value))
            merged[name] = value
        elif default is REQUIRED:
            raise ConfigError("components.%s: missing required param '%s'" % (path, name))
        else:
            merged[name] = copy.deepcopy(default)
    if given:
        raise ConfigError("components.%s: unknown params %s for kind '%s'" % (
            path, sorted(given), kind))
    return merged


def _check_router_overlaps(path, params, components):
    resolved = []
    for i, m in enumerate(params.get("mappings", [])):
        where = "components.%s.params.mappings[%d]" % (path, i)
        if "target" in m:
            target = m["target"]
            entry = components.get(target)
            if entry is None:
                raise ConfigError("%s: unknown target '%s'" % (where, target))
            tp = entry["params"]
            if "base" not in tp or "size" not in tp:
                raise ConfigError("%s: target '%s' has no base/size" % (where, target))
            resolved.append((tp["base"], tp["size"], target))
        else:
            try:
                base = _as_int(m["base"], where)
                size = _as_int(m["size"], where)
                name = m["port"]
            except KeyError as e:
                raise ConfigError("%s: mapping needs target or base/size/port (missing %s)"
                                  % (where, e)) from None
            resolved.append((base, size, name))
    for i in range(len(resolved)):
        for j in range(i + 1, len(resolved)):
            b1, s1, n1 = resolved[i]
            b2, s2, n2 = resolved[j]
            if b1 < b2 + s2 and b2 < b1 + s1:
                raise ConfigError(
                    "components.%s: address ranges of '%s' [0x%x,0x%x) and "
                    "'%s' [0x%x,0x%x) overlap" % (path, n1, b1, b1 + s1, n2, b2, b2 + s2))


def parse(json_text):
    """Parse and validate a platform description; returns an ArchDescriptor."""
    try:
        raw = json.loads(json_text)
    except json.JSONDecodeError as e:
        raise ConfigError("invalid JSON: %s" % e) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    known = {"name", "clock_domains", "components", "bindings"}
    extra = set(raw) - known
    if extra:
        raise ConfigError("unknown top-level keys: %s" % sorted(extra))

    domains = {}
    for name, entry in (raw.get("clock_domains") or {}).items():
        where = "clock_domains.%s" % name
        if not isinstance(entry, dict):
            raise ConfigError("%s: expected object" % where)
        freq = _as_int(entry.get("frequency_hz", 0), where + ".frequency_hz")
        if freq <= 0:
            raise ConfigError("%s: frequency_hz must be positive" % where)
        if PS_PER_SEC % freq != 0:
            raise ConfigError(
                "%s: frequency %d Hz has a non-integral period of %.6f ps" % (
                    where, freq, PS_PER_SEC / freq))
        window = _as_int(entry.get("event_window", 64), where + ".event_window")
        if window <= 0:
            raise ConfigError("%s: event_window must be positive" % where)
        unknown = set(entry) - {"frequency_hz", "event_window"}
        if unknown:
            raise ConfigError("%s: unknown keys %s" % (where, sorted(unknown)))
        domains[name] = {"frequency_hz": freq, "event_window": window}
    if not domains:
        raise ConfigError("clock_domains: at least one domain is required")

    components = {}
    for path, entry in (raw.get("components") or {}).items():
        where = "components.%s" % path
        if not isinstance(entry, dict):
            raise ConfigError("%s: expected object" % where)
        kind = entry.get("kind")
        if kind not in COMPONENT_KINDS:
            raise ConfigError("%s: unknown component kind %r (known: %s)" % (
                where, kind, ", ".join(sorted(COMPONENT_KINDS))))
        domain = entry.get("domain")
        if domain not in domains:
            raise ConfigError("%s: unknown clock domain %r" % (where, domain))
        unknown = set(entry) - {"kind", "domain", "params"}
        if unknown:
            raise ConfigError("%s: unknown keys %s" % (where, sorted(unknown)))
        params = _fill_params(kind, path, entry.get("params"))
        components[path] = {"kind": kind, "domain": domain, "params": params}

    for path, entry in components.items():
        if entry["kind"] == "router":
            _check_router_overlaps(path, entry["params"], components)

    bindings = []
    for i, pair in enumerate(raw.get("bindings") or []):
        where = "bindings[%d]" % i
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ConfigError("%s: expected [master, slave]" % where)
        for end in pair:
            comp = end.rsplit(".", 1)[0]
            if comp not in components:
                raise ConfigError("%s: '%s' names unknown component '%s'" % (
                    where, end, comp))
        bindings.append((pair[0], pair[1]))

    return ArchDescriptor(raw.get("name", ""), domains, components, bindings)


def serialize(descriptor):
    """Canonical JSON text for a descriptor; parse() inverts it exactly."""
    return json.dumps(descriptor.to_dict(), indent=2) + "\n"


def parse_override_value(text):
    """Parse the value side of an override: JSON first, 0x hex, else string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        return int(text, 0)
    except ValueError:
        return text


def apply_overrides(descriptor, overrides):
    """Apply `path.key=value` strings, returning a new descriptor.

    The path may dive into nested parameter groups of composite components
    (e.g. `cluster/tcdm.banks=64` updates the `tcdm` group of the `cluster`
    component).  Values must match the type they replace.
    """
    desc = ArchDescriptor(descriptor.name,
                          copy.deepcopy(descriptor.clock_domains),
                          copy.deepcopy(descriptor.components),
                          list(descriptor.bindings))
    for text in overrides:
        if "=" not in text:
            raise ConfigError("override '%s': expected path.key=value" % text)
        lhs, _, rhs = text.partition("=")
        if "." not in lhs:
            raise ConfigError("override '%s': expected path.key=value" % text)
        target_path, _, key = lhs.rpartition(".")
        value = parse_override_value(rhs)

        entry = None
        remainder = None
        if target_path in desc.components:
            entry = desc.components[target_path]
            remainder = []
        else:
            for path in sorted(desc.components, key=len, reverse=True):
                if target_path.startswith(path + "/"):
                    entry = desc.components[path]
                    remainder = target_path[len(path) + 1:].split("/")
                    break
        if entry is None:
            raise ConfigError("override '%s': no component matches '%s'" % (
                text, target_path))

        params = entry["params"]
        for part in remainder:
            nxt = params.get(part)
            if not isinstance(nxt, dict):
                raise ConfigError("override '%s': '%s' is not a parameter group" % (
                    text, part))
            params = nxt
        if key not in params:
            raise ConfigError("override '%s': unknown parameter '%s'" % (text, key))
        old = params[key]
        if isinstance(old, bool) != isinstance(value, bool) or (
                not isinstance(value, type(old)) and not (
                    isinstance(old, int) and isinstance(value, int))):
            raise ConfigError("override '%s': type mismatch (have %s, got %s)" % (
                text, type(old).__name__, type(value).__name__))
        params[key] = value
    return desc
