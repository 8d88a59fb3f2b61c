"""Exception types shared across the simulator."""


class ConfigError(Exception):
    """Bad architecture description, override, binary or command line input."""


class StructuralError(Exception):
    """Simulator-internal misuse (double enqueue, unbound port, ...).

    Raising this means the platform model has a bug, not the simulated
    program or its configuration.
    """
