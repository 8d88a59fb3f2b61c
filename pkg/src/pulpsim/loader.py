"""Guest binary loading: ELF32 executables and text memory images.

ELF segments (PT_LOAD) are poked straight into whichever mapped memory
covers them.  The memory-image format is one word per line:

    # comment
    @entry 1C000000
    @1C000000 00500093

Words are stored little-endian.  Loading sets every core's boot pc to the
entry point; programs dispatch on the hart id CSR.
"""

import struct

from .errors import ConfigError

ELF_MAGIC = b"\x7fELF"
EM_RISCV = 243
PT_LOAD = 1


def load_binary(platform, path):
    """Load an ELF or memory image file; returns the entry pc."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] == ELF_MAGIC:
        entry = _load_elf(platform, blob, path)
    else:
        entry = _load_image(platform, blob, path)
    platform.set_entry(entry)
    return entry


def _load_elf(platform, blob, name):
    if len(blob) < 52:
        raise ConfigError("%s: truncated ELF header" % name)
    ei_class, ei_data = blob[4], blob[5]
    if ei_class != 1:
        raise ConfigError("%s: not a 32-bit ELF (class %d)" % (name, ei_class))
    if ei_data != 1:
        raise ConfigError("%s: not little-endian" % name)
    (e_type, e_machine, _ver, e_entry, e_phoff, _shoff, _flags, _ehsize,
     e_phentsize, e_phnum) = struct.unpack_from("<HHIIIIIHHH", blob, 16)
    if e_machine != EM_RISCV:
        raise ConfigError("%s: machine type %d is not RISC-V (%d)" % (
            name, e_machine, EM_RISCV))
    for i in range(e_phnum):
        off = e_phoff + i * e_phentsize
        p_type, p_offset, p_vaddr, p_paddr, p_filesz, p_memsz, _pflags, _align = \
            struct.unpack_from("<IIIIIIII", blob, off)
        if p_type != PT_LOAD or p_memsz == 0:
            continue
        dest = p_paddr if p_paddr else p_vaddr
        data = bytearray(blob[p_offset:p_offset + p_filesz])
        data.extend(b"\x00" * (p_memsz - p_filesz))
        if platform.backing_for(dest, len(data)) is None:
            raise ConfigError(
                "%s: segment %d at 0x%08x+0x%x lies outside every mapped memory"
                % (name, i, dest, len(data)))
        platform.poke(dest, bytes(data))
    return e_entry


def _load_image(platform, blob, name):
    try:
        text = blob.decode("ascii")
    except UnicodeDecodeError:
        raise ConfigError("%s: neither ELF nor ASCII memory image" % name) from None
    entry = None
    first = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0].lower() == "@entry":
            if len(parts) != 2:
                raise ConfigError("%s:%d: malformed @entry line" % (name, lineno))
            entry = int(parts[1], 16)
            continue
        if len(parts) != 2 or not parts[0].startswith("@"):
            raise ConfigError("%s:%d: expected '@<hexaddr> <hexword>'" % (name, lineno))
        try:
            addr = int(parts[0][1:], 16)
            word = int(parts[1], 16)
        except ValueError:
            raise ConfigError("%s:%d: bad hex value" % (name, lineno)) from None
        if platform.backing_for(addr, 4) is None:
            raise ConfigError("%s:%d: address 0x%08x lies outside every mapped memory"
                              % (name, lineno, addr))
        platform.poke(addr, word.to_bytes(4, "little"))
        if first is None:
            first = addr
    if entry is None:
        if first is None:
            raise ConfigError("%s: empty memory image" % name)
        entry = first
    return entry
