"""Independent RV32IM reference interpreter for ISS equivalence checks.

Deliberately written from the instruction encodings (opcode/funct fields)
rather than any shared table, so a wrong encoding or wrong semantics on
either side shows up as a state divergence.  Supports the demo extension
opcodes as well.  No timing, no caches: just architectural state.
"""

MASK32 = 0xFFFFFFFF


def s32(v):
    return v - 0x100000000 if v & 0x80000000 else v


def sext(v, bits):
    m = 1 << (bits - 1)
    return (v ^ m) - m


class Halt(Exception):
    pass


class RefCore:
    def __init__(self, mem_base, mem_size):
        self.regs = [0] * 32
        self.pc = 0
        self.base = mem_base
        self.mem = bytearray(mem_size)
        self.retired = 0

    # -- memory ----------------------------------------------------------

    def load(self, addr, size):
        off = addr - self.base
        assert 0 <= off <= len(self.mem) - size, hex(addr)
        return int.from_bytes(self.mem[off:off + size], "little")

    def store(self, addr, size, value):
        off = addr - self.base
        assert 0 <= off <= len(self.mem) - size, hex(addr)
        self.mem[off:off + size] = (value & ((1 << (8 * size)) - 1)).to_bytes(
            size, "little")

    def wr(self, rd, value):
        if rd:
            self.regs[rd] = value & MASK32

    # -- execution ---------------------------------------------------------

    def run(self, max_steps):
        for _ in range(max_steps):
            self.step()
        raise AssertionError("reference interpreter did not halt")

    def step(self):
        w = self.load(self.pc, 4)
        opcode = w & 0x7F
        rd = (w >> 7) & 31
        rs1 = (w >> 15) & 31
        rs2 = (w >> 20) & 31
        f3 = (w >> 12) & 7
        f7 = w >> 25
        x = self.regs
        npc = self.pc + 4

        if opcode == 0x37:                      # lui
            self.wr(rd, w & 0xFFFFF000)
        elif opcode == 0x17:                    # auipc
            self.wr(rd, self.pc + (w & 0xFFFFF000))
        elif opcode == 0x6F:                    # jal
            imm = sext((((w >> 31) & 1) << 20) | (((w >> 12) & 0xFF) << 12) |
                       (((w >> 20) & 1) << 11) | (((w >> 21) & 0x3FF) << 1), 21)
            self.wr(rd, npc)
            npc = (self.pc + imm) & MASK32
        elif opcode == 0x67:                    # jalr
            imm = sext(w >> 20, 12)
            t = (x[rs1] + imm) & MASK32 & ~1
            self.wr(rd, npc)
            npc = t
        elif opcode == 0x63:                    # branches
            imm = sext((((w >> 31) & 1) << 12) | (((w >> 7) & 1) << 11) |
                       (((w >> 25) & 0x3F) << 5) | (((w >> 8) & 0xF) << 1), 13)
            a, b = x[rs1], x[rs2]
            taken = {
                0: a == b, 1: a != b,
                4: s32(a) < s32(b), 5: s32(a) >= s32(b),
                6: a < b, 7: a >= b,
            }[f3]
            if taken:
                npc = (self.pc + imm) & MASK32
        elif opcode == 0x03:                    # loads
            addr = (x[rs1] + sext(w >> 20, 12)) & MASK32
            if f3 == 0:
                self.wr(rd, sext(self.load(addr, 1), 8) & MASK32)
            elif f3 == 1:
                self.wr(rd, sext(self.load(addr, 2), 16) & MASK32)
            elif f3 == 2:
                self.wr(rd, self.load(addr, 4))
            elif f3 == 4:
                self.wr(rd, self.load(addr, 1))
            elif f3 == 5:
                self.wr(rd, self.load(addr, 2))
            else:
                raise Halt("bad load f3")
        elif opcode == 0x23:                    # stores
            imm = sext(((w >> 25) << 5) | ((w >> 7) & 31), 12)
            addr = (x[rs1] + imm) & MASK32
            size = {0: 1, 1: 2, 2: 4}[f3]
            self.store(addr, size, x[rs2])
        elif opcode == 0x13:                    # op-imm
            imm = sext(w >> 20, 12)
            sh = rs2
            res = {
                0: x[rs1] + imm,
                2: int(s32(x[rs1]) < imm),
                3: int(x[rs1] < (imm & MASK32)),
                4: x[rs1] ^ (imm & MASK32),
                6: x[rs1] | (imm & MASK32),
                7: x[rs1] & (imm & MASK32),
                1: x[rs1] << sh,
                5: (x[rs1] >> sh) if not (w >> 30) & 1 else (s32(x[rs1]) >> sh),
            }[f3]
            self.wr(rd, res)
        elif opcode == 0x33 and f7 == 1:        # M extension
            a, b = x[rs1], x[rs2]
            if f3 == 0:
                res = a * b
            elif f3 == 1:
                res = (s32(a) * s32(b)) >> 32
            elif f3 == 2:
                res = (s32(a) * b) >> 32
            elif f3 == 3:
                res = (a * b) >> 32
            elif f3 == 4:       # div
                if b == 0:
                    res = -1
                elif s32(a) == -(1 << 31) and s32(b) == -1:
                    res = a
                else:
                    q = abs(s32(a)) // abs(s32(b))
                    res = -q if (s32(a) < 0) != (s32(b) < 0) else q
            elif f3 == 5:       # divu
                res = a // b if b else MASK32
            elif f3 == 6:       # rem
                if b == 0:
                    res = a
                elif s32(a) == -(1 << 31) and s32(b) == -1:
                    res = 0
                else:
                    r = abs(s32(a)) % abs(s32(b))
                    res = -r if s32(a) < 0 else r
            else:               # remu
                res = a % b if b else a
            self.wr(rd, res)
        elif opcode == 0x33:                    # op
            a, b = x[rs1], x[rs2]
            sub_sra = (w >> 30) & 1
            res = {
                0: a - b if sub_sra else a + b,
                1: a << (b & 31),
                2: int(s32(a) < s32(b)),
                3: int(a < b),
                4: a ^ b,
                5: (s32(a) >> (b & 31)) if sub_sra else (a >> (b & 31)),
                6: a | b,
                7: a & b,
            }[f3]
            self.wr(rd, res)
        elif opcode == 0x0B:                    # demo extension
            if f3 == 0 and f7 == 1:             # mac
                self.wr(rd, x[rd] + x[rs1] * x[rs2])
            elif f3 == 2:                       # post-increment load
                addr = x[rs1]
                v = self.load(addr, 4)
                if rs1 != 0 and rs1 != rd:
                    x[rs1] = (addr + sext(w >> 20, 12)) & MASK32
                self.wr(rd, v)
            else:
                raise Halt("bad extension op")
        elif w == 0x00000073:                   # ecall: harness halt marker
            raise Halt("ecall")
        elif opcode == 0x0F:                    # fences are no-ops
            pass
        else:
            raise Halt("illegal 0x%08x" % w)

        self.pc = npc & MASK32
        self.retired += 1
