"""Event-based RV32IM core with a three-stage timing model.

Each instruction executes as one event: fetch through the instruction port
(cache latency added), table decode, semantics callback, then the next
step event is scheduled after

    1 + instruction latency + fetch latency + memory latency
      + hazard stalls + taken-branch penalty

cycles.  Loads publish their result one write-back cycle after completion;
a consumer arriving earlier stalls on the register scoreboard.  Blocking
loads from synchronization registers put the core to sleep and are
re-executed on wake-up, which is when their value is actually determined.
"""

from .component import Component, register, STATUS_OK, Request
from .engine import Event
from .errors import ConfigError
from .isa import IsaTable, sext

M32 = 0xFFFFFFFF

CSR_CYCLE = 0xC00
CSR_INSTRET = 0xC02
CSR_MHARTID = 0xF14
CSR_MTVEC = 0x305
CSR_MEPC = 0x341
CSR_MCAUSE = 0x342
CSR_MTVAL = 0x343
CSR_EVENT_BASE = 0x7C0

CAUSE_IACCESS = 1
CAUSE_ILLEGAL = 2
CAUSE_BREAK = 3
CAUSE_LOAD_FAULT = 5
CAUSE_STORE_FAULT = 7
CAUSE_ECALL = 11

COUNTER_NAMES = (
    "total_cycles", "active_cycles", "instr_retired", "load_stalls",
    "icache_misses", "tcdm_contentions", "branches_taken", "loads",
    "stores", "barrier_wait_cycles",
)

_ILLEGAL = object()


def _s32(v):
    return v - 0x100000000 if v & 0x80000000 else v


# -- instruction semantics -------------------------------------------------
# Each callback mutates the core: registers, next pc, memory side effects.
# The step loop owns timing; callbacks only flag taken branches and traps.

def _sem_lui(c, i):
    c.wr(i.rd, i.imm & M32)

def _sem_auipc(c, i):
    c.wr(i.rd, (c.pc + i.imm) & M32)

def _sem_jal(c, i):
    c.wr(i.rd, (c.pc + 4) & M32)
    c.npc = (c.pc + i.imm) & M32
    c.taken = True

def _sem_jalr(c, i):
    target = (c.regs[i.rs1] + i.imm) & M32 & ~1
    c.wr(i.rd, (c.pc + 4) & M32)
    c.npc = target
    c.taken = True

def _branch(cond):
    def sem(c, i):
        if cond(c.regs[i.rs1], c.regs[i.rs2]):
            c.npc = (c.pc + i.imm) & M32
            c.taken = True
    return sem

def _sem_load(size, signed):
    def sem(c, i):
        v = c.mem_read((c.regs[i.rs1] + i.imm) & M32, size)
        if v is None:
            return
        if signed:
            v = sext(v, size * 8) & M32
        c.wr(i.rd, v)
    return sem

def _sem_store(size):
    def sem(c, i):
        c.mem_write((c.regs[i.rs1] + i.imm) & M32, size,
                    c.regs[i.rs2] & ((1 << (size * 8)) - 1))
    return sem

def _op_imm(fn):
    def sem(c, i):
        c.wr(i.rd, fn(c.regs[i.rs1], i.imm) & M32)
    return sem

def _op_reg(fn):
    def sem(c, i):
        c.wr(i.rd, fn(c.regs[i.rs1], c.regs[i.rs2]) & M32)
    return sem

def _div(a, b):
    if b == 0:
        return -1
    sa, sb = _s32(a), _s32(b)
    if sa == -0x80000000 and sb == -1:
        return sa
    q = abs(sa) // abs(sb)
    return -q if (sa < 0) != (sb < 0) else q

def _rem(a, b):
    if b == 0:
        return a
    sa, sb = _s32(a), _s32(b)
    if sa == -0x80000000 and sb == -1:
        return 0
    r = abs(sa) % abs(sb)
    return -r if sa < 0 else r

def _sem_ecall(c, i):
    c.trap_info = (CAUSE_ECALL, 0)

def _sem_ebreak(c, i):
    c.trap_info = (CAUSE_BREAK, c.pc)

def _sem_mret(c, i):
    c.npc = c.csr_mepc
    c.taken = True

def _sem_fence(c, i):
    pass

def _sem_fence_i(c, i):
    cache = c.ports["fetch"].binding
    owner = cache.owner if cache is not None else None
    if owner is not None and hasattr(owner, "flush"):
        owner.flush()

def _sem_csr(write_always, op):
    def sem(c, i):
        old = c.csr_read(i.csr)
        if old is None:
            c.trap_info = (CAUSE_ILLEGAL, i.word)
            return
        src = c.regs[i.rs1] if i.entry.fmt == "CSR" else i.imm
        if write_always or (i.entry.fmt == "CSR" and i.rs1 != 0) or (
                i.entry.fmt == "CSRI" and i.imm != 0):
            if not c.csr_write(i.csr, op(old, src) & M32):
                c.trap_info = (CAUSE_ILLEGAL, i.word)
                return
        c.wr(i.rd, old)
    return sem

def _sem_mac(c, i):
    c.wr(i.rd, (c.regs[i.rd] + c.regs[i.rs1] * c.regs[i.rs2]) & M32)

def _sem_lwpost(c, i):
    addr = c.regs[i.rs1]
    v = c.mem_read(addr, 4)
    if v is None:
        return
    if i.rs1 != 0 and i.rs1 != i.rd:
        c.regs[i.rs1] = (addr + i.imm) & M32
    c.wr(i.rd, v)


SEMANTICS = {
    "lui": _sem_lui, "auipc": _sem_auipc, "jal": _sem_jal, "jalr": _sem_jalr,
    "beq": _branch(lambda a, b: a == b),
    "bne": _branch(lambda a, b: a != b),
    "blt": _branch(lambda a, b: _s32(a) < _s32(b)),
    "bge": _branch(lambda a, b: _s32(a) >= _s32(b)),
    "bltu": _branch(lambda a, b: a < b),
    "bgeu": _branch(lambda a, b: a >= b),
    "lb": _sem_load(1, True), "lh": _sem_load(2, True), "lw": _sem_load(4, False),
    "lbu": _sem_load(1, False), "lhu": _sem_load(2, False),
    "sb": _sem_store(1), "sh": _sem_store(2), "sw": _sem_store(4),
    "addi": _op_imm(lambda a, b: a + b),
    "slti": _op_imm(lambda a, b: int(_s32(a) < b)),
    "sltiu": _op_imm(lambda a, b: int(a < (b & M32))),
    "xori": _op_imm(lambda a, b: a ^ (b & M32)),
    "ori": _op_imm(lambda a, b: a | (b & M32)),
    "andi": _op_imm(lambda a, b: a & (b & M32)),
    "slli": _op_imm(lambda a, b: a << b),
    "srli": _op_imm(lambda a, b: a >> b),
    "srai": _op_imm(lambda a, b: _s32(a) >> b),
    "add": _op_reg(lambda a, b: a + b),
    "sub": _op_reg(lambda a, b: a - b),
    "sll": _op_reg(lambda a, b: a << (b & 31)),
    "slt": _op_reg(lambda a, b: int(_s32(a) < _s32(b))),
    "sltu": _op_reg(lambda a, b: int(a < b)),
    "xor": _op_reg(lambda a, b: a ^ b),
    "srl": _op_reg(lambda a, b: a >> (b & 31)),
    "sra": _op_reg(lambda a, b: _s32(a) >> (b & 31)),
    "or": _op_reg(lambda a, b: a | b),
    "and": _op_reg(lambda a, b: a & b),
    "mul": _op_reg(lambda a, b: a * b),
    "mulh": _op_reg(lambda a, b: (_s32(a) * _s32(b)) >> 32),
    "mulhsu": _op_reg(lambda a, b: (_s32(a) * b) >> 32),
    "mulhu": _op_reg(lambda a, b: (a * b) >> 32),
    "div": _op_reg(_div), "divu": _op_reg(lambda a, b: a // b if b else M32),
    "rem": _op_reg(_rem), "remu": _op_reg(lambda a, b: a % b if b else a),
    "fence": _sem_fence, "fence_i": _sem_fence_i,
    "ecall": _sem_ecall, "ebreak": _sem_ebreak, "mret": _sem_mret,
    "csrrw": _sem_csr(True, lambda old, src: src),
    "csrrs": _sem_csr(False, lambda old, src: old | src),
    "csrrc": _sem_csr(False, lambda old, src: old & ~src),
    "csrrwi": _sem_csr(True, lambda old, src: src),
    "csrrsi": _sem_csr(False, lambda old, src: old | src),
    "csrrci": _sem_csr(False, lambda old, src: old & ~src),
    "p.mac": _sem_mac, "p.lwpost": _sem_lwpost,
}


@register
class RiscvCore(Component):
    kind = "riscv-core"
    PARAMS = {
        "hart_id": (int, 0),
        "boot_addr": (int, 0),
        "isa": (list, ["rv32im"]),
        "branch_penalty": (int, 2),
        "trap_vector": (int, 0),    # 0: halt on unhandled trap
    }

    def build(self):
        self.add_master("fetch")
        self.add_master("data")
        self.hart_id = self.params["hart_id"]
        self.boot_pc = self.params["boot_addr"]
        self.branch_penalty = self.params["branch_penalty"]
        self.isa = IsaTable.load(self.params["isa"])
        self.semantics = dict(SEMANTICS)
        self._dcache = {}
        self.step_event = Event(self.path, self._step)
        self._fetch_req = Request()
        self._data_req = Request()
        self.regs = [0] * 32
        self.pc = 0
        self.mode = "halted"
        self._zero_state()

    def _zero_state(self):
        self.scoreboard = [0] * 32
        self.npc = 0
        self.mem_lat = 0
        self.taken = False
        self.sleep_flag = False
        self.mem_contended = False
        self.trap_info = None
        self.sleep_from = 0
        self.csr_mtvec = self.params["trap_vector"]
        self.csr_mepc = 0
        self.csr_mcause = 0
        self.csr_mtval = 0
        for name in COUNTER_NAMES:
            setattr(self, name, 0)

    def finalize(self):
        self._fetch_handler = self.ports["fetch"].binding.handler
        self._data_handler = self.ports["data"].binding.handler
        self._tr_insn = self.platform.trace_enabled(self.path + "/insn")

    def reset(self):
        self.regs = [0] * 32
        self.pc = self.boot_pc & M32
        self.mode = "running"
        self._zero_state()
        self._tr_insn = self.platform.trace_enabled(self.path + "/insn")
        if self.step_event.enqueued:
            self.domain.cancel(self.step_event)
        self.domain.enqueue(self.step_event, 0)
        if self.platform.vcd is not None:
            self.platform.vcd.core_activity(self, True)
            self.platform.vcd.core_pc(self, self.pc)

    # -- extension mechanism -------------------------------------------

    def register_extension(self, table_doc, semantics=None):
        """Add a table fragment (dict or file/name) plus its callbacks."""
        if semantics:
            self.semantics.update(semantics)
        if isinstance(table_doc, dict):
            self.isa.extend(table_doc, table_doc.get("name", "extension"))
        else:
            self.isa = IsaTable.load(self.params["isa"] + [table_doc])
        self._dcache.clear()

    # -- architectural helpers ------------------------------------------

    def wr(self, rd, value):
        if rd:
            self.regs[rd] = value

    def read_counter(self, name):
        if name not in COUNTER_NAMES:
            raise ConfigError("unknown counter '%s'" % name)
        return getattr(self, name)

    def counters(self):
        return {name: getattr(self, name) for name in COUNTER_NAMES}

    def csr_read(self, csr):
        if csr == CSR_CYCLE:
            return self.total_cycles & M32
        if csr == CSR_INSTRET:
            return self.instr_retired & M32
        if csr == CSR_MHARTID:
            return self.hart_id
        if csr == CSR_MTVEC:
            return self.csr_mtvec
        if csr == CSR_MEPC:
            return self.csr_mepc
        if csr == CSR_MCAUSE:
            return self.csr_mcause
        if csr == CSR_MTVAL:
            return self.csr_mtval
        if CSR_EVENT_BASE <= csr < CSR_EVENT_BASE + len(COUNTER_NAMES):
            return getattr(self, COUNTER_NAMES[csr - CSR_EVENT_BASE]) & M32
        return None

    def csr_write(self, csr, value):
        if csr == CSR_MTVEC:
            self.csr_mtvec = value & ~3
        elif csr == CSR_MEPC:
            self.csr_mepc = value & ~3
        elif csr == CSR_MCAUSE:
            self.csr_mcause = value
        elif csr == CSR_MTVAL:
            self.csr_mtval = value
        else:
            return False    # counters and hart id are read-only
        return True

    # -- memory access (within the current step) -------------------------

    def mem_read(self, addr, size):
        req = self._data_req
        req.addr = addr
        req.size = size
        req.is_write = False
        req.value = 0
        req.data = None
        req.initiator = self
        req.latency = 0
        req.status = STATUS_OK
        req.contended = False
        req.sleep = False
        self._data_handler(req)
        if req.status != STATUS_OK:
            self.trap_info = (CAUSE_LOAD_FAULT, addr)
            return None
        self.mem_lat += req.latency
        if req.contended:
            self.mem_contended = True
        if req.sleep:
            self.sleep_flag = True
            return None
        self.loads += 1
        return req.value

    def mem_write(self, addr, size, value):
        req = self._data_req
        req.addr = addr
        req.size = size
        req.is_write = True
        req.value = value
        req.data = None
        req.initiator = self
        req.latency = 0
        req.status = STATUS_OK
        req.contended = False
        req.sleep = False
        self._data_handler(req)
        if req.status != STATUS_OK:
            self.trap_info = (CAUSE_STORE_FAULT, addr)
            return False
        self.mem_lat += req.latency
        if req.contended:
            self.mem_contended = True
        self.stores += 1
        return True

    # -- the per-instruction event ----------------------------------------

    def _step(self, ev):
        dom = self.domain
        C = dom.cycle
        pc = self.pc

        freq = self._fetch_req
        freq.addr = pc
        freq.size = 4
        freq.is_write = False
        freq.value = 0
        freq.data = None
        freq.initiator = self
        freq.latency = 0
        freq.status = STATUS_OK
        freq.contended = False
        freq.sleep = False
        self._fetch_handler(freq)
        if freq.status != STATUS_OK:
            self._take_trap(CAUSE_IACCESS, pc, 1)
            return
        fetch_lat = freq.latency
        if freq.cache_miss:
            self.icache_misses += 1
        word = freq.value

        ins = self._dcache.get(word)
        if ins is None:
            ins = self._decode_slow(word)
        if ins is _ILLEGAL:
            self._take_trap(CAUSE_ILLEGAL, word, 1 + fetch_lat)
            return

        stall = 0
        sb = self.scoreboard
        r = ins.rs1
        if r:
            d = sb[r] - C
            if d > stall:
                stall = d
        r = ins.rs2
        if r:
            d = sb[r] - C
            if d > stall:
                stall = d
        if stall:
            self.load_stalls += stall

        self.npc = (pc + 4) & M32
        self.mem_lat = 0
        self.taken = False
        self.sleep_flag = False
        self.mem_contended = False
        self.trap_info = None
        ins.handler(self, ins)

        if self._tr_insn:
            self.platform.trace(self.path + "/insn", dom, ins.text())

        if self.trap_info is not None:
            cause, tval = self.trap_info
            self._take_trap(cause, tval, 1 + fetch_lat + stall + self.mem_lat)
            return

        if self.sleep_flag:
            # blocking read: keep pc, do not retire; re-executed on wake
            attempt = 1 + fetch_lat + stall + self.mem_lat
            self.total_cycles += attempt
            self.active_cycles += attempt
            self.mode = "sleeping"
            self.sleep_from = C + attempt
            if self.platform.vcd is not None:
                self.platform.vcd.core_activity(self, False)
            return

        charge = 1 + ins.entry.latency + fetch_lat + stall + self.mem_lat
        if self.taken:
            charge += self.branch_penalty
            if ins.entry.klass == "branch":
                self.branches_taken += 1
        if self.mem_contended:
            self.tcdm_contentions += 1
        wb = ins.entry.writeback_latency
        if wb and ins.rd:
            sb[ins.rd] = C + charge + wb

        self.pc = self.npc
        self.instr_retired += 1
        self.total_cycles += charge
        self.active_cycles += charge
        if self.platform.vcd is not None:
            self.platform.vcd.core_pc(self, self.pc)
        if self.mode == "running":
            dom.enqueue(ev, charge)

    def _decode_slow(self, word):
        ins = self.isa.decode(word)
        if ins is None:
            self._dcache[word] = _ILLEGAL
            return _ILLEGAL
        handler = self.semantics.get(ins.entry.semantics)
        if handler is None:
            raise ConfigError("%s: no semantics for '%s'" % (self.path, ins.mnemonic))
        ins.handler = handler
        self._dcache[word] = ins
        return ins

    def _take_trap(self, cause, tval, charge):
        self.total_cycles += charge
        self.active_cycles += charge
        if self.csr_mtvec:
            self.csr_mepc = self.pc
            self.csr_mcause = cause
            self.csr_mtval = tval & M32
            self.pc = self.csr_mtvec
            if self.mode == "running":
                self.domain.enqueue(self.step_event, charge)
        else:
            self.mode = "halted"
            self.platform.diagnostic(
                "%s: unhandled trap cause=%d tval=0x%08x at pc=0x%08x; core halted"
                % (self.path, cause, tval & M32, self.pc))
            if self.platform.vcd is not None:
                self.platform.vcd.core_activity(self, False)

    # -- sleep / wake (event unit, DMA wait) --------------------------------

    def sleep(self):
        """Force sleep from outside an instruction (cancels pending step)."""
        if self.mode != "running":
            return
        self.mode = "sleeping"
        if self.step_event.enqueued:
            self.domain.cancel(self.step_event)
        self.sleep_from = self.domain.cycle
        if self.platform.vcd is not None:
            self.platform.vcd.core_activity(self, False)

    def wake(self):
        if self.mode != "sleeping":
            return
        self.mode = "running"
        at = self.domain.enqueue_synced(self.step_event, 1)
        slept = at - self.sleep_from
        if slept > 0:
            self.total_cycles += slept
            self.barrier_wait_cycles += slept
        if self.platform.vcd is not None:
            self.platform.vcd.core_activity(self, True)
