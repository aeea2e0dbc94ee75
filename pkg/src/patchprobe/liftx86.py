"""Lift objdump-style x86-64 AT&T listings into the mini-IR.

Supports the straight-line integer subset that compiler output for small
C functions exercises: moves, ALU ops, compare-and-jump, push/pop, lea,
call and ret.  Flags are not modeled; a cmp/test immediately answered by a
conditional jump is fused into a single relational branch.

Register mapping (fixed, see dump_tables): the SysV argument registers
%rdi %rsi %rdx %rcx %r8 %r9 map to r0..r5, then %rax->r6, %rbx->r7,
%r10->r8, %r11->r9, %r12->r10, %r13->r11.  %r14 and %r15 are rejected:
the mini registers r12..r15 are reserved as lifter temporaries so fused
loads can never collide with program registers.  %rbp and %rsp map to fp
and sp.  Call results and function returns flow through r6 (rax), so
lifted functions carry ret_reg="r6".
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .mir import (
    Alu,
    Br,
    Call,
    Imm,
    Jmp,
    Load,
    MemRef,
    MirFunction,
    MirInstr,
    Mov,
    Reg,
    Ret,
    Store,
)


class LiftError(ValueError):
    """Unsupported or unfusable input; names the mnemonic and address."""


class ListingParseError(ValueError):
    """Malformed disassembly text, with the offending line number."""


@dataclass(frozen=True)
class AsmLine:
    addr: int
    mnemonic: str
    operands: str


@dataclass(frozen=True)
class AsmListing:
    func_name: str
    lines: tuple[AsmLine, ...]


_HEADER_RE = re.compile(r"^([0-9a-fA-F]+)\s+<([^>]+)>:\s*$")
_LINE_RE = re.compile(r"^\s*([0-9a-fA-F]+):\s*(.*)$")
_BYTES_RE = re.compile(r"^(?:[0-9a-fA-F]{2}[ \t]+)*[0-9a-fA-F]{2}[ \t]*$")


def parse_listing(source: str) -> list[AsmListing]:
    """Parse objdump-style text into one listing per function header.

    Byte columns are ignored; a line must look like
    ``<hex addr>:\\t<bytes>\\t<mnemonic>\\t<operands>`` or the same without
    the byte column.
    """
    listings: list[AsmListing] = []
    name: str | None = None
    lines: list[AsmLine] = []
    last_addr = -1

    def flush() -> None:
        nonlocal name, lines
        if name is not None:
            listings.append(AsmListing(name, tuple(lines)))
        name, lines = None, []

    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0].rstrip()
        if not text.strip():
            continue
        header = _HEADER_RE.match(text.strip())
        if header:
            flush()
            name = header.group(2).split("@")[0]
            last_addr = -1
            continue
        m = _LINE_RE.match(text)
        if not m:
            raise ListingParseError(f"line {lineno}: expected '<addr>: ...', got {text.strip()!r}")
        if name is None:
            raise ListingParseError(f"line {lineno}: instruction before any function header")
        try:
            addr = int(m.group(1), 16)
        except ValueError:
            raise ListingParseError(f"line {lineno}: malformed address {m.group(1)!r}") from None
        if addr <= last_addr:
            raise ListingParseError(f"line {lineno}: addresses must strictly increase")
        last_addr = addr
        rest = m.group(2)
        fields = [f for f in rest.split("\t") if f.strip()]
        if fields and _BYTES_RE.match(fields[0].strip()) and len(fields) > 1:
            fields = fields[1:]
        if not fields:
            continue  # bytes-only continuation line
        toks = fields[0].split(None, 1) if len(fields) == 1 else [fields[0].strip(), " ".join(fields[1:])]
        mnemonic = toks[0].strip()
        operands = toks[1].strip() if len(toks) > 1 else ""
        lines.append(AsmLine(addr, mnemonic, operands))
    flush()
    return listings


# ---------------------------------------------------------------------------
# operand parsing

REG_MAP: dict[str, tuple[str, int]] = {}
_GP_ORDER = [
    ("di", "r0"), ("si", "r1"), ("dx", "r2"), ("cx", "r3"),
]
for _x86, _mini in _GP_ORDER:
    REG_MAP[f"%r{_x86}"] = (_mini, 64)
    REG_MAP[f"%e{_x86}"] = (_mini, 32)
REG_MAP["%r8"] = ("r4", 64)
REG_MAP["%r8d"] = ("r4", 32)
REG_MAP["%r9"] = ("r5", 64)
REG_MAP["%r9d"] = ("r5", 32)
REG_MAP["%rax"] = ("r6", 64)
REG_MAP["%eax"] = ("r6", 32)
REG_MAP["%rbx"] = ("r7", 64)
REG_MAP["%ebx"] = ("r7", 32)
REG_MAP["%r10"] = ("r8", 64)
REG_MAP["%r10d"] = ("r8", 32)
REG_MAP["%r11"] = ("r9", 64)
REG_MAP["%r11d"] = ("r9", 32)
REG_MAP["%r12"] = ("r10", 64)
REG_MAP["%r12d"] = ("r10", 32)
REG_MAP["%r13"] = ("r11", 64)
REG_MAP["%r13d"] = ("r11", 32)
REG_MAP["%rbp"] = ("fp", 64)
REG_MAP["%rsp"] = ("sp", 64)

_UNSUPPORTED_REGS = ("%r14", "%r14d", "%r15", "%r15d")

# conditional jumps: mini relation plus whether the branch targets must be
# swapped (ja/jae are expressed through the complementary relation because
# the branch grammar has no unsigned greater-than forms)
JCC_TABLE: dict[str, tuple[str, bool]] = {
    "je": ("eq", False),
    "jne": ("ne", False),
    "jl": ("slt", False),
    "jle": ("sle", False),
    "jg": ("sgt", False),
    "jge": ("sge", False),
    "jb": ("ult", False),
    "jbe": ("ule", False),
    "ja": ("ule", True),
    "jae": ("ult", True),
}

_TEMP_REG = "r12"  # drawn from the reserved pool r12..r15


@dataclass(frozen=True)
class _MemOperand:
    base: str
    index: str | None
    scale: int
    disp: int


_IMM_RE = re.compile(r"^\$(-?)(0x[0-9a-fA-F]+|\d+)$")
_MEM_OP_RE = re.compile(
    r"^(-?(?:0x[0-9a-fA-F]+|\d+))?\((%\w+)(?:,(%\w+),(\d+))?\)$"
)
_TARGET_RE = re.compile(r"^([0-9a-fA-F]+)(?:\s+<[^>]*>)?$")
_CALL_RE = re.compile(r"^(?:[0-9a-fA-F]+\s+)?<([^>+]+)(?:\+[^>]*)?>$|^([A-Za-z_][\w.]*)(?:@\w+)?$")


def _split_ops(text: str) -> list[str]:
    parts: list[str] = []
    depth = 0
    cur: list[str] = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur).strip())
    return [p for p in parts if p]


def _parse_x86_int(neg: str, body: str) -> int:
    v = int(body, 0)
    return -v if neg else v


class _Lifter:
    def __init__(self, listing: AsmListing, call_arity: Mapping[str, int] | None) -> None:
        self.listing = listing
        self.call_arity = dict(call_arity or {})
        self.out: list[MirInstr] = []

    def error(self, addr: int, mnemonic: str, msg: str) -> LiftError:
        return LiftError(f"{self.listing.func_name}+{addr:#x}: {mnemonic}: {msg}")

    # -- operand classification ------------------------------------------

    def reg(self, tok: str, addr: int, mn: str) -> Reg:
        if tok in _UNSUPPORTED_REGS:
            raise self.error(addr, mn, f"register {tok} is reserved for lifter temporaries")
        if tok not in REG_MAP:
            raise self.error(addr, mn, f"unsupported register {tok!r}")
        name, width = REG_MAP[tok]
        return Reg(name, width)

    def mem(self, tok: str, addr: int, mn: str) -> _MemOperand:
        m = _MEM_OP_RE.match(tok)
        if not m:
            raise self.error(addr, mn, f"unsupported memory operand {tok!r}")
        disp = int(m.group(1), 0) if m.group(1) else 0
        base = m.group(2)
        index = m.group(3)
        scale = int(m.group(4)) if m.group(4) else 1
        return _MemOperand(base, index, scale, disp)

    def is_mem(self, tok: str) -> bool:
        return bool(_MEM_OP_RE.match(tok))

    def is_imm(self, tok: str) -> bool:
        return bool(_IMM_RE.match(tok))

    def imm(self, tok: str) -> int:
        m = _IMM_RE.match(tok)
        assert m
        return _parse_x86_int(m.group(1), m.group(2))

    def memref(self, op: _MemOperand, addr: int, mn: str) -> MemRef:
        if op.index is not None:
            raise self.error(addr, mn, "indexed addressing is only supported in lea")
        base = self.reg(op.base, addr, mn)
        return MemRef(Reg(base.name, 64), op.disp)

    # -- width ------------------------------------------------------------

    def width_of(self, mnemonic: str, ops: list[str], addr: int) -> int:
        if mnemonic.endswith(("l",)) and mnemonic not in ("call",):
            return 32
        if mnemonic.endswith("q"):
            return 64
        for tok in ops:
            if tok in REG_MAP:
                return REG_MAP[tok][1]
        return 64

    # -- main loop ---------------------------------------------------------

    def lift(self) -> MirFunction:
        lines = self.listing.lines
        if not lines:
            raise LiftError(f"{self.listing.func_name}: empty listing")
        i = 0
        n = len(lines)
        while i < n:
            line = lines[i]
            mn = line.mnemonic
            if mn in ("nop", "endbr64", "nopw", "nopl"):
                i += 1
                continue
            if mn in ("cmp", "cmpl", "cmpq", "test", "testl", "testq"):
                i = self.lift_compare(i)
                continue
            if mn in JCC_TABLE:
                raise self.error(line.addr, mn, "conditional jump without a preceding cmp/test")
            self.lift_simple(line, i)
            i += 1
        fn = MirFunction(self.listing.func_name, lines[0].addr, tuple(self.out), ret_reg="r6")
        fn.validate(strict_addresses=False)
        return fn

    # -- compare fusion ----------------------------------------------------

    def lift_compare(self, i: int) -> int:
        lines = self.listing.lines
        line = lines[i]
        mn = line.mnemonic
        ops = _split_ops(line.operands)
        if len(ops) != 2:
            raise self.error(line.addr, mn, "expected two operands")
        width = self.width_of(mn, ops, line.addr)
        is_test = mn.startswith("test")

        if is_test:
            if ops[0] != ops[1] or not ops[0].startswith("%"):
                raise self.error(line.addr, mn, "only the self form test r,r is supported")
            lhs = self.reg(ops[0], line.addr, mn)
            lhs = Reg(lhs.name, width)
            rhs: Imm | Reg = Imm(0)
        else:
            src, dst = ops  # AT&T order: cmp src, dst compares dst against src
            if self.is_mem(dst):
                memop = self.mem(dst, line.addr, mn)
                lhs = Reg(_TEMP_REG, width)
                self.out.append(Load(line.addr, lhs, self.memref(memop, line.addr, mn)))
            elif dst.startswith("%"):
                lhs = self.reg(dst, line.addr, mn)
                lhs = Reg(lhs.name, width)
            else:
                raise self.error(line.addr, mn, f"bad destination operand {dst!r}")
            if self.is_imm(src):
                rhs = Imm(self.imm(src))
            elif self.is_mem(src):
                memop = self.mem(src, line.addr, mn)
                tmp = Reg("r13", width)
                self.out.append(Load(line.addr, tmp, self.memref(memop, line.addr, mn)))
                rhs = tmp
            else:
                r = self.reg(src, line.addr, mn)
                rhs = Reg(r.name, width)

        # scan forward for the consuming jcc, tolerating nop and moves to
        # registers unrelated to the comparison operands
        involved = {lhs.name}
        if isinstance(rhs, Reg):
            involved.add(rhs.name)
        deferred: list[int] = []
        j = i + 1
        while j < len(lines):
            nxt = lines[j]
            if nxt.mnemonic in ("nop", "endbr64"):
                j += 1
                continue
            if nxt.mnemonic in JCC_TABLE:
                break
            if nxt.mnemonic.startswith("mov"):
                dst_tok = _split_ops(nxt.operands)[-1]
                if dst_tok in REG_MAP and REG_MAP[dst_tok][0] not in involved:
                    deferred.append(j)
                    j += 1
                    continue
            raise self.error(line.addr, mn, f"not followed by a conditional jump (found {nxt.mnemonic})")
        else:
            raise self.error(line.addr, mn, "not followed by a conditional jump")

        jcc_line = lines[j]
        if is_test and jcc_line.mnemonic not in ("je", "jne"):
            raise self.error(line.addr, mn, f"test fuses only with je/jne, got {jcc_line.mnemonic}")
        rel, swap = JCC_TABLE[jcc_line.mnemonic]
        tm = _TARGET_RE.match(jcc_line.operands.strip())
        if not tm:
            raise self.error(jcc_line.addr, jcc_line.mnemonic, f"bad jump target {jcc_line.operands!r}")
        taken = int(tm.group(1), 16)
        if j + 1 >= len(lines):
            raise self.error(jcc_line.addr, jcc_line.mnemonic, "no fall-through instruction")
        fall = lines[j + 1].addr
        if swap:
            taken, fall = fall, taken

        for d in deferred:
            self.lift_simple(lines[d], d)
        # the fused branch keeps the compare's address for line-map joins
        self.out.append(Br(line.addr, rel, lhs, rhs, taken, fall))
        return j + 1

    # -- everything else ----------------------------------------------------

    def lift_simple(self, line: AsmLine, i: int) -> None:
        mn = line.mnemonic
        addr = line.addr
        ops = _split_ops(line.operands)

        if mn == "ret" or mn == "retq":
            self.out.append(Ret(addr))
            return
        if mn in ("jmp", "jmpq"):
            tm = _TARGET_RE.match(line.operands.strip())
            if not tm:
                raise self.error(addr, mn, f"bad jump target {line.operands!r}")
            self.out.append(Jmp(addr, int(tm.group(1), 16)))
            return
        if mn in ("call", "callq"):
            cm = _CALL_RE.match(line.operands.strip())
            if not cm:
                raise self.error(addr, mn, f"unsupported call target {line.operands!r}")
            name = (cm.group(1) or cm.group(2)).split("@")[0]
            nargs = self.call_arity.get(name, 6)
            self.out.append(Call(addr, name, nargs))
            return
        if mn == "push" or mn == "pushq":
            src = self.reg(ops[0], addr, mn)
            self.out.append(Alu(addr, "sub", Reg("sp"), Reg("sp"), Imm(8)))
            self.out.append(Store(addr, MemRef(Reg("sp"), 0), Reg(src.name, 64)))
            return
        if mn == "pop" or mn == "popq":
            dst = self.reg(ops[0], addr, mn)
            self.out.append(Load(addr, Reg(dst.name, 64), MemRef(Reg("sp"), 0)))
            self.out.append(Alu(addr, "add", Reg("sp"), Reg("sp"), Imm(8)))
            return
        if mn == "leave":
            self.out.append(Mov(addr, Reg("sp"), Reg("fp")))
            self.out.append(Load(addr, Reg("fp"), MemRef(Reg("sp"), 0)))
            self.out.append(Alu(addr, "add", Reg("sp"), Reg("sp"), Imm(8)))
            return
        if mn == "lea" or mn == "leaq":
            self.lift_lea(line, ops)
            return
        if mn.startswith(("mov", "movl", "movq")) or mn in ("movzbl", "movslq"):
            self.lift_mov(line, ops, mn)
            return

        alu_map = {
            "add": "add", "sub": "sub", "imul": "mul", "and": "and",
            "or": "or", "xor": "xor", "shl": "shl", "sal": "shl",
            "shr": "shr", "sar": "sar",
        }
        base_mn = mn[:-1] if mn.endswith(("l", "q")) and mn[:-1] in alu_map else mn
        if base_mn in alu_map:
            self.lift_alu(line, ops, mn, alu_map[base_mn])
            return

        raise self.error(addr, mn, "unsupported mnemonic")

    def lift_lea(self, line: AsmLine, ops: list[str]) -> None:
        mn, addr = line.mnemonic, line.addr
        if len(ops) != 2:
            raise self.error(addr, mn, "lea takes two operands")
        memop = self.mem(ops[0], addr, mn)
        dst = self.reg(ops[1], addr, mn)
        dst64 = Reg(dst.name, 64)
        base = self.reg(memop.base, addr, mn)
        if memop.index is None:
            self.out.append(Alu(addr, "add", dst64, Reg(base.name, 64), Imm(memop.disp)))
            return
        index = self.reg(memop.index, addr, mn)
        acc = dst64
        if dst.name in (base.name, index.name):
            acc = Reg(_TEMP_REG, 64)
        self.out.append(Mov(addr, acc, Reg(index.name, 64)))
        if memop.scale != 1:
            self.out.append(Alu(addr, "mul", acc, acc, Imm(memop.scale)))
        self.out.append(Alu(addr, "add", acc, acc, Reg(base.name, 64)))
        if memop.disp:
            self.out.append(Alu(addr, "add", acc, acc, Imm(memop.disp)))
        if acc.name != dst64.name:
            self.out.append(Mov(addr, dst64, acc))

    def lift_mov(self, line: AsmLine, ops: list[str], mn: str) -> None:
        addr = line.addr
        if len(ops) != 2:
            raise self.error(addr, mn, "mov takes two operands")
        src, dst = ops
        width = 64 if mn == "movslq" else (32 if mn == "movzbl" else self.width_of(mn, ops, addr))

        if self.is_mem(dst):
            memref = self.memref(self.mem(dst, addr, mn), addr, mn)
            if self.is_imm(src):
                tmp = Reg(_TEMP_REG, 32 if width == 32 else 64)
                self.out.append(Mov(addr, tmp, Imm(self.imm(src))))
                self.out.append(Store(addr, memref, tmp))
            else:
                r = self.reg(src, addr, mn)
                self.out.append(Store(addr, memref, Reg(r.name, width)))
            return
        dreg = self.reg(dst, addr, mn)
        dreg = Reg(dreg.name, width)
        if self.is_imm(src):
            self.out.append(Mov(addr, dreg, Imm(self.imm(src))))
        elif self.is_mem(src):
            self.out.append(Load(addr, dreg, self.memref(self.mem(src, addr, mn), addr, mn)))
        else:
            sreg = self.reg(src, addr, mn)
            # extension moves pass the value through width-leniently
            swidth = width if mn not in ("movzbl", "movslq") else sreg.width
            self.out.append(Mov(addr, dreg, Reg(sreg.name, swidth if mn in ("movzbl", "movslq") else width)))

    def lift_alu(self, line: AsmLine, ops: list[str], mn: str, op: str) -> None:
        addr = line.addr
        if len(ops) == 3 and op == "mul":
            # three-operand imul $imm, src, dst
            if not self.is_imm(ops[0]):
                raise self.error(addr, mn, "unsupported imul form")
            src = self.reg(ops[1], addr, mn)
            dst = self.reg(ops[2], addr, mn)
            self.out.append(Alu(addr, "mul", dst, Reg(src.name, dst.width), Imm(self.imm(ops[0]))))
            return
        if len(ops) != 2:
            raise self.error(addr, mn, "expected two operands")
        src, dst = ops
        width = self.width_of(mn, ops, addr)

        if self.is_mem(dst):
            memref = self.memref(self.mem(dst, addr, mn), addr, mn)
            tmp = Reg(_TEMP_REG, width)
            self.out.append(Load(addr, tmp, memref))
            b = Imm(self.imm(src)) if self.is_imm(src) else Reg(self.reg(src, addr, mn).name, width)
            self.out.append(Alu(addr, op, tmp, tmp, b))
            self.out.append(Store(addr, memref, tmp))
            return
        dreg = self.reg(dst, addr, mn)
        dreg = Reg(dreg.name, width)
        if op in ("shl", "shr", "sar") and not self.is_imm(src):
            raise self.error(addr, mn, "only immediate shift counts are supported")
        if self.is_imm(src):
            b: Imm | Reg = Imm(self.imm(src))
        elif self.is_mem(src):
            tmp = Reg(_TEMP_REG, width)
            self.out.append(Load(addr, tmp, self.memref(self.mem(src, addr, mn), addr, mn)))
            b = tmp
        else:
            b = Reg(self.reg(src, addr, mn).name, width)
        self.out.append(Alu(addr, op, dreg, dreg, b))


def lift(listing: AsmListing, call_arity: Mapping[str, int] | None = None) -> MirFunction:
    """Translate one parsed listing into a MirFunction.

    call_arity supplies the number of parameters per callee name (from the
    side tables); unknown callees default to 6.  Lifting is deterministic.
    """
    return _Lifter(listing, call_arity).lift()


def dump_tables() -> str:
    """Register map and conditional-jump table in documented fixed order."""
    out = ["register map (x86 -> mini, width):"]
    for x86 in sorted(REG_MAP):
        name, width = REG_MAP[x86]
        out.append(f"  {x86:<6} -> {name:<3} ({width})")
    out.append("unsupported registers: " + ", ".join(_UNSUPPORTED_REGS))
    out.append("lifter temporaries: r12, r13 (reserved pool r12..r15)")
    out.append("conditional jumps (jcc -> relation, swap targets):")
    for jcc in sorted(JCC_TABLE):
        rel, swap = JCC_TABLE[jcc]
        out.append(f"  {jcc:<4} -> {rel:<4} swap={'yes' if swap else 'no'}")
    return "\n".join(out) + "\n"
