"""Mini intermediate representation.

A small register machine with explicit addresses: the substrate the
symbolic emulator traverses.  Functions are parsed from a line-oriented
textual format and turned into control flow graphs.

Registers are r0..r15 plus sp and fp.  The 64-bit names r0..r15 have
32-bit forms r0d..r15d that read/write the low half (writes zero-extend,
mirroring x86-64 subregisters).  Calls take their arguments in r0..r5 and
return in r0; lifted code may override the return register (see liftx86).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

ALU_OPS = ("add", "sub", "mul", "and", "or", "xor", "shl", "shr", "sar")
BR_RELS = ("eq", "ne", "slt", "sle", "sgt", "sge", "ult", "ule")

GP_REGS = tuple(f"r{i}" for i in range(16))
ALL_REGS = GP_REGS + ("sp", "fp")

MAX_CALL_ARGS = 6


class MirError(ValueError):
    """Invalid IR construction (bad register, bad target, bad operand)."""


class MirParseError(MirError):
    """Syntax or consistency error in the textual format, with position."""

    def __init__(self, line: int, column: int, message: str) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Reg:
    """Register operand: base name plus access width (64, or 32 for the
    d-suffixed forms)."""

    name: str
    width: int = 64

    def __post_init__(self) -> None:
        if self.name not in ALL_REGS:
            raise MirError(f"unknown register {self.name!r}")
        if self.width not in (32, 64):
            raise MirError(f"bad register width {self.width}")
        if self.name in ("sp", "fp") and self.width != 64:
            raise MirError(f"{self.name} has no 32-bit form")

    def text(self) -> str:
        return self.name if self.width == 64 else f"{self.name}d"


@dataclass(frozen=True)
class Imm:
    value: int

    def text(self) -> str:
        return f"#{self.value}"


Src = Union[Reg, Imm]


@dataclass(frozen=True)
class MemRef:
    """[base + #offset]; base is a 64-bit register, offset a signed immediate."""

    base: Reg
    offset: int

    def text(self) -> str:
        return f"[{self.base.text()} + #{self.offset}]"


@dataclass(frozen=True)
class Mov:
    addr: int
    dst: Reg
    src: Src


@dataclass(frozen=True)
class Alu:
    addr: int
    op: str
    dst: Reg
    a: Reg
    b: Src

    def __post_init__(self) -> None:
        if self.op not in ALU_OPS:
            raise MirError(f"unknown alu op {self.op!r}")


@dataclass(frozen=True)
class Load:
    addr: int
    dst: Reg
    mem: MemRef


@dataclass(frozen=True)
class Store:
    addr: int
    mem: MemRef
    src: Src


@dataclass(frozen=True)
class Br:
    addr: int
    rel: str
    a: Reg
    b: Src
    taken: int
    fall: int

    def __post_init__(self) -> None:
        if self.rel not in BR_RELS:
            raise MirError(f"unknown branch relation {self.rel!r}")


@dataclass(frozen=True)
class Jmp:
    addr: int
    target: int


@dataclass(frozen=True)
class Call:
    addr: int
    name: str
    nargs: int

    def __post_init__(self) -> None:
        if not 0 <= self.nargs <= MAX_CALL_ARGS:
            raise MirError(f"call takes 0..{MAX_CALL_ARGS} arguments, got {self.nargs}")


@dataclass(frozen=True)
class Ret:
    addr: int


MirInstr = Union[Mov, Alu, Load, Store, Br, Jmp, Call, Ret]


@dataclass(frozen=True)
class MirFunction:
    name: str
    entry: int
    instrs: tuple[MirInstr, ...]
    # register through which call results and the function return flow;
    # lifted x86 uses r6 (rax), native mini-IR uses r0
    ret_reg: str = "r0"

    def validate(self, strict_addresses: bool = True) -> None:
        if not self.instrs:
            raise MirError(f"function {self.name} has no instructions")
        if self.entry != self.instrs[0].addr:
            raise MirError(
                f"function {self.name}: entry {self.entry:#x} is not the first "
                f"instruction address {self.instrs[0].addr:#x}"
            )
        addrs = [i.addr for i in self.instrs]
        if strict_addresses:
            for prev, cur in zip(addrs, addrs[1:]):
                if cur <= prev:
                    raise MirError(
                        f"function {self.name}: addresses not strictly "
                        f"increasing at {cur:#x}"
                    )
        else:
            for prev, cur in zip(addrs, addrs[1:]):
                if cur < prev:
                    raise MirError(
                        f"function {self.name}: addresses decrease at {cur:#x}"
                    )
        known = set(addrs)
        for ins in self.instrs:
            targets = ()
            if isinstance(ins, Br):
                targets = (ins.taken, ins.fall)
            elif isinstance(ins, Jmp):
                targets = (ins.target,)
            for t in targets:
                if t not in known:
                    raise MirError(
                        f"function {self.name}: dangling target {t:#x} "
                        f"at {ins.addr:#x}"
                    )


# ---------------------------------------------------------------------------
# parsing

_REG_RE = re.compile(r"^(r(\d+)|sp|fp)(d?)$")
_IMM_RE = re.compile(r"^#(-?)(0x[0-9a-fA-F]+|\d+)$")
_MEM_RE = re.compile(r"^\[\s*(\w+)\s*(?:([+-])\s*#(-?)(0x[0-9a-fA-F]+|\d+)\s*)?\]$")
_ADDR_RE = re.compile(r"^@(0x[0-9a-fA-F]+|\d+)$")
_FUNC_RE = re.compile(r"^func\s+([A-Za-z_][\w.@]*)\s+@(0x[0-9a-fA-F]+|\d+)\s*$")
_LINE_RE = re.compile(r"^(0x[0-9a-fA-F]+|\d+)\s*:\s*(.*)$")
_NAME_RE = re.compile(r"^[A-Za-z_][\w.@]*$")


def _parse_reg(tok: str, line: int, col: int) -> Reg:
    m = _REG_RE.match(tok)
    if not m:
        raise MirParseError(line, col, f"expected register, got {tok!r}")
    base = m.group(1) if m.group(2) is None else f"r{int(m.group(2))}"
    if m.group(2) is not None and not 0 <= int(m.group(2)) <= 15:
        raise MirParseError(line, col, f"register index out of range in {tok!r}")
    width = 32 if m.group(3) else 64
    try:
        return Reg(base, width)
    except MirError as exc:
        raise MirParseError(line, col, str(exc)) from None


def _parse_int(text: str, neg: str) -> int:
    value = int(text, 0)
    return -value if neg else value


def _parse_src(tok: str, line: int, col: int) -> Src:
    m = _IMM_RE.match(tok)
    if m:
        return Imm(_parse_int(m.group(2), m.group(1)))
    return _parse_reg(tok, line, col)


def _parse_mem(tok: str, line: int, col: int) -> MemRef:
    m = _MEM_RE.match(tok)
    if not m:
        raise MirParseError(line, col, f"expected [base + #off], got {tok!r}")
    base = _parse_reg(m.group(1), line, col)
    if base.width != 64:
        raise MirParseError(line, col, "memory base must be a 64-bit register")
    offset = 0
    if m.group(4) is not None:
        offset = _parse_int(m.group(4), m.group(3))
        if m.group(2) == "-":
            offset = -offset
    return MemRef(base, offset)


def _parse_target(tok: str, line: int, col: int) -> int:
    m = _ADDR_RE.match(tok)
    if not m:
        raise MirParseError(line, col, f"expected @address, got {tok!r}")
    return int(m.group(1), 0)


def _split_operands(text: str) -> list[str]:
    """Split on top-level commas; brackets group."""
    parts: list[str] = []
    depth = 0
    cur: list[str] = []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    last = "".join(cur).strip()
    if last:
        parts.append(last)
    return parts


def parse_mir(source: str) -> list[MirFunction]:
    """Parse the textual mini-IR format into functions.

    Rejects syntax errors with line/column, duplicate instruction
    addresses, and dangling branch targets.
    """
    functions: list[MirFunction] = []
    cur_name: str | None = None
    cur_entry = 0
    cur_instrs: list[MirInstr] = []
    seen_addrs: set[int] = set()

    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split(";", 1)[0].rstrip()
        if not text.strip():
            continue
        stripped = text.strip()
        col = len(text) - len(text.lstrip()) + 1
        if stripped.startswith("func"):
            if cur_name is not None:
                raise MirParseError(lineno, col, "nested func")
            m = _FUNC_RE.match(stripped)
            if not m:
                raise MirParseError(lineno, col, f"bad func header {stripped!r}")
            cur_name = m.group(1)
            cur_entry = int(m.group(2), 0)
            cur_instrs = []
            seen_addrs = set()
            continue
        if stripped == "endfunc":
            if cur_name is None:
                raise MirParseError(lineno, col, "endfunc outside a function")
            fn = MirFunction(cur_name, cur_entry, tuple(cur_instrs))
            try:
                fn.validate(strict_addresses=True)
            except MirError as exc:
                raise MirParseError(lineno, col, str(exc)) from None
            functions.append(fn)
            cur_name = None
            continue
        if cur_name is None:
            raise MirParseError(lineno, col, "instruction outside a function")
        m = _LINE_RE.match(stripped)
        if not m:
            raise MirParseError(lineno, col, f"expected '<addr>: <instruction>', got {stripped!r}")
        addr = int(m.group(1), 0)
        if addr in seen_addrs:
            raise MirParseError(lineno, col, f"duplicate address {addr:#x}")
        seen_addrs.add(addr)
        body = m.group(2).strip()
        instr = _parse_instruction(addr, body, lineno, col)
        cur_instrs.append(instr)
    if cur_name is not None:
        raise MirParseError(lineno + 1, 1, f"missing endfunc for {cur_name}")
    return functions


def _parse_instruction(addr: int, body: str, line: int, col: int) -> MirInstr:
    parts = body.split(None, 1)
    op = parts[0]
    rest = parts[1] if len(parts) > 1 else ""
    ops = _split_operands(rest)

    def need(n: int) -> None:
        if len(ops) != n:
            raise MirParseError(line, col, f"{op} takes {n} operands, got {len(ops)}")

    if op == "mov":
        need(2)
        return Mov(addr, _parse_reg(ops[0], line, col), _parse_src(ops[1], line, col))
    if op in ALU_OPS:
        need(3)
        return Alu(addr, op, _parse_reg(ops[0], line, col),
                   _parse_reg(ops[1], line, col), _parse_src(ops[2], line, col))
    if op == "load":
        need(2)
        return Load(addr, _parse_reg(ops[0], line, col), _parse_mem(ops[1], line, col))
    if op == "store":
        need(2)
        return Store(addr, _parse_mem(ops[0], line, col), _parse_src(ops[1], line, col))
    if op == "br":
        need(5)
        rel = ops[0]
        if rel not in BR_RELS:
            raise MirParseError(line, col, f"unknown branch relation {rel!r}")
        return Br(addr, rel, _parse_reg(ops[1], line, col), _parse_src(ops[2], line, col),
                  _parse_target(ops[3], line, col), _parse_target(ops[4], line, col))
    if op == "jmp":
        need(1)
        return Jmp(addr, _parse_target(ops[0], line, col))
    if op == "call":
        need(2)
        name = ops[0]
        if not _NAME_RE.match(name):
            raise MirParseError(line, col, f"bad call target {name!r}")
        try:
            nargs = int(ops[1], 0)
        except ValueError:
            raise MirParseError(line, col, f"bad argument count {ops[1]!r}") from None
        try:
            return Call(addr, name, nargs)
        except MirError as exc:
            raise MirParseError(line, col, str(exc)) from None
    if op == "ret":
        need(0)
        return Ret(addr)
    raise MirParseError(line, col, f"unknown opcode {op!r}")


# ---------------------------------------------------------------------------
# rendering

def render_instr(ins: MirInstr) -> str:
    if isinstance(ins, Mov):
        return f"mov {ins.dst.text()}, {ins.src.text()}"
    if isinstance(ins, Alu):
        return f"{ins.op} {ins.dst.text()}, {ins.a.text()}, {ins.b.text()}"
    if isinstance(ins, Load):
        return f"load {ins.dst.text()}, {ins.mem.text()}"
    if isinstance(ins, Store):
        return f"store {ins.mem.text()}, {ins.src.text()}"
    if isinstance(ins, Br):
        return (f"br {ins.rel}, {ins.a.text()}, {ins.b.text()}, "
                f"@{ins.taken:#x}, @{ins.fall:#x}")
    if isinstance(ins, Jmp):
        return f"jmp @{ins.target:#x}"
    if isinstance(ins, Call):
        return f"call {ins.name}, {ins.nargs}"
    if isinstance(ins, Ret):
        return "ret"
    raise MirError(f"cannot render {ins!r}")


def render_mir(functions: Iterable[MirFunction]) -> str:
    lines: list[str] = []
    for fn in functions:
        lines.append(f"func {fn.name} @{fn.entry:#x}")
        for ins in fn.instrs:
            lines.append(f"{ins.addr:#x}: {render_instr(ins)}")
        lines.append("endfunc")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# control flow graph

EDGE_TAKEN = "taken"
EDGE_FALL = "fall"
EDGE_JUMP = "jump"


@dataclass(frozen=True)
class BasicBlock:
    """Block id is the index of its first instruction; start its address."""

    block_id: int
    start: int
    instrs: tuple[MirInstr, ...]
    successors: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class Cfg:
    fn_name: str
    entry: int
    blocks: dict[int, BasicBlock]
    ret_reg: str = "r0"
    dead_blocks: tuple[int, ...] = field(default=())


def build_cfg(fn: MirFunction) -> Cfg:
    """Partition a function into basic blocks with labeled edges.

    A branch ends its block with taken and fall edges, a jump with one jump
    edge, ret with none; calls fall through (they are skipped during
    emulation and do not terminate blocks).  Targets resolve to the first
    instruction carrying the target address, which keeps lifted functions
    with multi-instruction expansions well defined.
    """
    instrs = fn.instrs
    addr_to_index: dict[int, int] = {}
    for i, ins in enumerate(instrs):
        addr_to_index.setdefault(ins.addr, i)

    leaders = {0}
    for i, ins in enumerate(instrs):
        if isinstance(ins, Br):
            leaders.add(addr_to_index[ins.taken])
            leaders.add(addr_to_index[ins.fall])
            if i + 1 < len(instrs):
                leaders.add(i + 1)
        elif isinstance(ins, Jmp):
            leaders.add(addr_to_index[ins.target])
            if i + 1 < len(instrs):
                leaders.add(i + 1)
        elif isinstance(ins, Ret):
            if i + 1 < len(instrs):
                leaders.add(i + 1)

    ordered = sorted(leaders)
    blocks: dict[int, BasicBlock] = {}
    for bi, start_idx in enumerate(ordered):
        end_idx = ordered[bi + 1] if bi + 1 < len(ordered) else len(instrs)
        body = instrs[start_idx:end_idx]
        last = body[-1]
        succs: list[tuple[str, int]] = []
        if isinstance(last, Br):
            succs.append((EDGE_TAKEN, addr_to_index[last.taken]))
            succs.append((EDGE_FALL, addr_to_index[last.fall]))
        elif isinstance(last, Jmp):
            succs.append((EDGE_JUMP, addr_to_index[last.target]))
        elif isinstance(last, Ret):
            pass
        else:
            succs.append((EDGE_FALL, end_idx))
        # successor lists are duplicate-free per (kind, target)
        dedup: list[tuple[str, int]] = []
        for s in succs:
            if s not in dedup:
                dedup.append(s)
        blocks[start_idx] = BasicBlock(start_idx, body[0].addr, body, tuple(dedup))

    reachable = set()
    work = [0]
    while work:
        b = work.pop()
        if b in reachable:
            continue
        reachable.add(b)
        work.extend(t for _, t in blocks[b].successors)
    dead = tuple(sorted(set(blocks) - reachable))

    return Cfg(fn.name, 0, blocks, fn.ret_reg, dead)
