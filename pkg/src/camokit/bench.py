"""Bench-format reader/writer (grammar in docs/format.md).

Accepted lines: `INPUT(x)`, `OUTPUT(y)`, `y = GATE(a, b, ...)`, and the
constant extension `t = CONST0()` / `t = CONST1()`. `#` starts a comment.
Keywords and gate names are case-insensitive; NOT aliases INV, BUFF
aliases BUF. Gates with more than two inputs are decomposed into balanced
trees of 2-input gates (inverting functions keep the inversion in the
final gate); fresh internal nets use the reserved `__dec_` prefix.
"""

from __future__ import annotations

import re

from .netlist import (
    BINARY_FUNCS,
    CONST0,
    CONST1,
    GATE_OUT,
    PI,
    Netlist,
    NetlistBuilder,
    NetlistError,
)


class BenchError(NetlistError):
    def __init__(self, msg, line=None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


_ALIASES = {"NOT": "INV", "BUFF": "BUF", "INV": "INV", "BUF": "BUF"}
for _f in BINARY_FUNCS:
    _ALIASES[_f] = _f

_IO_RE = re.compile(r"^(INPUT|OUTPUT)\s*\(\s*([^\s(),]+)\s*\)$", re.IGNORECASE)
_GATE_RE = re.compile(r"^([^\s=(),]+)\s*=\s*([A-Za-z0-9_]+)\s*\((.*)\)$")

# reduction function used inside decomposition trees, and the final gate
_TREE_FUNC = {"AND": "AND", "NAND": "AND", "OR": "OR", "NOR": "OR",
              "XOR": "XOR", "XNOR": "XOR"}


def parse_bench(text: str, name: str = "netlist") -> Netlist:
    inputs = []  # (line no, name)
    outputs = []
    assigns = []  # (line no, lhs, func, args)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _IO_RE.match(line)
        if m:
            kw, nm = m.group(1).upper(), m.group(2)
            (inputs if kw == "INPUT" else outputs).append((lineno, nm))
            continue
        m = _GATE_RE.match(line)
        if m:
            lhs, func, argstr = m.group(1), m.group(2).upper(), m.group(3)
            args = [a.strip() for a in argstr.split(",")] if argstr.strip() else []
            if any(not a for a in args):
                raise BenchError(f"empty argument in {line!r}", lineno)
            assigns.append((lineno, lhs, func, args))
            continue
        raise BenchError(f"cannot parse {line!r}", lineno)

    b = NetlistBuilder(name)
    for lineno, nm in inputs:
        if b.has(nm):
            raise BenchError(f"duplicate definition of {nm!r}", lineno)
        b.add_input(nm)
    # declare all LHS nets first: bench allows forward references
    for lineno, lhs, func, args in assigns:
        if b.has(lhs):
            raise BenchError(f"net {lhs!r} already driven", lineno)
        if func in ("CONST0", "CONST1"):
            if args:
                raise BenchError(f"{func} takes no arguments", lineno)
            b.add_const(func == "CONST1", lhs)
        else:
            b.declare(lhs)

    dec_counter = 0
    for lineno, lhs, func, args in assigns:
        if func in ("CONST0", "CONST1"):
            continue
        if func not in _ALIASES:
            raise BenchError(f"unknown gate type {func!r}", lineno)
        func = _ALIASES[func]
        for a in args:
            if not b.has(a):
                raise BenchError(f"gate input {a!r} is never driven", lineno)
        if func in ("INV", "BUF"):
            if len(args) != 1:
                raise BenchError(f"{func} takes exactly one input", lineno)
            b.add_gate(func, args, lhs)
        else:
            if len(args) < 2:
                raise BenchError(f"{func} needs at least two inputs", lineno)
            if len(args) == 2:
                b.add_gate(func, args, lhs)
            else:
                # balanced pairwise reduction, left to right; the final
                # combine keeps the original (possibly inverting) function
                tree = _TREE_FUNC[func]
                level = list(args)
                while len(level) > 2:
                    nxt = []
                    i = 0
                    while i + 1 < len(level):
                        t = f"__dec_{dec_counter}"
                        dec_counter += 1
                        b.add_gate(tree, [level[i], level[i + 1]], t)
                        nxt.append(t)
                        i += 2
                    if i < len(level):
                        nxt.append(level[i])
                    level = nxt
                b.add_gate(func, level, lhs)

    for lineno, nm in outputs:
        if not b.has(nm):
            raise BenchError(f"primary output {nm!r} is never driven", lineno)
        b.add_output(nm)
    return b.build()


def write_bench(n: Netlist) -> str:
    lines = []
    for nid in n.primary_inputs:
        lines.append(f"INPUT({n.nets[nid].name})")
    for nid in n.primary_outputs:
        lines.append(f"OUTPUT({n.nets[nid].name})")
    for net in n.nets:
        if net.kind == CONST0:
            lines.append(f"{net.name} = CONST0()")
        elif net.kind == CONST1:
            lines.append(f"{net.name} = CONST1()")
    for gid in n._topo:
        g = n.gates[gid]
        args = ", ".join(n.nets[i].name for i in g.inputs)
        lines.append(f"{n.nets[g.output].name} = {g.func}({args})")
    return "\n".join(lines) + "\n"


def load_bench(path, name=None) -> Netlist:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if name is None:
        import os

        name = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_bench(text, name=name)


def save_bench(n: Netlist, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_bench(n))
