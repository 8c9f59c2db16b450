"""Key-programmable attack models of camouflaged netlists.

Every secret choice becomes a selector controlled by key inputs named
`keyinput<i>` (appended after the data inputs). Decode order is fixed:
bits are allocated LSB-first per decision, records in sorted-gate-name
order, and code c picks candidate c (codes >= k alias to candidate 0).
Candidate order was already seed-shuffled when the records were built, so
the decode table leaks nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .camo import (
    CamoNetlist,
    FuncCamo,
    GateCamo,
    NetCamo,
    SCHEME_CHEN,
    SCHEME_FINAL,
    ensure_consts,
)
from .netlist import (
    CONST0,
    CONST1,
    GATE_OUT,
    InterfaceError,
    Netlist,
    NetlistBuilder,
    NetlistError,
    exhaustive_pi_words,
)

KEY_PREFIX = "keyinput"


@dataclass(frozen=True)
class Key:
    bits: tuple

    @property
    def width(self):
        return len(self.bits)

    def __str__(self):
        return "".join(str(b) for b in self.bits)

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if any(ch not in "01" for ch in text):
            raise ValueError(f"key must be a 0/1 string, got {text!r}")
        return cls(tuple(int(ch) for ch in text))


@dataclass(frozen=True)
class Decision:
    """One keyed choice: which candidate a group of key bits selects."""

    kind: str  # 'input' | 'func' | 'net'
    gate: str | None
    input_index: int | None
    net: str | None
    key_bits: tuple  # global key-bit indices, LSB first
    candidates: tuple  # net names for 'input'/'net', truth tables for 'func'
    true_index: int

    def decode(self, key_bits_values):
        code = 0
        for i, b in enumerate(key_bits_values):
            code |= (1 if b else 0) << i
        return code if code < len(self.candidates) else 0


@dataclass
class KeyedNetlist:
    circuit: Netlist
    key_width: int
    key_map: tuple
    origin: dict
    base: Netlist | None = None

    @property
    def key_names(self):
        return tuple(f"{KEY_PREFIX}{i}" for i in range(self.key_width))

    @property
    def data_inputs(self):
        keys = set(self.key_names)
        return tuple(nm for nm in self.circuit.pi_names if nm not in keys)

    @classmethod
    def from_circuit(cls, circuit: Netlist, origin=None):
        """Wrap an externally produced keyed bench (keyinput<i> convention)."""
        width = sum(1 for nm in circuit.pi_names if nm.startswith(KEY_PREFIX))
        expected = {f"{KEY_PREFIX}{i}" for i in range(width)}
        present = {nm for nm in circuit.pi_names if nm.startswith(KEY_PREFIX)}
        if present != expected:
            raise NetlistError(f"key inputs are not dense: {sorted(present)[:6]}")
        return cls(circuit, width, (), origin or {}, None)


@dataclass(frozen=True)
class KeySpaceStats:
    key_width: int
    per_gate: dict
    log2_solution_space: float


# -- small structural helpers -------------------------------------------------


def _mux2(b: NetlistBuilder, sel, a0, a1, prefix):
    """out = a1 if sel else a0, from INV/AND/OR gates."""
    ninv = f"{prefix}n"
    b.add_gate("INV", [sel], ninv)
    x0 = f"{prefix}a"
    b.add_gate("AND", [ninv, a0], x0)
    x1 = f"{prefix}b"
    b.add_gate("AND", [sel, a1], x1)
    out = f"{prefix}o"
    b.add_gate("OR", [x0, x1], out)
    return out


def _tt_needs_const(tt, ar):
    full = 0b11 if ar == 1 else 0b1111
    return tt == 0 or tt == full


_TT4_SINGLE = {
    0b1000: "AND",
    0b0111: "NAND",
    0b1110: "OR",
    0b0001: "NOR",
    0b0110: "XOR",
    0b1001: "XNOR",
}


def _tt_impl(b: NetlistBuilder, tt, in_names, c0, c1, prefix):
    """Net computing the given truth table over in_names; may add gates."""
    if len(in_names) == 1:
        a = in_names[0]
        if tt == 0b00:
            return c0
        if tt == 0b11:
            return c1
        if tt == 0b10:
            return a
        out = f"{prefix}i"
        b.add_gate("INV", [a], out)
        return out
    a, bnet = in_names
    if tt == 0b0000:
        return c0
    if tt == 0b1111:
        return c1
    if tt == 0b1100:
        return a
    if tt == 0b1010:
        return bnet
    if tt == 0b0011:
        out = f"{prefix}i"
        b.add_gate("INV", [a], out)
        return out
    if tt == 0b0101:
        out = f"{prefix}i"
        b.add_gate("INV", [bnet], out)
        return out
    if tt in _TT4_SINGLE:
        out = f"{prefix}g"
        b.add_gate(_TT4_SINGLE[tt], [a, bnet], out)
        return out
    # the four remaining functions need one inverted operand
    inv = f"{prefix}i"
    out = f"{prefix}g"
    if tt == 0b0100:  # a & ~b
        b.add_gate("INV", [bnet], inv)
        b.add_gate("AND", [a, inv], out)
    elif tt == 0b0010:  # ~a & b
        b.add_gate("INV", [a], inv)
        b.add_gate("AND", [inv, bnet], out)
    elif tt == 0b1101:  # a | ~b
        b.add_gate("INV", [bnet], inv)
        b.add_gate("OR", [a, inv], out)
    elif tt == 0b1011:  # ~a | b
        b.add_gate("INV", [a], inv)
        b.add_gate("OR", [inv, bnet], out)
    else:
        raise NetlistError(f"bad truth table {tt}")
    return out


def _sorted_records(c: CamoNetlist):
    if c.scheme == SCHEME_CHEN:
        return sorted(c.records, key=lambda r: r.net)
    return sorted(c.records, key=lambda r: r.gate)


def _allocate_decisions(c: CamoNetlist):
    """Assign global key-bit indices to every record, in documented order."""
    decisions = []
    bit = 0
    for r in _sorted_records(c):
        if isinstance(r, GateCamo):
            for ic in r.inputs:
                decisions.append(
                    Decision(
                        "input", r.gate, ic.input_index, None,
                        (bit, bit + 1), ic.nets, ic.true_index,
                    )
                )
                bit += 2
        elif isinstance(r, FuncCamo):
            m = max(1, math.ceil(math.log2(len(r.tts))))
            decisions.append(
                Decision(
                    "func", r.gate, None, None,
                    tuple(range(bit, bit + m)), r.tts, r.true_index,
                )
            )
            bit += m
        else:
            decisions.append(
                Decision("net", None, None, r.net, (bit,), r.nets, r.true_index)
            )
            bit += 1
    return decisions, bit


def correct_key(c: CamoNetlist) -> Key:
    decisions, width = _allocate_decisions(c)
    bits = [0] * width
    for d in decisions:
        for i, kb in enumerate(d.key_bits):
            bits[kb] = (d.true_index >> i) & 1
    return Key(tuple(bits))


def _mux_tree(b: NetlistBuilder, sel_names, leaves, prefix):
    """Balanced selector over len(sel_names) bits, LSB-first; code c -> leaf c."""
    level = list(leaves)
    for li, sel in enumerate(sel_names):
        nxt = []
        for j in range(0, len(level), 2):
            nxt.append(_mux2(b, sel, level[j], level[j + 1], f"{prefix}l{li}p{j//2}"))
        level = nxt
    assert len(level) == 1
    return level[0]


def to_keyed(c: CamoNetlist):
    """Convert camouflage records into a key-programmable netlist.

    Returns (KeyedNetlist, correct key); applying the correct key restores
    the original function and any key value yields a valid acyclic circuit.
    """
    decisions, width = _allocate_decisions(c)
    base = c.base
    needs_const = c.scheme == SCHEME_FINAL or any(
        isinstance(r, FuncCamo)
        and any(_tt_needs_const(tt, r.arity) for tt in r.tts)
        for r in c.records
    )
    c0 = c1 = None
    if needs_const:
        base, c0, c1 = ensure_consts(base)

    b = NetlistBuilder(f"{base.name}__keyed")
    for nm in base.pi_names:
        b.add_input(nm)
    for i in range(width):
        b.add_input(f"{KEY_PREFIX}{i}")
    for net in base.nets:
        if net.kind in (CONST0, CONST1):
            b.add_const(net.kind == CONST1, net.name)

    camo_gates = {}  # gate name -> decisions on its inputs / function
    net_points = {}  # net name -> decision
    for d in decisions:
        if d.kind == "input":
            camo_gates.setdefault(d.gate, []).append(d)
        elif d.kind == "func":
            camo_gates[d.gate] = d
        else:
            net_points[d.net] = d

    # declaration names: selection points on gate-driven nets free up the
    # original name for the selector output
    decl_name = {}
    for net in base.nets:
        if net.kind != GATE_OUT:
            continue
        if net.name in net_points:
            decl_name[net.name] = f"{net.name}__pre"
        else:
            decl_name[net.name] = net.name
    for nm in decl_name.values():
        b.declare(nm)

    def pre(name):
        # pre-selector signal of a base net
        return decl_name.get(name, name)

    # selector logic for net-level selection points
    sel_out = {}
    for i, (net_name, d) in enumerate(sorted(net_points.items())):
        leaves = [pre(cand) for cand in d.candidates]
        is_pi = base.nets[base.net_by_name[net_name]].kind == "input"
        if is_pi:
            out = _mux_tree(b, [f"{KEY_PREFIX}{d.key_bits[0]}"], leaves, f"__np{i}_")
            sel_out[net_name] = out
        else:
            # route the last selector stage onto the original net name
            sel = f"{KEY_PREFIX}{d.key_bits[0]}"
            prefix = f"__np{i}_"
            ninv = f"{prefix}n"
            b.add_gate("INV", [sel], ninv)
            b.add_gate("AND", [ninv, leaves[0]], f"{prefix}a")
            b.add_gate("AND", [sel, leaves[1]], f"{prefix}b")
            b.add_gate("OR", [f"{prefix}a", f"{prefix}b"], net_name)
            sel_out[net_name] = net_name

    def ref(name):
        # what consumers of a base net should read in the keyed circuit
        if name in net_points:
            return sel_out[name]
        return decl_name.get(name, name)

    # input selectors for the 4-candidate scheme
    input_sel = {}  # (gate, input_index) -> net
    di = 0
    for d in decisions:
        if d.kind != "input":
            continue
        s0 = f"{KEY_PREFIX}{d.key_bits[0]}"
        s1 = f"{KEY_PREFIX}{d.key_bits[1]}"
        leaves = [ref(cand) for cand in d.candidates]
        t0 = _mux2(b, s0, leaves[0], leaves[1], f"__sel{di}x_")
        t1 = _mux2(b, s0, leaves[2], leaves[3], f"__sel{di}y_")
        out = _mux2(b, s1, t0, t1, f"__sel{di}z_")
        input_sel[(d.gate, d.input_index)] = out
        di += 1

    # copy base gates, re-pointing camouflaged inputs / replacing functions
    fi = 0
    for g in base.gates:
        out_name = base.nets[g.output].name
        entry = camo_gates.get(out_name)
        if isinstance(entry, Decision):  # function-set cell
            d = entry
            in_names = [ref(base.nets[i].name) for i in g.inputs]
            m = len(d.key_bits)
            impls = []
            cache = {}
            for code in range(1 << m):
                tt = d.candidates[code] if code < len(d.candidates) else d.candidates[0]
                if tt not in cache:
                    cache[tt] = _tt_impl(
                        b, tt, in_names, c0, c1, f"__fn{fi}t{len(cache)}_"
                    )
                impls.append(cache[tt])
            sels = [f"{KEY_PREFIX}{kb}" for kb in d.key_bits]
            # final stage lands on the gate's own output net
            level = impls
            for li, sel in enumerate(sels):
                nxt = []
                last_level = li == len(sels) - 1
                for j in range(0, len(level), 2):
                    if last_level and j == 0:
                        prefix = f"__fn{fi}l{li}p0_"
                        ninv = f"{prefix}n"
                        b.add_gate("INV", [sel], ninv)
                        b.add_gate("AND", [ninv, level[0]], f"{prefix}a")
                        b.add_gate("AND", [sel, level[1]], f"{prefix}b")
                        b.add_gate("OR", [f"{prefix}a", f"{prefix}b"], decl_name[out_name])
                        nxt.append(decl_name[out_name])
                    else:
                        nxt.append(
                            _mux2(b, sel, level[j], level[j + 1], f"__fn{fi}l{li}p{j//2}_")
                        )
                level = nxt
            fi += 1
        else:
            in_names = []
            for idx, nid in enumerate(g.inputs):
                key = (out_name, idx)
                if key in input_sel:
                    in_names.append(input_sel[key])
                else:
                    in_names.append(ref(base.nets[nid].name))
            b.add_gate(g.func, in_names, decl_name[out_name])

    for nm in base.po_names:
        b.add_output(nm)

    circuit = b.build()
    origin = {"scheme": c.scheme, "scale": c.scale, "seed": c.seed,
              "benchmark": c.base.name}
    keyed = KeyedNetlist(circuit, width, tuple(decisions), origin, base)
    return keyed, correct_key(c)


def apply_key(k: KeyedNetlist, key: Key) -> Netlist:
    """Resolve all selectors under `key`, returning a plain netlist."""
    if key.width != k.key_width:
        raise InterfaceError(f"key width {key.width} != {k.key_width}")
    if k.base is None:
        raise NetlistError("apply_key needs an in-memory keyed model (no key_map)")
    base = k.base

    def choice(d: Decision):
        return d.candidates[d.decode([key.bits[i] for i in d.key_bits])]

    input_over = {}
    func_over = {}
    net_over = {}
    needs_const = False
    for d in k.key_map:
        if d.kind == "input":
            input_over[(d.gate, d.input_index)] = choice(d)
        elif d.kind == "func":
            tt = choice(d)
            func_over[d.gate] = tt
            g = base.gate_by_output_name(d.gate)
            if _tt_needs_const(tt, len(g.inputs)):
                needs_const = True
        else:
            net_over[d.net] = choice(d)

    c0 = c1 = None
    if needs_const:
        base, c0, c1 = ensure_consts(base)

    b = NetlistBuilder(f"{base.name}__resolved")
    for nm in base.pi_names:
        b.add_input(nm)
    for net in base.nets:
        if net.kind in (CONST0, CONST1):
            b.add_const(net.kind == CONST1, net.name)

    decl_name = {}
    for net in base.nets:
        if net.kind == GATE_OUT:
            decl_name[net.name] = (
                f"{net.name}__pre" if net.name in net_over else net.name
            )
    for nm in decl_name.values():
        b.declare(nm)

    def pre(name):
        return decl_name.get(name, name)

    sel_out = {}
    for i, (net_name, chosen) in enumerate(sorted(net_over.items())):
        is_pi = base.nets[base.net_by_name[net_name]].kind == "input"
        if is_pi:
            out = f"__np{i}_o"
            b.add_gate("BUF", [pre(chosen)], out)
            sel_out[net_name] = out
        else:
            b.add_gate("BUF", [pre(chosen)], net_name)
            sel_out[net_name] = net_name

    def ref(name):
        if name in net_over:
            return sel_out[name]
        return decl_name.get(name, name)

    ti = 0
    for g in base.gates:
        out_name = base.nets[g.output].name
        if out_name in func_over:
            tt = func_over[out_name]
            in_names = [ref(base.nets[i].name) for i in g.inputs]
            impl = _tt_impl(b, tt, in_names, c0, c1, f"__res{ti}_")
            ti += 1
            if impl != decl_name[out_name]:
                b.add_gate("BUF", [impl], decl_name[out_name])
        else:
            in_names = []
            for idx, nid in enumerate(g.inputs):
                nm = input_over.get((out_name, idx))
                in_names.append(ref(nm) if nm is not None else ref(base.nets[nid].name))
            b.add_gate(g.func, in_names, decl_name[out_name])

    for nm in base.po_names:
        b.add_output(ref(nm))
    return b.build()


def keyspace_stats(c: CamoNetlist) -> KeySpaceStats:
    """Distinct resolved functions per camouflaged gate, plus log2 of the
    product (an upper-bound proxy for the attack's solution space)."""
    decisions, width = _allocate_decisions(c)
    per_gate = {}
    for r in _sorted_records(c):
        if isinstance(r, GateCamo):
            gate = c.base.gate_by_output_name(r.gate)
            symbols = []
            sym_index = {}
            cand_cols = []  # per input: list of 4 column descriptors
            for ic in r.inputs:
                cols = []
                for nm, role in zip(ic.nets, ic.roles):
                    if role == "const0":
                        cols.append(("c", 0))
                    elif role == "const1":
                        cols.append(("c", 1))
                    else:
                        if nm not in sym_index:
                            sym_index[nm] = len(symbols)
                            symbols.append(nm)
                        cols.append(("v", sym_index[nm]))
                cand_cols.append(cols)
            m = len(symbols)
            rows = 1 << m
            mask = (1 << rows) - 1
            var_words = exhaustive_pi_words(m)

            def col_word(desc):
                kind, v = desc
                if kind == "c":
                    return mask if v else 0
                return var_words[v]

            tts = set()
            from itertools import product

            for combo in product(range(4), repeat=len(cand_cols)):
                words = [col_word(cand_cols[i][ci]) for i, ci in enumerate(combo)]
                a = words[0]
                if gate.func == "INV":
                    v = ~a & mask
                elif gate.func == "BUF":
                    v = a
                else:
                    bw = words[1]
                    if gate.func == "AND":
                        v = a & bw
                    elif gate.func == "NAND":
                        v = ~(a & bw) & mask
                    elif gate.func == "OR":
                        v = a | bw
                    elif gate.func == "NOR":
                        v = ~(a | bw) & mask
                    elif gate.func == "XOR":
                        v = a ^ bw
                    else:
                        v = ~(a ^ bw) & mask
                tts.add(v)
            per_gate[r.gate] = len(tts)
        elif isinstance(r, FuncCamo):
            per_gate[r.gate] = len(set(r.tts))
        else:
            per_gate[f"net:{r.net}"] = len(set(r.nets))
    log2c = sum(math.log2(v) for v in per_gate.values()) if per_gate else 0.0
    return KeySpaceStats(width, per_gate, log2c)
