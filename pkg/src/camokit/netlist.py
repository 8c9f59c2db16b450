"""Combinational gate-level netlist IR: validation, simulation, equivalence.

Netlists are immutable after construction and safe to share. All gate
functions are 1- or 2-input; constants are first-class nets without a
driver gate. Simulation is bit-parallel: one arbitrary-precision int per
net holds one bit per pattern, so a 100k-pattern batch is a single pass.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

# net kinds
PI = "input"
GATE_OUT = "gate"
CONST0 = "const0"
CONST1 = "const1"

UNARY_FUNCS = ("INV", "BUF")
BINARY_FUNCS = ("AND", "NAND", "OR", "NOR", "XOR", "XNOR")
ALL_FUNCS = UNARY_FUNCS + BINARY_FUNCS

# truth table of each 2-input function, bit index = (a << 1) | b
TT4 = {
    "AND": 0b1000,
    "NAND": 0b0111,
    "OR": 0b1110,
    "NOR": 0b0001,
    "XOR": 0b0110,
    "XNOR": 0b1001,
}
# 1-input truth tables, bit index = a
TT2 = {"BUF": 0b10, "INV": 0b01}


def arity(func: str) -> int:
    if func in UNARY_FUNCS:
        return 1
    if func in BINARY_FUNCS:
        return 2
    raise NetlistError(f"unknown gate function {func!r}")


class NetlistError(ValueError):
    """Structural violation in a netlist."""


class CycleError(NetlistError):
    """Combinational cycle detected."""

    def __init__(self, msg, cycle=()):
        super().__init__(msg)
        self.cycle = tuple(cycle)


class InterfaceError(NetlistError):
    """PI/PO interfaces of two netlists do not match."""


@dataclass(frozen=True)
class Net:
    id: int
    name: str
    kind: str


@dataclass(frozen=True)
class Gate:
    id: int
    func: str
    inputs: tuple
    output: int


class Netlist:
    """Validated DAG of 1/2-input gates over named nets.

    Construction checks: unique names, single driver per net, gate arity,
    no dangling inputs, driven primary outputs, acyclicity.
    """

    def __init__(self, name, nets, gates, primary_inputs, primary_outputs):
        self.name = name
        self.nets = tuple(nets)
        self.gates = tuple(gates)
        self.primary_inputs = tuple(primary_inputs)
        self.primary_outputs = tuple(primary_outputs)
        self._validate()
        self._topo = self._toposort()

    # -- validation ------------------------------------------------------

    def _validate(self):
        seen_names = set()
        for i, net in enumerate(self.nets):
            if net.id != i:
                raise NetlistError(f"net ids not dense at {net.name!r}")
            if net.name in seen_names:
                raise NetlistError(f"duplicate net name {net.name!r}")
            seen_names.add(net.name)
        nnets = len(self.nets)

        self.driver = [None] * nnets  # net id -> gate id
        for g in self.gates:
            if g.func not in ALL_FUNCS:
                raise NetlistError(f"unknown gate function {g.func!r}")
            if len(g.inputs) != arity(g.func):
                raise NetlistError(
                    f"gate {self.nets[g.output].name!r}: {g.func} expects "
                    f"{arity(g.func)} inputs, got {len(g.inputs)}"
                )
            for nid in g.inputs:
                if not 0 <= nid < nnets:
                    raise NetlistError(f"gate {g.id} references missing net {nid}")
            out = self.nets[g.output]
            if out.kind != GATE_OUT:
                raise NetlistError(f"gate may not drive {out.kind} net {out.name!r}")
            if self.driver[g.output] is not None:
                raise NetlistError(f"net {out.name!r} has two drivers")
            self.driver[g.output] = g.id
        for net in self.nets:
            if net.kind == GATE_OUT and self.driver[net.id] is None:
                raise NetlistError(f"net {net.name!r} has no driver")
        for nid in self.primary_outputs:
            net = self.nets[nid]
            if net.kind == GATE_OUT and self.driver[nid] is None:
                raise NetlistError(f"primary output {net.name!r} undriven")

        self.fanout = [[] for _ in range(nnets)]  # net id -> gate ids
        for g in self.gates:
            for nid in g.inputs:
                self.fanout[nid].append(g.id)

        self.net_by_name = {net.name: net.id for net in self.nets}

    def _toposort(self):
        # Kahn's algorithm over gates; deterministic (ascending gate id).
        indeg = [0] * len(self.gates)
        for g in self.gates:
            for nid in g.inputs:
                if self.nets[nid].kind == GATE_OUT:
                    indeg[g.id] += 1
        ready = sorted(g.id for g in self.gates if indeg[g.id] == 0)
        order = []
        import heapq

        heapq.heapify(ready)
        while ready:
            gid = heapq.heappop(ready)
            order.append(gid)
            for consumer in self.fanout[self.gates[gid].output]:
                indeg[consumer] -= 1
                if indeg[consumer] == 0:
                    heapq.heappush(ready, consumer)
        if len(order) != len(self.gates):
            stuck = [self.nets[g.output].name for g in self.gates if indeg[g.id] > 0]
            raise CycleError(
                f"combinational cycle through {stuck[:8]}", cycle=stuck
            )
        return tuple(order)

    # -- introspection ---------------------------------------------------

    @property
    def pi_names(self):
        return tuple(self.nets[i].name for i in self.primary_inputs)

    @property
    def po_names(self):
        return tuple(self.nets[i].name for i in self.primary_outputs)

    def gate_by_output_name(self, name):
        gid = self.driver[self.net_by_name[name]]
        if gid is None:
            raise NetlistError(f"{name!r} is not a gate output")
        return self.gates[gid]

    def stats(self):
        return {
            "gates": len(self.gates),
            "nets": len(self.nets),
            "inputs": len(self.primary_inputs),
            "outputs": len(self.primary_outputs),
        }

    def __repr__(self):
        s = self.stats()
        return (
            f"<Netlist {self.name!r} gates={s['gates']} "
            f"PI={s['inputs']} PO={s['outputs']}>"
        )


def topo_order(n: Netlist):
    """Gate ids such that every gate follows all gates driving its inputs."""
    return n._topo


# -- simulation ----------------------------------------------------------


def _eval_words(n: Netlist, pi_words, width):
    """Evaluate all nets with `width` packed patterns. pi_words: net id -> int."""
    mask = (1 << width) - 1
    val = [0] * len(n.nets)
    for net in n.nets:
        if net.kind == CONST1:
            val[net.id] = mask
        elif net.kind == PI:
            val[net.id] = pi_words[net.id]
    gates = n.gates
    for gid in n._topo:
        g = gates[gid]
        f = g.func
        a = val[g.inputs[0]]
        if f == "INV":
            v = ~a & mask
        elif f == "BUF":
            v = a
        else:
            b = val[g.inputs[1]]
            if f == "AND":
                v = a & b
            elif f == "NAND":
                v = ~(a & b) & mask
            elif f == "OR":
                v = a | b
            elif f == "NOR":
                v = ~(a | b) & mask
            elif f == "XOR":
                v = a ^ b
            else:  # XNOR
                v = ~(a ^ b) & mask
        val[g.output] = v
    return val


def simulate(n: Netlist, pattern: Sequence[int]):
    """Evaluate one input pattern (bits in PI order) -> output bits tuple."""
    if len(pattern) != len(n.primary_inputs):
        raise InterfaceError(
            f"pattern width {len(pattern)} != {len(n.primary_inputs)} inputs"
        )
    pi_words = {
        nid: int(bool(bit)) for nid, bit in zip(n.primary_inputs, pattern)
    }
    val = _eval_words(n, pi_words, 1)
    return tuple(val[nid] for nid in n.primary_outputs)


def pack_patterns(patterns, width):
    """Column-pack patterns: per position, an int with bit j = pattern j."""
    words = [0] * width
    for j, p in enumerate(patterns):
        if len(p) != width:
            raise InterfaceError(f"pattern {j} has width {len(p)}, expected {width}")
        for i, bit in enumerate(p):
            if bit:
                words[i] |= 1 << j
    return words


def unpack_patterns(words, count):
    out = []
    for j in range(count):
        out.append(tuple((w >> j) & 1 for w in words))
    return out


def simulate_batch(n: Netlist, patterns):
    """Elementwise equal to [simulate(n, p) for p in patterns], bit-parallel."""
    patterns = list(patterns)
    if not patterns:
        return []
    cols = pack_patterns(patterns, len(n.primary_inputs))
    pi_words = dict(zip(n.primary_inputs, cols))
    val = _eval_words(n, pi_words, len(patterns))
    out_words = [val[nid] for nid in n.primary_outputs]
    return unpack_patterns(out_words, len(patterns))


def exhaustive_pi_words(num_inputs):
    """Truth-table column for each input over all 2**num_inputs rows."""
    n_rows = 1 << num_inputs
    words = []
    for i in range(num_inputs):
        w = ((1 << (1 << i)) - 1) << (1 << i)  # one 0-run then 1-run
        span = 1 << (i + 1)
        while span < n_rows:
            w |= w << span
            span <<= 1
        words.append(w & ((1 << n_rows) - 1))
    return words


def random_pi_words(num_inputs, samples, seed):
    rng = random.Random(seed)
    return [rng.getrandbits(samples) for _ in range(num_inputs)]


def outputs_by_name(n: Netlist, pi_words_by_name, width):
    """Evaluate with per-PI-name packed words; returns {po name: word}."""
    pi_words = {
        nid: pi_words_by_name[n.nets[nid].name] for nid in n.primary_inputs
    }
    val = _eval_words(n, pi_words, width)
    return {n.nets[nid].name: val[nid] for nid in n.primary_outputs}


def equivalent(a: Netlist, b: Netlist, mode="exhaustive", samples=10000, seed=0):
    """Compare two netlists with matching PI/PO names.

    Returns None when no difference is found (a proof in exhaustive mode,
    a statistical statement for mode="random"), else a counterexample
    pattern in a's PI order.
    """
    if set(a.pi_names) != set(b.pi_names) or set(a.po_names) != set(b.po_names):
        raise InterfaceError(
            f"interface mismatch: PIs {sorted(set(a.pi_names) ^ set(b.pi_names))} "
            f"POs {sorted(set(a.po_names) ^ set(b.po_names))}"
        )
    npi = len(a.primary_inputs)
    if mode == "exhaustive":
        if npi > 20:
            raise NetlistError(f"exhaustive mode limited to 20 inputs, got {npi}")
        width = 1 << npi
        cols = exhaustive_pi_words(npi)
    elif mode == "random":
        width = samples
        cols = random_pi_words(npi, samples, seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    by_name = dict(zip(a.pi_names, cols))
    oa = outputs_by_name(a, by_name, width)
    ob = outputs_by_name(b, by_name, width)
    diff = 0
    for po in a.po_names:
        diff |= oa[po] ^ ob[po]
    if diff == 0:
        return None
    j = (diff & -diff).bit_length() - 1  # first differing pattern
    return tuple((by_name[pi] >> j) & 1 for pi in a.pi_names)


def isomorphic(a: Netlist, b: Netlist) -> bool:
    """Same graph up to net-id renumbering: identical names and structure."""
    if a.pi_names != b.pi_names or a.po_names != b.po_names:
        return False
    if len(a.gates) != len(b.gates) or len(a.nets) != len(b.nets):
        return False
    kinds_a = {net.name: net.kind for net in a.nets}
    kinds_b = {net.name: net.kind for net in b.nets}
    if kinds_a != kinds_b:
        return False

    def gate_map(n):
        return {
            n.nets[g.output].name: (g.func, tuple(n.nets[i].name for i in g.inputs))
            for g in n.gates
        }

    return gate_map(a) == gate_map(b)


# -- construction --------------------------------------------------------


class NetlistBuilder:
    """Incremental, name-centric netlist constructor."""

    def __init__(self, name="netlist"):
        self.name = name
        self._nets = []
        self._gates = []
        self._by_name = {}
        self._pis = []
        self._pos = []

    def has(self, name):
        return name in self._by_name

    def net_id(self, name):
        return self._by_name[name]

    def _new_net(self, name, kind):
        if name in self._by_name:
            raise NetlistError(f"net {name!r} already defined")
        nid = len(self._nets)
        self._nets.append(Net(nid, name, kind))
        self._by_name[name] = nid
        return nid

    def add_input(self, name):
        nid = self._new_net(name, PI)
        self._pis.append(nid)
        return nid

    def add_const(self, value, name=None):
        kind = CONST1 if value else CONST0
        if name is None:
            name = "__tie1" if value else "__tie0"
            if name in self._by_name:
                nid = self._by_name[name]
                if self._nets[nid].kind != kind:
                    raise NetlistError(f"{name!r} exists with different kind")
                return nid
        return self._new_net(name, kind)

    def declare(self, name):
        """Forward-declare a gate-output net (driver added later)."""
        if name in self._by_name:
            return self._by_name[name]
        return self._new_net(name, GATE_OUT)

    def add_gate(self, func, input_names, output_name):
        in_ids = []
        for nm in input_names:
            if nm not in self._by_name:
                raise NetlistError(f"gate input {nm!r} undefined")
            in_ids.append(self._by_name[nm])
        out_id = self.declare(output_name)
        gid = len(self._gates)
        self._gates.append(Gate(gid, func, tuple(in_ids), out_id))
        return out_id

    def add_output(self, name):
        if name not in self._by_name:
            raise NetlistError(f"primary output {name!r} undefined")
        self._pos.append(self._by_name[name])

    def fresh_name(self, stem):
        name = stem
        k = 0
        while name in self._by_name:
            k += 1
            name = f"{stem}_{k}"
        return name

    def build(self):
        return Netlist(self.name, self._nets, self._gates, self._pis, self._pos)


def rebuild(
    n: Netlist,
    gate_override=None,
    extra_inputs=(),
    rename=None,
    extra_gates=(),
    extra_consts=(),
    po_names=None,
    name=None,
):
    """Copy a netlist applying edits, preserving names.

    gate_override: {gate id: (func, input net-name tuple) | None} where None
    drops the gate; extra_gates: (func, input names, output name) appended;
    extra_consts: (value, name) pairs; rename: {old net name: new name}.
    """
    gate_override = gate_override or {}
    rename = rename or {}

    def nm(nid):
        old = n.nets[nid].name
        return rename.get(old, old)

    b = NetlistBuilder(name or n.name)
    for nid in n.primary_inputs:
        b.add_input(nm(nid))
    for nm_new in extra_inputs:
        b.add_input(nm_new)
    for net in n.nets:
        if net.kind in (CONST0, CONST1):
            b.add_const(net.kind == CONST1, nm(net.id))
        elif net.kind == GATE_OUT:
            b.declare(nm(net.id))
    for value, cname in extra_consts:
        b.add_const(value, cname)
    for g in n.gates:
        if g.id in gate_override:
            edit = gate_override[g.id]
            if edit is None:
                continue
            func, in_names = edit
            b.add_gate(func, in_names, nm(g.output))
        else:
            b.add_gate(g.func, [nm(i) for i in g.inputs], nm(g.output))
    for func, in_names, out_name in extra_gates:
        if not b.has(out_name):
            b.declare(out_name)
        b.add_gate(func, in_names, out_name)
    for po in po_names if po_names is not None else [nm(i) for i in n.primary_outputs]:
        b.add_output(po)
    return b.build()
