"""Camouflaging schemes over gate-level netlists.

The main scheme obfuscates every input of a selected gate behind four
candidate drivers {real net, dummy net, constant 0, constant 1}; resolving
all records to their true choice reproduces the original function. Two
comparison families are provided: ambiguous-cell schemes (the gate's
function is one of a fixed k-element set) and 2:1 selection points between
a net's real driver and a dummy net.

All transformations are pure: they return new netlists/records and are
deterministic for a fixed (netlist, scale, seed).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

from .netlist import (
    BINARY_FUNCS,
    CONST0,
    CONST1,
    GATE_OUT,
    PI,
    TT2,
    TT4,
    Netlist,
    NetlistError,
    rebuild,
)

SCHEME_FINAL = "final-primitive"
SCHEME_CHEN = "chen-mux"
AMBIGUOUS_KS = (2, 3, 4, 8, 16)


def ambiguous_scheme_id(k):
    return f"ambiguous-{k}"


class DummyExhaustionError(NetlistError):
    """No acyclic dummy candidate exists for a camouflaged input."""


# -- target selection ------------------------------------------------------


@dataclass(frozen=True)
class TargetSet:
    """Memorized camouflaging targets, reusable across schemes."""

    benchmark: str
    scale: float
    seed: int
    gates: tuple

    def to_json(self):
        return {
            "benchmark": self.benchmark,
            "scale": self.scale,
            "seed": self.seed,
            "gates": list(self.gates),
        }

    @classmethod
    def from_json(cls, doc):
        return cls(doc["benchmark"], doc["scale"], doc["seed"], tuple(doc["gates"]))

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def select_targets(n: Netlist, scale, seed) -> TargetSet:
    """Uniform sample of ceil(scale * |gates|) gates, without replacement."""
    if not 0.0 <= scale <= 1.0:
        raise ValueError(f"scale must be in [0, 1], got {scale}")
    names = sorted(n.nets[g.output].name for g in n.gates)
    count = math.ceil(scale * len(names))
    rng = random.Random(seed)
    picked = rng.sample(names, count) if count else []
    return TargetSet(n.name, scale, seed, tuple(sorted(picked)))


# -- netlist transformations ------------------------------------------------

# function-preserving rewrites of 1-input gates into 2-input gates with one
# constant input
INV_IDENTITIES = (("NAND", 1), ("NOR", 0), ("XOR", 1), ("XNOR", 0))
BUF_IDENTITIES = (("AND", 1), ("OR", 0), ("XOR", 0), ("XNOR", 1))


def ensure_consts(n: Netlist):
    """Return (netlist, const0 name, const1 name), adding tie nets if absent."""
    c0 = next((net.name for net in n.nets if net.kind == CONST0), None)
    c1 = next((net.name for net in n.nets if net.kind == CONST1), None)
    extra = []
    if c0 is None:
        c0 = "__tie0"
        extra.append((0, c0))
    if c1 is None:
        c1 = "__tie1"
        extra.append((1, c1))
    if extra:
        n = rebuild(n, extra_consts=extra)
    return n, c0, c1


def transform_inv_buf(n: Netlist, fraction, seed, within=None):
    """Rewrite a random `fraction` of INV/BUF gates as 2-input identities.

    Each selected gate becomes a uniformly chosen equivalent 2-input gate
    with a constant input in a random position. Returns the new netlist and
    a log of rewrites; logged gates must end up camouflaged, since their
    constant input is otherwise a giveaway.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    pool = sorted(
        n.nets[g.output].name
        for g in n.gates
        if g.func in ("INV", "BUF") and (within is None or n.nets[g.output].name in within)
    )
    count = math.ceil(fraction * len(pool))
    rng = random.Random(seed)
    picked = sorted(rng.sample(pool, count)) if count else []
    if not picked:
        return n, []
    n, c0, c1 = ensure_consts(n)
    const_name = {0: c0, 1: c1}
    override = {}
    log = []
    for name in picked:
        g = n.gate_by_output_name(name)
        identities = INV_IDENTITIES if g.func == "INV" else BUF_IDENTITIES
        func, cval = identities[rng.randrange(len(identities))]
        a = n.nets[g.inputs[0]].name
        cn = const_name[cval]
        ins = (a, cn) if rng.randrange(2) == 0 else (cn, a)
        override[g.id] = (func, ins)
        log.append(
            {"gate": name, "old_func": g.func, "new_func": func, "const": cval}
        )
    return rebuild(n, gate_override=override), log


def insert_tie_disguise(n: Netlist, count, seed):
    """Insert `count` gates of random 2-input type fed only by constants.

    Their outputs drive nothing in the resolved design; they exist to serve
    as plausible dummy-candidate drivers. Returns (netlist, new gate names).
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return n, []
    n, c0, c1 = ensure_consts(n)
    rng = random.Random(seed)
    existing = {net.name for net in n.nets}
    extra = []
    names = []
    i = 0
    while len(extra) < count:
        name = f"__tieg{i}"
        i += 1
        if name in existing:
            continue
        func = BINARY_FUNCS[rng.randrange(len(BINARY_FUNCS))]
        ins = (
            c1 if rng.randrange(2) else c0,
            c1 if rng.randrange(2) else c0,
        )
        extra.append((func, ins, name))
        names.append(name)
    return rebuild(n, extra_gates=extra), names


# -- dummy-net selection -----------------------------------------------------


class CandidateGraph:
    """Gate graph holding real edges plus every accepted candidate edge.

    Keeping all candidate edges in one DAG guarantees that any simultaneous
    choice of candidates (i.e. any key) yields an acyclic circuit.
    """

    def __init__(self, n: Netlist):
        self.n = n
        self.succ = [set() for _ in n.gates]
        for g in n.gates:
            for consumer in n.fanout[g.output]:
                self.succ[g.id].add(consumer)

    def _reaches(self, src_gate, dst_gate):
        if src_gate == dst_gate:
            return True
        seen = set()
        stack = [src_gate]
        while stack:
            g = stack.pop()
            for s in self.succ[g]:
                if s == dst_gate:
                    return True
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
        return False

    def would_cycle(self, src_net_id, dst_gate_id):
        """True if wiring net -> gate input could close a cycle."""
        driver = self.n.driver[src_net_id]
        if driver is None:  # PI or constant
            return False
        return self._reaches(dst_gate_id, driver)

    def add_edge(self, src_net_id, dst_gate_id):
        driver = self.n.driver[src_net_id]
        if driver is not None:
            self.succ[driver].add(dst_gate_id)

    def is_acyclic(self):
        indeg = [0] * len(self.n.gates)
        for g in range(len(self.n.gates)):
            for s in self.succ[g]:
                indeg[s] += 1
        ready = [g for g in range(len(self.n.gates)) if indeg[g] == 0]
        seen = 0
        while ready:
            g = ready.pop()
            seen += 1
            for s in self.succ[g]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    ready.append(s)
        return seen == len(self.n.gates)


def _k_hop_nets(n: Netlist, gate_id, k):
    """Net ids within k undirected hops of a gate (nets as edges)."""
    nets = set()
    frontier = {gate_id}
    visited = {gate_id}
    for _ in range(k):
        nxt = set()
        for g in frontier:
            gate = n.gates[g]
            for nid in (*gate.inputs, gate.output):
                nets.add(nid)
                d = n.driver[nid]
                if d is not None and d not in visited:
                    nxt.add(d)
                for c in n.fanout[nid]:
                    if c not in visited:
                        nxt.add(c)
        visited |= nxt
        frontier = nxt
        if not frontier:
            break
    return nets


def select_dummy_nets(
    n: Netlist,
    gate,
    k_hops=4,
    rng=None,
    graph=None,
    tie_nets=frozenset(),
    tie_preference=4.0,
    retries=20,
):
    """Pick one dummy net per input of `gate` from its k-hop neighborhood.

    Excludes the gate's real input nets, its own output, constants, and
    previously chosen dummies for the same gate; every accepted net is
    added to the all-candidate graph so no simultaneous choice can cycle.
    Falls back to the whole netlist before reporting exhaustion.
    """
    if isinstance(gate, str):
        gate = n.gate_by_output_name(gate)
    rng = rng or random.Random(0)
    graph = graph if graph is not None else CandidateGraph(n)
    banned = set(gate.inputs) | {gate.output}
    banned |= {net.id for net in n.nets if net.kind in (CONST0, CONST1)}
    tie_ids = {n.net_by_name[t] for t in tie_nets if t in n.net_by_name}

    local = sorted(_k_hop_nets(n, gate.id, k_hops) - banned)
    everything = sorted(
        net.id for net in n.nets if net.id not in banned
    )

    chosen = []
    for _ in gate.inputs:
        pick = None
        for pool in (local, everything):
            cand = [nid for nid in pool if nid not in chosen]
            if not cand:
                continue
            weights = [tie_preference if nid in tie_ids else 1.0 for nid in cand]
            for _attempt in range(retries):
                nid = rng.choices(cand, weights=weights)[0]
                if not graph.would_cycle(nid, gate.id):
                    pick = nid
                    break
            if pick is not None:
                break
            # exhaustive sweep in random order before giving up on the pool
            order = cand[:]
            rng.shuffle(order)
            for nid in order:
                if not graph.would_cycle(nid, gate.id):
                    pick = nid
                    break
            if pick is not None:
                break
        if pick is None:
            raise DummyExhaustionError(
                f"no acyclic dummy candidate for input of gate "
                f"{n.nets[gate.output].name!r}"
            )
        graph.add_edge(pick, gate.id)
        chosen.append(pick)
    return chosen


# -- camouflage records ------------------------------------------------------

ROLE_REAL = "real"
ROLE_DUMMY = "dummy"
ROLE_CONST0 = "const0"
ROLE_CONST1 = "const1"


@dataclass(frozen=True)
class InputCandidates:
    """One camouflaged gate input: 4 candidate nets in shuffled order."""

    input_index: int
    nets: tuple
    roles: tuple
    true_index: int

    def live_nets(self):
        return tuple(
            nm for nm, role in zip(self.nets, self.roles)
            if role in (ROLE_REAL, ROLE_DUMMY)
        )


@dataclass(frozen=True)
class GateCamo:
    gate: str
    inputs: tuple


@dataclass(frozen=True)
class FuncCamo:
    gate: str
    arity: int
    tts: tuple
    true_index: int


@dataclass(frozen=True)
class NetCamo:
    net: str
    nets: tuple
    true_index: int


@dataclass
class CamoNetlist:
    """A netlist plus its camouflage records and secret ground truth."""

    base: Netlist
    scheme: str
    scale: float
    seed: int
    records: tuple
    log: tuple = ()

    def resolve(self) -> Netlist:
        """Ground-truth resolution; by construction this is the base netlist."""
        return self.base

    def to_json(self, include_secret=True):
        recs = []
        for r in self.records:
            if isinstance(r, GateCamo):
                doc = {
                    "kind": "gate",
                    "gate": r.gate,
                    "inputs": [
                        {
                            "input_index": ic.input_index,
                            "nets": list(ic.nets),
                            **(
                                {"roles": list(ic.roles), "true_index": ic.true_index}
                                if include_secret
                                else {}
                            ),
                        }
                        for ic in r.inputs
                    ],
                }
            elif isinstance(r, FuncCamo):
                doc = {
                    "kind": "func",
                    "gate": r.gate,
                    "arity": r.arity,
                    "tts": list(r.tts),
                    **({"true_index": r.true_index} if include_secret else {}),
                }
            else:
                doc = {
                    "kind": "net",
                    "net": r.net,
                    "nets": list(r.nets),
                    **({"true_index": r.true_index} if include_secret else {}),
                }
            recs.append(doc)
        out = {
            "schema": 1,
            "benchmark": self.base.name,
            "scheme": self.scheme,
            "scale": self.scale,
            "seed": self.seed,
            "records": recs,
            "log": list(self.log),
        }
        if include_secret:
            out["secret"] = True
        return out

    @classmethod
    def from_json(cls, base: Netlist, doc):
        recs = []
        for r in doc["records"]:
            if r["kind"] == "gate":
                recs.append(
                    GateCamo(
                        r["gate"],
                        tuple(
                            InputCandidates(
                                ic["input_index"],
                                tuple(ic["nets"]),
                                tuple(ic["roles"]),
                                ic["true_index"],
                            )
                            for ic in r["inputs"]
                        ),
                    )
                )
            elif r["kind"] == "func":
                recs.append(
                    FuncCamo(r["gate"], r["arity"], tuple(r["tts"]), r["true_index"])
                )
            else:
                recs.append(NetCamo(r["net"], tuple(r["nets"]), r["true_index"]))
        return cls(
            base,
            doc["scheme"],
            doc["scale"],
            doc["seed"],
            tuple(recs),
            tuple(doc.get("log", ())),
        )


# -- the main camouflaging scheme --------------------------------------------


def apply_final_primitive(
    n: Netlist,
    targets,
    seed=0,
    k_hops=4,
    tie_nets=(),
    tie_preference=4.0,
    scale=None,
) -> CamoNetlist:
    """Obfuscate every input of each target gate behind 4 candidate drivers.

    Candidates per input: the real driver, a dummy net (unique within the
    gate, acyclic under any simultaneous choice), and the two constants.
    Candidate order is shuffled so position carries no information.
    """
    names = tuple(targets.gates) if isinstance(targets, TargetSet) else tuple(targets)
    if scale is None:
        scale = (
            targets.scale
            if isinstance(targets, TargetSet)
            else (len(names) / len(n.gates) if n.gates else 0.0)
        )
    base, c0, c1 = ensure_consts(n)
    known = {net.name for net in base.nets}
    missing = [nm for nm in names if nm not in known]
    if missing:
        raise NetlistError(f"targets not in netlist: {missing[:5]}")
    rng = random.Random(seed)
    graph = CandidateGraph(base)
    records = []
    for name in sorted(names):
        gate = base.gate_by_output_name(name)
        dummies = select_dummy_nets(
            base,
            gate,
            k_hops=k_hops,
            rng=rng,
            graph=graph,
            tie_nets=tie_nets,
            tie_preference=tie_preference,
        )
        ics = []
        for idx, (real_id, dummy_id) in enumerate(zip(gate.inputs, dummies)):
            cand = [
                (base.nets[real_id].name, ROLE_REAL),
                (base.nets[dummy_id].name, ROLE_DUMMY),
                (c0, ROLE_CONST0),
                (c1, ROLE_CONST1),
            ]
            rng.shuffle(cand)
            true_index = next(i for i, c in enumerate(cand) if c[1] == ROLE_REAL)
            ics.append(
                InputCandidates(
                    idx,
                    tuple(c[0] for c in cand),
                    tuple(c[1] for c in cand),
                    true_index,
                )
            )
        records.append(GateCamo(name, tuple(ics)))
    return CamoNetlist(base, SCHEME_FINAL, scale, seed, tuple(records))


# -- comparison scheme: ambiguous cells ---------------------------------------

# fixed, documented function sets (truth tables over (a, b), bit = (a<<1)|b)
AMBIGUOUS_SETS = {
    3: (TT4["XOR"], TT4["NAND"], TT4["NOR"]),
    4: (TT4["XOR"], TT4["XNOR"], TT4["NAND"], TT4["NOR"]),
    8: (
        TT4["AND"],
        TT4["NAND"],
        TT4["OR"],
        TT4["NOR"],
        TT4["XOR"],
        TT4["XNOR"],
        0b1100,  # first input passed through
        0b0011,  # first input inverted
    ),
    16: tuple(range(16)),
}

_TT4_COMPLEMENT = {tt: 0b1111 ^ tt for tt in range(16)}


def apply_ambiguous_scheme(n: Netlist, targets, k, seed=0, scale=None) -> CamoNetlist:
    """Replace target gates by cells implementing any function of a k-set.

    Gates whose true function is not in the scheme's set are skipped and
    logged, mirroring the library limits of the modeled schemes. k=2 pairs
    each gate with its complement; k in {3,4,8,16} uses fixed 2-input sets.
    """
    if k not in AMBIGUOUS_KS:
        raise ValueError(f"k must be one of {AMBIGUOUS_KS}")
    names = tuple(targets.gates) if isinstance(targets, TargetSet) else tuple(targets)
    if scale is None:
        scale = (
            targets.scale
            if isinstance(targets, TargetSet)
            else (len(names) / len(n.gates) if n.gates else 0.0)
        )
    rng = random.Random(seed)
    records = []
    log = []
    for name in sorted(names):
        gate = n.gate_by_output_name(name)
        ar = len(gate.inputs)
        if k == 2:
            true_tt = TT2[gate.func] if ar == 1 else TT4[gate.func]
            comp = (0b11 ^ true_tt) if ar == 1 else _TT4_COMPLEMENT[true_tt]
            tts = [true_tt, comp]
        else:
            if ar != 2:
                log.append(f"skip {name}: {gate.func} not coverable by k={k} set")
                continue
            true_tt = TT4[gate.func]
            if true_tt not in AMBIGUOUS_SETS[k]:
                log.append(f"skip {name}: {gate.func} not in k={k} function set")
                continue
            tts = list(AMBIGUOUS_SETS[k])
        rng.shuffle(tts)
        records.append(FuncCamo(name, ar, tuple(tts), tts.index(true_tt)))
    return CamoNetlist(
        n, ambiguous_scheme_id(k), scale, seed, tuple(records), tuple(log)
    )


# -- comparison scheme: 2:1 selection points ----------------------------------


def apply_chen_mux(n: Netlist, n_dummies, seed=0) -> CamoNetlist:
    """Insert 2:1 selection points between random nets and dummy drivers.

    Each selected net's sinks become switchable between the real driver and
    an acyclic dummy net; ground truth is the real side. Dummy taps always
    reference pre-selector signals.
    """
    if n_dummies < 0:
        raise ValueError("n_dummies must be >= 0")
    pos = set(n.primary_outputs)
    eligible = sorted(
        net.name
        for net in n.nets
        if net.kind not in (CONST0, CONST1)
        and (n.fanout[net.id] or net.id in pos)
        # a primary input that is also a primary output cannot be re-driven
        and not (net.kind == PI and net.id in pos)
    )
    if n_dummies > len(eligible):
        raise NetlistError(
            f"cannot place {n_dummies} selection points on {len(eligible)} nets"
        )
    rng = random.Random(seed)
    picked = rng.sample(eligible, n_dummies) if n_dummies else []
    graph = CandidateGraph(n)
    all_nets = sorted(
        net.id for net in n.nets if net.kind not in (CONST0, CONST1)
    )
    records = []
    for name in picked:
        nid = n.net_by_name[name]
        sinks = list(n.fanout[nid])
        pool = [x for x in all_nets if x != nid]
        pick = None
        for _ in range(20):
            cand = pool[rng.randrange(len(pool))]
            if all(not graph.would_cycle(cand, s) for s in sinks):
                pick = cand
                break
        if pick is None:
            order = pool[:]
            rng.shuffle(order)
            for cand in order:
                if all(not graph.would_cycle(cand, s) for s in sinks):
                    pick = cand
                    break
        if pick is None:
            raise DummyExhaustionError(f"no acyclic dummy for selection point {name!r}")
        for s in sinks:
            graph.add_edge(pick, s)
        pair = [(name, True), (n.nets[pick].name, False)]
        rng.shuffle(pair)
        records.append(
            NetCamo(
                name,
                tuple(p[0] for p in pair),
                next(i for i, p in enumerate(pair) if p[1]),
            )
        )
    scale = n_dummies / len(n.nets) if n.nets else 0.0
    return CamoNetlist(n, SCHEME_CHEN, scale, seed, tuple(records))


# -- camouflaging limits of library-constrained schemes ------------------------

RELEVANT_CELLS = {
    "xor-type": ("BUF", "INV", "AND2", "NAND2", "OR2", "NOR2", "AND3", "NAND3"),
    "stf-type": ("BUF", "INV", "AND2", "NAND2", "OR2", "AND3"),
    "xor-nand-nor": ("XOR2", "NAND2", "NOR2"),
    "threshold": ("AND2", "NAND2", "NOR2", "OR2", "XOR2", "XNOR2"),
    "ours": None,  # applicable to every cell
}


def camo_limit(cell_counts, scheme) -> float:
    """Percentage of cell instances a scheme can camouflage at all.

    `cell_counts` maps cell names to instance counts and must cover the
    whole design (an OTHER entry may aggregate cells irrelevant to every
    scheme); the limit is 100 * relevant / total.
    """
    key = scheme.lower()
    if key not in RELEVANT_CELLS:
        raise ValueError(f"unknown scheme {scheme!r}; pick from {sorted(RELEVANT_CELLS)}")
    counts = {str(k).upper(): int(v) for k, v in cell_counts.items()}
    if any(v < 0 for v in counts.values()):
        raise ValueError("cell counts must be nonnegative")
    total = sum(counts.values())
    if total == 0:
        raise ValueError("total instance count is zero")
    relevant_cells = RELEVANT_CELLS[key]
    if relevant_cells is None:
        return 100.0
    relevant = sum(counts.get(c, 0) for c in relevant_cells)
    return 100.0 * relevant / total
