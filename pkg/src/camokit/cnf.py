"""Tseitin encoding of netlists with constant folding and literal aliasing.

Net values during encoding are Python bools (constants) or nonzero signed
ints (solver literals). Gates whose output is implied by a constant or by
an equal/complementary input collapse to an alias instead of a variable,
which keeps per-pattern constraint copies small once inputs are fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .netlist import CONST0, CONST1, GATE_OUT, Netlist


def encode_gate(func, vals, new_var, add_clause):
    """Return the value of one gate over already-encoded input values."""
    a = vals[0]
    if func == "BUF":
        return a
    if func == "INV":
        return (not a) if isinstance(a, bool) else -a
    b = vals[1]
    # order-normalize so folding logic below is symmetric
    if isinstance(a, bool) and not isinstance(b, bool):
        a, b = b, a
    if isinstance(b, bool):
        if func == "AND":
            return a if b else False
        if func == "NAND":
            return ((not a) if isinstance(a, bool) else -a) if b else True
        if func == "OR":
            return True if b else a
        if func == "NOR":
            return False if b else ((not a) if isinstance(a, bool) else -a)
        if func == "XOR":
            return ((not a) if isinstance(a, bool) else -a) if b else a
        if func == "XNOR":
            return a if b else ((not a) if isinstance(a, bool) else -a)
        raise ValueError(f"unknown function {func}")
    if a == b:
        return {
            "AND": a, "OR": a, "XOR": False, "XNOR": True,
            "NAND": -a, "NOR": -a,
        }[func]
    if a == -b:
        return {
            "AND": False, "OR": True, "XOR": True, "XNOR": False,
            "NAND": True, "NOR": False,
        }[func]
    y = new_var()
    if func == "AND":
        add_clause((-y, a)); add_clause((-y, b)); add_clause((y, -a, -b))
    elif func == "NAND":
        add_clause((y, a)); add_clause((y, b)); add_clause((-y, -a, -b))
    elif func == "OR":
        add_clause((y, -a)); add_clause((y, -b)); add_clause((-y, a, b))
    elif func == "NOR":
        add_clause((-y, -a)); add_clause((-y, -b)); add_clause((y, a, b))
    elif func == "XOR":
        add_clause((-y, a, b)); add_clause((-y, -a, -b))
        add_clause((y, -a, b)); add_clause((y, a, -b))
    elif func == "XNOR":
        add_clause((y, a, b)); add_clause((y, -a, -b))
        add_clause((-y, -a, b)); add_clause((-y, a, -b))
    else:
        raise ValueError(f"unknown function {func}")
    return y


def encode_netlist(n: Netlist, bindings, new_var, add_clause):
    """Encode all gates; returns net-id -> value.

    bindings maps net NAMES to bools/literals for inputs (and may cover any
    subset; unbound primary inputs get fresh variables).
    """
    val = [None] * len(n.nets)
    for net in n.nets:
        if net.kind == CONST0:
            val[net.id] = False
        elif net.kind == CONST1:
            val[net.id] = True
        elif net.name in bindings:
            val[net.id] = bindings[net.name]
        elif net.kind != GATE_OUT:
            val[net.id] = new_var()
    for gid in n._topo:
        g = n.gates[gid]
        if val[g.output] is not None:
            continue  # gate output bound explicitly (unusual, but allowed)
        val[g.output] = encode_gate(
            g.func, [val[i] for i in g.inputs], new_var, add_clause
        )
    return val


@dataclass
class CnfFormula:
    """Standalone CNF of one netlist copy: clause list + per-net values."""

    clauses: list
    num_vars: int
    var_map: dict  # net name (with copy tag) -> bool | signed literal


def tseitin_encode(n: Netlist, copy_tag="") -> CnfFormula:
    """Encode a netlist into CNF over fresh variables 1..num_vars.

    Every satisfying assignment restricted to the primary inputs extends
    uniquely to all gate values (aliased nets share their source variable,
    recorded as a signed literal in var_map).
    """
    clauses = []
    counter = [0]

    def new_var():
        counter[0] += 1
        return counter[0]

    val = encode_netlist(n, {}, new_var, clauses.append)
    prefix = f"{copy_tag}:" if copy_tag else ""
    var_map = {f"{prefix}{net.name}": val[net.id] for net in n.nets}
    return CnfFormula([list(c) for c in clauses], counter[0], var_map)


def enumerate_models(formula: CnfFormula, over=None, limit=1 << 20):
    """All satisfying assignments projected onto `over` (net names).

    Brute-force reference used by tests; intended for tiny formulas only.
    """
    from .solver import SatSolver

    s = SatSolver()
    s.add_vars(formula.num_vars)
    ok = True
    for cl in formula.clauses:
        if not s.add_clause(cl):
            ok = False
            break
    names = sorted(over) if over is not None else sorted(formula.var_map)
    models = []
    while ok and s.solve() and len(models) < limit:
        proj = {}
        blocking = []
        for nm in names:
            v = formula.var_map[nm]
            proj[nm] = v if isinstance(v, bool) else s.model_value(v)
        for v in range(1, formula.num_vars + 1):
            blocking.append(-v if s.model_value(v) else v)
        models.append(proj)
        if not s.add_clause(blocking):
            break
    # collapse duplicates introduced by projection
    seen = set()
    out = []
    for m in models:
        key = tuple(sorted(m.items()))
        if key not in seen:
            seen.add(key)
            out.append(m)
    return out
