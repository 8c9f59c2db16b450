"""Oracle-guided key recovery on keyed netlists.

`seminal_attack` runs the classic loop: a miter over two key copies finds
a distinguishing input pattern, the oracle's response is asserted for both
copies, and on UNSAT any key satisfying the accumulated constraints is
functionally correct. `double_dip_attack` instead searches for patterns
that are guaranteed to eliminate at least two incorrect keys per oracle
query, falling back to single DIPs once none exist.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .cnf import encode_gate, encode_netlist
from .keyed import Key, KeyedNetlist
from .netlist import (
    InterfaceError,
    Netlist,
    exhaustive_pi_words,
    outputs_by_name,
    random_pi_words,
    simulate,
)
from .solver import SatSolver, SolverTimeout

DEFAULT_TIMEOUT_S = 172800.0  # 48 hours


class AttackError(RuntimeError):
    """Internal inconsistency (e.g. an extracted key fails verification)."""


@dataclass
class AttackConfig:
    timeout_s: float = DEFAULT_TIMEOUT_S
    verify_samples: int = 10000
    seed: int = 0
    on_iteration: object = None  # test hook: f(kind, pattern, response)

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


@dataclass
class AttackResult:
    status: str  # 'solved' | 'timeout'
    key: Key | None
    iterations: int
    cpu_time_s: float
    decisions: int
    conflicts: int

    def to_json(self):
        return {
            "status": self.status,
            "key": None if self.key is None else str(self.key),
            "iterations": self.iterations,
            "cpu_time_s": self.cpu_time_s,
            "solver": {"decisions": self.decisions, "conflicts": self.conflicts},
        }


class SimOracle:
    """Working-chip stand-in: answers input patterns on the secret netlist."""

    def __init__(self, secret: Netlist):
        self.netlist = secret
        self.queries = 0

    def query(self, pattern):
        self.queries += 1
        return simulate(self.netlist, pattern)


def _interface(keyed: KeyedNetlist, oracle: SimOracle):
    data = keyed.data_inputs
    if set(data) != set(oracle.netlist.pi_names):
        raise InterfaceError("oracle/keyed netlist input names differ")
    if set(keyed.circuit.po_names) != set(oracle.netlist.po_names):
        raise InterfaceError("oracle/keyed netlist output names differ")
    oracle_order = [data.index(nm) for nm in oracle.netlist.pi_names]
    po_order = [oracle.netlist.po_names.index(nm) for nm in keyed.circuit.po_names]
    return data, oracle_order, po_order


def _fresh_keys(s: SatSolver, width):
    return [s.new_var() for _ in range(width)]


def _encode_copy(s: SatSolver, circuit: Netlist, pi_binding, key_binding):
    """Encode one circuit copy; returns PO values in circuit PO order."""
    bindings = dict(pi_binding)
    bindings.update(key_binding)
    val = encode_netlist(circuit, bindings, s.new_var, s.add_clause)
    return [val[nid] for nid in circuit.primary_outputs]


def _key_dependent(circuit: Netlist, key_names):
    """Net ids whose value can depend on a key input."""
    keys = set(key_names)
    dep = set()
    for nid in circuit.primary_inputs:
        if circuit.nets[nid].name in keys:
            dep.add(nid)
    for gid in circuit._topo:
        g = circuit.gates[gid]
        if any(i in dep for i in g.inputs):
            dep.add(g.output)
    return dep


class SharedCone:
    """One encoding of the key-independent logic, reused by all key copies."""

    def __init__(self, s, circuit: Netlist, pi_binding, key_names):
        self.circuit = circuit
        self.dep = _key_dependent(circuit, key_names)
        from .netlist import CONST0, CONST1

        val = [None] * len(circuit.nets)
        for net in circuit.nets:
            if net.kind == CONST0:
                val[net.id] = False
            elif net.kind == CONST1:
                val[net.id] = True
            elif net.name in pi_binding:
                val[net.id] = pi_binding[net.name]
        for gid in circuit._topo:
            g = circuit.gates[gid]
            if g.output in self.dep:
                continue
            val[g.output] = encode_gate(
                g.func, [val[i] for i in g.inputs], s.new_var, s.add_clause
            )
        self.val = val

    def copy_with_keys(self, s, key_binding):
        """Encode only the key-dependent gates; returns PO values."""
        circuit = self.circuit
        val = self.val[:]
        for nid in circuit.primary_inputs:
            nm = circuit.nets[nid].name
            if nm in key_binding:
                val[nid] = key_binding[nm]
        for gid in circuit._topo:
            g = circuit.gates[gid]
            if g.output in self.dep:
                val[g.output] = encode_gate(
                    g.func, [val[i] for i in g.inputs], s.new_var, s.add_clause
                )
        return [val[nid] for nid in circuit.primary_outputs]


def _assert_response(s: SatSolver, po_vals, response):
    """Constrain a constant-input copy to the oracle's response bits."""
    for v, bit in zip(po_vals, response):
        want = bool(bit)
        if isinstance(v, bool):
            if v != want:
                raise AttackError(
                    "oracle response contradicts the keyed model on a "
                    "key-independent output"
                )
        else:
            s.add_clause((v,) if want else (-v,))


def _pair_miter(s: SatSolver, keyed: KeyedNetlist):
    """Two key copies sharing inputs plus a difference assumption literal."""
    data = keyed.data_inputs
    pi_vars = {nm: s.new_var() for nm in data}
    key_a = _fresh_keys(s, keyed.key_width)
    key_b = _fresh_keys(s, keyed.key_width)
    bind_a = {nm: v for nm, v in zip(keyed.key_names, key_a)}
    bind_b = {nm: v for nm, v in zip(keyed.key_names, key_b)}
    shared = SharedCone(s, keyed.circuit, pi_vars, keyed.key_names)
    pos_a = shared.copy_with_keys(s, bind_a)
    pos_b = shared.copy_with_keys(s, bind_b)
    diffs = [
        encode_gate("XOR", [va, vb], s.new_var, s.add_clause)
        for va, vb in zip(pos_a, pos_b)
    ]
    diff_lit = s.new_var()
    # one-sided: assuming diff_lit forces some output to differ
    clause = [-diff_lit]
    for d in diffs:
        if d is True:
            clause = None
            break
        if d is False:
            continue
        clause.append(d)
    if clause is not None:
        # a bare (-diff_lit) means the copies are identical: no DIP exists
        s.add_clause(clause)
    return pi_vars, key_a, key_b, diff_lit


def _extract_pattern(s: SatSolver, pi_vars, data):
    return tuple(1 if s.model_value(pi_vars[nm]) else 0 for nm in data)


def _oracle_response(oracle, pattern, data, oracle_order, po_order):
    opat = tuple(pattern[i] for i in oracle_order)
    out = oracle.query(opat)
    return tuple(out[i] for i in po_order)


def _learn(s, keyed, pattern, response, key_binds):
    """Add one constant-input copy per key vector, pinned to the response.

    With the pattern constant, the key-independent cone folds away entirely
    and only key-dependent logic is emitted per copy.
    """
    pi_const = {nm: bool(b) for nm, b in zip(keyed.data_inputs, pattern)}
    shared = SharedCone(s, keyed.circuit, pi_const, keyed.key_names)
    for bind in key_binds:
        pos = shared.copy_with_keys(s, bind)
        _assert_response(s, pos, response)


def seminal_attack(keyed: KeyedNetlist, oracle: SimOracle, cfg: AttackConfig | None = None):
    """Iterative DIP loop; returns a verified key or a timeout result."""
    cfg = cfg or AttackConfig()
    t_wall = time.monotonic()
    t_cpu = time.process_time()
    deadline = t_wall + cfg.timeout_s
    data, oracle_order, po_order = _interface(keyed, oracle)

    if keyed.key_width == 0:
        return _trivial_attack(keyed, oracle, cfg, t_cpu)

    s = SatSolver()
    pi_vars, key_a, key_b, diff_lit = _pair_miter(s, keyed)
    bind_a = dict(zip(keyed.key_names, key_a))
    bind_b = dict(zip(keyed.key_names, key_b))

    iterations = 0

    def result(status, key=None):
        return AttackResult(
            status, key, iterations, time.process_time() - t_cpu,
            s.decisions, s.conflicts,
        )

    while True:
        try:
            sat = s.solve((diff_lit,), deadline=deadline)
        except SolverTimeout:
            return result("timeout")
        if not sat:
            break
        pattern = _extract_pattern(s, pi_vars, data)
        response = _oracle_response(oracle, pattern, data, oracle_order, po_order)
        iterations += 1
        if cfg.on_iteration:
            cfg.on_iteration("dip", pattern, response)
        _learn(s, keyed, pattern, response, (bind_a, bind_b))

    try:
        if not s.solve((), deadline=deadline):
            raise AttackError("no key is consistent with the learned constraints")
    except SolverTimeout:
        return result("timeout")
    key = Key(tuple(1 if s.model_value(v) else 0 for v in key_a))
    cex = verify_key(keyed, key, oracle.netlist,
                     samples=cfg.verify_samples, seed=cfg.seed)
    if cex is not None:
        raise AttackError(f"extracted key fails verification on {cex}")
    return result("solved", key)


def _trivial_attack(keyed, oracle, cfg, t_cpu):
    """key_width 0: nothing to learn; verify the empty key and report."""
    key = Key(())
    cex = verify_key(keyed, key, oracle.netlist,
                     samples=cfg.verify_samples, seed=cfg.seed)
    if cex is not None:
        raise AttackError(f"keyless circuit differs from the oracle on {cex}")
    return AttackResult("solved", key, 0, time.process_time() - t_cpu, 0, 0)


def _key_distinct(s: SatSolver, keys_x, keys_y):
    """Require two key vectors to differ in at least one bit."""
    diffs = [
        encode_gate("XOR", [a, b], s.new_var, s.add_clause)
        for a, b in zip(keys_x, keys_y)
    ]
    lits = [d for d in diffs if not isinstance(d, bool)]
    if any(d is True for d in diffs):
        return
    if not lits:
        s.add_clause(())  # zero-width keys can never differ
        return
    s.add_clause(lits)


def double_dip_attack(keyed: KeyedNetlist, oracle: SimOracle, cfg: AttackConfig | None = None):
    """Variant whose every query eliminates at least two incorrect keys.

    Searches for a pattern plus four keys (two agreeing pairs with
    differing outputs across pairs); whichever pair disagrees with the
    oracle loses both of its (distinct) keys. Falls back to single DIPs
    when no such pattern exists.
    """
    cfg = cfg or AttackConfig()
    t_wall = time.monotonic()
    t_cpu = time.process_time()
    deadline = t_wall + cfg.timeout_s
    data, oracle_order, po_order = _interface(keyed, oracle)

    if keyed.key_width == 0:
        return _trivial_attack(keyed, oracle, cfg, t_cpu)

    s1 = SatSolver()  # seminal miter: fallback + final extraction
    pi1, key_1a, key_1b, diff_lit = _pair_miter(s1, keyed)
    bind1 = (dict(zip(keyed.key_names, key_1a)), dict(zip(keyed.key_names, key_1b)))

    use_two = keyed.key_width > 0
    if use_two:
        s2 = SatSolver()  # four-copy 2-DIP query
        pi2 = {nm: s2.new_var() for nm in data}
        kvecs = [_fresh_keys(s2, keyed.key_width) for _ in range(4)]
        binds2 = [dict(zip(keyed.key_names, kv)) for kv in kvecs]
        shared2 = SharedCone(s2, keyed.circuit, pi2, keyed.key_names)
        pos = [shared2.copy_with_keys(s2, b) for b in binds2]
        ok2 = True
        # outputs agree within pairs (A,B) and (C,D)
        for x, ypos in ((0, 1), (2, 3)):
            for va, vb in zip(pos[x], pos[ypos]):
                eq = encode_gate("XNOR", [va, vb], s2.new_var, s2.add_clause)
                if eq is False:
                    ok2 = False
                elif eq is not True:
                    s2.add_clause((eq,))
        # outputs disagree across pairs on some output
        across = [
            encode_gate("XOR", [va, vc], s2.new_var, s2.add_clause)
            for va, vc in zip(pos[0], pos[2])
        ]
        lits = [d for d in across if not isinstance(d, bool)]
        if not any(d is True for d in across):
            if lits:
                s2.add_clause(lits)
            else:
                ok2 = False
        _key_distinct(s2, kvecs[0], kvecs[1])
        _key_distinct(s2, kvecs[2], kvecs[3])
        use_two = ok2 and s2.ok

    iterations = 0

    def result(status, key=None):
        dec = s1.decisions + (s2.decisions if keyed.key_width else 0)
        con = s1.conflicts + (s2.conflicts if keyed.key_width else 0)
        return AttackResult(
            status, key, iterations, time.process_time() - t_cpu, dec, con
        )

    while True:
        if use_two:
            try:
                sat = s2.solve((), deadline=deadline)
            except SolverTimeout:
                return result("timeout")
            if not sat:
                use_two = False
                continue
            pattern = _extract_pattern(s2, pi2, data)
            response = _oracle_response(oracle, pattern, data, oracle_order, po_order)
            iterations += 1
            if cfg.on_iteration:
                cfg.on_iteration("2dip", pattern, response)
            _learn(s2, keyed, pattern, response, binds2)
            _learn(s1, keyed, pattern, response, bind1)
            if not s2.ok:
                use_two = False
            continue
        try:
            sat = s1.solve((diff_lit,), deadline=deadline)
        except SolverTimeout:
            return result("timeout")
        if not sat:
            break
        pattern = _extract_pattern(s1, pi1, data)
        response = _oracle_response(oracle, pattern, data, oracle_order, po_order)
        iterations += 1
        if cfg.on_iteration:
            cfg.on_iteration("dip", pattern, response)
        _learn(s1, keyed, pattern, response, bind1)

    try:
        if not s1.solve((), deadline=deadline):
            raise AttackError("no key is consistent with the learned constraints")
    except SolverTimeout:
        return result("timeout")
    key = Key(tuple(1 if s1.model_value(v) else 0 for v in key_1a))
    cex = verify_key(keyed, key, oracle.netlist,
                     samples=cfg.verify_samples, seed=cfg.seed)
    if cex is not None:
        raise AttackError(f"extracted key fails verification on {cex}")
    return result("solved", key)


def verify_key(keyed: KeyedNetlist, key: Key, secret: Netlist,
               samples=10000, seed=0, conflict_budget=2_000_000):
    """None if the keyed circuit under `key` matches the secret netlist,
    else a counterexample pattern (in the secret netlist's input order).

    Exhaustive for up to 20 inputs; otherwise a SAT miter with the key bits
    fixed (UNSAT means equivalent), with a random-pattern fallback if the
    solver exceeds its conflict budget.
    """
    if key.width != keyed.key_width:
        raise InterfaceError(f"key width {key.width} != {keyed.key_width}")
    data = keyed.data_inputs
    if set(data) != set(secret.pi_names) or set(keyed.circuit.po_names) != set(
        secret.po_names
    ):
        raise InterfaceError("keyed/secret interfaces differ")
    npi = len(secret.pi_names)

    # simulation pass: exhaustive (and conclusive) up to 20 inputs, else a
    # cheap random prefilter before the miter proof
    if npi <= 20:
        width = 1 << npi
        cols = dict(zip(secret.pi_names, exhaustive_pi_words(npi)))
    else:
        width = samples
        cols = dict(zip(secret.pi_names, random_pi_words(npi, samples, seed)))
    mask = (1 << width) - 1
    key_cols = {nm: (mask if b else 0) for nm, b in zip(keyed.key_names, key.bits)}
    got = outputs_by_name(keyed.circuit, {**cols, **key_cols}, width)
    want = outputs_by_name(secret, cols, width)
    diff = 0
    for po in secret.po_names:
        diff |= got[po] ^ want[po]
    if diff:
        j = (diff & -diff).bit_length() - 1
        return tuple((cols[nm] >> j) & 1 for nm in secret.pi_names)
    if npi <= 20:
        return None

    # >20 inputs and random simulation found nothing: prove it with a miter
    s = SatSolver()
    pi_vars = {nm: s.new_var() for nm in secret.pi_names}
    key_bind = {nm: bool(b) for nm, b in zip(keyed.key_names, key.bits)}
    pos_k = _encode_copy(s, keyed.circuit, pi_vars, key_bind)
    pos_s = _encode_copy(s, secret, pi_vars, {})
    po_index = {nm: i for i, nm in enumerate(keyed.circuit.po_names)}
    diffs = []
    for i, nm in enumerate(secret.po_names):
        d = encode_gate(
            "XOR", [pos_k[po_index[nm]], pos_s[i]], s.new_var, s.add_clause
        )
        diffs.append(d)
    lits = [d for d in diffs if not isinstance(d, bool)]
    if any(d is True for d in diffs):
        pass  # trivially different somewhere; solver will find the pattern
    elif not lits:
        return None
    else:
        s.add_clause(lits)
    try:
        sat = s.solve((), conflict_budget=conflict_budget)
    except SolverTimeout:
        return None  # random fallback above found no difference
    if not sat:
        return None
    return tuple(1 if s.model_value(pi_vars[nm]) else 0 for nm in secret.pi_names)
