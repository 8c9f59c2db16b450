#!/usr/bin/env python3
"""Generate the deterministic random benchmarks bundled with the package.

Circuits are random DAGs with a recency-biased fan-in distribution and an
adjustable XOR-richness; outputs are sink gates, and gates outside the
output cone are pruned so nearly all camouflaged logic is observable.

Run from the repository root:  python3 tools/gen_random_bench.py
"""

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from camokit.bench import save_bench
from camokit.netlist import NetlistBuilder

FUNCS_STD = ["AND", "NAND", "OR", "NOR"]
FUNCS_XOR = ["XOR", "XNOR"]


def gen(name, npis, npos, ngates, seed, xor_frac=0.35, inv_frac=0.12):
    rng = random.Random(seed)
    raw = int(ngates * 1.6)
    nets = [f"in{i}" for i in range(npis)]
    gates = {}  # out -> (func, ins)
    fanout = {nm: 0 for nm in nets}
    for i in range(raw):
        out = f"g{i}"
        r = rng.random()
        if r < inv_frac:
            func = "INV" if rng.random() < 0.7 else "BUF"
            k = 1
        elif r < inv_frac + xor_frac:
            func = rng.choice(FUNCS_XOR)
            k = 2
        else:
            func = rng.choice(FUNCS_STD)
            k = 2
        ins = []
        while len(ins) < k:
            # recency bias keeps the DAG deep instead of shallow and wide
            span = min(len(nets), 24)
            if rng.random() < 0.7:
                cand = nets[len(nets) - 1 - rng.randrange(span)]
            else:
                cand = nets[rng.randrange(len(nets))]
            if cand not in ins:
                ins.append(cand)
        gates[out] = (func, tuple(ins))
        for nm in ins:
            fanout[nm] += 1
        fanout[out] = 0
        nets.append(out)

    sinks = [nm for nm in gates if fanout[nm] == 0]
    rng.shuffle(sinks)
    pos = sorted(sinks[:npos])
    # keep only the output cone
    keep = set()
    stack = list(pos)
    while stack:
        nm = stack.pop()
        if nm in keep or nm not in gates:
            continue
        keep.add(nm)
        stack.extend(gates[nm][1])
    b = NetlistBuilder(name)
    for i in range(npis):
        b.add_input(f"in{i}")
    order = [nm for nm in nets if nm in keep]
    for nm in order:
        func, ins = gates[nm]
        b.add_gate(func, ins, nm)
    for nm in pos:
        b.add_output(nm)
    n = b.build()
    return n


SPECS = [
    # (name, PIs, POs, approx gates, seed)
    ("rnd40", 8, 4, 40, 101),
    ("rnd150", 12, 6, 150, 202),
    ("rnd300", 14, 8, 300, 303),
    ("rnd600", 16, 8, 600, 404),
]


def main():
    out_dir = Path(__file__).resolve().parent.parent / "src/camokit/data/benches"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, npis, npos, ngates, seed in SPECS:
        n = gen(name, npis, npos, ngates, seed)
        save_bench(n, out_dir / f"{name}.bench")
        print(name, n.stats())


if __name__ == "__main__":
    main()
