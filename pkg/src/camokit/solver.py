"""Incremental CDCL SAT solver: watched literals, VSIDS, assumptions.

Literals are nonzero signed ints over 1-based variables. The solver
supports clause addition between solves, solving under assumptions, and
model extraction, which is all the attack loop depends on. Search is
deterministic for a fixed clause/assumption sequence.
"""

from __future__ import annotations

import time
from heapq import heappush, heappop


class SolverTimeout(Exception):
    """Raised when a solve call exceeds its deadline."""


def _luby(x):
    # Luby restart sequence value for index x (0-based), base 2
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) // 2
        seq -= 1
        x = x % size
    return 1 << seq


def _widx(lit):
    # encoded watch-list index: positive lits even, negative odd
    return lit + lit if lit > 0 else 1 - lit - lit


class SatSolver:
    def __init__(self):
        self.nvars = 0
        self.assign = [0]  # var -> 0 unknown, 1 true, -1 false (index 0 unused)
        self.level = [0]
        self.reason = [None]
        self.activity = [0.0]
        self.phase = [False]
        self.watches = [[], []]  # indexed by encoded literal, clauses len >= 3
        self.bins = [[], []]  # indexed by encoded literal: implied literals
        self.clauses = []
        self.learnts = []
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.heap = []
        self.heap_count = [0]
        self.var_inc = 1.0
        self.ok = True
        self.decisions = 0
        self.conflicts = 0
        self.propagations = 0
        self._model = None

    # -- variables ---------------------------------------------------------

    def new_var(self):
        self.nvars += 1
        self.assign.append(0)
        self.level.append(0)
        self.reason.append(None)
        self.activity.append(0.0)
        self.phase.append(False)
        self.watches.append([])
        self.watches.append([])
        self.bins.append([])
        self.bins.append([])
        self.heap_count.append(1)
        heappush(self.heap, (0.0, self.nvars))
        return self.nvars

    def add_vars(self, count):
        first = self.nvars + 1
        for _ in range(count):
            self.new_var()
        return first

    def _value(self, lit):
        return self.assign[lit] if lit > 0 else -self.assign[-lit]

    def _heap_insert(self, v):
        if self.heap_count[v] < 2:
            self.heap_count[v] += 1
            heappush(self.heap, (-self.activity[v], v))

    # -- clause management ---------------------------------------------------

    def add_clause(self, lits):
        """Add a clause; returns False if the formula is now trivially UNSAT."""
        if not self.ok:
            return False
        assert not self.trail_lim, "clauses may only be added at level 0"
        seen = set()
        out = []
        for l in lits:
            if -l in seen:
                return True  # tautology
            if l in seen:
                continue
            v = self._value(l)
            if v == 1:
                return True  # already satisfied at level 0
            if v == -1:
                continue  # falsified at level 0, literal dropped
            seen.add(l)
            out.append(l)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            lit = out[0]
            self.assign[abs(lit)] = 1 if lit > 0 else -1
            self.level[abs(lit)] = 0
            self.trail.append(lit)
            if self._propagate() is not None:
                self.ok = False
                return False
            return True
        if len(out) == 2:
            a, b = out
            self.bins[_widx(-a)].append(b)
            self.bins[_widx(-b)].append(a)
            return True
        self.clauses.append(out)
        self.watches[_widx(out[0])].append(out)
        self.watches[_widx(out[1])].append(out)
        return True

    # -- trail -----------------------------------------------------------------

    def _propagate(self):
        assign = self.assign
        level = self.level
        reason = self.reason
        watches = self.watches
        bins = self.bins
        trail = self.trail
        qhead = self.qhead
        lvl = len(self.trail_lim)
        nprops = 0
        confl = None
        while qhead < len(trail):
            p = trail[qhead]
            qhead += 1
            nprops += 1
            fals = -p
            pidx = (p + p) if p > 0 else (1 - p - p)
            for q in bins[pidx]:
                qv = assign[q] if q > 0 else -assign[-q]
                if qv == 1:
                    continue
                if qv == -1:
                    confl = [q, fals]
                    break
                v = q if q > 0 else -q
                assign[v] = 1 if q > 0 else -1
                level[v] = lvl
                reason[v] = [q, fals]
                trail.append(q)
            if confl is not None:
                break
            fidx = (p + p + 1) if p > 0 else (-p - p)
            ws = watches[fidx]
            if not ws:
                continue
            keep = []
            broke = -1
            for ci in range(len(ws)):
                cl = ws[ci]
                if cl[0] == fals:
                    cl[0] = cl[1]
                    cl[1] = fals
                first = cl[0]
                fv = assign[first] if first > 0 else -assign[-first]
                if fv == 1:
                    keep.append(cl)
                    continue
                moved = False
                for j in range(2, len(cl)):
                    l = cl[j]
                    if (assign[l] if l > 0 else -assign[-l]) != -1:
                        cl[1] = l
                        cl[j] = fals
                        watches[(l + l) if l > 0 else (1 - l - l)].append(cl)
                        moved = True
                        break
                if moved:
                    continue
                keep.append(cl)
                if fv == -1:  # conflict
                    keep.extend(ws[ci + 1:])
                    confl = cl
                    qhead = len(trail)
                    broke = ci
                    break
                # unit: enqueue first
                v = first if first > 0 else -first
                assign[v] = 1 if first > 0 else -1
                level[v] = lvl
                reason[v] = cl
                trail.append(first)
            if len(keep) != len(ws):
                watches[fidx] = keep
            elif broke >= 0:
                watches[fidx] = keep
            if confl is not None:
                break
        self.qhead = len(trail) if confl is not None else qhead
        self.propagations += nprops
        return confl

    # -- conflict analysis --------------------------------------------------

    def _analyze(self, confl):
        learnt = []
        seen = bytearray(self.nvars + 1)
        activity = self.activity
        level = self.level
        var_inc = self.var_inc
        counter = 0
        p = 0
        index = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        while True:
            for q in confl:
                if q == p:
                    continue
                v = q if q > 0 else -q
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    activity[v] += var_inc
                    self._heap_insert(v)
                    if level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while True:
                p = self.trail[index]
                index -= 1
                if seen[p if p > 0 else -p]:
                    break
            counter -= 1
            seen[p if p > 0 else -p] = 0
            if counter == 0:
                break
            confl = self.reason[p if p > 0 else -p]
        learnt.insert(0, -p)
        if activity[abs(p)] > 1e100:
            self._rescale_activity()

        # cheap minimization: drop literals implied by the rest
        marked = set(l if l > 0 else -l for l in learnt)
        out = [learnt[0]]
        for l in learnt[1:]:
            r = self.reason[l if l > 0 else -l]
            if r is None:
                out.append(l)
                continue
            if all(
                (q if q > 0 else -q) in marked or self.level[q if q > 0 else -q] == 0
                for q in r
                if q != -l
            ):
                continue
            out.append(l)
        learnt = out

        if len(learnt) == 1:
            bt = 0
        else:
            max_i = 1
            for i in range(2, len(learnt)):
                if self.level[abs(learnt[i])] > self.level[abs(learnt[max_i])]:
                    max_i = i
            learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
            bt = self.level[abs(learnt[1])]
        return learnt, bt

    def _rescale_activity(self):
        for i in range(1, self.nvars + 1):
            self.activity[i] *= 1e-100
        self.var_inc *= 1e-100

    def _backtrack(self, lvl):
        if len(self.trail_lim) <= lvl:
            return
        limit = self.trail_lim[lvl]
        trail = self.trail
        assign = self.assign
        phase = self.phase
        reason = self.reason
        for i in range(len(trail) - 1, limit - 1, -1):
            lit = trail[i]
            v = lit if lit > 0 else -lit
            phase[v] = lit > 0
            assign[v] = 0
            reason[v] = None
            if self.heap_count[v] == 0:
                self.heap_count[v] = 1
                heappush(self.heap, (-self.activity[v], v))
        del trail[limit:]
        del self.trail_lim[lvl:]
        self.qhead = len(trail)

    def _pick_branch(self):
        heap = self.heap
        assign = self.assign
        activity = self.activity
        count = self.heap_count
        while heap:
            act, v = heappop(heap)
            count[v] -= 1
            if assign[v] == 0:
                if -act != activity[v]:
                    # stale priority: reinsert with the current one
                    if count[v] < 2:
                        count[v] += 1
                        heappush(heap, (-activity[v], v))
                    continue
                return v
        for v in range(1, self.nvars + 1):
            if assign[v] == 0:
                return v
        return None

    def _reduce_db(self):
        # keep short clauses and reasons; drop the longest half of the rest
        self.learnts.sort(key=len)
        half = len(self.learnts) // 2
        locked = set()
        for v in range(1, self.nvars + 1):
            r = self.reason[v]
            if r is not None:
                locked.add(id(r))
        keep, dropped = [], set()
        for i, cl in enumerate(self.learnts):
            if len(cl) <= 2 or i < half or id(cl) in locked:
                keep.append(cl)
            else:
                dropped.add(id(cl))
        if not dropped:
            return
        for idx in range(len(self.watches)):
            ws = self.watches[idx]
            if ws:
                self.watches[idx] = [c for c in ws if id(c) not in dropped]
        self.learnts = keep

    # -- main search ------------------------------------------------------------

    def solve(self, assumptions=(), deadline=None, conflict_budget=None):
        """Returns True/False; raises SolverTimeout past wall-clock deadline."""
        if not self.ok:
            return False
        self._model = None
        assumptions = list(assumptions)
        conf_at_start = self.conflicts
        restart = 0
        limit = _luby(restart) * 128
        conflicts_here = 0

        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                conflicts_here += 1
                if not self.trail_lim:
                    self.ok = False
                    self._backtrack(0)
                    return False
                learnt, bt = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    v = self._value(learnt[0])
                    if v == -1:
                        self.ok = False
                        return False
                    if v == 0:
                        lit = learnt[0]
                        var = abs(lit)
                        self.assign[var] = 1 if lit > 0 else -1
                        self.level[var] = len(self.trail_lim)
                        self.reason[var] = None
                        self.trail.append(lit)
                elif len(learnt) == 2:
                    a, b = learnt
                    self.bins[_widx(-a)].append(b)
                    self.bins[_widx(-b)].append(a)
                    var = abs(a)
                    self.assign[var] = 1 if a > 0 else -1
                    self.level[var] = len(self.trail_lim)
                    self.reason[var] = learnt
                    self.trail.append(a)
                else:
                    self.learnts.append(learnt)
                    self.watches[_widx(learnt[0])].append(learnt)
                    self.watches[_widx(learnt[1])].append(learnt)
                    lit = learnt[0]
                    var = abs(lit)
                    self.assign[var] = 1 if lit > 0 else -1
                    self.level[var] = len(self.trail_lim)
                    self.reason[var] = learnt
                    self.trail.append(lit)
                self.var_inc /= 0.95
                if self.var_inc > 1e100:
                    self._rescale_activity()
                if self.conflicts % 256 == 0:
                    if deadline is not None and time.monotonic() > deadline:
                        self._backtrack(0)
                        raise SolverTimeout()
                if conflict_budget is not None and (
                    self.conflicts - conf_at_start > conflict_budget
                ):
                    self._backtrack(0)
                    raise SolverTimeout()
                if conflicts_here > limit:
                    conflicts_here = 0
                    restart += 1
                    limit = _luby(restart) * 128
                    self._backtrack(len(assumptions))
                if len(self.learnts) > 8000:
                    self._reduce_db()
                continue

            dl = len(self.trail_lim)
            if dl < len(assumptions):
                a = assumptions[dl]
                v = self._value(a)
                if v == 1:
                    self.trail_lim.append(len(self.trail))
                    continue
                if v == -1:
                    self._backtrack(0)
                    return False
                self.trail_lim.append(len(self.trail))
                var = abs(a)
                self.assign[var] = 1 if a > 0 else -1
                self.level[var] = len(self.trail_lim)
                self.reason[var] = None
                self.trail.append(a)
                continue

            v = self._pick_branch()
            if v is None:
                self._model = self.assign[:]
                self._backtrack(0)
                return True
            self.decisions += 1
            self.trail_lim.append(len(self.trail))
            self.assign[v] = 1 if self.phase[v] else -1
            self.level[v] = len(self.trail_lim)
            self.trail.append(v if self.phase[v] else -v)

    def model_value(self, lit):
        """Truth value of a literal in the last model."""
        if self._model is None:
            raise RuntimeError("no model available")
        val = self._model[abs(lit)] == 1
        return val if lit > 0 else not val

    def stats(self):
        return {
            "decisions": self.decisions,
            "conflicts": self.conflicts,
            "propagations": self.propagations,
        }
