"""Call graph with strongly connected components in callee-first order."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .ast import Call, Program, iter_stmts


@dataclass(frozen=True)
class CallGraph:
    nodes: Tuple[str, ...]
    edges: Tuple[Tuple[str, str], ...]
    sccs: Tuple[Tuple[str, ...], ...]

    def callees(self, name: str) -> Tuple[str, ...]:
        return tuple(b for a, b in self.edges if a == name)

    def scc_of(self, name: str) -> Tuple[str, ...]:
        for scc in self.sccs:
            if name in scc:
                return scc
        raise KeyError(name)

    def is_recursive(self, caller: str, callee: str) -> bool:
        return callee in self.scc_of(caller)


def build_call_graph(p: Program) -> CallGraph:
    nodes = tuple(f.name for f in p.functions)
    known = set(nodes)
    succ: Dict[str, List[str]] = {n: [] for n in nodes}
    for f in p.functions:
        for s in iter_stmts(f.body):
            if isinstance(s, Call) and s.func in known and s.func not in succ[f.name]:
                succ[f.name].append(s.func)
    edges = tuple((a, b) for a in nodes for b in succ[a])
    return CallGraph(nodes, edges, tuple(_tarjan(nodes, succ)))


def _tarjan(nodes, succ) -> List[Tuple[str, ...]]:
    """Tarjan's algorithm; emits SCCs in reverse topological order (callees first)."""
    index: Dict[str, int] = {}
    low: Dict[str, int] = {}
    on_stack: set = set()
    stack: List[str] = []
    out: List[Tuple[str, ...]] = []
    counter = [0]
    order = {n: i for i, n in enumerate(nodes)}

    def visit(v):
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in succ[v]:
            if w not in index:
                visit(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.append(w)
                if w == v:
                    break
            out.append(tuple(sorted(comp, key=order.get)))

    for n in nodes:
        if n not in index:
            visit(n)
    return out
