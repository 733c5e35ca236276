"""Problematic sub-graph descriptions and their decoder graphs.

An absorbing-set graph is the bipartite sub-graph induced by a small set
of variable nodes: its checks, classified by internal degree parity, and
its edges.  The decoder graph attaches one auxiliary external-input edge
to selected checks; running the quantized decoder on it with a schedule
of external inputs determines which channel patterns are undecodable.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

from .decoder import msa_check_update, spa_check_update
from .quantizer import Quantizer


class AbsorbingSetError(ValueError):
    pass


class AbsorbingSetGraph:
    """Bipartite sub-graph: ``a`` variables, ``gamma`` checks, edge list."""

    def __init__(self, a: int, edges: list[tuple[int, int]], gamma: int | None = None):
        if a < 1:
            raise AbsorbingSetError("need at least one variable node")
        self.a = a
        self.edges = sorted(set(edges))
        if len(self.edges) != len(edges):
            raise AbsorbingSetError("duplicate edge (multigraphs rejected)")
        checks = {c for _, c in self.edges}
        self.gamma = gamma if gamma is not None else (max(checks) + 1 if checks else 0)
        if checks and (min(checks) < 0 or max(checks) >= self.gamma):
            raise AbsorbingSetError("check index out of range")
        self.check_vars: list[list[int]] = [[] for _ in range(self.gamma)]
        self.var_checks: list[list[int]] = [[] for _ in range(a)]
        for v, c in self.edges:
            if not 0 <= v < a:
                raise AbsorbingSetError(f"variable index {v} out of range")
            self.check_vars[c].append(v)
            self.var_checks[v].append(c)
        for j, vs in enumerate(self.check_vars):
            if not vs:
                raise AbsorbingSetError(f"check {j} is isolated")
        for v, cs in enumerate(self.var_checks):
            if not cs:
                raise AbsorbingSetError(f"variable {v} is isolated")

    @property
    def rho(self) -> list[int]:
        return [len(vs) for vs in self.check_vars]

    @property
    def odd_checks(self) -> list[int]:
        return [j for j, vs in enumerate(self.check_vars) if len(vs) % 2 == 1]

    @property
    def even_checks(self) -> list[int]:
        return [j for j, vs in enumerate(self.check_vars) if len(vs) % 2 == 0]

    @property
    def b(self) -> int:
        return len(self.odd_checks)

    def girth(self) -> int | None:
        """Length of the shortest cycle in the bipartite graph, or None."""
        nv = self.a + self.gamma
        adj: list[list[int]] = [[] for _ in range(nv)]
        for v, c in self.edges:
            adj[v].append(self.a + c)
            adj[self.a + c].append(v)
        best = None
        for root in range(nv):
            dist = [-1] * nv
            parent = [-1] * nv
            dist[root] = 0
            queue = [root]
            while queue:
                nxt = []
                for u in queue:
                    for w in adj[u]:
                        if dist[w] < 0:
                            dist[w] = dist[u] + 1
                            parent[w] = u
                            nxt.append(w)
                        elif w != parent[u]:
                            cyc = dist[u] + dist[w] + 1
                            if best is None or cyc < best:
                                best = cyc
                queue = nxt
        return best

    def __eq__(self, other):
        return (
            isinstance(other, AbsorbingSetGraph)
            and self.a == other.a
            and self.gamma == other.gamma
            and self.edges == other.edges
        )

    def __repr__(self):
        return f"AbsorbingSetGraph(a={self.a}, b={self.b}, gamma={self.gamma})"


@dataclass(frozen=True)
class Classification:
    a: int
    b: int
    gamma: int
    girth: int | None
    is_trapping_set: bool
    is_absorbing_set: bool
    is_elementary_trapping_set: bool
    is_leafless_elementary_trapping_set: bool


def validate(graph: AbsorbingSetGraph) -> Classification:
    """Classify a sub-graph: trapping / absorbing / ETS / LETS parameters."""
    odd = set(graph.odd_checks)
    absorbing = True
    leafless = True
    for v in range(graph.a):
        n_odd = sum(1 for c in graph.var_checks[v] if c in odd)
        n_even = len(graph.var_checks[v]) - n_odd
        if n_even <= n_odd:
            absorbing = False
        if n_even < 2:
            leafless = False
    elementary = all(len(vs) <= 2 for vs in graph.check_vars)
    return Classification(
        a=graph.a,
        b=graph.b,
        gamma=graph.gamma,
        girth=graph.girth(),
        is_trapping_set=True,
        is_absorbing_set=absorbing,
        is_elementary_trapping_set=elementary,
        is_leafless_elementary_trapping_set=elementary and leafless,
    )


@dataclass(frozen=True)
class DecoderGraphDA:
    """An absorbing-set graph plus auxiliary external-input edges.

    ``aux_checks`` lists the checks receiving one external edge each;
    kappa is its length.
    """

    base: AbsorbingSetGraph
    aux_checks: tuple[int, ...]

    @property
    def kappa(self) -> int:
        return len(self.aux_checks)

    def digest_dict(self) -> dict:
        return {
            "a": self.base.a,
            "gamma": self.base.gamma,
            "edges": list(map(list, self.base.edges)),
            "aux_checks": list(self.aux_checks),
        }


def build_decoder_graph(graph: AbsorbingSetGraph, policy="all-checks") -> DecoderGraphDA:
    """Attach auxiliary external edges per policy: every check (default),
    odd-degree checks only, or an explicit check subset."""
    if policy == "all-checks":
        aux = tuple(range(graph.gamma))
    elif policy == "odd-only":
        aux = tuple(graph.odd_checks)
    else:
        if isinstance(policy, str):
            raise AbsorbingSetError(f"unknown policy {policy!r}")
        aux = tuple(sorted(set(policy)))
        for j in aux:
            if not 0 <= j < graph.gamma:
                raise AbsorbingSetError(f"auxiliary check {j} out of range")
    return DecoderGraphDA(base=graph, aux_checks=aux)


def aggregate_external(
    messages: list[int], algorithm: str, quantizer: Quantizer, phi_zero: float = 4.25
) -> int:
    """Fold the external messages entering one check into the single
    auxiliary LLR: sign product with min magnitude (MSA) or the quantized
    phi-domain sum (SPA)."""
    if not messages:
        raise AbsorbingSetError("need at least one external message")
    if algorithm == "msa":
        return msa_check_update(messages, quantizer)
    if algorithm == "spa":
        return spa_check_update(messages, quantizer, phi_zero)
    raise AbsorbingSetError(f"unknown algorithm {algorithm!r}")


def _pair_signature(graph: AbsorbingSetGraph):
    """Per-variable and per-variable-pair check-degree profiles, used to
    prune the automorphism search."""
    deg = graph.rho
    own = [Counter(deg[c] for c in graph.var_checks[v]) for v in range(graph.a)]
    shared = {}
    sets = [set(cs) for cs in graph.var_checks]
    for u in range(graph.a):
        for v in range(u + 1, graph.a):
            shared[(u, v)] = Counter(deg[c] for c in sets[u] & sets[v])
    return own, shared


def _extends(graph: AbsorbingSetGraph, perm: tuple[int, ...]) -> bool:
    """True iff the variable permutation maps the check multiset onto itself."""
    orig = Counter(frozenset(vs) for vs in graph.check_vars)
    mapped = Counter(frozenset(perm[v] for v in vs) for vs in graph.check_vars)
    return orig == mapped


def automorphisms(graph: AbsorbingSetGraph, limit_a: int = 12) -> list[tuple[int, ...]]:
    """All variable-node permutations extending to automorphisms of the
    sub-graph, found by pruned exhaustive search (guarded to a <= 12)."""
    if graph.a > limit_a:
        raise AbsorbingSetError(f"automorphism search guarded to a <= {limit_a}")
    own, shared = _pair_signature(graph)
    a = graph.a
    out = []
    image = [-1] * a
    used = [False] * a

    def key(u, v):
        return (u, v) if u < v else (v, u)

    def backtrack(i):
        if i == a:
            perm = tuple(image)
            if _extends(graph, perm):
                out.append(perm)
            return
        for w in range(a):
            if used[w] or own[w] != own[i]:
                continue
            ok = all(shared[key(i, j)] == shared[key(w, image[j])] for j in range(i))
            if not ok:
                continue
            image[i] = w
            used[w] = True
            backtrack(i + 1)
            used[w] = False
        image[i] = -1

    backtrack(0)
    return out


def is_fully_symmetric(graph: AbsorbingSetGraph) -> bool:
    """True iff every variable transposition extends to an automorphism,
    i.e. the automorphism group is the full symmetric group."""
    for u in range(graph.a):
        for v in range(u + 1, graph.a):
            perm = list(range(graph.a))
            perm[u], perm[v] = v, u
            if not _extends(graph, tuple(perm)):
                return False
    return True


# ---------------------------------------------------------------------------
# plain-text interchange format: header "a b gamma", one line per check


def dumps(graph: AbsorbingSetGraph) -> str:
    lines = [f"{graph.a} {graph.b} {graph.gamma}"]
    for j, vs in enumerate(graph.check_vars):
        lines.append(f"{j}: " + " ".join(str(v) for v in sorted(vs)))
    return "\n".join(lines) + "\n"


def loads(text: str) -> AbsorbingSetGraph:
    a = b = gamma = None
    edges: list[tuple[int, int]] = []
    seen_checks = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if a is None:
            parts = line.split()
            if len(parts) != 3:
                raise AbsorbingSetError(f"line {lineno}: header must be 'a b gamma'")
            try:
                a, b, gamma = map(int, parts)
            except ValueError:
                raise AbsorbingSetError(f"line {lineno}: non-integer header field")
            continue
        if ":" not in line:
            raise AbsorbingSetError(f"line {lineno}: expected 'check: v ...'")
        head, tail = line.split(":", 1)
        try:
            c = int(head)
            vs = [int(x) for x in tail.split()]
        except ValueError:
            raise AbsorbingSetError(f"line {lineno}: non-integer field")
        if c in seen_checks:
            raise AbsorbingSetError(f"line {lineno}: duplicate check {c}")
        seen_checks.add(c)
        if len(set(vs)) != len(vs):
            raise AbsorbingSetError(f"line {lineno}: duplicate edge at check {c}")
        edges.extend((v, c) for v in vs)
    if a is None:
        raise AbsorbingSetError("empty absorbing-set file")
    graph = AbsorbingSetGraph(a, edges, gamma=gamma)
    if graph.b != b:
        raise AbsorbingSetError(f"header b={b} but computed b={graph.b}")
    return graph


def store(graph: AbsorbingSetGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(graph))


def load(path) -> AbsorbingSetGraph:
    with open(path) as fh:
        return loads(fh.read())


# ---------------------------------------------------------------------------
# shipped fixture structures


def _from_pairs(a: int, pairs: list[tuple[int, int]], leaves: list[int]) -> AbsorbingSetGraph:
    edges = []
    c = 0
    for u, v in pairs:
        edges += [(u, c), (v, c)]
        c += 1
    for v in leaves:
        edges.append((v, c))
        c += 1
    return AbsorbingSetGraph(a, edges, gamma=c)


def fixture(name: str) -> AbsorbingSetGraph:
    """Shipped sub-graph fixtures by name.

    as_4_2_g6:  the classic (4,2) absorbing set of (3,K)-regular codes.
    as_6_0_g8:  the (6,0) codeword-support set (complete-bipartite shape).
    as_3_3_g6:  triangle with one degree-1 check per variable.
    as_8_2_g8:  cube-minus-an-edge shape with two degree-1 checks.
    as_9_0_g6:  all-pairs (complete-graph) shape, degree-8 variables.
    """
    if name == "as_4_2_g6":
        pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]
        return _from_pairs(4, pairs, leaves=[2, 3])
    if name == "as_6_0_g8":
        pairs = [(i, j) for i in range(3) for j in range(3, 6)]
        return _from_pairs(6, pairs, leaves=[])
    if name == "as_3_3_g6":
        return _from_pairs(3, [(0, 1), (0, 2), (1, 2)], leaves=[0, 1, 2])
    if name == "as_8_2_g8":
        # 3-cube vertices 0..7 (binary coords), edge 0-1 removed
        cube = []
        for u in range(8):
            for bit in (1, 2, 4):
                v = u ^ bit
                if u < v:
                    cube.append((u, v))
        cube.remove((0, 1))
        return _from_pairs(8, cube, leaves=[0, 1])
    if name == "as_9_0_g6":
        pairs = [(u, v) for u in range(9) for v in range(u + 1, 9)]
        return _from_pairs(9, pairs, leaves=[])
    raise AbsorbingSetError(f"unknown fixture {name!r}")


FIXTURE_NAMES = ["as_4_2_g6", "as_6_0_g8", "as_3_3_g6", "as_8_2_g8", "as_9_0_g6"]


def fixture_text(name: str) -> str:
    """Contents of a shipped .as fixture file."""
    return resources.files("ldpcfloor.fixtures").joinpath(f"{name}.as").read_text()
