"""Maximal transitively supported event chains over BEFORE edges.

A timeline is a sequence of distinct events in which EVERY ordered pair, not
just consecutive ones, is backed by a BEFORE edge. build_timelines explores
the support digraph depth-first; brute_force_timelines enumerates permutations
of subsets outright and exists to pin down the semantics in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations

from .core import EventKey, SchemaForgeError
from .aggregation import TemporalEdge

DEFAULT_CHAIN_CAP = 10_000
BRUTE_FORCE_MAX_EVENTS = 12


class ResourceLimit(SchemaForgeError):
    """Chain exploration exceeded the cap; the input is pathological."""


class TooLarge(SchemaForgeError):
    """Brute-force enumeration is only sane for small event sets."""


@dataclass(frozen=True)
class Timeline:
    events: tuple[EventKey, ...]
    # ((i, j), edge) for every i < j, sorted; the edge witnessing events[i] -> events[j]
    support_witness: tuple[tuple[tuple[int, int], TemporalEdge], ...] = ()

    def witness_for(self, i: int, j: int) -> TemporalEdge | None:
        for (a, b), edge in self.support_witness:
            if (a, b) == (i, j):
                return edge
        return None


def _before_edge_map(edges: list[TemporalEdge]) -> dict[tuple[EventKey, EventKey], TemporalEdge]:
    """BEFORE edges only, duplicates collapsed by unioning their support."""
    merged: dict[tuple[EventKey, EventKey], TemporalEdge] = {}
    for edge in edges:
        if edge.label != "BEFORE":
            continue
        if edge.source == edge.target:
            raise ValueError(f"self-loop on {edge.source}")
        pair = (edge.source, edge.target)
        if pair in merged:
            merged[pair] = TemporalEdge(
                edge.source, edge.target, "BEFORE", merged[pair].support_docs | edge.support_docs
            )
        else:
            merged[pair] = edge
    return merged


def _attach_witness(
    chains: list[tuple[EventKey, ...]],
    edge_map: dict[tuple[EventKey, EventKey], TemporalEdge],
) -> list[Timeline]:
    out = []
    for chain in chains:
        witness = tuple(
            (((i, j), edge_map[(chain[i], chain[j])]))
            for i in range(len(chain))
            for j in range(i + 1, len(chain))
        )
        out.append(Timeline(chain, witness))
    return out


def build_timelines(edges: list[TemporalEdge], cap: int = DEFAULT_CHAIN_CAP) -> list[Timeline]:
    """All maximal fully supported chains, sorted by (length desc, sequence).

    Maximal means no event can be appended, prepended, or inserted anywhere
    without breaking pairwise support. Contradictory edge pairs (both
    directions present) simply seed chains of either orientation. Raises
    ResourceLimit when more than `cap` candidate chains get explored.
    """
    edge_map = _before_edge_map(edges)
    if not edge_map:
        return []
    events = sorted({k for pair in edge_map for k in pair})
    n = len(events)
    index = {k: i for i, k in enumerate(events)}
    succ = [0] * n
    for (src, tgt) in edge_map:
        succ[index[src]] |= 1 << index[tgt]

    emitted: list[tuple[int, ...]] = []

    def extend(chain: list[int], cand: int) -> None:
        if cand == 0:
            emitted.append(tuple(chain))
            if len(emitted) > cap:
                raise ResourceLimit(f"more than {cap} candidate chains")
            return
        rest = cand
        while rest:
            low = rest & -rest
            j = low.bit_length() - 1
            rest ^= low
            chain.append(j)
            extend(chain, cand & succ[j])
            chain.pop()

    for i in range(n):
        extend([i], succ[i])

    def insertable(chain: tuple[int, ...], chain_mask: int, x: int) -> bool:
        k = len(chain)
        a = 0
        while a < k and succ[chain[a]] >> x & 1:
            a += 1
        b = k
        while b > 0 and succ[x] >> chain[b - 1] & 1:
            b -= 1
        return b <= a

    maximal: list[tuple[EventKey, ...]] = []
    for chain in emitted:
        mask = 0
        for i in chain:
            mask |= 1 << i
        if any(not mask >> x & 1 and insertable(chain, mask, x) for x in range(n)):
            continue
        if len(chain) >= 2:
            maximal.append(tuple(events[i] for i in chain))

    maximal = sorted(set(maximal), key=lambda c: (-len(c), c))
    return _attach_witness(maximal, edge_map)


def brute_force_timelines(edges: list[TemporalEdge]) -> list[Timeline]:
    """Oracle: try every permutation of every subset, keep fully supported
    chains, drop any chain that is a proper subsequence of a longer one."""
    edge_map = _before_edge_map(edges)
    if not edge_map:
        return []
    events = sorted({k for pair in edge_map for k in pair})
    n = len(events)
    if n > BRUTE_FORCE_MAX_EVENTS:
        raise TooLarge(f"{n} events exceed the brute-force limit of {BRUTE_FORCE_MAX_EVENTS}")
    index = {k: i for i, k in enumerate(events)}
    succ: list[set[int]] = [set() for _ in range(n)]
    linked: list[set[int]] = [set() for _ in range(n)]
    for (src, tgt) in edge_map:
        i, j = index[src], index[tgt]
        succ[i].add(j)
        linked[i].add(j)
        linked[j].add(i)

    def chain_ok(seq: tuple[int, ...]) -> bool:
        for i in range(len(seq) - 1):
            si = succ[seq[i]]
            for j in range(i + 1, len(seq)):
                if seq[j] not in si:
                    return False
        return True

    valid: list[tuple[int, ...]] = []
    for k in range(2, n + 1):
        for subset in combinations(range(n), k):
            # A valid chain needs every pair supported in some direction, so
            # subsets with an unlinked pair cannot yield one.
            if any(b not in linked[a] for a, b in combinations(subset, 2)):
                continue
            for perm in permutations(subset):
                if chain_ok(perm):
                    valid.append(perm)

    def is_subsequence(short: tuple[int, ...], long: tuple[int, ...]) -> bool:
        it = iter(long)
        return all(x in it for x in short)

    valid.sort(key=len, reverse=True)
    kept: list[tuple[int, ...]] = []
    for chain in valid:
        if not any(len(m) > len(chain) and is_subsequence(chain, m) for m in kept):
            kept.append(chain)

    result = sorted(
        {tuple(events[i] for i in chain) for chain in kept},
        key=lambda c: (-len(c), c),
    )
    return _attach_witness(result, edge_map)
