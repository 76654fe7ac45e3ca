"""Cross-document merging of event mentions into nodes and lifting of
mention-level relation predictions into frequency-weighted edges.

Frequencies count documents, not mentions: a key appearing five times in one
document contributes one. Keys whose argument signatures are compatible under
the wildcard rule (a role typed on only one side matches anything) are merged
transitively with union-find, smallest key as representative, so the result
does not depend on input order.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable

from .core import (
    EventKey,
    ExtractionBundle,
    InductionConfig,
    canonical_event_key,
    keys_match,
)


@dataclass(frozen=True)
class EventNode:
    """A cross-document event: canonical key, its supporting documents, and
    the observed argument fillers per role."""

    key: EventKey
    display_label: str
    support_docs: frozenset[str]
    frequency: int
    argument_profile: tuple[tuple[str, tuple[tuple[str, str, int], ...]], ...]
    # per role: ((nerType, headText, count), ...) sorted by (ner, head)

    def to_json_obj(self) -> dict:
        return {
            "key": self.key.to_json_obj(),
            "displayLabel": self.display_label,
            "supportDocs": sorted(self.support_docs),
            "frequency": self.frequency,
            "argumentProfile": {
                role: [[ner, head, count] for ner, head, count in fillers]
                for role, fillers in self.argument_profile
            },
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EventNode":
        profile = tuple(
            (role, tuple((str(n), str(h), int(c)) for n, h, c in fillers))
            for role, fillers in sorted(obj["argumentProfile"].items())
        )
        return cls(
            key=EventKey.from_json_obj(obj["key"]),
            display_label=str(obj["displayLabel"]),
            support_docs=frozenset(str(d) for d in obj["supportDocs"]),
            frequency=int(obj["frequency"]),
            argument_profile=profile,
        )


@dataclass(frozen=True)
class TemporalEdge:
    source: EventKey
    target: EventKey
    label: str  # BEFORE | EQUAL
    support_docs: frozenset[str]

    def to_json_obj(self) -> dict:
        return {
            "source": self.source.to_json_obj(),
            "target": self.target.to_json_obj(),
            "label": self.label,
            "supportDocs": sorted(self.support_docs),
        }


@dataclass(frozen=True)
class HierEdge:
    parent: EventKey
    child: EventKey
    support_docs: frozenset[str]

    def to_json_obj(self) -> dict:
        return {
            "parent": self.parent.to_json_obj(),
            "child": self.child.to_json_obj(),
            "supportDocs": sorted(self.support_docs),
        }


@dataclass(frozen=True)
class CorefDirective:
    """Instruction to union two nodes; keep is the smaller key."""

    keep: EventKey
    absorb: EventKey
    support_docs: frozenset[str]


@dataclass(frozen=True)
class RelationAggregate:
    temporal_edges: tuple[TemporalEdge, ...]
    hier_edges: tuple[HierEdge, ...]
    coref_directives: tuple[CorefDirective, ...]
    nodes: tuple[EventNode, ...]  # node list after coref unioning


@dataclass(frozen=True)
class StepList:
    """Ordered steps parsed from one steps-genre document."""

    document_id: str
    steps: tuple[str, ...]


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[EventKey, EventKey] = {}

    def add(self, key: EventKey) -> None:
        self.parent.setdefault(key, key)

    def find(self, key: EventKey) -> EventKey:
        root = key
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[key] != root:
            self.parent[key], key = root, self.parent[key]
        return root

    def union(self, a: EventKey, b: EventKey) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        keep, absorb = (ra, rb) if ra <= rb else (rb, ra)
        self.parent[absorb] = keep


def _canonical_keys(bundles: Iterable[ExtractionBundle]) -> dict[tuple[str, str], EventKey]:
    """Map (documentId, mentionId) to its merged canonical key.

    Literal per-mention keys are grouped with union-find under the wildcard
    compatibility relation; each group's lexicographically smallest key
    represents it.
    """
    literal: dict[tuple[str, str], EventKey] = {}
    for bundle in bundles:
        mentions = bundle.events
        for mention in mentions:
            key = canonical_event_key(mention, bundle.coref_clusters, mentions)
            literal[(bundle.document.id, mention.id)] = key

    uf = _UnionFind()
    by_lemma: dict[str, list[EventKey]] = defaultdict(list)
    for key in sorted(set(literal.values())):
        uf.add(key)
        by_lemma[key.lemma].append(key)
    for keys in by_lemma.values():
        for i, a in enumerate(keys):
            for b in keys[i + 1 :]:
                if keys_match(a, b):
                    uf.union(a, b)

    return {ref: uf.find(key) for ref, key in literal.items()}


def _display_label(key: EventKey, profile: dict[str, Counter]) -> str:
    parts = []
    for role in sorted(profile):
        heads: Counter = Counter()
        for (_ner, head), count in profile[role].items():
            heads[head] += count
        head, _ = min(heads.items(), key=lambda kv: (-kv[1], kv[0]))
        parts.append(f"{role}:{head}")
    return key.lemma if not parts else f"{key.lemma} [{', '.join(parts)}]"


def _freeze_profile(profile: dict[str, Counter]) -> tuple:
    return tuple(
        (role, tuple((ner, head, count) for (ner, head), count in sorted(profile[role].items())))
        for role in sorted(profile)
    )


def merge_events(bundles: list[ExtractionBundle], config: InductionConfig) -> list[EventNode]:
    """Group mentions by canonical key across documents and keep nodes seen in
    at least min_event_docs distinct documents, sorted by (frequency desc, key)."""
    key_of = _canonical_keys(bundles)
    support: dict[EventKey, set[str]] = defaultdict(set)
    profiles: dict[EventKey, dict[str, Counter]] = defaultdict(lambda: defaultdict(Counter))
    for bundle in bundles:
        doc_id = bundle.document.id
        for mention in bundle.events:
            key = key_of[(doc_id, mention.id)]
            support[key].add(doc_id)
            for arg in mention.arguments:
                profiles[key][arg.role][(arg.ner_type, arg.head_text)] += 1

    nodes = [
        EventNode(
            key=key,
            display_label=_display_label(key, profiles[key]),
            support_docs=frozenset(docs),
            frequency=len(docs),
            argument_profile=_freeze_profile(profiles[key]),
        )
        for key, docs in support.items()
        if len(docs) >= config.min_event_docs
    ]
    nodes.sort(key=lambda n: (-n.frequency, n.key))
    return nodes


def _merge_nodes(a: EventNode, b: EventNode, keep_key: EventKey) -> EventNode:
    profile: dict[str, Counter] = defaultdict(Counter)
    for node in (a, b):
        for role, fillers in node.argument_profile:
            for ner, head, count in fillers:
                profile[role][(ner, head)] += count
    docs = a.support_docs | b.support_docs
    return EventNode(
        key=keep_key,
        display_label=_display_label(keep_key, profile),
        support_docs=frozenset(docs),
        frequency=len(docs),
        argument_profile=_freeze_profile(profile),
    )


def aggregate_relations(
    bundles: list[ExtractionBundle],
    nodes: list[EventNode],
    config: InductionConfig,
) -> RelationAggregate:
    """Lift mention-level predictions to node-level edges and apply thresholds.

    AFTER flips into BEFORE, CHILD-PARENT into PARENT-CHILD, VAGUE and NOREL
    are dropped. Edge support counts documents. Cross-node COREF directives
    above the coref/hier threshold union their two nodes (smaller key wins)
    before anything is returned.
    """
    key_of = _canonical_keys(bundles)
    surviving = {n.key for n in nodes}

    temporal: dict[tuple[EventKey, EventKey, str], set[str]] = defaultdict(set)
    hier: dict[tuple[EventKey, EventKey], set[str]] = defaultdict(set)
    coref: dict[tuple[EventKey, EventKey], set[str]] = defaultdict(set)

    for bundle in bundles:
        doc_id = bundle.document.id
        for pred in bundle.temporal_preds:
            if pred.confidence < config.min_confidence:
                continue
            src = key_of.get((doc_id, pred.source_mention_id))
            tgt = key_of.get((doc_id, pred.target_mention_id))
            if src is None or tgt is None or src == tgt:
                continue
            if pred.label == "BEFORE":
                temporal[(src, tgt, "BEFORE")].add(doc_id)
            elif pred.label == "AFTER":
                temporal[(tgt, src, "BEFORE")].add(doc_id)
            elif pred.label == "EQUAL":
                lo, hi = sorted((src, tgt))
                temporal[(lo, hi, "EQUAL")].add(doc_id)
        for pred in bundle.hier_preds:
            if pred.confidence < config.min_confidence:
                continue
            src = key_of.get((doc_id, pred.source_mention_id))
            tgt = key_of.get((doc_id, pred.target_mention_id))
            if src is None or tgt is None or src == tgt:
                continue
            if pred.label == "PARENT-CHILD":
                hier[(src, tgt)].add(doc_id)
            elif pred.label == "CHILD-PARENT":
                hier[(tgt, src)].add(doc_id)
            elif pred.label == "COREF":
                lo, hi = sorted((src, tgt))
                coref[(lo, hi)].add(doc_id)

    temporal_edges = [
        TemporalEdge(s, t, label, frozenset(docs))
        for (s, t, label), docs in temporal.items()
        if len(docs) >= config.min_temporal_docs and s in surviving and t in surviving
    ]
    hier_edges = [
        HierEdge(p, c, frozenset(docs))
        for (p, c), docs in hier.items()
        if len(docs) >= config.min_coref_hier_docs and p in surviving and c in surviving
    ]
    directives = [
        CorefDirective(lo, hi, frozenset(docs))
        for (lo, hi), docs in sorted(coref.items())
        if len(docs) >= config.min_coref_hier_docs and lo in surviving and hi in surviving
    ]

    # Union coref-merged nodes; directive order cannot matter because the
    # union-find representative is always the smallest key of the class.
    uf = _UnionFind()
    for node in nodes:
        uf.add(node.key)
    for d in directives:
        uf.union(d.keep, d.absorb)

    merged: dict[EventKey, EventNode] = {}
    for node in sorted(nodes, key=lambda n: n.key):
        root = uf.find(node.key)
        merged[root] = node if root not in merged else _merge_nodes(merged[root], node, root)
    out_nodes = sorted(merged.values(), key=lambda n: (-n.frequency, n.key))

    def remap_temporal(edges: list[TemporalEdge]) -> list[TemporalEdge]:
        acc: dict[tuple[EventKey, EventKey, str], set[str]] = defaultdict(set)
        for e in edges:
            s, t = uf.find(e.source), uf.find(e.target)
            if s == t:
                continue
            if e.label == "EQUAL":
                s, t = sorted((s, t))
            acc[(s, t, e.label)].update(e.support_docs)
        return [TemporalEdge(s, t, label, frozenset(d)) for (s, t, label), d in acc.items()]

    def remap_hier(edges: list[HierEdge]) -> list[HierEdge]:
        acc: dict[tuple[EventKey, EventKey], set[str]] = defaultdict(set)
        for e in edges:
            p, c = uf.find(e.parent), uf.find(e.child)
            if p == c:
                continue
            acc[(p, c)].update(e.support_docs)
        return [HierEdge(p, c, frozenset(d)) for (p, c), d in acc.items()]

    temporal_out = sorted(remap_temporal(temporal_edges), key=lambda e: (e.source, e.target, e.label))
    hier_out = sorted(remap_hier(hier_edges), key=lambda e: (e.parent, e.child))
    return RelationAggregate(
        temporal_edges=tuple(temporal_out),
        hier_edges=tuple(hier_out),
        coref_directives=tuple(directives),
        nodes=tuple(out_nodes),
    )


def default_step_trigger(step: str) -> str | None:
    """First alphabetic word, lowercased. Generated steps lead with an
    imperative verb, which is already its own lemma."""
    for token in step.split():
        word = "".join(ch for ch in token if ch.isalpha())
        if word:
            return word.lower()
    return None


def apply_direct_steps(
    step_lists: list[StepList],
    nodes: list[EventNode],
    edges: list[TemporalEdge],
    trigger_fn: Callable[[str], str | None] = default_step_trigger,
) -> list[TemporalEdge]:
    """Add BEFORE support between consecutive steps that map onto surviving
    nodes; unmapped steps are skipped.

    A step maps to the node whose key lemma equals the extracted trigger (or
    whose lemma's first word does), preferring higher frequency then smaller
    key.
    """
    by_exact: dict[str, EventKey] = {}
    by_first_word: dict[str, EventKey] = {}
    # Worst-to-best iteration so the best candidate ends up in the map.
    for node in sorted(nodes, key=lambda n: (-n.frequency, n.key), reverse=True):
        lemma = node.key.lemma
        by_exact[lemma] = node.key
        first_word = lemma.split()[0] if lemma.split() else lemma
        by_first_word[first_word] = node.key

    support: dict[tuple[EventKey, EventKey, str], set[str]] = defaultdict(set)
    for edge in edges:
        support[(edge.source, edge.target, edge.label)].update(edge.support_docs)

    for step_list in step_lists:
        mapped: list[EventKey | None] = []
        for step in step_list.steps:
            trigger = trigger_fn(step)
            if trigger is None:
                mapped.append(None)
            else:
                mapped.append(by_exact.get(trigger, by_first_word.get(trigger)))
        for a, b in zip(mapped, mapped[1:]):
            if a is None or b is None or a == b:
                continue
            support[(a, b, "BEFORE")].add(step_list.document_id)

    out = [TemporalEdge(s, t, label, frozenset(d)) for (s, t, label), d in support.items()]
    out.sort(key=lambda e: (e.source, e.target, e.label))
    return out
