"""Shared domain types, the extraction-bundle interchange format, canonical
event identity, and bundle validation.

All types are immutable after construction; every operation here is a pure
function, so values can be shared freely across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple

GENRES = ("news", "howto", "steps")
TEMPORAL_LABELS = ("BEFORE", "AFTER", "EQUAL", "VAGUE")
HIER_LABELS = ("PARENT-CHILD", "CHILD-PARENT", "COREF", "NOREL")
ABSENT = "ABSENT"

# PropBank/NomBank-flavored default; callers with a different annotation
# scheme pass their own vocabulary to validate_bundle.
DEFAULT_ROLE_VOCABULARY = frozenset(
    {
        "ARG0", "ARG1", "ARG2", "ARG3", "ARG4", "ARG5", "ARGA",
        "ARG-LOC", "ARG-TMP", "ARG-MNR", "ARG-DIR", "ARG-EXT",
        "ARG-PRP", "ARG-CAU", "ARG-GOL", "ARG-COM", "ARG-ADV",
        "ARG-NEG", "ARG-MOD", "ARG-DIS", "ARG-PRD", "ARG-REC",
        "ARG-LVB", "ARG-ADJ",
    }
)


class SchemaForgeError(Exception):
    """Base class for all errors raised by this package."""


class BundleParseError(SchemaForgeError):
    """Serialized bundle input is structurally malformed."""


class ConfigError(SchemaForgeError):
    """An InductionConfig value is out of range."""


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.strip().lower()).strip("-")
    return slug or "topic"


@dataclass(frozen=True)
class Topic:
    """The pipeline's sole required input: the name of a complex event."""

    name: str
    slug: str = ""

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise ValueError("topic name must be non-empty")
        if not self.slug:
            object.__setattr__(self, "slug", slugify(self.name))


class Token(NamedTuple):
    """Surface form plus half-open [start, end) character offsets."""

    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class Document:
    id: str
    genre: str
    text: str
    tokens: tuple[Token, ...] = ()

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "genre": self.genre,
            "text": self.text,
            "tokens": [[t.surface, t.start, t.end] for t in self.tokens],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Document":
        try:
            tokens = tuple(Token(str(s), int(a), int(b)) for s, a, b in obj["tokens"])
            return cls(id=str(obj["id"]), genre=str(obj["genre"]), text=str(obj["text"]), tokens=tokens)
        except (KeyError, TypeError, ValueError) as exc:
            raise BundleParseError(f"malformed document: {exc}") from exc


@dataclass(frozen=True)
class ArgumentMention:
    role: str
    head_text: str
    ner_type: str = ABSENT

    def to_json_obj(self) -> dict:
        return {"role": self.role, "headText": self.head_text, "nerType": self.ner_type}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ArgumentMention":
        try:
            return cls(role=str(obj["role"]), head_text=str(obj["headText"]), ner_type=str(obj["nerType"]))
        except (KeyError, TypeError) as exc:
            raise BundleParseError(f"malformed argument: {exc}") from exc


@dataclass(frozen=True)
class EventMention:
    id: str
    document_id: str
    trigger: tuple[int, int]  # half-open token-index range
    trigger_lemma: str
    arguments: tuple[ArgumentMention, ...] = ()

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "documentId": self.document_id,
            "trigger": list(self.trigger),
            "triggerLemma": self.trigger_lemma,
            "arguments": [a.to_json_obj() for a in self.arguments],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EventMention":
        try:
            start, end = obj["trigger"]
            return cls(
                id=str(obj["id"]),
                document_id=str(obj["documentId"]),
                trigger=(int(start), int(end)),
                trigger_lemma=str(obj["triggerLemma"]),
                arguments=tuple(ArgumentMention.from_json_obj(a) for a in obj["arguments"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BundleParseError(f"malformed event mention: {exc}") from exc


@dataclass(frozen=True)
class CorefCluster:
    document_id: str
    member_mention_ids: frozenset[str]
    kind: str  # "event" | "entity"

    def to_json_obj(self) -> dict:
        return {
            "documentId": self.document_id,
            "memberMentionIds": sorted(self.member_mention_ids),
            "kind": self.kind,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "CorefCluster":
        try:
            return cls(
                document_id=str(obj["documentId"]),
                member_mention_ids=frozenset(str(m) for m in obj["memberMentionIds"]),
                kind=str(obj["kind"]),
            )
        except (KeyError, TypeError) as exc:
            raise BundleParseError(f"malformed coref cluster: {exc}") from exc


@dataclass(frozen=True)
class TemporalRelationPred:
    document_id: str
    source_mention_id: str
    target_mention_id: str
    label: str  # BEFORE | AFTER | EQUAL | VAGUE
    confidence: float = 1.0

    def to_json_obj(self) -> dict:
        return {
            "documentId": self.document_id,
            "sourceMentionId": self.source_mention_id,
            "targetMentionId": self.target_mention_id,
            "label": self.label,
            "confidence": self.confidence,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TemporalRelationPred":
        try:
            return cls(
                document_id=str(obj["documentId"]),
                source_mention_id=str(obj["sourceMentionId"]),
                target_mention_id=str(obj["targetMentionId"]),
                label=str(obj["label"]),
                confidence=float(obj["confidence"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BundleParseError(f"malformed temporal prediction: {exc}") from exc


@dataclass(frozen=True)
class HierRelationPred:
    document_id: str
    source_mention_id: str
    target_mention_id: str
    label: str  # PARENT-CHILD | CHILD-PARENT | COREF | NOREL
    confidence: float = 1.0

    def to_json_obj(self) -> dict:
        return {
            "documentId": self.document_id,
            "sourceMentionId": self.source_mention_id,
            "targetMentionId": self.target_mention_id,
            "label": self.label,
            "confidence": self.confidence,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "HierRelationPred":
        try:
            return cls(
                document_id=str(obj["documentId"]),
                source_mention_id=str(obj["sourceMentionId"]),
                target_mention_id=str(obj["targetMentionId"]),
                label=str(obj["label"]),
                confidence=float(obj["confidence"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BundleParseError(f"malformed hierarchy prediction: {exc}") from exc


@dataclass(frozen=True)
class ExtractionBundle:
    """One document's extraction output: the contract between the IE stage
    and schema induction."""

    document: Document
    events: tuple[EventMention, ...] = ()
    coref_clusters: tuple[CorefCluster, ...] = ()
    temporal_preds: tuple[TemporalRelationPred, ...] = ()
    hier_preds: tuple[HierRelationPred, ...] = ()

    def to_json_obj(self) -> dict:
        return {
            "document": self.document.to_json_obj(),
            "events": [e.to_json_obj() for e in self.events],
            "corefClusters": [c.to_json_obj() for c in self.coref_clusters],
            "temporalPreds": [p.to_json_obj() for p in self.temporal_preds],
            "hierPreds": [p.to_json_obj() for p in self.hier_preds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ExtractionBundle":
        if not isinstance(obj, dict):
            raise BundleParseError("bundle must be a JSON object")
        try:
            return cls(
                document=Document.from_json_obj(obj["document"]),
                events=tuple(EventMention.from_json_obj(e) for e in obj["events"]),
                coref_clusters=tuple(CorefCluster.from_json_obj(c) for c in obj["corefClusters"]),
                temporal_preds=tuple(TemporalRelationPred.from_json_obj(p) for p in obj["temporalPreds"]),
                hier_preds=tuple(HierRelationPred.from_json_obj(p) for p in obj["hierPreds"]),
            )
        except KeyError as exc:
            raise BundleParseError(f"bundle missing field {exc}") from exc
        except TypeError as exc:
            raise BundleParseError(f"malformed bundle: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ExtractionBundle":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise BundleParseError(f"invalid JSON: {exc}") from exc
        return cls.from_json_obj(obj)


@dataclass(frozen=True)
class InductionConfig:
    """Frequency thresholds and generation quotas for one pipeline run."""

    min_event_docs: int = 2
    min_temporal_docs: int = 2
    min_coref_hier_docs: int = 3
    docs_per_genre: int = 30
    ranked_selection: int = 30
    min_confidence: float = 0.0

    def __post_init__(self) -> None:
        for name in ("min_event_docs", "min_temporal_docs", "min_coref_hier_docs",
                     "docs_per_genre", "ranked_selection"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ConfigError("min_confidence must lie in [0, 1]")

    def to_json_obj(self) -> dict:
        return {
            "minEventDocs": self.min_event_docs,
            "minTemporalDocs": self.min_temporal_docs,
            "minCorefHierDocs": self.min_coref_hier_docs,
            "docsPerGenre": self.docs_per_genre,
            "rankedSelection": self.ranked_selection,
            "minConfidence": self.min_confidence,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "InductionConfig":
        defaults = cls()
        return cls(
            min_event_docs=int(obj.get("minEventDocs", defaults.min_event_docs)),
            min_temporal_docs=int(obj.get("minTemporalDocs", defaults.min_temporal_docs)),
            min_coref_hier_docs=int(obj.get("minCorefHierDocs", defaults.min_coref_hier_docs)),
            docs_per_genre=int(obj.get("docsPerGenre", defaults.docs_per_genre)),
            ranked_selection=int(obj.get("rankedSelection", defaults.ranked_selection)),
            min_confidence=float(obj.get("minConfidence", defaults.min_confidence)),
        )


class EventKey(NamedTuple):
    """Cross-document identity of an event: representative trigger lemma plus
    the NER signature of its typed argument roles."""

    lemma: str
    args: tuple[tuple[str, str], ...]  # sorted (role, nerType) pairs, ABSENT excluded

    def to_json_obj(self) -> dict:
        return {"lemma": self.lemma, "args": [list(p) for p in self.args]}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EventKey":
        return cls(str(obj["lemma"]), tuple((str(r), str(t)) for r, t in obj["args"]))


def canonical_event_key(
    mention: EventMention,
    clusters: Iterable[CorefCluster],
    mentions: Iterable[EventMention] = (),
) -> EventKey:
    """Key a mention by its coref-representative lemma and typed-role signature.

    The representative lemma is the lexicographically smallest trigger lemma in
    the mention's event coref cluster (its own lemma if unclustered); `mentions`
    is the document's mention table used to resolve co-clustered lemmas. Roles
    with nerType ABSENT carry no signal and are dropped from the signature.
    """
    lemma_by_id = {m.id: m.trigger_lemma for m in mentions}
    lemma_by_id.setdefault(mention.id, mention.trigger_lemma)
    lemma = mention.trigger_lemma
    for cluster in clusters:
        if cluster.kind != "event" or cluster.document_id != mention.document_id:
            continue
        if mention.id in cluster.member_mention_ids:
            member_lemmas = [
                lemma_by_id[m] for m in cluster.member_mention_ids if m in lemma_by_id
            ]
            if member_lemmas:
                lemma = min(member_lemmas)
            break
    args = tuple(
        sorted((a.role, a.ner_type) for a in mention.arguments if a.ner_type != ABSENT)
    )
    return EventKey(lemma, args)


def keys_match(a: EventKey, b: EventKey) -> bool:
    """Wildcard key equality: same lemma, and every role present on BOTH sides
    carries the same NER type. A role present on exactly one side matches."""
    if a.lemma != b.lemma:
        return False
    types_a = dict(a.args)
    types_b = dict(b.args)
    return all(types_a[r] == types_b[r] for r in types_a.keys() & types_b.keys())


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str

    def __str__(self) -> str:  # pragma: no cover - debug convenience
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> set[str]:
        return {i.code for i in self.issues}


def validate_bundle(
    bundle: ExtractionBundle,
    role_vocabulary: frozenset[str] = DEFAULT_ROLE_VOCABULARY,
) -> ValidationReport:
    """Check every bundle invariant; the report is empty iff the bundle is valid.

    All problems become report entries with machine-readable codes; nothing
    raises here (structural parse failures happen earlier, in from_json).
    """
    issues: list[ValidationIssue] = []
    doc = bundle.document

    def bad(code: str, message: str) -> None:
        issues.append(ValidationIssue(code, message))

    prev_end = 0
    for i, tok in enumerate(doc.tokens):
        if tok.start < 0 or tok.end > len(doc.text) or tok.start >= tok.end:
            bad("TOKEN_SPAN_BOUNDS", f"token {i} span [{tok.start},{tok.end}) outside text bounds")
        if tok.start < prev_end:
            bad("TOKEN_SPAN_OVERLAP", f"token {i} overlaps or precedes token {i - 1}")
        prev_end = max(prev_end, tok.end)

    mention_ids: set[str] = set()
    for ev in bundle.events:
        if ev.id in mention_ids:
            bad("DUPLICATE_ID", f"event mention id {ev.id!r} appears twice")
        mention_ids.add(ev.id)
        if ev.document_id != doc.id:
            bad("WRONG_DOCUMENT", f"mention {ev.id!r} references document {ev.document_id!r}")
        start, end = ev.trigger
        if not (0 <= start < end <= len(doc.tokens)):
            bad("TRIGGER_RANGE", f"mention {ev.id!r} trigger [{start},{end}) invalid for {len(doc.tokens)} tokens")
        if not ev.trigger_lemma:
            bad("EMPTY_LEMMA", f"mention {ev.id!r} has an empty trigger lemma")
        for arg in ev.arguments:
            if arg.role not in role_vocabulary:
                bad("UNKNOWN_ROLE", f"mention {ev.id!r} argument role {arg.role!r} not in vocabulary")

    for cluster in bundle.coref_clusters:
        if cluster.document_id != doc.id:
            bad("WRONG_DOCUMENT", f"coref cluster references document {cluster.document_id!r}")
        if len(cluster.member_mention_ids) < 2:
            bad("CLUSTER_TOO_SMALL", "coref cluster has fewer than 2 members")
        if cluster.kind not in ("event", "entity"):
            bad("UNKNOWN_KIND", f"coref cluster kind {cluster.kind!r}")
        elif cluster.kind == "event":
            # Entity mentions are not itemized in the bundle, so only
            # event-kind members can be resolved.
            for member in sorted(cluster.member_mention_ids):
                if member not in mention_ids:
                    bad("DANGLING_MENTION", f"coref cluster references unknown mention {member!r}")

    def check_preds(preds, labels: tuple[str, ...], family: str) -> None:
        seen_pairs: set[tuple[str, str]] = set()
        for p in preds:
            if p.document_id != doc.id:
                bad("WRONG_DOCUMENT", f"{family} prediction references document {p.document_id!r}")
            if p.source_mention_id == p.target_mention_id:
                bad("SELF_RELATION", f"{family} prediction relates {p.source_mention_id!r} to itself")
            for m in (p.source_mention_id, p.target_mention_id):
                if m not in mention_ids:
                    bad("DANGLING_MENTION", f"{family} prediction references unknown mention {m!r}")
            if p.label not in labels:
                bad("UNKNOWN_LABEL", f"{family} prediction label {p.label!r}")
            if not 0.0 <= p.confidence <= 1.0:
                bad("CONFIDENCE_RANGE", f"{family} prediction confidence {p.confidence} outside [0, 1]")
            pair = (p.source_mention_id, p.target_mention_id)
            if pair in seen_pairs:
                bad("DUPLICATE_PRED", f"duplicate {family} prediction for ordered pair {pair}")
            seen_pairs.add(pair)

    check_preds(bundle.temporal_preds, TEMPORAL_LABELS, "temporal")
    check_preds(bundle.hier_preds, HIER_LABELS, "hierarchical")

    return ValidationReport(tuple(issues))
