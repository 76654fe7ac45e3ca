"""Prompt construction for the three document genres, provider-driven corpus
generation, and parsing of enumerated step output.

Providers are pluggable: an HTTP JSON client for hosted models and a
deterministic mock that replays canned outputs from a fixture directory.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import requests

from .core import ConfigError, Document, InductionConfig, SchemaForgeError, Topic

HEADLINE_TEMPLATE = "Write a news headline about {topic}."
BODY_TEMPLATE = 'Write a news story titled "{headline}".'
HOWTO_TEMPLATE = "Describe how to {topic}."
STEPS_TEMPLATE = "What are the steps involved in {topic}? 1."

API_KEY_ENV = "SCHEMA_FORGE_API_KEY"

_ENUMERATOR = re.compile(r"^[ \t]*\d+\s*\.\s*", re.MULTILINE)


class ProviderError(SchemaForgeError):
    """A generation request failed after retry exhaustion."""


class EmptySteps(SchemaForgeError):
    """No decimal enumerator found in a steps-genre document."""


@dataclass(frozen=True)
class PromptJob:
    genre: str  # news | howto | steps
    stage: str  # headline | body | single
    prompt: str
    repetition: int


@dataclass(frozen=True)
class GenerationRecord:
    job: PromptJob
    raw_output: str | None
    provider_name: str
    timestamp: float
    error: str | None = None

    def __post_init__(self) -> None:
        if (self.raw_output is None) == (self.error is None):
            raise ValueError("exactly one of raw_output and error must be set")


class TextGenerator(Protocol):
    name: str

    def generate(self, prompt: str, max_tokens: int, profile: str) -> str:
        """Return generated text or raise ProviderError."""
        ...


@dataclass
class GenerationSettings:
    """Operational knobs the paper leaves to the provider."""

    max_tokens: int = 512
    profile: str = "default"
    retries: int = 3
    backoff_seconds: float = 0.5
    parallelism: int = 4


def build_prompts(topic: Topic, config: InductionConfig) -> list[PromptJob]:
    """One headline job and one how-to job per repetition, plus the single
    steps job. News bodies are chained later from headline outputs."""
    jobs = [
        PromptJob("news", "headline", HEADLINE_TEMPLATE.format(topic=topic.name), i)
        for i in range(config.docs_per_genre)
    ]
    jobs += [
        PromptJob("howto", "single", HOWTO_TEMPLATE.format(topic=topic.name), i)
        for i in range(config.docs_per_genre)
    ]
    jobs.append(PromptJob("steps", "single", STEPS_TEMPLATE.format(topic=topic.name), 0))
    return jobs


def body_job_for(headline_job: PromptJob, headline_output: str) -> PromptJob:
    headline = headline_output.strip().strip('"').strip()
    return PromptJob("news", "body", BODY_TEMPLATE.format(headline=headline), headline_job.repetition)


def _attempt(
    provider: TextGenerator,
    job: PromptJob,
    settings: GenerationSettings,
    sleep: Callable[[float], None],
) -> GenerationRecord:
    last_error = "no attempt made"
    for attempt in range(settings.retries):
        try:
            text = provider.generate(job.prompt, settings.max_tokens, settings.profile)
            return GenerationRecord(job, text, provider.name, time.time())
        except ProviderError as exc:
            last_error = str(exc)
            if attempt + 1 < settings.retries:
                sleep(settings.backoff_seconds * (2**attempt))
    return GenerationRecord(job, None, provider.name, time.time(), error=last_error)


def generate_corpus(
    topic: Topic,
    provider: TextGenerator,
    config: InductionConfig,
    settings: GenerationSettings | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[list[Document], list[GenerationRecord]]:
    """Run every prompt job against the provider and collect one Document per
    successful body / how-to / steps generation.

    Failed jobs are retried with exponential backoff, then recorded and
    skipped; the pipeline continues with whatever succeeded. Results are
    ordered by job index regardless of completion order.
    """
    if config.docs_per_genre < 1:
        raise ConfigError("docs_per_genre must be >= 1")
    settings = settings or GenerationSettings()
    jobs = build_prompts(topic, config)

    records: list[GenerationRecord] = []
    documents: list[Document] = []

    with ThreadPoolExecutor(max_workers=max(1, settings.parallelism)) as pool:
        first_pass = list(pool.map(lambda j: _attempt(provider, j, settings, sleep), jobs))

        # News headlines chain into body jobs; everything else is one-shot.
        body_jobs: list[tuple[int, PromptJob]] = []
        for idx, record in enumerate(first_pass):
            records.append(record)
            job = record.job
            if record.error is not None:
                continue
            if job.genre == "news" and job.stage == "headline":
                body_jobs.append((idx, body_job_for(job, record.raw_output or "")))

        body_records = list(
            pool.map(lambda pair: _attempt(provider, pair[1], settings, sleep), body_jobs)
        )

    records.extend(body_records)

    counters = {"news": 0, "howto": 0, "steps": 0}

    def doc_id(genre: str) -> str:
        n = counters[genre]
        counters[genre] += 1
        return f"{genre}-{n:03d}"

    for record in body_records:
        if record.error is None:
            documents.append(Document(doc_id("news"), "news", record.raw_output or ""))
    for record in first_pass:
        job = record.job
        if record.error is not None or job.stage == "headline":
            continue
        documents.append(Document(doc_id(job.genre), job.genre, record.raw_output or ""))

    return documents, records


def parse_enumerated_steps(steps_document: Document) -> list[str]:
    """Split a steps-genre document on line-leading decimal enumerators.

    Steps come back in textual order with surrounding whitespace trimmed;
    anything before the first enumerator is dropped.
    """
    if steps_document.genre != "steps":
        raise ValueError("document genre must be 'steps'")
    text = steps_document.text
    matches = list(_ENUMERATOR.finditer(text))
    if not matches:
        raise EmptySteps(f"no enumerator found in document {steps_document.id!r}")
    steps: list[str] = []
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        step = text[m.end():end].strip()
        if step:
            steps.append(step)
    return steps


def prompt_fixture_key(prompt: str) -> str:
    """Filename stem the mock provider uses for a prompt's canned output."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


@dataclass
class MockTextGenerator:
    """Replays canned outputs from a fixture directory keyed by prompt hash.

    Missing fixtures raise ProviderError, which exercises the retry/skip path
    the same way a flaky remote model would.
    """

    fixture_dir: Path
    name: str = "mock"

    def generate(self, prompt: str, max_tokens: int, profile: str) -> str:
        path = Path(self.fixture_dir) / f"{prompt_fixture_key(prompt)}.txt"
        if not path.exists():
            raise ProviderError(f"no fixture for prompt hash {prompt_fixture_key(prompt)}")
        return path.read_text(encoding="utf-8")


@dataclass
class HttpTextGenerator:
    """Minimal JSON-over-HTTP client: POST {model, prompt, maxTokens, profile}
    to base_url, expect {"text": ...} or {"error": ...}."""

    base_url: str
    model: str
    name: str = "http"
    timeout: float = 60.0
    api_key: str | None = None

    def generate(self, prompt: str, max_tokens: int, profile: str) -> str:
        key = self.api_key if self.api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        try:
            resp = requests.post(
                self.base_url,
                json={"model": self.model, "prompt": prompt, "maxTokens": max_tokens, "profile": profile},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise ProviderError(f"request failed: {exc}") from exc
        except ValueError as exc:
            raise ProviderError(f"non-JSON response: {exc}") from exc
        if "error" in payload:
            raise ProviderError(str(payload["error"]))
        if "text" not in payload:
            raise ProviderError("response carries neither text nor error")
        return str(payload["text"])
