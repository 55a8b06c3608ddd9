"""Adjudication of ambiguous source and guard questions.

The analysis keeps itself deterministic by only consulting a judge for
questions the deterministic recognizers cannot settle: is this value really
attacker-controllable, does this guard actually block the flow.  Three
implementations share one interface: a heuristic judge built from fixed
idiom checks, a remote judge that posts the question to an HTTP endpoint and
falls back to the heuristic on any failure, and a scripted judge for tests.
"""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Callable, Optional

KINDS = ("source_controllability", "guard_effectiveness")

# Decision vocabularies per kind.  "unknown" is always allowed; callers map
# it to the conservative side for their question.
SOURCE_DECISIONS = ("controlled", "not_controlled", "unknown")
GUARD_DECISIONS = ("blocks", "not_blocks", "unknown")


@dataclass(frozen=True)
class AdjudicationRequest:
    kind: str
    subject: str  # value id or guard site id the question is about
    question: str
    slice_text: str = ""
    tool: str = ""
    entrypoint: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown adjudication kind {self.kind!r}")


@dataclass(frozen=True)
class Verdict:
    decision: str
    rationale: str = ""
    source: str = "heuristic"  # "heuristic" | "remote" | "heuristic-fallback" | "scripted"

    def is_affirmative(self) -> bool:
        return self.decision in ("controlled", "blocks")


def _check_decision(kind: str, decision: str) -> str:
    allowed = SOURCE_DECISIONS if kind == "source_controllability" else GUARD_DECISIONS
    return decision if decision in allowed else "unknown"


# Idioms that make a request value no longer attacker-shaped: numeric
# coercion, and table lookups that remap it into a closed literal set.
_COERCION_RE = re.compile(r"\b(?:int|float|Number|parseInt|parseFloat|BigInt)\s*\(")
_CLOSED_TABLE_RE = re.compile(r"\[\s*(?:args|arguments|params|request)[\w.\[\]\"']*\s*\]")

# Tokens that, together, describe a canonicalize-then-contain guard.
_CANON_RE = re.compile(r"\b(?:realpath|resolve|normalize|canonical|abspath)\w*\s*\(", re.I)
_CONTAIN_RE = re.compile(r"\b(?:startswith|startsWith|is_relative_to|relative_to|commonpath|within)\b", re.I)
_MEMBERSHIP_RE = re.compile(r"\b(?:in\s+\(|in\s+\[|includes\s*\(|\.has\s*\()")


class HeuristicJudge:
    """Fixed idiom checks; answers unknown when nothing recognizable shows."""

    name = "heuristic"

    def adjudicate(self, request: AdjudicationRequest) -> Verdict:
        text = request.slice_text
        if request.kind == "source_controllability":
            if _COERCION_RE.search(text):
                return Verdict("not_controlled", "numeric coercion bounds the value", self.name)
            if _CLOSED_TABLE_RE.search(text) and "{" in text:
                return Verdict("not_controlled", "value remapped through a literal table", self.name)
            return Verdict("unknown", "no hard-constraint idiom in slice", self.name)
        if _CANON_RE.search(text) and _CONTAIN_RE.search(text):
            return Verdict("blocks", "canonicalization with containment check", self.name)
        if _MEMBERSHIP_RE.search(text) and re.search(r"\breturn\b|\bthrow\b|\braise\b", text):
            return Verdict("blocks", "membership check with early exit", self.name)
        return Verdict("unknown", "guard not recognizable from slice", self.name)


class ScriptedJudge:
    """Test double: answers from a subject-pattern table, else unknown."""

    name = "scripted"

    def __init__(self, answers: Optional[dict[str, str]] = None,
                 fn: Optional[Callable[[AdjudicationRequest], str]] = None) -> None:
        self.answers = dict(answers or {})
        self.fn = fn
        self.asked: list[AdjudicationRequest] = []

    def adjudicate(self, request: AdjudicationRequest) -> Verdict:
        self.asked.append(request)
        if self.fn is not None:
            return Verdict(_check_decision(request.kind, self.fn(request)), "scripted", self.name)
        for pattern, decision in self.answers.items():
            if pattern in request.subject or pattern in request.slice_text:
                return Verdict(_check_decision(request.kind, decision), "scripted", self.name)
        return Verdict("unknown", "no scripted answer", self.name)


class RemoteJudge:
    """Posts questions to an HTTP endpoint; any failure falls back to the
    heuristic judge and flags the scan as degraded."""

    name = "remote"

    def __init__(self, endpoint: str, timeout: float = 10.0) -> None:
        self.endpoint = endpoint
        self.timeout = timeout
        self.fallback = HeuristicJudge()
        self.degraded = False
        self.failures: list[str] = []
        self._memo: dict[tuple[str, str, str], Verdict] = {}

    def adjudicate(self, request: AdjudicationRequest) -> Verdict:
        key = (request.kind, request.subject, request.slice_text)
        if key in self._memo:
            return self._memo[key]
        verdict = self._ask(request)
        self._memo[key] = verdict
        return verdict

    def _ask(self, request: AdjudicationRequest) -> Verdict:
        payload = json.dumps({
            "kind": request.kind,
            "subject": request.subject,
            "question": request.question,
            "slice": request.slice_text,
            "tool": request.tool,
        }).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint, data=payload,
            headers={"Content-Type": "application/json"}, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                body = json.loads(resp.read().decode("utf-8"))
            decision = _check_decision(request.kind, str(body.get("decision", "unknown")))
            return Verdict(decision, str(body.get("rationale", "")), self.name)
        except (urllib.error.URLError, OSError, ValueError, json.JSONDecodeError) as exc:
            self.degraded = True
            self.failures.append(f"{type(exc).__name__}: {exc}")
            fb = self.fallback.adjudicate(request)
            return Verdict(fb.decision, fb.rationale, "heuristic-fallback")


def resolve_source_verdict(verdict: Optional[Verdict]) -> tuple[bool, str]:
    """(keep the seed, confidence) under the worst-case-unknown policy."""
    if verdict is None:
        return True, "assumed"
    if verdict.decision == "controlled":
        return True, "adjudicated"
    if verdict.decision == "not_controlled":
        return False, "adjudicated"
    return True, "assumed"


def resolve_guard_verdict(verdict: Optional[Verdict]) -> tuple[bool, str]:
    """(guard blocks the flow, confidence) with unknown mapped to not-blocks."""
    if verdict is None:
        return False, "assumed"
    if verdict.decision == "blocks":
        return True, "adjudicated"
    if verdict.decision == "not_blocks":
        return False, "adjudicated"
    return False, "assumed"
