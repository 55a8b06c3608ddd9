"""Adjudication interface: heuristics, scripting, remote fallback, verdicts."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from mcpsift.judge import (
    AdjudicationRequest,
    HeuristicJudge,
    RemoteJudge,
    ScriptedJudge,
    Verdict,
    resolve_guard_verdict,
    resolve_source_verdict,
)


def _req(kind="source_controllability", subject="m.py::f::x", text=""):
    return AdjudicationRequest(kind, subject, "is it?", text)


class TestRequestAndVerdict:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            AdjudicationRequest("vibes", "x", "?")

    def test_affirmative_decisions(self):
        assert Verdict("controlled").is_affirmative()
        assert Verdict("blocks").is_affirmative()
        assert not Verdict("unknown").is_affirmative()
        assert not Verdict("not_controlled").is_affirmative()
        assert not Verdict("not_blocks").is_affirmative()


class TestHeuristicJudge:
    def test_numeric_coercion_reads_as_constrained(self):
        v = HeuristicJudge().adjudicate(_req(text="n = int(args['n'])"))
        assert v.decision == "not_controlled"

    def test_literal_table_remap_reads_as_constrained(self):
        text = "MODES = {\"a\": \"x\"}\nm = MODES[args[\"mode\"]]"
        v = HeuristicJudge().adjudicate(_req(text=text))
        assert v.decision == "not_controlled"

    def test_plain_read_stays_unknown(self):
        v = HeuristicJudge().adjudicate(_req(text="cmd = args['cmd']"))
        assert v.decision == "unknown"

    def test_canonicalize_with_containment_blocks(self):
        text = "real = os.path.realpath(p)\nif not real.startswith(ROOT): return"
        v = HeuristicJudge().adjudicate(_req("guard_effectiveness", text=text))
        assert v.decision == "blocks"

    def test_membership_with_early_exit_blocks(self):
        text = "if mode not in (\"a\", \"b\"):\n    raise ValueError(mode)"
        v = HeuristicJudge().adjudicate(_req("guard_effectiveness", text=text))
        assert v.decision == "blocks"

    def test_unrecognized_guard_stays_unknown(self):
        v = HeuristicJudge().adjudicate(
            _req("guard_effectiveness", text="if len(p) > 4: pass"))
        assert v.decision == "unknown"


class TestScriptedJudge:
    def test_pattern_table_matches_subject(self):
        j = ScriptedJudge({"::x": "controlled"})
        assert j.adjudicate(_req(subject="m.py::f::x")).decision == "controlled"
        assert j.adjudicate(_req(subject="m.py::f::y")).decision == "unknown"
        assert len(j.asked) == 2

    def test_pattern_table_matches_slice(self):
        j = ScriptedJudge({"realpath": "blocks"})
        v = j.adjudicate(_req("guard_effectiveness", text="x = realpath(p)"))
        assert v.decision == "blocks"

    def test_fn_override(self):
        j = ScriptedJudge(fn=lambda r: "not_controlled")
        assert j.adjudicate(_req()).decision == "not_controlled"

    def test_decision_vocabulary_enforced_per_kind(self):
        j = ScriptedJudge(fn=lambda r: "blocks")
        # "blocks" is not a source decision; it degrades to unknown.
        assert j.adjudicate(_req("source_controllability")).decision == "unknown"
        assert j.adjudicate(_req("guard_effectiveness")).decision == "blocks"


class _Replies(BaseHTTPRequestHandler):
    reply: dict = {"decision": "controlled", "rationale": "remote said so"}
    seen: list = []

    def do_POST(self):
        n = int(self.headers.get("Content-Length", 0))
        type(self).seen.append(json.loads(self.rfile.read(n)))
        body = json.dumps(type(self).reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *a):
        pass


@pytest.fixture
def judge_server():
    srv = HTTPServer(("127.0.0.1", 0), _Replies)
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    _Replies.seen = []
    try:
        yield f"http://127.0.0.1:{srv.server_port}"
    finally:
        srv.shutdown()


class TestRemoteJudge:
    def test_round_trip(self, judge_server):
        j = RemoteJudge(judge_server)
        v = j.adjudicate(_req(text="w = fetch_widget(u)"))
        assert v.decision == "controlled"
        assert v.source == "remote"
        assert not j.degraded
        assert _Replies.seen[0]["kind"] == "source_controllability"

    def test_memoized_per_question(self, judge_server):
        j = RemoteJudge(judge_server)
        j.adjudicate(_req())
        j.adjudicate(_req())
        assert len(_Replies.seen) == 1

    def test_bad_decision_degrades_to_unknown(self, judge_server):
        _Replies.reply = {"decision": "launch the missiles"}
        try:
            j = RemoteJudge(judge_server)
            assert j.adjudicate(_req()).decision == "unknown"
        finally:
            _Replies.reply = {"decision": "controlled", "rationale": "remote said so"}

    def test_unreachable_endpoint_falls_back_to_heuristic(self):
        j = RemoteJudge("http://127.0.0.1:1/nope", timeout=0.2)
        v = j.adjudicate(_req(text="n = int(args['n'])"))
        assert v.decision == "not_controlled"
        assert v.source == "heuristic-fallback"
        assert j.degraded
        assert j.failures


class TestVerdictResolution:
    def test_source_policy(self):
        assert resolve_source_verdict(None) == (True, "assumed")
        assert resolve_source_verdict(Verdict("controlled")) == (True, "adjudicated")
        assert resolve_source_verdict(Verdict("not_controlled")) == (False, "adjudicated")
        assert resolve_source_verdict(Verdict("unknown")) == (True, "assumed")

    def test_guard_policy(self):
        assert resolve_guard_verdict(None) == (False, "assumed")
        assert resolve_guard_verdict(Verdict("blocks")) == (True, "adjudicated")
        assert resolve_guard_verdict(Verdict("not_blocks")) == (False, "adjudicated")
        assert resolve_guard_verdict(Verdict("unknown")) == (False, "assumed")
