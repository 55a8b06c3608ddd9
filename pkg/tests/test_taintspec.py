"""Sink rules, request seeding, external sources, and return channels."""

import json
import os

import pytest

from mcpsift.callgraph import build_call_graph
from mcpsift.entrypoints import recover_entrypoints
from mcpsift.frontends.loader import load_project
from mcpsift.judge import ScriptedJudge
from mcpsift.taintspec import (
    RuleError,
    derive_return_sinks,
    load_rule_pack,
    match_operation_sinks,
    recognize_external_sources,
    seed_request_sources,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def _load(tmp_path, files):
    for name, text in files.items():
        (tmp_path / name).write_text(text)
    program, _report = load_project(str(tmp_path))
    program.call_graph = build_call_graph(program)
    return program


def _load_fixture(rel):
    program, _report = load_project(os.path.join(FIXTURES, rel))
    program.call_graph = build_call_graph(program)
    return program


def _ep_for(program, tool):
    eps, *_ = recover_entrypoints(program)
    return next(e for e in eps if e.tool == tool)


class TestRulePack:
    def test_default_pack_has_known_rules(self):
        pack = load_rule_pack()
        assert pack.by_id("py.cmd.subprocess_run") is not None
        assert pack.by_id("js.net.fetch") is not None
        categories = {r.category for r in pack.rules}
        assert categories == {"command_injection", "code_injection",
                              "sql_injection", "request_forgery"}

    def test_custom_pack(self, tmp_path):
        p = tmp_path / "rules.jsonl"
        p.write_text(json.dumps({
            "id": "custom.sink", "category": "command_injection",
            "language": "python", "callee": "danger.zone", "positions": [0]}) + "\n")
        pack = load_rule_pack(str(p))
        assert [r.id for r in pack.rules] == ["custom.sink"]
        assert pack.origin == str(p)

    def test_duplicate_ids_rejected(self, tmp_path):
        p = tmp_path / "rules.jsonl"
        row = json.dumps({"id": "x", "category": "command_injection",
                          "language": "python", "callee": "a", "positions": [0]})
        p.write_text(row + "\n" + row + "\n")
        with pytest.raises(RuleError):
            load_rule_pack(str(p))

    def test_bad_language_rejected(self, tmp_path):
        p = tmp_path / "rules.jsonl"
        p.write_text(json.dumps({"id": "x", "category": "command_injection",
                                 "language": "cobol", "callee": "a", "positions": [0]}) + "\n")
        with pytest.raises(RuleError):
            load_rule_pack(str(p))

    def test_negative_position_rejected(self, tmp_path):
        p = tmp_path / "rules.jsonl"
        p.write_text(json.dumps({"id": "x", "category": "command_injection",
                                 "language": "python", "callee": "a", "positions": [-1]}) + "\n")
        with pytest.raises(RuleError):
            load_rule_pack(str(p))

    def test_empty_pack_rejected(self, tmp_path):
        p = tmp_path / "rules.jsonl"
        p.write_text("\n")
        with pytest.raises(RuleError):
            load_rule_pack(str(p))


class TestSinkMatching:
    def test_suffix_match_on_dotted_callee(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "import subprocess\n"
            "def f(c):\n"
            "    subprocess.run(c, shell=True)\n")})
        sites = match_operation_sinks(program, load_rule_pack())
        assert [s.rule.id for s in sites] == ["py.cmd.subprocess_run"]
        assert sites[0].args and sites[0].args[0][0] == 0

    def test_longest_suffix_wins(self, tmp_path):
        program = _load(tmp_path, {"m.ts": (
            "function f(conn, c) {\n"
            "  conn.exec(c);\n"
            "}\n")})
        sites = match_operation_sinks(program, load_rule_pack())
        assert [s.rule.id for s in sites] == ["js.cmd.conn_exec"]

    def test_all_literal_call_not_a_site(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "import os\n"
            "def f():\n"
            "    os.system(\"ls -la\")\n")})
        assert match_operation_sinks(program, load_rule_pack()) == []

    def test_literal_positions_dropped_variable_kept(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def f(cursor, t):\n"
            "    cursor.execute(\"SELECT * FROM x WHERE a = ?\", (t,))\n")})
        sites = match_operation_sinks(program, load_rule_pack())
        assert len(sites) == 1
        positions = [pos for pos, _v in sites[0].args]
        assert positions == [1]

    def test_import_alias_still_matches(self, tmp_path):
        program = _load(tmp_path, {"m.ts": (
            "import { execSync as sh } from \"child_process\";\n"
            "function f(c) {\n"
            "  sh(c);\n"
            "}\n")})
        sites = match_operation_sinks(program, load_rule_pack())
        assert [s.rule.id for s in sites] == ["js.cmd.exec_sync"]

    def test_language_filter_respected(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def f(db, q):\n"
            "    db.unsafe(q)\n")})
        sites = match_operation_sinks(program, load_rule_pack())
        assert sites == []  # db.unsafe is a js rule

    def test_sites_ordered_by_location(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "import os\n"
            "def f(a, b):\n"
            "    os.system(b)\n"
            "    os.popen(a)\n")})
        sites = match_operation_sinks(program, load_rule_pack())
        lines = [s.location.start_line for s in sites]
        assert lines == sorted(lines)


class TestRequestSeeding:
    def test_whole_handler_seeds_params(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "from mcp.server.fastmcp import FastMCP\n"
            "mcp = FastMCP(\"x\")\n"
            "@mcp.tool()\n"
            "def run(cmd: str, count: int) -> str:\n"
            "    return cmd\n")})
        ep = _ep_for(program, "run")
        seeds = seed_request_sources(program, ep)
        names = {s.value.name for s in seeds}
        assert names == {"cmd", "count"}
        assert all(s.rationale == "handler_param" for s in seeds)
        assert all(s.label == "req" for s in seeds)

    def test_confined_scope_seeds_payload_reads_only(self):
        program = _load_fixture("dispatch/if_elif")
        run = _ep_for(program, "run")
        seeds = seed_request_sources(program, run)
        assert seeds, "confined arm should seed payload reads"
        for s in seeds:
            assert s.value.name != "name", "routing value must not seed"

    def test_sibling_arms_seed_disjoint_sites(self):
        program = _load_fixture("dispatch/if_elif")
        run = _ep_for(program, "run")
        echo = _ep_for(program, "echo")
        run_sites = {s.site for s in seed_request_sources(program, run)}
        echo_sites = {s.site for s in seed_request_sources(program, echo)}
        assert run_sites and echo_sites
        assert run_sites.isdisjoint(echo_sites)

    def test_forwarded_request_object_rederived_in_callee(self, tmp_path):
        program = _load(tmp_path, {"m.ts": (
            "import { Server } from \"@modelcontextprotocol/sdk/server/index.js\";\n"
            "import { CallToolRequestSchema } from \"@modelcontextprotocol/sdk/types.js\";\n"
            "import { execSync } from \"child_process\";\n"
            "const server = new Server({ name: \"x\", version: \"1.0.0\" }, {});\n"
            "function run(req) {\n"
            "  const dir = req.params.arguments.dir;\n"
            "  execSync(\"ls \" + dir);\n"
            "  return \"ok\";\n"
            "}\n"
            "server.setRequestHandler(CallToolRequestSchema, async (request) => {\n"
            "  const name = request.params.name;\n"
            "  if (name === \"go\") {\n"
            "    return run(request);\n"
            "  }\n"
            "  throw new Error(name);\n"
            "});\n")})
        ep = _ep_for(program, "go")
        seeds = seed_request_sources(program, ep)
        assert any(s.value.proc == "m.ts::run" for s in seeds), \
            "request object forwarded whole should reseed inside the helper"
        assert all(s.value.proc == ep.dispatcher for s in
                   seed_request_sources(program, ep, lift_accessors=False)), \
            "rederiving across the call is part of accessor lifting"

    def test_lift_toggle_controls_accessor_seeds(self):
        program = _load_fixture("ablation/accessor")
        ep = _ep_for(program, "pack_dir")
        lifted = seed_request_sources(program, ep, lift_accessors=True)
        bare = seed_request_sources(program, ep, lift_accessors=False)
        assert any(s.rationale == "structured_accessor" for s in lifted)
        assert len(bare) < len(lifted)

    def test_coercion_ambiguity_goes_to_judge(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "import os\n"
            "from mcp.server import Server\n"
            "app = Server(\"x\")\n"
            "@app.call_tool()\n"
            "async def ct(name, arguments):\n"
            "    if name == \"wait\":\n"
            "        arguments = int(arguments[\"seconds\"])\n"
            "        os.system(\"sleep \" + str(arguments))\n"
            "        return \"ok\"\n"
            "    raise ValueError(name)\n")})
        ep = _ep_for(program, "wait")
        judge = ScriptedJudge(fn=lambda req: "not_controlled")
        with_judge = seed_request_sources(program, ep, judge=judge)
        without = seed_request_sources(program, ep)
        assert judge.asked, "coerced payload root should be adjudicated"
        assert all(r.kind == "source_controllability" for r in judge.asked)
        kept = {s.value.id for s in with_judge}
        default = {s.value.id for s in without}
        assert kept < default
        assert any(s.confidence == "assumed" for s in without)

    def test_judge_confirmation_keeps_seed_as_adjudicated(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "import os\n"
            "from mcp.server import Server\n"
            "app = Server(\"x\")\n"
            "@app.call_tool()\n"
            "async def ct(name, arguments):\n"
            "    if name == \"wait\":\n"
            "        arguments = int(arguments[\"seconds\"])\n"
            "        os.system(\"sleep \" + str(arguments))\n"
            "        return \"ok\"\n"
            "    raise ValueError(name)\n")})
        ep = _ep_for(program, "wait")
        judge = ScriptedJudge(fn=lambda req: "controlled")
        seeds = seed_request_sources(program, ep, judge=judge)
        assert any(s.confidence == "adjudicated" for s in seeds)


class TestReturnSinks:
    def test_whole_handler_returns_anchored(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "from mcp.server.fastmcp import FastMCP\n"
            "mcp = FastMCP(\"x\")\n"
            "@mcp.tool()\n"
            "def f(a: str) -> str:\n"
            "    b = a.strip()\n"
            "    return b\n")})
        ep = _ep_for(program, "f")
        rets = derive_return_sinks(program, ep)
        assert len(rets) == 1
        assert rets[0].value.name == "b"

    def test_literal_returns_skipped(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "from mcp.server.fastmcp import FastMCP\n"
            "mcp = FastMCP(\"x\")\n"
            "@mcp.tool()\n"
            "def f(a: str) -> str:\n"
            "    return \"done\"\n")})
        ep = _ep_for(program, "f")
        assert derive_return_sinks(program, ep) == []

    def test_confined_returns_stay_in_dispatcher_arm(self):
        program = _load_fixture("dispatch/if_elif")
        run = _ep_for(program, "run")
        rets = derive_return_sinks(program, run)
        assert rets
        assert all(r.proc == run.dispatcher for r in rets)
        assert all(r.site in run.scope for r in rets)

    def test_sibling_arm_returns_not_anchored(self):
        program = _load_fixture("robustness/two_tool_returns")
        status = _ep_for(program, "status")
        assert derive_return_sinks(program, status) == []
        reader = _ep_for(program, "read_notes")
        assert derive_return_sinks(program, reader)


class TestExternalSources:
    def test_network_and_subprocess_results_seeded(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "import requests\n"
            "import subprocess\n"
            "def f(u, c):\n"
            "    r = requests.get(u)\n"
            "    o = subprocess.check_output(c)\n"
            "    return r, o\n")})
        seeds = recognize_external_sources(program)
        rationales = {s.rationale for s in seeds}
        assert "external_recognizer:network_response" in rationales
        assert "external_recognizer:subprocess_output" in rationales
        assert all(s.label == "ext" for s in seeds)
        assert all(s.confidence == "certain" for s in seeds)

    def test_file_reads_seeded(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def f(p):\n"
            "    data = open(p).read()\n"
            "    return data\n")})
        seeds = recognize_external_sources(program)
        assert any(s.rationale == "external_recognizer:file_content" for s in seeds)

    def test_discarded_result_seeds_only_a_dead_temp(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "import requests\n"
            "def f(u):\n"
            "    requests.get(u, timeout=2)\n"
            "    return \"checked\"\n")})
        seeds = recognize_external_sources(program)
        assert all(s.value.name.startswith("%") for s in seeds), \
            "a discarded response may seed its temp but nothing named"

    def test_ambiguous_carrier_needs_affirmative_judge(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "from lib import fetch_widget\n"
            "def f(u):\n"
            "    w = fetch_widget(u)\n"
            "    return w\n")})
        assert recognize_external_sources(program) == []
        judge = ScriptedJudge(fn=lambda req: "controlled")
        seeded = recognize_external_sources(program, judge=judge)
        assert len(seeded) == 1
        assert seeded[0].confidence == "adjudicated"
        assert judge.asked

    def test_unknown_verdict_skips_ambiguous_carrier(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "from lib import fetch_widget\n"
            "def f(u):\n"
            "    w = fetch_widget(u)\n"
            "    return w\n")})
        judge = ScriptedJudge()  # always unknown
        assert recognize_external_sources(program, judge=judge) == []
        assert judge.asked

    def test_project_functions_not_treated_as_carriers(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def fetch_local(x):\n"
            "    return x\n"
            "def f(u):\n"
            "    w = fetch_local(u)\n"
            "    return w\n")})
        judge = ScriptedJudge(fn=lambda req: "controlled")
        assert recognize_external_sources(program, judge=judge) == []
