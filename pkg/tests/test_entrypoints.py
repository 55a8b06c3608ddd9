"""Tool surface recovery: publications, dispatch, and their join."""

import os

import pytest

from mcpsift.callgraph import build_call_graph
from mcpsift.entrypoints import (
    CatalogError,
    list_patterns,
    load_catalog,
    recover_entrypoints,
)
from mcpsift.frontends.loader import load_project

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


class TestCatalog:
    def test_default_catalog_loads(self):
        cat = load_catalog()
        assert cat.enabled("pub.py.tool_decorator")

    def test_listing_names_every_variant(self):
        cat = load_catalog()
        text = list_patterns(cat)
        for vid in ("pub.py.tool_decorator", "disp.js.switch_case", "disp.py.getattr_template"):
            assert vid in text

    def test_bad_catalog_rejected(self, tmp_path):
        p = tmp_path / "cat.json"
        p.write_text("{\"version\": 1}")
        with pytest.raises(CatalogError):
            load_catalog(str(p))


class TestDirectDeclaration:
    def test_python_decorator(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "from mcp.server.fastmcp import FastMCP\n"
            "mcp = FastMCP(\"x\")\n"
            "@mcp.tool()\n"
            "def run(cmd: str) -> str:\n"
            "    return cmd\n")})
        eps, pubs, _disps, gaps = recover_entrypoints(program)
        assert [e.tool for e in eps] == ["run"]
        ep = eps[0]
        assert ep.handler == "m.py::run"
        assert ep.scope is None
        assert ep.variant.startswith("pub.py")
        assert not gaps

    def test_js_server_tool_call(self, tmp_path):
        program = _load(tmp_path, {"m.ts": (
            "const server = new McpServer({ name: \"x\" });\n"
            "server.tool(\"go\", { a: 1 }, async (args) => {\n"
            "  return args;\n"
            "});\n")})
        eps, _pubs, _disps, _gaps = recover_entrypoints(program)
        assert [e.tool for e in eps] == ["go"]
        assert eps[0].handler.startswith("m.ts::<arrow@")


class TestExplicitRegistration:
    def test_python_add_tool(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "from mcp.server import Server\n"
            "app = Server(\"x\")\n"
            "def wipe(args):\n"
            "    return args\n"
            "app.add_tool(wipe)\n")})
        eps, _pubs, _disps, _gaps = recover_entrypoints(program)
        assert [e.tool for e in eps] == ["wipe"]
        assert eps[0].handler == "m.py::wipe"


class TestProtocolDispatch:
    def test_if_equality_scopes_to_arm(self):
        program = _load_fixture("dispatch/if_elif")
        eps, _pubs, _disps, _gaps = recover_entrypoints(program)
        tools = {e.tool: e for e in eps}
        assert set(tools) == {"run", "echo"}
        run = tools["run"]
        assert run.scope is not None and run.dispatcher is not None
        assert run.routing
        assert run.excluded
        assert not (run.scope & run.excluded)

    def test_switch_case(self):
        program = _load_fixture("dispatch/switch")
        eps, *_ = recover_entrypoints(program)
        assert {e.tool for e in eps} == {"disk_usage", "list_dir"}

    def test_match_case(self):
        program = _load_fixture("dispatch/match_case")
        eps, *_ = recover_entrypoints(program)
        assert {e.tool for e in eps} == {"remove", "count"}

    def test_registry_resolves_per_tool_handlers(self):
        program = _load_fixture("dispatch/registry")
        eps, *_ = recover_entrypoints(program)
        by_tool = {e.tool: e for e in eps}
        assert by_tool["ls"].handler == "server.py::handle_ls"
        assert by_tool["touch"].handler == "server.py::handle_touch"

    def test_map_get(self):
        program = _load_fixture("dispatch/map_get")
        eps, *_ = recover_entrypoints(program)
        by_tool = {e.tool: e.handler for e in eps}
        assert by_tool == {"grep_tree": "server.ts::runGrep",
                           "count_lines": "server.ts::runWc"}

    def test_reflective_template(self):
        program = _load_fixture("dispatch/reflective")
        eps, *_ = recover_entrypoints(program)
        by_tool = {e.tool: e for e in eps}
        assert by_tool["purge"].handler == "server.py::ToolBox.handle_purge"
        assert by_tool["stat"].handler == "server.py::ToolBox.handle_stat"


class TestGaps:
    def test_published_without_handler_reports_gap(self):
        program = _load_fixture("robustness/ghost_tool")
        eps, pubs, _disps, gaps = recover_entrypoints(program)
        assert not eps
        assert [p.tool for p in pubs] == ["phantom"]
        assert any(g.kind == "unresolved-handler" and g.tool == "phantom" for g in gaps)

    def test_unlisted_dispatch_arm_still_recovered(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "from mcp.server import Server\n"
            "app = Server(\"x\")\n"
            "@app.list_tools()\n"
            "async def lt():\n"
            "    return [{\"name\": \"known\"}]\n"
            "@app.call_tool()\n"
            "async def ct(name, arguments):\n"
            "    if name == \"known\":\n"
            "        return arguments\n")})
        eps, *_ = recover_entrypoints(program)
        assert {e.tool for e in eps} == {"known"}


class TestBranchExclusion:
    def test_sibling_arms_excluded_for_each_tool(self):
        program = _load_fixture("isolation/two_tool")
        eps, *_ = recover_entrypoints(program)
        by_tool = {e.tool: e for e in eps}
        render, version = by_tool["render"], by_tool["version"]
        assert render.scope and version.scope
        assert render.scope.isdisjoint(version.scope)
        assert version.scope <= render.excluded
        assert render.scope <= version.excluded
