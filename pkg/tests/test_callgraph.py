"""Name binding closure and call edge resolution over whole programs."""

from mcpsift.callgraph import (
    build_call_graph,
    lookup_function,
    lookup_instance_type,
    lookup_registry,
    resolve_handler,
)
from mcpsift.frontends.loader import load_project
from mcpsift.ir import ValueRef


def _load(tmp_path, files):
    for name, text in files.items():
        (tmp_path / name).write_text(text)
    program, report = load_project(str(tmp_path))
    assert not report.issues, report.issues
    program.call_graph = build_call_graph(program)
    return program


class TestEdges:
    def test_direct_call_resolves_exact(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def helper(x):\n"
            "    return x\n"
            "def main(y):\n"
            "    return helper(y)\n")})
        edges = [e for e in program.call_graph.edges
                 if e.callee == "m.py::helper" and e.confidence == "exact"]
        assert len(edges) == 1
        assert edges[0].caller == "m.py::main"

    def test_cross_module_import_call(self, tmp_path):
        program = _load(tmp_path, {
            "util.py": "def helper(x):\n    return x\n",
            "main.py": (
                "from util import helper\n"
                "def go(y):\n"
                "    return helper(y)\n")})
        assert any(e.callee == "util.py::helper" and e.confidence == "exact"
                   for e in program.call_graph.edges)

    def test_method_call_binds_receiver(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "class Box:\n"
            "    def open(self, k):\n"
            "        return k\n"
            "box = Box()\n"
            "def use(v):\n"
            "    return box.open(v)\n")})
        edge = next(e for e in program.call_graph.edges if e.callee == "m.py::Box.open")
        assert edge.confidence == "exact"
        assert edge.binds_receiver

    def test_external_call_kept_unresolved(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "import os\n"
            "def f(c):\n"
            "    os.system(c)\n")})
        assert not any(e.callee.endswith("::system") for e in program.call_graph.edges)

    def test_js_arrow_passed_as_handler_resolves(self, tmp_path):
        program = _load(tmp_path, {"m.ts": (
            "function run(fn, v) { return fn(v); }\n"
            "const f = (x) => x;\n"
            "run(f, 1);\n")})
        assert "m.ts::<arrow@2:11>" in {p.id for p in program.procedures}


class TestValueLookups:
    def test_function_lookup_falls_back_to_module_scope(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def target():\n"
            "    pass\n"
            "alias = target\n"
            "def user():\n"
            "    alias()\n")})
        user = program.proc("m.py::user")
        assert lookup_function(program, user, "alias") == "m.py::target"

    def test_instance_type_lookup_module_level(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "class Tool:\n"
            "    def go(self):\n"
            "        pass\n"
            "t = Tool()\n"
            "def use():\n"
            "    t.go()\n")})
        use = program.proc("m.py::use")
        assert lookup_instance_type(program, use, "t") == "m.py::Tool"

    def test_registry_from_dict_literal(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def a(x):\n    return x\n"
            "def b(x):\n    return x\n"
            "TABLE = {\"a\": a, \"b\": b}\n"
            "def dispatch(name):\n"
            "    return TABLE[name]\n")})
        dispatch = program.proc("m.py::dispatch")
        reg_id = lookup_registry(program, dispatch, "TABLE")
        assert reg_id is not None
        table = program.bindings.registries[reg_id]
        assert table == {"a": "m.py::a", "b": "m.py::b"}

    def test_registry_from_js_map(self, tmp_path):
        program = _load(tmp_path, {"m.ts": (
            "function a(x) { return x; }\n"
            "function b(x) { return x; }\n"
            "const table = new Map([[\"a\", a], [\"b\", b]]);\n")})
        mod = program.proc("m.ts::<module>")
        reg_id = lookup_registry(program, mod, "table")
        assert reg_id is not None
        assert program.bindings.registries[reg_id] == {"a": "m.ts::a", "b": "m.ts::b"}


class TestResolveHandler:
    def _ref(self, proc_id, name):
        return ValueRef(proc_id, name, "local")

    def test_direct_reference(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def handler(x):\n"
            "    return x\n"
            "h = handler\n")})
        res = resolve_handler(program, self._ref("m.py::<module>", "handler"))
        assert res.resolved and res.proc_id == "m.py::handler"

    def test_alias_chain_within_limit(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def handler(x):\n"
            "    return x\n"
            "a = handler\n"
            "b = a\n")})
        res = resolve_handler(program, self._ref("m.py::<module>", "b"))
        assert res.resolved and res.proc_id == "m.py::handler"

    def test_chain_past_limit_reports_depth_exceeded(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def handler(x):\n"
            "    return x\n"
            "a = handler\n"
            "b = a\n"
            "c = b\n")})
        res = resolve_handler(program, self._ref("m.py::<module>", "c"), depth_limit=2)
        assert not res.resolved
        assert res.reason == "depth-exceeded"

    def test_unknown_name_reports_no_binding(self, tmp_path):
        program = _load(tmp_path, {"m.py": "def f():\n    pass\n"})
        res = resolve_handler(program, self._ref("m.py::<module>", "ghost"))
        assert not res.resolved
        assert res.reason == "no-binding"

    def test_identity_wrapper_followed(self, tmp_path):
        program = _load(tmp_path, {"m.py": (
            "def wrap(fn):\n"
            "    return fn\n"
            "def handler(x):\n"
            "    return x\n"
            "h = wrap(handler)\n")})
        res = resolve_handler(program, self._ref("m.py::<module>", "h"))
        assert res.resolved and res.proc_id == "m.py::handler"
