"""Project discovery and whole-tree lowering."""

from mcpsift.frontends.loader import FrontendConfig, discover_files, load_project


class TestDiscovery:
    def test_finds_python_and_js_with_language_tags(self, tmp_path):
        (tmp_path / "a.py").write_text("x = 1\n")
        (tmp_path / "b.ts").write_text("const y = 2;\n")
        (tmp_path / "c.txt").write_text("not code\n")
        found = dict(discover_files(str(tmp_path), FrontendConfig()))
        assert found == {"a.py": "python", "b.ts": "js_ts"}

    def test_skips_vendored_directories(self, tmp_path):
        (tmp_path / "node_modules").mkdir()
        (tmp_path / "node_modules" / "dep.js").write_text("const z = 1;\n")
        (tmp_path / "main.js").write_text("const q = 1;\n")
        found = [rel for rel, _ in discover_files(str(tmp_path), FrontendConfig())]
        assert found == ["main.js"]

    def test_skips_declaration_files(self, tmp_path):
        (tmp_path / "types.d.ts").write_text("declare const x: number;\n")
        (tmp_path / "real.ts").write_text("const x = 1;\n")
        found = [rel for rel, _ in discover_files(str(tmp_path), FrontendConfig())]
        assert found == ["real.ts"]

    def test_deterministic_order(self, tmp_path):
        for name in ("z.py", "a.py", "m.ts"):
            (tmp_path / name).write_text("\n")
        first = discover_files(str(tmp_path), FrontendConfig())
        second = discover_files(str(tmp_path), FrontendConfig())
        assert first == second == sorted(first)


class TestLoadProject:
    def test_lowers_both_languages_into_one_program(self, tmp_path):
        (tmp_path / "srv.py").write_text("def f(a):\n    return a\n")
        (tmp_path / "web.ts").write_text("function g(b) { return b; }\n")
        program, report = load_project(str(tmp_path))
        ids = {p.id for p in program.procedures}
        assert any(i.endswith("srv.py::f") for i in ids)
        assert any(i.endswith("web.ts::g") for i in ids)
        assert report.files_seen == 2
        assert report.files_lowered == 2
        assert not report.issues

    def test_unit_paths_are_root_relative(self, tmp_path):
        sub = tmp_path / "lib"
        sub.mkdir()
        (sub / "m.py").write_text("def f():\n    pass\n")
        program, _report = load_project(str(tmp_path))
        assert any(u.path == "lib/m.py" for u in program.units)

    def test_broken_file_reported_not_fatal(self, tmp_path):
        (tmp_path / "ok.py").write_text("def f():\n    pass\n")
        (tmp_path / "bad.py").write_text("def broken(:\n")
        program, report = load_project(str(tmp_path))
        assert report.files_seen == 2
        assert report.files_lowered == 1
        assert any(i.unit.endswith("bad.py") for i in report.issues)
        assert any(p.id.endswith("ok.py::f") for p in program.procedures)

    def test_empty_tree_loads_nothing(self, tmp_path):
        program, report = load_project(str(tmp_path))
        assert report.files_seen == 0
        assert not program.procedures

    def test_missing_root_sees_no_files(self, tmp_path):
        _program, report = load_project(str(tmp_path / "absent"))
        assert report.files_seen == 0

    def test_import_bindings_wired_across_units(self, tmp_path):
        (tmp_path / "util.py").write_text("def helper(x):\n    return x\n")
        (tmp_path / "main.py").write_text(
            "from util import helper\n"
            "def go(y):\n"
            "    return helper(y)\n")
        program, _report = load_project(str(tmp_path))
        assert ("main.py", "helper") in program.bindings.imports
