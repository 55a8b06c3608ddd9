"""Project loading: file discovery, per-file lowering, import resolution.

A parse failure in one file never aborts the scan; the file is recorded in
the report and the rest of the tree proceeds.  Import records are resolved
against the discovered tree: a hit binds the local name to the exporting
unit, a miss marks the binding external (its module name is kept so call
sites can still be matched against sink rules by resolved path).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from ..cfg import build_cfg
from ..ir import Program, SourceUnit, ValueRef
from .common import MODULE_PROC, ImportRecord, UnitLowering, proc_id_for
from .jslower import lower_js_unit
from .pyfront import FrontendParseError, lower_python_unit

PY_EXTENSIONS = (".py",)
JS_EXTENSIONS = (".js", ".ts", ".mjs", ".cjs", ".jsx", ".tsx")
SKIP_DIRS = {
    "node_modules", ".git", "dist", "build", "__pycache__", ".venv", "venv",
    ".tox", ".mypy_cache", ".pytest_cache", "coverage", ".next", "vendor",
}
SKIP_SUFFIXES = (".d.ts", ".min.js")


@dataclass
class FrontendConfig:
    include_tests: bool = False
    max_file_bytes: int = 1_500_000
    follow_symlinks: bool = False


@dataclass
class UnitIssue:
    unit: str
    kind: str  # parse_error | too_large | read_error
    detail: str


@dataclass
class LoweringReport:
    files_seen: int = 0
    files_lowered: int = 0
    issues: list[UnitIssue] = field(default_factory=list)
    # construct name -> count, summed over units that hit them
    unsupported: dict[str, int] = field(default_factory=dict)
    partially_lowered_units: list[str] = field(default_factory=list)

    def merge_unsupported(self, unit: str, tally: dict[str, int]) -> None:
        if tally:
            self.partially_lowered_units.append(unit)
        for construct, count in tally.items():
            self.unsupported[construct] = self.unsupported.get(construct, 0) + count


def discover_files(root: str, config: FrontendConfig) -> list[tuple[str, str]]:
    """(relative path, language) pairs under root, deterministic order."""
    found: list[tuple[str, str]] = []
    for dirpath, dirnames, filenames in os.walk(root, followlinks=config.follow_symlinks):
        dirnames[:] = sorted(d for d in dirnames if d not in SKIP_DIRS and not d.startswith("."))
        for name in sorted(filenames):
            if any(name.endswith(sfx) for sfx in SKIP_SUFFIXES):
                continue
            lang: Optional[str] = None
            if name.endswith(PY_EXTENSIONS):
                lang = "python"
            elif name.endswith(JS_EXTENSIONS):
                lang = "js_ts"
            if lang is None:
                continue
            if not config.include_tests and _looks_like_test(name):
                continue
            rel = os.path.relpath(os.path.join(dirpath, name), root)
            found.append((rel.replace(os.sep, "/"), lang))
    return found


def _looks_like_test(name: str) -> bool:
    stem = name.rsplit(".", 1)[0]
    return (
        stem.startswith("test_")
        or stem.endswith("_test")
        or stem.endswith(".test")
        or stem.endswith(".spec")
        or stem == "conftest"
    )


def load_project(root: str, config: Optional[FrontendConfig] = None) -> tuple[Program, LoweringReport]:
    config = config or FrontendConfig()
    report = LoweringReport()
    program = Program()
    lowerings: dict[str, UnitLowering] = {}

    for rel, lang in discover_files(root, config):
        report.files_seen += 1
        full = os.path.join(root, rel)
        try:
            size = os.path.getsize(full)
            if size > config.max_file_bytes:
                report.issues.append(UnitIssue(rel, "too_large", f"{size} bytes"))
                continue
            with open(full, "r", encoding="utf-8", errors="replace") as fh:
                text = fh.read()
        except OSError as exc:
            report.issues.append(UnitIssue(rel, "read_error", str(exc)))
            continue

        try:
            lowered = lower_python_unit(rel, text) if lang == "python" else lower_js_unit(rel, text)
        except FrontendParseError as exc:
            report.issues.append(UnitIssue(rel, "parse_error", exc.message if hasattr(exc, "message") else str(exc)))
            continue
        except RecursionError:
            report.issues.append(UnitIssue(rel, "parse_error", "nesting too deep"))
            continue

        report.files_lowered += 1
        report.merge_unsupported(rel, lowered.unsupported)
        lowerings[rel] = lowered
        program.units.append(SourceUnit(rel, lang, root=root, text=text))
        program.procedures.extend(lowered.procedures)
        program.bindings.function_values.update(lowered.function_values)
        program.bindings.class_values.update(lowered.class_values)
        program.bindings.class_methods.update(lowered.class_methods)

    resolve_imports(program, lowerings)

    for proc in program.procedures:
        proc.cfg = build_cfg(proc)
    program.reindex()
    return program, report


def resolve_imports(program: Program, lowerings: dict[str, UnitLowering]) -> None:
    unit_paths = {u.path for u in program.units}

    for rel, lowered in lowerings.items():
        for record in lowered.imports:
            resolution = _resolve_one(record, rel, unit_paths)
            program.bindings.imports[(rel, record.local_name)] = resolution
            program.module_graph.append((rel, resolution))
            # A member import of a function binds the local name directly.
            if resolution.startswith("unit:") and record.member and record.member != "default":
                target_unit = resolution.split(":", 1)[1]
                exporter = ValueRef(proc_id_for(target_unit, MODULE_PROC), record.member, "local")
                local = ValueRef(proc_id_for(rel, MODULE_PROC), record.local_name, "local")
                if exporter.id in program.bindings.function_values:
                    program.bindings.function_values[local.id] = program.bindings.function_values[exporter.id]
                if exporter.id in program.bindings.class_values:
                    program.bindings.class_values[local.id] = program.bindings.class_values[exporter.id]


def _external(record: ImportRecord) -> str:
    suffix = f".{record.member}" if record.member and record.member != "default" else ""
    return f"external:{record.module}{suffix}"


def _resolve_one(record: ImportRecord, importer: str, unit_paths: set[str]) -> str:
    module = record.module
    if record.level > 0 or module.startswith("."):
        return _resolve_relative(record, importer, unit_paths)
    # Python absolute import against the scanned root.
    dotted = module.replace(".", "/")
    for candidate in (f"{dotted}.py", f"{dotted}/__init__.py"):
        if candidate in unit_paths:
            return f"unit:{candidate}"
    # JS bare specifier or unresolvable Python module.
    return _external(record)


def _resolve_relative(record: ImportRecord, importer: str, unit_paths: set[str]) -> str:
    base_dir = os.path.dirname(importer)
    if record.level > 0:  # Python relative import
        for _ in range(record.level - 1):
            base_dir = os.path.dirname(base_dir)
        dotted = record.module.replace(".", "/") if record.module else ""
        target = f"{base_dir}/{dotted}" if dotted else base_dir
        target = target.strip("/")
        for candidate in (f"{target}.py", f"{target}/__init__.py"):
            candidate = candidate.lstrip("/")
            if candidate in unit_paths:
                return f"unit:{candidate}"
        return _external(record)
    # JS relative specifier.
    spec = record.module
    joined = os.path.normpath(os.path.join(base_dir, spec)).replace(os.sep, "/")
    candidates = [joined]
    stem = joined
    for ext in (".ts", ".js", ".mjs", ".cjs", ".tsx", ".jsx"):
        candidates.append(stem + ext)
    if spec.endswith(".js"):
        # TS projects import compiled names; map back to the .ts source.
        candidates.append(joined[:-3] + ".ts")
    candidates.append(f"{joined}/index.ts")
    candidates.append(f"{joined}/index.js")
    for candidate in candidates:
        if candidate in unit_paths:
            return f"unit:{candidate}"
    return _external(record)
