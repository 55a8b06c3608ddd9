"""Value model and statement helpers."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcpsift.ir import (
    Assemble,
    Assign,
    Branch,
    Call,
    CompareAtom,
    ConditionInfo,
    FieldLoad,
    FieldStore,
    ModelError,
    Return,
    UNKNOWN_LOCATION,
    ValueRef,
    comparable,
    literal_text,
    make_field_path,
    make_literal,
    statement_reads,
    statement_values,
)

P = "m.py::f"


def ref(name, *fields, kind="local"):
    base = ValueRef(P, name, kind)
    return make_field_path(base, *fields) if fields else base


class TestValueRef:
    def test_id_spells_proc_name_and_fields(self):
        assert ref("x").id == "m.py::f::x"
        assert ref("x", "a", "b").id == "m.py::f::x.a.b"

    def test_base_strips_fields(self):
        v = ref("x", "a", "b")
        assert v.base == ref("x")
        assert v.base.id == "m.py::f::x"

    def test_last_segment(self):
        assert ref("x", "a", "b").last_segment() == "b"
        assert ref("x").last_segment() == "x"

    def test_dotted(self):
        assert ref("x", "a", "b").dotted() == "x.a.b"

    def test_field_depth(self):
        assert ref("x").field_depth == 0
        assert ref("x", "a", "b").field_depth == 2

    def test_kind_does_not_change_identity(self):
        assert ValueRef(P, "a", "param").id == ValueRef(P, "a", "local").id


class TestLiterals:
    def test_round_trip(self):
        lit = make_literal("hello", P)
        assert lit.kind == "literal"
        assert literal_text(lit) == "hello"

    def test_non_literal_has_no_text(self):
        assert literal_text(ref("x")) is None

    def test_field_of_literal_rejected(self):
        with pytest.raises(ModelError):
            make_field_path(make_literal("s", P), "f")


class TestFieldPath:
    def test_truncates_past_limit(self):
        v = make_field_path(ref("x"), "a", "b", "c", "d", "e")
        assert v.field_depth == 3
        assert v.fields == ("a", "b", "c")

    def test_extension_of_existing_path_truncates_consistently(self):
        v1 = make_field_path(ref("x", "a", "b"), "c", "d")
        v2 = make_field_path(ref("x"), "a", "b", "c", "d")
        assert v1 == v2

    def test_no_fields_returns_base(self):
        v = ref("x")
        assert make_field_path(v) is v


class TestComparable:
    def test_exact(self):
        assert comparable(ref("x"), ref("x"))

    def test_prefix_both_directions(self):
        assert comparable(ref("x"), ref("x", "a"))
        assert comparable(ref("x", "a"), ref("x"))

    def test_siblings_do_not_alias(self):
        assert not comparable(ref("x", "a"), ref("x", "b"))

    def test_different_base(self):
        assert not comparable(ref("x"), ref("y"))

    def test_literals_never_alias(self):
        assert not comparable(make_literal("x", P), make_literal("x", P))


class TestStatementAccessors:
    def test_assign(self):
        s = Assign("s1", UNKNOWN_LOCATION, ref("y"), ref("x"))
        assert statement_reads(s) == [ref("x")]
        assert ref("y") in statement_values(s)

    def test_field_load_reads_composite_path(self):
        s = FieldLoad("s1", UNKNOWN_LOCATION, ref("y"), ref("o"), "f")
        assert s.path == ref("o", "f")
        assert statement_reads(s) == [ref("o", "f")]

    def test_field_store_writes_composite_path(self):
        s = FieldStore("s1", UNKNOWN_LOCATION, ref("o"), "f", ref("v"))
        assert s.path == ref("o", "f")
        assert statement_reads(s) == [ref("v")]

    def test_call_reads_args_kwargs_receiver(self):
        s = Call("s1", UNKNOWN_LOCATION, ("g",), (ref("a"),),
                 result=ref("r"), receiver_obj=ref("o"), kwargs=(("k", ref("b")),))
        reads = statement_reads(s)
        assert ref("a") in reads and ref("b") in reads and ref("o") in reads
        assert ref("r") not in reads

    def test_return_and_branch(self):
        assert statement_reads(Return("s1", UNKNOWN_LOCATION, ref("x"))) == [ref("x")]
        assert statement_reads(Return("s1", UNKNOWN_LOCATION, None)) == []
        cond = ConditionInfo("name == 'a'", (CompareAtom(ref("name"), "eq", ("a",)),), ())
        b = Branch("s2", UNKNOWN_LOCATION, cond, (), ())
        assert statement_reads(b) == [ref("name")]

    def test_assemble_reads_parts(self):
        s = Assemble("s1", UNKNOWN_LOCATION, ref("r"), (ref("a"), make_literal("-", P)), "concat")
        assert statement_reads(s) == [ref("a"), make_literal("-", P)]


_names = st.text(alphabet="abcxyz", min_size=1, max_size=4)
_fields = st.lists(st.sampled_from(("f", "g", "h")), max_size=5)


class TestProperties:
    @given(_names, _fields, _fields)
    def test_comparable_is_symmetric(self, name, fa, fb):
        a = make_field_path(ValueRef(P, name, "local"), *fa)
        b = make_field_path(ValueRef(P, name, "local"), *fb)
        assert comparable(a, b) == comparable(b, a)

    @given(_names, _fields)
    def test_field_path_depth_capped(self, name, fields):
        v = make_field_path(ValueRef(P, name, "local"), *fields)
        assert v.field_depth <= 3
        assert v.fields == tuple(fields)[:3]

    @given(_names, _fields)
    def test_value_comparable_with_own_base(self, name, fields):
        v = make_field_path(ValueRef(P, name, "local"), *fields)
        assert comparable(v, v.base)

    @given(_names, _fields, _fields)
    def test_id_equality_matches_structural_equality(self, name, fa, fb):
        a = make_field_path(ValueRef(P, name, "local"), *fa)
        b = make_field_path(ValueRef(P, name, "local"), *fb)
        assert (a.id == b.id) == (a == b)
