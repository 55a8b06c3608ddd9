"""Control-flow recovery over flattened bodies."""

import pytest

from mcpsift.cfg import ENTRY, EXIT, branch_scopes, build_cfg, dominators, toplevel_sequence
from mcpsift.ir import (
    Assign,
    Branch,
    ConditionInfo,
    ModelError,
    Param,
    Procedure,
    Return,
    UNKNOWN_LOCATION,
    ValueRef,
)

P = "m.py::f"


def _assign(sid, name="x"):
    return Assign(sid, UNKNOWN_LOCATION, ValueRef(P, name, "local"), ValueRef(P, "a", "param"))


def _branch(sid, then_ids=(), else_ids=(), origin="if"):
    return Branch(sid, UNKNOWN_LOCATION, ConditionInfo("c", (), ()), tuple(then_ids),
                  tuple(else_ids), origin)


def _ret(sid):
    return Return(sid, UNKNOWN_LOCATION, ValueRef(P, "x", "local"))


def _proc(body):
    return Procedure(P, "f", "m.py", [Param("a", 0)], body, UNKNOWN_LOCATION)


class TestBuildCfg:
    def test_straight_line(self):
        cfg = build_cfg(_proc([_assign("s1"), _assign("s2"), _ret("s3")]))
        assert (ENTRY, "s1") in cfg.edges
        assert ("s1", "s2") in cfg.edges
        assert ("s2", "s3") in cfg.edges
        assert ("s3", EXIT) in cfg.edges

    def test_empty_body_has_entry_to_exit(self):
        cfg = build_cfg(_proc([]))
        assert (ENTRY, EXIT) in cfg.edges

    def test_branch_fans_out_and_joins(self):
        body = [_branch("b", ("t1",), ("e1",)), _assign("t1"), _assign("e1"), _assign("after")]
        cfg = build_cfg(_proc(body))
        assert ("b", "t1") in cfg.edges
        assert ("b", "e1") in cfg.edges
        assert ("t1", "after") in cfg.edges
        assert ("e1", "after") in cfg.edges
        assert ("t1", "e1") not in cfg.edges

    def test_absent_else_falls_through(self):
        body = [_branch("b", ("t1",)), _assign("t1"), _assign("after")]
        cfg = build_cfg(_proc(body))
        assert ("b", "after") in cfg.edges
        assert ("t1", "after") in cfg.edges

    def test_return_inside_arm_cuts_fallthrough(self):
        body = [_branch("b", ("r1",), ()), _ret("r1"), _assign("after")]
        cfg = build_cfg(_proc(body))
        assert ("r1", EXIT) in cfg.edges
        assert ("r1", "after") not in cfg.edges
        assert ("b", "after") in cfg.edges

    def test_unknown_arm_id_rejected(self):
        with pytest.raises(ModelError):
            build_cfg(_proc([_branch("b", ("nope",), ())]))


class TestToplevelSequence:
    def test_skips_nested(self):
        body = [_branch("b", ("t1",), ()), _assign("t1"), _assign("after")]
        assert [s.id for s in toplevel_sequence(body)] == ["b", "after"]

    def test_within_one_arm(self):
        inner = _branch("b2", ("t2",), ())
        body = [_branch("b1", ("b2", "t2", "t1"), ()), inner, _assign("t2"), _assign("t1")]
        seq = toplevel_sequence(body, set(("b2", "t2", "t1")))
        assert [s.id for s in seq] == ["b2", "t1"]


class TestDominators:
    def test_branch_dominates_both_arms(self):
        body = [_assign("s1"), _branch("b", ("t1",), ("e1",)), _assign("t1"),
                _assign("e1"), _assign("after")]
        dom = dominators(build_cfg(_proc(body)))
        assert "b" in dom["t1"]
        assert "b" in dom["e1"]
        assert "b" in dom["after"]
        assert "t1" not in dom["after"]

    def test_entry_dominates_everything_reachable(self):
        body = [_assign("s1"), _assign("s2")]
        dom = dominators(build_cfg(_proc(body)))
        assert ENTRY in dom["s1"] and ENTRY in dom["s2"] and ENTRY in dom[EXIT]


class TestBranchScopes:
    def test_transitive_flattening(self):
        body = [_branch("b1", ("b2", "t2", "t1"), ("e1",)),
                _branch("b2", ("t2",), ()), _assign("t2"), _assign("t1"), _assign("e1")]
        scopes = {s.branch_id: s for s in branch_scopes(_proc(body))}
        assert scopes["b1"].then_all == frozenset({"b2", "t2", "t1"})
        assert scopes["b1"].else_all == frozenset({"e1"})
        assert scopes["b2"].then_all == frozenset({"t2"})
