"""Grammar coverage plus a parse/unparse round-trip property."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commlab.errors import LabSyntaxError
from commlab.nodes import (Assign, BinOp, Call, ExprStmt, For, Ident, If,
                           IndexedAssign, Matrix, Num, Range, Str, UnaryOp)
from commlab.parser import parse, unparse


def stmt(source, i=0):
    return parse(source).body[i]


def expr(source):
    return stmt(source).value


class TestStatements:
    def test_assignment(self):
        s = stmt("x = 1")
        assert isinstance(s, Assign) and s.target == "x" and s.echo

    def test_semicolon_suppresses_echo(self):
        assert stmt("x = 1;").echo is False

    def test_comma_separates_statements(self):
        prog = parse("x = 1, y = 2")
        assert [s.target for s in prog.body] == ["x", "y"]

    def test_expression_statement(self):
        s = stmt("1 + 2")
        assert isinstance(s, ExprStmt) and isinstance(s.value, BinOp)

    def test_indexed_assignment(self):
        s = stmt("v(3) = 7;")
        assert isinstance(s, IndexedAssign)
        assert s.target == "v" and len(s.indices) == 1

    def test_call_versus_indexed_assign_disambiguation(self):
        s = stmt("v(3) + 1;")
        assert isinstance(s, ExprStmt)
        assert isinstance(s.value.left, Call)

    def test_for_loop(self):
        s = stmt("for k = 1:3\n  x = k;\nend")
        assert isinstance(s, For) and s.var == "k"
        assert isinstance(s.iterable, Range)
        assert len(s.body) == 1

    def test_if_else(self):
        s = stmt("if x > 0\n  y = 1;\nelse\n  y = 2;\nend")
        assert isinstance(s, If)
        assert len(s.then_body) == 1 and len(s.else_body) == 1

    def test_if_without_else(self):
        s = stmt("if x\n  y = 1;\nend")
        assert s.else_body == []

    def test_single_line_blocks_with_commas(self):
        s = stmt("for k = 1:3, x = k; end")
        assert isinstance(s, For) and len(s.body) == 1


class TestExpressions:
    def test_precedence_mul_over_add(self):
        e = expr("1 + 2 * 3")
        assert e.op == "+" and e.right.op == "*"

    def test_precedence_range_over_comparison(self):
        e = expr("1:3 == 2")
        assert e.op == "=="
        assert isinstance(e.left, Range)

    def test_range_binds_looser_than_additive(self):
        e = expr("a + 1:b - 1")
        assert isinstance(e, Range)
        assert e.start.op == "+" and e.stop.op == "-"

    def test_no_chained_ranges(self):
        with pytest.raises(LabSyntaxError, match="single ':'"):
            parse("x = 1:2:3")

    def test_unary_minus(self):
        e = expr("-x")
        assert isinstance(e, UnaryOp) and e.op == "-"

    def test_call_with_arguments(self):
        e = expr("plot(x, y)")
        assert isinstance(e, Call) and len(e.args) == 2

    def test_zero_argument_call(self):
        e = expr("sw_step()")
        assert isinstance(e, Call) and e.args == []

    def test_bare_identifier(self):
        e = expr("x")
        assert isinstance(e, Ident)

    def test_parenthesized_expression(self):
        e = expr("(1 + 2) * 3")
        assert e.op == "*" and e.left.op == "+"

    def test_string_literal(self):
        e = expr("'hi'")
        assert isinstance(e, Str) and e.value == "hi"


class TestMatrixSplitting:
    def elems(self, source):
        e = expr(source)
        assert isinstance(e, Matrix)
        return e.elements

    def test_space_separated_elements(self):
        assert len(self.elems("[1 2 3]")) == 3

    def test_comma_separated_elements(self):
        assert len(self.elems("[1, 2, 3]")) == 3

    def test_minus_with_space_before_starts_element(self):
        elems = self.elems("[1 -2]")
        assert len(elems) == 2
        assert isinstance(elems[1], UnaryOp)

    def test_minus_with_spaces_on_both_sides_is_binary(self):
        elems = self.elems("[1 - 2]")
        assert len(elems) == 1
        assert isinstance(elems[0], BinOp)

    def test_minus_with_no_space_is_binary(self):
        assert len(self.elems("[1-2]")) == 1

    def test_mixed_splitting(self):
        assert len(self.elems("[1 -2 3]")) == 3

    def test_plus_follows_same_rule(self):
        assert len(self.elems("[1 +2]")) == 2
        assert len(self.elems("[1 + 2]")) == 1

    def test_concat_identifiers(self):
        elems = self.elems("[tx_bs byte]")
        assert [e.name for e in elems] == ["tx_bs", "byte"]

    def test_empty_matrix(self):
        assert self.elems("[]") == []

    def test_nested_call_in_matrix(self):
        elems = self.elems("[zeros(1, 2) 3]")
        assert len(elems) == 2

    def test_splitting_only_at_top_level_of_element(self):
        # the minus inside the parens is ordinary subtraction
        elems = self.elems("[(1 -2) 3]")
        assert len(elems) == 2


class TestReservedNamespace:
    def test_assignment_to_reserved_rejected(self):
        with pytest.raises(LabSyntaxError, match="reserved"):
            parse("__x = 1")

    def test_read_of_reserved_rejected(self):
        with pytest.raises(LabSyntaxError, match="reserved"):
            parse("x = __secret")

    def test_call_of_reserved_rejected(self):
        with pytest.raises(LabSyntaxError, match="reserved"):
            parse("x = __f(1)")

    def test_loop_variable_reserved_rejected(self):
        with pytest.raises(LabSyntaxError, match="reserved"):
            parse("for __k = 1:3\nend")

    def test_single_underscore_is_fine(self):
        parse("_x = 1")


class TestErrors:
    def test_unbalanced_bracket(self):
        with pytest.raises(LabSyntaxError, match="expected"):
            parse("x = [1 2")

    def test_missing_end(self):
        with pytest.raises(LabSyntaxError, match="expected"):
            parse("for k = 1:3\nx = k;")

    def test_else_outside_if(self):
        with pytest.raises(LabSyntaxError):
            parse("else")

    def test_errors_carry_position(self):
        try:
            parse("x = (1 + ")
        except LabSyntaxError as e:
            assert e.line == 1 and e.col is not None
        else:
            pytest.fail("expected a syntax error")

    def test_double_operator(self):
        with pytest.raises(LabSyntaxError):
            parse("x = 1 + * 2")


# --- round-trip property ---

_names = st.sampled_from(["x", "y", "tx_bs", "byte", "k", "spb"])


def _exprs():
    leaves = st.one_of(
        st.integers(min_value=0, max_value=999).map(
            lambda n: Num(0, 0, float(n))),
        st.sampled_from(["hi", "a b", "it's", ""]).map(
            lambda s: Str(0, 0, s)),
        _names.map(lambda n: Ident(0, 0, n)),
    )

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from("+-*/"), children, children).map(
                lambda t: BinOp(0, 0, t[0], t[1], t[2])),
            st.tuples(st.sampled_from(["<", "<=", ">", ">=", "==", "~="]),
                      children, children).map(
                lambda t: BinOp(0, 0, t[0], t[1], t[2])),
            children.map(lambda e: UnaryOp(0, 0, "-", e)),
            st.tuples(children, children).map(
                lambda t: Range(0, 0, t[0], t[1])),
            st.lists(children, max_size=3).map(
                lambda es: Matrix(0, 0, es)),
            st.tuples(_names, st.lists(children, max_size=2)).map(
                lambda t: Call(0, 0, t[0], t[1])),
        )

    return st.recursive(leaves, extend, max_leaves=12)


def _stmts():
    simple = st.one_of(
        st.tuples(_names, _exprs(), st.booleans()).map(
            lambda t: Assign(0, 0, t[0], t[1], t[2])),
        st.tuples(_exprs(), st.booleans()).map(
            lambda t: ExprStmt(0, 0, t[0], t[1])),
        st.tuples(_names, st.lists(_exprs(), min_size=1, max_size=1),
                  _exprs(), st.booleans()).map(
            lambda t: IndexedAssign(0, 0, t[0], t[1], t[2], t[3])),
    )

    def extend(children):
        return st.one_of(
            st.tuples(_names, _exprs(), st.lists(children, max_size=3)).map(
                lambda t: For(0, 0, t[0], t[1], t[2])),
            st.tuples(_exprs(), st.lists(children, max_size=2),
                      st.lists(children, max_size=2)).map(
                lambda t: If(0, 0, t[0], t[1], t[2])),
        )

    return st.recursive(simple, extend, max_leaves=8)


class TestRoundTrip:
    @given(st.lists(_stmts(), max_size=5))
    @settings(max_examples=300, deadline=None)
    def test_unparse_then_parse_is_identity(self, body):
        from commlab.nodes import Program
        program = Program(body)
        source = unparse(program)
        reparsed = parse(source)
        assert reparsed == program, source

    def test_unparse_escapes_quotes(self):
        program = parse("s = 'it''s';")
        assert parse(unparse(program)) == program

    def test_unparse_stable_on_course_scripts(self):
        from commlab.manifest import load_course, shipped_course_dir
        course = load_course(shipped_course_dir())
        for _, task in course.all_tasks():
            program = parse(task.reference)
            assert parse(unparse(program)) == program
