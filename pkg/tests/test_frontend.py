import pytest
from hypothesis import given, strategies as st

from axon import ast as A
from axon.frontend import LexError, ParseError, lex, parse_source
from axon.generator import generate_program


def kinds(src):
    return [(t.kind, t.lexeme) for t in lex(src) if t.kind != "eof"]


def test_lex_assignment():
    assert kinds("x = 1;") == [("ident", "x"), ("punct", "="), ("int", "1"), ("punct", ";")]


def test_lex_float_exponent():
    toks = [t for t in lex("3.5e2") if t.kind != "eof"]
    assert [(t.kind, t.value) for t in toks] == [("float", 350.0)]


def test_lex_rejects_unknown_character_with_position():
    with pytest.raises(LexError) as e:
        lex("@")
    assert (e.value.line, e.value.col) == (1, 1)


def test_lex_positions_are_one_based_and_skip_comments():
    toks = lex("# note\n  int x;")
    assert (toks[0].lexeme, toks[0].line, toks[0].col) == ("int", 2, 3)


def test_lex_int_literal_must_fit_64_bits():
    lex("9223372036854775807")
    with pytest.raises(LexError):
        lex("9223372036854775808")


def test_lex_string_escapes():
    (tok,) = [t for t in lex('"a\\n\\"b"') if t.kind != "eof"]
    assert tok.kind == "string" and tok.value == 'a\n"b'


def test_lex_unterminated_string():
    with pytest.raises(LexError):
        lex('printString "abc')


def test_parse_defers_type_errors():
    p = parse_source("int x; x = intToFloat(1);")
    assert isinstance(p.body[0].value, A.Convert)


def test_parse_while_condition():
    p = parse_source("bool b; int x; while (b) { x = x + 1; }")
    loop = p.body[0]
    assert isinstance(loop, A.While) and isinstance(loop.cond, A.Var)


def test_parse_missing_separator():
    with pytest.raises(ParseError) as e:
        parse_source("int x int y;")
    assert "';'" in e.value.expected


def test_parse_error_span_lies_inside_input():
    src = "int x;\nx = (1 + ;"
    with pytest.raises(ParseError) as e:
        parse_source(src)
    sp = e.value.span
    assert 1 <= sp.start_line <= 2 and sp.start_col >= 1


def test_precedence_is_c_like():
    p = parse_source("bool b; b = 1 + 2 * 3 < 4 || !true && false;")
    e = p.body[0].value
    assert e.op == "||"
    assert e.lhs.op == "<" and e.lhs.lhs.op == "+" and e.lhs.lhs.rhs.op == "*"
    assert e.rhs.op == "&&" and isinstance(e.rhs.lhs, A.Unary)


def test_unary_minus_binds_tighter_than_multiplication():
    e = parse_source("int x; x = -x * 2;").body[0].value
    assert e.op == "*" and isinstance(e.lhs, A.Unary)


def test_goto_and_labels_parse():
    p = parse_source("int x; goto done; done: x = 1;")
    assert isinstance(p.body[0], A.Goto) and isinstance(p.body[1], A.Labeled)


def test_array_declaration_and_store():
    p = parse_source("int[4] a; a[1] = 2;")
    assert p.decls[0].length == 4 and isinstance(p.body[0], A.ArrayAssign)


def test_spans_recorded_on_nodes():
    p = parse_source("int x;\n\nx = 5;")
    assert p.body[0].span.start_line == 3


@given(st.integers(0, 10_000))
def test_generated_programs_round_trip_through_source(seed):
    p = generate_program(seed)
    assert parse_source(A.to_source(p)) == p


@given(st.text(max_size=40))
def test_lexer_and_parser_fail_only_with_diagnostics(text):
    try:
        parse_source(text)
    except (LexError, ParseError):
        pass
