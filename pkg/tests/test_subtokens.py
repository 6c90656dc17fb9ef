from hypothesis import given, strategies as st

from polycode.ingest import is_punctuation, split_identifier


def test_camel_case_method_name():
    assert split_identifier("sendDirectOperateCommandSet") == ["send", "direct", "operate", "command", "set"]


def test_single_piece():
    assert split_identifier("x") == ["x"]


def test_snake_acronym_digit():
    assert split_identifier("parse_HTTPResponse2") == ["parse", "http", "response", "2"]


def test_misc_boundaries():
    assert split_identifier("get_file_name") == ["get", "file", "name"]
    assert split_identifier("XMLHttpRequest") == ["xml", "http", "request"]
    assert split_identifier("__init__") == ["init"]
    assert split_identifier("v2beta") == ["v", "2", "beta"]


def test_punctuation_only_token_is_kept_whole():
    assert split_identifier("==") == ["=="]


def test_is_punctuation():
    assert is_punctuation("(") and is_punctuation("=>")
    assert not is_punctuation("x") and not is_punctuation("_a")


identifiers = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,20}", fullmatch=True)


@given(identifiers)
def test_pieces_are_lowercase_alnum(token):
    pieces = split_identifier(token)
    assert pieces
    for p in pieces:
        assert p == p.lower()
        if any(c.isalnum() for c in token):
            assert p.isalnum()


@given(identifiers)
def test_concatenation_recovers_alnum_content(token):
    if any(c.isalnum() for c in token):
        assert "".join(split_identifier(token)) == "".join(c for c in token if c.isalnum()).lower()


@given(identifiers)
def test_idempotent_on_pieces(token):
    for p in split_identifier(token):
        assert split_identifier(p) == [p] or all(q.isalnum() for q in split_identifier(p))
