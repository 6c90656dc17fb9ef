"""Identifier splitting along naming-convention boundaries."""
from typing import List


def _kind(ch: str) -> str:
    if ch.isdigit():
        return "digit"
    if ch.isupper():
        return "upper"
    return "lower"


def _split_chunk(chunk: str) -> List[str]:
    pieces = []
    start = 0
    for i in range(1, len(chunk)):
        prev, cur = _kind(chunk[i - 1]), _kind(chunk[i])
        boundary = (
            (prev == "digit") != (cur == "digit")
            or (prev == "lower" and cur == "upper")
            # acronym end: "HTTPResponse" splits before the "R"
            or (prev == "upper" and cur == "upper" and i + 1 < len(chunk)
                and _kind(chunk[i + 1]) == "lower")
        )
        if boundary:
            pieces.append(chunk[start:i])
            start = i
    pieces.append(chunk[start:])
    return pieces


def split_identifier(token: str) -> List[str]:
    """Split a code token into lowercase subtokens.

    Underscores and any other non-alphanumeric characters act as
    separators; camel-case humps, acronym ends and letter/digit changes
    are boundaries.

    >>> split_identifier("parse_HTTPResponse2")
    ['parse', 'http', 'response', '2']
    """
    pieces = []
    chunk = []
    for ch in token:
        if ch.isalnum():
            chunk.append(ch)
        elif chunk:
            pieces.extend(_split_chunk("".join(chunk)))
            chunk = []
    if chunk:
        pieces.extend(_split_chunk("".join(chunk)))
    if not pieces:
        return [token.lower()]
    return [p.lower() for p in pieces]


def is_punctuation(text: str) -> bool:
    """A leaf is punctuation when it has no letter or digit at all."""
    return not any(ch.isalnum() for ch in text)
