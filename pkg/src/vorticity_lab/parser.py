from typing import NamedTuple

from vorticity_lab.errors import IssueLog
from vorticity_lab.tokens import Token, TokenType as TT


class ParseError(Exception):
    pass


class Entry(NamedTuple):
    key: Token
    value: Token

    @property
    def text(self) -> str:
        return self.value.literal


class Parser:
    def __init__(self, tokens: list[Token], issues: IssueLog) -> None:
        self.tokens = tokens
        self.issues = issues
        self.current = 0

    def parse(self) -> list[Entry]:
        entries: list[Entry] = []
        while not self.at_end():
            if self.match(TT.NEWLINE):
                continue
            entry = self.entry()
            if entry is not None:
                entries.append(entry)

        return entries

    def entry(self) -> Entry | None:
        try:
            key = self.consume(TT.KEY, "Expected a key at the start of the line")
            self.consume(TT.EQUAL, "Expected '=' after key")
            if not self.match(TT.VALUE, TT.STRING):
                raise self.error(key, "Expected a value after '='")
            value = self.previous()
            if not self.at_end():
                self.consume(TT.NEWLINE, "Expected end of line after value")

            return Entry(key, value)
        except ParseError:
            self.synchronize()
            return None

    def match(self, *types: TT) -> bool:
        for type in types:
            if self.check(type):
                self.advance()
                return True

        return False

    def consume(self, type: TT, message: str) -> Token:
        if self.check(type):
            return self.advance()

        raise self.error(self.peek(), message)

    def check(self, type: TT) -> bool:
        if self.at_end():
            return False

        return self.peek().type == type

    def advance(self) -> Token:
        if not self.at_end():
            self.current += 1

        return self.previous()

    def at_end(self) -> bool:
        return self.peek().type == TT.EOF

    def peek(self) -> Token:
        return self.tokens[self.current]

    def previous(self) -> Token:
        return self.tokens[self.current - 1]

    def error(self, token: Token, message: str) -> ParseError:
        self.issues.error(token, message)
        return ParseError()

    def synchronize(self) -> None:
        self.advance()

        while not self.at_end():
            if self.previous().type == TT.NEWLINE:
                return

            self.advance()
