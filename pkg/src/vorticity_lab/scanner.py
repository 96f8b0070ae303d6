from typing import Any

from vorticity_lab.errors import IssueLog
from vorticity_lab.tokens import Token, TokenType as TT


def is_key_char(char: str) -> bool:
    return char.isascii() and char.isalnum() or char in "_-"


class Scanner:
    def __init__(self, source: str, issues: IssueLog) -> None:
        self.source = source
        self.issues = issues
        self.tokens: list[Token] = []

        self.start = 0
        self.current = 0
        self.line = 1

    def scan_tokens(self) -> list[Token]:
        while not self.at_end():
            self.start = self.current
            self.scan_token()

        self.tokens.append(Token(TT.EOF, "", self.line))
        return self.tokens

    def at_end(self) -> bool:
        return self.current >= len(self.source)

    def scan_token(self) -> None:
        ch = self.advance()

        match ch:
            case "#":
                self.comment()
            case "=":
                self.add_token(TT.EQUAL)
                self.value()
            case "\n":
                self.add_token(TT.NEWLINE)
                self.line += 1
            case ch if is_key_char(ch):
                self.key()
            case ch if ch not in " \r\t":
                self.issues.error(self.line, f"Unexpected character `{ch}`")

    def advance(self) -> str:
        ch = self.source[self.current]
        self.current += 1
        return ch

    def add_token(self, type: TT, literal: Any = None) -> None:
        text = self.source[self.start : self.current]
        self.tokens.append(Token(type, text, self.line, literal))

    def peek(self) -> str:
        return self.source[self.current] if not self.at_end() else "\0"

    def comment(self) -> None:
        while self.peek() != "\n" and not self.at_end():
            self.advance()

    def key(self) -> None:
        while is_key_char(self.peek()):
            self.advance()

        self.add_token(TT.KEY)

    def value(self) -> None:
        while self.peek() in " \t":
            self.advance()

        self.start = self.current
        if self.peek() == '"':
            self.advance()
            self.string()
            return

        while self.peek() not in "\n#" and not self.at_end():
            self.advance()

        text = self.source[self.start : self.current].strip()
        if text:
            self.tokens.append(Token(TT.VALUE, text, self.line, text))

    def string(self) -> None:
        while self.peek() != '"' and self.peek() != "\n" and not self.at_end():
            self.advance()

        if self.peek() != '"':
            self.issues.error(self.line, "Unterminated string at end of line")
            return

        self.advance()

        value = self.source[self.start + 1 : self.current - 1]
        self.add_token(TT.STRING, value)
