"""Parser for transfer functions written in Laplace-variable notation.

Grammar (whitespace is insignificant)::

    expr := poly "/" poly | poly
    poly := "(" poly ")" | term (("+" | "-") term)*
    term := [sign] coeff ["*"] ["s" ["^" real]] | [sign] "s" ["^" real]

``s`` stands for ``j*omega``; a bare ``s`` has exponent 1 and a bare
constant exponent 0.  ``s^(-0.5)`` and ``s^-0.5`` are both accepted.
"""

from __future__ import annotations

import re

from .model import FractionalPolynomial, FractionalTF

__all__ = ["TFSyntaxError", "parse_tf_text", "format_tf_text"]

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<s>s)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


class TFSyntaxError(ValueError):
    def __init__(self, message, text, pos):
        self.pos = pos
        super().__init__("%s at position %d: %r" % (message, pos, text))


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise TFSyntaxError("unexpected character %r" % text[pos], text, pos)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return TFSyntaxError(message, self.text, tok[2])

    def accept(self, value):
        if self.peek()[1] == value and self.peek()[0] in ("op", "s"):
            return self.take()
        return None

    def expect(self, value):
        tok = self.accept(value)
        if tok is None:
            raise self.error("expected %r" % value)
        return tok

    def expr(self):
        num = self.poly()
        if self.accept("/"):
            if self.peek()[0] == "end":
                raise self.error("empty denominator")
            den = self.poly()
        else:
            den = [(1.0, 0.0)]
        if self.peek()[0] != "end":
            raise self.error("unexpected %r" % self.peek()[1])
        return num, den

    def poly(self):
        if self.accept("("):
            if self.accept(")"):
                raise self.error("empty polynomial", self.tokens[self.i - 1])
            terms = self.poly()
            self.expect(")")
            return terms
        terms = [self.term(allow_sign=True)]
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            sign = -1.0 if self.take()[1] == "-" else 1.0
            c, e = self.term(allow_sign=False)
            terms.append((sign * c, e))
        return terms

    def real(self):
        sign = 1.0
        if self.accept("-"):
            sign = -1.0
        elif self.accept("+"):
            pass
        tok = self.peek()
        if tok[0] != "num":
            raise self.error("expected a number")
        self.take()
        return sign * float(tok[1])

    def exponent(self):
        if not self.accept("^"):
            return 1.0
        if self.accept("("):
            e = self.real()
            self.expect(")")
            return e
        return self.real()

    def term(self, allow_sign):
        sign = 1.0
        if allow_sign:
            if self.accept("-"):
                sign = -1.0
            else:
                self.accept("+")
        tok = self.peek()
        if tok[0] == "num":
            coeff = float(self.take()[1])
            star = self.accept("*")
            if self.accept("s"):
                return sign * coeff, self.exponent()
            if star:
                raise self.error("expected 's' after '*'")
            return sign * coeff, 0.0
        if tok[0] == "s":
            self.take()
            return sign, self.exponent()
        raise self.error("expected a term")


def parse_tf_text(text: str) -> FractionalTF:
    """Parse e.g. ``"1 / (0.8 s^2.2 + 0.5 s^0.9 + 1)"`` into a transfer function."""
    if not text.strip():
        raise TFSyntaxError("empty expression", text, 0)
    num, den = _Parser(text).expr()
    try:
        return FractionalTF(FractionalPolynomial(tuple(num)), FractionalPolynomial(tuple(den)))
    except ValueError as exc:
        raise TFSyntaxError(str(exc), text, 0) from exc


def _poly_text(p: FractionalPolynomial) -> str:
    out = []
    for k, t in enumerate(p.terms):
        c = t.coefficient
        sign = "-" if c < 0 else "+"
        body = repr(abs(c))
        if t.exponent != 0.0:
            body += " s^" + repr(t.exponent)
        if k == 0:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append("%s %s" % (sign, body))
    return " ".join(out)


def format_tf_text(g: FractionalTF) -> str:
    """Inverse of :func:`parse_tf_text` (round-trips exactly)."""
    return "(%s) / (%s)" % (_poly_text(g.num), _poly_text(g.den))
