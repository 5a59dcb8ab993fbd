"""Rule-based automatic evaluation of generated math solutions.

Extraction takes the content of the last balanced ``\\boxed{...}`` in the
text (models often restate answers; the final box is the commitment), with
a fallback to final-answer cue phrases. Equivalence is heuristic: string
comparison on a normalized canonical form plus exact rational arithmetic,
with a small absolute tolerance when a decimal literal is involved. No
CAS-level symbolic equivalence is attempted: ``x(x+1)`` and ``x^2+x``
compare unequal by design.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import ValidationError

#: Absolute tolerance applied when comparing against a decimal literal.
DECIMAL_TOLERANCE = Fraction(1, 10**6)

_CUE_PHRASES = ("final answer is", "answer:")

_SPACING_MACROS = ("\\left", "\\right", "\\,", "\\;", "\\!", "\\quad", "\\qquad")

_INTEGER_RE = re.compile(r"^-?\d+$")
_SLASH_RATIONAL_RE = re.compile(r"^(-?\d+)/(-?\d+)$")
_FRAC_RATIONAL_RE = re.compile(r"^-?\\frac\{-?\d+\}\{-?\d+\}$")
_FRAC_PARTS_RE = re.compile(r"^(-?)\\frac\{(-?\d+)\}\{(-?\d+)\}$")
_DECIMAL_RE = re.compile(r"^-?(\d+\.\d*|\.\d+)$")


class AnswerKind(str, Enum):
    INTEGER = "INTEGER"
    RATIONAL = "RATIONAL"
    DECIMAL = "DECIMAL"
    EXPRESSION = "EXPRESSION"
    NONE = "NONE"


@dataclass(frozen=True)
class ExtractedAnswer:
    """A final answer pulled out of solution text.

    ``raw`` is the text as found; ``canonical`` is its normalized form.
    ``kind`` is NONE exactly when ``canonical`` is empty.
    """

    raw: str
    canonical: str
    kind: AnswerKind

    def __post_init__(self):
        if (self.kind is AnswerKind.NONE) != (self.canonical == ""):
            raise ValidationError("kind=NONE must coincide with an empty canonical form")


@dataclass(frozen=True)
class AutoVerdict:
    solution_id: str
    correct: bool
    extracted: ExtractedAnswer

    def __post_init__(self):
        if self.correct and self.extracted.kind is AnswerKind.NONE:
            raise ValidationError("a verdict cannot be correct without an extracted answer")


NO_ANSWER = ExtractedAnswer(raw="", canonical="", kind=AnswerKind.NONE)


def _strip_outer_boxed(s: str) -> str:
    """Unwrap ``\\boxed{...}`` when it spans the entire string."""
    prefix = "\\boxed{"
    if not (s.startswith(prefix) and s.endswith("}")):
        return s
    depth = 0
    for i, ch in enumerate(s[len(prefix) - 1 :], start=len(prefix) - 1):
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                # Only unwrap when the matching brace is the last character.
                if i == len(s) - 1:
                    return s[len(prefix) : -1]
                return s
    return s


def _strip_delimiters(s: str) -> str:
    for open_, close in (("$", "$"), ("\\(", "\\)"), ("\\[", "\\]")):
        if len(s) > len(open_) + len(close) - 1 and s.startswith(open_) and s.endswith(close):
            return s[len(open_) : -len(close)]
    return s


def _normalize_once(s: str) -> str:
    s = s.strip()
    while s.endswith("."):
        s = s[:-1].rstrip()
    s = _strip_delimiters(s)
    s = _strip_outer_boxed(s)
    for macro in _SPACING_MACROS:
        s = s.replace(macro, "")
    s = s.replace("\\dfrac", "\\frac").replace("\\tfrac", "\\frac")
    s = re.sub(r"\s+", "", s)
    # Fold redundant leading signs: "+x" -> "x", "--x" -> "x".
    while True:
        if s.startswith("+"):
            s = s[1:]
        elif s.startswith("--"):
            s = s[2:]
        else:
            break
    return s


def normalize_answer(s: str) -> str:
    """Canonicalize an answer string; idempotent by construction.

    The single-pass transform is applied until a fixed point: each pass
    only removes or rewrites-shorter, so this terminates.
    """
    current = s
    while True:
        nxt = _normalize_once(current)
        if nxt == current:
            return current
        current = nxt


def classify(canonical: str) -> AnswerKind:
    if canonical == "":
        return AnswerKind.NONE
    if _INTEGER_RE.match(canonical):
        return AnswerKind.INTEGER
    if _SLASH_RATIONAL_RE.match(canonical) or _FRAC_RATIONAL_RE.match(canonical):
        return AnswerKind.RATIONAL
    if _DECIMAL_RE.match(canonical):
        return AnswerKind.DECIMAL
    return AnswerKind.EXPRESSION


def _parse_number(canonical: str) -> tuple[Fraction, bool] | None:
    """Parse a canonical form to (value, is_decimal_literal), or None."""
    if _INTEGER_RE.match(canonical):
        return Fraction(int(canonical)), False
    m = _SLASH_RATIONAL_RE.match(canonical)
    if m:
        den = int(m.group(2))
        if den == 0:
            return None
        return Fraction(int(m.group(1)), den), False
    m = _FRAC_PARTS_RE.match(canonical)
    if m:
        den = int(m.group(3))
        if den == 0:
            return None
        value = Fraction(int(m.group(2)), den)
        if m.group(1) == "-":
            value = -value
        return value, False
    if _DECIMAL_RE.match(canonical):
        return Fraction(canonical), True
    try:
        # Scientific notation and other plain numeric literals.
        return Fraction(canonical), True
    except (ValueError, ZeroDivisionError):
        return None


def _find_boxed(text: str) -> list[str]:
    """All balanced ``\\boxed{...}`` contents, left to right."""
    marker = "\\boxed{"
    found: list[str] = []
    i = 0
    while True:
        start = text.find(marker, i)
        if start < 0:
            break
        depth = 1
        j = start + len(marker)
        while j < len(text) and depth > 0:
            if text[j] == "{":
                depth += 1
            elif text[j] == "}":
                depth -= 1
            j += 1
        if depth == 0:
            found.append(text[start + len(marker) : j - 1])
            i = j
        else:
            i = start + len(marker)
    return found


def _make_extracted(raw: str) -> ExtractedAnswer:
    canonical = normalize_answer(raw)
    if canonical == "":
        return NO_ANSWER
    return ExtractedAnswer(raw=raw, canonical=canonical, kind=classify(canonical))


def extract_answer(text: str) -> ExtractedAnswer:
    """Pull the final answer out of solution text; total, never raises.

    The last balanced box wins. Without a box, the remainder of the line
    after the last final-answer cue phrase is used. Failure is encoded as
    kind=NONE.
    """
    boxes = _find_boxed(text)
    if boxes:
        return _make_extracted(boxes[-1])
    lowered = text.lower()
    best = -1
    cue_len = 0
    for cue in _CUE_PHRASES:
        pos = lowered.rfind(cue)
        if pos > best:
            best = pos
            cue_len = len(cue)
    if best >= 0:
        tail = text[best + cue_len :]
        tail = tail.split("\n", 1)[0].lstrip(" \t:")
        return _make_extracted(tail)
    return NO_ANSWER


def answers_equal(extracted: ExtractedAnswer, gold: str) -> bool:
    """Heuristic equivalence between an extracted answer and the gold text.

    Canonical string equality first; otherwise numeric comparison with
    exact rational arithmetic for integer/fraction forms and an absolute
    tolerance of 1e-6 when a decimal literal is involved (so 0.5 equals
    1/2, but 0.33 does not equal 1/3).
    """
    if extracted.kind is AnswerKind.NONE:
        return False
    gold_canonical = normalize_answer(gold)
    if gold_canonical == "":
        return False
    if extracted.canonical == gold_canonical:
        return True
    lhs = _parse_number(extracted.canonical)
    rhs = _parse_number(gold_canonical)
    if lhs is None or rhs is None:
        return False
    lhs_value, lhs_decimal = lhs
    rhs_value, rhs_decimal = rhs
    if lhs_decimal or rhs_decimal:
        return abs(lhs_value - rhs_value) <= DECIMAL_TOLERANCE
    return lhs_value == rhs_value


def grade(text: str, gold: str, *, solution_id: str = "") -> AutoVerdict:
    """Extract and compare in one step; idempotent and pure."""
    extracted = extract_answer(text)
    return AutoVerdict(
        solution_id=solution_id,
        correct=answers_equal(extracted, gold),
        extracted=extracted,
    )
