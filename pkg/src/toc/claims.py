"""Claim domain model: elements, edit operations, and deterministic edits.

A claim is an ordered list of addressable elements produced by a fixed
decomposition grammar:

* the preamble boundary is the first ", comprising:" or ", consisting of:";
  everything up to and including the keyword (but not the colon) becomes the
  preamble element;
* the remainder splits on top-level semicolons (semicolons inside
  parentheses do not split);
* subordinate clauses attached with ", wherein" or ", further comprising"
  are split off into their own elements.

The canonical rendering joins the preamble to the body with ": " and body
elements with "; ".  ``Claim.raw_text`` always holds the canonical
rendering, so decomposition is idempotent through rendering.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, field
from enum import Enum


class ClaimModelError(Exception):
    """Base for claim model failures."""


class InvalidClaimError(ClaimModelError):
    """Raised for empty or structurally unusable claim text."""


class TargetNotFoundError(ClaimModelError):
    """An edit referenced an element id that is not in the claim."""


class InvalidActionError(ClaimModelError):
    """An edit payload cannot be applied as specified."""


class ScopeDestroyingError(InvalidActionError):
    """An edit would leave the claim without any elements."""


class EditOperationType(str, Enum):
    """Closed set of edit operations an editor may propose."""

    ADD_NOVEL_FEATURE = "AddNovelFeature"
    REPLACE_SYNONYM = "ReplaceSynonym"
    REFRAME_VIA_FIGURE = "ReframeViaFigure"
    DROP_ELEMENT = "DropElement"
    MERGE_ELEMENTS = "MergeElements"
    SPLIT_ELEMENT = "SplitElement"
    ADD_LIMITATION = "AddLimitation"
    MODIFY_RELATIONSHIP = "ModifyRelationship"
    CHANGE_ORDER = "ChangeOrder"
    ADD_DEPENDENCY = "AddDependency"


# Marker separating the parts of a SplitElement payload.
SPLIT_MARKER = "||"


@dataclass(frozen=True)
class ClaimElement:
    element_id: str
    element_type: str
    text: str

    def __post_init__(self) -> None:
        if not self.element_id:
            raise InvalidClaimError("element_id must be non-empty")
        if not self.text.strip():
            raise InvalidClaimError(
                f"element {self.element_id!r} has empty text"
            )

    def to_dict(self) -> dict:
        return {
            "element_id": self.element_id,
            "element_type": self.element_type,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClaimElement":
        return cls(
            element_id=data["element_id"],
            element_type=data["element_type"],
            text=data["text"],
        )


@dataclass(frozen=True)
class Claim:
    claim_id: str
    elements: tuple[ClaimElement, ...]
    raw_text: str

    def __post_init__(self) -> None:
        if not self.elements:
            raise InvalidClaimError("claim must contain at least one element")
        ids = [e.element_id for e in self.elements]
        if len(set(ids)) != len(ids):
            raise InvalidClaimError(f"duplicate element ids in {self.claim_id!r}")
        if self.raw_text != render_elements(self.elements):
            raise InvalidClaimError(
                "raw_text is not the canonical rendering of the elements"
            )

    @classmethod
    def from_elements(
        cls, claim_id: str, elements: "list[ClaimElement] | tuple[ClaimElement, ...]"
    ) -> "Claim":
        elements = tuple(elements)
        return cls(claim_id, elements, render_elements(elements))

    def element_ids(self) -> list[str]:
        return [e.element_id for e in self.elements]

    def get(self, element_id: str) -> ClaimElement:
        for e in self.elements:
            if e.element_id == element_id:
                return e
        raise TargetNotFoundError(
            f"element {element_id!r} not in claim {self.claim_id!r}"
        )

    def to_dict(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "raw_text": self.raw_text,
            "elements": [e.to_dict() for e in self.elements],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Claim":
        return cls(
            claim_id=data["claim_id"],
            elements=tuple(ClaimElement.from_dict(e) for e in data["elements"]),
            raw_text=data["raw_text"],
        )


@dataclass(frozen=True)
class PriorArtDocument:
    doc_id: str
    title: str
    description: str
    figure_refs: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise InvalidClaimError(f"prior art {self.doc_id!r} has empty description")

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "description": self.description,
            "figure_refs": list(self.figure_refs),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PriorArtDocument":
        return cls(
            doc_id=data["doc_id"],
            title=data["title"],
            description=data["description"],
            figure_refs=tuple(data.get("figure_refs", ())),
        )


@dataclass(frozen=True)
class EditAction:
    """One proposed edit.

    ``target_element_id`` holds a single element id, except for
    MergeElements where it holds two or more ids joined by commas, and
    ChangeOrder where ``modified_text`` holds the full id permutation
    joined by commas.
    """

    op_type: EditOperationType
    target_element_id: str
    modified_text: str
    rationale: str
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidActionError(
                f"confidence {self.confidence} outside [0, 1]"
            )
        if not self.target_element_id.strip():
            raise InvalidActionError("target_element_id must be non-empty")

    @property
    def target_ids(self) -> tuple[str, ...]:
        return tuple(t.strip() for t in self.target_element_id.split(",") if t.strip())

    def to_dict(self) -> dict:
        return {
            "op_type": self.op_type.value,
            "target_element_id": self.target_element_id,
            "modified_text": self.modified_text,
            "rationale": self.rationale,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EditAction":
        return cls(
            op_type=EditOperationType(data["op_type"]),
            target_element_id=data["target_element_id"],
            modified_text=data["modified_text"],
            rationale=data["rationale"],
            confidence=data["confidence"],
        )


@dataclass(frozen=True)
class PrecedenceRule:
    """``before`` must not follow ``after`` on the same element."""

    before: EditOperationType
    after: EditOperationType


DEFAULT_PRECEDENCE_RULES: frozenset[PrecedenceRule] = frozenset(
    {PrecedenceRule(EditOperationType.ADD_NOVEL_FEATURE, EditOperationType.REPLACE_SYNONYM)}
)


@dataclass(frozen=True)
class PrecedenceViolation:
    """An out-of-order pair: the rule's after-op at ``after_index`` ran
    before the rule's before-op at ``before_index``."""

    rule: PrecedenceRule
    after_index: int
    before_index: int


@dataclass(frozen=True)
class LabeledInstance:
    """Gold disclosure label for one claim element."""

    element_id: str
    disclosed: bool
    evidence: str = ""
    justification: str = ""

    def to_dict(self) -> dict:
        return {
            "element_id": self.element_id,
            "disclosed": self.disclosed,
            "evidence": self.evidence,
            "justification": self.justification,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LabeledInstance":
        return cls(
            element_id=data["element_id"],
            disclosed=data["disclosed"],
            evidence=data.get("evidence", ""),
            justification=data.get("justification", ""),
        )


# ---- decomposition ----------------------------------------------------

_PREAMBLE_BOUNDARY = re.compile(r",\s*(comprising|consisting\s+of)\s*:\s*", re.IGNORECASE)
_SUBORDINATE_SPLIT = re.compile(r",\s+(?=(?:wherein|further\s+comprising)\b)", re.IGNORECASE)
_PREAMBLE_TAIL = re.compile(r"\b(comprising|consisting\s+of)\s*$", re.IGNORECASE)


def _split_top_level_semicolons(text: str) -> list[str]:
    parts: list[str] = []
    depth = 0
    start = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif ch == ";" and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def decompose_claim(raw_text: str) -> list[ClaimElement]:
    """Split claim text into addressable elements per the fixed grammar.

    Deterministic: the same text always yields the same element ids
    (e1, e2, ...) and texts.
    """
    if not raw_text or not raw_text.strip():
        raise InvalidClaimError("claim text is empty")
    text = raw_text.strip()

    segments: list[tuple[str, str]] = []  # (element_type, text)
    m = _PREAMBLE_BOUNDARY.search(text)
    if m:
        preamble = text[: m.start()] + ", " + m.group(1)
        segments.append(("preamble", re.sub(r"\s+", " ", preamble).strip()))
        body = text[m.end():]
    else:
        body = text

    for part in _split_top_level_semicolons(body):
        part = part.strip()
        if not part:
            continue
        for sub in _SUBORDINATE_SPLIT.split(part):
            sub = sub.strip()
            if not sub:
                continue
            kind = "limitation" if re.match(r"(?:wherein|further\s+comprising)\b", sub, re.IGNORECASE) else "body"
            segments.append((kind, sub))

    if not segments:
        raise InvalidClaimError("claim text decomposed to zero elements")

    return [
        ClaimElement(element_id=f"e{i}", element_type=kind, text=seg)
        for i, (kind, seg) in enumerate(segments, start=1)
    ]


def render_elements(elements: "tuple[ClaimElement, ...] | list[ClaimElement]") -> str:
    """Join element texts with the canonical joiner.

    The preamble (an element whose text ends with "comprising" or
    "consisting of") is followed by ": "; body elements are joined by "; ".
    """
    if not elements:
        return ""
    texts = [e.text for e in elements]
    if len(texts) > 1 and _PREAMBLE_TAIL.search(texts[0]):
        return texts[0] + ": " + "; ".join(texts[1:])
    return "; ".join(texts)


def parse_claim(claim_id: str, raw_text: str) -> Claim:
    """Decompose raw text and build a claim in canonical rendering."""
    return Claim.from_elements(claim_id, decompose_claim(raw_text))


# ---- edit application -------------------------------------------------

_REPLACE_OPS = {
    EditOperationType.ADD_NOVEL_FEATURE,
    EditOperationType.ADD_LIMITATION,
    EditOperationType.REPLACE_SYNONYM,
    EditOperationType.MODIFY_RELATIONSHIP,
    EditOperationType.REFRAME_VIA_FIGURE,
}


def _append_clause(text: str, clause: str) -> str:
    # keep a single trailing period on the outside of the appended clause
    body, dot = (text[:-1].rstrip(), ".") if text.endswith(".") else (text, "")
    return f"{body.rstrip(',;')}, {clause}{dot}"


def apply_action(claim: Claim, action: EditAction) -> Claim:
    """Apply one edit and return a new claim; the input claim is unchanged.

    Element ids of untouched elements are preserved.  SplitElement parts
    get ids derived from the target id ("e2" -> "e2.1", "e2.2", ...).
    """
    elements = list(claim.elements)
    ids = [e.element_id for e in elements]
    op = action.op_type

    if op == EditOperationType.CHANGE_ORDER:
        order = [t.strip() for t in action.modified_text.split(",") if t.strip()]
        if sorted(order) != sorted(ids) or len(order) != len(ids):
            raise InvalidActionError(
                "ChangeOrder payload must be a permutation of all element ids"
            )
        by_id = {e.element_id: e for e in elements}
        return Claim.from_elements(claim.claim_id, [by_id[i] for i in order])

    if op == EditOperationType.MERGE_ELEMENTS:
        targets = action.target_ids
        if len(targets) < 2:
            raise InvalidActionError("MergeElements requires at least two targets")
        for t in targets:
            if t not in ids:
                raise TargetNotFoundError(f"element {t!r} not in claim {claim.claim_id!r}")
        if len(set(targets)) == len(ids):
            # the merged survivor keeps the claim non-empty, so this is fine
            pass
        if not action.modified_text.strip():
            raise InvalidActionError("MergeElements requires non-empty merged text")
        survivor = targets[0]
        dropped = set(targets[1:])
        out = []
        for e in elements:
            if e.element_id == survivor:
                out.append(ClaimElement(survivor, e.element_type, action.modified_text))
            elif e.element_id not in dropped:
                out.append(e)
        return Claim.from_elements(claim.claim_id, out)

    # remaining ops take exactly one target
    target = action.target_element_id.strip()
    if target not in ids:
        raise TargetNotFoundError(f"element {target!r} not in claim {claim.claim_id!r}")

    if op == EditOperationType.DROP_ELEMENT:
        if len(elements) == 1:
            raise ScopeDestroyingError("cannot drop the last remaining element")
        out = [e for e in elements if e.element_id != target]
        return Claim.from_elements(claim.claim_id, out)

    if op == EditOperationType.SPLIT_ELEMENT:
        parts = [p.strip() for p in action.modified_text.split(SPLIT_MARKER)]
        if len(parts) < 2 or any(not p for p in parts):
            raise InvalidActionError(
                f"SplitElement payload needs two or more {SPLIT_MARKER!r}-separated parts"
            )
        new_ids = [f"{target}.{i}" for i in range(1, len(parts) + 1)]
        for nid in new_ids:
            if nid in ids:
                raise InvalidActionError(f"split id {nid!r} collides with an existing element")
        out = []
        for e in elements:
            if e.element_id == target:
                out.extend(
                    ClaimElement(nid, e.element_type, part)
                    for nid, part in zip(new_ids, parts)
                )
            else:
                out.append(e)
        return Claim.from_elements(claim.claim_id, out)

    if op == EditOperationType.ADD_DEPENDENCY:
        if not action.modified_text.strip():
            raise InvalidActionError("AddDependency requires a non-empty clause")
        out = [
            ClaimElement(e.element_id, e.element_type, _append_clause(e.text, action.modified_text.strip()))
            if e.element_id == target
            else e
            for e in elements
        ]
        return Claim.from_elements(claim.claim_id, out)

    if op in _REPLACE_OPS:
        if not action.modified_text.strip():
            raise InvalidActionError(f"{op.value} requires non-empty modified_text")
        out = [
            ClaimElement(e.element_id, e.element_type, action.modified_text)
            if e.element_id == target
            else e
            for e in elements
        ]
        return Claim.from_elements(claim.claim_id, out)

    raise InvalidActionError(f"unhandled operation {op!r}")


def validate_sequence(
    history: "list[EditAction]",
    rules: "frozenset[PrecedenceRule] | set[PrecedenceRule]" = DEFAULT_PRECEDENCE_RULES,
) -> list[PrecedenceViolation]:
    """Check an action sequence against precedence rules.

    A rule (before, after) is violated when an action of the after type
    appears earlier than an action of the before type targeting a shared
    element.  Returns one violation per offending index pair; the empty
    list means the sequence is admissible.  Any prefix of an admissible
    sequence is admissible.
    """
    violations: list[PrecedenceViolation] = []
    for rule in sorted(rules, key=lambda r: (r.before.value, r.after.value)):
        for i, earlier in enumerate(history):
            if earlier.op_type != rule.after:
                continue
            for j in range(i + 1, len(history)):
                later = history[j]
                if later.op_type != rule.before:
                    continue
                if set(earlier.target_ids) & set(later.target_ids):
                    violations.append(PrecedenceViolation(rule, i, j))
    return violations


def rules_acyclic(rules: "frozenset[PrecedenceRule] | set[PrecedenceRule]") -> bool:
    """True when the precedence graph has no cycle."""
    graph: dict[EditOperationType, set[EditOperationType]] = {}
    for rule in rules:
        graph.setdefault(rule.before, set()).add(rule.after)

    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[EditOperationType, int] = {}

    def visit(node: EditOperationType) -> bool:
        color[node] = GRAY
        for nxt in graph.get(node, ()):
            c = color.get(nxt, WHITE)
            if c == GRAY:
                return False
            if c == WHITE and not visit(nxt):
                return False
        color[node] = BLACK
        return True

    for node in graph:
        if color.get(node, WHITE) == WHITE and not visit(node):
            return False
    return True


# ---- diffing ----------------------------------------------------------

@dataclass(frozen=True)
class ClaimDiff:
    added: tuple[str, ...]
    removed: tuple[str, ...]
    modified: tuple[str, ...]
    token_diffs: "dict[str, tuple[str, ...]]" = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not (self.added or self.removed or self.modified)


def diff_claims(a: Claim, b: Claim) -> ClaimDiff:
    """Align elements by id and report added, removed, and modified ids.

    Modified elements carry a token-level diff in difflib ndiff style
    ("- old", "+ new", "  same").
    """
    a_by_id = {e.element_id: e for e in a.elements}
    b_by_id = {e.element_id: e for e in b.elements}
    added = tuple(i for i in b_by_id if i not in a_by_id)
    removed = tuple(i for i in a_by_id if i not in b_by_id)
    modified = []
    token_diffs: dict[str, tuple[str, ...]] = {}
    for eid, elem in a_by_id.items():
        other = b_by_id.get(eid)
        if other is None or other.text == elem.text:
            continue
        modified.append(eid)
        diff = [
            line
            for line in difflib.ndiff(elem.text.split(), other.text.split())
            if not line.startswith("?")
        ]
        token_diffs[eid] = tuple(diff)
    return ClaimDiff(added, removed, tuple(modified), token_diffs)
