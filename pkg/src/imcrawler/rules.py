"""Declarative extraction rules.

Rules are data, not code: a rules file holds one rule per line,

    name | step > step > step | one|many | text|attr:NAME

where each step is ``TAG``, ``TAG[attr=value]``, ``[attr=value]`` (any tag),
with any number of ``[attr=value]`` predicates and an optional 1-based
positional suffix ``:K``. Evaluation starts at a root node; every step
selects matching element descendants of the previous step's matches, in
document order. See docs/rules_format.md for the grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .dom import DomNode, DomTree
from .errors import MultiplicityViolation, RuleSyntaxError

_STEP_RE = re.compile(
    r"^(?P<tag>[a-zA-Z][a-zA-Z0-9-]*)?"
    r"(?P<preds>(?:\[[^\[\]=]+=[^\[\]]*\])*)"
    r"(?::(?P<index>[0-9]+))?$"
)
_PRED_RE = re.compile(r"\[([^\[\]=]+)=([^\[\]]*)\]")


@dataclass(frozen=True)
class SelectorStep:
    tag: str | None
    attrs: tuple[tuple[str, str], ...]
    index: int | None = None

    def matches(self, node: DomNode) -> bool:
        if self.tag is not None and node.tag != self.tag:
            return False
        for name, value in self.attrs:
            if node.attrs.get(name) != value:
                return False
        return True


@dataclass(frozen=True)
class ExtractionRule:
    name: str
    steps: tuple[SelectorStep, ...]
    multiplicity: str  # "one" | "many"
    capture: tuple[str, str | None]  # ("text", None) | ("attr", attr_name)


def _parse_step(text: str, path: str, line_no: int) -> SelectorStep:
    m = _STEP_RE.match(text)
    if not m or (m.group("tag") is None and not m.group("preds")):
        raise RuleSyntaxError(path, line_no, f"bad selector step {text!r}")
    preds = tuple(
        (name.strip(), value.strip())
        for name, value in _PRED_RE.findall(m.group("preds"))
    )
    index = int(m.group("index")) if m.group("index") else None
    if index is not None and index < 1:
        raise RuleSyntaxError(path, line_no, "positional index is 1-based")
    return SelectorStep(m.group("tag"), preds, index)


def parse_rule_line(line: str, path: str = "<string>", line_no: int = 0) -> ExtractionRule:
    parts = [p.strip() for p in line.split("|")]
    if len(parts) != 4:
        raise RuleSyntaxError(path, line_no, "expected 4 |-separated fields")
    name, steps_text, multiplicity, capture_text = parts
    if not name:
        raise RuleSyntaxError(path, line_no, "empty rule name")
    if multiplicity not in ("one", "many"):
        raise RuleSyntaxError(path, line_no, f"multiplicity must be one|many, got {multiplicity!r}")
    steps = tuple(
        _parse_step(s.strip(), path, line_no) for s in steps_text.split(">")
    )
    if capture_text == "text":
        capture: tuple[str, str | None] = ("text", None)
    elif capture_text.startswith("attr:") and len(capture_text) > 5:
        capture = ("attr", capture_text[5:].strip())
    else:
        raise RuleSyntaxError(path, line_no, f"capture must be text or attr:NAME, got {capture_text!r}")
    return ExtractionRule(name, steps, multiplicity, capture)


class RuleSet:
    """Named rules loaded from one file."""

    def __init__(self, rules: dict[str, ExtractionRule]) -> None:
        self.rules = rules

    def __getitem__(self, name: str) -> ExtractionRule:
        return self.rules[name]

    def __contains__(self, name: str) -> bool:
        return name in self.rules

    def names(self) -> list[str]:
        return sorted(self.rules)


def parse_rules(text: str, path: str = "<string>") -> RuleSet:
    rules: dict[str, ExtractionRule] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rule = parse_rule_line(line, path, no)
        if rule.name in rules:
            raise RuleSyntaxError(path, no, f"duplicate rule name {rule.name!r}")
        rules[rule.name] = rule
    return RuleSet(rules)


def load_rules(path: str) -> RuleSet:
    with open(path, encoding="utf-8") as fh:
        return parse_rules(fh.read(), path)


def default_rules() -> RuleSet:
    """The rule set matching the bundled fixture's page templates."""
    text = resources.files("imcrawler.data").joinpath("default_rules.txt").read_text("utf-8")
    return parse_rules(text, "imcrawler/data/default_rules.txt")


# --- evaluation ---------------------------------------------------------------

def select_nodes(root: DomTree | DomNode, rule: ExtractionRule) -> list[DomNode]:
    """Nodes matched by the rule's step chain, in document order.

    Raises MultiplicityViolation if a ``one`` rule matches more than a
    single node (a template-drift signal, never silently truncated).
    """
    if isinstance(root, DomTree):
        frontier: list[DomNode] = [root.root]
    else:
        frontier = [root]
    for step in rule.steps:
        matched: list[DomNode] = []
        seen: set[int] = set()  # frontier subtrees can nest; keep first visit only
        for node in frontier:
            for cand in node.iter_descendants():
                if id(cand) not in seen and step.matches(cand):
                    seen.add(id(cand))
                    matched.append(cand)
        if step.index is not None:
            matched = [matched[step.index - 1]] if len(matched) >= step.index else []
        frontier = matched
        if not frontier:
            break
    if rule.multiplicity == "one" and len(frontier) > 1:
        raise MultiplicityViolation(rule.name, len(frontier))
    return frontier


def apply_rule(root: DomTree | DomNode, rule: ExtractionRule) -> list[str]:
    """Captured strings for the rule: node text, or an attribute value.

    Attribute captures skip matched nodes lacking the attribute.
    """
    captures: list[str] = []
    kind, attr_name = rule.capture
    for node in select_nodes(root, rule):
        if kind == "text":
            captures.append(node.text())
        else:
            value = node.attrs.get(attr_name or "")
            if value is not None:
                captures.append(value)
    return captures
