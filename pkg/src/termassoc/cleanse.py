"""Strip journal boilerplate from abstracts with an ordered, editable rule set.

Four rule kinds exist:

* ``prefix_strip``   - delete a match anchored at the start of the text
* ``suffix_strip``   - delete a match that runs to the end of the text
* ``pattern_delete`` - delete every match anywhere in the text
* ``heading_strip``  - delete whole sections: the pattern is a heading-label
  alternation (no colon); a match removes everything from a label up to the
  next label or the end of the text

Patterns use regular expressions; stick to the common subset (literals,
character classes, anchors, alternation, bounded repetition) to keep rule
files portable. Patterns are validated when a rule set is loaded, never at
apply time, and may not match the empty string (cleaning must not grow text).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

RULE_KINDS = ("prefix_strip", "suffix_strip", "pattern_delete", "heading_strip")

_WS_RE = re.compile(r"\s+")


class RuleConfigError(ValueError):
    """A cleaning rule failed validation at load time."""


@dataclass
class CleaningRule:
    kind: str
    pattern: str
    enabled: bool = True

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise RuleConfigError(f"unknown rule kind {self.kind!r}")
        try:
            compiled = re.compile(self.pattern)
        except re.error as exc:
            raise RuleConfigError(f"invalid pattern {self.pattern!r}: {exc}") from exc
        if compiled.search("") is not None:
            raise RuleConfigError(f"pattern {self.pattern!r} matches the empty string")
        self._regex = _compile_for_kind(self.kind, self.pattern)

    def apply(self, text: str) -> str:
        if self.kind == "prefix_strip":
            m = self._regex.match(text)
            return text[m.end():] if m else text
        if self.kind == "suffix_strip":
            m = self._regex.search(text)
            return text[: m.start()] if m else text
        # pattern_delete and heading_strip both substitute with a space so
        # adjacent words never fuse; whitespace collapse tidies up afterwards.
        return self._regex.sub(" ", text)


def _compile_for_kind(kind: str, pattern: str):
    if kind == "suffix_strip":
        return re.compile(f"(?:{pattern})\\s*\\Z", re.DOTALL)
    if kind == "heading_strip":
        label = f"(?:{pattern})\\s*:"
        return re.compile(f"{label}.*?(?={label}|\\Z)", re.DOTALL)
    return re.compile(pattern)


def clean_abstract(text: str, rules: list[CleaningRule]) -> str:
    """Apply enabled rules in declared order, then normalize whitespace."""
    for rule in rules:
        if rule.enabled:
            text = rule.apply(text)
    return _WS_RE.sub(" ", text).strip()


def load_rules(source) -> list[CleaningRule]:
    """Load rules from a JSON file path or an already-parsed list of dicts.

    Each entry is {"kind": ..., "pattern": ..., "enabled": ...}; enabled
    defaults to true. Invalid entries raise RuleConfigError immediately.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            entries = json.load(fh)
    else:
        entries = source
    if not isinstance(entries, list):
        raise RuleConfigError("rule file must contain a JSON list of rule objects")
    rules = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "kind" not in entry or "pattern" not in entry:
            raise RuleConfigError(f"rule {i}: each rule needs 'kind' and 'pattern'")
        rules.append(
            CleaningRule(
                kind=entry["kind"],
                pattern=entry["pattern"],
                enabled=bool(entry.get("enabled", True)),
            )
        )
    return rules


def default_rules() -> list[CleaningRule]:
    """The bundled rule set: copyright tails, license statements, heading labels."""
    data = resources.files(__package__).joinpath("data/default_rules.json").read_text("utf-8")
    return load_rules(json.loads(data))
