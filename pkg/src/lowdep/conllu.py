"""CoNLL-U data model, reader, writer and tree validation.

Only syntactic word lines become :class:`Token` objects. Multiword-token range
lines (``3-4``) and empty nodes (``3.1``) are kept verbatim so that a
document survives a read/write cycle, but nothing downstream looks at them.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

logger = logging.getLogger(__name__)

UPOS_TAGS = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
)

_WORD_ID = re.compile(r"^[1-9][0-9]*$")
_RANGE_ID = re.compile(r"^([1-9][0-9]*)-([1-9][0-9]*)$")
_EMPTY_ID = re.compile(r"^([0-9]+)\.([1-9][0-9]*)$")
_HEAD = re.compile(r"^(0|[1-9][0-9]*)$")


class ConlluError(ValueError):
    """Base class for CoNLL-U reading problems."""


class ConlluParseError(ConlluError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ConlluStructureError(ConlluError):
    def __init__(self, message: str, sentence_index: int, line_number: int | None = None):
        where = f"sentence {sentence_index}"
        if line_number is not None:
            where += f" (starting at line {line_number})"
        super().__init__(f"{where}: {message}")
        self.sentence_index = sentence_index
        self.line_number = line_number


def parse_feats(text: str) -> tuple[tuple[str, str], ...]:
    """Parse a FEATS column into canonically sorted ``(key, value)`` pairs."""
    if text in ("", "_"):
        return ()
    pairs = []
    for item in text.split("|"):
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValueError(f"malformed feature {item!r}")
        pairs.append((key, value))
    return tuple(sorted(set(pairs)))


def format_feats(feats: Iterable[tuple[str, str]]) -> str:
    items = sorted(set(feats))
    if not items:
        return "_"
    return "|".join(f"{k}={v}" for k, v in items)


def canonical_feats(text: str) -> str:
    return format_feats(parse_feats(text))


def base_deprel(deprel: str) -> str:
    return deprel.split(":", 1)[0]


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: tuple[tuple[str, str], ...] = ()
    head: int = 0
    deprel: str = "_"
    deps: str = "_"
    misc: str = "_"

    def __post_init__(self):
        if isinstance(self.feats, str):
            object.__setattr__(self, "feats", parse_feats(self.feats))
        else:
            object.__setattr__(self, "feats", tuple(sorted(set(self.feats))))

    @property
    def feats_str(self) -> str:
        return format_feats(self.feats)

    def relocated(self, id: int, head: int, deprel: str | None = None, deps: str = "_") -> "Token":
        """Cheap copy with new id/head; skips re-canonicalising feats."""
        new = object.__new__(Token)
        fields_ = dict(self.__dict__)
        fields_.update(id=id, head=head, deps=deps)
        if deprel is not None:
            fields_["deprel"] = deprel
        object.__setattr__(new, "__dict__", fields_)
        return new

    def to_line(self) -> str:
        return "\t".join((
            str(self.id), self.form, self.lemma, self.upos, self.xpos,
            self.feats_str, str(self.head), self.deprel, self.deps, self.misc,
        ))


@dataclass(frozen=True)
class MultiwordRange:
    start: int
    end: int
    form: str
    line: str


@dataclass(frozen=True)
class EmptyNode:
    after: int  # the "3" in "3.1"
    line: str


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()
    multiword_ranges: tuple[MultiwordRange, ...] = ()
    empty_nodes: tuple[EmptyNode, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "comments", tuple(self.comments))
        object.__setattr__(self, "multiword_ranges", tuple(self.multiword_ranges))
        object.__setattr__(self, "empty_nodes", tuple(self.empty_nodes))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def heads(self) -> list[int]:
        return [t.head for t in self.tokens]

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def upos(self) -> list[str]:
        return [t.upos for t in self.tokens]

    @property
    def deprels(self) -> list[str]:
        return [t.deprel for t in self.tokens]

    def with_tokens(self, tokens: Sequence[Token]) -> "Sentence":
        return replace(self, tokens=tuple(tokens))

    def with_column(self, name: str, values: Sequence) -> "Sentence":
        """Return a copy with one token field replaced, e.g. ``("upos", tags)``."""
        if len(values) != len(self.tokens):
            raise ValueError(f"expected {len(self.tokens)} values for {name}, got {len(values)}")
        return self.with_tokens([replace(t, **{name: v}) for t, v in zip(self.tokens, values)])

    def text_lines(self) -> list[str]:
        lines = list(self.comments)
        ranges: dict[int, list[MultiwordRange]] = {}
        for mwt in self.multiword_ranges:
            ranges.setdefault(mwt.start, []).append(mwt)
        empties: dict[int, list[EmptyNode]] = {}
        for node in self.empty_nodes:
            empties.setdefault(node.after, []).append(node)
        lines.extend(n.line for n in empties.get(0, ()))
        for tok in self.tokens:
            lines.extend(m.line for m in ranges.get(tok.id, ()))
            lines.append(tok.to_line())
            lines.extend(n.line for n in empties.get(tok.id, ()))
        return lines


@dataclass
class Treebank:
    sentences: list[Sentence] = field(default_factory=list)
    name: str = ""

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __getitem__(self, index):
        return self.sentences[index]

    def __eq__(self, other):
        if not isinstance(other, Treebank):
            return NotImplemented
        return self.sentences == other.sentences


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_heads(heads: Sequence[int], ids: Sequence[int] | None = None) -> ValidationResult:
    """Check that ``heads`` (1-based, 0 = root) encode a single-rooted tree.

    Violation codes: ``gapped_ids``, ``no_root``, ``multiple_roots``,
    ``head_out_of_range``, ``cycle``.
    """
    n = len(heads)
    violations = []
    if ids is not None and list(ids) != list(range(1, n + 1)):
        violations.append("gapped_ids")
    roots = [i for i, h in enumerate(heads, 1) if h == 0]
    if not roots:
        violations.append("no_root")
    elif len(roots) > 1:
        violations.append("multiple_roots")
    if any(h < 0 or h > n for h in heads):
        violations.append("head_out_of_range")
    # any node whose head chain never reaches 0 sits on, or hangs off, a cycle
    state = [0] * (n + 1)  # 0 unvisited, 1 in progress, 2 reaches root
    state[0] = 2
    for start in range(1, n + 1):
        path = []
        node = start
        while 0 < node <= n and state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node - 1]
        if 0 < node <= n and state[node] == 1:
            violations.append("cycle")
            break
        for p in path:
            state[p] = 2
    return ValidationResult(tuple(violations))


def validate_tree(sentence: Sentence) -> ValidationResult:
    return validate_heads(sentence.heads, [t.id for t in sentence.tokens])


def _parse_word_line(cols: list[str], line_number: int) -> Token:
    if not _HEAD.match(cols[6]):
        raise ConlluParseError(f"non-integer head {cols[6]!r}", line_number)
    try:
        feats = parse_feats(cols[5])
    except ValueError as exc:
        raise ConlluParseError(str(exc), line_number) from None
    return Token(
        id=int(cols[0]), form=cols[1], lemma=cols[2], upos=cols[3], xpos=cols[4],
        feats=feats, head=int(cols[6]), deprel=cols[7], deps=cols[8], misc=cols[9],
    )


def _parse_block(lines: list[tuple[int, str]], index: int, validate: bool) -> Sentence:
    comments, tokens, ranges, empties = [], [], [], []
    for number, line in lines:
        if line.startswith("#"):
            if tokens or ranges or empties:
                raise ConlluParseError("comment inside sentence body", number)
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluParseError(f"expected 10 columns, found {len(cols)}", number)
        ident = cols[0]
        if m := _RANGE_ID.match(ident):
            ranges.append(MultiwordRange(int(m.group(1)), int(m.group(2)), cols[1], line))
        elif m := _EMPTY_ID.match(ident):
            empties.append(EmptyNode(int(m.group(1)), line))
        elif _WORD_ID.match(ident):
            tokens.append(_parse_word_line(cols, number))
        else:
            raise ConlluParseError(f"non-integer id {ident!r}", number)
    first_line = lines[0][0]
    if not tokens:
        raise ConlluStructureError("sentence has no word lines", index, first_line)
    ids = [t.id for t in tokens]
    if ids != list(range(1, len(ids) + 1)):
        raise ConlluStructureError(f"duplicate or gapped ids {ids}", index, first_line)
    sentence = Sentence(tokens, comments, ranges, empties)
    if validate:
        result = validate_tree(sentence)
        if not result.ok:
            raise ConlluStructureError(f"invalid tree: {', '.join(result.violations)}", index, first_line)
    return sentence


def _blocks(text: str) -> Iterator[list[tuple[int, str]]]:
    block: list[tuple[int, str]] = []
    for number, line in enumerate(text.split("\n"), 1):
        if line.endswith("\r"):
            line = line[:-1]
        if line.strip() == "":
            if block:
                yield block
                block = []
        else:
            block.append((number, line))
    if block:
        yield block


def parse_document(text: str, name: str = "", validate: bool = True, lenient: bool = False) -> Treebank:
    """Read a CoNLL-U document.

    With ``lenient=True`` sentences that fail to parse or validate are
    dropped and counted in a log message instead of raising.
    """
    sentences = []
    dropped = 0
    for index, block in enumerate(_blocks(text)):
        try:
            sentences.append(_parse_block(block, index, validate))
        except ConlluError:
            if not lenient:
                raise
            dropped += 1
    if dropped:
        logger.warning("dropped %d malformed sentence(s) from %s", dropped, name or "<document>")
    return Treebank(sentences, name)


def serialize_sentence(sentence: Sentence) -> str:
    return "\n".join(sentence.text_lines()) + "\n\n"


def serialize_document(tb: Treebank | Iterable[Sentence]) -> str:
    sentences = tb.sentences if isinstance(tb, Treebank) else tb
    return "".join(serialize_sentence(s) for s in sentences)


def read_conllu(path, validate: bool = True, lenient: bool = False) -> Treebank:
    from pathlib import Path

    path = Path(path)
    return parse_document(path.read_text(encoding="utf-8"), name=path.stem, validate=validate, lenient=lenient)


def write_conllu(tb: Treebank | Iterable[Sentence], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize_document(tb))
