"""Whitespace-level tokenization and a deterministic shared vocabulary.

Tokenization splits on whitespace, then splits any comma-joined chunk into
(label, comma) token pairs so the tag-list protocol tokens stay atomic:
``"a man ## person,horse"`` becomes ``a man ## person , horse``.
Detokenization re-tightens commas, which makes it an exact inverse on
protocol-shaped strings.
"""

import re
from dataclasses import dataclass, field

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
RESERVED_TOKENS = (PAD, BOS, EOS, UNK, "##", "<sep>", ",")

_COMMA_TIGHTEN = re.compile(r"\s*,\s*")


def tokenize(text):
    tokens = []
    for chunk in text.split():
        if "," not in chunk:
            tokens.append(chunk)
            continue
        parts = chunk.split(",")
        for i, part in enumerate(parts):
            if part:
                tokens.append(part)
            if i < len(parts) - 1:
                tokens.append(",")
    return tokens


def detokenize(tokens):
    return _COMMA_TIGHTEN.sub(",", " ".join(tokens))


@dataclass(frozen=True)
class Vocab:
    """Token table with fixed reserved tokens; pad is always id 0."""

    tokens: tuple[str, ...]
    token_to_id: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(
            self, "token_to_id", {tok: i for i, tok in enumerate(self.tokens)}
        )
        if len(self.token_to_id) != len(self.tokens):
            raise ValueError("vocabulary contains duplicate tokens")
        for tok in RESERVED_TOKENS:
            if tok not in self.token_to_id:
                raise ValueError(f"reserved token {tok!r} missing from vocabulary")
        if self.token_to_id[PAD] != 0:
            raise ValueError("pad token must have id 0")

    def __len__(self):
        return len(self.tokens)

    @property
    def pad_id(self):
        return 0

    @property
    def bos_id(self):
        return self.token_to_id[BOS]

    @property
    def eos_id(self):
        return self.token_to_id[EOS]

    @property
    def unk_id(self):
        return self.token_to_id[UNK]

    def encode_tokens(self, tokens):
        unk = self.unk_id
        return [self.token_to_id.get(tok, unk) for tok in tokens]

    def encode(self, text):
        return self.encode_tokens(tokenize(text))

    def decode_tokens(self, ids):
        return [self.tokens[i] for i in ids]

    def decode(self, ids):
        return detokenize(self.decode_tokens(ids))


def build_vocab(token_streams, min_count=1, reserved=RESERVED_TOKENS):
    """Count tokens across streams and keep those with frequency >= min_count.

    Ordering is deterministic: reserved tokens first (in their given order),
    then by frequency descending, token ascending.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    reserved = tuple(reserved)
    for tok in RESERVED_TOKENS:
        if tok not in reserved:
            raise ValueError(f"reserved set must include {tok!r}")
    counts = {}
    for stream in token_streams:
        for tok in stream:
            counts[tok] = counts.get(tok, 0) + 1
    reserved_set = set(reserved)
    kept = [
        tok
        for tok, n in sorted(counts.items(), key=lambda item: (-item[1], item[0]))
        if n >= min_count and tok not in reserved_set
    ]
    return Vocab(tokens=reserved + tuple(kept))


def vocab_from_pairs(pairs, min_count=1):
    """Build a shared vocabulary over both sides of (source, target) pairs."""
    streams = []
    for src, tgt in pairs:
        streams.append(tokenize(src))
        streams.append(tokenize(tgt))
    return build_vocab(streams, min_count=min_count)
