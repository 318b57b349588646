"""Parallel caption corpora: parsing, validation, splitting and statistics.

Two input layouts are supported:

* Visual-Genome style TSV, 7 tab-separated fields per line:
  ``image_id  x  y  width  height  source_text  target_text``
* plain bitext: two aligned text files, one sentence per line.

Parsing preserves record order exactly; order is the alignment identity.
"""

from dataclasses import dataclass, field

from .errors import EmptyCorpus, EmptyText, LengthMismatch, MalformedLine
from .fileio import atomic_write, read_lines

SPLIT_LABELS = ("train", "dtest", "etest", "ctest", "unspecified")


@dataclass(frozen=True)
class Region:
    """Rectangular image region in pixels."""

    x: int
    y: int
    width: int
    height: int


@dataclass(frozen=True)
class ParallelRecord:
    """One aligned caption pair, optionally anchored to an image region."""

    source_text: str
    target_text: str
    image_id: str = ""
    region: Region | None = None


@dataclass
class Corpus:
    records: list[ParallelRecord] = field(default_factory=list)
    split_label: str = "unspecified"

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass(frozen=True)
class CorpusStats:
    sentence_count: int
    source_token_count: int
    target_token_count: int


def _check_split(split_label):
    if split_label not in SPLIT_LABELS:
        raise ValueError(
            f"unknown split label {split_label!r}; expected one of {SPLIT_LABELS}"
        )


def parse_vg_corpus(lines, split_label="unspecified"):
    """Parse VG-style TSV lines into a Corpus.

    ``lines`` is any iterable of strings (an open file works). Empty lines are
    skipped; line numbers in errors are 1-based over all lines.

    Raises MalformedLine on wrong field count or bad geometry, EmptyText when
    either text field is blank after trimming.
    """
    _check_split(split_label)
    records = []
    for line_number, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 7:
            raise MalformedLine(
                line_number, f"expected 7 tab-separated fields, got {len(fields)}"
            )
        image_id = fields[0].strip()
        try:
            x, y, width, height = (int(v) for v in fields[1:5])
        except ValueError:
            raise MalformedLine(
                line_number, f"non-integer region geometry {fields[1:5]!r}"
            ) from None
        if x < 0 or y < 0 or width <= 0 or height <= 0:
            raise MalformedLine(
                line_number,
                f"region must have nonnegative origin and positive size, "
                f"got ({x}, {y}, {width}, {height})",
            )
        source_text = fields[5].strip()
        target_text = fields[6].strip()
        if not source_text:
            raise EmptyText(line_number, "source")
        if not target_text:
            raise EmptyText(line_number, "target")
        records.append(
            ParallelRecord(
                source_text=source_text,
                target_text=target_text,
                image_id=image_id,
                region=Region(x, y, width, height),
            )
        )
    return Corpus(records=records, split_label=split_label)


def serialize_vg_corpus(corpus):
    """Render a corpus back to VG TSV lines (inverse of parse_vg_corpus).

    Every record must carry an image_id and a region; bitext corpora are
    written with write_bitext instead.
    """
    lines = []
    for i, rec in enumerate(corpus.records):
        if rec.region is None or not rec.image_id:
            raise ValueError(
                f"record {i} lacks image_id or region; not representable as VG TSV"
            )
        r = rec.region
        lines.append(
            "\t".join(
                (
                    rec.image_id,
                    str(r.x),
                    str(r.y),
                    str(r.width),
                    str(r.height),
                    rec.source_text,
                    rec.target_text,
                )
            )
        )
    return lines


def parse_bitext(source_lines, target_lines, split_label="unspecified"):
    """Pair up two aligned streams of sentences into a text-only Corpus.

    Blank lines are dropped on each side before pairing; a count mismatch
    after that raises LengthMismatch.
    """
    _check_split(split_label)
    src = [s.strip() for s in source_lines]
    tgt = [t.strip() for t in target_lines]
    src = [s for s in src if s]
    tgt = [t for t in tgt if t]
    if len(src) != len(tgt):
        raise LengthMismatch(len(src), len(tgt))
    records = [
        ParallelRecord(source_text=s, target_text=t) for s, t in zip(src, tgt)
    ]
    return Corpus(records=records, split_label=split_label)


def corpus_stats(corpus):
    """Sentence and whitespace-token counts for both sides of a corpus."""
    src_tokens = 0
    tgt_tokens = 0
    for rec in corpus.records:
        src_tokens += len(rec.source_text.split())
        tgt_tokens += len(rec.target_text.split())
    return CorpusStats(
        sentence_count=len(corpus.records),
        source_token_count=src_tokens,
        target_token_count=tgt_tokens,
    )


def load_vg_corpus(path, split_label="unspecified"):
    return parse_vg_corpus(read_lines(path), split_label)


def load_bitext(source_path, target_path, split_label="unspecified"):
    return parse_bitext(
        read_lines(source_path), read_lines(target_path), split_label
    )


def write_vg_corpus(corpus, path):
    with atomic_write(path) as out:
        for line in serialize_vg_corpus(corpus):
            out.write(line + "\n")


def write_bitext(corpus, source_path, target_path):
    with atomic_write(source_path) as out:
        for rec in corpus.records:
            out.write(rec.source_text + "\n")
    with atomic_write(target_path) as out:
        for rec in corpus.records:
            out.write(rec.target_text + "\n")


def read_pairs_tsv(path):
    """Read a two-column (source, target) TSV into a list of string pairs."""
    pairs = []
    for line_number, line in enumerate(read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise MalformedLine(
                line_number, f"expected 2 tab-separated fields, got {len(fields)}"
            )
        pairs.append((fields[0], fields[1]))
    return pairs


def write_pairs_tsv(pairs, path):
    with atomic_write(path) as out:
        for left, right in pairs:
            out.write(f"{left}\t{right}\n")


def require_nonempty(corpus):
    if not corpus.records:
        raise EmptyCorpus()
    return corpus
