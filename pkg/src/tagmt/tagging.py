"""Object tags as visual features: detection backends, top-k selection, and
the separator protocol fusing a tag list with a source sentence.

A tagged source renders as ``<text> ## <label1>,<label2>,...`` with a single
space on each side of ``##`` and no spaces around commas. An empty tag set
renders the bare sentence, so the model never sees a dangling separator.
"""

import hashlib
from dataclasses import dataclass
from importlib import resources

from .errors import (
    InvalidConfidence,
    MalformedLine,
    SeparatorCollision,
    UnknownImage,
    UnknownLabel,
)
from .fileio import atomic_write, read_lines

SEPARATOR = "##"
DEFAULT_TOP_K = 10


@dataclass(frozen=True)
class TagRecord:
    label: str
    confidence: float


@dataclass(frozen=True)
class TagSet:
    """Confidence-ranked, deduplicated tags for one image.

    Tags are ordered by confidence descending, ties by label ascending, and
    labels are unique. select_tags is the canonical constructor.
    """

    tags: tuple[TagRecord, ...] = ()
    image_id: str = ""

    @property
    def labels(self):
        return [t.label for t in self.tags]

    def __len__(self):
        return len(self.tags)


@dataclass(frozen=True)
class TaggedSource:
    text: str
    tags: tuple[str, ...] = ()

    @property
    def rendered(self):
        return render_tagged(self.text, self.tags)


def load_tag_vocabulary(path=None):
    """Load a tag vocabulary, one label per line.

    With no path, the bundled 80 COCO object categories are returned. Labels
    may contain spaces but not commas or the separator token.
    """
    if path is None:
        text = (
            resources.files("tagmt.data").joinpath("coco_categories.txt").read_text("utf-8")
        )
        lines = text.splitlines()
    else:
        lines = read_lines(path)
    labels = []
    seen = set()
    for line_number, line in enumerate(lines, start=1):
        label = line.strip()
        if not label or label.startswith("#"):
            continue
        if "," in label or "\t" in label or SEPARATOR in label:
            raise MalformedLine(
                line_number, f"label {label!r} contains a reserved character"
            )
        if label in seen:
            raise MalformedLine(line_number, f"duplicate label {label!r}")
        seen.add(label)
        labels.append(label)
    return labels


class StubDetector:
    """Deterministic detector stand-in: hashes the image id into 0-12
    (label, confidence) pairs over the configured vocabulary.

    Identical across runs and platforms for a given seed; duplicates are
    possible by design so downstream deduplication gets exercised.
    """

    def __init__(self, vocabulary=None, seed=0):
        self.vocabulary = list(vocabulary) if vocabulary is not None else load_tag_vocabulary()
        self.seed = int(seed)

    def detect(self, image_id):
        digest = hashlib.sha256(f"{self.seed}:{image_id}".encode("utf-8")).digest()
        n = digest[0] % 13
        detections = []
        for i in range(n):
            label_byte = digest[1 + (2 * i) % 30]
            conf_byte = digest[2 + (2 * i) % 30]
            label = self.vocabulary[label_byte % len(self.vocabulary)]
            confidence = conf_byte / 255.0
            detections.append(TagRecord(label=label, confidence=confidence))
        return detections


class FileDetector:
    """Precomputed detections read from a TSV file.

    One line per image: ``<image_id>\\t<label> <conf>[, <label> <conf>]...``.
    Labels must belong to the configured vocabulary; multi-word labels are
    allowed (the confidence is the last whitespace field of each entry).
    """

    def __init__(self, path, vocabulary=None):
        self.vocabulary = list(vocabulary) if vocabulary is not None else load_tag_vocabulary()
        self._by_image = _parse_detections_file(read_lines(path), set(self.vocabulary))

    def detect(self, image_id):
        try:
            return list(self._by_image[image_id])
        except KeyError:
            raise UnknownImage(image_id) from None


def _parse_detections_file(lines, known_labels):
    by_image = {}
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise MalformedLine(
                line_number, f"expected 2 tab-separated fields, got {len(fields)}"
            )
        image_id = fields[0].strip()
        detections = []
        entries = fields[1].strip()
        if entries:
            for entry in entries.split(","):
                parts = entry.strip().rsplit(" ", 1)
                if len(parts) != 2:
                    raise MalformedLine(
                        line_number, f"cannot split {entry.strip()!r} into label and confidence"
                    )
                label, conf_text = parts[0].strip(), parts[1]
                try:
                    confidence = float(conf_text)
                except ValueError:
                    raise MalformedLine(
                        line_number, f"non-numeric confidence {conf_text!r}"
                    ) from None
                if label not in known_labels:
                    raise UnknownLabel(label, line_number)
                detections.append(TagRecord(label=label, confidence=confidence))
        by_image[image_id] = detections
    return by_image


def write_detections_file(by_image, path):
    """Write an image_id -> list[TagRecord] mapping in FileDetector format."""
    with atomic_write(path) as out:
        for image_id, detections in by_image.items():
            entries = ", ".join(f"{d.label} {d.confidence:g}" for d in detections)
            out.write(f"{image_id}\t{entries}\n")


def detect(detector_backend, image_id):
    """Run a backend on one image id. No cap is applied here."""
    detections = detector_backend.detect(image_id)
    for det in detections:
        if not 0.0 <= det.confidence <= 1.0:
            raise InvalidConfidence(det.confidence)
    return detections


def select_tags(detections, k=DEFAULT_TOP_K, image_id=""):
    """Pick the top-k tags from raw detections.

    Duplicate labels keep their maximum confidence; the result is sorted by
    confidence descending with ties broken by label ascending, then truncated
    to k. Fewer than k detections are all kept.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    best = {}
    for det in detections:
        if not 0.0 <= det.confidence <= 1.0:
            raise InvalidConfidence(det.confidence)
        if det.label not in best or det.confidence > best[det.label]:
            best[det.label] = det.confidence
    ranked = sorted(best.items(), key=lambda item: (-item[1], item[0]))
    tags = tuple(TagRecord(label=l, confidence=c) for l, c in ranked[:k])
    return TagSet(tags=tags, image_id=image_id)


def _labels_of(tagset_or_labels):
    if isinstance(tagset_or_labels, TagSet):
        return tagset_or_labels.labels
    return list(tagset_or_labels)


def _has_standalone_separator(text):
    return SEPARATOR in text.split()


def render_tagged(text, tagset):
    """Fuse a sentence with a tag list under the separator protocol.

    ``tagset`` may be a TagSet or a plain list of labels. Raises
    SeparatorCollision if the sentence already contains a standalone ``##``
    token, ValueError if it contains a tab (which would break TSV output).
    """
    if "\t" in text:
        raise ValueError(f"text contains a tab character: {text!r}")
    if _has_standalone_separator(text):
        raise SeparatorCollision(SEPARATOR, text)
    labels = _labels_of(tagset)
    if not labels:
        return text
    return f"{text} {SEPARATOR} " + ",".join(labels)


def parse_tagged(rendered):
    """Split a rendered tagged sentence back into (text, labels).

    The split happens on the last `` ## `` occurrence, so label lists may not
    themselves contain the separator; a sentence without a separator parses
    as (sentence, []).
    """
    idx = rendered.rfind(f" {SEPARATOR} ")
    if idx < 0:
        return rendered, []
    text = rendered[:idx]
    tail = rendered[idx + len(SEPARATOR) + 2 :]
    labels = [label for label in tail.split(",") if label]
    return text, labels


def tag_corpus(corpus, detector_backend, k=DEFAULT_TOP_K):
    """Tag every record of a corpus, preserving order and target texts.

    Records with an empty image_id get an empty tag set. Detection errors are
    re-raised with the failing record index attached.
    """
    out = []
    for index, rec in enumerate(corpus.records):
        if not rec.image_id:
            tagset = TagSet(image_id="")
        else:
            try:
                detections = detect(detector_backend, rec.image_id)
            except UnknownImage as err:
                raise UnknownImage(err.image_id, record_index=index) from None
            tagset = select_tags(detections, k=k, image_id=rec.image_id)
        tagged = TaggedSource(text=rec.source_text, tags=tuple(tagset.labels))
        out.append((tagged, rec.target_text))
    return out


def write_tagged_corpus(pairs, path):
    """Write (TaggedSource, target) pairs as a two-column TSV."""
    with atomic_write(path) as out:
        for tagged, target in pairs:
            out.write(f"{tagged.rendered}\t{target}\n")


def read_tagged_corpus(path):
    """Read a tagged-corpus TSV back into (TaggedSource, target) pairs."""
    pairs = []
    for line_number, line in enumerate(read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise MalformedLine(
                line_number, f"expected 2 tab-separated fields, got {len(fields)}"
            )
        text, labels = parse_tagged(fields[0])
        pairs.append((TaggedSource(text=text, tags=tuple(labels)), fields[1]))
    return pairs


def write_tagsets_file(tagsets, path):
    """Write selected TagSets as ``image_id\\tlabel1,label2,...`` lines."""
    with atomic_write(path) as out:
        for ts in tagsets:
            out.write(f"{ts.image_id}\t" + ",".join(ts.labels) + "\n")


def read_tagsets_file(path):
    """Read a tagsets file back into an image_id -> labels mapping."""
    by_image = {}
    for line_number, line in enumerate(read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise MalformedLine(
                line_number, f"expected 2 tab-separated fields, got {len(fields)}"
            )
        labels = [label for label in fields[1].strip().split(",") if label]
        by_image[fields[0].strip()] = labels
    return by_image
