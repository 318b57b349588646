"""tagmt: tag-augmented multimodal machine translation at desk scale.

Object tags extracted per image are fused with source sentences under a
``##`` separator protocol, a seq2seq synthesizer turns text-only bitext into
multimodal-format data, and a compact numpy transformer plus BLEU harness
quantify the multimodal-vs-text-only delta.
"""

__version__ = "0.1.0"
