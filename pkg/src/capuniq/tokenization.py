"""Shared caption tokenization.

Every component that turns caption text into tokens (the rule-based tuple
extractor, the unigram model, external token-probability producers) must
agree on tokenization, otherwise per-token probability tables cannot be
aligned with candidate captions.  The contract is deliberately minimal:
lowercase, replace every character outside [a-z0-9] with a space, split on
whitespace.  Hyphenated words therefore split into their parts and
non-ASCII characters are dropped.
"""

import re

_NON_ALNUM = re.compile(r"[^a-z0-9]+")

EOS = "</s>"


def tokenize(text: str) -> list[str]:
    """Split caption text into tokens per the shared contract."""
    return _NON_ALNUM.sub(" ", text.lower()).split()
