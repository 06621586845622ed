"""Cascaded summarization: select sentences, highlight tokens, fuse.

Modules map onto the stages: :mod:`corpus` and :mod:`oracle` prepare data,
:mod:`selector` scores singletons/pairs and tags tokens, :mod:`strategy`
turns tag probabilities into masks, :mod:`fusion` generates a sentence
from a highlighted instance, :mod:`pipeline` wires them together and
:mod:`rouge` scores the result. :mod:`nncore` is the numeric substrate.
"""

__version__ = "0.1.0"
