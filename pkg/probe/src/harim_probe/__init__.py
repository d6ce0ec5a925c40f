"""Token-likelihood probing of encoder-decoder summarization models.

Teacher-forces summaries through a checkpoint twice -- once with the article
as encoder input, once with an empty source -- and writes per-token log
probabilities in the dump format the ``harim`` scorer consumes.
"""

__version__ = "0.1.0"
