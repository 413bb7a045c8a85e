"""qbv: query-by-vocal-imitation sound search.

A contrastively trained dual-encoder retrieval engine plus the classic
CQT + 2D Fourier transform similarity baseline, with coarse- and
fine-grained evaluation protocols, an HTTP search service and a CLI.
"""

__version__ = "0.1.0"
