"""Phonetic footprint analysis toolkit.

Featurizes speech audio into dual-channel log-Mel tensors, runs the
recurrent-convolutional phone recognizer, decodes CTC posteriors with
confidences and hidden-state taps, and computes phonetic footprints and
group statistics from the decoded output.
"""

__version__ = "0.1.0"

from .backend import active_backend, have_native

__all__ = ["active_backend", "have_native", "__version__"]
