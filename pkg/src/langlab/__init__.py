"""Desk-scale testbed for studying language-specific vs. language-neutral
representations in a small multilingual encoder.

The package trains a toy MLM-pretrained transformer on a synthetic
multilingual corpus, fine-tunes it under four regimes (frozen probe, plain
fine-tuning, gradient reversal, iterative entropy maximisation) and measures
the resulting representation geometry with probing classifiers, k-means +
V-measure and exact t-SNE.
"""

__version__ = "0.1.0"
