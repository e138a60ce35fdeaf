"""Low-resource dependency parsing toolkit: CoNLL-U handling, subtree-swap
augmentation, BiLSTM taggers and biaffine parsers, evaluation and
experiment grids."""

__version__ = "0.1.0"
