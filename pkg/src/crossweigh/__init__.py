"""Label-mistake estimation and sentence reweighing for NER training data."""

__version__ = "0.1.0"
