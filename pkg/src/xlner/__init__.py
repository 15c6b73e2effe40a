"""Synthesize annotated target-language NER corpora by annotation projection,
then train and evaluate a transition-based NER model on them."""

__version__ = "0.1.0"
