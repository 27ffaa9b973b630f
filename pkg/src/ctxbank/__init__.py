"""Evidence-linked personal context banks for multimodal models, with an evaluation harness."""

__version__ = "0.1.0"
