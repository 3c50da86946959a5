"""Binary needs-normalization token labeler: train on word-aligned corpora,
emit 0/1-per-line label files."""

__version__ = "0.1.0"
