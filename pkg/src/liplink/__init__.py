"""liplink: lip-reading phrase classification backend.

Media preprocessing, a from-scratch CNN-LSTM training engine, dataset
management with a synthetic oracle, evaluation metrics, and an
authenticated HTTP inference service.
"""

__version__ = "0.1.0"
