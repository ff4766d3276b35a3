"""Exact A-stability certification and construction of peer two-step methods."""
from .criterion import TestMatrixReport, certify
from .linalg import PsdCertificate, psd_check
from .peer import PeerMethod, WeightPair, assemble_order_sm1, transform_weights
from .scalar import FieldSpec, QuadExt

__version__ = "0.1.0"

__all__ = [
    "FieldSpec",
    "PeerMethod",
    "PsdCertificate",
    "QuadExt",
    "TestMatrixReport",
    "WeightPair",
    "__version__",
    "assemble_order_sm1",
    "certify",
    "psd_check",
    "transform_weights",
]
