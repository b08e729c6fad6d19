"""
ribforge: semantics-guided mask-to-image augmentation and multi-label rib
segmentation on procedurally generated chest phantoms.
"""
__version__ = "1.0.0"
