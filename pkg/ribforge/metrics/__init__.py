from .evaluation import binarize, dice, evaluate_dataset, iou

__all__ = ["binarize", "dice", "evaluate_dataset", "iou"]
