"""
Minimal dense networks and Adam.
"""

from .adam import AdamState, adam_step, net_step, optimizer_for
from .dense import DenseNet, ForwardCache, soft_update

__all__ = [
    "DenseNet", "ForwardCache", "soft_update",
    "AdamState", "adam_step", "net_step", "optimizer_for",
]
