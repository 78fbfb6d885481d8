"""Saturating auto-encoders in plain numpy."""
from . import analysis, data, model, nonlin, train
from .data import Dataset
from .errors import (BadMagic, DimensionMismatch, EmptySaturationSet, GridTooCoarse,
                     NonFiniteLoss, NotTwoDimensional, PatchTooLarge, SataeError,
                     ShapeMismatch, TiedModeReprojection, TruncatedFile)
from .model import GradRecord, LossBreakdown, ModelParams
from .nonlin import Nonlinearity, SaturationSet, VariationWeights
from .train import TrainConfig, TrainLog

__version__ = "0.1.0"
