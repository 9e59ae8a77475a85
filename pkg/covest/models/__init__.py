"""
Models package initialization
Exports all models for easy importing
"""

from covest.models.matrix_model import SymMatrix, HermMatrix, ToeplitzCol, Mask, EigDecomp
from covest.models.batch_model import SampleBatch, ComplexSampleBatch, BitBatch, DitheredBatch
from covest.models.rng_model import RngStream
from covest.models.covariance_model import (
    ConstCorr, BandedToeplitz, SparseRandom, LowRankPlusRidge, Explicit, ScaledModel,
    SparsityClassParams, Fixed, BickelRule, ToeplitzRule
)
from covest.models.mimo_model import UlaConfig, AsfSpec, Dictionary, NnlsProblem, NnlsResult, PilotBatch
from covest.models.experiment_model import GridPoint, ExperimentConfig, ResultRow, PlotSpec

__all__ = [
    'SymMatrix',
    'HermMatrix',
    'ToeplitzCol',
    'Mask',
    'EigDecomp',
    'SampleBatch',
    'ComplexSampleBatch',
    'BitBatch',
    'DitheredBatch',
    'RngStream',
    'ConstCorr',
    'BandedToeplitz',
    'SparseRandom',
    'LowRankPlusRidge',
    'Explicit',
    'ScaledModel',
    'SparsityClassParams',
    'Fixed',
    'BickelRule',
    'ToeplitzRule',
    'UlaConfig',
    'AsfSpec',
    'Dictionary',
    'NnlsProblem',
    'NnlsResult',
    'PilotBatch',
    'GridPoint',
    'ExperimentConfig',
    'ResultRow',
    'PlotSpec'
]
