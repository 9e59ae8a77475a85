"""
Commands package initialization
Exports all command groups
"""

from covest.commands.experiment_commands import experiment_cli
from covest.commands.catalog_commands import catalog_cli

__all__ = [
    'experiment_cli',
    'catalog_cli'
]
