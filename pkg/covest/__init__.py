"""
covest Package
Structured covariance estimation toolkit and Monte-Carlo experiment harness
"""

import click


def create_cli(config_name=None):
    """Command-line factory pattern"""
    from config import get_config
    settings = get_config(config_name)

    @click.group(help='Structured covariance estimation experiments')
    @click.version_option(__version__, prog_name='covest')
    @click.pass_context
    def cli(ctx):
        settings.init_logging()
        ctx.obj = settings

    # Register command groups
    from covest.commands.experiment_commands import experiment_cli
    from covest.commands.catalog_commands import catalog_cli

    for group in (experiment_cli, catalog_cli):
        for command in group.commands.values():
            cli.add_command(command)

    return cli

__version__ = "1.0.0"
__author__ = "covest Development Team"
